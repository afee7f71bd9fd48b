//! Grounding of typed STRIPS schemas into a propositional task, plus the
//! transition semantics shared by search, validation and the heuristic.

mod plan;
mod state;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::pddl::{AtomTemplate, DomainDef, GroundAtom, ProblemDef, Term};

pub use plan::{parse_plan, Plan, PlanParseError};
pub use state::{FactId, State};

pub type ActionId = u32;

pub const DEFAULT_GROUNDING_CAP: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroundError {
    #[error("grounding produced more than {cap} actions")]
    GroundingExplosion { cap: usize },
    #[error("problem `{problem}` is for domain `{found}`, not `{expected}`")]
    DomainMismatch {
        problem: String,
        expected: String,
        found: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("action {action} is not applicable")]
pub struct NotApplicable {
    pub action: ActionId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundAction {
    pub schema: usize,
    pub name: String,
    pub args: Vec<String>,
    pub pre: Vec<FactId>,
    pub add: Vec<FactId>,
    pub del: Vec<FactId>,
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.name)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

/// Grounded STRIPS task. Immutable after construction.
///
/// Static facts (predicates no schema adds or deletes) are compiled away:
/// they never appear in the fact table, states, or action preconditions.
#[derive(Debug, Clone)]
pub struct GroundTask {
    pub name: String,
    pub facts: Vec<GroundAtom>,
    pub actions: Vec<GroundAction>,
    pub init: State,
    pub goal: Vec<FactId>,
    /// Action-schema names in domain declaration order.
    pub schemas: Vec<String>,
    /// Some goal fact is unreachable even under delete relaxation.
    pub trivially_unsolvable: bool,
    achievers: Vec<Vec<ActionId>>,
    action_index: HashMap<(String, Vec<String>), ActionId>,
}

struct Candidate {
    schema: usize,
    args: Vec<String>,
    pre: Vec<GroundAtom>,
    add: Vec<GroundAtom>,
    del: Vec<GroundAtom>,
}

pub fn ground(dom: &DomainDef, prob: &ProblemDef) -> Result<GroundTask, GroundError> {
    ground_with_cap(dom, prob, DEFAULT_GROUNDING_CAP)
}

pub fn ground_with_cap(
    dom: &DomainDef,
    prob: &ProblemDef,
    cap: usize,
) -> Result<GroundTask, GroundError> {
    if prob.domain_name != dom.name {
        return Err(GroundError::DomainMismatch {
            problem: prob.name.clone(),
            expected: dom.name.clone(),
            found: prob.domain_name.clone(),
        });
    }

    let fluent: HashSet<&str> = dom
        .actions
        .iter()
        .flat_map(|a| a.add.iter().chain(&a.del))
        .map(|t| t.predicate.as_str())
        .collect();
    let init_atoms: HashSet<&GroundAtom> = prob.init.iter().collect();

    let mut objects: Vec<(&str, &str)> = prob
        .objects
        .iter()
        .chain(&dom.constants)
        .map(|o| (o.name.as_str(), o.ty.as_str()))
        .collect();
    objects.sort();

    let mut candidates = Vec::new();
    for (schema_idx, schema) in dom.actions.iter().enumerate() {
        let domains: Vec<Vec<&str>> = schema
            .params
            .iter()
            .map(|p| {
                objects
                    .iter()
                    .filter(|(_, ty)| dom.is_subtype(ty, &p.ty))
                    .map(|(n, _)| *n)
                    .collect()
            })
            .collect();
        let param_pos: HashMap<&str, usize> = schema
            .params
            .iter()
            .enumerate()
            .map(|(i, p)| (p.name.as_str(), i))
            .collect();
        // Static preconditions are checked as soon as their last variable is bound.
        let mut static_at: Vec<Vec<&AtomTemplate>> = vec![Vec::new(); schema.params.len() + 1];
        for t in schema
            .pre
            .iter()
            .filter(|t| !fluent.contains(t.predicate.as_str()))
        {
            let last = t
                .args
                .iter()
                .filter_map(|a| match a {
                    Term::Var(v) => Some(param_pos[v.as_str()] + 1),
                    Term::Const(_) => None,
                })
                .max()
                .unwrap_or(0);
            static_at[last].push(t);
        }
        let bind = |binding: &[&str], t: &AtomTemplate| GroundAtom {
            predicate: t.predicate.clone(),
            args: t
                .args
                .iter()
                .map(|a| match a {
                    Term::Var(v) => binding[param_pos[v.as_str()]].to_string(),
                    Term::Const(c) => c.clone(),
                })
                .collect(),
        };
        if !static_at[0]
            .iter()
            .all(|t| init_atoms.contains(&bind(&[], t)))
        {
            continue;
        }

        let mut binding: Vec<&str> = Vec::with_capacity(schema.params.len());
        let mut cursor = vec![0usize; schema.params.len()];
        let n = schema.params.len();
        let mut depth = 0;
        loop {
            if depth == n {
                let pre = schema
                    .pre
                    .iter()
                    .filter(|t| fluent.contains(t.predicate.as_str()))
                    .map(|t| bind(&binding, t))
                    .collect();
                candidates.push(Candidate {
                    schema: schema_idx,
                    args: binding.iter().map(|s| s.to_string()).collect(),
                    pre,
                    add: schema.add.iter().map(|t| bind(&binding, t)).collect(),
                    del: schema.del.iter().map(|t| bind(&binding, t)).collect(),
                });
                if candidates.len() > cap {
                    return Err(GroundError::GroundingExplosion { cap });
                }
                if n == 0 {
                    break;
                }
                depth -= 1;
                binding.pop();
                continue;
            }
            if cursor[depth] >= domains[depth].len() {
                cursor[depth] = 0;
                if depth == 0 {
                    break;
                }
                depth -= 1;
                binding.pop();
                continue;
            }
            let obj = domains[depth][cursor[depth]];
            cursor[depth] += 1;
            binding.push(obj);
            if static_at[depth + 1]
                .iter()
                .all(|t| init_atoms.contains(&bind(&binding, t)))
            {
                depth += 1;
            } else {
                binding.pop();
            }
        }
    }

    // Delete-relaxed reachability over fluent atoms.
    let mut intern: HashMap<GroundAtom, usize> = HashMap::new();
    let id_of = |a: &GroundAtom, intern: &mut HashMap<GroundAtom, usize>| -> usize {
        let next = intern.len();
        *intern.entry(a.clone()).or_insert(next)
    };
    let cand_pre: Vec<Vec<usize>> = candidates
        .iter()
        .map(|c| c.pre.iter().map(|a| id_of(a, &mut intern)).collect())
        .collect();
    let cand_add: Vec<Vec<usize>> = candidates
        .iter()
        .map(|c| c.add.iter().map(|a| id_of(a, &mut intern)).collect())
        .collect();
    let init_ids: Vec<usize> = prob
        .init
        .iter()
        .filter(|a| fluent.contains(a.predicate.as_str()))
        .map(|a| id_of(a, &mut intern))
        .collect();

    let mut reached = vec![false; intern.len()];
    let mut waiting: Vec<usize> = cand_pre.iter().map(Vec::len).collect();
    let mut consumers: Vec<Vec<usize>> = vec![Vec::new(); intern.len()];
    for (i, pre) in cand_pre.iter().enumerate() {
        for &f in pre {
            consumers[f].push(i);
        }
    }
    let mut queue: Vec<usize> = Vec::new();
    for &f in &init_ids {
        if !reached[f] {
            reached[f] = true;
            queue.push(f);
        }
    }
    let mut usable = vec![false; candidates.len()];
    let mut ready: Vec<usize> = (0..candidates.len()).filter(|&i| waiting[i] == 0).collect();
    loop {
        if let Some(a) = ready.pop() {
            usable[a] = true;
            for &f in &cand_add[a] {
                if !reached[f] {
                    reached[f] = true;
                    queue.push(f);
                }
            }
        } else if let Some(f) = queue.pop() {
            for &a in &consumers[f] {
                waiting[a] -= 1;
                if waiting[a] == 0 {
                    ready.push(a);
                }
            }
        } else {
            break;
        }
    }

    let mut atom_of: Vec<Option<&GroundAtom>> = vec![None; intern.len()];
    for (atom, &i) in &intern {
        atom_of[i] = Some(atom);
    }
    let mut universe: BTreeSet<GroundAtom> = (0..intern.len())
        .filter(|&i| reached[i])
        .map(|i| atom_of[i].expect("interned").clone())
        .collect();

    let mut trivially_unsolvable = false;
    let mut goal_atoms = Vec::new();
    for g in &prob.goal {
        if !fluent.contains(g.predicate.as_str()) {
            if init_atoms.contains(g) {
                continue;
            }
            // Kept as a fact no action adds, so no state satisfies the goal.
            trivially_unsolvable = true;
        }
        if !universe.contains(g) {
            trivially_unsolvable = true;
            universe.insert(g.clone());
        }
        goal_atoms.push(g);
    }

    let facts: Vec<GroundAtom> = universe.into_iter().collect();
    let fact_id: HashMap<&GroundAtom, FactId> = facts
        .iter()
        .enumerate()
        .map(|(i, a)| (a, i as FactId))
        .collect();

    let mut kept: Vec<(&str, &Candidate)> = candidates
        .iter()
        .zip(&usable)
        .filter(|(_, &u)| u)
        .map(|(c, _)| (dom.actions[c.schema].name.as_str(), c))
        .collect();
    kept.sort_by(|a, b| (a.0, &a.1.args).cmp(&(b.0, &b.1.args)));

    let ids = |atoms: &[GroundAtom]| -> Vec<FactId> {
        let mut v: Vec<FactId> = atoms
            .iter()
            .filter_map(|a| fact_id.get(a).copied())
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let actions: Vec<GroundAction> = kept
        .into_iter()
        .map(|(name, c)| {
            let add = ids(&c.add);
            let del: Vec<FactId> = ids(&c.del)
                .into_iter()
                .filter(|f| add.binary_search(f).is_err())
                .collect();
            GroundAction {
                schema: c.schema,
                name: name.to_string(),
                args: c.args.clone(),
                pre: ids(&c.pre),
                add,
                del,
            }
        })
        .collect();

    let mut goal: Vec<FactId> = goal_atoms.iter().map(|g| fact_id[g]).collect();
    goal.sort_unstable();
    goal.dedup();
    let init = State::from_facts(
        facts.len(),
        init_ids
            .iter()
            .map(|&i| fact_id[atom_of[i].expect("interned")]),
    );

    Ok(GroundTask::from_parts(
        prob.name.clone(),
        facts,
        actions,
        init,
        goal,
        dom.actions.iter().map(|a| a.name.clone()).collect(),
        trivially_unsolvable,
    ))
}

impl GroundTask {
    /// Assembles a task from already-grounded parts. Action lists are
    /// normalized (sorted, deduplicated, `del` minus `add`).
    pub fn from_parts(
        name: String,
        facts: Vec<GroundAtom>,
        mut actions: Vec<GroundAction>,
        init: State,
        goal: Vec<FactId>,
        schemas: Vec<String>,
        trivially_unsolvable: bool,
    ) -> Self {
        for a in &mut actions {
            for v in [&mut a.pre, &mut a.add, &mut a.del] {
                v.sort_unstable();
                v.dedup();
            }
            let add = a.add.clone();
            a.del.retain(|f| add.binary_search(f).is_err());
        }
        let mut achievers = vec![Vec::new(); facts.len()];
        for (i, a) in actions.iter().enumerate() {
            for &f in &a.add {
                achievers[f as usize].push(i as ActionId);
            }
        }
        let action_index = actions
            .iter()
            .enumerate()
            .map(|(i, a)| ((a.name.clone(), a.args.clone()), i as ActionId))
            .collect();
        GroundTask {
            name,
            facts,
            actions,
            init,
            goal,
            schemas,
            trivially_unsolvable,
            achievers,
            action_index,
        }
    }

    pub fn num_facts(&self) -> usize {
        self.facts.len()
    }

    pub fn action(&self, id: ActionId) -> &GroundAction {
        &self.actions[id as usize]
    }

    /// Actions adding `fact`, ascending by id.
    pub fn achievers(&self, fact: FactId) -> &[ActionId] {
        &self.achievers[fact as usize]
    }

    pub fn find_action(&self, name: &str, args: &[String]) -> Option<ActionId> {
        self.action_index
            .get(&(name.to_string(), args.to_vec()))
            .copied()
    }

    pub fn is_goal(&self, state: &State) -> bool {
        state.contains_all(&self.goal)
    }

    pub fn unsatisfied_goals(&self, state: &State) -> usize {
        self.goal.iter().filter(|&&g| !state.contains(g)).count()
    }

    pub fn applicable(&self, state: &State) -> Vec<ActionId> {
        (0..self.actions.len() as ActionId)
            .filter(|&a| state.contains_all(&self.actions[a as usize].pre))
            .collect()
    }

    pub fn is_applicable(&self, state: &State, action: ActionId) -> bool {
        state.contains_all(&self.action(action).pre)
    }

    pub fn apply(&self, state: &State, action: ActionId) -> Result<State, NotApplicable> {
        if !self.is_applicable(state, action) {
            return Err(NotApplicable { action });
        }
        Ok(self.apply_unchecked(state, action))
    }

    pub(crate) fn apply_unchecked(&self, state: &State, action: ActionId) -> State {
        let a = self.action(action);
        let mut next = state.clone();
        for &f in &a.del {
            next.remove(f);
        }
        for &f in &a.add {
            next.insert(f);
        }
        next
    }

    /// Simulates `plan` from `start`; never fails, reports the first
    /// inapplicable step instead.
    pub fn validate(&self, start: &State, plan: &Plan) -> Validation {
        let mut state = start.clone();
        for (i, &step) in plan.steps.iter().enumerate() {
            if (step as usize) >= self.actions.len() || !self.is_applicable(&state, step) {
                return Validation {
                    valid: false,
                    end_state: state,
                    length: plan.len(),
                    failed_step: Some(i),
                };
            }
            state = self.apply_unchecked(&state, step);
        }
        Validation {
            valid: self.is_goal(&state),
            end_state: state,
            length: plan.len(),
            failed_step: None,
        }
    }

    /// The sequence of states visited by `plan` from `start`, including both
    /// endpoints. Stops early at the first inapplicable step.
    pub fn trace(&self, start: &State, plan: &Plan) -> Vec<State> {
        let mut states = vec![start.clone()];
        for &step in &plan.steps {
            let cur = states.last().expect("nonempty");
            match self.apply(cur, step) {
                Ok(next) => states.push(next),
                Err(_) => break,
            }
        }
        states
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Validation {
    pub valid: bool,
    pub end_state: State,
    pub length: usize,
    pub failed_step: Option<usize>,
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::pddl::{parse_domain, parse_problem};

    pub(crate) fn fixture_task(domain: &str, problem: &str) -> GroundTask {
        let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/");
        let d = std::fs::read_to_string(format!("{dir}{domain}")).unwrap();
        let p = std::fs::read_to_string(format!("{dir}{problem}")).unwrap();
        let dom = parse_domain(&d).unwrap();
        let prob = parse_problem(&p, &dom).unwrap();
        ground(&dom, &prob).unwrap()
    }

    #[test]
    fn two_parameters_three_objects_nine_actions() {
        let dom = parse_domain(
            "(define (domain t) (:predicates (p ?x) (q ?x ?y))
               (:action a :parameters (?x ?y) :precondition () :effect (q ?x ?y)))",
        )
        .unwrap();
        let prob = parse_problem(
            "(define (problem t1) (:domain t) (:objects o1 o2 o3) (:init) (:goal (and)))",
            &dom,
        )
        .unwrap();
        let task = ground(&dom, &prob).unwrap();
        assert_eq!(task.actions.len(), 9);
        assert_eq!(task.facts.len(), 9);
    }

    #[test]
    fn unreachable_goal_flags_task() {
        let task = fixture_task("delivery.pddl", "delivery-unsolvable.pddl");
        assert!(task.trivially_unsolvable);
        let ok = fixture_task("delivery.pddl", "delivery-p01.pddl");
        assert!(!ok.trivially_unsolvable);
    }

    #[test]
    fn false_static_goal_is_never_satisfied() {
        let dom = parse_domain(
            "(define (domain t) (:predicates (s ?x) (q ?x))
               (:action a :parameters (?x) :precondition () :effect (q ?x)))",
        )
        .unwrap();
        let prob = parse_problem(
            "(define (problem t1) (:domain t) (:objects o1) (:init) (:goal (and (s o1))))",
            &dom,
        )
        .unwrap();
        let task = ground(&dom, &prob).unwrap();
        assert!(task.trivially_unsolvable);
        assert!(!task.is_goal(&task.init));
        assert!(task
            .applicable(&task.init)
            .iter()
            .all(|&a| !task.is_goal(&task.apply(&task.init, a).unwrap())));
    }

    #[test]
    fn grounding_cap_is_enforced() {
        let dom = parse_domain(
            "(define (domain t) (:predicates (q ?x ?y))
               (:action a :parameters (?x ?y) :precondition () :effect (q ?x ?y)))",
        )
        .unwrap();
        let prob = parse_problem(
            "(define (problem t1) (:domain t) (:objects o1 o2 o3) (:init) (:goal (and)))",
            &dom,
        )
        .unwrap();
        assert_eq!(
            ground_with_cap(&dom, &prob, 5).unwrap_err(),
            GroundError::GroundingExplosion { cap: 5 }
        );
    }

    #[test]
    fn ids_follow_lexicographic_order() {
        let task = fixture_task("delivery.pddl", "delivery-p01.pddl");
        let keys: Vec<_> = task.actions.iter().map(|a| (&a.name, &a.args)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        let mut facts = task.facts.clone();
        facts.sort();
        assert_eq!(facts, task.facts);
        assert_eq!(task.schemas, ["move", "pick", "drop"]);
        // Roads are static and compiled away.
        assert!(task.facts.iter().all(|f| f.predicate != "road"));
    }

    #[test]
    fn apply_semantics() {
        let facts = vec![GroundAtom::new("p", &[]), GroundAtom::new("q", &[])];
        let actions = vec![
            GroundAction {
                schema: 0,
                name: "noop".into(),
                args: vec![],
                pre: vec![],
                add: vec![],
                del: vec![],
            },
            GroundAction {
                schema: 0,
                name: "swap".into(),
                args: vec![],
                pre: vec![0],
                add: vec![1],
                del: vec![0],
            },
        ];
        let task = GroundTask::from_parts(
            "t".into(),
            facts,
            actions,
            State::from_facts(2, [0]),
            vec![1],
            vec!["noop".into()],
            false,
        );
        let s = task.init.clone();
        assert_eq!(task.apply(&s, 0).unwrap(), s);
        assert_eq!(task.apply(&s, 1).unwrap(), State::from_facts(2, [1]));
        assert_eq!(
            task.apply(&State::empty(2), 1).unwrap_err(),
            NotApplicable { action: 1 }
        );
        assert_eq!(task.applicable(&State::empty(2)), vec![0]);
        assert_eq!(task.applicable(&State::from_facts(2, [0, 1])), vec![0, 1]);
    }

    #[test]
    fn validate_empty_plans() {
        let task = fixture_task("chain.pddl", "chain-solved.pddl");
        let v = task.validate(&task.init, &Plan::default());
        assert!(v.valid);
        assert_eq!(v.length, 0);
        let task = fixture_task("chain.pddl", "chain-p01.pddl");
        let v = task.validate(&task.init, &Plan::default());
        assert!(!v.valid);
        assert_eq!(v.failed_step, None);
        let bad = Plan { steps: vec![1] };
        assert_eq!(task.validate(&task.init, &bad).failed_step, Some(0));
        let good = Plan { steps: vec![0, 1] };
        assert!(task.validate(&task.init, &good).valid);
    }
}
