use std::collections::BTreeSet;

use super::{DagVertex, HeuristicReport, PlanDAG, VertexKind, GOAL_VERTEX, STATE_VERTEX};
use crate::ground::{ActionId, FactId, GroundTask, State};

/// Layer value for facts and actions the graph never reaches.
pub const UNREACHED: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelaxedPlanningGraph {
    pub fact_layer: Vec<u32>,
    pub action_layer: Vec<u32>,
    /// Index of the fact layer at which all goals hold, or of the last
    /// layer built when a fixpoint stops short of the goal.
    pub depth: u32,
    pub goal_reached: bool,
}

/// FF heuristic over a fixed task. Owns its scratch buffers, so use one
/// instance per thread.
#[derive(Debug, Clone)]
pub struct FfHeuristic<'t> {
    task: &'t GroundTask,
    consumers: Vec<Vec<ActionId>>,
    no_pre: Vec<ActionId>,
    remaining: Vec<u32>,
}

impl<'t> FfHeuristic<'t> {
    pub fn new(task: &'t GroundTask) -> Self {
        let mut consumers = vec![Vec::new(); task.num_facts()];
        let mut no_pre = Vec::new();
        for (i, a) in task.actions.iter().enumerate() {
            if a.pre.is_empty() {
                no_pre.push(i as ActionId);
            }
            for &p in &a.pre {
                consumers[p as usize].push(i as ActionId);
            }
        }
        FfHeuristic {
            task,
            consumers,
            no_pre,
            remaining: vec![0; task.actions.len()],
        }
    }

    pub fn task(&self) -> &'t GroundTask {
        self.task
    }

    pub fn build_rpg(&mut self, state: &State) -> RelaxedPlanningGraph {
        let task = self.task;
        let mut fact_layer = vec![UNREACHED; task.num_facts()];
        let mut action_layer = vec![UNREACHED; task.actions.len()];
        for (r, a) in self.remaining.iter_mut().zip(&task.actions) {
            *r = a.pre.len() as u32;
        }
        let mut new_facts: Vec<FactId> = state.iter().collect();
        for &f in &new_facts {
            fact_layer[f as usize] = 0;
        }
        let mut ready: Vec<ActionId> = self.no_pre.clone();
        let mut open_goals = task
            .goal
            .iter()
            .filter(|&&g| fact_layer[g as usize] == UNREACHED)
            .count();
        let mut layer = 0u32;
        loop {
            if open_goals == 0 {
                return RelaxedPlanningGraph {
                    fact_layer,
                    action_layer,
                    depth: layer,
                    goal_reached: true,
                };
            }
            for &f in &new_facts {
                for &a in &self.consumers[f as usize] {
                    let r = &mut self.remaining[a as usize];
                    *r -= 1;
                    if *r == 0 {
                        ready.push(a);
                    }
                }
            }
            let mut next = Vec::new();
            for &a in &ready {
                action_layer[a as usize] = layer;
                for &f in &task.action(a).add {
                    if fact_layer[f as usize] == UNREACHED {
                        fact_layer[f as usize] = layer + 1;
                        next.push(f);
                    }
                }
            }
            ready.clear();
            if next.is_empty() {
                return RelaxedPlanningGraph {
                    fact_layer,
                    action_layer,
                    depth: layer,
                    goal_reached: false,
                };
            }
            open_goals = task
                .goal
                .iter()
                .filter(|&&g| fact_layer[g as usize] == UNREACHED)
                .count();
            new_facts = next;
            layer += 1;
        }
    }

    /// Backward relaxed-plan extraction. Each open fact at layer `l > 0`
    /// gets the lowest-id achiever whose action layer is `l - 1`, unless an
    /// action already chosen for layer `l` adds it.
    pub fn extract_relaxed_plan(
        &self,
        state: &State,
        rpg: &RelaxedPlanningGraph,
    ) -> HeuristicReport {
        if !rpg.goal_reached {
            return HeuristicReport::dead_end();
        }
        let task = self.task;
        let depth = rpg.depth as usize;
        let fl = |f: FactId| rpg.fact_layer[f as usize];
        let mut needed: Vec<BTreeSet<FactId>> = vec![BTreeSet::new(); depth + 1];
        for &g in &task.goal {
            needed[fl(g) as usize].insert(g);
        }
        let mut achiever: Vec<Option<ActionId>> = vec![None; task.num_facts()];
        let mut chosen: Vec<ActionId> = Vec::new();
        for layer in (1..=depth).rev() {
            let facts = std::mem::take(&mut needed[layer]);
            for f in facts {
                if achiever[f as usize].is_some() {
                    continue;
                }
                let a = *task
                    .achievers(f)
                    .iter()
                    .find(|&&a| rpg.action_layer[a as usize] == layer as u32 - 1)
                    .expect("a fact at layer l has an achiever at layer l-1");
                chosen.push(a);
                let act = task.action(a);
                for &q in &act.add {
                    if fl(q) == layer as u32 && achiever[q as usize].is_none() {
                        achiever[q as usize] = Some(a);
                    }
                }
                for &p in &act.pre {
                    if fl(p) > 0 {
                        needed[fl(p) as usize].insert(p);
                    }
                }
            }
        }
        chosen.sort_by_key(|&a| (rpg.action_layer[a as usize], a));

        let open_goals: Vec<FactId> = task
            .goal
            .iter()
            .copied()
            .filter(|&g| !state.contains(g))
            .collect();
        let mut dag = PlanDAG::with_dummies(state.iter().collect(), open_goals);
        let mut vertex_of = std::collections::HashMap::with_capacity(chosen.len());
        for &a in &chosen {
            let act = task.action(a);
            vertex_of.insert(a, dag.vertices.len());
            dag.vertices.push(DagVertex {
                kind: VertexKind::Action,
                action: Some(a),
                schema: Some(act.schema),
                pre: act.pre.clone(),
                eff: act.add.clone(),
            });
        }
        let mut edges = Vec::new();
        for &b in &chosen {
            let vb = vertex_of[&b];
            let act = task.action(b);
            if act.pre.is_empty() {
                edges.push((STATE_VERTEX, vb));
            }
            for &p in &act.pre {
                let from = if fl(p) == 0 {
                    STATE_VERTEX
                } else {
                    vertex_of[&achiever[p as usize].expect("supported precondition")]
                };
                edges.push((from, vb));
            }
        }
        for &g in &task.goal {
            if fl(g) > 0 {
                edges.push((
                    vertex_of[&achiever[g as usize].expect("supported goal")],
                    GOAL_VERTEX,
                ));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        dag.edges = edges;
        dag.base_h = chosen.len();
        dag.layers = depth;
        debug_assert!(dag.is_acyclic(), "relaxed-plan DAG has a cycle");

        let mut preferred: Vec<ActionId> = chosen
            .iter()
            .copied()
            .filter(|&a| rpg.action_layer[a as usize] == 0 && task.is_applicable(state, a))
            .collect();
        preferred.sort_unstable();
        HeuristicReport {
            h: Some(chosen.len()),
            dag: Some(dag),
            preferred,
        }
    }

    pub fn evaluate(&mut self, state: &State) -> HeuristicReport {
        let rpg = self.build_rpg(state);
        self.extract_relaxed_plan(state, &rpg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground::tests::fixture_task;
    use crate::ground::GroundAction;
    use crate::pddl::GroundAtom;

    fn atoms(n: usize) -> Vec<GroundAtom> {
        (0..n)
            .map(|i| GroundAtom::new(format!("p{i}"), &[]))
            .collect()
    }

    fn act(name: &str, pre: &[FactId], add: &[FactId]) -> GroundAction {
        GroundAction {
            schema: 0,
            name: name.into(),
            args: vec![],
            pre: pre.to_vec(),
            add: add.to_vec(),
            del: vec![],
        }
    }

    #[test]
    fn chain_layers_and_plan() {
        let task = fixture_task("chain.pddl", "chain-p01.pddl");
        let mut ff = FfHeuristic::new(&task);
        let rpg = ff.build_rpg(&task.init);
        assert_eq!(rpg.fact_layer, vec![0, 1, 2]);
        assert_eq!(rpg.depth, 2);
        let r = ff.extract_relaxed_plan(&task.init, &rpg);
        assert_eq!(r.h, Some(2));
        assert_eq!(r.preferred, vec![0]);
        let dag = r.dag.unwrap();
        // state -> a1 -> a2 -> goal
        assert_eq!(dag.edges, vec![(0, 2), (2, 3), (3, 1)]);
        assert_eq!(dag.layers, 2);
        assert_eq!(dag.unsat_goals, 1);
    }

    #[test]
    fn goal_in_state_gives_empty_dag() {
        let task = fixture_task("chain.pddl", "chain-solved.pddl");
        let mut ff = FfHeuristic::new(&task);
        let rpg = ff.build_rpg(&task.init);
        assert_eq!(rpg.depth, 0);
        let r = ff.extract_relaxed_plan(&task.init, &rpg);
        assert_eq!(r.h, Some(0));
        let dag = r.dag.unwrap();
        assert_eq!(dag.vertices.len(), 2);
        assert!(dag.edges.is_empty());
        assert_eq!((dag.layers, dag.unsat_goals), (0, 0));
    }

    #[test]
    fn unreachable_goal_is_dead_end() {
        let task = GroundTask::from_parts(
            "t".into(),
            atoms(2),
            vec![act("a", &[0], &[0])],
            State::from_facts(2, [0]),
            vec![1],
            vec!["a".into()],
            true,
        );
        let mut ff = FfHeuristic::new(&task);
        let rpg = ff.build_rpg(&task.init);
        assert_eq!(rpg.fact_layer[1], UNREACHED);
        assert!(ff.extract_relaxed_plan(&task.init, &rpg).is_dead_end());
    }

    #[test]
    fn independent_goals_form_parallel_chains() {
        let task = GroundTask::from_parts(
            "t".into(),
            atoms(3),
            vec![act("a", &[0], &[1]), act("b", &[0], &[2])],
            State::from_facts(3, [0]),
            vec![1, 2],
            vec!["a".into()],
            false,
        );
        let mut ff = FfHeuristic::new(&task);
        let r = ff.evaluate(&task.init);
        assert_eq!(r.h, Some(2));
        assert_eq!(r.preferred, vec![0, 1]);
        let dag = r.dag.unwrap();
        assert_eq!(dag.edges, vec![(0, 2), (0, 3), (2, 1), (3, 1)]);
    }

    #[test]
    fn shared_achiever_is_counted_once() {
        // One action adds both goals.
        let task = GroundTask::from_parts(
            "t".into(),
            atoms(3),
            vec![act("a", &[0], &[1]), act("both", &[0], &[1, 2])],
            State::from_facts(3, [0]),
            vec![1, 2],
            vec!["a".into()],
            false,
        );
        let r = FfHeuristic::new(&task).evaluate(&task.init);
        // p1 is taken first by the lowest-id achiever `a`, then p2 needs `both`.
        assert_eq!(r.h, Some(2));
        let task2 = GroundTask::from_parts(
            "t".into(),
            atoms(3),
            vec![act("both", &[0], &[1, 2]), act("z", &[0], &[1])],
            State::from_facts(3, [0]),
            vec![1, 2],
            vec!["a".into()],
            false,
        );
        assert_eq!(FfHeuristic::new(&task2).evaluate(&task2.init).h, Some(1));
    }
}
