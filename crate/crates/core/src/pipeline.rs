//! Training-data collection: solve training problems with base FF, shorten
//! the plans by action elimination and label every state on the plan with
//! its remaining distance to the goal.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::features::{
    read_feature_csv, write_feature_csv, FeatureError, FeatureKind, FeatureLayout, PairOrdering,
};
use crate::ground::{GroundTask, Plan};
use crate::heuristic::FfHeuristic;
use crate::learn::{Example, LearnError, ProblemGroup, TrainingSet};
use crate::par;
use crate::search::{gbfs_lazy, Budget, FfEvaluator, Outcome, SearchConfig};

pub const DEFAULT_MAX_PROBLEMS: usize = 10;
const MANIFEST: &str = "manifest.txt";
const MANIFEST_HEADER: &str = "rankplan-training v1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("problem was not solved ({0:?})")]
    Unsolved(Outcome),
    #[error("input plan fails at step {0}")]
    InvalidInputPlan(usize),
    #[error("FF reports a dead end at plan step {0}")]
    DeadEndOnPlan(usize),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error("no training problem was solved")]
    NothingSolved,
    #[error("archive: {0}")]
    Archive(String),
}

impl From<std::io::Error> for PipelineError {
    fn from(e: std::io::Error) -> Self {
        PipelineError::Archive(e.to_string())
    }
}

/// Solves `task` with lazy GBFS and base FF.
pub fn collect_plan(task: &GroundTask, budget: Budget) -> Result<(Plan, u64), PipelineError> {
    let mut ev = FfEvaluator::new(task);
    let r = gbfs_lazy(
        task,
        &mut ev,
        &SearchConfig {
            budget,
            ..Default::default()
        },
    );
    match r.plan {
        Some(plan) => Ok((plan, r.stats.expansions)),
        None => Err(PipelineError::Unsolved(r.outcome)),
    }
}

/// Removes each step together with the later steps that stop being
/// applicable without it, whenever the goal still holds afterwards.
/// Repeats until a full pass removes nothing.
pub fn action_elimination(task: &GroundTask, plan: &Plan) -> Result<Plan, PipelineError> {
    let v = task.validate(&task.init, plan);
    if !v.valid {
        return Err(PipelineError::InvalidInputPlan(
            v.failed_step.unwrap_or(plan.len()),
        ));
    }
    let mut steps = plan.steps.clone();
    loop {
        let mut changed = false;
        let mut i = 0;
        while i < steps.len() {
            match try_remove(task, &steps, i) {
                Some(kept) => {
                    steps = kept;
                    changed = true;
                }
                None => i += 1,
            }
        }
        if !changed {
            return Ok(Plan::new(steps));
        }
    }
}

fn try_remove(task: &GroundTask, steps: &[u32], i: usize) -> Option<Vec<u32>> {
    let mut state = task.init.clone();
    let mut kept = Vec::with_capacity(steps.len() - 1);
    for (j, &a) in steps.iter().enumerate() {
        if j < i || (j > i && task.is_applicable(&state, a)) {
            state = task.apply_unchecked(&state, a);
            kept.push(a);
        }
    }
    task.is_goal(&state).then_some(kept)
}

/// One example per state on the plan, labelled with the number of steps left.
pub fn make_examples(
    task: &GroundTask,
    plan: &Plan,
    layout: &FeatureLayout,
    problem_id: &str,
) -> Result<ProblemGroup, PipelineError> {
    let v = task.validate(&task.init, plan);
    if !v.valid {
        return Err(PipelineError::InvalidInputPlan(
            v.failed_step.unwrap_or(plan.len()),
        ));
    }
    let mut ff = FfHeuristic::new(task);
    let n = plan.len();
    let mut examples = Vec::with_capacity(n + 1);
    for (j, state) in task.trace(&task.init, plan).iter().enumerate() {
        let dag = ff
            .evaluate(state)
            .dag
            .ok_or(PipelineError::DeadEndOnPlan(j))?;
        examples.push(Example {
            x: layout.extract(&dag)?,
            y: (n - j) as f64,
        });
    }
    Ok(ProblemGroup {
        problem_id: problem_id.to_string(),
        examples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Provenance {
    pub budget: Budget,
    pub expansions: u64,
    pub action_elimination: bool,
    pub original_length: usize,
    pub final_length: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRun {
    pub problem_id: String,
    pub plan: Plan,
    pub examples: ProblemGroup,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub budget: Budget,
    pub action_elimination: bool,
    pub max_problems: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            budget: Budget::default(),
            action_elimination: true,
            max_problems: DEFAULT_MAX_PROBLEMS,
            seed: 0,
        }
    }
}

pub fn training_run(
    problem_id: &str,
    task: &GroundTask,
    layout: &FeatureLayout,
    config: &PipelineConfig,
) -> Result<TrainingRun, PipelineError> {
    let (raw, expansions) = collect_plan(task, config.budget)?;
    let plan = if config.action_elimination {
        action_elimination(task, &raw)?
    } else {
        raw.clone()
    };
    let examples = make_examples(task, &plan, layout, problem_id)?;
    Ok(TrainingRun {
        problem_id: problem_id.to_string(),
        provenance: Provenance {
            budget: config.budget,
            expansions,
            action_elimination: config.action_elimination,
            original_length: raw.len(),
            final_length: plan.len(),
        },
        plan,
        examples,
    })
}

/// Picks at most `max` of `n` indices uniformly at random, in ascending order.
pub fn select_subset(n: usize, max: usize, seed: u64) -> Vec<usize> {
    if n <= max {
        return (0..n).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, n, max).into_vec();
    picked.sort_unstable();
    picked
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingData {
    pub set: TrainingSet,
    pub runs: Vec<TrainingRun>,
    /// Problems left out because the base planner failed on them.
    pub unsolved: Vec<String>,
}

/// Solves every problem, keeps up to `config.max_problems` of the solved
/// ones (seeded choice) and builds the training set in input order.
pub fn build_training_data(
    problems: &[(String, GroundTask)],
    kind: FeatureKind,
    config: &PipelineConfig,
) -> Result<TrainingData, PipelineError> {
    let Some((_, first)) = problems.first() else {
        return Err(PipelineError::NothingSolved);
    };
    let layout = FeatureLayout::new(kind, first.schemas.clone());
    let results = par::map(problems, |(id, task)| {
        training_run(id, task, &layout, config)
    });
    let mut solved = Vec::new();
    let mut unsolved = Vec::new();
    for ((id, _), r) in problems.iter().zip(results) {
        match r {
            Ok(run) => solved.push(run),
            Err(PipelineError::Unsolved(_)) => unsolved.push(id.clone()),
            Err(e) => return Err(e),
        }
    }
    if solved.is_empty() {
        return Err(PipelineError::NothingSolved);
    }
    let keep = select_subset(solved.len(), config.max_problems, config.seed);
    let runs: Vec<TrainingRun> = keep.into_iter().map(|i| solved[i].clone()).collect();
    let set = TrainingSet::new(layout, runs.iter().map(|r| r.examples.clone()).collect())?;
    Ok(TrainingData {
        set,
        runs,
        unsolved,
    })
}

fn csv_name(problem_id: &str) -> String {
    let safe: String = problem_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("{safe}.csv")
}

/// Writes one feature CSV per problem plus a manifest into `dir`.
pub fn write_archive(dir: &Path, data: &TrainingData, seed: u64) -> Result<(), PipelineError> {
    fs::create_dir_all(dir)?;
    let layout = &data.set.layout;
    let mut manifest = String::new();
    writeln!(manifest, "{MANIFEST_HEADER}").unwrap();
    writeln!(manifest, "layout {}", layout.kind.as_str()).unwrap();
    writeln!(manifest, "ordering {}", layout.ordering.as_str()).unwrap();
    writeln!(manifest, "schemas {}", layout.schemas.join(" ")).unwrap();
    writeln!(manifest, "seed {seed}").unwrap();
    for run in &data.runs {
        let file = csv_name(&run.problem_id);
        let rows = run
            .examples
            .examples
            .iter()
            .map(|e| (&e.x, e.y, run.problem_id.as_str()));
        fs::write(dir.join(&file), write_feature_csv(layout, rows))?;
        let p = &run.provenance;
        writeln!(
            manifest,
            "problem {} {} length {} original {} expansions {} elimination {}",
            run.problem_id,
            file,
            p.final_length,
            p.original_length,
            p.expansions,
            p.action_elimination
        )
        .unwrap();
    }
    for id in &data.unsolved {
        writeln!(manifest, "unsolved {id}").unwrap();
    }
    fs::write(dir.join(MANIFEST), manifest)?;
    Ok(())
}

/// Loads the training set stored by [`write_archive`].
pub fn read_archive(dir: &Path) -> Result<TrainingSet, PipelineError> {
    let text = fs::read_to_string(dir.join(MANIFEST))?;
    let bad = |msg: &str| PipelineError::Archive(format!("{MANIFEST}: {msg}"));
    let mut lines = text.lines();
    if lines.next() != Some(MANIFEST_HEADER) {
        return Err(bad("bad header"));
    }
    let mut kind = None;
    let mut ordering = PairOrdering::Descendant;
    let mut schemas = None;
    let mut files = Vec::new();
    for line in lines {
        let mut words = line.split_whitespace();
        match words.next() {
            Some("layout") => kind = words.next().and_then(FeatureKind::parse),
            Some("ordering") => {
                ordering = words
                    .next()
                    .and_then(PairOrdering::parse)
                    .ok_or_else(|| bad("bad ordering"))?
            }
            Some("schemas") => schemas = Some(words.map(str::to_string).collect::<Vec<_>>()),
            Some("problem") => {
                let (Some(id), Some(file)) = (words.next(), words.next()) else {
                    return Err(bad("bad problem line"));
                };
                files.push((id.to_string(), file.to_string()));
            }
            _ => {}
        }
    }
    let layout = FeatureLayout {
        kind: kind.ok_or_else(|| bad("missing layout"))?,
        ordering,
        schemas: schemas.ok_or_else(|| bad("missing schemas"))?,
    };
    let mut groups = Vec::new();
    for (id, file) in files {
        let rows = read_feature_csv(&layout, &fs::read_to_string(dir.join(file))?)?;
        groups.push(ProblemGroup {
            problem_id: id,
            examples: rows.into_iter().map(|(x, y, _)| Example { x, y }).collect(),
        });
    }
    Ok(TrainingSet::new(layout, groups)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground::tests::fixture_task;

    fn steps(task: &GroundTask, names: &[&str]) -> Plan {
        Plan::new(
            names
                .iter()
                .map(|n| {
                    let mut w = n.split_whitespace();
                    let name = w.next().unwrap();
                    let args: Vec<String> = w.map(str::to_string).collect();
                    task.find_action(name, &args).unwrap()
                })
                .collect(),
        )
    }

    #[test]
    fn collect_plan_cases() {
        let t = fixture_task("chain.pddl", "chain-solved.pddl");
        assert!(collect_plan(&t, Budget::default()).unwrap().0.is_empty());
        let t = fixture_task("delivery.pddl", "delivery-p01.pddl");
        let (plan, _) = collect_plan(&t, Budget::default()).unwrap();
        assert!(t.validate(&t.init, &plan).valid);
        let t = fixture_task("trap.pddl", "trap-p01.pddl");
        assert_eq!(
            collect_plan(&t, Budget::default()).unwrap_err(),
            PipelineError::Unsolved(Outcome::Unsolvable)
        );
    }

    #[test]
    fn elimination_drops_undone_detour() {
        let t = fixture_task("delivery.pddl", "delivery-p01.pddl");
        let plan = steps(
            &t,
            &[
                "move t1 l1 l2",
                "pick t1 p1 l2",
                "drop t1 p1 l2",
                "pick t1 p1 l2",
                "move t1 l2 l3",
                "drop t1 p1 l3",
            ],
        );
        assert!(t.validate(&t.init, &plan).valid);
        let out = action_elimination(&t, &plan).unwrap();
        assert_eq!(out.len(), 4);
        assert!(t.validate(&t.init, &out).valid);
        assert_eq!(action_elimination(&t, &out).unwrap(), out);
    }

    #[test]
    fn elimination_rejects_invalid_plan() {
        let t = fixture_task("delivery.pddl", "delivery-p01.pddl");
        let plan = steps(&t, &["pick t1 p1 l2"]);
        assert_eq!(
            action_elimination(&t, &plan).unwrap_err(),
            PipelineError::InvalidInputPlan(0)
        );
    }

    #[test]
    fn examples_count_down_to_goal() {
        let t = fixture_task("delivery.pddl", "delivery-p01.pddl");
        let layout = FeatureLayout::new(FeatureKind::Pairwise, t.schemas.clone());
        let (plan, _) = collect_plan(&t, Budget::default()).unwrap();
        let g = make_examples(&t, &plan, &layout, "p01").unwrap();
        let ys: Vec<f64> = g.examples.iter().map(|e| e.y).collect();
        assert_eq!(ys, [4.0, 3.0, 2.0, 1.0, 0.0]);
        let last = &g.examples.last().unwrap().x.values;
        let extras = layout.extras_offset();
        assert_eq!(last[extras], 0.0);
        assert_eq!(last[extras + 2], 0.0);

        let t = fixture_task("chain.pddl", "chain-solved.pddl");
        let layout = FeatureLayout::new(FeatureKind::Single, t.schemas.clone());
        let g = make_examples(&t, &Plan::default(), &layout, "s").unwrap();
        assert_eq!(g.examples.len(), 1);
        assert_eq!(g.examples[0].y, 0.0);
    }

    #[test]
    fn subset_selection_is_seeded() {
        assert_eq!(select_subset(3, 10, 1), vec![0, 1, 2]);
        let a = select_subset(30, 10, 7);
        assert_eq!(a.len(), 10);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(a, select_subset(30, 10, 7));
        assert_ne!(a, select_subset(30, 10, 8));
    }

    #[test]
    fn archive_round_trip() {
        let problems = vec![
            (
                "p01".to_string(),
                fixture_task("delivery.pddl", "delivery-p01.pddl"),
            ),
            (
                "bad".to_string(),
                fixture_task("delivery.pddl", "delivery-unsolvable.pddl"),
            ),
        ];
        let data =
            build_training_data(&problems, FeatureKind::Pairwise, &PipelineConfig::default())
                .unwrap();
        assert_eq!(data.unsolved, vec!["bad".to_string()]);
        let dir = tempfile::tempdir().unwrap();
        write_archive(dir.path(), &data, 0).unwrap();
        assert_eq!(read_archive(dir.path()).unwrap(), data.set);
    }
}
