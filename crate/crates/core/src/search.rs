//! Lazy greedy best-first search with alternating dual open lists.
//!
//! Successors are queued with their parent's heuristic value and only
//! evaluated when popped. One queue holds every generated node, the other
//! only nodes reached through a preferred operator; pops alternate between
//! them. Duplicate states are dropped at generation time.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::features::FeatureLayout;
use crate::ground::{ActionId, GroundTask, Plan, State};
use crate::heuristic::FfHeuristic;
use crate::learn::{LearnError, LinearModel};

/// Result of evaluating one state. `h == None` marks a dead end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    pub h: Option<u64>,
    /// Ascending action ids.
    pub preferred: Vec<ActionId>,
}

pub trait Evaluator {
    fn evaluate(&mut self, state: &State) -> Evaluation;
}

/// The FF heuristic: relaxed-plan length and helpful actions.
pub struct FfEvaluator<'t> {
    ff: FfHeuristic<'t>,
}

impl<'t> FfEvaluator<'t> {
    pub fn new(task: &'t GroundTask) -> Self {
        FfEvaluator {
            ff: FfHeuristic::new(task),
        }
    }
}

impl Evaluator for FfEvaluator<'_> {
    fn evaluate(&mut self, state: &State) -> Evaluation {
        let r = self.ff.evaluate(state);
        Evaluation {
            h: r.h.map(|h| h as u64),
            preferred: r.preferred,
        }
    }
}

/// How a learned evaluator turns `wᵀx` into a queue key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KeyMode {
    /// `round(scale · max(0, wᵀx))`.
    #[default]
    Scaled,
    /// Order-preserving bit pattern of `max(0, wᵀx)`; no rounding. Used to
    /// compare rankings of models exactly.
    Raw,
}

/// Learned linear heuristic over FF's relaxed-plan DAG. Dead ends and
/// preferred operators come from FF itself.
pub struct LearnedEvaluator<'t> {
    ff: FfHeuristic<'t>,
    model: LinearModel,
    layout: FeatureLayout,
    mode: KeyMode,
}

pub fn make_learned_evaluator<'t>(
    task: &'t GroundTask,
    model: LinearModel,
) -> Result<LearnedEvaluator<'t>, LearnError> {
    let layout = FeatureLayout {
        schemas: task.schemas.clone(),
        ..model.layout.clone()
    };
    model.check_layout(layout.signature())?;
    Ok(LearnedEvaluator {
        ff: FfHeuristic::new(task),
        model,
        layout,
        mode: KeyMode::Scaled,
    })
}

impl<'t> LearnedEvaluator<'t> {
    pub fn with_mode(mut self, mode: KeyMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn model(&self) -> &LinearModel {
        &self.model
    }
}

impl Evaluator for LearnedEvaluator<'_> {
    fn evaluate(&mut self, state: &State) -> Evaluation {
        let r = self.ff.evaluate(state);
        let Some(dag) = r.dag else {
            return Evaluation {
                h: None,
                preferred: Vec::new(),
            };
        };
        let x = self
            .layout
            .extract(&dag)
            .expect("FF DAGs are acyclic and use the task's schema table");
        let raw = self.model.predict_raw_unchecked(&x);
        let h = match self.mode {
            KeyMode::Scaled => self.model.integerize(raw),
            // Non-negative IEEE doubles order the same as their bit patterns.
            KeyMode::Raw => raw.max(0.0).to_bits(),
        };
        Evaluation {
            h: Some(h),
            preferred: r.preferred,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub max_expansions: Option<u64>,
    pub max_seconds: Option<f64>,
    /// Rough cap on bytes held by the state registry.
    pub max_memory_bytes: Option<usize>,
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget {
            max_expansions: None,
            max_seconds: None,
            max_memory_bytes: None,
        }
    }

    pub fn expansions(n: u64) -> Self {
        Budget {
            max_expansions: Some(n),
            ..Budget::unlimited()
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_expansions: Some(1_000_000),
            max_seconds: Some(300.0),
            max_memory_bytes: Some(4 << 30),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SearchConfig {
    pub budget: Budget,
    /// Extra consecutive preferred-queue pops granted whenever a new best
    /// heuristic value is reached. 0 means strict alternation.
    pub pref_boost: u32,
    pub record_log: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Solved,
    Unsolvable,
    OutOfBudget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SearchStats {
    pub expansions: u64,
    pub evaluations: u64,
    pub generated: u64,
    pub runtime: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QueueTag {
    Init,
    All,
    Preferred,
}

impl QueueTag {
    pub fn as_str(self) -> &'static str {
        match self {
            QueueTag::Init => "init",
            QueueTag::All => "all",
            QueueTag::Preferred => "pref",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ExpansionRecord {
    pub seq: u64,
    pub state_hash: u64,
    pub h: u64,
    pub queue: QueueTag,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchResult {
    pub outcome: Outcome,
    pub plan: Option<Plan>,
    pub stats: SearchStats,
    pub log: Vec<ExpansionRecord>,
}

impl SearchResult {
    /// Expansion log text: `seq state-hash h queue-tag` per line.
    pub fn log_text(&self) -> String {
        let mut out = String::new();
        for r in &self.log {
            writeln!(
                out,
                "{} {:016x} {} {}",
                r.seq,
                r.state_hash,
                r.h,
                r.queue.as_str()
            )
            .expect("string write");
        }
        out
    }
}

struct Node {
    state: State,
    parent: Option<u32>,
    action: Option<ActionId>,
}

type Queue = BinaryHeap<Reverse<(u64, u64, u32)>>;

pub fn gbfs_lazy(
    task: &GroundTask,
    evaluator: &mut dyn Evaluator,
    config: &SearchConfig,
) -> SearchResult {
    let start = Instant::now();
    let budget = config.budget;
    let state_bytes = task.init.capacity() / 8 + 96;
    let mut stats = SearchStats::default();
    let mut log = Vec::new();

    let mut nodes: Vec<Node> = Vec::new();
    let mut index: HashMap<State, u32> = HashMap::new();
    let mut closed: Vec<bool> = Vec::new();
    let mut queues: [Queue; 2] = [BinaryHeap::new(), BinaryHeap::new()];
    let mut insertion = 0u64;

    let finish = |outcome, plan, mut stats: SearchStats, log| {
        stats.runtime = start.elapsed();
        SearchResult {
            outcome,
            plan,
            stats,
            log,
        }
    };

    let root_eval = evaluator.evaluate(&task.init);
    stats.evaluations += 1;
    let Some(root_h) = root_eval.h else {
        return finish(Outcome::Unsolvable, None, stats, log);
    };
    nodes.push(Node {
        state: task.init.clone(),
        parent: None,
        action: None,
    });
    closed.push(false);
    index.insert(task.init.clone(), 0);
    stats.generated += 1;
    queues[0].push(Reverse((root_h, insertion, 0)));
    insertion += 1;
    let mut root_eval = Some(root_eval);

    let mut turn = 0usize;
    let mut boost = 0u32;
    let mut best_h = u64::MAX;
    loop {
        let which = if boost > 0 && !queues[1].is_empty() {
            boost -= 1;
            1
        } else if !queues[turn].is_empty() {
            let q = turn;
            turn ^= 1;
            q
        } else if !queues[turn ^ 1].is_empty() {
            turn ^ 1
        } else {
            return finish(Outcome::Unsolvable, None, stats, log);
        };
        let Reverse((_, _, id)) = queues[which].pop().expect("nonempty queue");
        if closed[id as usize] {
            continue;
        }
        if budget.max_expansions.is_some_and(|m| stats.expansions >= m)
            || budget
                .max_seconds
                .is_some_and(|s| start.elapsed().as_secs_f64() >= s)
            || budget
                .max_memory_bytes
                .is_some_and(|m| nodes.len() * state_bytes >= m)
        {
            return finish(Outcome::OutOfBudget, None, stats, log);
        }
        closed[id as usize] = true;

        let eval = match root_eval.take().filter(|_| id == 0) {
            Some(e) => e,
            None => {
                stats.evaluations += 1;
                evaluator.evaluate(&nodes[id as usize].state)
            }
        };
        let Some(h) = eval.h else {
            continue;
        };
        stats.expansions += 1;
        if config.record_log {
            log.push(ExpansionRecord {
                seq: stats.expansions,
                state_hash: nodes[id as usize].state.stable_hash(),
                h,
                queue: if id == 0 {
                    QueueTag::Init
                } else if which == 0 {
                    QueueTag::All
                } else {
                    QueueTag::Preferred
                },
            });
        }
        if h < best_h {
            best_h = h;
            boost += config.pref_boost;
        }
        if task.is_goal(&nodes[id as usize].state) {
            let mut steps = Vec::new();
            let mut cur = id;
            while let Some(a) = nodes[cur as usize].action {
                steps.push(a);
                cur = nodes[cur as usize].parent.expect("non-root has a parent");
            }
            steps.reverse();
            return finish(Outcome::Solved, Some(Plan::new(steps)), stats, log);
        }

        let state = nodes[id as usize].state.clone();
        for a in task.applicable(&state) {
            let next = task.apply_unchecked(&state, a);
            if index.contains_key(&next) {
                continue;
            }
            let child = nodes.len() as u32;
            index.insert(next.clone(), child);
            nodes.push(Node {
                state: next,
                parent: Some(id),
                action: Some(a),
            });
            closed.push(false);
            stats.generated += 1;
            queues[0].push(Reverse((h, insertion, child)));
            if eval.preferred.binary_search(&a).is_ok() {
                queues[1].push(Reverse((h, insertion, child)));
            }
            insertion += 1;
        }
    }
}
