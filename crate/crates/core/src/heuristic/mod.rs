//! Delete-relaxation heuristics that expose their approximate plan as a DAG.
//!
//! Feature extraction only consumes [`PlanDAG`], so any backend that builds
//! an approximate plan can feed the learner.

mod ff;

pub use ff::{FfHeuristic, RelaxedPlanningGraph, UNREACHED};

use crate::ground::{ActionId, FactId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VertexKind {
    Action,
    StateDummy,
    GoalDummy,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DagVertex {
    pub kind: VertexKind,
    pub action: Option<ActionId>,
    /// Index into the task's schema table; `None` for the dummies.
    pub schema: Option<usize>,
    pub pre: Vec<FactId>,
    /// Add effects only: the plan lives in the delete relaxation.
    pub eff: Vec<FactId>,
}

/// Relaxed-plan support graph. Vertex 0 is the state dummy, vertex 1 the
/// goal dummy; action vertices follow in (layer, action id) order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanDAG {
    pub vertices: Vec<DagVertex>,
    /// Directed (supporter, consumer) pairs, sorted and deduplicated.
    pub edges: Vec<(usize, usize)>,
    pub base_h: usize,
    pub layers: usize,
    pub unsat_goals: usize,
}

pub const STATE_VERTEX: usize = 0;
pub const GOAL_VERTEX: usize = 1;

impl PlanDAG {
    /// A DAG with only the two dummies; `state_facts` become the state
    /// dummy's effects and `open_goals` the goal dummy's preconditions.
    pub fn with_dummies(state_facts: Vec<FactId>, open_goals: Vec<FactId>) -> Self {
        let unsat_goals = open_goals.len();
        PlanDAG {
            vertices: vec![
                DagVertex {
                    kind: VertexKind::StateDummy,
                    action: None,
                    schema: None,
                    pre: Vec::new(),
                    eff: state_facts,
                },
                DagVertex {
                    kind: VertexKind::GoalDummy,
                    action: None,
                    schema: None,
                    pre: open_goals,
                    eff: Vec::new(),
                },
            ],
            edges: Vec::new(),
            base_h: 0,
            layers: 0,
            unsat_goals,
        }
    }

    pub fn action_vertices(&self) -> impl Iterator<Item = &DagVertex> {
        self.vertices
            .iter()
            .filter(|v| v.kind == VertexKind::Action)
    }

    pub fn successors(&self) -> Vec<Vec<usize>> {
        let mut succ = vec![Vec::new(); self.vertices.len()];
        for &(a, b) in &self.edges {
            succ[a].push(b);
        }
        succ
    }

    /// Kahn's algorithm; true iff every vertex gets a topological position.
    pub fn is_acyclic(&self) -> bool {
        let n = self.vertices.len();
        let mut indeg = vec![0usize; n];
        for &(_, b) in &self.edges {
            indeg[b] += 1;
        }
        let succ = self.successors();
        let mut stack: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = stack.pop() {
            seen += 1;
            for &w in &succ[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    stack.push(w);
                }
            }
        }
        seen == n
    }
}

/// Outcome of one heuristic evaluation. `h == None` marks a dead end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeuristicReport {
    pub h: Option<usize>,
    pub dag: Option<PlanDAG>,
    /// Ascending action ids.
    pub preferred: Vec<ActionId>,
}

impl HeuristicReport {
    pub fn dead_end() -> Self {
        HeuristicReport {
            h: None,
            dag: None,
            preferred: Vec::new(),
        }
    }

    pub fn is_dead_end(&self) -> bool {
        self.h.is_none()
    }
}
