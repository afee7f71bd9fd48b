//! Fixed-layout feature vectors computed from a relaxed-plan DAG.
//!
//! Two representations share the same trailing extras `[base-h, layers,
//! unsat-goals]`:
//!
//! * **single**: one count per action schema (how many DAG vertices
//!   instantiate it);
//! * **pairwise**: for every ordered schema pair `(S1, S2)`, counted over
//!   vertex pairs `(v1, v2)` where `v2` descends from `v1`, one slot for
//!   "`v1`'s effects feed `v2`'s preconditions" and one for "`v2`'s effects
//!   feed `v1`'s preconditions". The state and goal dummies take part as
//!   schemas of their own, so the pair table is `(|A|+2)²` per feature.

use std::collections::VecDeque;
use std::fmt::Write as _;

use thiserror::Error;

use crate::heuristic::{PlanDAG, VertexKind};
use crate::util::Fnv64;

pub const STATE_SLOT_NAME: &str = "@state";
pub const GOAL_SLOT_NAME: &str = "@goal";
pub const EXTRA_LABELS: [&str; 3] = ["base-h", "layers", "unsat-goals"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeatureError {
    #[error("feature layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("relaxed-plan graph contains a cycle")]
    CycleDetected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    Single,
    Pairwise,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Single => "single",
            FeatureKind::Pairwise => "pair",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "single" => Some(FeatureKind::Single),
            "pair" | "pairwise" => Some(FeatureKind::Pairwise),
            _ => None,
        }
    }
}

/// Which vertex pairs count as ordered for pairwise features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PairOrdering {
    /// `v2` reachable from `v1` by a path of length ≥ 1.
    #[default]
    Descendant,
    /// Only direct support edges.
    DirectEdge,
}

impl PairOrdering {
    pub fn as_str(self) -> &'static str {
        match self {
            PairOrdering::Descendant => "descendant",
            PairOrdering::DirectEdge => "direct-edge",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "descendant" => Some(PairOrdering::Descendant),
            "direct-edge" => Some(PairOrdering::DirectEdge),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureLayout {
    pub kind: FeatureKind,
    pub ordering: PairOrdering,
    /// Action-schema names in domain order, without the dummies.
    pub schemas: Vec<String>,
}

impl FeatureLayout {
    pub fn new(kind: FeatureKind, schemas: Vec<String>) -> Self {
        FeatureLayout {
            kind,
            ordering: PairOrdering::Descendant,
            schemas,
        }
    }

    fn pair_slots(&self) -> usize {
        self.schemas.len() + 2
    }

    pub fn dimension(&self) -> usize {
        match self.kind {
            FeatureKind::Single => self.schemas.len() + 3,
            FeatureKind::Pairwise => 2 * self.pair_slots().pow(2) + 3,
        }
    }

    /// Index of the first of the three trailing extras.
    pub fn extras_offset(&self) -> usize {
        self.dimension() - 3
    }

    pub fn base_h_slot(&self) -> usize {
        self.extras_offset()
    }

    pub fn labels(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.dimension());
        match self.kind {
            FeatureKind::Single => {
                out.extend(self.schemas.iter().map(|s| format!("count:{s}")));
            }
            FeatureKind::Pairwise => {
                let names: Vec<&str> = self
                    .schemas
                    .iter()
                    .map(String::as_str)
                    .chain([STATE_SLOT_NAME, GOAL_SLOT_NAME])
                    .collect();
                for feature in ["f1", "f2"] {
                    for a in &names {
                        for b in &names {
                            out.push(format!("{feature}:{a}>{b}"));
                        }
                    }
                }
            }
        }
        out.extend(EXTRA_LABELS.iter().map(|s| s.to_string()));
        out
    }

    /// Stable 64-bit digest of kind, ordering and schema table.
    pub fn signature(&self) -> u64 {
        let mut h = Fnv64::new();
        h.write(self.kind.as_str().as_bytes());
        h.write(&[self.ordering as u8]);
        for s in &self.schemas {
            h.write(&[0]);
            h.write(s.as_bytes());
        }
        h.finish()
    }

    fn slot_of(&self, dag: &PlanDAG, v: usize) -> Result<usize, FeatureError> {
        let vertex = &dag.vertices[v];
        match vertex.kind {
            VertexKind::StateDummy => Ok(self.schemas.len()),
            VertexKind::GoalDummy => Ok(self.schemas.len() + 1),
            VertexKind::Action => match vertex.schema {
                Some(s) if s < self.schemas.len() => Ok(s),
                other => Err(FeatureError::LayoutMismatch(format!(
                    "vertex {v} has schema {other:?}, layout has {} schemas",
                    self.schemas.len()
                ))),
            },
        }
    }

    pub fn extract(&self, dag: &PlanDAG) -> Result<FeatureVector, FeatureError> {
        match self.kind {
            FeatureKind::Single => single_features(dag, self),
            FeatureKind::Pairwise => pairwise_features(dag, self),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub signature: u64,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn write_extras(values: &mut [f64], dag: &PlanDAG) {
    let n = values.len();
    values[n - 3] = dag.base_h as f64;
    values[n - 2] = dag.layers as f64;
    values[n - 1] = dag.unsat_goals as f64;
}

pub fn single_features(
    dag: &PlanDAG,
    layout: &FeatureLayout,
) -> Result<FeatureVector, FeatureError> {
    if layout.kind != FeatureKind::Single {
        return Err(FeatureError::LayoutMismatch(
            "single features need a single layout".into(),
        ));
    }
    let mut values = vec![0.0; layout.dimension()];
    for (v, vertex) in dag.vertices.iter().enumerate() {
        if vertex.kind == VertexKind::Action {
            values[layout.slot_of(dag, v)?] += 1.0;
        }
    }
    write_extras(&mut values, dag);
    Ok(FeatureVector {
        values,
        signature: layout.signature(),
    })
}

/// Per-vertex descendant lists (ascending), by BFS from every vertex.
pub fn reachability(dag: &PlanDAG) -> Result<Vec<Vec<usize>>, FeatureError> {
    if !dag.is_acyclic() {
        return Err(FeatureError::CycleDetected);
    }
    let n = dag.vertices.len();
    let succ = dag.successors();
    let mut desc = Vec::with_capacity(n);
    let mut seen = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for src in 0..n {
        let mut out = Vec::new();
        queue.clear();
        queue.push_back(src);
        while let Some(v) = queue.pop_front() {
            for &w in &succ[v] {
                if seen[w] != src {
                    seen[w] = src;
                    out.push(w);
                    queue.push_back(w);
                }
            }
        }
        out.sort_unstable();
        desc.push(out);
    }
    Ok(desc)
}

/// Whether two ascending id lists share an element.
fn intersects(a: &[u32], b: &[u32]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

pub fn pairwise_features(
    dag: &PlanDAG,
    layout: &FeatureLayout,
) -> Result<FeatureVector, FeatureError> {
    if layout.kind != FeatureKind::Pairwise {
        return Err(FeatureError::LayoutMismatch(
            "pairwise features need a pairwise layout".into(),
        ));
    }
    let pairs: Vec<Vec<usize>> = match layout.ordering {
        PairOrdering::Descendant => reachability(dag)?,
        PairOrdering::DirectEdge => {
            if !dag.is_acyclic() {
                return Err(FeatureError::CycleDetected);
            }
            dag.successors()
        }
    };
    let slots: Vec<usize> = (0..dag.vertices.len())
        .map(|v| layout.slot_of(dag, v))
        .collect::<Result<_, _>>()?;
    let width = layout.pair_slots();
    let second = width * width;
    let mut values = vec![0.0; layout.dimension()];
    for (v1, targets) in pairs.iter().enumerate() {
        let a = &dag.vertices[v1];
        for &v2 in targets {
            let b = &dag.vertices[v2];
            let cell = slots[v1] * width + slots[v2];
            if intersects(&a.eff, &b.pre) {
                values[cell] += 1.0;
            }
            if intersects(&b.eff, &a.pre) {
                values[second + cell] += 1.0;
            }
        }
    }
    write_extras(&mut values, dag);
    Ok(FeatureVector {
        values,
        signature: layout.signature(),
    })
}

/// One CSV row per example: slot labels, then `y` and `problem-id`.
pub fn write_feature_csv<'a>(
    layout: &FeatureLayout,
    rows: impl IntoIterator<Item = (&'a FeatureVector, f64, &'a str)>,
) -> String {
    let mut out = layout.labels().join(",");
    out.push_str(",y,problem-id\n");
    for (x, y, problem) in rows {
        for v in &x.values {
            write!(out, "{v},").expect("string write");
        }
        writeln!(out, "{y},{problem}").expect("string write");
    }
    out
}

/// Inverse of [`write_feature_csv`]. Returns `(x, y, problem-id)` rows.
pub fn read_feature_csv(
    layout: &FeatureLayout,
    text: &str,
) -> Result<Vec<(FeatureVector, f64, String)>, FeatureError> {
    let mut lines = text.lines();
    let mut expected = layout.labels();
    expected.push("y".into());
    expected.push("problem-id".into());
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    if header != expected.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(FeatureError::LayoutMismatch(
            "CSV header does not match layout".into(),
        ));
    }
    let dim = layout.dimension();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let cells: Vec<&str> = line.split(',').collect();
        let bad = || FeatureError::LayoutMismatch(format!("CSV row {} is malformed", i + 2));
        if cells.len() != dim + 2 {
            return Err(bad());
        }
        let values = cells[..dim]
            .iter()
            .map(|c| c.parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()?;
        let y = cells[dim].parse::<f64>().map_err(|_| bad())?;
        rows.push((
            FeatureVector {
                values,
                signature: layout.signature(),
            },
            y,
            cells[dim + 1].to_string(),
        ));
    }
    Ok(rows)
}
