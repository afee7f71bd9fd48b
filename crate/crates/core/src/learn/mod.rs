//! Linear heuristic models: training data, ridge regression, RankSVM,
//! per-problem metrics and leave-one-problem-out model selection.

mod cv;
pub mod metrics;
mod model;
mod ranksvm;
mod ridge;

use thiserror::Error;

use crate::features::{FeatureLayout, FeatureVector};

pub use cv::{cross_validate, loocv_select, CvOutcome, CvPoint, Learner};
pub use metrics::{grouped_rmse, grouped_tau, GroupScores};
pub use model::{LinearModel, Method, ModelFileError, TrainedWith, DEFAULT_SCALE};
pub use ranksvm::{fit_ranksvm, fit_ranksvm_with, ranksvm_objective, RankSvmOptions, RankingPairs};
pub use ridge::fit_ridge;

/// λ grid 10⁻⁴ … 10⁴ in decade steps.
pub fn default_ridge_grid() -> Vec<f64> {
    (-4..=4).map(|e| 10f64.powi(e)).collect()
}

/// C grid 10⁻⁴ … 10² in decade steps.
pub fn default_ranksvm_grid() -> Vec<f64> {
    (-4..=2).map(|e| 10f64.powi(e)).collect()
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnError {
    #[error("training set has no groups")]
    EmptyTrainingSet,
    #[error("group {0} has no examples")]
    EmptyGroup(usize),
    #[error("ranking needs at least two examples per group, found {0}")]
    DegenerateGroup(usize),
    #[error("leave-one-out needs at least two groups, found {0}")]
    TooFewGroups(usize),
    #[error("examples mix feature layouts")]
    MixedLayouts,
    #[error("problem `{0}` has repeated distance-to-go labels")]
    DuplicateLabels(String),
    #[error("regularization parameter must be positive, got {0}")]
    BadParameter(f64),
    #[error("parameter grid must be nonempty and ascending")]
    BadGrid,
    #[error("layout mismatch: model {model:#018x}, features {features:#018x}")]
    LayoutMismatch { model: u64, features: u64 },
    #[error("solver did not converge within {epochs} epochs (relative gap {gap:.3e})")]
    SolverDiverged { epochs: usize, gap: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub x: FeatureVector,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemGroup {
    pub problem_id: String,
    pub examples: Vec<Example>,
}

/// Examples grouped by the problem they came from. Ranking constraints and
/// τ never cross group boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub layout: FeatureLayout,
    pub groups: Vec<ProblemGroup>,
}

impl TrainingSet {
    /// Checks the shared layout and per-group distinct labels.
    pub fn new(layout: FeatureLayout, groups: Vec<ProblemGroup>) -> Result<Self, LearnError> {
        let sig = layout.signature();
        let dim = layout.dimension();
        for g in &groups {
            if g.examples
                .iter()
                .any(|e| e.x.signature != sig || e.x.len() != dim)
            {
                return Err(LearnError::MixedLayouts);
            }
            let mut ys: Vec<f64> = g.examples.iter().map(|e| e.y).collect();
            ys.sort_by(f64::total_cmp);
            if ys.windows(2).any(|w| w[0] == w[1]) {
                return Err(LearnError::DuplicateLabels(g.problem_id.clone()));
            }
        }
        Ok(TrainingSet { layout, groups })
    }

    pub fn dimension(&self) -> usize {
        self.layout.dimension()
    }

    pub fn num_examples(&self) -> usize {
        self.groups.iter().map(|g| g.examples.len()).sum()
    }

    /// All groups except `held_out`.
    pub fn without(&self, held_out: usize) -> TrainingSet {
        TrainingSet {
            layout: self.layout.clone(),
            groups: self
                .groups
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != held_out)
                .map(|(_, g)| g.clone())
                .collect(),
        }
    }

    pub fn only(&self, index: usize) -> TrainingSet {
        TrainingSet {
            layout: self.layout.clone(),
            groups: vec![self.groups[index].clone()],
        }
    }

    /// Scores every example with `f`, keeping the grouping.
    pub fn scores(&self, f: impl Fn(&FeatureVector) -> f64) -> Vec<GroupScores> {
        self.groups
            .iter()
            .map(|g| GroupScores {
                predicted: g.examples.iter().map(|e| f(&e.x)).collect(),
                actual: g.examples.iter().map(|e| e.y).collect(),
            })
            .collect()
    }
}

/// Average per-problem RMSE of the model's raw (unscaled) predictions.
pub fn rmse(ts: &TrainingSet, model: &LinearModel) -> Result<f64, LearnError> {
    model.check_layout(ts.layout.signature())?;
    grouped_rmse(&ts.scores(|x| model.predict_raw_unchecked(x)))
}

/// Average per-problem Kendall τ of the model's raw predictions.
pub fn kendall_tau(ts: &TrainingSet, model: &LinearModel) -> Result<f64, LearnError> {
    model.check_layout(ts.layout.signature())?;
    grouped_tau(&ts.scores(|x| model.predict_raw_unchecked(x)))
}
