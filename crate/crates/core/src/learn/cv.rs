//! Leave-one-problem-out model selection.

use super::metrics::{group_rmse, group_tau, GroupScores};
use super::{fit_ranksvm, fit_ridge, LearnError, LinearModel, TrainingSet};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Learner {
    Ridge,
    RankSvm { nonneg: bool },
}

impl Learner {
    pub fn fit(self, ts: &TrainingSet, param: f64) -> Result<LinearModel, LearnError> {
        match self {
            Learner::Ridge => fit_ridge(ts, param),
            Learner::RankSvm { nonneg } => fit_ranksvm(ts, param, nonneg),
        }
    }
}

/// Cross-validated scores for one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct CvPoint {
    pub param: f64,
    /// Mean held-out RMSE over folds.
    pub rmse: f64,
    /// Mean held-out τ over folds whose held-out problem has ≥ 2 examples;
    /// NaN when no fold qualifies.
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub best_param: f64,
    /// The selection criterion at `best_param`: RMSE for ridge, τ for RankSVM.
    pub cv_score: f64,
    pub cv_rmse: f64,
    pub cv_tau: f64,
    /// Every grid point actually evaluated, in grid order.
    pub path: Vec<CvPoint>,
    pub model: LinearModel,
}

fn check_grid(grid: &[f64]) -> Result<(), LearnError> {
    if grid.is_empty() || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(LearnError::BadGrid);
    }
    if let Some(&bad) = grid.iter().find(|p| !(**p > 0.0)) {
        return Err(LearnError::BadParameter(bad));
    }
    Ok(())
}

/// Trains on all groups but one for each fold and scores the held-out group.
pub fn cv_point(ts: &TrainingSet, learner: Learner, param: f64) -> Result<CvPoint, LearnError> {
    let folds: Vec<usize> = (0..ts.groups.len()).collect();
    let results = par::map(&folds, |&k| -> Result<GroupScores, LearnError> {
        let model = learner.fit(&ts.without(k), param)?;
        let held = ts.only(k);
        Ok(held
            .scores(|x| model.predict_raw_unchecked(x))
            .pop()
            .expect("one group"))
    });
    let mut rmse = 0.0;
    let (mut tau, mut tau_folds) = (0.0, 0usize);
    for r in results {
        let scores = r?;
        rmse += group_rmse(&scores);
        if scores.actual.len() >= 2 {
            tau += group_tau(&scores)?;
            tau_folds += 1;
        }
    }
    Ok(CvPoint {
        param,
        rmse: rmse / folds.len() as f64,
        tau: if tau_folds == 0 {
            f64::NAN
        } else {
            tau / tau_folds as f64
        },
    })
}

/// Scores every grid point without choosing one.
pub fn cross_validate(
    ts: &TrainingSet,
    learner: Learner,
    grid: &[f64],
) -> Result<Vec<CvPoint>, LearnError> {
    check_grid(grid)?;
    if ts.groups.len() < 2 {
        return Err(LearnError::TooFewGroups(ts.groups.len()));
    }
    grid.iter().map(|&p| cv_point(ts, learner, p)).collect()
}

/// Picks the regularization parameter by leave-one-problem-out CV and
/// retrains on all groups.
///
/// Ridge scans the whole grid for the lowest CV RMSE. RankSVM walks the
/// grid upward from the most regularized value and stops at the first
/// strict drop in CV τ. Ties go to the stronger regularization in both.
pub fn loocv_select(
    ts: &TrainingSet,
    learner: Learner,
    grid: &[f64],
) -> Result<CvOutcome, LearnError> {
    check_grid(grid)?;
    if ts.groups.len() < 2 {
        return Err(LearnError::TooFewGroups(ts.groups.len()));
    }
    let mut path: Vec<CvPoint> = Vec::new();
    let best = match learner {
        Learner::Ridge => {
            for &p in grid {
                path.push(cv_point(ts, learner, p)?);
            }
            // Scan from the strongest regularization so ties keep it.
            let mut best = path.len() - 1;
            for i in (0..path.len()).rev() {
                if path[i].rmse < path[best].rmse {
                    best = i;
                }
            }
            best
        }
        Learner::RankSvm { .. } => {
            let mut best = 0;
            for &p in grid {
                let point = cv_point(ts, learner, p)?;
                let score = point.tau;
                path.push(point);
                let i = path.len() - 1;
                if i == 0 {
                    continue;
                }
                if score > path[best].tau {
                    best = i;
                } else if score < path[best].tau {
                    break;
                }
            }
            best
        }
    };
    let chosen = &path[best];
    let model = learner.fit(ts, chosen.param)?;
    Ok(CvOutcome {
        best_param: chosen.param,
        cv_score: match learner {
            Learner::Ridge => chosen.rmse,
            Learner::RankSvm { .. } => chosen.tau,
        },
        cv_rmse: chosen.rmse,
        cv_tau: chosen.tau,
        path,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::tests::{layout_with_dim, training_set};

    fn planted() -> TrainingSet {
        // y = 2·x0 + x1 exactly.
        let l = layout_with_dim(4);
        let groups: Vec<Vec<(Vec<f64>, f64)>> = (0..4)
            .map(|g| {
                (0..5)
                    .map(|j| {
                        let x0 = (j + g) as f64;
                        let x1 = ((j * 3 + g) % 4) as f64;
                        (vec![x0, x1, 0.0, 0.0], 2.0 * x0 + x1)
                    })
                    .collect()
            })
            .collect();
        training_set(&l, &groups)
    }

    #[test]
    fn single_point_grid() {
        let ts = planted();
        let out = loocv_select(&ts, Learner::Ridge, &[0.5]).unwrap();
        assert_eq!(out.best_param, 0.5);
        let out = loocv_select(&ts, Learner::RankSvm { nonneg: false }, &[0.5]).unwrap();
        assert_eq!(out.best_param, 0.5);
    }

    #[test]
    fn ridge_prefers_tiny_lambda_on_noiseless_data() {
        let ts = planted();
        let out = loocv_select(&ts, Learner::Ridge, &[1e-9, 1e9]).unwrap();
        assert_eq!(out.best_param, 1e-9);
        assert!(out.cv_rmse < 1e-6);
        assert!(out.path[1].rmse > 1.0);
    }

    #[test]
    fn errors() {
        let ts = planted();
        let one = ts.only(0);
        assert_eq!(
            loocv_select(&one, Learner::Ridge, &[1.0]).unwrap_err(),
            LearnError::TooFewGroups(1)
        );
        assert_eq!(
            loocv_select(&ts, Learner::Ridge, &[1.0, 0.1]).unwrap_err(),
            LearnError::BadGrid
        );
        assert_eq!(
            loocv_select(&ts, Learner::Ridge, &[]).unwrap_err(),
            LearnError::BadGrid
        );
    }
}
