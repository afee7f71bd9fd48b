use nalgebra::{DMatrix, DVector};

use super::{LearnError, LinearModel, Method, TrainedWith, TrainingSet, DEFAULT_SCALE};

/// Ridge regression on all examples pooled across problems:
/// `w = (XᵀX + λI)⁻¹ XᵀY`.
pub fn fit_ridge(ts: &TrainingSet, lambda: f64) -> Result<LinearModel, LearnError> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(LearnError::BadParameter(lambda));
    }
    let d = ts.dimension();
    let mut gram = DMatrix::<f64>::zeros(d, d);
    let mut rhs = DVector::<f64>::zeros(d);
    for g in &ts.groups {
        for e in &g.examples {
            let x = &e.x.values;
            for (i, &xi) in x.iter().enumerate() {
                if xi == 0.0 {
                    continue;
                }
                rhs[i] += xi * e.y;
                for (j, &xj) in x.iter().enumerate().skip(i) {
                    gram[(i, j)] += xi * xj;
                }
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            gram[(i, j)] = gram[(j, i)];
        }
        gram[(i, i)] += lambda;
    }
    let w = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        // λ > 0 keeps the system positive definite; this only guards
        // against round-off on extreme scales.
        None => gram
            .lu()
            .solve(&rhs)
            .expect("regularized normal equations are nonsingular"),
    };
    Ok(LinearModel {
        weights: w.iter().copied().collect(),
        layout: ts.layout.clone(),
        scale: DEFAULT_SCALE,
        trained_with: TrainedWith {
            method: Method::Ridge,
            param: lambda,
            nonneg: false,
        },
    })
}
