//! Pairwise ranking SVM restricted to within-problem pairs.
//!
//! Primal problem, for every pair `(j, k)` of examples from the same
//! problem with `y_j > y_k` and `d = x_j − x_k`:
//!
//! ```text
//! min_w  ‖w‖² + C · Σ max(0, 1 − wᵀd)        (optionally s.t. w ≥ 0)
//! ```
//!
//! Solved by exact coordinate ascent on the dual of the half-scaled
//! problem `½‖w‖² + (C/2)·Σ hinge`. With `α ∈ [0, C/2]` per pair and
//! `v = Σ α d`, the primal point is `w = v`, or `w = max(v, 0)` when the
//! non-negativity constraint is active (its multiplier is eliminated in
//! closed form). Each coordinate step maximizes the dual exactly, and the
//! duality gap certifies convergence.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{LearnError, LinearModel, Method, TrainedWith, TrainingSet, DEFAULT_SCALE};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankSvmOptions {
    /// Stop when the duality gap is at most `tolerance · (1 + objective)`
    /// on the unscaled objective.
    pub tolerance: f64,
    pub max_epochs: usize,
    /// Seed for the per-epoch coordinate order.
    pub seed: u64,
}

impl Default for RankSvmOptions {
    fn default() -> Self {
        RankSvmOptions {
            tolerance: 1e-5,
            max_epochs: 200_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct SparseDiff {
    idx: Vec<usize>,
    val: Vec<f64>,
    sq_norm: f64,
}

impl SparseDiff {
    fn dot(&self, w: &[f64]) -> f64 {
        self.idx.iter().zip(&self.val).map(|(&i, v)| v * w[i]).sum()
    }
}

/// Difference vectors `x_j − x_k` for every within-group pair ordered so the
/// example with the larger label comes first.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingPairs {
    diffs: Vec<SparseDiff>,
    dim: usize,
}

impl RankingPairs {
    pub fn from_training_set(ts: &TrainingSet) -> Result<Self, LearnError> {
        let mut diffs = Vec::new();
        for g in &ts.groups {
            if g.examples.len() < 2 {
                return Err(LearnError::DegenerateGroup(g.examples.len()));
            }
            for (j, a) in g.examples.iter().enumerate() {
                for b in &g.examples[j + 1..] {
                    let (hi, lo) = if a.y > b.y { (a, b) } else { (b, a) };
                    let mut idx = Vec::new();
                    let mut val = Vec::new();
                    for (i, (p, q)) in hi.x.values.iter().zip(&lo.x.values).enumerate() {
                        let d = p - q;
                        if d != 0.0 {
                            idx.push(i);
                            val.push(d);
                        }
                    }
                    let sq_norm = val.iter().map(|v| v * v).sum();
                    diffs.push(SparseDiff { idx, val, sq_norm });
                }
            }
        }
        Ok(RankingPairs {
            diffs,
            dim: ts.dimension(),
        })
    }

    /// Builds pairs directly from dense difference vectors.
    pub fn from_dense(dim: usize, diffs: &[Vec<f64>]) -> Self {
        let diffs = diffs
            .iter()
            .map(|d| {
                assert_eq!(d.len(), dim);
                let (idx, val): (Vec<usize>, Vec<f64>) = d
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(i, v)| (i, *v))
                    .unzip();
                let sq_norm = val.iter().map(|v| v * v).sum();
                SparseDiff { idx, val, sq_norm }
            })
            .collect();
        RankingPairs { diffs, dim }
    }

    pub fn len(&self) -> usize {
        self.diffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diffs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dense copies of the difference vectors (for oracles and debugging).
    pub fn dense(&self) -> Vec<Vec<f64>> {
        self.diffs
            .iter()
            .map(|d| {
                let mut v = vec![0.0; self.dim];
                for (&i, &x) in d.idx.iter().zip(&d.val) {
                    v[i] = x;
                }
                v
            })
            .collect()
    }
}

/// `‖w‖² + C · Σ max(0, 1 − wᵀd)`.
pub fn ranksvm_objective(pairs: &RankingPairs, w: &[f64], c: f64) -> f64 {
    let norm: f64 = w.iter().map(|x| x * x).sum();
    let hinge: f64 = pairs.diffs.iter().map(|d| (1.0 - d.dot(w)).max(0.0)).sum();
    norm + c * hinge
}

pub fn fit_ranksvm(ts: &TrainingSet, c: f64, nonneg: bool) -> Result<LinearModel, LearnError> {
    fit_ranksvm_with(ts, c, nonneg, &RankSvmOptions::default())
}

pub fn fit_ranksvm_with(
    ts: &TrainingSet,
    c: f64,
    nonneg: bool,
    opts: &RankSvmOptions,
) -> Result<LinearModel, LearnError> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(LearnError::BadParameter(c));
    }
    let pairs = RankingPairs::from_training_set(ts)?;
    let weights = solve(&pairs, c, nonneg, opts)?;
    Ok(LinearModel {
        weights,
        layout: ts.layout.clone(),
        scale: DEFAULT_SCALE,
        trained_with: TrainedWith {
            method: Method::RankSvm,
            param: c,
            nonneg,
        },
    })
}

/// Dual coordinate ascent. Returns the primal weights.
pub(crate) fn solve(
    pairs: &RankingPairs,
    c: f64,
    nonneg: bool,
    opts: &RankSvmOptions,
) -> Result<Vec<f64>, LearnError> {
    let upper = c / 2.0;
    let n = pairs.len();
    let mut alpha = vec![0.0; n];
    let mut v = vec![0.0; pairs.dim];
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for (i, d) in pairs.diffs.iter().enumerate() {
        if d.sq_norm == 0.0 {
            // Never satisfiable: the dual optimum pins it to the box edge.
            alpha[i] = upper;
        } else {
            order.push(i);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut scratch: Vec<f64> = Vec::new();
    let mut gap = f64::INFINITY;
    for epoch in 0..opts.max_epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let d = &pairs.diffs[i];
            let step = if nonneg {
                nonneg_step(d, &v, alpha[i], upper, &mut scratch)
            } else {
                let g = 1.0 - d.dot(&v);
                (alpha[i] + g / d.sq_norm).clamp(0.0, upper) - alpha[i]
            };
            if step != 0.0 {
                alpha[i] += step;
                for (&k, &x) in d.idx.iter().zip(&d.val) {
                    v[k] += step * x;
                }
            }
        }
        if epoch % 4 == 3 || epoch + 1 == opts.max_epochs || order.is_empty() {
            let w = primal(&v, nonneg);
            let objective = ranksvm_objective(pairs, &w, c);
            let norm: f64 = w.iter().map(|x| x * x).sum();
            let dual = 2.0 * (alpha.iter().sum::<f64>() - 0.5 * norm);
            gap = objective - dual;
            if gap <= opts.tolerance * (1.0 + objective.abs()) {
                return Ok(w);
            }
        }
    }
    let w = primal(&v, nonneg);
    let objective = ranksvm_objective(pairs, &w, c);
    Err(LearnError::SolverDiverged {
        epochs: opts.max_epochs,
        gap: gap / (1.0 + objective.abs()),
    })
}

fn primal(v: &[f64], nonneg: bool) -> Vec<f64> {
    if nonneg {
        v.iter().map(|x| x.max(0.0)).collect()
    } else {
        v.to_vec()
    }
}

/// Exact maximizer `t ∈ [−α, U − α]` of `t − ½‖max(v + t·d, 0)‖²`.
///
/// The derivative `1 − dᵀ max(v + t·d, 0)` is continuous, piecewise linear
/// and non-increasing in `t`, with kinks where some `v_k + t·d_k` crosses
/// zero. Bracket the root between kinks, then solve the linear piece.
fn nonneg_step(d: &SparseDiff, v: &[f64], alpha: f64, upper: f64, kinks: &mut Vec<f64>) -> f64 {
    let lo = -alpha;
    let hi = upper - alpha;
    let slope_at = |t: f64| -> f64 {
        1.0 - d
            .idx
            .iter()
            .zip(&d.val)
            .map(|(&k, &x)| x * (v[k] + t * x).max(0.0))
            .sum::<f64>()
    };
    if slope_at(lo) <= 0.0 {
        return lo;
    }
    if slope_at(hi) >= 0.0 {
        return hi;
    }
    kinks.clear();
    kinks.push(lo);
    kinks.extend(
        d.idx
            .iter()
            .zip(&d.val)
            .map(|(&k, &x)| -v[k] / x)
            .filter(|&t| t > lo && t < hi),
    );
    kinks.push(hi);
    kinks.sort_by(f64::total_cmp);
    // Invariant: slope(kinks[a]) > 0 >= slope(kinks[b]).
    let (mut a, mut b) = (0, kinks.len() - 1);
    while b - a > 1 {
        let mid = (a + b) / 2;
        if slope_at(kinks[mid]) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let (left, right) = (kinks[a], kinks[b]);
    let probe = 0.5 * (left + right);
    let (mut lin, mut quad) = (0.0, 0.0);
    for (&k, &x) in d.idx.iter().zip(&d.val) {
        if v[k] + probe * x > 0.0 {
            lin += x * v[k];
            quad += x * x;
        }
    }
    if quad == 0.0 {
        return right;
    }
    ((1.0 - lin) / quad).clamp(left, right)
}
