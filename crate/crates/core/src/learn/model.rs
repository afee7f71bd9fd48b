use std::fmt::Write as _;

use thiserror::Error;

use super::LearnError;
use crate::features::{FeatureKind, FeatureLayout, FeatureVector, PairOrdering};

pub const DEFAULT_SCALE: u64 = 1000;
const HEADER: &str = "rankplan-model v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ridge,
    RankSvm,
    /// Hand-set weights (tests, baselines).
    Manual,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ridge => "ridge",
            Method::RankSvm => "ranksvm",
            Method::Manual => "manual",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "ridge" => Some(Method::Ridge),
            "ranksvm" => Some(Method::RankSvm),
            "manual" => Some(Method::Manual),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainedWith {
    pub method: Method,
    /// λ for ridge, C for RankSVM, 0 for manual models.
    pub param: f64,
    pub nonneg: bool,
}

/// Linear heuristic `f(x) = wᵀx`, integerized as `round(scale · max(0, f(x)))`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub layout: FeatureLayout,
    pub scale: u64,
    pub trained_with: TrainedWith,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelFileError {
    #[error("not a model file (expected `{HEADER}` header)")]
    BadHeader,
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

impl LinearModel {
    pub fn manual(layout: FeatureLayout, weights: Vec<f64>) -> Self {
        assert_eq!(weights.len(), layout.dimension(), "weight vector length");
        LinearModel {
            weights,
            layout,
            scale: DEFAULT_SCALE,
            trained_with: TrainedWith {
                method: Method::Manual,
                param: 0.0,
                nonneg: false,
            },
        }
    }

    pub fn signature(&self) -> u64 {
        self.layout.signature()
    }

    pub(crate) fn check_layout(&self, features: u64) -> Result<(), LearnError> {
        let model = self.signature();
        if model == features {
            Ok(())
        } else {
            Err(LearnError::LayoutMismatch { model, features })
        }
    }

    pub(crate) fn predict_raw_unchecked(&self, x: &FeatureVector) -> f64 {
        self.weights.iter().zip(&x.values).map(|(w, v)| w * v).sum()
    }

    pub fn predict_raw(&self, x: &FeatureVector) -> Result<f64, LearnError> {
        self.check_layout(x.signature)?;
        Ok(self.predict_raw_unchecked(x))
    }

    /// Integer heuristic value `round(scale · max(0, wᵀx))`.
    pub fn predict(&self, x: &FeatureVector) -> Result<u64, LearnError> {
        let raw = self.predict_raw(x)?;
        Ok(self.integerize(raw))
    }

    pub fn integerize(&self, raw: f64) -> u64 {
        let v = (self.scale as f64 * raw.max(0.0)).round();
        if v >= u64::MAX as f64 {
            u64::MAX
        } else {
            v as u64
        }
    }

    /// Weights with magnitude above `threshold`.
    pub fn nonzero_count(&self, threshold: f64) -> usize {
        self.weights.iter().filter(|w| w.abs() > threshold).count()
    }

    /// Line-oriented text form. Weights use Rust's shortest round-trip
    /// decimal formatting, so [`LinearModel::from_text`] restores them bit for bit.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let w = &mut out;
        writeln!(w, "{HEADER}").unwrap();
        writeln!(w, "method {}", self.trained_with.method.as_str()).unwrap();
        writeln!(w, "param {:?}", self.trained_with.param).unwrap();
        writeln!(w, "nonneg {}", self.trained_with.nonneg).unwrap();
        writeln!(w, "scale {}", self.scale).unwrap();
        writeln!(w, "layout {}", self.layout.kind.as_str()).unwrap();
        writeln!(w, "ordering {}", self.layout.ordering.as_str()).unwrap();
        writeln!(w, "schemas {}", self.layout.schemas.join(" ")).unwrap();
        for (label, weight) in self.layout.labels().iter().zip(&self.weights) {
            writeln!(w, "{label} {weight:?}").unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ModelFileError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l.trim() == HEADER => {}
            _ => return Err(ModelFileError::BadHeader),
        }
        let mut field = |key: &str| -> Result<(usize, String), ModelFileError> {
            let (i, l) = lines.next().ok_or(ModelFileError::Malformed {
                line: 0,
                message: format!("missing `{key}` line"),
            })?;
            let rest = l
                .strip_prefix(key)
                .and_then(|r| {
                    r.strip_prefix(' ')
                        .or(if r.is_empty() { Some("") } else { None })
                })
                .ok_or_else(|| ModelFileError::Malformed {
                    line: i + 1,
                    message: format!("expected `{key}`"),
                })?;
            Ok((i + 1, rest.trim().to_string()))
        };
        let bad = |line: usize, message: &str| ModelFileError::Malformed {
            line,
            message: message.to_string(),
        };
        let (l, method) = field("method")?;
        let method = Method::parse(&method).ok_or_else(|| bad(l, "unknown method"))?;
        let (l, param) = field("param")?;
        let param: f64 = param.parse().map_err(|_| bad(l, "bad param"))?;
        let (l, nonneg) = field("nonneg")?;
        let nonneg: bool = nonneg.parse().map_err(|_| bad(l, "bad nonneg flag"))?;
        let (l, scale) = field("scale")?;
        let scale: u64 = scale.parse().map_err(|_| bad(l, "bad scale"))?;
        if scale == 0 {
            return Err(bad(l, "scale must be positive"));
        }
        let (l, kind) = field("layout")?;
        let kind = FeatureKind::parse(&kind).ok_or_else(|| bad(l, "unknown layout kind"))?;
        let (l, ordering) = field("ordering")?;
        let ordering = PairOrdering::parse(&ordering).ok_or_else(|| bad(l, "unknown ordering"))?;
        let (_, schemas) = field("schemas")?;
        let layout = FeatureLayout {
            kind,
            ordering,
            schemas: schemas.split_whitespace().map(str::to_string).collect(),
        };
        let labels = layout.labels();
        let mut weights = Vec::with_capacity(labels.len());
        for expected in &labels {
            let (i, l) = lines
                .next()
                .ok_or_else(|| bad(0, "fewer weights than layout slots"))?;
            let (label, value) = l
                .split_once(' ')
                .ok_or_else(|| bad(i + 1, "expected `label weight`"))?;
            if label != expected {
                return Err(bad(i + 1, &format!("expected slot `{expected}`")));
            }
            weights.push(value.trim().parse().map_err(|_| bad(i + 1, "bad weight"))?);
        }
        if let Some((i, l)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(bad(i + 1, &format!("unexpected trailing line `{l}`")));
        }
        Ok(LinearModel {
            weights,
            layout,
            scale,
            trained_with: TrainedWith {
                method,
                param,
                nonneg,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::tests::layout_with_dim;

    fn x(layout: &FeatureLayout, values: Vec<f64>) -> FeatureVector {
        FeatureVector {
            values,
            signature: layout.signature(),
        }
    }

    #[test]
    fn predict_examples() {
        let l = layout_with_dim(3);
        let zero = LinearModel::manual(l.clone(), vec![0.0; 3]);
        assert_eq!(zero.predict(&x(&l, vec![5.0, 1.0, 2.0])).unwrap(), 0);
        let m = LinearModel::manual(l.clone(), vec![1.0, 0.0, 0.0]);
        assert_eq!(m.predict(&x(&l, vec![2.0004, 0.0, 0.0])).unwrap(), 2000);
        assert_eq!(m.predict(&x(&l, vec![-3.0, 0.0, 0.0])).unwrap(), 0);
        let other = layout_with_dim(4);
        assert!(matches!(
            m.predict(&x(&other, vec![0.0; 4])),
            Err(LearnError::LayoutMismatch { .. })
        ));
    }

    #[test]
    fn model_file_round_trip_is_bit_exact() {
        let l = FeatureLayout::new(FeatureKind::Pairwise, vec!["move".into(), "pick".into()]);
        let weights: Vec<f64> = (0..l.dimension())
            .map(|i| (i as f64 * 0.1 + 1.0 / 3.0) * if i % 3 == 0 { -1.0 } else { 1e-7 })
            .collect();
        let mut m = LinearModel::manual(l, weights);
        m.trained_with = TrainedWith {
            method: Method::RankSvm,
            param: 0.1,
            nonneg: true,
        };
        let text = m.to_text();
        assert!(text.starts_with(
            "rankplan-model v1\nmethod ranksvm\nparam 0.1\nnonneg true\nscale 1000\nlayout pair\n"
        ));
        let back = LinearModel::from_text(&text).unwrap();
        assert_eq!(back, m);
        for (a, b) in back.weights.iter().zip(&m.weights) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn model_file_errors() {
        assert_eq!(
            LinearModel::from_text("hello"),
            Err(ModelFileError::BadHeader)
        );
        let l = layout_with_dim(4);
        let text = LinearModel::manual(l, vec![1.0; 4]).to_text();
        let truncated: String = text.lines().take(9).map(|l| format!("{l}\n")).collect();
        assert!(LinearModel::from_text(&truncated).is_err());
        let swapped = text.replace("count:s0", "count:zz");
        assert!(LinearModel::from_text(&swapped).is_err());
    }
}
