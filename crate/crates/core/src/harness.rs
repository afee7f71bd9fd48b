//! Experiment harness: generate a train/test split, train every method with
//! leave-one-problem-out selection, run the searches and tabulate.
//!
//! Configs are flat `key = value` text. Size parameters take either a
//! number or an inclusive range `lo..hi`:
//!
//! ```text
//! family = delivery
//! seed = 0
//! train.count = 10
//! train.locations = 3..4
//! test.count = 20
//! test.locations = 6..8
//! methods = ff, rr-single, rsvm-pair
//! max-expansions = 200000
//! ```

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::features::{FeatureKind, FeatureLayout};
use crate::generators::{generate_instance, Family, GenError, GenSpec};
use crate::ground::{ground, GroundError, GroundTask};
use crate::learn::{
    default_ranksvm_grid, default_ridge_grid, grouped_rmse, grouped_tau, loocv_select, LearnError,
    Learner, LinearModel, TrainingSet,
};
use crate::par;
use crate::pipeline::{build_training_data, PipelineConfig, PipelineError};
use crate::search::{
    gbfs_lazy, make_learned_evaluator, Budget, Evaluator, FfEvaluator, Outcome, SearchConfig,
};
use crate::util::{geometric_mean, mean};

pub const NONZERO_THRESHOLD: f64 = 1e-8;

pub const CSV_COLUMNS: [&str; 13] = [
    "method",
    "coverage",
    "solved-count",
    "test-count",
    "mean-length",
    "geo-runtime-s",
    "geo-expansions",
    "cv-rmse",
    "cv-tau",
    "reg-param",
    "nonzero-feats",
    "total-feats",
    "train-time-s",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("config: {0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Ground(#[from] GroundError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Learn(#[from] LearnError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    FfOriginal,
    Learned { kind: FeatureKind, learner: Learner },
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::FfOriginal,
        Method::Learned {
            kind: FeatureKind::Single,
            learner: Learner::Ridge,
        },
        Method::Learned {
            kind: FeatureKind::Pairwise,
            learner: Learner::Ridge,
        },
        Method::Learned {
            kind: FeatureKind::Single,
            learner: Learner::RankSvm { nonneg: false },
        },
        Method::Learned {
            kind: FeatureKind::Pairwise,
            learner: Learner::RankSvm { nonneg: false },
        },
        Method::Learned {
            kind: FeatureKind::Pairwise,
            learner: Learner::RankSvm { nonneg: true },
        },
    ];

    /// Config token, e.g. `rsvm-pair`.
    pub fn key(&self) -> String {
        match self {
            Method::FfOriginal => "ff".into(),
            Method::Learned { kind, learner } => {
                let l = match learner {
                    Learner::Ridge => "rr",
                    Learner::RankSvm { nonneg: false } => "rsvm",
                    Learner::RankSvm { nonneg: true } => "nn-rsvm",
                };
                format!("{l}-{}", kind.as_str())
            }
        }
    }

    /// Table label, e.g. `RSVM Pair`.
    pub fn label(&self) -> String {
        match self {
            Method::FfOriginal => "FF Original".into(),
            Method::Learned { kind, learner } => {
                let l = match learner {
                    Learner::Ridge => "RR",
                    Learner::RankSvm { nonneg: false } => "RSVM",
                    Learner::RankSvm { nonneg: true } => "NN RSVM",
                };
                let k = match kind {
                    FeatureKind::Single => "Single",
                    FeatureKind::Pairwise => "Pair",
                };
                format!("{l} {k}")
            }
        }
    }

    pub fn parse(key: &str) -> Option<Method> {
        let all = Method::ALL.into_iter().chain([Method::Learned {
            kind: FeatureKind::Single,
            learner: Learner::RankSvm { nonneg: true },
        }]);
        all.into_iter().find(|m| m.key() == key)
    }
}

/// Inclusive integer range sampled uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Range {
    pub lo: usize,
    pub hi: usize,
}

impl Range {
    pub fn fixed(v: usize) -> Self {
        Range { lo: v, hi: v }
    }

    fn parse(s: &str) -> Option<Range> {
        match s.split_once("..") {
            Some((a, b)) => {
                let r = Range {
                    lo: a.trim().parse().ok()?,
                    hi: b.trim().parse().ok()?,
                };
                (r.lo <= r.hi).then_some(r)
            }
            None => s.trim().parse().ok().map(Range::fixed),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        rng.gen_range(self.lo..=self.hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub count: usize,
    pub params: Vec<(String, Range)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub family: String,
    pub seed: u64,
    pub train: SplitSpec,
    pub test: SplitSpec,
    pub methods: Vec<Method>,
    pub budget: Budget,
    pub train_budget: Budget,
    pub max_train_problems: usize,
    pub ridge_grid: Vec<f64>,
    pub ranksvm_grid: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            family: "delivery".into(),
            seed: 0,
            train: SplitSpec {
                count: 10,
                params: Vec::new(),
            },
            test: SplitSpec {
                count: 20,
                params: Vec::new(),
            },
            methods: Method::ALL.to_vec(),
            budget: Budget {
                max_expansions: Some(200_000),
                max_seconds: None,
                max_memory_bytes: None,
            },
            train_budget: Budget::default(),
            max_train_problems: crate::pipeline::DEFAULT_MAX_PROBLEMS,
            ridge_grid: default_ridge_grid(),
            ranksvm_grid: default_ranksvm_grid(),
        }
    }
}

fn parse_grid(v: &str) -> Option<Vec<f64>> {
    v.split(',').map(|x| x.trim().parse().ok()).collect()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut c = ExperimentConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| ConfigError::Syntax {
                line: i + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = || err(format!("bad value for `{key}`"));
            let count = |v: &str| v.parse::<usize>().map_err(|_| bad());
            let opt_num = |v: &str| -> Result<Option<f64>, ConfigError> {
                if v == "none" {
                    Ok(None)
                } else {
                    v.parse().map(Some).map_err(|_| bad())
                }
            };
            match key {
                "family" => c.family = value.to_string(),
                "seed" => c.seed = value.parse().map_err(|_| bad())?,
                "train.count" => c.train.count = count(value)?,
                "test.count" => c.test.count = count(value)?,
                "methods" => {
                    c.methods = value
                        .split(',')
                        .map(|m| {
                            Method::parse(m.trim())
                                .ok_or_else(|| err(format!("unknown method `{}`", m.trim())))
                        })
                        .collect::<Result<_, _>>()?;
                }
                "max-expansions" => c.budget.max_expansions = opt_num(value)?.map(|v| v as u64),
                "max-seconds" => c.budget.max_seconds = opt_num(value)?,
                "train.max-expansions" => {
                    c.train_budget.max_expansions = opt_num(value)?.map(|v| v as u64)
                }
                "train.max-seconds" => c.train_budget.max_seconds = opt_num(value)?,
                "max-train-problems" => c.max_train_problems = count(value)?,
                "ridge-grid" => c.ridge_grid = parse_grid(value).ok_or_else(bad)?,
                "ranksvm-grid" => c.ranksvm_grid = parse_grid(value).ok_or_else(bad)?,
                _ => {
                    let (split, param) = match key.split_once('.') {
                        Some(("train", p)) => (&mut c.train, p),
                        Some(("test", p)) => (&mut c.test, p),
                        _ => return Err(err(format!("unknown key `{key}`"))),
                    };
                    let r = Range::parse(value).ok_or_else(bad)?;
                    split.params.retain(|(k, _)| k != param);
                    split.params.push((param.to_string(), r));
                }
            }
        }
        if c.methods.is_empty() {
            return Err(ConfigError::Invalid("no methods".into()));
        }
        // Surface unknown families and parameters before any work starts.
        for split in [&c.train, &c.test] {
            let lows: Vec<(String, usize)> = split
                .params
                .iter()
                .map(|(k, r)| (k.clone(), r.lo))
                .collect();
            Family::from_params(&c.family, &lows)
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        Ok(c)
    }

    /// Generator specs for one split. Instance `i` draws its sizes and
    /// seed from a stream keyed by the experiment seed and split.
    pub fn sample_specs(&self, split: &SplitSpec, stream: u64) -> Result<Vec<GenSpec>, GenError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        (0..split.count)
            .map(|_| {
                let params: Vec<(String, usize)> = split
                    .params
                    .iter()
                    .map(|(k, r)| (k.clone(), r.sample(&mut rng)))
                    .collect();
                let seed = rng.gen();
                Ok(GenSpec {
                    family: Family::from_params(&self.family, &params)?,
                    seed,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub method: String,
    pub solved: usize,
    pub test_count: usize,
    pub mean_length: Option<f64>,
    pub geo_runtime_s: Option<f64>,
    pub geo_expansions: Option<f64>,
    pub cv_rmse: Option<f64>,
    pub cv_tau: Option<f64>,
    pub reg_param: Option<f64>,
    pub nonzero_feats: Option<usize>,
    pub total_feats: Option<usize>,
    pub train_time_s: Option<f64>,
}

impl ReportRow {
    pub fn coverage(&self) -> f64 {
        if self.test_count == 0 {
            0.0
        } else {
            self.solved as f64 / self.test_count as f64
        }
    }

    /// The row with the wall-clock columns cleared.
    pub fn without_timings(&self) -> ReportRow {
        ReportRow {
            geo_runtime_s: None,
            train_time_s: None,
            ..self.clone()
        }
    }

    fn cells(&self) -> Vec<String> {
        // Aggregates over solved instances read "None" when nothing was
        // solved; columns that do not apply to the method stay empty.
        let agg = |v: Option<f64>| match v {
            Some(v) => format!("{v:.4}"),
            None => "None".into(),
        };
        let opt = |v: Option<f64>, fmt: fn(f64) -> String| v.map(fmt).unwrap_or_default();
        vec![
            self.method.clone(),
            format!("{}/{}", self.solved, self.test_count),
            self.solved.to_string(),
            self.test_count.to_string(),
            agg(self.mean_length),
            agg(self.geo_runtime_s),
            agg(self.geo_expansions),
            opt(self.cv_rmse, |v| format!("{v:.4}")),
            opt(self.cv_tau, |v| format!("{v:.4}")),
            opt(self.reg_param, |v| format!("{v:e}")),
            self.nonzero_feats
                .map(|v| v.to_string())
                .unwrap_or_default(),
            self.total_feats.map(|v| v.to_string()).unwrap_or_default(),
            opt(self.train_time_s, |v| format!("{v:.3}")),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportTable {
    pub rows: Vec<ReportRow>,
}

impl ReportTable {
    pub fn row(&self, method: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    pub fn to_csv(&self) -> String {
        let mut out = CSV_COLUMNS.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.cells().join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_text(&self) -> String {
        let rows: Vec<Vec<String>> =
            std::iter::once(CSV_COLUMNS.iter().map(|s| s.to_string()).collect())
                .chain(self.rows.iter().map(ReportRow::cells))
                .collect();
        let widths: Vec<usize> = (0..CSV_COLUMNS.len())
            .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for r in &rows {
            let line: Vec<String> = r
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (cell, w))| {
                    if c == 0 {
                        format!("{cell:<w$}")
                    } else {
                        format!("{cell:>w$}")
                    }
                })
                .collect();
            writeln!(out, "{}", line.join("  ").trim_end()).unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunRecord {
    pub outcome: Outcome,
    pub length: Option<usize>,
    pub runtime_s: f64,
    pub expansions: u64,
}

/// Runs every test task under `make`'s evaluator, in parallel.
pub fn evaluate_on<F>(tasks: &[GroundTask], budget: Budget, make: F) -> Vec<RunRecord>
where
    F: Fn(&GroundTask) -> Box<dyn Evaluator + '_> + Sync + Send,
{
    par::map(tasks, |task| {
        let mut ev = make(task);
        let r = gbfs_lazy(
            task,
            ev.as_mut(),
            &SearchConfig {
                budget,
                ..Default::default()
            },
        );
        if let Some(plan) = &r.plan {
            debug_assert!(task.validate(&task.init, plan).valid);
        }
        RunRecord {
            outcome: r.outcome,
            length: r.plan.as_ref().map(|p| p.len()),
            runtime_s: r.stats.runtime.as_secs_f64(),
            expansions: r.stats.expansions,
        }
    })
}

fn aggregate(method: String, runs: &[RunRecord]) -> ReportRow {
    let solved: Vec<&RunRecord> = runs
        .iter()
        .filter(|r| r.outcome == Outcome::Solved)
        .collect();
    let lengths: Vec<f64> = solved
        .iter()
        .filter_map(|r| r.length)
        .map(|l| l as f64)
        .collect();
    let times: Vec<f64> = solved.iter().map(|r| r.runtime_s).collect();
    let exps: Vec<f64> = solved.iter().map(|r| r.expansions as f64).collect();
    ReportRow {
        method,
        solved: solved.len(),
        test_count: runs.len(),
        mean_length: mean(&lengths),
        geo_runtime_s: geometric_mean(&times),
        geo_expansions: geometric_mean(&exps),
        cv_rmse: None,
        cv_tau: None,
        reg_param: None,
        nonzero_feats: None,
        total_feats: None,
        train_time_s: None,
    }
}

/// RMSE and τ of FF's own estimate against the training labels.
fn base_h_scores(ts: &TrainingSet) -> Result<(f64, f64), LearnError> {
    let slot = ts.layout.base_h_slot();
    let scores = ts.scores(|x| x.values[slot]);
    let with_pairs: Vec<_> = scores
        .iter()
        .filter(|g| g.actual.len() >= 2)
        .cloned()
        .collect();
    let tau = if with_pairs.is_empty() {
        f64::NAN
    } else {
        grouped_tau(&with_pairs)?
    };
    Ok((grouped_rmse(&scores)?, tau))
}

pub struct Experiment {
    pub table: ReportTable,
    /// Final models of the learned methods, keyed by method label.
    pub models: Vec<(String, LinearModel)>,
}

fn ground_specs(specs: &[GenSpec]) -> Result<Vec<(String, GroundTask)>, HarnessError> {
    par::map(
        specs,
        |spec| -> Result<(String, GroundTask), HarnessError> {
            let inst = generate_instance(spec)?;
            Ok((inst.name, ground(&inst.domain, &inst.problem)?))
        },
    )
    .into_iter()
    .collect()
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Experiment, HarnessError> {
    let train = ground_specs(&config.sample_specs(&config.train, 1)?)?;
    let test: Vec<GroundTask> = ground_specs(&config.sample_specs(&config.test, 2)?)?
        .into_iter()
        .map(|(_, t)| t)
        .collect();
    let pipeline = PipelineConfig {
        budget: config.train_budget,
        action_elimination: true,
        max_problems: config.max_train_problems,
        seed: config.seed,
    };
    let mut sets: Vec<(FeatureKind, TrainingSet)> = Vec::new();
    let mut set_for = |kind: FeatureKind| -> Result<TrainingSet, HarnessError> {
        if let Some((_, ts)) = sets.iter().find(|(k, _)| *k == kind) {
            return Ok(ts.clone());
        }
        let ts = build_training_data(&train, kind, &pipeline)?.set;
        sets.push((kind, ts.clone()));
        Ok(ts)
    };

    let mut rows = Vec::new();
    let mut models = Vec::new();
    for method in &config.methods {
        let label = method.label();
        match *method {
            Method::FfOriginal => {
                let runs = evaluate_on(&test, config.budget, |t| Box::new(FfEvaluator::new(t)));
                let mut row = aggregate(label, &runs);
                if !train.is_empty() {
                    let (rmse, tau) = base_h_scores(&set_for(FeatureKind::Single)?)?;
                    row.cv_rmse = Some(rmse);
                    row.cv_tau = Some(tau);
                }
                rows.push(row);
            }
            Method::Learned { kind, learner } => {
                let ts = set_for(kind)?;
                let grid = match learner {
                    Learner::Ridge => &config.ridge_grid,
                    Learner::RankSvm { .. } => &config.ranksvm_grid,
                };
                let started = Instant::now();
                let cv = loocv_select(&ts, learner, grid)?;
                let train_time = started.elapsed().as_secs_f64();
                let model = cv.model;
                let runs = evaluate_on(&test, config.budget, |t| {
                    Box::new(
                        make_learned_evaluator(t, model.clone())
                            .expect("test tasks share the domain"),
                    )
                });
                let mut row = aggregate(label.clone(), &runs);
                row.cv_rmse = Some(cv.cv_rmse);
                row.cv_tau = Some(cv.cv_tau);
                row.reg_param = Some(cv.best_param);
                row.nonzero_feats = Some(model.nonzero_count(NONZERO_THRESHOLD));
                row.total_feats = Some(model.weights.len());
                row.train_time_s = Some(train_time);
                rows.push(row);
                models.push((label, model));
            }
        }
    }
    Ok(Experiment {
        table: ReportTable { rows },
        models,
    })
}

/// Layout a method's model uses for a task.
pub fn layout_for(method: &Method, task: &GroundTask) -> Option<FeatureLayout> {
    match method {
        Method::FfOriginal => None,
        Method::Learned { kind, .. } => Some(FeatureLayout::new(*kind, task.schemas.clone())),
    }
}
