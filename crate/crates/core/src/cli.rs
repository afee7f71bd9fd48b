//! Command-line front end.
//!
//! Exit codes: 0 success (or solved), 1 unsolvable, 2 out of budget,
//! 3 any error including bad usage.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::features::{FeatureKind, FeatureLayout};
use crate::generators::{generate_instance, Family, GenSpec};
use crate::ground::{ground, GroundTask};
use crate::harness::{run_experiment, ExperimentConfig};
use crate::learn::{
    cross_validate, default_ranksvm_grid, default_ridge_grid, grouped_rmse, grouped_tau,
    loocv_select, Learner, LinearModel, TrainingSet,
};
use crate::par;
use crate::pddl::{parse_domain, parse_problem, DomainDef};
use crate::pipeline::{
    build_training_data, collect_plan, make_examples, write_archive, PipelineConfig,
};
use crate::search::{
    gbfs_lazy, make_learned_evaluator, Budget, Evaluator, FfEvaluator, Outcome, SearchConfig,
};

pub const EXIT_SOLVED: i32 = 0;
pub const EXIT_UNSOLVABLE: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

/// Default directory for generated files.
pub const SCRATCH_ENV: &str = "RANKPLAN_SCRATCH";

#[derive(Parser, Debug)]
#[command(
    name = "rankplan",
    version,
    about = "STRIPS planning with learned ranking heuristics"
)]
pub struct Cli {
    /// Worker threads for data-parallel steps (0 = all cores).
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic instance.
    Gen(GenArgs),
    /// Solve one problem.
    Plan(PlanArgs),
    /// Collect training data, select the regularizer by LOOCV and save a model.
    Train(TrainArgs),
    /// Score a model on problems: ranking metrics and search results.
    Eval(EvalArgs),
    /// Cross-validation table over the whole grid, without a final model.
    Xval(XvalArgs),
    /// Run a harness config and print the report table.
    Experiment(ExperimentArgs),
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long)]
    pub family: String,
    /// Size parameters, e.g. `locations=5,packages=2`.
    #[arg(long, value_delimiter = ',')]
    pub params: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory (defaults to $RANKPLAN_SCRATCH or `.`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the witness plan.
    #[arg(long)]
    pub witness: bool,
}

#[derive(Args, Debug, Clone)]
pub struct BudgetArgs {
    #[arg(long)]
    pub max_expansions: Option<u64>,
    #[arg(long)]
    pub max_seconds: Option<f64>,
}

impl BudgetArgs {
    fn budget(&self) -> Budget {
        let d = Budget::default();
        Budget {
            max_expansions: self.max_expansions.or(d.max_expansions),
            max_seconds: self.max_seconds.or(d.max_seconds),
            max_memory_bytes: d.max_memory_bytes,
        }
    }
}

#[derive(Args, Debug)]
pub struct PlanArgs {
    pub domain: PathBuf,
    pub problem: PathBuf,
    /// Learned model; plain FF when absent.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub budget: BudgetArgs,
    /// Expansion log, one `seq state-hash h queue` line per expansion.
    #[arg(long)]
    pub log_expansions: Option<PathBuf>,
    /// Plan file (defaults to the problem path with a `.plan` extension).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeaturesArg {
    Single,
    Pair,
}

impl From<FeaturesArg> for FeatureKind {
    fn from(f: FeaturesArg) -> Self {
        match f {
            FeaturesArg::Single => FeatureKind::Single,
            FeaturesArg::Pair => FeatureKind::Pairwise,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnerArg {
    Rr,
    Ranksvm,
}

#[derive(Args, Debug)]
pub struct LearnArgs {
    pub domain: PathBuf,
    #[arg(required = true)]
    pub problems: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "pair")]
    pub features: FeaturesArg,
    #[arg(long, value_enum)]
    pub learner: LearnerArg,
    /// Constrain RankSVM weights to be nonnegative.
    #[arg(long)]
    pub nonneg: bool,
    /// Regularization grid, ascending.
    #[arg(long, value_delimiter = ',')]
    pub grid: Vec<f64>,
    /// Seed for choosing training problems when there are too many.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = crate::pipeline::DEFAULT_MAX_PROBLEMS)]
    pub max_problems: usize,
    #[command(flatten)]
    pub budget: BudgetArgs,
}

impl LearnArgs {
    fn learner(&self) -> Learner {
        match self.learner {
            LearnerArg::Rr => Learner::Ridge,
            LearnerArg::Ranksvm => Learner::RankSvm {
                nonneg: self.nonneg,
            },
        }
    }

    fn grid(&self) -> Vec<f64> {
        if !self.grid.is_empty() {
            return self.grid.clone();
        }
        match self.learner {
            LearnerArg::Rr => default_ridge_grid(),
            LearnerArg::Ranksvm => default_ranksvm_grid(),
        }
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub learn: LearnArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Also store the training set (per-problem CSVs and a manifest).
    #[arg(long)]
    pub archive: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    pub model: PathBuf,
    #[arg(required = true)]
    pub problems: Vec<PathBuf>,
    #[arg(long)]
    pub domain: PathBuf,
    #[command(flatten)]
    pub budget: BudgetArgs,
}

#[derive(Args, Debug)]
pub struct XvalArgs {
    #[command(flatten)]
    pub learn: LearnArgs,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    pub config: PathBuf,
    /// CSV output (defaults to `report.csv` under $RANKPLAN_SCRATCH or `.`).
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

type CliResult = Result<i32, String>;

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<(), String> {
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn scratch_dir() -> PathBuf {
    std::env::var_os(SCRATCH_ENV).map_or_else(|| PathBuf::from("."), PathBuf::from)
}

fn load_domain(path: &Path) -> Result<DomainDef, String> {
    parse_domain(&read(path)?).map_err(|e| format!("{}:{e}", path.display()))
}

fn load_task(dom: &DomainDef, path: &Path) -> Result<GroundTask, String> {
    let prob = parse_problem(&read(path)?, dom).map_err(|e| format!("{}:{e}", path.display()))?;
    ground(dom, &prob).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_tasks(domain: &Path, problems: &[PathBuf]) -> Result<Vec<(String, GroundTask)>, String> {
    let dom = load_domain(domain)?;
    par::map(problems, |p| {
        load_task(&dom, p).map(|t| (t.name.clone(), t))
    })
    .into_iter()
    .collect()
}

fn load_model(path: &Path) -> Result<LinearModel, String> {
    LinearModel::from_text(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_ERROR
            } else {
                EXIT_SOLVED
            };
            let _ = e.print();
            return code;
        }
    };
    match par::with_jobs(cli.jobs, || dispatch(cli.command)) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_ERROR
        }
    }
}

fn dispatch(cmd: Command) -> CliResult {
    match cmd {
        Command::Gen(a) => gen(a),
        Command::Plan(a) => plan(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Xval(a) => xval(a),
        Command::Experiment(a) => experiment(a),
    }
}

fn gen(a: GenArgs) -> CliResult {
    let mut params = Vec::new();
    for p in &a.params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| format!("parameter `{p}` is not `key=value`"))?;
        let v: usize = v
            .trim()
            .parse()
            .map_err(|_| format!("parameter `{p}` needs an integer"))?;
        params.push((k.trim().to_string(), v));
    }
    let family = Family::from_params(&a.family, &params).map_err(|e| e.to_string())?;
    let inst = generate_instance(&GenSpec {
        family,
        seed: a.seed,
    })
    .map_err(|e| e.to_string())?;
    let out = a.out.unwrap_or_else(scratch_dir);
    fs::create_dir_all(&out).map_err(|e| format!("{}: {e}", out.display()))?;
    let domain_path = out.join(format!("{}-domain.pddl", family.name()));
    let problem_path = out.join(format!("{}.pddl", inst.name));
    write(&domain_path, &inst.domain_text)?;
    write(&problem_path, &inst.problem_text)?;
    println!("{}", domain_path.display());
    println!("{}", problem_path.display());
    if a.witness {
        let path = out.join(format!("{}.witness", inst.name));
        write(&path, &inst.witness_text())?;
        println!("{}", path.display());
    }
    Ok(EXIT_SOLVED)
}

fn plan(a: PlanArgs) -> CliResult {
    let dom = load_domain(&a.domain)?;
    let task = load_task(&dom, &a.problem)?;
    let mut evaluator: Box<dyn Evaluator> = match &a.model {
        Some(path) => {
            Box::new(make_learned_evaluator(&task, load_model(path)?).map_err(|e| e.to_string())?)
        }
        None => Box::new(FfEvaluator::new(&task)),
    };
    let r = gbfs_lazy(
        &task,
        evaluator.as_mut(),
        &SearchConfig {
            budget: a.budget.budget(),
            record_log: a.log_expansions.is_some(),
            ..Default::default()
        },
    );
    if let Some(path) = &a.log_expansions {
        write(path, &r.log_text())?;
    }
    let s = &r.stats;
    eprintln!(
        "{:?}: expansions {} evaluations {} generated {} time {:.3}s",
        r.outcome,
        s.expansions,
        s.evaluations,
        s.generated,
        s.runtime.as_secs_f64()
    );
    Ok(match (r.outcome, r.plan) {
        (Outcome::Solved, Some(p)) => {
            let out = a.out.unwrap_or_else(|| a.problem.with_extension("plan"));
            write(&out, &p.to_ipc(&task))?;
            println!("plan length {} written to {}", p.len(), out.display());
            EXIT_SOLVED
        }
        (Outcome::OutOfBudget, _) => EXIT_BUDGET,
        _ => EXIT_UNSOLVABLE,
    })
}

fn training_set(l: &LearnArgs) -> Result<(TrainingSet, crate::pipeline::TrainingData), String> {
    let tasks = load_tasks(&l.domain, &l.problems)?;
    let config = PipelineConfig {
        budget: l.budget.budget(),
        action_elimination: true,
        max_problems: l.max_problems,
        seed: l.seed,
    };
    let data =
        build_training_data(&tasks, l.features.into(), &config).map_err(|e| e.to_string())?;
    for id in &data.unsolved {
        eprintln!("skipping unsolved training problem {id}");
    }
    Ok((data.set.clone(), data))
}

fn train(a: TrainArgs) -> CliResult {
    let (ts, data) = training_set(&a.learn)?;
    if let Some(dir) = &a.archive {
        write_archive(dir, &data, a.learn.seed).map_err(|e| e.to_string())?;
    }
    let out = loocv_select(&ts, a.learn.learner(), &a.learn.grid()).map_err(|e| e.to_string())?;
    write(&a.out, &out.model.to_text())?;
    println!("param {:e}", out.best_param);
    println!("cv-rmse {:.6}", out.cv_rmse);
    println!("cv-tau {:.6}", out.cv_tau);
    println!("problems {}", ts.groups.len());
    println!("examples {}", ts.num_examples());
    Ok(EXIT_SOLVED)
}

fn xval(a: XvalArgs) -> CliResult {
    let (ts, _) = training_set(&a.learn)?;
    let path =
        cross_validate(&ts, a.learn.learner(), &a.learn.grid()).map_err(|e| e.to_string())?;
    println!("param,cv-rmse,cv-tau");
    for p in path {
        println!("{:e},{:.6},{:.6}", p.param, p.rmse, p.tau);
    }
    Ok(EXIT_SOLVED)
}

struct EvalRow {
    id: String,
    rmse: f64,
    tau: f64,
    outcome: Outcome,
    length: Option<usize>,
    expansions: u64,
    runtime: f64,
}

fn eval(a: EvalArgs) -> CliResult {
    let model = load_model(&a.model)?;
    let tasks = load_tasks(&a.domain, &a.problems)?;
    let budget = a.budget.budget();
    let rows = par::map(&tasks, |(id, task)| -> Result<EvalRow, String> {
        let layout = FeatureLayout {
            schemas: task.schemas.clone(),
            ..model.layout.clone()
        };
        let mut ev = make_learned_evaluator(task, model.clone()).map_err(|e| e.to_string())?;
        let (rmse, tau) = match collect_plan(task, budget) {
            Ok((plan, _)) => {
                let plan =
                    crate::pipeline::action_elimination(task, &plan).map_err(|e| e.to_string())?;
                let g = make_examples(task, &plan, &layout, id).map_err(|e| e.to_string())?;
                let ts = TrainingSet::new(layout, vec![g]).map_err(|e| e.to_string())?;
                let scores = ts.scores(|x| model.predict_raw(x).unwrap_or(f64::NAN));
                let tau = if ts.num_examples() >= 2 {
                    grouped_tau(&scores).map_err(|e| e.to_string())?
                } else {
                    f64::NAN
                };
                (grouped_rmse(&scores).map_err(|e| e.to_string())?, tau)
            }
            Err(_) => (f64::NAN, f64::NAN),
        };
        let r = gbfs_lazy(
            task,
            &mut ev,
            &SearchConfig {
                budget,
                ..Default::default()
            },
        );
        Ok(EvalRow {
            id: id.clone(),
            rmse,
            tau,
            outcome: r.outcome,
            length: r.plan.map(|p| p.len()),
            expansions: r.stats.expansions,
            runtime: r.stats.runtime.as_secs_f64(),
        })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut out = String::from("problem,rmse,tau,outcome,length,expansions,runtime-s\n");
    for r in &rows {
        let length = r.length.map(|l| l.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{:.6},{:.6},{:?},{length},{},{:.4}",
            r.id, r.rmse, r.tau, r.outcome, r.expansions, r.runtime
        )
        .unwrap();
    }
    let finite_mean = |v: Vec<f64>| {
        let f: Vec<f64> = v.into_iter().filter(|x| x.is_finite()).collect();
        crate::util::mean(&f).unwrap_or(f64::NAN)
    };
    let solved = rows.iter().filter(|r| r.outcome == Outcome::Solved).count();
    writeln!(
        out,
        "all,{:.6},{:.6},{solved}/{},,,",
        finite_mean(rows.iter().map(|r| r.rmse).collect()),
        finite_mean(rows.iter().map(|r| r.tau).collect()),
        rows.len()
    )
    .unwrap();
    print!("{out}");
    Ok(EXIT_SOLVED)
}

fn experiment(a: ExperimentArgs) -> CliResult {
    let config = ExperimentConfig::parse(&read(&a.config)?).map_err(|e| e.to_string())?;
    let exp = run_experiment(&config).map_err(|e| e.to_string())?;
    let csv = a.csv.unwrap_or_else(|| scratch_dir().join("report.csv"));
    write(&csv, &exp.table.to_csv())?;
    print!("{}", exp.table.to_text());
    Ok(EXIT_SOLVED)
}
