//! Command-line front end: parses configurations, runs the engine or a
//! study, and writes every artifact into one output directory.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use pglo::bench::{macro_study, Problem, StudyConfig, Variant, PROBLEM_NAMES};
use pglo::engine::{run, RunConfig, RunOutcome, RunState};
use pglo::rng::stream;
use pglo::surrogate::{partition_space, AglgpModel, FitOptions, ModelSnapshot, RegionPartition, DEFAULT_NOISE_FLOOR};
use pglo::PgloError;

#[derive(Debug, Parser)]
#[command(name = "pglo", version, about = "Parallel global and local optimization of noisy black-box functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one optimization.
    Run(RunArgs),
    /// Run several algorithm variants over many seeds.
    Study(StudyArgs),
    /// Print leave-one-out diagnostics of a saved model.
    ValidateModel(ValidateArgs),
    /// List the benchmark problems.
    ListProblems,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (default: a timestamped directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override one configuration key, e.g. `--set q=4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Number of seeds (seeds 1..=N), or a comma-separated list.
    #[arg(long, default_value = "30")]
    pub seeds: String,
    /// Comma-separated variants such as `pglo:1,pglo:4,multpps-lhs:1`.
    #[arg(long, default_value = "pglo:1,multpps-lhs:1")]
    pub variants: String,
    /// Runs executed concurrently (default: available cores).
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Directory written by `pglo run`.
    #[arg(long)]
    pub dir: PathBuf,
}

/// Failures mapped onto process exit codes.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    ModelFit(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::ModelFit(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::ModelFit(m) => write!(f, "model fit error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<PgloError> for CliError {
    fn from(e: PgloError) -> Self {
        match e {
            PgloError::Config(m) => CliError::Config(m),
            PgloError::Domain(_) => CliError::Config(e.to_string()),
            PgloError::ModelFit { .. } | PgloError::Acquisition(_) => CliError::ModelFit(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

/// Reads the optional config file, applies the seed and `key=value`
/// overrides, fills defaults and validates.
pub fn parse_config(path: Option<&Path>, seed: Option<u64>, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut config = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        config.seed = s;
    }
    for item in overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override '{item}' is not of the form key=value")))?;
        config.apply_override(key.trim(), value.trim())?;
    }
    Ok(config.resolve()?)
}

fn output_dir(out: Option<&Path>, command: &str) -> Result<PathBuf, CliError> {
    let dir = match out {
        Some(p) => p.to_path_buf(),
        None => {
            let secs = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            PathBuf::from(format!("pglo-{command}-{secs}"))
        }
    };
    std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    Ok(dir)
}

/// Fits a model on the final archive of a run, for later validation.
fn final_model(state: &RunState, config: &RunConfig) -> Result<AglgpModel, PgloError> {
    let partition = if state.centroids.is_empty() {
        partition_space(&state.archive.locations(), config.k, &mut stream(config.seed, "kmeans", &[u64::MAX]))?
    } else {
        RegionPartition::from_centroids(state.centroids.clone())
    };
    let m = config.m.min(state.archive.len());
    let options = FitOptions { starts: config.hyper_starts, seed: config.seed, noise_floor: DEFAULT_NOISE_FLOOR };
    AglgpModel::fit(&state.archive, &partition, m, &options)
}

pub fn write_run(dir: &Path, outcome: &RunOutcome) -> Result<(), CliError> {
    write(&dir.join("config.json"), &to_json(&outcome.summary.config))?;
    write(&dir.join("trace.csv"), &outcome.trace.to_csv())?;
    write(&dir.join("summary.json"), &to_json(&outcome.summary))?;
    write(&dir.join("state.json"), &to_json(&outcome.state))?;
    Ok(())
}

pub fn cmd_run(args: &RunArgs) -> Result<String, CliError> {
    let c = &args.common;
    let config = parse_config(c.config.as_deref(), c.seed, &c.overrides)?;
    let dir = output_dir(c.out.as_deref(), "run")?;
    write(&dir.join("config.json"), &to_json(&config))?;
    let outcome = run(&config)?;
    write_run(&dir, &outcome)?;
    let mut notes = String::new();
    match final_model(&outcome.state, &config) {
        Ok(model) => write(&dir.join("model.json"), &to_json(&model.snapshot()))?,
        Err(e) => notes = format!("\nfinal model not saved: {e}"),
    }
    let s = &outcome.summary;
    Ok(format!(
        "incumbent {:?} mean {} true_f {} relative_error {:.6} success {} evaluations {}{notes}\noutput {}",
        s.incumbent,
        s.incumbent_mean,
        s.true_f,
        s.relative_error,
        s.success,
        s.evaluations,
        dir.display()
    ))
}

/// `"5"` means seeds 1..=5; `"3,7,11"` lists seeds explicitly.
pub fn parse_seeds(spec: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::Config(format!("invalid seed specification '{spec}'"));
    if spec.contains(',') {
        spec.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
    } else {
        let n: u64 = spec.trim().parse().map_err(|_| bad())?;
        if n == 0 {
            return Err(bad());
        }
        Ok((1..=n).collect())
    }
}

pub fn cmd_study(args: &StudyArgs) -> Result<String, CliError> {
    let c = &args.common;
    let template = parse_config(c.config.as_deref(), c.seed, &c.overrides)?;
    let seeds = parse_seeds(&args.seeds)?;
    let variants = args.variants.split(',').map(|v| Variant::parse(v.trim())).collect::<Result<Vec<_>, _>>()?;
    let jobs = args.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let dir = output_dir(c.out.as_deref(), "study")?;
    write(&dir.join("config.json"), &to_json(&template))?;
    let result = macro_study(&StudyConfig { template, seeds, variants, jobs })?;
    result.write_to(&dir).map_err(|e| io_err(&dir, e))?;
    let mut out = result.summary_csv();
    out.push_str(&format!("output {}", dir.display()));
    Ok(out)
}

pub fn cmd_validate(args: &ValidateArgs) -> Result<String, CliError> {
    let read = |name: &str| -> Result<String, CliError> {
        let p = args.dir.join(name);
        std::fs::read_to_string(&p).map_err(|e| io_err(&p, e))
    };
    let state: RunState =
        serde_json::from_str(&read("state.json")?).map_err(|e| CliError::Config(format!("state.json: {e}")))?;
    let snapshot: ModelSnapshot =
        serde_json::from_str(&read("model.json")?).map_err(|e| CliError::Config(format!("model.json: {e}")))?;
    let model = AglgpModel::from_snapshot(&snapshot, &state.archive, DEFAULT_NOISE_FLOOR)?;
    let diag = model.loocv_validate()?;
    Ok(format!(
        "points {}\nrmse {}\nresponse_range {}\nwithin_three {}",
        snapshot.n_points, diag.rmse, diag.response_range, diag.within_three
    ))
}

pub fn cmd_list_problems() -> String {
    let mut out = String::from("name\tdim\tbox\toptimum\tf*\n");
    for name in PROBLEM_NAMES {
        let p = Problem::by_name(name, None, None).expect("listed problems exist");
        let f_star = p.user_value(p.f_star);
        let sense = if p.maximize { " (max)" } else { "" };
        out.push_str(&format!(
            "{name}\t{}\t[{}, {}]^{}\t{:?}\t{f_star}{sense}\n",
            p.dim(),
            p.bounds.lower[0],
            p.bounds.upper[0],
            p.dim(),
            p.optima[0]
        ));
    }
    out
}

/// Runs the CLI and returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let quiet = match &cli.command {
        Command::Run(a) => a.common.quiet,
        Command::Study(a) => a.common.quiet,
        _ => false,
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Study(a) => cmd_study(a),
        Command::ValidateModel(a) => cmd_validate(a),
        Command::ListProblems => Ok(cmd_list_problems()),
    };
    match result {
        Ok(text) => {
            if !quiet {
                println!("{}", text.trim_end());
            }
            0
        }
        Err(e) => {
            eprintln!("pglo: {e}");
            e.exit_code()
        }
    }
}
