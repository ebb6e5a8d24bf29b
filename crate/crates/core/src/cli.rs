//! Command-line front end.
//!
//! Every subcommand prints one JSON report (stdout or `--output`). Exit codes:
//! 0 success, 1 failed validation, 2 usage or input error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::Serialize;
use serde_json::json;

use crate::bss::{margin_report, overlap_complexity, solve_exact, MarginConfig};
use crate::designs::band_epsilon;
use crate::error::{Error, Result};
use crate::experiments::{self, ExperimentConfig, ExperimentOutput, Summary};
use crate::glm::{glm_margins, glm_solve_exact, GlmConfig, GlmFamily, GlmInstance};
use crate::metric::SolveMode;
use crate::model::{read_vector_csv, DesignMatrix, LinearInstance, DEFAULT_BUDGET};
use crate::subset::ModelSubset;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "bss",
    version,
    about = "Exact best subset selection and identifiability margin diagnostics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "BSS_THREADS", default_value_t = 0)]
    pub threads: usize,

    /// Maximum number of candidate models enumerated by any exact search.
    #[arg(long, global = true, env = "BSS_BUDGET", default_value_t = DEFAULT_BUDGET)]
    pub budget: u128,

    /// Write the JSON report here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    /// Progress messages on stderr; repeat for more.
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact best subset selection on a CSV design and response.
    Solve(SolveArgs),
    /// Margins, complexities and the sufficient/necessary condition checks.
    Margins(MarginArgs),
    /// T and G complexities for one overlap.
    Complexity(ComplexityArgs),
    /// Run an experiment config and emit its tables.
    Simulate(SimulateArgs),
    /// GLM margins and, with --s-hat, GLM subset selection.
    Glm(GlmArgs),
    /// Block-design concentration check plus report invariants.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Exact,
    Greedy,
    Auto,
}

impl From<ModeArg> for SolveMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exact => SolveMode::Exact,
            ModeArg::Greedy => SolveMode::Greedy,
            ModeArg::Auto => SolveMode::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FamilyArg {
    Linear,
    Logistic,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Headerless n×p CSV.
    #[arg(long)]
    pub design: PathBuf,
    /// Response, one value per line.
    #[arg(long)]
    pub response: PathBuf,
    #[arg(long)]
    pub s_hat: usize,
}

/// Design, coefficients and how to obtain the response.
#[derive(Debug, Args)]
pub struct InstanceArgs {
    #[arg(long)]
    pub design: PathBuf,
    /// True coefficients, one value per line.
    #[arg(long)]
    pub beta: PathBuf,
    /// Observed response; without it y is drawn with --seed, or noiseless.
    #[arg(long)]
    pub response: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Seed for drawing the noise when no response is given.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct MarginArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long)]
    pub s_hat: usize,
    #[arg(long, default_value_t = 1.0)]
    pub c0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c_alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long)]
    pub fold_a_alpha: bool,
    #[arg(long, default_value_t = 0.0)]
    pub eta: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    pub mode: ModeArg,
}

#[derive(Debug, Args)]
pub struct ComplexityArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Comma-separated 0-based indices of the shared true variables; empty for none.
    #[arg(long, default_value = "")]
    pub overlap: String,
    #[arg(long)]
    pub s_hat: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    pub mode: ModeArg,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON experiment config.
    #[arg(long)]
    pub config: PathBuf,
    /// Base seed; overrides the config's.
    #[arg(long)]
    pub seed: u64,
    /// Prefix for `<prefix>.csv` (rows) and `<prefix>.summary.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the design of the first replicate of the first cell here.
    #[arg(long)]
    pub dump_design: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GlmArgs {
    #[arg(long)]
    pub design: PathBuf,
    #[arg(long)]
    pub beta: PathBuf,
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    /// Noise level of the linear family.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long)]
    pub response: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also run GLM subset selection at this size.
    #[arg(long)]
    pub s_hat: Option<usize>,
    /// Leading constant of the sufficient condition.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 0.0)]
    pub eta: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    pub mode: ModeArg,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Signal-noise correlations (comma-separated).
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub c: Vec<f64>,
    /// Noise-noise correlations (comma-separated).
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub r: Vec<f64>,
    #[arg(long, default_value_t = 4000)]
    pub n: usize,
    #[arg(long, default_value_t = 50)]
    pub p: usize,
    #[arg(long, default_value_t = 20)]
    pub seeds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub t_band: f64,
    #[arg(long, default_value_t = 1.0)]
    pub g_band: f64,
}

/// Parses `argv` (including the program name), runs it and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli).and_then(|(report, passed)| {
        emit(&cli, &report)?;
        Ok(passed)
    }) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_VALIDATION,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn emit(cli: &Cli, report: &str) -> Result<()> {
    match &cli.output {
        Some(path) => std::fs::write(path, report)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(report.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Runs a parsed command on a pool of `--threads` workers; returns the JSON
/// report and whether every validation passed.
pub fn execute(cli: &Cli) -> Result<(String, bool)> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start thread pool: {e}")))?;
    pool.install(|| dispatch(cli))
}

fn to_report<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn read_vector(path: &Path) -> Result<DVector<f64>> {
    Ok(DVector::from_vec(read_vector_csv(File::open(path)?)?))
}

fn load_instance(args: &InstanceArgs) -> Result<LinearInstance> {
    let design = DesignMatrix::load(&args.design)?;
    let beta = read_vector(&args.beta)?;
    match (&args.response, args.seed) {
        (Some(path), _) => LinearInstance::new(design, beta, args.sigma, read_vector(path)?),
        (None, Some(seed)) => LinearInstance::with_noise(design, beta, args.sigma, seed),
        (None, None) => LinearInstance::noiseless(design, beta),
    }
}

fn parse_overlap(text: &str) -> Result<ModelSubset> {
    let indices = text
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| Error::InvalidInput(format!("bad overlap index '{t}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ModelSubset::new(indices))
}

fn log(cli: &Cli, level: u8, msg: impl FnOnce() -> String) {
    if cli.verbose >= level {
        eprintln!("{}", msg());
    }
}

fn dispatch(cli: &Cli) -> Result<(String, bool)> {
    match &cli.command {
        Command::Solve(a) => {
            let design = DesignMatrix::load(&a.design)?;
            let y = read_vector(&a.response)?;
            if y.len() != design.n() {
                return Err(Error::DimensionMismatch {
                    context: "response",
                    expected: design.n(),
                    found: y.len(),
                });
            }
            // the solver only reads X and y; any nonzero placeholder β works
            let mut beta = DVector::zeros(design.p());
            beta[0] = 1.0;
            let inst = LinearInstance::new(design, beta, 0.0, y)?;
            log(cli, 1, || {
                format!("solving over {} columns at size {}", inst.p(), a.s_hat)
            });
            Ok((to_report(&solve_exact(&inst, a.s_hat, cli.budget)?)?, true))
        }
        Command::Margins(a) => {
            let inst = load_instance(&a.instance)?;
            let cfg = MarginConfig {
                c0: a.c0,
                c1: a.c1,
                c_alpha: a.c_alpha,
                alpha: a.alpha,
                fold_a_alpha: a.fold_a_alpha,
                eta: a.eta,
                budget: cli.budget,
                mode: a.mode.into(),
            };
            Ok((to_report(&margin_report(&inst, a.s_hat, &cfg)?)?, true))
        }
        Command::Complexity(a) => {
            let inst = load_instance(&a.instance)?;
            let overlap = parse_overlap(&a.overlap)?;
            let oc = overlap_complexity(&inst, &overlap, a.s_hat, cli.budget, a.mode.into())?;
            Ok((to_report(&oc)?, true))
        }
        Command::Simulate(a) => simulate(cli, a),
        Command::Glm(a) => {
            let design = DesignMatrix::load(&a.design)?;
            let beta = read_vector(&a.beta)?;
            let family = match a.family {
                FamilyArg::Linear => GlmFamily::Linear { sigma: a.sigma },
                FamilyArg::Logistic => GlmFamily::Logistic,
            };
            let inst = match (&a.response, a.seed) {
                (Some(path), _) => GlmInstance::new(design, beta, family, read_vector(path)?)?,
                (None, Some(seed)) => GlmInstance::simulate(design, beta, family, seed)?,
                (None, None) => {
                    return Err(Error::InvalidInput("glm needs --response or --seed".into()));
                }
            };
            let cfg = GlmConfig {
                c: a.c,
                eta: a.eta,
                budget: cli.budget,
                mode: a.mode.into(),
            };
            let margins = glm_margins(&inst, &cfg)?;
            let bss = a
                .s_hat
                .map(|k| glm_solve_exact(&inst, k, cli.budget))
                .transpose()?;
            Ok((to_report(&json!({ "margins": margins, "bss": bss }))?, true))
        }
        Command::Validate(a) => {
            let mut cfg =
                ExperimentConfig::closed_form_default(a.c.clone(), a.r.clone(), a.seeds, a.seed);
            cfg.n = a.n;
            cfg.p = a.p;
            cfg.t_band = a.t_band;
            cfg.g_band = a.g_band;
            cfg.budget = cli.budget;
            log(cli, 1, || {
                format!("band epsilon = {:.6}", band_epsilon(a.n, a.p))
            });
            let out = experiments::closed_form_validation(&cfg)?;
            let invariants_ok = rows_satisfy_invariants(&out);
            let passed = out.summary.passed() && invariants_ok;
            let report = json!({
                "summary": out.summary,
                "invariants_ok": invariants_ok,
                "passed": passed,
            });
            Ok((to_report(&report)?, passed))
        }
    }
}

/// `d ≤ ℰ ≤ D` and `d/2 ≤ ℰ* ≤ ℰ` on every row that measured complexities.
pub fn rows_satisfy_invariants(out: &ExperimentOutput) -> bool {
    const TOL: f64 = 1e-12;
    let chain =
        |d: Option<f64>, e: Option<f64>, es: Option<f64>, big: Option<f64>| match (d, e, es, big) {
            (Some(d), Some(e), Some(es), Some(big)) => {
                d <= e + TOL && e <= big + TOL && d / 2.0 <= es + TOL && es <= e + TOL
            }
            _ => true,
        };
    out.rows.iter().all(|r| {
        chain(r.d_t, r.e_t, r.e_t_star, r.diam_t) && chain(r.d_g, r.e_g, r.e_g_star, r.diam_g)
    })
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> Result<(String, bool)> {
    let text = std::fs::read_to_string(&a.config)?;
    let mut cfg: ExperimentConfig = serde_json::from_str(&text)?;
    cfg.base_seed = a.seed;
    cfg.budget = cfg.budget.min(cli.budget);
    cfg.validate()?;
    log(cli, 1, || {
        format!(
            "running {:?} with base seed {}",
            cfg.experiment, cfg.base_seed
        )
    });
    if let Some(path) = &a.dump_design {
        let (c, r) = if cfg.equicorrelated {
            (cfg.r_values[0], cfg.r_values[0])
        } else {
            (cfg.c_values[0], cfg.r_values[0])
        };
        let seed = experiments::cell_seed(cfg.base_seed, c, r, 0);
        let spec = if cfg.equicorrelated {
            crate::designs::DesignSpec::equicorrelated(cfg.p, r, seed)?
        } else {
            crate::designs::DesignSpec::block(cfg.p, c, r, seed)?
        };
        spec.normalized(cfg.normalize).sample(cfg.n)?.save(path)?;
    }
    let out = experiments::run(&cfg)?;
    let mut files = Vec::new();
    if let Some(prefix) = &a.out {
        let rows_path = with_suffix(prefix, ".csv");
        let summary_path = with_suffix(prefix, ".summary.csv");
        out.write_rows_csv(BufWriter::new(File::create(&rows_path)?))?;
        out.write_summary_csv(BufWriter::new(File::create(&summary_path)?))?;
        files.push(rows_path.display().to_string());
        files.push(summary_path.display().to_string());
    }
    let passed = out.summary.passed() && rows_satisfy_invariants(&out);
    let report = json!({
        "config": out.config,
        "summary": out.summary,
        "files": files,
        "passed": passed,
    });
    if let Summary::Recovery { points } = &out.summary {
        log(cli, 1, || {
            points
                .iter()
                .map(|p| format!("r = {}: rate {}", p.r, p.rate))
                .collect::<Vec<_>>()
                .join("\n")
        });
    }
    Ok((to_report(&report)?, passed))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}
