//! Command-line front end. Exit codes: 0 success, 1 a verification check
//! failed, 2 usage, config or runtime error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::hypothesis::{hypothesis_scan, EvalMode};
use crate::kac::{
    build_approximation_md, load_config, sample_driver, write_paths_csv, ExperimentConfig, LoadedConfig,
};
use crate::levy::{admissible_vector, classify_theta, levy_exponent, JumpLaw, LevyTriplet};
use crate::presets::load_preset;
use crate::report::{ladder_csv, report_files, write_files};
use crate::stats::{ks_ladder, verify_limit, with_workers};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "kacstroock", version, about = "Kac-Stroock approximations of complex Brownian motion")]
pub struct Cli {
    /// Print progress and timings on standard error.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print a(u), b(u), c(u) over a grid of u as CSV.
    Exponent(ExponentArgs),
    /// Print the class of each θ.
    Classify(ExperimentArgs),
    /// Evaluate the kernel hypotheses over an ε-ladder as JSON rows.
    Hypothesis(HypothesisArgs),
    /// Write sample paths of the approximation as CSV.
    Simulate(SimulateArgs),
    /// Run the Monte Carlo checks and write a report.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Poisson,
    CompoundPoisson,
    JumpDiffusion,
    Brownian,
    SymmetricStable,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    /// Experiment config file (JSON).
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in scenario, e.g. poisson-pi-half.
    #[arg(long)]
    pub preset: Option<String>,
    /// Triplet document (JSON); replaces the config's driver.
    #[arg(long, conflicts_with = "family")]
    pub triplet: Option<PathBuf>,
    /// Driver family; replaces the config's driver.
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub drift: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub scale: Option<f64>,
    /// Jump law as `size:prob,size:prob,...`.
    #[arg(long, allow_hyphen_values = true)]
    pub jumps: Option<String>,
    /// Comma-separated angles.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Vec<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub replicas: Option<u64>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Time horizon T.
    #[arg(long = "T")]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub n_out: Option<usize>,
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// Run Inadmissible angles anyway.
    #[arg(long)]
    pub allow_degenerate: bool,
    /// Degeneracy tolerance.
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ExponentArgs {
    #[command(flatten)]
    pub exp: ExperimentArgs,
    /// Explicit comma-separated u values; overrides the grid.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub u: Vec<f64>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub u_min: f64,
    #[arg(long, default_value_t = 2.0 * std::f64::consts::PI, allow_negative_numbers = true)]
    pub u_max: f64,
    #[arg(long, default_value_t = 65)]
    pub u_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Closed,
    Quadrature,
    Both,
}

#[derive(Debug, Args)]
pub struct HypothesisArgs {
    #[command(flatten)]
    pub exp: ExperimentArgs,
    #[arg(long, value_delimiter = ',', default_value = "0.4,0.2,0.1,0.05")]
    pub eps_ladder: Vec<f64>,
    /// Window start s.
    #[arg(long, default_value_t = 0.0)]
    pub from: f64,
    /// Window end t.
    #[arg(long, default_value_t = 1.0)]
    pub to: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    pub mode: ModeArg,
    /// Also write hypothesis.json here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, env = "KACSTROOCK_OUT_DIR", default_value = "out")]
    pub out_dir: PathBuf,
    /// Overwrite existing result files.
    #[arg(long)]
    pub force: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub exp: ExperimentArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    /// Also write each replica's driver path as driver_<r>.csv.
    #[arg(long)]
    pub dump_driver: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub exp: ExperimentArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    /// Also scan KS distance and tightness over these ε values.
    #[arg(long, value_delimiter = ',')]
    pub eps_ladder: Vec<f64>,
    /// Number of consecutive master seeds for the ladder.
    #[arg(long, default_value_t = 1)]
    pub ladder_seeds: u64,
}

fn jump_law(spec: Option<&str>) -> Result<JumpLaw> {
    let Some(spec) = spec else {
        return Ok(JumpLaw::unit());
    };
    let mut outcomes = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (x, p) = item
            .split_once(':')
            .ok_or_else(|| Error::validation("jumps", format!("`{item}` is not size:prob")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| Error::validation("jumps", format!("`{v}`: {e}")))
        };
        outcomes.push((parse(x)?, parse(p)?));
    }
    JumpLaw::new(outcomes)
}

fn need(v: Option<f64>, field: &str) -> Result<f64> {
    v.ok_or_else(|| Error::validation(field, format!("--{field} is required for this family")))
}

impl ExperimentArgs {
    fn flag_triplet(&self) -> Result<Option<LevyTriplet>> {
        if let Some(path) = &self.triplet {
            return Ok(Some(LevyTriplet::from_json(&std::fs::read_to_string(path)?)?));
        }
        let Some(family) = self.family else {
            return Ok(None);
        };
        let t = match family {
            Family::Poisson => LevyTriplet::poisson(need(self.rate, "rate")?)?,
            Family::CompoundPoisson => {
                LevyTriplet::compound_poisson(need(self.rate, "rate")?, jump_law(self.jumps.as_deref())?)?
            }
            Family::JumpDiffusion => LevyTriplet::jump_diffusion(
                self.drift.unwrap_or(0.0),
                self.sigma.unwrap_or(0.0),
                need(self.rate, "rate")?,
                jump_law(self.jumps.as_deref())?,
            )?,
            Family::Brownian => LevyTriplet::brownian(self.sigma.unwrap_or(1.0), self.drift.unwrap_or(0.0))?,
            Family::SymmetricStable => {
                LevyTriplet::symmetric_stable(need(self.alpha, "alpha")?, self.scale.unwrap_or(1.0))?
            }
        };
        Ok(Some(t))
    }

    fn base(&self) -> Result<Option<LoadedConfig>> {
        match (&self.config, &self.preset) {
            (Some(path), _) => {
                if !path.exists() {
                    return Err(Error::InvalidInput(format!("config file {} does not exist", path.display())));
                }
                load_config(path).map(Some)
            }
            (None, Some(name)) => load_preset(name).map(Some),
            (None, None) => Ok(None),
        }
    }

    /// The driver alone: flags win, then the config or preset.
    fn resolve_triplet(&self) -> Result<LevyTriplet> {
        if let Some(t) = self.flag_triplet()? {
            return Ok(t);
        }
        match self.base()? {
            Some(loaded) => Ok(loaded.config.triplet),
            None => Err(Error::InvalidInput(
                "no driver given: use --family, --triplet, --config or --preset".into(),
            )),
        }
    }

    /// Full experiment: config or preset, with inline flags applied on top.
    fn resolve_config(&self) -> Result<LoadedConfig> {
        let flag_triplet = self.flag_triplet()?;
        let mut cfg = match (self.base()?, flag_triplet.clone()) {
            (Some(loaded), _) => loaded.config,
            (None, Some(t)) => {
                let epsilon = self
                    .epsilon
                    .ok_or_else(|| Error::validation("epsilon", "--epsilon is required without a config"))?;
                if self.theta.is_empty() {
                    return Err(Error::validation("thetas", "--theta is required without a config"));
                }
                ExperimentConfig::new(t, self.theta.clone(), epsilon, self.t_max.unwrap_or(1.0))
            }
            (None, None) => {
                return Err(Error::InvalidInput(
                    "no experiment given: use --config, --preset or --family".into(),
                ))
            }
        };
        if let Some(t) = flag_triplet {
            cfg.triplet = t;
        }
        if !self.theta.is_empty() {
            cfg.thetas = self.theta.clone();
        }
        if let Some(e) = self.epsilon {
            cfg.epsilon = e;
        }
        if let Some(r) = self.replicas {
            cfg.replicas = r;
        }
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(t) = self.t_max {
            cfg.t_max = t;
        }
        if let Some(n) = self.n_out {
            cfg.n_out = n;
        }
        if self.grid_step.is_some() {
            cfg.grid_step = self.grid_step;
        }
        if self.tolerance.is_some() {
            cfg.tolerance = self.tolerance;
        }
        cfg.allow_degenerate |= self.allow_degenerate;
        cfg.validate()?;
        if cfg.t_max == 0.0 {
            return Err(Error::validation("T", "must be positive"));
        }
        let warnings = cfg.admissibility_warnings()?;
        Ok(LoadedConfig { config: cfg, warnings })
    }

    fn thetas(&self) -> Result<Vec<f64>> {
        if !self.theta.is_empty() {
            return Ok(self.theta.clone());
        }
        match self.base()? {
            Some(loaded) => Ok(loaded.config.thetas),
            None => Err(Error::validation("thetas", "--theta is required")),
        }
    }

    fn tolerance_for(&self, triplet: &LevyTriplet) -> f64 {
        self.tolerance.unwrap_or_else(|| triplet.default_tolerance())
    }
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn run_exponent(args: &ExponentArgs) -> Result<i32> {
    let triplet = args.exp.resolve_triplet()?;
    let tol = args.exp.tolerance_for(&triplet);
    let us: Vec<f64> = if args.u.is_empty() {
        if args.u_steps < 2 {
            return Err(Error::validation("u_steps", "must be at least 2"));
        }
        let h = (args.u_max - args.u_min) / (args.u_steps - 1) as f64;
        (0..args.u_steps).map(|k| args.u_min + k as f64 * h).collect()
    } else {
        args.u.clone()
    };
    let mut out = String::from("u,a,b,c\n");
    for u in us {
        let e = levy_exponent(u, &triplet)?;
        let c = if e.a_part > tol { e.normalization().to_string() } else { String::new() };
        let _ = writeln!(out, "{u},{},{},{c}", e.a_part, e.b_part);
    }
    print!("{out}");
    Ok(EXIT_OK)
}

fn run_classify(args: &ExperimentArgs) -> Result<i32> {
    let triplet = args.resolve_triplet()?;
    let thetas = args.thetas()?;
    let tol = args.tolerance_for(&triplet);
    if thetas.len() == 1 {
        println!("{}", classify_theta(thetas[0], &triplet, tol)?);
        return Ok(EXIT_OK);
    }
    let report = admissible_vector(&thetas, &triplet, tol)?;
    for (theta, class) in thetas.iter().zip(&report.classes) {
        println!("{theta},{class}");
    }
    if report.passed {
        println!("admissible");
    } else {
        for f in report.failures() {
            println!("not admissible: {f}");
        }
    }
    Ok(EXIT_OK)
}

fn run_hypothesis(args: &HypothesisArgs) -> Result<i32> {
    let triplet = args.exp.resolve_triplet()?;
    let thetas = args.exp.thetas()?;
    let mode = match args.mode {
        ModeArg::Closed => EvalMode::ClosedForm,
        ModeArg::Quadrature => EvalMode::Quadrature,
        ModeArg::Both => EvalMode::Both,
    };
    let scan = hypothesis_scan(&thetas, &triplet, args.from, args.to, &args.eps_ladder, mode)?;
    let mut stdout = std::io::stdout().lock();
    for row in &scan.rows {
        writeln!(stdout, "{}", serde_json::to_string(row).expect("rows serialize"))?;
    }
    for s in &scan.skipped {
        eprintln!("skipped: {s}");
    }
    for (theta, k) in &scan.h2_exponents {
        eprintln!("H2 gap ε-exponent at θ = {theta}: {k}");
    }
    if let Some(dir) = &args.out_dir {
        let mut json = serde_json::to_string_pretty(&scan.rows).expect("rows serialize");
        json.push('\n');
        write_files(dir, &[("hypothesis.json".to_string(), json.into_bytes())], args.force)?;
    }
    Ok(EXIT_OK)
}

fn run_simulate(args: &SimulateArgs, verbose: u8) -> Result<i32> {
    let loaded = args.exp.resolve_config()?;
    warn_all(&loaded.warnings);
    let cfg = loaded.config;
    let start = Instant::now();
    let replicas = with_workers(args.out.workers, || {
        use rayon::prelude::*;
        (0..cfg.replicas)
            .into_par_iter()
            .map(|r| build_approximation_md(&cfg, r))
            .collect::<Result<Vec<_>>>()
    })??;
    let mut csv = Vec::new();
    write_paths_csv(&mut csv, 0, &replicas)?;
    let meta: Vec<_> = replicas.first().map(|r| r.iter().map(|p| p.meta.clone()).collect()).unwrap_or_default();
    let sidecar = serde_json::json!({ "config": cfg.to_doc().ok(), "components": meta });
    let mut sidecar = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    sidecar.push('\n');
    let mut files = vec![
        ("paths.csv".to_string(), csv),
        ("paths.json".to_string(), sidecar.into_bytes()),
    ];
    if args.dump_driver {
        for r in 0..cfg.replicas {
            let mut buf = Vec::new();
            sample_driver(&cfg, r)?.write_csv(&mut buf)?;
            files.push((format!("driver_{r}.csv"), buf));
        }
    }
    write_files(&args.out.out_dir, &files, args.out.force)?;
    if verbose > 0 {
        eprintln!("simulated {} replicas in {:.2?}", cfg.replicas, start.elapsed());
    }
    Ok(EXIT_OK)
}

fn run_verify(args: &VerifyArgs, verbose: u8) -> Result<i32> {
    let loaded = args.exp.resolve_config()?;
    warn_all(&loaded.warnings);
    let cfg = loaded.config;
    let start = Instant::now();
    let report = verify_limit(&cfg, args.out.workers)?;
    let mut files = report_files(&report);
    if !args.eps_ladder.is_empty() {
        let seeds: Vec<u64> = (0..args.ladder_seeds.max(1)).map(|k| cfg.master_seed + k).collect();
        let rows = ks_ladder(&cfg, &args.eps_ladder, &seeds, args.out.workers)?;
        files.push(("ladder.csv".to_string(), ladder_csv(&rows)));
    }
    write_files(&args.out.out_dir, &files, args.out.force)?;
    let mut stdout = std::io::stdout().lock();
    for c in &report.checks {
        writeln!(
            stdout,
            "{:<28} {:>14.6} ± {:<10.3e} target {:<8} tol {:<10.3e} {}",
            c.name,
            c.estimate,
            c.standard_error,
            c.target,
            c.tolerance,
            if c.verdict { "pass" } else { "FAIL" }
        )?;
    }
    for k in &report.ks_records {
        writeln!(stdout, "ks[{}] {} ε={} stat={:.5} p={:.4}", k.component, k.part, k.epsilon, k.ks_stat, k.p_value)?;
    }
    if verbose > 0 {
        eprintln!("verified {} replicas in {:.2?}", cfg.replicas, start.elapsed());
    }
    Ok(if report.passed { EXIT_OK } else { EXIT_FAILED })
}

pub fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Exponent(a) => run_exponent(a),
        Command::Classify(a) => run_classify(a),
        Command::Hypothesis(a) => run_hypothesis(a),
        Command::Simulate(a) => run_simulate(a, cli.verbose),
        Command::Verify(a) => run_verify(a, cli.verbose),
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
