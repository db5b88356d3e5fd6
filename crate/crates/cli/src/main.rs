use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use gtlab::design::{save_design, ColumnWeight, Density, DesignSpec};
use gtlab::harness::oracle::{oracle_check, Suite};
use gtlab::harness::{masking_csv, masking_sweep, run_experiment, write_trials_csv, ExperimentConfig, SizeChoice,
    TestsChoice};
use gtlab::metrics::{threshold_curve, thresholds_csv, tests_for_rate};
use gtlab::model::k_from_theta;
use gtlab::Error;

const EXIT_PARAM: u8 = 1;
const EXIT_SUITE: u8 = 2;
const EXIT_REFUSALS: u8 = 3;

#[derive(Parser)]
#[command(name = "gtlab", version, about = "Non-adaptive group testing laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random test design and write it in the text design format.
    GenDesign(Common),
    /// Run Monte Carlo trials and write one CSV row per trial.
    Simulate(Box<Simulate>),
    /// Optimal-rate curves over a grid of theta values.
    Thresholds {
        /// Number of interior grid points in (0, 1).
        #[arg(long, default_value_t = 99)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Masked-item counts across a grid of rates.
    Masking {
        #[command(flatten)]
        common: Common,
        /// Comma-separated rates.
        #[arg(long, value_delimiter = ',', required = true)]
        rates: Vec<f64>,
    },
    /// Compare fast routines against brute-force oracles.
    OracleCheck {
        /// Suite name, or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Flat `key = value` file; flags given here take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, conflicts_with = "k")]
    theta: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, conflicts_with = "tests")]
    rate: Option<f64>,
    #[arg(long)]
    tests: Option<usize>,
    /// bernoulli, ncc or file:PATH
    #[arg(long)]
    design: Option<String>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Simulate {
    #[command(flatten)]
    common: Common,
    /// comp, dd, ml, subset or pipeline
    #[arg(long)]
    decoder: Option<String>,
    /// Decoder run after deletion in the pipeline.
    #[arg(long)]
    inner: Option<String>,
    /// combinatorial, iid, trim or pad
    #[arg(long)]
    prior: Option<String>,
    #[arg(long)]
    eta_minus: Option<f64>,
    #[arg(long)]
    eta_plus: Option<f64>,
    /// exact, subset:ETA, superset:ETA, two-sided:ETA or asymmetric:ETA-/ETA+
    #[arg(long)]
    criterion: Option<String>,
    /// ml or ddpad
    #[arg(long)]
    frontend: Option<String>,
    #[arg(long)]
    ml_cap: Option<u128>,
    #[arg(long)]
    family_cap: Option<u128>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    record_sets: bool,
    #[arg(long)]
    exact_k: bool,
    /// Fill the elapsed_us column (output is then no longer reproducible).
    #[arg(long)]
    timing: bool,
}

fn push<T: ToString>(pairs: &mut Vec<(&'static str, String)>, key: &'static str, v: &Option<T>) {
    if let Some(v) = v {
        pairs.push((key, v.to_string()));
    }
}

impl Common {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut p = Vec::new();
        push(&mut p, "n", &self.n);
        push(&mut p, "theta", &self.theta);
        push(&mut p, "k", &self.k);
        push(&mut p, "rate", &self.rate);
        push(&mut p, "tests", &self.tests);
        push(&mut p, "design", &self.design);
        push(&mut p, "nu", &self.nu);
        push(&mut p, "trials", &self.trials);
        push(&mut p, "seed", &self.seed);
        push(&mut p, "workers", &self.workers);
        p
    }

    fn config(&self, extra: Vec<(&'static str, String)>) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            cfg.apply_text(&text)?;
        }
        for (key, value) in self.pairs().into_iter().chain(extra) {
            cfg.set(key, &value)?;
        }
        Ok(cfg)
    }
}

fn output(path: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn resolve_k(cfg: &ExperimentConfig) -> anyhow::Result<usize> {
    Ok(match cfg.size {
        SizeChoice::K(k) => k,
        SizeChoice::Theta(t) => k_from_theta(cfg.n, t)?,
    })
}

fn design_spec(cfg: &ExperimentConfig) -> anyhow::Result<DesignSpec> {
    Ok(match cfg.design_label() {
        "bernoulli" => DesignSpec::Bernoulli(Density::Nu(cfg.nu)),
        "ncc" => DesignSpec::NearConstant(ColumnWeight::Nu(cfg.nu)),
        _ => bail!(Error::Param("this subcommand draws its own design; file designs are not accepted".into())),
    })
}

fn gen_design(common: &Common) -> anyhow::Result<u8> {
    let cfg = common.config(Vec::new())?;
    let k = resolve_k(&cfg)?;
    let tests = match cfg.tests {
        TestsChoice::Tests(t) => t,
        TestsChoice::Rate(r) => tests_for_rate(cfg.n, k, r)?,
    };
    let design = design_spec(&cfg)?.build(cfg.n, k, tests, cfg.master_seed)?;
    match &common.out {
        Some(path) => save_design(&design, path)?,
        None => {
            let mut out = output(&None)?;
            write!(out, "{design}")?;
            out.flush()?;
        }
    }
    Ok(0)
}

fn simulate(args: &Simulate) -> anyhow::Result<u8> {
    let mut extra = Vec::new();
    push(&mut extra, "decoder", &args.decoder);
    push(&mut extra, "inner", &args.inner);
    push(&mut extra, "prior", &args.prior);
    push(&mut extra, "eta_minus", &args.eta_minus);
    push(&mut extra, "eta_plus", &args.eta_plus);
    push(&mut extra, "criterion", &args.criterion);
    push(&mut extra, "frontend", &args.frontend);
    push(&mut extra, "ml_cap", &args.ml_cap);
    push(&mut extra, "family_cap", &args.family_cap);
    push(&mut extra, "alpha", &args.alpha);
    for (flag, key) in [(args.record_sets, "record_sets"), (args.exact_k, "exact_k"), (args.timing, "timing")] {
        if flag {
            extra.push((key, "true".into()));
        }
    }
    let cfg = args.common.config(extra)?;
    let summary = run_experiment(&cfg)?;
    let mut out = output(&args.common.out)?;
    write_trials_csv(&cfg, &summary, &mut out)?;
    out.flush()?;
    eprintln!(
        "n={} k={} T={} trials={} failures={} refused={} P_e={:.4} 95% CI [{:.4}, {:.4}]",
        summary.n,
        summary.k,
        summary.tests,
        summary.trials,
        summary.failures,
        summary.refused,
        summary.p_error,
        summary.wilson.0,
        summary.wilson.1
    );
    if summary.refused > 0 {
        eprintln!("warning: {} trial(s) refused and excluded from P_e", summary.refused);
    }
    summary.check_refusal_budget()?;
    Ok(0)
}

fn thresholds(points: usize, out: &Option<PathBuf>) -> anyhow::Result<u8> {
    if points == 0 {
        bail!(Error::Param("points must be at least 1".into()));
    }
    let grid: Vec<f64> = (1..=points).map(|i| i as f64 / (points + 1) as f64).collect();
    let curve = threshold_curve(&grid)?;
    thresholds_csv(&curve, output(out)?)?;
    Ok(0)
}

fn masking(common: &Common, rates: &[f64]) -> anyhow::Result<u8> {
    let cfg = common.config(Vec::new())?;
    let k = resolve_k(&cfg)?;
    let sweep = masking_sweep(cfg.n, k, rates, &design_spec(&cfg)?, cfg.trials, cfg.master_seed, cfg.workers)?;
    masking_csv(&sweep, output(&common.out)?)?;
    Ok(0)
}

fn oracle(suite: &str, seed: u64) -> anyhow::Result<u8> {
    let suites = if suite == "all" { Suite::ALL.to_vec() } else { vec![suite.parse::<Suite>()?] };
    let mut ok = true;
    for s in suites {
        let report = oracle_check(s, seed)?;
        println!("{report}");
        ok &= report.passed();
    }
    Ok(if ok { 0 } else { EXIT_SUITE })
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match &cli.command {
        Command::GenDesign(common) => gen_design(common),
        Command::Simulate(args) => simulate(args),
        Command::Thresholds { points, out } => thresholds(*points, out),
        Command::Masking { common, rates } => masking(common, rates),
        Command::OracleCheck { suite, seed } => oracle(suite, *seed),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::RefusalBudget { .. }) => EXIT_REFUSALS,
        _ => EXIT_PARAM,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_PARAM } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
