use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};
use crlab_cli::config::{parse_seed, Config, Format, Model};
use crlab_cli::report::{checks_table, write_json, SuiteReport};
use crlab_cli::suites::{self, MassRuns};
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Numerical checks for pseudohermitian geometry, spinors, mass integrals and
/// the CR Yamabe energy expansion.
#[derive(Parser, Debug)]
#[command(name = "crlab", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Cmd {
    /// Clifford relations, key operator identities and the quartic form
    CliffordCheck,
    /// Wallis constants by recursion and by quadrature
    Alpha,
    /// Unit-sphere boundary identity against its closed form
    SphereIdentity,
    /// Vanishing connection and mass of the flat model
    FlatCheck,
    /// Curvature-derived W against the conformal-change formula
    ConformalCheck,
    /// Weitzenbock identity and its reduced form
    Weitzenbock,
    /// Complex mass integral against its closed form
    Mass,
    /// Real mass integral against its closed form
    RealMass,
    /// Quartic boundary sum and the assembled constant
    Pmt7,
    /// Green-function normalization from the flux of rho^-2n
    GreenConstant,
    /// Extremal Yamabe ratio and quotient invariance
    YamabeResidual,
    /// Level-set inclusions and binomial bounds
    LevelsetCheck,
    /// Test-function energy expansion and deficit fits
    EnergyScan,
    /// Every suite in sequence
    All,
}

impl Cmd {
    fn suite(self) -> Option<&'static str> {
        Some(match self {
            Cmd::CliffordCheck => "clifford-check",
            Cmd::Alpha => "alpha",
            Cmd::SphereIdentity => "sphere-identity",
            Cmd::FlatCheck => "flat-check",
            Cmd::ConformalCheck => "conformal-check",
            Cmd::Weitzenbock => "weitzenbock",
            Cmd::Mass => "mass",
            Cmd::RealMass => "real-mass",
            Cmd::Pmt7 => "pmt7",
            Cmd::GreenConstant => "green-constant",
            Cmd::YamabeResidual => "yamabe-residual",
            Cmd::LevelsetCheck => "levelset-check",
            Cmd::EnergyScan => "energy-scan",
            Cmd::All => return None,
        })
    }
}

#[derive(Args, Debug)]
struct Opts {
    /// Rank n of the Heisenberg group H_n (default: per suite)
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Comma-separated beta values
    #[arg(long = "betas", visible_alias = "beta", global = true, value_delimiter = ',')]
    betas: Option<Vec<f64>>,
    /// Comma-separated sphere radii Lambda
    #[arg(long = "lambdas", visible_alias = "lambda", global = true, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    /// Mass coefficient A (energy-scan accepts a comma-separated list)
    #[arg(long = "A", global = true, value_delimiter = ',')]
    a: Option<Vec<f64>>,
    /// Level-set parameter R
    #[arg(long = "R", global = true, default_value_t = 4.0)]
    r: f64,
    /// Override of the suite's primary tolerance
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// RNG seed, decimal or 0x-prefixed hex
    #[arg(long, global = true, value_parser = parse_seed, default_value = "0xC0FFEE")]
    seed: u64,
    /// Output file (a directory for `all` with csv format); stdout if absent
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// csv or json
    #[arg(long, global = true, default_value = "csv")]
    format: Format,
    /// Worker threads for parallel quadrature
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Model for the mass suites: flat, conformal or tail
    #[arg(long, global = true, default_value = "conformal")]
    model: Model,
    /// Largest n of the Wallis table
    #[arg(long = "max-n", global = true, default_value_t = 8)]
    max_n: usize,
}

fn usage_error(msg: String) -> ! {
    Cli::command().error(ErrorKind::ValueValidation, msg).exit()
}

fn validate(o: &Opts) {
    if let Some(n) = o.n {
        if !(1..=8).contains(&n) {
            usage_error(format!("--n must be in 1..=8, got {}", n));
        }
    }
    let positive = |name: &str, v: &Option<Vec<f64>>| {
        if let Some(v) = v {
            if v.is_empty() || v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                usage_error(format!("--{} needs positive finite values", name));
            }
        }
    };
    positive("betas", &o.betas);
    positive("lambdas", &o.lambdas);
    if let Some(a) = &o.a {
        if a.is_empty() || a.iter().any(|x| !x.is_finite()) {
            usage_error("--A needs finite values".into());
        }
    }
    if !(o.r.is_finite() && o.r > 0.0) {
        usage_error(format!("--R must be positive, got {}", o.r));
    }
    if let Some(t) = o.tol {
        if !(t.is_finite() && t > 0.0) {
            usage_error(format!("--tol must be positive, got {}", t));
        }
    }
    if o.workers == Some(0) {
        usage_error("--workers must be at least 1".into());
    }
    if !(1..=64).contains(&o.max_n) {
        usage_error(format!("--max-n must be in 1..=64, got {}", o.max_n));
    }
}

fn open(path: &Path) -> io::Result<Box<dyn Write>> {
    Ok(Box::new(BufWriter::new(File::create(path)?)))
}

fn output(cfg: &Config, cmd: Cmd, reports: &[SuiteReport], format: Format, out: Option<&Path>) -> io::Result<()> {
    let single = cmd != Cmd::All;
    match (format, single, out) {
        (Format::Json, _, Some(p)) => write_json(cfg, reports, single, open(p)?),
        (Format::Json, _, None) => write_json(cfg, reports, single, io::stdout().lock()),
        (Format::Csv, true, Some(p)) => reports[0].table.write_csv(open(p)?),
        (Format::Csv, true, None) => reports[0].table.write_csv(io::stdout().lock()),
        (Format::Csv, false, Some(dir)) => {
            fs::create_dir_all(dir)?;
            for r in reports {
                r.table.write_csv(open(&dir.join(format!("{}.csv", r.suite)))?)?;
            }
            checks_table(reports).write_csv(open(&dir.join("checks.csv"))?)
        }
        (Format::Csv, false, None) => checks_table(reports).write_csv(io::stdout().lock()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    validate(&cli.opts);
    let o = &cli.opts;
    if let Some(w) = o.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("error: could not start {} workers: {}", w, e);
            return ExitCode::from(1);
        }
    }
    let cfg = Config {
        n: o.n,
        betas: o.betas.clone(),
        lambdas: o.lambdas.clone(),
        a: o.a.clone(),
        r: o.r,
        tol: o.tol,
        seed: o.seed,
        model: o.model,
        max_n: o.max_n,
    };
    let reports = match cli.cmd.suite() {
        Some(name) => vec![suites::run_recorded(name, &cfg, &mut MassRuns::default())],
        None => suites::run_all(&cfg),
    };
    if let Err(e) = output(&cfg, cli.cmd, &reports, o.format, o.out.as_deref()) {
        eprintln!("error: writing report: {}", e);
        return ExitCode::from(1);
    }
    let failures: Vec<_> = reports.iter().flat_map(|r| r.failures().into_iter().map(move |c| (r.suite.as_str(), c))).collect();
    if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        for (suite, c) in &failures {
            eprintln!("FAIL {} {}", suite, c.describe());
        }
        ExitCode::from(1)
    }
}
