use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use super::calibrate::calibrate;
use super::config::{read, Experiment, ExperimentConfig, RhoInstance, VectorInstance};
use super::suites::{erdos_suite, fourier_suite, oracle_suite, stanley_suite, summarize, SuiteRow};
use crate::char_bounds::{char_bound, SLACK};
use crate::continuous::{
    continuous_invert, net_count, small_ball_bound, small_ball_mc, ContinuousOptions, NetConstants,
};
use crate::error::{Error, Result};
use crate::inverse_engine::{
    all_pass, invert, invert_budget, verify_report, Calibration, CorpusSpec, InvertOptions,
};
use crate::rational::{self, Rational};
use crate::walks::{erdos_bound, exact_distribution, rho_mod, EtaLabel};
use crate::VERSION;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

/// Caps the worker pool when set to a positive integer.
pub const THREADS_ENV: &str = "LOLAB_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "lolab",
    version,
    about = "Forward and inverse Littlewood-Offord experiments"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Exact concentration probability of a step multiset.
    Rho { file: PathBuf },
    /// Erdos bound and, with `--p`, the Fourier bounds mod `p`.
    Bound {
        file: PathBuf,
        #[arg(long)]
        p: Option<u64>,
    },
    /// Recover a GAP holding most of the steps.
    Invert {
        file: PathBuf,
        #[arg(long, conflicts_with = "n_prime", required_unless_present = "n_prime")]
        epsilon: Option<String>,
        #[arg(long = "n-prime")]
        n_prime: Option<usize>,
        #[arg(long = "C")]
        c: f64,
        /// Use this value instead of the exact DP.
        #[arg(long)]
        rho: Option<String>,
        /// Calibration file replacing the pinned constants.
        #[arg(long)]
        constants: Option<PathBuf>,
    },
    /// Monte Carlo small-ball probability of a vector instance.
    Smallball {
        file: PathBuf,
        /// Also evaluate the Fourier-side upper bound.
        #[arg(long)]
        bound: bool,
        /// Also run the continuous inverse pipeline.
        #[arg(long, requires = "n_prime")]
        invert: bool,
        #[arg(long = "n-prime")]
        n_prime: Option<usize>,
        #[arg(long = "C", default_value_t = 1.5)]
        c: f64,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long = "mc-points", default_value_t = 100_000)]
        mc_points: usize,
    },
    /// Run the forward suites named by a config.
    VerifyForward {
        config: PathBuf,
        /// Overrides `output.csv`.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Size of the beta-net pieces.
    NetCount {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        beta: String,
        #[arg(long)]
        rho: String,
        #[arg(long)]
        epsilon: String,
    },
    /// Re-measure the calibration constants on the config's corpus.
    Calibrate {
        config: PathBuf,
        /// Where to write the new constants file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Rho { .. } => "rho",
            Cmd::Bound { .. } => "bound",
            Cmd::Invert { .. } => "invert",
            Cmd::Smallball { .. } => "smallball",
            Cmd::VerifyForward { .. } => "verify-forward",
            Cmd::NetCount { .. } => "net-count",
            Cmd::Calibrate { .. } => "calibrate",
        }
    }
}

/// What a run printed and how it exits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

struct Done {
    constants: Calibration,
    result: Value,
    violation: bool,
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("values serialize") + "\n"
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body)
        .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

pub fn exit_code(e: &Error) -> i32 {
    if matches!(e.root(), Error::InvalidInput(_)) {
        EXIT_USAGE
    } else if e.is_budget() {
        EXIT_BUDGET
    } else {
        EXIT_VIOLATION
    }
}

pub fn error_json(command: &str, kind: &str, stage: Option<String>, message: &str) -> String {
    let v = json!({
        "version": VERSION,
        "command": command,
        "error": {"kind": kind, "stage": stage, "message": message},
    });
    serde_json::to_string(&v).expect("error serializes") + "\n"
}

fn threads() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::InvalidInput(format!(
                "{THREADS_ENV} must be a positive integer, got {s:?}"
            ))),
        },
    }
}

/// Parses `args` (program name first) and runs one subcommand.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Outcome {
                    code: EXIT_OK,
                    stdout: text,
                    stderr: String::new(),
                },
                _ => Outcome {
                    code: EXIT_USAGE,
                    stdout: String::new(),
                    stderr: error_json("", "usage", None, text.trim()),
                },
            };
        }
    };
    let name = cli.cmd.name();
    let fail = |e: Error| Outcome {
        code: exit_code(&e),
        stdout: String::new(),
        stderr: error_json(
            name,
            e.kind(),
            e.stage().map(|s| s.to_string()),
            &e.to_string(),
        ),
    };
    let pool = match threads() {
        Ok(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.unwrap_or(0))
            .build(),
        Err(e) => return fail(e),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => return fail(Error::InvalidInput(format!("thread pool: {e}"))),
    };
    match pool.install(|| dispatch(cli.cmd)) {
        Ok(done) => {
            let env = json!({
                "version": VERSION,
                "command": name,
                "constants": to_value(&done.constants),
                "result": done.result,
            });
            Outcome {
                code: if done.violation {
                    EXIT_VIOLATION
                } else {
                    EXIT_OK
                },
                stdout: pretty(&env),
                stderr: String::new(),
            }
        }
        Err(e) => fail(e),
    }
}

fn dispatch(cmd: Cmd) -> Result<Done> {
    match cmd {
        Cmd::Rho { file } => cmd_rho(&file),
        Cmd::Bound { file, p } => cmd_bound(&file, p),
        Cmd::Invert {
            file,
            epsilon,
            n_prime,
            c,
            rho,
            constants,
        } => cmd_invert(&file, epsilon, n_prime, c, rho, constants),
        Cmd::Smallball {
            file,
            bound,
            invert,
            n_prime,
            c,
            trials,
            mc_points,
        } => cmd_smallball(
            &file,
            bound,
            invert.then_some(n_prime).flatten(),
            c,
            trials,
            mc_points,
        ),
        Cmd::VerifyForward { config, csv } => cmd_verify_forward(&config, csv),
        Cmd::NetCount {
            n,
            beta,
            rho,
            epsilon,
        } => cmd_net_count(n, &beta, &rho, &epsilon),
        Cmd::Calibrate { config, out } => cmd_calibrate(&config, out),
    }
}

fn plain(result: Value) -> Done {
    Done {
        constants: Calibration::pinned(),
        result,
        violation: false,
    }
}

fn cmd_rho(file: &Path) -> Result<Done> {
    let inst = RhoInstance::from_json(&read(file)?)?;
    let v = inst.multiset()?;
    let dist = exact_distribution(&v, &inst.eta)?;
    let (argmax, rho) = dist
        .support
        .iter()
        .fold(None::<(i64, &Rational)>, |best, (x, p)| match best {
            Some((_, q)) if q >= p => best,
            _ => Some((*x, p)),
        })
        .expect("a walk has nonempty support");
    let lo = *dist.support.keys().next().expect("nonempty");
    let hi = *dist.support.keys().next_back().expect("nonempty");
    Ok(plain(json!({
        "n": v.len(),
        "eta": inst.eta,
        "rho": rational::format(rho),
        "rho_decimal": rational::to_f64(rho),
        "argmax": argmax,
        "support_size": dist.support.len(),
        "support_min": lo,
        "support_max": hi,
        "total_mass": rational::format(&dist.total_mass()),
    })))
}

fn cmd_bound(file: &Path, p: Option<u64>) -> Result<Done> {
    let inst = RhoInstance::from_json(&read(file)?)?;
    let v = inst.multiset()?;
    let dist = exact_distribution(&v, &inst.eta)?;
    let rho = dist.support.values().max().expect("nonempty").clone();
    let mut violation = false;
    let mut result = json!({
        "n": v.len(),
        "eta": inst.eta,
        "rho": rational::format(&rho),
        "rho_decimal": rational::to_f64(&rho),
    });
    // the Erdos bound is stated for nonzero steps with +-1 signs
    if *inst.eta.label() == EtaLabel::Bernoulli && v.values().iter().all(|&x| x != 0) {
        let b = erdos_bound(v.len());
        let holds = rho <= b;
        violation |= !holds;
        result["erdos"] = json!({
            "bound": rational::format(&b),
            "bound_decimal": rational::to_f64(&b),
            "holds": holds,
        });
    }
    if let Some(p) = p {
        if *inst.eta.label() != EtaLabel::Bernoulli {
            return Err(Error::InvalidInput("--p needs Bernoulli steps".into()));
        }
        let residues: Vec<i64> = v.values().iter().map(|&x| x.rem_euclid(p as i64)).collect();
        let r = rho_mod(&v, &inst.eta, p)?.rho;
        let cb = char_bound(&residues, p)?;
        let rf = rational::to_f64(&r);
        let product_holds = rf <= cb.product_bound + SLACK;
        let exp_holds = cb.product_bound <= cb.exp_bound + SLACK;
        violation |= !(product_holds && exp_holds);
        result["fourier"] = json!({
            "p": p,
            "rho_mod": rational::format(&r),
            "rho_mod_decimal": rf,
            "product_bound": cb.product_bound,
            "exp_bound": cb.exp_bound,
            "rho_le_product": product_holds,
            "product_le_exp": exp_holds,
        });
    }
    Ok(Done {
        constants: Calibration::pinned(),
        result,
        violation,
    })
}

fn cmd_invert(
    file: &Path,
    epsilon: Option<String>,
    n_prime: Option<usize>,
    c: f64,
    rho: Option<String>,
    constants: Option<PathBuf>,
) -> Result<Done> {
    let inst = RhoInstance::from_json(&read(file)?)?;
    if *inst.eta.label() != EtaLabel::Bernoulli {
        return Err(Error::InvalidInput(
            "invert works with Bernoulli steps".into(),
        ));
    }
    let v = inst.multiset()?;
    let constants = match constants {
        Some(path) => Calibration::from_json(&read(&path)?)?,
        None => Calibration::pinned(),
    };
    let opts = InvertOptions {
        c,
        rho: rho.as_deref().map(rational::parse).transpose()?,
        constants: constants.clone(),
    };
    let report = match (epsilon, n_prime) {
        (Some(e), None) => invert(&v, &rational::parse(&e)?, &opts)?,
        (None, Some(np)) => invert_budget(&v, np, &opts)?,
        _ => {
            return Err(Error::InvalidInput(
                "give exactly one of --epsilon, --n-prime".into(),
            ))
        }
    };
    let checks = verify_report(&report);
    let ok = all_pass(&checks);
    Ok(Done {
        constants,
        result: json!({"report": report, "checks": checks, "verified": ok}),
        violation: !ok,
    })
}

fn cmd_smallball(
    file: &Path,
    bound: bool,
    invert: Option<usize>,
    c: f64,
    trials: usize,
    mc_points: usize,
) -> Result<Done> {
    let inst = VectorInstance::from_json(&read(file)?)?;
    let v = inst.multiset()?;
    let z = inst.eta()?;
    let est = small_ball_mc(&v, inst.beta, &z, trials, &[], inst.seed)?;
    let mut violation = false;
    let mut result = json!({
        "d": inst.d,
        "n": v.n(),
        "beta": inst.beta,
        "z": inst.z,
        "seed": inst.seed,
        "estimate": est,
    });
    if bound {
        let b = small_ball_bound(&v, inst.beta, &z, mc_points, inst.seed)?;
        let holds = b.bound >= est.estimate - 3.0 * est.sigma;
        violation |= !holds;
        result["bound"] = to_value(&b);
        result["bound_dominates"] = json!(holds);
    }
    if let Some(np) = invert {
        let opts = ContinuousOptions {
            trials,
            ..ContinuousOptions::new(inst.seed)
        };
        let r = continuous_invert(&v, inst.beta, &z, np, c, &opts)?;
        violation |= !r.bullets.all();
        result["invert"] = to_value(&r);
    }
    Ok(Done {
        constants: Calibration::pinned(),
        result,
        violation,
    })
}

/// Odd `n` in the generator range that fit in `[-6, 6]`.
fn stanley_sizes(cfg: &ExperimentConfig) -> Vec<usize> {
    (cfg.generator.n_min..=cfg.generator.n_max.min(13))
        .filter(|n| n % 2 == 1)
        .collect()
}

/// Rows of every suite the experiment names, in a fixed order.
pub fn forward_rows(cfg: &ExperimentConfig) -> Result<Vec<SuiteRow>> {
    let g = &cfg.generator;
    let s = cfg.seed;
    let mut rows = Vec::new();
    let all = cfg.experiment == Experiment::Forward;
    if all || cfg.experiment == Experiment::Oracle {
        rows.extend(oracle_suite(g.count, s)?);
    }
    if all || cfg.experiment == Experiment::Erdos {
        rows.extend(erdos_suite(g.count, s.wrapping_add(1))?);
    }
    if all || cfg.experiment == Experiment::Stanley {
        rows.extend(stanley_suite(&stanley_sizes(cfg))?);
    }
    if all || cfg.experiment == Experiment::Fourier {
        rows.extend(fourier_suite(g.count, s.wrapping_add(2))?);
    }
    if cfg.experiment == Experiment::Calibrate {
        return Err(Error::InvalidInput(
            "experiment calibrate is run by the calibrate command".into(),
        ));
    }
    Ok(rows)
}

pub fn rows_csv(rows: &[SuiteRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}

fn cmd_verify_forward(config: &Path, csv_path: Option<PathBuf>) -> Result<Done> {
    let cfg = ExperimentConfig::load(config)?;
    let rows = forward_rows(&cfg)?;
    let summary = summarize(&rows);
    let failures: Vec<&SuiteRow> = rows.iter().filter(|r| !r.pass).collect();
    let csv_path = csv_path.unwrap_or_else(|| PathBuf::from(&cfg.output.csv));
    write_file(&csv_path, &rows_csv(&rows)?)?;
    let result = json!({
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "summary": summary,
        "failures": failures,
        "csv": csv_path.display().to_string(),
    });
    let report = json!({
        "version": VERSION,
        "command": "verify-forward",
        "constants": to_value(&cfg.constants),
        "result": result,
    });
    write_file(Path::new(&cfg.output.report), &pretty(&report))?;
    Ok(Done {
        constants: cfg.constants,
        result,
        violation: !failures.is_empty(),
    })
}

fn cmd_net_count(n: u64, beta: &str, rho: &str, epsilon: &str) -> Result<Done> {
    let constants = NetConstants::default();
    let count = net_count(
        n,
        &rational::parse(beta)?,
        &rational::parse(rho)?,
        &rational::parse(epsilon)?,
        &constants,
    )?;
    Ok(plain(json!({"net_constants": constants, "count": count})))
}

fn cmd_calibrate(config: &Path, out: Option<PathBuf>) -> Result<Done> {
    let cfg = ExperimentConfig::load(config)?;
    let g = &cfg.generator;
    let spec = CorpusSpec {
        seed: cfg.seed,
        count: g.count,
        c: g.c,
        n_min: g.n_min,
        n_max: g.n_max,
        epsilon: g.epsilon.clone(),
        n_prime_divisor: g.n_prime_divisor,
    };
    let report = calibrate(&cfg.constants, &spec)?;
    if let Some(path) = out {
        write_file(&path, &pretty(&to_value(&report.constants)))?;
    }
    let result = to_value(&report);
    let env = json!({
        "version": VERSION,
        "command": "calibrate",
        "constants": to_value(&cfg.constants),
        "result": result,
    });
    write_file(Path::new(&cfg.output.report), &pretty(&env))?;
    Ok(Done {
        constants: cfg.constants,
        result,
        violation: false,
    })
}
