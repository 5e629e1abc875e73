use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use superent::bounds::{default_trials, run_suite, suite_names};
use superent::channels::{ChannelJson, ThermalMap};
use superent::divergences::{channel_divergence, channel_entropy, channel_entropy_beta, DivergenceResult, Method};
use superent::linalg::{fidelity, hermitize, trace_norm, MatrixJson};
use superent::recovery::{petz, universal_recovery};
use superent::superchannels::SuperchannelJson;
use superent::{CMat, Channel, Error, Report, RunConfig, Superchannel};

#[derive(Parser)]
#[command(name = "superent", version, about = "Channel entropy, superchannels and recovery bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON file mirroring RunConfig.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Optimizer restarts.
    #[arg(long, global = true)]
    restarts: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Channel entropy S[N], or S_β[N] with --thermal.
    Entropy {
        channel: PathBuf,
        /// JSON {"hamiltonian": matrix, "beta": f64}.
        #[arg(long)]
        thermal: Option<PathBuf>,
    },
    /// Channel relative entropy D[N‖M].
    Divergence { n: PathBuf, m: PathBuf },
    /// Θ(N) as channel JSON.
    ApplySuper { superchannel: PathBuf, channel: PathBuf },
    /// Recover a state with the Petz and/or universal recovery of (σ, N).
    Recover {
        sigma: PathBuf,
        channel: PathBuf,
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Both)]
        mode: Mode,
        /// State to compare the recovered state against.
        #[arg(long)]
        original: Option<PathBuf>,
    },
    /// Run a verification suite.
    Verify {
        suite: String,
        #[arg(long)]
        trials: Option<usize>,
        /// Also write a CSV projection of the report.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Merge and summarize report files.
    Report {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Petz,
    Universal,
    Both,
}

enum Failure {
    Usage(String),
    Semantic(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Json(_) => Failure::Usage(e.to_string()),
            _ => Failure::Semantic(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_channel(path: &Path) -> CliResult<Channel> {
    let j: ChannelJson = read_json(path)?;
    Channel::try_from(j).map_err(|e| Failure::Semantic(format!("{}: {e}", path.display())))
}

fn load_super(path: &Path) -> CliResult<Superchannel> {
    let j: SuperchannelJson = read_json(path)?;
    Superchannel::try_from(j).map_err(|e| Failure::Semantic(format!("{}: {e}", path.display())))
}

fn load_matrix(path: &Path) -> CliResult<CMat> {
    let j: MatrixJson = read_json(path)?;
    CMat::try_from(j).map_err(|e| Failure::Semantic(format!("{}: {e}", path.display())))
}

fn load_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg: RunConfig = match &cli.config {
        Some(p) => read_json(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
        cfg.optimizer.seed = s;
    }
    if let Some(r) = cli.restarts {
        cfg.optimizer.restarts = r;
    }
    if let Some(o) = &cli.out {
        cfg.output_path = Some(o.display().to_string());
    }
    cfg.validate().map_err(|e| Failure::Usage(format!("config: {e}")))?;
    Ok(cfg)
}

fn emit(cfg: &RunConfig, value: &impl Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Semantic(e.to_string()))?;
    match &cfg.output_path {
        Some(p) => fs::write(p, text + "\n").map_err(|e| Failure::Usage(format!("{p}: {e}"))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn method_tag(m: Method, beta: bool) -> &'static str {
    match m {
        _ if beta => "beta",
        Method::ClosedFormCovariant | Method::ClosedFormReplacer => "telecov",
        Method::Optimized | Method::Infinite => "opt",
    }
}

fn value_json(d: &DivergenceResult, beta: bool) -> Value {
    json!({
        "value": superent_value(d.value),
        "witness": MatrixJson::from(&d.optimizer_state.a_psi),
        "method": method_tag(d.method, beta),
        "result": d,
    })
}

fn superent_value(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    suite: &'a str,
    check_id: &'a str,
    trial: Option<u64>,
    seed: u64,
    lhs: f64,
    rhs: f64,
    slack: f64,
    tolerance: f64,
    pass: bool,
    skipped: bool,
    note: &'a str,
}

fn write_csv(path: &Path, report: &Report) -> CliResult<()> {
    let io = |e: csv::Error| Failure::Usage(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for rec in &report.records {
        w.serialize(CsvRow {
            suite: &report.summary.suite,
            check_id: &rec.check_id,
            trial: rec.params.get("trial").and_then(Value::as_u64),
            seed: rec.seed,
            lhs: rec.lhs,
            rhs: rec.rhs,
            slack: rec.slack,
            tolerance: rec.tolerance,
            pass: rec.pass,
            skipped: rec.skipped,
            note: rec.note.as_deref().unwrap_or(""),
        })
        .map_err(io)?;
    }
    w.flush().map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn summarize(report: &Report) {
    let s = &report.summary;
    eprintln!(
        "{}: {} records, {} pass, {} fail, {} skipped, min slack {}",
        s.suite,
        s.trials,
        s.passes,
        s.failures,
        s.skipped,
        s.min_slack.map_or("n/a".into(), |v| format!("{v:.3e}"))
    );
}

fn run(cli: &Cli) -> CliResult<ExitCode> {
    let cfg = load_config(cli)?;
    let opts = cfg.optimizer.clone();
    match &cli.command {
        Command::Entropy { channel, thermal } => {
            let n = load_channel(channel)?;
            let out = match thermal {
                Some(t) => {
                    let th: ThermalMap = read_json(t)?;
                    value_json(&channel_entropy_beta(&n, &th, &opts)?, true)
                }
                None => value_json(&channel_entropy(&n, &opts)?, false),
            };
            emit(&cfg, &out)?;
        }
        Command::Divergence { n, m } => {
            let (n, m) = (load_channel(n)?, load_channel(m)?);
            emit(&cfg, &value_json(&channel_divergence(&n, &m, &opts)?, false))?;
        }
        Command::ApplySuper { superchannel, channel } => {
            let theta = load_super(superchannel)?;
            let n = load_channel(channel)?;
            emit(&cfg, &theta.apply(&n)?)?;
        }
        Command::Recover { sigma, channel, input, mode, original } => {
            let sigma = load_matrix(sigma)?;
            let n = load_channel(channel)?;
            let x = load_matrix(input)?;
            if x.shape() != (n.dim_out, n.dim_out) {
                return Err(Failure::Semantic(format!(
                    "input is {}x{} but the channel outputs dimension {}",
                    x.nrows(),
                    x.ncols(),
                    n.dim_out
                )));
            }
            superent::channels::require_state(&x, cfg.tolerances.psd_tol.max(1e-8))?;
            let original = original.as_deref().map(load_matrix).transpose()?;
            let mut outputs = Vec::new();
            let modes: &[&str] = match mode {
                Mode::Petz => &["petz"],
                Mode::Universal => &["universal"],
                Mode::Both => &["petz", "universal"],
            };
            for &m in modes {
                let rec = if m == "petz" { petz(&sigma, &n)? } else { universal_recovery(&sigma, &n, &cfg.quadrature)? };
                let state = hermitize(&rec.apply(&x)?);
                let mut entry = json!({
                    "mode": m,
                    "state": MatrixJson::from(&state),
                    "recovery_tp_residual": rec.tp_residual(),
                });
                if let Some(o) = &original {
                    if o.shape() != state.shape() {
                        return Err(Failure::Semantic("original state has the wrong dimension".into()));
                    }
                    entry["fidelity"] = json!(fidelity(&state, o)?);
                    entry["trace_distance"] = json!(0.5 * trace_norm(&(&state - o)));
                }
                outputs.push(entry);
            }
            emit(&cfg, &json!({ "outputs": outputs }))?;
        }
        Command::Verify { suite, trials, csv } => {
            if !suite_names().contains(&suite.as_str()) {
                return Err(Failure::Usage(format!("unknown suite '{suite}'; known: {}", suite_names().join(", "))));
            }
            let trials = trials.or(default_trials(suite)).unwrap_or(1);
            let report = run_suite(suite, trials, &cfg)?;
            emit(&cfg, &report)?;
            if let Some(p) = csv {
                write_csv(p, &report)?;
            }
            summarize(&report);
            return Ok(if report.all_pass() { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
        Command::Report { reports, csv } => {
            let parts = reports.iter().map(|p| read_json::<Report>(p)).collect::<CliResult<Vec<_>>>()?;
            let name = if parts.len() == 1 { parts[0].summary.suite.clone() } else { "merged".into() };
            let report = Report::merge(name, parts, cfg.hash());
            emit(&cfg, &report)?;
            if let Some(p) = csv {
                write_csv(p, &report)?;
            }
            summarize(&report);
            return Ok(if report.all_pass() { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Semantic(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
