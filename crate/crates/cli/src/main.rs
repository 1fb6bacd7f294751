use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use qmle::estimate::{estimate_with, Likelihood, OptimizerConfig, OptimizerKind};
use qmle::exec::Exec;
use qmle::io::{read_records, write_records, EstimateFile, RecordHeader};
use qmle::povm::{Cutoffs, MeasurementRecord, Scheme, SchemeConfig};
use qmle::report::{density_csv, metrics_csv, target_metrics};
use qmle::simulate::{simulate, SettingPolicy, SimulationSpec};
use qmle::states::StateSpec;
use qmle::uncertainty::{uncertainty, CovarianceReport};

const EXIT_IO: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;
const EXIT_NOT_MAXIMUM: u8 = 3;

/// Simulated quantum state tomography by maximum likelihood.
#[derive(Parser)]
#[command(name = "qmle", version)]
struct Cli {
    /// Worker threads for the data-parallel loops.
    #[arg(long, env = "QMLE_THREADS", global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a JSONL record file.
    Simulate(SimulateArgs),
    /// Reconstruct the density matrix from a record file.
    Estimate(EstimateArgs),
    /// Error bars for an estimate.
    Uncertainty(UncertaintyArgs),
    /// CSV tables of an estimate, with optional comparison to a target.
    Report(ReportArgs),
}

#[derive(Args, Clone)]
struct SchemeFlags {
    /// homodyne1, homodyne2, spinpair or spin.
    #[arg(long)]
    scheme: Option<Scheme>,
    /// Detector efficiency in (0, 1].
    #[arg(long)]
    eta: Option<f64>,
    /// Fock cutoff `M`, or `M1,M2` for two modes.
    #[arg(long, value_parser = parse_cutoff)]
    cutoff: Option<Cutoffs>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    scheme: SchemeFlags,
    /// coherent:RE[,IM], squeezed:MEAN_PHOTON, bell:psi1|psi2, singlet,
    /// custom:A,B,... or a JSON object.
    #[arg(long)]
    state: StateSpec,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    input: PathBuf,
    /// Must agree with the record-file header when given.
    #[command(flatten)]
    scheme: SchemeFlags,
    #[arg(long, default_value = "simplex")]
    optimizer: OptimizerKind,
    /// Iteration cap per optimizer run.
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, default_value_t = 1e-8)]
    ftol: f64,
    #[arg(long, default_value_t = 3)]
    restarts: usize,
    /// Report fidelity and trace distance against this state.
    #[arg(long)]
    target: Option<StateSpec>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct UncertaintyArgs {
    /// The record file the estimate was computed from.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    result: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    result: PathBuf,
    #[arg(long)]
    errors: Option<PathBuf>,
    #[arg(long)]
    target: Option<StateSpec>,
    /// Record file supplying the scheme for `--target`.
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    scheme: SchemeFlags,
    #[arg(long)]
    out_dir: PathBuf,
}

fn parse_cutoff(s: &str) -> std::result::Result<Cutoffs, String> {
    let parts: Vec<&str> = s.split([',', 'x']).map(str::trim).collect();
    let num = |p: &str| p.parse::<usize>().map_err(|e| format!("bad cutoff `{s}`: {e}"));
    match parts.as_slice() {
        [m] => Ok(Cutoffs::Single(num(m)?)),
        [a, b] => Ok(Cutoffs::PerMode(num(a)?, num(b)?)),
        _ => Err(format!("cutoff must be `M` or `M1,M2`, got `{s}`")),
    }
}

impl SchemeFlags {
    fn is_empty(&self) -> bool {
        self.scheme.is_none() && self.eta.is_none() && self.cutoff.is_none()
    }

    /// Complete configuration from flags alone, with per-scheme defaults for
    /// the spin schemes.
    fn config(&self) -> Result<SchemeConfig> {
        let scheme = self.scheme.context("--scheme is required")?;
        let cfg = match scheme {
            Scheme::Spinpair => SchemeConfig::spin_pair(),
            Scheme::Spin => SchemeConfig::spin(),
            Scheme::Homodyne1 | Scheme::Homodyne2 => SchemeConfig {
                scheme,
                eta: self.eta.context("--eta is required for homodyne schemes")?,
                cutoff: self.cutoff.context("--cutoff is required for homodyne schemes")?,
            },
        };
        let cfg = SchemeConfig {
            eta: self.eta.unwrap_or(cfg.eta),
            cutoff: self.cutoff.unwrap_or(cfg.cutoff),
            ..cfg
        };
        Ok(cfg.validated()?)
    }

    fn check_against(&self, cfg: &SchemeConfig) -> Result<()> {
        if let Some(s) = self.scheme {
            if s != cfg.scheme {
                bail!("--scheme {s} does not match the record file ({})", cfg.scheme);
            }
        }
        if let Some(e) = self.eta {
            if e != cfg.eta {
                bail!("--eta {e} does not match the record file ({})", cfg.eta);
            }
        }
        if let Some(c) = self.cutoff {
            if c != cfg.cutoff {
                bail!("--cutoff {c:?} does not match the record file ({:?})", cfg.cutoff);
            }
        }
        Ok(())
    }
}

fn load_records(path: &Path) -> Result<(RecordHeader, SchemeConfig, Vec<MeasurementRecord>)> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let (header, records) =
        read_records(BufReader::new(file)).with_context(|| format!("cannot read {}", path.display()))?;
    let cfg = header.scheme_config()?;
    Ok((header, cfg, records))
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn cmd_simulate(args: SimulateArgs) -> Result<u8> {
    let cfg = args.scheme.config()?;
    let spec = SimulationSpec {
        state: args.state.clone(),
        scheme: cfg,
        n: args.n,
        seed: args.seed,
        settings: SettingPolicy::Random,
    };
    let sim = simulate(&spec, Exec::default())?;
    let header = RecordHeader {
        scheme: cfg.scheme,
        eta: cfg.eta,
        cutoff: cfg.cutoff,
        seed: Some(args.seed),
        n: args.n,
        true_state: Some(args.state),
    };
    let file = File::create(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    write_records(BufWriter::new(file), &header, &sim.records)?;
    println!(
        "simulated {} {} records (state {}, eta {}, seed {}) -> {}",
        args.n,
        cfg.scheme,
        serde_json::to_string(header.true_state.as_ref().unwrap())?,
        cfg.eta,
        args.seed,
        args.out.display()
    );
    Ok(0)
}

fn cmd_estimate(args: EstimateArgs) -> Result<u8> {
    let (_, cfg, records) = load_records(&args.input)?;
    args.scheme.check_against(&cfg)?;
    let target = args.target.as_ref().map(|t| t.build(&cfg)).transpose()?;
    let opt = OptimizerConfig {
        max_iter: args.max_iter,
        ftol: args.ftol,
        restarts: args.restarts,
        kind: args.optimizer,
        ..Default::default()
    };
    opt.validate()?;
    let lik = Likelihood::new(&records, &cfg, Exec::default())?;
    let res = estimate_with(&lik, &opt)?;
    write_json(&args.out, &EstimateFile::from(&res))?;
    println!(
        "log-likelihood {} after {} iterations ({})",
        res.loglik,
        res.iterations,
        if res.converged { "converged" } else { "not converged" }
    );
    if let Some(t) = target {
        let m = target_metrics(&res.density, &t)?;
        println!("fidelity {} trace distance {}", m.fidelity, m.trace_distance);
    }
    Ok(if res.converged { 0 } else { EXIT_NOT_CONVERGED })
}

fn cmd_uncertainty(args: UncertaintyArgs) -> Result<u8> {
    let (_, cfg, records) = load_records(&args.input)?;
    let est: EstimateFile = load_json(&args.result)?;
    if est.dim() != cfg.dim() {
        bail!("result dimension {} does not match the record file ({})", est.dim(), cfg.dim());
    }
    let lik = Likelihood::new(&records, &cfg, Exec::default())?;
    match uncertainty(&est.params()?, &lik, Exec::default()) {
        Ok(rep) => {
            write_json(&args.out, &rep)?;
            println!(
                "condition number {:e}, {} null directions",
                rep.condition_number, rep.null_directions
            );
            Ok(0)
        }
        Err(e @ qmle::Error::NotAMaximum(_)) => {
            eprintln!("error: {e}; the input is not a likelihood maximum");
            Ok(EXIT_NOT_MAXIMUM)
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_report(args: ReportArgs) -> Result<u8> {
    let est: EstimateFile = load_json(&args.result)?;
    let rho = est.density()?;
    let errors: Option<CovarianceReport> = args.errors.as_deref().map(load_json).transpose()?;
    if let Some(e) = &errors {
        if e.std_re.len() != est.dim() {
            bail!("error file dimension does not match the result");
        }
    }
    fs::create_dir_all(&args.out_dir).with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    let (re, im) = density_csv(&rho, errors.as_ref());
    let write = |name: &str, text: &str| -> Result<()> {
        let path = args.out_dir.join(name);
        let mut f = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        f.write_all(text.as_bytes())?;
        Ok(())
    };
    write("rho_re.csv", &re)?;
    write("rho_im.csv", &im)?;
    if let Some(target) = &args.target {
        let cfg = match &args.input {
            Some(p) => {
                let (_, cfg, _) = load_records(p)?;
                args.scheme.check_against(&cfg)?;
                cfg
            }
            None if !args.scheme.is_empty() => args.scheme.config()?,
            None => bail!("--target needs the scheme, from --input or --scheme/--cutoff"),
        };
        let m = target_metrics(&rho, &target.build(&cfg)?)?;
        write("metrics.csv", &metrics_csv(&m))?;
        println!("fidelity {} trace distance {}", m.fidelity, m.trace_distance);
    }
    println!("wrote tables to {}", args.out_dir.display());
    Ok(0)
}

fn run(cli: Cli) -> Result<u8> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("QMLE_THREADS must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Uncertainty(a) => cmd_uncertainty(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_IO)
        }
    }
}
