use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use orbitlab::audit::Condition;
use orbitlab::experiments::{
    self, RunManifest, Scenario, ScenarioConfig, VolumeSweepParams, SCHEMA_VERSION,
};
use orbitlab::volume::Method;
use orbitlab::{Error, GroupSpec, NormSpec};

const EXIT_NUMERIC: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_CONFIG: u8 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "orbitlab",
    version,
    about = "Lattice orbit counting and volume asymptotics experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// Scenario configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the configured one or results/<scenario>.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the parallel kernels.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct SweepArgs {
    /// Configuration file; when given, the flags below are ignored.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Group: sl:N, so:P,Q or tensor:L.
    #[arg(long)]
    group: Option<String>,
    /// Norm: frobenius, max, entrywise:P or max-column:P (P may be inf).
    #[arg(long, default_value = "frobenius")]
    norm: String,
    #[arg(long)]
    tmin: Option<f64>,
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long, default_value_t = 8)]
    points: usize,
    /// Full Haar volume with quadrature:K or mc:N; chamber-sector volume if omitted.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Orbit sums against the limiting density for SL(2,ℤ) on ℝ².
    Ledrappier(RunArgs),
    /// Weyl sums of an SL(d,ℤ) orbit on the torus.
    Torus(RunArgs),
    /// Translated lattice points reduced to the modular surface.
    TranslateModular(RunArgs),
    /// Spiral subgroup with oscillating skew-ball ratios.
    CounterexampleD2(RunArgs),
    /// Compact-factor volume fraction for SL₂ × SL₂.
    Nonbalanced(RunArgs),
    /// Integer frames of an indefinite ternary form.
    OppenheimFrames(RunArgs),
    /// Ball volumes over a log-spaced threshold grid.
    VolumeSweep(SweepArgs),
    /// Runs one condition auditor.
    Audit {
        #[arg(long, value_parser = parse_condition)]
        condition: Condition,
        #[command(flatten)]
        run: RunArgs,
    },
}

fn parse_condition(s: &str) -> Result<Condition, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_group(s: &str) -> anyhow::Result<GroupSpec> {
    let (kind, arg) = s
        .split_once(':')
        .ok_or_else(|| anyhow!("group {s:?}: expected sl:N, so:P,Q or tensor:L"))?;
    let num = |x: &str| {
        x.trim()
            .parse::<usize>()
            .with_context(|| format!("group {s:?}"))
    };
    Ok(match kind {
        "sl" => GroupSpec::SLn { n: num(arg)? },
        "so" => {
            let (p, q) = arg
                .split_once(',')
                .ok_or_else(|| anyhow!("group {s:?}: expected so:P,Q"))?;
            GroupSpec::SOpq {
                p: num(p)?,
                q: num(q)?,
            }
        }
        "tensor" => GroupSpec::SL2xSL2Tensor { l: num(arg)? },
        _ => bail!("unknown group family {kind:?}"),
    })
}

fn parse_norm(s: &str, dim: usize) -> anyhow::Result<NormSpec> {
    let p = |x: &str| -> anyhow::Result<f64> {
        if x == "inf" {
            Ok(f64::INFINITY)
        } else {
            x.parse::<f64>()
                .with_context(|| format!("norm exponent {x:?}"))
        }
    };
    Ok(match s.split_once(':') {
        None if s == "frobenius" => NormSpec::frobenius(dim),
        None if s == "max" => NormSpec::max_entry(dim),
        Some(("entrywise", x)) => NormSpec::entrywise(dim, p(x)?),
        Some(("max-column", x)) => NormSpec::max_column(dim, p(x)?),
        _ => bail!("unknown norm {s:?}"),
    })
}

fn parse_method(s: &str, seed: u64) -> anyhow::Result<Method> {
    match s.split_once(':') {
        Some(("quadrature", k)) => Ok(Method::Quadrature {
            k_nodes: k.parse().context("quadrature nodes")?,
        }),
        Some(("mc", n)) => Ok(Method::MonteCarlo {
            samples: n.parse().context("Monte Carlo samples")?,
            seed,
        }),
        _ => bail!("unknown method {s:?}: expected quadrature:K or mc:N"),
    }
}

/// Error raised before any computation starts.
#[derive(Debug)]
struct ConfigError(anyhow::Error);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_error(e: impl Into<anyhow::Error>) -> anyhow::Error {
    ConfigError(e.into()).into()
}

fn sweep_config(a: &SweepArgs) -> anyhow::Result<ScenarioConfig> {
    let group = parse_group(
        a.group
            .as_deref()
            .ok_or_else(|| anyhow!("--group is required without --config"))?,
    )?;
    let norm = parse_norm(&a.norm, group.rep_dim())?;
    let tmin = a
        .tmin
        .ok_or_else(|| anyhow!("--tmin is required without --config"))?;
    let tmax = a
        .tmax
        .ok_or_else(|| anyhow!("--tmax is required without --config"))?;
    let seed = a.seed.unwrap_or(0);
    let method = a
        .method
        .as_deref()
        .map(|m| parse_method(m, seed))
        .transpose()?;
    let cfg = ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        seed,
        out_dir: a.out.clone(),
        budget: orbitlab::lattice::DEFAULT_BUDGET,
        scenario: Scenario::VolumeSweep(VolumeSweepParams {
            group,
            norm,
            tmin,
            tmax,
            points: a.points,
            method,
        }),
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Loads the configuration and checks it names the requested scenario.
fn load(args: &RunArgs, scenario: &str) -> anyhow::Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::load(&args.config).map_err(config_error)?;
    if cfg.scenario.name() != scenario {
        return Err(config_error(anyhow!(
            "{} configures scenario {:?}, not {scenario:?}",
            args.config.display(),
            cfg.scenario.name()
        )));
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn init_threads(threads: Option<usize>) -> anyhow::Result<()> {
    if let Some(k) = threads {
        if k == 0 {
            return Err(config_error(anyhow!("--threads must be positive")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .context("thread pool")?;
    }
    Ok(())
}

fn execute(cfg: &ScenarioConfig, out: Option<&Path>) -> anyhow::Result<RunManifest> {
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results").join(cfg.scenario.name()));
    let manifest = experiments::run(cfg, &dir)?;
    for c in &manifest.checks {
        let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.6e}"));
        println!(
            "{} {:<24} value={} threshold={} {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            fmt(c.value),
            fmt(c.threshold),
            c.detail
        );
    }
    println!("manifest: {}", dir.join("manifest.json").display());
    Ok(manifest)
}

fn run(cli: Cli) -> anyhow::Result<RunManifest> {
    let (cfg, out, threads) = match &cli.command {
        Command::VolumeSweep(a) => {
            let cfg = match &a.config {
                Some(path) => {
                    let args = RunArgs {
                        config: path.clone(),
                        seed: a.seed,
                        out: a.out.clone(),
                        threads: a.threads,
                    };
                    load(&args, "volume-sweep")?
                }
                None => sweep_config(a).map_err(config_error)?,
            };
            (cfg, a.out.clone(), a.threads)
        }
        Command::Audit { condition, run } => {
            let cfg = load(run, "audit")?;
            if let Scenario::Audit(p) = &cfg.scenario {
                if p.check.condition() != *condition {
                    return Err(config_error(anyhow!(
                        "configuration audits {:?}, not {condition:?}",
                        p.check.condition()
                    )));
                }
            }
            (cfg, run.out.clone(), run.threads)
        }
        Command::Ledrappier(a)
        | Command::Torus(a)
        | Command::TranslateModular(a)
        | Command::CounterexampleD2(a)
        | Command::Nonbalanced(a)
        | Command::OppenheimFrames(a) => {
            let name = match &cli.command {
                Command::Ledrappier(_) => "ledrappier",
                Command::Torus(_) => "torus",
                Command::TranslateModular(_) => "translate-modular",
                Command::CounterexampleD2(_) => "counterexample-d2",
                Command::Nonbalanced(_) => "nonbalanced",
                _ => "oppenheim-frames",
            };
            (load(a, name)?, a.out.clone(), a.threads)
        }
    };
    init_threads(threads)?;
    execute(&cfg, out.as_deref())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<ConfigError>().is_some() {
        return EXIT_CONFIG;
    }
    match e.downcast_ref::<Error>() {
        Some(Error::Config(_)) | Some(Error::Io(_)) => EXIT_CONFIG,
        _ => EXIT_INFEASIBLE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(m) if m.passed => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(EXIT_NUMERIC),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
