use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use trajrisk::bounds::{verify_bounds, BoundsConfig};
use trajrisk::harness::{
    emit_report, execute, ingest_ticks, render_summary, sessionize, write_run, write_sessions, ArtifactDir,
    ExperimentConfig, IngestConfig, Mode, Report, Space,
};
use trajrisk::sim::{simulate_path, write_path_csv, ProcessModel};
use trajrisk::{Error, ErrorClass};

const OUTPUT_ENV: &str = "TRAJRISK_OUTPUT_DIR";
const FALLBACK_OUTPUT: &str = "trajrisk-out";

#[derive(Parser)]
#[command(name = "trajrisk", version, about = "Trajectory forecasting risk experiments and bound checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one path and write it as CSV.
    Simulate(SimulateArgs),
    /// Read a tick CSV and resample it onto daily session grids.
    Ingest(IngestArgs),
    /// Run the windowing/fit/evaluate pipeline described by a config file.
    Run(RunArgs),
    /// Run the Monte-Carlo bound suite.
    VerifyBounds(BoundsArgs),
    /// Print a summary.json (or the one inside a directory) as text.
    Report {
        path: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// TOML config file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Output directory [default: config value, then $TRAJRISK_OUTPUT_DIR, then ./trajrisk-out]
    #[arg(long, short)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    length: Option<usize>,
    /// Random-walk scale; replaces the config's process sigma.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    x0: Option<f64>,
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    common: Common,
    /// Tick CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    timestamp_column: Option<String>,
    #[arg(long)]
    price_column: Option<String>,
    /// Session start, HH:MM UTC.
    #[arg(long)]
    session_start: Option<String>,
    /// Session end, HH:MM UTC.
    #[arg(long)]
    session_end: Option<String>,
    #[arg(long)]
    interval_secs: Option<u32>,
    #[arg(long)]
    coverage_threshold: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpaceArg {
    Price,
    Returns,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    ingest: IngestArgs,
    #[arg(long)]
    lookback: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long, value_enum)]
    space: Option<SpaceArg>,
    /// Comma-separated predictor list, e.g. flat,linear,nn,knn5.
    #[arg(long, value_delimiter = ',')]
    predictors: Option<Vec<String>>,
    /// The two predictors to compare, `A,B`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    compare: Option<Vec<String>>,
    /// Simulated length (synthetic mode).
    #[arg(long)]
    length: Option<usize>,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    common: Common,
    /// Small replication counts; for smoke tests only.
    #[arg(long)]
    quick: bool,
}

fn output_dir(flag: &Option<PathBuf>, from_config: Option<&PathBuf>) -> PathBuf {
    flag.clone()
        .or_else(|| from_config.cloned())
        .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(FALLBACK_OUTPUT))
}

fn load_experiment(path: &Option<PathBuf>) -> Result<Option<ExperimentConfig>> {
    path.as_ref()
        .map(|p| ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display())))
        .transpose()
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let cfg = load_experiment(&args.common.config)?;
    let syn = cfg.as_ref().and_then(|c| c.synthetic.clone());
    let mut model = syn.as_ref().map(|s| s.process.clone()).unwrap_or_else(|| ProcessModel::random_walk(1.0, 0.1));
    if let Some(s) = args.sigma {
        model.sigma = s;
    }
    if let Some(x0) = args.x0 {
        model.x0 = x0;
    }
    let Some(length) = args.length.or(syn.map(|s| s.length)) else {
        bail!(Error::InvalidConfig("--length is required without a [synthetic] config".into()));
    };
    let seed = args.common.seed.or(cfg.as_ref().map(|c| c.seed)).unwrap_or(0);
    let dir = output_dir(&args.common.output_dir, cfg.as_ref().and_then(|c| c.output_dir.as_ref()));

    let path = simulate_path(&model, length, seed)?;
    let mut out = ArtifactDir::create(&dir)?;
    let mut bytes = Vec::new();
    write_path_csv(&path, &mut bytes)?;
    out.write("path.csv", &bytes)?;
    out.finish(&[("seed", seed.to_string())])?;
    println!("wrote {} points to {}", path.len(), dir.join("path.csv").display());
    Ok(())
}

fn apply_ingest_flags(args: &IngestArgs, base: Option<IngestConfig>) -> Result<IngestConfig> {
    let mut ing = match (base, &args.data) {
        (Some(b), _) => b,
        (None, Some(data)) => ingest_defaults(data.clone()),
        (None, None) => bail!(Error::InvalidConfig("--data or an [ingest] config table is required".into())),
    };
    if let Some(d) = &args.data {
        ing.data_path = d.clone();
    }
    if let Some(v) = &args.timestamp_column {
        ing.timestamp_column = v.clone();
    }
    if let Some(v) = &args.price_column {
        ing.price_column = v.clone();
    }
    if let Some(v) = &args.session_start {
        ing.session_start = v.clone();
    }
    if let Some(v) = &args.session_end {
        ing.session_end = v.clone();
    }
    if let Some(v) = args.interval_secs {
        ing.interval_secs = v;
    }
    if let Some(v) = args.coverage_threshold {
        ing.coverage_threshold = v;
    }
    Ok(ing)
}

/// An ingest table with only `data_path` set; every other field at its default.
fn ingest_defaults(data: PathBuf) -> IngestConfig {
    let json = serde_json::json!({ "data_path": data });
    serde_json::from_value(json).expect("defaults cover every other field")
}

fn ingest(args: IngestArgs) -> Result<()> {
    let cfg = load_experiment(&args.common.config)?;
    let ing = apply_ingest_flags(&args, cfg.as_ref().and_then(|c| c.ingest.clone()))?;
    let dir = output_dir(&args.common.output_dir, cfg.as_ref().and_then(|c| c.output_dir.as_ref()));
    let ticks = ingest_ticks(&ing.data_path, &ing.schema(), &ing.instrument)?;
    let sessions = sessionize(&ticks, &ing.session()?)?;
    let mut out = ArtifactDir::create(&dir)?;
    write_sessions(&mut out, &sessions)?;
    out.finish(&[("source", ing.data_path.display().to_string())])?;
    println!(
        "{} ticks -> {} sessions of {} points ({} days dropped) in {}",
        ticks.len(),
        sessions.sessions.len(),
        sessions.grid_len,
        sessions.dropped.len(),
        dir.display()
    );
    Ok(())
}

fn run(args: RunArgs) -> Result<()> {
    let common = &args.ingest.common;
    let Some(cfg_path) = &common.config else {
        bail!(Error::InvalidConfig("run needs --config".into()));
    };
    let mut cfg = ExperimentConfig::load(cfg_path).with_context(|| format!("loading {}", cfg_path.display()))?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(v) = args.lookback {
        cfg.lookback = v;
    }
    if let Some(v) = args.horizon {
        cfg.horizon = v;
    }
    if let Some(v) = args.stride {
        cfg.stride = Some(v);
    }
    if let Some(v) = args.space {
        cfg.space = match v {
            SpaceArg::Price => Space::Price,
            SpaceArg::Returns => Space::Returns,
        };
    }
    if let Some(v) = &args.predictors {
        cfg.predictors = v.clone();
    }
    if let Some(v) = &args.compare {
        cfg.compare = Some([v[0].clone(), v[1].clone()]);
    }
    if let (Some(len), Some(syn)) = (args.length, cfg.synthetic.as_mut()) {
        syn.length = len;
    }
    if cfg.mode == Mode::Ingest {
        cfg.ingest = Some(apply_ingest_flags(&args.ingest, cfg.ingest.clone())?);
    }
    let dir = output_dir(&common.output_dir, cfg.output_dir.as_ref());

    let output = execute(&cfg)?;
    write_run(&output, &dir)?;
    print!("{}", render_summary(&serde_json::to_string(&output.report)?)?);
    println!("artifacts in {}", dir.display());
    Ok(())
}

fn verify(args: BoundsArgs) -> Result<()> {
    let mut cfg = match (&args.common.config, args.quick) {
        (Some(p), _) => BoundsConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        (None, true) => BoundsConfig::quick(),
        (None, false) => BoundsConfig::default(),
    };
    if let Some(s) = args.common.seed {
        cfg.seed = s;
    }
    let dir = output_dir(&args.common.output_dir, None);
    let report = verify_bounds(&cfg)?;
    emit_report(Report::Bounds(&report), &dir)?;
    print!("{}", render_summary(&serde_json::to_string(&report)?)?);
    println!("artifacts in {}", dir.display());
    Ok(())
}

fn report(path: &Path) -> Result<()> {
    let file = if path.is_dir() { path.join("summary.json") } else { path.to_path_buf() };
    let text = std::fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
    print!("{}", render_summary(&text)?);
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()).map(Error::class) {
        Some(ErrorClass::Config) => 1,
        Some(ErrorClass::Data) => 2,
        Some(ErrorClass::Internal) | None => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Ingest(a) => ingest(a),
        Command::Run(a) => run(a),
        Command::VerifyBounds(a) => verify(a),
        Command::Report { path } => report(&path),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
