use std::io::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use pip_core::registry::dataset_registry;
use pip_core::sample::{select_split, write_manifest, SampleConfig, SceneSample, Split};
use pip_model::checkpoint;
use pip_model::eval::evaluate;
use pip_model::plan_source::plan_source_registry;
use pip_model::report::{EvalReport, ReportEntry};
use pip_model::train::{train, TrainConfig};
use pip_service::{AppState, LoadedModel, SceneStore};

#[derive(Parser)]
#[command(name = "pip-forecast", version, about = "Planning-informed trajectory prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model variant from a TOML config.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's checkpoint path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate one or more checkpoints and write a side-by-side report.
    Eval {
        #[arg(long, required = true, num_args = 1..)]
        ckpt: Vec<PathBuf>,
        #[arg(long, default_value = "test")]
        split: String,
        /// JSON report path; the text table goes to stdout.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        text: Option<PathBuf>,
        #[arg(long, default_value = "spline")]
        plan_source: String,
        /// Evaluate on this dataset source instead of the training one.
        #[arg(long)]
        source: Option<String>,
        /// Score every sample instead of one split (for held-out sources).
        #[arg(long)]
        all: bool,
    },
    /// Write the sample manifest of one split.
    Manifest {
        #[arg(long)]
        dataset: String,
        #[arg(long)]
        source: String,
        #[arg(long, default_value = "test")]
        split: String,
        #[arg(long, default_value_t = 0)]
        split_seed: u64,
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve scenes, candidates and predictions over HTTP.
    Serve {
        #[arg(long, env = "PIP_CKPT")]
        ckpt: Option<PathBuf>,
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long, env = "PIP_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "PIP_HOST", default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
}

fn load_samples(dataset: &str, source: &str) -> Result<Vec<SceneSample>> {
    let loader = dataset_registry().get(dataset)?;
    let (samples, report) = loader.samples(source, &SampleConfig::default())?;
    log::info!("{dataset}: {} samples ({report:?})", samples.len());
    Ok(samples)
}

fn run_train(config: &Path, out: Option<PathBuf>) -> Result<()> {
    let mut config = TrainConfig::load(config).with_context(|| format!("reading {}", config.display()))?;
    if out.is_some() {
        config.checkpoint = out;
    }
    if config.checkpoint.is_none() {
        bail!("no checkpoint path: set `checkpoint` in the config or pass --out");
    }
    let samples = select_split(load_samples(&config.dataset, &config.source)?, Split::Train, config.split_seed);
    let outcome = train(&config, &samples)?;
    println!(
        "trained {} for {} steps; loss {:.4} -> {:.4}; checkpoint {}",
        config.variant,
        outcome.losses.len(),
        outcome.losses.first().copied().unwrap_or(f64::NAN),
        outcome.losses.last().copied().unwrap_or(f64::NAN),
        config.checkpoint.as_ref().expect("checked").display()
    );
    Ok(())
}

fn run_eval(
    ckpts: &[PathBuf],
    split: &str,
    report: Option<PathBuf>,
    text: Option<PathBuf>,
    plan_source: &str,
    source: Option<String>,
    all: bool,
) -> Result<()> {
    let split: Split = split.parse()?;
    let plans = plan_source_registry().get(plan_source)?;
    let mut entries = Vec::new();
    for path in ckpts {
        let (network, manifest) = checkpoint::load(path).with_context(|| format!("loading {}", path.display()))?;
        let Some(training) = manifest.training.clone() else {
            bail!("{} has no training record", path.display());
        };
        let samples = load_samples(&training.dataset, source.as_deref().unwrap_or(&training.source))?;
        let samples = if all { samples } else { select_split(samples, split, training.split_seed) };
        let metrics = evaluate(&network, &samples, plans.as_ref())?;
        log::info!("{}: {} samples, {} targets", path.display(), samples.len(), metrics.count);
        entries.push(ReportEntry { checkpoint: path.display().to_string(), manifest, metrics });
    }
    let table = EvalReport::build(split, plan_source, entries)?;
    if let Some(path) = report {
        std::fs::write(&path, table.to_json()? + "\n")?;
    }
    if let Some(path) = text {
        std::fs::write(&path, table.to_text())?;
    }
    print!("{}", table.to_text());
    Ok(())
}

fn run_manifest(dataset: &str, source: &str, split: &str, seed: u64, limit: Option<usize>, out: &Path) -> Result<()> {
    let samples = select_split(load_samples(dataset, source)?, split.parse()?, seed);
    let refs: Vec<_> = samples.iter().take(limit.unwrap_or(usize::MAX)).map(|s| s.sample_ref(dataset, source)).collect();
    write_manifest(std::io::BufWriter::new(std::fs::File::create(out)?), &refs)?;
    println!("wrote {} scenes to {}", refs.len(), out.display());
    Ok(())
}

fn run_serve(ckpt: Option<PathBuf>, scenes: &Path, host: std::net::IpAddr, port: u16) -> Result<()> {
    let store = SceneStore::from_manifest(&dataset_registry(), scenes)
        .with_context(|| format!("loading scenes from {}", scenes.display()))?;
    let model = match ckpt {
        Some(path) => Some(LoadedModel::load(&path).with_context(|| format!("loading {}", path.display()))?),
        None => {
            log::warn!("no checkpoint given; /predict will answer 503");
            None
        }
    };
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(SocketAddr::new(host, port)).await?;
        println!("listening on http://{} ({} scenes)", listener.local_addr()?, store.len());
        std::io::stdout().flush()?;
        pip_service::serve_on(listener, AppState::new(store, model)).await?;
        anyhow::Ok(())
    })
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Train { config, out } => run_train(&config, out),
        Command::Eval { ckpt, split, report, text, plan_source, source, all } => {
            run_eval(&ckpt, &split, report, text, &plan_source, source, all)
        }
        Command::Manifest { dataset, source, split, split_seed, limit, out } => {
            run_manifest(&dataset, &source, &split, split_seed, limit, &out)
        }
        Command::Serve { ckpt, scenes, port, host } => run_serve(ckpt, &scenes, host, port),
    }
}
