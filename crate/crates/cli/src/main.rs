//! `nframe`: probe how vision models treat the neighborhood of an image.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "nframe", version, about = "Neural frame probes for ONNX vision models")]
struct Cli {
    /// Worker threads for per-image work; results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// TOML file supplying defaults for any run flag, plus a `[frame]` table.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct RunArgs {
    /// Model bundle directory (`model.onnx` + `manifest.json`). Repeat for
    /// commands that compare models.
    #[arg(long)]
    pub model: Vec<PathBuf>,
    /// Directory of PNG/JPEG images.
    #[arg(long)]
    pub images: Option<PathBuf>,
    /// Frame kinds, comma separated: augmentation, noise, rotated, external.
    #[arg(long)]
    pub frame: Vec<String>,
    /// Root of per-image perturbation directories for external frames.
    #[arg(long)]
    pub frame_dir: Option<PathBuf>,
    /// TOML frame configuration (augmentation list, noise_k).
    #[arg(long)]
    pub frame_config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write SVG charts.
    #[arg(long)]
    pub plot: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Per-layer stable-rank curves with confidence intervals.
    Probe(RunArgs),
    /// Frame CKA between every layer pair of two models.
    Cka(RunArgs),
    /// Stable-rank curves for an ordered series of checkpoints.
    Series(RunArgs),
    /// Correlation of per-layer stable rank with top-1 accuracy.
    Correlate(RunArgs),
    /// Stable-rank curves for growing frame sizes.
    SweepK {
        #[command(flatten)]
        run: RunArgs,
        /// Frame sizes, comma separated.
        #[arg(long, default_value = "2,5,10,15,19")]
        k: String,
    },
    /// Intrinsic dimension of tap activations or of a synthetic point cloud.
    Idim(commands::IdimArgs),
    /// Residual-layer stable rank of random Gaussian weights.
    MpCheck {
        #[arg(long, default_value_t = 512)]
        n: usize,
        #[arg(long, default_value_t = 30)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Singular values of rotation tangents about several centers.
    Rank3(commands::Rank3Args),
    /// Writes the built-in random CNN bundle.
    Fixture {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `cnn` or `linear`.
        #[arg(long, default_value = "cnn")]
        arch: String,
    },
}

fn error_json(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": { "kind": kind, "message": message } }).to_string()
}

fn run(cli: Cli) -> nframe::Result<()> {
    let file = match &cli.config {
        Some(path) => config::RunConfig::load(path)?,
        None => config::RunConfig::default(),
    };
    let jobs = cli.jobs.or(file.jobs);
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = jobs {
            if n == 0 {
                return Err(nframe::Error::Config("--jobs must be at least 1".into()));
            }
            b = b.num_threads(n);
        }
        b.build().map_err(|e| nframe::Error::Config(format!("thread pool: {e}")))?
    };
    pool.install(|| match cli.command {
        Command::Probe(args) => commands::probe(&commands::resolve(args, &file)?),
        Command::Cka(args) => commands::cka(&commands::resolve(args, &file)?),
        Command::Series(args) => commands::series(&commands::resolve(args, &file)?),
        Command::Correlate(args) => commands::correlate(&commands::resolve(args, &file)?),
        Command::SweepK { run, k } => commands::sweep_k(&commands::resolve(run, &file)?, &config::parse_k_list(&k)?),
        Command::Idim(args) => commands::idim(&args),
        Command::MpCheck { n, trials, seed } => commands::mp_check(n, trials, seed),
        Command::Rank3(args) => commands::rank3(&args),
        Command::Fixture { out, seed, arch } => commands::fixture(&out, seed, &arch),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", error_json("usage", e.to_string().trim()));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_json(e.kind(), &e.to_string()));
            ExitCode::from(if matches!(e, nframe::Error::Config(_)) { 2 } else { 1 })
        }
    }
}
