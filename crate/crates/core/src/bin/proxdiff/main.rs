use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use proxdiff::bench::{
    emit_csv, rate_table, read_csv, run_error_curves, write_csv, DirectionKind, ExperimentSpec,
    ProblemKind,
};
use proxdiff::denoise::{
    denoise, load_image, load_image_dir, load_weights, make_dataset, psnr, save_image,
    save_weights, synthetic_patches, train, write_loss_log, TrainConfig,
};
use proxdiff::rate::DEFAULT_FLOOR;
use proxdiff::Error;

#[derive(Parser)]
#[command(
    name = "proxdiff",
    version,
    about = "Derivatives of proximal gradient solution mappings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a Lasso or Group Lasso instance and write the ten error curves as CSV.
    Bench(BenchArgs),
    /// Fit linear rates to every column of a curves CSV.
    Rates {
        csv: PathBuf,
        #[arg(long, default_value_t = DEFAULT_FLOOR)]
        floor: f64,
    },
    /// Learn denoising filters by bilevel SGD.
    DenoiseTrain(TrainArgs),
    /// Denoise an image with learned filters.
    DenoiseApply {
        #[arg(long)]
        theta: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 500)]
        inner_iters: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemArg {
    Lasso,
    #[value(alias = "group_lasso")]
    GroupLasso,
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    Lambda,
    Full,
}

#[derive(Args)]
struct BenchArgs {
    /// JSON file with any of the flag values; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    problem: Option<ProblemArg>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long, value_enum)]
    direction: Option<DirectionArg>,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Directory of PGM/PPM training images; synthetic patches when absent.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    inner_iters: Option<usize>,
    #[arg(long)]
    filters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lr: Option<f64>,
    /// Number of synthetic patches.
    #[arg(long, default_value_t = 5)]
    patches: usize,
    /// Side of the synthetic patches.
    #[arg(long, default_value_t = 16)]
    patch_size: usize,
    /// 30 epochs, K = 500, 24 filters, learning rate 1e-4.
    #[arg(long)]
    paper_scale: bool,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    log: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bench(args) => bench(args),
        Command::Rates { csv, floor } => rates(&csv, floor),
        Command::DenoiseTrain(args) => denoise_train(args),
        Command::DenoiseApply {
            theta,
            input,
            out,
            inner_iters,
        } => denoise_apply(&theta, &input, &out, inner_iters),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Degenerate { .. } => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn bench_spec(args: &BenchArgs) -> proxdiff::Result<ExperimentSpec> {
    let problem = args.problem.map(|p| match p {
        ProblemArg::Lasso => ProblemKind::Lasso,
        ProblemArg::GroupLasso => ProblemKind::GroupLasso,
    });
    let mut spec = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: path.clone(),
                message: e.to_string(),
            })?
        }
        None => match problem {
            Some(ProblemKind::GroupLasso) => ExperimentSpec::group_lasso_desk(0),
            _ => ExperimentSpec::lasso_desk(0),
        },
    };
    if let Some(p) = problem {
        spec.problem = p;
    }
    macro_rules! set {
        ($($f:ident),*) => {$(if let Some(v) = args.$f { spec.$f = v; })*};
    }
    set!(m, n, l, seed, iters, q);
    if args.lambda.is_some() {
        spec.lambda = args.lambda;
    }
    if let Some(d) = args.direction {
        spec.direction = match d {
            DirectionArg::Lambda => DirectionKind::Lambda,
            DirectionArg::Full => DirectionKind::Full,
        };
    }
    if args.out.is_some() {
        spec.out = args.out.clone();
    }
    Ok(spec)
}

fn bench(args: BenchArgs) -> proxdiff::Result<()> {
    let spec = bench_spec(&args)?;
    let run = run_error_curves(&spec)?;
    log::info!(
        "identified at PGD {:?}, APG {:?}",
        run.pgd.identified_at,
        run.apg.identified_at
    );
    match &spec.out {
        Some(path) => emit_csv(&run.curves, path),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_csv(&run.curves, &mut lock)
                .and_then(|_| lock.flush())
                .map_err(|source| Error::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

fn rates(path: &Path, floor: f64) -> proxdiff::Result<()> {
    let curves = read_csv(path)?;
    println!(
        "{:<14} {:>12} {:>10} {:>14} {:>8}",
        "column", "slope", "factor", "window", "r2"
    );
    for (name, report) in rate_table(&curves, floor) {
        match report {
            Ok(r) => println!(
                "{:<14} {:>12.5e} {:>10.6} {:>14} {:>8.5}",
                name,
                r.slope,
                r.factor(),
                format!("[{}, {}]", r.window.0, r.window.1),
                r.r_squared
            ),
            Err(e) => println!("{name:<14} {e}"),
        }
    }
    Ok(())
}

fn denoise_train(args: TrainArgs) -> proxdiff::Result<()> {
    let mut cfg = if args.paper_scale {
        TrainConfig::paper_scale()
    } else {
        TrainConfig::desk()
    };
    if let Some(v) = args.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = args.inner_iters {
        cfg.inner_iters = v;
    }
    if let Some(v) = args.filters {
        cfg.filters = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.lr {
        cfg.lr = v;
    }
    let grounds = match &args.data {
        Some(dir) => load_image_dir(dir)?,
        None => {
            let size = if args.paper_scale {
                50
            } else {
                args.patch_size
            };
            synthetic_patches(args.patches, size, cfg.seed)?
        }
    };
    let data = make_dataset(grounds, cfg.noise_std, cfg.seed)?;
    let report = train(&data, &cfg)?;
    save_weights(&args.out, &report.bank)?;
    if let Some(log) = &args.log {
        write_loss_log(log, &report.log)?;
    }
    for (epoch, loss) in report.epoch_losses.iter().enumerate() {
        eprintln!("epoch {epoch}: mean loss {loss:.6e}");
    }
    for s in &data {
        let rec = denoise(&report.bank, &s.noisy, cfg.inner_iters)?;
        let db = |v: Option<f64>| v.map_or("inf".to_string(), |d| format!("{d:.2}"));
        eprintln!(
            "image {}: PSNR noisy {} dB, recovered {} dB",
            s.id,
            db(psnr(&s.noisy.clamped(), &s.ground)?),
            db(psnr(&rec.clamped(), &s.ground)?)
        );
    }
    Ok(())
}

fn denoise_apply(
    theta: &Path,
    input: &Path,
    out: &Path,
    inner_iters: usize,
) -> proxdiff::Result<()> {
    let bank = load_weights(theta)?;
    let noisy = load_image(input)?;
    save_image(out, &denoise(&bank, &noisy, inner_iters)?)
}
