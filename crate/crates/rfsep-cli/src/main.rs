//! `rfsep` command-line tool: dataset generation and ingestion, model
//! training, SINR sweeps and result reporting, all deterministic in the
//! configured seeds.
//!
//! Exit codes: 0 on success, 1 for usage or configuration errors, 2 for
//! runtime or numerical failures.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rfsep::baselines::{estimate_block_covariance, LmmseSeparator, MfPassthrough};
use rfsep::eval::{parse_csv, sinr_sweep, to_csv, SweepConfig, SweepPoint};
use rfsep::io::config::{ArchKind, ExperimentConfig, ModelScale, SplitSpec};
use rfsep::io::frame_file::write_frames;
use rfsep::io::weights::{load_params_into, save_params};
use rfsep::mixture::{derive_seed, synthesize_example, InterferenceSource, MixtureRecipe};
use rfsep::nn::model::Model;
use rfsep::nn::train::{train, MixtureExampleSource, NeuralSeparator};
use rfsep::nn::unet::{UNet, UNetConfig};
use rfsep::nn::wavenet::{WaveNet, WaveNetConfig};
use rfsep::signal::ComplexSignal;

#[derive(Parser)]
#[command(
    name = "rfsep",
    version,
    about = "Single-channel RF source separation: generate, train, sweep, report"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize mixture examples and write them as frame files.
    Generate(GenerateArgs),
    /// Convert raw interleaved f32 IQ samples into a frame file.
    Ingest(IngestArgs),
    /// Train a separator network and save its weights.
    Train(TrainArgs),
    /// Score one method across the SINR grid and write a CSV.
    Sweep(SweepArgs),
    /// Score one method at a single SINR and print a JSON row.
    Eval(EvalArgs),
    /// Pretty-print a sweep CSV.
    Report(ReportArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the seed from the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 1 guarantees the deterministic sequential path.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of examples to synthesize.
    #[arg(long, default_value_t = 10)]
    count: usize,
    /// Target SINR of the generated mixtures, in dB.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    sinr_db: f64,
    /// Output directory for the frame files and manifest.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IngestArgs {
    /// Raw file of interleaved little-endian f32 (re, im) pairs.
    #[arg(long)]
    input: PathBuf,
    /// Samples per frame.
    #[arg(long)]
    frame_len: usize,
    /// Drop trailing bytes that do not fill a whole frame.
    #[arg(long, default_value_t = false)]
    truncate: bool,
    /// Output frame file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Output weight container; the loss log lands next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Mf,
    Lmmse,
    Unet,
    Wavenet,
}

impl Method {
    fn arch(self) -> Option<ArchKind> {
        match self {
            Method::Unet => Some(ArchKind::Unet),
            Method::Wavenet => Some(ArchKind::Wavenet),
            _ => None,
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Separation method to score.
    #[arg(long, value_enum)]
    method: Method,
    /// Trained weights; required for unet and wavenet.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// LMMSE block length.
    #[arg(long, default_value_t = 256)]
    block_len: usize,
    /// Examples used to estimate LMMSE covariances per grid point.
    #[arg(long, default_value_t = 8)]
    cov_examples: usize,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum)]
    method: Method,
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long, default_value_t = 256)]
    block_len: usize,
    #[arg(long, default_value_t = 8)]
    cov_examples: usize,
    /// SINR of the evaluation mixtures, in dB.
    #[arg(long, allow_hyphen_values = true)]
    sinr_db: f64,
    #[arg(long, default_value_t = 4)]
    trials: usize,
}

#[derive(Args)]
struct ReportArgs {
    /// Sweep CSV to display.
    #[arg(long)]
    input: PathBuf,
}

enum CliError {
    Usage(String),
    Runtime(rfsep::Error),
}

impl From<rfsep::Error> for CliError {
    fn from(e: rfsep::Error) -> Self {
        CliError::Runtime(e)
    }
}

fn usage(msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(msg.to_string())
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version are successful outcomes.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Ingest(args) => cmd_ingest(args),
        Command::Train(args) => cmd_train(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(()) => {}
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}

/// Dataset root used to resolve relative paths in configurations.
fn data_dir() -> PathBuf {
    std::env::var_os("RFSEP_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

struct Setup {
    config: ExperimentConfig,
    seed: u64,
}

fn setup(common: &CommonArgs) -> Result<Setup, CliError> {
    if common.threads == 0 {
        return Err(usage("--threads must be at least 1"));
    }
    let mut config = ExperimentConfig::load(&common.config).map_err(usage)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let seed = config.seed;
    Ok(Setup { config, seed })
}

fn build_source(config: &ExperimentConfig, seed: u64, split: Option<SplitSpec>) -> Result<InterferenceSource, CliError> {
    let mut spec = config.interference.clone();
    if let (rfsep::io::config::InterferenceSpec::Dataset { split: s, .. }, Some(want)) =
        (&mut spec, split)
    {
        *s = want;
    }
    spec.build(&data_dir(), seed).map_err(usage)
}

fn write_text(path: &Path, text: &str) -> Result<(), rfsep::Error> {
    std::fs::write(path, text).map_err(|e| rfsep::Error::io(path.display().to_string(), e))
}

// ---------------------------------------------------------------------------
// generate

#[derive(Serialize)]
struct GenerateManifest {
    seed: u64,
    sinr_db: f64,
    window_len: usize,
    soi: String,
    interference: String,
    count: usize,
    bits_per_example: usize,
    example_seeds: Vec<u64>,
    files: Vec<String>,
}

fn cmd_generate(args: GenerateArgs) -> Result<(), CliError> {
    let Setup { config, seed } = setup(&args.common)?;
    let source = build_source(&config, seed, None)?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| rfsep::Error::io(args.out.display().to_string(), e))?;

    let mut mixtures = Vec::with_capacity(args.count);
    let mut sois = Vec::with_capacity(args.count);
    let mut interferences = Vec::with_capacity(args.count);
    let mut bit_frames = Vec::with_capacity(args.count);
    let mut example_seeds = Vec::with_capacity(args.count);
    for i in 0..args.count {
        let recipe = MixtureRecipe {
            sinr_db: args.sinr_db,
            window_len: config.window_len,
            soi_kind: config.soi,
            interference_source: source.label(),
            seed: derive_seed(seed, i as u64),
        };
        example_seeds.push(recipe.seed);
        let ex = synthesize_example(&recipe, &source)?;
        // Bits ride in a frame file too: one 0/1 value per real part.
        bit_frames.push(ComplexSignal::new(
            ex.bits
                .bits
                .iter()
                .map(|&b| num_complex::Complex64::new(b as f64, 0.0))
                .collect(),
        ));
        mixtures.push(ex.mixture);
        sois.push(ex.soi);
        interferences.push(ex.interference);
    }

    let files = ["mixture.rfch", "soi.rfch", "interference.rfch", "bits.rfch"];
    write_frames(&args.out.join(files[0]), &mixtures)?;
    write_frames(&args.out.join(files[1]), &sois)?;
    write_frames(&args.out.join(files[2]), &interferences)?;
    write_frames(&args.out.join(files[3]), &bit_frames)?;

    let manifest = GenerateManifest {
        seed,
        sinr_db: args.sinr_db,
        window_len: config.window_len,
        soi: config.soi.label().to_string(),
        interference: source.label(),
        count: args.count,
        bits_per_example: bit_frames.first().map_or(0, |f| f.len()),
        example_seeds,
        files: files.iter().map(|s| s.to_string()).collect(),
    };
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| rfsep::Error::Config(format!("manifest serialization: {e}")))?;
    write_text(&args.out.join("manifest.json"), &format!("{text}\n"))?;
    println!(
        "wrote {} examples of {} samples to {}",
        args.count,
        config.window_len,
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// ingest

fn cmd_ingest(args: IngestArgs) -> Result<(), CliError> {
    if args.frame_len == 0 {
        return Err(usage("--frame-len must be positive"));
    }
    let bytes = std::fs::read(&args.input)
        .map_err(|e| usage(format!("cannot read {}: {e}", args.input.display())))?;
    let frame_bytes = args.frame_len * 8;
    let remainder = bytes.len() % frame_bytes;
    let usable = if remainder == 0 {
        bytes.len()
    } else if args.truncate {
        bytes.len() - remainder
    } else {
        return Err(usage(format!(
            "input size {} is not a multiple of {frame_bytes} bytes per frame; \
             pass --truncate to drop the trailing {remainder} bytes",
            bytes.len()
        )));
    };
    if usable == 0 {
        return Err(usage("input holds no complete frame"));
    }

    let mut frames = Vec::with_capacity(usable / frame_bytes);
    for (i, chunk) in bytes[..usable].chunks_exact(frame_bytes).enumerate() {
        let samples: Vec<num_complex::Complex64> = chunk
            .chunks_exact(8)
            .map(|c| {
                num_complex::Complex64::new(
                    f32::from_le_bytes(c[0..4].try_into().unwrap()) as f64,
                    f32::from_le_bytes(c[4..8].try_into().unwrap()) as f64,
                )
            })
            .collect();
        let mut frame = ComplexSignal::new(samples);
        let power = frame.power();
        if power == 0.0 {
            return Err(CliError::Runtime(rfsep::Error::InvalidParameter(format!(
                "zero-power frame at index {i}"
            ))));
        }
        println!("frame {i}: power {power}");
        frame.scale((1.0 / power.sqrt()).into());
        frames.push(frame);
    }
    write_frames(&args.out, &frames)?;
    println!(
        "wrote {} unit-power frames of {} samples to {}",
        frames.len(),
        args.frame_len,
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// train

fn build_model(arch: ArchKind, scale: ModelScale, seed: u64) -> Result<Box<dyn Model>, rfsep::Error> {
    let model_seed = derive_seed(seed, 0xA12C);
    Ok(match (arch, scale) {
        (ArchKind::Unet, ModelScale::Toy) => Box::new(UNet::new(UNetConfig::toy(), model_seed)?),
        (ArchKind::Unet, ModelScale::Benchmark) => {
            Box::new(UNet::new(UNetConfig::benchmark(), model_seed)?)
        }
        (ArchKind::Wavenet, ModelScale::Toy) => {
            Box::new(WaveNet::new(WaveNetConfig::toy(), model_seed)?)
        }
        (ArchKind::Wavenet, ModelScale::Benchmark) => {
            Box::new(WaveNet::new(WaveNetConfig::benchmark(), model_seed)?)
        }
    })
}

#[derive(Serialize)]
struct TrainSummary {
    arch: String,
    steps_run: usize,
    best_val_loss: f64,
    stopped_early: bool,
    seed: u64,
    weights: String,
    loss_log: String,
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let Setup { config, seed } = setup(&args.common)?;
    let train_section = config
        .train
        .clone()
        .ok_or_else(|| usage("configuration has no [train] section"))?;
    let source = build_source(&config, seed, Some(SplitSpec::Train))?;

    let example_source = MixtureExampleSource {
        recipe: MixtureRecipe {
            sinr_db: train_section.sinr_db,
            window_len: config.window_len,
            soi_kind: config.soi,
            interference_source: source.label(),
            seed: derive_seed(seed, 0x7124),
        },
        source,
    };
    let mut model = build_model(train_section.arch, train_section.scale, seed)?;
    let report = train(
        model.as_mut(),
        &example_source,
        &train_section.to_train_config(),
    )?;

    save_params(&args.out, model.params())?;
    let loss_log = args.out.with_extension("loss.csv");
    let mut log = String::from("step,train_loss,val_loss\n");
    let mut val_iter = report.val_loss.iter().peekable();
    for (i, loss) in report.train_loss.iter().enumerate() {
        let step = i + 1;
        let val = match val_iter.peek() {
            Some(&&(s, v)) if s == step => {
                val_iter.next();
                v.to_string()
            }
            _ => String::new(),
        };
        log.push_str(&format!("{step},{loss},{val}\n"));
    }
    write_text(&loss_log, &log)?;

    let summary = TrainSummary {
        arch: match train_section.arch {
            ArchKind::Unet => "unet".into(),
            ArchKind::Wavenet => "wavenet".into(),
        },
        steps_run: report.steps_run,
        best_val_loss: report.best_val_loss,
        stopped_early: report.stopped_early,
        seed,
        weights: args.out.display().to_string(),
        loss_log: loss_log.display().to_string(),
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&summary)
            .map_err(|e| rfsep::Error::Config(format!("summary serialization: {e}")))?
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep / eval

/// Build the LMMSE separator for one SINR point from covariances
/// estimated on held-out example draws.
fn build_lmmse(
    sinr_db: f64,
    config: &ExperimentConfig,
    source: &InterferenceSource,
    seed: u64,
    block_len: usize,
    cov_examples: usize,
) -> Result<LmmseSeparator, rfsep::Error> {
    let cov_seed = derive_seed(seed, 0xC0F0 ^ sinr_db.to_bits());
    let mut pairs = Vec::with_capacity(cov_examples);
    for k in 0..cov_examples {
        let recipe = MixtureRecipe {
            sinr_db,
            window_len: config.window_len,
            soi_kind: config.soi,
            interference_source: source.label(),
            seed: derive_seed(cov_seed, k as u64),
        };
        let ex = synthesize_example(&recipe, source)?;
        pairs.push((ex.soi, ex.interference));
    }
    let cov = estimate_block_covariance(&pairs, block_len)?;
    LmmseSeparator::new(cov)
}

fn run_method(
    method: Method,
    weights: Option<&Path>,
    config: &ExperimentConfig,
    sweep_cfg: &SweepConfig,
    seed: u64,
    block_len: usize,
    cov_examples: usize,
) -> Result<Vec<SweepPoint>, CliError> {
    let source = build_source(config, seed, None)?;
    match method {
        Method::Mf => Ok(sinr_sweep(&[&MfPassthrough], &source, sweep_cfg)?),
        Method::Lmmse => {
            let mut rows = Vec::new();
            for &sinr_db in &sweep_cfg.sinr_grid_db {
                let sep = build_lmmse(sinr_db, config, &source, seed, block_len, cov_examples)?;
                let point_cfg = SweepConfig {
                    sinr_grid_db: vec![sinr_db],
                    ..sweep_cfg.clone()
                };
                rows.extend(sinr_sweep(&[&sep], &source, &point_cfg)?);
            }
            rows.sort_by(|a, b| a.sinr_db.partial_cmp(&b.sinr_db).unwrap());
            Ok(rows)
        }
        Method::Unet | Method::Wavenet => {
            let weights = weights.ok_or_else(|| {
                usage("--weights is required for neural methods (unet, wavenet)")
            })?;
            let arch = method.arch().expect("neural method");
            let scale = config
                .train
                .as_ref()
                .map(|t| t.scale)
                .unwrap_or(ModelScale::Toy);
            let mut model = build_model(arch, scale, seed)?;
            load_params_into(weights, model.params_mut())?;
            let name = match arch {
                ArchKind::Unet => "unet",
                ArchKind::Wavenet => "wavenet",
            };
            let sep = NeuralSeparator::new(model, name);
            Ok(sinr_sweep(&[&sep], &source, sweep_cfg)?)
        }
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let Setup { config, seed } = setup(&args.common)?;
    let sweep_cfg = config.to_sweep_config();
    let rows = run_method(
        args.method,
        args.weights.as_deref(),
        &config,
        &sweep_cfg,
        seed,
        args.block_len,
        args.cov_examples,
    )?;
    write_text(&args.out, &to_csv(&rows))?;
    println!("wrote {} rows to {}", rows.len(), args.out.display());
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let Setup { config, seed } = setup(&args.common)?;
    let sweep_cfg = SweepConfig {
        sinr_grid_db: vec![args.sinr_db],
        trials: args.trials,
        window_len: config.window_len,
        soi_kind: config.soi,
        seed,
    };
    let rows = run_method(
        args.method,
        args.weights.as_deref(),
        &config,
        &sweep_cfg,
        seed,
        args.block_len,
        args.cov_examples,
    )?;
    for row in &rows {
        println!(
            "{}",
            serde_json::to_string(row)
                .map_err(|e| rfsep::Error::Config(format!("row serialization: {e}")))?
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// report

fn cmd_report(args: ReportArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| rfsep::Error::io(args.input.display().to_string(), e))?;
    let rows = parse_csv(&text)?;
    println!(
        "{:<12} {:>8} {:>10} {:>12} {:>7} {:>12}",
        "method", "sinr_db", "mse_db", "ber", "trials", "seed"
    );
    let mut last_method: Option<&str> = None;
    for row in &rows {
        if last_method.is_some_and(|m| m != row.method) {
            println!();
        }
        last_method = Some(&row.method);
        println!(
            "{:<12} {:>8.1} {:>10.3} {:>12.6} {:>7} {:>12}",
            row.method, row.sinr_db, row.mse_db, row.ber, row.trials, row.seed
        );
    }
    println!("\n{} rows from {}", rows.len(), args.input.display());
    Ok(())
}
