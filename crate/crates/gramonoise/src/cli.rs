//! Command-line front end wiring configs, corpora, checkpoints, and WAV
//! outputs to the library operations.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
//! Every WAV output is accompanied by a `<output>.manifest.toml` recording
//! the command, seeds, sampler settings, and input hashes needed to
//! reproduce it exactly.

use crate::checkpoint::{self, Checkpoint};
use crate::config::{parse_config, parse_guide_spec, FileConfig};
use crate::dataset::{load_corpus, read_wav, write_wav, BatchIterator};
use crate::denoiser::{init_params, NetworkConfig, UNetDenoiser};
use crate::error::{Error, Result};
use crate::guides::{compose_guide, GuideSpec};
use crate::rng::{restore_rng, rng_for, save_rng};
use crate::sampler::{assemble_track, sample_revolutions, SamplerRun};
use crate::trainer::{progress_line, train, Trainer};
use crate::analysis;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::io::Write as _;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(
    name = "gramonoise",
    version,
    about = "Gramophone-noise synthesis: diffusion sampling, guide DSP, analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train the denoiser on a WAV corpus (directory or manifest file).
    Train(TrainArgs),
    /// Draw unconditional revolutions from a trained checkpoint.
    Sample(SampleArgs),
    /// Refine a guide (WAV or guide spec) by truncated reverse diffusion.
    Guided(GuidedArgs),
    /// Bifurcate one trajectory into N revolutions and assemble a track.
    Variations(VariationsArgs),
    /// Render a guide spec to WAV without any model.
    GuideSynth(GuideSynthArgs),
    /// Envelope/spectral analysis over WAV sets.
    Analyze(AnalyzeArgs),
    /// Print checkpoint metadata.
    Info(InfoArgs),
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Configuration file (TOML); omit for documented defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// WAV corpus: a directory or a manifest file listing paths.
    #[arg(long)]
    corpus: PathBuf,
    /// Checkpoint output path.
    #[arg(long)]
    out: PathBuf,
    /// Resume from an existing checkpoint (bit-identical trajectory).
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Override training.total_iterations.
    #[arg(long)]
    iterations: Option<u64>,
    /// Override training.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Line-delimited JSON progress log.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Configuration overrides, section.key=value.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Reverse-diffusion steps T.
    #[arg(long, default_value_t = 150)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct GuidedArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Guide as a mono WAV at the model sample rate.
    #[arg(long, conflicts_with = "guide_spec")]
    guide: Option<PathBuf>,
    /// Guide as a TOML guide spec rendered on the fly.
    #[arg(long)]
    guide_spec: Option<PathBuf>,
    /// Truncation step in [0, 1]; 0.33/0.5/0.66 are the reference choices.
    #[arg(long, default_value_t = 0.5)]
    tau0: f64,
    #[arg(long, default_value_t = 150)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct VariationsArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Optional guide WAV; without it the shared prefix is unconditional.
    #[arg(long, conflicts_with = "guide_spec")]
    guide: Option<PathBuf>,
    /// Optional guide spec rendered on the fly.
    #[arg(long)]
    guide_spec: Option<PathBuf>,
    /// Truncation step used when a guide is given.
    #[arg(long, default_value_t = 0.5)]
    tau0: f64,
    /// Bifurcation step.
    #[arg(long = "tau-p", default_value_t = 0.33)]
    tau_p: f64,
    /// Number of revolution variants N.
    #[arg(long, default_value_t = 4)]
    revolutions: usize,
    /// Track duration in seconds.
    #[arg(long)]
    duration: f64,
    /// Crossfade between consecutive revolutions, seconds (0 = butt join).
    #[arg(long, default_value_t = 0.0)]
    overlap: f64,
    #[arg(long, default_value_t = 150)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write each revolution as <out stem>.rev<N>.wav.
    #[arg(long, default_value_t = false)]
    save_revolutions: bool,
}

#[derive(Args, Debug)]
struct GuideSynthArgs {
    /// Guide spec (TOML).
    #[arg(long, conflicts_with = "preset")]
    spec: Option<PathBuf>,
    /// Use the built-in filtered-noise-plus-thumps preset instead.
    #[arg(long, default_value_t = false)]
    preset: bool,
    /// Sample rate for --preset.
    #[arg(long, default_value_t = 22050)]
    fs: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum AnalyzeKind {
    /// Sliding-RMS temporal envelope per input.
    Envelope,
    /// Bark-smoothed spectral envelope per input.
    Bark,
    /// Log-spectrogram (PNG + TSV grid) per input.
    Spectrogram,
    /// Deviation profiles across the input set (temporal and Bark).
    Deviation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DeviationModeArg {
    /// First input is the reference; deviations of the rest against it.
    Reference,
    /// All unordered pairs.
    Pairs,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[arg(value_enum)]
    what: AnalyzeKind,
    /// Input WAV files.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Output path prefix.
    #[arg(long, default_value = "analysis")]
    out: String,
    /// Envelope window in seconds.
    #[arg(long, default_value_t = 0.025)]
    window: f64,
    #[arg(long, value_enum, default_value_t = DeviationModeArg::Reference)]
    mode: DeviationModeArg,
    #[arg(long, default_value_t = 1024)]
    fft_size: usize,
    #[arg(long, default_value_t = 256)]
    fft_hop: usize,
}

#[derive(Args, Debug)]
struct InfoArgs {
    #[arg(long)]
    checkpoint: PathBuf,
}

/// Entry point used by the binary and by tests; returns the exit code.
pub fn run<I>(argv: I) -> i32
where
    I: IntoIterator<Item = String>,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Guided(args) => cmd_guided(args),
        Command::Variations(args) => cmd_variations(args),
        Command::GuideSynth(args) => cmd_guide_synth(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Info(args) => cmd_info(args),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("gramonoise: {e}");
            e.exit_code()
        }
    }
}

/// Write a status line to stdout, ignoring broken pipes so commands can
/// feed `head` and friends.
macro_rules! outln {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

/// Log verbosity from GRAMONOISE_LOG: quiet, info (default), or debug.
fn verbosity() -> u8 {
    match std::env::var("GRAMONOISE_LOG").as_deref() {
        Ok("quiet") => 0,
        Ok("debug") => 2,
        _ => 1,
    }
}

fn denoiser_from_checkpoint(ckpt: &Checkpoint) -> Result<UNetDenoiser> {
    let (net, fresh) = init_params(&ckpt.config, 0)?;
    if fresh.tensors.len() != ckpt.params.tensors.len()
        || fresh
            .tensors
            .iter()
            .zip(&ckpt.params.tensors)
            .any(|(a, b)| a.name != b.name || a.dims != b.dims)
    {
        return Err(Error::domain(
            "checkpoint",
            "tensor layout does not match the checkpoint's configuration",
        ));
    }
    Ok(UNetDenoiser { net, params: ckpt.params.clone(), use_ema: true })
}

fn write_manifest(out: &Path, entries: Vec<(&str, toml::Value)>) -> Result<()> {
    let mut table = toml::Table::new();
    for (k, v) in entries {
        table.insert(k.to_string(), v);
    }
    let path = manifest_path(out);
    let text = toml::to_string_pretty(&table)
        .map_err(|e| Error::Config(format!("manifest serialization: {e}")))?;
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_os_string();
    s.push(".manifest.toml");
    PathBuf::from(s)
}

fn toml_f64(v: f64) -> toml::Value {
    toml::Value::Float(v)
}

fn toml_str(v: impl Into<String>) -> toml::Value {
    toml::Value::String(v.into())
}

fn toml_int(v: u64) -> toml::Value {
    toml::Value::Integer(v as i64)
}

/// Render or load the guide for `guided`/`variations`, sized to the model
/// frame. Rendered specs are synthesized at exactly the model frame length;
/// WAV guides may be trimmed or zero-padded by at most the network's total
/// stride to absorb rounding differences.
fn resolve_guide(
    wav: Option<&Path>,
    spec: Option<&Path>,
    config: &NetworkConfig,
    seed: u64,
) -> Result<Option<(Vec<f64>, String)>> {
    let frame_len = config.sample_count;
    match (wav, spec) {
        (None, None) => Ok(None),
        (Some(path), _) => {
            let asset = read_wav(path)?;
            if asset.fs != config.fs {
                return Err(Error::domain(
                    "cli",
                    format!(
                        "guide {} has fs {} Hz, model expects {} Hz",
                        path.display(),
                        asset.fs,
                        config.fs
                    ),
                ));
            }
            let mut samples = asset.samples;
            let tolerance = config.total_stride();
            if samples.len().abs_diff(frame_len) > tolerance {
                return Err(Error::domain(
                    "cli",
                    format!(
                        "guide {} has {} samples, model frame is {frame_len}",
                        path.display(),
                        samples.len()
                    ),
                ));
            }
            samples.resize(frame_len, 0.0);
            let hash = checkpoint::file_hash(path)?;
            Ok(Some((samples, format!("wav:{}:{hash}", path.display()))))
        }
        (None, Some(path)) => {
            let mut spec = parse_guide_spec(path)?;
            if spec.fs != config.fs {
                return Err(Error::domain(
                    "cli",
                    format!(
                        "guide spec {} has fs {} Hz, model expects {} Hz",
                        path.display(),
                        spec.fs,
                        config.fs
                    ),
                ));
            }
            spec.length_s = frame_len as f64 / config.fs as f64;
            let frame = compose_guide(&spec, seed)?;
            debug_assert_eq!(frame.len(), frame_len);
            let hash = checkpoint::file_hash(path)?;
            Ok(Some((frame, format!("spec:{}:{hash}", path.display()))))
        }
    }
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let mut file_config: FileConfig = parse_config(args.config.as_deref(), &args.set)?;
    if let Some(it) = args.iterations {
        file_config.training.total_iterations = it;
    }
    if let Some(seed) = args.seed {
        file_config.training.seed = seed;
    }
    let training = file_config.training.clone();
    let normalization = file_config.normalization;

    let (net_config, mut trainer, data_rng, start_iteration) = match &args.resume {
        Some(path) => {
            let ckpt = checkpoint::load(path)?;
            let (net, _) = init_params(&ckpt.config, training.seed)?;
            let mut t = Trainer::new(net, ckpt.params.clone(), training.clone(), restore_rng(&ckpt.train_rng))?;
            t.opt = ckpt.adam.clone();
            t.iteration = ckpt.iteration;
            (ckpt.config.clone(), t, restore_rng(&ckpt.data_rng), ckpt.iteration)
        }
        None => {
            let net_config = file_config.resolve_network()?;
            let (net, params) = init_params(&net_config, training.seed)?;
            let t = Trainer::new(net, params, training.clone(), rng_for(training.seed, "train"))?;
            (net_config, t, rng_for(training.seed, "data"), 0)
        }
    };
    let corpus = load_corpus(&args.corpus, Some(net_config.fs))?;
    let mut data = BatchIterator::new(
        &corpus,
        net_config.sample_count,
        training.batch_size,
        normalization,
        data_rng,
    )?;
    let mut log: Option<std::io::BufWriter<std::fs::File>> = match &args.log {
        Some(p) => Some(std::io::BufWriter::new(
            std::fs::File::create(p).map_err(|e| Error::io(p, e))?,
        )),
        None => None,
    };
    let remaining = training.total_iterations.saturating_sub(start_iteration);
    let verbosity = verbosity();
    if verbosity > 0 {
        eprintln!(
            "training: {} iterations (resuming at {start_iteration}), batch {}, frame {} @ {} Hz, {} trainable parameters",
        remaining,
        training.batch_size,
        net_config.sample_count,
        net_config.fs,
            trainer
                .params
                .tensors
                .iter()
                .filter(|t| t.trainable)
                .map(|t| t.data.len())
                .sum::<usize>()
        );
    }
    let out_path = args.out.clone();
    let interval = training.checkpoint_interval;
    train(&mut trainer, &mut data, remaining, |tr, it, report| {
        if let Some(log) = &mut log {
            writeln!(log, "{}", progress_line(report))
                .map_err(|e| Error::io(args.log.as_ref().unwrap(), e))?;
        }
        let cadence = if verbosity >= 2 { 1 } else { 100 };
        if verbosity > 0
            && (report.iteration % cadence == 0 || report.iteration == training.total_iterations)
        {
            eprintln!(
                "iteration {} loss {:.6} grad_norm {:.4}",
                report.iteration, report.loss, report.grad_norm
            );
        }
        if interval > 0 && report.iteration % interval == 0 {
            save_checkpoint(&out_path, tr, it).map_err(|e| {
                Error::Config(format!("checkpoint at iteration {}: {e}", report.iteration))
            })?;
        }
        Ok(())
    })?;
    save_checkpoint(&out_path, &trainer, &mut data)
        .map_err(|e| Error::Config(format!("final checkpoint at iteration {}: {e}", trainer.iteration)))?;
    if verbosity > 0 {
        if data.skipped_silent > 0 {
            eprintln!("skipped {} silent chunks during batching", data.skipped_silent);
        }
        eprintln!("checkpoint written to {}", args.out.display());
    }
    Ok(())
}

fn save_checkpoint(path: &Path, trainer: &Trainer, data: &mut BatchIterator) -> Result<()> {
    let ckpt = Checkpoint {
        config: trainer.net.config.clone(),
        params: trainer.params.clone(),
        adam: trainer.opt.clone(),
        iteration: trainer.iteration,
        train_rng: save_rng(&trainer.train_rng),
        data_rng: save_rng(data.rng_mut()),
    };
    checkpoint::save(path, &ckpt)
}

fn cmd_sample(args: SampleArgs) -> Result<()> {
    let ckpt = checkpoint::load(&args.checkpoint)?;
    let den = denoiser_from_checkpoint(&ckpt)?;
    let run = SamplerRun::unconditional(args.steps, args.seed);
    let frame = crate::sampler::sample_unconditional(&den, &run)?;
    write_wav(&args.out, &frame, ckpt.config.fs)?;
    write_manifest(
        &args.out,
        vec![
            ("command", toml_str("sample")),
            ("checkpoint", toml_str(args.checkpoint.display().to_string())),
            ("checkpoint_hash", toml_str(checkpoint::file_hash(&args.checkpoint)?)),
            ("steps", toml_int(args.steps as u64)),
            ("seed", toml_int(args.seed)),
            ("fs", toml_int(ckpt.config.fs as u64)),
            ("output", toml_str(args.out.display().to_string())),
        ],
    )?;
    outln!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_guided(args: GuidedArgs) -> Result<()> {
    if args.guide.is_none() && args.guide_spec.is_none() {
        return Err(Error::Usage("guided needs --guide or --guide-spec".into()));
    }
    let ckpt = checkpoint::load(&args.checkpoint)?;
    let den = denoiser_from_checkpoint(&ckpt)?;
    let (guide, guide_id) = resolve_guide(
        args.guide.as_deref(),
        args.guide_spec.as_deref(),
        &ckpt.config,
        args.seed,
    )?
    .expect("one source verified above");
    let run = SamplerRun {
        steps: args.steps,
        tau0: args.tau0,
        tau_p: None,
        revolutions: 1,
        seed: args.seed,
    };
    let frame = crate::sampler::sample_guided(&den, &guide, &run)?;
    write_wav(&args.out, &frame, ckpt.config.fs)?;
    write_manifest(
        &args.out,
        vec![
            ("command", toml_str("guided")),
            ("checkpoint", toml_str(args.checkpoint.display().to_string())),
            ("checkpoint_hash", toml_str(checkpoint::file_hash(&args.checkpoint)?)),
            ("guide", toml_str(guide_id)),
            ("tau0", toml_f64(args.tau0)),
            ("steps", toml_int(args.steps as u64)),
            ("seed", toml_int(args.seed)),
            ("fs", toml_int(ckpt.config.fs as u64)),
            ("output", toml_str(args.out.display().to_string())),
        ],
    )?;
    outln!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_variations(args: VariationsArgs) -> Result<()> {
    let ckpt = checkpoint::load(&args.checkpoint)?;
    let den = denoiser_from_checkpoint(&ckpt)?;
    let guide = resolve_guide(
        args.guide.as_deref(),
        args.guide_spec.as_deref(),
        &ckpt.config,
        args.seed,
    )?;
    let tau0 = if guide.is_some() { args.tau0 } else { 1.0 };
    let run = SamplerRun {
        steps: args.steps,
        tau0,
        tau_p: Some(args.tau_p),
        revolutions: args.revolutions,
        seed: args.seed,
    };
    let frames = sample_revolutions(&den, guide.as_ref().map(|(g, _)| g.as_slice()), &run)?;
    let mut assemble_rng = rng_for(args.seed, "assemble");
    let track = assemble_track(&frames, ckpt.config.fs, args.duration, args.overlap, &mut assemble_rng)?;
    write_wav(&args.out, &track, ckpt.config.fs)?;
    if args.save_revolutions {
        for (n, frame) in frames.iter().enumerate() {
            let mut path = args.out.clone();
            path.set_extension(format!("rev{n}.wav"));
            write_wav(&path, frame, ckpt.config.fs)?;
        }
    }
    write_manifest(
        &args.out,
        vec![
            ("command", toml_str("variations")),
            ("checkpoint", toml_str(args.checkpoint.display().to_string())),
            ("checkpoint_hash", toml_str(checkpoint::file_hash(&args.checkpoint)?)),
            (
                "guide",
                toml_str(guide.as_ref().map(|(_, id)| id.clone()).unwrap_or_else(|| "none".into())),
            ),
            ("tau0", toml_f64(tau0)),
            ("tau_p", toml_f64(args.tau_p)),
            ("revolutions", toml_int(args.revolutions as u64)),
            ("duration", toml_f64(args.duration)),
            ("overlap", toml_f64(args.overlap)),
            ("steps", toml_int(args.steps as u64)),
            ("seed", toml_int(args.seed)),
            ("fs", toml_int(ckpt.config.fs as u64)),
            ("output", toml_str(args.out.display().to_string())),
        ],
    )?;
    outln!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_guide_synth(args: GuideSynthArgs) -> Result<()> {
    let (spec, source) = match (&args.spec, args.preset) {
        (Some(path), _) => (parse_guide_spec(path)?, path.display().to_string()),
        (None, true) => (GuideSpec::default_preset(args.fs), "preset".to_string()),
        (None, false) => {
            return Err(Error::Usage("guide-synth needs --spec or --preset".into()))
        }
    };
    let frame = compose_guide(&spec, args.seed)?;
    write_wav(&args.out, &frame, spec.fs)?;
    write_manifest(
        &args.out,
        vec![
            ("command", toml_str("guide-synth")),
            ("spec", toml_str(source)),
            ("seed", toml_int(args.seed)),
            ("fs", toml_int(spec.fs as u64)),
            ("length_s", toml_f64(spec.length_s)),
            ("output", toml_str(args.out.display().to_string())),
        ],
    )?;
    outln!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<()> {
    let assets: Vec<_> =
        args.inputs.iter().map(read_wav).collect::<Result<Vec<_>>>()?;
    let stem = |p: &Path| {
        p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "input".into())
    };
    match args.what {
        AnalyzeKind::Envelope => {
            for (asset, path) in assets.iter().zip(&args.inputs) {
                let env = analysis::temporal_envelope(
                    &asset.samples,
                    asset.fs as f64,
                    args.window,
                    None,
                )?;
                let out = format!("{}.{}.env.tsv", args.out, stem(path));
                analysis::write_series(&out, env.hop_s, &env.values)?;
                outln!("wrote {out}");
            }
        }
        AnalyzeKind::Bark => {
            for (asset, path) in assets.iter().zip(&args.inputs) {
                let bark = analysis::bark_envelope(&asset.samples, asset.fs as f64)?;
                let out = format!("{}.{}.bark.tsv", args.out, stem(path));
                let mut text = String::new();
                for (edges, v) in bark.band_edges_hz.windows(2).zip(&bark.band_db) {
                    text.push_str(&format!("{:.1}\t{:.1}\t{v:.3}\n", edges[0], edges[1]));
                }
                std::fs::write(&out, text).map_err(|e| Error::io(&out, e))?;
                outln!("wrote {out}");
            }
        }
        AnalyzeKind::Spectrogram => {
            for (asset, path) in assets.iter().zip(&args.inputs) {
                let sg = analysis::log_spectrogram(
                    &asset.samples,
                    asset.fs as f64,
                    args.fft_size,
                    args.fft_hop,
                )?;
                let grid = format!("{}.{}.spec.tsv", args.out, stem(path));
                let png = format!("{}.{}.spec.png", args.out, stem(path));
                sg.write_grid(&grid)?;
                sg.write_png(&png)?;
                outln!("wrote {grid} and {png}");
            }
        }
        AnalyzeKind::Deviation => {
            if assets.len() < 2 {
                return Err(Error::Usage("deviation analysis needs at least 2 inputs".into()));
            }
            let fs = assets[0].fs;
            if assets.iter().any(|a| a.fs != fs) {
                return Err(Error::domain("cli", "deviation inputs must share a sample rate"));
            }
            let mode = match args.mode {
                DeviationModeArg::Reference => analysis::DeviationMode::FromReference,
                DeviationModeArg::Pairs => analysis::DeviationMode::AllPairs,
            };
            let envs: Vec<Vec<f64>> = assets
                .iter()
                .map(|a| {
                    analysis::temporal_envelope(&a.samples, fs as f64, args.window, None)
                        .map(|e| e.values)
                })
                .collect::<Result<_>>()?;
            let hop = args.window / 2.0;
            let profile = analysis::pairwise_deviation_std(&envs, mode)?;
            let out = format!("{}.temporal_deviation.tsv", args.out);
            analysis::write_series(&out, hop, &profile)?;
            outln!("wrote {out}");
            let barks: Vec<Vec<f64>> = assets
                .iter()
                .map(|a| analysis::bark_envelope(&a.samples, fs as f64).map(|b| b.band_db))
                .collect::<Result<_>>()?;
            let profile = analysis::pairwise_deviation_std(&barks, mode)?;
            let out = format!("{}.bark_deviation.tsv", args.out);
            analysis::write_series(&out, 1.0, &profile)?;
            outln!("wrote {out}");
        }
    }
    Ok(())
}

fn cmd_info(args: InfoArgs) -> Result<()> {
    let ckpt = checkpoint::load(&args.checkpoint)?;
    {
        use std::io::Write as _;
        let _ = write!(std::io::stdout(), "{}", checkpoint::summary(&ckpt));
    }
    outln!("file_hash: {}", checkpoint::file_hash(&args.checkpoint)?);
    Ok(())
}
