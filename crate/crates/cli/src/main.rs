use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use beatmix::embed::HttpConfig;
use beatmix::mixup::Strategy;
use beatmix::pipeline::{
    cmd_analyze, cmd_embed, cmd_eval, cmd_fit_codec, cmd_group, cmd_ingest, cmd_mix, cmd_segment, run_pipeline,
    write_synthetic_corpus, CaptionSource, EmbedProvider, EvalOptions, MixOptions, PipelineConfig, PipelineError,
    SyntheticCorpus, Workspace,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "beatmix", version, about = "Beat-synchronous mixup and evaluation for music corpora")]
struct Cli {
    /// Work directory holding the manifest and every derived artifact.
    #[arg(long, short = 'w', global = true, default_value = ".")]
    work: PathBuf,
    /// TOML config; defaults to `<work>/beatmix.toml` when that exists.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for per-track stages (0 = all cores).
    #[arg(long, short = 'j', global = true)]
    jobs: Option<usize>,
    /// Only print warnings and errors.
    #[arg(long, short = 'q', global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Bam,
    Blm,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Bam => Strategy::Bam,
            StrategyArg::Blm => Strategy::Blm,
        }
    }
}

#[derive(Args)]
struct MixArgs {
    #[arg(long, value_enum, default_value = "bam")]
    strategy: StrategyArg,
    /// Number of output clips.
    #[arg(long, short = 'n', default_value_t = 100)]
    count: usize,
    /// Probability that a clip is mixed.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Scan a directory of WAV files and write the manifest.
    Ingest {
        corpus: PathBuf,
        /// JSON object of track id → caption, instead of `<name>.txt` sidecars.
        #[arg(long)]
        captions: Option<PathBuf>,
    },
    /// Estimate tempo, beats and downbeats for every track.
    Analyze {
        /// Read `<name>.beats.json` next to each WAV instead of tracking.
        #[arg(long)]
        external_beats: bool,
    },
    /// Bucket analyzed tracks into tempo groups.
    Group {
        #[arg(long)]
        bucket_width: Option<f64>,
    },
    /// Fit the PCA patch codec used for latent mixing.
    FitCodec {
        /// Latent channels.
        #[arg(long, visible_alias = "C")]
        channels: Option<usize>,
        /// Patch side length.
        #[arg(long, visible_alias = "P")]
        patch: Option<usize>,
    },
    /// Render mixup clips with their specs.
    Mix(MixArgs),
    /// Index fixed-length training segments.
    Segment {
        #[arg(long)]
        seconds: Option<f64>,
    },
    /// Compute embeddings and posteriors for clips, references, segments and captions.
    Embed {
        /// Embedding service base URL; built-in embedders when omitted.
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long, default_value_t = 512)]
        dim: usize,
        #[arg(long, default_value_t = 30)]
        timeout_secs: u64,
        #[arg(long, default_value_t = 3)]
        retries: u32,
        #[arg(long, default_value_t = 8)]
        max_inflight: usize,
    },
    /// Compute the metrics report from embedding and posterior files.
    Eval {
        #[arg(long)]
        gen_emb: PathBuf,
        #[arg(long)]
        train_seg_emb: Option<PathBuf>,
        #[arg(long)]
        text_emb: Option<PathBuf>,
        #[arg(long)]
        gt_emb: Option<PathBuf>,
        #[arg(long)]
        gen_post: Option<PathBuf>,
        #[arg(long)]
        gt_post: Option<PathBuf>,
        /// Comma-separated SIM_AA thresholds.
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<f64>>,
        #[arg(long, default_value = "audio")]
        fd_label: String,
        /// Output directory; the work directory by default.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ingest through eval with the built-in embedders.
    Run {
        corpus: PathBuf,
        #[arg(long)]
        captions: Option<PathBuf>,
        #[command(flatten)]
        mix: MixArgs,
    },
    /// Write a deterministic synthetic corpus.
    SynthCorpus {
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        tracks: usize,
        #[arg(long, default_value_t = 24.0)]
        seconds: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the effective configuration as TOML.
    ShowConfig,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, PipelineError> {
    let ws_file = Workspace::new(&cli.work).config_file();
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None if ws_file.is_file() => PipelineConfig::load(&ws_file)?,
        None => PipelineConfig::default(),
    };
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    match &cli.command {
        Command::Group { bucket_width: Some(w) } => cfg.bucket_width = *w,
        Command::FitCodec { channels, patch } => {
            if let Some(c) = channels {
                cfg.codec_channels = *c;
            }
            if let Some(p) = patch {
                cfg.patch_size = *p;
            }
        }
        Command::Mix(m) | Command::Run { mix: m, .. } => {
            if let Some(p) = m.p {
                cfg.mixup_p = p;
            }
            if let Some(s) = m.seed {
                cfg.seed = s;
            }
        }
        Command::Segment { seconds: Some(s) } => cfg.segment_seconds = *s,
        Command::Eval { thresholds: Some(t), .. } => cfg.thresholds = t.clone(),
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn captions(path: &Option<PathBuf>) -> CaptionSource {
    match path {
        Some(p) => CaptionSource::JsonMap(p.clone()),
        None => CaptionSource::Sidecars,
    }
}

fn execute(cli: &Cli) -> Result<(), PipelineError> {
    let ws = Workspace::new(&cli.work);
    if let Command::SynthCorpus { out, tracks, seconds, seed } = &cli.command {
        let corpus = SyntheticCorpus {
            tracks: *tracks,
            seconds: *seconds,
            seed: *seed,
            ..SyntheticCorpus::default()
        };
        let paths = write_synthetic_corpus(out, &corpus)?;
        log::info!("wrote {} tracks to {}", paths.len(), out.display());
        return Ok(());
    }
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Ingest { corpus, captions: c } => {
            let (_, s) = cmd_ingest(&ws, corpus, &captions(c), &cfg)?;
            log::info!("{} tracks, {} missing captions", s.tracks, s.missing_captions);
        }
        Command::Analyze { external_beats } => {
            let (_, s) = cmd_analyze(&ws, &cfg, *external_beats)?;
            log::info!(
                "{} computed, {} from cache, {} failed",
                s.computed,
                s.cache_hits,
                s.failed.len()
            );
        }
        Command::Group { .. } => {
            let t = cmd_group(&ws, &cfg)?;
            for g in &t.groups {
                log::info!(
                    "group {} [{}, {}) BPM: {} tracks",
                    g.group_id,
                    g.bpm_range.0,
                    g.bpm_range.1,
                    g.members.len()
                );
            }
        }
        Command::FitCodec { .. } => {
            let codec = cmd_fit_codec(&ws, &cfg)?;
            if let Some(s) = &codec.fit_stats {
                log::info!(
                    "{} patches, retained variance {:.4} of {:.4}",
                    s.patches,
                    s.retained_variance,
                    s.total_variance
                );
            }
        }
        Command::Mix(m) => {
            let s = cmd_mix(&ws, &cfg, &mix_options(m))?;
            log::info!("{} clips, {} mixed", s.specs.len(), s.mixed);
        }
        Command::Segment { .. } => {
            let idx = cmd_segment(&ws, &cfg)?;
            log::info!("{} segments, {} warnings", idx.segments.len(), idx.warnings.len());
        }
        Command::Embed {
            endpoint,
            dim,
            timeout_secs,
            retries,
            max_inflight,
        } => {
            let provider = match endpoint {
                None => EmbedProvider::Builtin,
                Some(url) => EmbedProvider::Http(HttpConfig {
                    endpoint: url.clone(),
                    dim: *dim,
                    timeout: Duration::from_secs(*timeout_secs),
                    retries: *retries,
                    max_inflight: *max_inflight,
                    ..HttpConfig::default()
                }),
            };
            let s = cmd_embed(&ws, &cfg, &provider)?;
            for (name, n) in &s.files {
                log::info!("{name}: {n} records");
            }
        }
        Command::Eval {
            gen_emb,
            train_seg_emb,
            text_emb,
            gt_emb,
            gen_post,
            gt_post,
            fd_label,
            out,
            ..
        } => {
            let opts = EvalOptions {
                gen_emb: gen_emb.clone(),
                train_seg_emb: train_seg_emb.clone(),
                text_emb: text_emb.clone(),
                gt_emb: gt_emb.clone(),
                gen_post: gen_post.clone(),
                gt_post: gt_post.clone(),
                thresholds: cfg.thresholds.clone(),
                fd_label: fd_label.clone(),
                out_dir: out.clone().unwrap_or_else(|| cli.work.clone()),
            };
            let report = cmd_eval(&opts)?;
            eprint!("{}", report.to_table());
        }
        Command::Run { corpus, captions: c, mix } => {
            let report = run_pipeline(&ws, corpus, &captions(c), &cfg, &mix_options(mix))?;
            eprint!("{}", report.to_table());
        }
        Command::ShowConfig => print!("{}", cfg.to_toml_string()),
        Command::SynthCorpus { .. } => unreachable!("handled above"),
    }
    Ok(())
}

fn mix_options(m: &MixArgs) -> MixOptions {
    MixOptions {
        strategy: m.strategy.into(),
        count: m.count,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match std::panic::catch_unwind(|| execute(&cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => ExitCode::from(2),
    }
}
