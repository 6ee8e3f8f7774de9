//! Command-line front end: synthesize data, track, evaluate, check gradients
//! and render overlays.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use polytrack::gradcheck::run_all;
use polytrack::io::{list_pnm_files, load_frames_dir, load_pnm, load_track, save_pnm, save_track, write_atomic};
use polytrack::lam::{load_checkpoint, make_samples, save_checkpoint, train, LamConfig, LamParams, TrainConfig};
use polytrack::metrics::evaluate;
use polytrack::synth::{generate_default_sequence, write_sequence, SynthConfig};
use polytrack::tracker::{track_sequence_with_diagnostics, Backend, TrackerConfig};
use polytrack::{Error, FrameImage, PointSet, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Deserialize;

#[derive(Parser)]
#[command(name = "polytrack", version, about = "Polygonal point set tracking toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic sequence with ground truth.
    Synth(SynthArgs),
    /// Track a point set through a directory of frames.
    Track(TrackArgs),
    /// Score a predicted track against ground truth; prints one JSON report.
    Eval(EvalArgs),
    /// Run every finite-difference gradient suite.
    CheckGrad(CheckGradArgs),
    /// Draw a track over its frames.
    Overlay(OverlayArgs),
    /// Fit a network checkpoint on synthetic sequences.
    Train(TrainArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed from the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TrackArgs {
    #[arg(long)]
    frames: PathBuf,
    /// Track file whose first frame is the initial point set.
    #[arg(long)]
    init: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Writes per-frame diagnostics as JSON.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, requires = "gt_masks")]
    pred_masks: Option<PathBuf>,
    #[arg(long, requires = "pred_masks")]
    gt_masks: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = ".04,.08,.16")]
    taus: Vec<f64>,
}

#[derive(Args)]
struct CheckGradArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct OverlayArgs {
    #[arg(long)]
    frames: PathBuf,
    #[arg(long)]
    track: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// JSON with optional `synth`, `lam` and `train` sections.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 20)]
    sequences: u64,
}

#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct TrainFile {
    synth: Option<SynthConfig>,
    lam: Option<LamConfig>,
    train: Option<TrainConfig>,
}

fn read_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        context: path.display().to_string(),
        message: e.to_string(),
    })
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("plain data serializes");
    write_atomic(path, text.as_bytes())
}

fn synth(args: SynthArgs) -> Result<()> {
    let mut cfg: SynthConfig = read_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let seq = generate_default_sequence(&cfg)?;
    write_sequence(&seq, &cfg, &args.out)?;
    Ok(())
}

fn track(args: TrackArgs) -> Result<()> {
    let cfg: TrackerConfig = read_config(args.config.as_deref())?;
    cfg.validate()?;
    let params = match cfg.backend {
        Backend::Energy => None,
        Backend::Lam => {
            let ckpt = cfg
                .lam_checkpoint
                .as_ref()
                .ok_or_else(|| Error::Config("lam backend needs lam_checkpoint".into()))?;
            // relative checkpoint paths are taken from the config file's directory
            let base = args.config.as_deref().and_then(Path::parent).unwrap_or(Path::new(""));
            Some(load_checkpoint(&base.join(ckpt))?)
        }
    };
    let frames = load_frames_dir(&args.frames)?;
    let init = load_track(&args.init)?;
    let first = init.frames.first().ok_or(Error::EmptySet)?;
    let (pred, diagnostics) = track_sequence_with_diagnostics(&frames, first, &cfg, params.as_ref())?;
    save_track(&args.out, &pred)?;
    if let Some(path) = &args.diagnostics {
        write_json(path, &diagnostics)?;
    }
    Ok(())
}

fn load_masks(dir: &Path) -> Result<Vec<FrameImage>> {
    list_pnm_files(dir)?.iter().map(|p| load_pnm(p)).collect()
}

fn eval(args: EvalArgs) -> Result<()> {
    let pred = load_track(&args.pred)?;
    let gt = load_track(&args.gt)?;
    let masks = match (&args.pred_masks, &args.gt_masks) {
        (Some(p), Some(g)) => Some((load_masks(p)?, load_masks(g)?)),
        _ => None,
    };
    let report = evaluate(
        &pred,
        &gt,
        &args.taus,
        masks.as_ref().map(|(p, g)| (p.as_slice(), g.as_slice())),
    )?;
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(())
}

fn check_grad(args: CheckGradArgs) -> Result<bool> {
    let outcomes = run_all(args.seed)?;
    println!("{}", serde_json::to_string_pretty(&outcomes).expect("outcomes serialize"));
    Ok(outcomes.iter().all(|o| o.passed))
}

fn hue(i: usize, n: usize) -> [f64; 3] {
    let h = 6.0 * i as f64 / n.max(1) as f64;
    let x = 1.0 - ((h % 2.0) - 1.0).abs();
    match h as usize {
        0 => [1.0, x, 0.0],
        1 => [x, 1.0, 0.0],
        2 => [0.0, 1.0, x],
        3 => [0.0, x, 1.0],
        4 => [x, 0.0, 1.0],
        _ => [1.0, 0.0, x],
    }
}

fn put(img: &mut FrameImage, x: f64, y: f64, rgb: [f64; 3]) {
    let (c, r) = (x.floor(), y.floor());
    if c < 0.0 || r < 0.0 || c >= img.width() as f64 || r >= img.height() as f64 {
        return;
    }
    for (ch, v) in rgb.iter().enumerate() {
        img.set(c as usize, r as usize, ch, *v);
    }
}

fn draw_polygon(img: &mut FrameImage, ps: &PointSet) {
    let n = ps.len();
    for i in 0..n {
        let (a, b) = (ps.points()[i], ps.points()[(i + 1) % n]);
        let steps = (a.dist(b) * 2.0).ceil().max(1.0) as usize;
        for s in 0..=steps {
            let p = a + (b - a) * (s as f64 / steps as f64);
            put(img, p.x, p.y, [1.0, 1.0, 1.0]);
        }
    }
    for (i, (&p, &vis)) in ps.points().iter().zip(ps.visible()).enumerate() {
        if !vis {
            continue;
        }
        for dy in -1..=1 {
            for dx in -1..=1 {
                put(img, p.x + dx as f64, p.y + dy as f64, hue(i, n));
            }
        }
    }
}

fn overlay(args: OverlayArgs) -> Result<()> {
    let frames = load_frames_dir(&args.frames)?;
    let track = load_track(&args.track)?;
    if frames.len() != track.num_frames() {
        return Err(Error::ShapeMismatch(format!(
            "{} frames vs {} track frames",
            frames.len(),
            track.num_frames()
        )));
    }
    fs::create_dir_all(&args.out).map_err(|e| Error::Io {
        path: args.out.clone(),
        source: e,
    })?;
    for (t, (frame, ps)) in frames.iter().zip(&track.frames).enumerate() {
        let mut img = FrameImage::from_fn(frame.width(), frame.height(), 3, |c, r, ch| {
            frame.get(c, r, ch.min(frame.channels() - 1))
        });
        draw_polygon(&mut img, ps);
        save_pnm(&args.out.join(format!("{t:04}.ppm")), &img)?;
    }
    Ok(())
}

fn train_cmd(args: TrainArgs) -> Result<()> {
    let file: TrainFile = read_config(args.config.as_deref())?;
    let synth_cfg = file.synth.unwrap_or(SynthConfig {
        frames: 3,
        points: 32,
        width: 64,
        height: 64,
        ..SynthConfig::default()
    });
    let lam_cfg = file.lam.unwrap_or(LamConfig {
        in_channels: 8,
        hidden: 16,
        heads: 2,
        blocks: 2,
        ..LamConfig::default()
    });
    let train_cfg = file.train.unwrap_or_default();
    let mut seqs = Vec::new();
    for k in 0..args.sequences {
        let cfg = SynthConfig {
            seed: synth_cfg.seed.wrapping_add(k),
            ..synth_cfg.clone()
        };
        seqs.push(generate_default_sequence(&cfg)?);
    }
    let samples = make_samples(&seqs, &train_cfg)?;
    let mut params = LamParams::random(lam_cfg, &mut ChaCha8Rng::seed_from_u64(train_cfg.seed))?;
    let history = train(&mut params, &samples, &train_cfg)?;
    save_checkpoint(&args.out, &params)?;
    eprintln!(
        "objective {:.4} -> {:.4} over {} steps",
        history[0],
        history[history.len() - 1],
        train_cfg.steps
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Synth(a) => synth(a).map(|_| true),
        Command::Track(a) => track(a).map(|_| true),
        Command::Eval(a) => eval(a).map(|_| true),
        Command::CheckGrad(a) => check_grad(a),
        Command::Overlay(a) => overlay(a).map(|_| true),
        Command::Train(a) => train_cmd(a).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("polytrack: gradient check failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("polytrack: {e}");
            ExitCode::from(2)
        }
    }
}
