use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use facetone::faceprep::{aggregate_candidates, face_window, load_candidates, RectCandidate};
use facetone::gifopt::save_history_csv;
use facetone::grading::{assemble_guide, idt_transfer};
use facetone::imgcore::io::{load_mask, load_rgb, parse_hex_color, save_gray, save_mask, save_rgb};
use facetone::imgcore::ImageRgb;
use facetone::matte::{init_trimap, matte_iterate, replace_background};
use facetone::pipeline::{
    correct_headshot, semiauto_correct, yearbook_generate, Background, Correction, PipelineConfig, RunReport,
};
use facetone::skinmask::extract_skin;
use facetone::{Error, Result};

#[derive(Parser)]
#[command(name = "facetone", version, about = "Facial skin color correction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Correct the input's skin colors toward the target's.
    Correct {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        faces: Faces,
        #[command(flatten)]
        tuning: Tuning,
        /// Write the skin region as a PNG mask.
        #[arg(long)]
        mask_out: Option<PathBuf>,
        /// Write per-iteration solver history as CSV.
        #[arg(long)]
        diagnostics: Option<PathBuf>,
    },
    /// Crop, correct and composite onto a new background.
    Yearbook {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        faces: Faces,
        #[command(flatten)]
        tuning: Tuning,
        /// Replacement background: a PNG of the output size or a hex color such as "#4a6fb3".
        #[arg(long)]
        background: String,
        /// Write the matte as an 8-bit grayscale PNG.
        #[arg(long)]
        alpha_out: Option<PathBuf>,
        #[arg(long)]
        mask_out: Option<PathBuf>,
        #[arg(long)]
        diagnostics: Option<PathBuf>,
    },
    /// Correct with hand-made region masks instead of face candidates.
    Semiauto {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        tuning: Tuning,
        #[arg(long)]
        skin_mask: PathBuf,
        #[arg(long)]
        background_mask: PathBuf,
        #[arg(long)]
        target_mask: PathBuf,
        #[arg(long)]
        diagnostics: Option<PathBuf>,
    },
    /// Write the automatically extracted skin region of one image.
    ExtractMask {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        mask_out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write the grading guide: input with its skin recolored toward the target.
    Grade {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        faces: Faces,
        #[command(flatten)]
        tuning: Tuning,
        #[arg(long)]
        mask_out: Option<PathBuf>,
    },
    /// Matte one portrait and optionally composite it onto a background.
    Matte {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        alpha_out: PathBuf,
        #[arg(long)]
        background: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// JSON pipeline configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the run report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct Faces {
    /// Face candidates of the input, a JSON list of {x, y, w, h}.
    #[arg(long)]
    candidates: PathBuf,
    #[arg(long)]
    target_candidates: PathBuf,
}

#[derive(Args, Default)]
struct Tuning {
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    lipschitz: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    eta_s_scale: Option<f64>,
    #[arg(long)]
    eta_b_scale: Option<f64>,
    #[arg(long)]
    idt_iters: Option<usize>,
    #[arg(long)]
    idt_bins: Option<usize>,
    /// Skip the luminance graft.
    #[arg(long)]
    no_luma: bool,
}

fn load_config(path: Option<&Path>, seed: Option<u64>, tuning: &Tuning) -> Result<PipelineConfig> {
    let mut cfg = match path {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = seed {
        cfg = cfg.with_seed(s);
    }
    let gif = &mut cfg.gif;
    macro_rules! apply {
        ($($flag:expr => $field:expr),* $(,)?) => {
            $(if let Some(v) = $flag { $field = v; })*
        };
    }
    apply!(
        tuning.window => gif.window,
        tuning.epsilon => gif.epsilon,
        tuning.lipschitz => gif.lipschitz,
        tuning.max_iters => gif.max_iters,
        tuning.tol => gif.tol,
        tuning.eta_s_scale => gif.eta_s_scale,
        tuning.eta_b_scale => gif.eta_b_scale,
        tuning.idt_iters => cfg.idt.iterations,
        tuning.idt_bins => cfg.idt.bins,
    );
    if tuning.no_luma {
        cfg.stages.luma = false;
    }
    Ok(cfg)
}

/// A PNG path or a hex color.
fn parse_background(spec: &str) -> Result<Background<f64>> {
    let path = Path::new(spec);
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) || path.exists() {
        Ok(Background::Image(load_rgb(path)?))
    } else {
        Ok(Background::Color(parse_hex_color(spec)?))
    }
}

fn write_correction_extras(
    out: &Correction<f64>,
    mask_out: Option<&Path>,
    diagnostics: Option<&Path>,
) -> Result<()> {
    if let Some(p) = mask_out {
        save_mask(p, &out.regions.skin)?;
    }
    if let Some(p) = diagnostics {
        save_history_csv(p, &out.history)?;
    }
    Ok(())
}

fn save_report(report: &RunReport, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => report.save(p),
        None => Ok(()),
    }
}

fn faces(f: &Faces) -> Result<(Vec<RectCandidate>, Vec<RectCandidate>)> {
    Ok((load_candidates(&f.candidates)?, load_candidates(&f.target_candidates)?))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Correct {
            common,
            faces: f,
            tuning,
            mask_out,
            diagnostics,
        } => {
            let cfg = load_config(common.config.as_deref(), common.seed, &tuning)?;
            let (ic, tc) = faces(&f)?;
            let input: ImageRgb<f64> = load_rgb(&common.input)?;
            let target: ImageRgb<f64> = load_rgb(&common.target)?;
            let out = correct_headshot(&input, &target, &ic, &tc, &cfg)?;
            save_rgb(&common.output, &out.image)?;
            write_correction_extras(&out, mask_out.as_deref(), diagnostics.as_deref())?;
            save_report(&out.report, common.report.as_deref())
        }
        Command::Yearbook {
            common,
            faces: f,
            tuning,
            background,
            alpha_out,
            mask_out,
            diagnostics,
        } => {
            let cfg = load_config(common.config.as_deref(), common.seed, &tuning)?;
            let (ic, tc) = faces(&f)?;
            let bg = parse_background(&background)?;
            let input: ImageRgb<f64> = load_rgb(&common.input)?;
            let target: ImageRgb<f64> = load_rgb(&common.target)?;
            let out = yearbook_generate(&input, &target, &bg, &ic, &tc, &cfg)?;
            save_rgb(&common.output, &out.image)?;
            if let Some(p) = alpha_out {
                save_gray(p, &out.alpha.alpha, out.alpha.height, out.alpha.width)?;
            }
            write_correction_extras(&out.correction, mask_out.as_deref(), diagnostics.as_deref())?;
            save_report(&out.report, common.report.as_deref())
        }
        Command::Semiauto {
            common,
            tuning,
            skin_mask,
            background_mask,
            target_mask,
            diagnostics,
        } => {
            let cfg = load_config(common.config.as_deref(), common.seed, &tuning)?;
            let input: ImageRgb<f64> = load_rgb(&common.input)?;
            let target: ImageRgb<f64> = load_rgb(&common.target)?;
            let skin = load_mask(&skin_mask)?;
            let bg = load_mask(&background_mask)?;
            let tmask = load_mask(&target_mask)?;
            let out = semiauto_correct(&input, &target, &skin, &bg, &tmask, &cfg)?;
            save_rgb(&common.output, &out.image)?;
            write_correction_extras(&out, None, diagnostics.as_deref())?;
            save_report(&out.report, common.report.as_deref())
        }
        Command::ExtractMask {
            input,
            candidates,
            mask_out,
            config,
            seed,
        } => {
            let cfg = load_config(config.as_deref(), seed, &Tuning::default())?;
            let img: ImageRgb<f64> = load_rgb(&input)?;
            let face = face_window(aggregate_candidates(&load_candidates(&candidates)?)?, cfg.scale, img.height(), img.width())?;
            let skin = extract_skin(&img, &face, &cfg.skin, cfg.seed)?.skin;
            if skin.is_empty() {
                return Err(Error::SkinRegionNotFound { image: "input".into() });
            }
            save_mask(&mask_out, &skin)
        }
        Command::Grade {
            common,
            faces: f,
            tuning,
            mask_out,
        } => {
            let cfg = load_config(common.config.as_deref(), common.seed, &tuning)?;
            let (ic, tc) = faces(&f)?;
            let input: ImageRgb<f64> = load_rgb(&common.input)?;
            let target: ImageRgb<f64> = load_rgb(&common.target)?;
            let skin_of = |img: &ImageRgb<f64>, cands: &[RectCandidate], which: &str| -> Result<_> {
                let face = face_window(aggregate_candidates(cands)?, cfg.scale, img.height(), img.width())?;
                let skin = extract_skin(img, &face, &cfg.skin, cfg.seed)?.skin;
                if skin.is_empty() {
                    return Err(Error::SkinRegionNotFound { image: which.into() });
                }
                Ok(skin)
            };
            let skin = skin_of(&input, &ic, "input")?;
            let tskin = skin_of(&target, &tc, "target")?;
            let mapped = idt_transfer(&input.gather(skin.indices()), &target.gather(tskin.indices()), &cfg.idt)?;
            let guide = assemble_guide(&input, &mapped, &skin)?;
            save_rgb(&common.output, &guide)?;
            if let Some(p) = mask_out {
                save_mask(p, &skin)?;
            }
            Ok(())
        }
        Command::Matte {
            input,
            candidates,
            alpha_out,
            background,
            output,
            config,
            seed,
        } => {
            let cfg = load_config(config.as_deref(), seed, &Tuning::default())?;
            if background.is_some() != output.is_some() {
                return Err(Error::InvalidInput("--background and --output must be given together".into()));
            }
            let img: ImageRgb<f64> = load_rgb(&input)?;
            let face = face_window(aggregate_candidates(&load_candidates(&candidates)?)?, cfg.scale, img.height(), img.width())?;
            let skin = extract_skin(&img, &face, &cfg.skin, cfg.seed)?.skin;
            let (trimap, warnings) = init_trimap(&face, &skin, &img, &cfg.matting.geometry)?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            let matte = matte_iterate(&img, &trimap, &cfg.matting)?;
            save_gray(&alpha_out, &matte.matte.alpha, img.height(), img.width())?;
            if let (Some(bg), Some(out)) = (background, output) {
                let z = parse_background(&bg)?.to_image(img.height(), img.width())?;
                save_rgb(out, &replace_background(&img, &matte.matte, &z)?)?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let payload = serde_json::json!({ "error": { "code": e.code(), "message": e.to_string() } });
            eprintln!("{payload}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
