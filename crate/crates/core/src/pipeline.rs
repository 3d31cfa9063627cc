//! End-to-end flows: automatic headshot correction, yearbook generation and
//! mask-driven correction.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::faceprep::{aggregate_candidates, candidates_in_crop, crop_resize, face_window, FaceArea, RectCandidate};
use crate::gifopt::{hybrid_filter, GifConfig, IterationRecord};
use crate::grading::{assemble_guide, idt_transfer, IdtConfig};
use crate::imgcore::{ImageRgb, RegionMask};
use crate::luma::preserve_luminance;
use crate::matte::{init_trimap, matte_iterate, replace_background, AlphaMat, MatteRound, MattingConfig};
use crate::scalar::Scalar;
use crate::skinmask::{build_regions, extract_skin, RegionSystem, SkinConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StageToggles {
    pub grading: bool,
    pub luma: bool,
}

impl Default for StageToggles {
    fn default() -> Self {
        Self {
            grading: true,
            luma: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Working window side is `2 l ŵ + 1`.
    pub scale: f64,
    pub skin: SkinConfig,
    pub gif: GifConfig,
    pub idt: IdtConfig,
    pub matting: MattingConfig,
    pub crop_side: usize,
    /// Seed for hue clustering.
    pub seed: u64,
    pub stages: StageToggles,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            scale: 2.0,
            skin: SkinConfig::default(),
            gif: GifConfig::default(),
            idt: IdtConfig::default(),
            matting: MattingConfig::default(),
            crop_side: 320,
            seed: 0,
            stages: StageToggles::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Json {
            path: "<inline>".into(),
            message: e.to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Sets both the clustering and the rotation seeds.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.idt.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub stages: Vec<StageTiming>,
    pub total_seconds: f64,
    pub solver_iterations: usize,
    pub solver_converged: bool,
    pub final_objective: f64,
    pub skin_pixels: usize,
    pub background_pixels: usize,
    pub boundary_pixels: usize,
    pub eta_s: f64,
    pub eta_b: f64,
    /// Constraint distances of the filtered image before the luminance graft.
    pub dist_skin: f64,
    pub dist_background: f64,
    pub matte_rounds: Vec<MatteRound>,
    pub warnings: Vec<String>,
}

impl RunReport {
    /// Copy with every wall-clock field zeroed.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        r.total_seconds = 0.0;
        for s in &mut r.stages {
            s.seconds = 0.0;
        }
        r
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

struct Clock {
    stage: Instant,
}

impl Clock {
    fn new() -> Self {
        Self { stage: Instant::now() }
    }

    fn lap(&mut self, report: &mut RunReport, stage: &str) {
        let now = Instant::now();
        report.stages.push(StageTiming {
            stage: stage.into(),
            seconds: (now - self.stage).as_secs_f64(),
        });
        self.stage = now;
    }

    fn finish(&self, report: &mut RunReport) {
        report.total_seconds = report.stages.iter().map(|s| s.seconds).sum();
    }
}

#[derive(Debug, Clone)]
pub struct Correction<T> {
    pub image: ImageRgb<T>,
    /// Filter output before the luminance graft.
    pub filtered: ImageRgb<T>,
    pub guide: ImageRgb<T>,
    pub regions: RegionSystem,
    pub history: Vec<IterationRecord>,
    pub report: RunReport,
}

fn locate_face(cands: &[RectCandidate], scale: f64, h: usize, w: usize) -> Result<FaceArea> {
    for c in cands {
        c.validate(h, w)?;
    }
    face_window(aggregate_candidates(cands)?, scale, h, w)
}

fn find_skin<T: Scalar>(img: &ImageRgb<T>, face: &FaceArea, cfg: &PipelineConfig, which: &str) -> Result<RegionMask> {
    let skin = extract_skin(img, face, &cfg.skin, cfg.seed)?.skin;
    if skin.is_empty() {
        return Err(Error::SkinRegionNotFound { image: which.into() });
    }
    Ok(skin)
}

/// Grading, filtering and luminance graft for fixed regions.
fn correct_with_regions<T: Scalar>(
    input: &ImageRgb<T>,
    target: &ImageRgb<T>,
    regions: RegionSystem,
    target_skin: &RegionMask,
    cfg: &PipelineConfig,
    mut report: RunReport,
    clock: &mut Clock,
) -> Result<Correction<T>> {
    if regions.skin.is_empty() {
        return Err(Error::SkinRegionNotFound { image: "input".into() });
    }
    if target_skin.is_empty() {
        return Err(Error::SkinRegionNotFound { image: "target".into() });
    }
    target_skin.check_dims(target.height(), target.width())?;
    report.skin_pixels = regions.skin.count();
    report.background_pixels = regions.background.count();
    report.boundary_pixels = regions.boundary.count();

    let guide = if cfg.stages.grading {
        let src = input.gather(regions.skin.indices());
        let tgt = target.gather(target_skin.indices());
        let mapped = idt_transfer(&src, &tgt, &cfg.idt)?;
        assemble_guide(input, &mapped, &regions.skin)?
    } else {
        input.clone()
    };
    clock.lap(&mut report, "grading");

    let gif = hybrid_filter(input, &guide, &regions.skin, &regions.background, &cfg.gif)?;
    let last = gif.solve.history.last().copied();
    report.solver_iterations = gif.solve.iterations;
    report.solver_converged = gif.solve.converged;
    report.final_objective = gif.solve.final_objective();
    report.eta_s = gif.eta_s.to_f64_lossy();
    report.eta_b = gif.eta_b.to_f64_lossy();
    if let Some(r) = last {
        report.dist_skin = r.dist_skin;
        report.dist_background = r.dist_background;
    }
    if !gif.solve.converged && cfg.gif.tol > 0.0 {
        report
            .warnings
            .push(format!("solver stopped at the iteration cap ({})", cfg.gif.max_iters));
    }
    clock.lap(&mut report, "filter");

    let image = if cfg.stages.luma {
        preserve_luminance(input, &gif.image)?
    } else {
        gif.image.clone()
    };
    clock.lap(&mut report, "luma");

    Ok(Correction {
        image,
        filtered: gif.image,
        guide,
        regions,
        history: gif.solve.history,
        report,
    })
}

/// Automatic correction of `input`'s skin toward `target`'s skin colors.
pub fn correct_headshot<T: Scalar>(
    input: &ImageRgb<T>,
    target: &ImageRgb<T>,
    input_candidates: &[RectCandidate],
    target_candidates: &[RectCandidate],
    cfg: &PipelineConfig,
) -> Result<Correction<T>> {
    let mut clock = Clock::new();
    let mut report = RunReport::default();
    let (h, w) = input.dims();
    let face = locate_face(input_candidates, cfg.scale, h, w)?;
    let target_face = locate_face(target_candidates, cfg.scale, target.height(), target.width())?;
    clock.lap(&mut report, "faceprep");
    let skin = find_skin(input, &face, cfg, "input")?;
    let target_skin = find_skin(target, &target_face, cfg, "target")?;
    let regions = build_regions(&skin, cfg.skin.dilation_radius);
    clock.lap(&mut report, "skinmask");
    let mut out = correct_with_regions(input, target, regions, &target_skin, cfg, report, &mut clock)?;
    clock.finish(&mut out.report);
    Ok(out)
}

/// Correction with user-supplied regions; pixels outside both masks are free.
pub fn semiauto_correct<T: Scalar>(
    source: &ImageRgb<T>,
    target: &ImageRgb<T>,
    skin: &RegionMask,
    background: &RegionMask,
    target_skin: &RegionMask,
    cfg: &PipelineConfig,
) -> Result<Correction<T>> {
    let mut clock = Clock::new();
    let (h, w) = source.dims();
    skin.check_dims(h, w)?;
    background.check_dims(h, w)?;
    let regions = RegionSystem::from_masks(skin.clone(), background.clone())?;
    let mut out = correct_with_regions(source, target, regions, target_skin, cfg, RunReport::default(), &mut clock)?;
    clock.finish(&mut out.report);
    Ok(out)
}

/// Replacement background: a flat color or an image of the output size.
#[derive(Debug, Clone)]
pub enum Background<T> {
    Color([f64; 3]),
    Image(ImageRgb<T>),
}

impl<T: Scalar> Background<T> {
    pub fn to_image(&self, height: usize, width: usize) -> Result<ImageRgb<T>> {
        match self {
            Background::Color(c) => {
                if c.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(Error::invalid("background color outside [0, 1]"));
                }
                Ok(ImageRgb::filled(height, width, c.map(T::lit)))
            }
            Background::Image(img) => {
                if img.dims() != (height, width) {
                    return Err(Error::DimensionMismatch {
                        expected: (height, width),
                        actual: img.dims(),
                    });
                }
                Ok(img.clone())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct YearbookOutput<T> {
    pub image: ImageRgb<T>,
    pub alpha: AlphaMat<T>,
    pub correction: Correction<T>,
    pub report: RunReport,
}

/// Crop to the face window, correct, matte and composite onto `background`.
pub fn yearbook_generate<T: Scalar>(
    input: &ImageRgb<T>,
    target: &ImageRgb<T>,
    background: &Background<T>,
    input_candidates: &[RectCandidate],
    target_candidates: &[RectCandidate],
    cfg: &PipelineConfig,
) -> Result<YearbookOutput<T>> {
    let mut clock = Clock::new();
    let mut report = RunReport::default();
    let side = cfg.crop_side;
    let z = background.to_image(side, side)?;
    let (h, w) = input.dims();
    let face = locate_face(input_candidates, cfg.scale, h, w)?;
    let crop = crop_resize(input, &face, side)?;
    let crop_face = locate_face(&candidates_in_crop(input_candidates, &face, side), cfg.scale, side, side)?;
    let target_face = locate_face(target_candidates, cfg.scale, target.height(), target.width())?;
    clock.lap(&mut report, "faceprep");

    let skin = find_skin(&crop, &crop_face, cfg, "input")?;
    let target_skin = find_skin(target, &target_face, cfg, "target")?;
    let regions = build_regions(&skin, cfg.skin.dilation_radius);
    clock.lap(&mut report, "skinmask");

    let correction = correct_with_regions(&crop, target, regions, &target_skin, cfg, report, &mut clock)?;
    let mut report = correction.report.clone();

    let (trimap, warnings) = init_trimap(&crop_face, &correction.regions.skin, &correction.image, &cfg.matting.geometry)?;
    report.warnings.extend(warnings);
    let matte = matte_iterate(&correction.image, &trimap, &cfg.matting)?;
    report.matte_rounds = matte.rounds.clone();
    clock.lap(&mut report, "matte");

    let image = replace_background(&correction.image, &matte.matte, &z)?;
    clock.lap(&mut report, "composite");
    clock.finish(&mut report);
    Ok(YearbookOutput {
        image,
        alpha: matte.matte,
        correction,
        report,
    })
}
