//! Foreground/background separation by closed-form matting with iterative
//! seed growing, plus background replacement.
//!
//! Convention: `α = 1` is foreground, and compositing is `α y + (1 − α) z`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::faceprep::FaceArea;
use crate::gifopt::GuideStats;
use crate::imgcore::{connected_components, erode_disc, rgb_to_hsv, ImageRgb, RegionMask};
use crate::scalar::Scalar;

/// Seed placement relative to the detected face box (`ŵ x ĥ`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeedGeometry {
    /// Hair candidates are pixels with HSV value below this.
    pub hair_value_max: f64,
    /// Height of the band above the face box, in units of `ĥ`.
    pub hair_band: f64,
    /// Clothes rectangle width, in units of `ŵ`.
    pub clothes_width: f64,
    /// Gap between the face box bottom and the clothes rectangle, in units of `ĥ`.
    pub clothes_offset: f64,
    pub clothes_erosion: usize,
    /// Side rectangle width as a fraction of image width (rounded up).
    pub side_width: f64,
    /// Side rectangles span the face-center row plus/minus this many `ĥ`.
    pub side_half_height: f64,
}

impl Default for SeedGeometry {
    fn default() -> Self {
        Self {
            hair_value_max: 0.35,
            hair_band: 0.5,
            clothes_width: 2.0,
            clothes_offset: 0.5,
            clothes_erosion: 5,
            side_width: 0.1,
            side_half_height: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MattingConfig {
    /// Seed-pinning weight.
    pub lambda: f64,
    pub epsilon: f64,
    /// Initial window side; later rounds halve the radius.
    pub window: usize,
    pub outer_iterations: usize,
    pub pcg_tol: f64,
    pub pcg_max_iters: usize,
    pub grow_low: f64,
    pub grow_high: f64,
    pub sigmoid_slope: f64,
    pub sigmoid_center: f64,
    pub geometry: SeedGeometry,
}

impl Default for MattingConfig {
    fn default() -> Self {
        Self {
            lambda: 100.0,
            epsilon: 1e-7,
            window: 31,
            outer_iterations: 4,
            pcg_tol: 1e-6,
            pcg_max_iters: 2000,
            grow_low: 0.2,
            grow_high: 0.8,
            sigmoid_slope: 10.0,
            sigmoid_center: 0.5,
            geometry: SeedGeometry::default(),
        }
    }
}

impl MattingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.grow_low < self.grow_high) {
            return Err(Error::invalid(format!(
                "grow thresholds must satisfy low < high, got {} and {}",
                self.grow_low, self.grow_high
            )));
        }
        if !(self.lambda > 0.0) || !(self.epsilon > 0.0) || !(self.pcg_tol > 0.0) {
            return Err(Error::invalid("lambda, epsilon and pcg_tol must be positive"));
        }
        if self.window < 3 || self.window % 2 == 0 {
            return Err(Error::invalid(format!("matting window must be odd and at least 3, got {}", self.window)));
        }
        Ok(())
    }

    /// Window radii per outer round: start at `window / 2`, halve with floor, stop at 1.
    pub fn radii(&self) -> Vec<usize> {
        let mut r = (self.window / 2).max(1);
        let mut out = Vec::with_capacity(self.outer_iterations);
        for _ in 0..self.outer_iterations {
            out.push(r);
            r = (r / 2).max(1);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trimap {
    foreground: RegionMask,
    background: RegionMask,
}

impl Trimap {
    pub fn new(foreground: RegionMask, background: RegionMask) -> Result<Self> {
        let (h, w) = foreground.dims();
        background.check_dims(h, w)?;
        if !foreground.is_disjoint(&background) {
            return Err(Error::invalid("foreground and background seeds overlap"));
        }
        Ok(Self { foreground, background })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.foreground.dims()
    }

    pub fn foreground(&self) -> &RegionMask {
        &self.foreground
    }

    pub fn background(&self) -> &RegionMask {
        &self.background
    }

    pub fn unknown(&self) -> RegionMask {
        self.foreground.union(&self.background).complement()
    }

    pub fn is_seed(&self, i: usize) -> bool {
        self.foreground.contains(i) || self.background.contains(i)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaMat<T> {
    pub height: usize,
    pub width: usize,
    pub alpha: Vec<T>,
}

impl<T: Scalar> AlphaMat<T> {
    pub fn new(height: usize, width: usize, alpha: Vec<T>) -> Result<Self> {
        if alpha.len() != height * width {
            return Err(Error::invalid(format!(
                "matte has {} values for a {height}x{width} image",
                alpha.len()
            )));
        }
        if alpha.iter().any(|a| !(*a >= T::zero() && *a <= T::one())) {
            return Err(Error::invalid("matte values must lie in [0, 1]"));
        }
        Ok(Self { height, width, alpha })
    }

    pub fn filled(height: usize, width: usize, value: T) -> Self {
        Self {
            height,
            width,
            alpha: vec![value.clamp01(); height * width],
        }
    }
}

/// Seeds for the yearbook matte, placed around the detected face.
/// Returns the trimap and any warnings about conflicting seeds.
pub fn init_trimap<T: Scalar>(
    face: &FaceArea,
    skin: &RegionMask,
    img: &ImageRgb<T>,
    geometry: &SeedGeometry,
) -> Result<(Trimap, Vec<String>)> {
    let (h, w) = img.dims();
    skin.check_dims(h, w)?;
    if skin.is_empty() {
        return Err(Error::SkinRegionNotFound { image: "input".into() });
    }
    let (fr0, fr1, fc0, fc1) = face.face_box();
    let (w_hat, h_hat) = (face.estimate.w, face.estimate.h);
    let (cr, cc) = face.center_pixel();

    // hair: largest dark component reaching into the band above the face
    let band_top = fr0 - (geometry.hair_band * h_hat).round() as i64;
    let band = RegionMask::rect(h, w, band_top, fr0, fc0, fc1);
    let values = rgb_to_hsv(img).values();
    let dark: Vec<bool> = values.iter().map(|v| v.to_f64_lossy() < geometry.hair_value_max).collect();
    let comps = connected_components(&dark, h, w);
    let hair_members = comps
        .members
        .iter()
        .filter(|m| dark[m[0]] && m.iter().any(|&i| band.contains(i)))
        .max_by(|a, b| a.len().cmp(&b.len()).then_with(|| b[0].cmp(&a[0])));
    let mut hair = RegionMask::empty(h, w);
    if let Some(m) = hair_members {
        for &i in m {
            hair.set_index(i, true);
        }
    }

    let half_cw = (geometry.clothes_width * w_hat / 2.0).round() as i64;
    let clothes_top = fr1 + (geometry.clothes_offset * h_hat).round() as i64;
    let clothes_rect = RegionMask::rect(h, w, clothes_top, h as i64, cc - half_cw, cc + half_cw + 1);
    let clothes = erode_disc(&clothes_rect, geometry.clothes_erosion);

    let side = (geometry.side_width * w as f64).ceil() as i64;
    let span = (geometry.side_half_height * h_hat).round() as i64;
    let background = RegionMask::rect(h, w, cr - span, cr + span + 1, 0, side)
        .union(&RegionMask::rect(h, w, cr - span, cr + span + 1, w as i64 - side, w as i64));

    let mut foreground = skin.union(&hair).union(&clothes);
    let mut warnings = Vec::new();
    let conflicts = foreground.intersection(&background).count();
    if conflicts > 0 {
        warnings.push(format!("{conflicts} seed pixels claimed by both layers; kept as background"));
        foreground = foreground.difference(&background);
    }
    if background.is_empty() {
        return Err(Error::invalid("no background seed pixels inside the image"));
    }
    Ok((Trimap::new(foreground, background)?, warnings))
}

#[derive(Debug, Clone)]
pub struct AlphaSolve<T> {
    pub matte: AlphaMat<T>,
    pub iterations: usize,
    pub relative_residual: f64,
    /// `αᵀ A α − 2 bᵀ α` after each PCG iteration, starting from the initial guess.
    pub energy: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `(L + λ D) α = λ v` by Jacobi-preconditioned conjugate gradients,
/// starting from `initial` (or the seed labels), and clamps the result.
pub fn solve_alpha_pcg<T: Scalar>(
    img: &ImageRgb<T>,
    trimap: &Trimap,
    radius: usize,
    cfg: &MattingConfig,
    initial: Option<&[T]>,
) -> Result<AlphaSolve<T>> {
    let (h, w) = img.dims();
    let (th, tw) = trimap.dims();
    if (th, tw) != (h, w) {
        return Err(Error::DimensionMismatch {
            expected: (h, w),
            actual: (th, tw),
        });
    }
    if trimap.foreground().is_empty() || trimap.background().is_empty() {
        return Err(Error::invalid("matting needs at least one seed of each kind"));
    }
    let stats = GuideStats::from_radius(img, radius, T::lit(cfg.epsilon))?;
    let n = h * w;
    let lambda = cfg.lambda;
    let seeded: Vec<bool> = (0..n).map(|i| trimap.is_seed(i)).collect();
    let rhs: Vec<f64> = (0..n)
        .map(|i| if trimap.foreground().contains(i) { lambda } else { 0.0 })
        .collect();
    let apply = |p: &[f64]| -> Vec<f64> {
        let pt: Vec<T> = p.iter().map(|&v| T::lit(v)).collect();
        let lp = stats.apply_laplacian(&pt);
        (0..n)
            .map(|i| lp[i].to_f64_lossy() + if seeded[i] { lambda * p[i] } else { 0.0 })
            .collect()
    };
    let precond: Vec<f64> = stats
        .laplacian_diagonal()
        .iter()
        .zip(&seeded)
        .map(|(d, &s)| {
            let v = d.to_f64_lossy() + if s { lambda } else { 0.0 };
            if v > 0.0 {
                1.0 / v
            } else {
                1.0
            }
        })
        .collect();

    let mut x: Vec<f64> = match initial {
        Some(init) if init.len() == n => init.iter().map(|v| v.to_f64_lossy()).collect(),
        Some(init) => {
            return Err(Error::invalid(format!("initial matte has {} values, expected {n}", init.len())));
        }
        None => (0..n).map(|i| rhs[i] / lambda).collect(),
    };
    let ax = apply(&x);
    let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let b_norm = dot(&rhs, &rhs).sqrt();
    let energy_of = |x: &[f64], r: &[f64]| -> f64 {
        // A x = b − r, so xᵀAx − 2bᵀx = −xᵀ(b + r)
        -x.iter().zip(rhs.iter().zip(r)).map(|(xi, (bi, ri))| xi * (bi + ri)).sum::<f64>()
    };
    let mut energy = vec![energy_of(&x, &r)];
    let mut zv: Vec<f64> = r.iter().zip(&precond).map(|(ri, m)| ri * m).collect();
    let mut p = zv.clone();
    let mut rz = dot(&r, &zv);
    let mut rel = dot(&r, &r).sqrt() / b_norm;
    let mut iterations = 0;
    while rel > cfg.pcg_tol {
        if iterations >= cfg.pcg_max_iters {
            return Err(Error::PcgNotConverged {
                iterations,
                residual: rel,
            });
        }
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) || !pap.is_finite() {
            return Err(Error::Solver {
                iteration: iterations,
                message: format!("conjugate gradient breakdown (pᵀAp = {pap:e})"),
            });
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        iterations += 1;
        energy.push(energy_of(&x, &r));
        rel = dot(&r, &r).sqrt() / b_norm;
        for i in 0..n {
            zv[i] = r[i] * precond[i];
        }
        let rz_new = dot(&r, &zv);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = zv[i] + beta * p[i];
        }
    }
    let alpha = x.iter().map(|&v| T::lit(v.clamp(0.0, 1.0))).collect();
    Ok(AlphaSolve {
        matte: AlphaMat { height: h, width: w, alpha },
        iterations,
        relative_residual: rel,
        energy,
    })
}

/// Adds confidently labeled unknown pixels to the seeds and pins the matte on
/// every seed.
pub fn grow_seeds<T: Scalar>(alpha: &AlphaMat<T>, trimap: &Trimap, low: f64, high: f64) -> Result<(Trimap, AlphaMat<T>)> {
    let (h, w) = trimap.dims();
    if (alpha.height, alpha.width) != (h, w) {
        return Err(Error::DimensionMismatch {
            expected: (h, w),
            actual: (alpha.height, alpha.width),
        });
    }
    let mut fg = trimap.foreground().clone();
    let mut bg = trimap.background().clone();
    for i in 0..h * w {
        if trimap.is_seed(i) {
            continue;
        }
        let a = alpha.alpha[i].to_f64_lossy();
        if a <= low {
            bg.set_index(i, true);
        } else if a >= high {
            fg.set_index(i, true);
        }
    }
    let pinned = (0..h * w)
        .map(|i| {
            if fg.contains(i) {
                T::one()
            } else if bg.contains(i) {
                T::zero()
            } else {
                alpha.alpha[i]
            }
        })
        .collect();
    Ok((
        Trimap::new(fg, bg)?,
        AlphaMat {
            height: h,
            width: w,
            alpha: pinned,
        },
    ))
}

/// `1 / (1 + exp(−slope (α − center)))`.
pub fn sigmoid(alpha: f64, slope: f64, center: f64) -> f64 {
    1.0 / (1.0 + (-slope * (alpha - center)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatteRound {
    pub radius: usize,
    pub pcg_iterations: usize,
    pub relative_residual: f64,
    pub foreground_seeds: usize,
    pub background_seeds: usize,
}

#[derive(Debug, Clone)]
pub struct MatteResult<T> {
    /// Sharpened matte.
    pub matte: AlphaMat<T>,
    /// Matte after the last round, before sharpening.
    pub raw: AlphaMat<T>,
    pub trimap: Trimap,
    pub rounds: Vec<MatteRound>,
}

/// Solve, grow, repeat with shrinking windows, then sharpen with a sigmoid.
pub fn matte_iterate<T: Scalar>(img: &ImageRgb<T>, trimap: &Trimap, cfg: &MattingConfig) -> Result<MatteResult<T>> {
    cfg.validate()?;
    let mut trimap = trimap.clone();
    let mut current: Option<AlphaMat<T>> = None;
    let mut rounds = Vec::new();
    for radius in cfg.radii() {
        let solve = solve_alpha_pcg(img, &trimap, radius, cfg, current.as_ref().map(|m| m.alpha.as_slice()))?;
        let (grown, pinned) = grow_seeds(&solve.matte, &trimap, cfg.grow_low, cfg.grow_high)?;
        rounds.push(MatteRound {
            radius,
            pcg_iterations: solve.iterations,
            relative_residual: solve.relative_residual,
            foreground_seeds: grown.foreground().count(),
            background_seeds: grown.background().count(),
        });
        trimap = grown;
        current = Some(pinned);
    }
    let raw = current.ok_or_else(|| Error::invalid("matting needs at least one outer iteration"))?;
    let alpha = raw
        .alpha
        .iter()
        .map(|a| T::lit(sigmoid(a.to_f64_lossy(), cfg.sigmoid_slope, cfg.sigmoid_center)).clamp01())
        .collect();
    Ok(MatteResult {
        matte: AlphaMat {
            height: raw.height,
            width: raw.width,
            alpha,
        },
        raw,
        trimap,
        rounds,
    })
}

/// `α y + (1 − α) z` per pixel.
pub fn replace_background<T: Scalar>(y: &ImageRgb<T>, alpha: &AlphaMat<T>, z: &ImageRgb<T>) -> Result<ImageRgb<T>> {
    y.same_dims(z)?;
    let (h, w) = y.dims();
    if (alpha.height, alpha.width) != (h, w) {
        return Err(Error::DimensionMismatch {
            expected: (h, w),
            actual: (alpha.height, alpha.width),
        });
    }
    let data = y
        .pixels()
        .iter()
        .zip(z.pixels())
        .zip(&alpha.alpha)
        .map(|((p, q), &a)| {
            let b = T::one() - a;
            [a * p[0] + b * q[0], a * p[1] + b * q[1], a * p[2] + b * q[2]]
        })
        .collect();
    ImageRgb::from_clamped(h, w, data)
}
