//! Color grading by iterative distribution transfer: the source color cloud
//! is repeatedly rotated, matched axis-by-axis to the target with 1-D
//! histogram quantile maps, and rotated back.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{ImageRgb, RegionMask};
use crate::scalar::Scalar;

pub type Mat3 = [[f64; 3]; 3];

pub const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdtConfig {
    pub iterations: usize,
    pub bins: usize,
    pub seed: u64,
    /// Clip the final colors into `[0, 1]`.
    pub clip: bool,
}

impl Default for IdtConfig {
    fn default() -> Self {
        Self {
            iterations: 20,
            bins: 300,
            seed: 0,
            clip: true,
        }
    }
}

impl IdtConfig {
    fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::invalid("IDT needs at least one iteration"));
        }
        if self.bins < 2 {
            return Err(Error::invalid("IDT needs at least two histogram bins"));
        }
        Ok(())
    }
}

/// Piecewise-linear CDF over equal-width bins of a shared range.
struct BinnedCdf {
    lo: f64,
    width: f64,
    /// `cum[b]`: fraction of samples below edge `b`; `cum[bins] == 1`.
    cum: Vec<f64>,
}

impl BinnedCdf {
    fn new(samples: &[f64], lo: f64, width: f64, bins: usize) -> Self {
        let mut counts = vec![0usize; bins];
        for &v in samples {
            counts[bin_of(v, lo, width, bins)] += 1;
        }
        let n = samples.len() as f64;
        let mut cum = Vec::with_capacity(bins + 1);
        let mut acc = 0usize;
        cum.push(0.0);
        for c in counts {
            acc += c;
            cum.push(acc as f64 / n);
        }
        Self { lo, width, cum }
    }

    fn bins(&self) -> usize {
        self.cum.len() - 1
    }

    fn eval(&self, v: f64) -> f64 {
        let b = bin_of(v, self.lo, self.width, self.bins());
        let edge = self.lo + b as f64 * self.width;
        let frac = ((v - edge) / self.width).clamp(0.0, 1.0);
        self.cum[b] + frac * (self.cum[b + 1] - self.cum[b])
    }

    /// Smallest-edge inverse: the first bin whose cumulative mass reaches `u`.
    fn inverse(&self, u: f64) -> f64 {
        let bins = self.bins();
        let b = (1..=bins)
            .find(|&b| self.cum[b] > 0.0 && self.cum[b] >= u)
            .unwrap_or(bins);
        let (c0, c1) = (self.cum[b - 1], self.cum[b]);
        let frac = if c1 > c0 { ((u - c0) / (c1 - c0)).clamp(0.0, 1.0) } else { 0.0 };
        self.lo + ((b - 1) as f64 + frac) * self.width
    }
}

#[inline]
fn bin_of(v: f64, lo: f64, width: f64, bins: usize) -> usize {
    let b = ((v - lo) / width).floor();
    if b <= 0.0 {
        0
    } else {
        (b as usize).min(bins - 1)
    }
}

/// Monotone 1-D quantile map of `src` onto the distribution of `tgt`, with
/// both CDFs estimated on `bins` equal-width bins over the joint range.
pub fn pdf_transfer_1d(src: &[f64], tgt: &[f64], bins: usize) -> Vec<f64> {
    assert!(!src.is_empty() && !tgt.is_empty(), "pdf transfer needs samples");
    assert!(bins >= 2);
    let (tlo, thi) = min_max(tgt);
    if tlo == thi {
        return vec![tlo; src.len()];
    }
    let (slo, shi) = min_max(src);
    let (lo, hi) = (slo.min(tlo), shi.max(thi));
    let width = (hi - lo) / bins as f64;
    let fs = BinnedCdf::new(src, lo, width, bins);
    let ft = BinnedCdf::new(tgt, lo, width, bins);
    src.iter().map(|&v| ft.inverse(fs.eval(v))).collect()
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// Haar-random rotation: QR of a Gaussian matrix with the sign of `R`'s
/// diagonal folded into `Q`. Returned rows are the projection axes.
pub fn random_rotation(rng: &mut ChaCha8Rng) -> Mat3 {
    loop {
        let mut cols = [[0.0f64; 3]; 3];
        for col in cols.iter_mut() {
            for v in col.iter_mut() {
                *v = StandardNormal.sample(rng);
            }
        }
        // modified Gram-Schmidt
        let mut q = [[0.0f64; 3]; 3];
        let mut ok = true;
        for j in 0..3 {
            let mut v = cols[j];
            for qi in q.iter().take(j) {
                let d = dot3(*qi, v);
                for k in 0..3 {
                    v[k] -= d * qi[k];
                }
            }
            let norm = dot3(v, v).sqrt();
            if norm < 1e-9 {
                ok = false;
                break;
            }
            // R[j][j] = norm > 0, so no sign flip is needed
            q[j] = v.map(|x| x / norm);
        }
        if ok {
            return q;
        }
    }
}

#[inline]
fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// The rotation schedule `idt_transfer` uses for `cfg`.
pub fn rotation_schedule(cfg: &IdtConfig) -> Vec<Mat3> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.iterations).map(|_| random_rotation(&mut rng)).collect()
}

/// One transfer step: project both clouds on the rows of `rotation`, match
/// each axis, and move the source along the axes by the 1-D displacement.
pub fn idt_step(src: &mut [[f64; 3]], tgt: &[[f64; 3]], rotation: &Mat3, bins: usize) {
    for axis in rotation {
        let ps: Vec<f64> = src.iter().map(|&c| dot3(*axis, c)).collect();
        let pt: Vec<f64> = tgt.iter().map(|&c| dot3(*axis, c)).collect();
        let mapped = pdf_transfer_1d(&ps, &pt, bins);
        for ((c, &before), &after) in src.iter_mut().zip(&ps).zip(&mapped) {
            let delta = after - before;
            for k in 0..3 {
                c[k] += delta * axis[k];
            }
        }
    }
}

/// Runs the transfer with an explicit rotation schedule. `observe` sees the
/// unclipped cloud after every iteration.
pub fn idt_with_rotations<T: Scalar>(
    src: &[[T; 3]],
    tgt: &[[T; 3]],
    rotations: &[Mat3],
    bins: usize,
    clip: bool,
    mut observe: impl FnMut(usize, &[[f64; 3]]),
) -> Result<Vec<[T; 3]>> {
    if src.is_empty() || tgt.is_empty() {
        return Err(Error::invalid("color grading needs non-empty source and target samples"));
    }
    if bins < 2 {
        return Err(Error::invalid("IDT needs at least two histogram bins"));
    }
    let mut cur: Vec<[f64; 3]> = src.iter().map(|c| c.map(|v| v.to_f64_lossy())).collect();
    let t: Vec<[f64; 3]> = tgt.iter().map(|c| c.map(|v| v.to_f64_lossy())).collect();
    for (i, rot) in rotations.iter().enumerate() {
        idt_step(&mut cur, &t, rot, bins);
        observe(i, &cur);
    }
    Ok(cur
        .into_iter()
        .map(|c| c.map(|v| if clip { T::lit(v).clamp01() } else { T::lit(v) }))
        .collect())
}

/// Reshapes the source color distribution toward the target's.
pub fn idt_transfer<T: Scalar>(src: &[[T; 3]], tgt: &[[T; 3]], cfg: &IdtConfig) -> Result<Vec<[T; 3]>> {
    cfg.validate()?;
    idt_with_rotations(src, tgt, &rotation_schedule(cfg), cfg.bins, cfg.clip, |_, _| {})
}

/// Exact 1-D Wasserstein-1 distance between two empirical distributions.
pub fn wasserstein1_1d(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    // integrate |Fa^-1(u) - Fb^-1(u)| over the merged breakpoints i/na, j/nb
    let (mut i, mut j) = (0usize, 0usize);
    let mut u = 0.0;
    let mut total = 0.0;
    while i < na && j < nb {
        let next_a = (i + 1) as f64 / na as f64;
        let next_b = (j + 1) as f64 / nb as f64;
        let next = next_a.min(next_b);
        total += (next - u) * (a[i] - b[j]).abs();
        u = next;
        if next_a <= next {
            i += 1;
        }
        if next_b <= next {
            j += 1;
        }
    }
    total
}

/// Mean over `axes` of the 1-D W1 distance between the projected clouds.
pub fn sliced_distance(a: &[[f64; 3]], b: &[[f64; 3]], axes: &[[f64; 3]]) -> f64 {
    let sum: f64 = axes
        .iter()
        .map(|&ax| {
            let pa: Vec<f64> = a.iter().map(|&c| dot3(ax, c)).collect();
            let pb: Vec<f64> = b.iter().map(|&c| dot3(ax, c)).collect();
            wasserstein1_1d(&pa, &pb)
        })
        .sum();
    sum / axes.len() as f64
}

/// Guide image: graded colors on the skin region (row-major order), input elsewhere.
pub fn assemble_guide<T: Scalar>(y: &ImageRgb<T>, mapped: &[[T; 3]], skin: &RegionMask) -> Result<ImageRgb<T>> {
    skin.check_dims(y.height(), y.width())?;
    let n = skin.count();
    if mapped.len() != n {
        return Err(Error::invalid(format!(
            "{} graded colors for {n} skin pixels",
            mapped.len()
        )));
    }
    let mut data = y.pixels().to_vec();
    for (i, &c) in skin.indices().zip(mapped) {
        data[i] = c;
    }
    ImageRgb::from_clamped(y.height(), y.width(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn two_point_transfer() {
        let out = pdf_transfer_1d(&[0.0, 1.0], &[10.0, 11.0], 300);
        let width = 11.0 / 300.0;
        assert!((out[0] - 10.0).abs() <= width, "{out:?}");
        assert!((out[1] - 11.0).abs() <= width, "{out:?}");
    }

    #[test]
    fn matching_distributions_are_near_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).collect();
        let out = pdf_transfer_1d(&v, &v, 300);
        let width = 1.0 / 300.0;
        for (a, b) in v.iter().zip(&out) {
            assert!((a - b).abs() <= width + 1e-12);
        }
    }

    #[test]
    fn constant_maps_to_constant() {
        assert_eq!(pdf_transfer_1d(&[0.3; 5], &[0.7; 4], 300), vec![0.7; 5]);
    }

    #[test]
    fn transfer_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut src: Vec<f64> = (0..500).map(|_| rng.random::<f64>().powi(2)).collect();
        let tgt: Vec<f64> = (0..300).map(|_| 0.5 + 0.3 * rng.random::<f64>()).collect();
        src.sort_by(f64::total_cmp);
        let out = pdf_transfer_1d(&src, &tgt, 50);
        assert!(out.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn rotations_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let r = random_rotation(&mut rng);
            for i in 0..3 {
                for j in 0..3 {
                    let d = dot3(r[i], r[j]);
                    assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn fixed_point_when_target_equals_source() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let src: Vec<[f64; 3]> = (0..1500).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
        let cfg = IdtConfig { iterations: 5, ..Default::default() };
        let out = idt_transfer(&src, &src, &cfg).unwrap();
        // each of 3 axes per iteration may move a point by up to one bin; the
        // projections span at most sqrt(3), so bound the per-coordinate drift
        let mut worst = 0.0f64;
        for (a, b) in src.iter().zip(&out) {
            for k in 0..3 {
                worst = worst.max((a[k] - b[k]).abs());
            }
        }
        assert!(worst <= 3f64.sqrt() / 300.0 * 3.0, "drift {worst}");
    }

    #[test]
    fn identity_rotation_equals_per_channel_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let src: Vec<[f64; 3]> = (0..400).map(|_| [rng.random(), rng.random::<f64>() * 0.5, rng.random()]).collect();
        let tgt: Vec<[f64; 3]> = (0..300).map(|_| [rng.random::<f64>() * 0.3, rng.random(), 0.2 + rng.random::<f64>() * 0.1]).collect();
        let out = idt_with_rotations(&src, &tgt, &[IDENTITY], 64, false, |_, _| {}).unwrap();
        for k in 0..3 {
            let s: Vec<f64> = src.iter().map(|c| c[k]).collect();
            let t: Vec<f64> = tgt.iter().map(|c| c[k]).collect();
            let expect = pdf_transfer_1d(&s, &t, 64);
            for (o, e) in out.iter().zip(&expect) {
                assert!((o[k] - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shifted_cloud_mean_is_matched() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let normal = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
        let src: Vec<[f64; 3]> = (0..3000)
            .map(|_| [0.4 + 0.05 * normal(&mut rng), 0.35 + 0.04 * normal(&mut rng), 0.3 + 0.05 * normal(&mut rng)])
            .collect();
        let tgt: Vec<[f64; 3]> = src.iter().map(|c| c.map(|v| v + 0.2)).collect();
        let out = idt_transfer(&src, &tgt, &IdtConfig::default()).unwrap();
        for k in 0..3 {
            let mo: f64 = out.iter().map(|c| c[k]).sum::<f64>() / out.len() as f64;
            let mt: f64 = tgt.iter().map(|c| c[k]).sum::<f64>() / tgt.len() as f64;
            assert!((mo - mt).abs() < 0.02, "channel {k}: {mo} vs {mt}");
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let src: Vec<[f64; 3]> = (0..100).map(|i| [i as f64 / 100.0, 0.5, 0.2]).collect();
        let tgt: Vec<[f64; 3]> = (0..80).map(|i| [0.3, i as f64 / 80.0, 0.6]).collect();
        let cfg = IdtConfig { seed: 99, ..Default::default() };
        assert_eq!(idt_transfer(&src, &tgt, &cfg).unwrap(), idt_transfer(&src, &tgt, &cfg).unwrap());
    }

    #[test]
    fn empty_sets_rejected() {
        let cfg = IdtConfig::default();
        assert!(idt_transfer::<f64>(&[], &[[0.1; 3]], &cfg).is_err());
        assert!(idt_transfer(&[[0.1f64; 3]], &[], &cfg).is_err());
    }

    #[test]
    fn wasserstein_examples() {
        assert!((wasserstein1_1d(&[0.0, 1.0], &[0.0, 1.0])).abs() < 1e-15);
        assert!((wasserstein1_1d(&[0.0], &[2.0]) - 2.0).abs() < 1e-15);
        // {0, 1} vs {0.5}: mean absolute deviation 0.5
        assert!((wasserstein1_1d(&[0.0, 1.0], &[0.5]) - 0.5).abs() < 1e-15);
        assert!((wasserstein1_1d(&[0.0, 0.0, 3.0], &[1.0, 2.0, 3.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn guide_assembly() {
        let y = ImageRgb::from_fn(3, 3, |r, c| [r as f64 / 3.0, c as f64 / 3.0, 0.5]);
        let empty = RegionMask::empty(3, 3);
        assert_eq!(assemble_guide(&y, &[], &empty).unwrap(), y);

        let skin = RegionMask::rect(3, 3, 1, 2, 0, 3);
        let same = y.gather(skin.indices());
        assert_eq!(assemble_guide(&y, &same, &skin).unwrap(), y);

        let mut one = RegionMask::empty(3, 3);
        one.set(2, 1, true);
        let g = assemble_guide(&y, &[[0.9, 0.1, 0.1]], &one).unwrap();
        let diff: Vec<usize> = (0..9).filter(|&i| g.pixels()[i] != y.pixels()[i]).collect();
        assert_eq!(diff, vec![7]);

        assert!(assemble_guide(&y, &[[0.0; 3]; 2], &one).is_err());
    }
}
