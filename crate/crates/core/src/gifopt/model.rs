//! Local linear model `x_j ≈ A_i y_j + b_i` over square windows, and the
//! matting Laplacian it induces.
//!
//! Minimizing the windowed fidelity over `(A_i, b_i)` leaves `f(x) = Σ_c x_cᵀ L x_c`
//! with `L` the matting Laplacian of the guide `y`. Its gradient at pixel `i` is
//! `2 (|w_i| x_i − (Σ_{j∈w_i} A*_j) y_i − Σ_{j∈w_i} b*_j)`.

use crate::error::{Error, Result};
use crate::imgcore::{BoxWindow, ImageRgb};
use crate::scalar::Scalar;

pub type Mat3<T> = [[T; 3]; 3];

/// Inverse of a symmetric positive definite 3x3 matrix via the adjugate.
pub(crate) fn inv_spd3<T: Scalar>(m: &Mat3<T>) -> Option<Mat3<T>> {
    let c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
    let c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
    let c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
    let det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
    if !(det > T::zero()) || !det.is_finite() {
        return None;
    }
    let c11 = m[0][0] * m[2][2] - m[0][2] * m[2][0];
    let c12 = m[0][1] * m[2][0] - m[0][0] * m[2][1];
    let c22 = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let inv = T::one() / det;
    Some([
        [c00 * inv, c01 * inv, c02 * inv],
        [c01 * inv, c11 * inv, c12 * inv],
        [c02 * inv, c12 * inv, c22 * inv],
    ])
}

/// Per-window statistics of the guide that do not depend on the iterate:
/// window means `ȳ_i` and `Δ_i⁻¹ = (Σ_i + ε/|w_i| U)⁻¹`.
#[derive(Debug, Clone)]
pub struct GuideStats<T> {
    window: BoxWindow,
    epsilon: T,
    guide: Vec<[T; 3]>,
    mean: Vec<[T; 3]>,
    delta_inv: Vec<Mat3<T>>,
}

impl<T: Scalar> GuideStats<T> {
    pub fn new(y: &ImageRgb<T>, window_side: usize, epsilon: T) -> Result<Self> {
        if !(epsilon > T::zero()) || !epsilon.is_finite() {
            return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
        }
        let (h, w) = y.dims();
        let window = BoxWindow::new(h, w, window_side)?;
        let guide = y.pixels().to_vec();
        let counts = window.counts();
        let sums: Vec<Vec<T>> = (0..3).map(|c| window.sum_by(|i| guide[i][c].to_f64_lossy())).collect();
        const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
        let prods: Vec<Vec<T>> = PAIRS
            .iter()
            .map(|&(a, b)| window.sum_by(|i| (guide[i][a] * guide[i][b]).to_f64_lossy()))
            .collect();
        let mut mean = Vec::with_capacity(h * w);
        let mut delta_inv = Vec::with_capacity(h * w);
        for i in 0..h * w {
            let n = T::from_usize_lossy(counts[i]);
            let mu = [sums[0][i] / n, sums[1][i] / n, sums[2][i] / n];
            let mut d = [[T::zero(); 3]; 3];
            for (p, &(a, b)) in PAIRS.iter().enumerate() {
                let cov = prods[p][i] / n - mu[a] * mu[b];
                d[a][b] = cov;
                d[b][a] = cov;
            }
            for (k, row) in d.iter_mut().enumerate() {
                row[k] += epsilon / n;
            }
            let inv = inv_spd3(&d).ok_or_else(|| {
                Error::invalid(format!("window covariance at pixel {i} is not positive definite"))
            })?;
            mean.push(mu);
            delta_inv.push(inv);
        }
        Ok(Self { window, epsilon, guide, mean, delta_inv })
    }

    pub fn from_radius(y: &ImageRgb<T>, radius: usize, epsilon: T) -> Result<Self> {
        Self::new(y, 2 * radius + 1, epsilon)
    }

    #[inline]
    pub fn window(&self) -> &BoxWindow {
        &self.window
    }

    #[inline]
    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.guide.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.guide.is_empty()
    }

    pub fn guide(&self) -> &[[T; 3]] {
        &self.guide
    }

    pub fn window_mean(&self, i: usize) -> [T; 3] {
        self.mean[i]
    }

    pub fn delta_inverse(&self, i: usize) -> &Mat3<T> {
        &self.delta_inv[i]
    }

    /// `L p` for a single scalar channel `p`.
    pub fn apply_laplacian(&self, p: &[T]) -> Vec<T> {
        assert_eq!(p.len(), self.len(), "channel length differs from guide");
        let win = &self.window;
        let counts = win.counts();
        let y = &self.guide;
        let sp: Vec<T> = win.sum(p);
        let syp: Vec<Vec<T>> = (0..3)
            .map(|c| win.sum_by(|i| (y[i][c] * p[i]).to_f64_lossy()))
            .collect();
        let mut a = vec![[T::zero(); 3]; p.len()];
        let mut b = vec![T::zero(); p.len()];
        for i in 0..p.len() {
            let n = T::from_usize_lossy(counts[i]);
            let pm = sp[i] / n;
            let mu = self.mean[i];
            let cov = [syp[0][i] / n - mu[0] * pm, syp[1][i] / n - mu[1] * pm, syp[2][i] / n - mu[2] * pm];
            let m = &self.delta_inv[i];
            let ai = [
                m[0][0] * cov[0] + m[0][1] * cov[1] + m[0][2] * cov[2],
                m[1][0] * cov[0] + m[1][1] * cov[1] + m[1][2] * cov[2],
                m[2][0] * cov[0] + m[2][1] * cov[1] + m[2][2] * cov[2],
            ];
            b[i] = pm - (ai[0] * mu[0] + ai[1] * mu[1] + ai[2] * mu[2]);
            a[i] = ai;
        }
        let sa: Vec<Vec<T>> = (0..3).map(|c| win.sum_by(|i| a[i][c].to_f64_lossy())).collect();
        let sb: Vec<T> = win.sum(&b);
        (0..p.len())
            .map(|i| {
                T::from_usize_lossy(counts[i]) * p[i]
                    - (sa[0][i] * y[i][0] + sa[1][i] * y[i][1] + sa[2][i] * y[i][2])
                    - sb[i]
            })
            .collect()
    }

    /// Diagonal of the matting Laplacian.
    pub fn laplacian_diagonal(&self) -> Vec<T> {
        let win = &self.window;
        let counts = win.counts();
        let n_inv = |k: usize| 1.0 / counts[k] as f64;
        const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
        let s_ninv: Vec<T> = win.sum_by(n_inv);
        let s_m: Vec<Vec<T>> = PAIRS
            .iter()
            .map(|&(a, b)| win.sum_by(|k| self.delta_inv[k][a][b].to_f64_lossy() * n_inv(k)))
            .collect();
        let m_mu = |k: usize, a: usize| -> f64 {
            let m = &self.delta_inv[k];
            let mu = self.mean[k];
            (m[a][0] * mu[0] + m[a][1] * mu[1] + m[a][2] * mu[2]).to_f64_lossy()
        };
        let s_mmu: Vec<Vec<T>> = (0..3).map(|a| win.sum_by(|k| m_mu(k, a) * n_inv(k))).collect();
        let s_mumu: Vec<T> = win.sum_by(|k| {
            let mu = self.mean[k];
            (0..3).map(|a| mu[a].to_f64_lossy() * m_mu(k, a)).sum::<f64>() * n_inv(k)
        });
        let two = T::lit(2.0);
        (0..self.len())
            .map(|i| {
                let y = self.guide[i];
                let mut m = [[T::zero(); 3]; 3];
                for (p, &(a, b)) in PAIRS.iter().enumerate() {
                    m[a][b] = s_m[p][i];
                    m[b][a] = s_m[p][i];
                }
                let mut quad = T::zero();
                for a in 0..3 {
                    for b in 0..3 {
                        quad += y[a] * m[a][b] * y[b];
                    }
                }
                let lin = y[0] * s_mmu[0][i] + y[1] * s_mmu[1][i] + y[2] * s_mmu[2][i];
                T::from_usize_lossy(counts[i]) - s_ninv[i] - quad + two * lin - s_mumu[i]
            })
            .collect()
    }
}

/// Optimal per-window coefficients `(A*_i, b*_i)` for one iterate, stored as planes.
#[derive(Debug, Clone)]
pub struct LocalLinearModel<T> {
    /// `a[3 * d + e][i]`: weight of guide channel `e` in output channel `d` at window `i`.
    pub a: Vec<Vec<T>>,
    /// `b[d][i]`.
    pub b: Vec<Vec<T>>,
    fingerprint: u64,
}

impl<T: Scalar> LocalLinearModel<T> {
    /// `(A*_i, b*_i)` for window `i`.
    pub fn coefficients(&self, i: usize) -> (Mat3<T>, [T; 3]) {
        let mut a = [[T::zero(); 3]; 3];
        for (de, plane) in self.a.iter().enumerate() {
            a[de / 3][de % 3] = plane[i];
        }
        (a, [self.b[0][i], self.b[1][i], self.b[2][i]])
    }

    /// Whether this model was fitted for exactly this iterate.
    pub fn matches(&self, x: &[[T; 3]]) -> bool {
        self.fingerprint == fingerprint(x)
    }
}

/// FNV-1a over the bit patterns of the iterate.
fn fingerprint<T: Scalar>(x: &[[T; 3]]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for p in x {
        for v in p {
            h ^= v.to_f64_lossy().to_bits();
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h ^ x.len() as u64
}

fn check_iterate<T: Scalar>(stats: &GuideStats<T>, x: &[[T; 3]]) -> Result<()> {
    if x.len() != stats.len() {
        return Err(Error::invalid(format!(
            "iterate has {} pixels, guide has {}",
            x.len(),
            stats.len()
        )));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("iterate contains non-finite values"));
    }
    Ok(())
}

/// Closed-form `A*_i = C_iᵀ Δ_i⁻¹` with `C_i = E[y xᵀ] − ȳ x̄ᵀ`, and
/// `b*_i = x̄_i − A*_i ȳ_i`.
pub fn fit_local_models<T: Scalar>(stats: &GuideStats<T>, x: &[[T; 3]]) -> Result<LocalLinearModel<T>> {
    check_iterate(stats, x)?;
    let win = stats.window();
    let counts = win.counts();
    let y = stats.guide();
    let n_px = x.len();
    let sx: Vec<Vec<T>> = (0..3).map(|d| win.sum_by(|i| x[i][d].to_f64_lossy())).collect();
    // syx[3 * c + d] = Σ y_c x_d
    let syx: Vec<Vec<T>> = (0..9)
        .map(|cd| {
            let (c, d) = (cd / 3, cd % 3);
            win.sum_by(|i| (y[i][c] * x[i][d]).to_f64_lossy())
        })
        .collect();
    let mut a = vec![vec![T::zero(); n_px]; 9];
    let mut b = vec![vec![T::zero(); n_px]; 3];
    for i in 0..n_px {
        let n = T::from_usize_lossy(counts[i]);
        let mu = stats.window_mean(i);
        let m = stats.delta_inverse(i);
        for d in 0..3 {
            let xm = sx[d][i] / n;
            let cov = [
                syx[d][i] / n - mu[0] * xm,
                syx[3 + d][i] / n - mu[1] * xm,
                syx[6 + d][i] / n - mu[2] * xm,
            ];
            let mut bd = xm;
            for e in 0..3 {
                let ade = m[e][0] * cov[0] + m[e][1] * cov[1] + m[e][2] * cov[2];
                a[3 * d + e][i] = ade;
                bd -= ade * mu[e];
            }
            b[d][i] = bd;
        }
    }
    Ok(LocalLinearModel {
        a,
        b,
        fingerprint: fingerprint(x),
    })
}

/// Gradient of the smooth fidelity term, `2 L x` per channel.
pub fn grad_f<T: Scalar>(stats: &GuideStats<T>, x: &[[T; 3]], model: &LocalLinearModel<T>) -> Result<Vec<[T; 3]>> {
    check_iterate(stats, x)?;
    if !model.matches(x) {
        return Err(Error::StaleModel);
    }
    let win = stats.window();
    let counts = win.counts();
    let y = stats.guide();
    let sa: Vec<Vec<T>> = model.a.iter().map(|p| win.sum(p)).collect();
    let sb: Vec<Vec<T>> = model.b.iter().map(|p| win.sum(p)).collect();
    let two = T::lit(2.0);
    Ok((0..x.len())
        .map(|i| {
            let n = T::from_usize_lossy(counts[i]);
            let mut g = [T::zero(); 3];
            for d in 0..3 {
                let ay = sa[3 * d][i] * y[i][0] + sa[3 * d + 1][i] * y[i][1] + sa[3 * d + 2][i] * y[i][2];
                g[d] = two * (n * x[i][d] - ay - sb[d][i]);
            }
            g
        })
        .collect())
}

/// Scratch planes for [`GuideStats::gradient_into`], reusable across calls.
#[derive(Debug, Clone, Default)]
pub struct GradientWorkspace {
    x: Vec<Vec<f64>>,
    sums: Vec<Vec<f64>>,
    coef: Vec<Vec<f64>>,
    coef_sums: Vec<Vec<f64>>,
}

impl GradientWorkspace {
    pub fn new() -> Self {
        Self::default()
    }

    fn ensure(&mut self, n: usize) {
        for (planes, count) in [
            (&mut self.x, 3),
            (&mut self.sums, 12),
            (&mut self.coef, 12),
            (&mut self.coef_sums, 12),
        ] {
            planes.resize_with(count, Vec::new);
            for p in planes.iter_mut() {
                p.resize(n, 0.0);
            }
        }
    }
}

impl<T: Scalar> GuideStats<T> {
    /// `∇f(x)` without intermediate allocations; same arithmetic as
    /// [`fit_local_models`] followed by [`grad_f`], carried out in `f64`.
    pub fn gradient_into(&self, x: &[[T; 3]], ws: &mut GradientWorkspace, out: &mut [[T; 3]]) -> Result<()> {
        check_iterate(self, x)?;
        let n = x.len();
        assert_eq!(out.len(), n, "gradient buffer has the wrong size");
        ws.ensure(n);
        let win = &self.window;
        let y = &self.guide;
        for (d, plane) in ws.x.iter_mut().enumerate() {
            for (v, p) in plane.iter_mut().zip(x) {
                *v = p[d].to_f64_lossy();
            }
        }
        // sums[d]: Σ x_d; sums[3 + 3c + d]: Σ y_c x_d
        for d in 0..3 {
            let xd = &ws.x[d];
            win.sum_into(|i| xd[i], &mut ws.sums[d]);
            for c in 0..3 {
                win.sum_into(|i| y[i][c].to_f64_lossy() * xd[i], &mut ws.sums[3 + 3 * c + d]);
            }
        }
        let counts = win.counts();
        {
            let (a_planes, b_planes) = ws.coef.split_at_mut(9);
            for i in 0..n {
                let inv_n = 1.0 / counts[i] as f64;
                let mu = self.mean[i].map(|v| v.to_f64_lossy());
                let m = self.delta_inv[i].map(|row| row.map(|v| v.to_f64_lossy()));
                for d in 0..3 {
                    let xm = ws.sums[d][i] * inv_n;
                    let cov = [
                        ws.sums[3 + d][i] * inv_n - mu[0] * xm,
                        ws.sums[6 + d][i] * inv_n - mu[1] * xm,
                        ws.sums[9 + d][i] * inv_n - mu[2] * xm,
                    ];
                    let mut bd = xm;
                    for e in 0..3 {
                        let ade = m[e][0] * cov[0] + m[e][1] * cov[1] + m[e][2] * cov[2];
                        a_planes[3 * d + e][i] = ade;
                        bd -= ade * mu[e];
                    }
                    b_planes[d][i] = bd;
                }
            }
        }
        for (plane, sum) in ws.coef.iter().zip(ws.coef_sums.iter_mut()) {
            win.sum_into(|i| plane[i], sum);
        }
        let sc = &ws.coef_sums;
        for i in 0..n {
            let cnt = counts[i] as f64;
            let yi = y[i].map(|v| v.to_f64_lossy());
            for d in 0..3 {
                let ay = sc[3 * d][i] * yi[0] + sc[3 * d + 1][i] * yi[1] + sc[3 * d + 2][i] * yi[2];
                out[i][d] = T::lit(2.0 * (cnt * ws.x[d][i] - ay - sc[9 + d][i]));
            }
        }
        Ok(())
    }
}

/// Refits and differentiates in one call.
pub fn gradient<T: Scalar>(stats: &GuideStats<T>, x: &[[T; 3]]) -> Result<Vec<[T; 3]>> {
    let model = fit_local_models(stats, x)?;
    grad_f(stats, x, &model)
}

/// `f(x) = ½ ⟨x, ∇f(x)⟩`, exact because `f` is a quadratic form.
pub fn smooth_value<T: Scalar>(x: &[[T; 3]], grad: &[[T; 3]]) -> T {
    let half = T::lit(0.5);
    let mut acc = 0.0f64;
    for (p, g) in x.iter().zip(grad) {
        for k in 0..3 {
            acc += (p[k] * g[k]).to_f64_lossy();
        }
    }
    half * T::lit(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(h: usize, w: usize, rng: &mut ChaCha8Rng) -> ImageRgb<f64> {
        ImageRgb::from_fn(h, w, |_, _| [rng.random(), rng.random(), rng.random()])
    }

    #[test]
    fn inverse_of_spd() {
        let m = [[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]];
        let inv = inv_spd3(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| m[i][k] * inv[k][j]).sum();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        assert!(inv_spd3(&[[0.0f64; 3]; 3]).is_none());
    }

    #[test]
    fn constant_iterate_has_zero_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = random_image(7, 9, &mut rng);
        let stats = GuideStats::new(&y, 3, 1e-7).unwrap();
        let x = vec![[0.3, 0.6, 0.1]; 63];
        let model = fit_local_models(&stats, &x).unwrap();
        for i in 0..63 {
            let (a, b) = model.coefficients(i);
            assert!(a.iter().flatten().all(|v| v.abs() < 1e-8));
            for (k, &c) in [0.3, 0.6, 0.1].iter().enumerate() {
                assert!((b[k] - c).abs() < 1e-8);
            }
        }
        let g = grad_f(&stats, &x, &model).unwrap();
        assert!(g.iter().flatten().all(|v| v.abs() < 1e-7));
    }

    #[test]
    fn affine_iterate_recovers_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let y = random_image(9, 9, &mut rng);
        let stats = GuideStats::new(&y, 3, 1e-12).unwrap();
        let x: Vec<[f64; 3]> = y.pixels().iter().map(|p| p.map(|v| 2.0 * v + 0.1)).collect();
        let model = fit_local_models(&stats, &x).unwrap();
        // interior pixels have full 3x3 windows
        for r in 1..8 {
            for c in 1..8 {
                let i = r * 9 + c;
                for d in 0..3 {
                    for e in 0..3 {
                        let expect = if d == e { 2.0 } else { 0.0 };
                        assert!((model.a[3 * d + e][i] - expect).abs() < 1e-6);
                    }
                    assert!((model.b[d][i] - 0.1).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn stale_model_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y = random_image(5, 5, &mut rng);
        let stats = GuideStats::new(&y, 3, 1e-7).unwrap();
        let x: Vec<[f64; 3]> = y.pixels().to_vec();
        let model = fit_local_models(&stats, &x).unwrap();
        let mut other = x.clone();
        other[3][1] += 1e-3;
        assert!(matches!(grad_f(&stats, &other, &model), Err(Error::StaleModel)));
    }

    #[test]
    fn invalid_inputs() {
        let y = ImageRgb::filled(3, 3, [0.5f64; 3]);
        assert!(GuideStats::new(&y, 3, 0.0).is_err());
        assert!(GuideStats::new(&y, 2, 1e-7).is_err());
        let stats = GuideStats::new(&y, 3, 1e-7).unwrap();
        let mut x = vec![[0.5f64; 3]; 9];
        x[0][0] = f64::NAN;
        assert!(fit_local_models(&stats, &x).is_err());
        assert!(fit_local_models(&stats, &x[..4]).is_err());
    }

    #[test]
    fn channel_laplacian_matches_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let y = random_image(8, 7, &mut rng);
        let stats = GuideStats::new(&y, 5, 1e-4).unwrap();
        let x: Vec<[f64; 3]> = (0..56).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
        let g = gradient(&stats, &x).unwrap();
        for d in 0..3 {
            let ch: Vec<f64> = x.iter().map(|p| p[d]).collect();
            let lp = stats.apply_laplacian(&ch);
            for i in 0..56 {
                assert!((2.0 * lp[i] - g[i][d]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn diagonal_matches_unit_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y = random_image(6, 5, &mut rng);
        let stats = GuideStats::new(&y, 3, 1e-3).unwrap();
        let diag = stats.laplacian_diagonal();
        for i in 0..30 {
            let mut e = vec![0.0; 30];
            e[i] = 1.0;
            assert!((stats.apply_laplacian(&e)[i] - diag[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn fused_gradient_matches_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let y = random_image(13, 17, &mut rng);
        let stats = GuideStats::new(&y, 5, 1e-5).unwrap();
        let mut ws = GradientWorkspace::new();
        for _ in 0..3 {
            let x: Vec<[f64; 3]> = (0..13 * 17).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
            let reference = gradient(&stats, &x).unwrap();
            let mut fused = vec![[0.0; 3]; x.len()];
            stats.gradient_into(&x, &mut ws, &mut fused).unwrap();
            for (a, b) in reference.iter().flatten().zip(fused.iter().flatten()) {
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn f32_gradient_of_constant_is_small() {
        let y = ImageRgb::from_fn(6, 6, |r, c| [r as f32 / 6.0, c as f32 / 6.0, 0.5]);
        let stats = GuideStats::new(&y, 3, 1e-3f32).unwrap();
        let g = gradient(&stats, &vec![[0.4f32; 3]; 36]).unwrap();
        assert!(g.iter().flatten().all(|v| v.abs() < 1e-3));
    }
}
