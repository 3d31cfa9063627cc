#![allow(dead_code)]

use facetone::imgcore::ImageRgb;
use nalgebra::{DMatrix, Matrix3, Vector3};

/// Matting Laplacian assembled entry by entry from clipped square windows.
pub fn dense_laplacian(y: &ImageRgb<f64>, radius: usize, eps: f64) -> DMatrix<f64> {
    let (h, w) = y.dims();
    let n = h * w;
    let mut lap = DMatrix::zeros(n, n);
    for kr in 0..h {
        for kc in 0..w {
            let rows = kr.saturating_sub(radius)..(kr + radius + 1).min(h);
            let cols = kc.saturating_sub(radius)..(kc + radius + 1).min(w);
            let members: Vec<usize> = rows.flat_map(|r| cols.clone().map(move |c| r * w + c)).collect();
            let m = members.len() as f64;
            let vecs: Vec<Vector3<f64>> = members
                .iter()
                .map(|&i| Vector3::from(y.pixels()[i]))
                .collect();
            let mu: Vector3<f64> = vecs.iter().sum::<Vector3<f64>>() / m;
            let mut cov = Matrix3::zeros();
            for v in &vecs {
                cov += (v - mu) * (v - mu).transpose();
            }
            cov /= m;
            let delta_inv = (cov + Matrix3::identity() * (eps / m)).try_inverse().unwrap();
            for (a, &i) in members.iter().enumerate() {
                for (b, &j) in members.iter().enumerate() {
                    let q = (vecs[a] - mu).dot(&(delta_inv * (vecs[b] - mu)));
                    let kron = if i == j { 1.0 } else { 0.0 };
                    lap[(i, j)] += kron - (1.0 + q) / m;
                }
            }
        }
    }
    lap
}

