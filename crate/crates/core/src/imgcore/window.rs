//! Clipped square-window sums via summed-area tables.
//!
//! Sums are accumulated in `f64`: clipped row-window sums from per-row prefix
//! sums, then column prefix sums over those, so results are bit-reproducible
//! for a given input regardless of the scalar type.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

thread_local! {
    // reused column-prefix table; solvers call `sum_by` thousands of times per image
    static SCRATCH: std::cell::RefCell<Vec<f64>> = const { std::cell::RefCell::new(Vec::new()) };
}

/// Square box of odd side over an `height x width` grid, clipped at borders.
#[derive(Debug, Clone)]
pub struct BoxWindow {
    height: usize,
    width: usize,
    radius: usize,
    counts: Vec<usize>,
}

impl BoxWindow {
    pub fn new(height: usize, width: usize, side: usize) -> Result<Self> {
        if side == 0 || side % 2 == 0 {
            return Err(Error::invalid(format!("window side must be odd and positive, got {side}")));
        }
        if height == 0 || width == 0 {
            return Err(Error::invalid("window grid must be non-empty"));
        }
        let radius = side / 2;
        let span = |i: usize, n: usize| (i + radius).min(n - 1) + 1 - i.saturating_sub(radius);
        let mut counts = Vec::with_capacity(height * width);
        for r in 0..height {
            let rows = span(r, height);
            for c in 0..width {
                counts.push(rows * span(c, width));
            }
        }
        Ok(Self { height, width, radius, counts })
    }

    pub fn from_radius(height: usize, width: usize, radius: usize) -> Result<Self> {
        Self::new(height, width, 2 * radius + 1)
    }

    #[inline]
    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    #[inline]
    pub fn radius(&self) -> usize {
        self.radius
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// `|w_i|`: in-bounds pixel count of each pixel's window.
    #[inline]
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Clipped window sum of `plane` at every pixel.
    pub fn sum<T: Scalar>(&self, plane: &[T]) -> Vec<T> {
        self.sum_by(|i| plane[i].to_f64_lossy())
    }

    /// Clipped window sum of `value(i)` for flat pixel index `i`.
    pub fn sum_by<T: Scalar>(&self, value: impl Fn(usize) -> f64) -> Vec<T> {
        let mut out = Vec::with_capacity(self.counts.len());
        self.accumulate(value, |row| out.extend(row.iter().map(|&v| T::lit(v))));
        out
    }

    /// Like [`BoxWindow::sum_by`] for `f64`, writing into `out`.
    pub fn sum_into(&self, value: impl Fn(usize) -> f64, out: &mut [f64]) {
        assert_eq!(out.len(), self.counts.len(), "output plane has the wrong size");
        let mut pos = 0;
        self.accumulate(value, |row| {
            out[pos..pos + row.len()].copy_from_slice(row);
            pos += row.len();
        });
    }

    /// Emits window sums one image row at a time.
    fn accumulate(&self, value: impl Fn(usize) -> f64, mut emit: impl FnMut(&[f64])) {
        let (h, w) = (self.height, self.width);
        assert!(h * w == self.counts.len());
        let rad = self.radius;
        let lo = |i: usize| i.saturating_sub(rad);
        let hi = |i: usize, n: usize| (i + rad).min(n - 1) + 1;

        // row prefix sums, then column prefix sums of the row-window sums
        let mut prefix = vec![0.0f64; w + 1];
        let mut table = SCRATCH.with(|s| std::mem::take(&mut *s.borrow_mut()));
        // rows 1..=h are fully overwritten below
        if table.len() < (h + 1) * w {
            table.resize((h + 1) * w, 0.0);
        }
        table[..w].fill(0.0);
        for r in 0..h {
            let base = r * w;
            for c in 0..w {
                prefix[c + 1] = prefix[c] + value(base + c);
            }
            let (above, below) = table.split_at_mut((r + 1) * w);
            let prev = &above[r * w..];
            let cur = &mut below[..w];
            // interior columns see a full-width window
            for c in 0..w.min(rad) {
                cur[c] = prev[c] + (prefix[hi(c, w)] - prefix[0]);
            }
            for c in rad.min(w)..w.saturating_sub(rad) {
                cur[c] = prev[c] + (prefix[c + rad + 1] - prefix[c - rad]);
            }
            for c in w.saturating_sub(rad).max(rad.min(w))..w {
                cur[c] = prev[c] + (prefix[w] - prefix[lo(c)]);
            }
        }
        let mut row = vec![0.0f64; w];
        for r in 0..h {
            let top = &table[lo(r) * w..lo(r) * w + w];
            let bottom = &table[hi(r, h) * w..hi(r, h) * w + w];
            for ((o, b), t) in row.iter_mut().zip(bottom).zip(top) {
                *o = b - t;
            }
            emit(&row);
        }
        SCRATCH.with(|s| *s.borrow_mut() = table);
    }
}

/// Windowed sums of a set of planes and of selected pairwise products.
#[derive(Debug, Clone)]
pub struct WindowStats<T> {
    pub window: BoxWindow,
    /// Sums of each input plane, in input order.
    pub plane_sums: Vec<Vec<T>>,
    /// Sums of `planes[a] * planes[b]` for each requested `(a, b)`, in request order.
    pub product_sums: Vec<Vec<T>>,
}

impl<T: Scalar> WindowStats<T> {
    pub fn counts(&self) -> &[usize] {
        self.window.counts()
    }

    /// Window mean of plane `k` at pixel `i`.
    pub fn plane_mean(&self, k: usize, i: usize) -> T {
        self.plane_sums[k][i] / T::from_usize_lossy(self.window.counts()[i])
    }
}

pub fn windowed_sums<T: Scalar>(
    planes: &[&[T]],
    products: &[(usize, usize)],
    height: usize,
    width: usize,
    window_side: usize,
) -> Result<WindowStats<T>> {
    let window = BoxWindow::new(height, width, window_side)?;
    if let Some(p) = planes.iter().find(|p| p.len() != height * width) {
        return Err(Error::invalid(format!(
            "plane has {} samples, expected {}",
            p.len(),
            height * width
        )));
    }
    if products.iter().any(|&(a, b)| a >= planes.len() || b >= planes.len()) {
        return Err(Error::invalid("product refers to a missing plane"));
    }
    let plane_sums = planes.iter().map(|p| window.sum(p)).collect();
    let product_sums = products
        .iter()
        .map(|&(a, b)| {
            let (pa, pb) = (planes[a], planes[b]);
            window.sum_by(|i| (pa[i] * pb[i]).to_f64_lossy())
        })
        .collect();
    Ok(WindowStats { window, plane_sums, product_sums })
}
