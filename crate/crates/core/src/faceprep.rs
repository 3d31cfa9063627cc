//! Face-area estimation from detector candidates, working-window sizing,
//! and crop-and-resize.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{lower_median, ImageRgb, RegionMask};
use crate::scalar::Scalar;

/// One detector hit: center `(x, y)` and size `(w, h)` in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectCandidate {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl RectCandidate {
    pub fn validate(&self, height: usize, width: usize) -> Result<()> {
        let finite = [self.x, self.y, self.w, self.h].iter().all(|v| v.is_finite());
        if !finite || self.w <= 0.0 || self.h <= 0.0 {
            return Err(Error::invalid(format!("degenerate face candidate {self:?}")));
        }
        if self.x < 0.0 || self.y < 0.0 || self.x >= width as f64 || self.y >= height as f64 {
            return Err(Error::invalid(format!(
                "face candidate center ({}, {}) outside {width}x{height} image",
                self.x, self.y
            )));
        }
        Ok(())
    }
}

/// Reads a JSON array of `{"x", "y", "w", "h"}` objects.
pub fn load_candidates(path: impl AsRef<Path>) -> Result<Vec<RectCandidate>> {
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

/// Coordinate-wise median of the candidates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceEstimate {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

/// Coordinate-wise lower medians of `x`, `y`, `w`, `h`.
pub fn aggregate_candidates(cands: &[RectCandidate]) -> Result<FaceEstimate> {
    if cands.is_empty() {
        return Err(Error::NoFaceCandidates);
    }
    let pick = |f: fn(&RectCandidate) -> f64| {
        let v: Vec<f64> = cands.iter().map(f).collect();
        lower_median(&v).expect("non-empty")
    };
    Ok(FaceEstimate {
        x: pick(|c| c.x),
        y: pick(|c| c.y),
        w: pick(|c| c.w),
        h: pick(|c| c.h),
    })
}

/// Odd side of the working window: `round_half_up(2 l w) + 1`, bumped to odd.
pub fn window_side(w_hat: f64, scale: f64) -> usize {
    let mut side = (2.0 * scale * w_hat + 0.5).floor().max(0.0) as usize + 1;
    if side % 2 == 0 {
        side += 1;
    }
    side
}

/// Detected face plus its square working window, clipped to the image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceArea {
    pub estimate: FaceEstimate,
    pub scale: f64,
    /// Odd side length before clipping.
    pub side: usize,
    pub image_height: usize,
    pub image_width: usize,
    /// Clipped window bounds, half-open: rows `[row0, row1)`, cols `[col0, col1)`.
    pub row0: usize,
    pub row1: usize,
    pub col0: usize,
    pub col1: usize,
}

impl FaceArea {
    /// Center pixel (row, col), rounded half-up.
    pub fn center_pixel(&self) -> (i64, i64) {
        (
            (self.estimate.y + 0.5).floor() as i64,
            (self.estimate.x + 0.5).floor() as i64,
        )
    }

    /// The working window as a mask.
    pub fn window_mask(&self) -> RegionMask {
        RegionMask::rect(
            self.image_height,
            self.image_width,
            self.row0 as i64,
            self.row1 as i64,
            self.col0 as i64,
            self.col1 as i64,
        )
    }

    /// The detected `w x h` face rectangle itself, clipped to the image.
    pub fn face_box(&self) -> (i64, i64, i64, i64) {
        let e = &self.estimate;
        let row0 = (e.y - e.h / 2.0).round() as i64;
        let row1 = (e.y + e.h / 2.0).round() as i64 + 1;
        let col0 = (e.x - e.w / 2.0).round() as i64;
        let col1 = (e.x + e.w / 2.0).round() as i64 + 1;
        (
            row0.max(0),
            row1.min(self.image_height as i64),
            col0.max(0),
            col1.min(self.image_width as i64),
        )
    }

    pub fn face_box_mask(&self) -> RegionMask {
        let (r0, r1, c0, c1) = self.face_box();
        RegionMask::rect(self.image_height, self.image_width, r0, r1, c0, c1)
    }

    pub fn window_area(&self) -> usize {
        (self.row1 - self.row0) * (self.col1 - self.col0)
    }
}

pub fn face_window(
    estimate: FaceEstimate,
    scale: f64,
    image_height: usize,
    image_width: usize,
) -> Result<FaceArea> {
    if !(scale > 0.0) {
        return Err(Error::invalid(format!("scale factor must be positive, got {scale}")));
    }
    if image_height == 0 || image_width == 0 {
        return Err(Error::invalid("empty image"));
    }
    let side = window_side(estimate.w, scale);
    let half = (side / 2) as i64;
    let mut area = FaceArea {
        estimate,
        scale,
        side,
        image_height,
        image_width,
        row0: 0,
        row1: 0,
        col0: 0,
        col1: 0,
    };
    let (cr, cc) = area.center_pixel();
    let clip = |lo: i64, hi: i64, n: usize| (lo.max(0).min(n as i64) as usize, hi.max(0).min(n as i64) as usize);
    (area.row0, area.row1) = clip(cr - half, cr + half + 1, image_height);
    (area.col0, area.col1) = clip(cc - half, cc + half + 1, image_width);
    if area.window_area() == 0 {
        return Err(Error::invalid("face window lies outside the image"));
    }
    Ok(area)
}

/// Bilinear sample with pixel centers at integer coordinates, clamped at edges.
fn bilinear<T: Scalar>(img: &ImageRgb<T>, r0: usize, r1: usize, c0: usize, c1: usize, y: f64, x: f64) -> [T; 3] {
    let y = y.clamp(r0 as f64, (r1 - 1) as f64);
    let x = x.clamp(c0 as f64, (c1 - 1) as f64);
    let (ya, xa) = (y.floor() as usize, x.floor() as usize);
    let (yb, xb) = ((ya + 1).min(r1 - 1), (xa + 1).min(c1 - 1));
    let (fy, fx) = (T::lit(y - ya as f64), T::lit(x - xa as f64));
    let one = T::one();
    let (p00, p01, p10, p11) = (img.get(ya, xa), img.get(ya, xb), img.get(yb, xa), img.get(yb, xb));
    let mut out = [T::zero(); 3];
    for k in 0..3 {
        let top = p00[k] * (one - fx) + p01[k] * fx;
        let bottom = p10[k] * (one - fx) + p11[k] * fx;
        out[k] = top * (one - fy) + bottom * fy;
    }
    out
}

/// Crops the working window and resamples it to `out_side x out_side`.
pub fn crop_resize<T: Scalar>(img: &ImageRgb<T>, area: &FaceArea, out_side: usize) -> Result<ImageRgb<T>> {
    if out_side == 0 {
        return Err(Error::invalid("output side must be at least 1"));
    }
    if area.window_area() == 0 || area.row1 > img.height() || area.col1 > img.width() {
        return Err(Error::invalid("degenerate crop"));
    }
    let (r0, r1, c0, c1) = (area.row0, area.row1, area.col0, area.col1);
    let sy = (r1 - r0) as f64 / out_side as f64;
    let sx = (c1 - c0) as f64 / out_side as f64;
    Ok(ImageRgb::from_fn(out_side, out_side, |r, c| {
        let y = r0 as f64 + (r as f64 + 0.5) * sy - 0.5;
        let x = c0 as f64 + (c as f64 + 0.5) * sx - 0.5;
        bilinear(img, r0, r1, c0, c1, y, x)
    }))
}

/// Maps candidates from image coordinates into the resized crop of `area`.
pub fn candidates_in_crop(cands: &[RectCandidate], area: &FaceArea, out_side: usize) -> Vec<RectCandidate> {
    let sy = out_side as f64 / (area.row1 - area.row0) as f64;
    let sx = out_side as f64 / (area.col1 - area.col0) as f64;
    cands
        .iter()
        .map(|c| RectCandidate {
            x: ((c.x - area.col0 as f64 + 0.5) * sx - 0.5).clamp(0.0, out_side as f64 - 1.0),
            y: ((c.y - area.row0 as f64 + 0.5) * sy - 0.5).clamp(0.0, out_side as f64 - 1.0),
            w: c.w * sx,
            h: c.h * sy,
        })
        .collect()
}
