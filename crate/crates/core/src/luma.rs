//! Intensity/color decomposition and luminance grafting.
//!
//! Intensity is `I = (R² + G² + B²) / (R + G + B)` and color is `x / I`.
//! Black pixels take `I = 0` and `C = (1, 1, 1)`.

use crate::error::Result;
use crate::imgcore::ImageRgb;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct IntensityColorPair<T> {
    pub height: usize,
    pub width: usize,
    pub intensity: Vec<T>,
    pub color: Vec<[T; 3]>,
}

#[inline]
pub fn decompose_pixel<T: Scalar>(p: [T; 3]) -> (T, [T; 3]) {
    let l1 = p[0] + p[1] + p[2];
    if l1 <= T::zero() {
        return (T::zero(), [T::one(); 3]);
    }
    let intensity = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) / l1;
    (intensity, p.map(|v| v / intensity))
}

pub fn decompose<T: Scalar>(img: &ImageRgb<T>) -> IntensityColorPair<T> {
    let (intensity, color) = img.pixels().iter().map(|&p| decompose_pixel(p)).unzip();
    IntensityColorPair {
        height: img.height(),
        width: img.width(),
        intensity,
        color,
    }
}

/// `x'_i = I(y)_i · C(x)_i`, clipped to `[0, 1]`.
pub fn recombine_luminance<T: Scalar>(
    input: &IntensityColorPair<T>,
    filtered: &IntensityColorPair<T>,
) -> Result<ImageRgb<T>> {
    if (input.height, input.width) != (filtered.height, filtered.width) {
        return Err(crate::Error::DimensionMismatch {
            expected: (input.height, input.width),
            actual: (filtered.height, filtered.width),
        });
    }
    let data = input
        .intensity
        .iter()
        .zip(&filtered.color)
        .map(|(&i, c)| c.map(|v| i * v))
        .collect();
    ImageRgb::from_clamped(input.height, input.width, data)
}

/// Keeps the input's shading and takes the filtered image's chromaticity.
pub fn preserve_luminance<T: Scalar>(input: &ImageRgb<T>, filtered: &ImageRgb<T>) -> Result<ImageRgb<T>> {
    input.same_dims(filtered)?;
    recombine_luminance(&decompose(input), &decompose(filtered))
}
