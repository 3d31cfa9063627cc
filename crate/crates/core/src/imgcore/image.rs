use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Three-channel image with every sample in `[0, 1]`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRgb<T> {
    height: usize,
    width: usize,
    data: Vec<[T; 3]>,
}

impl<T: Scalar> ImageRgb<T> {
    /// Validating constructor: rejects empty dimensions, length mismatch,
    /// and samples that are non-finite or outside `[0, 1]`.
    pub fn new(height: usize, width: usize, data: Vec<[T; 3]>) -> Result<Self> {
        check_dims(height, width, data.len())?;
        if let Some(i) = data
            .iter()
            .position(|p| p.iter().any(|&v| !(v >= T::zero() && v <= T::one())))
        {
            return Err(Error::invalid(format!(
                "pixel {i} has a sample outside [0, 1]"
            )));
        }
        Ok(Self { height, width, data })
    }

    /// Builds from arbitrary reals, clamping into `[0, 1]` (NaN becomes 0).
    pub fn from_clamped(height: usize, width: usize, mut data: Vec<[T; 3]>) -> Result<Self> {
        check_dims(height, width, data.len())?;
        for p in &mut data {
            for v in p.iter_mut() {
                *v = v.max(T::zero()).min(T::one());
            }
        }
        Ok(Self { height, width, data })
    }

    pub fn filled(height: usize, width: usize, color: [T; 3]) -> Self {
        assert!(height > 0 && width > 0, "image dimensions must be positive");
        let color = color.map(|v| v.max(T::zero()).min(T::one()));
        Self {
            height,
            width,
            data: vec![color; height * width],
        }
    }

    /// Evaluates `f(row, col)` per pixel; results are clamped into `[0, 1]`.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> [T; 3]) -> Self {
        assert!(height > 0 && width > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c).map(|v| v.max(T::zero()).min(T::one())));
            }
        }
        Self { height, width, data }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> [T; 3] {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn pixels(&self) -> &[[T; 3]] {
        &self.data
    }

    pub fn into_pixels(self) -> Vec<[T; 3]> {
        self.data
    }

    /// One channel as a contiguous plane.
    pub fn plane(&self, channel: usize) -> Vec<T> {
        self.data.iter().map(|p| p[channel]).collect()
    }

    pub fn same_dims<U>(&self, other: &ImageRgb<U>) -> Result<()> {
        if self.dims() != (other.height, other.width) {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                actual: (other.height, other.width),
            });
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> ImageRgb<U> {
        ImageRgb {
            height: self.height,
            width: self.width,
            data: self
                .data
                .iter()
                .map(|p| p.map(|v| U::lit(v.to_f64_lossy())))
                .collect(),
        }
    }

    /// Pixel values at the given flat indices, in the order given.
    pub fn gather(&self, indices: impl IntoIterator<Item = usize>) -> Vec<[T; 3]> {
        indices.into_iter().map(|i| self.data[i]).collect()
    }
}

fn check_dims(height: usize, width: usize, len: usize) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(Error::invalid("image dimensions must be positive"));
    }
    if height * width != len {
        return Err(Error::invalid(format!(
            "pixel buffer has {len} entries, expected {}",
            height * width
        )));
    }
    Ok(())
}
