//! Hexcone HSV with all three components normalized to `[0, 1]`.
//!
//! Hue is circular in `[0, 1)`; achromatic pixels get hue 0.

use crate::error::{Error, Result};
use crate::imgcore::ImageRgb;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct ImageHsv<T> {
    height: usize,
    width: usize,
    data: Vec<[T; 3]>,
}

impl<T: Scalar> ImageHsv<T> {
    pub fn new(height: usize, width: usize, data: Vec<[T; 3]>) -> Result<Self> {
        if height == 0 || width == 0 || data.len() != height * width {
            return Err(Error::invalid("hsv buffer does not match dimensions"));
        }
        let one = T::one();
        let zero = T::zero();
        let ok = data.iter().all(|&[h, s, v]| {
            h >= zero && h < one && s >= zero && s <= one && v >= zero && v <= one
        });
        if !ok {
            return Err(Error::invalid("hsv component out of range"));
        }
        Ok(Self { height, width, data })
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn pixels(&self) -> &[[T; 3]] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> [T; 3] {
        self.data[row * self.width + col]
    }

    pub fn hues(&self) -> Vec<T> {
        self.data.iter().map(|p| p[0]).collect()
    }

    pub fn saturations(&self) -> Vec<T> {
        self.data.iter().map(|p| p[1]).collect()
    }

    pub fn values(&self) -> Vec<T> {
        self.data.iter().map(|p| p[2]).collect()
    }
}

pub fn rgb_to_hsv_pixel<T: Scalar>([r, g, b]: [T; 3]) -> [T; 3] {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let s = if max > T::zero() { delta / max } else { T::zero() };
    if delta <= T::zero() {
        return [T::zero(), s, max];
    }
    let six = T::lit(6.0);
    let sector = if max == r {
        (g - b) / delta
    } else if max == g {
        (b - r) / delta + T::lit(2.0)
    } else {
        (r - g) / delta + T::lit(4.0)
    };
    let mut h = sector / six;
    if h < T::zero() {
        h += T::one();
    }
    if h >= T::one() {
        h -= T::one();
    }
    [h, s, max]
}

pub fn hsv_to_rgb_pixel<T: Scalar>([h, s, v]: [T; 3]) -> [T; 3] {
    if s <= T::zero() {
        return [v, v, v];
    }
    let h6 = h * T::lit(6.0);
    let floor = h6.floor();
    let f = h6 - floor;
    let sector = floor.to_i64().unwrap_or(0).rem_euclid(6);
    let p = v * (T::one() - s);
    let q = v * (T::one() - s * f);
    let t = v * (T::one() - s * (T::one() - f));
    let rgb = match sector {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    };
    rgb.map(|c| c.clamp01())
}

pub fn rgb_to_hsv<T: Scalar>(img: &ImageRgb<T>) -> ImageHsv<T> {
    let (height, width) = img.dims();
    ImageHsv {
        height,
        width,
        data: img.pixels().iter().map(|&p| rgb_to_hsv_pixel(p)).collect(),
    }
}

pub fn hsv_to_rgb<T: Scalar>(img: &ImageHsv<T>) -> ImageRgb<T> {
    let data = img.data.iter().map(|&p| hsv_to_rgb_pixel(p)).collect();
    ImageRgb::new(img.height, img.width, data).expect("hsv_to_rgb stays in range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
        a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn primaries_and_gray() {
        assert_eq!(rgb_to_hsv_pixel([1.0, 0.0, 0.0]), [0.0, 1.0, 1.0]);
        assert_eq!(rgb_to_hsv_pixel([0.5, 0.5, 0.5]), [0.0, 0.0, 0.5]);
        assert!(close(rgb_to_hsv_pixel([0.0, 1.0, 0.0]), [1.0 / 3.0, 1.0, 1.0], 1e-15));
        assert!(close(rgb_to_hsv_pixel([0.0, 0.0, 1.0]), [2.0 / 3.0, 1.0, 1.0], 1e-15));
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(hsv_to_rgb_pixel([0.0, 1.0, 1.0]), [1.0, 0.0, 0.0]);
        assert_eq!(hsv_to_rgb_pixel([0.37, 0.0, 0.4]), [0.4, 0.4, 0.4]);
    }

    #[test]
    fn thousand_random_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let p: [f64; 3] = [rng.random(), rng.random(), rng.random()];
            let back = hsv_to_rgb_pixel(rgb_to_hsv_pixel(p));
            assert!(close(p, back, 1e-12), "{p:?} -> {back:?}");
        }
    }

    #[test]
    fn image_level_round_trip() {
        let img = ImageRgb::from_fn(4, 5, |r, c| [r as f64 / 4.0, c as f64 / 5.0, 0.3]);
        let back = hsv_to_rgb(&rgb_to_hsv(&img));
        for (a, b) in img.pixels().iter().zip(back.pixels()) {
            assert!(close(*a, *b, 1e-12));
        }
    }

    proptest! {
        #[test]
        fn hsv_round_trip_with_saturation(h in 0.0f64..1.0, s in 0.05f64..=1.0, v in 0.05f64..=1.0) {
            let back = rgb_to_hsv_pixel(hsv_to_rgb_pixel([h, s, v]));
            let dh = (back[0] - h).abs();
            prop_assert!(dh.min(1.0 - dh) <= 1e-12);
            prop_assert!((back[1] - s).abs() <= 1e-12 && (back[2] - v).abs() <= 1e-12);
        }

        #[test]
        fn rgb_round_trip(r in 0.0f64..=1.0, g in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let back = hsv_to_rgb_pixel(rgb_to_hsv_pixel([r, g, b]));
            prop_assert!(close([r, g, b], back, 1e-12));
        }
    }
}
