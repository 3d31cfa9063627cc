//! 8-bit PNG input/output. Sample `k` loads as `k / 255`; saving rounds half-up.

use std::path::Path;

use image::{GrayImage, Luma, Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::imgcore::{ImageRgb, RegionMask};
use crate::scalar::Scalar;

#[inline]
pub fn quantize<T: Scalar>(v: T) -> u8 {
    let x = v.to_f64_lossy();
    if !(x > 0.0) {
        return 0;
    }
    (x * 255.0 + 0.5).floor().min(255.0) as u8
}

#[inline]
pub fn dequantize<T: Scalar>(k: u8) -> T {
    T::lit(k as f64 / 255.0)
}

fn codec(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Codec {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub fn load_rgb<T: Scalar>(path: impl AsRef<Path>) -> Result<ImageRgb<T>> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|e| codec(path, e))?.to_rgb8();
    let (w, h) = img.dimensions();
    let data = img.pixels().map(|p| p.0.map(dequantize)).collect();
    ImageRgb::new(h as usize, w as usize, data)
}

pub fn to_rgb8<T: Scalar>(img: &ImageRgb<T>) -> RgbImage {
    let (h, w) = img.dims();
    RgbImage::from_fn(w as u32, h as u32, |x, y| Rgb(img.get(y as usize, x as usize).map(quantize)))
}

pub fn save_rgb<T: Scalar>(path: impl AsRef<Path>, img: &ImageRgb<T>) -> Result<()> {
    let path = path.as_ref();
    to_rgb8(img).save(path).map_err(|e| codec(path, e))
}

/// Loads a grayscale mask; samples `>= 128` are members.
pub fn load_mask(path: impl AsRef<Path>) -> Result<RegionMask> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|e| codec(path, e))?.to_luma8();
    let (w, h) = img.dimensions();
    let bits = img.pixels().map(|p| p.0[0] >= 128).collect();
    RegionMask::from_bits(h as usize, w as usize, bits)
}

pub fn save_mask(path: impl AsRef<Path>, mask: &RegionMask) -> Result<()> {
    let path = path.as_ref();
    let (h, w) = mask.dims();
    let img = GrayImage::from_fn(w as u32, h as u32, |x, y| {
        Luma([if mask.get(y as usize, x as usize) { 255 } else { 0 }])
    });
    img.save(path).map_err(|e| codec(path, e))
}

/// Writes a `[0, 1]` plane as 8-bit grayscale.
pub fn save_gray<T: Scalar>(path: impl AsRef<Path>, plane: &[T], height: usize, width: usize) -> Result<()> {
    let path = path.as_ref();
    if plane.len() != height * width {
        return Err(Error::invalid("plane does not match dimensions"));
    }
    let img = GrayImage::from_fn(width as u32, height as u32, |x, y| {
        Luma([quantize(plane[y as usize * width + x as usize])])
    });
    img.save(path).map_err(|e| codec(path, e))
}

/// Parses `#rrggbb` (leading `#` optional) into normalized RGB.
pub fn parse_hex_color(s: &str) -> Result<[f64; 3]> {
    let hex = s.trim().trim_start_matches('#');
    if hex.len() != 6 || !hex.chars().all(|c| c.is_ascii_hexdigit()) {
        return Err(Error::invalid(format!("not a hex color: {s:?}")));
    }
    let mut out = [0.0; 3];
    for (k, v) in out.iter_mut().enumerate() {
        let byte = u8::from_str_radix(&hex[2 * k..2 * k + 2], 16).expect("validated hex");
        *v = byte as f64 / 255.0;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantize_rounds_half_up() {
        assert_eq!(quantize(0.0f64), 0);
        assert_eq!(quantize(1.0f64), 255);
        assert_eq!(quantize(0.5 / 255.0 + 1e-12), 1);
        assert_eq!(quantize(2.5f64 / 255.0), 3);
        assert_eq!(quantize(-1.0f64), 0);
        for k in 0..=255u8 {
            assert_eq!(quantize(dequantize::<f64>(k)), k);
        }
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let img = ImageRgb::from_fn(3, 4, |r, c| {
            [(r * 4 + c) as f64 / 255.0, 1.0, c as f64 * 17.0 / 255.0]
        });
        let p = dir.path().join("a.png");
        save_rgb(&p, &img).unwrap();
        let back: ImageRgb<f64> = load_rgb(&p).unwrap();
        assert_eq!(back, img);

        let m = RegionMask::rect(3, 4, 1, 3, 0, 2);
        let pm = dir.path().join("m.png");
        save_mask(&pm, &m).unwrap();
        assert_eq!(load_mask(&pm).unwrap(), m);
    }

    #[test]
    fn hex_colors() {
        let c = parse_hex_color("#4a6fb3").unwrap();
        assert_eq!(c, [74.0 / 255.0, 111.0 / 255.0, 179.0 / 255.0]);
        assert!(parse_hex_color("#4a6fb").is_err());
        assert!(parse_hex_color("zzzzzz").is_err());
    }
}
