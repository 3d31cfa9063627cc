//! Image containers, color conversion, morphology, labeling, and window sums.

mod components;
mod hsv;
mod image;
pub mod io;
mod mask;
mod morph;
mod window;

pub use components::{connected_components, Components};
pub use hsv::{hsv_to_rgb, hsv_to_rgb_pixel, rgb_to_hsv, rgb_to_hsv_pixel, ImageHsv};
pub use image::ImageRgb;
pub use mask::RegionMask;
pub use morph::{dilate_disc, disc_half_widths, erode_disc};
pub use window::{windowed_sums, BoxWindow, WindowStats};

/// Lower median (element at index `(n - 1) / 2` after sorting). `None` when empty.
pub fn lower_median<T: PartialOrd + Copy>(values: &[T]) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Some(v[(v.len() - 1) / 2])
}
