//! Skin-region extraction: hue clustering, connected regions near the face,
//! saturation/value gating, and the dilated region system used by the solver.

mod kmeans;

pub use kmeans::{
    circular_distance, circular_mean, kmeans_hue, kmeans_hue_with_restarts, partition_cost,
    HueClusterModel, DEFAULT_RESTARTS, MAX_LLOYD_ITERS,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::faceprep::FaceArea;
use crate::imgcore::{connected_components, dilate_disc, lower_median, rgb_to_hsv, ImageHsv, ImageRgb, RegionMask};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SkinConfig {
    /// Hue clusters.
    pub clusters: usize,
    /// Half-width of the saturation band around the face's median saturation.
    pub saturation_band: f64,
    pub value_min: f64,
    pub value_max: f64,
    /// Minimum fraction of a component's own area that must fall in the window.
    pub min_window_overlap: f64,
    pub dilation_radius: usize,
    pub kmeans_restarts: usize,
}

impl Default for SkinConfig {
    fn default() -> Self {
        Self {
            clusters: 4,
            saturation_band: 0.2,
            value_min: 0.15,
            value_max: 0.95,
            min_window_overlap: 0.1,
            dilation_radius: 20,
            kmeans_restarts: DEFAULT_RESTARTS,
        }
    }
}

/// Skin region plus the derived dilation, background and boundary band.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSystem {
    pub skin: RegionMask,
    pub dilated: RegionMask,
    pub background: RegionMask,
    pub boundary: RegionMask,
}

impl RegionSystem {
    /// Regions supplied directly; the boundary band is whatever neither covers.
    pub fn from_masks(skin: RegionMask, background: RegionMask) -> Result<Self> {
        let (h, w) = skin.dims();
        background.check_dims(h, w)?;
        if !skin.is_disjoint(&background) {
            return Err(Error::invalid("skin and background masks overlap"));
        }
        let dilated = background.complement();
        let boundary = dilated.difference(&skin);
        Ok(Self { skin, dilated, background, boundary })
    }
}

/// Pixels of the modal skin cluster that form components lying mostly near the face.
///
/// The skin label is the most frequent cluster inside `reference`; a
/// component of that label is kept when at least `min_overlap` of its own
/// area lies inside `window`.
pub fn skin_hue_region(
    model: &HueClusterModel,
    height: usize,
    width: usize,
    reference: &RegionMask,
    window: &RegionMask,
    min_overlap: f64,
) -> Result<RegionMask> {
    if model.assignment.len() != height * width {
        return Err(Error::invalid("cluster model does not cover the image"));
    }
    reference.check_dims(height, width)?;
    window.check_dims(height, width)?;
    if reference.is_empty() || window.is_empty() {
        return Err(Error::invalid("face window is empty"));
    }
    let mut votes = vec![0usize; model.k];
    for i in reference.indices() {
        votes[model.assignment[i]] += 1;
    }
    // ties go to the lowest label
    let skin_label = votes
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(j, _)| j)
        .expect("k >= 1");
    let comps = connected_components(&model.assignment, height, width);
    let mut out = RegionMask::empty(height, width);
    for comp in &comps.members {
        if model.assignment[comp[0]] != skin_label {
            continue;
        }
        let inside = comp.iter().filter(|&&p| window.contains(p)).count();
        if inside > 0 && inside as f64 >= min_overlap * comp.len() as f64 {
            for &p in comp {
                out.set_index(p, true);
            }
        }
    }
    Ok(out)
}

/// Keeps hue-region pixels whose saturation is within `band` of the median
/// saturation over `reference` and whose value lies in `[value_min, value_max]`.
/// Returns the refined mask and the median saturation.
pub fn refine_sv<T: Scalar>(
    hue_region: &RegionMask,
    hsv: &ImageHsv<T>,
    reference: &RegionMask,
    cfg: &SkinConfig,
) -> Result<(RegionMask, f64)> {
    let (h, w) = hsv.dims();
    hue_region.check_dims(h, w)?;
    reference.check_dims(h, w)?;
    let sats: Vec<f64> = reference
        .indices()
        .map(|i| hsv.pixels()[i][1].to_f64_lossy())
        .collect();
    let s_hat = lower_median(&sats).ok_or_else(|| Error::invalid("face window is empty"))?;
    let (lo, hi) = (s_hat - cfg.saturation_band, s_hat + cfg.saturation_band);
    let mut out = RegionMask::empty(h, w);
    for i in hue_region.indices() {
        let [_, s, v] = hsv.pixels()[i].map(|c| c.to_f64_lossy());
        if s >= lo && s <= hi && v >= cfg.value_min && v <= cfg.value_max {
            out.set_index(i, true);
        }
    }
    Ok((out, s_hat))
}

pub fn build_regions(skin: &RegionMask, radius: usize) -> RegionSystem {
    let dilated = dilate_disc(skin, radius);
    let background = dilated.complement();
    let boundary = dilated.difference(skin);
    RegionSystem {
        skin: skin.clone(),
        dilated,
        background,
        boundary,
    }
}

/// Intermediate products of automatic skin extraction.
#[derive(Debug, Clone)]
pub struct SkinExtraction {
    pub model: HueClusterModel,
    pub hue_region: RegionMask,
    pub skin: RegionMask,
    pub median_saturation: f64,
}

/// Full automatic extraction on one image. The modal cluster and median
/// saturation are taken over the detected face box; component selection
/// uses the working window.
pub fn extract_skin<T: Scalar>(img: &ImageRgb<T>, face: &FaceArea, cfg: &SkinConfig, seed: u64) -> Result<SkinExtraction> {
    let (h, w) = img.dims();
    let hsv = rgb_to_hsv(img);
    let model = kmeans_hue_with_restarts(&hsv.hues(), cfg.clusters, seed, cfg.kmeans_restarts)?;
    let face_box = face.face_box_mask();
    let window = face.window_mask();
    let hue_region = skin_hue_region(&model, h, w, &face_box, &window, cfg.min_window_overlap)?;
    let (skin, median_saturation) = refine_sv(&hue_region, &hsv, &face_box, cfg)?;
    Ok(SkinExtraction {
        model,
        hue_region,
        skin,
        median_saturation,
    })
}
