//! Hybrid guided image filtering: a guided filter whose output is pulled toward
//! a color-graded guide on skin and held at the input on background.

mod mfista;
mod model;
mod prox;

pub use mfista::{
    full_objective, mfista_solve, save_history_csv, write_history_csv, IterationRecord, MfistaOptions,
    SolveResult, SolverState,
};
pub use model::{
    fit_local_models, grad_f, gradient, smooth_value, GradientWorkspace, GuideStats, LocalLinearModel, Mat3,
};
pub use prox::{prox_regions, ConstraintSpec, DEFAULT_ETA_B_SCALE, DEFAULT_ETA_S_SCALE};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::imgcore::{ImageRgb, RegionMask};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GifConfig {
    pub window: usize,
    pub epsilon: f64,
    pub lipschitz: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub eta_s_scale: f64,
    pub eta_b_scale: f64,
}

impl Default for GifConfig {
    fn default() -> Self {
        Self {
            window: 19,
            epsilon: 1e-7,
            lipschitz: 500.0,
            max_iters: 500,
            tol: 1e-8,
            eta_s_scale: DEFAULT_ETA_S_SCALE,
            eta_b_scale: DEFAULT_ETA_B_SCALE,
        }
    }
}

impl GifConfig {
    pub fn options(&self) -> MfistaOptions {
        MfistaOptions {
            lipschitz: self.lipschitz,
            max_iters: self.max_iters,
            tol: self.tol,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GifOutput<T> {
    /// Final iterate clipped to the unit cube.
    pub image: ImageRgb<T>,
    pub solve: SolveResult<T>,
    pub eta_s: T,
    pub eta_b: T,
}

/// Filters `input` toward `guide` on `skin` while holding `background` near `input`.
pub fn hybrid_filter<T: Scalar>(
    input: &ImageRgb<T>,
    guide: &ImageRgb<T>,
    skin: &RegionMask,
    background: &RegionMask,
    cfg: &GifConfig,
) -> Result<GifOutput<T>> {
    let stats = GuideStats::new(input, cfg.window, T::lit(cfg.epsilon))?;
    let constraints =
        ConstraintSpec::with_scales(skin.clone(), background.clone(), guide, input, cfg.eta_s_scale, cfg.eta_b_scale)?;
    let solve = mfista_solve(&stats, &constraints, constraints.initial_point(), &cfg.options())?;
    let (h, w) = input.dims();
    let image = ImageRgb::from_clamped(h, w, solve.x.clone())?;
    Ok(GifOutput {
        image,
        solve,
        eta_s: constraints.eta_s(),
        eta_b: constraints.eta_b(),
    })
}
