//! Region-restricted ℓ2-ball constraints and their proximal operator.

use crate::error::{Error, Result};
use crate::imgcore::{ImageRgb, RegionMask};
use crate::scalar::Scalar;

pub const DEFAULT_ETA_S_SCALE: f64 = 5e-4;
pub const DEFAULT_ETA_B_SCALE: f64 = 5e-10;

/// `‖x − g‖_{Ω_S} ≤ η_S` and `‖x − y‖_{Ω_B} ≤ η_B`; pixels outside both are free.
#[derive(Debug, Clone)]
pub struct ConstraintSpec<T> {
    skin: RegionMask,
    background: RegionMask,
    guide: Vec<[T; 3]>,
    input: Vec<[T; 3]>,
    eta_s: T,
    eta_b: T,
}

impl<T: Scalar> ConstraintSpec<T> {
    pub fn new(
        skin: RegionMask,
        background: RegionMask,
        guide: &ImageRgb<T>,
        input: &ImageRgb<T>,
        eta_s: T,
        eta_b: T,
    ) -> Result<Self> {
        let (h, w) = input.dims();
        guide.same_dims(input)?;
        skin.check_dims(h, w)?;
        background.check_dims(h, w)?;
        if !skin.is_disjoint(&background) {
            return Err(Error::invalid("skin and background regions overlap"));
        }
        for (name, eta) in [("eta_s", eta_s), ("eta_b", eta_b)] {
            if !(eta >= T::zero()) || !eta.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite and non-negative, got {eta}")));
            }
        }
        Ok(Self {
            skin,
            background,
            guide: guide.pixels().to_vec(),
            input: input.pixels().to_vec(),
            eta_s,
            eta_b,
        })
    }

    /// Radii proportional to region size: `η_S = s_S |Ω_S|`, `η_B = s_B |Ω_B|`.
    pub fn with_scales(
        skin: RegionMask,
        background: RegionMask,
        guide: &ImageRgb<T>,
        input: &ImageRgb<T>,
        eta_s_scale: f64,
        eta_b_scale: f64,
    ) -> Result<Self> {
        let eta_s = T::lit(eta_s_scale * skin.count() as f64);
        let eta_b = T::lit(eta_b_scale * background.count() as f64);
        Self::new(skin, background, guide, input, eta_s, eta_b)
    }

    pub fn skin(&self) -> &RegionMask {
        &self.skin
    }

    pub fn background(&self) -> &RegionMask {
        &self.background
    }

    pub fn eta_s(&self) -> T {
        self.eta_s
    }

    pub fn eta_b(&self) -> T {
        self.eta_b
    }

    pub fn guide(&self) -> &[[T; 3]] {
        &self.guide
    }

    pub fn input(&self) -> &[[T; 3]] {
        &self.input
    }

    /// Starting point: `g` on Ω_S, `y` elsewhere.
    pub fn initial_point(&self) -> Vec<[T; 3]> {
        self.input
            .iter()
            .zip(&self.guide)
            .zip(self.skin.bits())
            .map(|((&y, &g), &s)| if s { g } else { y })
            .collect()
    }

    fn region_distance(mask: &RegionMask, x: &[[T; 3]], anchor: &[[T; 3]]) -> T {
        let mut acc = 0.0f64;
        for i in mask.indices() {
            for k in 0..3 {
                let d = (x[i][k] - anchor[i][k]).to_f64_lossy();
                acc += d * d;
            }
        }
        T::lit(acc.sqrt())
    }

    /// `(‖x − g‖_{Ω_S}, ‖x − y‖_{Ω_B})`.
    pub fn distances(&self, x: &[[T; 3]]) -> (T, T) {
        assert_eq!(x.len(), self.input.len(), "iterate length differs from constraint");
        (
            Self::region_distance(&self.skin, x, &self.guide),
            Self::region_distance(&self.background, x, &self.input),
        )
    }

    fn within(d: T, eta: T) -> bool {
        let slack = T::lit(1e3) * T::epsilon();
        d <= eta + slack * (eta + T::one())
    }

    /// Membership test with a relative slack of a few hundred ulps.
    pub fn is_feasible(&self, x: &[[T; 3]]) -> bool {
        let (ds, db) = self.distances(x);
        Self::within(ds, self.eta_s) && Self::within(db, self.eta_b)
    }

    /// Indicator value: 0 when feasible, +∞ otherwise.
    pub fn indicator(&self, x: &[[T; 3]]) -> T {
        if self.is_feasible(x) {
            T::zero()
        } else {
            T::infinity()
        }
    }

    /// Euclidean projection onto the feasible set. Each region is scaled back to
    /// the sphere around its anchor; other pixels pass through.
    pub fn project(&self, z_hat: &[[T; 3]]) -> Vec<[T; 3]> {
        let mut z = z_hat.to_vec();
        let (ds, db) = self.distances(z_hat);
        Self::project_region(&mut z, &self.skin, &self.guide, ds, self.eta_s);
        Self::project_region(&mut z, &self.background, &self.input, db, self.eta_b);
        z
    }

    fn project_region(z: &mut [[T; 3]], mask: &RegionMask, anchor: &[[T; 3]], d: T, eta: T) {
        if d <= eta {
            return;
        }
        let scale = eta / d;
        for i in mask.indices() {
            for k in 0..3 {
                z[i][k] = anchor[i][k] + scale * (z[i][k] - anchor[i][k]);
            }
        }
    }
}

/// Proximal step of the constraint indicator.
pub fn prox_regions<T: Scalar>(z_hat: &[[T; 3]], constraints: &ConstraintSpec<T>) -> Vec<[T; 3]> {
    constraints.project(z_hat)
}
