//! Procedural head-and-shoulders portraits with known ground truth, used for
//! the bundled corpus and end-to-end tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::faceprep::RectCandidate;
use crate::imgcore::{ImageRgb, RegionMask};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortraitSpec {
    pub height: usize,
    pub width: usize,
    /// Face ellipse center (row, col) and semi-axes.
    pub center: (f64, f64),
    pub radius_x: f64,
    pub radius_y: f64,
    pub skin: [f64; 3],
    /// Per-channel gain applied to skin pixels only.
    pub tint: [f64; 3],
    pub hair: [f64; 3],
    pub torso: [f64; 3],
    pub wall: [f64; 3],
    /// Standard deviation of additive Gaussian noise.
    pub noise: f64,
    pub seed: u64,
}

impl Default for PortraitSpec {
    fn default() -> Self {
        Self {
            height: 320,
            width: 320,
            center: (160.0, 160.0),
            radius_x: 40.0,
            radius_y: 48.0,
            skin: [0.85, 0.62, 0.5],
            tint: [1.0, 1.0, 1.0],
            hair: [0.12, 0.09, 0.08],
            torso: [0.25, 0.45, 0.3],
            wall: [0.8, 0.74, 0.68],
            noise: 0.01,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticPortrait {
    pub image: ImageRgb<f64>,
    pub candidates: Vec<RectCandidate>,
    /// Face ellipse.
    pub skin: RegionMask,
    /// Face, hair and torso.
    pub foreground: RegionMask,
}

impl PortraitSpec {
    pub fn tinted(tint: [f64; 3], seed: u64) -> Self {
        Self {
            tint,
            seed,
            ..Default::default()
        }
    }

    fn ellipse(&self, r: f64, c: f64, grow: f64) -> f64 {
        let (cy, cx) = self.center;
        ((r - cy) / (self.radius_y + grow)).powi(2) + ((c - cx) / (self.radius_x + grow)).powi(2)
    }

    fn is_skin(&self, r: f64, c: f64) -> bool {
        self.ellipse(r, c, 0.0) <= 1.0
    }

    /// Cap: a thicker ellipse shell over the upper half of the head.
    fn is_hair(&self, r: f64, c: f64) -> bool {
        let top = self.center.0 - 0.3 * self.radius_y;
        r < top && self.ellipse(r, c, 0.25 * self.radius_x) <= 1.0 && !self.is_skin(r, c)
    }

    /// Shoulders: a rounded trapezoid from just below the chin to the bottom edge.
    fn is_torso(&self, r: f64, c: f64) -> bool {
        let start = self.center.0 + self.radius_y + 0.25 * self.radius_y;
        if r < start {
            return false;
        }
        let depth = r - start;
        let half = 0.8 * self.radius_x + (1.6 * depth).min(1.6 * self.radius_x);
        (c - self.center.1).abs() <= half
    }

    pub fn render(&self) -> SyntheticPortrait {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let normal = Normal::new(0.0, self.noise.max(0.0)).expect("finite noise level");
        let (h, w) = (self.height, self.width);
        let mut skin = RegionMask::empty(h, w);
        let mut foreground = RegionMask::empty(h, w);
        let mut data = Vec::with_capacity(h * w);
        for r in 0..h {
            for c in 0..w {
                let (y, x) = (r as f64, c as f64);
                let base = if self.is_skin(y, x) {
                    skin.set(r, c, true);
                    foreground.set(r, c, true);
                    // soft vertical shading across the face
                    let shade = 1.0 - 0.08 * (y - self.center.0) / self.radius_y;
                    [0, 1, 2].map(|k| self.skin[k] * self.tint[k] * shade)
                } else if self.is_hair(y, x) {
                    foreground.set(r, c, true);
                    self.hair
                } else if self.is_torso(y, x) {
                    foreground.set(r, c, true);
                    self.torso
                } else {
                    self.wall
                };
                data.push(base.map(|v| v + normal.sample(&mut rng)));
            }
        }
        let image = ImageRgb::from_clamped(h, w, data).expect("dimensions match");
        let candidates = (0..3)
            .map(|_| RectCandidate {
                x: self.center.1 + rng.random_range(-1.5..1.5),
                y: self.center.0 + rng.random_range(-1.5..1.5),
                w: 2.0 * self.radius_x * rng.random_range(0.97..1.03),
                h: 2.0 * self.radius_y * rng.random_range(0.97..1.03),
            })
            .collect();
        SyntheticPortrait {
            image,
            candidates,
            skin,
            foreground,
        }
    }
}

/// Named members of the bundled corpus.
pub fn corpus() -> Vec<(&'static str, PortraitSpec)> {
    vec![
        ("neutral", PortraitSpec::tinted([1.0, 1.0, 1.0], 1)),
        ("blue_tint", PortraitSpec::tinted([0.86, 1.0, 1.3], 2)),
        ("green_tint", PortraitSpec::tinted([0.88, 1.12, 0.92], 3)),
        ("warm_tint", PortraitSpec::tinted([1.05, 0.85, 0.7], 4)),
    ]
}
