mod error;
pub mod faceprep;
pub mod gifopt;
pub mod grading;
pub mod imgcore;
pub mod luma;
pub mod matte;
pub mod pipeline;
pub mod skinmask;
pub mod synthetic;
mod scalar;

pub use error::{Error, Result};

pub type ImageRgbF64 = imgcore::ImageRgb<f64>;
pub type ImageRgbF32 = imgcore::ImageRgb<f32>;
pub type GuideStatsF64 = gifopt::GuideStats<f64>;
pub type GuideStatsF32 = gifopt::GuideStats<f32>;
pub type AlphaMatF64 = matte::AlphaMat<f64>;
pub type AlphaMatF32 = matte::AlphaMat<f32>;
pub type CorrectionF64 = pipeline::Correction<f64>;
pub use scalar::Scalar;
