//! Trainable feature extractors configured from a single prototype sample.
//!
//! * [`bcosfire`]: bar-selective filters built from collinear pools of
//!   Difference-of-Gaussians responses, for delineating elongated structures
//!   such as blood vessels in fundus photographs.
//! * [`cope`]: constellations of time-frequency energy peaks, for detecting
//!   audio events in noisy streams, plus a linear one-vs-rest classifier.
//! * [`featsel`]: mutual-information ranking and greedy wrapper selection of
//!   filter subsets.
//! * [`eval`], [`synth`], [`config`]: metrics, synthetic datasets and the
//!   experiment configuration used by the command-line harness.

pub mod audiofront;
pub mod bcosfire;
pub mod config;
pub mod cope;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod featsel;
pub mod imgcore;
pub mod rng;
pub mod synth;

pub use error::{Error, ErrorClass, Result};
pub use imgcore::{BorderMode, Image2D};
