//! Combination of peaks of energy.
//!
//! A feature remembers where the strongest time-frequency peaks of one
//! prototype sound sit relative to its strongest peak. Scoring a map anchors
//! that constellation at a frame and checks, with Gaussian position
//! tolerance, whether peaks of the expected relative energy are present.

mod classifier;
mod detect;
mod feature;
mod response;

pub use self::classifier::{train_classifier, LinearModel, TrainParams, BACKGROUND};
pub use self::detect::{detect_events, detect_in_map, window_starts, DetectParams, Event, WindowedFeatures};
pub use self::feature::{
    configure_cope, read_cope_bank, write_cope_bank, CopeBank, CopeConfig, CopeFeature, CopePoint, PointWeighting,
    Tolerances,
};
pub use self::response::{cope_response, feature_vector, response_track, FeatureVector};
