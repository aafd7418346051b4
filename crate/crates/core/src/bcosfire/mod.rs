//! Bar-selective combination of shifted filter responses.
//!
//! A filter is a pool of DoG observations `(σ, ρ, φ)` taken around a center
//! point of a prototype bar. Its response is the weighted geometric mean of
//! the blurred DoG maps, each shifted so that the observation lands on the
//! center. Rotating the tuple angles gives rotated filters without
//! re-filtering the image.

mod bank;
mod configure;
mod filter;
pub mod prototype;
mod respond;
mod segment;

pub use self::bank::{make_bank, BankOptions};
pub use self::configure::{circle_samples, configure};
pub use self::filter::{read_bank, write_bank, BlurParams, CosfireFilter, CosfireTuple, FilterBank, FilterKind};
pub use self::respond::{respond, respond_rotation_invariant, ResponseCache};
pub use self::segment::{
    fill_outside_fov, filter_responses, response_map, segment, segment_response, Fusion, SegmentationParams,
};
