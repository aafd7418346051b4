//! Audio ingestion and time-frequency analysis.

mod gammatone;
mod peaks;
mod tfmap;
mod wav;

pub use self::gammatone::{erb_bandwidth, erb_space, gammatonegram, GammatoneParams};
pub use self::peaks::{detect_peaks, EnergyPeak};
pub use self::tfmap::TimeFrequencyMap;
pub use self::wav::{decode_wav, encode_wav_f32, read_wav, write_wav_f32, AudioClip};
