use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::Image2D;

/// Frames × channels matrix of band energies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TimeFrequencyMap {
    frames: usize,
    channels: usize,
    /// Frame-major: `energy[frame * channels + channel]`.
    energy: Vec<f64>,
    frame_hop: f64,
    frame_len: f64,
    center_freqs: Vec<f64>,
}

impl TimeFrequencyMap {
    /// Floor inside the log compression `ln(1 + E / ε)`.
    pub const LOG_EPSILON: f64 = 1e-10;

    pub fn new(
        frames: usize,
        channels: usize,
        energy: Vec<f64>,
        frame_hop: f64,
        frame_len: f64,
        center_freqs: Vec<f64>,
    ) -> Result<Self> {
        if energy.len() != frames * channels {
            return Err(Error::Shape(format!(
                "{} energies for {frames}x{channels} map",
                energy.len()
            )));
        }
        if center_freqs.len() != channels {
            return Err(Error::Shape("one center frequency per channel required".into()));
        }
        if center_freqs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("center frequencies must increase".into()));
        }
        if energy.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(Error::InvalidParameter("energies must be finite and >= 0".into()));
        }
        Ok(Self {
            frames,
            channels,
            energy,
            frame_hop,
            frame_len,
            center_freqs,
        })
    }

    /// Map with explicit values and unit metadata, handy for fixtures.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let frames = rows.len();
        let channels = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != channels) {
            return Err(Error::Shape("ragged rows".into()));
        }
        let energy = rows.iter().flatten().copied().collect();
        let freqs = (0..channels).map(|c| 100.0 * (c + 1) as f64).collect();
        Self::new(frames, channels, energy, 0.005, 0.01, freqs)
    }

    #[inline]
    pub fn frames(&self) -> usize {
        self.frames
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn get(&self, frame: usize, channel: usize) -> f64 {
        self.energy[frame * self.channels + channel]
    }

    pub fn energy(&self) -> &[f64] {
        &self.energy
    }

    pub fn frame_hop(&self) -> f64 {
        self.frame_hop
    }

    pub fn frame_len(&self) -> f64 {
        self.frame_len
    }

    pub fn center_freqs(&self) -> &[f64] {
        &self.center_freqs
    }

    pub fn is_empty(&self) -> bool {
        self.frames == 0 || self.channels == 0
    }

    pub fn max(&self) -> f64 {
        self.energy.iter().copied().fold(0.0, f64::max)
    }

    /// Start time of a frame in seconds.
    pub fn frame_time(&self, frame: usize) -> f64 {
        frame as f64 * self.frame_hop
    }

    /// Sum of energy over all frames, per channel.
    pub fn channel_totals(&self) -> Vec<f64> {
        let mut tot = vec![0.0; self.channels];
        for row in self.energy.chunks_exact(self.channels.max(1)) {
            for (t, e) in tot.iter_mut().zip(row) {
                *t += e;
            }
        }
        tot
    }

    /// `ln(1 + E / ε)` applied elementwise; same metadata.
    pub fn compressed(&self) -> TimeFrequencyMap {
        TimeFrequencyMap {
            energy: self.energy.iter().map(|e| (e / Self::LOG_EPSILON).ln_1p()).collect(),
            ..self.clone()
        }
    }

    /// Frames `[start, start + len)` as a new map.
    pub fn slice_frames(&self, start: usize, len: usize) -> Result<TimeFrequencyMap> {
        if start + len > self.frames {
            return Err(Error::Shape(format!(
                "frames {start}..{} outside map of {}",
                start + len,
                self.frames
            )));
        }
        let c = self.channels;
        Self::new(
            len,
            c,
            self.energy[start * c..(start + len) * c].to_vec(),
            self.frame_hop,
            self.frame_len,
            self.center_freqs.clone(),
        )
    }

    /// Heat image: time runs left to right, low frequencies at the bottom,
    /// log-compressed energies.
    pub fn to_image(&self) -> Image2D {
        let comp = self.compressed();
        Image2D::from_fn(self.frames.max(1), self.channels.max(1), |x, y| {
            if self.is_empty() {
                0.0
            } else {
                comp.get(x, self.channels - 1 - y)
            }
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("map serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: TimeFrequencyMap = serde_json::from_str(s)?;
        Self::new(
            raw.frames,
            raw.channels,
            raw.energy,
            raw.frame_hop,
            raw.frame_len,
            raw.center_freqs,
        )
    }
}
