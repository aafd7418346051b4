//! Fourth-order gammatone filterbank on an ERB-rate frequency grid.
//!
//! Each channel is a cascade of four identical complex one-pole resonators,
//! `H(z) = g / (1 − r e^{iω_c} z^{-1})^4`, whose impulse response is the
//! sampled gammatone `n³ rⁿ e^{iω_c n}`. `g = (1 − r)^4` gives unit gain at
//! the center frequency; the real output is `2·Re(z)`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::tfmap::TimeFrequencyMap;
use super::wav::AudioClip;

/// Glasberg & Moore equivalent rectangular bandwidth in Hz.
pub fn erb_bandwidth(f: f64) -> f64 {
    24.7 * (4.37 * f / 1000.0 + 1.0)
}

fn erb_rate(f: f64) -> f64 {
    21.4 * (4.37 * f / 1000.0 + 1.0).log10()
}

fn erb_rate_inv(e: f64) -> f64 {
    (10f64.powf(e / 21.4) - 1.0) * 1000.0 / 4.37
}

/// `n` center frequencies uniformly spaced in ERB rate over `[f_low, f_high]`, ascending.
pub fn erb_space(f_low: f64, f_high: f64, n: usize) -> Vec<f64> {
    let (lo, hi) = (erb_rate(f_low), erb_rate(f_high));
    (0..n)
        .map(|i| {
            if i == 0 {
                f_low
            } else if i == n - 1 {
                f_high
            } else {
                erb_rate_inv(lo + (hi - lo) * i as f64 / (n - 1) as f64)
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct GammatoneParams {
    pub n_channels: usize,
    pub f_low: f64,
    pub f_high: f64,
    /// Seconds.
    pub frame_len: f64,
    /// Seconds.
    pub frame_hop: f64,
}

impl Default for GammatoneParams {
    fn default() -> Self {
        Self {
            n_channels: 64,
            f_low: 80.0,
            f_high: 8000.0,
            frame_len: 0.010,
            frame_hop: 0.005,
        }
    }
}

impl GammatoneParams {
    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let nyquist = sample_rate as f64 / 2.0;
        if !(self.f_low > 0.0 && self.f_low < self.f_high && self.f_high <= nyquist) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < fLow < fHigh <= {nyquist} Hz, got {} and {}",
                self.f_low, self.f_high
            )));
        }
        if self.n_channels < 2 {
            return Err(Error::InvalidParameter("need at least 2 channels".into()));
        }
        if !(self.frame_len > 0.0 && self.frame_hop > 0.0) {
            return Err(Error::InvalidParameter("frame length and hop must be > 0".into()));
        }
        Ok(())
    }

    /// Frame length and hop in samples.
    pub fn frame_samples(&self, sample_rate: u32) -> (usize, usize) {
        let sr = sample_rate as f64;
        (
            ((self.frame_len * sr).round() as usize).max(1),
            ((self.frame_hop * sr).round() as usize).max(1),
        )
    }

    pub fn center_freqs(&self) -> Vec<f64> {
        erb_space(self.f_low, self.f_high, self.n_channels)
    }
}

/// Pole radius of the channel centered at `fc`.
pub(crate) fn pole_radius(fc: f64, sample_rate: f64) -> f64 {
    (-2.0 * PI * 1.019 * erb_bandwidth(fc) / sample_rate).exp()
}

fn channel_output(samples: &[f64], fc: f64, sample_rate: f64) -> Vec<f64> {
    let r = pole_radius(fc, sample_rate);
    let w = 2.0 * PI * fc / sample_rate;
    let (pr, pi) = (r * w.cos(), r * w.sin());
    let gain = 2.0 * (1.0 - r).powi(4);
    let mut re = [0.0f64; 4];
    let mut im = [0.0f64; 4];
    samples
        .iter()
        .map(|&x| {
            let (mut in_re, mut in_im) = (x, 0.0);
            for k in 0..4 {
                let nr = pr * re[k] - pi * im[k] + in_re;
                let ni = pr * im[k] + pi * re[k] + in_im;
                re[k] = nr;
                im[k] = ni;
                in_re = nr;
                in_im = ni;
            }
            gain * in_re
        })
        .collect()
}

/// Gammatone energy map: mean squared channel output per frame.
pub fn gammatonegram(clip: &AudioClip, params: &GammatoneParams) -> Result<TimeFrequencyMap> {
    params.validate(clip.sample_rate)?;
    let (len, hop) = params.frame_samples(clip.sample_rate);
    let n = clip.samples.len();
    if n < len {
        return Err(Error::EmptyMap);
    }
    let frames = (n - len) / hop + 1;
    let freqs = params.center_freqs();
    let sr = clip.sample_rate as f64;
    let per_channel: Vec<Vec<f64>> = freqs
        .par_iter()
        .map(|&fc| {
            let y = channel_output(&clip.samples, fc, sr);
            (0..frames)
                .map(|t| {
                    let seg = &y[t * hop..t * hop + len];
                    seg.iter().map(|v| v * v).sum::<f64>() / len as f64
                })
                .collect()
        })
        .collect();
    let c = freqs.len();
    let mut energy = vec![0.0; frames * c];
    for (ch, col) in per_channel.iter().enumerate() {
        for (t, &e) in col.iter().enumerate() {
            energy[t * c + ch] = e;
        }
    }
    TimeFrequencyMap::new(frames, c, energy, hop as f64 / sr, len as f64 / sr, freqs)
}
