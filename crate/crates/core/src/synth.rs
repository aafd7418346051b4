//! Seeded synthetic audio events: class-distinct chirp and harmonic
//! templates mixed into coloured noise at a prescribed SNR.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audiofront::{write_wav_f32, AudioClip};
use crate::cope::Event;
use crate::dataset::{write_groundtruth, AudioRecord};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct SynthConfig {
    pub n_classes: usize,
    pub n_per_class: usize,
    pub snr_levels: Vec<f64>,
    pub sample_rate: u32,
    /// Seconds.
    pub clip_len: f64,
    /// Relative spread of template frequencies and durations.
    pub jitter: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_classes: 3,
            n_per_class: 20,
            snr_levels: vec![5.0, 0.0, -5.0],
            sample_rate: 16_000,
            clip_len: 3.0,
            jitter: 0.03,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(Error::InvalidParameter(
                "synthetic audio needs at least 2 classes".into(),
            ));
        }
        if self.sample_rate < 8000 {
            return Err(Error::InvalidParameter("sample rate must be >= 8000 Hz".into()));
        }
        if self.snr_levels.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidParameter("SNR levels must be finite".into()));
        }
        if !(0.0..0.2).contains(&self.jitter) {
            return Err(Error::InvalidParameter("jitter must be in [0, 0.2)".into()));
        }
        let longest = (0..self.n_classes)
            .map(|k| Template::of_class(k).duration)
            .fold(0.0, f64::max);
        if self.clip_len < longest * (1.0 + self.jitter) + 0.8 {
            return Err(Error::InvalidParameter("clip too short for the templates".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    Rising,
    Tonal,
    Falling,
}

/// Nominal event of one class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Template {
    shape: Shape,
    f0: f64,
    f1: f64,
    pub duration: f64,
}

impl Template {
    /// Classes cycle through rising chirp, harmonic tone and falling chirp,
    /// moving up in frequency every three classes.
    pub fn of_class(k: usize) -> Self {
        let s = 1.45f64.powi((k / 3) as i32);
        match k % 3 {
            0 => Template {
                shape: Shape::Rising,
                f0: 450.0 * s,
                f1: 1900.0 * s,
                duration: 0.5,
            },
            1 => Template {
                shape: Shape::Tonal,
                f0: 620.0 * s,
                f1: 620.0 * s,
                duration: 0.45,
            },
            _ => Template {
                shape: Shape::Falling,
                f0: 3000.0 * s,
                f1: 1100.0 * s,
                duration: 0.4,
            },
        }
    }

    fn jittered(&self, r: &mut ChaCha8Rng, jitter: f64) -> Self {
        let mut j = || 1.0 + jitter * (2.0 * r.random::<f64>() - 1.0);
        Template {
            shape: self.shape,
            f0: self.f0 * j(),
            f1: self.f1 * j(),
            duration: self.duration * j(),
        }
    }

    /// Waveform with unit peak envelope and 20 ms raised-cosine ramps.
    pub fn render(&self, sample_rate: u32, phase: f64) -> Vec<f64> {
        let sr = f64::from(sample_rate);
        let n = (self.duration * sr).round() as usize;
        let d = n as f64 / sr;
        let ramp = 0.02f64.min(d / 4.0);
        (0..n)
            .map(|i| {
                let t = i as f64 / sr;
                let env = if t < ramp {
                    0.5 - 0.5 * (PI * t / ramp).cos()
                } else if t > d - ramp {
                    0.5 - 0.5 * (PI * (d - t) / ramp).cos()
                } else {
                    1.0
                };
                let v = match self.shape {
                    Shape::Tonal => {
                        let w = 2.0 * PI * self.f0 * t + phase;
                        w.sin() + 0.6 * (2.0 * w).sin() + 0.4 * (3.0 * w).sin()
                    }
                    Shape::Rising | Shape::Falling => {
                        let w = 2.0 * PI * (self.f0 * t + (self.f1 - self.f0) * t * t / (2.0 * d)) + phase;
                        w.sin() + 0.3 * (2.0 * w).sin()
                    }
                };
                env * v
            })
            .collect()
    }
}

pub fn class_label(k: usize) -> String {
    let base = ["rising", "tonal", "falling"][k % 3];
    if k < 3 {
        base.to_string()
    } else {
        format!("{base}{}", k / 3)
    }
}

/// Unit-power noise: white, or first-order low-passed ("rumble").
fn noise(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let coloured = r.random::<bool>();
    let mut w: Vec<f64> = (0..n).map(|_| StandardNormal.sample(r)).collect();
    if coloured {
        let mut y = 0.0;
        for v in &mut w {
            y = 0.97 * y + *v;
            *v = 0.15 * y + 0.5 * *v;
        }
    }
    let p = power(&w);
    if p > 0.0 {
        let g = p.sqrt().recip();
        w.iter_mut().for_each(|v| *v *= g);
    }
    w
}

fn power(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
    }
}

/// One generated clip with its separated components (after normalization,
/// `clip = signal + noise`).
#[derive(Debug, Clone)]
pub struct SynthClip {
    pub clip: AudioClip,
    pub signal: Vec<f64>,
    pub noise: Vec<f64>,
    pub event: Event,
    pub snr_db: f64,
    /// Event interval in samples.
    pub span: (usize, usize),
}

impl SynthClip {
    /// `10·log10(P_signal / P_noise)` measured over the event interval.
    pub fn measured_snr(&self) -> f64 {
        let (a, b) = self.span;
        10.0 * (power(&self.signal[a..b]) / power(&self.noise[a..b])).log10()
    }
}

/// Generates one clip holding a single event of class `class` at `snr_db`.
/// All randomness comes from `rng::stream(seed, stream_id)`.
pub fn synth_clip(cfg: &SynthConfig, class: usize, snr_db: f64, seed: u64, stream_id: u64) -> Result<SynthClip> {
    let mut r = rng::stream(seed, stream_id);
    let sr = cfg.sample_rate;
    let n = (cfg.clip_len * f64::from(sr)).round() as usize;
    let t = Template::of_class(class).jittered(&mut r, cfg.jitter);
    let phase = 2.0 * PI * r.random::<f64>();
    let sig = t.render(sr, phase);
    let margin = (0.4 * f64::from(sr)) as usize;
    let latest = n - margin - sig.len();
    let onset = r.random_range(margin..=latest.max(margin));
    let mut noise = noise(&mut r, n);
    let span = (onset, onset + sig.len());
    let g = (power(&noise[span.0..span.1]) / power(&sig) * 10f64.powf(snr_db / 10.0)).sqrt();
    let mut signal = vec![0.0; n];
    for (i, v) in sig.iter().enumerate() {
        signal[onset + i] = g * v;
    }
    let peak = signal
        .iter()
        .zip(&noise)
        .map(|(s, v)| (s + v).abs())
        .fold(0.0, f64::max);
    let norm = 0.9 / peak;
    signal.iter_mut().for_each(|v| *v *= norm);
    noise.iter_mut().for_each(|v| *v *= norm);
    let samples = signal.iter().zip(&noise).map(|(s, v)| s + v).collect();
    let srf = f64::from(sr);
    Ok(SynthClip {
        clip: AudioClip::new(samples, sr)?,
        signal,
        noise,
        event: Event::new(span.0 as f64 / srf, span.1 as f64 / srf, class_label(class)),
        snr_db,
        span,
    })
}

/// Every clip of the dataset, ordered by SNR level, then class, then index.
pub fn synth_clips(cfg: &SynthConfig, seed: u64) -> Result<Vec<SynthClip>> {
    cfg.validate()?;
    let jobs: Vec<(usize, f64)> = cfg
        .snr_levels
        .iter()
        .flat_map(|&snr| (0..cfg.n_classes).flat_map(move |k| std::iter::repeat_n((k, snr), cfg.n_per_class)))
        .collect();
    jobs.par_iter()
        .enumerate()
        .map(|(i, &(k, snr))| synth_clip(cfg, k, snr, seed, i as u64))
        .collect()
}

/// Clean nominal template of every class, padded with 0.25 s of silence.
pub fn prototypes(cfg: &SynthConfig) -> Vec<(String, AudioClip)> {
    let pad = vec![0.0; (0.25 * f64::from(cfg.sample_rate)) as usize];
    (0..cfg.n_classes)
        .map(|k| {
            let mut s = pad.clone();
            s.extend(
                Template::of_class(k)
                    .render(cfg.sample_rate, 0.0)
                    .iter()
                    .map(|v| 0.5 * v),
            );
            s.extend_from_slice(&pad);
            (
                class_label(k),
                AudioClip {
                    samples: s,
                    sample_rate: cfg.sample_rate,
                },
            )
        })
        .collect()
}

/// Writes `clips/clip_NNNN.wav`, `prototypes/<label>.wav` and
/// `groundtruth.csv` under `dir` and returns the ground-truth records.
pub fn synth_audio_dataset(cfg: &SynthConfig, seed: u64, dir: &Path) -> Result<Vec<AudioRecord>> {
    let clips = synth_clips(cfg, seed)?;
    std::fs::create_dir_all(dir.join("clips"))?;
    std::fs::create_dir_all(dir.join("prototypes"))?;
    let records: Vec<AudioRecord> = clips
        .iter()
        .enumerate()
        .map(|(i, c)| AudioRecord {
            file: format!("clips/clip_{i:04}.wav"),
            start: c.event.start,
            end: c.event.end,
            label: c.event.label.clone(),
            snr_db: c.snr_db,
        })
        .collect();
    clips
        .par_iter()
        .zip(&records)
        .try_for_each(|(c, rec)| write_wav_f32(&c.clip, dir.join(&rec.file)))?;
    for (label, clip) in prototypes(cfg) {
        write_wav_f32(&clip, dir.join("prototypes").join(format!("{label}.wav")))?;
    }
    write_groundtruth(&records, &dir.join("groundtruth.csv"))?;
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_matches_request() {
        let cfg = SynthConfig::default();
        for (i, snr) in [-5.0, 0.0, 5.0, 12.0].into_iter().enumerate() {
            for k in 0..3 {
                let c = synth_clip(&cfg, k, snr, 7, (i * 3 + k) as u64).unwrap();
                assert!((c.measured_snr() - snr).abs() < 0.1, "{} vs {snr}", c.measured_snr());
                let peak = c.clip.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                assert!((peak - 0.9).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn event_interval_matches_signal_support() {
        let c = synth_clip(&SynthConfig::default(), 1, 0.0, 3, 0).unwrap();
        let (a, b) = c.span;
        assert!(c.signal[..a].iter().all(|&v| v == 0.0));
        assert!(c.signal[b..].iter().all(|&v| v == 0.0));
        assert!((c.event.start - a as f64 / 16000.0).abs() < 1e-12);
        assert_eq!(c.event.label, "tonal");
    }

    #[test]
    fn cardinality_and_byte_identical_output() {
        let cfg = SynthConfig {
            n_per_class: 10,
            ..SynthConfig::default()
        };
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let recs = synth_audio_dataset(&cfg, 42, a.path()).unwrap();
        assert_eq!(recs.len(), 90);
        synth_audio_dataset(&cfg, 42, b.path()).unwrap();
        for rel in [
            "groundtruth.csv",
            "clips/clip_0000.wav",
            "clips/clip_0089.wav",
            "prototypes/falling.wav",
        ] {
            assert_eq!(
                std::fs::read(a.path().join(rel)).unwrap(),
                std::fs::read(b.path().join(rel)).unwrap(),
                "{rel}"
            );
        }
        let c = tempfile::tempdir().unwrap();
        synth_audio_dataset(&cfg, 43, c.path()).unwrap();
        assert_ne!(
            std::fs::read(a.path().join("clips/clip_0000.wav")).unwrap(),
            std::fs::read(c.path().join("clips/clip_0000.wav")).unwrap()
        );
    }

    #[test]
    fn config_checks() {
        assert!(SynthConfig {
            n_classes: 1,
            ..SynthConfig::default()
        }
        .validate()
        .is_err());
        assert!(SynthConfig {
            clip_len: 0.5,
            ..SynthConfig::default()
        }
        .validate()
        .is_err());
        assert_eq!(class_label(4), "tonal1");
    }
}
