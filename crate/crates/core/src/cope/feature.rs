use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::audiofront::{detect_peaks, TimeFrequencyMap};
use crate::error::{Error, Result};

/// One constellation point, relative to the reference peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopePoint {
    /// Frame offset from the reference peak.
    pub dt: i64,
    /// Absolute channel index.
    pub channel: usize,
    /// Energy divided by the reference peak energy.
    pub energy: f64,
}

/// Gaussian position tolerances, in frames and channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub st: f64,
    pub sc: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { st: 3.0, sc: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointWeighting {
    #[default]
    Uniform,
    /// Weight each point by its relative energy.
    Energy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CopeFeature {
    points: Vec<CopePoint>,
    support_len: usize,
    tolerances: Tolerances,
    #[serde(default)]
    weighting: PointWeighting,
    label: String,
}

/// Configuration knobs for [`configure_cope`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct CopeConfig {
    /// Peak floor as a fraction of the log-compressed global maximum.
    pub floor: f64,
    /// Minimum (frames, channels) separation between retained peaks.
    pub min_dist: (usize, usize),
    pub max_points: usize,
    pub tolerances: Tolerances,
    pub weighting: PointWeighting,
}

impl Default for CopeConfig {
    fn default() -> Self {
        Self {
            floor: 0.5,
            min_dist: (4, 3),
            max_points: 20,
            tolerances: Tolerances::default(),
            weighting: PointWeighting::Uniform,
        }
    }
}

impl CopeFeature {
    pub fn new(
        points: Vec<CopePoint>,
        tolerances: Tolerances,
        weighting: PointWeighting,
        label: impl Into<String>,
    ) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::InvalidParameter("COPE feature needs at least one point".into()));
        };
        if first.dt != 0 || first.energy != 1.0 {
            return Err(Error::InvalidParameter(
                "first point must be the reference (dt 0, energy 1)".into(),
            ));
        }
        if !(tolerances.st > 0.0 && tolerances.sc > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be > 0".into()));
        }
        if points.iter().any(|p| !(p.energy > 0.0 && p.energy.is_finite())) {
            return Err(Error::InvalidParameter("point energies must be > 0".into()));
        }
        let support_len = points.iter().map(|p| p.dt.unsigned_abs() as usize).max().unwrap_or(0);
        Ok(Self {
            points,
            support_len,
            tolerances,
            weighting,
            label: label.into(),
        })
    }

    pub fn points(&self) -> &[CopePoint] {
        &self.points
    }

    pub fn reference(&self) -> &CopePoint {
        &self.points[0]
    }

    pub fn support_len(&self) -> usize {
        self.support_len
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tolerances
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Earliest and latest point offsets in frames.
    pub fn span(&self) -> (i64, i64) {
        let lo = self.points.iter().map(|p| p.dt).min().unwrap_or(0);
        let hi = self.points.iter().map(|p| p.dt).max().unwrap_or(0);
        (lo, hi)
    }

    pub fn weights(&self) -> Vec<f64> {
        match self.weighting {
            PointWeighting::Uniform => vec![1.0; self.points.len()],
            PointWeighting::Energy => self.points.iter().map(|p| p.energy).collect(),
        }
    }
}

/// Configures a feature from the map of a single prototype sound.
///
/// Peaks are picked on the log-compressed map; stored energies are raw.
pub fn configure_cope(tf: &TimeFrequencyMap, cfg: &CopeConfig, label: &str) -> Result<CopeFeature> {
    if tf.is_empty() {
        return Err(Error::EmptyMap);
    }
    if cfg.max_points == 0 {
        return Err(Error::InvalidParameter("max points must be >= 1".into()));
    }
    let peaks = detect_peaks(&tf.compressed(), cfg.floor, cfg.min_dist)?;
    let Some(reference) = peaks.first() else {
        return Err(Error::NoPeaksFound);
    };
    let ref_energy = tf.get(reference.frame, reference.channel);
    let points = peaks
        .iter()
        .take(cfg.max_points)
        .enumerate()
        .map(|(i, p)| CopePoint {
            dt: p.frame as i64 - reference.frame as i64,
            channel: p.channel,
            energy: if i == 0 {
                1.0
            } else {
                tf.get(p.frame, p.channel) / ref_energy
            },
        })
        .collect();
    CopeFeature::new(points, cfg.tolerances, cfg.weighting, label)
}

/// Versioned JSON document holding a bank of features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CopeBank {
    pub version: u32,
    pub features: Vec<CopeFeature>,
}

impl CopeBank {
    pub const VERSION: u32 = 1;
}

pub fn write_cope_bank(features: &[CopeFeature], path: impl AsRef<Path>) -> Result<()> {
    let doc = CopeBank {
        version: CopeBank::VERSION,
        features: features.to_vec(),
    };
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

pub fn read_cope_bank(path: impl AsRef<Path>) -> Result<Vec<CopeFeature>> {
    let doc: CopeBank = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    if doc.version != CopeBank::VERSION {
        return Err(Error::Serde(format!("unsupported COPE bank version {}", doc.version)));
    }
    for f in &doc.features {
        CopeFeature::new(f.points.clone(), f.tolerances, f.weighting, f.label.clone())?;
    }
    Ok(doc.features)
}
