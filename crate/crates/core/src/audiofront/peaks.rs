use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::tfmap::TimeFrequencyMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyPeak {
    pub frame: usize,
    pub channel: usize,
    pub energy: f64,
}

fn is_strict_local_max(tf: &TimeFrequencyMap, t: usize, c: usize) -> bool {
    let v = tf.get(t, c);
    for dt in -1isize..=1 {
        for dc in -1isize..=1 {
            if dt == 0 && dc == 0 {
                continue;
            }
            let (nt, nc) = (t as isize + dt, c as isize + dc);
            if nt < 0 || nc < 0 || nt >= tf.frames() as isize || nc >= tf.channels() as isize {
                continue;
            }
            if tf.get(nt as usize, nc as usize) >= v {
                return false;
            }
        }
    }
    true
}

/// Strict 8-neighbourhood maxima at or above `floor × global max`, sorted by
/// descending energy (ties: earlier frame, then lower channel).
///
/// Peaks are accepted greedily in that order; a candidate is suppressed when
/// a retained peak lies strictly closer than `min_dist` in both frames and
/// channels.
pub fn detect_peaks(tf: &TimeFrequencyMap, floor: f64, min_dist: (usize, usize)) -> Result<Vec<EnergyPeak>> {
    if !(floor > 0.0 && floor < 1.0) {
        return Err(Error::InvalidParameter(format!("peak floor {floor} not in (0, 1)")));
    }
    if min_dist.0 < 1 || min_dist.1 < 1 {
        return Err(Error::InvalidParameter(
            "minimum peak distance must be >= (1, 1)".into(),
        ));
    }
    let global = tf.max();
    if !(global > 0.0) {
        return Ok(Vec::new());
    }
    let threshold = floor * global;
    let mut candidates = Vec::new();
    for t in 0..tf.frames() {
        for c in 0..tf.channels() {
            let e = tf.get(t, c);
            if e > 0.0 && e >= threshold && is_strict_local_max(tf, t, c) {
                candidates.push(EnergyPeak {
                    frame: t,
                    channel: c,
                    energy: e,
                });
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.energy
            .total_cmp(&a.energy)
            .then(a.frame.cmp(&b.frame))
            .then(a.channel.cmp(&b.channel))
    });
    let mut kept: Vec<EnergyPeak> = Vec::new();
    for p in candidates {
        let close = kept
            .iter()
            .any(|q| p.frame.abs_diff(q.frame) < min_dist.0 && p.channel.abs_diff(q.channel) < min_dist.1);
        if !close {
            kept.push(p);
        }
    }
    Ok(kept)
}
