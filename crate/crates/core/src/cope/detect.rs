use serde::{Deserialize, Serialize};

use crate::audiofront::{gammatonegram, AudioClip, GammatoneParams, TimeFrequencyMap};
use crate::error::{Error, Result};

use super::classifier::{LinearModel, BACKGROUND};
use super::feature::CopeFeature;
use super::response::{response_track, FeatureVector};

/// A labelled time interval in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub start: f64,
    pub end: f64,
    pub label: String,
    pub confidence: f64,
}

impl Event {
    pub fn new(start: f64, end: f64, label: impl Into<String>) -> Self {
        Self {
            start,
            end,
            label: label.into(),
            confidence: 1.0,
        }
    }

    pub fn duration(&self) -> f64 {
        (self.end - self.start).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct DetectParams {
    /// Seconds.
    pub window_len: f64,
    /// Seconds.
    pub hop: f64,
    /// Windows whose every non-background score is below this are background.
    pub reject_threshold: f64,
}

impl Default for DetectParams {
    fn default() -> Self {
        Self {
            window_len: 0.5,
            hop: 0.1,
            reject_threshold: 0.0,
        }
    }
}

impl DetectParams {
    /// Window length and hop in frames of `tf`.
    pub fn frames(&self, tf: &TimeFrequencyMap) -> (usize, usize) {
        let len = ((self.window_len / tf.frame_hop()).round() as usize).max(1);
        let hop = ((self.hop / tf.frame_hop()).round() as usize).max(1);
        (len, hop)
    }
}

/// Window start frames covering a map of `frames` frames; the last window
/// is aligned to the end when the hop grid leaves a tail.
pub fn window_starts(frames: usize, len: usize, hop: usize) -> Vec<usize> {
    if frames <= len {
        return vec![0];
    }
    let mut starts: Vec<usize> = (0..).map(|k| k * hop).take_while(|s| s + len <= frames).collect();
    let last = *starts.last().expect("at least one window");
    if last + len < frames {
        starts.push(frames - len);
    }
    starts
}

/// Sliding-window bank features of one map, with the per-frame tracks they came from.
pub struct WindowedFeatures {
    pub starts: Vec<usize>,
    pub len: usize,
    pub vectors: Vec<FeatureVector>,
    pub tracks: Vec<Vec<f64>>,
}

impl WindowedFeatures {
    pub fn compute(tf: &TimeFrequencyMap, bank: &[CopeFeature], params: &DetectParams) -> Self {
        let (len, hop) = params.frames(tf);
        let len = len.min(tf.frames());
        let starts = window_starts(tf.frames(), len, hop);
        let tracks: Vec<Vec<f64>> = bank.iter().map(|f| response_track(tf, f)).collect();
        let vectors = starts
            .iter()
            .map(|&s| {
                FeatureVector(
                    tracks
                        .iter()
                        .map(|tr| tr[s..s + len].iter().copied().fold(0.0, f64::max))
                        .collect(),
                )
            })
            .collect();
        Self {
            starts,
            len,
            vectors,
            tracks,
        }
    }
}

/// Sliding-window event detection on a precomputed map.
pub fn detect_in_map(
    tf: &TimeFrequencyMap,
    bank: &[CopeFeature],
    model: &LinearModel,
    params: &DetectParams,
) -> Result<Vec<Event>> {
    model.validate()?;
    if model.dim() != bank.len() {
        return Err(Error::Shape(format!(
            "model expects {} features, bank has {}",
            model.dim(),
            bank.len()
        )));
    }
    if tf.is_empty() {
        return Ok(Vec::new());
    }
    let wf = WindowedFeatures::compute(tf, bank, params);
    let bg = model.background_index();
    let labels: Vec<(Option<usize>, f64)> = wf
        .vectors
        .iter()
        .map(|v| {
            let scores = model.decision(&v.0);
            let any_above = scores
                .iter()
                .enumerate()
                .any(|(k, &s)| Some(k) != bg && s >= params.reject_threshold);
            if !any_above {
                return (None, 0.0);
            }
            let k = model.predict_index(&v.0);
            if Some(k) == bg {
                (None, 0.0)
            } else {
                (Some(k), scores[k])
            }
        })
        .collect();

    let hop_s = tf.frame_hop();
    let mut events: Vec<Event> = Vec::new();
    let mut i = 0;
    while i < labels.len() {
        let Some(k) = labels[i].0 else {
            i += 1;
            continue;
        };
        let mut j = i;
        let mut conf = labels[i].1;
        while j + 1 < labels.len() && labels[j + 1].0 == Some(k) {
            j += 1;
            conf = conf.max(labels[j].1);
        }
        let label = &model.class_labels[k];
        let first = wf.starts[i];
        let last_end = wf.starts[j] + wf.len;
        // anchor the best-matching constellation of this label inside the run
        let mut best: Option<(f64, usize, usize)> = None;
        for (fi, _) in bank.iter().enumerate().filter(|(_, f)| f.label() == label) {
            for t in first..last_end {
                let v = wf.tracks[fi][t];
                if best.is_none_or(|b| v > b.0) {
                    best = Some((v, fi, t));
                }
            }
        }
        let (start, end) = match best {
            Some((v, fi, t)) if v > 0.0 => {
                let (lo, hi) = bank[fi].span();
                let s = (t as i64 + lo).max(0) as usize;
                let e = ((t as i64 + hi).max(0) as usize).min(tf.frames() - 1);
                (s as f64 * hop_s, e as f64 * hop_s + tf.frame_len())
            }
            _ => (first as f64 * hop_s, (last_end - 1) as f64 * hop_s + tf.frame_len()),
        };
        events.push(Event {
            start,
            end,
            label: label.clone(),
            confidence: conf,
        });
        i = j + 1;
    }
    Ok(merge_overlapping(events))
}

/// Sorts by start and fuses overlapping events of the same label.
fn merge_overlapping(mut events: Vec<Event>) -> Vec<Event> {
    events.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.label.cmp(&b.label)));
    let mut out: Vec<Event> = Vec::with_capacity(events.len());
    for e in events {
        if let Some(prev) = out.iter_mut().rev().find(|p| p.label == e.label) {
            if e.start <= prev.end {
                prev.end = prev.end.max(e.end);
                prev.confidence = prev.confidence.max(e.confidence);
                continue;
            }
        }
        out.push(e);
    }
    out
}

/// Computes the gammatone map of `clip` and runs [`detect_in_map`].
pub fn detect_events(
    clip: &AudioClip,
    bank: &[CopeFeature],
    model: &LinearModel,
    gammatone: &GammatoneParams,
    params: &DetectParams,
) -> Result<Vec<Event>> {
    match gammatonegram(clip, gammatone) {
        Ok(tf) => detect_in_map(&tf, bank, model, params),
        Err(Error::EmptyMap) => Ok(Vec::new()),
        Err(e) => Err(e),
    }
}

impl Event {
    pub fn is_background(&self) -> bool {
        self.label == BACKGROUND
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_grid() {
        assert_eq!(window_starts(10, 20, 5), vec![0]);
        assert_eq!(window_starts(100, 20, 20), vec![0, 20, 40, 60, 80]);
        assert_eq!(window_starts(105, 20, 20), vec![0, 20, 40, 60, 80, 85]);
    }

    #[test]
    fn merging_keeps_labels_apart() {
        let ev = vec![
            Event::new(1.0, 2.0, "a"),
            Event::new(0.0, 1.5, "a"),
            Event::new(1.2, 1.8, "b"),
            Event::new(3.0, 4.0, "a"),
        ];
        let m = merge_overlapping(ev);
        assert_eq!(m.len(), 3);
        assert_eq!((m[0].start, m[0].end, m[0].label.as_str()), (0.0, 2.0, "a"));
        assert_eq!(m[1].label, "b");
        assert_eq!(m[2].start, 3.0);
    }
}
