use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audiofront::TimeFrequencyMap;
use crate::error::{Error, Result};

use super::feature::CopeFeature;

/// One score in `[0, 1]` per bank feature, in bank order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

struct Search {
    rt: i64,
    rc: i64,
    inv_2st2: f64,
    inv_2sc2: f64,
}

impl Search {
    fn new(f: &CopeFeature) -> Self {
        let tol = f.tolerances();
        Self {
            rt: (3.0 * tol.st).ceil() as i64,
            rc: (3.0 * tol.sc).ceil() as i64,
            inv_2st2: 1.0 / (2.0 * tol.st * tol.st),
            inv_2sc2: 1.0 / (2.0 * tol.sc * tol.sc),
        }
    }

    /// Best `score(E(t, c)) × G(t − t0, c − c0)` over the tolerance window, with
    /// the energy at the maximizing cell.
    fn best(&self, tf: &TimeFrequencyMap, t0: i64, c0: i64, score: impl Fn(f64) -> f64) -> (f64, f64) {
        let (mut best, mut at) = (0.0, 0.0);
        let t_lo = (t0 - self.rt).max(0);
        let t_hi = (t0 + self.rt).min(tf.frames() as i64 - 1);
        let c_lo = (c0 - self.rc).max(0);
        let c_hi = (c0 + self.rc).min(tf.channels() as i64 - 1);
        for t in t_lo..=t_hi {
            let gt = ((t - t0) * (t - t0)) as f64 * self.inv_2st2;
            for c in c_lo..=c_hi {
                let e = tf.get(t as usize, c as usize);
                let gc = ((c - c0) * (c - c0)) as f64 * self.inv_2sc2;
                let v = score(e) * (-(gt + gc)).exp();
                if v > best {
                    best = v;
                    at = e;
                }
            }
        }
        (best, at)
    }
}

fn ratio_similarity(observed: f64, expected: f64) -> f64 {
    if observed <= 0.0 || expected <= 0.0 {
        return 0.0;
    }
    (observed / expected).min(expected / observed).clamp(0.0, 1.0)
}

/// Score of feature `f` with its reference peak anchored at `frame`.
///
/// The observed reference energy is the energy of the cell maximizing
/// energy × position tolerance around the anchor; every expected point energy
/// is rescaled by it, which makes the score invariant to input gain.
pub fn cope_response(tf: &TimeFrequencyMap, f: &CopeFeature, frame: usize) -> f64 {
    if frame >= tf.frames() {
        return 0.0;
    }
    let search = Search::new(f);
    let reference = f.reference();
    let (_, ref_energy) = search.best(tf, frame as i64, reference.channel as i64, |e| e);
    if !(ref_energy > 0.0) {
        return 0.0;
    }
    let weights = f.weights();
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    for (p, w) in f.points().iter().zip(&weights) {
        let expected = p.energy * ref_energy;
        let (s, _) = search.best(tf, frame as i64 + p.dt, p.channel as i64, |e| {
            ratio_similarity(e, expected)
        });
        acc += w * s;
    }
    (acc / total).clamp(0.0, 1.0)
}

/// [`cope_response`] at every frame of the map.
pub fn response_track(tf: &TimeFrequencyMap, f: &CopeFeature) -> Vec<f64> {
    (0..tf.frames())
        .into_par_iter()
        .map(|t| cope_response(tf, f, t))
        .collect()
}

/// Per feature, the maximum response over frames `[start, start + len)`.
pub fn feature_vector(tf: &TimeFrequencyMap, bank: &[CopeFeature], window: (usize, usize)) -> Result<FeatureVector> {
    let (start, len) = window;
    if len == 0 || start + len > tf.frames() {
        return Err(Error::Shape(format!(
            "window {start}+{len} outside map of {} frames",
            tf.frames()
        )));
    }
    let values = bank
        .par_iter()
        .map(|f| {
            (start..start + len)
                .map(|t| cope_response(tf, f, t))
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(FeatureVector(values))
}
