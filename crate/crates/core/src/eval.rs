//! Confusion-matrix metrics for pixel segmentation and event detection.

use serde::{Deserialize, Serialize};

use crate::cope::Event;
use crate::error::{Error, Result};
use crate::imgcore::Image2D;

/// Counts plus the rates derived from them. Rates with a zero denominator
/// are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Metrics {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub se: Option<f64>,
    pub sp: Option<f64>,
    pub accuracy: Option<f64>,
    pub mcc: Option<f64>,
    /// Fraction of ground-truth events recognized.
    pub recognition_rate: Option<f64>,
    /// Fraction of predicted events that recognize nothing.
    pub false_positive_rate: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl Metrics {
    pub fn from_counts(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        let (t, f, n, m) = (tp as f64, fp as f64, tn as f64, fn_ as f64);
        let den = (t + f) * (t + m) * (n + f) * (n + m);
        let mcc = (den > 0.0).then(|| ((t * n - f * m) / den.sqrt()).clamp(-1.0, 1.0));
        Self {
            tp,
            fp,
            tn,
            fn_,
            se: ratio(tp, tp + fn_),
            sp: ratio(tn, tn + fp),
            accuracy: ratio(tp + tn, tp + fp + tn + fn_),
            mcc,
            recognition_rate: None,
            false_positive_rate: None,
        }
    }

    /// Element-wise sum of counts with rates recomputed.
    pub fn merge(&self, other: &Metrics) -> Metrics {
        Metrics::from_counts(
            self.tp + other.tp,
            self.fp + other.fp,
            self.tn + other.tn,
            self.fn_ + other.fn_,
        )
    }
}

/// Pixel counts of a binary prediction against ground truth; values above
/// 0.5 are foreground. With a mask only pixels where it exceeds 0.5 count.
pub fn evaluate_segmentation(pred: &Image2D, gt: &Image2D, fov: Option<&Image2D>) -> Result<Metrics> {
    if !pred.same_shape(gt) || fov.is_some_and(|m| !m.same_shape(gt)) {
        return Err(Error::Shape(format!(
            "prediction {}x{} vs ground truth {}x{}",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height()
        )));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for i in 0..gt.data().len() {
        if fov.is_some_and(|m| m.data()[i] <= 0.5) {
            continue;
        }
        match (pred.data()[i] > 0.5, gt.data()[i] > 0.5) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    Ok(Metrics::from_counts(tp, fp, tn, fn_))
}

pub fn iou(a: &Event, b: &Event) -> f64 {
    let inter = (a.end.min(b.end) - a.start.max(b.start)).max(0.0);
    let union = a.duration() + b.duration() - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

/// One-to-one matching of predicted to ground-truth events, greedy by
/// descending IoU over overlapping pairs. Returns `(gt, pred, iou)` triples.
pub fn match_events(pred: &[Event], gt: &[Event]) -> Vec<(usize, usize, f64)> {
    let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
    for (g, ge) in gt.iter().enumerate() {
        for (p, pe) in pred.iter().enumerate() {
            let v = iou(pe, ge);
            if v > 0.0 {
                pairs.push((g, p, v));
            }
        }
    }
    pairs.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let mut used_g = vec![false; gt.len()];
    let mut used_p = vec![false; pred.len()];
    let mut out = Vec::new();
    for (g, p, v) in pairs {
        if !used_g[g] && !used_p[p] {
            used_g[g] = true;
            used_p[p] = true;
            out.push((g, p, v));
        }
    }
    out
}

/// Event-level metrics. A ground-truth event is recognized when its match
/// has the same label and IoU at least `iou_threshold`; `tp` counts those,
/// `fn` the rest of the ground truth and `fp` the predictions that recognize
/// nothing. `tn` is not defined for events and stays 0.
pub fn evaluate_events(pred: &[Event], gt: &[Event], iou_threshold: f64) -> Metrics {
    let recognized = match_events(pred, gt)
        .into_iter()
        .filter(|&(g, p, v)| v >= iou_threshold && gt[g].label == pred[p].label)
        .count() as u64;
    let n_gt = gt.len() as u64;
    let n_pred = pred.len() as u64;
    Metrics {
        tp: recognized,
        fp: n_pred - recognized,
        tn: 0,
        fn_: n_gt - recognized,
        se: ratio(recognized, n_gt),
        sp: None,
        accuracy: None,
        mcc: None,
        recognition_rate: ratio(recognized, n_gt),
        false_positive_rate: ratio(n_pred - recognized, n_pred),
    }
}

/// Event metrics pooled over clips: each clip is matched on its own, counts
/// are summed and rates recomputed.
pub fn evaluate_event_sets<'a>(
    clips: impl IntoIterator<Item = (&'a [Event], &'a [Event])>,
    iou_threshold: f64,
) -> Metrics {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (pred, gt) in clips {
        let m = evaluate_events(pred, gt, iou_threshold);
        tp += m.tp;
        fp += m.fp;
        fn_ += m.fn_;
    }
    Metrics {
        tp,
        fp,
        tn: 0,
        fn_,
        se: ratio(tp, tp + fn_),
        sp: None,
        accuracy: None,
        mcc: None,
        recognition_rate: ratio(tp, tp + fn_),
        false_positive_rate: ratio(fp, tp + fp),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn binary(bits: &[u8], w: usize) -> Image2D {
        Image2D::new(w, bits.len() / w, bits.iter().map(|&b| f64::from(b)).collect()).unwrap()
    }

    #[test]
    fn hand_counted_fixture() {
        let gt = binary(&[1, 1, 1, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0], 4);
        let pr = binary(&[1, 1, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0], 4);
        let m = evaluate_segmentation(&pr, &gt, None).unwrap();
        assert_eq!((m.tp, m.fp, m.tn, m.fn_), (3, 1, 10, 2));
        assert!((m.se.unwrap() - 0.6).abs() < 1e-12);
        assert!((m.sp.unwrap() - 10.0 / 11.0).abs() < 1e-12);
        assert!((m.accuracy.unwrap() - 13.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn identical_and_empty_predictions() {
        let gt = binary(&[1, 0, 0, 1, 1, 0], 3);
        let m = evaluate_segmentation(&gt, &gt, None).unwrap();
        assert_eq!((m.se, m.sp, m.mcc), (Some(1.0), Some(1.0), Some(1.0)));
        let none = Image2D::zeros(3, 2);
        let m = evaluate_segmentation(&none, &gt, None).unwrap();
        assert_eq!((m.se, m.sp), (Some(0.0), Some(1.0)));
        assert_eq!(m.mcc, None);
    }

    #[test]
    fn mask_restricts_counts() {
        let gt = binary(&[1, 0, 0, 1], 2);
        let pr = binary(&[1, 1, 1, 1], 2);
        let fov = binary(&[1, 0, 0, 1], 2);
        let m = evaluate_segmentation(&pr, &gt, Some(&fov)).unwrap();
        assert_eq!((m.tp, m.fp, m.tn, m.fn_), (2, 0, 0, 0));
        assert_eq!(m.sp, None);
        assert!(matches!(
            evaluate_segmentation(&pr, &Image2D::zeros(3, 2), None),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn mcc_against_direct_formula() {
        let mut r = crate::rng::stream(1, 0);
        for _ in 0..100 {
            let c: Vec<u64> = (0..4).map(|_| r.random_range(0..500)).collect();
            let m = Metrics::from_counts(c[0], c[1], c[2], c[3]);
            let (tp, fp, tn, fn_) = (c[0] as f64, c[1] as f64, c[2] as f64, c[3] as f64);
            let den = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
            match m.mcc {
                Some(v) => assert!((v - (tp * tn - fp * fn_) / den).abs() < 1e-12),
                None => assert_eq!(den, 0.0),
            }
            for rate in [m.se, m.sp, m.accuracy].into_iter().flatten() {
                assert!((0.0..=1.0).contains(&rate));
            }
        }
    }

    #[test]
    fn event_examples() {
        let gt = vec![Event::new(0.0, 1.0, "a"), Event::new(2.0, 3.0, "b")];
        assert_eq!(evaluate_events(&gt, &gt, 0.5).recognition_rate, Some(1.0));
        let m = evaluate_events(&[], &gt, 0.5);
        assert_eq!(m.recognition_rate, Some(0.0));
        assert_eq!(m.false_positive_rate, None);
        let pred = vec![Event::new(0.0, 1.0, "a"), Event::new(2.0, 3.0, "a")];
        let m = evaluate_events(&pred, &gt, 0.5);
        assert_eq!(m.recognition_rate, Some(0.5));
        assert_eq!((m.tp, m.fp, m.fn_), (1, 1, 1));
        assert_eq!(evaluate_events(&[], &[], 0.5).recognition_rate, None);
        let pooled = evaluate_event_sets([(&pred[..], &gt[..]), (&gt[..], &gt[..])], 0.5);
        assert_eq!((pooled.tp, pooled.fp, pooled.fn_), (3, 1, 1));
        assert_eq!(pooled.recognition_rate, Some(0.75));
    }

    // best matching = lexicographically largest descending IoU vector
    fn exhaustive(pred: &[Event], gt: &[Event], thr: f64) -> u64 {
        fn rec(
            g: usize,
            pred: &[Event],
            gt: &[Event],
            used: &mut Vec<bool>,
            cur: &mut Vec<(usize, usize)>,
            best: &mut Option<(Vec<f64>, Vec<(usize, usize)>)>,
        ) {
            if g == gt.len() {
                let mut key: Vec<f64> = cur.iter().map(|&(g, p)| iou(&pred[p], &gt[g])).collect();
                key.sort_by(|a, b| b.total_cmp(a));
                if best.as_ref().is_none_or(|(k, _)| key > *k) {
                    *best = Some((key, cur.clone()));
                }
                return;
            }
            rec(g + 1, pred, gt, used, cur, best);
            for p in 0..pred.len() {
                if !used[p] && iou(&pred[p], &gt[g]) > 0.0 {
                    used[p] = true;
                    cur.push((g, p));
                    rec(g + 1, pred, gt, used, cur, best);
                    cur.pop();
                    used[p] = false;
                }
            }
        }
        let mut best = None;
        rec(0, pred, gt, &mut vec![false; pred.len()], &mut Vec::new(), &mut best);
        best.unwrap()
            .1
            .iter()
            .filter(|&&(g, p)| iou(&pred[p], &gt[g]) >= thr && pred[p].label == gt[g].label)
            .count() as u64
    }

    #[test]
    fn greedy_matching_equals_exhaustive_matching() {
        let mut r = crate::rng::stream(2, 0);
        let ev = |r: &mut rand_chacha::ChaCha8Rng| {
            let s = r.random_range(0..40) as f64 * 0.1;
            let d = r.random_range(3..20) as f64 * 0.1 + r.random::<f64>() * 1e-3;
            Event::new(s, s + d, ["a", "b"][r.random_range(0..2)])
        };
        for _ in 0..500 {
            let ng = r.random_range(0..4);
            let np = r.random_range(0..4);
            let gt: Vec<Event> = (0..ng).map(|_| ev(&mut r)).collect();
            let pred: Vec<Event> = (0..np).map(|_| ev(&mut r)).collect();
            assert_eq!(evaluate_events(&pred, &gt, 0.5).tp, exhaustive(&pred, &gt, 0.5));
        }
    }
}
