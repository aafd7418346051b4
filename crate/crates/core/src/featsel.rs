//! Feature subset selection: plug-in mutual information ranking and greedy
//! forward wrapper selection.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cope::{train_classifier, FeatureVector, TrainParams};
use crate::error::{Error, Result};
use crate::rng;

pub const DEFAULT_BINS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMethod {
    Mi,
    Wrapper,
}

/// Selected feature indices, in selection order, with one score per index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SelectionResult {
    pub selected_indices: Vec<usize>,
    pub scores: Vec<f64>,
    pub method: SelectionMethod,
}

impl SelectionResult {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("selection serializes");
        s.push('\n');
        s
    }
}

/// Equal-frequency bin index of every value. Equal values always share a
/// bin, so the assignment depends only on the rank order of the values.
pub fn equal_frequency_bins(values: &[f64], n_bins: usize) -> Vec<usize> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut bins = vec![0; n];
    let mut r = 0;
    while r < n {
        let mut end = r + 1;
        while end < n && values[order[end]] == values[order[r]] {
            end += 1;
        }
        let b = (r * n_bins / n).min(n_bins - 1);
        for &i in &order[r..end] {
            bins[i] = b;
        }
        r = end;
    }
    bins
}

/// Shannon entropy in bits of a count vector.
pub fn entropy(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Plug-in mutual information in bits of a joint count table `table[f][y]`.
pub fn mi_from_counts(table: &[Vec<usize>]) -> f64 {
    let ny = table.first().map_or(0, Vec::len);
    let row: Vec<usize> = table.iter().map(|r| r.iter().sum()).collect();
    let col: Vec<usize> = (0..ny).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let n: usize = row.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let mut mi = 0.0;
    for (i, r) in table.iter().enumerate() {
        for (j, &c) in r.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (row[i] as f64 * col[j] as f64)).log2();
            }
        }
    }
    mi.max(0.0)
}

fn joint_counts(bins: &[usize], n_bins: usize, labels: &[usize]) -> Vec<Vec<usize>> {
    let ny = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0; ny]; n_bins];
    for (&b, &y) in bins.iter().zip(labels) {
        table[b][y] += 1;
    }
    table
}

/// Mutual information in bits between an equal-frequency binned feature and
/// integer class labels.
pub fn mutual_information(feature: &[f64], labels: &[usize], n_bins: usize) -> Result<f64> {
    if feature.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} feature values but {} labels",
            feature.len(),
            labels.len()
        )));
    }
    if n_bins < 2 || feature.len() < n_bins {
        return Err(Error::InvalidParameter(format!(
            "need n_bins >= 2 and at least n_bins samples (n_bins {}, samples {})",
            n_bins,
            feature.len()
        )));
    }
    if feature.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("feature values must be finite".into()));
    }
    let bins = equal_frequency_bins(feature, n_bins);
    Ok(mi_from_counts(&joint_counts(&bins, n_bins, labels)))
}

/// Ranks the columns of `x` (rows are samples) by descending mutual
/// information with `y`; equal scores keep their original order.
pub fn rank_by_mi(x: &[Vec<f64>], y: &[usize], n_bins: usize) -> Result<SelectionResult> {
    if x.is_empty() || x[0].is_empty() {
        return Err(Error::EmptyInput);
    }
    let d = x[0].len();
    if x.iter().any(|r| r.len() != d) {
        return Err(Error::Shape("rows differ in length".into()));
    }
    let scores = (0..d)
        .into_par_iter()
        .map(|j| {
            let col: Vec<f64> = x.iter().map(|r| r[j]).collect();
            mutual_information(&col, y, n_bins)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    Ok(SelectionResult {
        scores: order.iter().map(|&j| scores[j]).collect(),
        selected_indices: order,
        method: SelectionMethod::Mi,
    })
}

/// Greedy forward selection over `n_features` candidates.
///
/// Each round adds the candidate maximizing `eval` (lowest index on ties).
/// A round improves if it beats the best accuracy so far by more than 1e-6.
/// Selection stops at `max_k` features or after `patience + 1` consecutive
/// rounds without improvement, and is then cut back to the last improving
/// round. `scores[i]` is the accuracy measured after adding the i-th pick.
pub fn greedy_wrapper<F>(n_features: usize, eval: F, max_k: usize, patience: usize) -> Result<SelectionResult>
where
    F: Fn(&[usize]) -> Result<f64> + Sync,
{
    if max_k == 0 || max_k > n_features {
        return Err(Error::InvalidParameter(format!(
            "max_k must be in 1..={n_features}, got {max_k}"
        )));
    }
    let mut selected: Vec<usize> = Vec::new();
    let mut scores: Vec<f64> = Vec::new();
    let mut best = f64::NEG_INFINITY;
    let mut keep = 0;
    let mut stall = 0;
    while selected.len() < max_k {
        let candidates: Vec<usize> = (0..n_features).filter(|j| !selected.contains(j)).collect();
        let accs = candidates
            .par_iter()
            .map(|&j| {
                let mut subset = selected.clone();
                subset.push(j);
                eval(&subset)
            })
            .collect::<Result<Vec<f64>>>()?;
        let mut pick = 0;
        for (i, &a) in accs.iter().enumerate() {
            if a > accs[pick] {
                pick = i;
            }
        }
        selected.push(candidates[pick]);
        scores.push(accs[pick]);
        if accs[pick] > best + 1e-6 {
            best = accs[pick];
            keep = selected.len();
            stall = 0;
        } else {
            stall += 1;
            if stall > patience {
                break;
            }
        }
    }
    selected.truncate(keep);
    scores.truncate(keep);
    Ok(SelectionResult {
        selected_indices: selected,
        scores,
        method: SelectionMethod::Wrapper,
    })
}

/// Stratified train/test split of sample indices; `fraction` of every class
/// goes to the test side (at least one sample when the class has two or more).
pub fn stratified_split(y: &[usize], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let n_classes = y.iter().copied().max().map_or(0, |m| m + 1);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for c in 0..n_classes {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == c).collect();
        idx.shuffle(&mut rng::stream(seed, c as u64));
        let mut k = (fraction * idx.len() as f64).round() as usize;
        if idx.len() >= 2 {
            k = k.clamp(1, idx.len() - 1);
        } else {
            k = 0;
        }
        test.extend_from_slice(&idx[..k]);
        train.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Held-out accuracy of the linear classifier restricted to `subset`.
pub fn linear_holdout_accuracy(
    x: &[Vec<f64>],
    y: &[usize],
    subset: &[usize],
    split: &(Vec<usize>, Vec<usize>),
    params: &TrainParams,
) -> Result<f64> {
    let (train, test) = split;
    if test.is_empty() {
        return Err(Error::InvalidParameter("empty test split".into()));
    }
    let project = |i: usize| FeatureVector(subset.iter().map(|&j| x[i][j]).collect());
    let xs: Vec<FeatureVector> = train.iter().map(|&i| project(i)).collect();
    let ys: Vec<String> = train.iter().map(|&i| y[i].to_string()).collect();
    let model = train_classifier(&xs, &ys, params)?;
    let hits = test
        .iter()
        .filter(|&&i| model.predict(&project(i).0) == y[i].to_string())
        .count();
    Ok(hits as f64 / test.len() as f64)
}
