//! End-to-end pipelines shared by the command line and the benchmarks.

use rayon::prelude::*;

use crate::audiofront::{gammatonegram, read_wav, AudioClip, TimeFrequencyMap};
use crate::bcosfire::{response_map, segment_response, CosfireFilter};
use crate::config::ExperimentConfig;
use crate::cope::{configure_cope, detect_in_map, train_classifier, CopeFeature, Event, FeatureVector, LinearModel};
use crate::dataset::{training_windows, AudioDataset, ImageSample};
use crate::error::Result;
use crate::eval::{evaluate_segmentation, Metrics};
use crate::imgcore::io::{load_binary, load_image};
use crate::imgcore::Image2D;

/// One feature per labelled prototype clip, in the given order.
pub fn configure_bank(prototypes: &[(String, AudioClip)], cfg: &ExperimentConfig) -> Result<Vec<CopeFeature>> {
    prototypes
        .par_iter()
        .map(|(label, clip)| {
            let tf = gammatonegram(clip, &cfg.gammatone)?;
            configure_cope(&tf, &cfg.cope, label)
        })
        .collect()
}

/// Bank configured from the `prototypes/` folder of a dataset.
pub fn configure_bank_from_dataset(ds: &AudioDataset, cfg: &ExperimentConfig) -> Result<Vec<CopeFeature>> {
    configure_bank(&load_prototypes(ds)?, cfg)
}

/// Event spanning the non-zero support of a clean prototype clip.
pub fn prototype_event(clip: &AudioClip, label: &str) -> Option<Event> {
    let first = clip.samples.iter().position(|&v| v != 0.0)?;
    let last = clip.samples.iter().rposition(|&v| v != 0.0)?;
    let sr = f64::from(clip.sample_rate);
    Some(Event::new(first as f64 / sr, (last + 1) as f64 / sr, label))
}

/// Maps of the clean prototypes, each labelled with its own support, for use
/// as extra training clips.
pub fn prototype_maps(
    prototypes: &[(String, AudioClip)],
    cfg: &ExperimentConfig,
) -> Result<Vec<(String, TimeFrequencyMap, Vec<Event>)>> {
    prototypes
        .par_iter()
        .map(|(label, clip)| {
            let events = prototype_event(clip, label).into_iter().collect();
            Ok((label.clone(), gammatonegram(clip, &cfg.gammatone)?, events))
        })
        .collect()
}

pub fn load_prototypes(ds: &AudioDataset) -> Result<Vec<(String, AudioClip)>> {
    ds.prototypes()?
        .into_iter()
        .map(|(label, path)| Ok((label, read_wav(path)?)))
        .collect()
}

/// Maps of every clip of a dataset with its ground-truth events, in dataset order.
pub fn dataset_maps(ds: &AudioDataset, cfg: &ExperimentConfig) -> Result<Vec<(String, TimeFrequencyMap, Vec<Event>)>> {
    ds.clips()
        .into_par_iter()
        .map(|(file, events)| {
            let clip = read_wav(ds.root.join(&file))?;
            Ok((file, gammatonegram(&clip, &cfg.gammatone)?, events))
        })
        .collect()
}

pub fn training_set(
    maps: &[(String, TimeFrequencyMap, Vec<Event>)],
    bank: &[CopeFeature],
    cfg: &ExperimentConfig,
) -> (Vec<FeatureVector>, Vec<String>) {
    let parts: Vec<(Vec<FeatureVector>, Vec<String>)> = maps
        .par_iter()
        .map(|(_, tf, events)| training_windows(tf, events, bank, &cfg.detect))
        .collect();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (x, y) in parts {
        xs.extend(x);
        ys.extend(y);
    }
    (xs, ys)
}

/// Trains on every clip of the dataset plus its clean prototypes.
pub fn train_on_dataset(ds: &AudioDataset, bank: &[CopeFeature], cfg: &ExperimentConfig) -> Result<LinearModel> {
    let mut maps = dataset_maps(ds, cfg)?;
    maps.extend(prototype_maps(&load_prototypes(ds)?, cfg)?);
    let (xs, ys) = training_set(&maps, bank, cfg);
    train_classifier(&xs, &ys, &cfg.train_params())
}

/// Detected events per clip, in dataset order.
pub fn detect_on_maps(
    maps: &[(String, TimeFrequencyMap, Vec<Event>)],
    bank: &[CopeFeature],
    model: &LinearModel,
    cfg: &ExperimentConfig,
) -> Result<Vec<(String, Vec<Event>)>> {
    maps.par_iter()
        .map(|(file, tf, _)| Ok((file.clone(), detect_in_map(tf, bank, model, &cfg.detect)?)))
        .collect()
}

/// Fused response of one dataset image with its references.
pub struct ImageResponse {
    pub id: String,
    pub response: Image2D,
    pub truth: Image2D,
    pub mask: Option<Image2D>,
}

/// Loads every sample and computes its fused bank response, in sample order.
pub fn image_responses(
    samples: &[ImageSample],
    bank: &[CosfireFilter],
    cfg: &ExperimentConfig,
) -> Result<Vec<ImageResponse>> {
    samples
        .par_iter()
        .map(|s| {
            let img = load_image(&s.image, cfg.filters.gray)?;
            let truth = load_binary(&s.truth)?;
            let mask = s.mask.as_ref().map(load_binary).transpose()?;
            let response = response_map(&img, bank, &cfg.segmentation, mask.as_ref())?;
            Ok(ImageResponse {
                id: s.id.clone(),
                response,
                truth,
                mask,
            })
        })
        .collect()
}

/// Pooled pixel counts over all images at one threshold fraction.
pub fn pooled_metrics(responses: &[ImageResponse], fraction: f64) -> Result<Metrics> {
    let mut total = Metrics::default();
    for r in responses {
        let pred = segment_response(&r.response, fraction, r.mask.as_ref())?;
        total = total.merge(&evaluate_segmentation(&pred, &r.truth, r.mask.as_ref())?);
    }
    Ok(total)
}

/// Fractions 0.01, 0.02, …, 0.99 with their pooled metrics.
pub fn threshold_sweep(responses: &[ImageResponse]) -> Result<Vec<(f64, Metrics)>> {
    (1..100)
        .into_par_iter()
        .map(|k| {
            let f = k as f64 / 100.0;
            Ok((f, pooled_metrics(responses, f)?))
        })
        .collect()
}

/// Sweep entry with the highest pooled accuracy (lowest fraction on ties).
pub fn best_threshold(sweep: &[(f64, Metrics)]) -> Option<(f64, Metrics)> {
    let mut best: Option<(f64, Metrics)> = None;
    for &(f, m) in sweep {
        let acc = m.accuracy.unwrap_or(0.0);
        if best.is_none_or(|(_, b)| acc > b.accuracy.unwrap_or(0.0)) {
            best = Some((f, m));
        }
    }
    best
}
