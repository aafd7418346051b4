//! On-disk dataset layouts: retinal image folders and labelled audio clips.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::audiofront::TimeFrequencyMap;
use crate::cope::{CopeFeature, DetectParams, Event, FeatureVector, WindowedFeatures, BACKGROUND};
use crate::error::{Error, Result};

/// One ground-truth row of an audio dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioRecord {
    /// Path relative to the dataset root.
    pub file: String,
    pub start: f64,
    pub end: f64,
    pub label: String,
    pub snr_db: f64,
}

impl AudioRecord {
    pub fn event(&self) -> Event {
        Event::new(self.start, self.end, self.label.clone())
    }
}

pub fn write_groundtruth(records: &[AudioRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in records {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_groundtruth(path: &Path) -> Result<Vec<AudioRecord>> {
    let mut rd = csv::Reader::from_path(path).map_err(csv_err)?;
    let records = rd
        .deserialize()
        .collect::<std::result::Result<Vec<AudioRecord>, _>>()
        .map_err(csv_err)?;
    for r in &records {
        if !(r.start.is_finite() && r.end.is_finite() && r.end > r.start) {
            return Err(Error::Decode(format!("bad interval for {}", r.file)));
        }
    }
    Ok(records)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Decode(format!("{other:?}")),
    }
}

/// Audio dataset: `groundtruth.csv` plus the clips it names, and optional
/// `prototypes/<label>.wav`.
#[derive(Debug, Clone)]
pub struct AudioDataset {
    pub root: PathBuf,
    pub records: Vec<AudioRecord>,
}

impl AudioDataset {
    pub fn load(root: &Path) -> Result<Self> {
        Ok(Self {
            root: root.to_path_buf(),
            records: read_groundtruth(&root.join("groundtruth.csv"))?,
        })
    }

    /// Clips in order of first mention, each with its events.
    pub fn clips(&self) -> Vec<(String, Vec<Event>)> {
        let mut out: Vec<(String, Vec<Event>)> = Vec::new();
        for r in &self.records {
            match out.iter_mut().find(|(f, _)| *f == r.file) {
                Some((_, ev)) => ev.push(r.event()),
                None => out.push((r.file.clone(), vec![r.event()])),
            }
        }
        out
    }

    /// `(label, path)` of every prototype, sorted by label.
    pub fn prototypes(&self) -> Result<Vec<(String, PathBuf)>> {
        let dir = self.root.join("prototypes");
        let mut out = Vec::new();
        for entry in std::fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")) {
                let label = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                out.push((label, path));
            }
        }
        out.sort();
        Ok(out)
    }
}

/// Label of a training window spanning `[w0, w1]` seconds: the event it
/// overlaps by at least half of the shorter of the two, background when it
/// touches no event, `None` (skip) otherwise.
pub fn window_label(w0: f64, w1: f64, events: &[Event]) -> Option<String> {
    let mut touched = false;
    let mut best: Option<(f64, &Event)> = None;
    for e in events {
        let ov = w1.min(e.end) - w0.max(e.start);
        if ov > 0.0 {
            touched = true;
            if ov >= 0.5 * (w1 - w0).min(e.duration()) && best.is_none_or(|(b, _)| ov > b) {
                best = Some((ov, e));
            }
        }
    }
    match best {
        Some((_, e)) => Some(e.label.clone()),
        None if !touched => Some(BACKGROUND.to_string()),
        None => None,
    }
}

/// Labelled window feature vectors of one clip.
pub fn training_windows(
    tf: &TimeFrequencyMap,
    events: &[Event],
    bank: &[CopeFeature],
    params: &DetectParams,
) -> (Vec<FeatureVector>, Vec<String>) {
    let wf = WindowedFeatures::compute(tf, bank, params);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&s, v) in wf.starts.iter().zip(wf.vectors) {
        let w0 = s as f64 * tf.frame_hop();
        let w1 = (s + wf.len - 1) as f64 * tf.frame_hop() + tf.frame_len();
        if let Some(l) = window_label(w0, w1, events) {
            xs.push(v);
            ys.push(l);
        }
    }
    (xs, ys)
}

/// One retinal image with its optional field-of-view mask and manual labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageSample {
    pub id: String,
    pub image: PathBuf,
    pub mask: Option<PathBuf>,
    pub truth: PathBuf,
}

fn sample_id(path: &Path) -> String {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    stem.split(['_', '.', '-']).next().unwrap_or_default().to_string()
}

fn files_by_id(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    entries.sort();
    for p in entries.into_iter().filter(|p| p.is_file()) {
        out.entry(sample_id(&p)).or_insert(p);
    }
    Ok(out)
}

fn first_dir(root: &Path, names: &[&str]) -> Option<PathBuf> {
    names.iter().map(|n| root.join(n)).find(|p| p.is_dir())
}

/// Scans a DRIVE-style folder: `images/`, `groundtruth/` (or `1st_manual/`)
/// and optionally `masks/` (or `mask/`). Files pair up by the leading id
/// token of their names, e.g. `01_test.tif`, `01_manual1.gif`,
/// `01_test_mask.gif`.
pub fn scan_image_dataset(root: &Path) -> Result<Vec<ImageSample>> {
    let images = first_dir(root, &["images"])
        .ok_or_else(|| Error::Decode(format!("{} has no images/ folder", root.display())))?;
    let truth = first_dir(root, &["groundtruth", "1st_manual", "manual"])
        .ok_or_else(|| Error::Decode(format!("{} has no groundtruth/ folder", root.display())))?;
    let masks = first_dir(root, &["masks", "mask"]);
    let imgs = files_by_id(&images)?;
    let gts = files_by_id(&truth)?;
    let mks = match &masks {
        Some(d) => files_by_id(d)?,
        None => BTreeMap::new(),
    };
    let mut out = Vec::new();
    for (id, image) in imgs {
        let Some(t) = gts.get(&id) else {
            return Err(Error::Decode(format!("no ground truth for image {id}")));
        };
        out.push(ImageSample {
            mask: mks.get(&id).cloned(),
            truth: t.clone(),
            id,
            image,
        });
    }
    if out.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(out)
}
