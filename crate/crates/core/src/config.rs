//! Experiment configuration: one TOML document holding every tunable and the
//! seed, with `section.key=value` overrides.

use serde::{Deserialize, Serialize};

use crate::audiofront::GammatoneParams;
use crate::bcosfire::{BankOptions, FilterKind, SegmentationParams};
use crate::cope::{CopeConfig, DetectParams, TrainParams};
use crate::error::{Error, Result};
use crate::imgcore::io::GrayPolicy;
use crate::synth::SynthConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct FilterSetup {
    /// DoG scales of the bank, pixels.
    pub sigmas: Vec<f64>,
    /// Radius lists; every list is combined with every scale and kind.
    pub radii: Vec<Vec<f64>>,
    pub kinds: Vec<FilterKind>,
    pub gray: GrayPolicy,
}

impl Default for FilterSetup {
    fn default() -> Self {
        Self {
            sigmas: vec![1.8, 2.4],
            radii: vec![vec![0.0, 2.0, 4.0, 6.0, 8.0]],
            kinds: vec![FilterKind::Line, FilterKind::LineEnding],
            gray: GrayPolicy::Green,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct TrainSection {
    pub margin_penalty: f64,
    pub epochs: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainParams::default();
        Self {
            margin_penalty: t.margin_penalty,
            epochs: t.epochs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct FeatselSection {
    pub n_bins: usize,
    pub max_k: usize,
    pub patience: usize,
    pub holdout_fraction: f64,
}

impl Default for FeatselSection {
    fn default() -> Self {
        Self {
            n_bins: crate::featsel::DEFAULT_BINS,
            max_k: 4,
            patience: 1,
            holdout_fraction: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct EvalSection {
    pub iou_threshold: f64,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self { iou_threshold: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub filters: FilterSetup,
    pub bank: BankOptions,
    pub segmentation: SegmentationParams,
    pub gammatone: GammatoneParams,
    pub cope: CopeConfig,
    pub detect: DetectParams,
    pub train: TrainSection,
    pub featsel: FeatselSection,
    pub eval: EvalSection,
    pub synth: SynthConfig,
}

fn check(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(what.to_string()))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with(text, &[] as &[&str])
    }

    /// Parses `text`, applies `section.key=value` overrides in order, then
    /// validates.
    pub fn from_toml_with<S: AsRef<str>>(text: &str, overrides: &[S]) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o.as_ref())?;
        }
        let cfg: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load<S: AsRef<str>>(path: Option<&std::path::Path>, overrides: &[S]) -> Result<Self> {
        let text = match path {
            Some(p) => {
                std::fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?
            }
            None => String::new(),
        };
        Self::from_toml_with(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn train_params(&self) -> TrainParams {
        TrainParams {
            margin_penalty: self.train.margin_penalty,
            epochs: self.train.epochs,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let f = &self.filters;
        check(
            !f.sigmas.is_empty() && f.sigmas.iter().all(|s| *s > 0.0),
            "filters.sigmas must be positive",
        )?;
        check(
            !f.radii.is_empty() && f.radii.iter().all(|r| !r.is_empty() && r.iter().all(|v| *v >= 0.0)),
            "filters.radii must be non-empty lists of radii >= 0",
        )?;
        check(!f.kinds.is_empty(), "filters.kinds must not be empty")?;
        let b = &self.bank;
        check(
            b.sigma_ratio > 0.0 && b.sigma_ratio < 1.0,
            "bank.sigmaRatio must be in (0, 1)",
        )?;
        check(b.fraction > 0.0 && b.fraction <= 1.0, "bank.fraction must be in (0, 1]")?;
        check(
            b.blur.sigma0 >= 0.0 && b.blur.alpha >= 0.0 && b.blur.sigma_hat_factor > 0.0,
            "bank.blur constants must be >= 0 (sigmaHatFactor > 0)",
        )?;
        let s = &self.segmentation;
        check(
            s.threshold_fraction > 0.0 && s.threshold_fraction <= 1.0,
            "segmentation.thresholdFraction must be in (0, 1]",
        )?;
        check(
            s.orientations_line > 0 && s.orientations_ending > 0,
            "orientation counts must be > 0",
        )?;
        let g = &self.gammatone;
        check(
            g.n_channels > 0 && g.f_low > 0.0 && g.f_high > g.f_low && g.frame_len > 0.0 && g.frame_hop > 0.0,
            "gammatone parameters out of range",
        )?;
        let c = &self.cope;
        check(c.floor > 0.0 && c.floor < 1.0, "cope.floor must be in (0, 1)")?;
        check(
            c.min_dist.0 >= 1 && c.min_dist.1 >= 1 && c.max_points >= 1,
            "cope.minDist and maxPoints must be >= 1",
        )?;
        check(
            c.tolerances.st > 0.0 && c.tolerances.sc > 0.0,
            "cope tolerances must be > 0",
        )?;
        let d = &self.detect;
        check(
            d.window_len > 0.0 && d.hop > 0.0,
            "detect.windowLen and hop must be > 0",
        )?;
        check(d.reject_threshold.is_finite(), "detect.rejectThreshold must be finite")?;
        check(
            self.train.margin_penalty > 0.0 && self.train.epochs > 0,
            "train parameters must be > 0",
        )?;
        let fs = &self.featsel;
        check(fs.n_bins >= 2 && fs.max_k >= 1, "featsel.nBins >= 2 and maxK >= 1")?;
        check(
            fs.holdout_fraction > 0.0 && fs.holdout_fraction < 1.0,
            "featsel.holdoutFraction must be in (0, 1)",
        )?;
        check(
            self.eval.iou_threshold > 0.0 && self.eval.iou_threshold <= 1.0,
            "eval.iouThreshold must be in (0, 1]",
        )?;
        self.synth.validate().map_err(|e| Error::Config(e.to_string()))
    }
}

/// Sets `a.b.c = value` in `table`. The value is read as a TOML literal and
/// falls back to a bare string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key `{key}`")));
    }
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let mut cur = table;
    for p in &path[..path.len() - 1] {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{p}` in `{key}` is not a section")))?;
    }
    cur.insert(path[path.len() - 1].to_string(), value);
    Ok(())
}
