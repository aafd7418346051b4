use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{DogParams, Polarity};

/// Rounds to 9 significant digits, the precision angles are stored with.
fn round_sig9(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.8e}").parse().expect("formatted float parses")
}

/// One DoG observation of a filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTuple")]
pub struct CosfireTuple {
    pub sigma: f64,
    pub rho: f64,
    pub phi: f64,
}

#[derive(Deserialize)]
struct RawTuple {
    sigma: f64,
    rho: f64,
    phi: f64,
}

impl TryFrom<RawTuple> for CosfireTuple {
    type Error = Error;
    fn try_from(r: RawTuple) -> Result<Self> {
        CosfireTuple::new(r.sigma, r.rho, r.phi)
    }
}

impl CosfireTuple {
    /// Normalizes `phi` into `[0, 2π)` at 9 significant digits; `rho = 0` pins `phi` to 0.
    pub fn new(sigma: f64, rho: f64, phi: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("tuple sigma {sigma} must be > 0")));
        }
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(Error::InvalidParameter(format!("tuple rho {rho} must be >= 0")));
        }
        if !phi.is_finite() {
            return Err(Error::InvalidParameter("tuple phi must be finite".into()));
        }
        let phi = if rho == 0.0 {
            0.0
        } else {
            let mut p = round_sig9(phi.rem_euclid(TAU));
            if p >= TAU {
                p = 0.0;
            }
            p
        };
        Ok(Self { sigma, rho, phi })
    }

    /// Same tuple with its angle advanced by `psi`.
    pub fn rotated(&self, psi: f64) -> Self {
        Self::new(self.sigma, self.rho, self.phi + psi).expect("rotation keeps a valid tuple")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterKind {
    #[default]
    Line,
    LineEnding,
}

/// Blur growth and tuple weighting constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct BlurParams {
    pub sigma0: f64,
    pub alpha: f64,
    pub sigma_hat_factor: f64,
}

impl Default for BlurParams {
    fn default() -> Self {
        Self {
            sigma0: 3.0,
            alpha: 0.7,
            sigma_hat_factor: 1.0 / 3.0,
        }
    }
}

impl BlurParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma0 >= 0.0 && self.alpha >= 0.0 && self.sigma_hat_factor > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "blur params need sigma0 >= 0, alpha >= 0, sigmaHatFactor > 0: {self:?}"
            )));
        }
        Ok(())
    }
}

/// A configured B-COSFIRE filter. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FilterDoc", into = "FilterDoc")]
pub struct CosfireFilter {
    tuples: Vec<CosfireTuple>,
    kind: FilterKind,
    dog: DogParams,
    blur: BlurParams,
    config_center: (f64, f64),
}

impl CosfireFilter {
    pub fn new(
        tuples: Vec<CosfireTuple>,
        kind: FilterKind,
        dog: DogParams,
        blur: BlurParams,
        config_center: (f64, f64),
    ) -> Result<Self> {
        if tuples.is_empty() {
            return Err(Error::InvalidParameter("filter needs at least one tuple".into()));
        }
        dog.validate()?;
        blur.validate()?;
        Ok(Self {
            tuples,
            kind,
            dog,
            blur,
            config_center,
        })
    }

    pub fn tuples(&self) -> &[CosfireTuple] {
        &self.tuples
    }

    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    pub fn dog(&self) -> &DogParams {
        &self.dog
    }

    pub fn polarity(&self) -> Polarity {
        self.dog.polarity
    }

    pub fn blur(&self) -> &BlurParams {
        &self.blur
    }

    pub fn config_center(&self) -> (f64, f64) {
        self.config_center
    }

    pub fn with_kind(mut self, kind: FilterKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn with_blur(mut self, blur: BlurParams) -> Result<Self> {
        blur.validate()?;
        self.blur = blur;
        Ok(self)
    }

    pub fn max_rho(&self) -> f64 {
        self.tuples.iter().map(|t| t.rho).fold(0.0, f64::max)
    }

    /// Blur standard deviation applied to a tuple at distance `rho`.
    pub fn blur_sigma(&self, rho: f64) -> f64 {
        self.blur.sigma0 + self.blur.alpha * rho
    }

    /// Geometric-mean weights, one per tuple.
    pub fn weights(&self) -> Vec<f64> {
        let max_rho = self.max_rho();
        if max_rho == 0.0 {
            return vec![1.0; self.tuples.len()];
        }
        let sh = self.blur.sigma_hat_factor * max_rho;
        self.tuples
            .iter()
            .map(|t| (-(t.rho * t.rho) / (2.0 * sh * sh)).exp())
            .collect()
    }

    /// Rotation step for orientation `k` out of `n`.
    pub fn orientation(&self, k: usize, n: usize) -> f64 {
        let span = match self.kind {
            FilterKind::Line => std::f64::consts::PI,
            FilterKind::LineEnding => TAU,
        };
        span * k as f64 / n as f64
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("filter serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct DogDoc {
    sigma: f64,
    sigma_ratio: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct FilterDoc {
    kind: FilterKind,
    polarity: Polarity,
    dog: DogDoc,
    tuples: Vec<CosfireTuple>,
    sigma0: f64,
    alpha: f64,
    sigma_hat_factor: f64,
    #[serde(default)]
    config_center: (f64, f64),
}

impl From<CosfireFilter> for FilterDoc {
    fn from(f: CosfireFilter) -> Self {
        FilterDoc {
            kind: f.kind,
            polarity: f.dog.polarity,
            dog: DogDoc {
                sigma: f.dog.sigma,
                sigma_ratio: f.dog.sigma_ratio,
            },
            tuples: f.tuples,
            sigma0: f.blur.sigma0,
            alpha: f.blur.alpha,
            sigma_hat_factor: f.blur.sigma_hat_factor,
            config_center: f.config_center,
        }
    }
}

impl TryFrom<FilterDoc> for CosfireFilter {
    type Error = Error;
    fn try_from(d: FilterDoc) -> Result<Self> {
        let dog = DogParams::new(d.dog.sigma, d.dog.sigma_ratio, d.polarity)?;
        let blur = BlurParams {
            sigma0: d.sigma0,
            alpha: d.alpha,
            sigma_hat_factor: d.sigma_hat_factor,
        };
        CosfireFilter::new(d.tuples, d.kind, dog, blur, d.config_center)
    }
}

/// On-disk filter bank document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterBank {
    pub version: u32,
    pub filters: Vec<CosfireFilter>,
}

impl FilterBank {
    pub const VERSION: u32 = 1;

    pub fn new(filters: Vec<CosfireFilter>) -> Self {
        Self {
            version: Self::VERSION,
            filters,
        }
    }
}

pub fn write_bank(filters: &[CosfireFilter], path: impl AsRef<Path>) -> Result<()> {
    let doc = FilterBank::new(filters.to_vec());
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

pub fn read_bank(path: impl AsRef<Path>) -> Result<Vec<CosfireFilter>> {
    let text = std::fs::read_to_string(path)?;
    let doc: FilterBank = serde_json::from_str(&text)?;
    if doc.version != FilterBank::VERSION {
        return Err(Error::Serde(format!("unsupported bank version {}", doc.version)));
    }
    if doc.filters.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(doc.filters)
}
