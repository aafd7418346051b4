use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{DogParams, Polarity};

use super::configure::configure;
use super::filter::{BlurParams, CosfireFilter, FilterKind};
use super::prototype::{bar, half_bar, prototype_size};

/// Settings shared by every filter of a synthetic bank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct BankOptions {
    pub sigma_ratio: f64,
    pub polarity: Polarity,
    /// Relative response a circle maximum needs to become a tuple.
    pub fraction: f64,
    pub blur: BlurParams,
}

impl Default for BankOptions {
    fn default() -> Self {
        Self {
            sigma_ratio: DogParams::DEFAULT_RATIO,
            polarity: Polarity::OnCenter,
            fraction: 0.3,
            blur: BlurParams::default(),
        }
    }
}

/// Configures the Cartesian product `sigmas × radii_sets × kinds` on ideal
/// bars of thickness `2σ` (half bars ending at the center for line endings).
pub fn make_bank(
    dog_sigmas: &[f64],
    radii_sets: &[Vec<f64>],
    kinds: &[FilterKind],
    opts: &BankOptions,
) -> Result<Vec<CosfireFilter>> {
    if dog_sigmas.is_empty() || radii_sets.is_empty() || kinds.is_empty() {
        return Err(Error::InvalidParameter("bank parameter lists must be non-empty".into()));
    }
    let bright = opts.polarity == Polarity::OnCenter;
    let mut bank = Vec::with_capacity(dog_sigmas.len() * radii_sets.len() * kinds.len());
    for &sigma in dog_sigmas {
        let dog = DogParams::new(sigma, opts.sigma_ratio, opts.polarity)?;
        for radii in radii_sets {
            let max_rho = radii.iter().copied().fold(0.0, f64::max);
            let size = prototype_size(max_rho, sigma);
            let c = size / 2;
            let center = (c as f64, c as f64);
            for &kind in kinds {
                let proto = match kind {
                    FilterKind::Line => bar(size, size, center, 0.0, 2.0 * sigma, bright),
                    FilterKind::LineEnding => half_bar(size, size, center, 0.0, 2.0 * sigma, bright),
                };
                let f = configure(&proto, (c, c), radii, &dog, opts.fraction)?
                    .with_kind(kind)
                    .with_blur(opts.blur)?;
                bank.push(f);
            }
        }
    }
    Ok(bank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    fn radii() -> Vec<Vec<f64>> {
        vec![vec![0.0, 2.0, 4.0, 6.0, 8.0]]
    }

    #[test]
    fn cardinality() {
        let bank = make_bank(
            &[1.8, 2.4],
            &radii(),
            &[FilterKind::Line, FilterKind::LineEnding],
            &BankOptions::default(),
        )
        .unwrap();
        assert_eq!(bank.len(), 4);
        assert_eq!(bank[1].kind(), FilterKind::LineEnding);
        assert!(make_bank(&[], &radii(), &[FilterKind::Line], &BankOptions::default()).is_err());
    }

    #[test]
    fn line_filters_are_point_symmetric() {
        let bank = make_bank(
            &[1.5, 1.8, 2.4, 3.0],
            &radii(),
            &[FilterKind::Line],
            &BankOptions::default(),
        )
        .unwrap();
        for f in &bank {
            for t in f.tuples().iter().filter(|t| t.rho > 0.0) {
                let mirrored = (t.phi + PI) % TAU;
                assert!(
                    f.tuples().iter().any(|u| u.rho == t.rho
                        && ((u.phi - mirrored).abs() < 1e-6 || (u.phi - mirrored).abs() > TAU - 1e-6)),
                    "{t:?} lacks a mirror in {:?}",
                    f.tuples()
                );
            }
        }
    }

    #[test]
    fn line_endings_stay_in_a_half_plane() {
        let bank = make_bank(
            &[1.5, 1.8, 2.4, 3.0],
            &radii(),
            &[FilterKind::LineEnding],
            &BankOptions::default(),
        )
        .unwrap();
        for f in &bank {
            assert!(f.tuples().iter().any(|t| t.rho > 0.0));
            // all offsets point to the same side: positive x component
            for t in f.tuples().iter().filter(|t| t.rho > 0.0) {
                assert!(t.phi.cos() > 0.0, "{t:?}");
            }
        }
    }
}
