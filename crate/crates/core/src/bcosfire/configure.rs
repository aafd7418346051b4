use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::imgcore::{dog_response, BorderMode, DogParams, Image2D};

use super::filter::{BlurParams, CosfireFilter, CosfireTuple, FilterKind};

/// Number of scan positions on a circle of radius `rho`: the angular step is
/// at most `1 / max(rho, 1)` radians and the count is a multiple of 4 so the
/// axis directions are sampled exactly.
fn circle_positions(rho: f64) -> usize {
    let n = (TAU * rho.max(1.0)).ceil() as usize;
    n.div_ceil(4) * 4
}

/// `(φ, value)` pairs sampled on a circle around `center`, bilinear.
pub fn circle_samples(resp: &Image2D, center: (f64, f64), rho: f64) -> Vec<(f64, f64)> {
    let n = circle_positions(rho);
    (0..n)
        .map(|k| {
            let phi = TAU * k as f64 / n as f64;
            let (s, c) = phi.sin_cos();
            let v = resp.sample_bilinear(center.0 + rho * c, center.1 + rho * s, BorderMode::Reflect);
            (phi, v)
        })
        .collect()
}

/// Configures a filter from a single prototype image.
///
/// The returned filter is of line kind with default blur constants; see
/// [`CosfireFilter::with_kind`] and [`CosfireFilter::with_blur`].
pub fn configure(
    prototype: &Image2D,
    center: (usize, usize),
    radii: &[f64],
    dog: &DogParams,
    fraction: f64,
) -> Result<CosfireFilter> {
    dog.validate()?;
    if center.0 >= prototype.width() || center.1 >= prototype.height() {
        return Err(Error::InvalidParameter(format!(
            "center {center:?} outside {}x{} prototype",
            prototype.width(),
            prototype.height()
        )));
    }
    if radii.is_empty() {
        return Err(Error::InvalidParameter("radii must be non-empty".into()));
    }
    if radii.iter().any(|r| !(*r >= 0.0 && r.is_finite())) || radii.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter(format!(
            "radii must be nonnegative and ascending: {radii:?}"
        )));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!("fraction {fraction} not in (0, 1]")));
    }

    let resp = dog_response(prototype, dog);
    let global_max = resp.max();
    if !(global_max > 0.0) {
        return Err(Error::NoStructureFound);
    }
    let c = (center.0 as f64, center.1 as f64);
    let mut tuples = Vec::new();
    for &rho in radii {
        if rho == 0.0 {
            let v = resp.get(center.0, center.1);
            if v > 0.0 && v >= fraction * global_max {
                tuples.push(CosfireTuple::new(dog.sigma, 0.0, 0.0)?);
            }
            continue;
        }
        let samples = circle_samples(&resp, c, rho);
        let circle_max = samples.iter().map(|s| s.1).fold(0.0, f64::max);
        if !(circle_max > 0.0) {
            continue;
        }
        let n = samples.len();
        for k in 0..n {
            let v = samples[k].1;
            let prev = samples[(k + n - 1) % n].1;
            let next = samples[(k + 1) % n].1;
            // rising into k, not rising out of it: the first sample of a plateau wins
            if v > prev && v >= next && v >= fraction * circle_max {
                tuples.push(CosfireTuple::new(dog.sigma, rho, samples[k].0)?);
            }
        }
    }
    if tuples.is_empty() {
        return Err(Error::NoStructureFound);
    }
    CosfireFilter::new(tuples, FilterKind::Line, *dog, BlurParams::default(), c)
}
