use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::convolve::{convolve_separable, gaussian_kernel_1d};
use super::image::{BorderMode, Image2D};

/// Center-surround sign of a DoG filter, named after the stimulus it
/// responds to: on-center filters fire on bright centers, off-center
/// filters on dark centers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polarity {
    #[default]
    OnCenter,
    OffCenter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DogParams {
    /// Outer (surround) standard deviation in pixels.
    pub sigma: f64,
    /// Inner/outer standard-deviation ratio, in (0, 1).
    pub sigma_ratio: f64,
    #[serde(default)]
    pub polarity: Polarity,
}

impl DogParams {
    pub const DEFAULT_RATIO: f64 = 0.5;

    pub fn new(sigma: f64, sigma_ratio: f64, polarity: Polarity) -> Result<Self> {
        let p = Self {
            sigma,
            sigma_ratio,
            polarity,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_sigma(sigma: f64, polarity: Polarity) -> Result<Self> {
        Self::new(sigma, Self::DEFAULT_RATIO, polarity)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("DoG sigma {} must be > 0", self.sigma)));
        }
        if !(self.sigma_ratio > 0.0 && self.sigma_ratio < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "DoG sigma ratio {} must be in (0, 1)",
                self.sigma_ratio
            )));
        }
        Ok(())
    }

    fn sign(&self) -> f64 {
        match self.polarity {
            Polarity::OnCenter => 1.0,
            Polarity::OffCenter => -1.0,
        }
    }

    fn radius(&self, radius_factor: f64) -> usize {
        (radius_factor * self.sigma).ceil() as usize
    }
}

/// Sampled DoG kernel on a square support of radius `ceil(radius_factor·σ)`.
///
/// Both Gaussians are normalized to unit sum on the support, so the kernel
/// sums to zero. On-center kernels are `G(ratio·σ) − G(σ)`.
pub fn dog_kernel(p: &DogParams, radius_factor: f64) -> Result<Image2D> {
    p.validate()?;
    if radius_factor < 3.0 {
        return Err(Error::InvalidParameter(format!(
            "radius factor {radius_factor} must be >= 3"
        )));
    }
    let r = p.radius(radius_factor);
    let outer = gaussian_kernel_1d(p.sigma, r);
    let inner = gaussian_kernel_1d(p.sigma * p.sigma_ratio, r);
    let n = 2 * r + 1;
    let s = p.sign();
    Ok(Image2D::from_fn(n, n, |i, j| {
        s * (inner[i] * inner[j] - outer[i] * outer[j])
    }))
}

/// Half-wave rectified DoG response with reflect borders.
pub fn dog_response(img: &Image2D, p: &DogParams) -> Image2D {
    dog_response_with(img, p, BorderMode::Reflect)
}

/// Half-wave rectified DoG response, computed as the difference of two
/// separable Gaussian blurs sharing the `3σ` support of [`dog_kernel`].
pub fn dog_response_with(img: &Image2D, p: &DogParams, border: BorderMode) -> Image2D {
    let r = p.radius(3.0);
    let outer = gaussian_kernel_1d(p.sigma, r);
    let inner = gaussian_kernel_1d(p.sigma * p.sigma_ratio, r);
    let a = convolve_separable(img, &inner, &inner, border).expect("odd kernel");
    let b = convolve_separable(img, &outer, &outer, border).expect("odd kernel");
    let s = p.sign();
    a.zip_map(&b, |x, y| (s * (x - y)).max(0.0)).expect("same shape")
}
