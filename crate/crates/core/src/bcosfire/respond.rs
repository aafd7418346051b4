use std::collections::HashMap;

use rayon::prelude::*;

use crate::imgcore::{dog_response, gaussian_blur, BorderMode, DogParams, Image2D, Polarity};

use super::filter::{CosfireFilter, CosfireTuple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct DogKey {
    sigma: u64,
    ratio: u64,
    off: bool,
}

impl DogKey {
    fn new(sigma: f64, dog: &DogParams) -> Self {
        Self {
            sigma: sigma.to_bits(),
            ratio: dog.sigma_ratio.to_bits(),
            off: dog.polarity == Polarity::OffCenter,
        }
    }

    fn params(&self) -> DogParams {
        DogParams {
            sigma: f64::from_bits(self.sigma),
            sigma_ratio: f64::from_bits(self.ratio),
            polarity: if self.off {
                Polarity::OffCenter
            } else {
                Polarity::OnCenter
            },
        }
    }
}

/// Blurred DoG maps keyed by DoG parameters and blur width, shared by every
/// tuple, orientation and filter that needs them.
#[derive(Debug, Default)]
pub struct ResponseCache {
    blurred: HashMap<(DogKey, u64), Image2D>,
}

impl ResponseCache {
    pub fn build<'a>(img: &Image2D, filters: impl IntoIterator<Item = &'a CosfireFilter>) -> Self {
        let mut wanted: Vec<(DogKey, u64)> = Vec::new();
        for f in filters {
            for t in f.tuples() {
                let key = (DogKey::new(t.sigma, f.dog()), f.blur_sigma(t.rho).to_bits());
                if !wanted.contains(&key) {
                    wanted.push(key);
                }
            }
        }
        let mut dog_keys: Vec<DogKey> = Vec::new();
        for (k, _) in &wanted {
            if !dog_keys.contains(k) {
                dog_keys.push(*k);
            }
        }
        let dogs: HashMap<DogKey, Image2D> = dog_keys
            .par_iter()
            .map(|k| (*k, dog_response(img, &k.params())))
            .collect();
        let blurred = wanted
            .par_iter()
            .map(|key| {
                let map = gaussian_blur(&dogs[&key.0], f64::from_bits(key.1), BorderMode::Reflect);
                (*key, map)
            })
            .collect();
        Self { blurred }
    }

    fn get(&self, f: &CosfireFilter, t: &CosfireTuple) -> &Image2D {
        &self.blurred[&(DogKey::new(t.sigma, f.dog()), f.blur_sigma(t.rho).to_bits())]
    }

    /// Filter response with every tuple angle advanced by `psi`.
    pub fn combine(&self, f: &CosfireFilter, psi: f64) -> Image2D {
        let tuples: Vec<CosfireTuple> = f.tuples().iter().map(|t| t.rotated(psi)).collect();
        let first = self.get(f, &tuples[0]);
        let (w, h) = (first.width(), first.height());
        if tuples.len() == 1 {
            return shifted(first, &tuples[0]);
        }
        let weights = f.weights();
        let total: f64 = weights.iter().sum();
        let mut acc = vec![0.0; w * h];
        let mut dead = vec![false; w * h];
        for (t, &wt) in tuples.iter().zip(&weights) {
            let s = shifted(self.get(f, t), t);
            for ((a, d), &v) in acc.iter_mut().zip(dead.iter_mut()).zip(s.data()) {
                if v <= 0.0 {
                    *d = true;
                } else if !*d {
                    *a += wt * v.ln();
                }
            }
        }
        let data = acc
            .iter()
            .zip(&dead)
            .map(|(&a, &d)| if d { 0.0 } else { (a / total).exp() })
            .collect();
        Image2D::new(w, h, data).expect("finite response")
    }
}

fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < 1e-9 {
        r
    } else {
        v
    }
}

/// `out(x, y) = map(x + ρ cos φ, y + ρ sin φ)`, bilinear, reflect borders.
fn shifted(map: &Image2D, t: &CosfireTuple) -> Image2D {
    if t.rho == 0.0 {
        return map.clone();
    }
    let (s, c) = t.phi.sin_cos();
    let ox = snap(t.rho * c);
    let oy = snap(t.rho * s);
    Image2D::from_fn(map.width(), map.height(), |x, y| {
        map.sample_bilinear(x as f64 + ox, y as f64 + oy, BorderMode::Reflect)
    })
}

/// Weighted geometric mean of the blurred, shifted DoG responses.
pub fn respond(img: &Image2D, f: &CosfireFilter) -> Image2D {
    ResponseCache::build(img, [f]).combine(f, 0.0)
}

/// Pixel-wise maximum of the filter response over `n_orientations` rotated
/// tuple sets. DoG maps are computed once and only re-shifted per orientation.
pub fn respond_rotation_invariant(img: &Image2D, f: &CosfireFilter, n_orientations: usize) -> Image2D {
    let cache = ResponseCache::build(img, [f]);
    cache.rotation_invariant(f, n_orientations)
}

impl ResponseCache {
    pub fn rotation_invariant(&self, f: &CosfireFilter, n_orientations: usize) -> Image2D {
        let n = n_orientations.max(1);
        (0..n)
            .into_par_iter()
            .map(|k| self.combine(f, f.orientation(k, n)))
            .reduce_with(|a, b| a.zip_map(&b, f64::max).expect("same shape"))
            .expect("at least one orientation")
    }
}
