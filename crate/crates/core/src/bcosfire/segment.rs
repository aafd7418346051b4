use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::Image2D;

use super::filter::{CosfireFilter, FilterKind};
use super::respond::ResponseCache;

/// How the responses of several filters are merged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fusion {
    #[default]
    Sum,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct SegmentationParams {
    /// Fraction of the maximum response a pixel needs to be foreground.
    pub threshold_fraction: f64,
    /// Invert intensities first so dark vessels become bright.
    pub invert: bool,
    /// Rounds of mean-filling grown outward from the field-of-view mask.
    pub fov_fill_iterations: usize,
    pub orientations_line: usize,
    pub orientations_ending: usize,
    pub fusion: Fusion,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        Self {
            threshold_fraction: 0.37,
            invert: true,
            fov_fill_iterations: 50,
            orientations_line: 12,
            orientations_ending: 24,
            fusion: Fusion::Sum,
        }
    }
}

impl SegmentationParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold_fraction) {
            return Err(Error::InvalidParameter(format!(
                "threshold fraction {} not in [0, 1]",
                self.threshold_fraction
            )));
        }
        if self.orientations_line == 0 || self.orientations_ending == 0 {
            return Err(Error::InvalidParameter("orientation counts must be >= 1".into()));
        }
        Ok(())
    }

    pub fn orientations(&self, kind: FilterKind) -> usize {
        match kind {
            FilterKind::Line => self.orientations_line,
            FilterKind::LineEnding => self.orientations_ending,
        }
    }
}

/// Grows the field of view outward `iterations` times, each new ring taking
/// the mean of its already-valid 8-neighbours. Anything still outside gets
/// the mean of the original field of view.
pub fn fill_outside_fov(img: &Image2D, mask: &Image2D, iterations: usize) -> Result<Image2D> {
    if !img.same_shape(mask) {
        return Err(Error::Shape("image and FOV mask differ in size".into()));
    }
    let (w, h) = (img.width(), img.height());
    let mut out = img.clone();
    let mut valid: Vec<bool> = mask.data().iter().map(|&m| m > 0.5).collect();
    let n_valid = valid.iter().filter(|&&v| v).count();
    if n_valid == 0 {
        return Ok(out);
    }
    let fov_mean = img
        .data()
        .iter()
        .zip(&valid)
        .filter(|(_, &v)| v)
        .map(|(&p, _)| p)
        .sum::<f64>()
        / n_valid as f64;
    for _ in 0..iterations {
        let mut ring = Vec::new();
        for y in 0..h {
            for x in 0..w {
                if valid[y * w + x] {
                    continue;
                }
                let (mut s, mut n) = (0.0, 0usize);
                for dy in -1isize..=1 {
                    for dx in -1isize..=1 {
                        let (nx, ny) = (x as isize + dx, y as isize + dy);
                        if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                            continue;
                        }
                        let i = ny as usize * w + nx as usize;
                        if valid[i] {
                            s += out.data()[i];
                            n += 1;
                        }
                    }
                }
                if n > 0 {
                    ring.push((y * w + x, s / n as f64));
                }
            }
        }
        if ring.is_empty() {
            break;
        }
        for (i, v) in ring {
            out.data_mut()[i] = v;
            valid[i] = true;
        }
    }
    for (p, v) in out.data_mut().iter_mut().zip(&valid) {
        if !v {
            *p = fov_mean;
        }
    }
    Ok(out)
}

/// Preprocessed rotation-invariant response of every filter, in bank order.
/// Pixels outside the field of view are not yet masked.
pub fn filter_responses(
    img: &Image2D,
    filters: &[CosfireFilter],
    params: &SegmentationParams,
    fov_mask: Option<&Image2D>,
) -> Result<Vec<Image2D>> {
    if filters.is_empty() {
        return Err(Error::InvalidParameter("segmentation needs at least one filter".into()));
    }
    params.validate()?;
    let mut pre = if params.invert {
        img.map(|v| 1.0 - v)
    } else {
        img.clone()
    };
    if let Some(mask) = fov_mask {
        if params.fov_fill_iterations > 0 {
            pre = fill_outside_fov(&pre, mask, params.fov_fill_iterations)?;
        } else if !pre.same_shape(mask) {
            return Err(Error::Shape("image and FOV mask differ in size".into()));
        }
    }
    let cache = ResponseCache::build(&pre, filters);
    Ok(filters
        .par_iter()
        .map(|f| cache.rotation_invariant(f, params.orientations(f.kind())))
        .collect())
}

/// Preprocessed, fused rotation-invariant response of a filter bank.
/// Pixels outside the field of view are 0.
pub fn response_map(
    img: &Image2D,
    filters: &[CosfireFilter],
    params: &SegmentationParams,
    fov_mask: Option<&Image2D>,
) -> Result<Image2D> {
    let maps = filter_responses(img, filters, params, fov_mask)?;
    let mut fused = maps[0].clone();
    for m in &maps[1..] {
        fused = match params.fusion {
            Fusion::Sum => fused.zip_map(m, |a, b| a + b)?,
            Fusion::Max => fused.zip_map(m, f64::max)?,
        };
    }
    if let Some(mask) = fov_mask {
        fused = fused.zip_map(mask, |r, m| if m > 0.5 { r } else { 0.0 })?;
    }
    Ok(fused)
}

/// Global fraction-of-maximum threshold; positive responses only.
pub fn segment_response(response: &Image2D, threshold_fraction: f64, fov_mask: Option<&Image2D>) -> Result<Image2D> {
    let t = threshold_fraction * response.max().max(0.0);
    let bin = response.map(|r| if r > 0.0 && r >= t { 1.0 } else { 0.0 });
    match fov_mask {
        Some(mask) => bin.zip_map(mask, |b, m| if m > 0.5 { b } else { 0.0 }),
        None => Ok(bin),
    }
}

/// Binary vessel map: 1 for foreground, 0 for background.
pub fn segment(
    img: &Image2D,
    filters: &[CosfireFilter],
    params: &SegmentationParams,
    fov_mask: Option<&Image2D>,
) -> Result<Image2D> {
    let resp = response_map(img, filters, params, fov_mask)?;
    segment_response(&resp, params.threshold_fraction, fov_mask)
}
