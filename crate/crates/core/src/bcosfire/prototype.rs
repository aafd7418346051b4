//! Synthetic bar stimuli used as configuration prototypes and test inputs.

use crate::imgcore::Image2D;

/// Anti-aliased straight bar through `center` with direction `angle`
/// (x right, y down). Bar pixels are 1 on a 0 background when `bright`,
/// inverted otherwise.
pub fn bar(width: usize, height: usize, center: (f64, f64), angle: f64, thickness: f64, bright: bool) -> Image2D {
    stimulus(width, height, center, angle, thickness, bright, false)
}

/// Bar that starts at `center` and extends along `angle` only.
pub fn half_bar(width: usize, height: usize, center: (f64, f64), angle: f64, thickness: f64, bright: bool) -> Image2D {
    stimulus(width, height, center, angle, thickness, bright, true)
}

fn stimulus(
    width: usize,
    height: usize,
    (cx, cy): (f64, f64),
    angle: f64,
    thickness: f64,
    bright: bool,
    half: bool,
) -> Image2D {
    let (s, c) = angle.sin_cos();
    Image2D::from_fn(width, height, |x, y| {
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        let across = (-s * dx + c * dy).abs();
        let mut cover = (thickness / 2.0 + 0.5 - across).clamp(0.0, 1.0);
        if half {
            let along = c * dx + s * dy;
            cover *= (along + 1.0).clamp(0.0, 1.0);
        }
        if bright {
            cover
        } else {
            1.0 - cover
        }
    })
}

/// Odd side length of a square prototype that fits circles up to `max_rho`
/// plus the DoG support.
pub fn prototype_size(max_rho: f64, sigma: f64) -> usize {
    let half = (max_rho + 6.0 * sigma).ceil() as usize + 4;
    2 * half + 1
}
