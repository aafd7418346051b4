use super::image::{BorderMode, Image2D};

fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < 1e-9 {
        r
    } else {
        v
    }
}

/// Rotates about the image center by `angle` radians with bilinear
/// interpolation. A point at polar angle φ (x right, y down) moves to φ + angle.
/// Samples falling outside the source are 0.
pub fn rotate(img: &Image2D, angle: f64) -> Image2D {
    if angle == 0.0 {
        return img.clone();
    }
    let (w, h) = (img.width(), img.height());
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    let (s, c) = angle.sin_cos();
    Image2D::from_fn(w, h, |x, y| {
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        // inverse rotation
        let sx = snap(c * dx + s * dy + cx);
        let sy = snap(-s * dx + c * dy + cy);
        if sx <= -1.0 || sy <= -1.0 || sx >= w as f64 || sy >= h as f64 {
            return 0.0;
        }
        img.sample_bilinear(sx, sy, BorderMode::Zero)
    })
}
