use crate::error::{Error, Result};

use super::image::{BorderMode, Image2D};

/// Full 2D convolution with an odd-sized kernel, same-size output.
///
/// `out(x, y) = Σ k(i, j) · img(x + cx − i, y + cy − j)` where `(cx, cy)` is
/// the kernel center.
pub fn convolve(img: &Image2D, kernel: &Image2D, border: BorderMode) -> Result<Image2D> {
    let (kw, kh) = (kernel.width(), kernel.height());
    if kw % 2 == 0 || kh % 2 == 0 {
        return Err(Error::InvalidKernel(format!(
            "kernel dimensions must be odd, got {kw}x{kh}"
        )));
    }
    let (cx, cy) = ((kw / 2) as isize, (kh / 2) as isize);
    let (w, h) = (img.width(), img.height());
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for j in 0..kh {
                let sy = y as isize + cy - j as isize;
                for i in 0..kw {
                    let k = kernel.get(i, j);
                    if k != 0.0 {
                        let sx = x as isize + cx - i as isize;
                        acc += k * img.get_border(sx, sy, border);
                    }
                }
            }
            out[y * w + x] = acc;
        }
    }
    Image2D::new(w, h, out)
}

/// Unit-sum sampled Gaussian of the given radius.
pub fn gaussian_kernel_1d(sigma: f64, radius: usize) -> Vec<f64> {
    if sigma <= 0.0 {
        let mut k = vec![0.0; 2 * radius + 1];
        k[radius] = 1.0;
        return k;
    }
    let denom = 2.0 * sigma * sigma;
    let mut k: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            (-d * d / denom).exp()
        })
        .collect();
    let s: f64 = k.iter().sum();
    for v in &mut k {
        *v /= s;
    }
    k
}

fn pad_line(src: impl Iterator<Item = f64>, n: usize, radius: usize, border: BorderMode, buf: &mut Vec<f64>) {
    buf.clear();
    let line: Vec<f64> = src.collect();
    let tmp = Image2D::new(n, 1, line).expect("line is finite");
    for i in -(radius as isize)..(n + radius) as isize {
        buf.push(tmp.get_border(i, 0, border));
    }
}

/// Convolves rows with `kx`, then columns with `ky`. Both must have odd length.
pub fn convolve_separable(img: &Image2D, kx: &[f64], ky: &[f64], border: BorderMode) -> Result<Image2D> {
    if kx.len() % 2 == 0 || ky.len() % 2 == 0 {
        return Err(Error::InvalidKernel("separable kernels must have odd length".into()));
    }
    let (w, h) = (img.width(), img.height());
    let (rx, ry) = (kx.len() / 2, ky.len() / 2);
    let mut rows = vec![0.0; w * h];
    let mut buf = Vec::with_capacity(w.max(h) + 2 * rx.max(ry));
    for y in 0..h {
        pad_line(img.data()[y * w..(y + 1) * w].iter().copied(), w, rx, border, &mut buf);
        for x in 0..w {
            // buf[x + rx] is img(x); convolution flips the kernel
            let mut acc = 0.0;
            for (i, &k) in kx.iter().enumerate() {
                acc += k * buf[x + 2 * rx - i];
            }
            rows[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for x in 0..w {
        pad_line((0..h).map(|y| rows[y * w + x]), h, ry, border, &mut buf);
        for y in 0..h {
            let mut acc = 0.0;
            for (j, &k) in ky.iter().enumerate() {
                acc += k * buf[y + 2 * ry - j];
            }
            out[y * w + x] = acc;
        }
    }
    Image2D::new(w, h, out)
}

/// Gaussian smoothing truncated at `ceil(3σ)`. `sigma <= 0` returns a copy.
pub fn gaussian_blur(img: &Image2D, sigma: f64, border: BorderMode) -> Image2D {
    if sigma <= 0.0 {
        return img.clone();
    }
    let radius = (3.0 * sigma).ceil() as usize;
    let k = gaussian_kernel_1d(sigma, radius);
    convolve_separable(img, &k, &k, border).expect("odd kernel")
}
