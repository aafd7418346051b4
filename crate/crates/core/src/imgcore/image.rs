use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How samples outside the image are synthesised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BorderMode {
    /// Mirror including the edge pixel: `d c b a | a b c d`.
    #[default]
    Reflect,
    Replicate,
    Zero,
}

/// Row-major grayscale raster.
///
/// Ingested images are clamped to `[0, 1]`; response maps reuse the same
/// container and only require finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct Image2D {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

#[inline]
fn reflect_index(i: isize, n: usize) -> usize {
    let n = n as isize;
    let m = i.rem_euclid(2 * n);
    (if m < n { m } else { 2 * n - 1 - m }) as usize
}

impl Image2D {
    /// Builds a raster from raw values, which must be finite.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Shape(format!("image dimensions {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(Error::Shape(format!(
                "expected {} values for {width}x{height}, got {}",
                width * height,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite pixel value".into()));
        }
        Ok(Self { width, height, data })
    }

    /// Builds an intensity image, clamping every value into `[0, 1]`.
    pub fn from_intensities(width: usize, height: usize, mut data: Vec<f64>) -> Result<Self> {
        for v in &mut data {
            *v = v.clamp(0.0, 1.0);
        }
        Self::new(width, height, data)
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn same_shape(&self, other: &Image2D) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Pixel lookup that tolerates coordinates outside the raster.
    #[inline]
    pub fn get_border(&self, x: isize, y: isize, mode: BorderMode) -> f64 {
        let (w, h) = (self.width as isize, self.height as isize);
        if x >= 0 && x < w && y >= 0 && y < h {
            return self.data[y as usize * self.width + x as usize];
        }
        match mode {
            BorderMode::Zero => 0.0,
            BorderMode::Replicate => {
                let xi = x.clamp(0, w - 1) as usize;
                let yi = y.clamp(0, h - 1) as usize;
                self.data[yi * self.width + xi]
            }
            BorderMode::Reflect => {
                let xi = reflect_index(x, self.width);
                let yi = reflect_index(y, self.height);
                self.data[yi * self.width + xi]
            }
        }
    }

    /// Bilinear interpolation at a sub-pixel position (pixel centers at integers).
    #[inline]
    pub fn sample_bilinear(&self, x: f64, y: f64, mode: BorderMode) -> f64 {
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let (xi, yi) = (x0 as isize, y0 as isize);
        let v00 = self.get_border(xi, yi, mode);
        if fx == 0.0 && fy == 0.0 {
            return v00;
        }
        let v10 = self.get_border(xi + 1, yi, mode);
        let v01 = self.get_border(xi, yi + 1, mode);
        let v11 = self.get_border(xi + 1, yi + 1, mode);
        let top = v00 + (v10 - v00) * fx;
        let bottom = v01 + (v11 - v01) * fx;
        top + (bottom - top) * fy
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Position of the largest value; the first one in raster order wins ties.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, &v) in self.data.iter().enumerate() {
            if v > self.data[best] {
                best = i;
            }
        }
        (best % self.width, best / self.width)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image2D {
        Image2D {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Image2D, f: impl Fn(f64, f64) -> f64) -> Result<Image2D> {
        if !self.same_shape(other) {
            return Err(Error::Shape(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(Image2D {
            width: self.width,
            height: self.height,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }
}
