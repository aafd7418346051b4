//! Raster ingestion and export.

use std::io::Write;
use std::path::Path;

use image::{DynamicImage, GrayImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::image::Image2D;

/// How RGB inputs are reduced to one channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrayPolicy {
    /// Green channel only; vessels have the best contrast there.
    #[default]
    Green,
    /// ITU-R BT.601 luma.
    Luma,
}

pub fn from_dynamic(img: &DynamicImage, policy: GrayPolicy) -> Result<Image2D> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<f64> = if img.color().has_color() {
        let rgb = img.to_rgb16();
        rgb.pixels()
            .map(|p| {
                let [r, g, b] = p.0.map(|c| c as f64 / 65535.0);
                match policy {
                    GrayPolicy::Green => g,
                    GrayPolicy::Luma => 0.299 * r + 0.587 * g + 0.114 * b,
                }
            })
            .collect()
    } else {
        img.to_luma16().pixels().map(|p| p.0[0] as f64 / 65535.0).collect()
    };
    Image2D::from_intensities(w, h, data)
}

pub fn decode_image(bytes: &[u8], policy: GrayPolicy) -> Result<Image2D> {
    let img = image::load_from_memory(bytes)?;
    from_dynamic(&img, policy)
}

pub fn load_image(path: impl AsRef<Path>, policy: GrayPolicy) -> Result<Image2D> {
    let img = image::open(path.as_ref())?;
    from_dynamic(&img, policy)
}

/// Loads a mask or ground truth: any pixel above half scale is foreground (1.0).
pub fn load_binary(path: impl AsRef<Path>) -> Result<Image2D> {
    let img = load_image(path, GrayPolicy::Luma)?;
    Ok(img.map(|v| if v > 0.5 { 1.0 } else { 0.0 }))
}

fn to_gray8(img: &Image2D, normalize: bool) -> GrayImage {
    let scale = if normalize {
        let m = img.max();
        if m > 0.0 {
            1.0 / m
        } else {
            0.0
        }
    } else {
        1.0
    };
    let bytes = img
        .data()
        .iter()
        .map(|&v| (v * scale).clamp(0.0, 1.0).mul_add(255.0, 0.5) as u8)
        .collect();
    GrayImage::from_raw(img.width() as u32, img.height() as u32, bytes).expect("sized buffer")
}

/// Writes an 8-bit PNG; `normalize` stretches the maximum to 255.
pub fn save_png(img: &Image2D, path: impl AsRef<Path>, normalize: bool) -> Result<()> {
    to_gray8(img, normalize)
        .save_with_format(path.as_ref(), image::ImageFormat::Png)
        .map_err(Error::from)
}

/// Writes a binary map as an 8-bit PNG with values 0 and 255.
pub fn save_binary_png(img: &Image2D, path: impl AsRef<Path>) -> Result<()> {
    let bin = img.map(|v| if v > 0.5 { 1.0 } else { 0.0 });
    save_png(&bin, path, false)
}

/// Binary (P5) 8-bit PGM encoding.
pub fn encode_pgm(img: &Image2D, normalize: bool) -> Vec<u8> {
    let gray = to_gray8(img, normalize);
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(gray.as_raw());
    out
}

pub fn save_pgm(img: &Image2D, path: impl AsRef<Path>, normalize: bool) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode_pgm(img, normalize))?;
    Ok(())
}


#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

/// Writes exact values as JSON (`width`, `height`, row-major `data`).
pub fn save_json(img: &Image2D, path: impl AsRef<Path>) -> Result<()> {
    let doc = RawImage {
        width: img.width(),
        height: img.height(),
        data: img.data().to_vec(),
    };
    std::fs::write(path, serde_json::to_string(&doc)?)?;
    Ok(())
}

pub fn load_json(path: impl AsRef<Path>) -> Result<Image2D> {
    let doc: RawImage = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    if doc.data.len() != doc.width * doc.height {
        return Err(Error::Decode("raw image size does not match its data".into()));
    }
    Image2D::new(doc.width, doc.height, doc.data)
}
