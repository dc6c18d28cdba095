//! RGB image buffers and PNG round-tripping.
//!
//! Pixels are `f64` triples in `[0, 1]`. PNG conversion is 8-bit RGB:
//! `u8 -> f64` by `/255`, `f64 -> u8` by `round(c * 255)` after clamping.

use std::path::Path;

use crate::error::{Error, Result};

/// An H×W RGB image with components in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage {
    width: usize,
    height: usize,
    data: Vec<[f64; 3]>,
}

impl ColorImage {
    /// All-black image.
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, [0.0; 3])
    }

    pub fn filled(width: usize, height: usize, color: [f64; 3]) -> Self {
        Self {
            width,
            height,
            data: vec![color; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [f64; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    /// Build from raw pixel data, validating the `[0, 1]` invariant.
    pub fn from_pixels(width: usize, height: usize, data: Vec<[f64; 3]>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "expected {} pixels, got {}",
                width * height,
                data.len()
            )));
        }
        for px in &data {
            for c in px {
                if !c.is_finite() || *c < 0.0 || *c > 1.0 {
                    return Err(Error::InvalidParameter(format!(
                        "pixel component {c} outside [0, 1]"
                    )));
                }
            }
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, color: [f64; 3]) {
        debug_assert!(color.iter().all(|c| c.is_finite() && (0.0..=1.0).contains(c)));
        self.data[y * self.width + x] = color;
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.data
    }

    /// Encode as 8-bit RGB PNG bytes.
    pub fn to_png_bytes(&self) -> Result<Vec<u8>> {
        let mut raw = Vec::with_capacity(self.width * self.height * 3);
        for px in &self.data {
            for c in px {
                raw.push(quantize(*c));
            }
        }
        let buf: image::RgbImage =
            image::ImageBuffer::from_raw(self.width as u32, self.height as u32, raw)
                .ok_or_else(|| Error::Internal("image buffer size mismatch".into()))?;
        let mut out = std::io::Cursor::new(Vec::new());
        buf.write_to(&mut out, image::ImageFormat::Png)
            .map_err(|e| Error::Image(e.to_string()))?;
        Ok(out.into_inner())
    }

    /// Decode 8-bit PNG (any color type; alpha dropped).
    pub fn from_png_bytes(bytes: &[u8]) -> Result<Self> {
        let (img, _) = decode_png(bytes)?;
        Ok(img)
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let bytes = self.to_png_bytes()?;
        std::fs::write(path, bytes)?;
        Ok(())
    }

    pub fn load_png(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = std::fs::read(path.as_ref())?;
        Self::from_png_bytes(&bytes)
    }
}

/// An RGB image plus an alpha channel in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageWithAlpha {
    pub color: ColorImage,
    pub alpha: Vec<f64>,
}

impl ImageWithAlpha {
    pub fn new(color: ColorImage, alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() != color.width() * color.height() {
            return Err(Error::DimensionMismatch(
                "alpha channel length does not match image".into(),
            ));
        }
        Ok(Self { color, alpha })
    }

    pub fn alpha_at(&self, x: usize, y: usize) -> f64 {
        self.alpha[y * self.color.width() + x]
    }
}

/// Decode a PNG, reporting whether the source carried an alpha channel.
pub fn decode_png(bytes: &[u8]) -> Result<(ColorImage, Option<Vec<f64>>)> {
    let dyn_img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| Error::Image(e.to_string()))?;
    let has_alpha = dyn_img.color().has_alpha();
    let rgba = dyn_img.to_rgba8();
    let (w, h) = (rgba.width() as usize, rgba.height() as usize);
    let mut data = Vec::with_capacity(w * h);
    let mut alpha = Vec::with_capacity(w * h);
    for px in rgba.pixels() {
        data.push([
            px.0[0] as f64 / 255.0,
            px.0[1] as f64 / 255.0,
            px.0[2] as f64 / 255.0,
        ]);
        alpha.push(px.0[3] as f64 / 255.0);
    }
    let img = ColorImage {
        width: w,
        height: h,
        data,
    };
    Ok((img, has_alpha.then_some(alpha)))
}

/// Load a PNG from disk, preserving alpha if present.
pub fn load_png_rgba(path: impl AsRef<Path>) -> Result<(ColorImage, Option<Vec<f64>>)> {
    let bytes = std::fs::read(path.as_ref())?;
    decode_png(&bytes)
}

/// Write a single-channel `[0, 1]` buffer as an 8-bit grayscale PNG.
pub fn save_gray_png(
    path: impl AsRef<Path>,
    width: usize,
    height: usize,
    values: &[f64],
) -> Result<()> {
    if values.len() != width * height {
        return Err(Error::DimensionMismatch(
            "grayscale buffer length does not match dimensions".into(),
        ));
    }
    let raw: Vec<u8> = values.iter().map(|v| quantize(*v)).collect();
    let buf: image::GrayImage =
        image::ImageBuffer::from_raw(width as u32, height as u32, raw)
            .ok_or_else(|| Error::Internal("image buffer size mismatch".into()))?;
    buf.save_with_format(path.as_ref(), image::ImageFormat::Png)
        .map_err(|e| Error::Image(e.to_string()))?;
    Ok(())
}

#[inline]
fn quantize(c: f64) -> u8 {
    (c.clamp(0.0, 1.0) * 255.0).round() as u8
}
