use std::path::Path;

use crate::error::{Error, Result};

pub const CHANNELS: usize = 3;

/// RGB raster with values in `[0, 1]`, stored channel-major (`C × H × W`).
///
/// Channel-major is also the flattening order used for input-space tangent
/// vectors and for model activations.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidInput(format!(
                "image dimensions must be positive, got {height}x{width}"
            )));
        }
        if data.len() != CHANNELS * height * width {
            return Err(Error::Shape(format!(
                "{height}x{width} RGB image needs {} values, got {}",
                CHANNELS * height * width,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidInput(format!(
                "pixel value {bad} outside [0, 1]"
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    /// Builds an image, clamping every value into `[0, 1]`.
    pub fn from_clamped(height: usize, width: usize, mut data: Vec<f64>) -> Result<Self> {
        for v in &mut data {
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        }
        Self::new(height, width, data)
    }

    pub fn filled(height: usize, width: usize, rgb: [f64; 3]) -> Result<Self> {
        let plane = height * width;
        let mut data = Vec::with_capacity(CHANNELS * plane);
        for c in rgb {
            data.extend(std::iter::repeat_n(c, plane));
        }
        Self::new(height, width, data)
    }

    pub fn from_fn<F: FnMut(usize, usize, usize) -> f64>(
        height: usize,
        width: usize,
        mut f: F,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(CHANNELS * height * width);
        for c in 0..CHANNELS {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, y, x));
                }
            }
        }
        Self::from_clamped(height, width, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Number of scalars, `3·H·W`.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    /// Per-pixel luma `0.299 R + 0.587 G + 0.114 B`.
    pub fn luma(&self) -> Vec<f64> {
        let (r, g, b) = (self.plane(0), self.plane(1), self.plane(2));
        r.iter()
            .zip(g)
            .zip(b)
            .map(|((r, g), b)| 0.299 * r + 0.587 * g + 0.114 * b)
            .collect()
    }

    pub fn max_abs_diff(&self, other: &Image) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Peak signal-to-noise ratio in dB for signals in `[0, 1]`.
    pub fn psnr(&self, other: &Image) -> f64 {
        let mse = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / self.data.len() as f64;
        if mse == 0.0 {
            f64::INFINITY
        } else {
            -10.0 * mse.log10()
        }
    }

    /// 8-bit interleaved RGB, rounding to nearest.
    pub fn to_rgb8(&self) -> image::RgbImage {
        let (h, w) = (self.height, self.width);
        image::RgbImage::from_fn(w as u32, h as u32, |x, y| {
            let px = |c| (self.get(c, y as usize, x as usize) * 255.0).round() as u8;
            image::Rgb([px(0), px(1), px(2)])
        })
    }

    pub fn from_rgb8(img: &image::RgbImage) -> Self {
        let (w, h) = (img.width() as usize, img.height() as usize);
        let mut data = vec![0.0; CHANNELS * h * w];
        for (x, y, px) in img.enumerate_pixels() {
            for c in 0..CHANNELS {
                data[(c * h + y as usize) * w + x as usize] = px.0[c] as f64 / 255.0;
            }
        }
        Self {
            height: h,
            width: w,
            data,
        }
    }

    /// Decodes a PNG or JPEG file to RGB in `[0, 1]` (8-bit value / 255).
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let decoded = image::load_from_memory(&bytes).map_err(|e| Error::Ingest {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let img = Self::from_rgb8(&decoded.to_rgb8());
        if img.height == 0 || img.width == 0 {
            return Err(Error::Ingest {
                path: path.to_path_buf(),
                reason: "empty image".into(),
            });
        }
        Ok(img)
    }

    /// Writes an 8-bit image; the format follows the file extension.
    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_rgb8()
            .save(path)
            .map_err(|e| Error::Codec(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_range_and_shape() {
        assert!(Image::new(1, 1, vec![0.0, 0.5, 1.0]).is_ok());
        assert!(Image::new(1, 1, vec![0.0, 0.5, 1.1]).is_err());
        assert!(Image::new(1, 2, vec![0.0; 3]).is_err());
        assert!(Image::new(0, 2, vec![]).is_err());
    }

    #[test]
    fn channel_major_layout() {
        let img = Image::from_fn(2, 3, |c, y, x| (c * 100 + y * 10 + x) as f64 / 1000.0).unwrap();
        assert_eq!(img.get(1, 1, 2), 0.112);
        assert_eq!(img.as_slice()[6 + 3 + 2], 0.112);
    }

    #[test]
    fn png_round_trip_is_exact_on_8bit_values() {
        let img = Image::from_fn(4, 5, |c, y, x| ((c * 37 + y * 11 + x * 3) % 256) as f64 / 255.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.png");
        img.save(&path).unwrap();
        assert_eq!(Image::load(&path).unwrap(), img);
    }
}
