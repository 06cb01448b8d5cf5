use serde::{Deserialize, Serialize};

use super::{Image, CHANNELS};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    Bilinear,
    Nearest,
    Bicubic,
}

impl Interpolation {
    pub const ALL: [Interpolation; 3] = [
        Interpolation::Bilinear,
        Interpolation::Nearest,
        Interpolation::Bicubic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Interpolation::Bilinear => "bilinear",
            Interpolation::Nearest => "nearest",
            Interpolation::Bicubic => "bicubic",
        }
    }
}

impl std::fmt::Display for Interpolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Interpolation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bilinear" => Ok(Interpolation::Bilinear),
            "nearest" => Ok(Interpolation::Nearest),
            "bicubic" => Ok(Interpolation::Bicubic),
            other => Err(Error::InvalidSpec(format!(
                "unknown interpolation {other:?}"
            ))),
        }
    }
}

/// Keys cubic convolution kernel with `a = -0.5`.
fn cubic_weight(t: f64) -> f64 {
    const A: f64 = -0.5;
    let t = t.abs();
    if t <= 1.0 {
        ((A + 2.0) * t - (A + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((A * t - 5.0 * A) * t + 8.0 * A) * t - 4.0 * A
    } else {
        0.0
    }
}

/// Source taps `(index, weight)` for sampling a 1-D signal of length `len`
/// at fractional position `pos`. Indices are clamped to the valid range.
pub(crate) fn taps(pos: f64, len: usize, interp: Interpolation) -> Vec<(usize, f64)> {
    let last = len as isize - 1;
    let clamp = |i: isize| i.clamp(0, last) as usize;
    match interp {
        Interpolation::Nearest => vec![(clamp((pos + 0.5).floor() as isize), 1.0)],
        Interpolation::Bilinear => {
            if len == 1 {
                return vec![(0, 1.0)];
            }
            let i0 = (pos.floor() as isize).clamp(0, last - 1);
            let t = pos - i0 as f64;
            vec![(i0 as usize, 1.0 - t), (i0 as usize + 1, t)]
        }
        Interpolation::Bicubic => {
            let i0 = pos.floor() as isize;
            let t = pos - i0 as f64;
            (-1..=2)
                .map(|d| (clamp(i0 + d), cubic_weight(t - d as f64)))
                .collect()
        }
    }
}

/// Sample position in the source for output index `d`.
///
/// Bilinear and bicubic align the corner pixel centers, which keeps every
/// sample inside the source and makes bilinear exact on affine ramps.
/// Nearest takes `floor(d · in / out)`, the asymmetric rule of common
/// tensor libraries; integer upscales replicate blocks and a one-pixel crop
/// at ×4 still moves samples.
fn source_position(d: usize, in_len: usize, out_len: usize, interp: Interpolation) -> f64 {
    match interp {
        Interpolation::Nearest => {
            ((d * in_len / out_len) as f64).min((in_len - 1) as f64)
        }
        _ => {
            if out_len == 1 {
                (in_len - 1) as f64 / 2.0
            } else {
                d as f64 * (in_len - 1) as f64 / (out_len - 1) as f64
            }
        }
    }
}

fn axis_taps(in_len: usize, out_len: usize, interp: Interpolation) -> Vec<Vec<(usize, f64)>> {
    (0..out_len)
        .map(|d| {
            let pos = source_position(d, in_len, out_len, interp);
            match interp {
                // `pos` is already the source index.
                Interpolation::Nearest => vec![(pos as usize, 1.0)],
                _ => taps(pos, in_len, interp),
            }
        })
        .collect()
}

/// Separable resize, horizontal pass first. Output is clamped to `[0, 1]`
/// (bicubic can overshoot).
pub fn resize(x: &Image, height: usize, width: usize, interp: Interpolation) -> Result<Image> {
    if height == 0 || width == 0 {
        return Err(Error::InvalidInput(format!(
            "resize target must be positive, got {height}x{width}"
        )));
    }
    let (h, w) = x.dims();
    if (h, w) == (height, width) {
        return Ok(x.clone());
    }
    let col_taps = axis_taps(w, width, interp);
    let row_taps = axis_taps(h, height, interp);
    let mut out = Vec::with_capacity(CHANNELS * height * width);
    let mut tmp = vec![0.0; h * width];
    for c in 0..CHANNELS {
        let plane = x.plane(c);
        for y in 0..h {
            let row = &plane[y * w..(y + 1) * w];
            for (xo, t) in col_taps.iter().enumerate() {
                tmp[y * width + xo] = t.iter().map(|&(i, wt)| wt * row[i]).sum();
            }
        }
        for t in &row_taps {
            for xo in 0..width {
                out.push(t.iter().map(|&(i, wt)| wt * tmp[i * width + xo]).sum());
            }
        }
    }
    Image::from_clamped(height, width, out)
}

/// Samples one channel plane at fractional coordinates `(sx, sy)`.
pub(crate) fn sample_plane(
    plane: &[f64],
    height: usize,
    width: usize,
    sx: f64,
    sy: f64,
    interp: Interpolation,
) -> f64 {
    let xs = taps(sx, width, interp);
    let ys = taps(sy, height, interp);
    ys.iter()
        .map(|&(yi, wy)| {
            wy * xs
                .iter()
                .map(|&(xi, wx)| wx * plane[yi * width + xi])
                .sum::<f64>()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(h: usize, w: usize) -> Image {
        Image::from_fn(h, w, |c, y, x| {
            0.1 + 0.3 * x as f64 / (w - 1) as f64 + 0.2 * y as f64 / (h - 1) as f64 + 0.1 * c as f64
        })
        .unwrap()
    }

    #[test]
    fn identical_dims_are_bit_identical() {
        let img = ramp(7, 9);
        for interp in Interpolation::ALL {
            assert_eq!(resize(&img, 7, 9, interp).unwrap(), img);
        }
    }

    #[test]
    fn nearest_upscale_replicates_blocks() {
        let board = Image::from_fn(2, 2, |_, y, x| ((x + y) % 2) as f64).unwrap();
        let up = resize(&board, 4, 4, Interpolation::Nearest).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                assert_eq!(up.get(0, y, x), ((x / 2 + y / 2) % 2) as f64);
            }
        }
    }

    #[test]
    fn bilinear_round_trip_on_ramp_is_exact() {
        let img = ramp(224, 224);
        let small = resize(&img, 202, 202, Interpolation::Bilinear).unwrap();
        let back = resize(&small, 224, 224, Interpolation::Bilinear).unwrap();
        assert!(back.max_abs_diff(&img) <= 1e-6, "{}", back.max_abs_diff(&img));
    }

    #[test]
    fn bicubic_reproduces_constants() {
        let img = Image::filled(10, 12, [0.25, 0.5, 0.75]).unwrap();
        let out = resize(&img, 17, 5, Interpolation::Bicubic).unwrap();
        for c in 0..3 {
            for v in out.plane(c) {
                assert!((v - img.get(c, 0, 0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sampling_at_integer_points_returns_pixels() {
        let img = ramp(5, 6);
        for interp in Interpolation::ALL {
            let v = sample_plane(img.plane(1), 5, 6, 3.0, 2.0, interp);
            assert!((v - img.get(1, 2, 3)).abs() < 1e-15, "{interp}");
        }
    }
}
