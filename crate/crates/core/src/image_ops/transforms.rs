//! Photometric and filtering kernels. Every function clamps its output
//! into `[0, 1]`.

use super::{Image, CHANNELS};
use crate::error::{Error, Result};

fn map_values(x: &Image, f: impl Fn(f64) -> f64) -> Result<Image> {
    let data = x.as_slice().iter().map(|&g| f(g)).collect();
    Image::from_clamped(x.height(), x.width(), data)
}

pub fn brightness(x: &Image, factor: f64) -> Result<Image> {
    map_values(x, |g| factor * g)
}

pub fn gamma(x: &Image, gamma: f64) -> Result<Image> {
    map_values(x, |g| g.powf(gamma))
}

/// Blends every value toward the mean luma of the whole image.
pub fn contrast(x: &Image, factor: f64) -> Result<Image> {
    let luma = x.luma();
    let mean = luma.iter().sum::<f64>() / luma.len() as f64;
    map_values(x, |g| mean + factor * (g - mean))
}

/// Blends each pixel toward its own luma.
pub fn saturation(x: &Image, factor: f64) -> Result<Image> {
    let luma = x.luma();
    let plane = x.height() * x.width();
    let data = x
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let gray = luma[i % plane];
            gray + factor * (g - gray)
        })
        .collect();
    Image::from_clamped(x.height(), x.width(), data)
}

pub fn rgb_to_hsv(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        ((g - b) / delta).rem_euclid(6.0) / 6.0
    } else if max == g {
        ((b - r) / delta + 2.0) / 6.0
    } else {
        ((r - g) / delta + 4.0) / 6.0
    };
    (h, s, v)
}

pub fn hsv_to_rgb(h: f64, s: f64, v: f64) -> (f64, f64, f64) {
    let h6 = h.rem_euclid(1.0) * 6.0;
    let sector = h6.floor();
    let f = h6 - sector;
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    match sector as u32 % 6 {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    }
}

/// Rotates hue by `shift` turns; hue wraps modulo 1.
pub fn hue(x: &Image, shift: f64) -> Result<Image> {
    let plane = x.height() * x.width();
    let (r, g, b) = (x.plane(0), x.plane(1), x.plane(2));
    let mut data = vec![0.0; CHANNELS * plane];
    for i in 0..plane {
        let (h, s, v) = rgb_to_hsv(r[i], g[i], b[i]);
        let (nr, ng, nb) = hsv_to_rgb((h + shift).rem_euclid(1.0), s, v);
        data[i] = nr;
        data[plane + i] = ng;
        data[2 * plane + i] = nb;
    }
    Image::from_clamped(x.height(), x.width(), data)
}

/// `gain · log2(1 + g)`, blended with the input by `strength`.
pub fn log_correction(x: &Image, gain: f64, strength: f64) -> Result<Image> {
    map_values(x, |g| {
        let t = (gain * (1.0 + g).log2()).clamp(0.0, 1.0);
        g + strength * (t - g)
    })
}

/// `1 / (1 + exp(gain · (cutoff − g)))`, blended with the input by `strength`.
pub fn sigmoid_correction(x: &Image, cutoff: f64, gain: f64, strength: f64) -> Result<Image> {
    map_values(x, |g| {
        let t = 1.0 / (1.0 + (gain * (cutoff - g)).exp());
        g + strength * (t - g)
    })
}

fn reflect(i: isize, len: usize) -> usize {
    let n = len as isize;
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - m }) as usize
}

/// Separable Gaussian blur with reflect padding. `sigma == 0` is the identity.
pub fn gaussian_blur(x: &Image, kernel_size: usize, sigma: f64) -> Result<Image> {
    if kernel_size % 2 == 0 {
        return Err(Error::InvalidSpec(format!(
            "blur kernel size must be odd, got {kernel_size}"
        )));
    }
    if sigma == 0.0 || kernel_size == 1 {
        return Ok(x.clone());
    }
    let half = (kernel_size / 2) as isize;
    let raw: Vec<f64> = (-half..=half)
        .map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    let kernel: Vec<f64> = raw.iter().map(|v| v / total).collect();

    let (h, w) = x.dims();
    let mut out = Vec::with_capacity(x.len());
    let mut tmp = vec![0.0; h * w];
    for c in 0..CHANNELS {
        let plane = x.plane(c);
        for y in 0..h {
            for xx in 0..w {
                tmp[y * w + xx] = kernel
                    .iter()
                    .enumerate()
                    .map(|(i, k)| k * plane[y * w + reflect(xx as isize + i as isize - half, w)])
                    .sum();
            }
        }
        for y in 0..h {
            for xx in 0..w {
                out.push(
                    kernel
                        .iter()
                        .enumerate()
                        .map(|(i, k)| k * tmp[reflect(y as isize + i as isize - half, h) * w + xx])
                        .sum(),
                );
            }
        }
    }
    Image::from_clamped(h, w, out)
}

/// Blends between a smoothed copy (`factor = 0`) and the input (`factor = 1`).
///
/// The smoothing kernel is `[[1,1,1],[1,5,1],[1,1,1]] / 13`; border pixels
/// are left unsmoothed.
pub fn sharpness(x: &Image, factor: f64) -> Result<Image> {
    let (h, w) = x.dims();
    let mut out = Vec::with_capacity(x.len());
    for c in 0..CHANNELS {
        let plane = x.plane(c);
        for y in 0..h {
            for xx in 0..w {
                let g = plane[y * w + xx];
                let smooth = if y == 0 || xx == 0 || y + 1 == h || xx + 1 == w {
                    g
                } else {
                    let mut acc = 0.0;
                    for dy in 0..3 {
                        for dx in 0..3 {
                            let weight = if dy == 1 && dx == 1 { 5.0 } else { 1.0 };
                            acc += weight * plane[(y + dy - 1) * w + xx + dx - 1];
                        }
                    }
                    acc / 13.0
                };
                out.push(smooth + factor * (g - smooth));
            }
        }
    }
    Image::from_clamped(h, w, out)
}
