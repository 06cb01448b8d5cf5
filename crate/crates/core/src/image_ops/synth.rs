//! Procedural test images.
//!
//! `natural_scene` mimics the statistics that matter for frame geometry in
//! photographs: smooth illumination gradients, occluding shapes with sharp
//! edges, and a roughly 1/f texture spectrum. `gaussian_blobs` is smooth
//! everywhere, which is what the rotation-span check needs.

use rand::Rng;

use super::Image;
use crate::error::Result;
use crate::seed::rng_for;

/// Sum of colored Gaussian bumps on a mid-gray background.
pub fn gaussian_blobs(height: usize, width: usize, count: usize, seed: u64) -> Result<Image> {
    let mut rng = rng_for(seed, "synth_blobs", 0);
    let side = height.min(width) as f64;
    let blobs: Vec<([f64; 2], f64, [f64; 3])> = (0..count)
        .map(|_| {
            let center = [
                rng.random_range(0.2..0.8) * width as f64,
                rng.random_range(0.2..0.8) * height as f64,
            ];
            let sigma = rng.random_range(0.12..0.25) * side;
            let amp = [
                rng.random_range(-0.25..0.25),
                rng.random_range(-0.25..0.25),
                rng.random_range(-0.25..0.25),
            ];
            (center, sigma, amp)
        })
        .collect();
    Image::from_fn(height, width, |c, y, x| {
        let mut v = 0.5;
        for (center, sigma, amp) in &blobs {
            let (dx, dy) = (x as f64 - center[0], y as f64 - center[1]);
            v += amp[c] * (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
        }
        v
    })
}

/// Multi-octave value noise with amplitude halving per octave.
fn value_noise(height: usize, width: usize, octaves: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut out = vec![0.0; height * width];
    let mut amplitude = 1.0;
    let mut cells = 4usize;
    for _ in 0..octaves {
        let grid: Vec<f64> = (0..(cells + 1) * (cells + 1))
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        for y in 0..height {
            let gy = y as f64 / height as f64 * cells as f64;
            let (iy, ty) = (gy.floor() as usize, gy.fract());
            let sy = ty * ty * (3.0 - 2.0 * ty);
            for x in 0..width {
                let gx = x as f64 / width as f64 * cells as f64;
                let (ix, tx) = (gx.floor() as usize, gx.fract());
                let sx = tx * tx * (3.0 - 2.0 * tx);
                let at = |yy: usize, xx: usize| grid[yy * (cells + 1) + xx];
                let top = at(iy, ix) + sx * (at(iy, ix + 1) - at(iy, ix));
                let bottom = at(iy + 1, ix) + sx * (at(iy + 1, ix + 1) - at(iy + 1, ix));
                out[y * width + x] += amplitude * (top + sy * (bottom - top));
            }
        }
        amplitude *= 0.5;
        cells *= 2;
    }
    out
}

/// Photograph-like scene: sky/ground gradient, textured surfaces and a few
/// hard-edged objects.
pub fn natural_scene(height: usize, width: usize, seed: u64) -> Result<Image> {
    let mut rng = rng_for(seed, "synth_scene", 0);
    let horizon = rng.random_range(0.3..0.6) * height as f64;
    let sky = [
        rng.random_range(0.4..0.7),
        rng.random_range(0.5..0.8),
        rng.random_range(0.7..0.95),
    ];
    let ground = [
        rng.random_range(0.2..0.5),
        rng.random_range(0.25..0.55),
        rng.random_range(0.1..0.3),
    ];
    let texture: Vec<Vec<f64>> = (0..3).map(|_| value_noise(height, width, 6, &mut rng)).collect();
    let shared = value_noise(height, width, 6, &mut rng);

    struct Shape {
        cx: f64,
        cy: f64,
        rx: f64,
        ry: f64,
        ellipse: bool,
        color: [f64; 3],
    }
    let shapes: Vec<Shape> = (0..rng.random_range(3..7))
        .map(|_| Shape {
            cx: rng.random_range(0.0..1.0) * width as f64,
            cy: rng.random_range(0.2..1.0) * height as f64,
            rx: rng.random_range(0.05..0.2) * width as f64,
            ry: rng.random_range(0.05..0.25) * height as f64,
            ellipse: rng.random_bool(0.5),
            color: [
                rng.random_range(0.05..0.95),
                rng.random_range(0.05..0.95),
                rng.random_range(0.05..0.95),
            ],
        })
        .collect();

    Image::from_fn(height, width, |c, y, x| {
        let (fy, fx) = (y as f64, x as f64);
        let i = y * width + x;
        let mut v = if fy < horizon {
            sky[c] * (0.8 + 0.2 * fy / horizon)
        } else {
            ground[c] * (1.0 + 0.3 * (fy - horizon) / (height as f64 - horizon))
        };
        v += 0.08 * shared[i] + 0.04 * texture[c][i];
        for s in &shapes {
            let (dx, dy) = ((fx - s.cx) / s.rx, (fy - s.cy) / s.ry);
            let inside = if s.ellipse {
                dx * dx + dy * dy <= 1.0
            } else {
                dx.abs() <= 1.0 && dy.abs() <= 1.0
            };
            if inside {
                // Soft shading across the object plus its own texture.
                v = s.color[c] * (0.85 + 0.15 * dx) + 0.06 * texture[(c + 1) % 3][i];
            }
        }
        v
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_seed_dependent() {
        let a = natural_scene(40, 50, 1).unwrap();
        assert_eq!(a, natural_scene(40, 50, 1).unwrap());
        assert_ne!(a, natural_scene(40, 50, 2).unwrap());
        let b = gaussian_blobs(30, 30, 4, 9).unwrap();
        assert_eq!(b, gaussian_blobs(30, 30, 4, 9).unwrap());
    }

    #[test]
    fn scene_is_not_flat() {
        let img = natural_scene(64, 64, 3).unwrap();
        let mean = img.as_slice().iter().sum::<f64>() / img.len() as f64;
        let var = img.as_slice().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / img.len() as f64;
        assert!(var > 1e-3);
    }
}
