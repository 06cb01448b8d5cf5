//! Rotations about different centers differ by a translation, so to first
//! order their tangents span at most three directions: one rotation and two
//! translations.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image_ops::{resolve_border, rotate_with_border, BorderCrop, Image, Interpolation, RotationParams};
use crate::linalg::{singular_values, Matrix, SingularSpectrum};

#[derive(Clone, Debug, PartialEq)]
pub struct RotationSpan {
    pub spectrum: SingularSpectrum,
    /// The tangents vanish up to resampling round-off, e.g. on a constant
    /// image.
    pub degenerate: bool,
    /// Shared border in upscaled pixels.
    pub border: usize,
}

/// `count` centers evenly spaced on a circle of `radius` original pixels
/// around the image center, starting on the positive x axis.
pub fn ring_centers(count: usize, radius: f64) -> Vec<(f64, f64)> {
    (0..count)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / count as f64;
            (radius * t.cos(), radius * t.sin())
        })
        .collect()
}

/// Singular values of the tangents `rotate(θ, c) − rotate(0, c)` for each
/// center `c` (original pixels relative to the image center).
///
/// All rotations share the largest minimal border, so the zero-angle
/// reference is the same crop for every center and the tangents carry no
/// crop-zoom component.
pub fn rotation_span_spectrum(
    x: &Image,
    centers: &[(f64, f64)],
    degrees: f64,
    upscale: u32,
) -> Result<RotationSpan> {
    if centers.len() < 2 {
        return Err(Error::InvalidInput("need at least two rotation centers".into()));
    }
    let params = |center| RotationParams {
        degrees,
        center,
        upscale,
        border: BorderCrop::Auto,
        interp: Interpolation::Bilinear,
    };
    let mut border = 0;
    for &c in centers {
        border = border.max(resolve_border(x.height(), x.width(), &params(c))?);
    }
    let reference = rotate_with_border(
        x,
        &RotationParams {
            degrees: 0.0,
            ..params((0.0, 0.0))
        },
        border,
    )?;
    let tangents: Vec<Vec<f64>> = centers
        .par_iter()
        .map(|&c| {
            let rotated = rotate_with_border(x, &params(c), border)?;
            Ok(rotated
                .as_slice()
                .iter()
                .zip(reference.as_slice())
                .map(|(a, b)| a - b)
                .collect())
        })
        .collect::<Result<_>>()?;
    let m = Matrix::from_columns(&tangents)?;
    let spectrum = singular_values(&m);
    let scale = reference.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(RotationSpan {
        degenerate: spectrum.largest() <= 1e-9 * scale.max(1.0),
        spectrum,
        border,
    })
}
