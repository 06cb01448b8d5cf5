use serde::{Deserialize, Serialize};

use super::resize::sample_plane;
use super::{resize, Image, Interpolation, CHANNELS};
use crate::error::{Error, Result};

/// Smallest side accepted by the crop and rotation pipelines.
pub const MIN_GEOMETRIC_SIDE: usize = 32;

/// Border removed after rotating the upscaled image.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BorderCrop {
    /// Smallest whole number of upscaled pixels that leaves no padding.
    Auto,
    /// Pixels at the original resolution, so the upscaled crop is
    /// `pixels · upscale`.
    Pixels(u32),
}

/// Parameters of the upscale, rotate, crop, downscale pipeline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationParams {
    pub degrees: f64,
    /// Rotation center in original pixels, relative to the image center,
    /// `x` to the right and `y` down.
    pub center: (f64, f64),
    pub upscale: u32,
    pub border: BorderCrop,
    pub interp: Interpolation,
}

impl RotationParams {
    /// Rotation row of the augmentation table: ×4, 2°, minimal crop.
    pub fn table(center: (f64, f64), interp: Interpolation) -> Self {
        Self {
            degrees: 2.0,
            center,
            upscale: 4,
            border: BorderCrop::Auto,
            interp,
        }
    }

    /// Edge-handling recipe: ×8, 5° about the image center, 20 px crop.
    pub fn edge_recipe() -> Self {
        Self {
            degrees: 5.0,
            center: (0.0, 0.0),
            upscale: 8,
            border: BorderCrop::Pixels(20),
            interp: Interpolation::Bilinear,
        }
    }
}

fn check_geometric_side(x: &Image) -> Result<()> {
    let (h, w) = x.dims();
    if h < MIN_GEOMETRIC_SIDE || w < MIN_GEOMETRIC_SIDE {
        return Err(Error::InvalidSpec(format!(
            "crop and rotation need sides >= {MIN_GEOMETRIC_SIDE}px, image is {h}x{w}"
        )));
    }
    Ok(())
}

/// Removes `border` pixels from every side.
pub fn crop_border(x: &Image, border: usize) -> Result<Image> {
    let (h, w) = x.dims();
    if 2 * border >= h || 2 * border >= w {
        return Err(Error::InvalidSpec(format!(
            "crop of {border}px per side would remove the whole {h}x{w} image"
        )));
    }
    crop_rect(x, border, border, h - 2 * border, w - 2 * border)
}

/// The `height × width` window whose top-left pixel is `(top, left)`.
pub fn crop_rect(x: &Image, top: usize, left: usize, height: usize, width: usize) -> Result<Image> {
    let (h, w) = x.dims();
    if height == 0 || width == 0 || top + height > h || left + width > w {
        return Err(Error::InvalidSpec(format!(
            "window {height}x{width} at ({top}, {left}) does not fit a {h}x{w} image"
        )));
    }
    let mut data = Vec::with_capacity(CHANNELS * height * width);
    for c in 0..CHANNELS {
        let plane = x.plane(c);
        for y in top..top + height {
            data.extend_from_slice(&plane[y * w + left..y * w + left + width]);
        }
    }
    Image::new(height, width, data)
}

/// Upscale by `upscale`, remove `border` upscaled pixels per side, resize back.
pub fn crop_resize(x: &Image, upscale: u32, border: u32, interp: Interpolation) -> Result<Image> {
    check_geometric_side(x)?;
    let (h, w) = x.dims();
    let up = resize(x, h * upscale as usize, w * upscale as usize, interp)?;
    let cropped = crop_border(&up, border as usize)?;
    resize(&cropped, h, w, interp)
}

/// Resize by `ratio` and back to the original size.
pub fn downscale(x: &Image, ratio: f64, interp: Interpolation) -> Result<Image> {
    let (h, w) = x.dims();
    let sh = ((h as f64 * ratio).round() as usize).max(1);
    let sw = ((w as f64 * ratio).round() as usize).max(1);
    let small = resize(x, sh, sw, interp)?;
    resize(&small, h, w, interp)
}

struct Rotation {
    cos: f64,
    sin: f64,
    cx: f64,
    cy: f64,
}

impl Rotation {
    fn new(degrees: f64, cx: f64, cy: f64) -> Self {
        let rad = degrees.to_radians();
        Self {
            cos: rad.cos(),
            sin: rad.sin(),
            cx,
            cy,
        }
    }

    /// Source coordinates sampled by output pixel `(x, y)`; positive angles
    /// turn the content counter-clockwise on screen.
    #[inline]
    fn source(&self, x: f64, y: f64) -> (f64, f64) {
        let (dx, dy) = (x - self.cx, y - self.cy);
        (
            self.cx + self.cos * dx - self.sin * dy,
            self.cy + self.sin * dx + self.cos * dy,
        )
    }
}

fn crop_is_padding_free(rot: &Rotation, h: usize, w: usize, border: usize) -> bool {
    let (lo, hi_x, hi_y) = (border as f64, (w - 1 - border) as f64, (h - 1 - border) as f64);
    let eps = 1e-9;
    // The source region is convex, so checking the crop corners suffices.
    [(lo, lo), (hi_x, lo), (lo, hi_y), (hi_x, hi_y)]
        .iter()
        .all(|&(x, y)| {
            let (sx, sy) = rot.source(x, y);
            sx >= -eps && sy >= -eps && sx <= (w - 1) as f64 + eps && sy <= (h - 1) as f64 + eps
        })
}

/// Smallest border (in upscaled pixels) that removes all padding, or `None`
/// if no border short of the full image works.
pub fn minimal_border(height: usize, width: usize, params: &RotationParams) -> Option<usize> {
    let up = params.upscale as usize;
    let (h, w) = (height * up, width * up);
    let rot = upscaled_rotation(h, w, params);
    (0..h.min(w).div_ceil(2)).find(|&b| crop_is_padding_free(&rot, h, w, b))
}

fn upscaled_rotation(h: usize, w: usize, params: &RotationParams) -> Rotation {
    let up = params.upscale as f64;
    let cx = (w as f64 - 1.0) / 2.0 + params.center.0 * up;
    let cy = (h as f64 - 1.0) / 2.0 + params.center.1 * up;
    Rotation::new(params.degrees, cx, cy)
}

/// Border in upscaled pixels after validating that it removes all padding.
pub fn resolve_border(height: usize, width: usize, params: &RotationParams) -> Result<usize> {
    let up = params.upscale as usize;
    let (h, w) = (height * up, width * up);
    let border = match params.border {
        BorderCrop::Auto => minimal_border(height, width, params).ok_or_else(|| {
            Error::InvalidSpec(format!(
                "no crop removes the padding of a {}° rotation about {:?}",
                params.degrees, params.center
            ))
        })?,
        BorderCrop::Pixels(p) => p as usize * up,
    };
    if 2 * border >= h || 2 * border >= w {
        return Err(Error::InvalidSpec(format!(
            "crop of {border}px per side would remove the whole {h}x{w} upscaled image"
        )));
    }
    let rot = upscaled_rotation(h, w, params);
    if !crop_is_padding_free(&rot, h, w, border) {
        return Err(Error::InvalidSpec(format!(
            "crop of {border} upscaled px leaves padding after a {}° rotation about {:?}",
            params.degrees, params.center
        )));
    }
    Ok(border)
}

/// Upscale, rotate about `center`, crop the border, resize back.
///
/// The crop is validated to remove every sample that would fall outside the
/// upscaled source, so no padding survives.
pub fn edge_safe_rotate(x: &Image, params: &RotationParams) -> Result<Image> {
    check_geometric_side(x)?;
    if !(params.degrees.abs() < 45.0) {
        return Err(Error::InvalidSpec(format!(
            "rotation angle must satisfy |deg| < 45, got {}",
            params.degrees
        )));
    }
    if params.upscale == 0 {
        return Err(Error::InvalidSpec("upscale must be >= 1".into()));
    }
    let border = resolve_border(x.height(), x.width(), params)?;
    rotate_with_border(x, params, border)
}

/// Same pipeline as [`edge_safe_rotate`] with an explicit, pre-validated
/// border in upscaled pixels.
pub(crate) fn rotate_with_border(x: &Image, params: &RotationParams, border: usize) -> Result<Image> {
    let (height, width) = x.dims();
    let up = params.upscale as usize;
    let (h, w) = (height * up, width * up);
    let upscaled = resize(x, h, w, params.interp)?;
    let rot = upscaled_rotation(h, w, params);
    let (nh, nw) = (h - 2 * border, w - 2 * border);
    let mut data = Vec::with_capacity(CHANNELS * nh * nw);
    for c in 0..CHANNELS {
        let plane = upscaled.plane(c);
        for y in border..h - border {
            for xx in border..w - border {
                let (sx, sy) = rot.source(xx as f64, y as f64);
                data.push(sample_plane(plane, h, w, sx, sy, params.interp));
            }
        }
    }
    let rotated = Image::from_clamped(nh, nw, data)?;
    resize(&rotated, height, width, params.interp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob(side: usize) -> Image {
        Image::from_fn(side, side, |c, y, x| {
            let (dx, dy) = (x as f64 - side as f64 * 0.4, y as f64 - side as f64 * 0.55);
            0.2 + 0.6 * (-(dx * dx + dy * dy) / (2.0 * 9.0f64.powi(2))).exp() + 0.05 * c as f64
        })
        .unwrap()
    }

    #[test]
    fn zero_angle_is_pure_resampling() {
        let img = blob(40);
        let params = RotationParams {
            degrees: 0.0,
            center: (5.0, -3.0),
            upscale: 4,
            border: BorderCrop::Pixels(1),
            interp: Interpolation::Bilinear,
        };
        let rotated = edge_safe_rotate(&img, &params).unwrap();
        let up = resize(&img, 160, 160, Interpolation::Bilinear).unwrap();
        let chain = resize(&crop_border(&up, 4).unwrap(), 40, 40, Interpolation::Bilinear).unwrap();
        assert_eq!(rotated, chain);
    }

    #[test]
    fn minimal_border_grows_with_offset_center() {
        let centered = minimal_border(224, 224, &RotationParams::table((0.0, 0.0), Interpolation::Bilinear)).unwrap();
        let offset = minimal_border(224, 224, &RotationParams::table((50.0, 50.0), Interpolation::Bilinear)).unwrap();
        assert!(centered > 0);
        assert!(offset > centered);
        // The bound for a centered rotation is the half-diagonal swept by 2°.
        let half_diag = 895.0 / 2.0 * 2f64.sqrt();
        assert!(centered as f64 <= (half_diag * 2f64.to_radians().sin()).ceil() + 1.0);
    }

    #[test]
    fn insufficient_explicit_border_rejected() {
        let img = blob(64);
        let params = RotationParams {
            degrees: 10.0,
            center: (0.0, 0.0),
            upscale: 2,
            border: BorderCrop::Pixels(0),
            interp: Interpolation::Bilinear,
        };
        assert!(matches!(edge_safe_rotate(&img, &params), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn whole_image_crop_rejected() {
        let img = blob(32);
        assert!(crop_border(&img, 16).is_err());
        assert!(crop_resize(&img, 1, 16, Interpolation::Nearest).is_err());
    }

    #[test]
    fn small_images_rejected() {
        let img = Image::filled(16, 40, [0.5; 3]).unwrap();
        assert!(edge_safe_rotate(&img, &RotationParams::table((0.0, 0.0), Interpolation::Bilinear)).is_err());
    }

    #[test]
    fn large_angles_rejected() {
        let img = blob(40);
        let mut params = RotationParams::table((0.0, 0.0), Interpolation::Bilinear);
        params.degrees = 45.0;
        assert!(edge_safe_rotate(&img, &params).is_err());
    }
}
