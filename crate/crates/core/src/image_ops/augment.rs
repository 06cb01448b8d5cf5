//! One-parameter image augmentations `f(t, x)` with an identity value `t₀`
//! such that `f(t₀, x) = x`.

use serde::{Deserialize, Serialize};

use super::geometry::{crop_resize, downscale, edge_safe_rotate, BorderCrop, RotationParams};
use super::jpeg::jpeg_round_trip;
use super::transforms;
use super::{Image, Interpolation};
use crate::error::{Error, Result};

fn default_quality() -> u8 {
    70
}
fn default_brightness() -> f64 {
    1.02
}
fn default_contrast() -> f64 {
    1.05
}
fn default_gamma() -> f64 {
    1.02
}
fn default_hue() -> f64 {
    0.01
}
fn default_saturation() -> f64 {
    1.1
}
fn default_sharpness() -> f64 {
    1.2
}
fn default_upscale() -> u32 {
    4
}
fn default_crop_border() -> u32 {
    1
}
fn default_ratio() -> f64 {
    0.9
}
fn default_degrees() -> f64 {
    2.0
}
fn default_border() -> BorderCrop {
    BorderCrop::Auto
}
fn default_kernel() -> usize {
    3
}
fn default_sigma() -> f64 {
    2.0
}
fn default_log_gain() -> f64 {
    1.05
}
fn default_cutoff() -> f64 {
    0.5
}
fn default_sigmoid_gain() -> f64 {
    5.0
}
fn one() -> f64 {
    1.0
}
fn bilinear() -> Interpolation {
    Interpolation::Bilinear
}

/// An augmentation kind together with its parameters.
///
/// Omitted fields take the defaults of the standard 19-direction frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Augmentation {
    Jpeg {
        #[serde(default = "default_quality")]
        quality: u8,
    },
    Brightness {
        #[serde(default = "default_brightness")]
        factor: f64,
    },
    /// Upscale, remove `border` upscaled pixels per side, resize back.
    CropResize {
        #[serde(default = "default_upscale")]
        upscale: u32,
        #[serde(default = "default_crop_border")]
        border: u32,
        #[serde(default = "bilinear")]
        interp: Interpolation,
    },
    Contrast {
        #[serde(default = "default_contrast")]
        factor: f64,
    },
    Gamma {
        #[serde(default = "default_gamma")]
        gamma: f64,
    },
    /// Hue rotation in turns.
    Hue {
        #[serde(default = "default_hue")]
        shift: f64,
    },
    Saturation {
        #[serde(default = "default_saturation")]
        factor: f64,
    },
    Sharpness {
        #[serde(default = "default_sharpness")]
        factor: f64,
    },
    Downscale {
        #[serde(default = "default_ratio")]
        ratio: f64,
        #[serde(default = "bilinear")]
        interp: Interpolation,
    },
    RotateTranslate {
        #[serde(default = "default_degrees")]
        degrees: f64,
        #[serde(default)]
        center: (f64, f64),
        #[serde(default = "default_upscale")]
        upscale: u32,
        #[serde(default = "default_border")]
        border: BorderCrop,
        #[serde(default = "bilinear")]
        interp: Interpolation,
    },
    GaussianBlur {
        #[serde(default = "default_kernel")]
        kernel_size: usize,
        #[serde(default = "default_sigma")]
        sigma: f64,
    },
    /// `gain · log2(1 + g)`; `strength` blends from the input (0) to the
    /// full correction (1) and is the identity-bearing parameter.
    LogCorrection {
        #[serde(default = "default_log_gain")]
        gain: f64,
        #[serde(default = "one")]
        strength: f64,
    },
    /// `1 / (1 + exp(gain · (cutoff − g)))`, blended by `strength`.
    SigmoidCorrection {
        #[serde(default = "default_cutoff")]
        cutoff: f64,
        #[serde(default = "default_sigmoid_gain")]
        gain: f64,
        #[serde(default = "one")]
        strength: f64,
    },
}

/// An augmentation with a display label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentationSpec {
    #[serde(flatten)]
    pub augmentation: Augmentation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl From<Augmentation> for AugmentationSpec {
    fn from(augmentation: Augmentation) -> Self {
        Self {
            augmentation,
            label: None,
        }
    }
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

impl Augmentation {
    pub fn kind(&self) -> &'static str {
        match self {
            Augmentation::Jpeg { .. } => "jpeg",
            Augmentation::Brightness { .. } => "brightness",
            Augmentation::CropResize { .. } => "crop_resize",
            Augmentation::Contrast { .. } => "contrast",
            Augmentation::Gamma { .. } => "gamma",
            Augmentation::Hue { .. } => "hue",
            Augmentation::Saturation { .. } => "saturation",
            Augmentation::Sharpness { .. } => "sharpness",
            Augmentation::Downscale { .. } => "downscale",
            Augmentation::RotateTranslate { .. } => "rotate_translate",
            Augmentation::GaussianBlur { .. } => "gaussian_blur",
            Augmentation::LogCorrection { .. } => "log_correction",
            Augmentation::SigmoidCorrection { .. } => "sigmoid_correction",
        }
    }

    /// Default label, unique within the standard frame.
    pub fn default_label(&self) -> String {
        match self {
            Augmentation::Jpeg { quality } => format!("jpeg@{quality}"),
            Augmentation::Brightness { factor } => format!("brightness@{}", fmt_num(*factor)),
            Augmentation::CropResize { interp, .. } => format!("crop_resize@{interp}"),
            Augmentation::Contrast { factor } => format!("contrast@{}", fmt_num(*factor)),
            Augmentation::Gamma { gamma } => format!("gamma@{}", fmt_num(*gamma)),
            Augmentation::Hue { shift } => format!("hue@{}", fmt_num(*shift)),
            Augmentation::Saturation { factor } => format!("saturation@{}", fmt_num(*factor)),
            Augmentation::Sharpness { factor } => format!("sharpness@{}", fmt_num(*factor)),
            Augmentation::Downscale { interp, .. } => format!("downscale@{interp}"),
            Augmentation::RotateTranslate { center, .. } => {
                format!("rotate@({},{})", fmt_num(center.0), fmt_num(center.1))
            }
            Augmentation::GaussianBlur { sigma, .. } => format!("gaussian_blur@{}", fmt_num(*sigma)),
            Augmentation::LogCorrection { gain, .. } => format!("log_correction@{}", fmt_num(*gain)),
            Augmentation::SigmoidCorrection { cutoff, gain, .. } => {
                format!("sigmoid_correction@{},{}", fmt_num(*cutoff), fmt_num(*gain))
            }
        }
    }

    /// Current value of the identity-bearing parameter `t`.
    pub fn parameter(&self) -> f64 {
        match *self {
            Augmentation::Jpeg { quality } => quality as f64,
            Augmentation::Brightness { factor }
            | Augmentation::Contrast { factor }
            | Augmentation::Saturation { factor }
            | Augmentation::Sharpness { factor } => factor,
            Augmentation::CropResize { border, .. } => border as f64,
            Augmentation::Gamma { gamma } => gamma,
            Augmentation::Hue { shift } => shift,
            Augmentation::Downscale { ratio, .. } => ratio,
            Augmentation::RotateTranslate { degrees, .. } => degrees,
            Augmentation::GaussianBlur { sigma, .. } => sigma,
            Augmentation::LogCorrection { strength, .. }
            | Augmentation::SigmoidCorrection { strength, .. } => strength,
        }
    }

    /// Parameter value at which the transform is the identity.
    ///
    /// For jpeg, crop_resize and rotate_translate this is the nominal
    /// identity; resampling and quantization still perturb the image.
    pub fn identity_value(&self) -> f64 {
        match self {
            Augmentation::Jpeg { .. } => 100.0,
            Augmentation::Brightness { .. }
            | Augmentation::Contrast { .. }
            | Augmentation::Gamma { .. }
            | Augmentation::Saturation { .. }
            | Augmentation::Sharpness { .. }
            | Augmentation::Downscale { .. } => 1.0,
            Augmentation::CropResize { .. }
            | Augmentation::Hue { .. }
            | Augmentation::RotateTranslate { .. }
            | Augmentation::GaussianBlur { .. }
            | Augmentation::LogCorrection { .. }
            | Augmentation::SigmoidCorrection { .. } => 0.0,
        }
    }

    /// Whether `f(identity_value, x) == x` holds bit-exactly.
    pub fn has_exact_identity(&self) -> bool {
        !matches!(
            self,
            Augmentation::Jpeg { .. }
                | Augmentation::CropResize { .. }
                | Augmentation::RotateTranslate { .. }
        )
    }

    /// The same augmentation with its identity-bearing parameter set to `t`.
    pub fn with_parameter(&self, t: f64) -> Augmentation {
        let mut out = self.clone();
        match &mut out {
            Augmentation::Jpeg { quality } => *quality = t.round().clamp(0.0, 255.0) as u8,
            Augmentation::Brightness { factor }
            | Augmentation::Contrast { factor }
            | Augmentation::Saturation { factor }
            | Augmentation::Sharpness { factor } => *factor = t,
            Augmentation::CropResize { border, .. } => *border = t.round().max(0.0) as u32,
            Augmentation::Gamma { gamma } => *gamma = t,
            Augmentation::Hue { shift } => *shift = t,
            Augmentation::Downscale { ratio, .. } => *ratio = t,
            Augmentation::RotateTranslate { degrees, .. } => *degrees = t,
            Augmentation::GaussianBlur { sigma, .. } => *sigma = t,
            Augmentation::LogCorrection { strength, .. }
            | Augmentation::SigmoidCorrection { strength, .. } => *strength = t,
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidSpec(format!("{}: {what}", self.kind())));
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        match *self {
            Augmentation::Jpeg { quality } if !(1..=100).contains(&quality) => {
                bad("quality must be in 1..=100")
            }
            Augmentation::Brightness { factor }
            | Augmentation::Contrast { factor }
            | Augmentation::Saturation { factor }
            | Augmentation::Sharpness { factor }
                if !finite_nonneg(factor) =>
            {
                bad("factor must be finite and >= 0")
            }
            Augmentation::Gamma { gamma } if !(gamma.is_finite() && gamma > 0.0) => {
                bad("gamma must be finite and > 0")
            }
            Augmentation::Hue { shift } if !(-0.5..=0.5).contains(&shift) => {
                bad("shift must be in [-0.5, 0.5]")
            }
            Augmentation::CropResize { upscale, .. } if upscale == 0 => bad("upscale must be >= 1"),
            Augmentation::Downscale { ratio, .. } if !(ratio > 0.0 && ratio <= 1.0) => {
                bad("ratio must be in (0, 1]")
            }
            Augmentation::RotateTranslate {
                degrees,
                center,
                upscale,
                ..
            } if !(degrees.abs() < 45.0)
                || upscale == 0
                || !center.0.is_finite()
                || !center.1.is_finite() =>
            {
                bad("need |degrees| < 45, finite center and upscale >= 1")
            }
            Augmentation::GaussianBlur { kernel_size, sigma }
                if kernel_size % 2 == 0 || !finite_nonneg(sigma) =>
            {
                bad("kernel size must be odd and sigma >= 0")
            }
            Augmentation::LogCorrection { gain, strength }
                if !(gain.is_finite() && gain > 0.0) || !(0.0..=1.0).contains(&strength) =>
            {
                bad("gain must be > 0 and strength in [0, 1]")
            }
            Augmentation::SigmoidCorrection {
                cutoff,
                gain,
                strength,
            } if !(0.0..=1.0).contains(&cutoff)
                || !gain.is_finite()
                || !(0.0..=1.0).contains(&strength) =>
            {
                bad("cutoff and strength must be in [0, 1], gain finite")
            }
            _ => Ok(()),
        }
    }

    pub fn rotation_params(&self) -> Option<RotationParams> {
        match *self {
            Augmentation::RotateTranslate {
                degrees,
                center,
                upscale,
                border,
                interp,
            } => Some(RotationParams {
                degrees,
                center,
                upscale,
                border,
                interp,
            }),
            _ => None,
        }
    }
}

impl AugmentationSpec {
    pub fn label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| self.augmentation.default_label())
    }
}

/// The 19 default directions: jpeg, brightness, crop_resize × 3 interps,
/// contrast, gamma, hue, saturation, sharpness, downscale × 3 interps,
/// rotate_translate × 3 centers, blur, log and sigmoid corrections.
pub fn default_augmentations() -> Vec<AugmentationSpec> {
    let mut out: Vec<Augmentation> = vec![
        Augmentation::Jpeg { quality: 70 },
        Augmentation::Brightness { factor: 1.02 },
    ];
    out.extend(Interpolation::ALL.map(|interp| Augmentation::CropResize {
        upscale: 4,
        border: 1,
        interp,
    }));
    out.extend([
        Augmentation::Contrast { factor: 1.05 },
        Augmentation::Gamma { gamma: 1.02 },
        Augmentation::Hue { shift: 0.01 },
        Augmentation::Saturation { factor: 1.1 },
        Augmentation::Sharpness { factor: 1.2 },
    ]);
    out.extend(Interpolation::ALL.map(|interp| Augmentation::Downscale { ratio: 0.9, interp }));
    out.extend(rotation_augmentations());
    out.extend([
        Augmentation::GaussianBlur {
            kernel_size: 3,
            sigma: 2.0,
        },
        Augmentation::LogCorrection {
            gain: 1.05,
            strength: 1.0,
        },
        Augmentation::SigmoidCorrection {
            cutoff: 0.5,
            gain: 5.0,
            strength: 1.0,
        },
    ]);
    out.into_iter().map(AugmentationSpec::from).collect()
}

/// Rotations by 2° at ×4 about `(0,0)`, `(50,50)` and `(-50,50)`.
pub fn rotation_augmentations() -> Vec<Augmentation> {
    [(0.0, 0.0), (50.0, 50.0), (-50.0, 50.0)]
        .into_iter()
        .map(|center| {
            let p = RotationParams::table(center, Interpolation::Bilinear);
            Augmentation::RotateTranslate {
                degrees: p.degrees,
                center: p.center,
                upscale: p.upscale,
                border: p.border,
                interp: p.interp,
            }
        })
        .collect()
}

/// Applies `f(t, x)`; the output is always within `[0, 1]`.
pub fn apply_augmentation(x: &Image, aug: &Augmentation) -> Result<Image> {
    aug.validate()?;
    if aug.has_exact_identity() && aug.parameter() == aug.identity_value() {
        return Ok(x.clone());
    }
    match *aug {
        Augmentation::Jpeg { quality } => jpeg_round_trip(x, quality),
        Augmentation::Brightness { factor } => transforms::brightness(x, factor),
        Augmentation::CropResize {
            upscale,
            border,
            interp,
        } => crop_resize(x, upscale, border, interp),
        Augmentation::Contrast { factor } => transforms::contrast(x, factor),
        Augmentation::Gamma { gamma } => transforms::gamma(x, gamma),
        Augmentation::Hue { shift } => transforms::hue(x, shift),
        Augmentation::Saturation { factor } => transforms::saturation(x, factor),
        Augmentation::Sharpness { factor } => transforms::sharpness(x, factor),
        Augmentation::Downscale { ratio, interp } => downscale(x, ratio, interp),
        Augmentation::RotateTranslate { .. } => {
            edge_safe_rotate(x, &aug.rotation_params().expect("rotation variant"))
        }
        Augmentation::GaussianBlur { kernel_size, sigma } => {
            transforms::gaussian_blur(x, kernel_size, sigma)
        }
        Augmentation::LogCorrection { gain, strength } => {
            transforms::log_correction(x, gain, strength)
        }
        Augmentation::SigmoidCorrection {
            cutoff,
            gain,
            strength,
        } => transforms::sigmoid_correction(x, cutoff, gain, strength),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn textured(side: usize) -> Image {
        Image::from_fn(side, side, |c, y, x| {
            let (fx, fy) = (x as f64 / side as f64, y as f64 / side as f64);
            0.5 + 0.3 * (6.0 * fx + 2.0 * c as f64).sin() * (5.0 * fy).cos() + 0.1 * (fx - fy)
        })
        .unwrap()
    }

    #[test]
    fn default_frame_has_nineteen_unique_labels() {
        let specs = default_augmentations();
        assert_eq!(specs.len(), 19);
        let mut labels: Vec<String> = specs.iter().map(|s| s.label()).collect();
        labels.sort();
        labels.dedup();
        assert_eq!(labels.len(), 19);
    }

    #[test]
    fn rotation_labels() {
        let labels: Vec<String> = rotation_augmentations()
            .iter()
            .map(|a| a.default_label())
            .collect();
        assert_eq!(labels, ["rotate@(0,0)", "rotate@(50,50)", "rotate@(-50,50)"]);
    }

    #[test]
    fn exact_identities() {
        let img = textured(40);
        for spec in default_augmentations() {
            let aug = &spec.augmentation;
            if !aug.has_exact_identity() {
                continue;
            }
            let id = aug.with_parameter(aug.identity_value());
            assert_eq!(apply_augmentation(&img, &id).unwrap(), img, "{}", aug.kind());
        }
    }

    #[test]
    fn defaults_change_the_image() {
        let img = textured(48);
        for spec in default_augmentations() {
            let out = apply_augmentation(&img, &spec.augmentation).unwrap();
            assert!(out.max_abs_diff(&img) > 0.0, "{}", spec.label());
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        let img = textured(40);
        for bad in [
            Augmentation::Jpeg { quality: 0 },
            Augmentation::Brightness { factor: -1.0 },
            Augmentation::Gamma { gamma: 0.0 },
            Augmentation::Hue { shift: 0.7 },
            Augmentation::Downscale {
                ratio: 1.5,
                interp: Interpolation::Nearest,
            },
            Augmentation::GaussianBlur {
                kernel_size: 2,
                sigma: 1.0,
            },
            Augmentation::LogCorrection {
                gain: 1.0,
                strength: 2.0,
            },
        ] {
            assert!(
                matches!(apply_augmentation(&img, &bad), Err(Error::InvalidSpec(_))),
                "{bad:?}"
            );
        }
    }

    #[test]
    fn toml_overrides_fill_defaults() {
        #[derive(Deserialize)]
        struct Config {
            augmentation: Vec<AugmentationSpec>,
        }
        let cfg: Config = toml::from_str(
            r#"
            [[augmentation]]
            kind = "brightness"
            factor = 1.05

            [[augmentation]]
            kind = "rotate_translate"
            center = [50.0, -50.0]
            label = "rot"

            [[augmentation]]
            kind = "crop_resize"
            interp = "nearest"
            "#,
        )
        .unwrap();
        assert_eq!(
            cfg.augmentation[0].augmentation,
            Augmentation::Brightness { factor: 1.05 }
        );
        assert_eq!(cfg.augmentation[1].label(), "rot");
        assert_eq!(
            cfg.augmentation[1].augmentation.rotation_params().unwrap(),
            RotationParams::table((50.0, -50.0), Interpolation::Bilinear)
        );
        assert_eq!(cfg.augmentation[2].label(), "crop_resize@nearest");
    }
}
