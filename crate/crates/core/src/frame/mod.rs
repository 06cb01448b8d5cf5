//! Frames: a base image plus `k` perturbations whose normalized differences
//! estimate tangent vectors `v_j = (perturbed_j − base) / step_j`.

mod build;
mod rotation_span;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image_ops::Image;
use crate::linalg::Matrix;

pub use build::{
    build_augmentation_frame, build_noise_frame, build_rotated_frame, external_frame_dir,
    load_external_frame, FrameConfig,
};
pub use rotation_span::{ring_centers, rotation_span_spectrum, RotationSpan};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameKind {
    Augmentation,
    Noise,
    #[serde(rename = "rotated", alias = "rotated_augmentation")]
    RotatedAugmentation,
    External,
}

impl FrameKind {
    pub const ALL: [FrameKind; 4] = [
        FrameKind::Augmentation,
        FrameKind::Noise,
        FrameKind::RotatedAugmentation,
        FrameKind::External,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FrameKind::Augmentation => "augmentation",
            FrameKind::Noise => "noise",
            FrameKind::RotatedAugmentation => "rotated",
            FrameKind::External => "external",
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(self, FrameKind::Noise | FrameKind::RotatedAugmentation)
    }
}

impl fmt::Display for FrameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FrameKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "augmentation" => Ok(FrameKind::Augmentation),
            "noise" => Ok(FrameKind::Noise),
            "rotated" | "rotated_augmentation" => Ok(FrameKind::RotatedAugmentation),
            "external" | "diffusion" => Ok(FrameKind::External),
            other => Err(Error::Config(format!("unknown frame kind {other:?}"))),
        }
    }
}

/// One frame direction, stored either as a perturbed image or as a raw
/// input-space displacement from the base. Displacements are not clamped to
/// `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub enum Perturbation {
    Image(Image),
    Displacement(Vec<f64>),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FrameNotes {
    /// Target ℓ2 norm of each noise vector.
    pub noise_norm: Option<f64>,
    /// Directions padded from the orthogonal complement by the isometry.
    pub padded_directions: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    kind: FrameKind,
    base: Image,
    perturbations: Vec<Perturbation>,
    labels: Vec<String>,
    steps: Vec<f64>,
    pub notes: FrameNotes,
}

impl Frame {
    pub fn new(
        kind: FrameKind,
        base: Image,
        perturbations: Vec<Perturbation>,
        labels: Vec<String>,
        steps: Vec<f64>,
    ) -> Result<Self> {
        let k = perturbations.len();
        if k < 2 {
            return Err(Error::Config(format!("a frame needs k >= 2 directions, got {k}")));
        }
        if labels.len() != k || steps.len() != k {
            return Err(Error::Shape(format!(
                "{k} perturbations but {} labels and {} steps",
                labels.len(),
                steps.len()
            )));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = labels.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(Error::Config(format!("duplicate frame label {dup:?}")));
        }
        if let Some(s) = steps.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::Config(format!("step sizes must be positive, got {s}")));
        }
        for (p, label) in perturbations.iter().zip(&labels) {
            let ok = match p {
                Perturbation::Image(img) => img.dims() == base.dims(),
                Perturbation::Displacement(d) => {
                    d.len() == base.len() && d.iter().all(|v| v.is_finite())
                }
            };
            if !ok {
                return Err(Error::Shape(format!(
                    "perturbation {label:?} does not match the {}x{} base",
                    base.height(),
                    base.width()
                )));
            }
        }
        Ok(Self {
            kind,
            base,
            perturbations,
            labels,
            steps,
            notes: FrameNotes::default(),
        })
    }

    pub fn kind(&self) -> FrameKind {
        self.kind
    }

    pub fn base(&self) -> &Image {
        &self.base
    }

    pub fn k(&self) -> usize {
        self.perturbations.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn perturbations(&self) -> &[Perturbation] {
        &self.perturbations
    }

    /// Input-space dimension `3·H·W`.
    pub fn ambient_dim(&self) -> usize {
        self.base.len()
    }

    /// Tangent estimate `v_j`.
    pub fn tangent(&self, j: usize) -> Vec<f64> {
        let step = self.steps[j];
        match &self.perturbations[j] {
            Perturbation::Image(img) => img
                .as_slice()
                .iter()
                .zip(self.base.as_slice())
                .map(|(p, b)| (p - b) / step)
                .collect(),
            Perturbation::Displacement(d) => d.iter().map(|v| v / step).collect(),
        }
    }

    /// `n × k` matrix whose columns are the tangent estimates.
    pub fn tangent_matrix(&self) -> Result<Matrix> {
        let cols: Vec<Vec<f64>> = (0..self.k()).map(|j| self.tangent(j)).collect();
        Matrix::from_columns(&cols)
    }

    pub fn tangent_norms(&self) -> Vec<f64> {
        (0..self.k())
            .map(|j| self.tangent(j).iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect()
    }

    /// Model input for direction `j` (channel-major, unclamped).
    pub fn perturbed_values(&self, j: usize) -> Vec<f64> {
        match &self.perturbations[j] {
            Perturbation::Image(img) => img.as_slice().to_vec(),
            Perturbation::Displacement(d) => self
                .base
                .as_slice()
                .iter()
                .zip(d)
                .map(|(b, v)| b + v)
                .collect(),
        }
    }

    /// The sub-frame made of the given directions, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Frame> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.k()) {
            return Err(Error::Config(format!(
                "direction index {bad} out of range for k = {}",
                self.k()
            )));
        }
        let mut frame = Frame::new(
            self.kind,
            self.base.clone(),
            indices.iter().map(|&i| self.perturbations[i].clone()).collect(),
            indices.iter().map(|&i| self.labels[i].clone()).collect(),
            indices.iter().map(|&i| self.steps[i]).collect(),
        )?;
        frame.notes = self.notes.clone();
        Ok(frame)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> Image {
        Image::filled(2, 2, [0.5; 3]).unwrap()
    }

    #[test]
    fn tangents_use_steps() {
        let p = Image::filled(2, 2, [0.7; 3]).unwrap();
        let frame = Frame::new(
            FrameKind::Augmentation,
            base(),
            vec![
                Perturbation::Image(p),
                Perturbation::Displacement(vec![1.0; 12]),
            ],
            vec!["a".into(), "b".into()],
            vec![0.5, 2.0],
        )
        .unwrap();
        assert!(frame.tangent(0).iter().all(|v| (v - 0.4).abs() < 1e-12));
        assert!(frame.tangent(1).iter().all(|&v| v == 0.5));
        let m = frame.tangent_matrix().unwrap();
        assert_eq!((m.rows(), m.cols()), (12, 2));
        assert_eq!(frame.perturbed_values(1)[0], 1.5);
    }

    #[test]
    fn rejects_bad_frames() {
        let one = vec![Perturbation::Displacement(vec![0.0; 12])];
        assert!(Frame::new(FrameKind::Noise, base(), one, vec!["a".into()], vec![1.0]).is_err());
        let two = vec![
            Perturbation::Displacement(vec![0.0; 12]),
            Perturbation::Displacement(vec![0.0; 12]),
        ];
        assert!(matches!(
            Frame::new(FrameKind::Noise, base(), two.clone(), vec!["a".into(), "a".into()], vec![1.0; 2]),
            Err(Error::Config(_))
        ));
        assert!(Frame::new(FrameKind::Noise, base(), two.clone(), vec!["a".into(), "b".into()], vec![1.0, 0.0]).is_err());
        let short = vec![
            Perturbation::Displacement(vec![0.0; 12]),
            Perturbation::Displacement(vec![0.0; 11]),
        ];
        assert!(matches!(
            Frame::new(FrameKind::Noise, base(), short, vec!["a".into(), "b".into()], vec![1.0; 2]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn frame_kind_parsing() {
        for kind in FrameKind::ALL {
            assert_eq!(kind.name().parse::<FrameKind>().unwrap(), kind);
        }
        assert!("bogus".parse::<FrameKind>().is_err());
    }
}
