use std::path::{Path, PathBuf};

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Frame, FrameKind, Perturbation};
use crate::error::{Error, Result};
use crate::image_ops::{
    apply_augmentation, default_augmentations, fit_image, list_images, AugmentationSpec, Image, ImageRecord,
};
use crate::linalg::SubspaceIsometry;
use crate::seed::{derive_seed, rng_for};

/// Frame construction settings shared by every image of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    #[serde(rename = "augmentation", default = "default_augmentations")]
    pub augmentations: Vec<AugmentationSpec>,
    /// Noise frame size; defaults to the augmentation count.
    #[serde(default)]
    pub noise_k: Option<usize>,
    /// Root of `<image_stem>/pert_*.png` directories for external frames.
    #[serde(default)]
    pub external_root: Option<PathBuf>,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            augmentations: default_augmentations(),
            noise_k: None,
            external_root: None,
        }
    }
}

impl FrameConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("frame config: {e}")))
    }

    /// Builds the frame of `kind` for one image.
    ///
    /// `index` identifies the image within the run; together with `seed` it
    /// keys the random streams of the noise and rotated frames.
    pub fn build(&self, kind: FrameKind, record: &ImageRecord, seed: u64, index: u64) -> Result<Frame> {
        let image = &record.image;
        match kind {
            FrameKind::Augmentation => build_augmentation_frame(image, &self.augmentations),
            FrameKind::Noise => {
                let reference = build_augmentation_frame(image, &self.augmentations)?;
                let k = self.noise_k.unwrap_or(reference.k());
                build_noise_frame(image, k, derive_seed(seed, "noise_frame", index), &reference)
            }
            FrameKind::RotatedAugmentation => {
                let reference = build_augmentation_frame(image, &self.augmentations)?;
                build_rotated_frame(&reference, derive_seed(seed, "rotated_frame", index))
            }
            FrameKind::External => {
                let root = self.external_root.as_deref().ok_or_else(|| {
                    Error::Config("external frames need a frame directory".into())
                })?;
                load_external_frame(record, &external_frame_dir(root, &record.id))
            }
        }
    }
}

/// Applies each augmentation to `x`; steps are all 1.
pub fn build_augmentation_frame(x: &Image, specs: &[AugmentationSpec]) -> Result<Frame> {
    let labels: Vec<String> = specs.iter().map(AugmentationSpec::label).collect();
    {
        let mut sorted = labels.clone();
        sorted.sort();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("duplicate augmentation label {:?}", w[0])));
        }
    }
    let perturbed: Vec<Image> = specs
        .par_iter()
        .map(|s| apply_augmentation(x, &s.augmentation))
        .collect::<Result<_>>()?;
    Frame::new(
        FrameKind::Augmentation,
        x.clone(),
        perturbed.into_iter().map(Perturbation::Image).collect(),
        labels,
        vec![1.0; specs.len()],
    )
}

/// `k` Gaussian directions, each rescaled to the mean tangent norm of
/// `reference`.
pub fn build_noise_frame(x: &Image, k: usize, seed: u64, reference: &Frame) -> Result<Frame> {
    if reference.base() != x {
        return Err(Error::InvalidInput(
            "noise reference frame was built on a different image".into(),
        ));
    }
    let norms = reference.tangent_norms();
    let target = norms.iter().sum::<f64>() / norms.len() as f64;
    if target == 0.0 {
        return Err(Error::Degenerate(
            "reference frame has zero mean tangent norm".into(),
        ));
    }
    let n = x.len();
    let displacements: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|j| {
            let mut rng = rng_for(seed, "noise_direction", j as u64);
            let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            let scale = target / norm;
            v.iter_mut().for_each(|a| *a *= scale);
            v
        })
        .collect();
    let mut frame = Frame::new(
        FrameKind::Noise,
        x.clone(),
        displacements.into_iter().map(Perturbation::Displacement).collect(),
        (0..k).map(|j| format!("noise_{j:02}")).collect(),
        vec![1.0; k],
    )?;
    frame.notes.noise_norm = Some(target);
    Ok(frame)
}

/// Maps the reference tangents isometrically onto a random subspace.
pub fn build_rotated_frame(reference: &Frame, seed: u64) -> Result<Frame> {
    let tangents = reference.tangent_matrix()?;
    if tangents.is_zero() {
        return Err(Error::Degenerate(
            "reference frame has only zero tangent vectors".into(),
        ));
    }
    let mapped = SubspaceIsometry::new(tangents.rows(), tangents.cols(), seed)?.map_frame(&tangents)?;
    let k = reference.k();
    let mut frame = Frame::new(
        FrameKind::RotatedAugmentation,
        reference.base().clone(),
        (0..k)
            .map(|j| Perturbation::Displacement(mapped.matrix.column(j).to_vec()))
            .collect(),
        reference.labels().iter().map(|l| format!("rotated:{l}")).collect(),
        vec![1.0; k],
    )?;
    frame.notes.padded_directions = mapped.padded_directions;
    Ok(frame)
}

/// Directory holding the external perturbations of one image.
pub fn external_frame_dir(root: &Path, image_stem: &str) -> PathBuf {
    root.join(image_stem)
}

/// Loads every PNG/JPEG in `dir`, in lexicographic filename order.
///
/// Perturbations must have the dims of the base image or of its source
/// file; the latter are fitted exactly like the base.
pub fn load_external_frame(record: &ImageRecord, dir: &Path) -> Result<Frame> {
    let x = &record.image;
    let files = list_images(dir).map_err(|e| Error::Ingest {
        path: dir.to_path_buf(),
        reason: e.to_string(),
    })?;
    if files.len() < 2 {
        return Err(Error::Ingest {
            path: dir.to_path_buf(),
            reason: format!("need at least 2 perturbation images, found {}", files.len()),
        });
    }
    let mut images = Vec::with_capacity(files.len());
    let mut labels = Vec::with_capacity(files.len());
    for path in &files {
        let img = Image::load(path)?;
        let img = if img.dims() == x.dims() {
            img
        } else if img.dims() == record.source_dims {
            fit_image(&img, x.height(), x.width())?
        } else {
            return Err(Error::Ingest {
                path: path.clone(),
                reason: format!(
                    "perturbation is {}x{}, base image is {}x{}",
                    img.height(),
                    img.width(),
                    record.source_dims.0,
                    record.source_dims.1
                ),
            });
        };
        images.push(Perturbation::Image(img));
        labels.push(
            path.file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
        );
    }
    let k = images.len();
    Frame::new(FrameKind::External, x.clone(), images, labels, vec![1.0; k])
}
