use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frame::{FrameConfig, FrameKind};
use crate::image_ops::{ImageRecord, SkippedImage};
use crate::linalg::{centered_sample_gram, cka_from_grams};
use crate::runtime::{compute_neural_frame, ModelBundle, NeuralFrame};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CkaLayer {
    pub layer_index: usize,
    pub layer_name: String,
}

/// Mean frame CKA between every layer of model A and every layer of model B.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CkaReport {
    pub model_a: String,
    pub model_b: String,
    pub layers_a: Vec<CkaLayer>,
    pub layers_b: Vec<CkaLayer>,
    /// `cka[i][j]` pairs layer `i` of A with layer `j` of B; `None` if every
    /// image was degenerate for the pair.
    pub cka: Vec<Vec<Option<f64>>>,
    /// Images that contributed to each pair.
    pub n_images: Vec<Vec<usize>>,
    pub skipped: Vec<SkippedImage>,
}

fn layers(neural: &NeuralFrame) -> Vec<CkaLayer> {
    neural
        .layer_ids()
        .iter()
        .zip(neural.layer_names())
        .map(|(&layer_index, name)| CkaLayer {
            layer_index,
            layer_name: name.clone(),
        })
        .collect()
}

type LayerGrams = Vec<Option<DMatrix<f64>>>;

/// Centered `k × k` Gram of every layer; `None` where the layer is
/// degenerate for CKA.
fn layer_grams(neural: &NeuralFrame) -> LayerGrams {
    neural
        .matrices()
        .iter()
        .map(|m| centered_sample_gram(m).ok())
        .collect()
}

fn report_from_grams(
    model_a: &str,
    model_b: &str,
    layers_a: Vec<CkaLayer>,
    layers_b: Vec<CkaLayer>,
    per_image: &[(LayerGrams, LayerGrams)],
) -> CkaReport {
    let (la, lb) = (layers_a.len(), layers_b.len());
    let mut sums = vec![vec![0.0; lb]; la];
    let mut counts = vec![vec![0usize; lb]; la];
    for (ga, gb) in per_image {
        for (i, ka) in ga.iter().enumerate() {
            for (j, kb) in gb.iter().enumerate() {
                if let (Some(ka), Some(kb)) = (ka, kb) {
                    sums[i][j] += cka_from_grams(ka, kb);
                    counts[i][j] += 1;
                }
            }
        }
    }
    let cka = sums
        .iter()
        .zip(&counts)
        .map(|(row, crow)| {
            row.iter()
                .zip(crow)
                .map(|(&s, &c)| (c > 0).then(|| s / c as f64))
                .collect()
        })
        .collect();
    CkaReport {
        model_a: model_a.to_string(),
        model_b: model_b.to_string(),
        layers_a,
        layers_b,
        cka,
        n_images: counts,
        skipped: Vec::new(),
    }
}

fn check_pair(fa: &NeuralFrame, fb: &NeuralFrame) -> Result<()> {
    if fa.k() != fb.k() {
        return Err(Error::Shape(format!(
            "neural frames disagree on k: {} and {}",
            fa.k(),
            fb.k()
        )));
    }
    Ok(())
}

/// Frame CKA of precomputed neural frames, image by image.
///
/// Each layer matrix is `n_i × k` with one column per frame direction, so
/// the k directions are the samples. Degenerate pairs are left out of the
/// mean for that pair only.
pub fn frame_cka_neural(
    model_a: &str,
    model_b: &str,
    frames_a: &[NeuralFrame],
    frames_b: &[NeuralFrame],
) -> Result<CkaReport> {
    if frames_a.is_empty() || frames_a.len() != frames_b.len() {
        return Err(Error::Shape(format!(
            "frame CKA needs matching non-empty frame lists, got {} and {}",
            frames_a.len(),
            frames_b.len()
        )));
    }
    let (la, lb) = (frames_a[0].len(), frames_b[0].len());
    let mut per_image = Vec::with_capacity(frames_a.len());
    for (fa, fb) in frames_a.iter().zip(frames_b) {
        if fa.len() != la || fb.len() != lb {
            return Err(Error::Shape("neural frames disagree on layer count".into()));
        }
        check_pair(fa, fb)?;
        per_image.push((layer_grams(fa), layer_grams(fb)));
    }
    Ok(report_from_grams(
        model_a,
        model_b,
        layers(&frames_a[0]),
        layers(&frames_b[0]),
        &per_image,
    ))
}

/// Builds one frame per image, pushes it through both models and reports
/// the mean frame CKA for every layer pair.
pub fn frame_cka(
    bundle_a: &ModelBundle,
    bundle_b: &ModelBundle,
    images: &[ImageRecord],
    kind: FrameKind,
    config: &FrameConfig,
    seed: u64,
) -> Result<CkaReport> {
    if bundle_a.input_dims() != bundle_b.input_dims() {
        return Err(Error::Config(format!(
            "models {} and {} expect different input dims",
            bundle_a.name(),
            bundle_b.name()
        )));
    }
    type Outcome = std::result::Result<(LayerGrams, LayerGrams), String>;
    let mut results: Vec<(String, Outcome)> = images
        .par_iter()
        .enumerate()
        .map(|(i, record)| {
            let frame = match config.build(kind, record, seed, i as u64) {
                Ok(f) => f,
                Err(e) => return Ok((record.id.clone(), Err(e.to_string()))),
            };
            let a = compute_neural_frame(bundle_a, &frame)?;
            let b = compute_neural_frame(bundle_b, &frame)?;
            check_pair(&a, &b)?;
            Ok((record.id.clone(), Ok((layer_grams(&a), layer_grams(&b)))))
        })
        .collect::<Result<_>>()?;
    results.sort_by(|x, y| x.0.cmp(&y.0));
    let mut per_image = Vec::new();
    let mut skipped = Vec::new();
    for (id, r) in results {
        match r {
            Ok(grams) => per_image.push(grams),
            Err(reason) => skipped.push(SkippedImage { image: id, reason }),
        }
    }
    if per_image.is_empty() {
        return Err(Error::InvalidInput("no image produced a usable frame".into()));
    }
    let (ma, mb) = (bundle_a.manifest(), bundle_b.manifest());
    let as_layers = |ids: Vec<usize>, names: Vec<String>| {
        ids.into_iter()
            .zip(names)
            .map(|(layer_index, layer_name)| CkaLayer {
                layer_index,
                layer_name,
            })
            .collect()
    };
    let mut report = report_from_grams(
        bundle_a.name(),
        bundle_b.name(),
        as_layers(ma.layer_ids(), ma.layer_names()),
        as_layers(mb.layer_ids(), mb.layer_names()),
        &per_image,
    );
    report.skipped = skipped;
    Ok(report)
}
