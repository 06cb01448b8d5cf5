use rayon::prelude::*;
use serde::Serialize;

use super::stats::t_interval;
use crate::error::{Error, Result};
use crate::frame::{Frame, FrameConfig, FrameKind};
use crate::image_ops::{ImageRecord, SkippedImage};
use crate::linalg::stable_rank;
use crate::runtime::{compute_neural_frame, ModelBundle, NeuralFrame};

/// Stable rank at one layer across images.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TapStats {
    pub layer_index: usize,
    pub layer_name: String,
    /// Mean and 95% interval over the images where the value is defined;
    /// `None` with fewer than two such images (the mean alone with one).
    pub mean: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub n: usize,
    /// Aligned with [`StableRankCurve::images`]; `None` where the layer
    /// matrix vanished.
    pub values: Vec<Option<f64>>,
    /// Images whose layer matrix was zero.
    pub degenerate: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StableRankCurve {
    pub model: String,
    pub frame: FrameKind,
    /// Frame size used for this curve.
    pub k: usize,
    pub images: Vec<String>,
    pub taps: Vec<TapStats>,
    pub skipped: Vec<SkippedImage>,
}

impl StableRankCurve {
    /// Whether some layer collapsed to zero on some image.
    pub fn has_degenerate_layers(&self) -> bool {
        self.taps.iter().any(|t| !t.degenerate.is_empty())
    }

    pub fn means(&self) -> Vec<Option<f64>> {
        self.taps.iter().map(|t| t.mean).collect()
    }
}

/// Stable rank of every layer; `None` for a zero matrix.
pub fn layer_stable_ranks(neural: &NeuralFrame) -> Result<Vec<Option<f64>>> {
    neural
        .matrices()
        .iter()
        .map(|m| match stable_rank(m) {
            Ok(r) => Ok(Some(r)),
            Err(Error::UndefinedStableRank) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

/// Per-image result of a probe: the image id and either its per-layer
/// stable ranks or the reason the image was skipped.
pub type ImageOutcome = (String, std::result::Result<Vec<Option<f64>>, String>);

/// Aggregates per-image stable ranks into a curve.
///
/// Outcomes are sorted by image id first, so the result does not depend on
/// the order in which images finished.
pub fn aggregate_curve(
    model: &str,
    frame: FrameKind,
    k: usize,
    layer_ids: &[usize],
    layer_names: &[String],
    mut outcomes: Vec<ImageOutcome>,
) -> Result<StableRankCurve> {
    outcomes.sort_by(|a, b| a.0.cmp(&b.0));
    let mut images = Vec::new();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (id, outcome) in outcomes {
        match outcome {
            Ok(values) => {
                if values.len() != layer_ids.len() {
                    return Err(Error::Shape(format!(
                        "image {id} has {} layer values, expected {}",
                        values.len(),
                        layer_ids.len()
                    )));
                }
                images.push(id);
                rows.push(values);
            }
            Err(reason) => skipped.push(SkippedImage { image: id, reason }),
        }
    }
    if images.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "a stable-rank curve needs at least 2 usable images, got {} ({} skipped)",
            images.len(),
            skipped.len()
        )));
    }
    let taps = layer_ids
        .iter()
        .zip(layer_names)
        .enumerate()
        .map(|(i, (&layer_index, name))| {
            let values: Vec<Option<f64>> = rows.iter().map(|r| r[i]).collect();
            let defined: Vec<f64> = values.iter().flatten().copied().collect();
            let degenerate = images
                .iter()
                .zip(&values)
                .filter(|(_, v)| v.is_none())
                .map(|(id, _)| id.clone())
                .collect();
            let ci = t_interval(&defined);
            TapStats {
                layer_index,
                layer_name: name.clone(),
                mean: ci.map(|c| c.mean).or(defined.first().copied()),
                ci_low: ci.map(|c| c.low),
                ci_high: ci.map(|c| c.high),
                n: defined.len(),
                values,
                degenerate,
            }
        })
        .collect();
    Ok(StableRankCurve {
        model: model.to_string(),
        frame,
        k,
        images,
        taps,
        skipped,
    })
}

/// Probes one image: frame construction failures become skip reasons,
/// inference failures are errors.
fn probe_one(
    bundle: &ModelBundle,
    frame: std::result::Result<Frame, Error>,
) -> Result<std::result::Result<Vec<Option<f64>>, String>> {
    let frame = match frame {
        Ok(f) => f,
        Err(e) => return Ok(Err(e.to_string())),
    };
    let neural = compute_neural_frame(bundle, &frame)?;
    Ok(Ok(layer_stable_ranks(&neural)?))
}

/// Per-layer stable-rank curve of `bundle` for frames of `kind`.
///
/// Images are processed in parallel; image `i` of `images` uses sub-seeds
/// keyed by `(seed, i)`.
pub fn stable_rank_curve(
    bundle: &ModelBundle,
    images: &[ImageRecord],
    kind: FrameKind,
    config: &FrameConfig,
    seed: u64,
) -> Result<StableRankCurve> {
    if images.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "a stable-rank curve needs at least 2 images, got {}",
            images.len()
        )));
    }
    let outcomes: Vec<(String, std::result::Result<Vec<Option<f64>>, String>, Option<usize>)> = images
        .par_iter()
        .enumerate()
        .map(|(i, record)| {
            let frame = config.build(kind, record, seed, i as u64);
            let k = frame.as_ref().ok().map(Frame::k);
            Ok((record.id.clone(), probe_one(bundle, frame)?, k))
        })
        .collect::<Result<_>>()?;
    let k = outcomes.iter().filter_map(|o| o.2).max().unwrap_or(0);
    let manifest = bundle.manifest();
    aggregate_curve(
        bundle.name(),
        kind,
        k,
        &manifest.layer_ids(),
        &manifest.layer_names(),
        outcomes.into_iter().map(|(id, r, _)| (id, r)).collect(),
    )
}

/// One curve per checkpoint, all on the same images, frames and seeds.
pub fn checkpoint_series(
    bundles: &[ModelBundle],
    images: &[ImageRecord],
    kind: FrameKind,
    config: &FrameConfig,
    seed: u64,
) -> Result<Vec<StableRankCurve>> {
    if bundles.len() < 2 {
        return Err(Error::Config(format!(
            "a checkpoint series needs at least 2 bundles, got {}",
            bundles.len()
        )));
    }
    let first = &bundles[0];
    for b in &bundles[1..] {
        if b.tap_count() != first.tap_count() {
            return Err(Error::Config(format!(
                "checkpoint {} has {} taps, {} has {}",
                b.name(),
                b.tap_count(),
                first.name(),
                first.tap_count()
            )));
        }
        if b.input_dims() != first.input_dims() {
            return Err(Error::Config(format!(
                "checkpoint {} expects {:?} input, {} expects {:?}",
                b.name(),
                b.input_dims(),
                first.name(),
                first.input_dims()
            )));
        }
    }
    bundles
        .iter()
        .map(|b| stable_rank_curve(b, images, kind, config, seed))
        .collect()
}
