use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::curve::{aggregate_curve, layer_stable_ranks, ImageOutcome, StableRankCurve};
use crate::error::{Error, Result};
use crate::frame::{build_augmentation_frame, build_noise_frame, build_rotated_frame, Frame, FrameConfig, FrameKind};
use crate::image_ops::ImageRecord;
use crate::runtime::{compute_neural_frame, ModelBundle};
use crate::seed::{derive_seed, rng_for};

/// Seeded order in which directions join the frame as `k` grows.
pub fn sweep_order(available: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..available).collect();
    order.shuffle(&mut rng_for(seed, "vary_k_order", 0));
    order
}

/// Indices of the first `k` directions of `order`, in canonical order, so
/// the full prefix reproduces the full frame exactly.
pub fn prefix_subset(order: &[usize], k: usize) -> Vec<usize> {
    let mut subset = order[..k].to_vec();
    subset.sort_unstable();
    subset
}

/// One frame per `k` for a single image.
fn sweep_frames(
    config: &FrameConfig,
    kind: FrameKind,
    record: &ImageRecord,
    seed: u64,
    index: u64,
    k_list: &[usize],
) -> Result<Vec<Frame>> {
    let k_max = *k_list.iter().max().expect("non-empty k list");
    let subsets = |available: usize| -> Result<Vec<Vec<usize>>> {
        if k_max > available {
            return Err(Error::Config(format!(
                "k = {k_max} exceeds the {available} available directions"
            )));
        }
        let order = sweep_order(available, seed);
        Ok(k_list.iter().map(|&k| prefix_subset(&order, k)).collect())
    };
    match kind {
        FrameKind::Augmentation | FrameKind::External => {
            let full = config.build(kind, record, seed, index)?;
            subsets(full.k())?.iter().map(|s| full.select(s)).collect()
        }
        FrameKind::Noise => {
            let reference = build_augmentation_frame(&record.image, &config.augmentations)?;
            let noise = build_noise_frame(
                &record.image,
                k_max,
                derive_seed(seed, "noise_frame", index),
                &reference,
            )?;
            k_list
                .iter()
                .map(|&k| noise.select(&(0..k).collect::<Vec<_>>()))
                .collect()
        }
        FrameKind::RotatedAugmentation => {
            let full = build_augmentation_frame(&record.image, &config.augmentations)?;
            subsets(full.k())?
                .iter()
                .map(|s| build_rotated_frame(&full.select(s)?, derive_seed(seed, "rotated_frame", index)))
                .collect()
        }
    }
}

/// Stable-rank curves for growing frame sizes.
///
/// Augmentation-based frames take the first `k` directions of one seeded
/// random order shared by every image, so smaller frames are prefixes of
/// larger ones. Noise frames take their first `k` Gaussian directions.
pub fn vary_k_sweep(
    bundle: &ModelBundle,
    images: &[ImageRecord],
    kind: FrameKind,
    config: &FrameConfig,
    k_list: &[usize],
    seed: u64,
) -> Result<Vec<StableRankCurve>> {
    if k_list.is_empty() {
        return Err(Error::Config("the k list is empty".into()));
    }
    if let Some(k) = k_list.iter().find(|&&k| k < 2) {
        return Err(Error::Config(format!("frame size k must be >= 2, got {k}")));
    }
    if images.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "a sweep needs at least 2 images, got {}",
            images.len()
        )));
    }
    let per_image: Vec<(String, std::result::Result<Vec<Vec<Option<f64>>>, String>)> = images
        .par_iter()
        .enumerate()
        .map(|(i, record)| {
            let frames = match sweep_frames(config, kind, record, seed, i as u64, k_list) {
                Ok(f) => f,
                Err(e @ Error::Config(_)) => return Err(e),
                Err(e) => return Ok((record.id.clone(), Err(e.to_string()))),
            };
            let ranks = frames
                .iter()
                .map(|f| layer_stable_ranks(&compute_neural_frame(bundle, f)?))
                .collect::<Result<Vec<_>>>()?;
            Ok((record.id.clone(), Ok(ranks)))
        })
        .collect::<Result<_>>()?;
    let manifest = bundle.manifest();
    k_list
        .iter()
        .enumerate()
        .map(|(ki, &k)| {
            let outcomes: Vec<ImageOutcome> = per_image
                .iter()
                .map(|(id, r)| (id.clone(), r.as_ref().map(|v| v[ki].clone()).map_err(Clone::clone)))
                .collect();
            aggregate_curve(bundle.name(), kind, k, &manifest.layer_ids(), &manifest.layer_names(), outcomes)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefixes_nest() {
        let order = sweep_order(19, 5);
        assert_eq!(order, sweep_order(19, 5));
        assert_ne!(order, sweep_order(19, 6));
        let small = prefix_subset(&order, 4);
        let large = prefix_subset(&order, 9);
        assert!(small.iter().all(|i| large.contains(i)));
        assert_eq!(prefix_subset(&order, 19), (0..19).collect::<Vec<_>>());
    }
}
