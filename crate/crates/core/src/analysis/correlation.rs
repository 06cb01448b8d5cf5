use serde::Serialize;

use super::curve::StableRankCurve;
use super::stats::{pearson, spearman};
use crate::error::{Error, Result};

pub const MIN_CORRELATION_MODELS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TapCorrelation {
    pub layer_index: usize,
    pub layer_name: String,
    /// `None` when fewer than three models have a defined mean at this tap
    /// or when either side is constant.
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
    pub n_models: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AccuracyCorrelation {
    pub models: Vec<String>,
    pub excluded: Vec<String>,
    pub taps: Vec<TapCorrelation>,
}

/// Correlates each tap's mean stable rank with top-1 accuracy across models.
///
/// Taps are matched by position. Models without an accuracy are left out.
pub fn accuracy_correlation(entries: &[(Option<f64>, &StableRankCurve)]) -> Result<AccuracyCorrelation> {
    let mut used = Vec::new();
    let mut excluded = Vec::new();
    for (acc, curve) in entries {
        match acc {
            Some(a) => used.push((*a, *curve)),
            None => {
                log::warn!("model {} has no top-1 accuracy and is excluded", curve.model);
                excluded.push(curve.model.clone());
            }
        }
    }
    if used.len() < MIN_CORRELATION_MODELS {
        return Err(Error::InvalidInput(format!(
            "accuracy correlation needs at least {MIN_CORRELATION_MODELS} models with an accuracy, got {}",
            used.len()
        )));
    }
    let taps = used[0].1.taps.len();
    if let Some((_, c)) = used.iter().find(|(_, c)| c.taps.len() != taps) {
        return Err(Error::Config(format!(
            "model {} has {} taps, expected {taps}",
            c.model,
            c.taps.len()
        )));
    }
    let taps = (0..taps)
        .map(|t| {
            let (acc, rank): (Vec<f64>, Vec<f64>) = used
                .iter()
                .filter_map(|(a, c)| c.taps[t].mean.map(|m| (*a, m)))
                .unzip();
            let enough = acc.len() >= MIN_CORRELATION_MODELS;
            let first = &used[0].1.taps[t];
            TapCorrelation {
                layer_index: first.layer_index,
                layer_name: first.layer_name.clone(),
                pearson: enough.then(|| pearson(&rank, &acc)).flatten(),
                spearman: enough.then(|| spearman(&rank, &acc)).flatten(),
                n_models: acc.len(),
            }
        })
        .collect();
    Ok(AccuracyCorrelation {
        models: used.iter().map(|(_, c)| c.model.clone()).collect(),
        excluded,
        taps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::curve::aggregate_curve;
    use crate::frame::FrameKind;

    fn curve(model: &str, means: [f64; 2]) -> StableRankCurve {
        let outcomes = vec![
            ("a".to_string(), Ok(means.map(Some).to_vec())),
            ("b".to_string(), Ok(means.map(Some).to_vec())),
        ];
        aggregate_curve(model, FrameKind::Augmentation, 4, &[0, 1], &["input".into(), "x".into()], outcomes).unwrap()
    }

    #[test]
    fn monotone_relation_is_perfect() {
        let c = [curve("m1", [2.0, 1.0]), curve("m2", [2.0, 2.0]), curve("m3", [2.0, 4.0]), curve("m4", [2.0, 5.0])];
        let entries = [(Some(0.5), &c[0]), (Some(0.6), &c[1]), (Some(0.7), &c[2]), (None, &c[3])];
        let r = accuracy_correlation(&entries).unwrap();
        assert_eq!(r.excluded, ["m4"]);
        assert_eq!(r.taps[0].pearson, None);
        assert_eq!(r.taps[1].spearman, Some(1.0));
        assert!(r.taps[1].pearson.unwrap() > 0.98);
    }

    #[test]
    fn needs_three_models() {
        let c = [curve("m1", [1.0, 1.0]), curve("m2", [2.0, 2.0])];
        assert!(accuracy_correlation(&[(Some(0.1), &c[0]), (Some(0.2), &c[1])]).is_err());
    }
}
