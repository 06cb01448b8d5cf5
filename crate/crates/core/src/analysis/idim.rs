use std::collections::HashSet;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::seed::rng_for;

/// Minimum number of distinct points for a TwoNN estimate.
pub const TWONN_MIN_POINTS: usize = 100;
pub const TWONN_DEFAULT_DISCARD: f64 = 0.1;
pub const MLE_DEFAULT_K: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IdEstimator {
    #[serde(rename = "twonn")]
    TwoNn,
    Mle,
}

impl IdEstimator {
    pub fn name(self) -> &'static str {
        match self {
            IdEstimator::TwoNn => "twonn",
            IdEstimator::Mle => "mle",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdEstimate {
    pub estimator: IdEstimator,
    pub value: f64,
    /// Distinct points used.
    pub points: usize,
    /// Discarded fraction for TwoNN, neighbor count for MLE.
    pub parameter: f64,
}

/// Drops exact duplicates, keeping first occurrences in order.
fn distinct<P: AsRef<[f64]>>(points: &[P]) -> Result<Vec<&[f64]>> {
    let dim = points.first().map(|p| p.as_ref().len()).unwrap_or(0);
    if dim == 0 {
        return Err(Error::InvalidInput("intrinsic dimension needs non-empty points".into()));
    }
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        let p = p.as_ref();
        if p.len() != dim {
            return Err(Error::Shape(format!("points have dims {dim} and {}", p.len())));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("points must be finite".into()));
        }
        let key: Vec<u64> = p.iter().map(|v| (v + 0.0).to_bits()).collect();
        if seen.insert(key) {
            out.push(p);
        }
    }
    if out.len() < points.len() {
        log::warn!("dropped {} duplicate points", points.len() - out.len());
    }
    if out.len() < 2 {
        return Err(Error::Degenerate("all points are identical".into()));
    }
    Ok(out)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Sorted distances from each point to its `k` nearest other points.
fn knn_distances(points: &[&[f64]], k: usize) -> Vec<Vec<f64>> {
    points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut d: Vec<f64> = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| sq_dist(p, q))
                .collect();
            d.select_nth_unstable_by(k - 1, f64::total_cmp);
            d.truncate(k);
            d.sort_by(f64::total_cmp);
            d.into_iter().map(f64::sqrt).collect()
        })
        .collect()
}

/// Two-nearest-neighbor estimator.
///
/// With `μ = r₂/r₁` sorted ascending and `F̂ᵢ = i/N`, fits
/// `−log(1 − F̂) = d · log μ` through the origin after dropping the largest
/// `discard` fraction of ratios.
pub fn twonn_id<P: AsRef<[f64]>>(points: &[P], discard: f64) -> Result<IdEstimate> {
    if !(0.0..1.0).contains(&discard) {
        return Err(Error::Config(format!("discard fraction must be in [0, 1), got {discard}")));
    }
    let pts = distinct(points)?;
    let n = pts.len();
    if n < TWONN_MIN_POINTS {
        return Err(Error::InvalidInput(format!(
            "TwoNN needs at least {TWONN_MIN_POINTS} distinct points, got {n}"
        )));
    }
    let mut mu: Vec<f64> = knn_distances(&pts, 2).iter().map(|d| d[1] / d[0]).collect();
    mu.sort_by(f64::total_cmp);
    // F̂ = 1 at i = N, so at least the last ratio is always dropped.
    let keep = (((1.0 - discard) * n as f64).floor() as usize).min(n - 1);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, m) in mu[..keep].iter().enumerate() {
        let x = m.ln();
        let y = -(1.0 - (i + 1) as f64 / n as f64).ln();
        sxy += x * y;
        sxx += x * x;
    }
    if sxx == 0.0 {
        return Err(Error::Degenerate("every neighbor ratio is 1".into()));
    }
    Ok(IdEstimate {
        estimator: IdEstimator::TwoNn,
        value: sxy / sxx,
        points: n,
        parameter: discard,
    })
}

/// Maximum-likelihood estimator averaged over points:
/// `m̂(x) = [ (1/(k−1)) Σ_{j<k} log(T_k / T_j) ]⁻¹`.
pub fn mle_id<P: AsRef<[f64]>>(points: &[P], k: usize) -> Result<IdEstimate> {
    if k < 2 {
        return Err(Error::Config(format!("MLE needs k >= 2 neighbors, got {k}")));
    }
    let pts = distinct(points)?;
    let n = pts.len();
    if n <= k {
        return Err(Error::InvalidInput(format!(
            "MLE with k = {k} needs more than {k} distinct points, got {n}"
        )));
    }
    let local: Vec<f64> = knn_distances(&pts, k)
        .iter()
        .map(|d| {
            let tk = d[k - 1];
            let s: f64 = d[..k - 1].iter().map(|t| (tk / t).ln()).sum();
            (k - 1) as f64 / s
        })
        .collect();
    if local.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("neighbor distances are all equal at some point".into()));
    }
    Ok(IdEstimate {
        estimator: IdEstimator::Mle,
        value: local.iter().sum::<f64>() / n as f64,
        points: n,
        parameter: k as f64,
    })
}

/// Point clouds of known intrinsic dimension for checking the estimators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SyntheticManifold {
    /// Segment `[0, 1]`.
    Line,
    /// Unit square.
    Plane,
    /// Unit 5-cube.
    Cube5,
}

impl SyntheticManifold {
    pub fn dim(self) -> usize {
        match self {
            SyntheticManifold::Line => 1,
            SyntheticManifold::Plane => 2,
            SyntheticManifold::Cube5 => 5,
        }
    }

    /// `n` uniform points mapped into `R^ambient` by a seeded isometry.
    pub fn sample(self, n: usize, ambient: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let d = self.dim();
        if ambient < d {
            return Err(Error::Config(format!("ambient dim {ambient} is below the manifold dim {d}")));
        }
        let mut rng = rng_for(seed, "synthetic_manifold", d as u64);
        let g = DMatrix::from_fn(ambient, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let q = g.qr().q();
        Ok((0..n)
            .map(|_| {
                let u: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
                (0..ambient).map(|r| (0..d).map(|c| q[(r, c)] * u[c]).sum()).collect()
            })
            .collect())
    }
}

impl std::str::FromStr for SyntheticManifold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "line" => Ok(SyntheticManifold::Line),
            "plane" => Ok(SyntheticManifold::Plane),
            "cube5" | "cube" => Ok(SyntheticManifold::Cube5),
            other => Err(Error::Config(format!("unknown synthetic manifold {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn duplicates_are_dropped() {
        let pts = vec![vec![0.0, 1.0], vec![0.0, 1.0], vec![2.0, 3.0]];
        assert_eq!(distinct(&pts).unwrap().len(), 2);
        let same = vec![vec![1.0, 1.0]; 5];
        assert!(matches!(distinct(&same), Err(Error::Degenerate(_))));
    }

    #[test]
    fn too_few_points() {
        let mut rng = crate::seed::rng_for(0, "test", 0);
        let pts: Vec<Vec<f64>> = (0..50).map(|_| vec![rng.random(), rng.random()]).collect();
        assert!(twonn_id(&pts, 0.1).is_err());
        assert!(mle_id(&pts[..20], 20).is_err());
        assert!(mle_id(&pts, 20).is_ok());
    }

    #[test]
    fn knn_is_sorted_and_excludes_self() {
        let pts: Vec<&[f64]> = vec![&[0.0], &[1.0], &[3.0], &[7.0]];
        let d = knn_distances(&pts, 2);
        assert_eq!(d[0], [1.0, 3.0]);
        assert_eq!(d[3], [4.0, 6.0]);
    }
}
