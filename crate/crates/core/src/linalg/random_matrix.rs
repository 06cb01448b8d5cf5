//! Stable rank of residual layers at He-normal initialization.
//!
//! For `W` with i.i.d. `N(0, 2/n)` entries the singular values follow the
//! quarter-circle law on `[0, 2√2]` with density `√(8 − y²) / (2π)`. A toy
//! residual layer `I + W` is modelled as having singular values `1 + σ_i`,
//! so its stable rank is `Σ(1 + σ_i)² / (1 + σ_1)²`, which for large `n`
//! approaches `n · E[(1 + y)²] / (1 + 2√2)²`.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{singular_values, Matrix};
use crate::error::{Error, Result};
use crate::seed::rng_for;

const EDGE: f64 = 2.0 * std::f64::consts::SQRT_2;

fn quarter_circle_density(y: f64) -> f64 {
    (8.0 - y * y).max(0.0).sqrt() / (2.0 * std::f64::consts::PI)
}

/// Adaptive Simpson quadrature with interval halving.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }

    let (fa, fb) = (f(a), f(b));
    let fm = f(0.5 * (a + b));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(&f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `E[g(y)]` under the quarter-circle law on `[0, 2√2]`.
pub fn quarter_circle_expectation<G: Fn(f64) -> f64>(g: G) -> f64 {
    adaptive_simpson(|y| g(y) * quarter_circle_density(y), 0.0, EDGE, 1e-8)
}

/// Large-`n` limit of `r(I + W) / n`, approximately 0.3685.
pub fn mp_residual_coefficient() -> f64 {
    let top = 1.0 + EDGE;
    quarter_circle_expectation(|y| (1.0 + y) * (1.0 + y)) / (top * top)
}

/// Large-`n` limit of `r(W) / n`, which is exactly 1/4.
pub fn mp_weight_coefficient() -> f64 {
    quarter_circle_expectation(|y| y * y) / (EDGE * EDGE)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualMonteCarlo {
    /// Mean of `Σ(1 + σ_i)² / ((1 + σ_1)² n)` over trials.
    pub residual: f64,
    /// Mean of `r(W) / n` over trials.
    pub weight: f64,
    pub n: usize,
    pub trials: usize,
}

/// Monte Carlo estimate of the residual and plain stable-rank ratios.
///
/// Trial `t` draws from its own stream keyed by `(seed, t)`, so the result
/// does not depend on the thread count.
pub fn mc_residual_stable_rank(n: usize, trials: usize, seed: u64) -> Result<ResidualMonteCarlo> {
    if n < 64 {
        return Err(Error::InvalidInput(format!("n must be >= 64, got {n}")));
    }
    if trials < 10 {
        return Err(Error::InvalidInput(format!(
            "trials must be >= 10, got {trials}"
        )));
    }
    let std = (2.0 / n as f64).sqrt();
    let per_trial: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_for(seed, "mc_residual", t as u64);
            let normal = Normal::new(0.0, std).expect("positive std");
            let entries: Vec<f64> = (0..n * n).map(|_| normal.sample(&mut rng)).collect();
            let w = Matrix::from_row_slice(n, n, &entries)?;
            let spectrum = singular_values(&w);
            let s = spectrum.values();
            let top = s[0];
            let shifted: f64 = s.iter().map(|v| (1.0 + v) * (1.0 + v)).sum();
            let plain: f64 = s.iter().map(|v| v * v).sum();
            Ok((
                shifted / ((1.0 + top) * (1.0 + top)) / n as f64,
                plain / (top * top) / n as f64,
            ))
        })
        .collect::<Result<_>>()?;
    let m = trials as f64;
    Ok(ResidualMonteCarlo {
        residual: per_trial.iter().map(|p| p.0).sum::<f64>() / m,
        weight: per_trial.iter().map(|p| p.1).sum::<f64>() / m,
        n,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn simpson_integrates_polynomials() {
        let got = adaptive_simpson(|x| x * x * x - 2.0 * x, 0.0, 3.0, 1e-12);
        assert!((got - (81.0 / 4.0 - 9.0)).abs() < 1e-12);
    }

    #[test]
    fn density_normalized() {
        assert!((quarter_circle_expectation(|_| 1.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn residual_coefficient_matches_closed_form() {
        // Circle moments: ∫√(8−y²) = 2π, ∫y√(8−y²) = 8^{3/2}/3, ∫y²√(8−y²) = 4π.
        let closed = (6.0 * PI + 2.0 * 8f64.powf(1.5) / 3.0) / (2.0 * PI * (9.0 + 4.0 * 2f64.sqrt()));
        let got = mp_residual_coefficient();
        assert!((got - closed).abs() < 1e-6, "{got} vs {closed}");
        assert!((got - 0.36849).abs() < 5e-4);
        assert_eq!((got * 100.0).round() / 100.0, 0.37);
    }

    #[test]
    fn weight_coefficient_is_quarter() {
        assert!((mp_weight_coefficient() - 0.25).abs() < 1e-6);
    }

    #[test]
    fn monte_carlo_rejects_small_inputs() {
        assert!(mc_residual_stable_rank(32, 10, 0).is_err());
        assert!(mc_residual_stable_rank(64, 5, 0).is_err());
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let a = mc_residual_stable_rank(64, 10, 5).unwrap();
        let b = mc_residual_stable_rank(64, 10, 5).unwrap();
        assert_eq!(a, b);
    }
}
