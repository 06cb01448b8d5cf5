//! Dense matrix primitives: singular values, stable rank, linear CKA,
//! Gram-preserving random isometries and random-matrix expectations.

mod cka;
mod isometry;
mod matrix;
mod random_matrix;
mod spectrum;

pub use cka::{centered_sample_gram, cka_from_grams, linear_cka, linear_cka_columns};
pub use isometry::{random_subspace_isometry, MappedFrame, SubspaceIsometry};
pub use matrix::Matrix;
pub use random_matrix::{
    adaptive_simpson, mc_residual_stable_rank, mp_residual_coefficient, mp_weight_coefficient,
    quarter_circle_expectation, ResidualMonteCarlo,
};
pub use spectrum::{singular_values, spectral_norm, stable_rank, SingularSpectrum};
