use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use super::Matrix;
use crate::error::{Error, Result};
use crate::seed::rng_for;

/// Relative threshold on `|R_jj|` below which a frame column is treated as
/// lying in the span of the previous ones.
const RANK_TOLERANCE: f64 = 1e-10;

/// Maps a frame onto a random `k`-dimensional subspace of `R^n` while
/// preserving every pairwise inner product.
///
/// For a frame `V` (`n × k`) with orthonormal basis `U` of its span, the
/// image is `W Uᵀ V`, where `W` is an orthonormal basis of a Gaussian
/// subspace. Since `UᵀV` is `k × k`, `(WUᵀV)ᵀ(WUᵀV) = VᵀUUᵀV = VᵀV`.
#[derive(Clone, Debug)]
pub struct SubspaceIsometry {
    ambient_dim: usize,
    frame_size: usize,
    target_basis: DMatrix<f64>,
}

#[derive(Clone, Debug)]
pub struct MappedFrame {
    pub matrix: Matrix,
    /// Number of basis directions that had to be taken from the orthogonal
    /// complement because `V` was rank deficient. Zero for full-rank frames.
    pub padded_directions: usize,
}

impl SubspaceIsometry {
    pub fn new(ambient_dim: usize, frame_size: usize, seed: u64) -> Result<Self> {
        if frame_size == 0 || frame_size > ambient_dim {
            return Err(Error::InvalidInput(format!(
                "frame size {frame_size} must be in 1..={ambient_dim}"
            )));
        }
        let mut rng = rng_for(seed, "subspace_isometry", 0);
        let gaussian = DMatrix::from_fn(ambient_dim, frame_size, |_, _| {
            StandardNormal.sample(&mut rng)
        });
        let target_basis = gaussian.qr().q();
        Ok(Self {
            ambient_dim,
            frame_size,
            target_basis,
        })
    }

    pub fn target_basis(&self) -> &DMatrix<f64> {
        &self.target_basis
    }

    pub fn map_frame(&self, frame: &Matrix) -> Result<MappedFrame> {
        if frame.rows() != self.ambient_dim || frame.cols() != self.frame_size {
            return Err(Error::Shape(format!(
                "isometry built for {}x{} frames, got {}x{}",
                self.ambient_dim,
                self.frame_size,
                frame.rows(),
                frame.cols()
            )));
        }
        // Householder QR yields k orthonormal columns even when V is rank
        // deficient; the extra columns span part of the orthogonal complement.
        let v = frame.as_dmatrix();
        let qr = v.clone().qr();
        let r = qr.r();
        let scale = (0..self.frame_size)
            .map(|j| r[(j, j)].abs())
            .fold(0.0, f64::max);
        let padded_directions = (0..self.frame_size)
            .filter(|&j| r[(j, j)].abs() <= RANK_TOLERANCE * scale)
            .count();
        if padded_directions > 0 {
            log::warn!(
                "frame spans only {} of {} dimensions; isometry padded with orthogonal complement",
                self.frame_size - padded_directions,
                self.frame_size
            );
        }
        let basis = qr.q();
        let coords = basis.tr_mul(v);
        let mapped = &self.target_basis * coords;
        Ok(MappedFrame {
            matrix: Matrix::from_dmatrix(mapped)?,
            padded_directions,
        })
    }
}

/// One-shot convenience wrapper around [`SubspaceIsometry`].
pub fn random_subspace_isometry(frame: &Matrix, seed: u64) -> Result<MappedFrame> {
    SubspaceIsometry::new(frame.rows(), frame.cols(), seed)?.map_frame(frame)
}
