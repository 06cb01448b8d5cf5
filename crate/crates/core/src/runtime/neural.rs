use super::bundle::ModelBundle;
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::linalg::Matrix;

/// Finite-difference pushforward of a frame: one `n_i × k` matrix per layer,
/// input space first.
#[derive(Clone, Debug, PartialEq)]
pub struct NeuralFrame {
    layer_ids: Vec<usize>,
    layer_names: Vec<String>,
    matrices: Vec<Matrix>,
    /// Per layer, the directions whose column vanished.
    degenerate_columns: Vec<Vec<usize>>,
}

fn zero_columns(m: &Matrix) -> Vec<usize> {
    (0..m.cols())
        .filter(|&j| m.column(j).iter().all(|&v| v == 0.0))
        .collect()
}

impl NeuralFrame {
    /// Assembles a neural frame from precomputed layer matrices.
    pub fn new(layer_ids: Vec<usize>, layer_names: Vec<String>, matrices: Vec<Matrix>) -> Result<Self> {
        if matrices.is_empty() || layer_ids.len() != matrices.len() || layer_names.len() != matrices.len() {
            return Err(Error::Shape(format!(
                "{} layer ids and {} names for {} matrices",
                layer_ids.len(),
                layer_names.len(),
                matrices.len()
            )));
        }
        let k = matrices[0].cols();
        if let Some(m) = matrices.iter().find(|m| m.cols() != k) {
            return Err(Error::Shape(format!(
                "neural frame layers disagree on k: {k} and {}",
                m.cols()
            )));
        }
        let degenerate_columns = matrices.iter().map(zero_columns).collect();
        Ok(Self {
            layer_ids,
            layer_names,
            matrices,
            degenerate_columns,
        })
    }

    pub fn k(&self) -> usize {
        self.matrices[0].cols()
    }

    /// Number of layers including the input space.
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn layer_ids(&self) -> &[usize] {
        &self.layer_ids
    }

    pub fn layer_names(&self) -> &[String] {
        &self.layer_names
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.matrices
    }

    /// Matrix of the `i`-th layer in manifest order (0 is input space).
    pub fn layer(&self, i: usize) -> &Matrix {
        &self.matrices[i]
    }

    pub fn degenerate_columns(&self, i: usize) -> &[usize] {
        &self.degenerate_columns[i]
    }

    /// Applies `f` to every layer matrix, keeping names and ids.
    pub fn map_layers(&self, f: impl Fn(usize, &Matrix) -> Result<Matrix>) -> Result<NeuralFrame> {
        let matrices = self
            .matrices
            .iter()
            .enumerate()
            .map(|(i, m)| f(i, m))
            .collect::<Result<_>>()?;
        NeuralFrame::new(self.layer_ids.clone(), self.layer_names.clone(), matrices)
    }
}

/// Pushes `frame` through every tap of `bundle` with one batched pass over
/// the base and its `k` perturbations.
///
/// Column `j` of layer `i` is `(act_i(perturbed_j) − act_i(base)) / step_j`.
/// Layer 0 is the frame's own tangent matrix.
pub fn compute_neural_frame(bundle: &ModelBundle, frame: &Frame) -> Result<NeuralFrame> {
    let dims = bundle.input_dims();
    if frame.base().dims() != dims {
        return Err(Error::Shape(format!(
            "frame base is {}x{}, model {} expects {}x{}",
            frame.base().height(),
            frame.base().width(),
            bundle.name(),
            dims.0,
            dims.1
        )));
    }
    let k = frame.k();
    let perturbed: Vec<Vec<f64>> = (0..k).map(|j| frame.perturbed_values(j)).collect();
    let mut inputs: Vec<&[f64]> = Vec::with_capacity(k + 1);
    inputs.push(frame.base().as_slice());
    inputs.extend(perturbed.iter().map(Vec::as_slice));
    let acts = bundle.forward_taps(&inputs)?;

    let mut matrices = Vec::with_capacity(bundle.tap_count() + 1);
    matrices.push(frame.tangent_matrix()?);
    for t in 0..bundle.tap_count() {
        let base = &acts[0][t];
        let columns: Vec<Vec<f64>> = (0..k)
            .map(|j| {
                let step = frame.steps()[j];
                acts[j + 1][t]
                    .iter()
                    .zip(base)
                    .map(|(p, b)| (p - b) / step)
                    .collect()
            })
            .collect();
        matrices.push(Matrix::from_columns(&columns)?);
    }
    let manifest = bundle.manifest();
    let neural = NeuralFrame::new(manifest.layer_ids(), manifest.layer_names(), matrices)?;
    for i in 0..neural.len() {
        let zero = neural.degenerate_columns(i);
        if !zero.is_empty() {
            let labels: Vec<&str> = zero.iter().map(|&j| frame.labels()[j].as_str()).collect();
            log::warn!(
                "model {}: directions {:?} vanish at layer {}",
                bundle.name(),
                labels,
                neural.layer_names()[i]
            );
        }
    }
    Ok(neural)
}
