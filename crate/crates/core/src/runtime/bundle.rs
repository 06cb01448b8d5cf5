use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use sha2::{Digest, Sha256};
use tract_onnx::pb;
use tract_onnx::prelude::*;

use super::manifest::{Layout, ModelManifest};
use crate::error::{Error, Result};
use crate::image_ops::Image;

type Plan = Arc<TypedRunnableModel>;

/// Floating-point type of the graph input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    F32,
    F64,
}

/// An ONNX graph whose tapped tensors are graph outputs, plus its manifest.
///
/// Optimized plans are built lazily per batch size and shared between
/// threads.
pub struct ModelBundle {
    manifest: ModelManifest,
    graph_path: PathBuf,
    digest: String,
    precision: Precision,
    model: InferenceModel,
    plans: Mutex<HashMap<usize, Plan>>,
}

impl std::fmt::Debug for ModelBundle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelBundle")
            .field("name", &self.manifest.name)
            .field("graph_path", &self.graph_path)
            .field("precision", &self.precision)
            .finish()
    }
}

pub const GRAPH_FILE: &str = "model.onnx";
pub const MANIFEST_FILE: &str = "manifest.json";

fn tensor_shape(info: &pb::ValueInfoProto) -> Option<(i32, Vec<Option<i64>>)> {
    use pb::tensor_shape_proto::dimension::Value;
    use pb::type_proto::Value as TypeValue;
    let TypeValue::TensorType(t) = info.r#type.as_ref()?.value.as_ref()?;
    let dims = t
        .shape
        .as_ref()?
        .dim
        .iter()
        .map(|d| match d.value {
            Some(Value::DimValue(v)) => Some(v),
            _ => None,
        })
        .collect();
    Some((t.elem_type, dims))
}

fn inference_error(context: impl Into<String>, e: impl std::fmt::Display) -> Error {
    Error::Inference {
        context: context.into(),
        reason: format!("{e:#}"),
    }
}

/// Checks the manifest against the graph: one image input with matching
/// dims and every tap exposed as a graph output.
fn validate_graph(proto: &pb::ModelProto, manifest: &ModelManifest) -> Result<Precision> {
    let graph = proto
        .graph
        .as_ref()
        .ok_or_else(|| Error::Manifest("ONNX file contains no graph".into()))?;
    let initializers: std::collections::HashSet<&str> =
        graph.initializer.iter().map(|t| t.name.as_str()).collect();
    let inputs: Vec<&pb::ValueInfoProto> = graph
        .input
        .iter()
        .filter(|i| !initializers.contains(i.name.as_str()))
        .collect();
    if inputs.len() != 1 {
        return Err(Error::Manifest(format!(
            "graph must have exactly one input, found {}",
            inputs.len()
        )));
    }
    let input = inputs[0];
    let (elem_type, dims) = tensor_shape(input).ok_or_else(|| {
        Error::Manifest(format!("graph input {:?} has no tensor shape", input.name))
    })?;
    let precision = match elem_type {
        t if t == pb::tensor_proto::DataType::Float as i32 => Precision::F32,
        t if t == pb::tensor_proto::DataType::Double as i32 => Precision::F64,
        other => {
            return Err(Error::Manifest(format!(
                "graph input must be float or double, got ONNX type {other}"
            )))
        }
    };
    let spec = &manifest.input;
    let expected = match spec.layout {
        Layout::Nchw => [spec.channels, spec.height, spec.width],
        Layout::Nhwc => [spec.height, spec.width, spec.channels],
    };
    let matches = dims.len() == 4
        && dims[1..]
            .iter()
            .zip(expected)
            .all(|(d, e)| d.is_none_or(|d| d == e as i64));
    if !matches {
        let shown: Vec<String> = dims
            .iter()
            .map(|d| d.map_or("?".to_string(), |v| v.to_string()))
            .collect();
        return Err(Error::Manifest(format!(
            "graph input {:?} has shape [{}], manifest expects [N, {}] ({:?})",
            input.name,
            shown.join(", "),
            expected.map(|v| v.to_string()).join(", "),
            spec.layout
        )));
    }
    let outputs: std::collections::HashSet<&str> =
        graph.output.iter().map(|o| o.name.as_str()).collect();
    for tap in &manifest.taps {
        if !outputs.contains(tap.tensor_name.as_str()) {
            let mut available: Vec<&str> = outputs.iter().copied().collect();
            available.sort_unstable();
            return Err(Error::Manifest(format!(
                "tap {} names tensor {:?}, which is not a graph output (outputs: {})",
                tap.tap_id,
                tap.tensor_name,
                available.join(", ")
            )));
        }
    }
    Ok(precision)
}

/// Loads and validates a graph and its manifest.
pub fn load_bundle(graph_path: &Path, manifest_path: &Path) -> Result<ModelBundle> {
    let manifest = ModelManifest::load(manifest_path)?;
    let bytes = std::fs::read(graph_path).map_err(|e| Error::io(graph_path, e))?;
    let proto = onnx()
        .proto_model_for_read(&mut bytes.as_slice())
        .map_err(|e| Error::Manifest(format!("{}: not an ONNX model: {e:#}", graph_path.display())))?;
    let precision = validate_graph(&proto, &manifest)?;
    let model = onnx()
        .model_for_path(graph_path)
        .map_err(|e| inference_error(format!("parsing {}", graph_path.display()), e))?;
    let digest = Sha256::digest(&bytes);
    Ok(ModelBundle {
        manifest,
        graph_path: graph_path.to_path_buf(),
        digest: digest.iter().take(8).map(|b| format!("{b:02x}")).collect(),
        precision,
        model,
        plans: Mutex::new(HashMap::new()),
    })
}

/// Loads `model.onnx` and `manifest.json` from a bundle directory.
pub fn load_bundle_dir(dir: &Path) -> Result<ModelBundle> {
    load_bundle(&dir.join(GRAPH_FILE), &dir.join(MANIFEST_FILE))
}

impl ModelBundle {
    pub fn manifest(&self) -> &ModelManifest {
        &self.manifest
    }

    pub fn name(&self) -> &str {
        &self.manifest.name
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    /// Hex prefix of the SHA-256 of the graph file.
    pub fn graph_digest(&self) -> &str {
        &self.digest
    }

    /// Number of tapped tensors, not counting the input space.
    pub fn tap_count(&self) -> usize {
        self.manifest.taps.len()
    }

    /// Input dims `(height, width)`.
    pub fn input_dims(&self) -> (usize, usize) {
        (self.manifest.input.height, self.manifest.input.width)
    }

    fn input_shape(&self, batch: usize) -> [usize; 4] {
        let s = &self.manifest.input;
        match s.layout {
            Layout::Nchw => [batch, s.channels, s.height, s.width],
            Layout::Nhwc => [batch, s.height, s.width, s.channels],
        }
    }

    fn plan(&self, batch: usize) -> Result<Plan> {
        let mut plans = self.plans.lock().expect("plan cache poisoned");
        if let Some(plan) = plans.get(&batch) {
            return Ok(plan.clone());
        }
        let context = format!("building plan for {} at batch {batch}", self.manifest.name);
        let dt = match self.precision {
            Precision::F32 => f32::datum_type(),
            Precision::F64 => f64::datum_type(),
        };
        let fact = InferenceFact::dt_shape(dt, self.input_shape(batch));
        let names: Vec<&str> = self.manifest.taps.iter().map(|t| t.tensor_name.as_str()).collect();
        let plan = self
            .model
            .clone()
            .with_input_fact(0, fact)
            .and_then(|m| m.with_outputs_by_name(names))
            .and_then(|m| m.into_optimized())
            .and_then(|m| m.into_runnable())
            .map_err(|e| inference_error(context, e))?;
        plans.insert(batch, plan.clone());
        Ok(plan)
    }

    /// Runs the graph on a batch of channel-major inputs of length `3·H·W`
    /// and returns, per input and per tap, the activation flattened in
    /// channel-major order.
    ///
    /// Inputs are not required to lie in `[0, 1]`.
    pub fn forward_taps(&self, inputs: &[&[f64]]) -> Result<Vec<Vec<Vec<f64>>>> {
        if inputs.is_empty() {
            return Ok(Vec::new());
        }
        let s = &self.manifest.input;
        let plane = s.height * s.width;
        let per_input = s.channels * plane;
        if let Some(bad) = inputs.iter().find(|x| x.len() != per_input) {
            return Err(Error::Shape(format!(
                "model {} expects inputs of {} values ({}x{}x{}), got {}",
                self.manifest.name,
                per_input,
                s.channels,
                s.height,
                s.width,
                bad.len()
            )));
        }
        let batch = inputs.len();
        let mut flat = Vec::with_capacity(batch * per_input);
        for x in inputs {
            match s.layout {
                Layout::Nchw => flat.extend_from_slice(x),
                Layout::Nhwc => {
                    for p in 0..plane {
                        for c in 0..s.channels {
                            flat.push(x[c * plane + p]);
                        }
                    }
                }
            }
        }
        let shape = self.input_shape(batch);
        let tensor = match self.precision {
            Precision::F32 => {
                let narrow: Vec<f32> = flat.iter().map(|&v| v as f32).collect();
                Tensor::from_shape(&shape, &narrow)
            }
            Precision::F64 => Tensor::from_shape(&shape, &flat),
        }
        .map_err(|e| inference_error("building input tensor", e))?;
        let plan = self.plan(batch)?;
        let outputs = plan
            .run(tvec!(tensor.into()))
            .map_err(|e| inference_error(format!("running {} at batch {batch}", self.manifest.name), e))?;

        let mut per_image: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(outputs.len()); batch];
        for (tap, out) in self.manifest.taps.iter().zip(outputs.iter()) {
            let context = || format!("reading tap {:?}", tap.tensor_name);
            let cast = out.cast_to::<f64>().map_err(|e| inference_error(context(), e))?;
            let mut view = cast
                .to_plain_array_view::<f64>()
                .map_err(|e| inference_error(context(), e))?;
            if view.ndim() == 0 || view.shape()[0] != batch {
                return Err(inference_error(
                    context(),
                    format!("output shape {:?} has no batch axis of {batch}", view.shape()),
                ));
            }
            if s.layout == Layout::Nhwc && view.ndim() == 4 {
                view = view.permuted_axes(vec![0, 3, 1, 2]);
            }
            for (b, image) in per_image.iter_mut().enumerate() {
                image.push(view.index_axis(tract_ndarray::Axis(0), b).iter().copied().collect());
            }
        }
        Ok(per_image)
    }

    /// Convenience wrapper over [`ModelBundle::forward_taps`] for images.
    pub fn forward_images(&self, images: &[&Image]) -> Result<Vec<Vec<Vec<f64>>>> {
        let inputs: Vec<&[f64]> = images.iter().map(|i| i.as_slice()).collect();
        self.forward_taps(&inputs)
    }
}
