//! Small seeded ONNX models for tests and demos.
//!
//! The CNN fixture is `normalize → conv3x3(8) → relu → maxpool4 → dense(64)`
//! on 64×64 RGB input, tapped after the relu, the pool and the dense layer.
//! The linear fixture is `normalize → flatten → dense(32)`, whose Jacobian is
//! known in closed form.

use std::path::Path;

use prost::Message;
use rand_distr::{Distribution, Normal};
use tract_onnx::pb;

use super::bundle::{Precision, GRAPH_FILE, MANIFEST_FILE};
use super::manifest::{InputSpec, Layout, ModelManifest, Normalization, TapSpec};
use crate::error::{Error, Result};
use crate::seed::rng_for;

pub const FIXTURE_SIDE: usize = 64;
const CONV_CHANNELS: usize = 8;
const POOL: usize = 4;
const DENSE_OUT: usize = 64;
const LINEAR_OUT: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FixtureArch {
    Cnn,
    Linear,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixtureSpec {
    pub arch: FixtureArch,
    pub seed: u64,
    pub precision: Precision,
    /// Multiplies every weight and bias; 0 gives a constant model.
    pub weight_scale: f64,
    /// Reorders the conv channels (CNN only): new channel `c` is old channel
    /// `perm[c]`. The dense layer is rewired so its output is unchanged.
    pub channel_permutation: Option<Vec<usize>>,
    pub top1_accuracy: Option<f64>,
    pub name: Option<String>,
}

impl FixtureSpec {
    pub fn cnn(seed: u64) -> Self {
        Self {
            arch: FixtureArch::Cnn,
            seed,
            precision: Precision::F32,
            weight_scale: 1.0,
            channel_permutation: None,
            top1_accuracy: None,
            name: None,
        }
    }

    pub fn linear(seed: u64) -> Self {
        Self {
            arch: FixtureArch::Linear,
            ..Self::cnn(seed)
        }
    }

    fn model_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| match self.arch {
            FixtureArch::Cnn => format!("fixture-cnn-{}", self.seed),
            FixtureArch::Linear => format!("fixture-linear-{}", self.seed),
        })
    }
}

/// Weights exactly as stored in the graph, row-major.
#[derive(Clone, Debug, PartialEq)]
pub enum FixtureWeights {
    Cnn {
        /// `[8, 3, 3, 3]`
        conv_weight: Vec<f64>,
        conv_bias: Vec<f64>,
        /// `[64, 2048]`
        dense_weight: Vec<f64>,
        dense_bias: Vec<f64>,
    },
    Linear {
        /// `[32, 3·64·64]`
        weight: Vec<f64>,
        bias: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fixture {
    pub manifest: ModelManifest,
    pub weights: FixtureWeights,
    pub graph: Vec<u8>,
}

impl Fixture {
    /// Writes `model.onnx` and `manifest.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let graph = dir.join(GRAPH_FILE);
        std::fs::write(&graph, &self.graph).map_err(|e| Error::io(&graph, e))?;
        let manifest = dir.join(MANIFEST_FILE);
        std::fs::write(&manifest, self.manifest.to_json()).map_err(|e| Error::io(&manifest, e))
    }
}

fn round_to(precision: Precision, v: f64) -> f64 {
    match precision {
        Precision::F32 => v as f32 as f64,
        Precision::F64 => v,
    }
}

fn elem_type(precision: Precision) -> i32 {
    match precision {
        Precision::F32 => pb::tensor_proto::DataType::Float as i32,
        Precision::F64 => pb::tensor_proto::DataType::Double as i32,
    }
}

fn initializer(name: &str, dims: &[usize], values: &[f64], precision: Precision) -> pb::TensorProto {
    let raw_data = match precision {
        Precision::F32 => values.iter().flat_map(|&v| (v as f32).to_le_bytes()).collect(),
        Precision::F64 => values.iter().flat_map(|&v| v.to_le_bytes()).collect(),
    };
    pb::TensorProto {
        name: name.into(),
        dims: dims.iter().map(|&d| d as i64).collect(),
        data_type: elem_type(precision),
        raw_data,
        ..Default::default()
    }
}

fn ints(name: &str, values: &[i64]) -> pb::AttributeProto {
    pb::AttributeProto {
        name: name.into(),
        r#type: pb::attribute_proto::AttributeType::Ints as i32,
        ints: values.to_vec(),
        ..Default::default()
    }
}

fn int(name: &str, value: i64) -> pb::AttributeProto {
    pb::AttributeProto {
        name: name.into(),
        r#type: pb::attribute_proto::AttributeType::Int as i32,
        i: value,
        ..Default::default()
    }
}

fn node(op: &str, inputs: &[&str], output: &str, attribute: Vec<pb::AttributeProto>) -> pb::NodeProto {
    pb::NodeProto {
        name: output.into(),
        op_type: op.into(),
        input: inputs.iter().map(|s| s.to_string()).collect(),
        output: vec![output.into()],
        attribute,
        ..Default::default()
    }
}

/// Tensor value info with a symbolic batch axis in front of `dims`.
fn value_info(name: &str, dims: &[usize], precision: Precision) -> pb::ValueInfoProto {
    use pb::tensor_shape_proto::{dimension::Value, Dimension};
    let batch = Dimension {
        value: Some(Value::DimParam("N".into())),
        ..Default::default()
    };
    let dim = std::iter::once(batch)
        .chain(dims.iter().map(|&d| Dimension {
            value: Some(Value::DimValue(d as i64)),
            ..Default::default()
        }))
        .collect();
    pb::ValueInfoProto {
        name: name.into(),
        r#type: Some(pb::TypeProto {
            value: Some(pb::type_proto::Value::TensorType(pb::type_proto::Tensor {
                elem_type: elem_type(precision),
                shape: Some(pb::TensorShapeProto { dim }),
            })),
            ..Default::default()
        }),
        ..Default::default()
    }
}

fn gaussian(seed: u64, purpose: &str, len: usize, std: f64, scale: f64, precision: Precision) -> Vec<f64> {
    let mut rng = rng_for(seed, purpose, 0);
    let normal = Normal::new(0.0, std).expect("positive std");
    (0..len)
        .map(|_| round_to(precision, scale * normal.sample(&mut rng)))
        .collect()
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
        return Err(Error::InvalidInput(format!(
            "channel permutation must be a permutation of 0..{n}, got {perm:?}"
        )));
    }
    Ok(())
}

/// Builds the graph, manifest and weights for `spec` without touching disk.
pub fn build_fixture(spec: &FixtureSpec) -> Result<Fixture> {
    if !spec.weight_scale.is_finite() {
        return Err(Error::InvalidInput("weight scale must be finite".into()));
    }
    let p = spec.precision;
    let side = FIXTURE_SIDE;
    let norm = Normalization::IMAGENET;
    let mean: Vec<f64> = norm.mean.iter().map(|&v| round_to(p, v)).collect();
    let std: Vec<f64> = norm.std.iter().map(|&v| round_to(p, v)).collect();
    let mut initializers = vec![
        initializer("norm.mean", &[1, 3, 1, 1], &mean, p),
        initializer("norm.std", &[1, 3, 1, 1], &std, p),
    ];
    let mut nodes = vec![
        node("Sub", &["image", "norm.mean"], "centered", vec![]),
        node("Div", &["centered", "norm.std"], "normalized", vec![]),
    ];
    let (taps, outputs, weights) = match spec.arch {
        FixtureArch::Cnn => {
            let pooled = side / POOL;
            let flat = CONV_CHANNELS * pooled * pooled;
            let s = spec.weight_scale;
            let mut conv_weight = gaussian(spec.seed, "fixture.conv1.weight", CONV_CHANNELS * 27, (2.0f64 / 27.0).sqrt(), s, p);
            let mut conv_bias = gaussian(spec.seed, "fixture.conv1.bias", CONV_CHANNELS, 0.1, s, p);
            let mut dense_weight = gaussian(spec.seed, "fixture.dense.weight", DENSE_OUT * flat, (2.0 / flat as f64).sqrt(), s, p);
            let dense_bias = gaussian(spec.seed, "fixture.dense.bias", DENSE_OUT, 0.1, s, p);
            if let Some(perm) = &spec.channel_permutation {
                check_permutation(perm, CONV_CHANNELS)?;
                let per_channel = pooled * pooled;
                let (w0, b0, d0) = (conv_weight.clone(), conv_bias.clone(), dense_weight.clone());
                for (c, &src) in perm.iter().enumerate() {
                    conv_weight[c * 27..(c + 1) * 27].copy_from_slice(&w0[src * 27..(src + 1) * 27]);
                    conv_bias[c] = b0[src];
                    for o in 0..DENSE_OUT {
                        let row = o * flat;
                        dense_weight[row + c * per_channel..row + (c + 1) * per_channel]
                            .copy_from_slice(&d0[row + src * per_channel..row + (src + 1) * per_channel]);
                    }
                }
            }
            initializers.extend([
                initializer("conv1.weight", &[CONV_CHANNELS, 3, 3, 3], &conv_weight, p),
                initializer("conv1.bias", &[CONV_CHANNELS], &conv_bias, p),
                initializer("dense.weight", &[DENSE_OUT, flat], &dense_weight, p),
                initializer("dense.bias", &[DENSE_OUT], &dense_bias, p),
            ]);
            nodes.extend([
                node(
                    "Conv",
                    &["normalized", "conv1.weight", "conv1.bias"],
                    "conv1",
                    vec![ints("kernel_shape", &[3, 3]), ints("pads", &[1, 1, 1, 1])],
                ),
                node("Relu", &["conv1"], "relu1", vec![]),
                node(
                    "MaxPool",
                    &["relu1"],
                    "pool1",
                    vec![
                        ints("kernel_shape", &[POOL as i64, POOL as i64]),
                        ints("strides", &[POOL as i64, POOL as i64]),
                    ],
                ),
                node("Flatten", &["pool1"], "flat", vec![int("axis", 1)]),
                node("Gemm", &["flat", "dense.weight", "dense.bias"], "dense", vec![int("transB", 1)]),
            ]);
            let taps = vec![("relu1", "conv1.relu"), ("pool1", "pool1"), ("dense", "dense")];
            let outputs = vec![
                value_info("relu1", &[CONV_CHANNELS, side, side], p),
                value_info("pool1", &[CONV_CHANNELS, pooled, pooled], p),
                value_info("dense", &[DENSE_OUT], p),
            ];
            let weights = FixtureWeights::Cnn {
                conv_weight,
                conv_bias,
                dense_weight,
                dense_bias,
            };
            (taps, outputs, weights)
        }
        FixtureArch::Linear => {
            if spec.channel_permutation.is_some() {
                return Err(Error::InvalidInput(
                    "channel permutation applies to the CNN fixture only".into(),
                ));
            }
            let n = 3 * side * side;
            let s = spec.weight_scale;
            let weight = gaussian(spec.seed, "fixture.linear.weight", LINEAR_OUT * n, (1.0 / n as f64).sqrt(), s, p);
            let bias = gaussian(spec.seed, "fixture.linear.bias", LINEAR_OUT, 0.1, s, p);
            // MatMul + Add rather than Gemm: the engine types Gemm's implicit
            // alpha and beta as f32, which breaks double-precision graphs.
            let transposed: Vec<f64> = (0..n * LINEAR_OUT)
                .map(|i| weight[(i % LINEAR_OUT) * n + i / LINEAR_OUT])
                .collect();
            initializers.extend([
                initializer("linear.weight_t", &[n, LINEAR_OUT], &transposed, p),
                initializer("linear.bias", &[LINEAR_OUT], &bias, p),
            ]);
            nodes.extend([
                node("Flatten", &["normalized"], "flat", vec![int("axis", 1)]),
                node("MatMul", &["flat", "linear.weight_t"], "linear.product", vec![]),
                node("Add", &["linear.product", "linear.bias"], "linear", vec![]),
            ]);
            let taps = vec![("flat", "normalized"), ("linear", "linear")];
            let outputs = vec![value_info("flat", &[n], p), value_info("linear", &[LINEAR_OUT], p)];
            (taps, outputs, FixtureWeights::Linear { weight, bias })
        }
    };
    let graph = pb::GraphProto {
        name: spec.model_name(),
        node: nodes,
        initializer: initializers,
        input: vec![value_info("image", &[3, side, side], p)],
        output: outputs,
        ..Default::default()
    };
    let model = pb::ModelProto {
        ir_version: 8,
        opset_import: vec![pb::OperatorSetIdProto {
            domain: String::new(),
            version: 13,
        }],
        producer_name: "nframe".into(),
        graph: Some(graph),
        ..Default::default()
    };
    let manifest = ModelManifest {
        name: spec.model_name(),
        input: InputSpec {
            height: side,
            width: side,
            channels: 3,
            layout: Layout::Nchw,
        },
        normalization: norm,
        taps: taps
            .iter()
            .enumerate()
            .map(|(i, (tensor, display))| TapSpec {
                tap_id: i + 1,
                tensor_name: tensor.to_string(),
                display_name: display.to_string(),
            })
            .collect(),
        top1_accuracy: spec.top1_accuracy,
    };
    manifest.validate()?;
    Ok(Fixture {
        manifest,
        weights,
        graph: model.encode_to_vec(),
    })
}

/// Writes the seeded CNN fixture bundle into `out_dir`.
pub fn make_fixture_bundle(out_dir: &Path, seed: u64) -> Result<Fixture> {
    let fixture = build_fixture(&FixtureSpec::cnn(seed))?;
    fixture.write(out_dir)?;
    Ok(fixture)
}
