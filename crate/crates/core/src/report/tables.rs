use serde::Serialize;

use crate::analysis::{CkaReport, StableRankCurve};
use crate::error::{Error, Result};
use crate::frame::FrameKind;
use crate::image_ops::SkippedImage;

pub const RESULTS_HEADER: [&str; 6] = ["model", "image", "frame", "layer_index", "layer_name", "stable_rank"];
pub const CKA_HEADER: [&str; 6] = ["model_a", "model_b", "tap_a", "tap_b", "cka", "n_images"];
pub const CURVE_HEADER: [&str; 8] = ["model", "frame", "k", "layer_index", "layer_name", "mean", "ci_low", "ci_high"];

/// Shortest round-trip decimal; empty for undefined values.
fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn write_rows(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let codec = |e: csv::Error| Error::Codec(format!("csv: {e}"));
    w.write_record(header).map_err(codec)?;
    for row in rows {
        w.write_record(&row).map_err(codec)?;
    }
    w.into_inner().map_err(|e| Error::Codec(format!("csv: {e}")))
}

/// One row per (curve, image, layer), in curve order, then image id, then
/// layer.
pub fn results_csv(curves: &[StableRankCurve]) -> Result<Vec<u8>> {
    let rows = curves.iter().flat_map(|c| {
        c.images.iter().enumerate().flat_map(move |(i, image)| {
            c.taps.iter().map(move |t| {
                vec![
                    c.model.clone(),
                    image.clone(),
                    c.frame.name().to_string(),
                    t.layer_index.to_string(),
                    t.layer_name.clone(),
                    num(t.values[i]),
                ]
            })
        })
    });
    write_rows(&RESULTS_HEADER, rows)
}

/// Per-layer means with intervals, one row per (curve, layer). Used for
/// checkpoint series and vary-k sweeps.
pub fn curves_csv(curves: &[StableRankCurve]) -> Result<Vec<u8>> {
    let mut header = CURVE_HEADER.to_vec();
    header.push("n");
    let rows = curves.iter().flat_map(|c| {
        c.taps.iter().map(move |t| {
            vec![
                c.model.clone(),
                c.frame.name().to_string(),
                c.k.to_string(),
                t.layer_index.to_string(),
                t.layer_name.clone(),
                num(t.mean),
                num(t.ci_low),
                num(t.ci_high),
                t.n.to_string(),
            ]
        })
    });
    write_rows(&header, rows)
}

/// One row per layer pair; `tap_a`/`tap_b` are layer indices, 0 for input.
pub fn cka_csv(report: &CkaReport) -> Result<Vec<u8>> {
    let rows = report.layers_a.iter().enumerate().flat_map(|(i, la)| {
        report.layers_b.iter().enumerate().map(move |(j, lb)| {
            vec![
                report.model_a.clone(),
                report.model_b.clone(),
                la.layer_index.to_string(),
                lb.layer_index.to_string(),
                num(report.cka[i][j]),
                report.n_images[i][j].to_string(),
            ]
        })
    });
    write_rows(&CKA_HEADER, rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayerSummary {
    pub layer_index: usize,
    pub layer_name: String,
    pub mean: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub n: usize,
    pub degenerate_images: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameSummary {
    pub frame: FrameKind,
    pub k: usize,
    pub images: usize,
    pub layers: Vec<LayerSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SkippedEntry {
    pub frame: FrameKind,
    pub image: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeSummary {
    pub model: String,
    pub seed: u64,
    pub frames: Vec<FrameSummary>,
    /// Images whose frame could not be built, per frame kind.
    pub skipped: Vec<SkippedEntry>,
    /// Files that could not be decoded.
    pub unreadable: Vec<SkippedImage>,
}

impl ProbeSummary {
    pub fn new(model: &str, seed: u64, curves: &[StableRankCurve]) -> Self {
        let frames = curves
            .iter()
            .map(|c| FrameSummary {
                frame: c.frame,
                k: c.k,
                images: c.images.len(),
                layers: c
                    .taps
                    .iter()
                    .map(|t| LayerSummary {
                        layer_index: t.layer_index,
                        layer_name: t.layer_name.clone(),
                        mean: t.mean,
                        ci_low: t.ci_low,
                        ci_high: t.ci_high,
                        n: t.n,
                        degenerate_images: t.degenerate.clone(),
                    })
                    .collect(),
            })
            .collect();
        let skipped = curves
            .iter()
            .flat_map(|c| {
                c.skipped.iter().map(|s| SkippedEntry {
                    frame: c.frame,
                    image: s.image.clone(),
                    reason: s.reason.clone(),
                })
            })
            .collect();
        Self {
            model: model.to_string(),
            seed,
            frames,
            skipped,
            unreadable: Vec::new(),
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| Error::Codec(format!("json: {e}")))?;
    out.push(b'\n');
    Ok(out)
}
