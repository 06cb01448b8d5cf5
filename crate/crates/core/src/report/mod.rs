//! Serialized outputs: CSV tables, summary JSON and hand-drawn SVG charts.
//! Every writer is a pure function of its input, so reruns are
//! byte-identical.

mod svg;
mod tables;

pub use svg::{cka_heatmap, line_chart, Series};
pub use tables::{
    cka_csv, curves_csv, results_csv, to_json_bytes, FrameSummary, LayerSummary, ProbeSummary, SkippedEntry,
    CKA_HEADER, RESULTS_HEADER,
};
