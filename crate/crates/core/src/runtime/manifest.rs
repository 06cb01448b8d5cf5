use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Memory layout of the graph input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    Nchw,
    Nhwc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub layout: Layout,
}

/// Per-channel `(x − mean) / std`, performed by the graph itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Normalization {
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

impl Normalization {
    pub const IMAGENET: Normalization = Normalization {
        mean: [0.485, 0.456, 0.406],
        std: [0.229, 0.224, 0.225],
    };
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TapSpec {
    pub tap_id: usize,
    pub tensor_name: String,
    pub display_name: String,
}

/// Sidecar describing a model graph: its input, preprocessing constants and
/// the tapped intermediate tensors.
///
/// Tap 0 is the raw input space and never appears in `taps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelManifest {
    pub name: String,
    pub input: InputSpec,
    pub normalization: Normalization,
    pub taps: Vec<TapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top1_accuracy: Option<f64>,
}

impl ModelManifest {
    pub fn from_json(text: &str) -> Result<Self> {
        let manifest: ModelManifest =
            serde_json::from_str(text).map_err(|e| Error::Manifest(format!("invalid manifest: {e}")))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Manifest(msg));
        if self.name.is_empty() {
            return bad("model name is empty".into());
        }
        if self.input.channels != 3 {
            return bad(format!("input must have 3 channels, got {}", self.input.channels));
        }
        if self.input.height == 0 || self.input.width == 0 {
            return bad("input dims must be positive".into());
        }
        if let Some(s) = self.normalization.std.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return bad(format!("normalization std must be positive, got {s}"));
        }
        if self.normalization.mean.iter().any(|m| !m.is_finite()) {
            return bad("normalization mean must be finite".into());
        }
        if self.taps.is_empty() {
            return bad("manifest lists no taps".into());
        }
        let mut names = HashSet::new();
        let mut previous = 0;
        for tap in &self.taps {
            if tap.tap_id == 0 {
                return bad(format!(
                    "tap {:?} uses id 0, which is reserved for input space",
                    tap.tensor_name
                ));
            }
            if tap.tap_id <= previous {
                return bad(format!(
                    "tap ids must increase with depth, {} follows {previous}",
                    tap.tap_id
                ));
            }
            previous = tap.tap_id;
            if !names.insert(tap.tensor_name.as_str()) {
                return bad(format!("tensor {:?} is tapped twice", tap.tensor_name));
            }
        }
        if let Some(a) = self.top1_accuracy {
            if !(0.0..=1.0).contains(&a) {
                return bad(format!("top1_accuracy must lie in [0, 1], got {a}"));
            }
        }
        Ok(())
    }

    /// Display names with the input space first.
    pub fn layer_names(&self) -> Vec<String> {
        std::iter::once("input".to_string())
            .chain(self.taps.iter().map(|t| t.display_name.clone()))
            .collect()
    }

    /// Layer indices with the input space first.
    pub fn layer_ids(&self) -> Vec<usize> {
        std::iter::once(0).chain(self.taps.iter().map(|t| t.tap_id)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest() -> ModelManifest {
        ModelManifest {
            name: "m".into(),
            input: InputSpec {
                height: 8,
                width: 8,
                channels: 3,
                layout: Layout::Nchw,
            },
            normalization: Normalization::IMAGENET,
            taps: vec![
                TapSpec {
                    tap_id: 1,
                    tensor_name: "a".into(),
                    display_name: "A".into(),
                },
                TapSpec {
                    tap_id: 2,
                    tensor_name: "b".into(),
                    display_name: "B".into(),
                },
            ],
            top1_accuracy: Some(0.7),
        }
    }

    #[test]
    fn json_round_trip() {
        let m = manifest();
        let text = m.to_json();
        assert!(text.contains("\"tensor_name\": \"a\""));
        assert!(text.contains("\"layout\": \"nchw\""));
        assert_eq!(ModelManifest::from_json(&text).unwrap(), m);
        assert_eq!(m.layer_ids(), [0, 1, 2]);
        assert_eq!(m.layer_names(), ["input", "A", "B"]);
    }

    #[test]
    fn accuracy_is_optional() {
        let mut m = manifest();
        m.top1_accuracy = None;
        assert!(!m.to_json().contains("top1_accuracy"));
        assert_eq!(ModelManifest::from_json(&m.to_json()).unwrap(), m);
    }

    #[test]
    fn rejects_invalid_manifests() {
        let cases: Vec<Box<dyn Fn(&mut ModelManifest)>> = vec![
            Box::new(|m| m.taps[0].tap_id = 0),
            Box::new(|m| m.taps[1].tap_id = 1),
            Box::new(|m| m.taps[1].tensor_name = "a".into()),
            Box::new(|m| m.top1_accuracy = Some(1.5)),
            Box::new(|m| m.normalization.std[1] = 0.0),
            Box::new(|m| m.input.channels = 1),
            Box::new(|m| m.taps.clear()),
        ];
        for mutate in cases {
            let mut m = manifest();
            mutate(&mut m);
            assert!(matches!(m.validate(), Err(Error::Manifest(_))));
        }
        assert!(ModelManifest::from_json("{\"name\": \"x\"}").is_err());
        let mut extra: serde_json::Value = serde_json::from_str(&manifest().to_json()).unwrap();
        extra["bogus"] = 1.into();
        assert!(ModelManifest::from_json(&extra.to_string()).is_err());
    }
}
