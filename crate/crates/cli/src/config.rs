use std::path::{Path, PathBuf};

use nframe::frame::{FrameConfig, FrameKind};
use nframe::{Error, Result};
use serde::Deserialize;

/// Settings that may come from `--config` and are overridden by flags.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<Vec<PathBuf>>,
    pub images: Option<PathBuf>,
    pub frames: Option<Vec<String>>,
    pub frame_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub plot: Option<bool>,
    pub jobs: Option<usize>,
    pub frame: Option<FrameConfig>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Frame kinds from a comma list such as `augmentation,noise`, de-duplicated
/// in first-seen order.
pub fn parse_frames(specs: &[String]) -> Result<Vec<FrameKind>> {
    let mut kinds = Vec::new();
    for part in specs.iter().flat_map(|s| s.split(',')) {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let kind: FrameKind = part.parse()?;
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
    }
    if kinds.is_empty() {
        return Err(Error::Config("no frame kind given".into()));
    }
    Ok(kinds)
}

pub fn parse_k_list(spec: &str) -> Result<Vec<usize>> {
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad frame size {s:?} in --k")))
        })
        .collect()
}
