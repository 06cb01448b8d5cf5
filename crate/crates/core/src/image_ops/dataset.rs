use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{crop_rect, resize, Image, Interpolation};
use crate::error::{Error, Result};

/// An input image, identified by its file stem.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageRecord {
    pub id: String,
    pub image: Image,
    /// Dims of the file before fitting.
    pub source_dims: (usize, usize),
}

impl ImageRecord {
    /// Wraps an in-memory image that needs no fitting.
    pub fn new(id: impl Into<String>, image: Image) -> Self {
        let source_dims = image.dims();
        Self {
            id: id.into(),
            image,
            source_dims,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SkippedImage {
    pub image: String,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ImageSet {
    pub images: Vec<ImageRecord>,
    pub skipped: Vec<SkippedImage>,
}

/// Center-crops `x` to the aspect ratio of `height × width`, then resizes
/// bilinearly. Identity when the dims already match.
pub fn fit_image(x: &Image, height: usize, width: usize) -> Result<Image> {
    let (h, w) = x.dims();
    if (h, w) == (height, width) {
        return Ok(x.clone());
    }
    // Compare h/w against height/width without division.
    let (ch, cw) = if h * width > w * height {
        (((w * height) as f64 / width as f64).round().max(1.0) as usize, w)
    } else {
        (h, ((h * width) as f64 / height as f64).round().max(1.0) as usize)
    };
    let cropped = crop_rect(x, (h - ch) / 2, (w - cw) / 2, ch, cw)?;
    resize(&cropped, height, width, Interpolation::Bilinear)
}

pub fn is_image_path(path: &Path) -> bool {
    path.is_file()
        && path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
            .unwrap_or(false)
}

/// Image files of `dir` in lexicographic order.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| is_image_path(p))
        .collect();
    files.sort();
    Ok(files)
}

/// Loads every PNG/JPEG in `dir`, sorted by file stem, fitting each to
/// `target` when given. Undecodable files are skipped with a reason.
pub fn load_image_dir(dir: &Path, target: Option<(usize, usize)>) -> Result<ImageSet> {
    let mut set = ImageSet::default();
    for path in list_images(dir)? {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        if set.images.iter().any(|r| r.id == id) {
            return Err(Error::Ingest {
                path,
                reason: format!("two images share the id {id:?}"),
            });
        }
        let loaded = Image::load(&path).and_then(|img| {
            let source_dims = img.dims();
            let image = match target {
                Some((h, w)) => fit_image(&img, h, w)?,
                None => img,
            };
            Ok(ImageRecord {
                id: id.clone(),
                image,
                source_dims,
            })
        });
        match loaded {
            Ok(record) => set.images.push(record),
            Err(e) => {
                log::warn!("skipping {}: {e}", path.display());
                set.skipped.push(SkippedImage {
                    image: id,
                    reason: e.to_string(),
                });
            }
        }
    }
    set.images.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_crops_to_aspect_then_resizes() {
        let img = Image::from_fn(40, 80, |_, _, x| if (20..60).contains(&x) { 0.8 } else { 0.1 }).unwrap();
        let out = fit_image(&img, 32, 32).unwrap();
        assert_eq!(out.dims(), (32, 32));
        assert!(out.as_slice().iter().all(|&v| (v - 0.8).abs() < 1e-12));
        assert_eq!(fit_image(&out, 32, 32).unwrap(), out);
    }

    #[test]
    fn directory_loading_skips_bad_files() {
        let dir = tempfile::tempdir().unwrap();
        Image::filled(10, 12, [0.2; 3]).unwrap().save(&dir.path().join("b.png")).unwrap();
        Image::filled(12, 10, [0.4; 3]).unwrap().save(&dir.path().join("a.png")).unwrap();
        std::fs::write(dir.path().join("c.jpg"), b"garbage").unwrap();
        std::fs::write(dir.path().join("notes.txt"), b"ignored").unwrap();
        let set = load_image_dir(dir.path(), Some((8, 8))).unwrap();
        let ids: Vec<&str> = set.images.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["a", "b"]);
        assert_eq!(set.images[0].source_dims, (12, 10));
        assert_eq!(set.images[1].image.dims(), (8, 8));
        assert_eq!(set.skipped.len(), 1);
        assert_eq!(set.skipped[0].image, "c");
    }
}
