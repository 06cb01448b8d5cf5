use image::codecs::jpeg::JpegEncoder;
use image::ImageFormat;

use super::Image;
use crate::error::{Error, Result};

/// Baseline JPEG encode at `quality` followed by a decode.
pub fn jpeg_round_trip(x: &Image, quality: u8) -> Result<Image> {
    if !(1..=100).contains(&quality) {
        return Err(Error::InvalidSpec(format!(
            "jpeg quality must be in 1..=100, got {quality}"
        )));
    }
    let rgb = x.to_rgb8();
    let mut bytes = Vec::new();
    JpegEncoder::new_with_quality(&mut bytes, quality)
        .encode_image(&rgb)
        .map_err(|e| Error::Codec(format!("jpeg encode: {e}")))?;
    let decoded = image::load_from_memory_with_format(&bytes, ImageFormat::Jpeg)
        .map_err(|e| Error::Codec(format!("jpeg decode: {e}")))?;
    Ok(Image::from_rgb8(&decoded.to_rgb8()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_quality() {
        let img = Image::filled(8, 8, [0.5; 3]).unwrap();
        assert!(jpeg_round_trip(&img, 0).is_err());
        assert!(jpeg_round_trip(&img, 101).is_err());
    }

    #[test]
    fn deterministic() {
        let img = Image::from_fn(16, 16, |c, y, x| ((x * 16 + y * 3 + c * 50) % 256) as f64 / 255.0).unwrap();
        assert_eq!(jpeg_round_trip(&img, 70).unwrap(), jpeg_round_trip(&img, 70).unwrap());
    }
}
