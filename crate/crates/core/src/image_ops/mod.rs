//! Deterministic image transforms: the augmentation set, edge-safe
//! rotation, resampling, a JPEG round trip and image-set loading.

mod augment;
mod dataset;
mod geometry;
mod jpeg;
mod raster;
mod resize;
pub mod synth;
mod transforms;

pub use augment::{
    apply_augmentation, default_augmentations, rotation_augmentations, Augmentation,
    AugmentationSpec,
};
pub use geometry::{
    crop_border, crop_rect, crop_resize, downscale, edge_safe_rotate, minimal_border, resolve_border,
    BorderCrop, RotationParams, MIN_GEOMETRIC_SIDE,
};
pub use dataset::{
    fit_image, is_image_path, list_images, load_image_dir, ImageRecord, ImageSet, SkippedImage,
};
pub(crate) use geometry::rotate_with_border;
pub use jpeg::jpeg_round_trip;
pub use raster::{Image, CHANNELS};
pub use resize::{resize, Interpolation};
pub use transforms::{
    brightness, contrast, gamma, gaussian_blur, hsv_to_rgb, hue, log_correction, rgb_to_hsv,
    saturation, sharpness, sigmoid_correction,
};
