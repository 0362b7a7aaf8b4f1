//! Rasterization, Hu-moment dispersion, IoU classification and the pattern library.

mod hu;
mod iou;
mod library;
mod mask;

pub use hu::{
    hu_distance, hu_distance_detailed, hu_moments, hu_signature, log_transform,
    symmetric_hu_distance, HuDistance, HuSignature, HU_TERM_EPS,
};
pub use iou::{classify, iou_loss, ClassificationResult, Imprint, IouLoss, Template};
pub use library::{
    generate_library, generate_library_with, Admission, GenerationProgress, LibraryConfig,
    LibraryEntry, PatternLibrary,
};
pub use mask::{
    dilate, ellipse_kernel, rasterize, rasterize_triangles, rasterize_with_margin, Mask, PixelBox,
    DEFAULT_MARGIN_PX,
};
