//! On-disk library layout and file formats.

mod library_io;
mod mask_io;
mod ply;

pub use library_io::{
    file_stem, load_library, read_manifest, save_library, verify_dispersion, GenerationSpec,
    GeometrySpec, GridSpec, LibraryManifest, LoadCheck, ManifestEntry, MaskRef, HU_TOLERANCE,
    MANIFEST_FILE, MANIFEST_VERSION,
};
pub use mask_io::{read_mask_image, write_mask_png};
pub use ply::{decode_ply, encode_ply, read_ply, write_ply};
