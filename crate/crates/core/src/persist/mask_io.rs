use std::fs;
use std::path::Path;

use image::{GrayImage, ImageFormat, Luma};

use crate::error::{Error, Result};
use crate::scalar::{Point2, Scalar};
use crate::shapemetrics::Mask;

fn image_error(path: &Path, e: image::ImageError) -> Error {
    match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::corrupt(path, other.to_string()),
    }
}

/// Writes an 8-bit grayscale PNG, 255 for set pixels, with +y pointing up.
pub fn write_mask_png<T: Scalar>(mask: &Mask<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let img = GrayImage::from_fn(mask.width as u32, mask.height as u32, |x, r| {
        let iy = mask.height - 1 - r as usize;
        Luma([if mask.get(x as usize, iy) { 255 } else { 0 }])
    });
    img.save_with_format(path, ImageFormat::Png)
        .map_err(|e| image_error(path, e))
}

/// Reads a mask image. Grayscale input is thresholded at 128; for portable
/// bitmaps (P1/P4) a 1 bit marks a set pixel.
pub fn read_mask_image<T: Scalar>(
    path: impl AsRef<Path>,
    pitch: T,
    origin: Option<Point2<T>>,
) -> Result<Mask<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bitmap = matches!(bytes.get(..2), Some(b"P1") | Some(b"P4"));
    let img = image::load_from_memory(&bytes)
        .map_err(|e| image_error(path, e))?
        .into_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut mask = match origin {
        Some(o) => Mask::new(w, h, pitch, o)?,
        None => Mask::centered(w, h, pitch)?,
    };
    for (x, r, px) in img.enumerate_pixels() {
        let on = if bitmap {
            px.0[0] < 128
        } else {
            px.0[0] >= 128
        };
        if on {
            mask.set(x as usize, h - 1 - r as usize, true);
        }
    }
    Ok(mask)
}
