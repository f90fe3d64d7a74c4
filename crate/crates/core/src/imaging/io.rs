use std::path::Path;

use image::{ImageBuffer, Luma, Rgb};

use super::plane::{quantize_u8, ImagePlane, RgbImage};
use crate::error::{Error, Result};

/// Reads an 8-bit PNG or TIFF (gray or color) as RGB.
pub fn read_rgb(path: &Path) -> Result<RgbImage> {
    let img = image::open(path).map_err(|e| Error::unreadable(path, e))?;
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    RgbImage::new(w as usize, h as usize, rgb.into_raw())
}

pub fn image_dimensions(path: &Path) -> Result<(usize, usize)> {
    let (w, h) = image::image_dimensions(path).map_err(|e| Error::unreadable(path, e))?;
    Ok((w as usize, h as usize))
}

pub fn write_rgb_png(path: &Path, img: &RgbImage) -> Result<()> {
    let buf: ImageBuffer<Rgb<u8>, Vec<u8>> =
        ImageBuffer::from_raw(img.width() as u32, img.height() as u32, img.data().to_vec())
            .expect("buffer length matches dimensions");
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::write_failure(path, e))
}

/// Writes a `[0, 1]` plane as an 8-bit grayscale PNG.
pub fn write_gray_png(path: &Path, p: &ImagePlane) -> Result<()> {
    let raw: Vec<u8> = p.data().iter().map(|&v| quantize_u8(v)).collect();
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> =
        ImageBuffer::from_raw(p.width() as u32, p.height() as u32, raw)
            .expect("buffer length matches dimensions");
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::write_failure(path, e))
}
