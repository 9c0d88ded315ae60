use std::io::Cursor;
use std::path::Path;

use image::codecs::jpeg::JpegEncoder;
use image::{ExtendedColorType, ImageEncoder, ImageFormat, RgbImage};

use super::Image;
use crate::error::{Error, Result};

pub fn encode_jpeg(img: &Image, quality: u8) -> Result<Vec<u8>> {
    if !(1..=100).contains(&quality) {
        return Err(Error::InvalidQuality(quality));
    }
    let mut out = Vec::new();
    JpegEncoder::new_with_quality(&mut out, quality)
        .write_image(
            img.data(),
            img.width() as u32,
            img.height() as u32,
            ExtendedColorType::Rgb8,
        )
        .map_err(|e| Error::MalformedStream(e.to_string()))?;
    Ok(out)
}

pub fn decode_jpeg(bytes: &[u8]) -> Result<Image> {
    decode_as(bytes, Some(ImageFormat::Jpeg))
}

pub fn encode_png(img: &Image) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    image::codecs::png::PngEncoder::new(&mut out)
        .write_image(
            img.data(),
            img.width() as u32,
            img.height() as u32,
            ExtendedColorType::Rgb8,
        )
        .map_err(|e| Error::MalformedStream(e.to_string()))?;
    Ok(out)
}

/// Decodes PNG or JPEG, sniffing the format from the stream.
pub fn decode_image(bytes: &[u8]) -> Result<Image> {
    decode_as(bytes, None)
}

fn decode_as(bytes: &[u8], format: Option<ImageFormat>) -> Result<Image> {
    let format = match format {
        Some(f) => f,
        None => image::guess_format(bytes).map_err(|e| Error::MalformedStream(e.to_string()))?,
    };
    if !matches!(format, ImageFormat::Png | ImageFormat::Jpeg) {
        return Err(Error::MalformedStream(format!("unsupported format {format:?}")));
    }
    let dynimg = image::load(Cursor::new(bytes), format)
        .map_err(|e| Error::MalformedStream(e.to_string()))?;
    let rgb: RgbImage = dynimg.into_rgb8();
    let (w, h) = rgb.dimensions();
    Image::from_raw(w as usize, h as usize, rgb.into_raw())
}

pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes)
}

pub fn save_png(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_png(img)?).map_err(|e| Error::io(path, e))
}

pub fn save_jpeg(img: &Image, quality: u8, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_jpeg(img, quality)?).map_err(|e| Error::io(path, e))
}
