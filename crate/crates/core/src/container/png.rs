//! Lossless PNG encode/decode between [`Image`] (values in `[0, 1]`) and 8/16-bit files.

use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma, Rgb};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::Image;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum BitDepth {
    #[default]
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn max_value(self) -> f64 {
        match self {
            BitDepth::Eight => 255.0,
            BitDepth::Sixteen => 65535.0,
        }
    }

    pub fn bits(self) -> u8 {
        match self {
            BitDepth::Eight => 8,
            BitDepth::Sixteen => 16,
        }
    }
}

impl TryFrom<u8> for BitDepth {
    type Error = String;

    fn try_from(bits: u8) -> std::result::Result<Self, String> {
        match bits {
            8 => Ok(BitDepth::Eight),
            16 => Ok(BitDepth::Sixteen),
            other => Err(format!("unsupported bit depth {other} (expected 8 or 16)")),
        }
    }
}

impl From<BitDepth> for u8 {
    fn from(b: BitDepth) -> u8 {
        b.bits()
    }
}

fn quantize<T: TryFrom<u32>>(v: f64, depth: BitDepth) -> T {
    let q = (v.clamp(0.0, 1.0) * depth.max_value()).round() as u32;
    T::try_from(q).ok().expect("quantized value fits")
}

fn codec(path: &Path) -> impl FnOnce(image::ImageError) -> Error + '_ {
    move |source| Error::Codec {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes a 1- or 3-channel image. Values are clamped to `[0, 1]` and rounded.
pub fn write_png(path: &Path, img: &Image, depth: BitDepth) -> Result<()> {
    let (w, h) = (img.width() as u32, img.height() as u32);
    let dynamic = match (img.channels(), depth) {
        (1, BitDepth::Eight) => DynamicImage::ImageLuma8(
            ImageBuffer::<Luma<u8>, _>::from_raw(w, h, img.data().iter().map(|&v| quantize(v, depth)).collect())
                .expect("buffer size"),
        ),
        (1, BitDepth::Sixteen) => DynamicImage::ImageLuma16(
            ImageBuffer::<Luma<u16>, _>::from_raw(w, h, img.data().iter().map(|&v| quantize(v, depth)).collect())
                .expect("buffer size"),
        ),
        (3, BitDepth::Eight) => DynamicImage::ImageRgb8(
            ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, img.data().iter().map(|&v| quantize(v, depth)).collect())
                .expect("buffer size"),
        ),
        (3, BitDepth::Sixteen) => DynamicImage::ImageRgb16(
            ImageBuffer::<Rgb<u16>, _>::from_raw(w, h, img.data().iter().map(|&v| quantize(v, depth)).collect())
                .expect("buffer size"),
        ),
        (c, _) => return Err(Error::ShapeMismatch(format!("cannot encode {c}-channel image as PNG"))),
    };
    dynamic
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(codec(path))
}

/// Reads a PNG that must have exactly `channels` (1 = gray, 3 = RGB) channels, no alpha.
pub fn read_png(path: &Path, channels: usize) -> Result<(Image, BitDepth)> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let img = image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(codec(path))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let (data, depth): (Vec<f64>, BitDepth) = match (&img, channels) {
        (DynamicImage::ImageLuma8(b), 1) => (b.as_raw().iter().map(|&v| v as f64 / 255.0).collect(), BitDepth::Eight),
        (DynamicImage::ImageLuma16(b), 1) => {
            (b.as_raw().iter().map(|&v| v as f64 / 65535.0).collect(), BitDepth::Sixteen)
        }
        (DynamicImage::ImageRgb8(b), 3) => (b.as_raw().iter().map(|&v| v as f64 / 255.0).collect(), BitDepth::Eight),
        (DynamicImage::ImageRgb16(b), 3) => {
            (b.as_raw().iter().map(|&v| v as f64 / 65535.0).collect(), BitDepth::Sixteen)
        }
        (other, _) => {
            return Err(Error::Manifest(format!(
                "{} has pixel format {:?}, expected {}",
                path.display(),
                other.color(),
                if channels == 1 { "grayscale" } else { "RGB" }
            )))
        }
    };
    Ok((Image::from_vec(w, h, channels, data)?, depth))
}
