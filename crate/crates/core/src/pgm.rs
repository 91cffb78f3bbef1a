//! 8-bit grayscale rasters and PGM (P2 / P5) files.

use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ImageEncoder, ImageFormat};

use crate::{Error, Result};

/// Row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmEncoding {
    /// P2
    Ascii,
    /// P5
    Binary,
}

impl Raster {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Format("raster must be nonempty".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::Format(format!(
                "{} pixels for a {width}x{height} raster",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn get(&self, col: usize, row: usize) -> u8 {
        self.pixels[row * self.width + col]
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Raster> {
    if !(bytes.starts_with(b"P2") || bytes.starts_with(b"P5")) {
        return Err(Error::Format("expected a P2 or P5 graymap".into()));
    }
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Pnm)
        .map_err(|e| Error::Format(e.to_string()))?;
    match img {
        DynamicImage::ImageLuma8(buf) => {
            let (w, h) = buf.dimensions();
            Raster::new(w as usize, h as usize, buf.into_raw())
        }
        other => Err(Error::Format(format!(
            "only 8-bit graymaps are supported, got {:?}",
            other.color()
        ))),
    }
}

pub fn encode_pgm(raster: &Raster, encoding: PgmEncoding) -> Result<Vec<u8>> {
    let sample = match encoding {
        PgmEncoding::Ascii => SampleEncoding::Ascii,
        PgmEncoding::Binary => SampleEncoding::Binary,
    };
    let mut out = Vec::new();
    PnmEncoder::new(&mut out)
        .with_subtype(PnmSubtype::Graymap(sample))
        .write_image(
            &raster.pixels,
            raster.width as u32,
            raster.height as u32,
            image::ExtendedColorType::L8,
        )
        .map_err(|e| Error::Format(e.to_string()))?;
    Ok(out)
}

/// Encoding of an existing PGM byte stream.
pub fn detect_encoding(bytes: &[u8]) -> Option<PgmEncoding> {
    match bytes.get(..2) {
        Some(b"P2") => Some(PgmEncoding::Ascii),
        Some(b"P5") => Some(PgmEncoding::Binary),
        _ => None,
    }
}

pub fn read_pgm(path: &Path) -> Result<Raster> {
    decode_pgm(&std::fs::read(path)?)
}

pub fn write_pgm(path: &Path, raster: &Raster, encoding: PgmEncoding) -> Result<()> {
    std::fs::write(path, encode_pgm(raster, encoding)?)?;
    Ok(())
}
