//! 8-bit RGBA rasters and the single-channel validity mask, with PNG I/O.

use std::io::{BufReader, Cursor};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbaImage {
    pub width: u32,
    pub height: u32,
    /// Row-major RGBA bytes.
    pub data: Vec<u8>,
}

impl RgbaImage {
    pub fn new(width: u32, height: u32) -> Self {
        RgbaImage {
            width,
            height,
            data: vec![0; width as usize * height as usize * 4],
        }
    }

    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        let expected = width as usize * height as usize * 4;
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: data.len(),
            });
        }
        Ok(RgbaImage { width, height, data })
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> [u8; 4]) -> Self {
        let mut img = RgbaImage::new(width, height);
        for y in 0..height {
            for x in 0..width {
                img.set(x, y, f(x, y));
            }
        }
        img
    }

    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * 4
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 4] {
        let o = self.offset(x, y);
        [self.data[o], self.data[o + 1], self.data[o + 2], self.data[o + 3]]
    }

    pub fn set(&mut self, x: u32, y: u32, px: [u8; 4]) {
        let o = self.offset(x, y);
        self.data[o..o + 4].copy_from_slice(&px);
    }

    pub fn decode_png(bytes: &[u8]) -> Result<Self> {
        read_png(Cursor::new(bytes))
    }

    pub fn load_png(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        read_png(BufReader::new(file))
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        encode(self.width, self.height, png::ColorType::Rgba, &self.data, None)
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode_png()?).map_err(|e| Error::io(path, e))
    }
}

fn read_png<R: std::io::BufRead + std::io::Seek>(r: R) -> Result<RgbaImage> {
    let mut decoder = png::Decoder::new(r);
    decoder.set_transformations(png::Transformations::normalize_to_color8());
    let mut reader = decoder.read_info()?;
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader.next_frame(&mut buf)?;
    let raw = &buf[..info.buffer_size()];
    let data: Vec<u8> = match info.color_type {
        png::ColorType::Rgba => raw.to_vec(),
        png::ColorType::Rgb => raw.chunks_exact(3).flat_map(|c| [c[0], c[1], c[2], 255]).collect(),
        png::ColorType::GrayscaleAlpha => raw.chunks_exact(2).flat_map(|c| [c[0], c[0], c[0], c[1]]).collect(),
        png::ColorType::Grayscale => raw.iter().flat_map(|&g| [g, g, g, 255]).collect(),
        png::ColorType::Indexed => {
            return Err(Error::InvalidParameter("unexpanded palette image".into()));
        }
    };
    RgbaImage::from_raw(info.width, info.height, data)
}

fn encode(width: u32, height: u32, color: png::ColorType, data: &[u8], comment: Option<&str>) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width, height);
        enc.set_color(color);
        enc.set_depth(png::BitDepth::Eight);
        if let Some(text) = comment {
            enc.add_text_chunk("Comment".to_string(), text.to_string())?;
        }
        let mut writer = enc.write_header()?;
        writer.write_image_data(data)?;
        writer.finish()?;
    }
    Ok(out)
}

/// Per-pixel validity class; the discriminant is the byte stored in the mask PNG.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum ValidityClass {
    Valid = 0,
    OccludedSource = 1,
    NewlyVisible = 2,
    Degenerate = 3,
    FragileRegion = 4,
    Background = 5,
}

impl ValidityClass {
    pub const ALL: [ValidityClass; 6] = [
        ValidityClass::Valid,
        ValidityClass::OccludedSource,
        ValidityClass::NewlyVisible,
        ValidityClass::Degenerate,
        ValidityClass::FragileRegion,
        ValidityClass::Background,
    ];

    pub fn from_byte(b: u8) -> Option<Self> {
        Self::ALL.get(b as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ValidityClass::Valid => "valid",
            ValidityClass::OccludedSource => "occluded_source",
            ValidityClass::NewlyVisible => "newly_visible",
            ValidityClass::Degenerate => "degenerate",
            ValidityClass::FragileRegion => "fragile_region",
            ValidityClass::Background => "background",
        }
    }
}

/// Text stored in the mask PNG's `Comment` chunk.
pub fn mask_legend() -> String {
    let classes: Vec<String> = ValidityClass::ALL
        .iter()
        .map(|c| format!("{}={}", *c as u8, c.name()))
        .collect();
    format!("validity mask classes: {}", classes.join(" "))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidityMask {
    pub width: u32,
    pub height: u32,
    pub classes: Vec<ValidityClass>,
}

impl ValidityMask {
    pub fn get(&self, x: u32, y: u32) -> ValidityClass {
        self.classes[y as usize * self.width as usize + x as usize]
    }

    pub fn bytes(&self) -> Vec<u8> {
        self.classes.iter().map(|c| *c as u8).collect()
    }

    pub fn count(&self, class: ValidityClass) -> usize {
        self.classes.iter().filter(|c| **c == class).count()
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        encode(self.width, self.height, png::ColorType::Grayscale, &self.bytes(), Some(&mask_legend()))
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode_png()?).map_err(|e| Error::io(path, e))
    }

    pub fn decode_png(bytes: &[u8]) -> Result<Self> {
        let mut decoder = png::Decoder::new(Cursor::new(bytes));
        decoder.set_transformations(png::Transformations::normalize_to_color8());
        let mut reader = decoder.read_info()?;
        let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
        let info = reader.next_frame(&mut buf)?;
        if info.color_type != png::ColorType::Grayscale {
            return Err(Error::InvalidParameter("mask must be single-channel".into()));
        }
        let classes = buf[..info.buffer_size()]
            .iter()
            .map(|&b| ValidityClass::from_byte(b).ok_or_else(|| Error::InvalidParameter(format!("bad mask byte {b}"))))
            .collect::<Result<_>>()?;
        Ok(ValidityMask {
            width: info.width,
            height: info.height,
            classes,
        })
    }
}
