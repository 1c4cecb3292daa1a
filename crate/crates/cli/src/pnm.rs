//! Portable anymap images: P2/P5 graymaps and P3/P6 pixmaps in, P5 out.

use std::path::Path;

use platerange_core::raster::{to_grayscale, Raster};
use thiserror::Error;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PnmError {
    #[error("unsupported magic number {0:?}")]
    Magic(String),
    #[error("truncated header")]
    Header,
    #[error("invalid header field {0:?}")]
    Field(String),
    #[error("maxval {0} is outside 1..=255")]
    MaxVal(u32),
    #[error("sample value {value} exceeds maxval {maxval}")]
    Sample { value: u32, maxval: u32 },
    #[error("expected {expected} samples, found {found}")]
    Length { expected: usize, found: usize },
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Option<&'a str> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (self.pos > start).then(|| std::str::from_utf8(&self.bytes[start..self.pos]).ok()).flatten()
    }

    fn number(&mut self) -> std::result::Result<u32, PnmError> {
        let t = self.token().ok_or(PnmError::Header)?;
        t.parse().map_err(|_| PnmError::Field(t.to_string()))
    }
}

/// Decodes an 8-bit PNM image to grayscale. Color images are converted to
/// luma; samples are rescaled to 0..=255 when maxval is smaller.
pub fn decode(bytes: &[u8]) -> std::result::Result<Raster, PnmError> {
    let mut h = Header { bytes, pos: 0 };
    let magic = h.token().ok_or(PnmError::Header)?;
    let (channels, binary) = match magic {
        "P2" => (1, false),
        "P5" => (1, true),
        "P3" => (3, false),
        "P6" => (3, true),
        other => return Err(PnmError::Magic(other.to_string())),
    };
    let width = h.number()? as usize;
    let height = h.number()? as usize;
    let maxval = h.number()?;
    if !(1..=255).contains(&maxval) {
        return Err(PnmError::MaxVal(maxval));
    }
    let expected = width * height * channels;
    let mut samples = Vec::with_capacity(expected);
    if binary {
        // Exactly one whitespace byte separates maxval from the raster.
        let data = bytes.get(h.pos + 1..).unwrap_or(&[]);
        if data.len() < expected {
            return Err(PnmError::Length { expected, found: data.len() });
        }
        samples.extend_from_slice(&data[..expected]);
    } else {
        while samples.len() < expected {
            let Some(t) = h.token() else { break };
            let v: u32 = t.parse().map_err(|_| PnmError::Field(t.to_string()))?;
            if v > maxval {
                return Err(PnmError::Sample { value: v, maxval });
            }
            samples.push(v as u8);
        }
        if samples.len() < expected {
            return Err(PnmError::Length { expected, found: samples.len() });
        }
    }
    if let Some(&v) = samples.iter().find(|&&v| v as u32 > maxval) {
        return Err(PnmError::Sample { value: v as u32, maxval });
    }
    if maxval != 255 {
        for s in &mut samples {
            *s = ((*s as u32 * 255 + maxval / 2) / maxval) as u8;
        }
    }
    let raster = if channels == 3 {
        to_grayscale(width, height, &samples)
    } else {
        Raster::new(width, height, samples)
    };
    raster.map_err(|_| PnmError::Field(format!("{width}x{height}")))
}

/// Encodes a binary (P5) graymap.
pub fn encode_pgm(img: &Raster) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

pub fn read_image(path: &Path) -> Result<Raster> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode(&bytes).map_err(|e| CliError::format(path, e.to_string()))
}

pub fn write_pgm(path: &Path, img: &Raster) -> Result<()> {
    std::fs::write(path, encode_pgm(img)).map_err(|e| CliError::io(path, e))
}
