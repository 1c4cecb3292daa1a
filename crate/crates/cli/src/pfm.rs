//! `PF-GRAY` relative depth maps.
//!
//! Three text lines (`PF-GRAY`, `width height`, `scale`) followed by
//! `width × height` 32-bit floats, row-major, top row first. A negative
//! scale marks little-endian samples.

use std::path::Path;

use platerange_core::fusion::DepthMap;
use thiserror::Error;

use crate::error::{CliError, Result};

pub const MAGIC: &str = "PF-GRAY";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PfmError {
    #[error("missing {MAGIC} header")]
    Magic,
    #[error("invalid header line {0:?}")]
    Header(String),
    #[error("expected {expected} bytes of samples, found {found}")]
    Length { expected: usize, found: usize },
    #[error("invalid depth values: {0}")]
    Values(platerange_core::Error),
}

/// How the stored samples relate to depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DepthKind {
    #[default]
    Depth,
    /// Larger values are nearer, as produced by many relative-depth networks.
    InverseDepth,
}

fn next_line<'a>(bytes: &'a [u8], pos: &mut usize) -> std::result::Result<&'a str, PfmError> {
    let rest = &bytes[*pos..];
    let end = rest.iter().position(|&b| b == b'\n').ok_or(PfmError::Magic)?;
    *pos += end + 1;
    std::str::from_utf8(&rest[..end]).map(str::trim).map_err(|_| PfmError::Magic)
}

pub fn decode(bytes: &[u8], kind: DepthKind) -> std::result::Result<DepthMap, PfmError> {
    let mut pos = 0;
    if next_line(bytes, &mut pos)? != MAGIC {
        return Err(PfmError::Magic);
    }
    let dims = next_line(bytes, &mut pos)?;
    let parsed: Vec<usize> = dims.split_whitespace().filter_map(|t| t.parse().ok()).collect();
    let [width, height] = parsed[..] else {
        return Err(PfmError::Header(dims.to_string()));
    };
    let scale_line = next_line(bytes, &mut pos)?;
    let scale: f32 = scale_line.parse().map_err(|_| PfmError::Header(scale_line.to_string()))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(PfmError::Header(scale_line.to_string()));
    }
    let expected = width * height * 4;
    let data = &bytes[pos..];
    if data.len() != expected {
        return Err(PfmError::Length { expected, found: data.len() });
    }
    let values: Vec<f32> = data
        .chunks_exact(4)
        .map(|c| {
            let b = [c[0], c[1], c[2], c[3]];
            if scale < 0.0 {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            }
        })
        .collect();
    match kind {
        DepthKind::Depth => DepthMap::new(width, height, values),
        DepthKind::InverseDepth => DepthMap::from_inverse(width, height, values),
    }
    .map_err(PfmError::Values)
}

/// Encodes little-endian depth samples.
pub fn encode(map: &DepthMap) -> Vec<u8> {
    let mut out = format!("{MAGIC}\n{} {}\n-1.0\n", map.width(), map.height()).into_bytes();
    for v in map.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn read_depth(path: &Path, kind: DepthKind) -> Result<DepthMap> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode(&bytes, kind).map_err(|e| CliError::format(path, e.to_string()))
}

pub fn write_depth(path: &Path, map: &DepthMap) -> Result<()> {
    std::fs::write(path, encode(map)).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_little_endian() {
        let map = DepthMap::new(3, 2, vec![1.0, 2.5, 3.0, 4.0, 5.0, 6.25]).unwrap();
        assert_eq!(decode(&encode(&map), DepthKind::Depth).unwrap(), map);
    }

    #[test]
    fn big_endian_samples() {
        let mut bytes = b"PF-GRAY\n2 1\n1.0\n".to_vec();
        bytes.extend_from_slice(&2.0f32.to_be_bytes());
        bytes.extend_from_slice(&4.0f32.to_be_bytes());
        assert_eq!(decode(&bytes, DepthKind::Depth).unwrap().values(), &[2.0, 4.0]);
        let inv = decode(&bytes, DepthKind::InverseDepth).unwrap();
        assert_eq!(inv.values(), &[0.5, 0.25]);
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        assert_eq!(decode(b"PF\n1 1\n-1\n\0\0\0\0", DepthKind::Depth), Err(PfmError::Magic));
        assert_eq!(decode(b"PF-GRAY\n1\n-1\n", DepthKind::Depth), Err(PfmError::Header("1".into())));
        assert_eq!(
            decode(b"PF-GRAY\n1 1\n-1\n\0\0", DepthKind::Depth),
            Err(PfmError::Length { expected: 4, found: 2 })
        );
        let mut nan = b"PF-GRAY\n1 1\n-1\n".to_vec();
        nan.extend_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(decode(&nan, DepthKind::Depth), Err(PfmError::Values(_))));
    }
}
