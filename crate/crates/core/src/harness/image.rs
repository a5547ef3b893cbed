//! Grayscale/RGB image grids and binary PPM (P5/P6) input/output.

use std::path::Path;

use crate::error::{Error, Result};

/// Image with values in [0, 1], row-major, channel-interleaved.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageGrid {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageGrid {
    /// Values are clamped into [0, 1].
    pub fn new(width: usize, height: usize, channels: usize, mut data: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidArgument(format!(
                "images carry 1 or 3 channels, got {channels}"
            )));
        }
        if width * height * channels != data.len() {
            return Err(Error::InvalidArgument(format!(
                "{width}x{height}x{channels} wants {} values, got {}",
                width * height * channels,
                data.len()
            )));
        }
        for v in &mut data {
            *v = v.clamp(0.0, 1.0);
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }
}

fn is_ppm_space(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c)
}

fn next_uint(bytes: &[u8], pos: &mut usize, what: &str) -> Result<u64> {
    while *pos < bytes.len() && is_ppm_space(bytes[*pos]) {
        *pos += 1;
    }
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::PpmFormat(format!("malformed header: missing {what}")));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::PpmFormat(format!("malformed header: bad {what}")))
}

/// Parses binary P5 (grayscale) or P6 (RGB) with maxval 255: magic,
/// whitespace-delimited width/height/maxval, one whitespace byte, payload.
pub fn parse_ppm(bytes: &[u8]) -> Result<ImageGrid> {
    if bytes.len() < 2 {
        return Err(Error::PpmFormat("malformed header: too short".into()));
    }
    let channels = match &bytes[..2] {
        b"P5" => 1,
        b"P6" => 3,
        _ => return Err(Error::PpmFormat("malformed header: expected P5 or P6 magic".into())),
    };
    let mut pos = 2;
    let width = next_uint(bytes, &mut pos, "width")? as usize;
    let height = next_uint(bytes, &mut pos, "height")? as usize;
    let maxval = next_uint(bytes, &mut pos, "maxval")?;
    if maxval != 255 {
        return Err(Error::PpmFormat(format!("unsupported maxval {maxval} (only 255)")));
    }
    if pos >= bytes.len() || !is_ppm_space(bytes[pos]) {
        return Err(Error::PpmFormat("malformed header: missing separator after maxval".into()));
    }
    pos += 1;
    let expected = width * height * channels;
    let payload = &bytes[pos..];
    if payload.len() < expected {
        return Err(Error::PpmFormat(format!(
            "truncated payload: expected {expected} bytes, got {}",
            payload.len()
        )));
    }
    let data = payload[..expected].iter().map(|&b| b as f64 / 255.0).collect();
    ImageGrid::new(width, height, channels, data)
}

/// Serializes with the exact header `P5\n{w} {h}\n255\n` (or P6) and
/// round-half-up byte quantization.
pub fn ppm_bytes(image: &ImageGrid) -> Vec<u8> {
    let magic = if image.channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend(image.data.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    out
}

pub fn load_ppm(path: impl AsRef<Path>) -> Result<ImageGrid> {
    parse_ppm(&std::fs::read(path)?)
}

pub fn save_ppm(image: &ImageGrid, path: impl AsRef<Path>) -> Result<()> {
    crate::harness::report::write_atomic(path, &ppm_bytes(image))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_reference_bytes() {
        let bytes = b"P5\n2 2\n255\n\x00\x80\xff\x40";
        let img = parse_ppm(bytes).unwrap();
        assert_eq!(img.width(), 2);
        assert_eq!(img.height(), 2);
        let expected = [0.0, 128.0 / 255.0, 1.0, 64.0 / 255.0];
        for (v, e) in img.data().iter().zip(expected) {
            assert!((v - e).abs() < 1e-12);
        }
    }

    #[test]
    fn roundtrip_is_bitwise_stable() {
        let bytes: Vec<u8> = b"P6\n3 2\n255\n".iter().copied().chain(0u8..18u8).collect();
        let img = parse_ppm(&bytes).unwrap();
        assert_eq!(ppm_bytes(&img), bytes);
    }

    #[test]
    fn sixteen_bit_maxval_rejected() {
        let bytes = b"P5\n1 1\n65535\n\x00\x00";
        let err = parse_ppm(bytes).unwrap_err();
        assert!(err.to_string().contains("unsupported maxval"));
    }

    #[test]
    fn truncated_payload_rejected() {
        let bytes = b"P5\n2 2\n255\n\x00\x80";
        let err = parse_ppm(bytes).unwrap_err();
        assert!(err.to_string().contains("truncated"));
    }

    #[test]
    fn bad_magic_rejected() {
        assert!(parse_ppm(b"P4\n1 1\n255\n\x00").is_err());
        assert!(parse_ppm(b"").is_err());
    }

    #[test]
    fn header_with_comment_is_malformed() {
        let bytes = b"P5\n# hello\n2 2\n255\n\x00\x00\x00\x00";
        assert!(parse_ppm(bytes).is_err());
    }

    #[test]
    fn save_rounds_half_up() {
        // 0.5/255 boundary: value mapping v*255 = 127.5 rounds to 128
        let img = ImageGrid::new(1, 1, 1, vec![127.5 / 255.0]).unwrap();
        let bytes = ppm_bytes(&img);
        assert_eq!(*bytes.last().unwrap(), 128);
    }

    #[test]
    fn values_clamped_on_construction() {
        let img = ImageGrid::new(1, 1, 1, vec![1.7]).unwrap();
        assert_eq!(img.data(), &[1.0]);
    }
}
