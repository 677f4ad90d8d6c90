//! Binary PGM (P5) / PPM (P6) with maxval 255.
//!
//! 8-bit code `k` maps to the model value `2k/255 - 1`. Saving clamps to
//! [-1, 1] and rounds to the nearest code, so `load(save(x))` is the
//! quantized image and a second save is byte-identical to the first.

use std::fs;
use std::path::Path;

use super::{Image, Shape};
use crate::error::{Error, Result};

pub fn code_to_value(code: u8) -> f64 {
    2.0 * f64::from(code) / 255.0 - 1.0
}

pub fn value_to_code(v: f64) -> u8 {
    let scaled = (v.clamp(-1.0, 1.0) + 1.0) * 127.5;
    scaled.round().clamp(0.0, 255.0) as u8
}

/// Rounds every sample to the nearest representable 8-bit value.
pub fn quantize(img: &Image) -> Image {
    img.map(|v| code_to_value(value_to_code(v)))
}

pub fn encode(img: &Image) -> Vec<u8> {
    let magic = if img.channels() == 3 { "P6" } else { "P5" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.data().iter().map(|&v| value_to_code(v)));
    out
}

struct Header {
    channels: usize,
    width: usize,
    height: usize,
    payload_start: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err(Error::Format("expected P5 or P6 magic".into())),
    };
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for (n, field) in fields.iter_mut().enumerate() {
        // Whitespace and comments between tokens.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while !matches!(bytes.get(pos), Some(b'\n') | None) {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(Error::Format("truncated header".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format(format!("header field {n} is not a number")));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format(format!("header field {n} out of range")))?;
    }
    // Exactly one whitespace byte separates maxval from the payload.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::Format("missing whitespace after maxval".into())),
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(Error::Format(format!("unsupported maxval {maxval}")));
    }
    if width == 0 || height == 0 {
        return Err(Error::Format("zero image dimension".into()));
    }
    Ok(Header {
        channels,
        width,
        height,
        payload_start: pos,
    })
}

pub fn decode(bytes: &[u8]) -> Result<Image> {
    let h = parse_header(bytes)?;
    let shape = Shape::new(h.height, h.width, h.channels);
    let payload = &bytes[h.payload_start..];
    if payload.len() < shape.len() {
        return Err(Error::Format(format!(
            "truncated payload: {} of {} bytes",
            payload.len(),
            shape.len()
        )));
    }
    let data = payload[..shape.len()]
        .iter()
        .map(|&b| code_to_value(b))
        .collect();
    Ok(Image::from_raw(shape, data))
}

pub fn load(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

pub fn save(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(img)).map_err(|e| Error::io(path, e))
}

/// SHA-256 of the encoded file, hex.
pub fn content_hash(img: &Image) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(encode(img)))
}
