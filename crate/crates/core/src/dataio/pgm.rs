use std::path::Path;

use crate::error::{Error, Result};
use crate::image::GrayImage;

/// Decodes a binary (P5) PGM with `maxval` up to 65535.
pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut pos = 0usize;
    let magic = next_token(bytes, &mut pos)?;
    if magic != "P5" {
        return Err(Error::UnsupportedFormat(format!("PGM magic {magic}")));
    }
    let width = parse_header_int(bytes, &mut pos, "width")?;
    let height = parse_header_int(bytes, &mut pos, "height")?;
    let maxval = parse_header_int(bytes, &mut pos, "maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Dimensions(format!("PGM is {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::UnsupportedFormat(format!("PGM maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let n = width * height;
    let wide = maxval > 255;
    let need = if wide { 2 * n } else { n };
    let raster = bytes
        .get(pos..pos + need)
        .ok_or_else(|| Error::Malformed(format!("PGM raster truncated: need {need} bytes")))?;
    let scale = maxval as f64;
    let data: Vec<f64> = if wide {
        raster
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64)
            .map(|v| (v / scale).min(1.0))
            .collect()
    } else {
        raster.iter().map(|&v| (v as f64 / scale).min(1.0)).collect()
    };
    GrayImage::new(width, height, data)
}

fn next_token(bytes: &[u8], pos: &mut usize) -> Result<String> {
    loop {
        match bytes.get(*pos) {
            None => return Err(Error::Malformed("PGM header truncated".into())),
            Some(b'#') => {
                while let Some(&c) = bytes.get(*pos) {
                    *pos += 1;
                    if c == b'\n' {
                        break;
                    }
                }
            }
            Some(c) if c.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
        }
    }
    let start = *pos;
    while let Some(c) = bytes.get(*pos) {
        if c.is_ascii_whitespace() {
            break;
        }
        *pos += 1;
    }
    Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

fn parse_header_int(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    let tok = next_token(bytes, pos)?;
    tok.parse()
        .map_err(|_| Error::Malformed(format!("PGM {what} '{tok}' is not an integer")))
}

fn quantize(v: f64, maxval: u32) -> u32 {
    (v.clamp(0.0, 1.0) * maxval as f64).round() as u32
}

/// Encodes an 8-bit binary PGM.
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.data().iter().map(|&v| quantize(v, 255) as u8));
    out
}

pub fn save_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_pgm(img)).map_err(|e| Error::io(path, e))
}

/// 16-bit variant, big-endian samples with maxval 65535.
pub fn save_pgm16(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = format!("P5\n{} {}\n65535\n", img.width(), img.height()).into_bytes();
    for &v in img.data() {
        out.extend_from_slice(&(quantize(v, 65535) as u16).to_be_bytes());
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pgm8(w: usize, h: usize, px: &[u8]) -> Vec<u8> {
        let mut v = format!("P5\n{w} {h}\n255\n").into_bytes();
        v.extend_from_slice(px);
        v
    }

    #[test]
    fn decodes_8_bit() {
        let img = decode_pgm(&pgm8(2, 2, &[0, 255, 128, 64])).unwrap();
        assert_eq!(img.data(), &[0.0, 1.0, 128.0 / 255.0, 64.0 / 255.0]);
        let one = decode_pgm(&pgm8(1, 1, &[0])).unwrap();
        assert_eq!(one.data(), &[0.0]);
    }

    #[test]
    fn decodes_16_bit_and_comments() {
        let mut v = b"P5\n# a comment\n1 1\n65535\n".to_vec();
        v.extend_from_slice(&[0xff, 0xff]);
        assert_eq!(decode_pgm(&v).unwrap().data(), &[1.0]);
    }

    #[test]
    fn rejects_bad_headers() {
        assert!(matches!(
            decode_pgm(&pgm8(0, 2, &[])),
            Err(Error::Dimensions(_))
        ));
        assert!(decode_pgm(b"P5\n2 2\n255\n\x01").is_err());
        assert!(matches!(
            decode_pgm(b"P2\n1 1\n255\n0"),
            Err(Error::UnsupportedFormat(_))
        ));
        assert!(matches!(
            decode_pgm(b"P5\n1 1\n70000\n\x00\x00"),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    proptest! {
        #[test]
        fn eight_bit_round_trip(w in 1usize..9, h in 1usize..9, seed in any::<u64>()) {
            let px: Vec<u8> = (0..w * h)
                .map(|i| (seed.wrapping_mul(6364136223846793005).wrapping_add((i as u64).wrapping_mul(1442695040888963407)) >> 56) as u8)
                .collect();
            let bytes = pgm8(w, h, &px);
            let img = decode_pgm(&bytes).unwrap();
            prop_assert_eq!(encode_pgm(&img), bytes);
        }
    }
}
