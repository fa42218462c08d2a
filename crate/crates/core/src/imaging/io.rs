//! PGM (P2/P5) and PNG input, PGM output.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::imaging::{BinaryImage, GrayImage};

const PNG_SIGNATURE: &[u8] = b"\x89PNG\r\n\x1a\n";

/// Reads a grayscale image, dispatching on the file's magic bytes.
/// Intensities are mapped to `[0, 1]` by `v / maxval`.
pub fn read_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(PNG_SIGNATURE) {
        decode_png(path, &bytes)
    } else if bytes.starts_with(b"P2") || bytes.starts_with(b"P5") {
        decode_pgm(&bytes).map_err(|m| Error::format(path, m))
    } else {
        Err(Error::format(path, "not a PGM (P2/P5) or PNG file"))
    }
}

fn decode_png(path: &Path, bytes: &[u8]) -> Result<GrayImage> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| Error::format(path, e.to_string()))?
        .into_luma8();
    let (w, h) = img.dimensions();
    let pixels = img.as_raw().iter().map(|&v| v as f64 / 255.0).collect();
    GrayImage::new(w as usize, h as usize, pixels).map_err(|e| Error::format(path, e.to_string()))
}

struct Header {
    width: usize,
    height: usize,
    maxval: u32,
    data_start: usize,
}

fn parse_header(bytes: &[u8]) -> std::result::Result<Header, String> {
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err("truncated PGM header".into());
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .unwrap()
            .parse()
            .map_err(|e| format!("bad header number: {e}"))?;
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err("zero image dimension".into());
    }
    if maxval == 0 || maxval > 65535 {
        return Err(format!("maxval {maxval} out of range"));
    }
    // exactly one whitespace byte before the raster
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err("missing whitespace after header".into());
    }
    Ok(Header {
        width,
        height,
        maxval: maxval as u32,
        data_start: pos + 1,
    })
}

fn decode_pgm(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    let header = parse_header(bytes)?;
    let n = header.width * header.height;
    let maxval = header.maxval as f64;
    let raw: Vec<u32> = if bytes.starts_with(b"P5") {
        let data = &bytes[header.data_start..];
        if header.maxval < 256 {
            if data.len() < n {
                return Err(format!("expected {n} raster bytes, found {}", data.len()));
            }
            data[..n].iter().map(|&b| b as u32).collect()
        } else {
            if data.len() < 2 * n {
                return Err(format!("expected {} raster bytes, found {}", 2 * n, data.len()));
            }
            data[..2 * n]
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]) as u32)
                .collect()
        }
    } else {
        let text = std::str::from_utf8(&bytes[header.data_start..])
            .map_err(|_| "non-ASCII raster in P2 file".to_string())?;
        let values: std::result::Result<Vec<u32>, _> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_ascii_whitespace)
            .take(n)
            .map(str::parse::<u32>)
            .collect();
        let values = values.map_err(|e| format!("bad raster value: {e}"))?;
        if values.len() < n {
            return Err(format!("expected {n} raster values, found {}", values.len()));
        }
        values
    };
    if let Some(v) = raw.iter().find(|&&v| v > header.maxval) {
        return Err(format!("sample {v} exceeds maxval {}", header.maxval));
    }
    let pixels = raw.into_iter().map(|v| v as f64 / maxval).collect();
    GrayImage::new(header.width, header.height, pixels).map_err(|e| e.to_string())
}

fn write_p5(path: &Path, width: usize, height: usize, raster: &[u8]) -> Result<()> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(raster);
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Writes a binary image as P5 with foreground = 255, background = 0.
pub fn write_binary_pgm(path: impl AsRef<Path>, img: &BinaryImage) -> Result<()> {
    let raster: Vec<u8> = img.pixels().iter().map(|&p| p * 255).collect();
    write_p5(path.as_ref(), img.width(), img.height(), &raster)
}

/// Writes real values as P5, clamped to `[0, 1]` and scaled to 0–255.
pub fn write_gray_pgm(
    path: impl AsRef<Path>,
    width: usize,
    height: usize,
    values: &[f64],
) -> Result<()> {
    let path = path.as_ref();
    if values.len() != width * height {
        return Err(Error::invalid(format!(
            "{} values for a {width}x{height} image",
            values.len()
        )));
    }
    let raster: Vec<u8> = values
        .iter()
        .map(|&v| {
            let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
            (v * 255.0).round() as u8
        })
        .collect();
    write_p5(path, width, height, &raster)
}
