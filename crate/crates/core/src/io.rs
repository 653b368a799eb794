//! Image file I/O.
//!
//! Three containers are supported:
//!
//! - binary PGM (`P5`, 8-bit),
//! - 8-bit grayscale PNG,
//! - `BTBF`, a raw-float container that preserves samples bit-exactly:
//!   magic `"BTBF"`, `u32` height, `u32` width, `f64` peak, then
//!   `height * width` row-major `f64` samples. All multi-byte fields are
//!   little-endian.
//!
//! 8-bit formats clamp samples to `[0, peak]` and quantize linearly on
//! save; `BTBF` keeps exact values and the stored peak.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::scalar::Real;

const RAW_MAGIC: &[u8; 4] = b"BTBF";

/// On-disk format selector for [`save_image`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Pgm,
    Png,
    RawFloat,
}

impl ImageFormat {
    /// Infer the format from a file extension (`pgm`, `png`, `btbf`).
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("pgm") => Ok(ImageFormat::Pgm),
            Some("png") => Ok(ImageFormat::Png),
            Some("btbf") => Ok(ImageFormat::RawFloat),
            other => Err(Error::parse(format!(
                "cannot infer image format from extension {other:?} (expected pgm, png or btbf)"
            ))),
        }
    }
}

/// Load an image, dispatching on the file's magic bytes.
///
/// 8-bit sources produce images with `peak = 255`; `BTBF` restores the
/// stored peak and exact samples.
pub fn load_image<T: Real>(path: impl AsRef<Path>) -> Result<Image<T>> {
    let bytes = std::fs::read(path.as_ref())?;
    if bytes.starts_with(b"P5") {
        decode_pgm(&bytes)
    } else if bytes.starts_with(RAW_MAGIC) {
        decode_raw_float(&bytes)
    } else if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        decode_png_gray(&bytes)
    } else {
        Err(Error::format(
            0,
            "unrecognized magic (expected P5 PGM, PNG or BTBF)",
        ))
    }
}

/// Save an image in the requested format. See the module docs for the
/// quantization rules.
pub fn save_image<T: Real>(img: &Image<T>, path: impl AsRef<Path>, format: ImageFormat) -> Result<()> {
    match format {
        ImageFormat::Pgm => save_pgm(img, path.as_ref()),
        ImageFormat::Png => save_png(img, path.as_ref()),
        ImageFormat::RawFloat => save_raw_float(img, path.as_ref()),
    }
}

/// Clamp to `[0, peak]` and quantize to a byte.
fn quantize_u8<T: Real>(v: T, peak: T) -> u8 {
    let clamped = v.max(T::zero()).min(peak);
    let scaled = clamped.to_f64c() / peak.to_f64c() * 255.0;
    scaled.round() as u8
}

// --- PGM (P5) ---------------------------------------------------------

struct HeaderScanner<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderScanner<'a> {
    fn new(bytes: &'a [u8], pos: usize) -> Self {
        Self { bytes, pos }
    }

    /// Skip whitespace and `#` comment lines.
    fn skip_separators(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn read_number(&mut self, what: &str) -> Result<u32> {
        self.skip_separators();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(Error::format(
                start as u64,
                format!("expected {what} in PGM header"),
            ));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format(start as u64, format!("invalid {what}")))
    }
}

fn decode_pgm<T: Real>(bytes: &[u8]) -> Result<Image<T>> {
    let mut scan = HeaderScanner::new(bytes, 2);
    let width = scan.read_number("width")? as usize;
    let height = scan.read_number("height")? as usize;
    let maxval = scan.read_number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::format(
            scan.pos as u64,
            format!("unsupported PGM maxval {maxval} (only 8-bit supported)"),
        ));
    }
    if width == 0 || height == 0 {
        return Err(Error::format(scan.pos as u64, "zero PGM dimension"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if scan.pos >= bytes.len() || !bytes[scan.pos].is_ascii_whitespace() {
        return Err(Error::format(
            scan.pos as u64,
            "missing separator before PGM raster",
        ));
    }
    scan.pos += 1;
    let need = height * width;
    let raster = &bytes[scan.pos.min(bytes.len())..];
    if raster.len() < need {
        return Err(Error::format(
            bytes.len() as u64,
            format!("PGM raster truncated: need {need} bytes, have {}", raster.len()),
        ));
    }
    let data = raster[..need].iter().map(|&b| T::of(b as f64)).collect();
    Image::new(height, width, data, T::of(255.0))
}

fn save_pgm<T: Real>(img: &Image<T>, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    write!(out, "P5\n{} {}\n255\n", img.width(), img.height())?;
    let peak = img.peak();
    let row: Vec<u8> = img.data().iter().map(|&v| quantize_u8(v, peak)).collect();
    out.write_all(&row)?;
    out.flush()?;
    Ok(())
}

// --- PNG (8-bit grayscale) --------------------------------------------

fn decode_png_gray<T: Real>(bytes: &[u8]) -> Result<Image<T>> {
    let decoded = ::image::load_from_memory_with_format(bytes, ::image::ImageFormat::Png)
        .map_err(|e| Error::format(0, format!("PNG decode failed: {e}")))?;
    let gray = decoded.to_luma8();
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    let data = gray.into_raw().into_iter().map(|b| T::of(b as f64)).collect();
    Image::new(h, w, data, T::of(255.0))
}

fn save_png<T: Real>(img: &Image<T>, path: &Path) -> Result<()> {
    let peak = img.peak();
    let pixels: Vec<u8> = img.data().iter().map(|&v| quantize_u8(v, peak)).collect();
    let buf = ::image::GrayImage::from_raw(img.width() as u32, img.height() as u32, pixels)
        .expect("buffer length matches dimensions");
    buf.save_with_format(path, ::image::ImageFormat::Png)
        .map_err(|e| match e {
            ::image::ImageError::IoError(io) => Error::Io(io),
            other => Error::format(0, format!("PNG encode failed: {other}")),
        })
}

/// Load the three color planes of an RGB PNG (peak 255 each).
pub fn load_png_rgb<T: Real>(path: impl AsRef<Path>) -> Result<[Image<T>; 3]> {
    let bytes = std::fs::read(path.as_ref())?;
    let decoded = ::image::load_from_memory_with_format(&bytes, ::image::ImageFormat::Png)
        .map_err(|e| Error::format(0, format!("PNG decode failed: {e}")))?;
    let rgb = decoded.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let mut planes = [
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
    ];
    for px in rgb.pixels() {
        for (plane, &channel) in planes.iter_mut().zip(px.0.iter()) {
            plane.push(T::of(channel as f64));
        }
    }
    let [r, g, b] = planes;
    Ok([
        Image::new(h, w, r, T::of(255.0))?,
        Image::new(h, w, g, T::of(255.0))?,
        Image::new(h, w, b, T::of(255.0))?,
    ])
}

/// Save three color planes as an RGB PNG (clamped and quantized).
pub fn save_png_rgb<T: Real>(planes: &[Image<T>; 3], path: impl AsRef<Path>) -> Result<()> {
    let (h, w) = (planes[0].height(), planes[0].width());
    if !planes[0].same_shape(&planes[1]) || !planes[0].same_shape(&planes[2]) {
        return Err(Error::shape("RGB planes must share dimensions"));
    }
    let mut pixels = Vec::with_capacity(h * w * 3);
    for i in 0..h * w {
        for plane in planes {
            pixels.push(quantize_u8(plane.data()[i], plane.peak()));
        }
    }
    let buf = ::image::RgbImage::from_raw(w as u32, h as u32, pixels)
        .expect("buffer length matches dimensions");
    buf.save_with_format(path.as_ref(), ::image::ImageFormat::Png)
        .map_err(|e| match e {
            ::image::ImageError::IoError(io) => Error::Io(io),
            other => Error::format(0, format!("PNG encode failed: {other}")),
        })
}

// --- BTBF raw float ----------------------------------------------------

fn decode_raw_float<T: Real>(bytes: &[u8]) -> Result<Image<T>> {
    const HEADER: usize = 4 + 4 + 4 + 8;
    if bytes.len() < HEADER {
        return Err(Error::format(bytes.len() as u64, "BTBF header truncated"));
    }
    let height = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let width = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let peak = f64::from_le_bytes(bytes[12..20].try_into().unwrap());
    if height == 0 || width == 0 {
        return Err(Error::format(4, "zero BTBF dimension"));
    }
    if !peak.is_finite() || peak <= 0.0 {
        return Err(Error::format(12, format!("invalid BTBF peak {peak}")));
    }
    let need = height
        .checked_mul(width)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::format(4, "BTBF dimensions overflow"))?;
    let payload = &bytes[HEADER..];
    if payload.len() < need {
        return Err(Error::format(
            bytes.len() as u64,
            format!("BTBF payload truncated: need {need} bytes, have {}", payload.len()),
        ));
    }
    let mut data = Vec::with_capacity(height * width);
    for (i, chunk) in payload[..need].chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::format(
                (HEADER + i * 8) as u64,
                "non-finite BTBF sample",
            ));
        }
        data.push(T::of(v));
    }
    Image::new(height, width, data, T::of(peak))
}

fn save_raw_float<T: Real>(img: &Image<T>, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    out.write_all(RAW_MAGIC)?;
    out.write_all(&(img.height() as u32).to_le_bytes())?;
    out.write_all(&(img.width() as u32).to_le_bytes())?;
    out.write_all(&img.peak().to_f64c().to_le_bytes())?;
    for &v in img.data() {
        out.write_all(&v.to_f64c().to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// Convenience read of a PGM byte stream (used by tests and the CLI).
pub fn decode_pgm_bytes<T: Real>(bytes: &[u8]) -> Result<Image<T>> {
    if !bytes.starts_with(b"P5") {
        return Err(Error::format(0, "not a P5 PGM stream"));
    }
    decode_pgm(bytes)
}
