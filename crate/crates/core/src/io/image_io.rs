//! PFM float images and sRGB-encoded PNG export.
//!
//! All computation stays in linear RGB; gamma encoding happens only when
//! writing PNGs for display.

use nalgebra::Vector3;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::rendering::Image;

use super::IoError;

/// 3-channel little-endian PFM; rows stored bottom-to-top per convention.
pub fn write_pfm(path: &Path, image: &Image<f64>) -> Result<(), IoError> {
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "PF\n{} {}\n-1.0\n", image.width(), image.height())?;
    for y in (0..image.height()).rev() {
        for x in 0..image.width() {
            let p = image.pixel(x, y);
            out.write_all(&(p.x as f32).to_le_bytes())?;
            out.write_all(&(p.y as f32).to_le_bytes())?;
            out.write_all(&(p.z as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_pfm(path: &Path) -> Result<Image<f64>, IoError> {
    let mut reader = BufReader::new(File::open(path)?);
    let malformed = |what: &str| IoError::Malformed {
        path: path.display().to_string(),
        line: 0,
        what: what.into(),
    };
    let mut line = String::new();
    reader.read_line(&mut line)?;
    if line.trim() != "PF" {
        return Err(malformed("expected 3-channel `PF` header"));
    }
    line.clear();
    reader.read_line(&mut line)?;
    let mut dims = line.split_whitespace();
    let width: usize = dims
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| malformed("bad width"))?;
    let height: usize = dims
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| malformed("bad height"))?;
    line.clear();
    reader.read_line(&mut line)?;
    let scale: f64 = line.trim().parse().map_err(|_| malformed("bad scale"))?;
    if scale >= 0.0 {
        return Err(malformed("big-endian PFM is not supported"));
    }
    let mut data = vec![0u8; width * height * 12];
    reader.read_exact(&mut data)?;
    let mut image = Image::new(width, height);
    let mut k = 0usize;
    for y in (0..height).rev() {
        for x in 0..width {
            let get = |k: usize| {
                f32::from_le_bytes([data[k], data[k + 1], data[k + 2], data[k + 3]]) as f64
            };
            *image.pixel_mut(x, y) = Vector3::new(get(k), get(k + 4), get(k + 8));
            k += 12;
        }
    }
    Ok(image)
}

/// IEC 61966-2-1 transfer function.
pub fn srgb_encode(linear: f64) -> f64 {
    let x = linear.clamp(0.0, 1.0);
    if x <= 0.003_130_8 {
        12.92 * x
    } else {
        1.055 * x.powf(1.0 / 2.4) - 0.055
    }
}

/// Writes the linear image as an 8-bit sRGB PNG.
pub fn write_png_srgb(path: &Path, image: &Image<f64>) -> Result<(), IoError> {
    let mut png = image::RgbImage::new(image.width() as u32, image.height() as u32);
    for y in 0..image.height() {
        for x in 0..image.width() {
            let p = image.pixel(x, y);
            let enc = |v: f64| (srgb_encode(v) * 255.0).round().clamp(0.0, 255.0) as u8;
            png.put_pixel(x as u32, y as u32, image::Rgb([enc(p.x), enc(p.y), enc(p.z)]));
        }
    }
    png.save(path).map_err(|e| IoError::Image(e.to_string()))
}

/// Blue-to-red colormap over `t` in `[0, 1]`.
pub fn colormap(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    let stops = [
        (0.0, [0.05, 0.03, 0.53]),
        (0.25, [0.28, 0.26, 0.90]),
        (0.5, [0.06, 0.70, 0.67]),
        (0.75, [0.95, 0.78, 0.18]),
        (1.0, [0.90, 0.10, 0.10]),
    ];
    let mut rgb = stops[stops.len() - 1].1;
    for w in stops.windows(2) {
        let (t0, c0) = w[0];
        let (t1, c1) = w[1];
        if t >= t0 && t <= t1 {
            let f = (t - t0) / (t1 - t0);
            rgb = [
                c0[0] + f * (c1[0] - c0[0]),
                c0[1] + f * (c1[1] - c0[1]),
                c0[2] + f * (c1[2] - c0[2]),
            ];
            break;
        }
    }
    rgb.map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
}

/// Horizontal colorbar legend for an error map.
pub fn write_colormap_legend(path: &Path, _min: f64, _max: f64) -> Result<(), IoError> {
    let (w, h) = (256u32, 24u32);
    let mut png = image::RgbImage::new(w, h);
    for x in 0..w {
        let rgb = colormap(x as f64 / (w - 1) as f64);
        for y in 0..h {
            png.put_pixel(x, y, image::Rgb(rgb));
        }
    }
    png.save(path).map_err(|e| IoError::Image(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pfm_round_trip_is_bit_exact_for_f32_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pfm");
        let img = Image::from_fn(7, 5, |x, y| {
            Vector3::new(x as f64 * 0.5, y as f64 * 0.25, (x + y) as f64)
        });
        write_pfm(&path, &img).unwrap();
        let back = read_pfm(&path).unwrap();
        assert_eq!(back, img);
        // Writing again produces identical bytes.
        let bytes1 = std::fs::read(&path).unwrap();
        write_pfm(&path, &back).unwrap();
        assert_eq!(bytes1, std::fs::read(&path).unwrap());
    }

    #[test]
    fn srgb_encode_endpoints() {
        assert_eq!(srgb_encode(0.0), 0.0);
        assert!((srgb_encode(1.0) - 1.0).abs() < 1e-12);
        assert!((srgb_encode(0.5) - 0.7353569830524495).abs() < 1e-9);
    }
}
