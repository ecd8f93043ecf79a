//! Image and displacement file formats.
//!
//! Image row `r` maps to grid row `j = r` and column `c` to `i = c`, so the
//! second coordinate grows downward exactly as in the file.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageReader};

use crate::error::{Error, Result};
use crate::field::{GridSpec, ScalarField, VectorField};
use crate::sampler::Image;

const MAGIC: &[u8; 4] = b"OCRD";
const VERSION: u16 = 1;

fn input_error(path: &Path, reason: impl Into<String>) -> Error {
    Error::Input {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Loads an 8- or 16-bit grayscale PGM or PNG, scaled to `[0, 1]` by the
/// format maximum.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let reader = ImageReader::open(path)
        .map_err(|e| io_error(path, e))?
        .with_guessed_format()
        .map_err(|e| io_error(path, e))?;
    let decoded = reader
        .decode()
        .map_err(|e| input_error(path, e.to_string()))?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let values: Vec<f64> = match decoded {
        DynamicImage::ImageLuma8(b) => b.into_raw().into_iter().map(|v| v as f64 / 255.0).collect(),
        DynamicImage::ImageLuma16(b) => b
            .into_raw()
            .into_iter()
            .map(|v| v as f64 / 65535.0)
            .collect(),
        other => {
            return Err(input_error(
                path,
                format!("expected a grayscale image, found {:?}", other.color()),
            ))
        }
    };
    let spec = GridSpec::new(w, h).map_err(|e| input_error(path, e.to_string()))?;
    Image::new(spec, values).map_err(|e| input_error(path, e.to_string()))
}

fn quantize(field: &ScalarField) -> GrayImage {
    let spec = field.spec();
    let raw = field
        .values()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    GrayImage::from_raw(spec.m() as u32, spec.n() as u32, raw).expect("buffer matches grid")
}

/// Writes a binary 8-bit PGM.
pub fn write_pgm(path: impl AsRef<Path>, field: &ScalarField) -> Result<()> {
    let path = path.as_ref();
    let img = quantize(field);
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = BufWriter::new(file);
    write!(w, "P5\n{} {}\n255\n", img.width(), img.height()).map_err(|e| io_error(path, e))?;
    w.write_all(img.as_raw()).map_err(|e| io_error(path, e))?;
    w.flush().map_err(|e| io_error(path, e))
}

/// Writes an 8-bit grayscale PNG.
pub fn write_png(path: impl AsRef<Path>, field: &ScalarField) -> Result<()> {
    let path = path.as_ref();
    quantize(field)
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| input_error(path, e.to_string()))
}

/// Header `OCRD`, `u16` version, `u32 m`, `u32 n`, then the `u¹` and `u²`
/// planes as little-endian `f64`.
pub fn write_displacement(path: impl AsRef<Path>, u: &VectorField) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = BufWriter::new(file);
    encode_displacement(&mut w, u).map_err(|e| io_error(path, e))?;
    w.flush().map_err(|e| io_error(path, e))
}

pub fn encode_displacement(w: &mut impl Write, u: &VectorField) -> std::io::Result<()> {
    let spec = u.spec();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(spec.m() as u32).to_le_bytes())?;
    w.write_all(&(spec.n() as u32).to_le_bytes())?;
    for v in u.comp1().values().iter().chain(u.comp2().values()) {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_displacement(path: impl AsRef<Path>) -> Result<VectorField> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    let mut bytes = Vec::new();
    BufReader::new(file)
        .read_to_end(&mut bytes)
        .map_err(|e| io_error(path, e))?;
    decode_displacement(&bytes).map_err(|reason| input_error(path, reason))
}

pub fn decode_displacement(bytes: &[u8]) -> std::result::Result<VectorField, String> {
    if bytes.len() < 14 || &bytes[..4] != MAGIC {
        return Err("missing OCRD header".into());
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let m = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let n = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
    let spec = GridSpec::new(m, n).map_err(|e| e.to_string())?;
    let payload = &bytes[14..];
    if payload.len() != 16 * spec.len() {
        return Err(format!(
            "expected {} payload bytes for a {m}x{n} field, found {}",
            16 * spec.len(),
            payload.len()
        ));
    }
    let vals: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let (a, b) = vals.split_at(spec.len());
    let c1 = ScalarField::new(spec, a.to_vec()).map_err(|e| e.to_string())?;
    let c2 = ScalarField::new(spec, b.to_vec()).map_err(|e| e.to_string())?;
    VectorField::new(c1, c2).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_pgm_loads_as_ones() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.pgm");
        std::fs::write(&p, [b"P5\n4 3\n255\n".as_slice(), &[255u8; 12]].concat()).unwrap();
        let img = load_image(&p).unwrap();
        assert_eq!((img.spec().m(), img.spec().n()), (4, 3));
        assert!(img.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn mid_gray_normalises_by_255() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.pgm");
        std::fs::write(&p, [b"P5\n3 3\n255\n".as_slice(), &[128u8; 9]].concat()).unwrap();
        let img = load_image(&p).unwrap();
        assert!((img.get(1, 1) - 128.0 / 255.0).abs() < 1e-15);
        assert!((img.get(1, 1) - 0.50196).abs() < 1e-5);
    }

    #[test]
    fn sixteen_bit_png_uses_full_range() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.png");
        let buf =
            image::ImageBuffer::<image::Luma<u16>, _>::from_raw(3, 3, vec![65535u16; 9]).unwrap();
        buf.save(&p).unwrap();
        let img = load_image(&p).unwrap();
        assert!(img.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn truncated_file_is_an_input_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.pgm");
        std::fs::write(&p, b"P5\n8 8\n255\n\x01\x02").unwrap();
        assert!(matches!(load_image(&p), Err(Error::Input { .. })));
        assert!(matches!(
            load_image(dir.path().join("missing.pgm")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn pgm_roundtrip_within_quantisation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.pgm");
        let spec = GridSpec::new(5, 4).unwrap();
        let f = ScalarField::from_fn(spec, |i, j| (i * 4 + j) as f64 / 19.0);
        write_pgm(&p, &f).unwrap();
        let back = load_image(&p).unwrap();
        for k in 0..spec.len() {
            assert!((back.values()[k] - f.values()[k]).abs() <= 0.5 / 255.0 + 1e-12);
        }
    }

    #[test]
    fn displacement_roundtrip_is_exact() {
        let spec = GridSpec::new(6, 3).unwrap();
        let u = VectorField::from_fn(spec, |i, j| [i as f64 * 0.1 - 0.3, (j as f64).sin()]);
        let mut bytes = Vec::new();
        encode_displacement(&mut bytes, &u).unwrap();
        assert_eq!(&bytes[..4], b"OCRD");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
        assert_eq!(bytes.len(), 14 + 16 * 18);
        assert_eq!(decode_displacement(&bytes).unwrap(), u);
        assert!(decode_displacement(&bytes[..20]).is_err());
    }
}
