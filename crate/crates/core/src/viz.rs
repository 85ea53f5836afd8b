//! Grayscale spectrogram rasters and binary PGM output.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::stft::StftMatrix;

pub const DEFAULT_DYN_RANGE_DB: f64 = 60.0;

/// 8-bit grayscale image, row-major, top row = highest frequency bin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Raster {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width * height != pixels.len() {
            return Err(Error::InvalidParameter(format!(
                "{width}x{height} raster needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }
}

/// Maps a level (dB) to a pixel: the top `dyn_range_db` below `peak_db` spans 0..=255,
/// rounding half away from zero.
pub fn level_to_pixel(level_db: f64, peak_db: f64, dyn_range_db: f64) -> u8 {
    (255.0 * (level_db - (peak_db - dyn_range_db)) / dyn_range_db)
        .round()
        .clamp(0.0, 255.0) as u8
}

/// Log-magnitude raster of `mat`, one column per frame and one row per bin.
///
/// An all-zero matrix has no meaningful peak and renders black.
pub fn spectrogram_raster(mat: &StftMatrix, dyn_range_db: f64) -> Result<Raster> {
    if !(dyn_range_db > 0.0 && dyn_range_db.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "dynamic range {dyn_range_db} dB must be positive"
        )));
    }
    let (width, height) = (mat.num_frames(), mat.num_bins());
    if width == 0 {
        return Err(Error::EmptyMatrix);
    }
    let db = |m: f64| 20.0 * (m + 1e-12).log10();
    let peak = mat
        .frames()
        .iter()
        .flatten()
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    let mut pixels = vec![0u8; width * height];
    if peak > 0.0 {
        let peak_db = db(peak);
        for (x, frame) in mat.frames().iter().enumerate() {
            for (k, c) in frame.iter().enumerate() {
                let y = height - 1 - k;
                pixels[y * width + x] = level_to_pixel(db(c.norm()), peak_db, dyn_range_db);
            }
        }
    }
    Raster::new(width, height, pixels)
}

/// Binary PGM (P5) bytes: `P5\n<w> <h>\n255\n` followed by the pixels.
pub fn pgm_bytes(r: &Raster) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", r.width, r.height).into_bytes();
    out.extend_from_slice(&r.pixels);
    out
}

pub fn write_pgm(r: &Raster, path: impl AsRef<Path>) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(&pgm_bytes(r))?;
    Ok(())
}

/// Parses a binary PGM with maxval 255 as written by [`write_pgm`].
pub fn parse_pgm(bytes: &[u8]) -> Result<Raster> {
    let bad = |msg: &str| Error::InvalidParameter(format!("malformed PGM: {msg}"));
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields
            .push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header is not ASCII"))?);
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    if fields[0] != "P5" {
        return Err(bad("missing P5 magic"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad number"));
    let (width, height, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if maxval != 255 {
        return Err(bad("maxval must be 255"));
    }
    let pixels = bytes
        .get(pos..)
        .ok_or_else(|| bad("missing pixels"))?
        .to_vec();
    Raster::new(width, height, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stft::StftParams;
    use rustfft::num_complex::Complex64;

    fn matrix(mags: &[&[f64]]) -> StftMatrix {
        let params = StftParams {
            frame_len: 4,
            hop: 2,
            window_coeff: 0.46,
            fft_size: 4,
        };
        let frames = mags
            .iter()
            .map(|f| f.iter().map(|&m| Complex64::new(m, 0.0)).collect())
            .collect();
        StftMatrix::from_frames(frames, params, 8000).unwrap()
    }

    #[test]
    fn pixel_mapping() {
        // 1.0 is the peak (0 dB); 1e-3 is 60 dB down; 10^-1.5 is exactly halfway.
        let mat = matrix(&[&[1.0, 1e-3, 10f64.powf(-1.5)]]);
        let r = spectrogram_raster(&mat, 60.0).unwrap();
        assert_eq!((r.width(), r.height()), (1, 3));
        // Top row is the highest bin.
        assert_eq!(r.pixel(0, 2), 255);
        assert_eq!(r.pixel(0, 1), 0);
        assert_eq!(r.pixel(0, 0), 128);
        assert_eq!(level_to_pixel(-30.0, 0.0, 60.0), 128);
        assert_eq!(level_to_pixel(-100.0, 0.0, 60.0), 0);
    }

    #[test]
    fn silent_matrix_is_black() {
        let mat = matrix(&[&[0.0; 3], &[0.0; 3]]);
        let r = spectrogram_raster(&mat, 60.0).unwrap();
        assert!(r.pixels().iter().all(|&p| p == 0));
    }

    #[test]
    fn raster_errors() {
        let mat = matrix(&[&[1.0; 3]]);
        assert!(spectrogram_raster(&mat, 0.0).is_err());
        assert!(spectrogram_raster(&mat, -5.0).is_err());
        let empty = matrix(&[]);
        assert!(matches!(
            spectrogram_raster(&empty, 60.0),
            Err(Error::EmptyMatrix)
        ));
        assert!(Raster::new(2, 2, vec![0; 3]).is_err());
    }

    #[test]
    fn golden_pgm_bytes() {
        let r = Raster::new(2, 2, vec![0, 255, 128, 64]).unwrap();
        let mut expected = b"P5\n2 2\n255\n".to_vec();
        expected.extend_from_slice(&[0x00, 0xFF, 0x80, 0x40]);
        assert_eq!(pgm_bytes(&r), expected);

        let one = Raster::new(1, 1, vec![0]).unwrap();
        assert_eq!(pgm_bytes(&one), b"P5\n1 1\n255\n\x00".to_vec());
        assert_eq!(pgm_bytes(&one).len(), 12);
    }

    #[test]
    fn pgm_round_trip() {
        let r = Raster::new(3, 2, vec![0, 10, 32, 255, 13, 9]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.pgm");
        write_pgm(&r, &p).unwrap();
        assert_eq!(parse_pgm(&std::fs::read(&p).unwrap()).unwrap(), r);
        assert!(parse_pgm(b"P6\n1 1\n255\n\x00").is_err());
        assert!(parse_pgm(b"P5\n2 2\n255\n\x00").is_err());
    }
}
