//! Grayscale images and binary PGM (P5) encoding.
//!
//! Images are 8-bit, row-major, with 0 = background and 255 = full ink.
//! The PGM codec is strict: maxval must be 255 and parse errors report the
//! byte offset of the offending input.

use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::ndtape::Matrix;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("image data length {len} does not match {width}x{height}")]
    BadLength { len: usize, width: usize, height: usize },
    #[error("pgm parse error at byte {offset}: {detail}")]
    PgmParse { offset: usize, detail: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One grayscale image. `width * height` bytes, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlyphImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GlyphImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImageError> {
        if pixels.len() != width * height {
            return Err(ImageError::BadLength { len: pixels.len(), width, height });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn blank(width: usize, height: usize) -> Self {
        Self { width, height, pixels: vec![0; width * height] }
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

    pub fn get(&self, x: usize, y: usize) -> u8 {
        assert!(x < self.width && y < self.height);
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        assert!(x < self.width && y < self.height);
        self.pixels[y * self.width + x] = v;
    }

    /// Height / width. The quantity the canonicalization rule thresholds.
    pub fn aspect_ratio(&self) -> f64 {
        self.height as f64 / self.width as f64
    }

    /// Pixel values scaled to [0, 1] as a `height x width` matrix, the
    /// layout the recognizer consumes.
    pub fn to_unit_matrix(&self) -> Matrix {
        Matrix::from_fn(self.height, self.width, |y, x| {
            self.pixels[y * self.width + x] as f64 / 255.0
        })
    }

    /// Encodes as binary PGM (P5, maxval 255).
    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    /// Decodes a binary PGM (P5, maxval 255). `#` comments are accepted in
    /// the header, per the PNM convention.
    pub fn from_pgm_bytes(bytes: &[u8]) -> Result<Self, ImageError> {
        let mut pos = 0usize;
        let err = |offset: usize, detail: &str| ImageError::PgmParse {
            offset,
            detail: detail.to_string(),
        };
        if bytes.len() < 2 || &bytes[0..2] != b"P5" {
            return Err(err(0, "expected magic 'P5'"));
        }
        pos += 2;
        let read_token = |pos: &mut usize| -> Result<usize, ImageError> {
            // Skip whitespace and comment lines.
            loop {
                while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                    *pos += 1;
                }
                if *pos < bytes.len() && bytes[*pos] == b'#' {
                    while *pos < bytes.len() && bytes[*pos] != b'\n' {
                        *pos += 1;
                    }
                } else {
                    break;
                }
            }
            let start = *pos;
            while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
                *pos += 1;
            }
            if start == *pos {
                return Err(err(start, "expected unsigned integer"));
            }
            let text = std::str::from_utf8(&bytes[start..*pos])
                .map_err(|_| err(start, "non-utf8 header token"))?;
            text.parse::<usize>().map_err(|_| err(start, "integer out of range"))
        };
        let width = read_token(&mut pos)?;
        let height = read_token(&mut pos)?;
        let maxval = read_token(&mut pos)?;
        if maxval != 255 {
            return Err(err(pos, "maxval must be 255"));
        }
        if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
            return Err(err(pos, "expected single whitespace after maxval"));
        }
        pos += 1;
        let need = width * height;
        let raster = &bytes[pos..];
        if raster.len() != need {
            return Err(err(
                pos,
                &format!("raster holds {} bytes, expected {}", raster.len(), need),
            ));
        }
        GlyphImage::new(width, height, raster.to_vec())
    }

    pub fn write_pgm(&self, path: &Path) -> Result<(), ImageError> {
        let mut file = fs::File::create(path).map_err(|source| ImageError::Io {
            path: path.display().to_string(),
            source,
        })?;
        file.write_all(&self.to_pgm_bytes()).map_err(|source| ImageError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn read_pgm(path: &Path) -> Result<Self, ImageError> {
        let bytes = fs::read(path).map_err(|source| ImageError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_pgm_bytes(&bytes)
    }
}
