//! Netpbm binary graymap (P5) and pixmap (P6) codecs.
//!
//! Samples are big-endian. Following the Netpbm rule, a sample takes two
//! bytes when `maxval >= 256` and one byte otherwise.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PgmError(pub String);

impl fmt::Display for PgmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for PgmError {}

fn err<T>(msg: impl Into<String>) -> Result<T, PgmError> {
    Err(PgmError(msg.into()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graymap {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

impl Graymap {
    pub fn new(width: usize, height: usize, maxval: u16, samples: Vec<u16>) -> Result<Self, PgmError> {
        if maxval == 0 {
            return err("maxval must be at least 1");
        }
        if samples.len() != width * height {
            return err(format!(
                "{} samples for a {width}x{height} image",
                samples.len()
            ));
        }
        if let Some(s) = samples.iter().find(|&&s| s > maxval) {
            return err(format!("sample {s} exceeds maxval {maxval}"));
        }
        Ok(Self {
            width,
            height,
            maxval,
            samples,
        })
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n{}\n", self.width, self.height, self.maxval).into_bytes();
        if self.maxval >= 256 {
            out.reserve(self.samples.len() * 2);
            for s in &self.samples {
                out.extend_from_slice(&s.to_be_bytes());
            }
        } else {
            out.extend(self.samples.iter().map(|&s| s as u8));
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, PgmError> {
        let mut r = HeaderReader { bytes, pos: 0 };
        if r.token()? != b"P5" {
            return err("not a binary graymap (missing P5 magic)");
        }
        let width = r.number()?;
        let height = r.number()?;
        let maxval = r.number()?;
        if maxval == 0 || maxval > 65535 {
            return err(format!("maxval {maxval} outside [1, 65535]"));
        }
        // exactly one whitespace byte separates the header from the raster
        r.pos += 1;
        let wide = maxval >= 256;
        let n = width
            .checked_mul(height)
            .ok_or_else(|| PgmError("image size overflows".into()))?;
        let need = if wide { n * 2 } else { n };
        let raster = bytes.get(r.pos..).unwrap_or(&[]);
        if raster.len() != need {
            return err(format!(
                "raster has {} bytes, expected {need}",
                raster.len()
            ));
        }
        let samples = if wide {
            raster
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]))
                .collect()
        } else {
            raster.iter().map(|&b| u16::from(b)).collect()
        };
        Graymap::new(width, height, maxval as u16, samples)
    }
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    fn skip_space(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    if c == b'\n' {
                        break;
                    }
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<&'a [u8], PgmError> {
        self.skip_space();
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| !b.is_ascii_whitespace())
        {
            self.pos += 1;
        }
        if start == self.pos {
            return err("truncated header");
        }
        Ok(&self.bytes[start..self.pos])
    }

    fn number(&mut self) -> Result<usize, PgmError> {
        let t = self.token()?;
        std::str::from_utf8(t)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| PgmError(format!("bad header number {:?}", String::from_utf8_lossy(t))))
    }
}

/// 8-bit RGB pixmap (P6).
pub fn encode_ppm(width: usize, height: usize, rgb: &[[u8; 3]]) -> Vec<u8> {
    debug_assert_eq!(rgb.len(), width * height);
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    for px in rgb {
        out.extend_from_slice(px);
    }
    out
}
