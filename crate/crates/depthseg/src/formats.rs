//! Text and binary file formats.
//!
//! Detections file, one object per line (`#` starts a comment):
//!
//! ```text
//! id category score left top right bottom depth_m w l h theta
//! ```
//!
//! Box coordinates are full-resolution image pixels; `theta` is the yaw about
//! the camera's vertical axis in radians.
//!
//! Depth-class maps are P5 graymaps with `maxval = K` and `0` for background.
//! Instance masks are stored as a P5 id map with `maxval = 65535`, where
//! pixel value `n > 0` belongs to the `n`-th instance, plus a sidecar text
//! file with one `label id category score` line per instance.

use std::fs;
use std::path::{Path, PathBuf};

use depthseg_core::kitti::{parse_kitti_calib, parse_kitti_labels, KittiObject};
use depthseg_core::mask_assembly::id_map;
use depthseg_core::{
    BBox, Bitmap, CameraIntrinsics, Category, Error, InstanceDetection, InstanceMask, ObjectDims,
    PixelDepthMap,
};
use thiserror::Error as ThisError;

use crate::pgm::{encode_ppm, Graymap};

#[derive(Debug, ThisError)]
pub enum FormatError {
    #[error("{path}:{line}: {message}")]
    Line {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    File { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl FormatError {
    fn file(path: &Path, message: impl ToString) -> Self {
        FormatError::File {
            path: path.display().to_string(),
            message: message.to_string(),
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        FormatError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Attaches `path` to a core error, keeping its line number if any.
    pub fn at(path: &Path, e: Error) -> Self {
        match e {
            Error::Parse { line, message } => FormatError::Line {
                path: path.display().to_string(),
                line,
                message,
            },
            other => FormatError::file(path, other),
        }
    }
}

pub fn read_text(path: &Path) -> Result<String, FormatError> {
    fs::read_to_string(path).map_err(|e| FormatError::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), FormatError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| FormatError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| FormatError::io(path, e))
}

fn field<T: std::str::FromStr>(f: &str, name: &str, line: usize) -> Result<T, Error> {
    f.parse().map_err(|_| Error::Parse {
        line,
        message: format!("field {name}: cannot parse {f:?}"),
    })
}

fn content(raw: &str) -> &str {
    raw.split('#').next().unwrap_or("").trim()
}

pub fn parse_detections(text: &str) -> Result<Vec<InstanceDetection>, Error> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = content(raw);
        if body.is_empty() {
            continue;
        }
        let f: Vec<&str> = body.split_whitespace().collect();
        if f.len() != 12 {
            return Err(Error::Parse {
                line,
                message: format!("expected 12 fields, found {}", f.len()),
            });
        }
        let det = InstanceDetection {
            id: field(f[0], "id", line)?,
            category: field(f[1], "category", line)?,
            score: field(f[2], "score", line)?,
            bbox: BBox::new(
                field(f[3], "left", line)?,
                field(f[4], "top", line)?,
                field(f[5], "right", line)?,
                field(f[6], "bottom", line)?,
            ),
            center_depth: field(f[7], "depth_m", line)?,
            dims: ObjectDims {
                w: field(f[8], "w", line)?,
                l: field(f[9], "l", line)?,
                h: field(f[10], "h", line)?,
            },
            theta: field(f[11], "theta", line)?,
        };
        det.validate().map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        out.push(det);
    }
    Ok(out)
}

pub fn format_detections(dets: &[InstanceDetection]) -> String {
    let mut s = String::from("# id category score left top right bottom depth_m w l h theta\n");
    for d in dets {
        let b = &d.bbox;
        s += &format!(
            "{} {} {} {} {} {} {} {} {} {} {} {}\n",
            d.id,
            d.category,
            d.score,
            b.left,
            b.top,
            b.right,
            b.bottom,
            d.center_depth,
            d.dims.w,
            d.dims.l,
            d.dims.h,
            d.theta
        );
    }
    s
}

pub fn read_detections(path: &Path) -> Result<Vec<InstanceDetection>, FormatError> {
    parse_detections(&read_text(path)?).map_err(|e| FormatError::at(path, e))
}

pub fn write_detections(path: &Path, dets: &[InstanceDetection]) -> Result<(), FormatError> {
    write_bytes(path, format_detections(dets).as_bytes())
}

pub fn encode_depth_map(map: &PixelDepthMap) -> Vec<u8> {
    Graymap {
        width: map.width(),
        height: map.height(),
        maxval: map.k() as u16,
        samples: map.values().to_vec(),
    }
    .encode()
}

/// Decodes a depth-class map; `K` is the file's maxval.
pub fn decode_depth_map(bytes: &[u8], scale: f64) -> Result<PixelDepthMap, String> {
    let g = Graymap::decode(bytes).map_err(|e| e.0)?;
    PixelDepthMap::new(g.width, g.height, u32::from(g.maxval), scale, g.samples).map_err(|e| e.to_string())
}

pub fn write_depth_map(path: &Path, map: &PixelDepthMap) -> Result<(), FormatError> {
    write_bytes(path, &encode_depth_map(map))
}

pub fn read_depth_map(path: &Path, scale: f64) -> Result<PixelDepthMap, FormatError> {
    let bytes = fs::read(path).map_err(|e| FormatError::io(path, e))?;
    decode_depth_map(&bytes, scale).map_err(|m| FormatError::file(path, m))
}

/// Sidecar path next to an id map: `x.pgm` becomes `x.txt`.
pub fn sidecar_path(id_map_path: &Path) -> PathBuf {
    id_map_path.with_extension("txt")
}

/// Id-map samples and sidecar text for a set of disjoint masks.
pub fn encode_masks(width: usize, height: usize, masks: &[InstanceMask]) -> Result<(Vec<u8>, String), Error> {
    if masks.len() > usize::from(u16::MAX) {
        return Err(Error::InvalidInput(format!("{} instances exceed 65535", masks.len())));
    }
    let labelled: Vec<InstanceMask> = masks
        .iter()
        .enumerate()
        .map(|(i, m)| InstanceMask {
            id: i as u32 + 1,
            ..m.clone()
        })
        .collect();
    let labels = id_map(width, height, &labelled)?;
    let g = Graymap {
        width,
        height,
        maxval: u16::MAX,
        samples: labels.into_iter().map(|l| l as u16).collect(),
    };
    let mut side = String::from("# label id category score\n");
    for (i, m) in masks.iter().enumerate() {
        side += &format!("{} {} {} {}\n", i + 1, m.id, m.category, m.score);
    }
    Ok((g.encode(), side))
}

pub fn decode_masks(pgm: &[u8], sidecar: &str) -> Result<Vec<InstanceMask>, Error> {
    let g = Graymap::decode(pgm).map_err(|e| Error::InvalidInput(e.0))?;
    let mut masks = Vec::new();
    for (i, raw) in sidecar.lines().enumerate() {
        let line = i + 1;
        let body = content(raw);
        if body.is_empty() {
            continue;
        }
        let f: Vec<&str> = body.split_whitespace().collect();
        if f.len() != 4 {
            return Err(Error::Parse {
                line,
                message: format!("expected 4 fields, found {}", f.len()),
            });
        }
        let label: u16 = field(f[0], "label", line)?;
        if label as usize != masks.len() + 1 {
            return Err(Error::Parse {
                line,
                message: format!("labels must count up from 1, found {label}"),
            });
        }
        let category: Category = field(f[2], "category", line)?;
        masks.push(InstanceMask {
            id: field(f[1], "id", line)?,
            category,
            score: field(f[3], "score", line)?,
            bitmap: Bitmap::new(g.width, g.height),
        });
    }
    for (px, &label) in g.samples.iter().enumerate() {
        if label == 0 {
            continue;
        }
        let m = masks.get_mut(usize::from(label) - 1).ok_or_else(|| {
            Error::InvalidInput(format!("id map uses label {label} missing from the sidecar"))
        })?;
        m.bitmap.bits_mut()[px] = true;
    }
    Ok(masks)
}

/// Writes `path` (id map) and its sidecar.
pub fn write_masks(path: &Path, width: usize, height: usize, masks: &[InstanceMask]) -> Result<(), FormatError> {
    let (pgm, side) = encode_masks(width, height, masks).map_err(|e| FormatError::at(path, e))?;
    write_bytes(path, &pgm)?;
    write_bytes(&sidecar_path(path), side.as_bytes())
}

pub fn read_masks(path: &Path) -> Result<Vec<InstanceMask>, FormatError> {
    let pgm = fs::read(path).map_err(|e| FormatError::io(path, e))?;
    let side_path = sidecar_path(path);
    let side = read_text(&side_path)?;
    decode_masks(&pgm, &side).map_err(|e| match e {
        Error::Parse { .. } => FormatError::at(&side_path, e),
        other => FormatError::at(path, other),
    })
}

fn label_color(label: usize) -> [u8; 3] {
    // golden-angle hue walk, full saturation
    let hue = (label as f64 * 137.507_764) % 360.0;
    let x = 1.0 - ((hue / 60.0) % 2.0 - 1.0).abs();
    let (r, g, b) = match (hue / 60.0) as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    let q = |v: f64| (55.0 + 200.0 * v) as u8;
    [q(r), q(g), q(b)]
}

/// Colorized P6 rendering of an id map; background is black.
pub fn color_dump(width: usize, height: usize, masks: &[InstanceMask]) -> Result<Vec<u8>, Error> {
    let mut rgb = vec![[0u8; 3]; width * height];
    for (i, m) in masks.iter().enumerate() {
        if m.bitmap.width() != width || m.bitmap.height() != height {
            return Err(Error::DimensionMismatch {
                expected_w: width,
                expected_h: height,
                got_w: m.bitmap.width(),
                got_h: m.bitmap.height(),
            });
        }
        let c = label_color(i + 1);
        for (px, &bit) in m.bitmap.bits().iter().enumerate() {
            if bit {
                rgb[px] = c;
            }
        }
    }
    Ok(encode_ppm(width, height, &rgb))
}

pub fn write_color_dump(path: &Path, width: usize, height: usize, masks: &[InstanceMask]) -> Result<(), FormatError> {
    let bytes = color_dump(width, height, masks).map_err(|e| FormatError::at(path, e))?;
    write_bytes(path, &bytes)
}

pub fn read_kitti_labels(path: &Path) -> Result<Vec<KittiObject>, FormatError> {
    parse_kitti_labels(&read_text(path)?).map_err(|e| FormatError::at(path, e))
}

pub fn read_kitti_calib(path: &Path) -> Result<CameraIntrinsics, FormatError> {
    parse_kitti_calib(&read_text(path)?).map_err(|e| FormatError::at(path, e))
}

/// File stems in `dir` with extension `ext`, sorted.
pub fn stems(dir: &Path, ext: &str) -> Result<Vec<String>, FormatError> {
    let entries = fs::read_dir(dir).map_err(|e| FormatError::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| FormatError::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) == Some(ext) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.push(stem.to_string());
            }
        }
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use depthseg_core::synth::{generate, SceneSpec};

    #[test]
    fn detections_round_trip_exactly() {
        let scene = generate(&SceneSpec { seed: 4, ..SceneSpec::default() }).unwrap();
        let text = format_detections(&scene.detections);
        assert_eq!(parse_detections(&text).unwrap(), scene.detections);
    }

    #[test]
    fn detection_errors_carry_line_numbers() {
        let good = "1 Car 0.9 10 10 50 40 12.5 1.6 3.9 1.5 0.1";
        let text = format!("# header\n{good}\n\n1 Car 0.9 10 10 50 40 12.5 1.6 3.9 1.5\n");
        assert!(matches!(parse_detections(&text), Err(Error::Parse { line: 4, .. })));
        let text = format!("{good}\n2 Truck 0.9 10 10 50 40 12.5 1.6 3.9 1.5 0.1\n");
        assert!(matches!(parse_detections(&text), Err(Error::Parse { line: 2, .. })));
        let text = "3 Car 0.9 10 10 50 40 -2 1.6 3.9 1.5 0.1";
        assert!(matches!(parse_detections(text), Err(Error::Parse { line: 1, .. })));
        assert_eq!(parse_detections(good).unwrap().len(), 1);
    }

    #[test]
    fn masks_round_trip() {
        let scene = generate(&SceneSpec { seed: 9, ..SceneSpec::default() }).unwrap();
        let (w, h) = (scene.map.width(), scene.map.height());
        let (pgm, side) = encode_masks(w, h, &scene.masks).unwrap();
        assert_eq!(decode_masks(&pgm, &side).unwrap(), scene.masks);
        let dump = color_dump(w, h, &scene.masks).unwrap();
        assert_eq!(dump.len(), format!("P6\n{w} {h}\n255\n").len() + 3 * w * h);
    }

    #[test]
    fn depth_map_round_trip() {
        let scene = generate(&SceneSpec { seed: 2, ..SceneSpec::default() }).unwrap();
        let bytes = encode_depth_map(&scene.map);
        assert_eq!(decode_depth_map(&bytes, 4.0).unwrap(), scene.map);
    }

    #[test]
    fn sidecar_label_gaps_rejected() {
        let pgm = Graymap::new(2, 1, 65535, vec![1, 0]).unwrap().encode();
        assert!(decode_masks(&pgm, "2 7 Car 1\n").is_err());
        assert!(decode_masks(&pgm, "").is_err());
        assert_eq!(decode_masks(&pgm, "1 7 Car 0.5\n").unwrap()[0].id, 7);
    }
}
