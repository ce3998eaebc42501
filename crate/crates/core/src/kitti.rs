//! KITTI object label and calibration text formats.
//!
//! Label lines carry 15 whitespace-separated fields:
//!
//! ```text
//! type truncated occluded alpha left top right bottom h w l x y z rotation_y
//! ```
//!
//! A 16th `score` field, as found in detector result files, is accepted.
//! Calibration files hold named matrix rows such as `P2: p00 p01 ... p23`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, ObjectDims, Point3D};
use crate::mask_assembly::{BBox, Category, InstanceDetection};

pub const DONT_CARE: &str = "DontCare";

/// One labelled object.
#[derive(Debug, Clone, PartialEq)]
pub struct KittiObject {
    pub kind: String,
    pub truncated: f64,
    pub occluded: i32,
    pub alpha: f64,
    pub bbox: BBox,
    /// Height, width, length in meters.
    pub h: f64,
    pub w: f64,
    pub l: f64,
    /// Bottom center of the box in camera coordinates.
    pub location: Point3D,
    pub rotation_y: f64,
    pub score: Option<f64>,
}

impl KittiObject {
    pub fn is_dont_care(&self) -> bool {
        self.kind == DONT_CARE
    }

    /// Evaluated category, if this is a Car, Pedestrian or Cyclist.
    pub fn category(&self) -> Option<Category> {
        match self.kind.as_str() {
            "Car" => Some(Category::Car),
            "Pedestrian" => Some(Category::Pedestrian),
            "Cyclist" => Some(Category::Cyclist),
            _ => None,
        }
    }

    pub fn dims(&self) -> ObjectDims {
        ObjectDims {
            w: self.w,
            l: self.l,
            h: self.h,
        }
    }

    /// Detection record for assembly; the center depth is the location's `z`.
    pub fn to_detection(&self, id: u32) -> Result<InstanceDetection> {
        let category = self
            .category()
            .ok_or_else(|| Error::InvalidInput(format!("type {} is not evaluated", self.kind)))?;
        let det = InstanceDetection {
            id,
            category,
            score: self.score.unwrap_or(1.0),
            bbox: self.bbox,
            center_depth: self.location.z,
            dims: self.dims(),
            theta: self.rotation_y,
        };
        det.validate()?;
        Ok(det)
    }

    /// Label line with every number in shortest round-trip form.
    pub fn to_line(&self) -> String {
        let mut s = String::new();
        let b = &self.bbox;
        let p = &self.location;
        let _ = write!(
            s,
            "{} {} {} {} {} {} {} {} {} {} {} {} {} {} {}",
            self.kind,
            self.truncated,
            self.occluded,
            self.alpha,
            b.left,
            b.top,
            b.right,
            b.bottom,
            self.h,
            self.w,
            self.l,
            p.x,
            p.y,
            p.z,
            self.rotation_y
        );
        if let Some(score) = self.score {
            let _ = write!(s, " {score}");
        }
        s
    }
}

fn number<T: core::str::FromStr>(field: &str, name: &str, line: usize) -> Result<T> {
    field.parse().map_err(|_| Error::Parse {
        line,
        message: format!("field {name}: cannot parse {field:?}"),
    })
}

fn parse_label_line(text: &str, line: usize) -> Result<KittiObject> {
    let f: Vec<&str> = text.split_whitespace().collect();
    if f.len() != 15 && f.len() != 16 {
        return Err(Error::Parse {
            line,
            message: format!("expected 15 or 16 fields, found {}", f.len()),
        });
    }
    let obj = KittiObject {
        kind: f[0].to_string(),
        truncated: number(f[1], "truncated", line)?,
        occluded: number(f[2], "occluded", line)?,
        alpha: number(f[3], "alpha", line)?,
        bbox: BBox::new(
            number(f[4], "left", line)?,
            number(f[5], "top", line)?,
            number(f[6], "right", line)?,
            number(f[7], "bottom", line)?,
        ),
        h: number(f[8], "height", line)?,
        w: number(f[9], "width", line)?,
        l: number(f[10], "length", line)?,
        location: Point3D::new(
            number(f[11], "x", line)?,
            number(f[12], "y", line)?,
            number(f[13], "z", line)?,
        ),
        rotation_y: number(f[14], "rotation_y", line)?,
        score: f.get(15).map(|s| number(s, "score", line)).transpose()?,
    };
    if !obj.is_dont_care() && !(obj.h > 0.0 && obj.w > 0.0 && obj.l > 0.0) {
        return Err(Error::Parse {
            line,
            message: "dimensions must be positive".into(),
        });
    }
    Ok(obj)
}

/// Parses a label file. Blank lines are skipped; line numbers start at 1.
pub fn parse_kitti_labels(text: &str) -> Result<Vec<KittiObject>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_label_line(l, i + 1))
        .collect()
}

/// Serializes objects one per line.
pub fn write_kitti_labels(objects: &[KittiObject]) -> String {
    let mut s = String::new();
    for o in objects {
        s.push_str(&o.to_line());
        s.push('\n');
    }
    s
}

/// Reads the intrinsics of the left color camera from the `P2` row.
pub fn parse_kitti_calib(text: &str) -> Result<CameraIntrinsics> {
    for (i, raw) in text.lines().enumerate() {
        let Some((name, rest)) = raw.split_once(':') else {
            continue;
        };
        if name.trim() != "P2" {
            continue;
        }
        let line = i + 1;
        let values = rest
            .split_whitespace()
            .map(|v| number::<f64>(v, "P2", line))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != 12 {
            return Err(Error::Parse {
                line,
                message: format!("P2 needs 12 numbers, found {}", values.len()),
            });
        }
        return CameraIntrinsics::new(values[0], values[5], values[2], values[6]);
    }
    Err(Error::InvalidInput("calibration has no P2 row".into()))
}

/// Keeps Car, Pedestrian and Cyclist entries, in order.
pub fn filter_categories(objects: &[KittiObject]) -> Vec<KittiObject> {
    objects
        .iter()
        .filter(|o| o.category().is_some())
        .cloned()
        .collect()
}
