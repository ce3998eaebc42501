//! Camera and object geometry.
//!
//! Camera frame: `x` right, `y` down, `z` forward (KITTI rectified camera).
//! Object frame: origin at the cuboid center, axes parallel to the camera's;
//! length runs along `x` and width along `z` before the yaw `theta` is applied
//! about the vertical `y` axis.

use core::f64::consts::PI;

use crate::depth_bins::DepthBins;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        let cam = Self { fx, fy, cx, cy };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fx.is_finite()) || !(self.fy > 0.0 && self.fy.is_finite()) {
            return Err(Error::InvalidIntrinsics("focal lengths must be positive"));
        }
        if !(self.cx.is_finite() && self.cy.is_finite()) {
            return Err(Error::InvalidIntrinsics("principal point must be finite"));
        }
        Ok(())
    }

    /// Intrinsics for an image resampled by `1 / scale` in both directions.
    pub fn downscaled(&self, scale: f64) -> Self {
        Self {
            fx: self.fx / scale,
            fy: self.fy / scale,
            cx: self.cx / scale,
            cy: self.cy / scale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3D {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    fn norm(self) -> f64 {
        libm::sqrt(self.dot(self))
    }
}

/// Cuboid extents in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectDims {
    pub w: f64,
    pub l: f64,
    pub h: f64,
}

impl ObjectDims {
    pub fn new(w: f64, l: f64, h: f64) -> Result<Self> {
        let dims = Self { w, l, h };
        dims.validate()?;
        Ok(dims)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if ok(self.w) && ok(self.l) && ok(self.h) {
            Ok(())
        } else {
            Err(Error::InvalidDims("width, length and height must be positive"))
        }
    }
}

/// Eight cuboid corners in the object-centered frame.
///
/// Corner `i` has sign pattern `(bit 2 -> x, bit 1 -> y, bit 0 -> z)`, a set
/// bit meaning the positive half-extent, so corners `i` and `7 - i` are
/// diagonally opposite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerSet(pub [Point3D; 8]);

impl CornerSet {
    pub fn points(&self) -> &[Point3D; 8] {
        &self.0
    }

    /// Largest distance between a corner here and the same-index corner in `other`.
    pub fn max_distance(&self, other: &CornerSet) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.sub(*b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest distance from any corner here to its nearest corner in `other`,
    /// ignoring corner order.
    pub fn set_distance(&self, other: &CornerSet) -> f64 {
        self.0
            .iter()
            .map(|a| {
                other
                    .0
                    .iter()
                    .map(|b| a.sub(*b).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }
}

const CORNER_TOL: f64 = 1e-3;
const MIN_EDGE: f64 = 1e-6;

/// Back-projects pixel `(u, v)` at depth `d` into the camera frame.
pub fn locate_3d(cam: &CameraIntrinsics, u: f64, v: f64, d: f64) -> Result<Point3D> {
    if !(d > 0.0) {
        return Err(Error::NonPositiveDepth(d));
    }
    Ok(Point3D {
        x: (u - cam.cx) * d / cam.fx,
        y: (v - cam.cy) * d / cam.fy,
        z: d,
    })
}

/// Pinhole projection; returns `(u, v, depth)`.
pub fn project(cam: &CameraIntrinsics, p: Point3D) -> Result<(f64, f64, f64)> {
    if !(p.z > 0.0) {
        return Err(Error::NonPositiveDepth(p.z));
    }
    Ok((p.x / p.z * cam.fx + cam.cx, p.y / p.z * cam.fy + cam.cy, p.z))
}

/// Rotates `p` by `theta` about the vertical axis (KITTI `rotation_y` sense).
pub fn rotate_y(p: Point3D, theta: f64) -> Point3D {
    let (s, c) = (libm::sin(theta), libm::cos(theta));
    Point3D::new(c * p.x + s * p.z, p.y, -s * p.x + c * p.z)
}

pub fn corners_from_dims(dims: &ObjectDims, theta: f64) -> CornerSet {
    let mut pts = [Point3D::default(); 8];
    for (i, p) in pts.iter_mut().enumerate() {
        let sx = if i & 4 != 0 { 0.5 } else { -0.5 };
        let sy = if i & 2 != 0 { 0.5 } else { -0.5 };
        let sz = if i & 1 != 0 { 0.5 } else { -0.5 };
        *p = rotate_y(Point3D::new(sx * dims.l, sy * dims.h, sz * dims.w), theta);
    }
    CornerSet(pts)
}

/// Recovers cuboid extents and yaw from its corners.
///
/// Height is taken along the edge closest to vertical; of the two horizontal
/// edges the longer one is the length. The yaw is reported in `(-pi/2, pi/2]`
/// because a rectangle is symmetric under a half turn.
pub fn dims_from_corners(corners: &CornerSet) -> Result<(ObjectDims, f64)> {
    let p = &corners.0;
    let centroid = p.iter().fold(Point3D::default(), |acc, q| {
        Point3D::new(acc.x + q.x / 8.0, acc.y + q.y / 8.0, acc.z + q.z / 8.0)
    });
    if centroid.norm() > CORNER_TOL {
        return Err(Error::DegenerateGeometry("corner centroid is not at the origin"));
    }
    for i in 0..4 {
        let s = p[i].sub(Point3D::new(-p[7 - i].x, -p[7 - i].y, -p[7 - i].z));
        if s.norm() > CORNER_TOL {
            return Err(Error::DegenerateGeometry("opposite corners are not symmetric"));
        }
    }

    // Edges leaving corner 0 towards its three neighbours.
    let edges = [p[4].sub(p[0]), p[2].sub(p[0]), p[1].sub(p[0])];
    if edges.iter().any(|e| e.norm() < MIN_EDGE) {
        return Err(Error::DegenerateGeometry("cuboid has a zero-length edge"));
    }
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        let cos = edges[a].dot(edges[b]) / (edges[a].norm() * edges[b].norm());
        if cos.abs() > CORNER_TOL {
            return Err(Error::DegenerateGeometry("cuboid edges are not orthogonal"));
        }
    }

    let vertical = (0..3)
        .max_by(|&a, &b| edges[a].y.abs().total_cmp(&edges[b].y.abs()))
        .unwrap_or(1);
    let height_edge = edges[vertical];
    let mut horizontal = (0..3).filter(|&e| e != vertical).map(|e| edges[e]);
    let (mut len_edge, mut width_edge) = match (horizontal.next(), horizontal.next()) {
        (Some(a), Some(b)) => (a, b),
        _ => unreachable!("three edges, one vertical"),
    };
    if width_edge.norm() > len_edge.norm() {
        core::mem::swap(&mut len_edge, &mut width_edge);
    }

    let mut theta = libm::atan2(-len_edge.z, len_edge.x);
    if theta <= -PI / 2.0 {
        theta += PI;
    } else if theta > PI / 2.0 {
        theta -= PI;
    }
    let dims = ObjectDims {
        w: width_edge.norm(),
        l: len_edge.norm(),
        h: height_edge.norm(),
    };
    Ok((dims, theta))
}

/// Wraps an angle into `[-pi, pi]`.
pub fn normalize_angle(theta: f64) -> f64 {
    if (-PI..=PI).contains(&theta) {
        return theta;
    }
    let mut t = libm::fmod(theta + PI, 2.0 * PI);
    if t < 0.0 {
        t += 2.0 * PI;
    }
    t - PI
}

/// Half-extent of the object's bird's-eye footprint along the depth axis.
pub fn depth_margin(dims: &ObjectDims, theta: f64) -> f64 {
    let theta = normalize_angle(theta);
    0.5 * dims.w * libm::fabs(libm::cos(theta)) + 0.5 * dims.l * libm::fabs(libm::sin(theta))
}

/// Per-instance matching tolerance in class-index units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthThreshold {
    pub delta: f64,
    /// Set when the object's near face reaches the camera plane; `delta` is
    /// then `K - 1` so every foreground class is admitted.
    pub saturated: bool,
}

/// Converts a metric depth margin at `center_depth` into class-index units.
///
/// For exponential bins this is `(K - 1) * log_{d_max/d_min}(c / (c - dd))`,
/// which equals the difference of continuous indices of the center and the
/// near face while both lie inside the bins' range.
pub fn depth_threshold(bins: &DepthBins, center_depth: f64, margin: f64) -> Result<DepthThreshold> {
    if !(center_depth > 0.0) {
        return Err(Error::NonPositiveDepth(center_depth));
    }
    if !(margin >= 0.0) {
        return Err(Error::InvalidInput(alloc::format!(
            "depth margin must be non-negative, got {margin}"
        )));
    }
    let near = center_depth - margin;
    if near <= bins.d_min() * 1e-9 {
        log::warn!(
            "object at {center_depth} m with margin {margin} m crosses the camera plane; \
             saturating threshold"
        );
        return Ok(DepthThreshold {
            delta: f64::from(bins.k() - 1),
            saturated: true,
        });
    }
    Ok(DepthThreshold {
        delta: bins.index_span(near, center_depth),
        saturated: false,
    })
}
