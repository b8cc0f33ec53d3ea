//! Planar geometry: vectors, poses, wall segments, frame transforms, and the
//! ray/segment/disc queries used by the scan, visibility, and collision code.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// Tolerance for treating a ray as parallel to a segment.
const PARALLEL_EPS: f64 = 1e-12;

/// A 2D vector in meters (positions) or meters per second (velocities).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector pointing along `angle`.
    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c, s)
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// Unit vector in the same direction, or `None` for a (near) zero vector.
    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        if n > 1e-12 {
            Some(self * (1.0 / n))
        } else {
            None
        }
    }

    /// Rotates counter-clockwise by `angle` radians.
    pub fn rotated(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Left-hand perpendicular (counter-clockwise quarter turn).
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Scales the vector down so that its norm is at most `max_norm`.
    pub fn clamp_norm(self, max_norm: f64) -> Vec2 {
        let n = self.norm();
        if n > max_norm && n > 0.0 {
            self * (max_norm / n)
        } else {
            self
        }
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl SubAssign for Vec2 {
    fn sub_assign(&mut self, rhs: Vec2) {
        self.x -= rhs.x;
        self.y -= rhs.y;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wraps an angle into (-π, π].
pub fn normalize_angle(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    // rem_euclid can land exactly on -π after the shift for inputs near π.
    if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// A position plus heading. The heading is kept in (-π, π].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub position: Vec2,
    pub heading: f64,
}

impl Pose2 {
    pub fn new(position: Vec2, heading: f64) -> Self {
        Self {
            position,
            heading: normalize_angle(heading),
        }
    }

    pub fn from_xyt(x: f64, y: f64, heading: f64) -> Self {
        Self::new(Vec2::new(x, y), heading)
    }

    /// Unit vector along the heading.
    pub fn direction(&self) -> Vec2 {
        Vec2::from_angle(self.heading)
    }
}

/// A wall segment. Endpoints are distinct.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

impl Segment {
    /// Builds a segment, panicking on coincident endpoints. Use
    /// [`Segment::try_new`] for untrusted input.
    pub fn new(a: Vec2, b: Vec2) -> Self {
        Self::try_new(a, b).expect("segment endpoints must be distinct and finite")
    }

    pub fn try_new(a: Vec2, b: Vec2) -> Option<Self> {
        if a.is_finite() && b.is_finite() && a != b {
            Some(Self { a, b })
        } else {
            None
        }
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    pub fn closest_point(&self, p: Vec2) -> Vec2 {
        closest_point_on(self.a, self.b, p)
    }
}

/// Expresses world point `p` in the coordinates of `frame`: R(-θ)·(p - origin).
pub fn transform_to_frame(p: Vec2, frame: &Pose2) -> Vec2 {
    (p - frame.position).rotated(-frame.heading)
}

/// Inverse of [`transform_to_frame`].
pub fn transform_from_frame(p: Vec2, frame: &Pose2) -> Vec2 {
    p.rotated(frame.heading) + frame.position
}

/// Closest point to `p` on the segment `a`–`b`. A degenerate segment is a point.
pub fn closest_point_on(a: Vec2, b: Vec2, p: Vec2) -> Vec2 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return a;
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

/// Distance from `p` to the segment `a`–`b`; tolerates `a == b`.
pub fn point_to_points_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    p.distance(closest_point_on(a, b, p))
}

/// Euclidean distance from `p` to the nearest point of `seg`.
pub fn point_segment_distance(p: Vec2, seg: &Segment) -> f64 {
    point_to_points_segment_distance(p, seg.a, seg.b)
}

/// Smallest `t >= 0` with `origin + t·dir` on `seg`.
///
/// When the ray is parallel to the segment the hit is the nearest point of the
/// collinear overlap (possibly `origin` itself), otherwise there is none.
pub fn ray_segment_intersect(origin: Vec2, dir: Vec2, seg: &Segment) -> Option<f64> {
    let s = seg.b - seg.a;
    let ao = seg.a - origin;
    let denom = dir.cross(s);
    let scale = s.norm();
    if denom.abs() <= PARALLEL_EPS * scale {
        // Parallel: only a collinear overlap counts.
        if ao.cross(dir).abs() > PARALLEL_EPS * scale.max(ao.norm()).max(1.0) {
            return None;
        }
        let ta = ao.dot(dir);
        let tb = (seg.b - origin).dot(dir);
        let (lo, hi) = if ta <= tb { (ta, tb) } else { (tb, ta) };
        return if hi < 0.0 {
            None
        } else if lo <= 0.0 {
            Some(0.0)
        } else {
            Some(lo)
        };
    }
    let t = ao.cross(s) / denom;
    let u = ao.cross(dir) / denom;
    if t >= 0.0 && (0.0..=1.0).contains(&u) {
        Some(t)
    } else {
        None
    }
}

/// Smallest `t >= 0` at which the ray enters (or is inside) the disc.
pub fn ray_circle_intersect(origin: Vec2, dir: Vec2, center: Vec2, radius: f64) -> Option<f64> {
    let oc = origin - center;
    let c = oc.norm_squared() - radius * radius;
    if c <= 0.0 {
        return Some(0.0);
    }
    let b = oc.dot(dir);
    if b >= 0.0 {
        return None;
    }
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    Some(-b - disc.sqrt())
}

/// True when the open segment `p`–`q` crosses or touches `wall`.
///
/// The endpoints `p` and `q` themselves are excluded; the wall is closed.
pub fn open_segment_crosses(p: Vec2, q: Vec2, wall: &Segment) -> bool {
    let r = q - p;
    let s = wall.b - wall.a;
    let denom = r.cross(s);
    let ap = wall.a - p;
    if denom == 0.0 {
        if ap.cross(r) != 0.0 {
            return false;
        }
        // Collinear: overlap of the open interval (0,1) with the wall's span.
        let rr = r.norm_squared();
        if rr == 0.0 {
            return false;
        }
        let t0 = ap.dot(r) / rr;
        let t1 = (wall.b - p).dot(r) / rr;
        let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        return lo < 1.0 && hi > 0.0;
    }
    let t = ap.cross(s) / denom;
    let u = ap.cross(r) / denom;
    t > 0.0 && t < 1.0 && (0.0..=1.0).contains(&u)
}

/// True when the closed segments `p`–`q` and `wall` share a point.
pub fn segments_intersect(p: Vec2, q: Vec2, wall: &Segment) -> bool {
    if p == q {
        return point_segment_distance(p, wall) == 0.0;
    }
    let r = q - p;
    let s = wall.b - wall.a;
    let denom = r.cross(s);
    let ap = wall.a - p;
    if denom == 0.0 {
        if ap.cross(r) != 0.0 {
            return false;
        }
        let rr = r.norm_squared();
        let t0 = ap.dot(r) / rr;
        let t1 = (wall.b - p).dot(r) / rr;
        let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        return lo <= 1.0 && hi >= 0.0;
    }
    let t = ap.cross(s) / denom;
    let u = ap.cross(r) / denom;
    (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)
}

/// Minimum distance between two closed segments.
pub fn segment_segment_distance(p: Vec2, q: Vec2, wall: &Segment) -> f64 {
    if segments_intersect(p, q, wall) {
        return 0.0;
    }
    point_to_points_segment_distance(p, wall.a, wall.b)
        .min(point_to_points_segment_distance(q, wall.a, wall.b))
        .min(point_to_points_segment_distance(wall.a, p, q))
        .min(point_to_points_segment_distance(wall.b, p, q))
}
