//! Planar kernel: points, placements, instances, and the tangent, corridor,
//! cone and domination predicates the planner is built from.
//!
//! All predicates work on `f64`. Where a comparison needs slack, callers
//! pass the instance tolerance from [`Instance::tolerance`], which is
//! `1e-9` times the diameter of the bounding box of the four centres.

use std::f64::consts::TAU;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

/// Relative slack used when deciding whether a point lies inside a circle.
pub const BOUNDARY_REL_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("radius sum must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("placement is not compatible: |A-B| = {distance} < s = {s}")]
    Incompatible { distance: f64, s: f64 },
    #[error("point lies strictly inside the circle")]
    PointInsideCircle,
    #[error("apex lies inside the target circle; cone is undefined")]
    InvalidCone,
    #[error("circles are coincident")]
    DegenerateCircles,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// Unit vector at angle `theta`.
    pub fn polar(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Point { x: c, y: s }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    /// Angle of the vector in `(-pi, pi]`.
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn perp(self) -> Point {
        Point {
            x: -self.y,
            y: self.x,
        }
    }

    pub fn rotate(self, theta: f64) -> Point {
        let (s, c) = theta.sin_cos();
        Point {
            x: c * self.x - s * self.y,
            y: s * self.x + c * self.y,
        }
    }

    pub fn reflect_x(self) -> Point {
        Point {
            x: self.x,
            y: -self.y,
        }
    }

    pub fn lerp(self, o: Point, t: f64) -> Point {
        self + (o - self) * t
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn normalized(self) -> Option<Point> {
        let n = self.norm();
        (n > 0.0).then(|| self * (1.0 / n))
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Wrap an angle into `[0, 2pi)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Signed angle from `u` to `v` in `(-pi, pi]`.
pub fn signed_angle(u: Point, v: Point) -> f64 {
    u.cross(v).atan2(u.dot(v))
}

/// Centres of the two discs at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub a: Point,
    pub b: Point,
}

impl Placement {
    pub const fn new(a: Point, b: Point) -> Self {
        Placement { a, b }
    }

    pub fn separation(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn is_compatible(&self, s: f64, eps: f64) -> bool {
        self.separation() >= s - eps
    }

    pub fn map(&self, f: impl Fn(Point) -> Point) -> Placement {
        Placement::new(f(self.a), f(self.b))
    }

    pub fn swapped(&self) -> Placement {
        Placement::new(self.b, self.a)
    }
}

/// A planning problem: radius sum plus initial and final placements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Instance {
    pub s: f64,
    pub p0: Placement,
    pub p1: Placement,
}

impl Instance {
    /// Validated constructor. Placements must be compatible up to the
    /// instance tolerance.
    pub fn new(s: f64, p0: Placement, p1: Placement) -> Result<Self, GeomError> {
        if !(s.is_finite() && s > 0.0) {
            return Err(GeomError::InvalidRadius(s));
        }
        let inst = Instance { s, p0, p1 };
        if !inst.points().iter().all(|p| p.is_finite()) {
            return Err(GeomError::NonFinite);
        }
        let eps = inst.tolerance();
        for p in [p0, p1] {
            if !p.is_compatible(s, eps) {
                return Err(GeomError::Incompatible {
                    distance: p.separation(),
                    s,
                });
            }
        }
        Ok(inst)
    }

    /// Build from raw coordinates `(s, A0, B0, A1, B1)`.
    pub fn from_coords(
        s: f64,
        a0: (f64, f64),
        b0: (f64, f64),
        a1: (f64, f64),
        b1: (f64, f64),
    ) -> Result<Self, GeomError> {
        let pt = |(x, y): (f64, f64)| Point::new(x, y);
        Instance::new(
            s,
            Placement::new(pt(a0), pt(b0)),
            Placement::new(pt(a1), pt(b1)),
        )
    }

    /// `[A0, B0, A1, B1]`.
    pub fn points(&self) -> [Point; 4] {
        [self.p0.a, self.p0.b, self.p1.a, self.p1.b]
    }

    pub fn bbox_diameter(&self) -> f64 {
        let pts = self.points();
        let (mut lo, mut hi) = (pts[0], pts[0]);
        for p in &pts[1..] {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        hi.dist(lo)
    }

    /// Predicate tolerance: `1e-9` times the bounding-box diameter.
    pub fn tolerance(&self) -> f64 {
        1e-9 * self.bbox_diameter().max(self.s)
    }

    /// Length scale for relative comparisons.
    pub fn scale(&self) -> f64 {
        self.bbox_diameter().max(self.s)
    }

    pub fn map(&self, f: impl Fn(Point) -> Point + Copy) -> Instance {
        Instance {
            s: self.s,
            p0: self.p0.map(f),
            p1: self.p1.map(f),
        }
    }

    /// Exchange the roles of the two discs.
    pub fn swap_roles(&self) -> Instance {
        Instance {
            s: self.s,
            p0: self.p0.swapped(),
            p1: self.p1.swapped(),
        }
    }

    /// Exchange initial and final placements.
    pub fn reversed(&self) -> Instance {
        Instance {
            s: self.s,
            p0: self.p1,
            p1: self.p0,
        }
    }

    pub fn chord_a(&self) -> f64 {
        self.p0.a.dist(self.p1.a)
    }

    pub fn chord_b(&self) -> f64 {
        self.p0.b.dist(self.p1.b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
}

impl Circle {
    pub const fn new(center: Point, radius: f64) -> Self {
        Circle { center, radius }
    }

    pub fn point_at(&self, theta: f64) -> Point {
        self.center + Point::polar(theta) * self.radius
    }

    /// Strictly inside, with `eps` of slack toward the boundary.
    pub fn contains_strict(&self, p: Point, eps: f64) -> bool {
        p.dist(self.center) < self.radius - eps
    }
}

/// Rigid motion (optionally followed by a reflection across the x-axis).
///
/// [`Frame::apply`] maps world coordinates to the frame's local
/// coordinates: translate, rotate, then reflect. [`Frame::invert`] maps
/// back.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub rotation: f64,
    pub translation: Point,
    pub reflected: bool,
}

impl Default for Frame {
    fn default() -> Self {
        Frame::IDENTITY
    }
}

impl Frame {
    pub const IDENTITY: Frame = Frame {
        rotation: 0.0,
        translation: Point::ORIGIN,
        reflected: false,
    };

    pub fn apply(&self, p: Point) -> Point {
        let q = (p + self.translation).rotate(self.rotation);
        if self.reflected {
            q.reflect_x()
        } else {
            q
        }
    }

    pub fn invert(&self, p: Point) -> Point {
        let q = if self.reflected { p.reflect_x() } else { p };
        q.rotate(-self.rotation) - self.translation
    }

    /// Map a world-frame direction angle to the local frame.
    pub fn apply_angle(&self, theta: f64) -> f64 {
        let t = theta + self.rotation;
        wrap_angle(if self.reflected { -t } else { t })
    }

    pub fn invert_angle(&self, theta: f64) -> f64 {
        let t = if self.reflected { -theta } else { theta };
        wrap_angle(t - self.rotation)
    }

    pub fn is_identity(&self) -> bool {
        self.rotation == 0.0 && self.translation == Point::ORIGIN && !self.reflected
    }
}

/// Euclidean distance from `p` to the closed segment `q0 q1`.
pub fn distance_point_segment(p: Point, q0: Point, q1: Point) -> f64 {
    p.dist(closest_point_on_segment(p, q0, q1))
}

pub fn closest_point_on_segment(p: Point, q0: Point, q1: Point) -> Point {
    let d = q1 - q0;
    let len_sq = d.norm_sq();
    if len_sq == 0.0 {
        return q0;
    }
    let t = ((p - q0).dot(d) / len_sq).clamp(0.0, 1.0);
    q0 + d * t
}

/// Membership in the open s-corridor of `q0 q1`: distance strictly below `s`.
pub fn in_s_corridor(p: Point, q0: Point, q1: Point, s: f64) -> bool {
    distance_point_segment(p, q0, q1) < s
}

/// Corridor membership with `eps` of slack: contact within `eps` of
/// the boundary counts as outside.
pub fn in_s_corridor_eps(p: Point, q0: Point, q1: Point, s: f64, eps: f64) -> bool {
    distance_point_segment(p, q0, q1) < s - eps
}

/// Whether `p` lies in the cone of half-lines from `apex` that meet the
/// circle of radius `s` about `target`.
pub fn in_s_cone(p: Point, apex: Point, target: Point, s: f64) -> Result<bool, GeomError> {
    let axis = target - apex;
    let d = axis.norm();
    if d < s * (1.0 - BOUNDARY_REL_TOL) {
        return Err(GeomError::InvalidCone);
    }
    let v = p - apex;
    if v.norm() == 0.0 {
        return Ok(true);
    }
    let half = (s / d).min(1.0).asin();
    Ok(signed_angle(axis, v).abs() <= half)
}

/// Tangency points on a circle as seen from an external point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tangency {
    /// `p` is on the circle; the tangency point is `p` itself.
    OnCircle(Point),
    /// Seen from `p` looking at the centre, `right` is on the right.
    /// In a frame where `p` lies right of the centre it is the upper point.
    Two { right: Point, left: Point },
}

impl Tangency {
    pub fn points(&self) -> Vec<Point> {
        match *self {
            Tangency::OnCircle(p) => vec![p],
            Tangency::Two { right, left } => vec![right, left],
        }
    }
}

pub fn tangent_points(p: Point, c: Circle) -> Result<Tangency, GeomError> {
    let v = c.center - p;
    let d = v.norm();
    let r = c.radius;
    if d < r * (1.0 - BOUNDARY_REL_TOL) {
        return Err(GeomError::PointInsideCircle);
    }
    if d <= r {
        return Ok(Tangency::OnCircle(p));
    }
    // From the centre, tangency points sit at +-acos(r/d) off the ray to p.
    let back = (p - c.center).angle();
    let off = (r / d).acos();
    let t1 = c.point_at(back + off);
    let t2 = c.point_at(back - off);
    if (t1 - p).cross(v) > 0.0 {
        Ok(Tangency::Two {
            right: t1,
            left: t2,
        })
    } else {
        Ok(Tangency::Two {
            right: t2,
            left: t1,
        })
    }
}

/// The tangency point that is geometrically higher in the current frame:
/// the one farther along the normal of `center - p` that points up (or
/// left for a vertical ray).
pub fn upper_tangent_point(p: Point, c: Circle) -> Result<Point, GeomError> {
    pick_tangent(p, c, true)
}

pub fn lower_tangent_point(p: Point, c: Circle) -> Result<Point, GeomError> {
    pick_tangent(p, c, false)
}

fn pick_tangent(p: Point, c: Circle, upper: bool) -> Result<Point, GeomError> {
    match tangent_points(p, c)? {
        Tangency::OnCircle(t) => Ok(t),
        Tangency::Two {
            right: t1,
            left: t2,
        } => {
            let mut n = (c.center - p).perp();
            if n.y < 0.0 || (n.y == 0.0 && n.x > 0.0) {
                n = -n;
            }
            let first = (t1 - p).dot(n) >= (t2 - p).dot(n);
            Ok(if first == upper { t1 } else { t2 })
        }
    }
}

/// Intersections ordered upper-first by `y` (ties: larger `x` first).
pub fn circle_circle_intersection(c1: Circle, c2: Circle) -> Result<Vec<Point>, GeomError> {
    let v = c2.center - c1.center;
    let d = v.norm();
    if d == 0.0 {
        if c1.radius == c2.radius {
            return Err(GeomError::DegenerateCircles);
        }
        return Ok(Vec::new());
    }
    let (r1, r2) = (c1.radius, c2.radius);
    let tol = 1e-12 * (r1 + r2);
    if d > r1 + r2 + tol || d < (r1 - r2).abs() - tol {
        return Ok(Vec::new());
    }
    let a = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
    let h_sq = r1 * r1 - a * a;
    let ex = v * (1.0 / d);
    let mid = c1.center + ex * a;
    if h_sq <= 0.0 {
        return Ok(vec![mid]);
    }
    let h = h_sq.sqrt();
    let (p, q) = (mid + ex.perp() * h, mid - ex.perp() * h);
    let mut out = vec![p, q];
    out.sort_by(|u, w| w.y.total_cmp(&u.y).then(w.x.total_cmp(&u.x)));
    Ok(out)
}

/// Whether `q` lies on or below both upper tangent lines from `p` to the
/// s-circles of `b0` and `b1`, measured in the frame where `b0 -> b1`
/// runs along the positive x-axis.
pub fn dominates(p: Point, q: Point, b0: Point, b1: Point, s: f64) -> Result<bool, GeomError> {
    let frame = axis_frame(b0, b1);
    let (p, q) = (frame.apply(p), frame.apply(q));
    let (c0, c1) = (frame.apply(b0), frame.apply(b1));
    for c in [c0, c1] {
        let t = upper_tangent_point(p, Circle::new(c, s))?;
        if !on_or_below_line(q, p, t - p) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `q` on or below the line through `p` with direction `dir`. For a
/// vertical line, "below" means left.
pub fn on_or_below_line(q: Point, p: Point, dir: Point) -> bool {
    let mut d = dir;
    if d.x < 0.0 || (d.x == 0.0 && d.y > 0.0) {
        d = -d;
    }
    let len = d.norm();
    if len == 0.0 {
        // Degenerate line through p (p on the circle): horizontal.
        return q.y <= p.y + 1e-12 * (1.0 + (q - p).norm());
    }
    d.cross(q - p) <= 1e-12 * len * (1.0 + (q - p).norm())
}

/// Frame that puts `b0` at the origin with `b1` on the positive x-axis.
fn axis_frame(b0: Point, b1: Point) -> Frame {
    let d = b1 - b0;
    let rotation = if d.norm() > 0.0 { -d.angle() } else { 0.0 };
    Frame {
        rotation,
        translation: -b0,
        reflected: false,
    }
}

/// Normalize so that `B0 = (0,0)` and `B1 = (d,0)` with `d >= 0`.
///
/// With `B0 = B1` the axis follows `A1 - A0`; if that also vanishes the
/// rotation is zero.
pub fn normalize(inst: &Instance) -> (Frame, Instance) {
    let (b0, b1) = (inst.p0.b, inst.p1.b);
    let axis = if b1 != b0 {
        b1 - b0
    } else {
        inst.p1.a - inst.p0.a
    };
    let rotation = if axis.norm() > 0.0 {
        -axis.angle()
    } else {
        0.0
    };
    let frame = Frame {
        rotation,
        translation: -b0,
        reflected: false,
    };
    let mut local = inst.map(|p| frame.apply(p));
    // Pin the exact zeros the convention promises.
    local.p0.b = Point::ORIGIN;
    local.p1.b.y = 0.0;
    if b1 == b0 {
        local.p1.b = Point::ORIGIN;
    }
    (frame, local)
}

/// Negate all y-coordinates.
pub fn reflect_instance(inst: &Instance) -> Instance {
    inst.map(Point::reflect_x)
}

/// Infinite line through `point` along `dir`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub point: Point,
    pub dir: Point,
}

impl Line {
    pub fn through(a: Point, b: Point) -> Line {
        Line {
            point: a,
            dir: b - a,
        }
    }

    pub fn at(&self, t: f64) -> Point {
        self.point + self.dir * t
    }

    /// Parameters `(t, u)` with `self.at(t) == other.at(u)`.
    pub fn intersect_params(&self, other: &Line) -> Option<(f64, f64)> {
        let den = self.dir.cross(other.dir);
        let scale = self.dir.norm() * other.dir.norm();
        if scale == 0.0 || den.abs() <= 1e-14 * scale {
            return None;
        }
        let w = other.point - self.point;
        Some((w.cross(other.dir) / den, w.cross(self.dir) / den))
    }

    pub fn intersect(&self, other: &Line) -> Option<Point> {
        self.intersect_params(other).map(|(t, _)| self.at(t))
    }

    /// Parameters of the intersections with a circle, ascending.
    pub fn circle_params(&self, c: Circle) -> Vec<f64> {
        let a = self.dir.norm_sq();
        if a == 0.0 {
            return Vec::new();
        }
        let w = self.point - c.center;
        let b = w.dot(self.dir);
        let cc = w.norm_sq() - c.radius * c.radius;
        let disc = b * b - a * cc;
        if disc < 0.0 {
            return Vec::new();
        }
        let sq = disc.sqrt();
        if sq == 0.0 {
            return vec![-b / a];
        }
        vec![(-b - sq) / a, (-b + sq) / a]
    }

    pub fn intersect_circle(&self, c: Circle) -> Vec<Point> {
        self.circle_params(c)
            .into_iter()
            .map(|t| self.at(t))
            .collect()
    }
}

/// Angle of `p` about `center` in `[0, 2pi)`.
pub fn angle_about(center: Point, p: Point) -> f64 {
    wrap_angle((p - center).angle())
}

/// Counter-clockwise sweep from angle `from` to angle `to`, in `[0, 2pi)`.
pub fn ccw_sweep(from: f64, to: f64) -> f64 {
    wrap_angle(to - from)
}
