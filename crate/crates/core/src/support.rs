//! Support functions of the two centre segments and the length lower bound
//! they induce, evaluated both in closed form and by adaptive quadrature.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use thiserror::Error;

use crate::geom::{wrap_angle, Instance, Placement, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SupportError {
    #[error("placement angle undefined for coincident centres")]
    UndefinedAngle,
    #[error("adaptive quadrature did not converge on [{0}, {1}]")]
    QuadratureFailure(f64, f64),
}

/// Sense of rotation of the placement angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Orientation {
    Ccw,
    Cw,
    /// Both robots translate on straight segments; no rotation is forced.
    Straight,
}

impl Orientation {
    pub fn as_str(self) -> &'static str {
        match self {
            Orientation::Ccw => "ccw",
            Orientation::Cw => "cw",
            Orientation::Straight => "straight",
        }
    }

    /// Orientation after mirroring the plane.
    pub fn mirrored(self) -> Orientation {
        match self {
            Orientation::Ccw => Orientation::Cw,
            Orientation::Cw => Orientation::Ccw,
            Orientation::Straight => Orientation::Straight,
        }
    }
}

/// Counter-clockwise arc of the unit circle starting at `start` and
/// spanning `sweep` radians, `0 <= sweep <= 2pi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleInterval {
    pub start: f64,
    pub sweep: f64,
}

impl AngleInterval {
    /// The ccw arc from `start` to `end`. Equal angles give measure zero.
    pub fn from_to(start: f64, end: f64) -> Self {
        let start = wrap_angle(start);
        AngleInterval {
            start,
            sweep: wrap_angle(end - start),
        }
    }

    pub fn end(&self) -> f64 {
        wrap_angle(self.start + self.sweep)
    }

    pub fn measure(&self) -> f64 {
        self.sweep
    }

    pub fn complement(&self) -> AngleInterval {
        AngleInterval {
            start: self.end(),
            sweep: TAU - self.sweep,
        }
    }

    /// Closed-interval membership.
    pub fn contains(&self, theta: f64) -> bool {
        if self.sweep >= TAU {
            return true;
        }
        let d = wrap_angle(theta - self.start);
        d <= self.sweep || (self.sweep > 0.0 && TAU - d <= 1e-15)
    }
}

/// The two centre segments, `a0 a1` and `b0 b1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportEvaluator {
    pub a0: Point,
    pub a1: Point,
    pub b0: Point,
    pub b1: Point,
}

impl SupportEvaluator {
    pub fn new(inst: &Instance) -> Self {
        SupportEvaluator {
            a0: inst.p0.a,
            a1: inst.p1.a,
            b0: inst.p0.b,
            b1: inst.p1.b,
        }
    }

    /// `a_i - b_j` for all four index pairs; `h_ab` is their support function.
    pub fn vertices(&self) -> [Point; 4] {
        [
            self.a0 - self.b0,
            self.a0 - self.b1,
            self.a1 - self.b0,
            self.a1 - self.b1,
        ]
    }

    pub fn chord_sum(&self) -> f64 {
        self.a0.dist(self.a1) + self.b0.dist(self.b1)
    }
}

/// Support value of the segment `e0 e1` in direction `theta`.
pub fn segment_support(e0: Point, e1: Point, theta: f64) -> f64 {
    let u = Point::polar(theta);
    e0.dot(u).max(e1.dot(u))
}

pub fn h_ab(ev: &SupportEvaluator, theta: f64) -> f64 {
    segment_support(ev.a0, ev.a1, theta) + segment_support(ev.b0, ev.b1, PI + theta)
}

/// Angle of `a - b` in `[0, 2pi)`.
pub fn placement_angle(p: &Placement) -> Result<f64, SupportError> {
    let v = p.a - p.b;
    if v.x == 0.0 && v.y == 0.0 {
        return Err(SupportError::UndefinedAngle);
    }
    Ok(wrap_angle(v.angle()))
}

/// Ccw interval from the initial to the final placement angle.
pub fn swept_interval(inst: &Instance) -> AngleInterval {
    // Compatible placements have distinct centres.
    let t0 = placement_angle(&inst.p0).unwrap_or(0.0);
    let t1 = placement_angle(&inst.p1).unwrap_or(0.0);
    AngleInterval::from_to(t0, t1)
}

pub fn integrand(ev: &SupportEvaluator, s: f64, interval: &AngleInterval, theta: f64) -> f64 {
    let h = h_ab(ev, theta);
    if interval.contains(theta) {
        h.max(s)
    } else {
        h
    }
}

/// Angles in `[0, 2pi]`, sorted and merged, at which the integrand may
/// change its analytic form.
pub fn breakpoints(ev: &SupportEvaluator, s: f64, interval: &AngleInterval) -> Vec<f64> {
    let mut out = vec![0.0, TAU, interval.start, interval.end()];
    for d in [ev.a0 - ev.a1, ev.b0 - ev.b1] {
        if d.norm() > 0.0 {
            let perp = d.angle() + FRAC_PI_2;
            out.push(wrap_angle(perp));
            out.push(wrap_angle(perp + PI));
        }
    }
    for v in ev.vertices() {
        let r = v.norm();
        if r >= s && r > 0.0 {
            let phi = v.angle();
            let g = (s / r).min(1.0).acos();
            out.push(wrap_angle(phi + g));
            out.push(wrap_angle(phi - g));
        }
    }
    out.sort_by(f64::total_cmp);
    let mut merged: Vec<f64> = Vec::with_capacity(out.len());
    for t in out {
        match merged.last() {
            Some(&last) if t - last <= 1e-12 => {}
            _ => merged.push(t),
        }
    }
    // Keep 2pi as the exact upper end.
    if let Some(last) = merged.last_mut() {
        *last = TAU;
    }
    merged
}

/// `int_a^b v.u(theta) dtheta`.
fn sinusoid_integral(v: Point, a: f64, b: f64) -> f64 {
    v.x * (b.sin() - a.sin()) + v.y * (a.cos() - b.cos())
}

/// Exact value of the integrand over the full circle, minus both chords.
pub fn closed_form_bound(ev: &SupportEvaluator, s: f64, interval: &AngleInterval) -> f64 {
    let verts = ev.vertices();
    let bps = breakpoints(ev, s, interval);
    let mut total = 0.0;
    for w in bps.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let mid = 0.5 * (a + b);
        let u = Point::polar(mid);
        let v = verts
            .iter()
            .copied()
            .max_by(|p, q| p.dot(u).total_cmp(&q.dot(u)))
            .expect("four vertices");
        if interval.contains(mid) && v.dot(u) < s {
            total += s * (b - a);
        } else {
            total += sinusoid_integral(v, a, b);
        }
    }
    total - ev.chord_sum()
}

/// Adaptive Simpson quadrature of the same integral, with the circle first
/// split at every breakpoint.
pub fn quadrature_bound(
    ev: &SupportEvaluator,
    s: f64,
    interval: &AngleInterval,
    tol: f64,
) -> Result<f64, SupportError> {
    const MAX_DEPTH: u32 = 60;
    let f = |t: f64| integrand(ev, s, interval, t);
    let bps = breakpoints(ev, s, interval);
    let pieces = (bps.len() - 1).max(1) as f64;
    let mut total = 0.0;
    for w in bps.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        total += adaptive_simpson(&f, a, b, tol / pieces, MAX_DEPTH)?;
    }
    Ok(total - ev.chord_sum())
}

fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> Result<f64, SupportError> {
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, SupportError> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 || m <= a || m >= b {
        return Err(SupportError::QuadratureFailure(a, b));
    }
    Ok(
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
            + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?,
    )
}

/// Lower bounds on the length of net ccw and net cw motions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthBound {
    pub ccw: f64,
    pub cw: f64,
    /// `Ccw` or `Cw`, whichever is smaller; ties go to `Ccw`.
    pub chosen: Orientation,
}

impl LengthBound {
    pub fn min(&self) -> f64 {
        self.ccw.min(self.cw)
    }

    pub fn get(&self, o: Orientation) -> f64 {
        match o {
            Orientation::Ccw => self.ccw,
            Orientation::Cw => self.cw,
            Orientation::Straight => self.min(),
        }
    }
}

pub fn optimal_length_bound(inst: &Instance) -> LengthBound {
    let ev = SupportEvaluator::new(inst);
    let interval = swept_interval(inst);
    let ccw = closed_form_bound(&ev, inst.s, &interval);
    let cw = closed_form_bound(&ev, inst.s, &interval.complement());
    LengthBound {
        ccw,
        cw,
        chosen: if ccw <= cw {
            Orientation::Ccw
        } else {
            Orientation::Cw
        },
    }
}

/// Quadrature counterpart of [`optimal_length_bound`].
pub fn quadrature_length_bound(inst: &Instance, tol: f64) -> Result<LengthBound, SupportError> {
    let ev = SupportEvaluator::new(inst);
    let interval = swept_interval(inst);
    let ccw = quadrature_bound(&ev, inst.s, &interval, tol)?;
    let cw = quadrature_bound(&ev, inst.s, &interval.complement(), tol)?;
    Ok(LengthBound {
        ccw,
        cw,
        chosen: if ccw <= cw {
            Orientation::Ccw
        } else {
            Orientation::Cw
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    fn inst(a0: (f64, f64), b0: (f64, f64), a1: (f64, f64), b1: (f64, f64)) -> Instance {
        Instance::from_coords(1.0, a0, b0, a1, b1).unwrap()
    }

    /// Midpoint rule on a very fine grid, sharing nothing with the
    /// breakpoint logic.
    fn brute_integral(ev: &SupportEvaluator, s: f64, interval: &AngleInterval) -> f64 {
        let n = 2_000_000;
        let h = TAU / n as f64;
        let sum: f64 = (0..n)
            .map(|k| integrand(ev, s, interval, (k as f64 + 0.5) * h))
            .sum();
        sum * h - ev.chord_sum()
    }

    #[test]
    fn segment_support_examples() {
        let (e0, e1) = (pt(0.0, 0.0), pt(2.0, 0.0));
        assert_eq!(segment_support(e0, e1, 0.0), 2.0);
        assert_eq!(segment_support(e0, e1, PI), 0.0);
        assert!(segment_support(e0, e1, FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn h_ab_examples() {
        let o = Point::ORIGIN;
        let ev = SupportEvaluator {
            a0: o,
            a1: o,
            b0: o,
            b1: o,
        };
        assert_eq!(h_ab(&ev, 1.3), 0.0);
        let d = 3.0;
        let ev = SupportEvaluator {
            a0: pt(d, 0.0),
            a1: pt(d, 0.0),
            b0: o,
            b1: o,
        };
        for k in 0..16 {
            let t = k as f64 * 0.4;
            assert!((h_ab(&ev, t) - d * t.cos()).abs() < 1e-12);
        }
        let ev = SupportEvaluator {
            a0: pt(0.0, 2.0),
            a1: pt(4.0, 2.0),
            b0: o,
            b1: pt(4.0, 0.0),
        };
        assert!((h_ab(&ev, FRAC_PI_2) - 2.0).abs() < 1e-12);
        // Brute force over endpoint pairs.
        let brute = ev
            .vertices()
            .iter()
            .map(|v| v.dot(Point::polar(FRAC_PI_2)))
            .fold(f64::MIN, f64::max);
        assert!((brute - 2.0).abs() < 1e-12);
    }

    #[test]
    fn placement_angles() {
        let o = Point::ORIGIN;
        assert_eq!(
            placement_angle(&Placement::new(pt(1.0, 0.0), o)).unwrap(),
            0.0
        );
        assert!(
            (placement_angle(&Placement::new(pt(0.0, 1.0), o)).unwrap() - FRAC_PI_2).abs() < 1e-15
        );
        assert!(
            (placement_angle(&Placement::new(pt(-1.0, -1.0), o)).unwrap() - 1.25 * PI).abs()
                < 1e-15
        );
        assert_eq!(
            placement_angle(&Placement::new(o, o)),
            Err(SupportError::UndefinedAngle)
        );
    }

    #[test]
    fn intervals() {
        let i = AngleInterval::from_to(0.0, FRAC_PI_2);
        assert!((i.measure() - FRAC_PI_2).abs() < 1e-15);
        let w = AngleInterval::from_to(1.5 * PI, 0.25 * PI);
        assert!((w.measure() - 0.75 * PI).abs() < 1e-15);
        assert!(w.contains(0.1) && w.contains(1.6 * PI) && !w.contains(PI));
        let z = AngleInterval::from_to(1.0, 1.0);
        assert_eq!(z.measure(), 0.0);
        assert!((z.complement().measure() - TAU).abs() < 1e-15);
        assert!((i.complement().measure() - 1.5 * PI).abs() < 1e-15);
    }

    #[test]
    fn integrand_examples() {
        // h_ab = d cos(theta) with d = 0.3 at theta = 0.
        let ev = SupportEvaluator {
            a0: pt(0.3, 0.0),
            a1: pt(0.3, 0.0),
            b0: Point::ORIGIN,
            b1: Point::ORIGIN,
        };
        let i = AngleInterval::from_to(-0.1, 0.1);
        assert_eq!(integrand(&ev, 1.0, &i, 0.0), 1.0);
        let ev = SupportEvaluator {
            a0: pt(-0.4, 0.0),
            a1: pt(-0.4, 0.0),
            ..ev
        };
        let off = AngleInterval::from_to(1.0, 2.0);
        assert!((integrand(&ev, 1.0, &off, 0.0) + 0.4).abs() < 1e-15);
        let ev = SupportEvaluator {
            a0: pt(2.5, 0.0),
            a1: pt(2.5, 0.0),
            ..ev
        };
        assert_eq!(integrand(&ev, 1.0, &i, 0.0), 2.5);
    }

    #[test]
    fn identical_placements_give_zero() {
        let p = inst((3.0, 0.0), (0.0, 0.0), (3.0, 0.0), (0.0, 0.0));
        let b = optimal_length_bound(&p);
        assert!(b.ccw.abs() < 1e-12);
        // The complement of a degenerate interval is the whole circle.
        assert!(b.cw > 1.0);
        assert_eq!(b.chosen, Orientation::Ccw);
        let q = quadrature_length_bound(&p, 1e-10).unwrap();
        assert!(q.ccw.abs() < 1e-9);
    }

    #[test]
    fn straight_instance_bound() {
        let p = inst((5.0, 5.0), (0.0, 0.0), (6.0, 5.0), (10.0, 0.0));
        let b = optimal_length_bound(&p);
        assert!((b.min() - 11.0).abs() < 1e-9, "{b:?}");
        let ev = SupportEvaluator::new(&p);
        let i = swept_interval(&p);
        let chosen = if b.chosen == Orientation::Ccw {
            i
        } else {
            i.complement()
        };
        // On the binding interval max(h, s) never exceeds h.
        for k in 0..10_000 {
            let t = chosen.start + chosen.sweep * k as f64 / 9_999.0;
            assert!(h_ab(&ev, t) >= 1.0 - 1e-12);
        }
        let q = quadrature_bound(&ev, 1.0, &chosen, 1e-10).unwrap();
        assert!((q - 11.0).abs() < 1e-9);
    }

    #[test]
    fn closed_form_matches_quadrature_and_brute_force() {
        let p = inst((1.0, 0.5), (0.0, 0.0), (3.0, 0.5), (4.0, 0.0));
        let ev = SupportEvaluator::new(&p);
        let i = swept_interval(&p);
        for iv in [i, i.complement()] {
            let cf = closed_form_bound(&ev, 1.0, &iv);
            let q = quadrature_bound(&ev, 1.0, &iv, 1e-10).unwrap();
            assert!((cf - q).abs() <= 1e-10 + 1e-9, "{cf} vs {q}");
            let bf = brute_integral(&ev, 1.0, &iv);
            assert!((cf - bf).abs() < 1e-6, "{cf} vs {bf}");
        }
    }

    #[test]
    fn cauchy_formula_on_segments() {
        let p = inst((1.0, 2.0), (-3.0, 0.5), (4.0, -1.0), (2.5, 3.0));
        let ev = SupportEvaluator::new(&p);
        let empty = AngleInterval::from_to(0.3, 0.3);
        // With a degenerate interval the integrand is h_ab everywhere
        // except one point, so the bound reduces to the chord sum.
        let cf = closed_form_bound(&ev, 1.0, &empty);
        assert!((cf - ev.chord_sum()).abs() < 1e-9);
    }

    #[test]
    fn mirror_symmetric_instance_has_equal_bounds() {
        // Angles 0 and pi: the two half-circles are mirror images.
        let p = inst((1.0, 0.0), (0.0, 0.0), (3.0, 0.0), (4.0, 0.0));
        let b = optimal_length_bound(&p);
        assert!((b.ccw - b.cw).abs() < 1e-9, "{b:?}");
    }
}
