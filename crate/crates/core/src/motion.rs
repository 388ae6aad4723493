//! Trajectories built from segments and arcs, two-robot schedules, and the
//! queries run against them: length, sampling, analytic separation, trace
//! convexity, angle profiles and coupling.

use std::f64::consts::{PI, TAU};

use thiserror::Error;

use crate::geom::{closest_point_on_segment, signed_angle, wrap_angle, Frame, Placement, Point};
use crate::support::Orientation;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MotionError {
    #[error("coupling failed: {0}")]
    CouplingFailure(String),
}

/// Rotation sense of an arc.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Turn {
    Ccw,
    Cw,
}

impl Turn {
    pub fn sign(self) -> f64 {
        match self {
            Turn::Ccw => 1.0,
            Turn::Cw => -1.0,
        }
    }

    pub fn flipped(self) -> Turn {
        match self {
            Turn::Ccw => Turn::Cw,
            Turn::Cw => Turn::Ccw,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Turn::Ccw => "ccw",
            Turn::Cw => "cw",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathPrimitive {
    Segment {
        from: Point,
        to: Point,
    },
    /// Angles in `[0, 2pi)`; the sweep runs from `start_angle` to
    /// `end_angle` in `direction` and is below `2pi`.
    Arc {
        center: Point,
        radius: f64,
        start_angle: f64,
        end_angle: f64,
        direction: Turn,
    },
}

impl PathPrimitive {
    /// Arc with a signed sweep (positive = ccw).
    pub fn arc(center: Point, radius: f64, start_angle: f64, sweep: f64) -> Self {
        PathPrimitive::Arc {
            center,
            radius,
            start_angle: wrap_angle(start_angle),
            end_angle: wrap_angle(start_angle + sweep),
            direction: if sweep >= 0.0 { Turn::Ccw } else { Turn::Cw },
        }
    }

    /// Unsigned sweep of an arc, zero for segments.
    pub fn sweep(&self) -> f64 {
        match *self {
            PathPrimitive::Segment { .. } => 0.0,
            PathPrimitive::Arc {
                start_angle,
                end_angle,
                direction,
                ..
            } => match direction {
                Turn::Ccw => wrap_angle(end_angle - start_angle),
                Turn::Cw => wrap_angle(start_angle - end_angle),
            },
        }
    }

    pub fn signed_sweep(&self) -> f64 {
        match *self {
            PathPrimitive::Segment { .. } => 0.0,
            PathPrimitive::Arc { direction, .. } => direction.sign() * self.sweep(),
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            PathPrimitive::Segment { from, to } => from.dist(to),
            PathPrimitive::Arc { radius, .. } => radius * self.sweep(),
        }
    }

    pub fn start(&self) -> Point {
        match *self {
            PathPrimitive::Segment { from, .. } => from,
            PathPrimitive::Arc {
                center,
                radius,
                start_angle,
                ..
            } => center + Point::polar(start_angle) * radius,
        }
    }

    pub fn end(&self) -> Point {
        match *self {
            PathPrimitive::Segment { to, .. } => to,
            PathPrimitive::Arc {
                center,
                radius,
                end_angle,
                ..
            } => center + Point::polar(end_angle) * radius,
        }
    }

    /// Point at arc-length `d` from the start, clamped to the primitive.
    pub fn point_at(&self, d: f64) -> Point {
        let len = self.length();
        if d <= 0.0 {
            return self.start();
        }
        if d >= len {
            return self.end();
        }
        match *self {
            PathPrimitive::Segment { from, to } => from.lerp(to, d / len),
            PathPrimitive::Arc {
                center,
                radius,
                start_angle,
                direction,
                ..
            } => center + Point::polar(start_angle + direction.sign() * d / radius) * radius,
        }
    }

    /// Unit tangent at the start (zero vector for a degenerate segment).
    pub fn start_tangent(&self) -> Point {
        match *self {
            PathPrimitive::Segment { from, to } => (to - from).normalized().unwrap_or_default(),
            PathPrimitive::Arc {
                start_angle,
                direction,
                ..
            } => Point::polar(start_angle).perp() * direction.sign(),
        }
    }

    pub fn end_tangent(&self) -> Point {
        match *self {
            PathPrimitive::Segment { .. } => self.start_tangent(),
            PathPrimitive::Arc {
                end_angle,
                direction,
                ..
            } => Point::polar(end_angle).perp() * direction.sign(),
        }
    }

    /// The part between arc lengths `d0 <= d1`.
    pub fn sub(&self, d0: f64, d1: f64) -> PathPrimitive {
        match *self {
            PathPrimitive::Segment { .. } => PathPrimitive::Segment {
                from: self.point_at(d0),
                to: self.point_at(d1),
            },
            PathPrimitive::Arc {
                center,
                radius,
                start_angle,
                direction,
                ..
            } => {
                let sg = direction.sign();
                let a0 = start_angle + sg * d0.max(0.0) / radius;
                let sweep = (d1.min(self.length()) - d0.max(0.0)).max(0.0) / radius;
                PathPrimitive::Arc {
                    center,
                    radius,
                    start_angle: wrap_angle(a0),
                    end_angle: wrap_angle(a0 + sg * sweep),
                    direction,
                }
            }
        }
    }

    /// Image under the inverse of `frame` (local to world).
    pub fn to_world(&self, frame: &Frame) -> PathPrimitive {
        match *self {
            PathPrimitive::Segment { from, to } => PathPrimitive::Segment {
                from: frame.invert(from),
                to: frame.invert(to),
            },
            PathPrimitive::Arc {
                center,
                radius,
                start_angle,
                end_angle,
                direction,
            } => PathPrimitive::Arc {
                center: frame.invert(center),
                radius,
                start_angle: frame.invert_angle(start_angle),
                end_angle: frame.invert_angle(end_angle),
                direction: if frame.reflected {
                    direction.flipped()
                } else {
                    direction
                },
            },
        }
    }
}

pub fn primitive_length(p: &PathPrimitive) -> f64 {
    p.length()
}

/// A robot's path. `start` and `end` are stored exactly so that sampling
/// returns the instance placements bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub start: Point,
    pub end: Point,
    pub primitives: Vec<PathPrimitive>,
}

impl Trajectory {
    pub fn stationary(p: Point) -> Self {
        Trajectory {
            start: p,
            end: p,
            primitives: Vec::new(),
        }
    }

    pub fn length(&self) -> f64 {
        self.primitives.iter().map(PathPrimitive::length).sum()
    }

    /// Cumulative length at the start of each primitive, plus the total.
    pub fn offsets(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.primitives.len() + 1);
        let mut acc = 0.0;
        out.push(0.0);
        for p in &self.primitives {
            acc += p.length();
            out.push(acc);
        }
        out
    }

    pub fn point_at(&self, progress: f64) -> Point {
        if progress <= 0.0 || self.primitives.is_empty() {
            return self.start;
        }
        let mut acc = 0.0;
        for p in &self.primitives {
            let len = p.length();
            if progress < acc + len {
                return p.point_at(progress - acc);
            }
            acc += len;
        }
        self.end
    }

    /// Largest gap between consecutive primitive endpoints, including the
    /// stored start and end.
    pub fn continuity_gap(&self) -> f64 {
        let mut gap: f64 = 0.0;
        let mut prev = self.start;
        for p in &self.primitives {
            gap = gap.max(prev.dist(p.start()));
            prev = p.end();
        }
        gap.max(prev.dist(self.end))
    }

    pub fn to_world(&self, frame: &Frame) -> Trajectory {
        Trajectory {
            start: frame.invert(self.start),
            end: frame.invert(self.end),
            primitives: self.primitives.iter().map(|p| p.to_world(frame)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Robot {
    A,
    B,
}

impl Robot {
    pub fn as_str(self) -> &'static str {
        match self {
            Robot::A => "A",
            Robot::B => "B",
        }
    }

    pub fn other(self) -> Robot {
        match self {
            Robot::A => Robot::B,
            Robot::B => Robot::A,
        }
    }
}

/// One robot runs primitives `first..end` of its trajectory while the
/// other waits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phase {
    pub robot: Robot,
    pub first: usize,
    pub end: usize,
}

/// Progress (arc length) ranges along both trajectories, traversed
/// simultaneously at rates proportional to their lengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointSegment {
    pub a: (f64, f64),
    pub b: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    /// At most one robot advances.
    Follow,
    /// Both advance together along straight chords.
    Joint,
}

impl JointSegment {
    pub fn kind(&self) -> SegmentKind {
        if self.a.1 > self.a.0 && self.b.1 > self.b.0 {
            SegmentKind::Joint
        } else {
            SegmentKind::Follow
        }
    }

    pub fn duration(&self) -> f64 {
        (self.a.1 - self.a.0) + (self.b.1 - self.b.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledSchedule {
    pub segments: Vec<JointSegment>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    Decoupled(Vec<Phase>),
    Coupled(CoupledSchedule),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Motion {
    pub traj_a: Trajectory,
    pub traj_b: Trajectory,
    pub schedule: Schedule,
    pub orientation: Orientation,
}

/// A stretch of the motion during which each robot is either parked or
/// traverses a single primitive piece.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Piece {
    pub tau0: f64,
    pub tau1: f64,
    pub a: Track,
    pub b: Track,
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Track {
    Parked(Point),
    Moving(PathPrimitive),
}

impl Track {
    fn at(&self, f: f64) -> Point {
        match self {
            Track::Parked(p) => *p,
            Track::Moving(pr) => {
                if f >= 1.0 {
                    pr.end()
                } else {
                    pr.point_at(f * pr.length())
                }
            }
        }
    }
}

impl Motion {
    pub fn empty(p: Placement) -> Self {
        Motion {
            traj_a: Trajectory::stationary(p.a),
            traj_b: Trajectory::stationary(p.b),
            schedule: Schedule::Decoupled(Vec::new()),
            orientation: Orientation::Straight,
        }
    }

    pub fn start(&self) -> Placement {
        Placement::new(self.traj_a.start, self.traj_b.start)
    }

    pub fn end(&self) -> Placement {
        Placement::new(self.traj_a.end, self.traj_b.end)
    }

    pub fn traj(&self, r: Robot) -> &Trajectory {
        match r {
            Robot::A => &self.traj_a,
            Robot::B => &self.traj_b,
        }
    }

    pub fn is_coupled(&self) -> bool {
        matches!(self.schedule, Schedule::Coupled(_))
    }

    /// The schedule as progress segments, whichever form it is stored in.
    pub fn segments(&self) -> Vec<JointSegment> {
        match &self.schedule {
            Schedule::Coupled(c) => c.segments.clone(),
            Schedule::Decoupled(phases) => {
                let offs_a = self.traj_a.offsets();
                let offs_b = self.traj_b.offsets();
                let (mut pa, mut pb) = (0.0, 0.0);
                let mut out = Vec::with_capacity(phases.len());
                for ph in phases {
                    match ph.robot {
                        Robot::A => {
                            let (x0, x1) = (offs_a[ph.first], offs_a[ph.end]);
                            out.push(JointSegment {
                                a: (x0, x1),
                                b: (pb, pb),
                            });
                            pa = x1;
                        }
                        Robot::B => {
                            let (x0, x1) = (offs_b[ph.first], offs_b[ph.end]);
                            out.push(JointSegment {
                                a: (pa, pa),
                                b: (x0, x1),
                            });
                            pb = x1;
                        }
                    }
                }
                out
            }
        }
    }

    /// Placement at normalized time `t`; time is proportional to the
    /// combined distance travelled.
    pub fn sample(&self, t: f64) -> Placement {
        if t <= 0.0 {
            return self.start();
        }
        if t >= 1.0 {
            return self.end();
        }
        let segs = self.segments();
        let total: f64 = segs.iter().map(JointSegment::duration).sum();
        if total <= 0.0 {
            return self.start();
        }
        let target = t * total;
        let mut acc = 0.0;
        for seg in &segs {
            let d = seg.duration();
            if d > 0.0 && target <= acc + d {
                let f = (target - acc) / d;
                let pa = seg.a.0 + f * (seg.a.1 - seg.a.0);
                let pb = seg.b.0 + f * (seg.b.1 - seg.b.0);
                return Placement::new(self.traj_a.point_at(pa), self.traj_b.point_at(pb));
            }
            acc += d;
        }
        self.end()
    }

    /// Split the schedule at every primitive boundary of either robot.
    pub(crate) fn pieces(&self) -> Vec<Piece> {
        let offs_a = self.traj_a.offsets();
        let offs_b = self.traj_b.offsets();
        let mut out = Vec::new();
        let mut tau = 0.0;
        for seg in self.segments() {
            let dur = seg.duration();
            if dur <= 0.0 {
                continue;
            }
            let mut cuts = vec![0.0, 1.0];
            for (range, offs) in [(seg.a, &offs_a), (seg.b, &offs_b)] {
                let span = range.1 - range.0;
                if span > 0.0 {
                    for &o in offs.iter() {
                        if o > range.0 && o < range.1 {
                            cuts.push((o - range.0) / span);
                        }
                    }
                }
            }
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            for w in cuts.windows(2) {
                let (f0, f1) = (w[0], w[1]);
                if f1 <= f0 {
                    continue;
                }
                let track = |range: (f64, f64), traj: &Trajectory, offs: &[f64]| {
                    let span = range.1 - range.0;
                    let x0 = range.0 + f0 * span;
                    if span <= 0.0 {
                        return Track::Parked(traj.point_at(x0));
                    }
                    let x1 = range.0 + f1 * span;
                    let mid = 0.5 * (x0 + x1);
                    let k = offs
                        .windows(2)
                        .position(|o| mid >= o[0] && mid <= o[1])
                        .unwrap_or(traj.primitives.len().saturating_sub(1));
                    let prim = &traj.primitives[k];
                    Track::Moving(prim.sub(x0 - offs[k], x1 - offs[k]))
                };
                out.push(Piece {
                    tau0: tau + f0 * dur,
                    tau1: tau + f1 * dur,
                    a: track(seg.a, &self.traj_a, &offs_a),
                    b: track(seg.b, &self.traj_b, &offs_b),
                });
            }
            tau += dur;
        }
        out
    }

    /// Image under the inverse of `frame`.
    pub fn to_world(&self, frame: &Frame) -> Motion {
        let orientation = if frame.reflected {
            self.orientation.mirrored()
        } else {
            self.orientation
        };
        Motion {
            traj_a: self.traj_a.to_world(frame),
            traj_b: self.traj_b.to_world(frame),
            schedule: self.schedule.clone(),
            orientation,
        }
    }

    pub fn primitive_count(&self) -> (usize, usize) {
        (self.traj_a.primitives.len(), self.traj_b.primitives.len())
    }
}

pub fn motion_length(m: &Motion) -> f64 {
    m.traj_a.length() + m.traj_b.length()
}

/// Distance from `q` to an arc primitive.
fn point_arc_distance(q: Point, arc: &PathPrimitive) -> f64 {
    let PathPrimitive::Arc {
        center,
        radius,
        start_angle,
        direction,
        ..
    } = *arc
    else {
        unreachable!("arc expected");
    };
    let v = q - center;
    let d = v.norm();
    if d == 0.0 {
        return radius;
    }
    let sweep = arc.sweep();
    let rel = match direction {
        Turn::Ccw => wrap_angle(v.angle() - start_angle),
        Turn::Cw => wrap_angle(start_angle - v.angle()),
    };
    if rel <= sweep {
        (d - radius).abs()
    } else {
        q.dist(arc.start()).min(q.dist(arc.end()))
    }
}

fn point_primitive_distance(q: Point, p: &PathPrimitive) -> f64 {
    match *p {
        PathPrimitive::Segment { from, to } => q.dist(closest_point_on_segment(q, from, to)),
        PathPrimitive::Arc { .. } => point_arc_distance(q, p),
    }
}

/// Minimum of `|r0 + f (r1 - r0)|` over `f` in `[0, 1]`.
fn linear_min_norm(r0: Point, r1: Point) -> f64 {
    closest_point_on_segment(Point::ORIGIN, r0, r1).norm()
}

fn piece_min_separation(pc: &Piece) -> f64 {
    match (pc.a, pc.b) {
        (Track::Parked(a), Track::Parked(b)) => a.dist(b),
        (Track::Moving(pa), Track::Parked(b)) => point_primitive_distance(b, &pa),
        (Track::Parked(a), Track::Moving(pb)) => point_primitive_distance(a, &pb),
        (Track::Moving(pa), Track::Moving(pb)) => match (pa, pb) {
            (PathPrimitive::Segment { .. }, PathPrimitive::Segment { .. }) => {
                linear_min_norm(pa.start() - pb.start(), pa.end() - pb.end())
            }
            _ => {
                // Not produced by the planner; bounded by dense sampling.
                let n = 2048;
                (0..=n)
                    .map(|k| {
                        let f = k as f64 / n as f64;
                        pc.a.at(f).dist(pc.b.at(f))
                    })
                    .fold(f64::INFINITY, f64::min)
            }
        },
    }
}

/// Exact minimum centre distance over the whole motion.
pub fn min_separation(m: &Motion) -> f64 {
    let pieces = m.pieces();
    let base = m.start().separation().min(m.end().separation());
    pieces.iter().map(piece_min_separation).fold(base, f64::min)
}

/// Sampled counterpart of [`min_separation`].
pub fn sampled_min_separation(m: &Motion, n: usize) -> f64 {
    let n = n.max(2);
    (0..n)
        .map(|k| m.sample(k as f64 / (n - 1) as f64).separation())
        .fold(f64::INFINITY, f64::min)
}

/// Whether the closed curve formed by the trajectory and the chord back to
/// its start is convex.
pub fn is_trace_convex(tr: &Trajectory, chord_start: Point, chord_end: Point) -> bool {
    const TURN_EPS: f64 = 1e-7;
    let length = tr.length();
    let chord = chord_start.dist(chord_end);
    let scale = length.max(1.0);
    if length <= chord + 1e-9 * scale {
        // The trace is the chord itself.
        return true;
    }
    let mut tangents_in_out: Vec<(Point, Point, f64)> = tr
        .primitives
        .iter()
        .filter(|p| p.length() > 1e-12 * scale)
        .map(|p| (p.start_tangent(), p.end_tangent(), p.signed_sweep()))
        .collect();
    if chord > 1e-12 * scale {
        let back = (chord_start - chord_end) * (1.0 / chord);
        tangents_in_out.push((back, back, 0.0));
    }
    let n = tangents_in_out.len();
    let mut turns = Vec::with_capacity(2 * n);
    for i in 0..n {
        let (_, out_dir, sweep) = tangents_in_out[i];
        if sweep != 0.0 {
            turns.push(sweep);
        }
        let next_in = tangents_in_out[(i + 1) % n].0;
        let turn = signed_angle(out_dir, next_in);
        if turn.abs() >= PI - 1e-9 {
            return false;
        }
        if turn.abs() > TURN_EPS {
            turns.push(turn);
        }
    }
    let pos = turns.iter().all(|&t| t > 0.0);
    let neg = turns.iter().all(|&t| t < 0.0);
    let total: f64 = turns.iter().sum();
    (pos || neg) && (total.abs() - TAU).abs() <= 1e-6
}

/// Placement angles at `n` uniform times, unwrapped.
pub fn placement_angle_profile(m: &Motion, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let mut out = Vec::with_capacity(n);
    let mut prev: Option<(Point, f64)> = None;
    for k in 0..n {
        let p = m.sample(k as f64 / (n - 1) as f64);
        let r = p.a - p.b;
        let ang = match prev {
            None => r.angle(),
            Some((rp, ap)) => ap + signed_angle(rp, r),
        };
        out.push(ang);
        prev = Some((r, ang));
    }
    out
}

/// Number of maximal time intervals in which the discs touch, estimated
/// from `n` samples with contact slack `tol`.
pub fn contact_interval_count(m: &Motion, s: f64, n: usize, tol: f64) -> usize {
    let n = n.max(2);
    let mut count = 0;
    let mut inside = false;
    for k in 0..n {
        let touching = m.sample(k as f64 / (n - 1) as f64).separation() <= s + tol;
        if touching && !inside {
            count += 1;
        }
        inside = touching;
    }
    count
}

/// Relative-angle bookkeeping over the pieces of a decoupled motion.
struct AngleTrack {
    pieces: Vec<Piece>,
    /// Unwrapped angle at the start of each piece, plus the final angle.
    at_start: Vec<f64>,
}

impl AngleTrack {
    fn new(m: &Motion, scale: f64) -> Result<Self, MotionError> {
        let pieces = m.pieces();
        let mut at_start = Vec::with_capacity(pieces.len() + 1);
        let mut ang = (m.start().a - m.start().b).angle();
        at_start.push(ang);
        for pc in &pieces {
            ang += Self::piece_change(pc, scale)?;
            at_start.push(ang);
        }
        Ok(AngleTrack { pieces, at_start })
    }

    fn relative(pc: &Piece, f: f64) -> Point {
        pc.a.at(f) - pc.b.at(f)
    }

    fn piece_change(pc: &Piece, scale: f64) -> Result<f64, MotionError> {
        match (pc.a, pc.b) {
            (Track::Moving(PathPrimitive::Arc { center, .. }), Track::Parked(q))
            | (Track::Parked(q), Track::Moving(PathPrimitive::Arc { center, .. })) => {
                if center.dist(q) > 1e-9 * scale {
                    return Err(MotionError::CouplingFailure(
                        "arc not centred on the parked robot".into(),
                    ));
                }
                let sweep = match pc.a {
                    Track::Moving(p) => p.signed_sweep(),
                    _ => match pc.b {
                        Track::Moving(p) => p.signed_sweep(),
                        _ => 0.0,
                    },
                };
                Ok(sweep)
            }
            (Track::Moving(_), Track::Moving(_)) => Err(MotionError::CouplingFailure(
                "both robots move in a decoupled motion".into(),
            )),
            _ => Ok(signed_angle(
                Self::relative(pc, 0.0),
                Self::relative(pc, 1.0),
            )),
        }
    }

    /// Unwrapped angle inside piece `k` at fraction `f`.
    fn angle_in(&self, k: usize, f: f64) -> f64 {
        let pc = &self.pieces[k];
        let start = self.at_start[k];
        let is_arc = |t: &Track| matches!(t, Track::Moving(PathPrimitive::Arc { .. }));
        if is_arc(&pc.a) || is_arc(&pc.b) {
            start + f * (self.at_start[k + 1] - start)
        } else {
            start + signed_angle(Self::relative(pc, 0.0), Self::relative(pc, f))
        }
    }

    /// Fraction in piece `k` where the (monotone) angle reaches `level`.
    fn solve(&self, k: usize, level: f64, increasing: bool) -> f64 {
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let v = self.angle_in(k, mid);
            let below = if increasing { v < level } else { v > level };
            if below {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-16 {
                break;
            }
        }
        hi
    }

    fn tau_at(&self, k: usize, f: f64) -> f64 {
        let pc = &self.pieces[k];
        pc.tau0 + f * (pc.tau1 - pc.tau0)
    }
}

/// Make the placement angle monotone by replacing every reversal window
/// with a straight simultaneous motion of both robots.
pub fn couple(m: &Motion) -> Result<Motion, MotionError> {
    let Schedule::Decoupled(_) = &m.schedule else {
        return Ok(m.clone());
    };
    let scale = m.start().separation().max(motion_length(m)).max(1.0);
    let track = AngleTrack::new(m, scale)?;
    let n = track.pieces.len();
    if n == 0 {
        return Ok(Motion {
            schedule: Schedule::Coupled(CoupledSchedule {
                segments: Vec::new(),
            }),
            ..m.clone()
        });
    }
    let total_change = track.at_start[n] - track.at_start[0];
    let dir = match m.orientation {
        Orientation::Ccw => 1.0,
        Orientation::Cw => -1.0,
        Orientation::Straight => {
            if total_change >= 0.0 {
                1.0
            } else {
                -1.0
            }
        }
    };
    // Work with g = dir * angle, which must end up non-decreasing.
    let g = |k: usize, f: f64| dir * track.angle_in(k, f);
    let g_start = |k: usize| dir * track.at_start[k];
    let (g0, g1) = (g_start(0), g_start(n));
    const ANG_TOL: f64 = 1e-10;
    if g1 < g0 - ANG_TOL {
        return Err(MotionError::CouplingFailure(format!(
            "net rotation {} opposes the orientation",
            g1 - g0
        )));
    }

    // First time the final level is reached; everything after it is one window.
    let mut tail: Option<(usize, f64)> = None;
    for k in 0..n {
        if g_start(k) >= g1 - 1e-13 {
            tail = Some((k, 0.0));
            break;
        }
        if g_start(k + 1) >= g1 - 1e-13 {
            let f = if g_start(k + 1) > g1 {
                track.solve(k, dir * g1, dir > 0.0)
            } else {
                1.0
            };
            tail = Some((k, f));
            break;
        }
    }
    let (tail_k, tail_f) = tail.unwrap_or((n - 1, 1.0));
    let tail_tau = track.tau_at(tail_k, tail_f);
    let end_tau = track.pieces[n - 1].tau1;
    let mut tail_varies = false;
    for k in tail_k..n {
        if (g_start(k + 1) - g1).abs() > ANG_TOL
            || (k > tail_k && (g_start(k) - g1).abs() > ANG_TOL)
        {
            tail_varies = true;
        }
    }

    // Dips below the running maximum before the tail.
    let mut windows: Vec<(f64, f64)> = Vec::new();
    let mut run_max = g0;
    let mut max_tau = 0.0;
    let mut dip_start: Option<f64> = None;
    for k in 0..=tail_k {
        let f_end = if k == tail_k { tail_f } else { 1.0 };
        if f_end <= 0.0 {
            break;
        }
        let (ga, gb) = (
            g_start(k),
            if k == tail_k {
                g(k, f_end)
            } else {
                g_start(k + 1)
            },
        );
        match dip_start {
            None => {
                if gb >= ga - 1e-13 {
                    if gb >= run_max - 1e-13 {
                        run_max = run_max.max(gb);
                        max_tau = track.tau_at(k, f_end);
                    }
                } else {
                    dip_start = Some(max_tau);
                }
            }
            Some(t_i) => {
                if gb >= run_max - ANG_TOL {
                    let f = track.solve(k, dir * run_max, dir > 0.0).min(f_end);
                    windows.push((t_i, track.tau_at(k, f)));
                    dip_start = None;
                    run_max = run_max.max(gb);
                    max_tau = track.tau_at(k, f_end);
                }
            }
        }
    }
    if let Some(t_i) = dip_start {
        // The dip never recovered before the tail: merge it into the tail.
        windows.push((t_i, end_tau));
    } else if tail_varies && tail_tau < end_tau {
        windows.push((tail_tau, end_tau));
    }
    windows.retain(|w| w.1 > w.0);
    Ok(rebuild(m, &track.pieces, &windows))
}

/// Replace the given time windows with straight joint segments.
fn rebuild(m: &Motion, pieces: &[Piece], windows: &[(f64, f64)]) -> Motion {
    let segs = m.segments();
    // Time range of each original segment.
    let mut spans = Vec::with_capacity(segs.len());
    let mut acc = 0.0;
    for s in &segs {
        let d = s.duration();
        spans.push((acc, acc + d, *s));
        acc += d;
    }
    let progress_at = |tau: f64| -> (f64, f64) {
        for &(t0, t1, s) in &spans {
            if t1 > t0 && tau <= t1 {
                let f = ((tau - t0) / (t1 - t0)).clamp(0.0, 1.0);
                return (s.a.0 + f * (s.a.1 - s.a.0), s.b.0 + f * (s.b.1 - s.b.0));
            }
        }
        (m.traj_a.length(), m.traj_b.length())
    };
    let total_tau = pieces.last().map_or(0.0, |p| p.tau1);

    // Kept intervals and windows, in time order.
    let mut events: Vec<(f64, f64, bool)> = Vec::new();
    let mut t = 0.0;
    for &(w0, w1) in windows {
        if w0 > t {
            events.push((t, w0, false));
        }
        events.push((w0, w1, true));
        t = w1;
    }
    if t < total_tau {
        events.push((t, total_tau, false));
    }

    let mut prims_a: Vec<PathPrimitive> = Vec::new();
    let mut prims_b: Vec<PathPrimitive> = Vec::new();
    let mut out_segs: Vec<JointSegment> = Vec::new();
    let (mut new_a, mut new_b) = (0.0, 0.0);
    for (t0, t1, is_window) in events {
        if is_window {
            let (a0, b0) = progress_at(t0);
            let (a1, b1) = progress_at(t1);
            let (pa0, pa1) = (m.traj_a.point_at(a0), m.traj_a.point_at(a1));
            let (pb0, pb1) = (m.traj_b.point_at(b0), m.traj_b.point_at(b1));
            let (la, lb) = (pa0.dist(pa1), pb0.dist(pb1));
            if la > 0.0 {
                prims_a.push(PathPrimitive::Segment { from: pa0, to: pa1 });
            }
            if lb > 0.0 {
                prims_b.push(PathPrimitive::Segment { from: pb0, to: pb1 });
            }
            out_segs.push(JointSegment {
                a: (new_a, new_a + la),
                b: (new_b, new_b + lb),
            });
            new_a += la;
            new_b += lb;
            continue;
        }
        // Keep the original follow segments clipped to [t0, t1].
        for &(s0, s1, s) in &spans {
            let (lo, hi) = (s0.max(t0), s1.min(t1));
            if hi <= lo {
                continue;
            }
            let f = |tau: f64| (tau - s0) / (s1 - s0);
            let (flo, fhi) = (f(lo), f(hi));
            let xa = (s.a.0 + flo * (s.a.1 - s.a.0), s.a.0 + fhi * (s.a.1 - s.a.0));
            let xb = (s.b.0 + flo * (s.b.1 - s.b.0), s.b.0 + fhi * (s.b.1 - s.b.0));
            let before = (prims_a.len(), prims_b.len());
            append_range(&m.traj_a, xa.0, xa.1, &mut prims_a);
            append_range(&m.traj_b, xb.0, xb.1, &mut prims_b);
            let la: f64 = prims_a[before.0..].iter().map(PathPrimitive::length).sum();
            let lb: f64 = prims_b[before.1..].iter().map(PathPrimitive::length).sum();
            out_segs.push(JointSegment {
                a: (new_a, new_a + la),
                b: (new_b, new_b + lb),
            });
            new_a += la;
            new_b += lb;
        }
    }
    let traj_a = Trajectory {
        start: m.traj_a.start,
        end: m.traj_a.end,
        primitives: merge_collinear(prims_a),
    };
    let traj_b = Trajectory {
        start: m.traj_b.start,
        end: m.traj_b.end,
        primitives: merge_collinear(prims_b),
    };
    let out_segs = normalize_progress(out_segs, traj_a.length(), traj_b.length());
    Motion {
        traj_a,
        traj_b,
        schedule: Schedule::Coupled(CoupledSchedule { segments: out_segs }),
        orientation: m.orientation,
    }
}

/// Rescale progress so each robot's final progress equals its length.
fn normalize_progress(segs: Vec<JointSegment>, len_a: f64, len_b: f64) -> Vec<JointSegment> {
    let end_a = segs.iter().map(|s| s.a.1).fold(0.0, f64::max);
    let end_b = segs.iter().map(|s| s.b.1).fold(0.0, f64::max);
    let ka = if end_a > 0.0 { len_a / end_a } else { 1.0 };
    let kb = if end_b > 0.0 { len_b / end_b } else { 1.0 };
    segs.into_iter()
        .map(|s| JointSegment {
            a: (s.a.0 * ka, s.a.1 * ka),
            b: (s.b.0 * kb, s.b.1 * kb),
        })
        .filter(|s| s.duration() > 0.0)
        .collect()
}

/// Append the part of `traj` between progress `x0` and `x1`.
fn append_range(traj: &Trajectory, x0: f64, x1: f64, out: &mut Vec<PathPrimitive>) {
    if x1 <= x0 {
        return;
    }
    let mut acc = 0.0;
    for p in &traj.primitives {
        let len = p.length();
        let (lo, hi) = (x0.max(acc), x1.min(acc + len));
        if hi > lo {
            out.push(p.sub(lo - acc, hi - acc));
        }
        acc += len;
    }
}

/// Fuse consecutive collinear segments pointing the same way.
pub fn merge_collinear(prims: Vec<PathPrimitive>) -> Vec<PathPrimitive> {
    let mut out: Vec<PathPrimitive> = Vec::with_capacity(prims.len());
    for p in prims {
        if p.length() == 0.0 {
            continue;
        }
        if let (
            Some(PathPrimitive::Segment { from, to }),
            PathPrimitive::Segment { from: f2, to: t2 },
        ) = (out.last().copied(), p)
        {
            let (d1, d2) = (to - from, t2 - f2);
            let scale = d1.norm() * d2.norm();
            if d1.cross(d2).abs() <= 1e-12 * scale
                && d1.dot(d2) > 0.0
                && to.dist(f2) <= 1e-12 * (1.0 + scale.sqrt())
            {
                *out.last_mut().expect("non-empty") = PathPrimitive::Segment { from, to: t2 };
                continue;
            }
        }
        out.push(p);
    }
    out
}
