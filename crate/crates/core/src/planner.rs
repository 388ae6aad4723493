//! The exact planner.
//!
//! Every non-straight optimal motion is decoupled with three phases: one
//! robot moves to a pivot, the other detours around it, and the first
//! finishes. The planner classifies the instance (corridor cases, then
//! zones), builds the zone pivot, and also scans a finite set of
//! construction pivots for each rotation sense. The shorter of the zone
//! motion and the scan is kept, and the result is checked against the
//! closed-form lower bound.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, TAU};

use thiserror::Error;

use crate::geom::{
    circle_circle_intersection, distance_point_segment, dominates, in_s_corridor,
    in_s_corridor_eps, normalize, on_or_below_line, reflect_instance, tangent_points,
    upper_tangent_point, wrap_angle, Circle, Frame, GeomError, Instance, Line, Placement, Point,
    Tangency, BOUNDARY_REL_TOL,
};
use crate::motion::{motion_length, Motion, PathPrimitive, Phase, Robot, Schedule, Trajectory};
use crate::support::{optimal_length_bound, swept_interval, LengthBound, Orientation};

/// Angular slack when deciding which rotation sense a motion realizes.
const SWEEP_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("endpoint lies strictly inside the obstacle circle")]
    InfeasibleEndpoint,
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("optimality check failed: motion length {length} vs bound {bound}")]
    OptimalityCheck { length: f64, bound: f64 },
}

/// The six rows of the corridor-membership table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CaseLabel {
    Case1a,
    Case1b,
    Case2a,
    Case2b,
    Case3a,
    Case3b,
}

impl CaseLabel {
    pub const ALL: [CaseLabel; 6] = [
        CaseLabel::Case1a,
        CaseLabel::Case1b,
        CaseLabel::Case2a,
        CaseLabel::Case2b,
        CaseLabel::Case3a,
        CaseLabel::Case3b,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseLabel::Case1a => "Case1a",
            CaseLabel::Case1b => "Case1b",
            CaseLabel::Case2a => "Case2a",
            CaseLabel::Case2b => "Case2b",
            CaseLabel::Case3a => "Case3a",
            CaseLabel::Case3b => "Case3b",
        }
    }

    pub fn is_straight(self) -> bool {
        matches!(self, CaseLabel::Case1a | CaseLabel::Case1b)
    }
}

/// The four memberships the case table is keyed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorridorFlags {
    /// A0 in the corridor of B0 B1.
    pub a0_in_b: bool,
    /// A1 in the corridor of B0 B1.
    pub a1_in_b: bool,
    /// B0 in the corridor of A0 A1.
    pub b0_in_a: bool,
    /// B1 in the corridor of A0 A1.
    pub b1_in_a: bool,
}

impl CorridorFlags {
    pub fn of(inst: &Instance) -> Self {
        let (s, eps) = (inst.s, inst.tolerance());
        let (a0, b0, a1, b1) = (inst.p0.a, inst.p0.b, inst.p1.a, inst.p1.b);
        CorridorFlags {
            a0_in_b: in_s_corridor_eps(a0, b0, b1, s, eps),
            a1_in_b: in_s_corridor_eps(a1, b0, b1, s, eps),
            b0_in_a: in_s_corridor_eps(b0, a0, a1, s, eps),
            b1_in_a: in_s_corridor_eps(b1, a0, a1, s, eps),
        }
    }

    pub fn case(&self) -> CaseLabel {
        let CorridorFlags {
            a0_in_b: f1,
            a1_in_b: f2,
            b0_in_a: f3,
            b1_in_a: f4,
        } = *self;
        if !f1 && !f4 {
            CaseLabel::Case1a
        } else if !f2 && !f3 {
            CaseLabel::Case1b
        } else if f1 && f3 {
            CaseLabel::Case2a
        } else if f2 && f4 {
            CaseLabel::Case2b
        } else if f1 && f2 && !f3 && !f4 {
            CaseLabel::Case3a
        } else if !f1 && !f2 && f3 && f4 {
            CaseLabel::Case3b
        } else {
            unreachable!("the six rows cover all sixteen flag patterns")
        }
    }
}

pub fn classify_case(inst: &Instance) -> CaseLabel {
    CorridorFlags::of(inst).case()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Zone {
    I,
    II,
    III,
    IV,
}

impl Zone {
    pub fn as_str(self) -> &'static str {
        match self {
            Zone::I => "I",
            Zone::II => "II",
            Zone::III => "III",
            Zone::IV => "IV",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CircleRelation {
    Disjoint,
    Intersect,
}

impl CircleRelation {
    pub fn as_str(self) -> &'static str {
        match self {
            CircleRelation::Disjoint => "circlesDisjoint",
            CircleRelation::Intersect => "circlesIntersect",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ZoneDetail {
    /// Zone I with A1 above the upper tangent from A0 to the far circle.
    AboveU,
    BelowU,
    /// Zone IV subcases 1 to 3.
    Subcase(u8),
    BothAbove,
    BothBelow,
}

impl ZoneDetail {
    pub fn as_string(self) -> String {
        match self {
            ZoneDetail::AboveU => "aboveU".into(),
            ZoneDetail::BelowU => "belowU".into(),
            ZoneDetail::Subcase(k) => format!("subcase{k}"),
            ZoneDetail::BothAbove => "bothAbove".into(),
            ZoneDetail::BothBelow => "bothBelow".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ZoneLabel {
    pub zone: Zone,
    pub circles: CircleRelation,
    pub detail: Option<ZoneDetail>,
}

/// Named auxiliary points and angle ranges produced while planning, in
/// world coordinates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConstructionTrace {
    pub points: BTreeMap<String, Point>,
    pub angle_ranges: BTreeMap<String, (f64, f64)>,
}

impl ConstructionTrace {
    fn put(&mut self, name: &str, p: Point) {
        self.points.insert(name.to_string(), p);
    }

    fn mapped(&self, f: impl Fn(Point) -> Point, angle: impl Fn(f64) -> f64) -> Self {
        ConstructionTrace {
            points: self
                .points
                .iter()
                .map(|(k, &p)| (k.clone(), f(p)))
                .collect(),
            angle_ranges: self
                .angle_ranges
                .iter()
                .map(|(k, &(a, b))| (k.clone(), (angle(a), angle(b))))
                .collect(),
        }
    }
}

/// Which robot moves first (and last) in a three-phase motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PhaseOrder {
    /// A to the pivot, B detours, A finishes.
    Aba,
    /// B to the pivot, A detours, B finishes.
    Bab,
}

impl PhaseOrder {
    pub fn as_str(self) -> &'static str {
        match self {
            PhaseOrder::Aba => "ABA",
            PhaseOrder::Bab => "BAB",
        }
    }

    pub fn swapped(self) -> PhaseOrder {
        match self {
            PhaseOrder::Aba => PhaseOrder::Bab,
            PhaseOrder::Bab => PhaseOrder::Aba,
        }
    }
}

/// How the chosen motion was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Both placements coincide.
    Empty,
    /// Straight translation of each robot in turn.
    Straight,
    /// The zone construction.
    Zone,
    /// The construction-pivot scan beat or replaced the zone construction.
    PivotSearch,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Empty => "empty",
            Method::Straight => "straight",
            Method::Zone => "zone",
            Method::PivotSearch => "pivot-search",
        }
    }
}

/// Detour side for [`shortest_path_avoiding_disc`]. `Above` passes the
/// obstacle on the left of the direction of travel, which winds clockwise
/// around its centre.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Auto,
    Above,
    Below,
}

use crate::motion::Turn;

/// Length and signed winding (about the obstacle centre) of the shortest
/// path from `p0` to `p1` that keeps out of the open disc and turns around
/// it in sense `turn`. `None` if an endpoint is inside the disc.
pub(crate) fn leg_cost(p0: Point, p1: Point, c: Point, r: f64, turn: Turn) -> Option<(f64, f64)> {
    let (v0, v1) = (p0 - c, p1 - c);
    let (d0, d1) = (v0.norm(), v1.norm());
    let slack = r * (1.0 - BOUNDARY_REL_TOL);
    if d0 < slack || d1 < slack {
        return None;
    }
    let (d0, d1) = (d0.max(r), d1.max(r));
    let ccw = wrap_angle(v1.angle() - v0.angle());
    let phi = match turn {
        Turn::Ccw => ccw,
        Turn::Cw => wrap_angle(TAU - ccw),
    };
    let (al0, al1) = ((r / d0).min(1.0).acos(), (r / d1).min(1.0).acos());
    let winding = turn.sign() * phi;
    if phi <= al0 + al1 {
        Some((p0.dist(p1), winding))
    } else {
        let len = (d0 * d0 - r * r).max(0.0).sqrt()
            + (d1 * d1 - r * r).max(0.0).sqrt()
            + r * (phi - al0 - al1);
        Some((len, winding))
    }
}

/// Primitives of the path measured by [`leg_cost`].
pub(crate) fn leg_primitives(
    p0: Point,
    p1: Point,
    c: Point,
    r: f64,
    turn: Turn,
) -> Vec<PathPrimitive> {
    let (v0, v1) = (p0 - c, p1 - c);
    let (d0, d1) = (v0.norm().max(r), v1.norm().max(r));
    let ccw = wrap_angle(v1.angle() - v0.angle());
    let phi = match turn {
        Turn::Ccw => ccw,
        Turn::Cw => wrap_angle(TAU - ccw),
    };
    let (al0, al1) = ((r / d0).min(1.0).acos(), (r / d1).min(1.0).acos());
    if phi <= al0 + al1 {
        if p0 == p1 {
            return Vec::new();
        }
        return vec![PathPrimitive::Segment { from: p0, to: p1 }];
    }
    let sg = turn.sign();
    let start = v0.angle() + sg * al0;
    let sweep = sg * (phi - al0 - al1);
    let arc = PathPrimitive::arc(c, r, start, sweep);
    let mut out = Vec::with_capacity(3);
    // A tangent of zero length (endpoint on the circle) is dropped.
    if v0.norm() > r {
        let t0 = arc.start();
        if t0 != p0 {
            out.push(PathPrimitive::Segment { from: p0, to: t0 });
        }
    }
    if arc.length() > 0.0 {
        out.push(arc);
    }
    if v1.norm() > r {
        let t1 = arc.end();
        if t1 != p1 {
            out.push(PathPrimitive::Segment { from: t1, to: p1 });
        }
    }
    out
}

pub fn shortest_path_avoiding_disc(
    p0: Point,
    p1: Point,
    c: Circle,
    side: Side,
) -> Result<Trajectory, PlanError> {
    let turn = match side {
        Side::Above => Turn::Cw,
        Side::Below => Turn::Ccw,
        Side::Auto => {
            let ccw = leg_cost(p0, p1, c.center, c.radius, Turn::Ccw)
                .ok_or(PlanError::InfeasibleEndpoint)?;
            let cw = leg_cost(p0, p1, c.center, c.radius, Turn::Cw)
                .ok_or(PlanError::InfeasibleEndpoint)?;
            if ccw.0 <= cw.0 {
                Turn::Ccw
            } else {
                Turn::Cw
            }
        }
    };
    leg_cost(p0, p1, c.center, c.radius, turn).ok_or(PlanError::InfeasibleEndpoint)?;
    Ok(Trajectory {
        start: p0,
        end: p1,
        primitives: leg_primitives(p0, p1, c.center, c.radius, turn),
    })
}

/// A three-phase decoupled motion described by its pivot and turn senses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub order: PhaseOrder,
    pub pivot: Point,
    pub turns: [Turn; 3],
    pub length: f64,
    /// Signed change of the placement angle in each phase.
    pub windings: [f64; 3],
}

impl Candidate {
    /// Whether the realized angles cover the ccw arc of measure `ccw_sweep`
    /// (`dir = 1`) or the cw arc of measure `cw_sweep` (`dir = -1`).
    pub fn covers(&self, dir: f64, sweep: f64) -> bool {
        let w = self.windings;
        let cum = [0.0, w[0], w[0] + w[1], w[0] + w[1] + w[2]];
        let hi = cum.iter().map(|&c| dir * c).fold(f64::MIN, f64::max);
        let lo = cum.iter().map(|&c| dir * c).fold(f64::MAX, f64::min);
        hi >= sweep - SWEEP_TOL || hi - lo >= TAU - SWEEP_TOL
    }
}

/// Mover and waiter endpoints for a phase order.
fn roles(inst: &Instance, order: PhaseOrder) -> (Point, Point, Point, Point) {
    match order {
        PhaseOrder::Aba => (inst.p0.a, inst.p1.a, inst.p0.b, inst.p1.b),
        PhaseOrder::Bab => (inst.p0.b, inst.p1.b, inst.p0.a, inst.p1.a),
    }
}

const TURNS: [Turn; 2] = [Turn::Ccw, Turn::Cw];

/// All eight turn combinations for one pivot, or none if the pivot
/// overlaps a waiting position.
pub(crate) fn candidates_for_pivot(
    inst: &Instance,
    order: PhaseOrder,
    pivot: Point,
) -> Vec<Candidate> {
    let s = inst.s;
    let (x0, x1, y0, y1) = roles(inst, order);
    let slack = s * (1.0 - BOUNDARY_REL_TOL);
    if pivot.dist(y0) < slack || pivot.dist(y1) < slack || !pivot.is_finite() {
        return Vec::new();
    }
    let mut legs = [[None; 2]; 3];
    for (k, &t) in TURNS.iter().enumerate() {
        legs[0][k] = leg_cost(x0, pivot, y0, s, t);
        legs[1][k] = leg_cost(y0, y1, pivot, s, t);
        legs[2][k] = leg_cost(pivot, x1, y1, s, t);
    }
    let mut out = Vec::with_capacity(8);
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                if let (Some(l0), Some(l1), Some(l2)) = (legs[0][i], legs[1][j], legs[2][k]) {
                    out.push(Candidate {
                        order,
                        pivot,
                        turns: [TURNS[i], TURNS[j], TURNS[k]],
                        length: l0.0 + l1.0 + l2.0,
                        windings: [l0.1, l1.1, l2.1],
                    });
                }
            }
        }
    }
    out
}

/// Lines tangent to the circle through `p` (one line if `p` is on it).
fn tangent_lines(p: Point, c: Circle) -> Vec<Line> {
    match tangent_points(p, c) {
        Ok(Tangency::Two { right, left }) => vec![Line::through(p, right), Line::through(p, left)],
        Ok(Tangency::OnCircle(_)) => vec![Line {
            point: p,
            dir: (p - c.center).perp(),
        }],
        Err(_) => Vec::new(),
    }
}

/// Pivots at which optimal three-phase motions change structure: the
/// mover's endpoints, intersections of tangent lines from them to the
/// waiting circles, and the intersections of those lines and circles with
/// each other.
pub fn construction_pivots(inst: &Instance, order: PhaseOrder) -> Vec<Point> {
    let s = inst.s;
    let (x0, x1, y0, y1) = roles(inst, order);
    let (c0, c1) = (Circle::new(y0, s), Circle::new(y1, s));
    let mut out = vec![x0, x1];
    let from0: Vec<Line> = [c0, c1]
        .iter()
        .flat_map(|&c| tangent_lines(x0, c))
        .collect();
    let from1: Vec<Line> = [c0, c1]
        .iter()
        .flat_map(|&c| tangent_lines(x1, c))
        .collect();
    for l0 in &from0 {
        for l1 in &from1 {
            if let Some(q) = l0.intersect(l1) {
                out.push(q);
            }
        }
    }
    for l in from0.iter().chain(&from1) {
        for c in [c0, c1] {
            out.extend(l.intersect_circle(c));
        }
    }
    if y0 != y1 {
        if let Ok(pts) = circle_circle_intersection(c0, c1) {
            out.extend(pts);
        }
    }
    out
}

/// Shortest enumerated motions covering the ccw and the cw interval.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct ScanResult {
    pub ccw: Option<Candidate>,
    pub cw: Option<Candidate>,
}

fn better(best: &Option<Candidate>, c: &Candidate) -> bool {
    best.is_none_or(|b| c.length < b.length)
}

pub(crate) fn scan(inst: &Instance) -> ScanResult {
    let interval = swept_interval(inst);
    let (ccw_sweep, cw_sweep) = (interval.measure(), interval.complement().measure());
    let mut res = ScanResult::default();
    for order in [PhaseOrder::Aba, PhaseOrder::Bab] {
        for pivot in construction_pivots(inst, order) {
            for c in candidates_for_pivot(inst, order, pivot) {
                if c.covers(1.0, ccw_sweep) && better(&res.ccw, &c) {
                    res.ccw = Some(c);
                }
                if c.covers(-1.0, cw_sweep) && better(&res.cw, &c) {
                    res.cw = Some(c);
                }
            }
        }
    }
    res
}

/// Shortest motion for a fixed pivot that covers the requested interval.
pub(crate) fn best_for_pivot(
    inst: &Instance,
    order: PhaseOrder,
    pivot: Point,
    dir: f64,
) -> Option<Candidate> {
    let interval = swept_interval(inst);
    let sweep = if dir > 0.0 {
        interval.measure()
    } else {
        interval.complement().measure()
    };
    let mut best = None;
    for c in candidates_for_pivot(inst, order, pivot) {
        if c.covers(dir, sweep) && better(&best, &c) {
            best = Some(c);
        }
    }
    best
}

/// Realize a candidate as a decoupled motion.
pub fn build_motion(inst: &Instance, cand: &Candidate, orientation: Orientation) -> Motion {
    let s = inst.s;
    let (x0, x1, y0, y1) = roles(inst, cand.order);
    let p = cand.pivot;
    let leg1 = leg_primitives(x0, p, y0, s, cand.turns[0]);
    let leg2 = leg_primitives(y0, y1, p, s, cand.turns[1]);
    let leg3 = leg_primitives(p, x1, y1, s, cand.turns[2]);
    let (n1, n2, n3) = (leg1.len(), leg2.len(), leg3.len());
    let mover_traj = Trajectory {
        start: x0,
        end: x1,
        primitives: leg1.into_iter().chain(leg3).collect(),
    };
    let waiter_traj = Trajectory {
        start: y0,
        end: y1,
        primitives: leg2,
    };
    let (mover, waiter) = match cand.order {
        PhaseOrder::Aba => (Robot::A, Robot::B),
        PhaseOrder::Bab => (Robot::B, Robot::A),
    };
    let mut phases = Vec::new();
    if n1 > 0 {
        phases.push(Phase {
            robot: mover,
            first: 0,
            end: n1,
        });
    }
    if n2 > 0 {
        phases.push(Phase {
            robot: waiter,
            first: 0,
            end: n2,
        });
    }
    if n3 > 0 {
        phases.push(Phase {
            robot: mover,
            first: n1,
            end: n1 + n3,
        });
    }
    let (traj_a, traj_b) = match cand.order {
        PhaseOrder::Aba => (mover_traj, waiter_traj),
        PhaseOrder::Bab => (waiter_traj, mover_traj),
    };
    Motion {
        traj_a,
        traj_b,
        schedule: Schedule::Decoupled(phases),
        orientation,
    }
}

/// Both robots translate: B first in the first row of the table, A first
/// in the second.
fn straight_motion(inst: &Instance, case: CaseLabel) -> Motion {
    let seg = |a: Point, b: Point| {
        if a == b {
            Vec::new()
        } else {
            vec![PathPrimitive::Segment { from: a, to: b }]
        }
    };
    let traj_a = Trajectory {
        start: inst.p0.a,
        end: inst.p1.a,
        primitives: seg(inst.p0.a, inst.p1.a),
    };
    let traj_b = Trajectory {
        start: inst.p0.b,
        end: inst.p1.b,
        primitives: seg(inst.p0.b, inst.p1.b),
    };
    let order = if case == CaseLabel::Case1a {
        [Robot::B, Robot::A]
    } else {
        [Robot::A, Robot::B]
    };
    let phases = order
        .iter()
        .filter(|&&r| match r {
            Robot::A => !traj_a.primitives.is_empty(),
            Robot::B => !traj_b.primitives.is_empty(),
        })
        .map(|&r| Phase {
            robot: r,
            first: 0,
            end: 1,
        })
        .collect();
    Motion {
        traj_a,
        traj_b,
        schedule: Schedule::Decoupled(phases),
        orientation: Orientation::Straight,
    }
}

/// In the normalized frame with A0 and A1 in the corridor of B0 B1: a
/// sufficient condition for every shortest motion to be net clockwise.
///
/// Both `A`s must lie below the axis. It then fires when the circles
/// intersect, or when the segment from some `A_i` to its upper tangent
/// point on the circle of the other `B_j` passes through the disc of `B_i`
/// while `A_j` lies on or below that tangent line.
pub fn forced_clockwise(inst: &Instance) -> Result<bool, PlanError> {
    let s = inst.s;
    let (a, b) = ([inst.p0.a, inst.p1.a], [inst.p0.b, inst.p1.b]);
    if !(in_s_corridor(a[0], b[0], b[1], s) && in_s_corridor(a[1], b[0], b[1], s)) {
        return Ok(false);
    }
    if a[0].y >= 0.0 || a[1].y >= 0.0 {
        return Ok(false);
    }
    if b[0].dist(b[1]) <= 2.0 * s {
        return Ok(true);
    }
    for i in 0..2 {
        let j = 1 - i;
        if a[i].dist(b[j]) < s {
            continue;
        }
        let t = upper_tangent_point(a[i], Circle::new(b[j], s))?;
        if distance_point_segment(b[i], a[i], t) < s && on_or_below_line(a[j], a[i], t - a[i]) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Mirror image of [`forced_clockwise`].
pub fn forced_counterclockwise(inst: &Instance) -> Result<bool, PlanError> {
    forced_clockwise(&reflect_instance(inst))
}

/// Zone, pivot and auxiliary points of the ccw construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneOutcome {
    pub label: ZoneLabel,
    /// `None` when the zone defers to the clockwise construction.
    pub pivot: Option<Point>,
    pub trace: ConstructionTrace,
}

fn circle_relation(inst: &Instance) -> CircleRelation {
    if inst.p0.b.dist(inst.p1.b) <= 2.0 * inst.s {
        CircleRelation::Intersect
    } else {
        CircleRelation::Disjoint
    }
}

fn outside(p: Point, c: Circle) -> bool {
    p.dist(c.center) >= c.radius * (1.0 - BOUNDARY_REL_TOL)
}

/// Tangent line from `p` touching `c` at its upper tangency point.
fn upper_tangent_line(p: Point, c: Circle) -> Option<(Line, Point)> {
    let t = upper_tangent_point(p, c).ok()?;
    let dir = if t == p { (p - c.center).perp() } else { t - p };
    Some((Line { point: p, dir }, t))
}

/// Whether `q`, a point on the circle about the origin, lies on the arc
/// between angles `from` and `pi/2`.
fn on_arc_to_top(q: Point, from: f64) -> bool {
    let (lo, hi) = if from <= FRAC_PI_2 {
        (from, FRAC_PI_2)
    } else {
        (FRAC_PI_2, from)
    };
    let a = q.angle();
    a >= lo - 1e-12 && a <= hi + 1e-12
}

/// Zones of the second table row in the normalized frame, ccw sense.
pub fn classify_zone_case2(inst: &Instance) -> Result<Option<ZoneOutcome>, PlanError> {
    let s = inst.s;
    let (a0, a1, b0, b1) = (inst.p0.a, inst.p1.a, inst.p0.b, inst.p1.b);
    let (c0, c1) = (Circle::new(b0, s), Circle::new(b1, s));
    let circles = circle_relation(inst);
    let mut trace = ConstructionTrace::default();
    let p = upper_tangent_point(a0, c0)?;
    let u = Point::new(b0.x, b0.y + s);
    trace.put("p", p);
    trace.put("u", u);
    let from = (p - b0).angle();
    let label = |zone, detail| ZoneLabel {
        zone,
        circles,
        detail,
    };

    // Zone I: a tangency point from A1 on the arc from p to u.
    if outside(a1, c0) {
        let tps = tangent_points(a1, c0)?.points();
        if tps.iter().any(|&t| on_arc_to_top(t - b0, from)) {
            let (detail, pivot) = match upper_tangent_line(a0, c1) {
                Some((line, t_u)) if outside(a0, c1) => {
                    trace.put("U1", t_u);
                    if on_or_below_line(a1, a0, line.dir) {
                        (ZoneDetail::BelowU, None)
                    } else {
                        (ZoneDetail::AboveU, Some(a1))
                    }
                }
                _ => (ZoneDetail::AboveU, Some(a1)),
            };
            return Ok(Some(ZoneOutcome {
                label: label(Zone::I, Some(detail)),
                pivot,
                trace,
            }));
        }
    }

    // Zones II and III: where the upper tangent from A1 to the far circle
    // meets the arc p..u or the segment A0 p.
    let (line1, t1) = upper_tangent_line(a1, c1)
        .ok_or_else(|| PlanError::Construction("A1 inside the circle of B1".into()))?;
    trace.put("V1", t1);
    let hits = line1.intersect_circle(c0);
    if hits.iter().any(|&h| on_arc_to_top(h - b0, from)) {
        let pivot = hits
            .iter()
            .copied()
            .max_by(|x, y| x.x.total_cmp(&y.x).then(x.y.total_cmp(&y.y)))
            .expect("non-empty");
        return Ok(Some(ZoneOutcome {
            label: label(Zone::II, None),
            pivot: Some(pivot),
            trace,
        }));
    }
    let seg0 = Line::through(a0, p);
    if let Some((t, _)) = seg0.intersect_params(&line1) {
        if (-1e-12..=1.0 + 1e-12).contains(&t) {
            return Ok(Some(ZoneOutcome {
                label: label(Zone::III, None),
                pivot: Some(seg0.at(t)),
                trace,
            }));
        }
    }

    // Zone IV: A1 dominated by t.
    let (t, sub) = if outside(a0, c1) {
        let in_corr = in_s_corridor(t1, b0, b1, s);
        (Some(a0), if in_corr { 1 } else { 2 })
    } else {
        let exit = seg0
            .circle_params(c1)
            .into_iter()
            .filter(|u| (0.0..=1.0).contains(u))
            .fold(None, |acc: Option<f64>, u| {
                Some(acc.map_or(u, |a| a.max(u)))
            });
        match exit {
            Some(u) => (Some(seg0.at(u)), 1),
            None => (
                circle_circle_intersection(c0, c1)
                    .ok()
                    .and_then(|v| v.first().copied()),
                3,
            ),
        }
    };
    if let Some(t) = t {
        trace.put("t", t);
        if outside(t, c0) && outside(t, c1) && dominates(t, a1, b0, b1, s).unwrap_or(false) {
            return Ok(Some(ZoneOutcome {
                label: label(Zone::IV, Some(ZoneDetail::Subcase(sub))),
                pivot: Some(t),
                trace,
            }));
        }
    }
    Ok(None)
}

/// Zones of the third table row in the normalized frame, ccw sense.
pub fn classify_zone_case3(inst: &Instance) -> Result<Option<ZoneOutcome>, PlanError> {
    let s = inst.s;
    let (a0, a1, b0, b1) = (inst.p0.a, inst.p1.a, inst.p0.b, inst.p1.b);
    let (c0, c1) = (Circle::new(b0, s), Circle::new(b1, s));
    let circles = circle_relation(inst);
    let mut trace = ConstructionTrace::default();
    let detail = if circles == CircleRelation::Intersect {
        if a0.y < 0.0 && a1.y < 0.0 {
            Some(ZoneDetail::BothBelow)
        } else {
            Some(ZoneDetail::BothAbove)
        }
    } else {
        None
    };
    let label = |zone| ZoneLabel {
        zone,
        circles,
        detail,
    };
    let defer = detail == Some(ZoneDetail::BothBelow);
    let done = |zone, pivot: Point, trace| {
        Ok(Some(ZoneOutcome {
            label: label(zone),
            pivot: (!defer).then_some(pivot),
            trace,
        }))
    };
    let p0 = upper_tangent_line(a0, c0).filter(|_| outside(a0, c0));
    let p1 = upper_tangent_line(a0, c1).filter(|_| outside(a0, c1));
    if let Some((_, t)) = p0 {
        trace.put("p0", t);
    }
    if let Some((_, t)) = p1 {
        trace.put("p1", t);
    }
    let dominated = |p: Point, q: Point| {
        outside(p, c0) && outside(p, c1) && dominates(p, q, b0, b1, s).unwrap_or(false)
    };
    if dominated(a1, a0) {
        return done(Zone::I, a1, trace);
    }
    if dominated(a0, a1) {
        return done(Zone::II, a0, trace);
    }
    let from_a1_0 = upper_tangent_line(a1, c0).filter(|_| outside(a1, c0));
    let from_a1_1 = upper_tangent_line(a1, c1).filter(|_| outside(a1, c1));
    if let (Some((l, tq)), Some((_, tp1))) = (from_a1_0, p1) {
        let seg = Line::through(a0, tp1);
        if let Some((u, _)) = seg.intersect_params(&l) {
            if (-1e-12..=1.0 + 1e-12).contains(&u) {
                trace.put("q0", tq);
                return done(Zone::III, seg.at(u), trace);
            }
        }
    }
    if let (Some((l, tq)), Some((_, tp0))) = (from_a1_1, p0) {
        let seg = Line::through(a0, tp0);
        if let Some((u, _)) = seg.intersect_params(&l) {
            if (-1e-12..=1.0 + 1e-12).contains(&u) {
                trace.put("q1", tq);
                return done(Zone::IV, seg.at(u), trace);
            }
        }
    }
    Ok(None)
}

/// Zone outcome for the ccw construction of a normalized instance, after
/// reducing the mirrored table rows. The pivot is returned in the frame of
/// `local` together with the phase order it drives.
fn ccw_zone(
    local: &Instance,
    case: CaseLabel,
) -> Result<Option<(ZoneOutcome, PhaseOrder)>, PlanError> {
    match case {
        CaseLabel::Case1a | CaseLabel::Case1b => Ok(None),
        CaseLabel::Case2a => Ok(classify_zone_case2(local)?.map(|z| (z, PhaseOrder::Aba))),
        CaseLabel::Case3a => Ok(classify_zone_case3(local)?.map(|z| (z, PhaseOrder::Aba))),
        CaseLabel::Case2b => {
            // Time reversal swaps the sense; mirroring swaps it back.
            let flipped = reflect_instance(&local.reversed());
            let (frame, n) = normalize(&flipped);
            Ok(classify_zone_case2(&n)?.map(|z| {
                let back = |p: Point| frame.invert(p).reflect_x();
                (remap(z, back), PhaseOrder::Aba)
            }))
        }
        CaseLabel::Case3b => {
            let (frame, n) = normalize(&local.swap_roles());
            Ok(classify_zone_case3(&n)?.map(|z| (remap(z, |p| frame.invert(p)), PhaseOrder::Bab)))
        }
    }
}

fn remap(z: ZoneOutcome, f: impl Fn(Point) -> Point + Copy) -> ZoneOutcome {
    ZoneOutcome {
        label: z.label,
        pivot: z.pivot.map(f),
        trace: z.trace.mapped(f, |a| a),
    }
}

/// Best ccw motion for a normalized instance: zone construction if it is
/// as short as the scan, otherwise the scan.
struct OrientedPlan {
    cand: Candidate,
    zone: Option<ZoneLabel>,
    method: Method,
    trace: ConstructionTrace,
}

fn plan_ccw(
    local: &Instance,
    case: CaseLabel,
    scanned: Option<Candidate>,
) -> Result<Option<OrientedPlan>, PlanError> {
    let zone = ccw_zone(local, case)?;
    let tol = 1e-9 * local.scale();
    let zone_cand = zone
        .as_ref()
        .and_then(|(z, order)| z.pivot.and_then(|p| best_for_pivot(local, *order, p, 1.0)));
    let (label, trace) = match zone {
        Some((z, _)) => (Some(z.label), z.trace),
        None => (None, ConstructionTrace::default()),
    };
    let pick = match (zone_cand, scanned) {
        (Some(z), Some(sc)) if z.length <= sc.length + tol => Some((z, Method::Zone)),
        (Some(z), None) => Some((z, Method::Zone)),
        (_, Some(sc)) => Some((sc, Method::PivotSearch)),
        (None, None) => None,
    };
    Ok(pick.map(|(cand, method)| OrientedPlan {
        cand,
        zone: label,
        method,
        trace,
    }))
}

fn mirror_candidate(c: &Candidate) -> Candidate {
    Candidate {
        pivot: c.pivot.reflect_x(),
        turns: c.turns.map(Turn::flipped),
        windings: c.windings.map(|w| -w),
        ..*c
    }
}

/// Lengths reported alongside the chosen motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanLengths {
    pub ccw: Option<f64>,
    pub cw: Option<f64>,
    pub chosen: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanReport {
    pub case: CaseLabel,
    pub zone: Option<ZoneLabel>,
    pub method: Method,
    pub forced_clockwise: bool,
    pub forced_counterclockwise: bool,
    pub ccw: Option<Motion>,
    pub cw: Option<Motion>,
    pub chosen: Motion,
    pub lengths: PlanLengths,
    pub bound: LengthBound,
    /// Pivot and phase order of the chosen motion, in world coordinates.
    pub pivot: Option<(PhaseOrder, Point)>,
    pub trace: ConstructionTrace,
    /// Map between world coordinates and the normalized planning frame.
    pub frame: Frame,
}

impl PlanReport {
    pub fn candidate(&self, o: Orientation) -> Option<&Motion> {
        match o {
            Orientation::Ccw => self.ccw.as_ref(),
            Orientation::Cw => self.cw.as_ref(),
            Orientation::Straight => Some(&self.chosen),
        }
    }
}

/// Add the detour tangency points and arc ranges of a built motion.
fn trace_motion(trace: &mut ConstructionTrace, inst: &Instance, cand: &Candidate) {
    let s = inst.s;
    let (x0, x1, y0, y1) = roles(inst, cand.order);
    let p = cand.pivot;
    let name = match cand.order {
        PhaseOrder::Aba => "A_int",
        PhaseOrder::Bab => "B_int",
    };
    trace.put(name, p);
    let legs = [
        ("alpha", leg_primitives(x0, p, y0, s, cand.turns[0])),
        ("beta", leg_primitives(y0, y1, p, s, cand.turns[1])),
        ("gamma", leg_primitives(p, x1, y1, s, cand.turns[2])),
    ];
    for (tag, prims) in legs {
        for pr in &prims {
            if let PathPrimitive::Arc {
                start_angle,
                end_angle,
                ..
            } = *pr
            {
                trace
                    .angle_ranges
                    .insert(tag.into(), (start_angle, end_angle));
                if tag == "beta" {
                    trace.put("T0", pr.start());
                    trace.put("T1", pr.end());
                }
            }
        }
    }
}

/// Plan the shortest motion for `inst`.
pub fn plan(inst: &Instance) -> Result<PlanReport, PlanError> {
    let (frame, local) = normalize(inst);
    let bound = optimal_length_bound(inst);
    let case = classify_case(&local);

    let to_world = |m: Motion| m.to_world(&frame);
    if inst.p0 == inst.p1 {
        let chosen = Motion::empty(inst.p0);
        return Ok(PlanReport {
            case,
            zone: None,
            method: Method::Empty,
            forced_clockwise: false,
            forced_counterclockwise: false,
            ccw: Some(chosen.clone()),
            cw: None,
            lengths: PlanLengths {
                ccw: Some(0.0),
                cw: None,
                chosen: 0.0,
            },
            chosen,
            bound,
            pivot: None,
            trace: ConstructionTrace::default(),
            frame,
        });
    }

    if case.is_straight() {
        let chosen = to_world(straight_motion(&local, case));
        // Exact endpoints from the input.
        let chosen = with_endpoints(chosen, inst);
        let length = motion_length(&chosen);
        let (covers_ccw, covers_cw) = straight_covers(&local, case);
        check_optimal(length, &bound, inst)?;
        return Ok(PlanReport {
            case,
            zone: None,
            method: Method::Straight,
            forced_clockwise: false,
            forced_counterclockwise: false,
            ccw: covers_ccw.then(|| chosen.clone()),
            cw: covers_cw.then(|| chosen.clone()),
            lengths: PlanLengths {
                ccw: covers_ccw.then_some(length),
                cw: covers_cw.then_some(length),
                chosen: length,
            },
            chosen,
            bound,
            pivot: None,
            trace: ConstructionTrace::default(),
            frame,
        });
    }

    let f_cw = forced_clockwise(&local)?;
    let f_ccw = forced_counterclockwise(&local)?;
    let (drop_ccw, drop_cw) = (f_cw && !f_ccw, f_ccw && !f_cw);

    let scanned = scan(&local);
    let ccw_plan = if drop_ccw {
        None
    } else {
        plan_ccw(&local, case, scanned.ccw)?
    };
    let cw_plan = if drop_cw {
        None
    } else {
        let mirrored = reflect_instance(&local);
        let mcase = classify_case(&mirrored);
        plan_ccw(&mirrored, mcase, scanned.cw.map(|c| mirror_candidate(&c)))?.map(|p| {
            OrientedPlan {
                cand: mirror_candidate(&p.cand),
                trace: p.trace.mapped(Point::reflect_x, |a| wrap_angle(-a)),
                ..p
            }
        })
    };

    let realize = |p: &OrientedPlan, o: Orientation| {
        let m = build_motion(&local, &p.cand, o);
        with_endpoints(to_world(m), inst)
    };
    let ccw = ccw_plan.as_ref().map(|p| realize(p, Orientation::Ccw));
    let cw = cw_plan.as_ref().map(|p| realize(p, Orientation::Cw));
    let lengths_ccw = ccw.as_ref().map(motion_length);
    let lengths_cw = cw.as_ref().map(motion_length);

    let pick_cw = match (lengths_ccw, lengths_cw) {
        (Some(a), Some(b)) => b < a,
        (None, Some(_)) => true,
        (Some(_), None) => false,
        (None, None) => {
            return Err(PlanError::Construction("no candidate motion".into()));
        }
    };
    let (chosen_plan, chosen) = if pick_cw {
        (cw_plan.as_ref().expect("cw"), cw.clone().expect("cw"))
    } else {
        (ccw_plan.as_ref().expect("ccw"), ccw.clone().expect("ccw"))
    };
    let length = motion_length(&chosen);
    check_optimal(length, &bound, inst)?;

    let mut trace = chosen_plan.trace.clone();
    trace_motion(&mut trace, &local, &chosen_plan.cand);
    let trace = trace.mapped(|p| frame.invert(p), |a| frame.invert_angle(a));
    Ok(PlanReport {
        case,
        zone: chosen_plan.zone,
        method: chosen_plan.method,
        forced_clockwise: f_cw,
        forced_counterclockwise: f_ccw,
        ccw,
        cw,
        chosen,
        lengths: PlanLengths {
            ccw: lengths_ccw,
            cw: lengths_cw,
            chosen: length,
        },
        bound,
        pivot: Some((chosen_plan.cand.order, frame.invert(chosen_plan.cand.pivot))),
        trace,
        frame,
    })
}

fn check_optimal(length: f64, bound: &LengthBound, inst: &Instance) -> Result<(), PlanError> {
    let tol = 1e-6 * inst.scale().max(1.0);
    if (length - bound.min()).abs() > tol {
        return Err(PlanError::OptimalityCheck {
            length,
            bound: bound.min(),
        });
    }
    Ok(())
}

/// Which senses the straight motion covers, from its phase windings.
fn straight_covers(local: &Instance, case: CaseLabel) -> (bool, bool) {
    let pivot = if case == CaseLabel::Case1a {
        local.p0.a
    } else {
        local.p1.a
    };
    let c = candidates_for_pivot(local, PhaseOrder::Aba, pivot)
        .into_iter()
        .filter(|c| (c.length - (local.chord_a() + local.chord_b())).abs() <= 1e-9 * local.scale())
        .min_by(|x, y| x.length.total_cmp(&y.length));
    let interval = swept_interval(local);
    match c {
        Some(c) => (
            c.covers(1.0, interval.measure()),
            c.covers(-1.0, interval.complement().measure()),
        ),
        None => (false, false),
    }
}

/// Pin trajectory endpoints to the exact input coordinates.
fn with_endpoints(mut m: Motion, inst: &Instance) -> Motion {
    m.traj_a.start = inst.p0.a;
    m.traj_a.end = inst.p1.a;
    m.traj_b.start = inst.p0.b;
    m.traj_b.end = inst.p1.b;
    for (traj, (s, e)) in [
        (&mut m.traj_a, (inst.p0.a, inst.p1.a)),
        (&mut m.traj_b, (inst.p0.b, inst.p1.b)),
    ] {
        if let Some(PathPrimitive::Segment { from, .. }) = traj.primitives.first_mut() {
            *from = s;
        }
        if let Some(PathPrimitive::Segment { to, .. }) = traj.primitives.last_mut() {
            *to = e;
        }
    }
    m
}

/// Plan for a pair of placements sharing `s`; the length is the distance
/// of the configuration space metric.
pub fn distance(s: f64, p0: Placement, p1: Placement) -> Result<f64, PlanError> {
    let inst = Instance::new(s, p0, p1)?;
    Ok(plan(&inst)?.lengths.chosen)
}
