//! Independent checks: a brute-force pivot grid over three-phase motions,
//! and a certificate bundling all correctness checks for one motion.

use thiserror::Error;

use crate::geom::{normalize, Instance, Point};
use crate::motion::{is_trace_convex, min_separation, motion_length, Motion};
use crate::planner::{build_motion, candidates_for_pivot, Candidate, PhaseOrder};
use crate::support::{
    optimal_length_bound, quadrature_length_bound, swept_interval, Orientation, SupportError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("grid step must be positive and margin nonnegative")]
    InvalidGrid,
    #[error("no feasible motion on the pivot grid")]
    Exhausted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub step: f64,
    pub margin: f64,
}

impl GridSpec {
    pub fn new(step: f64, margin: f64) -> Result<Self, OracleError> {
        if !(step > 0.0 && step.is_finite() && margin >= 0.0 && margin.is_finite()) {
            return Err(OracleError::InvalidGrid);
        }
        Ok(GridSpec { step, margin })
    }

    /// `step = max(0.05, diameter / 400)`, `margin = 2s`.
    pub fn default_for(inst: &Instance) -> Self {
        GridSpec {
            step: (inst.bbox_diameter() / 400.0).max(0.05),
            margin: 2.0 * inst.s,
        }
    }

    pub fn halved(&self) -> Self {
        GridSpec {
            step: self.step / 2.0,
            ..*self
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub best_length: f64,
    /// Pivot in world coordinates.
    pub best_pivot: Point,
    pub order: PhaseOrder,
    pub orientation: Orientation,
    pub motion: Motion,
}

/// Shortest three-phase motion over grid pivots, both phase orders and all
/// detour sides. With `only` set, motions are restricted to that rotation
/// sense.
///
/// The grid is anchored at B0 with the axes of the normalized frame, so a
/// halved step yields a superset of pivots.
pub fn pivot_grid_search(
    inst: &Instance,
    grid: GridSpec,
    only: Option<Orientation>,
) -> Result<OracleResult, OracleError> {
    GridSpec::new(grid.step, grid.margin)?;
    let (frame, local) = normalize(inst);
    if local.p0 == local.p1 {
        return Ok(OracleResult {
            best_length: 0.0,
            best_pivot: inst.p0.a,
            order: PhaseOrder::Aba,
            orientation: Orientation::Ccw,
            motion: Motion::empty(inst.p0),
        });
    }
    let interval = swept_interval(&local);
    let (ccw_sweep, cw_sweep) = (interval.measure(), interval.complement().measure());
    let accept = |c: &Candidate| match only {
        Some(Orientation::Ccw) => c.covers(1.0, ccw_sweep),
        Some(Orientation::Cw) => c.covers(-1.0, cw_sweep),
        _ => true,
    };

    let mut best: Option<Candidate> = None;
    let offer = |c: Candidate, best: &mut Option<Candidate>| {
        if accept(&c) && best.is_none_or(|b| c.length < b.length) {
            *best = Some(c);
        }
    };

    // No-pivot plans: the mover parks at one of its own endpoints.
    for order in [PhaseOrder::Aba, PhaseOrder::Bab] {
        let (x0, x1) = match order {
            PhaseOrder::Aba => (local.p0.a, local.p1.a),
            PhaseOrder::Bab => (local.p0.b, local.p1.b),
        };
        for p in [x0, x1] {
            for c in candidates_for_pivot(&local, order, p) {
                offer(c, &mut best);
            }
        }
    }

    let pts = local.points();
    let pad = local.s + grid.margin;
    let lo_x = pts.iter().map(|p| p.x).fold(f64::INFINITY, f64::min) - pad;
    let hi_x = pts.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max) + pad;
    let lo_y = pts.iter().map(|p| p.y).fold(f64::INFINITY, f64::min) - pad;
    let hi_y = pts.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max) + pad;
    let (i0, i1) = (
        (lo_x / grid.step).floor() as i64,
        (hi_x / grid.step).ceil() as i64,
    );
    let (j0, j1) = (
        (lo_y / grid.step).floor() as i64,
        (hi_y / grid.step).ceil() as i64,
    );

    for order in [PhaseOrder::Aba, PhaseOrder::Bab] {
        let (x0, x1, y0, y1) = match order {
            PhaseOrder::Aba => (local.p0.a, local.p1.a, local.p0.b, local.p1.b),
            PhaseOrder::Bab => (local.p0.b, local.p1.b, local.p0.a, local.p1.a),
        };
        let waiter = y0.dist(y1);
        for i in i0..=i1 {
            for j in j0..=j1 {
                let p = Point::new(i as f64 * grid.step, j as f64 * grid.step);
                // Straight-line lower bound on any motion through p.
                let lb = x0.dist(p) + p.dist(x1) + waiter;
                if best.is_some_and(|b| lb >= b.length) {
                    continue;
                }
                for c in candidates_for_pivot(&local, order, p) {
                    offer(c, &mut best);
                }
            }
        }
    }

    let best = best.ok_or(OracleError::Exhausted)?;
    let orientation = if best.covers(1.0, ccw_sweep) {
        Orientation::Ccw
    } else {
        Orientation::Cw
    };
    let motion = build_motion(&local, &best, orientation).to_world(&frame);
    Ok(OracleResult {
        best_length: motion_length(&motion),
        best_pivot: frame.invert(best.pivot),
        order: best.order,
        orientation,
        motion,
    })
}

/// One named pass/fail entry of a [`Certificate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Measured residual or count behind the verdict.
    pub value: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub checks: Vec<Check>,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const CHECK_NAMES: [&str; 6] = [
    "feasibility",
    "convexity",
    "bound-equality",
    "quadrature",
    "grid-oracle",
    "primitive-count",
];

/// Run the six checks on `motion` for `inst`. The bound and the grid are
/// taken for the motion's rotation sense; a straight motion is compared
/// with the smaller bound.
pub fn certify(
    inst: &Instance,
    motion: &Motion,
    grid: GridSpec,
    quad_tol: f64,
) -> Result<Certificate, SupportError> {
    let s = inst.s;
    let scale = inst.scale().max(1.0);
    let length = motion_length(motion);
    let mut checks = Vec::with_capacity(6);

    let ends_ok = motion.start() == inst.p0 && motion.end() == inst.p1;
    let gap = motion
        .traj_a
        .continuity_gap()
        .max(motion.traj_b.continuity_gap());
    let sep = min_separation(motion);
    let feasible = ends_ok && gap <= 1e-9 * scale && sep >= s - 1e-7;
    checks.push(Check {
        name: CHECK_NAMES[0],
        passed: feasible,
        value: s - sep,
        limit: 1e-7,
    });

    let convex = is_trace_convex(&motion.traj_a, inst.p0.a, inst.p1.a)
        && is_trace_convex(&motion.traj_b, inst.p0.b, inst.p1.b);
    checks.push(Check {
        name: CHECK_NAMES[1],
        passed: convex,
        value: if convex { 0.0 } else { 1.0 },
        limit: 0.0,
    });

    let bound = optimal_length_bound(inst);
    let target = bound.get(motion.orientation);
    let residual = (length - target).abs();
    checks.push(Check {
        name: CHECK_NAMES[2],
        passed: residual <= 1e-6 * scale,
        value: residual,
        limit: 1e-6 * scale,
    });

    let quad = quadrature_length_bound(inst, quad_tol)?;
    let quad_res = (quad.ccw - bound.ccw).abs().max((quad.cw - bound.cw).abs());
    let quad_limit = quad_tol + 1e-9 * scale;
    checks.push(Check {
        name: CHECK_NAMES[3],
        passed: quad_res <= quad_limit,
        value: quad_res,
        limit: quad_limit,
    });

    let only = match motion.orientation {
        Orientation::Straight => None,
        o => Some(o),
    };
    let (grid_ok, grid_gap) = match pivot_grid_search(inst, grid, only) {
        Ok(r) => (
            r.best_length >= length - 1e-9 * scale,
            r.best_length - length,
        ),
        Err(_) => (false, f64::NAN),
    };
    checks.push(Check {
        name: CHECK_NAMES[4],
        passed: grid_ok,
        value: grid_gap,
        limit: -1e-9 * scale,
    });

    let (na, nb) = motion.primitive_count();
    let most = na.max(nb);
    checks.push(Check {
        name: CHECK_NAMES[5],
        passed: most <= 6,
        value: most as f64,
        limit: 6.0,
    });

    Ok(Certificate { checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::PathPrimitive;
    use crate::planner::plan;

    fn inst(a0: (f64, f64), b0: (f64, f64), a1: (f64, f64), b1: (f64, f64)) -> Instance {
        Instance::from_coords(1.0, a0, b0, a1, b1).unwrap()
    }

    #[test]
    fn straight_instance_is_matched_exactly() {
        let i = inst((5.0, 5.0), (0.0, 0.0), (6.0, 5.0), (10.0, 0.0));
        let r = pivot_grid_search(&i, GridSpec::default_for(&i), None).unwrap();
        assert!((r.best_length - 11.0).abs() < 1e-12);
    }

    #[test]
    fn identical_placements() {
        let i = inst((3.0, 0.0), (0.0, 0.0), (3.0, 0.0), (0.0, 0.0));
        let r = pivot_grid_search(&i, GridSpec::default_for(&i), None).unwrap();
        assert_eq!(r.best_length, 0.0);
        let c = certify(
            &i,
            &plan(&i).unwrap().chosen,
            GridSpec::default_for(&i),
            1e-10,
        )
        .unwrap();
        assert!(c.passed(), "{c:?}");
    }

    #[test]
    fn symmetric_instance_sandwich() {
        let i = inst((1.0, 0.4), (0.0, 0.0), (3.0, 0.4), (4.0, 0.0));
        let planned = plan(&i).unwrap().lengths.chosen;
        let r = pivot_grid_search(&i, GridSpec::new(0.02, 2.0).unwrap(), None).unwrap();
        assert!(r.best_length >= planned - 1e-9);
        assert!(
            r.best_length <= planned + 0.02 * 4.0,
            "{} vs {planned}",
            r.best_length
        );
        assert!(min_separation(&r.motion) >= 1.0 - 1e-7);
    }

    #[test]
    fn planner_output_certifies() {
        let i = inst((1.0, 0.4), (0.0, 0.0), (3.0, 0.4), (4.0, 0.0));
        let m = plan(&i).unwrap().chosen;
        let c = certify(&i, &m, GridSpec::default_for(&i), 1e-10).unwrap();
        assert!(c.passed(), "{c:?}");
    }

    #[test]
    fn enlarged_arc_fails_bound_and_grid() {
        let i = inst((1.0, 0.4), (0.0, 0.0), (3.0, 0.4), (4.0, 0.0));
        let mut m = plan(&i).unwrap().chosen;
        let traj = if m
            .traj_b
            .primitives
            .iter()
            .any(|p| matches!(p, PathPrimitive::Arc { .. }))
        {
            &mut m.traj_b
        } else {
            &mut m.traj_a
        };
        for p in traj.primitives.iter_mut() {
            if let PathPrimitive::Arc {
                start_angle,
                end_angle,
                direction,
                ..
            } = p
            {
                let extra = 0.5 * direction.sign();
                *start_angle -= extra;
                *end_angle += extra;
                break;
            }
        }
        let c = certify(&i, &m, GridSpec::default_for(&i), 1e-10).unwrap();
        assert!(!c.get("bound-equality").unwrap().passed);
        assert!(!c.get("grid-oracle").unwrap().passed);
    }

    #[test]
    fn invalid_grid_rejected() {
        assert_eq!(GridSpec::new(0.0, 1.0), Err(OracleError::InvalidGrid));
        assert_eq!(GridSpec::new(0.1, -1.0), Err(OracleError::InvalidGrid));
    }
}
