//! JSON files read and written by the command-line tool.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use discpair::geom::{normalize, Instance, Point};
use discpair::motion::{
    CoupledSchedule, JointSegment, Motion, PathPrimitive, Phase, Robot, Schedule, Trajectory, Turn,
};
use discpair::oracle::{Certificate, OracleResult};
use discpair::planner::{classify_case, ConstructionTrace, PlanReport};
use discpair::support::{optimal_length_bound, Orientation};

pub type Xy = [f64; 2];

fn xy(p: Point) -> Xy {
    [p.x, p.y]
}

fn pt(v: Xy) -> Point {
    Point::new(v[0], v[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub s: f64,
    #[serde(rename = "A0")]
    pub a0: Xy,
    #[serde(rename = "B0")]
    pub b0: Xy,
    #[serde(rename = "A1")]
    pub a1: Xy,
    #[serde(rename = "B1")]
    pub b1: Xy,
}

impl InstanceFile {
    pub fn from_instance(i: &Instance) -> Self {
        InstanceFile {
            s: i.s,
            a0: xy(i.p0.a),
            b0: xy(i.p0.b),
            a1: xy(i.p1.a),
            b1: xy(i.p1.b),
        }
    }

    pub fn to_instance(&self) -> Result<Instance> {
        let t = |v: Xy| (v[0], v[1]);
        Instance::from_coords(self.s, t(self.a0), t(self.b0), t(self.a1), t(self.b1))
            .context("invalid instance")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase", deny_unknown_fields)]
pub enum PrimitiveJson {
    Segment {
        from: Xy,
        to: Xy,
    },
    #[serde(rename_all = "camelCase")]
    Arc {
        center: Xy,
        radius: f64,
        start_angle: f64,
        end_angle: f64,
        direction: String,
    },
}

impl PrimitiveJson {
    fn from_primitive(p: &PathPrimitive) -> Self {
        match *p {
            PathPrimitive::Segment { from, to } => PrimitiveJson::Segment {
                from: xy(from),
                to: xy(to),
            },
            PathPrimitive::Arc {
                center,
                radius,
                start_angle,
                end_angle,
                direction,
            } => PrimitiveJson::Arc {
                center: xy(center),
                radius,
                start_angle,
                end_angle,
                direction: direction.as_str().to_string(),
            },
        }
    }

    fn to_primitive(&self) -> Result<PathPrimitive> {
        Ok(match self {
            PrimitiveJson::Segment { from, to } => PathPrimitive::Segment {
                from: pt(*from),
                to: pt(*to),
            },
            PrimitiveJson::Arc {
                center,
                radius,
                start_angle,
                end_angle,
                direction,
            } => PathPrimitive::Arc {
                center: pt(*center),
                radius: *radius,
                start_angle: *start_angle,
                end_angle: *end_angle,
                direction: match direction.as_str() {
                    "ccw" => Turn::Ccw,
                    "cw" => Turn::Cw,
                    other => bail!("unknown arc direction {other:?}"),
                },
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryJson {
    pub start: Xy,
    pub end: Xy,
    pub primitives: Vec<PrimitiveJson>,
}

impl TrajectoryJson {
    fn from_trajectory(t: &Trajectory) -> Self {
        TrajectoryJson {
            start: xy(t.start),
            end: xy(t.end),
            primitives: t
                .primitives
                .iter()
                .map(PrimitiveJson::from_primitive)
                .collect(),
        }
    }

    fn to_trajectory(&self) -> Result<Trajectory> {
        Ok(Trajectory {
            start: pt(self.start),
            end: pt(self.end),
            primitives: self
                .primitives
                .iter()
                .map(PrimitiveJson::to_primitive)
                .collect::<Result<_>>()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoriesJson {
    #[serde(rename = "A")]
    pub a: TrajectoryJson,
    #[serde(rename = "B")]
    pub b: TrajectoryJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseJson {
    pub robot: String,
    pub first: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointJson {
    /// Arc-length interval along the trajectory of A.
    pub a: [f64; 2],
    pub b: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase", deny_unknown_fields)]
pub enum ScheduleJson {
    Decoupled { phases: Vec<PhaseJson> },
    Coupled { segments: Vec<JointJson> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LengthsJson {
    pub ccw: Option<f64>,
    pub cw: Option<f64>,
    pub chosen: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoneJson {
    pub zone: String,
    pub circles: String,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ConstructionJson {
    pub pivot: Option<PivotJson>,
    pub points: BTreeMap<String, Xy>,
    pub angle_ranges: BTreeMap<String, [f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PivotJson {
    pub order: String,
    pub point: Xy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckJson {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub limit: f64,
}

pub fn checks_json(c: &Certificate) -> Vec<CheckJson> {
    c.checks
        .iter()
        .map(|k| CheckJson {
            name: k.name.to_string(),
            passed: k.passed,
            // NaN is not representable in JSON.
            value: if k.value.is_finite() {
                k.value
            } else {
                f64::MAX
            },
            limit: k.limit,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PlanFile {
    pub instance: InstanceFile,
    pub case: String,
    pub zone: Option<ZoneJson>,
    pub method: String,
    pub orientation: String,
    pub forced_clockwise: bool,
    pub certified: bool,
    pub lengths: LengthsJson,
    pub trajectories: TrajectoriesJson,
    pub schedule: ScheduleJson,
    pub construction: ConstructionJson,
    pub certificate: Vec<CheckJson>,
}

/// Written instead of a plan when the requested rotation sense has no
/// motion for the instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RefusalFile {
    pub instance: InstanceFile,
    pub case: String,
    pub requested_orientation: String,
    pub forced_clockwise: bool,
    pub forced_counterclockwise: bool,
    pub certified: bool,
    pub reason: String,
    pub lengths: LengthsJson,
}

impl RefusalFile {
    pub fn new(inst: &Instance, report: &PlanReport, requested: Orientation) -> Self {
        let reason = match requested {
            Orientation::Ccw => {
                "a clockwise motion is provably shorter; no counterclockwise candidate was built"
            }
            _ => "a counterclockwise motion is provably shorter; no clockwise candidate was built",
        };
        RefusalFile {
            instance: InstanceFile::from_instance(inst),
            case: report.case.as_str().to_string(),
            requested_orientation: requested.as_str().to_string(),
            forced_clockwise: report.forced_clockwise,
            forced_counterclockwise: report.forced_counterclockwise,
            certified: false,
            reason: reason.to_string(),
            lengths: LengthsJson {
                ccw: report.lengths.ccw,
                cw: report.lengths.cw,
                chosen: report.lengths.chosen,
                bound: report.bound.min(),
            },
        }
    }
}

pub fn orientation_from_str(s: &str) -> Result<Orientation> {
    Ok(match s {
        "ccw" => Orientation::Ccw,
        "cw" => Orientation::Cw,
        "straight" => Orientation::Straight,
        other => bail!("unknown orientation {other:?}"),
    })
}

fn construction_json(report: &PlanReport) -> ConstructionJson {
    let ConstructionTrace {
        points,
        angle_ranges,
    } = &report.trace;
    ConstructionJson {
        pivot: report.pivot.map(|(order, p)| PivotJson {
            order: order.as_str().to_string(),
            point: xy(p),
        }),
        points: points.iter().map(|(k, &p)| (k.clone(), xy(p))).collect(),
        angle_ranges: angle_ranges
            .iter()
            .map(|(k, &(a, b))| (k.clone(), [a, b]))
            .collect(),
    }
}

pub fn schedule_json(s: &Schedule) -> ScheduleJson {
    match s {
        Schedule::Decoupled(phases) => ScheduleJson::Decoupled {
            phases: phases
                .iter()
                .map(|p| PhaseJson {
                    robot: match p.robot {
                        Robot::A => "A".into(),
                        Robot::B => "B".into(),
                    },
                    first: p.first,
                    end: p.end,
                })
                .collect(),
        },
        Schedule::Coupled(c) => ScheduleJson::Coupled {
            segments: c
                .segments
                .iter()
                .map(|g| JointJson {
                    a: [g.a.0, g.a.1],
                    b: [g.b.0, g.b.1],
                })
                .collect(),
        },
    }
}

impl PlanFile {
    /// Assemble the file for `motion`, one of the motions in `report`.
    pub fn new(
        inst: &Instance,
        report: &PlanReport,
        motion: &Motion,
        certificate: &Certificate,
    ) -> Self {
        PlanFile {
            instance: InstanceFile::from_instance(inst),
            case: report.case.as_str().to_string(),
            zone: report.zone.map(|z| ZoneJson {
                zone: z.zone.as_str().to_string(),
                circles: z.circles.as_str().to_string(),
                detail: z.detail.map(|d| d.as_string()),
            }),
            method: report.method.as_str().to_string(),
            orientation: motion.orientation.as_str().to_string(),
            forced_clockwise: report.forced_clockwise,
            certified: certificate.passed(),
            lengths: LengthsJson {
                ccw: report.lengths.ccw,
                cw: report.lengths.cw,
                chosen: discpair::motion::motion_length(motion),
                bound: report.bound.get(motion.orientation),
            },
            trajectories: TrajectoriesJson {
                a: TrajectoryJson::from_trajectory(&motion.traj_a),
                b: TrajectoryJson::from_trajectory(&motion.traj_b),
            },
            schedule: schedule_json(&motion.schedule),
            construction: construction_json(report),
            certificate: checks_json(certificate),
        }
    }

    /// Record for a grid-oracle motion used when the planner failed. It is
    /// never marked certified.
    pub fn fallback(inst: &Instance, oracle: &OracleResult, certificate: &Certificate) -> Self {
        let bound = optimal_length_bound(inst);
        PlanFile {
            instance: InstanceFile::from_instance(inst),
            case: classify_case(&normalize(inst).1).as_str().to_string(),
            zone: None,
            method: "grid-oracle".to_string(),
            orientation: oracle.orientation.as_str().to_string(),
            forced_clockwise: false,
            certified: false,
            lengths: LengthsJson {
                ccw: None,
                cw: None,
                chosen: oracle.best_length,
                bound: bound.get(oracle.orientation),
            },
            trajectories: TrajectoriesJson {
                a: TrajectoryJson::from_trajectory(&oracle.motion.traj_a),
                b: TrajectoryJson::from_trajectory(&oracle.motion.traj_b),
            },
            schedule: schedule_json(&oracle.motion.schedule),
            construction: ConstructionJson {
                pivot: Some(PivotJson {
                    order: oracle.order.as_str().to_string(),
                    point: xy(oracle.best_pivot),
                }),
                ..ConstructionJson::default()
            },
            certificate: checks_json(certificate),
        }
    }

    /// Construction points worth labelling in a drawing.
    pub fn labels(&self) -> Vec<(String, Point)> {
        let mut out: Vec<_> = self
            .construction
            .points
            .iter()
            .map(|(k, &v)| (k.clone(), pt(v)))
            .collect();
        if let Some(p) = &self.construction.pivot {
            if !self.construction.points.values().any(|&v| v == p.point) {
                out.push(("pivot".to_string(), pt(p.point)));
            }
        }
        out
    }

    pub fn motion(&self) -> Result<Motion> {
        let schedule = match &self.schedule {
            ScheduleJson::Decoupled { phases } => Schedule::Decoupled(
                phases
                    .iter()
                    .map(|p| {
                        let robot = match p.robot.as_str() {
                            "A" => Robot::A,
                            "B" => Robot::B,
                            other => bail!("unknown robot {other:?}"),
                        };
                        Ok(Phase {
                            robot,
                            first: p.first,
                            end: p.end,
                        })
                    })
                    .collect::<Result<_>>()?,
            ),
            ScheduleJson::Coupled { segments } => Schedule::Coupled(CoupledSchedule {
                segments: segments
                    .iter()
                    .map(|g| JointSegment {
                        a: (g.a[0], g.a[1]),
                        b: (g.b[0], g.b[1]),
                    })
                    .collect(),
            }),
        };
        Ok(Motion {
            traj_a: self.trajectories.a.to_trajectory()?,
            traj_b: self.trajectories.b.to_trajectory()?,
            schedule,
            orientation: orientation_from_str(&self.orientation)?,
        })
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// Write to `path`, or to stdout when absent.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
