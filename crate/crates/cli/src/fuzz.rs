//! Seeded random instances, planned and certified in bulk.

use std::collections::BTreeMap;

use anyhow::{bail, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use discpair::geom::{Instance, Placement, Point};
use discpair::oracle::{certify, Certificate, GridSpec, CHECK_NAMES};
use discpair::planner::plan;

use crate::io::InstanceFile;

pub const RETRY_CAP: usize = 10_000;

#[derive(Debug, Clone, Copy)]
pub struct FuzzConfig {
    pub n: usize,
    pub seed: u64,
    pub s: f64,
    pub half_width: f64,
    pub quad_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FuzzFailure {
    pub index: usize,
    pub instance: InstanceFile,
    pub failed_checks: Vec<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Residuals {
    pub bound_equality: f64,
    pub quadrature: f64,
    pub separation_deficit: f64,
    pub min_grid_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FuzzReport {
    pub n: usize,
    pub seed: u64,
    pub s: f64,
    #[serde(rename = "box")]
    pub half_width: f64,
    pub certified: usize,
    pub pass_counts: BTreeMap<String, usize>,
    pub cases: BTreeMap<String, usize>,
    pub zones: BTreeMap<String, usize>,
    pub methods: BTreeMap<String, usize>,
    pub max_residuals: Residuals,
    pub failures: Vec<FuzzFailure>,
}

impl FuzzReport {
    pub fn all_passed(&self) -> bool {
        self.certified == self.n
    }
}

fn placement(rng: &mut ChaCha8Rng, s: f64, half: f64) -> Result<Placement> {
    let mut point = || Point::new(rng.gen_range(-half..=half), rng.gen_range(-half..=half));
    for _ in 0..RETRY_CAP {
        let p = Placement::new(point(), point());
        if p.separation() >= s {
            return Ok(p);
        }
    }
    bail!("no compatible placement found in {RETRY_CAP} attempts; the box is too small for s = {s}")
}

pub fn generate(cfg: &FuzzConfig) -> Result<Vec<Instance>> {
    if cfg.n == 0 {
        bail!("--n must be at least 1");
    }
    if !(cfg.s > 0.0 && cfg.half_width > 0.0) {
        bail!("--s and --box must be positive");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.n)
        .map(|_| {
            let p0 = placement(&mut rng, cfg.s, cfg.half_width)?;
            let p1 = placement(&mut rng, cfg.s, cfg.half_width)?;
            Ok(Instance::new(cfg.s, p0, p1)?)
        })
        .collect()
}

/// Labels and certificate of one instance, or the error that stopped it.
struct Outcome {
    case: String,
    method: String,
    zone: Option<String>,
    certificate: Certificate,
}

fn evaluate(inst: &Instance, quad_tol: f64) -> Result<Outcome, String> {
    let rep = plan(inst).map_err(|e| e.to_string())?;
    let certificate = certify(inst, &rep.chosen, GridSpec::default_for(inst), quad_tol)
        .map_err(|e| e.to_string())?;
    Ok(Outcome {
        case: rep.case.as_str().to_string(),
        method: rep.method.as_str().to_string(),
        zone: rep.zone.map(|z| {
            format!(
                "{} {} {}",
                rep.case.as_str(),
                z.zone.as_str(),
                z.circles.as_str()
            )
        }),
        certificate,
    })
}

pub fn run(cfg: &FuzzConfig) -> Result<FuzzReport> {
    let insts = generate(cfg)?;
    // Collected in index order, so the summary does not depend on scheduling.
    let outcomes: Vec<_> = insts
        .par_iter()
        .map(|i| evaluate(i, cfg.quad_tol))
        .collect();
    let mut report = FuzzReport {
        n: cfg.n,
        seed: cfg.seed,
        s: cfg.s,
        half_width: cfg.half_width,
        certified: 0,
        pass_counts: CHECK_NAMES.iter().map(|&c| (c.to_string(), 0)).collect(),
        cases: BTreeMap::new(),
        zones: BTreeMap::new(),
        methods: BTreeMap::new(),
        max_residuals: Residuals {
            min_grid_gap: f64::MAX,
            ..Residuals::default()
        },
        failures: Vec::new(),
    };
    for (index, (inst, outcome)) in insts.iter().zip(outcomes).enumerate() {
        let failure = |checks: Vec<String>, error: Option<String>| FuzzFailure {
            index,
            instance: InstanceFile::from_instance(inst),
            failed_checks: checks,
            error,
        };
        let out = match outcome {
            Ok(o) => o,
            Err(e) => {
                report.failures.push(failure(Vec::new(), Some(e)));
                continue;
            }
        };
        *report.cases.entry(out.case).or_default() += 1;
        *report.methods.entry(out.method).or_default() += 1;
        if let Some(z) = out.zone {
            *report.zones.entry(z).or_default() += 1;
        }
        let cert = out.certificate;
        let r = &mut report.max_residuals;
        for c in &cert.checks {
            if c.passed {
                *report.pass_counts.get_mut(c.name).expect("known check") += 1;
            }
            match c.name {
                "feasibility" => r.separation_deficit = r.separation_deficit.max(c.value),
                "bound-equality" => r.bound_equality = r.bound_equality.max(c.value),
                "quadrature" => r.quadrature = r.quadrature.max(c.value),
                "grid-oracle" if c.value.is_finite() => {
                    r.min_grid_gap = r.min_grid_gap.min(c.value)
                }
                _ => {}
            }
        }
        if cert.passed() {
            report.certified += 1;
        } else {
            let failed = cert
                .checks
                .iter()
                .filter(|c| !c.passed)
                .map(|c| c.name.to_string())
                .collect();
            report.failures.push(failure(failed, None));
        }
    }
    if report.max_residuals.min_grid_gap == f64::MAX {
        report.max_residuals.min_grid_gap = 0.0;
    }
    Ok(report)
}
