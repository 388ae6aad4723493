//! Acceptance criteria 1 to 8. Runs without the libtest harness so every
//! criterion prints its verdict line; exits non-zero if any fails.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use discpair::geom::{reflect_instance, Instance, Placement};
use discpair::motion::{
    contact_interval_count, couple, is_trace_convex, min_separation, motion_length,
    placement_angle_profile, Motion,
};
use discpair::oracle::{pivot_grid_search, GridSpec};
use discpair::planner::{plan, CaseLabel, Method, PhaseOrder, PlanReport, Zone};
use discpair::support::{
    optimal_length_bound, quadrature_length_bound, swept_interval, Orientation,
};

use common::{corpus, fixture, placement, rel_close, rng};

/// A named corpus with its plans.
struct Corpus {
    name: &'static str,
    insts: Vec<Instance>,
    reports: Vec<PlanReport>,
}

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn plans(insts: &[Instance]) -> Vec<PlanReport> {
    insts
        .iter()
        .map(|i| plan(i).unwrap_or_else(|e| panic!("plan failed on {i:?}: {e}")))
        .collect()
}

fn criterion_1(corpora: &[Corpus]) -> Verdict {
    combine(corpora, |c| bound_equality(&c.insts, &c.reports))
}

fn bound_equality(insts: &[Instance], reports: &[PlanReport]) -> Verdict {
    let start = Instant::now();
    let (mut worst_eq, mut worst_quad) = (0.0f64, 0.0f64);
    let mut bad = 0;
    for (i, r) in insts.iter().zip(reports) {
        let b = optimal_length_bound(i);
        let q = quadrature_length_bound(i, 1e-10).expect("quadrature");
        let eq = (r.lengths.chosen - b.min()).abs();
        let quad = (q.ccw - b.ccw).abs().max((q.cw - b.cw).abs());
        worst_eq = worst_eq.max(eq);
        worst_quad = worst_quad.max(quad);
        if eq > 1e-6 || quad > 1e-9 {
            bad += 1;
        }
    }
    verdict(
        bad == 0,
        format!(
            "{} instances, {bad} violations, max |plan - bound| = {worst_eq:.2e}, max |closed - quadrature| = {worst_quad:.2e}, {:.1?}",
            insts.len(),
            start.elapsed()
        ),
    )
}

fn criterion_2(corpora: &[Corpus]) -> Verdict {
    combine(corpora, |c| structure(&c.insts, &c.reports))
}

fn structure(insts: &[Instance], reports: &[PlanReport]) -> Verdict {
    let (mut worst_sep, mut worst_prims) = (f64::INFINITY, 0usize);
    let mut bad = 0;
    for (i, r) in insts.iter().zip(reports) {
        let m = &r.chosen;
        let sep = min_separation(m) - i.s;
        let (na, nb) = m.primitive_count();
        let convex = is_trace_convex(&m.traj_a, i.p0.a, i.p1.a)
            && is_trace_convex(&m.traj_b, i.p0.b, i.p1.b);
        worst_sep = worst_sep.min(sep);
        worst_prims = worst_prims.max(na.max(nb));
        if sep < -1e-7 || na.max(nb) > 6 || !convex {
            bad += 1;
        }
    }
    verdict(
        bad == 0,
        format!("{bad} violations, min (separation - s) = {worst_sep:.2e}, max primitives per trajectory = {worst_prims}"),
    )
}

fn criterion_3() -> Verdict {
    let mut r = rng(3);
    let (mut n, mut bad, mut worst) = (0, 0, 0.0f64);
    while n < 1000 {
        let i = common::instance(&mut r, 1.0, 10.0);
        let rep = plan(&i).expect("plan");
        if !rep.case.is_straight() {
            continue;
        }
        n += 1;
        let want = i.chord_a() + i.chord_b();
        let rel = (rep.lengths.chosen - want).abs() / want.max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        if rel > 1e-12 {
            bad += 1;
        }
    }
    verdict(
        bad == 0,
        format!("{n} straight-case instances, {bad} violations, max relative error = {worst:.2e}"),
    )
}

fn criterion_4(corpora: &[Corpus]) -> Verdict {
    combine(corpora, |c| sandwich(&c.insts, &c.reports))
}

fn sandwich(insts: &[Instance], reports: &[PlanReport]) -> Verdict {
    let start = Instant::now();
    let (mut bad, mut worst_gap, mut worst_growth) = (0, 0.0f64, f64::NEG_INFINITY);
    for (i, r) in insts.iter().zip(reports).take(500) {
        let len = r.lengths.chosen;
        let coarse = GridSpec::new(0.05, 2.0 * i.s).expect("grid");
        let g1 = pivot_grid_search(i, coarse, None)
            .expect("oracle")
            .best_length;
        let g2 = pivot_grid_search(i, coarse.halved(), None)
            .expect("oracle")
            .best_length;
        let (gap1, gap2) = (g1 - len, g2 - len);
        worst_gap = worst_gap.max(gap1);
        worst_growth = worst_growth.max(gap2 - gap1);
        let ok = (-1e-9..=0.2).contains(&gap1) && gap2 >= -1e-9 && gap2 <= gap1 + 1e-9;
        if !ok {
            bad += 1;
        }
    }
    verdict(
        bad == 0,
        format!(
            "500 instances, {bad} violations, max gap at step 0.05 = {worst_gap:.2e}, max gap growth on halving = {worst_growth:.2e}, {:.1?}",
            start.elapsed()
        ),
    )
}

fn chosen(i: &Instance) -> f64 {
    plan(i).expect("plan").lengths.chosen
}

fn criterion_5(corpora: &[Corpus]) -> Verdict {
    combine(corpora, |c| symmetry(&c.insts, &c.reports))
}

fn symmetry(insts: &[Instance], reports: &[PlanReport]) -> Verdict {
    let mut r = rng(5);
    let mut fails: Vec<&str> = Vec::new();
    let mut degenerate = 0;
    for (i, rep) in insts.iter().zip(reports).take(1000) {
        let base = rep.lengths.chosen;

        let interval = swept_interval(i);
        if interval.measure() == 0.0 {
            degenerate += 1;
        } else {
            let m = plan(&reflect_instance(i)).expect("plan");
            let same = |a: Option<f64>, b: Option<f64>| match (a, b) {
                (Some(x), Some(y)) => (x - y).abs() <= 1e-9 * x.max(1.0),
                (None, None) => true,
                _ => false,
            };
            if !same(rep.lengths.ccw, m.lengths.cw) || !same(rep.lengths.cw, m.lengths.ccw) {
                fails.push("reflection");
            }
        }

        let theta: f64 = rand::Rng::gen_range(&mut r, -PI..PI);
        let shift = common::point(&mut r, 10.0);
        let moved = i.map(|p| p.rotate(theta) + shift);
        if !rel_close(chosen(&moved), base, 1e-9) {
            fails.push("rigid");
        }

        for lambda in [0.1, 3.0, 10.0] {
            let scaled = Instance::new(
                i.s * lambda,
                i.p0.map(|p| p * lambda),
                i.p1.map(|p| p * lambda),
            )
            .expect("scaled");
            if !rel_close(chosen(&scaled), lambda * base, 1e-9) {
                fails.push("scaling");
            }
        }

        if (chosen(&i.reversed()) - base).abs() > 1e-9 * base.max(1.0) {
            fails.push("reversal");
        }
        if (chosen(&i.swap_roles()) - base).abs() > 1e-9 * base.max(1.0) {
            fails.push("role swap");
        }
    }
    fails.sort_unstable();
    fails.dedup();
    verdict(
        fails.is_empty(),
        format!(
            "1000 instances ({degenerate} with a degenerate interval skipped for reflection), failing transforms: {:?}",
            fails
        ),
    )
}

fn criterion_6() -> Verdict {
    let mut r = rng(6);
    let (mut bad, mut worst_slack) = (0, f64::NEG_INFINITY);
    let s = 1.0;
    let d = |p: Placement, q: Placement| chosen(&Instance::new(s, p, q).expect("instance"));
    for _ in 0..1000 {
        let (p, q, w) = (
            placement(&mut r, s, 4.0),
            placement(&mut r, s, 4.0),
            placement(&mut r, s, 4.0),
        );
        let (pq, qp, qw, pw) = (d(p, q), d(q, p), d(q, w), d(p, w));
        let slack = pw - (pq + qw);
        worst_slack = worst_slack.max(slack);
        if d(p, p) != 0.0 || (pq - qp).abs() > 1e-9 || slack > 1e-9 {
            bad += 1;
        }
    }
    verdict(
        bad == 0,
        format!("1000 triples, {bad} violations, max d(P,R) - d(P,Q) - d(Q,R) = {worst_slack:.2e}"),
    )
}

/// Largest decrease of the angle profile against the motion's sense.
fn worst_reversal(m: &Motion, n: usize) -> f64 {
    let prof = placement_angle_profile(m, n);
    let steps: Vec<f64> = prof.windows(2).map(|w| w[1] - w[0]).collect();
    let against = |dir: f64| steps.iter().map(|&d| -dir * d).fold(0.0f64, f64::max);
    match m.orientation {
        Orientation::Ccw => against(1.0),
        Orientation::Cw => against(-1.0),
        Orientation::Straight => against(1.0).min(against(-1.0)),
    }
}

fn criterion_7(corpora: &[Corpus]) -> Verdict {
    let mut v = combine(corpora, |c| coupling(&c.insts, &c.reports));
    let f = coupling_fixture();
    v.passed &= f.passed;
    v.detail = format!("{}; {}", v.detail, f.detail);
    v
}

fn coupling(insts: &[Instance], reports: &[PlanReport]) -> Verdict {
    let start = Instant::now();
    let (mut bad, mut worst_rev, mut worst_dl) = (0, 0.0f64, 0.0f64);
    let (mut dipped, mut contacts_decoupled, mut contacts_coupled) = (0, 0usize, 0usize);
    for (i, r) in insts.iter().zip(reports) {
        let m = &r.chosen;
        let c = couple(m).expect("couple");
        let rev = worst_reversal(&c, 10_000);
        let dl = (motion_length(&c) - motion_length(m)).abs();
        worst_rev = worst_rev.max(rev);
        worst_dl = worst_dl.max(dl);
        if rev > 1e-9 || dl > 1e-9 || min_separation(&c) < i.s - 1e-7 {
            bad += 1;
        }
        if worst_reversal(m, 2_000) > 1e-9 {
            dipped += 1;
            contacts_decoupled += contact_interval_count(m, i.s, 2_000, 1e-9);
            contacts_coupled += contact_interval_count(&c, i.s, 2_000, 1e-9);
        }
    }

    verdict(
        bad == 0,
        format!(
            "{} instances, {bad} violations, max reversal = {worst_rev:.2e} rad, max length change = {worst_dl:.2e}, \
             {dipped} decoupled motions reversed, contact intervals {contacts_decoupled} decoupled vs {contacts_coupled} coupled, {:.1?}",
            insts.len(),
            start.elapsed()
        ),
    )
}

/// Fixture whose decoupled profile reverses.
fn coupling_fixture() -> Verdict {
    let f = fixture((0.9, 0.6), (0.0, 0.0), (1.9, 0.3), (3.6, 0.0));
    let rep = plan(&f).expect("plan");
    let fixture_zone = rep.case == CaseLabel::Case3a && rep.zone.map(|z| z.zone) == Some(Zone::III);
    let before = worst_reversal(&rep.chosen, 10_000);
    let c = couple(&rep.chosen).expect("couple");
    let after = worst_reversal(&c, 10_000);
    let fdl = (motion_length(&c) - rep.lengths.chosen).abs();
    verdict(
        fixture_zone && before > 1e-6 && after <= 1e-9 && fdl <= 1e-9,
        format!("fixture (Case3a zone III) reversal {before:.2e} -> {after:.2e}, length change {fdl:.2e}"),
    )
}

/// Run `check` on every corpus; pass iff all pass.
fn combine(corpora: &[Corpus], check: impl Fn(&Corpus) -> Verdict) -> Verdict {
    let parts: Vec<(&str, Verdict)> = corpora.iter().map(|c| (c.name, check(c))).collect();
    verdict(
        parts.iter().all(|(_, v)| v.passed),
        parts
            .iter()
            .map(|(n, v)| format!("[{n}] {}", v.detail))
            .collect::<Vec<_>>()
            .join("; "),
    )
}

fn criterion_8() -> Verdict {
    let special = fixture((1.0, 0.4), (0.0, 0.0), (3.0, 0.4), (4.0, 0.0));
    let rep = plan(&special).expect("plan");
    let (special_ok, pivot_x) = match rep.pivot {
        Some((PhaseOrder::Aba, p)) => ((p.x - 2.0).abs() <= 1e-9, p.x),
        _ => (false, f64::NAN),
    };

    let blocked = fixture((0.3, -0.96), (0.0, 0.0), (1.9, -0.96), (2.2, 0.0));
    let rep = plan(&blocked).expect("plan");
    let q = quadrature_length_bound(&blocked, 1e-10).expect("quadrature");
    let cw = rep.lengths.cw.unwrap_or(f64::INFINITY);
    let blocked_ok = rep.forced_clockwise
        && rep.ccw.is_none()
        && cw < q.ccw
        && rep.chosen.orientation == Orientation::Cw;
    verdict(
        special_ok && blocked_ok,
        format!(
            "symmetric pivot x = {pivot_x:.12} (bisector 2), forced clockwise = {}, cw {cw:.6} < quadrature ccw {:.6}",
            rep.forced_clockwise, q.ccw
        ),
    )
}

fn build(name: &'static str, seed: u64, half: f64) -> Corpus {
    let insts = corpus(seed, 10_000, 1.0, half);
    let t = Instant::now();
    let reports = plans(&insts);
    let planning = t.elapsed();
    let mut methods = std::collections::BTreeMap::<&str, usize>::new();
    let mut cases = std::collections::BTreeMap::<&str, usize>::new();
    for r in &reports {
        *methods.entry(r.method.as_str()).or_default() += 1;
        *cases.entry(r.case.as_str()).or_default() += 1;
    }
    let count = |m: Method| methods.get(m.as_str()).copied().unwrap_or(0);
    let zone_share = count(Method::Zone) as f64
        / (count(Method::Zone) + count(Method::PivotSearch)).max(1) as f64;
    println!("corpus [{name}]: 10000 instances, s = 1, box [-{half},{half}]^2, planned in {planning:.1?}");
    println!("  cases: {cases:?}");
    println!("  methods: {methods:?}");
    println!(
        "  zone construction optimal on {:.1}% of non-straight instances",
        100.0 * zone_share
    );
    Corpus {
        name,
        insts,
        reports,
    }
}

fn main() -> ExitCode {
    let corpora = [build("box 10", 1, 10.0), build("box 2", 2, 2.0)];

    let results = [
        ("bound-construction equality", criterion_1(&corpora)),
        ("feasibility and structure", criterion_2(&corpora)),
        ("straight-case exactness", criterion_3()),
        ("oracle sandwich", criterion_4(&corpora)),
        ("symmetry suite", criterion_5(&corpora)),
        ("metric axioms", criterion_6()),
        ("coupling", criterion_7(&corpora)),
        ("derived fixtures", criterion_8()),
    ];
    let mut all = true;
    for (k, (name, v)) in results.iter().enumerate() {
        all &= v.passed;
        println!(
            "criterion {} {}: {} ({})",
            k + 1,
            if v.passed { "PASS" } else { "FAIL" },
            name,
            v.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
