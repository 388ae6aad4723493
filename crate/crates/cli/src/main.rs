//! `discpair`: plan, verify, fuzz and render two-disc motions.
//!
//! Exit status is 0 on success, 1 on usage or input errors, and 2 when a
//! motion could not be certified.

mod fuzz;
mod io;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};

use discpair::motion::couple;
use discpair::oracle::{certify, pivot_grid_search, Certificate, GridSpec};
use discpair::planner::plan;
use discpair::support::Orientation;

use io::{emit, read_json, to_json, InstanceFile, PlanFile, RefusalFile};

const DEFAULT_QUAD_TOL: f64 = 1e-10;

#[derive(Parser)]
#[command(
    name = "discpair",
    version,
    about = "Shortest motions for two discs in the plane"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrientationArg {
    Auto,
    Ccw,
    Cw,
}

#[derive(Subcommand)]
enum Command {
    /// Plan a motion for an instance file and certify it.
    Plan {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        orientation: OrientationArg,
        /// Replace the phased schedule with a jointly moving one.
        #[arg(long)]
        couple: bool,
        /// Plan file to write; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Re-run the certificate on a plan file.
    Verify {
        plan: PathBuf,
        #[arg(long)]
        grid_step: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_QUAD_TOL)]
        quad_tol: f64,
    },
    /// Plan and certify seeded random instances.
    Fuzz {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        /// Coordinates are drawn from [-box, box].
        #[arg(long = "box", default_value_t = 10.0)]
        half_width: f64,
        /// JSON summary file; stdout when absent.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Draw a plan file as SVG.
    Render {
        plan: PathBuf,
        #[arg(long)]
        svg: PathBuf,
        #[arg(long, default_value_t = 9)]
        frames: usize,
    },
}

fn status(cert: &Certificate) -> ExitCode {
    if cert.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn grid_for(inst: &discpair::geom::Instance, step: Option<f64>) -> Result<GridSpec> {
    Ok(match step {
        Some(step) => GridSpec::new(step, 2.0 * inst.s)?,
        None => GridSpec::default_for(inst),
    })
}

fn write_svg(path: &Path, file: &PlanFile, frames: usize) -> Result<()> {
    let inst = file.instance.to_instance()?;
    let text = svg::render(&inst, &file.motion()?, &file.labels(), frames);
    emit(Some(path), &text)
}

fn run_plan(
    input: &Path,
    orientation: OrientationArg,
    coupled: bool,
    out: Option<&Path>,
    svg_path: Option<&Path>,
) -> Result<ExitCode> {
    let inst = read_json::<InstanceFile>(input)?.to_instance()?;
    let grid = GridSpec::default_for(&inst);
    let report = match plan(&inst) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("planner failed: {e}; writing the grid-oracle motion instead");
            let oracle = pivot_grid_search(&inst, grid, None)?;
            let cert = certify(&inst, &oracle.motion, grid, DEFAULT_QUAD_TOL)?;
            let file = PlanFile::fallback(&inst, &oracle, &cert);
            emit(out, &to_json(&file)?)?;
            if let Some(p) = svg_path {
                write_svg(p, &file, 9)?;
            }
            return Ok(ExitCode::from(2));
        }
    };
    let requested = match orientation {
        OrientationArg::Auto => None,
        OrientationArg::Ccw => Some(Orientation::Ccw),
        OrientationArg::Cw => Some(Orientation::Cw),
    };
    let motion = match requested {
        None => Some(&report.chosen),
        Some(_) if report.chosen.orientation == Orientation::Straight => Some(&report.chosen),
        Some(o) => report.candidate(o),
    };
    let Some(motion) = motion else {
        let o = requested.expect("auto always has a motion");
        let refusal = RefusalFile::new(&inst, &report, o);
        eprintln!("no {} motion: {}", o.as_str(), refusal.reason);
        emit(out, &to_json(&refusal)?)?;
        return Ok(ExitCode::from(2));
    };
    let motion = if coupled {
        couple(motion)?
    } else {
        motion.clone()
    };
    let cert = certify(&inst, &motion, grid, DEFAULT_QUAD_TOL)?;
    let file = PlanFile::new(&inst, &report, &motion, &cert);
    emit(out, &to_json(&file)?)?;
    if let Some(p) = svg_path {
        write_svg(p, &file, 9)?;
    }
    if !cert.passed() {
        eprintln!("certificate failed");
    }
    Ok(status(&cert))
}

fn run_verify(path: &Path, grid_step: Option<f64>, quad_tol: f64) -> Result<ExitCode> {
    let file: PlanFile = read_json(path)?;
    let inst = file.instance.to_instance()?;
    let motion = file.motion()?;
    let cert = certify(&inst, &motion, grid_for(&inst, grid_step)?, quad_tol)?;
    println!(
        "{:<16} {:<6} {:>14} {:>14}",
        "check", "result", "value", "limit"
    );
    for c in &cert.checks {
        let verdict = if c.passed { "pass" } else { "FAIL" };
        println!(
            "{:<16} {:<6} {:>14.6e} {:>14.6e}",
            c.name, verdict, c.value, c.limit
        );
    }
    println!(
        "{}",
        if cert.passed() {
            "certified"
        } else {
            "not certified"
        }
    );
    Ok(status(&cert))
}

fn run_fuzz(cfg: fuzz::FuzzConfig, report_path: Option<&Path>) -> Result<ExitCode> {
    let report = fuzz::run(&cfg)?;
    emit(report_path, &to_json(&report)?)?;
    eprintln!("{}/{} instances certified", report.certified, report.n);
    Ok(if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Plan {
            input,
            orientation,
            couple,
            out,
            svg,
        } => run_plan(&input, orientation, couple, out.as_deref(), svg.as_deref()),
        Command::Verify {
            plan,
            grid_step,
            quad_tol,
        } => run_verify(&plan, grid_step, quad_tol),
        Command::Fuzz {
            n,
            seed,
            s,
            half_width,
            report,
        } => {
            let cfg = fuzz::FuzzConfig {
                n,
                seed,
                s,
                half_width,
                quad_tol: DEFAULT_QUAD_TOL,
            };
            run_fuzz(cfg, report.as_deref())
        }
        Command::Render { plan, svg, frames } => {
            let file: PlanFile = read_json(&plan)?;
            write_svg(&svg, &file, frames)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
