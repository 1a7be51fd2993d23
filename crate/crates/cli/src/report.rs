//! Run reports, curve files and run comparison.

use std::fmt::Write as _;
use std::path::Path;

use cbmor_core::coupled::CurvePoint;
use cbmor_core::solver::Trajectory;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::persist::{read_json, read_matrix, read_text};

pub const CURVE_HEADER: &str = "step,load_factor,displacement_mm,force_N,newton_iters,assembly_s,solve_s";
pub const CURVE_FILE: &str = "curve.csv";
pub const REPORT_FILE: &str = "report.json";
pub const STATES_FILE: &str = "states.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DofCounts {
    /// Stacked substructure DOFs.
    pub full: usize,
    /// Unknowns after eliminating multipliers and slave DOFs; equals `full` for penalty runs.
    pub condensed: usize,
    pub reduced: Option<usize>,
    /// `full / reduced`.
    pub reduction_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepEntry {
    pub step: usize,
    pub load_factor: f64,
    pub iterations: usize,
    pub substeps: usize,
    pub residual_norms: Vec<f64>,
    pub full_residual_norms: Vec<f64>,
}

/// Wall-clock split. Fractions are relative to `total_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_s: f64,
    pub assembly_s: f64,
    pub solve_s: f64,
    pub assembly_fraction: f64,
    pub solve_fraction: f64,
}

impl Timing {
    pub fn new(total_s: f64, assembly_s: f64, solve_s: f64) -> Self {
        let total_s = total_s.max(assembly_s + solve_s);
        let frac = |x: f64| if total_s > 0.0 { x / total_s } else { 0.0 };
        Self { total_s, assembly_s, solve_s, assembly_fraction: frac(assembly_s), solve_fraction: frac(solve_s) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub model: String,
    pub units: String,
    pub seed: u64,
    pub converged: bool,
    pub failure: Option<String>,
    pub load_steps: usize,
    pub dofs: DofCounts,
    pub penalty_epsilon: Option<f64>,
    pub ignored_dirichlet: usize,
    pub steps: Vec<StepEntry>,
    pub timing: Timing,
}

pub fn step_entries(traj: &Trajectory) -> Vec<StepEntry> {
    traj.steps
        .iter()
        .enumerate()
        .map(|(k, s)| StepEntry {
            step: k + 1,
            load_factor: s.load_factor,
            iterations: s.iterations,
            substeps: s.substeps,
            residual_norms: s.residual_norms.clone(),
            full_residual_norms: s.full_residual_norms.clone(),
        })
        .collect()
}

pub fn curve_csv(curve: &[CurvePoint]) -> String {
    let mut out = format!("{CURVE_HEADER}\n");
    for p in curve {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e}",
            p.step, p.load_factor, p.displacement, p.force, p.iterations, p.assembly_seconds, p.solve_seconds
        )
        .unwrap();
    }
    out
}

pub fn parse_curve(text: &str) -> Result<Vec<CurvePoint>, String> {
    let mut lines = text.lines();
    if lines.next() != Some(CURVE_HEADER) {
        return Err(format!("expected header `{CURVE_HEADER}`"));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 7 {
                return Err(format!("line {}: expected 7 fields, found {}", i + 2, f.len()));
            }
            let num = |k: usize| f[k].parse::<f64>().map_err(|e| format!("line {}: field {}: {e}", i + 2, k + 1));
            let int = |k: usize| f[k].parse::<usize>().map_err(|e| format!("line {}: field {}: {e}", i + 2, k + 1));
            Ok(CurvePoint {
                step: int(0)?,
                load_factor: num(1)?,
                displacement: num(2)?,
                force: num(3)?,
                iterations: int(4)?,
                assembly_seconds: num(5)?,
                solve_seconds: num(6)?,
            })
        })
        .collect()
}

pub fn read_curve(dir: &Path) -> CliResult<Vec<CurvePoint>> {
    let path = dir.join(CURVE_FILE);
    parse_curve(&read_text(&path)?).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Timings normalized by the reference run's total time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedTiming {
    pub assembly: f64,
    pub solve: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub points: usize,
    /// `max_k |F_test - F_ref| / max_k |F_ref|`.
    pub max_relative_force_error: f64,
    /// `||F_test - F_ref||_2 / ||F_ref||_2`.
    pub l2_relative_force_error: f64,
    /// Largest nodal displacement difference [mm], when both runs stored states of the same
    /// layout.
    pub max_displacement_error: Option<f64>,
    pub reference_timing: Option<NormalizedTiming>,
    pub test_timing: Option<NormalizedTiming>,
}

pub fn compare_curves(reference: &[CurvePoint], test: &[CurvePoint]) -> CliResult<(f64, f64)> {
    if reference.len() != test.len() {
        return Err(CliError::config(format!(
            "load schedules differ: {} reference points, {} test points",
            reference.len(),
            test.len()
        )));
    }
    for (a, b) in reference.iter().zip(test) {
        if (a.load_factor - b.load_factor).abs() > 1e-12 {
            return Err(CliError::config(format!(
                "load schedules differ at step {}: {} vs {}",
                a.step, a.load_factor, b.load_factor
            )));
        }
    }
    let fmax = reference.iter().map(|p| p.force.abs()).fold(0.0, f64::max);
    let dmax = reference.iter().zip(test).map(|(a, b)| (a.force - b.force).abs()).fold(0.0, f64::max);
    let l2_ref: f64 = reference.iter().map(|p| p.force * p.force).sum::<f64>().sqrt();
    let l2_diff: f64 = reference.iter().zip(test).map(|(a, b)| (a.force - b.force).powi(2)).sum::<f64>().sqrt();
    let rel = |num: f64, den: f64| {
        if den > 0.0 {
            num / den
        } else if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    };
    Ok((rel(dmax, fmax), rel(l2_diff, l2_ref)))
}

/// Compares two run directories.
pub fn compare_runs(reference: &Path, test: &Path) -> CliResult<Comparison> {
    let (cr, ct) = (read_curve(reference)?, read_curve(test)?);
    let (max_rel, l2_rel) = compare_curves(&cr, &ct)?;
    let (sr, st) = (reference.join(STATES_FILE), test.join(STATES_FILE));
    let states = if sr.is_file() && st.is_file() { Some((read_matrix(&sr)?.0, read_matrix(&st)?.0)) } else { None };
    let max_displacement_error = match states {
        Some((a, b)) if a.shape() == b.shape() => {
            let mut worst = 0.0f64;
            for c in 0..a.ncols() {
                for n in 0..a.nrows() / 2 {
                    let dx = a[(2 * n, c)] - b[(2 * n, c)];
                    let dy = a[(2 * n + 1, c)] - b[(2 * n + 1, c)];
                    worst = worst.max(dx.hypot(dy));
                }
            }
            Some(worst)
        }
        _ => None,
    };
    let (rr, rt) = (reference.join(REPORT_FILE), test.join(REPORT_FILE));
    let (reference_timing, test_timing) = if rr.is_file() && rt.is_file() {
        let a: RunReport = read_json(&rr)?;
        let b: RunReport = read_json(&rt)?;
        let norm = |t: &Timing| {
            let d = a.timing.total_s;
            if d > 0.0 {
                NormalizedTiming { assembly: t.assembly_s / d, solve: t.solve_s / d, total: t.total_s / d }
            } else {
                NormalizedTiming { assembly: 0.0, solve: 0.0, total: 0.0 }
            }
        };
        (Some(norm(&a.timing)), Some(norm(&b.timing)))
    } else {
        (None, None)
    };
    Ok(Comparison {
        points: cr.len(),
        max_relative_force_error: max_rel,
        l2_relative_force_error: l2_rel,
        max_displacement_error,
        reference_timing,
        test_timing,
    })
}
