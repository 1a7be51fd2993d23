//! Load-stepping Newton-Raphson driver shared by the full and the reduced models.
//!
//! A [`Discretization`] maps a vector of unknowns and a load factor to a residual and a
//! sparse tangent. Prescribed unknowns are eliminated: each Newton correction moves them to
//! their ramped targets and the coupling to the free unknowns enters the right-hand side.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rom::ReducedBasis;
use crate::sparse::{CsrMatrix, EnvelopeLdl};

/// Problems up to this many free unknowns are solved with a dense LU.
pub const DENSE_LIMIT: usize = 200;

/// Residual and tangent at one state.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub residual: Vec<f64>,
    pub tangent: CsrMatrix,
}

pub trait Discretization: Sync {
    fn n_unknowns(&self) -> usize;
    /// Constrained unknowns and their prescribed values at load factor 1.
    fn prescribed(&self) -> &[(usize, f64)];
    fn evaluate(&self, u: &[f64], load_factor: f64) -> Result<Evaluation>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Absolute tolerance on the residual norm at the free unknowns (reduced norm for ROMs).
    pub tolerance: f64,
    pub max_iterations: usize,
    /// How many times a failed load step may be split in half.
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tolerance: 1e-6, max_iterations: 25, max_halvings: 3 }
    }
}

/// `n` equal load increments ending at 1.
pub fn uniform_schedule(n: usize) -> Vec<f64> {
    (1..=n).map(|k| k as f64 / n as f64).collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepReport {
    pub load_factor: f64,
    /// Linear solves over all sub-steps of this step.
    pub iterations: usize,
    /// Sub-steps actually executed (1 unless the step was halved).
    pub substeps: usize,
    /// Norm used for the convergence test at each residual evaluation.
    pub residual_norms: Vec<f64>,
    /// Full-order residual norm at the free unknowns at each residual evaluation.
    pub full_residual_norms: Vec<f64>,
    pub assembly_seconds: f64,
    pub solve_seconds: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    /// Converged states at the scheduled load factors.
    pub states: Vec<Vec<f64>>,
    pub steps: Vec<StepReport>,
    /// Set when a step failed after all halvings; `states` then holds the converged prefix.
    pub failure: Option<Error>,
}

impl Trajectory {
    pub fn assembly_seconds(&self) -> f64 {
        self.steps.iter().map(|s| s.assembly_seconds).sum()
    }

    pub fn solve_seconds(&self) -> f64 {
        self.steps.iter().map(|s| s.solve_seconds).sum()
    }

    pub fn total_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.iterations).sum()
    }

    /// Executed sub-steps, including the ones created by halving.
    pub fn executed_substeps(&self) -> usize {
        self.steps.iter().map(|s| s.substeps).sum()
    }

    pub fn into_result(self) -> Result<Self> {
        match self.failure {
            Some(e) => Err(e),
            None => Ok(self),
        }
    }
}

enum Linear {
    Dense,
    Sparse(Option<(CsrMatrix, EnvelopeLdl)>),
}

struct FullSolver {
    free_index: Vec<Option<usize>>,
    n_free: usize,
    linear: Linear,
}

impl FullSolver {
    fn new(n: usize, prescribed: &[(usize, f64)]) -> Self {
        let mut free_index = vec![Some(0); n];
        for &(d, _) in prescribed {
            free_index[d] = None;
        }
        let mut n_free = 0;
        for slot in free_index.iter_mut().flatten() {
            *slot = n_free;
            n_free += 1;
        }
        let linear = if n_free <= DENSE_LIMIT { Linear::Dense } else { Linear::Sparse(None) };
        Self { free_index, n_free, linear }
    }

    fn solve(&mut self, k: &CsrMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
        let kff = k.select(&self.free_index, self.n_free);
        match &mut self.linear {
            Linear::Dense => {
                dense_solve(kff.to_dense(), DVector::from_column_slice(rhs)).map(|x| x.as_slice().to_vec())
            }
            Linear::Sparse(cache) => {
                let reuse = matches!(cache, Some((p, _)) if p.same_pattern(&kff));
                if !reuse {
                    let ldl = EnvelopeLdl::analyze(&kff);
                    *cache = Some((kff.clone(), ldl));
                }
                let (_, ldl) = cache.as_mut().expect("analyzed above");
                ldl.factor(&kff)?;
                Ok(ldl.solve(rhs))
            }
        }
    }
}

/// Dense symmetric solve: Cholesky, falling back to LU for indefinite matrices.
pub fn dense_solve(a: DMatrix<f64>, b: DVector<f64>) -> Result<DVector<f64>> {
    if let Some(ch) = a.clone().cholesky() {
        return Ok(ch.solve(&b));
    }
    let n = a.nrows();
    let lu = a.lu();
    let u = lu.u();
    let scale = (0..n).map(|i| u[(i, i)].abs()).fold(0.0, f64::max);
    if let Some(row) = (0..n).find(|&i| !(u[(i, i)].abs() > 1e-14 * scale)) {
        return Err(Error::SingularSystem { row, pivot: u[(row, row)] });
    }
    lu.solve(&b).ok_or(Error::SingularSystem { row: 0, pivot: 0.0 })
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

struct Driver<'a, P: Discretization + ?Sized> {
    problem: &'a P,
    options: NewtonOptions,
    basis: Option<&'a ReducedBasis>,
    full: FullSolver,
}

impl<P: Discretization + ?Sized> Driver<'_, P> {
    /// Newton iterations at load factor `t` starting from `u`.
    fn newton(&mut self, u: &mut [f64], t: f64, report: &mut StepReport) -> Result<()> {
        let prescribed = self.problem.prescribed();
        let mut last = f64::INFINITY;
        for iter in 0..=self.options.max_iterations {
            let clock = Instant::now();
            let ev = self.problem.evaluate(u, t)?;
            let mut delta = vec![0.0; u.len()];
            let mut moving = false;
            for &(d, v) in prescribed {
                delta[d] = t * v - u[d];
                moving |= delta[d] != 0.0;
            }
            let kd = if moving { Some(ev.tangent.mul_vec(&delta)) } else { None };
            let full_norm =
                norm(self.full.free_index.iter().zip(&ev.residual).filter(|(f, _)| f.is_some()).map(|(_, g)| *g));
            let rhs_full: Vec<f64> = match &kd {
                Some(kd) => ev.residual.iter().zip(kd).map(|(g, k)| g + k).collect(),
                None => ev.residual.clone(),
            };
            let (conv_norm, reduced) = match self.basis {
                Some(basis) => {
                    let gbar = basis.project_vec(&ev.residual);
                    let rhs = if moving { basis.project_vec(&rhs_full) } else { gbar.clone() };
                    (gbar.norm(), Some((basis, rhs)))
                }
                None => (full_norm, None),
            };
            report.residual_norms.push(conv_norm);
            report.full_residual_norms.push(full_norm);
            last = conv_norm;
            if !conv_norm.is_finite() || !full_norm.is_finite() {
                report.assembly_seconds += clock.elapsed().as_secs_f64();
                break;
            }
            if conv_norm <= self.options.tolerance && !moving {
                report.assembly_seconds += clock.elapsed().as_secs_f64();
                return Ok(());
            }
            if iter == self.options.max_iterations {
                report.assembly_seconds += clock.elapsed().as_secs_f64();
                break;
            }
            match reduced {
                Some((basis, gbar)) => {
                    let kbar = basis.project_matrix(&ev.tangent);
                    report.assembly_seconds += clock.elapsed().as_secs_f64();
                    let clock = Instant::now();
                    let da = dense_solve(kbar, -gbar)?;
                    report.solve_seconds += clock.elapsed().as_secs_f64();
                    basis.expand_add(&da, u);
                }
                None => {
                    let rhs: Vec<f64> = self
                        .full
                        .free_index
                        .iter()
                        .zip(&rhs_full)
                        .filter(|(f, _)| f.is_some())
                        .map(|(_, r)| -r)
                        .collect();
                    report.assembly_seconds += clock.elapsed().as_secs_f64();
                    let clock = Instant::now();
                    let dx = self.full.solve(&ev.tangent, &rhs)?;
                    report.solve_seconds += clock.elapsed().as_secs_f64();
                    for (ui, f) in u.iter_mut().zip(&self.full.free_index) {
                        if let Some(k) = f {
                            *ui += dx[*k];
                        }
                    }
                }
            }
            for &(d, _) in prescribed {
                u[d] += delta[d];
            }
            report.iterations += 1;
        }
        Err(Error::NonConvergence { load_factor: t, residual: last })
    }

    /// Advance from `t0` to `t1`, halving the increment on failure.
    fn advance(&mut self, u: &mut Vec<f64>, t0: f64, t1: f64, depth: usize, report: &mut StepReport) -> Result<()> {
        let backup = u.clone();
        report.substeps += 1;
        match self.newton(u, t1, report) {
            Ok(()) => Ok(()),
            Err(e @ (Error::NonConvergence { .. } | Error::ElementInversion { .. } | Error::SingularSystem { .. })) => {
                *u = backup;
                if depth >= self.options.max_halvings {
                    return Err(e);
                }
                let mid = 0.5 * (t0 + t1);
                self.advance(u, t0, mid, depth + 1, report)?;
                self.advance(u, mid, t1, depth + 1, report)
            }
            Err(e) => Err(e),
        }
    }
}

fn run<P: Discretization + ?Sized>(
    problem: &P,
    u0: &[f64],
    schedule: &[f64],
    options: NewtonOptions,
    basis: Option<&ReducedBasis>,
) -> Trajectory {
    let n = problem.n_unknowns();
    let mut traj = Trajectory::default();
    if u0.len() != n {
        traj.failure = Some(Error::DimensionMismatch(format!("initial state has {} entries, expected {n}", u0.len())));
        return traj;
    }
    if let Some(b) = basis {
        if b.n_unknowns() != n {
            traj.failure =
                Some(Error::DimensionMismatch(format!("basis has {} rows, problem has {n} unknowns", b.n_unknowns())));
            return traj;
        }
    }
    let mut driver = Driver { problem, options, basis, full: FullSolver::new(n, problem.prescribed()) };
    let mut u = u0.to_vec();
    let mut t0 = 0.0;
    for &t1 in schedule {
        let mut report = StepReport { load_factor: t1, ..Default::default() };
        let outcome = driver.advance(&mut u, t0, t1, 0, &mut report);
        traj.steps.push(report);
        if let Err(e) = outcome {
            traj.steps.pop();
            traj.failure = Some(e);
            return traj;
        }
        traj.states.push(u.clone());
        t0 = t1;
    }
    traj
}

/// Full-order load stepping. A failed step ends the trajectory with `failure` set.
pub fn solve_full<P: Discretization + ?Sized>(
    problem: &P,
    u0: &[f64],
    schedule: &[f64],
    options: NewtonOptions,
) -> Trajectory {
    run(problem, u0, schedule, options, None)
}

/// Galerkin-reduced load stepping: every correction lies in the span of `basis`, and the
/// convergence test uses the projected residual. States are stored in full.
pub fn solve_reduced<P: Discretization + ?Sized>(
    problem: &P,
    basis: &ReducedBasis,
    u0: &[f64],
    schedule: &[f64],
    options: NewtonOptions,
) -> Trajectory {
    run(problem, u0, schedule, options, Some(basis))
}

/// Full-order residual norm at the free unknowns.
pub fn free_residual_norm<P: Discretization + ?Sized>(problem: &P, u: &[f64], t: f64) -> Result<f64> {
    let ev = problem.evaluate(u, t)?;
    let mut fixed = vec![false; u.len()];
    for &(d, _) in problem.prescribed() {
        fixed[d] = true;
    }
    Ok(norm(ev.residual.iter().zip(&fixed).filter(|(_, f)| !**f).map(|(g, _)| *g)))
}
