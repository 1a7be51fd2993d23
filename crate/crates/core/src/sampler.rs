//! Randomized snapshot sampling.
//!
//! Boundary conditions on selected edges are parametrized by a translation and a rotation
//! about the edge midpoint. Parameters are drawn from truncated normal distributions. A
//! full solve runs only when the current reduced basis fails the residual criterion at the
//! drawn point; the new snapshots then refresh the basis and a bisection picks the mode
//! count that just meets the tolerance.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::coupled::{newton_solve_coupled, CoupledModel, CoupledSystem};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{InterfacePairing, Mesh};
use crate::mechanics::{Dirichlet, Loads, NeoHooke, SingleDomain, Substructure};
use crate::pod::{compute_pod, default_mode_count, PodBasis, SnapshotMatrix};
use crate::rom::{block_modes, ModeCounts, ReducedBasis, ReducedModel};
use crate::solver::{solve_full, solve_reduced, NewtonOptions, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    X,
    Y,
    Both,
}

impl Component {
    pub fn indices(self) -> &'static [usize] {
        match self {
            Component::X => &[0],
            Component::Y => &[1],
            Component::Both => &[0, 1],
        }
    }
}

/// Parametrized displacement of one edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeParametrization {
    pub edge: String,
    pub component: Component,
    /// Open translation range [mm], one per constrained component.
    pub translation: Vec<(f64, f64)>,
    /// Open rotation range [degrees] about the edge midpoint.
    pub rotation: (f64, f64),
}

impl EdgeParametrization {
    pub fn new(edge: &str, component: Component, translation: Vec<(f64, f64)>, rotation: (f64, f64)) -> Self {
        Self { edge: edge.to_string(), component, translation, rotation }
    }

    fn n_parameters(&self) -> usize {
        self.translation.len() + 1
    }
}

/// Parameter vector layout: for every edge its translations followed by its rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct BcParametrization {
    pub edges: Vec<EdgeParametrization>,
}

impl BcParametrization {
    pub fn new(edges: Vec<EdgeParametrization>) -> Result<Self> {
        let p = Self { edges };
        p.validate()?;
        Ok(p)
    }

    /// Module parametrization: x on the left and right edges, y on the bottom and top edges.
    pub fn module_example() -> Self {
        let rot = (-35.0, 35.0);
        Self {
            edges: vec![
                EdgeParametrization::new("left", Component::X, vec![(-10.0, 4.0)], rot),
                EdgeParametrization::new("right", Component::X, vec![(-4.0, 10.0)], rot),
                EdgeParametrization::new("bottom", Component::Y, vec![(-10.0, 4.0)], rot),
                EdgeParametrization::new("top", Component::Y, vec![(4.0, 10.0)], rot),
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        for e in &self.edges {
            if e.translation.len() != e.component.indices().len() {
                errors.push(format!(
                    "edge {}: {} translation ranges for {} components",
                    e.edge,
                    e.translation.len(),
                    e.component.indices().len()
                ));
            }
            for &(lo, hi) in e.translation.iter().chain([&e.rotation]) {
                if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                    errors.push(format!("edge {}: degenerate range ({lo}, {hi})", e.edge));
                }
            }
            if e.rotation.0 <= -90.0 || e.rotation.1 >= 90.0 {
                errors.push(format!("edge {}: rotation range must stay inside (-90, 90) degrees", e.edge));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(errors.join("; ")))
        }
    }

    pub fn n_parameters(&self) -> usize {
        self.edges.iter().map(EdgeParametrization::n_parameters).sum()
    }

    pub fn names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for e in &self.edges {
            for &c in e.component.indices() {
                out.push(format!("{}_d{}", e.edge, ["x", "y"][c]));
            }
            out.push(format!("{}_phi", e.edge));
        }
        out
    }

    pub fn ranges(&self) -> Vec<(f64, f64)> {
        self.edges.iter().flat_map(|e| e.translation.iter().copied().chain([e.rotation])).collect()
    }

    /// The two bootstrap points `mid - width/4` and `mid + width/4` in every parameter.
    pub fn corners(&self) -> [Vec<f64>; 2] {
        let r = self.ranges();
        let at = |s: f64| r.iter().map(|&(lo, hi)| 0.5 * (lo + hi) + s * 0.25 * (hi - lo)).collect();
        [at(-1.0), at(1.0)]
    }
}

/// Draw from the normal distribution with mean `(lo+hi)/2` and standard deviation
/// `(hi-lo)/4`, rejecting values outside the open interval.
pub fn truncated_normal(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let normal = Normal::new(0.5 * (lo + hi), 0.25 * (hi - lo)).expect("positive width");
    loop {
        let x = normal.sample(rng);
        if x > lo && x < hi {
            return x;
        }
    }
}

/// Parameter vector number `index` for `seed`. Each index has its own random stream, so a
/// draw does not depend on how many draws came before it.
pub fn draw_sample(param: &BcParametrization, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    param.ranges().into_iter().map(|(lo, hi)| truncated_normal(&mut rng, lo, hi)).collect()
}

/// Prescribed values on an edge translated by `translation` (one value per entry of
/// `components`) and rotated by `phi_deg` about its midpoint.
pub fn edge_displacements(
    mesh: &Mesh,
    edge: &str,
    components: &[usize],
    translation: &[f64],
    phi_deg: f64,
) -> Result<Vec<(usize, f64)>> {
    let nodes = mesh.edge_set_nodes(edge)?;
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for &n in &nodes {
        for c in 0..2 {
            lo[c] = lo[c].min(mesh.nodes[n][c]);
            hi[c] = hi[c].max(mesh.nodes[n][c]);
        }
    }
    let mid = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    let (s, c) = phi_deg.to_radians().sin_cos();
    let mut out = Vec::with_capacity(nodes.len() * components.len());
    for &n in &nodes {
        let dx = mesh.nodes[n][0] - mid[0];
        let dy = mesh.nodes[n][1] - mid[1];
        let rot = [c * dx - s * dy - dx, s * dx + c * dy - dy];
        for (&comp, &d) in components.iter().zip(translation) {
            out.push((2 * n + comp, d + rot[comp]));
        }
    }
    Ok(out)
}

/// Dirichlet map of a parameter vector. Later edges win on shared DOFs.
pub fn bc_from_parameters(alpha: &[f64], mesh: &Mesh, param: &BcParametrization) -> Result<Dirichlet> {
    if alpha.len() != param.n_parameters() {
        return Err(Error::DimensionMismatch(format!(
            "{} parameters for a parametrization with {}",
            alpha.len(),
            param.n_parameters()
        )));
    }
    let mut out = Dirichlet::new();
    let mut k = 0;
    for e in &param.edges {
        let comps = e.component.indices();
        let phi = alpha[k + comps.len()];
        out.extend(edge_displacements(mesh, &e.edge, comps, &alpha[k..k + comps.len()], phi)?);
        k += e.n_parameters();
    }
    Ok(out)
}

/// Largest full-order residual norm at the converged states of a reduced trajectory.
fn criterion_of(traj: &Trajectory) -> f64 {
    if traj.failure.is_some() {
        return f64::INFINITY;
    }
    traj.steps.iter().map(|s| s.full_residual_norms.last().copied().unwrap_or(f64::INFINITY)).fold(0.0, f64::max)
}

/// A boundary value problem whose solutions are snapshots of one substructure.
pub trait SnapshotProblem: Sync {
    fn parametrization(&self) -> &BcParametrization;

    /// Length of a snapshot column.
    fn n_rows(&self) -> usize;

    /// Converged states of the sampled substructure, one per load step and loading.
    fn full_snapshots(&self, alpha: &[f64], schedule: &[f64]) -> Result<Vec<Vec<f64>>>;

    /// Largest full-order free residual norm at the converged reduced states for the first
    /// columns of `modes`; infinite when the reduced solve fails.
    fn reduced_residual(&self, alpha: &[f64], modes: &DMatrix<f64>, schedule: &[f64]) -> f64;
}

/// A single substructure with all parametrized edges prescribed.
#[derive(Debug, Clone)]
pub struct ModuleProblem {
    pub substructure: Substructure,
    pub parametrization: BcParametrization,
    pub options: NewtonOptions,
    pub exec: Execution,
}

impl ModuleProblem {
    pub fn new(substructure: Substructure, parametrization: BcParametrization, options: NewtonOptions) -> Result<Self> {
        parametrization.validate()?;
        for e in &parametrization.edges {
            substructure.mesh.edge_set(&e.edge)?;
        }
        Ok(Self { substructure, parametrization, options, exec: Execution::default() })
    }

    pub fn dirichlet(&self, alpha: &[f64]) -> Result<Dirichlet> {
        bc_from_parameters(alpha, &self.substructure.mesh, &self.parametrization)
    }
}

impl SnapshotProblem for ModuleProblem {
    fn parametrization(&self) -> &BcParametrization {
        &self.parametrization
    }

    fn n_rows(&self) -> usize {
        self.substructure.n_dofs()
    }

    fn full_snapshots(&self, alpha: &[f64], schedule: &[f64]) -> Result<Vec<Vec<f64>>> {
        let dir = self.dirichlet(alpha)?;
        let problem = SingleDomain::new(&self.substructure, &dir, self.exec);
        let n = self.substructure.n_dofs();
        Ok(solve_full(&problem, &vec![0.0; n], schedule, self.options).into_result()?.states)
    }

    fn reduced_residual(&self, alpha: &[f64], modes: &DMatrix<f64>, schedule: &[f64]) -> f64 {
        let run = || -> Result<f64> {
            let dir = self.dirichlet(alpha)?;
            let n = self.substructure.n_dofs();
            let rows: Vec<usize> = (0..n).collect();
            let constrained: Vec<usize> = dir.keys().copied().collect();
            let mut basis = ReducedBasis::new(n, vec![(0, block_modes(modes, &rows, &constrained, modes.ncols())?)])?;
            basis.exec = self.exec;
            let problem = SingleDomain::new(&self.substructure, &dir, self.exec);
            Ok(criterion_of(&solve_reduced(&problem, &basis, &vec![0.0; n], schedule, self.options)))
        };
        run().unwrap_or(f64::INFINITY)
    }
}

/// The sampled substructure between two unreduced pads. The parametrized displacement is
/// applied to one outer pad surface while the other is clamped, then the other way round,
/// giving two loadings per parameter point.
#[derive(Debug, Clone)]
pub struct PadsProblem {
    pub model: CoupledModel,
    pub center: usize,
    /// `(substructure, edge set)` of the two loaded surfaces.
    pub surfaces: [(usize, String); 2],
    /// Must contain exactly one edge entry; its edge name is ignored.
    pub parametrization: BcParametrization,
    pub options: NewtonOptions,
}

impl PadsProblem {
    /// Three equal `length x length` blocks in a row, `n x n` elements each; the middle one
    /// is sampled and the parametrization acts on the outer vertical edges.
    pub fn in_row(
        n: usize,
        length: f64,
        material: NeoHooke,
        parametrization: BcParametrization,
        options: NewtonOptions,
        exec: Execution,
    ) -> Result<Self> {
        parametrization.validate()?;
        if parametrization.edges.len() != 1 {
            return Err(Error::InvalidArgument("pads sampling takes a single surface parametrization".into()));
        }
        let subs = (0..3)
            .map(|k| {
                let mesh = Mesh::structured(n, n, length, length, [(k as f64 - 1.0) * length, 0.0])?;
                Substructure::new(mesh, material, Loads::default())
            })
            .collect::<Result<Vec<_>>>()?;
        let pairs = [InterfacePairing::new(0, "right", 1, "left"), InterfacePairing::new(1, "right", 2, "left")];
        let model = CoupledModel::new(subs, &pairs, vec![Dirichlet::new(); 3], exec)?;
        Ok(Self {
            model,
            center: 1,
            surfaces: [(0, "left".to_string()), (2, "right".to_string())],
            parametrization,
            options,
        })
    }

    fn loaded_model(&self, alpha: &[f64], loaded: usize) -> Result<CoupledModel> {
        if alpha.len() != self.parametrization.n_parameters() {
            return Err(Error::DimensionMismatch(format!(
                "{} parameters for a parametrization with {}",
                alpha.len(),
                self.parametrization.n_parameters()
            )));
        }
        let e = &self.parametrization.edges[0];
        let comps = e.component.indices();
        let mut model = self.model.clone();
        model.dirichlet = vec![Dirichlet::new(); model.n_substructures()];
        for (k, (s, edge)) in self.surfaces.iter().enumerate() {
            let mesh = &model.substructures[*s].mesh;
            let values = if k == loaded {
                edge_displacements(mesh, edge, comps, &alpha[..comps.len()], alpha[comps.len()])?
            } else {
                edge_displacements(mesh, edge, &[0, 1], &[0.0, 0.0], 0.0)?
            };
            model.dirichlet[*s].extend(values);
        }
        Ok(model)
    }
}

impl SnapshotProblem for PadsProblem {
    fn parametrization(&self) -> &BcParametrization {
        &self.parametrization
    }

    fn n_rows(&self) -> usize {
        self.model.substructures[self.center].n_dofs()
    }

    fn full_snapshots(&self, alpha: &[f64], schedule: &[f64]) -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::new();
        for loaded in 0..2 {
            let model = self.loaded_model(alpha, loaded)?;
            let system = CoupledSystem::new(&model)?;
            let traj = newton_solve_coupled(&system, schedule, self.options).into_result()?;
            out.extend(traj.states.iter().map(|u| system.expand(u).swap_remove(self.center)));
        }
        Ok(out)
    }

    fn reduced_residual(&self, alpha: &[f64], modes: &DMatrix<f64>, schedule: &[f64]) -> f64 {
        let run = |loaded: usize| -> Result<f64> {
            let model = self.loaded_model(alpha, loaded)?;
            let system = CoupledSystem::new(&model)?;
            let ns = model.n_substructures();
            let mut bases = vec![None; ns];
            bases[self.center] = Some(modes);
            let mut counts = ModeCounts::uniform(ns, model.layout.n_interfaces(), 0, None);
            counts.internal[self.center] = modes.ncols();
            let rom = ReducedModel::from_partial_bases(&system, &bases, &counts)?;
            let u0 = vec![0.0; system.n_condensed()];
            Ok(criterion_of(&solve_reduced(&system, &rom.basis, &u0, schedule, self.options)))
        };
        (0..2).map(|k| run(k).unwrap_or(f64::INFINITY)).fold(0.0, f64::max)
    }
}

/// Where the snapshot matrix starts.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialSnapshots {
    /// Full solves at the two [`BcParametrization::corners`].
    Bootstrap,
    Given(SnapshotMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub n_samples: usize,
    /// Residual tolerance [N].
    pub epsilon: f64,
    pub load_steps: usize,
    pub seed: u64,
    pub initial: InitialSnapshots,
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if self.n_samples == 0 {
            errors.push("n_samples must be at least 1".to_string());
        }
        if !(self.epsilon > 0.0) {
            errors.push(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.load_steps == 0 {
            errors.push("load_steps must be at least 1".to_string());
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(errors.join("; ")))
        }
    }
}

/// `1e-3 * mu * h`, with `h` the mean element edge length times unit depth.
pub fn default_epsilon(material: &NeoHooke, mesh: &Mesh) -> f64 {
    1e-3 * material.mu * mesh.mean_edge_length()
}

/// One row of the sampling log.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub sample_id: usize,
    pub alpha: Vec<f64>,
    pub criterion_residual: f64,
    pub triggered_fom: bool,
    /// The full solve at this point failed; the sample was skipped.
    pub fom_failed: bool,
    /// Mode count after this sample.
    pub mode_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bisection {
    pub modes: usize,
    pub residual: f64,
    /// False when even the full snapshot rank misses the tolerance.
    pub satisfied: bool,
}

/// Smallest mode count in `1..=rank` found by bisection whose reduced residual at `alpha`
/// is at most `epsilon`. The returned count was always probed.
pub fn bisect_mode_count<P: SnapshotProblem + ?Sized>(
    problem: &P,
    pod: &PodBasis,
    alpha: &[f64],
    epsilon: f64,
    schedule: &[f64],
) -> Bisection {
    let rank = pod.n_modes();
    let probe = |m: usize| problem.reduced_residual(alpha, &pod.leading(m), schedule);
    let top = probe(rank);
    if !(top <= epsilon) {
        return Bisection { modes: rank, residual: top, satisfied: false };
    }
    let (mut lo, mut hi, mut best) = (1, rank, top);
    while lo < hi {
        let mid = (lo + hi) / 2;
        let r = probe(mid);
        if r <= epsilon {
            hi = mid;
            best = r;
        } else {
            lo = mid + 1;
        }
    }
    Bisection { modes: hi, residual: best, satisfied: true }
}

#[derive(Debug, Clone)]
pub struct SamplingResult {
    pub snapshots: SnapshotMatrix,
    /// Basis recomputed from all snapshots with the default mode-count rule.
    pub basis: PodBasis,
    pub log: Vec<SampleRecord>,
    /// Mode count in use when sampling ended.
    pub sampling_modes: usize,
    pub full_solves: usize,
}

fn pod_all(snapshots: &SnapshotMatrix) -> Result<PodBasis> {
    compute_pod(snapshots, snapshots.n_cols().min(snapshots.n_rows()).max(1))
}

/// Random sampling with reduced screening.
pub fn run_sampling<P: SnapshotProblem + ?Sized>(problem: &P, config: &SamplerConfig) -> Result<SamplingResult> {
    config.validate()?;
    let schedule = crate::solver::uniform_schedule(config.load_steps);
    let param = problem.parametrization();
    let mut full_solves = 0;
    let mut snapshots = match &config.initial {
        InitialSnapshots::Given(s) => {
            if s.n_rows() != problem.n_rows() || s.n_cols() == 0 {
                return Err(Error::DimensionMismatch(format!(
                    "initial snapshots are {}x{}, expected {} rows and at least one column",
                    s.n_rows(),
                    s.n_cols(),
                    problem.n_rows()
                )));
            }
            s.clone()
        }
        InitialSnapshots::Bootstrap => {
            let mut s = SnapshotMatrix::new(problem.n_rows());
            for alpha in param.corners() {
                full_solves += 1;
                for (step, col) in problem.full_snapshots(&alpha, &schedule)?.iter().enumerate() {
                    s.push(col, 0, step + 1)?;
                }
            }
            s
        }
    };
    let mut pod = pod_all(&snapshots)?;
    let mut m = default_mode_count(&pod.singular_values).clamp(1, pod.n_modes());
    let mut log = Vec::with_capacity(config.n_samples);
    for k in 1..=config.n_samples {
        let alpha = draw_sample(param, config.seed, k as u64);
        let r = problem.reduced_residual(&alpha, &pod.leading(m), &schedule);
        let mut record = SampleRecord {
            sample_id: k,
            alpha,
            criterion_residual: r,
            triggered_fom: false,
            fom_failed: false,
            mode_count: m,
        };
        if !(r < config.epsilon) {
            record.triggered_fom = true;
            full_solves += 1;
            match problem.full_snapshots(&record.alpha, &schedule) {
                Ok(cols) => {
                    for (step, col) in cols.iter().enumerate() {
                        snapshots.push(col, k, step + 1)?;
                    }
                    pod = pod_all(&snapshots)?;
                    m = bisect_mode_count(problem, &pod, &record.alpha, config.epsilon, &schedule).modes;
                    record.mode_count = m;
                }
                Err(Error::NonConvergence { .. } | Error::ElementInversion { .. } | Error::SingularSystem { .. }) => {
                    record.fom_failed = true;
                }
                Err(e) => return Err(e),
            }
        }
        log.push(record);
    }
    let final_pod = pod_all(&snapshots)?;
    let keep = default_mode_count(&final_pod.singular_values).clamp(1, final_pod.n_modes());
    let basis = PodBasis { modes: final_pod.leading(keep), ..final_pod };
    Ok(SamplingResult { snapshots, basis, log, sampling_modes: m, full_solves })
}

/// Criterion values at `count` fresh draws starting at draw index `first`.
pub fn fresh_residuals<P: SnapshotProblem + ?Sized>(
    problem: &P,
    modes: &DMatrix<f64>,
    load_steps: usize,
    seed: u64,
    first: u64,
    count: usize,
) -> Vec<f64> {
    let schedule = crate::solver::uniform_schedule(load_steps);
    (0..count as u64)
        .map(|k| problem.reduced_residual(&draw_sample(problem.parametrization(), seed, first + k), modes, &schedule))
        .collect()
}

/// CSV text of a sampling log: `sample_id`, one `alpha_<name>` column per parameter,
/// `criterion_residual`, `triggered_fom`, `new_mode_count`.
pub fn log_csv(names: &[String], log: &[SampleRecord]) -> String {
    let mut out = String::from("sample_id");
    for n in names {
        write!(out, ",alpha_{n}").unwrap();
    }
    out.push_str(",criterion_residual,triggered_fom,new_mode_count\n");
    for r in log {
        write!(out, "{}", r.sample_id).unwrap();
        for a in &r.alpha {
            write!(out, ",{a:.16e}").unwrap();
        }
        writeln!(out, ",{:.16e},{},{}", r.criterion_residual, u8::from(r.triggered_fom), r.mode_count).unwrap();
    }
    out
}
