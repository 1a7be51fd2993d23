//! The five subcommands as library functions.

use std::path::Path;
use std::time::Instant;

use cbmor_core::coupled::{physical_penalty, reaction_curve, CoupledModel, CoupledSystem, PenaltySystem};
use cbmor_core::geometry::Mesh;
use cbmor_core::pod::{compute_pod_matrix, default_mode_count, SnapshotMatrix};
use cbmor_core::rom::{penalty_basis, ModeCounts, ReducedModel};
use cbmor_core::sampler::{
    default_epsilon, log_csv, run_sampling, InitialSnapshots, ModuleProblem, PadsProblem, SamplerConfig,
    SamplingResult, SnapshotProblem,
};
use cbmor_core::solver::{solve_full, solve_reduced, uniform_schedule, Trajectory};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::config::{sampler_parametrization, ModelKind, SamplerMode, Scenario, UNITS};
use crate::error::{CliError, CliResult};
use crate::modes::ModeSpec;
use crate::persist::{layout_hash, read_matrix, write_json, write_matrix, write_text, MatrixMeta};
use crate::report::{curve_csv, step_entries, DofCounts, RunReport, Timing, CURVE_FILE, REPORT_FILE, STATES_FILE};

/// Command-line overrides of a scenario.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub model: Option<ModelKind>,
    pub modes: Option<ModeSpec>,
    pub seed: Option<u64>,
}

fn seed(scn: &Scenario, o: &Overrides) -> u64 {
    o.seed.or(scn.config.seed).unwrap_or(0)
}

/// Substructure bases from the `[rom]` section, `None` where no file is assigned.
pub fn load_bases(scn: &Scenario) -> CliResult<Vec<Option<DMatrix<f64>>>> {
    let mut out = vec![None; scn.substructures.len()];
    let Some(rom) = &scn.config.rom else {
        return Ok(out);
    };
    for b in &rom.bases {
        let path = scn.resolve(&b.file);
        if !path.is_file() {
            return Err(CliError::config(format!("basis file {} does not exist", path.display())));
        }
        let (m, meta) = read_matrix(&path)?;
        for &s in &b.substructures {
            let sub = &scn.substructures[s];
            if m.nrows() != sub.n_dofs() {
                return Err(CliError::config(format!(
                    "basis {} has {} rows but substructure {s} has {} DOFs",
                    path.display(),
                    m.nrows(),
                    sub.n_dofs()
                )));
            }
            if let Some(h) = meta.as_ref().and_then(|m| m.layout_hash.as_ref()) {
                if *h != layout_hash(&sub.mesh) {
                    return Err(CliError::config(format!(
                        "basis {} was built for a different mesh than substructure {s}",
                        path.display()
                    )));
                }
            }
            out[s] = Some(m.clone());
        }
    }
    Ok(out)
}

fn mode_counts(
    scn: &Scenario,
    o: &Overrides,
    model: &CoupledModel,
    bases: &[Option<DMatrix<f64>>],
) -> CliResult<ModeCounts> {
    let spec = match (&o.modes, scn.config.rom.as_ref().and_then(|r| r.modes.as_ref())) {
        (Some(m), _) => m.clone(),
        (None, Some(s)) => s.parse::<ModeSpec>().map_err(CliError::config)?,
        (None, None) => return Err(CliError::config("reduced runs need mode counts: rom.modes or --modes")),
    };
    let mut counts = spec.counts(model.n_substructures(), model.layout.n_interfaces()).map_err(CliError::config)?;
    for (j, itf) in model.layout.interfaces.iter().enumerate() {
        if bases[itf.master].is_none() {
            counts.interface[j] = None;
        }
    }
    Ok(counts)
}

/// Runs the selected model and writes `report.json`, `curve.csv` and `states.txt` into
/// `out`. A failed solve still writes the converged prefix before returning an error.
pub fn run(scn: &Scenario, o: &Overrides, out: &Path) -> CliResult<RunReport> {
    let kind = o
        .model
        .or(scn.config.model)
        .ok_or_else(|| CliError::config("no model selected: set `model` or pass --model"))?;
    let reaction = scn.config.reaction.as_ref().ok_or_else(|| CliError::config("run needs a [reaction] section"))?;
    let model = scn.model()?;
    let schedule = uniform_schedule(scn.config.solver.load_steps);
    let opts = scn.config.solver.options();
    let comp = reaction.component.index();
    let n_full = model.layout.total_dofs();

    let start = Instant::now();
    let (traj, curve, states, dofs, eps, ignored) = match kind {
        ModelKind::Fom | ModelKind::Rom => {
            let system = CoupledSystem::new(&model)?;
            let mut unknowns = Vec::new();
            for &s in &reaction.substructures {
                unknowns.extend(system.constrained_edge_unknowns(s, &reaction.edge, comp)?);
            }
            unknowns.sort_unstable();
            unknowns.dedup();
            let u0 = vec![0.0; system.n_condensed()];
            let (traj, reduced) = if kind == ModelKind::Fom {
                (solve_full(&system, &u0, &schedule, opts), None)
            } else {
                let bases = load_bases(scn)?;
                let counts = mode_counts(scn, o, &model, &bases)?;
                let refs: Vec<Option<&DMatrix<f64>>> = bases.iter().map(Option::as_ref).collect();
                let rm = ReducedModel::from_partial_bases(&system, &refs, &counts)?;
                (solve_reduced(&system, &rm.basis, &u0, &schedule, opts), Some(rm.basis.dim()))
            };
            let curve = reaction_curve(&system, &traj, &unknowns, reaction.displacement)?;
            let states: Vec<Vec<f64>> = traj.states.iter().map(|u| system.expand(u).concat()).collect();
            let dofs = DofCounts {
                full: n_full,
                condensed: system.n_condensed(),
                reduced,
                reduction_ratio: reduced.map(|r| n_full as f64 / r as f64),
            };
            (traj, curve, states, dofs, None, system.ignored_dirichlet.len())
        }
        ModelKind::Penalty => {
            let p = scn.config.penalty.clone().unwrap_or_default();
            let eps = match (p.scaled, p.epsilon) {
                (_, Some(e)) => e,
                (Some(s), None) => physical_penalty(&model, s),
                (None, None) => physical_penalty(&model, 1.0),
            };
            let system = PenaltySystem::new(&model, eps)?;
            let mut unknowns = Vec::new();
            for &s in &reaction.substructures {
                unknowns.extend(system.constrained_edge_unknowns(s, &reaction.edge, comp)?);
            }
            let u0 = vec![0.0; n_full];
            let (traj, reduced) = if p.reduced {
                let bases = load_bases(scn)?;
                let mut counts = mode_counts(scn, o, &model, &bases)?;
                let full: Vec<DMatrix<f64>> = bases
                    .into_iter()
                    .zip(&model.substructures)
                    .enumerate()
                    .map(|(k, (b, s))| {
                        b.unwrap_or_else(|| {
                            counts.internal[k] = s.n_dofs();
                            DMatrix::identity(s.n_dofs(), s.n_dofs())
                        })
                    })
                    .collect();
                let basis = penalty_basis(&system, &full, &counts.internal)?;
                (solve_reduced(&system, &basis, &u0, &schedule, opts), Some(basis.dim()))
            } else {
                (solve_full(&system, &u0, &schedule, opts), None)
            };
            let curve = reaction_curve(&system, &traj, &unknowns, reaction.displacement)?;
            let dofs = DofCounts {
                full: n_full,
                condensed: n_full,
                reduced,
                reduction_ratio: reduced.map(|r| n_full as f64 / r as f64),
            };
            let states = traj.states.clone();
            (traj, curve, states, dofs, Some(eps), 0)
        }
    };
    let total = start.elapsed().as_secs_f64();
    let report = RunReport {
        model: kind.name().to_string(),
        units: UNITS.to_string(),
        seed: seed(scn, o),
        converged: traj.failure.is_none(),
        failure: traj.failure.as_ref().map(|e| e.to_string()),
        load_steps: schedule.len(),
        dofs,
        penalty_epsilon: eps,
        ignored_dirichlet: ignored,
        steps: step_entries(&traj),
        timing: Timing::new(total, traj.assembly_seconds(), traj.solve_seconds()),
    };
    write_text(&out.join(CURVE_FILE), &curve_csv(&curve))?;
    write_json(&out.join(REPORT_FILE), &report)?;
    if !states.is_empty() {
        let m = DMatrix::from_fn(states[0].len(), states.len(), |i, j| states[j][i]);
        let meta = MatrixMeta {
            kind: "states".into(),
            rows: m.nrows(),
            cols: m.ncols(),
            substructure: None,
            mode_count: None,
            singular_values: Vec::new(),
            layout_hash: None,
        };
        write_matrix(&out.join(STATES_FILE), &m, &meta)?;
    }
    finish(traj).map(|_| report)
}

fn finish(traj: Trajectory) -> CliResult<Trajectory> {
    match traj.failure {
        Some(e) => Err(CliError::NonConvergence(e.to_string())),
        None => Ok(traj),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplingSummary {
    pub mode: String,
    pub substructure: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub n_samples: usize,
    pub load_steps: usize,
    pub full_solves: usize,
    pub failed_full_solves: usize,
    pub snapshot_columns: usize,
    pub sampling_modes: usize,
    pub final_modes: usize,
    pub rank: usize,
}

fn initial_snapshots(scn: &Scenario, n_rows: usize) -> CliResult<InitialSnapshots> {
    let Some(f) = scn.config.sampler.as_ref().and_then(|s| s.initial_snapshots.as_ref()) else {
        return Ok(InitialSnapshots::Bootstrap);
    };
    let (m, _) = read_matrix(&scn.resolve(f))?;
    if m.nrows() != n_rows {
        return Err(CliError::config(format!("initial snapshots have {} rows, expected {n_rows}", m.nrows())));
    }
    let mut s = SnapshotMatrix::new(n_rows);
    for c in 0..m.ncols() {
        s.push(m.column(c).as_slice(), 0, c + 1)?;
    }
    Ok(InitialSnapshots::Given(s))
}

/// Square structured mesh check for pads sampling: `(elements per side, side length)`.
fn square_block(mesh: &Mesh) -> CliResult<(usize, f64)> {
    let (lo, hi) = mesh.bounding_box();
    let (nx, ny) = (mesh.edge_set("bottom")?.len(), mesh.edge_set("left")?.len());
    let (lx, ly) = (hi[0] - lo[0], hi[1] - lo[1]);
    if nx != ny || (lx - ly).abs() > 1e-12 * lx || nx * ny != mesh.elements.len() {
        return Err(CliError::config("pads sampling needs a square structured substructure"));
    }
    Ok((nx, lx))
}

/// Runs the sampler and writes the log, snapshots and basis into `out`.
pub fn sample(scn: &Scenario, o: &Overrides, out: &Path) -> CliResult<SamplingSummary> {
    let sp = scn.config.sampler.as_ref().ok_or_else(|| CliError::config("sample needs a [sampler] section"))?;
    let sub = &scn.substructures[sp.substructure];
    let param = sampler_parametrization(sp)?;
    let opts = scn.config.solver.options();
    let exec = scn.config.solver.exec();
    let epsilon = sp.epsilon.unwrap_or_else(|| default_epsilon(&sub.material, &sub.mesh));
    let seed = seed(scn, o);
    let run_with = |problem: &dyn SnapshotProblem, mesh: &Mesh| -> CliResult<(SamplingResult, String)> {
        let config = SamplerConfig {
            n_samples: sp.n_samples,
            epsilon,
            load_steps: sp.load_steps,
            seed,
            initial: initial_snapshots(scn, problem.n_rows())?,
        };
        Ok((run_sampling(problem, &config)?, layout_hash(mesh)))
    };
    let (result, hash) = match sp.mode {
        SamplerMode::Module => {
            let mut p = ModuleProblem::new(sub.clone(), param.clone(), opts)?;
            p.exec = exec;
            run_with(&p, &sub.mesh)?
        }
        SamplerMode::Pads => {
            let (n, length) = square_block(&sub.mesh)?;
            let p = PadsProblem::in_row(n, length, sub.material, param.clone(), opts, exec)?;
            let mesh = p.model.substructures[p.center].mesh.clone();
            run_with(&p, &mesh)?
        }
    };
    write_text(&out.join("sampling_log.csv"), &log_csv(&param.names(), &result.log))?;
    let snaps = result.snapshots.to_matrix();
    let meta = |kind: &str, m: &DMatrix<f64>, modes: Option<usize>, sv: Vec<f64>| MatrixMeta {
        kind: kind.into(),
        rows: m.nrows(),
        cols: m.ncols(),
        substructure: Some(sp.substructure),
        mode_count: modes,
        singular_values: sv,
        layout_hash: Some(hash.clone()),
    };
    write_matrix(&out.join("snapshots.txt"), &snaps, &meta("snapshots", &snaps, None, Vec::new()))?;
    let b = &result.basis;
    write_matrix(
        &out.join("basis.txt"),
        &b.modes,
        &meta("basis", &b.modes, Some(b.n_modes()), b.singular_values.clone()),
    )?;
    let summary = SamplingSummary {
        mode: format!("{:?}", sp.mode).to_lowercase(),
        substructure: sp.substructure,
        seed,
        epsilon,
        n_samples: sp.n_samples,
        load_steps: sp.load_steps,
        full_solves: result.full_solves,
        failed_full_solves: result.log.iter().filter(|r| r.fom_failed).count(),
        snapshot_columns: result.snapshots.n_cols(),
        sampling_modes: result.sampling_modes,
        final_modes: b.n_modes(),
        rank: b.rank,
    };
    write_json(&out.join("sampling.json"), &summary)?;
    Ok(summary)
}

/// POD of a snapshot file. Without `modes`, keeps modes with `sigma_k / sigma_1 >= 1e-8`.
pub fn pod(snapshots: &Path, modes: Option<usize>, out: &Path) -> CliResult<MatrixMeta> {
    let (s, meta) = read_matrix(snapshots)?;
    let all = compute_pod_matrix(&s, s.nrows().min(s.ncols()).max(1))?;
    let keep = modes.unwrap_or_else(|| default_mode_count(&all.singular_values)).clamp(1, all.n_modes());
    let basis = all.leading(keep);
    let meta = MatrixMeta {
        kind: "basis".into(),
        rows: basis.nrows(),
        cols: basis.ncols(),
        substructure: meta.as_ref().and_then(|m| m.substructure),
        mode_count: Some(keep),
        singular_values: all.singular_values.clone(),
        layout_hash: meta.and_then(|m| m.layout_hash),
    };
    write_matrix(out, &basis, &meta)?;
    Ok(meta)
}

/// Structured mesh file with edge sets `left`, `right`, `bottom` and `top`.
pub fn generate_mesh(elements: [usize; 2], size: [f64; 2], origin: [f64; 2], out: &Path) -> CliResult<Mesh> {
    let mesh = Mesh::structured(elements[0], elements[1], size[0], size[1], origin)?;
    write_text(out, &mesh.to_text())?;
    Ok(mesh)
}
