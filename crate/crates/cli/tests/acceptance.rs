//! One PASS, PARTIAL or FAIL line per acceptance criterion. Runs without the libtest harness so
//! lines are printed even when output capture is on.

use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use cbmor::commands::{self, Overrides};
use cbmor::config::{ModelKind, Scenario};
use cbmor::modes::ModeSpec;
use cbmor::report::{compare_runs, read_curve, RunReport};
use cbmor_core::coupled::{reaction_curve, solve_saddle_point, CoupledModel, CoupledSystem};
use cbmor_core::geometry::{InterfacePairing, Mesh};
use cbmor_core::mechanics::{element_residual_tangent, Dirichlet, Loads, NeoHooke, SingleDomain, Substructure};
use cbmor_core::mortar::dual_coefficients;
use cbmor_core::pod::compute_pod_matrix;
use cbmor_core::rom::{reduced_dof_count, ReducedModel};
use cbmor_core::sampler::{
    default_epsilon, fresh_residuals, log_csv, run_sampling, BcParametrization, InitialSnapshots, ModuleProblem,
    SamplerConfig,
};
use cbmor_core::solver::{solve_full, solve_reduced, uniform_schedule, Discretization, NewtonOptions};
use cbmor_core::Execution;
use nalgebra::{DMatrix, Matrix2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `Ok((true, msg))` passes, `Ok((false, msg))` is a partial result: every asserted
/// property holds but a measured one falls short. `Err` fails.
type Outcome = Result<(bool, String), String>;

macro_rules! check {
    ($cond:expr, $($arg:tt)*) => {
        if !$cond {
            return Err(format!($($arg)*));
        }
    };
}

fn steel() -> NeoHooke {
    NeoHooke::from_young_poisson(80_000.0, 0.15).unwrap()
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

/// Two square blocks side by side, `left` and `right` elements per side. The left edge of
/// block 0 is held in x, its bottom-left corner in y; the right edge of block 1 moves by
/// `stretch`.
fn two_blocks(left: (usize, usize), right: (usize, usize), length: f64, stretch: f64) -> CoupledModel {
    let a = Substructure::new(
        Mesh::structured(left.0, left.1, length, length, [0.0, 0.0]).unwrap(),
        steel(),
        Loads::default(),
    )
    .unwrap();
    let b = Substructure::new(
        Mesh::structured(right.0, right.1, length, length, [length, 0.0]).unwrap(),
        steel(),
        Loads::default(),
    )
    .unwrap();
    let mut da = Dirichlet::new();
    for n in a.mesh.edge_set_nodes("left").unwrap() {
        da.insert(2 * n, 0.0);
    }
    da.insert(1, 0.0);
    let mut db = Dirichlet::new();
    for n in b.mesh.edge_set_nodes("right").unwrap() {
        db.insert(2 * n, stretch);
    }
    CoupledModel::new(vec![a, b], &[InterfacePairing::new(0, "right", 1, "left")], vec![da, db], Execution::Parallel)
        .unwrap()
}

fn c1_dof_accounting() -> Outcome {
    let cases = [(6, 90, 7, 20, 680, 29358, 43), (9, 50, 12, 20, 690, 36990, 53), (5, 120, 4, 40, 760, 19845, 26)];
    let mut msg = String::new();
    for (ns, mi, ni, mc, expect, full, ratio) in cases {
        let r = reduced_dof_count(&vec![mi; ns], &vec![mc; ni]);
        check!(r == expect, "{ns}x{mi} + {ni}x{mc} gave {r}, expected {expect}");
        check!(full / r == ratio, "{full}/{r} does not truncate to {ratio}");
        write!(msg, "{r} ({full}/{r} = {:.1}) ", full as f64 / r as f64).unwrap();
    }
    Ok((true, msg.trim_end().to_string()))
}

fn c2_dual_mortar_structure() -> Outcome {
    let expect = Matrix2::new(2.0, -1.0, -1.0, 2.0);
    let mut worst_a = 0.0f64;
    for (p0, p1) in [([0.0, 0.0], [0.0, 1.0]), ([3.0, -1.0], [7.5, 2.0]), ([0.0, 0.0], [0.013, 0.0])] {
        worst_a = worst_a.max((dual_coefficients(p0, p1).unwrap().a - expect).abs().max());
    }
    check!(worst_a < 1e-12, "A deviates by {worst_a:e}");
    let mut worst_d = 0.0f64;
    for (l, r) in [(3, 2), (5, 7), (4, 4), (13, 6)] {
        let model = two_blocks((2, l), (2, r), 10.0, 0.0);
        worst_d = worst_d.max(model.mortar[0].d_offdiagonal_ratio());
    }
    check!(worst_d <= 1e-14, "off-diagonal D ratio {worst_d:e}");
    Ok((true, format!("max |A - [[2,-1],[-1,2]]| = {worst_a:.1e}, max offdiag(D)/diag = {worst_d:.1e}")))
}

fn c3_patch_test() -> Outcome {
    let model = two_blocks((2, 3), (2, 2), 10.0, 1.5);
    let itf = &model.layout.interfaces[0];
    check!(itf.slave == 0, "expected the 3-edge side as slave");
    let system = CoupledSystem::new(&model).unwrap();
    let traj = solve_full(
        &system,
        &vec![0.0; system.n_condensed()],
        &uniform_schedule(2),
        NewtonOptions { tolerance: 1e-9, ..Default::default() },
    );
    check!(traj.failure.is_none(), "{:?}", traj.failure);
    let states = system.expand(traj.states.last().unwrap());
    let s0 = model.substructures[0].cauchy_stresses(&states[0]).unwrap()[0][0];
    let mut worst = 0.0f64;
    for (sub, u) in model.substructures.iter().zip(&states) {
        for s in sub.cauchy_stresses(u).unwrap().iter().flatten() {
            worst = worst.max((s - s0).norm() / s0.norm());
        }
    }
    check!(worst <= 1e-8, "stress deviation {worst:e}");
    let ops = &model.mortar[0];
    let (sm, mm) = (&model.substructures[itf.slave].mesh, &model.substructures[itf.master].mesh);
    let mut worst_p = 0.0f64;
    for (a, b) in [(0.3, -1.7), (-2.0, 0.05), (1.0, 0.0)] {
        let um: Vec<f64> = ops.master_nodes.iter().map(|&n| a + b * mm.nodes[n][1]).collect();
        for (i, &n) in ops.slave_nodes.iter().enumerate() {
            let v: f64 = (0..um.len()).map(|j| ops.p[(i, j)] * um[j]).sum();
            worst_p = worst_p.max((v - a - b * sm.nodes[n][1]).abs());
        }
    }
    check!(worst_p <= 1e-10, "linear transfer error {worst_p:e}");
    Ok((true, format!("stress deviation {worst:.1e}, linear transfer error {worst_p:.1e}")))
}

fn c4_condensation() -> Outcome {
    let model = two_blocks((3, 3), (2, 4), 10.0, 1e-4);
    let system = CoupledSystem::new(&model).unwrap();
    let (_, du, lambda) = system.linear_increment(&vec![0.0; system.n_condensed()], 1.0).unwrap();
    let zero: Vec<Vec<f64>> = model.substructures.iter().map(|s| vec![0.0; s.n_dofs()]).collect();
    let (du_ref, lambda_ref) = solve_saddle_point(&model, &zero, 1.0).unwrap();
    let eu = rel_diff(&du.concat(), &du_ref.concat());
    let el = rel_diff(&lambda.concat(), &lambda_ref.concat());
    check!(eu <= 1e-10 && el <= 1e-10, "dU error {eu:e}, Lambda error {el:e}");
    Ok((true, format!("dU {eu:.1e}, Lambda {el:.1e}")))
}

fn c5_identity_rom() -> Outcome {
    let stretch = 6.0;
    let model = two_blocks((4, 4), (5, 5), 10.0, stretch);
    let system = CoupledSystem::new(&model).unwrap();
    let schedule = uniform_schedule(6);
    let u0 = vec![0.0; system.n_condensed()];
    let opts = NewtonOptions::default();
    let fom = solve_full(&system, &u0, &schedule, opts);
    let rm = ReducedModel::identity(&system).unwrap();
    let rom = solve_reduced(&system, &rm.basis, &u0, &schedule, opts);
    check!(fom.failure.is_none() && rom.failure.is_none(), "{:?} {:?}", fom.failure, rom.failure);
    let unknowns = system.constrained_edge_unknowns(1, "right", 0).unwrap();
    let cf = reaction_curve(&system, &fom, &unknowns, stretch).unwrap();
    let cr = reaction_curve(&system, &rom, &unknowns, stretch).unwrap();
    let fmax = cf.iter().map(|p| p.force.abs()).fold(0.0, f64::max);
    let err = cf.iter().zip(&cr).map(|(a, b)| (a.force - b.force).abs()).fold(0.0, f64::max) / fmax;
    check!(err <= 1e-8, "force curve error {err:e}");
    Ok((true, format!("{} points to 30% strain, max relative force error {err:.1e}", cf.len())))
}

fn c6_tangents() -> Outcome {
    let mat = steel();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let h = 1e-6;
    let mut worst_e = 0.0f64;
    for _ in 0..200 {
        let x: [[f64; 2]; 4] = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
            .map(|p| [p[0] + rng.random_range(-0.15..0.15), p[1] + rng.random_range(-0.15..0.15)]);
        let u: [f64; 8] = std::array::from_fn(|_| rng.random_range(-0.2..0.2));
        let d: [f64; 8] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let (_, k) = element_residual_tangent(&x, &u, &mat, [0.0; 2]).unwrap();
        let at = |s: f64| {
            element_residual_tangent(&x, &std::array::from_fn(|i| u[i] + s * h * d[i]), &mat, [0.0; 2]).unwrap().0
        };
        let fd: Vec<f64> = ((at(1.0) - at(-1.0)) / (2.0 * h)).iter().copied().collect();
        let kd: Vec<f64> = (k * nalgebra::SVector::<f64, 8>::from(d)).iter().copied().collect();
        worst_e = worst_e.max(rel_diff(&fd, &kd));
    }
    let sub = Substructure::new(Mesh::structured(4, 3, 4.0, 3.0, [0.0, 0.0]).unwrap(), mat, Loads::default()).unwrap();
    let problem = SingleDomain::new(&sub, &Dirichlet::new(), Execution::Parallel);
    let n = sub.n_dofs();
    let mut worst_a = 0.0f64;
    for _ in 0..100 {
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-0.15..0.15)).collect();
        let d: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let k = problem.evaluate(&u, 1.0).unwrap().tangent;
        let at = |s: f64| {
            let v: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + s * h * b).collect();
            problem.evaluate(&v, 1.0).unwrap().residual
        };
        let (gp, gm) = (at(1.0), at(-1.0));
        let fd: Vec<f64> = gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        worst_a = worst_a.max(rel_diff(&fd, &k.mul_vec(&d)));
    }
    check!(worst_e < 1e-5 && worst_a < 1e-5, "element {worst_e:e}, assembled {worst_a:e}");
    Ok((true, format!("200 element states {worst_e:.1e}, 100 assembled states {worst_a:.1e}")))
}

fn c11_pod_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_tail = 0.0f64;
    let mut worst_full = 0.0f64;
    for (n, l, r) in [(40, 12, 12), (60, 25, 9), (30, 30, 17)] {
        let a = DMatrix::from_fn(n, r, |_, _| rng.random_range(-1.0..1.0));
        let b = DMatrix::from_fn(r, l, |_, _| rng.random_range(-1.0..1.0));
        let s = &a * &b;
        for m in 1..r {
            let pod = compute_pod_matrix(&s, m).unwrap();
            let phi = &pod.modes;
            let err = (&s - phi * (phi.transpose() * &s)).norm_squared();
            let tail: f64 = pod.singular_values[m..].iter().map(|x| x * x).sum();
            worst_tail = worst_tail.max((err - tail).abs() / tail);
        }
        let pod = compute_pod_matrix(&s, r).unwrap();
        check!(pod.rank == r, "rank {} expected {r}", pod.rank);
        let phi = &pod.modes;
        worst_full = worst_full.max((&s - phi * (phi.transpose() * &s)).norm() / s.norm());
    }
    check!(worst_tail <= 1e-8 && worst_full <= 1e-10, "tail {worst_tail:e}, full rank {worst_full:e}");
    Ok((true, format!("tail energy {worst_tail:.1e}, rank reconstruction {worst_full:.1e}")))
}

/// Scenario files and sampled bases shared by the system-level criteria.
struct Workspace {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Workspace {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        Self { _dir: dir, root }
    }

    fn scenario(&self, name: &str, text: &str) -> Scenario {
        let path = self.root.join(format!("{name}.toml"));
        std::fs::write(&path, text).unwrap();
        Scenario::from_file(&path).unwrap()
    }

    fn sample_module(&self, elements: usize) -> PathBuf {
        let out = self.root.join(format!("module{elements}"));
        if !out.join("basis.txt").is_file() {
            let scn = self.scenario(
                &format!("module{elements}"),
                &format!(
                    "seed = 42\n[[substructure]]\nelements = [{elements}, {elements}]\nsize = [100.0, 100.0]\n\
                     material = {{ young = 80000.0, poisson = 0.15 }}\n[sampler]\nn_samples = 40\nload_steps = 3\n"
                ),
            );
            commands::sample(&scn, &Overrides::default(), &out).unwrap();
        }
        out.join("basis.txt")
    }

    fn run(&self, scn: &Scenario, model: ModelKind, modes: Option<&str>, out: &str) -> Result<RunReport, String> {
        let o = Overrides { model: Some(model), modes: modes.map(|m| m.parse::<ModeSpec>().unwrap()), seed: None };
        commands::run(scn, &o, &self.root.join(out)).map_err(|e| e.to_string())
    }
}

fn grid_2x3(ws: &Workspace, load_steps: usize, max_halvings: usize, extra: &str) -> Scenario {
    let b16 = ws.sample_module(16);
    let b24 = ws.sample_module(24);
    let mut t = format!(
        "seed = 42\n[solver]\nload_steps = {load_steps}\nmax_halvings = {max_halvings}\n\
         [grid]\nrows = 2\ncols = 3\nsize = [100.0, 100.0]\nelements = [16, 16]\n\
         material = {{ young = 80000.0, poisson = 0.15 }}\n\
         [[grid.block]]\nrow = 0\ncol = 2\nelements = [24, 24]\n"
    );
    for s in [0, 3] {
        writeln!(t, "[[dirichlet]]\nsubstructure = {s}\nedge = \"left\"\nx = 0.0\ny = 0.0").unwrap();
    }
    for s in [2, 5] {
        writeln!(t, "[[dirichlet]]\nsubstructure = {s}\nedge = \"right\"\nx = 30.0\ny = 0.0").unwrap();
    }
    writeln!(t, "[reaction]\nsubstructures = [2, 5]\nedge = \"right\"\ncomponent = \"x\"\ndisplacement = 30.0")
        .unwrap();
    writeln!(
        t,
        "[rom]\nmodes = \"40:15\"\nbases = [\n  {{ file = {:?}, substructures = [0, 1, 3, 4, 5] }},\n  {{ file = {:?}, substructures = [2] }},\n]",
        b16, b24
    )
    .unwrap();
    t.push_str(extra);
    ws.scenario(&format!("grid_{load_steps}_{max_halvings}"), &t)
}

fn c7_grid_rom(ws: &Workspace) -> Outcome {
    let scn = grid_2x3(ws, 8, 3, "");
    let fom = ws.run(&scn, ModelKind::Fom, None, "c7_fom")?;
    let rom = ws.run(&scn, ModelKind::Rom, None, "c7_rom")?;
    let cmp = compare_runs(&ws.root.join("c7_fom"), &ws.root.join("c7_rom")).map_err(|e| e.to_string())?;
    check!(rom.dofs.reduced == Some(6 * 40 + 7 * 15), "reduced size {:?}", rom.dofs.reduced);
    check!(cmp.max_relative_force_error <= 0.02, "force error {:e}", cmp.max_relative_force_error);
    let forces = |d: &str| -> Vec<f64> {
        std::fs::read_to_string(ws.root.join(d).join("curve.csv"))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
            .collect()
    };
    let (ff, fr) = (forces("c7_fom"), forces("c7_rom"));
    let by_hand = ff.iter().zip(&fr).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        / ff.iter().map(|f| f.abs()).fold(0.0, f64::max);
    check!(
        (by_hand - cmp.max_relative_force_error).abs() <= 1e-12 * by_hand,
        "reported {:e}, recomputed {by_hand:e}",
        cmp.max_relative_force_error
    );
    check!(
        rom.timing.solve_s < fom.timing.solve_s,
        "ROM solve {} s, FOM solve {} s",
        rom.timing.solve_s,
        fom.timing.solve_s
    );
    let (rt, tt) = (cmp.reference_timing.unwrap(), cmp.test_timing.unwrap());
    Ok((true, format!(
        "{} DOFs -> {}, max force error {:.2e}, solve {:.3} s vs {:.3} s; normalized FOM asm/solve/total {:.3}/{:.3}/{:.3}, ROM {:.3}/{:.3}/{:.3}",
        fom.dofs.full,
        rom.dofs.reduced.unwrap(),
        cmp.max_relative_force_error,
        rom.timing.solve_s,
        fom.timing.solve_s,
        rt.assembly,
        rt.solve,
        rt.total,
        tt.assembly,
        tt.solve,
        tt.total
    )))
}

fn c8_mode_sweep(ws: &Workspace) -> Outcome {
    let b16 = ws.sample_module(16);
    let mut t = String::from(
        "seed = 42\n[solver]\nload_steps = 8\n[grid]\nrows = 3\ncols = 3\nsize = [100.0, 100.0]\nelements = [16, 16]\n\
         material = { young = 80000.0, poisson = 0.15 }\n",
    );
    for r in 0..3 {
        for c in 0..3 {
            if (r + c) % 2 == 1 {
                writeln!(t, "[[grid.block]]\nrow = {r}\ncol = {c}\nmaterial = {{ young = 20000.0, poisson = 0.15 }}")
                    .unwrap();
            }
        }
    }
    for r in 0..3 {
        writeln!(t, "[[dirichlet]]\nsubstructure = {}\nedge = \"left\"\nx = 0.0\ny = 0.0", 3 * r).unwrap();
        writeln!(t, "[[dirichlet]]\nsubstructure = {}\nedge = \"right\"\nx = 0.0\ny = 30.0", 3 * r + 2).unwrap();
    }
    writeln!(t, "[reaction]\nsubstructures = [2, 5, 8]\nedge = \"right\"\ncomponent = \"y\"\ndisplacement = 30.0")
        .unwrap();
    writeln!(t, "[rom]\nbases = [{{ file = {b16:?}, substructures = [0, 1, 2, 3, 4, 5, 6, 7, 8] }}]").unwrap();
    let scn = ws.scenario("checkerboard", &t);
    ws.run(&scn, ModelKind::Fom, None, "c8_fom")?;
    let mut errors = Vec::new();
    for m in [50, 70, 90] {
        let out = format!("c8_rom{m}");
        ws.run(&scn, ModelKind::Rom, Some(&format!("{m}:20")), &out)?;
        let cmp = compare_runs(&ws.root.join("c8_fom"), &ws.root.join(&out)).map_err(|e| e.to_string())?;
        errors.push(cmp.max_relative_force_error);
    }
    let slack = 1e-6;
    check!(errors.windows(2).all(|w| w[1] <= w[0] + slack), "errors not decreasing: {errors:?}");
    Ok((true, format!("max force error 50/70/90 modes: {:.3e} / {:.3e} / {:.3e}", errors[0], errors[1], errors[2])))
}

fn c9_sampler_coverage() -> Outcome {
    let sub = Substructure::new(Mesh::structured(10, 10, 100.0, 100.0, [0.0, 0.0]).unwrap(), steel(), Loads::default())
        .unwrap();
    let eps = default_epsilon(&sub.material, &sub.mesh);
    let problem = ModuleProblem::new(sub, BcParametrization::module_example(), NewtonOptions::default()).unwrap();
    let config =
        || SamplerConfig { n_samples: 60, epsilon: eps, load_steps: 3, seed: 42, initial: InitialSnapshots::Bootstrap };
    let names = problem.parametrization.names();
    let a = run_sampling(&problem, &config()).unwrap();
    let b = run_sampling(&problem, &config()).unwrap();
    let (la, lb) = (log_csv(&names, &a.log), log_csv(&names, &b.log));
    check!(la.as_bytes() == lb.as_bytes(), "sampling logs differ between runs");
    let fresh = fresh_residuals(&problem, &a.basis.modes, 3, 42, 1000, 20);
    let ok = fresh.iter().filter(|&&r| r <= 10.0 * eps).count();
    check!(ok >= 18, "{ok}/20 fresh samples within 10 eps; residuals {fresh:?}");
    let worst = fresh.iter().copied().fold(0.0, f64::max);
    Ok((true, format!(
        "{ok}/20 fresh samples within 10 eps (eps {eps:.3e} N, worst {worst:.3e}), {} full solves, {} modes, log reproducible",
        a.full_solves,
        a.basis.n_modes()
    )))
}

/// Smallest uniform step count in `candidates` that converges without halving.
fn min_steps(ws: &Workspace, model: ModelKind, extra: &str, candidates: &[usize]) -> Option<usize> {
    candidates.iter().copied().find(|&n| {
        let scn = grid_2x3(ws, n, 0, extra);
        ws.run(&scn, model, None, &format!("c10_{}_{n}", model.name())).is_ok()
    })
}

fn c10_penalty(ws: &Workspace) -> Outcome {
    let penalty = "[penalty]\nscaled = 1.0\nreduced = true\n";
    let scn = grid_2x3(ws, 8, 3, penalty);
    ws.run(&scn, ModelKind::Fom, None, "c10_fom")?;
    ws.run(&scn, ModelKind::Rom, None, "c10_rom")?;
    ws.run(&scn, ModelKind::Penalty, None, "c10_penalty")?;
    let curve = |d: &str| read_curve(&ws.root.join(d)).unwrap();
    let (fom, rom, pen) = (curve("c10_fom"), curve("c10_rom"), curve("c10_penalty"));
    let below = pen.iter().zip(fom.iter().zip(&rom)).all(|(p, (f, r))| p.force < f.force && p.force < r.force);
    check!(below, "penalty forces are not below the mortar curves");
    let candidates = [1, 2, 3, 4, 6, 8, 12, 16];
    let ms = min_steps(ws, ModelKind::Rom, "", &candidates);
    let ps = min_steps(ws, ModelKind::Penalty, penalty, &candidates);
    let (reproduced, ratio) = match (ms, ps) {
        (Some(m), Some(p)) if p >= 2 * m => (true, format!("step ratio penalty/mortar {p}/{m}")),
        (Some(m), Some(p)) => {
            (false, format!("step ratio penalty/mortar {p}/{m}, the >= 2x property is not reproduced"))
        }
        (m, p) => (false, format!("step counts {m:?}/{p:?}, the >= 2x property is not reproduced")),
    };
    let last = |c: &[cbmor_core::coupled::CurvePoint]| c.last().unwrap().force;
    Ok((
        reproduced,
        format!(
            "final force penalty {:.4e} < mortar ROM {:.4e}, FOM {:.4e}; {ratio}",
            last(&pen),
            last(&rom),
            last(&fom)
        ),
    ))
}

fn report(id: usize, title: &str, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default())
    });
    let secs = start.elapsed().as_secs_f64();
    let (status, msg) = match &result {
        Ok((true, msg)) => ("PASS   ", msg),
        Ok((false, msg)) => ("PARTIAL", msg),
        Err(msg) => ("FAIL   ", msg),
    };
    println!("criterion {id:>2} {status} {title}: {msg} [{secs:.1} s]");
    result
}

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |id: usize| filter.is_empty() || filter.iter().any(|f| f == &id.to_string());
    let ws = Workspace::new();
    let criteria: Vec<(usize, &str, Box<dyn FnOnce() -> Outcome + '_>)> = vec![
        (1, "reduced DOF accounting", Box::new(c1_dof_accounting)),
        (2, "dual mortar structure", Box::new(c2_dual_mortar_structure)),
        (3, "non-matching patch test", Box::new(c3_patch_test)),
        (4, "condensed solve vs saddle point", Box::new(c4_condensation)),
        (5, "identity-basis ROM equals FOM", Box::new(c5_identity_rom)),
        (6, "tangent consistency", Box::new(c6_tangents)),
        (7, "2x3 grid ROM accuracy and solve speedup", Box::new(|| c7_grid_rom(&ws))),
        (8, "mode sweep on 80/20 GPa checkerboard", Box::new(|| c8_mode_sweep(&ws))),
        (9, "sampler coverage and reproducibility", Box::new(c9_sampler_coverage)),
        (10, "penalty baseline", Box::new(|| c10_penalty(&ws))),
        (11, "POD identities", Box::new(c11_pod_identities)),
    ];
    let (mut passed, mut partial, mut failed) = (0, 0, 0);
    for (id, title, f) in criteria {
        if wanted(id) {
            match report(id, title, f) {
                Ok((true, _)) => passed += 1,
                Ok((false, _)) => partial += 1,
                Err(_) => failed += 1,
            }
        }
    }
    println!("acceptance: {passed} passed, {partial} partial, {failed} failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
