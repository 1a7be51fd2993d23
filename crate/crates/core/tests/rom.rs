mod common;

use cbmor_core::coupled::{newton_solve_coupled, CoupledSystem};
use cbmor_core::pod::{compute_pod_matrix, orthonormalize};
use cbmor_core::rom::{newton_solve_rom, recover_lagrange_rom, reduce_system, ModeCounts, ReducedModel};
use cbmor_core::solver::{uniform_schedule, Discretization, NewtonOptions};
use cbmor_core::Execution;
use common::*;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_orthonormal(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    orthonormalize(&DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)))
}

#[test]
fn identity_basis_reproduces_full_order() {
    let model = two_block_stretch((3, 3), (4, 4), 10.0, 3.0, Execution::Parallel);
    let system = CoupledSystem::new(&model).unwrap();
    let schedule = uniform_schedule(4);
    let fom = newton_solve_coupled(&system, &schedule, NewtonOptions::default());
    let rm = ReducedModel::identity(&system).unwrap();
    assert_eq!(rm.basis.dim(), system.n_condensed() - system.prescribed().len());
    let rom = newton_solve_rom(&system, &rm, &schedule, NewtonOptions::default());
    assert!(fom.failure.is_none() && rom.failure.is_none());
    for (a, b) in fom.states.iter().zip(&rom.states) {
        assert!(rel_diff(b, a) < 1e-10);
    }
}

#[test]
fn complete_rotated_basis_reproduces_full_order() {
    let model = two_block_stretch((2, 3), (3, 2), 10.0, 2.0, Execution::Parallel);
    let system = CoupledSystem::new(&model).unwrap();
    let bases: Vec<DMatrix<f64>> =
        model.substructures.iter().enumerate().map(|(s, sub)| random_orthonormal(sub.n_dofs(), s as u64)).collect();
    let counts = ModeCounts::uniform(2, 1, 1000, Some(1000));
    let rm = ReducedModel::from_bases(&system, &bases, &counts).unwrap();
    for q in rm.internal.iter().chain(&rm.interface) {
        assert!((q.transpose() * q - DMatrix::identity(q.ncols(), q.ncols())).abs().max() < 1e-12);
    }
    let fom = newton_solve_coupled(&system, &[0.5, 1.0], NewtonOptions::default());
    let rom = newton_solve_rom(&system, &rm, &[0.5, 1.0], NewtonOptions::default());
    for (a, b) in fom.states.iter().zip(&rom.states) {
        assert!(rel_diff(b, a) < 1e-9);
    }
}

#[test]
fn galerkin_projection_matches_dense() {
    let model = two_block_stretch((2, 2), (3, 3), 10.0, 1.0, Execution::Parallel);
    let system = CoupledSystem::new(&model).unwrap();
    let bases: Vec<DMatrix<f64>> = model
        .substructures
        .iter()
        .enumerate()
        .map(|(s, sub)| random_orthonormal(sub.n_dofs(), 10 + s as u64))
        .collect();
    let rm = ReducedModel::from_bases(&system, &bases, &ModeCounts::uniform(2, 1, 5, Some(3))).unwrap();
    let u: Vec<f64> = (0..system.n_condensed()).map(|i| 0.01 * (i as f64).sin()).collect();
    let ev = system.evaluate(&u, 0.5).unwrap();
    let (kr, gr) = reduce_system(&ev.residual, &ev.tangent, &rm.basis).unwrap();
    let psi = DMatrix::from_fn(system.n_condensed(), rm.basis.dim(), |i, j| {
        let mut e = nalgebra::DVector::zeros(rm.basis.dim());
        e[j] = 1.0;
        rm.basis.expand(&e)[i]
    });
    let k = ev.tangent.to_dense();
    let g = nalgebra::DVector::from_vec(ev.residual.clone());
    assert!((kr - psi.transpose() * k * &psi).abs().max() < 1e-8 * ev.tangent.to_dense().abs().max());
    assert!((gr - psi.transpose() * g).norm() < 1e-10 * nalgebra::DVector::from_vec(ev.residual).norm().max(1.0));
    assert_eq!(rm.count_reduced_dofs().1, rm.basis.dim());
}

#[test]
fn reduced_states_keep_interfaces_tied() {
    let model = two_block_stretch((3, 3), (4, 4), 10.0, 2.0, Execution::Parallel);
    let system = CoupledSystem::new(&model).unwrap();
    let fom = newton_solve_coupled(&system, &uniform_schedule(2), NewtonOptions::default());
    let snaps: Vec<DMatrix<f64>> = (0..2)
        .map(|s| {
            let cols: Vec<Vec<f64>> = fom.states.iter().map(|u| system.expand(u)[s].clone()).collect();
            DMatrix::from_fn(cols[0].len(), cols.len(), |i, j| cols[j][i])
        })
        .collect();
    let bases: Vec<DMatrix<f64>> = snaps.iter().map(|s| compute_pod_matrix(s, 2).unwrap().modes).collect();
    let rm = ReducedModel::from_bases(&system, &bases, &ModeCounts::uniform(2, 1, 2, Some(2))).unwrap();
    let rom = newton_solve_rom(&system, &rm, &uniform_schedule(2), NewtonOptions::default());
    assert!(rom.failure.is_none(), "{:?}", rom.failure);
    for u in &rom.states {
        assert!(model.max_gap(&system.expand(u)) < 1e-10);
    }
    // the snapshots span the full-order states, so the reduced solve lands on them
    assert!(rel_diff(rom.states.last().unwrap(), fom.states.last().unwrap()) < 1e-6);
}

#[test]
fn reduced_multipliers_match_full_recovery() {
    let model = two_block_stretch((2, 2), (3, 3), 10.0, 1.0, Execution::Parallel);
    let system = CoupledSystem::new(&model).unwrap();
    let rm = ReducedModel::identity(&system).unwrap();
    let mut u: Vec<f64> = (0..system.n_condensed()).map(|i| 0.02 * (i as f64).cos()).collect();
    for &(d, _) in system.prescribed() {
        u[d] = 0.0;
    }
    let (du, _, lambda) = system.linear_increment(&u, 0.0).unwrap();
    let da = rm.basis.project_vec(&du);
    assert!(rel_diff(&rm.basis.expand(&da), &du) < 1e-14);
    let lr = recover_lagrange_rom(&system, &rm, &u, 0.0, &da).unwrap();
    for (a, b) in lr.iter().zip(&lambda) {
        assert!(rel_diff(a, b) < 1e-10);
    }
}

#[test]
fn zero_increment_gives_residual_multipliers() {
    let model = two_block_stretch((2, 2), (3, 3), 10.0, 1.0, Execution::Parallel);
    let system = CoupledSystem::new(&model).unwrap();
    let rm = ReducedModel::identity(&system).unwrap();
    let fom = newton_solve_coupled(&system, &[1.0], NewtonOptions { tolerance: 1e-9, ..Default::default() });
    let u = fom.states.last().unwrap();
    let (_, _, lambda) = system.linear_increment(u, 1.0).unwrap();
    let lr = recover_lagrange_rom(&system, &rm, u, 1.0, &nalgebra::DVector::zeros(rm.basis.dim())).unwrap();
    for (a, b) in lr.iter().zip(&lambda) {
        assert!(rel_diff(a, b) < 1e-8);
    }
}

#[test]
fn nested_bases_reduce_projection_error() {
    let model = two_block_stretch((3, 3), (4, 4), 10.0, 3.0, Execution::Parallel);
    let system = CoupledSystem::new(&model).unwrap();
    let fom = newton_solve_coupled(&system, &uniform_schedule(6), NewtonOptions::default());
    let bases: Vec<DMatrix<f64>> = model
        .substructures
        .iter()
        .enumerate()
        .map(|(s, sub)| random_orthonormal(sub.n_dofs(), 20 + s as u64))
        .collect();
    let target = fom.states.last().unwrap();
    let mut last = f64::INFINITY;
    for m in [2, 5, 10, 20, 40] {
        let rm = ReducedModel::from_bases(&system, &bases, &ModeCounts::uniform(2, 1, m, Some(m.min(8)))).unwrap();
        let err = norm(
            &target.iter().zip(rm.basis.expand(&rm.basis.project_vec(target))).map(|(a, b)| a - b).collect::<Vec<_>>(),
        );
        assert!(err <= last + 1e-12, "m {m}: {err} > {last}");
        last = err;
    }
}

#[test]
fn mode_count_mismatch_is_rejected() {
    let model = two_block_stretch((2, 2), (3, 3), 10.0, 1.0, Execution::Sequential);
    let system = CoupledSystem::new(&model).unwrap();
    let bases = vec![DMatrix::identity(18, 18)];
    assert!(ReducedModel::from_bases(&system, &bases, &ModeCounts::uniform(1, 1, 3, None)).is_err());
    let short = vec![DMatrix::identity(5, 5), DMatrix::identity(32, 32)];
    assert!(ReducedModel::from_bases(&system, &short, &ModeCounts::uniform(2, 1, 3, None)).is_err());
    let partial = [None, Some(&short[1])];
    assert!(ReducedModel::from_partial_bases(&system, &partial, &ModeCounts::uniform(2, 1, 3, None)).is_ok());
}
