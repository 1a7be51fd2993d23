use nalgebra::{DMatrix, DVector};

use super::CoupledModel;
use crate::error::{Error, Result};

/// Solves the linearized, indefinite multiplier system directly:
///
/// ```text
/// [ K_s   B_s^T ] [dU    ]   [ -G_s     ]
/// [ B_s   0     ] [Lambda] = [ -B U     ]
/// ```
///
/// with `B = [D, -M]` per interface. Dirichlet DOFs are eliminated and moved to their
/// ramped targets. Returns the increments per substructure and the multipliers per interface.
/// Dense; intended as a reference for small systems.
pub fn solve_saddle_point(model: &CoupledModel, states: &[Vec<f64>], t: f64) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let systems = model.assemble_substructures(states, t)?;
    let offsets: Vec<usize> = model.layout.substructures.iter().map(|s| s.offset).collect();
    let n_u = model.layout.total_dofs();
    let mut m_off = Vec::new();
    let mut n = n_u;
    for ops in &model.mortar {
        m_off.push(n);
        n += 2 * ops.slave_nodes.len();
    }
    let mut a = DMatrix::zeros(n, n);
    let mut b = DVector::zeros(n);
    for (s, (g, k)) in systems.iter().enumerate() {
        let o = offsets[s];
        for i in 0..k.nrows() {
            let (cols, vals) = k.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                a[(o + i, o + j)] = v;
            }
            b[o + i] = -g[i];
        }
    }
    for (j, (itf, ops)) in model.layout.interfaces.iter().zip(&model.mortar).enumerate() {
        let gap = ops.gap(&states[itf.slave], &states[itf.master]);
        let (os, om) = (offsets[itf.slave], offsets[itf.master]);
        for (r, &sn) in ops.slave_nodes.iter().enumerate() {
            for c in 0..2 {
                let row = m_off[j] + 2 * r + c;
                let sd = os + 2 * sn + c;
                a[(row, sd)] = ops.d[(r, r)];
                a[(sd, row)] = ops.d[(r, r)];
                for (kk, &mn) in ops.master_nodes.iter().enumerate() {
                    let md = om + 2 * mn + c;
                    a[(row, md)] = -ops.m[(r, kk)];
                    a[(md, row)] = -ops.m[(r, kk)];
                }
                b[row] = -gap[2 * r + c];
            }
        }
    }
    let mut fixed = Vec::new();
    for (s, dir) in model.dirichlet.iter().enumerate() {
        for (&d, &v) in dir {
            let i = offsets[s] + d;
            fixed.push((i, t * v - states[s][d]));
        }
    }
    for &(i, delta) in &fixed {
        for r in 0..n {
            if r != i {
                b[r] -= a[(r, i)] * delta;
            }
        }
    }
    for &(i, delta) in &fixed {
        for r in 0..n {
            a[(r, i)] = 0.0;
            a[(i, r)] = 0.0;
        }
        a[(i, i)] = 1.0;
        b[i] = delta;
    }
    let lu = a.lu();
    let x = lu.solve(&b).ok_or(Error::SingularSystem { row: 0, pivot: 0.0 })?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem { row: 0, pivot: 0.0 });
    }
    let du = model.layout.substructures.iter().map(|s| x.as_slice()[s.offset..s.offset + s.n_dofs].to_vec()).collect();
    let lambda = model
        .mortar
        .iter()
        .enumerate()
        .map(|(j, ops)| x.as_slice()[m_off[j]..m_off[j] + 2 * ops.slave_nodes.len()].to_vec())
        .collect();
    Ok((du, lambda))
}
