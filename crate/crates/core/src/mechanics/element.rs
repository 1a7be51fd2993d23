use nalgebra::{Matrix2, SMatrix, SVector};

use super::material::{pk2_stress_and_tangent, NeoHooke};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::quadrature::{line2_shape, q4_shape, q4_shape_derivatives, quad_rule_2x2, GAUSS_2};

pub type ElementVector = SVector<f64, 8>;
pub type ElementMatrix = SMatrix<f64, 8, 8>;

/// Reference gradients `dN_a/dX` and the weight `w det J` at one Gauss point.
fn gauss_point_data(coords: &[Point; 4], xi: f64, eta: f64) -> Result<([[f64; 2]; 4], f64)> {
    let dn = q4_shape_derivatives(xi, eta);
    let mut jac = Matrix2::zeros();
    for a in 0..4 {
        for r in 0..2 {
            for c in 0..2 {
                jac[(r, c)] += coords[a][r] * dn[a][c];
            }
        }
    }
    let det = jac.determinant();
    if !(det > 0.0) {
        return Err(Error::InvalidMesh(format!("non-positive reference Jacobian {det}")));
    }
    let inv = jac.try_inverse().expect("positive determinant");
    let mut grad = [[0.0; 2]; 4];
    for a in 0..4 {
        for i in 0..2 {
            grad[a][i] = dn[a][0] * inv[(0, i)] + dn[a][1] * inv[(1, i)];
        }
    }
    Ok((grad, det))
}

fn deformation_gradient(grad: &[[f64; 2]; 4], u: &[f64; 8]) -> Matrix2<f64> {
    let mut f = Matrix2::identity();
    for a in 0..4 {
        for i in 0..2 {
            for j in 0..2 {
                f[(i, j)] += u[2 * a + i] * grad[a][j];
            }
        }
    }
    f
}

/// Internal force minus body-force load and the consistent tangent of one Q4 element.
///
/// DOFs are ordered `[u_x0, u_y0, u_x1, ...]`. Inversion errors carry element id 0.
pub fn element_residual_tangent(
    coords: &[Point; 4],
    u: &[f64; 8],
    material: &NeoHooke,
    body_force: [f64; 2],
) -> Result<(ElementVector, ElementMatrix)> {
    let mut r = ElementVector::zeros();
    let mut k = ElementMatrix::zeros();
    for (xi, eta, w) in quad_rule_2x2() {
        let (grad, det) = gauss_point_data(coords, xi, eta)?;
        let wd = w * det;
        let f = deformation_gradient(&grad, u);
        let (s, c4) = pk2_stress_and_tangent(&f, material)?;
        let p = f * s;
        let n = q4_shape(xi, eta);
        for a in 0..4 {
            for i in 0..2 {
                r[2 * a + i] += wd * (p[(i, 0)] * grad[a][0] + p[(i, 1)] * grad[a][1] - n[a] * body_force[i]);
            }
        }
        // fg[a][i][I][J] = F_iI dN_a/dX_J, the variation of E for a unit displacement of (a, i)
        let mut fg = [[[0.0; 2]; 2]; 8];
        for a in 0..4 {
            for i in 0..2 {
                for ii in 0..2 {
                    for jj in 0..2 {
                        fg[2 * a + i][ii][jj] = f[(i, ii)] * grad[a][jj];
                    }
                }
            }
        }
        let mut cfg = [[[0.0; 2]; 2]; 8];
        for (p_idx, row) in cfg.iter_mut().enumerate() {
            for ii in 0..2 {
                for jj in 0..2 {
                    let mut acc = 0.0;
                    for kk in 0..2 {
                        for ll in 0..2 {
                            acc += c4[ii][jj][kk][ll] * fg[p_idx][kk][ll];
                        }
                    }
                    row[ii][jj] = acc;
                }
            }
        }
        for a in 0..4 {
            for b in 0..4 {
                let mut geo = 0.0;
                for ii in 0..2 {
                    for jj in 0..2 {
                        geo += grad[a][ii] * s[(ii, jj)] * grad[b][jj];
                    }
                }
                for i in 0..2 {
                    for kdir in 0..2 {
                        let (pa, pb) = (2 * a + i, 2 * b + kdir);
                        let mut mat = 0.0;
                        for ii in 0..2 {
                            for jj in 0..2 {
                                mat += fg[pa][ii][jj] * cfg[pb][ii][jj];
                            }
                        }
                        let g = if i == kdir { geo } else { 0.0 };
                        k[(pa, pb)] += wd * (mat + g);
                    }
                }
            }
        }
    }
    Ok((r, k))
}

/// Second Piola-Kirchhoff stress at the four Gauss points of an element.
pub fn element_stresses(coords: &[Point; 4], u: &[f64; 8], material: &NeoHooke) -> Result<[Matrix2<f64>; 4]> {
    let mut out = [Matrix2::zeros(); 4];
    for (g, (xi, eta, _)) in quad_rule_2x2().into_iter().enumerate() {
        let (grad, _) = gauss_point_data(coords, xi, eta)?;
        let f = deformation_gradient(&grad, u);
        out[g] = pk2_stress_and_tangent(&f, material)?.0;
    }
    Ok(out)
}

/// Cauchy stress at the four Gauss points of an element.
pub fn element_cauchy_stresses(coords: &[Point; 4], u: &[f64; 8], material: &NeoHooke) -> Result<[Matrix2<f64>; 4]> {
    let mut out = [Matrix2::zeros(); 4];
    for (g, (xi, eta, _)) in quad_rule_2x2().into_iter().enumerate() {
        let (grad, _) = gauss_point_data(coords, xi, eta)?;
        let f = deformation_gradient(&grad, u);
        let s = pk2_stress_and_tangent(&f, material)?.0;
        out[g] = f * s * f.transpose() / f.determinant();
    }
    Ok(out)
}

/// Consistent nodal forces of a constant dead traction on a straight edge `[p0, p1]`.
pub fn edge_traction_forces(p0: Point, p1: Point, traction: [f64; 2]) -> [f64; 4] {
    let len = ((p1[0] - p0[0]).powi(2) + (p1[1] - p0[1]).powi(2)).sqrt();
    let mut out = [0.0; 4];
    for (x, w) in GAUSS_2 {
        let n = line2_shape(0.5 * (x + 1.0));
        for a in 0..2 {
            for i in 0..2 {
                out[2 * a + i] += 0.5 * w * len * n[a] * traction[i];
            }
        }
    }
    out
}
