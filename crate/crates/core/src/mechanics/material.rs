use nalgebra::Matrix2;

use crate::error::{Error, Result};

/// Fourth-order material tangent `C[i][j][k][l] = dS_ij / dE_kl`.
pub type Tangent4 = [[[[f64; 2]; 2]; 2]; 2];

/// Compressible Neo-Hookean solid in plane strain, Lamé parameters in MPa.
///
/// `W = mu/2 (tr C - 2) - mu ln J + lambda/2 (ln J)^2`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeoHooke {
    pub lambda: f64,
    pub mu: f64,
}

impl NeoHooke {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidMaterial(format!("shear modulus must be positive, got {mu}")));
        }
        if !(lambda + 2.0 * mu / 3.0 > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidMaterial(format!(
                "bulk modulus lambda + 2 mu / 3 must be positive, got {}",
                lambda + 2.0 * mu / 3.0
            )));
        }
        Ok(Self { lambda, mu })
    }

    pub fn from_young_poisson(young: f64, poisson: f64) -> Result<Self> {
        if !(young > 0.0) || !(poisson > -1.0 && poisson < 0.5) {
            return Err(Error::InvalidMaterial(format!(
                "need E > 0 and -1 < nu < 0.5, got E = {young}, nu = {poisson}"
            )));
        }
        let lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
        let mu = young / (2.0 * (1.0 + poisson));
        Self::new(lambda, mu)
    }

    /// `(E, nu)` of this material.
    pub fn young_poisson(&self) -> (f64, f64) {
        let (l, m) = (self.lambda, self.mu);
        (m * (3.0 * l + 2.0 * m) / (l + m), l / (2.0 * (l + m)))
    }

    pub fn strain_energy(&self, f: &Matrix2<f64>) -> Result<f64> {
        let j = f.determinant();
        if !(j > 0.0) {
            return Err(Error::ElementInversion { element: 0, det: j });
        }
        let c = f.transpose() * f;
        let lnj = j.ln();
        Ok(0.5 * self.mu * (c.trace() - 2.0) - self.mu * lnj + 0.5 * self.lambda * lnj * lnj)
    }
}

/// Second Piola-Kirchhoff stress and material tangent for deformation gradient `f`.
///
/// `S = mu (I - C^-1) + lambda ln J C^-1` and
/// `C_ijkl = lambda Ci_ij Ci_kl + (mu - lambda ln J)(Ci_ik Ci_jl + Ci_il Ci_jk)`.
/// An inverted state is reported as [`Error::ElementInversion`] with element 0; the
/// element routines replace the id.
pub fn pk2_stress_and_tangent(f: &Matrix2<f64>, material: &NeoHooke) -> Result<(Matrix2<f64>, Tangent4)> {
    let j = f.determinant();
    if !(j > 0.0) || !j.is_finite() {
        return Err(Error::ElementInversion { element: 0, det: j });
    }
    let c = f.transpose() * f;
    let ci = c.try_inverse().ok_or(Error::ElementInversion { element: 0, det: j })?;
    let lnj = j.ln();
    let s = (Matrix2::identity() - ci) * material.mu + ci * (material.lambda * lnj);
    let coef = material.mu - material.lambda * lnj;
    let mut t = [[[[0.0; 2]; 2]; 2]; 2];
    for i in 0..2 {
        for jj in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    t[i][jj][k][l] = material.lambda * ci[(i, jj)] * ci[(k, l)]
                        + coef * (ci[(i, k)] * ci[(jj, l)] + ci[(i, l)] * ci[(jj, k)]);
                }
            }
        }
    }
    Ok((s, t))
}
