//! Gauss rules and Lagrange shape functions on the reference square and line.

/// Two-point Gauss rule on [-1, 1] as (point, weight) pairs.
pub const GAUSS_2: [(f64, f64); 2] = [(-0.577_350_269_189_625_8, 1.0), (0.577_350_269_189_625_8, 1.0)];

/// Three-point Gauss rule on [-1, 1].
pub const GAUSS_3: [(f64, f64); 3] =
    [(-0.774_596_669_241_483_4, 5.0 / 9.0), (0.0, 8.0 / 9.0), (0.774_596_669_241_483_4, 5.0 / 9.0)];

/// Tensor-product 2x2 rule on the reference square: `(xi, eta, weight)`.
pub fn quad_rule_2x2() -> [(f64, f64, f64); 4] {
    let mut out = [(0.0, 0.0, 0.0); 4];
    let mut k = 0;
    for &(eta, we) in &GAUSS_2 {
        for &(xi, wx) in &GAUSS_2 {
            out[k] = (xi, eta, wx * we);
            k += 1;
        }
    }
    out
}

/// Bilinear shape functions of the 4-node quad, nodes counter-clockwise from (-1,-1).
pub fn q4_shape(xi: f64, eta: f64) -> [f64; 4] {
    [
        0.25 * (1.0 - xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 + eta),
        0.25 * (1.0 - xi) * (1.0 + eta),
    ]
}

/// Derivatives `[dN/dxi, dN/deta]` of the bilinear shape functions.
pub fn q4_shape_derivatives(xi: f64, eta: f64) -> [[f64; 2]; 4] {
    [
        [-0.25 * (1.0 - eta), -0.25 * (1.0 - xi)],
        [0.25 * (1.0 - eta), -0.25 * (1.0 + xi)],
        [0.25 * (1.0 + eta), 0.25 * (1.0 + xi)],
        [-0.25 * (1.0 + eta), 0.25 * (1.0 - xi)],
    ]
}

/// Linear shape functions of a 2-node line element in the unit parameter `s` in [0, 1].
pub fn line2_shape(s: f64) -> [f64; 2] {
    [1.0 - s, s]
}
