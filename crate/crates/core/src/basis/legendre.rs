//! Legendre polynomials and the clamped combination basis used for the
//! vertical Stokes eigenproblem.
//!
//! The clamped basis on `[-1, 1]` is
//! `phi_i = L_i - 2(2i+5)/(2i+7) L_{i+2} + (2i+3)/(2i+7) L_{i+4}`,
//! which satisfies `phi_i(+-1) = phi_i'(+-1) = 0` exactly.

/// Values and first three derivatives of `L_0..=L_nmax` at the points `x`.
/// Returned as four row-major tables with shape `(nmax+1, x.len())`.
pub fn legendre_tables(x: &[f64], nmax: usize) -> [Vec<Vec<f64>>; 4] {
    let n = x.len();
    let mut p = vec![vec![0.0; n]; nmax + 1];
    let mut dp = vec![vec![0.0; n]; nmax + 1];
    let mut d2p = vec![vec![0.0; n]; nmax + 1];
    let mut d3p = vec![vec![0.0; n]; nmax + 1];
    for (i, &xi) in x.iter().enumerate() {
        p[0][i] = 1.0;
        if nmax >= 1 {
            p[1][i] = xi;
            dp[1][i] = 1.0;
        }
        for k in 1..nmax {
            let a = (2 * k + 1) as f64;
            p[k + 1][i] = (a * xi * p[k][i] - k as f64 * p[k - 1][i]) / (k + 1) as f64;
            dp[k + 1][i] = dp[k - 1][i] + a * p[k][i];
            d2p[k + 1][i] = d2p[k - 1][i] + a * dp[k][i];
            d3p[k + 1][i] = d3p[k - 1][i] + a * d2p[k][i];
        }
    }
    [p, dp, d2p, d3p]
}

/// Recombination coefficients of the clamped basis function `phi_i`.
pub fn clamped_coeffs(i: usize) -> (f64, f64) {
    let i = i as f64;
    (-2.0 * (2.0 * i + 5.0) / (2.0 * i + 7.0), (2.0 * i + 3.0) / (2.0 * i + 7.0))
}

/// Evaluates the clamped basis (derivative order 0..=3) at the points `x`.
/// Result `tables[d][i][j] = phi_i^{(d)}(x[j])` for `i < m`.
pub fn clamped_tables(x: &[f64], m: usize) -> [Vec<Vec<f64>>; 4] {
    let leg = legendre_tables(x, m + 3 + 1);
    let n = x.len();
    let mut out: [Vec<Vec<f64>>; 4] = [
        vec![vec![0.0; n]; m],
        vec![vec![0.0; n]; m],
        vec![vec![0.0; n]; m],
        vec![vec![0.0; n]; m],
    ];
    for i in 0..m {
        let (c2, c4) = clamped_coeffs(i);
        for d in 0..4 {
            for j in 0..n {
                out[d][i][j] = leg[d][i][j] + c2 * leg[d][i + 2][j] + c4 * leg[d][i + 4][j];
            }
        }
    }
    out
}

/// Evaluates a modal combination `W(z) = sum c_i phi_i(2z - 1)` with its
/// first three z-derivatives at the given z points on `(0, 1)`.
pub fn eval_clamped_combination(coeffs: &[f64], z: &[f64]) -> [Vec<f64>; 4] {
    let x: Vec<f64> = z.iter().map(|&t| 2.0 * t - 1.0).collect();
    let tab = clamped_tables(&x, coeffs.len());
    let mut out = [
        vec![0.0; z.len()],
        vec![0.0; z.len()],
        vec![0.0; z.len()],
        vec![0.0; z.len()],
    ];
    // chain rule: d/dz = 2 d/dx
    let chain = [1.0, 2.0, 4.0, 8.0];
    for (d, ch) in chain.iter().enumerate() {
        for (i, &c) in coeffs.iter().enumerate() {
            for j in 0..z.len() {
                out[d][j] += ch * c * tab[d][i][j];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamped_basis_vanishes_with_derivative_at_endpoints() {
        let x = [-1.0, 1.0];
        let tab = clamped_tables(&x, 12);
        for i in 0..12 {
            for j in 0..2 {
                assert!(tab[0][i][j].abs() < 1e-12, "phi_{i} at endpoint");
                assert!(tab[1][i][j].abs() < 1e-11, "phi_{i}' at endpoint");
            }
        }
    }

    #[test]
    fn legendre_values_match_known_polynomials() {
        let x = [0.3, -0.7];
        let tab = legendre_tables(&x, 3);
        for (j, &t) in x.iter().enumerate() {
            assert!((tab[0][2][j] - 0.5 * (3.0 * t * t - 1.0)).abs() < 1e-15);
            assert!((tab[0][3][j] - 0.5 * (5.0 * t * t * t - 3.0 * t)).abs() < 1e-15);
            assert!((tab[1][2][j] - 3.0 * t).abs() < 1e-15);
            assert!((tab[2][3][j] - 15.0 * t).abs() < 1e-14);
            assert!((tab[3][3][j] - 15.0).abs() < 1e-14);
        }
    }
}
