//! Per-wavenumber vertical eigenproblem of the Stokes operator.
//!
//! For a horizontal wavenumber magnitude `k > 0` the wall-normal velocity
//! profile solves
//!
//! ```text
//! (D^2 - k^2)^2 W = lambda (k^2 - D^2) W,   W(0) = W(1) = W'(0) = W'(1) = 0,
//! ```
//!
//! discretized by a Galerkin method in the clamped Legendre basis assembled
//! with Gauss quadrature on a boundary-clustered grid of `mv` points (exact
//! for the polynomial integrands), and solved as a dense generalized
//! symmetric eigenproblem via a Cholesky reduction.

use super::grid::gauss_legendre;
use super::legendre::clamped_tables;
use crate::error::Error;
use crate::Result;
use nalgebra::{DMatrix, DVector};

/// Solution of the vertical problem for one wavenumber magnitude.
#[derive(Debug, Clone)]
pub struct VerticalModes {
    /// Ascending eigenvalues of the retained (trustworthy) modes.
    pub lambdas: Vec<f64>,
    /// Clamped-Legendre coefficient vectors, one per retained mode,
    /// normalized so that the induced velocity eigenfunction has unit
    /// L2 norm and a deterministic sign.
    pub coeffs: Vec<Vec<f64>>,
}

/// Solves the vertical eigenproblem at wavenumber magnitude `k` with
/// resolution `mv`, keeping the lower half of the discrete spectrum.
pub fn solve_vertical(k: f64, mv: usize) -> Result<VerticalModes> {
    assert!(k > 0.0);
    assert!(mv >= 8);
    let m = mv - 4;
    let keep = m / 2;

    let (xg, wg) = gauss_legendre(mv);
    // z = (x+1)/2 on (0,1); d/dz = 2 d/dx; weights halve.
    let tab = clamped_tables(&xg, m);
    let w: Vec<f64> = wg.iter().map(|t| 0.5 * t).collect();

    let weighted_gram = |da: usize, db: usize, cha: f64, chb: f64| -> DMatrix<f64> {
        let mut g = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let mut s = 0.0;
                for (q, &wq) in w.iter().enumerate() {
                    s += wq * tab[da][i][q] * tab[db][j][q];
                }
                let v = cha * chb * s;
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    };

    // a(W,V) = (W'',V'') + 2k^2 (W',V') + k^4 (W,V)
    // b(W,V) = (W',V') + k^2 (W,V)
    let g0 = weighted_gram(0, 0, 1.0, 1.0);
    let g1 = weighted_gram(1, 1, 2.0, 2.0);
    let g2 = weighted_gram(2, 2, 4.0, 4.0);
    let k2 = k * k;
    let a = &g2 + &g1 * (2.0 * k2) + &g0 * (k2 * k2);
    let b = &g1 + &g0 * k2;

    let chol = nalgebra::Cholesky::new(b.clone()).ok_or_else(|| {
        Error::BasisConstruction(0, 0, format!("mass matrix not positive definite at k = {k}"))
    })?;
    let l = chol.l();
    // C = L^-1 A L^-T, kept symmetric explicitly.
    let x = l
        .solve_lower_triangular(&a)
        .ok_or_else(|| Error::BasisConstruction(0, 0, "singular triangular factor".into()))?;
    let c = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::BasisConstruction(0, 0, "singular triangular factor".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = c.symmetric_eigen();

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());

    let lt = l.transpose();
    let mut lambdas = Vec::with_capacity(keep);
    let mut coeffs = Vec::with_capacity(keep);
    for &idx in order.iter().take(keep) {
        let lam = eig.eigenvalues[idx];
        if !lam.is_finite() || lam <= 0.0 {
            return Err(Error::BasisConstruction(
                0,
                0,
                format!("nonpositive vertical eigenvalue {lam} at k = {k}"),
            ));
        }
        let y: DVector<f64> = eig.eigenvectors.column(idx).into_owned();
        let mut cvec = lt
            .solve_upper_triangular(&y)
            .ok_or_else(|| Error::BasisConstruction(0, 0, "singular triangular factor".into()))?;
        // Velocity normalization: |u|^2 = b(W,W)/k^2, and b(c,c) = y.y = 1
        // already by construction; rescale explicitly for safety.
        let bq = (cvec.transpose() * &b * &cvec)[(0, 0)];
        cvec *= k / bq.sqrt();
        // Deterministic sign: largest-magnitude coefficient positive,
        // first index on ties.
        let mut pick = 0;
        for i in 1..m {
            if cvec[i].abs() > cvec[pick].abs() {
                pick = i;
            }
        }
        if cvec[pick] < 0.0 {
            cvec = -cvec;
        }
        lambdas.push(lam);
        coeffs.push(cvec.as_slice().to_vec());
    }
    Ok(VerticalModes { lambdas, coeffs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::legendre::eval_clamped_combination;
    use std::f64::consts::PI;

    #[test]
    fn eigenvalues_exceed_k2_plus_pi2_scale() {
        let k = PI;
        let vm = solve_vertical(k, 32).unwrap();
        assert!(vm.lambdas[0] > k * k + PI * PI);
        for w in vm.lambdas.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn profiles_are_clamped_and_normalized() {
        let k = 2.0 * PI;
        let vm = solve_vertical(k, 32).unwrap();
        let z = [0.0, 1.0];
        for c in &vm.coeffs {
            let vals = eval_clamped_combination(c, &z);
            assert!(vals[0][0].abs() < 1e-10);
            assert!(vals[0][1].abs() < 1e-10);
            assert!(vals[1][0].abs() < 1e-9);
            assert!(vals[1][1].abs() < 1e-9);
        }
        // unit velocity norm: (1/k^2)||W'||^2 + ||W||^2 = 1 via quadrature
        let (xg, wg) = gauss_legendre(64);
        let zq: Vec<f64> = xg.iter().map(|t| 0.5 * (t + 1.0)).collect();
        let vals = eval_clamped_combination(&vm.coeffs[0], &zq);
        let mut nrm = 0.0;
        for q in 0..zq.len() {
            let wq = 0.5 * wg[q];
            nrm += wq * (vals[1][q] * vals[1][q] / (k * k) + vals[0][q] * vals[0][q]);
        }
        assert!((nrm - 1.0).abs() < 1e-10, "norm {nrm}");
    }

    #[test]
    fn refinement_is_stable() {
        let k = PI;
        let a = solve_vertical(k, 32).unwrap();
        let b = solve_vertical(k, 64).unwrap();
        for (x, y) in a.lambdas.iter().take(8).zip(b.lambdas.iter()) {
            assert!((x - y).abs() < 1e-8, "{x} vs {y}");
        }
    }
}
