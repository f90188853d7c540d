//! Adaptive high-order reference integrator.
//!
//! Dormand-Prince 5(4) with PI step control applied to the identical
//! right-hand side, augmented with quadrature variables that integrate the
//! seven energy integrands alongside the state, so energy-identity
//! residuals of oracle trajectories reflect only the controlled local
//! error and not a sampling rule.

use super::{Scheme, System, Trajectory};
use crate::error::Error;
use crate::field::{Field, State};
use crate::Result;

/// Hard cap on the modal dimension accepted by the oracle.
pub const ORACLE_DIM_CAP: usize = 2000;

struct Flat {
    nu: usize,
    ng: usize,
    nth: usize,
}

impl Flat {
    fn dim(&self) -> usize {
        self.nu + self.ng + self.nth + 7
    }

    fn pack(&self, s: &State) -> Vec<f64> {
        let mut y = Vec::with_capacity(self.dim());
        y.extend_from_slice(&s.u.coeffs);
        y.extend_from_slice(&s.gamma.coeffs);
        y.extend_from_slice(&s.theta.coeffs);
        y.extend_from_slice(&[0.0; 7]);
        y
    }

    fn unpack(&self, sys: &System, t: f64, y: &[f64]) -> Result<State> {
        let (u, rest) = y.split_at(self.nu);
        let (g, rest) = rest.split_at(self.ng);
        let (th, _) = rest.split_at(self.nth);
        State::new(
            t,
            Field::new(sys.bases.stokes.clone(), u.to_vec())?,
            Field::new(sys.bases.vector.clone(), g.to_vec())?,
            Field::new(sys.bases.scalar.clone(), th.to_vec())?,
        )
    }

    fn integrals(&self, y: &[f64]) -> [f64; 7] {
        let o = self.nu + self.ng + self.nth;
        [y[o], y[o + 1], y[o + 2], y[o + 3], y[o + 4], y[o + 5], y[o + 6]]
    }
}

impl System {
    /// The seven energy integrands at given coefficients:
    /// `[|grad u|^2, |grad g|^2, |div g|^2, |g|^2, |grad th|^2,
    ///   (rot g, u), (theta, u3)]`.
    pub fn energy_integrands(&self, u: &[f64], g: &[f64], th: &[f64]) -> [f64; 7] {
        use crate::util::pairwise_sum_by;
        let lu = &self.bases.stokes;
        let lg = &self.bases.vector;
        let lth = &self.bases.scalar;
        let h1u = pairwise_sum_by(u.len(), |i| lu.modes[i].lambda * u[i] * u[i]);
        let h1g = pairwise_sum_by(g.len(), |i| lg.modes[i].lambda * g[i] * g[i]);
        let h1th = pairwise_sum_by(th.len(), |i| lth.modes[i].lambda * th[i] * th[i]);
        let gl2 = pairwise_sum_by(g.len(), |i| g[i] * g[i]);
        let dd = self.divdiv_op.bilinear(g, g);
        let mut tmp = vec![0.0; u.len()];
        self.rot_op.apply(g, &mut tmp);
        let rot = pairwise_sum_by(u.len(), |i| u[i] * tmp[i]);
        self.buoy_op.apply(th, &mut tmp);
        let buoy = pairwise_sum_by(u.len(), |i| u[i] * tmp[i]);
        [h1u, h1g, dd, gl2, h1th, rot, buoy]
    }
}

fn deriv(sys: &System, flat: &Flat, t: f64, y: &[f64]) -> Result<Vec<f64>> {
    let state = flat.unpack(sys, t, y)?;
    let tend = sys.rhs(&state)?;
    let mut dy = Vec::with_capacity(flat.dim());
    dy.extend_from_slice(&tend.du);
    dy.extend_from_slice(&tend.dgamma);
    dy.extend_from_slice(&tend.dtheta);
    let ints =
        sys.energy_integrands(&state.u.coeffs, &state.gamma.coeffs, &state.theta.coeffs);
    dy.extend_from_slice(&ints);
    Ok(dy)
}

/// Adaptive reference integration with local relative error controlled at
/// `tol` (absolute floor `1e-3 * tol`). Every accepted step contributes a
/// diagnostics row and an exact cumulative-integral row.
pub fn oracle_integrate(sys: &System, s0: &State, horizon: f64, tol: f64) -> Result<Trajectory> {
    assert!(horizon >= 0.0);
    assert!(tol > 0.0);
    let dim = s0.dim();
    if dim > ORACLE_DIM_CAP {
        return Err(Error::DimensionCap { dim, cap: ORACLE_DIM_CAP });
    }
    let flat = Flat {
        nu: s0.u.coeffs.len(),
        ng: s0.gamma.coeffs.len(),
        nth: s0.theta.coeffs.len(),
    };

    // Dormand-Prince 5(4) tableau.
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] =
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];

    let atol = 1e-3 * tol;
    let mut t = s0.t;
    let t_end = s0.t + horizon;
    let mut y = flat.pack(s0);
    let mut diag = vec![sys.diagnostics(s0)];
    let mut integrals = vec![flat.integrals(&y)];
    let mut snapshots = vec![s0.clone()];

    let mut h = (horizon / 100.0).min(1e-2).max(1e-8);
    let mut k1 = deriv(sys, &flat, t, &y)?;
    let hmin = 1e-13 * horizon.max(1.0);
    let mut accepted = 0usize;

    while t < t_end - 1e-14 * t_end.abs().max(1.0) {
        if h < hmin {
            return Err(Error::Stiffness { t });
        }
        h = h.min(t_end - t);
        let mut k = vec![k1.clone()];
        for stage in 0..6 {
            let mut yy = y.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = A[stage][j];
                if a != 0.0 {
                    for (yi, ki) in yy.iter_mut().zip(kj) {
                        *yi += h * a * ki;
                    }
                }
            }
            k.push(deriv(sys, &flat, t + h, &yy)?);
        }
        // 5th-order solution and embedded error
        let mut y5 = y.clone();
        let mut err: f64 = 0.0;
        let dim_all = flat.dim();
        let mut e = vec![0.0; dim_all];
        for j in 0..7 {
            let b = B5[j];
            let db = B5[j] - B4[j];
            if b != 0.0 || db != 0.0 {
                for i in 0..dim_all {
                    if b != 0.0 {
                        y5[i] += h * b * k[j][i];
                    }
                    e[i] += h * db * k[j][i];
                }
            }
        }
        for i in 0..dim_all {
            let sc = atol + tol * y[i].abs().max(y5[i].abs());
            err = err.max((e[i] / sc).abs());
        }
        if err <= 1.0 {
            t += h;
            y = y5;
            k1 = k[6].clone(); // FSAL
            let state = flat.unpack(sys, t, &y)?;
            diag.push(sys.diagnostics(&state));
            integrals.push(flat.integrals(&y));
            snapshots.push(state);
            accepted += 1;
            if accepted > 2_000_000 {
                return Err(Error::Stiffness { t });
            }
        }
        let fac = if err > 0.0 { 0.9 * err.powf(-0.2) } else { 5.0 };
        h *= fac.clamp(0.2, 5.0);
    }

    let final_state = snapshots.last().unwrap().clone();
    let mut traj = Trajectory {
        dp: sys.dp,
        model: sys.model,
        scheme: Scheme::ImexEuler,
        dt: if accepted > 0 { horizon / accepted as f64 } else { 0.0 },
        diagnostics: diag,
        snapshots,
        final_state,
        exact_integrals: Some(integrals),
    };
    traj.scheme = Scheme::ImexEuler; // tag unused for oracle output
    let res = super::energy_residuals(&traj, &sys.dp);
    for (row, r) in traj.diagnostics.iter_mut().zip(res) {
        row.residual = r;
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisSet;
    use crate::integrate::tests::small_system;
    use crate::integrate::ModelKind;
    use crate::params::DimensionlessParams;

    #[test]
    fn linear_diffusion_matches_exponential() {
        let dp = DimensionlessParams::new(0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 2.0, 2.0).unwrap();
        let sys = small_system(dp, ModelKind::Micropolar);
        let mut s = State::zero(&sys.bases);
        let mut c = vec![0.0; sys.bases.scalar.len()];
        c[0] = 1.0;
        s.theta = Field::new(sys.bases.scalar.clone(), c).unwrap();
        // Ra = 0 removes the buoyancy source; theta is a pure diffusion mode.
        let tol = 1e-10;
        let traj = oracle_integrate(&sys, &s, 0.2, tol).unwrap();
        let lam = sys.bases.scalar.modes[0].lambda;
        let want = (-lam * 0.2f64).exp();
        let got = traj.final_state.theta.coeffs[0];
        assert!((got - want).abs() < 50.0 * tol, "{got} vs {want}");
    }

    #[test]
    fn dimension_cap_is_enforced() {
        let spec = crate::basis::DomainSpec {
            ax: 2.0,
            ay: 2.0,
            mv: 16,
            nh: 4,
            n_scalar: 600,
            n_vector: 1000,
            n_stokes: 600,
        };
        let bases = BasisSet::build(&spec).unwrap();
        let dp = DimensionlessParams::new(1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 2.0, 2.0).unwrap();
        let sys = System::new(bases, dp, ModelKind::Micropolar).unwrap();
        let s = State::zero(&sys.bases);
        match oracle_integrate(&sys, &s, 0.1, 1e-8) {
            Err(Error::DimensionCap { .. }) => {}
            other => panic!("expected dimension cap, got {other:?}"),
        }
    }

    #[test]
    fn oracle_residuals_track_tolerance() {
        let dp = DimensionlessParams::new(50.0, 2.0, 0.3, 1.0, 1.0, 0.5, 2.0, 2.0).unwrap();
        let sys = small_system(dp, ModelKind::Micropolar);
        let s = crate::integrate::tests::random_state(&sys, 11, 0.3);
        let tol = 1e-10;
        let traj = oracle_integrate(&sys, &s, 0.5, tol).unwrap();
        let rate = traj.residual_l1_rate();
        assert!(rate <= 1e-8, "residual rate {rate}");
    }
}
