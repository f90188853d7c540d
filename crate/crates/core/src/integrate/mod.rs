//! Right-hand-side assembly and time integration of the coupled Galerkin
//! system for velocity, microrotation and shifted temperature.
//!
//! All linear constant-coefficient couplings are precomputed once as sparse
//! coefficient-space operators from exact inner products of basis modes:
//! the curl coupling `(rot v_n, xi_m)`, the buoyancy pairing
//! `(psi_m e3, v_n)` and the divergence Gram matrix
//! `(div xi_m, div xi_n)`. Only the advective products go through the
//! dealiased grid. The diagonal diffusive parts are treated implicitly by
//! the steppers; everything else is explicit.

pub mod oracle;
pub mod scheme;

use crate::basis::{BasisSet, OperatorKind};
use crate::error::Error;
use crate::field::transform::{anal, project_tensors};
use crate::field::{div_terms, mode_terms, norms, raw_inner, rot_terms, Field, NormSet, RawTerm, State};
use crate::params::DimensionlessParams;
use crate::util::pairwise_sum_by;
use crate::Result;
use ndarray::Array3;
use std::collections::HashMap;

pub use scheme::{integrate, IntegrateOpts, Observer, Scheme, Stepper};

/// Coefficient norm above which a run is declared blown up.
pub const BLOWUP_CAP: f64 = 1e8;

/// Which system is integrated. The Newtonian model removes every
/// `K`-coupling term and requires `K = 0`; its `(u, theta)` subsystem is
/// the classical Boussinesq problem while `gamma` is passively advected
/// and damped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Micropolar,
    Newtonian,
}

impl ModelKind {
    pub fn tag(&self) -> &'static str {
        match self {
            ModelKind::Micropolar => "micropolar",
            ModelKind::Newtonian => "newtonian",
        }
    }
}

/// Sparse coefficient-space operator with deterministic application order.
#[derive(Debug, Clone)]
pub struct SparseOp {
    pub rows: usize,
    pub cols: usize,
    /// Entries sorted by `(row, col)`.
    pub entries: Vec<(u32, u32, f64)>,
}

impl SparseOp {
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        out.fill(0.0);
        for &(r, c, v) in &self.entries {
            out[r as usize] += v * x[c as usize];
        }
    }

    pub fn apply_transpose(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        out.fill(0.0);
        for &(r, c, v) in &self.entries {
            out[c as usize] += v * x[r as usize];
        }
    }

    /// `a^T A b`.
    pub fn bilinear(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut s = 0.0;
        for &(r, c, v) in &self.entries {
            s += a[r as usize] * v * b[c as usize];
        }
        s
    }
}

/// Index of separable terms of a basis keyed by `(comp, cx, cy)`.
fn term_index(basis: &crate::basis::EigenBasis) -> HashMap<(u8, usize, usize), Vec<usize>> {
    let mut map: HashMap<(u8, usize, usize), Vec<usize>> = HashMap::new();
    for (i, mode) in basis.modes.iter().enumerate() {
        for t in &mode.terms {
            map.entry((t.comp, t.cx, t.cy)).or_default().push(i);
        }
    }
    for v in map.values_mut() {
        v.sort_unstable();
        v.dedup();
    }
    map
}

/// Assembles `A[n, m] = (op(source mode n), target mode m)` where `op`
/// expands the source mode into raw terms.
fn assemble(
    source: &crate::basis::EigenBasis,
    target: &crate::basis::EigenBasis,
    expand: impl Fn(&crate::basis::Mode) -> Vec<RawTerm>,
) -> SparseOp {
    let idx = term_index(target);
    let d = &source.disc;
    let mut entries = Vec::new();
    for (n, mode) in source.modes.iter().enumerate() {
        let raw = expand(mode);
        let mut hits: Vec<usize> = raw
            .iter()
            .flat_map(|t| idx.get(&(t.comp, t.cx, t.cy)).into_iter().flatten().copied())
            .collect();
        hits.sort_unstable();
        hits.dedup();
        for m in hits {
            let v = raw_inner(d, &raw, &mode_terms(&target.modes[m]));
            if v != 0.0 {
                entries.push((n as u32, m as u32, v));
            }
        }
    }
    entries.sort_by_key(|&(r, c, _)| (r, c));
    SparseOp { rows: source.len(), cols: target.len(), entries }
}

/// The assembled system: bases, parameters and coefficient-space operators.
#[derive(Debug)]
pub struct System {
    pub bases: BasisSet,
    pub dp: DimensionlessParams,
    pub model: ModelKind,
    /// `(rot v_n, xi_m)`.
    pub rot_op: SparseOp,
    /// `(psi_m e3, v_n)`.
    pub buoy_op: SparseOp,
    /// `(div xi_m, div xi_n)`, symmetric.
    pub divdiv_op: SparseOp,
    lambda_u: Vec<f64>,
    lambda_g: Vec<f64>,
    lambda_th: Vec<f64>,
}

/// Coefficient tendencies of the three fields.
#[derive(Debug, Clone)]
pub struct Tendency {
    pub du: Vec<f64>,
    pub dgamma: Vec<f64>,
    pub dtheta: Vec<f64>,
}

impl System {
    pub fn new(bases: BasisSet, dp: DimensionlessParams, model: ModelKind) -> Result<Self> {
        if model == ModelKind::Newtonian && dp.k != 0.0 {
            return Err(Error::ParamDomain("the Newtonian model forces K = 0".into()));
        }
        if !(dp.m > 0.0 && dp.l > 0.0) {
            return Err(Error::ParamDomain(
                "time integration needs L > 0 and M > 0 in the microrotation balance".into(),
            ));
        }
        debug_assert_eq!(bases.stokes.operator, OperatorKind::Stokes);
        let d = bases.disc().clone();
        let rot_op = assemble(&bases.stokes, &bases.vector, |m| rot_terms(&d, m));
        let buoy_op = assemble(&bases.stokes, &bases.scalar, |m| {
            // wall-normal component of the Stokes mode as scalar raw terms
            mode_terms(m)
                .into_iter()
                .filter(|t| t.comp == 2)
                .map(|mut t| {
                    t.comp = 0;
                    t
                })
                .collect()
        });
        // (div xi_m, div xi_n): both sides expanded, so assembled directly.
        let divdiv_op = {
            let mut entries = Vec::new();
            let div_all: Vec<Vec<RawTerm>> =
                bases.vector.modes.iter().map(|m| div_terms(&d, m)).collect();
            let mut idx: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
            for (i, terms) in div_all.iter().enumerate() {
                for t in terms {
                    idx.entry((t.cx, t.cy)).or_default().push(i);
                }
            }
            for v in idx.values_mut() {
                v.sort_unstable();
                v.dedup();
            }
            for (n, terms) in div_all.iter().enumerate() {
                let mut hits: Vec<usize> = terms
                    .iter()
                    .flat_map(|t| idx.get(&(t.cx, t.cy)).into_iter().flatten().copied())
                    .collect();
                hits.sort_unstable();
                hits.dedup();
                for m in hits {
                    let v = raw_inner(&d, terms, &div_all[m]);
                    if v != 0.0 {
                        entries.push((n as u32, m as u32, v));
                    }
                }
            }
            entries.sort_by_key(|&(r, c, _)| (r, c));
            SparseOp { rows: bases.vector.len(), cols: bases.vector.len(), entries }
        };
        let lambda_u = bases.stokes.eigenvalues();
        let lambda_g = bases.vector.eigenvalues();
        let lambda_th = bases.scalar.eigenvalues();
        Ok(Self { bases, dp, model, rot_op, buoy_op, divdiv_op, lambda_u, lambda_g, lambda_th })
    }

    /// Whether the curl coupling terms are active.
    fn coupled(&self) -> bool {
        self.model == ModelKind::Micropolar && self.dp.k != 0.0
    }

    /// Implicit diagonal rates per coefficient: `(1+K) lambda / eps` for u,
    /// `(L lambda + 4K) / (eps M)` for gamma, `lambda` for theta.
    pub fn implicit_rates(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let dp = &self.dp;
        let k_term = if self.model == ModelKind::Micropolar { 4.0 * dp.k } else { 0.0 };
        (
            self.lambda_u.iter().map(|l| (1.0 + dp.k) * l / dp.eps).collect(),
            self.lambda_g.iter().map(|l| (dp.l * l + k_term) / (dp.eps * dp.m)).collect(),
            self.lambda_th.clone(),
        )
    }

    /// Explicit tendency: advection, curl coupling, divergence penalty and
    /// buoyancy/source terms. The implicit diagonal is not included.
    pub fn rhs_explicit(&self, s: &State) -> Result<Tendency> {
        let dp = &self.dp;
        let nu = self.bases.stokes.len();
        let ng = self.bases.vector.len();
        let nth = self.bases.scalar.len();

        for (name, f) in [("u", &s.u), ("gamma", &s.gamma), ("theta", &s.theta)] {
            if !f.coeffs.iter().all(|v| v.is_finite()) {
                return Err(Error::NumericalBlowup { t: s.t, what: format!("non-finite {name} coefficients") });
            }
        }

        let ugrid = s.u.samples().clone();

        // advection of u: (u . grad) u, dealiased
        let grad_u = field_gradient(&s.u);
        let mut adv_u = Vec::with_capacity(3);
        for c in 0..3 {
            adv_u.push(advect(&ugrid.comps, &grad_u[c]));
        }
        let mut du = project_onto(&self.bases.stokes, &adv_u);
        for v in &mut du {
            *v = -*v;
        }
        if self.coupled() {
            let mut rotg = vec![0.0; nu];
            self.rot_op.apply(&s.gamma.coeffs, &mut rotg);
            let f = 2.0 * dp.k / dp.eps;
            for i in 0..nu {
                du[i] += f * rotg[i];
            }
        }
        {
            let mut buoy = vec![0.0; nu];
            self.buoy_op.apply(&s.theta.coeffs, &mut buoy);
            let f = dp.ra / dp.eps;
            for i in 0..nu {
                du[i] += f * buoy[i];
            }
        }

        // advection of gamma
        let grad_g = field_gradient(&s.gamma);
        let mut adv_g = Vec::with_capacity(3);
        for c in 0..3 {
            adv_g.push(advect(&ugrid.comps, &grad_g[c]));
        }
        let mut dgamma = project_onto(&self.bases.vector, &adv_g);
        for v in &mut dgamma {
            *v = -*v;
        }
        if dp.g != 0.0 {
            let mut dd = vec![0.0; ng];
            self.divdiv_op.apply(&s.gamma.coeffs, &mut dd);
            let f = dp.g / (dp.eps * dp.m);
            for i in 0..ng {
                dgamma[i] -= f * dd[i];
            }
        }
        if self.coupled() {
            let mut rotu = vec![0.0; ng];
            self.rot_op.apply_transpose(&s.u.coeffs, &mut rotu);
            let f = 2.0 * dp.k / (dp.eps * dp.m);
            for i in 0..ng {
                dgamma[i] += f * rotu[i];
            }
        }

        // advection of theta plus the vertical-velocity source
        let grad_th = field_gradient(&s.theta);
        let adv_th = advect(&ugrid.comps, &grad_th[0]);
        let mut dtheta = project_onto(&self.bases.scalar, std::slice::from_ref(&adv_th));
        for v in &mut dtheta {
            *v = -*v;
        }
        {
            let mut src = vec![0.0; nth];
            self.buoy_op.apply_transpose(&s.u.coeffs, &mut src);
            for i in 0..nth {
                dtheta[i] += src[i];
            }
        }
        Ok(Tendency { du, dgamma, dtheta })
    }

    /// Full tendency including the implicit diagonal (used by the oracle
    /// and by order tests).
    pub fn rhs(&self, s: &State) -> Result<Tendency> {
        let mut t = self.rhs_explicit(s)?;
        let (ru, rg, rth) = self.implicit_rates();
        for i in 0..t.du.len() {
            t.du[i] -= ru[i] * s.u.coeffs[i];
        }
        for i in 0..t.dgamma.len() {
            t.dgamma[i] -= rg[i] * s.gamma.coeffs[i];
        }
        for i in 0..t.dtheta.len() {
            t.dtheta[i] -= rth[i] * s.theta.coeffs[i];
        }
        Ok(t)
    }

    /// Scalar diagnostics of one state.
    pub fn diagnostics(&self, s: &State) -> StepDiagnostics {
        let n = norms(s, &self.dp);
        StepDiagnostics {
            t: s.t,
            norms: n,
            div_gamma_sq: self.divdiv_op.bilinear(&s.gamma.coeffs, &s.gamma.coeffs),
            cross_rot: {
                let mut rotg = vec![0.0; self.bases.stokes.len()];
                self.rot_op.apply(&s.gamma.coeffs, &mut rotg);
                pairwise_sum_by(rotg.len(), |i| s.u.coeffs[i] * rotg[i])
            },
            cross_buoy: {
                let mut b = vec![0.0; self.bases.stokes.len()];
                self.buoy_op.apply(&s.theta.coeffs, &mut b);
                pairwise_sum_by(b.len(), |i| s.u.coeffs[i] * b[i])
            },
            residual: [0.0; 3],
        }
    }

    /// Default step size: half the most restrictive of the advective CFL
    /// rate, the explicit divergence-penalty rate, the slaved buoyancy
    /// feedback rate and an absolute cap of 0.05.
    pub fn default_dt(&self, s0: &State) -> f64 {
        let dp = &self.dp;
        let d = self.bases.disc();
        let mut cap: f64 = 0.05;
        let umax = s0.u.max_abs();
        if umax > 0.0 {
            let kx = 2.0 * std::f64::consts::PI * d.nh as f64 / d.ax;
            let ky = 2.0 * std::f64::consts::PI * d.nh as f64 / d.ay;
            let kz = std::f64::consts::PI * self.bases.stokes.domain.jmax() as f64;
            cap = cap.min(1.0 / (umax * (kx + ky + kz)));
        }
        if dp.g > 0.0 {
            cap = cap.min(dp.eps * dp.m / (3.0 * dp.g * self.bases.vector.lambda_max()));
        }
        if dp.ra > 0.0 {
            cap = cap.min((1.0 + dp.k) * crate::LAMBDA_1 / dp.ra);
        }
        0.5 * cap
    }
}

/// Gradient arrays of every component of a field.
fn field_gradient(f: &Field) -> Vec<[Array3<f64>; 3]> {
    crate::field::gradient(f)
}

/// `(u . grad) w` for one component of `w` on the grid.
fn advect(u: &[Array3<f64>], grad_w: &[Array3<f64>; 3]) -> Array3<f64> {
    let mut out = grad_w[0].clone();
    ndarray::Zip::from(&mut out)
        .and(&u[0])
        .for_each(|o, &a| *o *= a);
    ndarray::Zip::from(&mut out)
        .and(&u[1])
        .and(&grad_w[1])
        .for_each(|o, &a, &g| *o += a * g);
    ndarray::Zip::from(&mut out)
        .and(&u[2])
        .and(&grad_w[2])
        .for_each(|o, &a, &g| *o += a * g);
    out
}

/// Projects grid components onto a basis.
fn project_onto(basis: &std::sync::Arc<crate::basis::EigenBasis>, comps: &[Array3<f64>]) -> Vec<f64> {
    let d = &basis.disc;
    let tensors: Vec<Array3<f64>> = comps.iter().map(|g| anal(d, g)).collect();
    project_tensors(basis, &tensors)
}

/// Per-step scalar diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct StepDiagnostics {
    pub t: f64,
    pub norms: NormSet,
    /// `|div gamma|^2`.
    pub div_gamma_sq: f64,
    /// `(rot gamma, u) = (rot u, gamma)`.
    pub cross_rot: f64,
    /// `(theta, u_3)`.
    pub cross_buoy: f64,
    /// Energy-identity residuals `(r_u, r_gamma, r_theta)` over the step
    /// ending at `t` (zero on the first row).
    pub residual: [f64; 3],
}

/// A completed run: per-step diagnostics, snapshots and the final state.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dp: DimensionlessParams,
    pub model: ModelKind,
    pub scheme: Scheme,
    pub dt: f64,
    pub diagnostics: Vec<StepDiagnostics>,
    /// States captured every `snapshot_every` steps (always including the
    /// initial and final states).
    pub snapshots: Vec<State>,
    pub final_state: State,
    /// Cumulative time integrals of the seven energy integrands, carried
    /// by the adaptive oracle to its own accuracy:
    /// `[ |grad u|^2, |grad g|^2, |div g|^2, |g|^2, |grad th|^2, cross_rot, cross_buoy ]`.
    pub exact_integrals: Option<Vec<[f64; 7]>>,
}

impl Trajectory {
    /// Sum over steps of `|r_u| + |r_gamma| + |r_theta|` divided by the
    /// elapsed time.
    pub fn residual_l1_rate(&self) -> f64 {
        let n = self.diagnostics.len();
        if n < 2 {
            return 0.0;
        }
        let span = self.diagnostics[n - 1].t - self.diagnostics[0].t;
        let total: f64 = self
            .diagnostics
            .iter()
            .map(|d| d.residual[0].abs() + d.residual[1].abs() + d.residual[2].abs())
            .sum();
        total / span
    }
}

/// Energy-identity residuals per recorded interval.
///
/// Each identity is the energy equality of the Galerkin system written as
/// left minus right; the time integrals use the trapezoidal rule on the
/// recorded integrands unless the trajectory carries oracle-exact
/// cumulative integrals.
pub fn energy_residuals(traj: &Trajectory, dp: &DimensionlessParams) -> Vec<[f64; 3]> {
    let rows = &traj.diagnostics;
    let mut out = vec![[0.0; 3]; rows.len()];
    for i in 1..rows.len() {
        let a = &rows[i - 1];
        let b = &rows[i];
        let ints: [f64; 7] = if let Some(ex) = &traj.exact_integrals {
            let mut v = [0.0; 7];
            for j in 0..7 {
                v[j] = ex[i][j] - ex[i - 1][j];
            }
            v
        } else {
            let h = 0.5 * (b.t - a.t);
            [
                h * (a.norms.h1semi_u.powi(2) + b.norms.h1semi_u.powi(2)),
                h * (a.norms.h1semi_gamma.powi(2) + b.norms.h1semi_gamma.powi(2)),
                h * (a.div_gamma_sq + b.div_gamma_sq),
                h * (a.norms.l2_gamma.powi(2) + b.norms.l2_gamma.powi(2)),
                h * (a.norms.h1semi_theta.powi(2) + b.norms.h1semi_theta.powi(2)),
                h * (a.cross_rot + b.cross_rot),
                h * (a.cross_buoy + b.cross_buoy),
            ]
        };
        let [iu, ig, idd, igl2, ith, irot, ibuoy] = ints;
        let r_u = dp.eps * (b.norms.l2_u.powi(2) - a.norms.l2_u.powi(2))
            + 2.0 * (1.0 + dp.k) * iu
            - 4.0 * dp.k * irot
            - 2.0 * dp.ra * ibuoy;
        let r_g = dp.eps * dp.m * (b.norms.l2_gamma.powi(2) - a.norms.l2_gamma.powi(2))
            + 2.0 * dp.l * ig
            + 2.0 * dp.g * idd
            + 8.0 * dp.k * igl2
            - 4.0 * dp.k * irot;
        let r_th = b.norms.l2_theta.powi(2) - a.norms.l2_theta.powi(2) + 2.0 * ith
            - 2.0 * ibuoy;
        out[i] = [r_u, r_g, r_th];
    }
    out
}
