//! IMEX time stepping.
//!
//! The diagonal diffusive parts (`(1+K) Lambda_S`, `L Lambda_V`, the scalar
//! Laplacian and the `4K` zeroth-order microrotation term) are solved
//! implicitly per mode; advection, curl coupling, the divergence penalty
//! and the buoyancy/source terms are explicit.
//!
//! Two schemes are provided: first-order IMEX Euler and a second-order
//! two-step scheme combining Adams-Bashforth extrapolation of the explicit
//! terms with trapezoidal (Crank-Nicolson) diffusion. The first step of
//! the two-step scheme uses an Euler predictor and a trapezoidal corrector,
//! which keeps the global order at two.

use super::{StepDiagnostics, System, Tendency, Trajectory, BLOWUP_CAP};
use crate::error::Error;
use crate::field::{Field, State};
use crate::Result;

/// Time integration scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    ImexEuler,
    Cnab2,
}

impl Scheme {
    /// Formal order of accuracy.
    pub fn order(&self) -> usize {
        match self {
            Scheme::ImexEuler => 1,
            Scheme::Cnab2 => 2,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Scheme::ImexEuler => "imex-euler",
            Scheme::Cnab2 => "cnab2",
        }
    }
}

/// Observer invoked on every accepted step.
pub trait Observer {
    fn on_step(&mut self, state: &State, diag: &StepDiagnostics);
}

/// Stateful stepper; the two-step scheme keeps the previous explicit
/// tendency between calls.
pub struct Stepper {
    pub scheme: Scheme,
    rates: (Vec<f64>, Vec<f64>, Vec<f64>),
    prev_explicit: Option<Tendency>,
}

impl Stepper {
    pub fn new(sys: &System, scheme: Scheme) -> Self {
        Self { scheme, rates: sys.implicit_rates(), prev_explicit: None }
    }

    /// Advances one step of size `dt > 0`.
    pub fn step(&mut self, sys: &System, s: &State, dt: f64) -> Result<State> {
        assert!(dt > 0.0, "dt must be positive");
        let expl = sys.rhs_explicit(s)?;
        let (ru, rg, rth) = (&self.rates.0, &self.rates.1, &self.rates.2);
        let next = match self.scheme {
            Scheme::ImexEuler => {
                let u = imex_euler(&s.u.coeffs, &expl.du, ru, dt);
                let g = imex_euler(&s.gamma.coeffs, &expl.dgamma, rg, dt);
                let th = imex_euler(&s.theta.coeffs, &expl.dtheta, rth, dt);
                self.make_state(sys, s.t + dt, u, g, th)?
            }
            Scheme::Cnab2 => {
                let (wa, wb, prev) = match &self.prev_explicit {
                    Some(prev) => (1.5, -0.5, Some(prev)),
                    None => (1.0, 0.0, None),
                };
                let blend = |e: &[f64], p: Option<&Vec<f64>>| -> Vec<f64> {
                    match p {
                        Some(p) => e.iter().zip(p).map(|(a, b)| wa * a + wb * b).collect(),
                        None => e.to_vec(),
                    }
                };
                let eu = blend(&expl.du, prev.map(|p| &p.du));
                let eg = blend(&expl.dgamma, prev.map(|p| &p.dgamma));
                let eth = blend(&expl.dtheta, prev.map(|p| &p.dtheta));
                if self.prev_explicit.is_some() {
                    let u = cn_update(&s.u.coeffs, &eu, ru, dt);
                    let g = cn_update(&s.gamma.coeffs, &eg, rg, dt);
                    let th = cn_update(&s.theta.coeffs, &eth, rth, dt);
                    self.make_state(sys, s.t + dt, u, g, th)?
                } else {
                    // startup: Euler predictor, trapezoidal corrector
                    let up = imex_euler(&s.u.coeffs, &expl.du, ru, dt);
                    let gp = imex_euler(&s.gamma.coeffs, &expl.dgamma, rg, dt);
                    let thp = imex_euler(&s.theta.coeffs, &expl.dtheta, rth, dt);
                    let pred = self.make_state(sys, s.t + dt, up, gp, thp)?;
                    let expl_p = sys.rhs_explicit(&pred)?;
                    let avg = |a: &[f64], b: &[f64]| -> Vec<f64> {
                        a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect()
                    };
                    let u = cn_update(&s.u.coeffs, &avg(&expl.du, &expl_p.du), ru, dt);
                    let g = cn_update(&s.gamma.coeffs, &avg(&expl.dgamma, &expl_p.dgamma), rg, dt);
                    let th =
                        cn_update(&s.theta.coeffs, &avg(&expl.dtheta, &expl_p.dtheta), rth, dt);
                    self.make_state(sys, s.t + dt, u, g, th)?
                }
            }
        };
        self.prev_explicit = Some(expl);
        Ok(next)
    }

    fn make_state(
        &self,
        sys: &System,
        t: f64,
        u: Vec<f64>,
        g: Vec<f64>,
        th: Vec<f64>,
    ) -> Result<State> {
        for (name, c) in [("u", &u), ("gamma", &g), ("theta", &th)] {
            let n2 = crate::util::pairwise_sum_by(c.len(), |i| c[i] * c[i]);
            if !n2.is_finite() || n2.sqrt() > BLOWUP_CAP {
                return Err(Error::NumericalBlowup {
                    t,
                    what: format!("{name} coefficient norm {:.3e} exceeds cap", n2.sqrt()),
                });
            }
        }
        State::new(
            t,
            Field::new(sys.bases.stokes.clone(), u)?,
            Field::new(sys.bases.vector.clone(), g)?,
            Field::new(sys.bases.scalar.clone(), th)?,
        )
    }
}

fn imex_euler(c: &[f64], e: &[f64], rate: &[f64], dt: f64) -> Vec<f64> {
    c.iter()
        .zip(e)
        .zip(rate)
        .map(|((c, e), r)| (c + dt * e) / (1.0 + dt * r))
        .collect()
}

fn cn_update(c: &[f64], e: &[f64], rate: &[f64], dt: f64) -> Vec<f64> {
    c.iter()
        .zip(e)
        .zip(rate)
        .map(|((c, e), r)| (c * (1.0 - 0.5 * dt * r) + dt * e) / (1.0 + 0.5 * dt * r))
        .collect()
}

/// Options of a fixed-step run.
#[derive(Debug, Clone, Copy)]
pub struct IntegrateOpts {
    pub horizon: f64,
    pub dt: f64,
    pub scheme: Scheme,
    /// Capture a state snapshot every this many steps (the initial and
    /// final states are always captured).
    pub snapshot_every: Option<usize>,
    /// Emit a progress log line every this many steps.
    pub log_every: Option<usize>,
}

impl IntegrateOpts {
    pub fn new(horizon: f64, dt: f64) -> Self {
        Self { horizon, dt, scheme: Scheme::ImexEuler, snapshot_every: None, log_every: None }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_snapshots(mut self, every: usize) -> Self {
        self.snapshot_every = Some(every);
        self
    }

    /// Number of fixed steps covering the horizon.
    pub fn steps(&self) -> usize {
        if self.horizon <= 0.0 {
            0
        } else {
            (self.horizon / self.dt).round().max(1.0) as usize
        }
    }
}

/// Integrates from `s0` with fixed step size, recording diagnostics every
/// step and snapshots at the configured cadence.
pub fn integrate(
    sys: &System,
    s0: &State,
    opts: &IntegrateOpts,
    mut observer: Option<&mut dyn Observer>,
) -> Result<Trajectory> {
    assert!(opts.dt > 0.0, "dt must be positive");
    let nsteps = opts.steps();
    let mut stepper = Stepper::new(sys, opts.scheme);
    let mut diag = Vec::with_capacity(nsteps + 1);
    let mut snapshots = Vec::new();
    let mut state = s0.clone();
    diag.push(sys.diagnostics(&state));
    snapshots.push(state.clone());
    for step in 0..nsteps {
        let next = stepper.step(sys, &state, opts.dt).map_err(|e| match e {
            Error::NumericalBlowup { t, what } => Error::NumericalBlowup { t, what },
            other => other,
        })?;
        state = next;
        let mut d = sys.diagnostics(&state);
        // per-interval energy residual via trapezoidal quadrature
        let prev = diag.last().unwrap();
        d.residual = residual_between(prev, &d, &sys.dp);
        if let Some(o) = observer.as_deref_mut() {
            o.on_step(&state, &d);
        }
        if let Some(every) = opts.log_every {
            if every > 0 && (step + 1) % every == 0 {
                log::info!(
                    "t = {:.4}  |u| = {:.3e}  |gamma| = {:.3e}  |theta| = {:.3e}  V = {:.3e}",
                    state.t,
                    d.norms.l2_u,
                    d.norms.l2_gamma,
                    d.norms.l2_theta,
                    d.norms.enstrophy
                );
            }
        }
        diag.push(d);
        if let Some(every) = opts.snapshot_every {
            if every > 0 && (step + 1) % every == 0 && step + 1 != nsteps {
                snapshots.push(state.clone());
            }
        }
    }
    if nsteps > 0 {
        snapshots.push(state.clone());
    }
    Ok(Trajectory {
        dp: sys.dp,
        model: sys.model,
        scheme: opts.scheme,
        dt: opts.dt,
        diagnostics: diag,
        snapshots,
        final_state: state,
        exact_integrals: None,
    })
}

/// Trapezoidal residual of the three energy identities over one interval.
pub(crate) fn residual_between(
    a: &StepDiagnostics,
    b: &StepDiagnostics,
    dp: &crate::params::DimensionlessParams,
) -> [f64; 3] {
    let h = 0.5 * (b.t - a.t);
    let iu = h * (a.norms.h1semi_u.powi(2) + b.norms.h1semi_u.powi(2));
    let ig = h * (a.norms.h1semi_gamma.powi(2) + b.norms.h1semi_gamma.powi(2));
    let idd = h * (a.div_gamma_sq + b.div_gamma_sq);
    let igl2 = h * (a.norms.l2_gamma.powi(2) + b.norms.l2_gamma.powi(2));
    let ith = h * (a.norms.h1semi_theta.powi(2) + b.norms.h1semi_theta.powi(2));
    let irot = h * (a.cross_rot + b.cross_rot);
    let ibuoy = h * (a.cross_buoy + b.cross_buoy);
    let r_u = dp.eps * (b.norms.l2_u.powi(2) - a.norms.l2_u.powi(2)) + 2.0 * (1.0 + dp.k) * iu
        - 4.0 * dp.k * irot
        - 2.0 * dp.ra * ibuoy;
    let r_g = dp.eps * dp.m * (b.norms.l2_gamma.powi(2) - a.norms.l2_gamma.powi(2))
        + 2.0 * dp.l * ig
        + 2.0 * dp.g * idd
        + 8.0 * dp.k * igl2
        - 4.0 * dp.k * irot;
    let r_th = b.norms.l2_theta.powi(2) - a.norms.l2_theta.powi(2) + 2.0 * ith - 2.0 * ibuoy;
    [r_u, r_g, r_th]
}

/// Convenience single step from a fresh stepper (first-step variant of the
/// two-step scheme).
pub fn step(sys: &System, s: &State, dt: f64, scheme: Scheme) -> Result<State> {
    Stepper::new(sys, scheme).step(sys, s, dt)
}
