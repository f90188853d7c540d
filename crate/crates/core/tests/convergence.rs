//! Convergence-order measurements of the IMEX schemes against the adaptive
//! reference integrator on a small fully nonlinear instance, and the
//! matching decay of the energy-identity residuals under step refinement.

use mrb_core::basis::{BasisSet, DomainSpec};
use mrb_core::field::{Field, State};
use mrb_core::integrate::{
    integrate, oracle::oracle_integrate, IntegrateOpts, ModelKind, Scheme, System,
};
use mrb_core::params::DimensionlessParams;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Three modes per field: the smallest instance exercising every term.
fn three_mode_system() -> System {
    let spec = DomainSpec { ax: 2.0, ay: 2.0, mv: 8, nh: 1, n_scalar: 3, n_vector: 3, n_stokes: 3 };
    let bases = BasisSet::build(&spec).unwrap();
    let dp = DimensionlessParams::new(50.0, 2.0, 0.2, 1.0, 1.0, 0.5, 2.0, 2.0).unwrap();
    System::new(bases, dp, ModelKind::Micropolar).unwrap()
}

fn initial_state(sys: &System, seed: u64, amp: f64) -> State {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mk = |basis: &std::sync::Arc<mrb_core::basis::EigenBasis>, rng: &mut ChaCha8Rng| {
        Field::new(basis.clone(), (0..basis.len()).map(|_| rng.gen_range(-amp..amp)).collect())
            .unwrap()
    };
    State::new(
        0.0,
        mk(&sys.bases.stokes, &mut rng),
        mk(&sys.bases.vector, &mut rng),
        mk(&sys.bases.scalar, &mut rng),
    )
    .unwrap()
}

fn state_error(a: &State, b: &State) -> f64 {
    let mut e = 0.0f64;
    for (x, y) in a.u.coeffs.iter().zip(&b.u.coeffs) {
        e = e.max((x - y).abs());
    }
    for (x, y) in a.gamma.coeffs.iter().zip(&b.gamma.coeffs) {
        e = e.max((x - y).abs());
    }
    for (x, y) in a.theta.coeffs.iter().zip(&b.theta.coeffs) {
        e = e.max((x - y).abs());
    }
    e
}

fn measured_order(errors: &[f64]) -> f64 {
    // errors at dt, dt/2, dt/4: average of log2 ratios
    let mut slopes = Vec::new();
    for w in errors.windows(2) {
        slopes.push((w[0] / w[1]).log2());
    }
    slopes.iter().sum::<f64>() / slopes.len() as f64
}

#[test]
fn scheme_orders_against_oracle() {
    let sys = three_mode_system();
    let s0 = initial_state(&sys, 1, 0.5);
    let horizon = 0.1;
    let reference = oracle_integrate(&sys, &s0, horizon, 1e-12).unwrap();
    for (scheme, formal) in [(Scheme::ImexEuler, 1.0), (Scheme::Cnab2, 2.0)] {
        let mut errors = Vec::new();
        for dt in [4e-3, 2e-3, 1e-3] {
            let opts = IntegrateOpts::new(horizon, dt).with_scheme(scheme);
            let traj = integrate(&sys, &s0, &opts, None).unwrap();
            errors.push(state_error(&traj.final_state, &reference.final_state));
        }
        let order = measured_order(&errors);
        assert!(
            (order - formal).abs() <= 0.2,
            "{scheme:?}: measured order {order} (errors {errors:?})"
        );
    }
}

#[test]
fn residual_rates_halve_at_scheme_order() {
    let sys = three_mode_system();
    let s0 = initial_state(&sys, 2, 0.5);
    let horizon = 0.1;
    for (scheme, formal) in [(Scheme::ImexEuler, 1.0), (Scheme::Cnab2, 2.0)] {
        let mut rates = Vec::new();
        for dt in [4e-3, 2e-3, 1e-3] {
            let opts = IntegrateOpts::new(horizon, dt).with_scheme(scheme);
            let traj = integrate(&sys, &s0, &opts, None).unwrap();
            rates.push(traj.residual_l1_rate());
        }
        let order = measured_order(&rates);
        assert!(
            (order - formal).abs() <= 0.2,
            "{scheme:?}: residual order {order} (rates {rates:?})"
        );
    }
}

#[test]
fn oracle_agrees_with_refined_stepping() {
    // IMEX Euler marches towards the oracle solution at first order.
    let sys = three_mode_system();
    let s0 = initial_state(&sys, 3, 0.4);
    let horizon = 0.05;
    let reference = oracle_integrate(&sys, &s0, horizon, 1e-12).unwrap();
    let coarse = integrate(&sys, &s0, &IntegrateOpts::new(horizon, 1e-3), None).unwrap();
    let fine = integrate(&sys, &s0, &IntegrateOpts::new(horizon, 1e-4), None).unwrap();
    let e_coarse = state_error(&coarse.final_state, &reference.final_state);
    let e_fine = state_error(&fine.final_state, &reference.final_state);
    assert!(e_fine < 0.2 * e_coarse, "no convergence: {e_coarse} -> {e_fine}");
}

#[test]
fn energy_residuals_of_exact_trajectories_vanish_with_tolerance() {
    let sys = three_mode_system();
    let s0 = initial_state(&sys, 4, 0.5);
    let loose = oracle_integrate(&sys, &s0, 0.2, 1e-6).unwrap();
    let tight = oracle_integrate(&sys, &s0, 0.2, 1e-10).unwrap();
    let r_loose = loose.residual_l1_rate();
    let r_tight = tight.residual_l1_rate();
    assert!(r_tight <= 1e-8, "tight oracle residual rate {r_tight}");
    assert!(r_tight < r_loose || r_loose < 1e-12);
}
