//! Validation of the Stokes eigenbasis against an independent
//! dispersion-relation root finder, plus resolution-stability and
//! wall/divergence checks.
//!
//! For wavenumber magnitude `k > 0` the wall-normal eigenprofiles solve
//! `(D^2 - k^2)^2 W = lambda (k^2 - D^2) W` with clamped conditions, whose
//! eigenvalues are `lambda = k^2 + mu^2` with `mu` a root of
//!
//! ```text
//! even:  mu sin(mu/2) cosh(k/2) + k sinh(k/2) cos(mu/2) = 0
//! odd:   mu cos(mu/2) sinh(k/2) - k cosh(k/2) sin(mu/2) = 0
//! ```
//!
//! The root finder below brackets sign changes on a fine grid and bisects;
//! it shares nothing with the solver's Galerkin eigensolve.

use mrb_core::basis::{build_stokes_basis, DomainSpec, ModeId};
use mrb_core::field::max_abs_div;
use mrb_core::field::Field;

fn dispersion_lambdas(k: f64, count: usize) -> Vec<f64> {
    let ge = |mu: f64| mu * (mu / 2.0).sin() * (k / 2.0).cosh() + k * (k / 2.0).sinh() * (mu / 2.0).cos();
    let go = |mu: f64| mu * (mu / 2.0).cos() * (k / 2.0).sinh() - k * (k / 2.0).cosh() * (mu / 2.0).sin();
    let mut roots = Vec::new();
    for f in [&ge as &dyn Fn(f64) -> f64, &go] {
        let lo = 1e-6;
        let hi = 60.0 * std::f64::consts::PI;
        let n = 600_000;
        let mut prev = f(lo);
        for i in 1..=n {
            let mu = lo + (hi - lo) * i as f64 / n as f64;
            let val = f(mu);
            if prev.signum() != val.signum() && prev != 0.0 {
                let mut a = lo + (hi - lo) * (i - 1) as f64 / n as f64;
                let mut b = mu;
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if f(a) * f(mid) <= 0.0 {
                        b = mid;
                    } else {
                        a = mid;
                    }
                }
                roots.push(0.5 * (a + b));
            }
            prev = val;
        }
    }
    let mut lams: Vec<f64> = roots.iter().map(|mu| k * k + mu * mu).collect();
    lams.sort_by(|a, b| a.partial_cmp(b).unwrap());
    lams.truncate(count);
    lams
}

fn spec() -> DomainSpec {
    DomainSpec { ax: 2.0, ay: 2.0, mv: 32, nh: 3, n_scalar: 80, n_vector: 80, n_stokes: 220 }
}

#[test]
fn wall_normal_eigenvalues_match_dispersion_roots() {
    let spec = spec();
    let basis = build_stokes_basis(&spec, spec.discretization()).unwrap();
    // group the retained wall-normal modes by wavenumber magnitude
    let mut checked = 0;
    for mode in &basis.modes {
        if let ModeId::StokesW { m, n, l } = mode.id {
            let kx = basis.disc.kx(m);
            let ky = basis.disc.ky(n);
            let k = (kx * kx + ky * ky).sqrt();
            let lams = dispersion_lambdas(k, l as usize + 2);
            let want = lams[(l - 1) as usize];
            assert!(
                (mode.lambda - want).abs() <= 1e-6 * want.max(1.0),
                "k = {k:.4}, l = {l}: solver {} vs dispersion {want}",
                mode.lambda
            );
            checked += 1;
        }
    }
    assert!(checked > 20, "only {checked} wall-normal modes retained");
}

#[test]
fn vorticity_and_polarization_eigenvalues_are_closed_form() {
    let spec = spec();
    let basis = build_stokes_basis(&spec, spec.discretization()).unwrap();
    for mode in &basis.modes {
        match mode.id {
            ModeId::StokesPol { j, .. } => {
                let want = (j as f64 * std::f64::consts::PI).powi(2);
                assert!((mode.lambda - want).abs() < 1e-12);
            }
            ModeId::StokesVort { m, n, j } => {
                let kx = basis.disc.kx(m);
                let ky = basis.disc.ky(n);
                let want = kx * kx + ky * ky + (j as f64 * std::f64::consts::PI).powi(2);
                assert!((mode.lambda - want).abs() < 1e-10);
            }
            _ => {}
        }
    }
}

#[test]
fn stokes_modes_are_divergence_free_and_no_slip() {
    let spec = spec();
    let basis = std::sync::Arc::new(build_stokes_basis(&spec, spec.discretization()).unwrap());
    for i in 0..basis.len() {
        let mut coeffs = vec![0.0; basis.len()];
        coeffs[i] = 1.0;
        let f = Field::new(basis.clone(), coeffs).unwrap();
        let h1 = (1.0 + basis.modes[i].lambda).sqrt();
        let div = max_abs_div(&f).unwrap();
        assert!(div <= 1e-10 * h1, "mode {i}: div {div}");
        let wall = basis.mode_wall_max(i);
        assert!(wall <= 1e-10 * h1, "mode {i}: wall {wall}");
    }
}

#[test]
fn doubling_vertical_resolution_is_stable() {
    let a = spec();
    let mut b = a;
    b.mv = 64;
    let ba = build_stokes_basis(&a, a.discretization()).unwrap();
    let bb = build_stokes_basis(&b, b.discretization()).unwrap();
    // match retained modes by identity; eigenvalues must agree to 1e-8
    for ma in &ba.modes {
        if let Some(mb) = bb.modes.iter().find(|m| m.id == ma.id) {
            assert!(
                (ma.lambda - mb.lambda).abs() <= 1e-8,
                "{:?}: {} vs {}",
                ma.id,
                ma.lambda,
                mb.lambda
            );
        }
    }
}

#[test]
fn stokes_variational_identity() {
    // (grad v_i, grad v_j) = lambda_i delta_ij on the retained span, the
    // defining property of Stokes eigenfunctions among divergence-free
    // fields; computed through grid quadrature of the synthesized
    // gradients.
    let spec = DomainSpec { ax: 2.0, ay: 2.0, mv: 16, nh: 1, n_scalar: 10, n_vector: 10, n_stokes: 24 };
    let basis = std::sync::Arc::new(build_stokes_basis(&spec, spec.discretization()).unwrap());
    let d = &basis.disc;
    let grads: Vec<Vec<ndarray::Array3<f64>>> = (0..basis.len())
        .map(|i| {
            let mut coeffs = vec![0.0; basis.len()];
            coeffs[i] = 1.0;
            let f = Field::new(basis.clone(), coeffs).unwrap();
            mrb_core::field::gradient(&f).into_iter().flatten().collect()
        })
        .collect();
    for i in 0..basis.len() {
        for j in i..basis.len() {
            let ip = mrb_core::field::transform::grid_inner(d, &grads[i], &grads[j]);
            let want = if i == j { basis.modes[i].lambda } else { 0.0 };
            assert!(
                (ip - want).abs() <= 1e-8 * basis.modes[i].lambda.max(1.0),
                "({i}, {j}): {ip} vs {want}"
            );
        }
    }
}
