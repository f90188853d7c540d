//! Scratch calibration (removed before release).

use mrb_core::audit::positive_part_decay_rate;
use mrb_core::basis::{BasisSet, DomainSpec};
use mrb_core::field::{analyze, GridData, State};
use mrb_core::integrate::{integrate, IntegrateOpts, ModelKind, Scheme, System};
use mrb_core::params::DimensionlessParams;

#[test]
#[ignore]
fn blob_decay_rate() {
    let spec = DomainSpec { ax: 2.0, ay: 2.0, mv: 32, nh: 8, n_scalar: 300, n_vector: 300, n_stokes: 300 };
    let bases = BasisSet::build(&spec).unwrap();
    let dp = DimensionlessParams::new(100.0, 10.0, 0.05, 1.0, 1.0, 1.0, 2.0, 2.0).unwrap();
    let sys = System::new(bases.clone(), dp, ModelKind::Micropolar).unwrap();
    println!("gamma lambda_max = {}", bases.vector.lambda_max());
    println!("default dt = {}", sys.default_dt(&State::zero(&bases)));

    // temperature blob reaching T ~ 1.5
    let d = bases.disc();
    let mut g = ndarray::Array3::zeros((d.gx, d.gy, d.gz));
    for ix in 0..d.gx {
        for iy in 0..d.gy {
            for iz in 0..d.gz {
                let dx = d.xs[ix] - 1.0;
                let dy = d.ys[iy] - 1.0;
                let dz = d.zs[iz] - 0.25;
                g[[ix, iy, iz]] =
                    0.75 * (-(dx * dx + dy * dy) / (0.35 * 0.35) - dz * dz / (0.15 * 0.15)).exp();
            }
        }
    }
    let theta = analyze(&bases.scalar, &GridData { comps: vec![g] }).unwrap();
    let mut s0 = State::zero(&bases);
    s0.theta = theta;

    let t0 = std::time::Instant::now();
    let opts = IntegrateOpts::new(0.32, 2e-4).with_scheme(Scheme::ImexEuler);
    let traj = integrate(&sys, &s0, &opts, None).unwrap();
    println!("run took {:?}", t0.elapsed());
    for d in traj.diagnostics.iter().step_by(200) {
        println!("t = {:.3}  pos = {:.6e}  |u| = {:.3e}  |theta| = {:.3e}", d.t, d.norms.pos_part, d.norms.l2_u, d.norms.l2_theta);
    }
    let rate = positive_part_decay_rate(&traj.diagnostics, 0.3, 1e-6).unwrap();
    println!("fitted decay rate = {rate}  (0.95 pi^2 = {})", 0.95 * mrb_core::LAMBDA_1);
}
