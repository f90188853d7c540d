//! Command implementations shared by the binary and the test suites.

use crate::config::{InitKind, RunConfig};
use mrb_core::attractor::{
    gamma_on_a0_audit, k_sweep, sample_omega_limit, Ensemble, EnsembleSpec, SampleOpts,
};
use mrb_core::audit::{calibrate_agmon_c1, run_all, AuditConfig, AuditReport};
use mrb_core::basis::{cache, poincare_audit, BasisSet, OperatorKind};
use mrb_core::field::{analyze, Field, GridData, State};
use mrb_core::integrate::{integrate, IntegrateOpts, ModelKind, System, Trajectory};
use mrb_core::{Error, LAMBDA_1};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Everything a command needs: parsed config plus output locations.
pub struct Ctx {
    pub cfg: RunConfig,
    pub out: PathBuf,
    pub cache: Option<PathBuf>,
}

impl Ctx {
    pub fn ensure_out(&self) -> Result<(), Error> {
        std::fs::create_dir_all(&self.out)?;
        Ok(())
    }

    /// Builds (or loads from cache) the three bases.
    pub fn build_bases(&self) -> Result<BasisSet, Error> {
        let spec = &self.cfg.domain;
        match &self.cache {
            Some(dir) => {
                let stokes = cache::load_or_build(dir, spec, OperatorKind::Stokes)?;
                let vector = cache::load_or_build(dir, spec, OperatorKind::VectorLaplacian)?;
                let scalar = cache::load_or_build(dir, spec, OperatorKind::ScalarLaplacian)?;
                Ok(BasisSet {
                    stokes: stokes.into(),
                    vector: vector.into(),
                    scalar: scalar.into(),
                })
            }
            None => BasisSet::build(spec),
        }
    }

    /// The Agmon constant: configured value or a seeded calibration.
    pub fn resolve_c1(&self, bases: &BasisSet) -> f64 {
        match self.cfg.c1 {
            Some(c1) => c1,
            None => calibrate_agmon_c1(&bases.stokes, self.cfg.calibrate_samples, self.cfg.seed),
        }
    }

    pub fn audit_config(&self, c1: f64) -> AuditConfig {
        AuditConfig { c1, rel_tol: self.cfg.rel_tol, ball_tol: self.cfg.ball_tol }
    }

    /// Builds the configured initial state.
    pub fn initial_state(&self, bases: &BasisSet) -> Result<State, Error> {
        match &self.cfg.init {
            InitKind::Zero => Ok(State::zero(bases)),
            InitKind::Random => {
                let spec = EnsembleSpec {
                    members: 1,
                    radius_u: self.cfg.init_radius[0],
                    radius_gamma: self.cfg.init_radius[1],
                    radius_theta: self.cfg.init_radius[2],
                    seed: self.cfg.seed,
                };
                Ok(Ensemble::draw(bases, &spec)?.states.remove(0))
            }
            InitKind::Blob => {
                let b = &self.cfg.blob;
                let d = bases.disc();
                let mut g = ndarray::Array3::zeros((d.gx, d.gy, d.gz));
                for ix in 0..d.gx {
                    for iy in 0..d.gy {
                        for iz in 0..d.gz {
                            let dx = d.xs[ix] - b.x;
                            let dy = d.ys[iy] - b.y;
                            let dz = d.zs[iz] - b.z;
                            g[[ix, iy, iz]] = b.amp
                                * (-(dx * dx + dy * dy) / (b.width * b.width)
                                    - dz * dz / (b.width_z * b.width_z))
                                    .exp();
                        }
                    }
                }
                let theta = analyze(&bases.scalar, &GridData { comps: vec![g] })?;
                let mut s = State::zero(bases);
                s.theta = theta;
                Ok(s)
            }
            InitKind::Roll => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
                let mut coeffs: Vec<f64> = (0..bases.scalar.len())
                    .map(|_| self.cfg.roll_noise * rng.gen_range(-1.0..1.0))
                    .collect();
                let roll = bases
                    .scalar
                    .modes
                    .iter()
                    .position(|m| {
                        matches!(m.id, mrb_core::basis::ModeId::Scalar { m: 1, n: 0, j: 1 })
                    })
                    .ok_or_else(|| {
                        Error::Config("roll mode (1, 0, 1) not retained by the truncation".into())
                    })?;
                coeffs[roll] += self.cfg.roll_amp;
                let mut s = State::zero(bases);
                s.theta = Field::new(bases.scalar.clone(), coeffs)?;
                Ok(s)
            }
            InitKind::Checkpoint(path) => {
                let (state, _, _) = mrb_core::io::load_checkpoint(Path::new(path), bases)?;
                Ok(state)
            }
        }
    }

    /// Writes the `resolved-config` provenance sidecar.
    pub fn write_sidecar(&self, c1: f64, dt: Option<f64>) -> Result<(), Error> {
        self.ensure_out()?;
        let text = crate::config::resolved_config_text(&self.cfg, c1, dt);
        std::fs::write(self.out.join("resolved-config.txt"), text)?;
        Ok(())
    }
}

/// `basis`: precompute and verify the three eigenbases.
pub fn cmd_basis(ctx: &Ctx) -> Result<(), Error> {
    ctx.ensure_out()?;
    let dir = ctx.cache.clone().unwrap_or_else(|| ctx.out.clone());
    let spec = &ctx.cfg.domain;
    let mut worst: f64 = 0.0;
    for op in [OperatorKind::ScalarLaplacian, OperatorKind::VectorLaplacian, OperatorKind::Stokes] {
        let basis = cache::load_or_build(&dir, spec, op)?;
        let rep = poincare_audit(&basis, 200, ctx.cfg.seed);
        println!(
            "{:<18} modes = {:<5} lambda_min = {:.12} dev(pi^2) = {:.3e} min poincare residuals: {:.3e} / {:.3e}",
            op.tag(),
            basis.len(),
            rep.lambda_min,
            rep.deviation_from_pi2,
            rep.min_residual_h1,
            rep.min_residual_h2
        );
        worst = worst.max(rep.deviation_from_pi2);
        if rep.min_residual_h1 < -1e-10 || rep.min_residual_h2 < -1e-10 {
            return Err(Error::BasisConstruction(0, 0, "Poincare residual below -1e-10".into()));
        }
    }
    if worst > 1e-8 {
        return Err(Error::BasisConstruction(
            0,
            0,
            format!("ground eigenvalue deviates from pi^2 by {worst:.3e} > 1e-8"),
        ));
    }
    println!("basis cache at {}", dir.display());
    ctx.write_sidecar(ctx.cfg.c1.unwrap_or(0.0), None)?;
    Ok(())
}

/// Shared simulate pipeline; returns the trajectory and the effective dt.
pub fn run_simulation(ctx: &Ctx) -> Result<(Trajectory, System, f64), Error> {
    let bases = ctx.build_bases()?;
    let sys = System::new(bases, ctx.cfg.dp, ctx.cfg.model)?;
    let s0 = ctx.initial_state(&sys.bases)?;
    let dt = match ctx.cfg.dt {
        Some(dt) => dt,
        None => sys.default_dt(&s0),
    };
    let opts = IntegrateOpts {
        horizon: ctx.cfg.horizon,
        dt,
        scheme: ctx.cfg.scheme,
        snapshot_every: ctx.cfg.snapshot_every,
        log_every: ctx.cfg.log_every,
    };
    let traj = integrate(&sys, &s0, &opts, None)?;
    Ok((traj, sys, dt))
}

/// `simulate`: time-series CSV plus final checkpoint.
pub fn cmd_simulate(ctx: &Ctx) -> Result<(), Error> {
    ctx.ensure_out()?;
    let (traj, sys, dt) = run_simulation(ctx)?;
    mrb_core::io::save_time_series(&ctx.out.join("time-series.csv"), &traj)?;
    mrb_core::io::save_checkpoint(
        &ctx.out.join("final.ckp"),
        &traj.final_state,
        &sys.dp,
        sys.model,
    )?;
    ctx.write_sidecar(ctx.cfg.c1.unwrap_or(0.0), Some(dt))?;
    let last = traj.diagnostics.last().unwrap();
    println!(
        "simulated to t = {:.4} in {} steps; |u| = {:.6e}, |theta| = {:.6e}",
        last.t,
        traj.diagnostics.len() - 1,
        last.norms.l2_u,
        last.norms.l2_theta
    );
    Ok(())
}

/// `audit`: run every estimate audit on a fresh simulation or an existing
/// time-series CSV.
pub fn cmd_audit(ctx: &Ctx, csv: Option<&Path>) -> Result<AuditReport, Error> {
    ctx.ensure_out()?;
    let bases = ctx.build_bases()?;
    let c1 = ctx.resolve_c1(&bases);
    let cfg = ctx.audit_config(c1);
    let rows = match csv {
        Some(path) => mrb_core::io::read_time_series(path)?,
        None => {
            let sys = System::new(bases, ctx.cfg.dp, ctx.cfg.model)?;
            let s0 = ctx.initial_state(&sys.bases)?;
            let dt = ctx.cfg.dt.unwrap_or_else(|| sys.default_dt(&s0));
            let opts = IntegrateOpts {
                horizon: ctx.cfg.horizon,
                dt,
                scheme: ctx.cfg.scheme,
                snapshot_every: None,
                log_every: ctx.cfg.log_every,
            };
            integrate(&sys, &s0, &opts, None)?.diagnostics
        }
    };
    let report = run_all(&rows, &ctx.cfg.dp, &cfg);
    let mut table = Vec::new();
    mrb_core::io::write_audit_table(&mut table, &report)?;
    print!("{}", String::from_utf8_lossy(&table));
    std::fs::write(ctx.out.join("audit.txt"), &table)?;
    let mut csv_out = Vec::new();
    mrb_core::io::write_audit_csv(&mut csv_out, &report)?;
    std::fs::write(ctx.out.join("audit.csv"), &csv_out)?;
    ctx.write_sidecar(c1, ctx.cfg.dt)?;
    Ok(report)
}

fn sample_opts(ctx: &Ctx, dt: f64) -> SampleOpts {
    SampleOpts {
        burn_in: ctx.cfg.burn_in,
        window: ctx.cfg.window,
        cadence: ctx.cfg.cadence,
        dt,
        scheme: ctx.cfg.scheme,
        metric: ctx.cfg.metric,
    }
}

/// `attractor`: sample the omega-limit cloud of the configured ensemble.
pub fn cmd_attractor(ctx: &Ctx) -> Result<(), Error> {
    ctx.ensure_out()?;
    let bases = ctx.build_bases()?;
    let c1 = ctx.resolve_c1(&bases);
    let sys = System::new(bases.clone(), ctx.cfg.dp, ctx.cfg.model)?;
    let ens = Ensemble::draw(&bases, &ctx.cfg.ensemble)?;
    let dt = ctx.cfg.dt.unwrap_or_else(|| sys.default_dt(&ens.states[0]));
    let sample = sample_omega_limit(&sys, &ens, &sample_opts(ctx, dt), &ctx.audit_config(c1))?;
    mrb_core::io::save_sample(&ctx.out.join("attractor.smp"), &sample)?;
    println!(
        "collected {} states over window [{}, {}] (metric {})",
        sample.states.len(),
        sample.burn_in,
        sample.burn_in + sample.window,
        sample.metric.tag()
    );
    if ctx.cfg.dp.k == 0.0 {
        let gmax = gamma_on_a0_audit(&sample)?;
        println!("max |gamma| over the K = 0 sample: {gmax:.6e}");
    }
    ctx.write_sidecar(c1, Some(dt))?;
    Ok(())
}

/// `sweep-k`: semidistance table against the K = 0 attractor sample.
pub fn cmd_sweep_k(ctx: &Ctx) -> Result<(), Error> {
    ctx.ensure_out()?;
    if ctx.cfg.k_list.is_empty() {
        return Err(Error::Config("sweep-k needs k_list in the config".into()));
    }
    let bases = ctx.build_bases()?;
    let c1 = ctx.resolve_c1(&bases);
    let zero_state = State::zero(&bases);
    let sys0 = System::new(bases.clone(), ctx.cfg.dp, ModelKind::Micropolar)?;
    let dt = ctx.cfg.dt.unwrap_or_else(|| sys0.default_dt(&zero_state));
    let table = k_sweep(
        &bases,
        &ctx.cfg.dp,
        &ctx.cfg.k_list,
        &ctx.cfg.ensemble,
        &sample_opts(ctx, dt),
        &ctx.audit_config(c1),
    )?;
    let mut out = Vec::new();
    mrb_core::io::write_sweep_csv(&mut out, &table)?;
    std::fs::write(ctx.out.join("sweep.csv"), &out)?;
    print!("{}", String::from_utf8_lossy(&out));
    for (k, reason) in &table.refused {
        log::warn!("refused K = {k}: {reason}");
        println!("refused K = {k}: {reason}");
    }
    ctx.write_sidecar(c1, Some(dt))?;
    Ok(())
}

/// `calibrate`: estimate the Agmon constant and store it.
pub fn cmd_calibrate(ctx: &Ctx) -> Result<f64, Error> {
    ctx.ensure_out()?;
    let bases = ctx.build_bases()?;
    let c1 = calibrate_agmon_c1(&bases.stokes, ctx.cfg.calibrate_samples, ctx.cfg.seed);
    let dp = &ctx.cfg.dp;
    let h = mrb_core::params::check_condition_h(dp, c1);
    println!("calibrated Agmon constant c1 = {c1:.8}");
    println!(
        "condition (H) at these parameters: {} (margin_L = {:.4e}, margin_Pr = {:.4e})",
        if h.satisfied { "satisfied" } else { "violated" },
        h.margin_l,
        h.margin_pr
    );
    println!(
        "smallest Prandtl number satisfying (H): {:.6e}",
        2.0 * c1 * dp.ra * dp.d.powf(1.5) * dp.a.sqrt()
    );
    let mut f = std::fs::File::create(ctx.out.join("c1.txt"))?;
    writeln!(f, "{c1:.17e}")?;
    ctx.write_sidecar(c1, None)?;
    let _ = LAMBDA_1;
    Ok(c1)
}
