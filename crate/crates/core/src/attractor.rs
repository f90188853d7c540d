//! Ensemble simulation, omega-limit sampling, Hausdorff semidistances,
//! the coupling-strength sweep towards the Newtonian attractor, the
//! microrotation vanishing check on the limit attractor, the Newtonian
//! projection comparison and the continuous-dependence probe.
//!
//! Omega-limit sets are approximated by finite clouds of late-window
//! trajectory snapshots; semidistances between clouds are exact sup-inf
//! computations over the finite samples.

use crate::audit::{enstrophy_ball_audit, AuditConfig};
use crate::basis::BasisSet;
use crate::error::Error;
use crate::field::{Field, State};
use crate::integrate::{integrate, IntegrateOpts, ModelKind, System, Trajectory};
use crate::params::{check_condition_h, DimensionlessParams};
use crate::util::{linear_fit, pairwise_sum_by};
use crate::Result;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Product metric on states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// `|u| + sqrt(M) |gamma| + |theta|` in L2.
    X,
    /// The H1-seminorm counterpart, consistent with the enstrophy pairing.
    Z,
}

impl Metric {
    pub fn tag(&self) -> &'static str {
        match self {
            Metric::X => "X",
            Metric::Z => "Z",
        }
    }
}

/// Distance between two states on the same bases.
pub fn state_distance(a: &State, b: &State, metric: Metric, m: f64) -> f64 {
    let du = diff_norm(&a.u, &b.u, metric);
    let dg = diff_norm(&a.gamma, &b.gamma, metric);
    let dth = diff_norm(&a.theta, &b.theta, metric);
    du + m.sqrt() * dg + dth
}

fn diff_norm(a: &Field, b: &Field, metric: Metric) -> f64 {
    debug_assert_eq!(a.coeffs.len(), b.coeffs.len());
    match metric {
        Metric::X => pairwise_sum_by(a.coeffs.len(), |i| {
            let d = a.coeffs[i] - b.coeffs[i];
            d * d
        })
        .sqrt(),
        Metric::Z => pairwise_sum_by(a.coeffs.len(), |i| {
            let d = a.coeffs[i] - b.coeffs[i];
            a.basis.modes[i].lambda * d * d
        })
        .sqrt(),
    }
}

/// Specification of a bounded set of initial states: a coefficient box
/// rescaled to exact per-field L2 radii, drawn reproducibly from a seed.
#[derive(Debug, Clone, Copy)]
pub struct EnsembleSpec {
    pub members: usize,
    pub radius_u: f64,
    pub radius_gamma: f64,
    pub radius_theta: f64,
    pub seed: u64,
}

/// A drawn ensemble of initial states.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub spec: EnsembleSpec,
    pub states: Vec<State>,
}

impl Ensemble {
    /// Draws the ensemble: uniform coefficients in `[-1, 1]` rescaled so
    /// each field has exactly its configured L2 radius.
    pub fn draw(bases: &BasisSet, spec: &EnsembleSpec) -> Result<Self> {
        if spec.members == 0 {
            return Err(Error::Config("ensemble needs at least one member".into()));
        }
        let mut states = Vec::with_capacity(spec.members);
        for i in 0..spec.members {
            let mut rng = ChaCha8Rng::seed_from_u64(
                spec.seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            );
            let mut draw = |basis: &std::sync::Arc<crate::basis::EigenBasis>, radius: f64| {
                let mut c: Vec<f64> = (0..basis.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let nrm = pairwise_sum_by(c.len(), |j| c[j] * c[j]).sqrt();
                let s = if nrm > 0.0 { radius / nrm } else { 0.0 };
                for v in &mut c {
                    *v *= s;
                }
                Field::new(basis.clone(), c)
            };
            let u = draw(&bases.stokes, spec.radius_u)?;
            let gamma = draw(&bases.vector, spec.radius_gamma)?;
            let theta = draw(&bases.scalar, spec.radius_theta)?;
            states.push(State::new(0.0, u, gamma, theta)?);
        }
        Ok(Self { spec: *spec, states })
    }
}

/// Finite cloud of late-window states approximating an omega-limit set.
#[derive(Debug, Clone)]
pub struct AttractorSample {
    pub dp: DimensionlessParams,
    pub model: ModelKind,
    pub metric: Metric,
    pub burn_in: f64,
    pub window: f64,
    pub states: Vec<State>,
    /// Largest empirical ball-entry time across members, when available.
    pub empirical_t2: Option<f64>,
}

/// Sampling options for [`sample_omega_limit`].
#[derive(Debug, Clone, Copy)]
pub struct SampleOpts {
    pub burn_in: f64,
    pub window: f64,
    /// Snapshot cadence in steps within the window.
    pub cadence: usize,
    pub dt: f64,
    pub scheme: crate::integrate::Scheme,
    pub metric: Metric,
}

/// Integrates every ensemble member, discards the burn-in and collects
/// snapshots at the configured cadence within the window. Members run in
/// parallel; the assembled sample order is deterministic.
pub fn sample_omega_limit(
    sys: &System,
    ensemble: &Ensemble,
    opts: &SampleOpts,
    audit_cfg: &AuditConfig,
) -> Result<AttractorSample> {
    if opts.burn_in < 0.0 || opts.window <= 0.0 {
        return Err(Error::Config("burn_in must be >= 0 and window > 0".into()));
    }
    let horizon = opts.burn_in + opts.window;
    let iopts = IntegrateOpts {
        horizon,
        dt: opts.dt,
        scheme: opts.scheme,
        snapshot_every: Some(opts.cadence.max(1)),
        log_every: None,
    };
    let runs: Vec<Trajectory> = ensemble
        .states
        .par_iter()
        .map(|s0| integrate(sys, s0, &iopts, None))
        .collect::<Result<Vec<_>>>()?;
    let mut states = Vec::new();
    let mut t2 = None;
    for traj in &runs {
        let (_, tstar) = enstrophy_ball_audit(&traj.diagnostics, &sys.dp, audit_cfg);
        if let Some(ts) = tstar {
            if ts > opts.burn_in {
                log::warn!(
                    "burn-in {} is shorter than the empirical ball-entry time {ts:.4}",
                    opts.burn_in
                );
            }
            t2 = Some(t2.map_or(ts, |cur: f64| cur.max(ts)));
        }
        for s in &traj.snapshots {
            if s.t >= opts.burn_in - 1e-12 {
                states.push(s.clone());
            }
        }
    }
    Ok(AttractorSample {
        dp: sys.dp,
        model: sys.model,
        metric: opts.metric,
        burn_in: opts.burn_in,
        window: opts.window,
        states,
        empirical_t2: t2,
    })
}

/// Hausdorff semidistance `sup_{a in A} inf_{b in B} rho(a, b)` with the
/// indices of the attaining pair (smallest indices on ties).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemidistReport {
    pub value: f64,
    pub attaining: Option<(usize, usize)>,
}

fn check_compatible(a: &AttractorSample, b: &AttractorSample) -> Result<()> {
    if a.metric != b.metric {
        return Err(Error::MetricMismatch {
            expected: a.metric.tag().into(),
            got: b.metric.tag().into(),
        });
    }
    let pa = &a.dp;
    let pb = &b.dp;
    // the coupling K may differ between the two samples; everything else
    // must agree for the product metrics to be comparable
    let same = pa.ra == pb.ra
        && pa.pr == pb.pr
        && pa.l == pb.l
        && pa.m == pb.m
        && pa.g == pb.g
        && pa.ax == pb.ax
        && pa.ay == pb.ay;
    if !same {
        return Err(Error::Precondition(
            "attractor samples disagree in parameters other than K".into(),
        ));
    }
    if a.states.is_empty() || b.states.is_empty() {
        return Err(Error::Precondition("attractor samples must be nonempty".into()));
    }
    Ok(())
}

/// Brute-force double-loop semidistance; the canonical definition.
pub fn hausdorff_semidist_brute(
    a: &AttractorSample,
    b: &AttractorSample,
    metric: Metric,
) -> Result<SemidistReport> {
    check_compatible(a, b)?;
    let m = a.dp.m;
    let mut best = f64::NEG_INFINITY;
    let mut attain = None;
    for (i, sa) in a.states.iter().enumerate() {
        let mut inf = f64::INFINITY;
        let mut jbest = 0;
        for (j, sb) in b.states.iter().enumerate() {
            let d = state_distance(sa, sb, metric, m);
            if d < inf {
                inf = d;
                jbest = j;
            }
        }
        if inf > best {
            best = inf;
            attain = Some((i, jbest));
        }
    }
    Ok(SemidistReport { value: best, attaining: attain })
}

/// Parallel semidistance; bit-identical to the brute-force loop including
/// tie-breaking, because each inner infimum is computed sequentially and
/// the outer supremum is folded in index order over the collected results.
pub fn hausdorff_semidist(
    a: &AttractorSample,
    b: &AttractorSample,
    metric: Metric,
) -> Result<SemidistReport> {
    check_compatible(a, b)?;
    let m = a.dp.m;
    let infima: Vec<(f64, usize)> = a
        .states
        .par_iter()
        .map(|sa| {
            let mut inf = f64::INFINITY;
            let mut jbest = 0;
            for (j, sb) in b.states.iter().enumerate() {
                let d = state_distance(sa, sb, metric, m);
                if d < inf {
                    inf = d;
                    jbest = j;
                }
            }
            (inf, jbest)
        })
        .collect();
    let mut best = f64::NEG_INFINITY;
    let mut attain = None;
    for (i, &(inf, j)) in infima.iter().enumerate() {
        if inf > best {
            best = inf;
            attain = Some((i, j));
        }
    }
    Ok(SemidistReport { value: best, attaining: attain })
}

/// One row of the coupling sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub k: f64,
    pub dist_x: f64,
    pub dist_z: f64,
    pub n_samples: usize,
    pub burn_in: f64,
    pub window: f64,
}

/// Result of the sweep: accepted rows plus refused entries.
#[derive(Debug, Clone)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub refused: Vec<(f64, String)>,
}

/// Sweeps the coupling `K` over a descending list ending at zero, sampling
/// the omega-limit cloud per entry with identical seeds and windows, and
/// reporting semidistances to the `K = 0` sample. Entries violating the
/// largeness condition (H) are refused.
#[allow(clippy::too_many_arguments)]
pub fn k_sweep(
    bases: &BasisSet,
    base: &DimensionlessParams,
    ks: &[f64],
    ensemble_spec: &EnsembleSpec,
    opts: &SampleOpts,
    audit_cfg: &AuditConfig,
) -> Result<SweepTable> {
    if ks.is_empty() {
        return Err(Error::Config("K list must not be empty".into()));
    }
    if *ks.last().unwrap() != 0.0 {
        return Err(Error::Config("K list must end at 0".into()));
    }
    for w in ks.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::Config("K list must be strictly descending".into()));
        }
    }
    if ks.iter().any(|&k| k < 0.0) {
        return Err(Error::Config("K values must be nonnegative".into()));
    }

    let ensemble = Ensemble::draw(bases, ensemble_spec)?;
    let mut refused = Vec::new();
    let mut samples: Vec<(f64, AttractorSample)> = Vec::new();
    for &k in ks {
        let dp = DimensionlessParams::new(
            base.ra, base.pr, k, base.l, base.m, base.g, base.ax, base.ay,
        )?;
        let h = check_condition_h(&dp, audit_cfg.c1);
        if !h.satisfied {
            refused.push((
                k,
                format!("condition (H) unmet: margin_L = {:.3e}, margin_Pr = {:.3e}", h.margin_l, h.margin_pr),
            ));
            continue;
        }
        let sys = System::new(bases.clone(), dp, ModelKind::Micropolar)?;
        let sample = sample_omega_limit(&sys, &ensemble, opts, audit_cfg)?;
        samples.push((k, sample));
    }
    let Some((_, base_sample)) = samples.iter().find(|(k, _)| *k == 0.0) else {
        return Err(Error::Config("the K = 0 baseline was refused; sweep impossible".into()));
    };
    let mut rows = Vec::new();
    for (k, sample) in &samples {
        let dx = hausdorff_semidist(sample, base_sample, Metric::X)?;
        let dz = hausdorff_semidist(sample, base_sample, Metric::Z)?;
        rows.push(SweepRow {
            k: *k,
            dist_x: dx.value,
            dist_z: dz.value,
            n_samples: sample.states.len(),
            burn_in: opts.burn_in,
            window: opts.window,
        });
    }
    Ok(SweepTable { rows, refused })
}

/// Largest microrotation norm over a `K = 0` omega-limit sample.
pub fn gamma_on_a0_audit(sample: &AttractorSample) -> Result<f64> {
    if sample.dp.k != 0.0 {
        return Err(Error::Precondition(format!(
            "gamma vanishing check needs a K = 0 sample, got K = {}",
            sample.dp.k
        )));
    }
    Ok(sample.states.iter().map(|s| s.gamma.l2()).fold(0.0, f64::max))
}

/// Runs the coupled model at `K = 0` and the standalone Newtonian model
/// from identical `(u0, theta0)` and reports the largest snapshot deviation
/// `|u_c - u_n| + |theta_c - theta_n|` over time.
pub fn newtonian_projection_compare(
    bases: &BasisSet,
    dp: &DimensionlessParams,
    s0: &State,
    opts: &IntegrateOpts,
) -> Result<f64> {
    if dp.k != 0.0 {
        return Err(Error::Precondition("comparison requires K = 0".into()));
    }
    let coupled = System::new(bases.clone(), *dp, ModelKind::Micropolar)?;
    let newton = System::new(bases.clone(), *dp, ModelKind::Newtonian)?;
    let ta = integrate(&coupled, s0, opts, None)?;
    let tb = integrate(&newton, s0, opts, None)?;
    let mut worst: f64 = 0.0;
    for (a, b) in ta.snapshots.iter().zip(&tb.snapshots) {
        let du = pairwise_sum_by(a.u.coeffs.len(), |i| {
            let d = a.u.coeffs[i] - b.u.coeffs[i];
            d * d
        })
        .sqrt();
        let dth = pairwise_sum_by(a.theta.coeffs.len(), |i| {
            let d = a.theta.coeffs[i] - b.theta.coeffs[i];
            d * d
        })
        .sqrt();
        worst = worst.max(du + dth);
    }
    Ok(worst)
}

/// Outcome of the continuous-dependence probe.
#[derive(Debug, Clone)]
pub struct ProbeReport {
    /// Fitted exponent of `d(t) ~ d(0) e^{E t}`.
    pub exponent: f64,
    /// RMS residual of the log-linear fit.
    pub fit_rms: f64,
    /// Whether the separation stayed exponentially bounded over the run.
    pub pass: bool,
    /// `(t, d(t))` series.
    pub series: Vec<(f64, f64)>,
}

/// Integrates `s0` and a perturbation at Z-distance `delta` and fits the
/// exponential growth rate of their separation.
pub fn continuous_dependence_probe(
    sys: &System,
    s0: &State,
    delta: f64,
    horizon: f64,
    dt: f64,
    scheme: crate::integrate::Scheme,
    seed: u64,
    fit_rms_threshold: f64,
) -> Result<ProbeReport> {
    let opts = IntegrateOpts { horizon, dt, scheme, snapshot_every: Some(1), log_every: None };
    if delta == 0.0 {
        let ta = integrate(sys, s0, &opts, None)?;
        let series = ta.snapshots.iter().map(|s| (s.t, 0.0)).collect();
        return Ok(ProbeReport { exponent: 0.0, fit_rms: 0.0, pass: true, series });
    }
    // random perturbation direction normalized in the Z metric
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perturb = |f: &Field| -> Field {
        let c: Vec<f64> = (0..f.coeffs.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Field::new(f.basis.clone(), c).unwrap()
    };
    let pu = perturb(&s0.u);
    let pg = perturb(&s0.gamma);
    let pth = perturb(&s0.theta);
    let znorm = pu.h1semi() + sys.dp.m.sqrt() * pg.h1semi() + pth.h1semi();
    let scale = delta / znorm;
    let s1 = State::new(
        s0.t,
        s0.u.add_scaled(&pu, scale)?,
        s0.gamma.add_scaled(&pg, scale)?,
        s0.theta.add_scaled(&pth, scale)?,
    )?;
    let ta = integrate(sys, s0, &opts, None)?;
    let tb = integrate(sys, &s1, &opts, None)?;
    let mut series = Vec::new();
    for (a, b) in ta.snapshots.iter().zip(&tb.snapshots) {
        series.push((a.t, state_distance(a, b, Metric::Z, sys.dp.m)));
    }
    let mut ts = Vec::new();
    let mut ln_d = Vec::new();
    for &(t, d) in &series {
        if d > 0.0 {
            ts.push(t);
            ln_d.push(d.ln());
        }
    }
    if ts.len() < 4 {
        return Err(Error::Precondition("separation vanished; nothing to fit".into()));
    }
    let (_, slope, rms) = linear_fit(&ts, &ln_d);
    Ok(ProbeReport { exponent: slope, fit_rms: rms, pass: rms <= fit_rms_threshold, series })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::test_spec;
    use crate::integrate::Scheme;

    fn subcritical() -> (BasisSet, DimensionlessParams) {
        let bases = BasisSet::build(&test_spec()).unwrap();
        // small Ra, large Pr so (H) holds with the default c1
        let dp = DimensionlessParams::new(20.0, 200.0, 0.0, 1.0, 1.0, 0.0, 2.0, 2.0).unwrap();
        (bases, dp)
    }

    fn sample_opts() -> SampleOpts {
        SampleOpts {
            burn_in: 0.5,
            window: 0.2,
            cadence: 40,
            dt: 1e-3,
            scheme: Scheme::ImexEuler,
            metric: Metric::X,
        }
    }

    #[test]
    fn zero_ensemble_samples_the_origin() {
        let (bases, dp) = subcritical();
        let sys = System::new(bases.clone(), dp, ModelKind::Micropolar).unwrap();
        let spec = EnsembleSpec { members: 2, radius_u: 0.0, radius_gamma: 0.0, radius_theta: 0.0, seed: 1 };
        let ens = Ensemble::draw(&bases, &spec).unwrap();
        let s = sample_omega_limit(&sys, &ens, &sample_opts(), &AuditConfig::default()).unwrap();
        assert!(!s.states.is_empty());
        for st in &s.states {
            assert_eq!(st.u.l2(), 0.0);
            assert_eq!(st.gamma.l2(), 0.0);
            assert_eq!(st.theta.l2(), 0.0);
        }
    }

    #[test]
    fn semidistance_identities() {
        let (bases, dp) = subcritical();
        let sys = System::new(bases.clone(), dp, ModelKind::Micropolar).unwrap();
        let spec = EnsembleSpec { members: 2, radius_u: 0.1, radius_gamma: 0.1, radius_theta: 0.1, seed: 3 };
        let ens = Ensemble::draw(&bases, &spec).unwrap();
        let s = sample_omega_limit(&sys, &ens, &sample_opts(), &AuditConfig::default()).unwrap();
        let d = hausdorff_semidist(&s, &s, Metric::X).unwrap();
        assert_eq!(d.value, 0.0);
        // dist from the zero sample to a one-state sample of norm r is r
        let mut zero = s.clone();
        zero.states = vec![State::zero(&bases)];
        let mut one = s.clone();
        one.states = vec![s.states[0].clone()];
        let r = state_distance(&zero.states[0], &one.states[0], Metric::X, dp.m);
        let d2 = hausdorff_semidist(&zero, &one, Metric::X).unwrap();
        assert!((d2.value - r).abs() < 1e-15);
        // enlarging B cannot increase the distance
        let mut bigger = one.clone();
        bigger.states.push(s.states[1].clone());
        let d3 = hausdorff_semidist(&zero, &bigger, Metric::X).unwrap();
        assert!(d3.value <= d2.value);
        // subset property: dist(A, B) = 0 when A is a subset of B
        let d4 = hausdorff_semidist(&one, &s, Metric::X).unwrap();
        assert_eq!(d4.value, 0.0);
    }

    #[test]
    fn parallel_matches_brute_force_exactly() {
        let (bases, dp) = subcritical();
        let sys = System::new(bases.clone(), dp, ModelKind::Micropolar).unwrap();
        for seed in 0..6 {
            let spec = EnsembleSpec {
                members: 3,
                radius_u: 0.2,
                radius_gamma: 0.15,
                radius_theta: 0.1,
                seed,
            };
            let ens = Ensemble::draw(&bases, &spec).unwrap();
            let mut o = sample_opts();
            o.cadence = 20;
            let s = sample_omega_limit(&sys, &ens, &o, &AuditConfig::default()).unwrap();
            let spec2 = EnsembleSpec { seed: seed + 100, ..spec };
            let ens2 = Ensemble::draw(&bases, &spec2).unwrap();
            let s2 = sample_omega_limit(&sys, &ens2, &o, &AuditConfig::default()).unwrap();
            for metric in [Metric::X, Metric::Z] {
                let a = hausdorff_semidist_brute(&s, &s2, metric).unwrap();
                let b = hausdorff_semidist(&s, &s2, metric).unwrap();
                assert_eq!(a.value.to_bits(), b.value.to_bits());
                assert_eq!(a.attaining, b.attaining);
            }
        }
    }

    #[test]
    fn metric_mismatch_is_rejected() {
        let (bases, dp) = subcritical();
        let sys = System::new(bases.clone(), dp, ModelKind::Micropolar).unwrap();
        let spec = EnsembleSpec { members: 1, radius_u: 0.1, radius_gamma: 0.1, radius_theta: 0.1, seed: 4 };
        let ens = Ensemble::draw(&bases, &spec).unwrap();
        let a = sample_omega_limit(&sys, &ens, &sample_opts(), &AuditConfig::default()).unwrap();
        let mut b = a.clone();
        b.metric = Metric::Z;
        assert!(matches!(
            hausdorff_semidist(&a, &b, Metric::X),
            Err(Error::MetricMismatch { .. })
        ));
    }

    #[test]
    fn sweep_with_single_zero_entry() {
        let (bases, dp) = subcritical();
        let spec = EnsembleSpec { members: 1, radius_u: 0.05, radius_gamma: 0.05, radius_theta: 0.05, seed: 5 };
        let table = k_sweep(&bases, &dp, &[0.0], &spec, &sample_opts(), &AuditConfig::default()).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert_eq!(table.rows[0].k, 0.0);
        assert_eq!(table.rows[0].dist_x, 0.0);
        assert!(table.refused.is_empty());
    }

    #[test]
    fn sweep_validates_k_list() {
        let (bases, dp) = subcritical();
        let spec = EnsembleSpec { members: 1, radius_u: 0.0, radius_gamma: 0.0, radius_theta: 0.0, seed: 6 };
        let o = sample_opts();
        let cfg = AuditConfig::default();
        assert!(k_sweep(&bases, &dp, &[], &spec, &o, &cfg).is_err());
        assert!(k_sweep(&bases, &dp, &[0.1, 0.2, 0.0], &spec, &o, &cfg).is_err());
        assert!(k_sweep(&bases, &dp, &[0.1, 0.05], &spec, &o, &cfg).is_err());
    }

    #[test]
    fn sweep_refuses_condition_h_violations() {
        let bases = BasisSet::build(&test_spec()).unwrap();
        // L small: margin_L goes negative for large K
        let dp = DimensionlessParams::new(20.0, 500.0, 0.0, 0.1, 0.1, 0.0, 2.0, 2.0).unwrap();
        let spec = EnsembleSpec { members: 1, radius_u: 0.0, radius_gamma: 0.0, radius_theta: 0.0, seed: 7 };
        let kbad = 0.2; // needs L >= 16K/(3pi^2) = 0.108 > 0.1
        let table =
            k_sweep(&bases, &dp, &[kbad, 0.0], &spec, &sample_opts(), &AuditConfig::default())
                .unwrap();
        assert_eq!(table.rows.len(), 1);
        assert_eq!(table.refused.len(), 1);
        assert_eq!(table.refused[0].0, kbad);
    }

    #[test]
    fn gamma_audit_gates_and_measures() {
        let (bases, dp) = subcritical();
        let sys = System::new(bases.clone(), dp, ModelKind::Micropolar).unwrap();
        // gamma_0 = 0 ensemble keeps gamma identically zero at K = 0
        let spec = EnsembleSpec { members: 2, radius_u: 0.1, radius_gamma: 0.0, radius_theta: 0.1, seed: 8 };
        let ens = Ensemble::draw(&bases, &spec).unwrap();
        let s = sample_omega_limit(&sys, &ens, &sample_opts(), &AuditConfig::default()).unwrap();
        assert_eq!(gamma_on_a0_audit(&s).unwrap(), 0.0);
        // K > 0 sample is rejected
        let mut bad = s.clone();
        bad.dp = DimensionlessParams::new(dp.ra, dp.pr, 0.1, dp.l, dp.m, dp.g, dp.ax, dp.ay).unwrap();
        assert!(matches!(gamma_on_a0_audit(&bad), Err(Error::Precondition(_))));
    }

    #[test]
    fn probe_zero_delta_is_flat() {
        let (bases, dp) = subcritical();
        let sys = System::new(bases.clone(), dp, ModelKind::Micropolar).unwrap();
        let spec = EnsembleSpec { members: 1, radius_u: 0.1, radius_gamma: 0.1, radius_theta: 0.1, seed: 9 };
        let ens = Ensemble::draw(&bases, &spec).unwrap();
        let rep =
            continuous_dependence_probe(&sys, &ens.states[0], 0.0, 0.05, 1e-3, Scheme::ImexEuler, 1, 0.75)
                .unwrap();
        assert!(rep.pass);
        assert!(rep.series.iter().all(|&(_, d)| d == 0.0));
    }

    #[test]
    fn probe_subcritical_contracts() {
        let (bases, dp) = subcritical();
        let sys = System::new(bases.clone(), dp, ModelKind::Micropolar).unwrap();
        let spec = EnsembleSpec { members: 1, radius_u: 0.05, radius_gamma: 0.05, radius_theta: 0.05, seed: 10 };
        let ens = Ensemble::draw(&bases, &spec).unwrap();
        let rep =
            continuous_dependence_probe(&sys, &ens.states[0], 1e-6, 0.2, 1e-3, Scheme::ImexEuler, 2, 0.75)
                .unwrap();
        assert!(rep.exponent < 0.0, "subcritical separation should contract, got {}", rep.exponent);
        // linear-regime consistency between two perturbation sizes
        let rep2 =
            continuous_dependence_probe(&sys, &ens.states[0], 1e-8, 0.2, 1e-3, Scheme::ImexEuler, 2, 0.75)
                .unwrap();
        let rel = (rep.exponent - rep2.exponent).abs() / rep.exponent.abs();
        assert!(rel < 0.1, "exponents {} vs {}", rep.exponent, rep2.exponent);
    }
}
