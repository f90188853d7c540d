//! Numerical audits of the explicit a priori estimates: the temperature
//! maximum principle, the mean temperature bound, the velocity and
//! microrotation energy bounds, the mean-enstrophy bound, the forward
//! invariance of the enstrophy ball, and the gradient-temperature bound.
//!
//! Audits are pure functions of a completed trajectory's diagnostics and
//! never fail when their preconditions do not hold; they report
//! not-applicable instead. Tolerances absorb time-quadrature and
//! truncation error and default to a small fraction of each bound's scale.

use crate::basis::EigenBasis;
use crate::field::Field;
use crate::integrate::StepDiagnostics;
use crate::params::{check_condition_h, DimensionlessParams};
use crate::util::linear_fit;
use crate::LAMBDA_1;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Audit configuration: the Agmon constant estimate and tolerances.
#[derive(Debug, Clone, Copy)]
pub struct AuditConfig {
    /// Agmon constant estimate entering condition (H) and the radius
    /// polynomial.
    pub c1: f64,
    /// Relative tolerance applied to each bound's scale.
    pub rel_tol: f64,
    /// Relative slack of the enstrophy-ball invariance check.
    pub ball_tol: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self { c1: 0.25, rel_tol: 1e-6, ball_tol: 1e-3 }
    }
}

/// Outcome of one audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditStatus {
    Pass,
    Fail,
    NotApplicable,
}

impl AuditStatus {
    pub fn tag(&self) -> &'static str {
        match self {
            AuditStatus::Pass => "pass",
            AuditStatus::Fail => "fail",
            AuditStatus::NotApplicable => "not-applicable",
        }
    }
}

/// One audited inequality.
#[derive(Debug, Clone)]
pub struct AuditRecord {
    pub name: &'static str,
    /// Most negative margin observed (bound minus measured quantity).
    pub worst_margin: f64,
    /// Time at which the worst margin occurred.
    pub t_worst: f64,
    pub status: AuditStatus,
    pub detail: String,
}

impl AuditRecord {
    fn not_applicable(name: &'static str, detail: String) -> Self {
        Self { name, worst_margin: f64::INFINITY, t_worst: f64::NAN, status: AuditStatus::NotApplicable, detail }
    }
}

/// Full audit outcome with the derived quantities.
#[derive(Debug, Clone)]
pub struct AuditReport {
    pub records: Vec<AuditRecord>,
    pub t1: f64,
    pub ball_radius: f64,
    pub d: f64,
    pub implied_c4: f64,
    /// First recorded time at which the enstrophy entered the ball.
    pub empirical_t2: Option<f64>,
}

impl AuditReport {
    pub fn all_applicable_pass(&self) -> bool {
        self.records.iter().all(|r| r.status != AuditStatus::Fail)
    }
}

/// `T1 = ln(1 + |theta_0| / sqrt(A)) / pi^2`.
pub fn time_t1(theta0_l2: f64, a: f64) -> f64 {
    assert!(theta0_l2 >= 0.0 && a > 0.0);
    (1.0 + theta0_l2 / a.sqrt()).ln() / LAMBDA_1
}

/// Enstrophy ball radius `R = 4 pi / sqrt(6) * A D Ra^2`.
pub fn ball_radius(dp: &DimensionlessParams) -> f64 {
    4.0 * std::f64::consts::PI / 6.0f64.sqrt() * dp.a * dp.d * dp.ra * dp.ra
}

/// The enstrophy absorption polynomial
/// `32 Ra^2 A + 2 c1^4 eps^4 D^3 V^3 - (pi^2 / D) V`; nonpositive at
/// `V = R` whenever condition (H) holds with the same `c1`.
pub fn radius_polynomial(v: f64, dp: &DimensionlessParams, c1: f64) -> f64 {
    assert!(v >= 0.0);
    32.0 * dp.ra * dp.ra * dp.a + 2.0 * c1.powi(4) * dp.eps.powi(4) * dp.d.powi(3) * v.powi(3)
        - LAMBDA_1 / dp.d * v
}

fn worst_over<'a>(
    rows: impl Iterator<Item = (&'a StepDiagnostics, f64)>,
) -> (f64, f64) {
    let mut worst = f64::INFINITY;
    let mut t_worst = f64::NAN;
    for (row, margin) in rows {
        if margin < worst {
            worst = margin;
            t_worst = row.t;
        }
    }
    (worst, t_worst)
}

/// Maximum principle: `|(T-1)^+(t)| <= |(T-1)^+(0)| e^{-pi^2 t}` and the
/// `T^-` analogue. Produces two records.
pub fn max_principle_audit(rows: &[StepDiagnostics], cfg: &AuditConfig) -> Vec<AuditRecord> {
    let t0 = rows[0].t;
    let pos0 = rows[0].norms.pos_part;
    let neg0 = rows[0].norms.neg_part;
    let mut out = Vec::new();
    for (name, initial, get) in [
        ("max-principle-pos", pos0, (|r: &StepDiagnostics| r.norms.pos_part) as fn(&StepDiagnostics) -> f64),
        ("max-principle-neg", neg0, |r: &StepDiagnostics| r.norms.neg_part),
    ] {
        let tol = cfg.rel_tol * initial.max(1.0e-12);
        let (worst, t_worst) = worst_over(
            rows.iter().map(|r| (r, initial * (-LAMBDA_1 * (r.t - t0)).exp() - get(r))),
        );
        let status = if worst >= -tol { AuditStatus::Pass } else { AuditStatus::Fail };
        out.push(AuditRecord {
            name,
            worst_margin: worst,
            t_worst,
            status,
            detail: format!("initial excess norm {initial:.6e}"),
        });
    }
    out
}

/// Fitted exponential decay rate of the positive-part norm over
/// `[t0, t0 + window]`, ignoring samples below `floor * pos(0)`.
pub fn positive_part_decay_rate(rows: &[StepDiagnostics], window: f64, floor: f64) -> Option<f64> {
    let t0 = rows[0].t;
    let p0 = rows[0].norms.pos_part;
    if p0 <= 0.0 {
        return None;
    }
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for r in rows {
        if r.t - t0 <= window && r.norms.pos_part > floor * p0 {
            ts.push(r.t - t0);
            ys.push(r.norms.pos_part.ln());
        }
    }
    if ts.len() < 8 {
        return None;
    }
    let (_, slope, _) = linear_fit(&ts, &ys);
    Some(-slope)
}

/// Mean temperature bound `|theta(t)| <= 2 sqrt(A) + 2 (|theta_0| + sqrt(A)) e^{-pi^2 t}`.
pub fn theta_bound_audit(
    rows: &[StepDiagnostics],
    dp: &DimensionlessParams,
    cfg: &AuditConfig,
) -> AuditRecord {
    let t0 = rows[0].t;
    let th0 = rows[0].norms.l2_theta;
    let sa = dp.a.sqrt();
    let tol = cfg.rel_tol * 2.0 * sa;
    let (worst, t_worst) = worst_over(rows.iter().map(|r| {
        let bound = 2.0 * sa + 2.0 * (th0 + sa) * (-LAMBDA_1 * (r.t - t0)).exp();
        (r, bound - r.norms.l2_theta)
    }));
    AuditRecord {
        name: "theta-l2-bound",
        worst_margin: worst,
        t_worst,
        status: if worst >= -tol { AuditStatus::Pass } else { AuditStatus::Fail },
        detail: format!("asymptotic bound {:.6e}", 2.0 * sa),
    }
}

/// Energy bound on `|u|^2 + M |gamma|^2` with the branch selected by
/// `D eps` versus one.
pub fn energy_bound_audit(
    rows: &[StepDiagnostics],
    dp: &DimensionlessParams,
    cfg: &AuditConfig,
) -> AuditRecord {
    let t0 = rows[0].t;
    let e0 = rows[0].norms.l2_u.powi(2) + dp.m * rows[0].norms.l2_gamma.powi(2);
    let th0 = rows[0].norms.l2_theta;
    let sa = dp.a.sqrt();
    let de = dp.d * dp.eps;
    let tail = 8.0 * dp.a * dp.d * dp.ra * dp.ra;
    let tol = cfg.rel_tol * tail.max(1.0);
    let critical = (de - 1.0).abs() < 1e-12;
    let (worst, t_worst) = worst_over(rows.iter().map(|r| {
        let t = r.t - t0;
        let bound = if critical {
            (e0 + 16.0 * dp.ra * dp.ra * (th0 + sa).powi(2) / dp.eps) * (-LAMBDA_1 * t).exp()
                + tail
        } else {
            e0 * (-2.0 * LAMBDA_1 / de * t).exp()
                + 8.0 * dp.d * dp.ra * dp.ra * (th0 + sa).powi(2) / (de - 1.0).abs()
                    * (-2.0 * LAMBDA_1 * 1.0f64.min(1.0 / de) * t).exp()
                + tail
        };
        let have = r.norms.l2_u.powi(2) + dp.m * r.norms.l2_gamma.powi(2);
        (r, bound - have)
    }));
    AuditRecord {
        name: "energy-l2-bound",
        worst_margin: worst,
        t_worst,
        status: if worst >= -tol { AuditStatus::Pass } else { AuditStatus::Fail },
        detail: format!("branch {}", if critical { "D*eps = 1" } else { "D*eps != 1" }),
    }
}

/// Mean enstrophy over `[T1, t]` against
/// `eps/(2D(t-T1)) (|u(T1)|^2 + M |gamma(T1)|^2) + 8 A Ra^2 / (D pi^2)`.
pub fn mean_enstrophy_audit(
    rows: &[StepDiagnostics],
    dp: &DimensionlessParams,
    cfg: &AuditConfig,
) -> AuditRecord {
    let t0 = rows[0].t;
    let t1 = t0 + time_t1(rows[0].norms.l2_theta, dp.a);
    let Some(start) = rows.iter().position(|r| r.t >= t1) else {
        return AuditRecord::not_applicable(
            "mean-enstrophy",
            format!("run ends before T1 = {t1:.4}"),
        );
    };
    if start + 1 >= rows.len() {
        return AuditRecord::not_applicable(
            "mean-enstrophy",
            format!("no samples after T1 = {t1:.4}"),
        );
    }
    let ts = rows[start].t;
    let head = rows[start].norms.l2_u.powi(2) + dp.m * rows[start].norms.l2_gamma.powi(2);
    let steady = 8.0 * dp.a * dp.ra * dp.ra / (dp.d * LAMBDA_1);
    let tol = cfg.rel_tol * steady.max(1.0);
    let mut integral = 0.0;
    let mut worst = f64::INFINITY;
    let mut t_worst = f64::NAN;
    for i in start + 1..rows.len() {
        let a = &rows[i - 1];
        let b = &rows[i];
        integral += 0.5 * (b.t - a.t) * (a.norms.enstrophy + b.norms.enstrophy);
        let span = b.t - ts;
        let mean = integral / span;
        let bound = dp.eps / (2.0 * dp.d * span) * head + steady;
        let margin = bound - mean;
        if margin < worst {
            worst = margin;
            t_worst = b.t;
        }
    }
    AuditRecord {
        name: "mean-enstrophy",
        worst_margin: worst,
        t_worst,
        status: if worst >= -tol { AuditStatus::Pass } else { AuditStatus::Fail },
        detail: format!("window start {ts:.4}"),
    }
}

/// Forward invariance of the enstrophy ball `V <= R` after the first entry
/// time past `T1`. Returns the record and the empirical entry time.
pub fn enstrophy_ball_audit(
    rows: &[StepDiagnostics],
    dp: &DimensionlessParams,
    cfg: &AuditConfig,
) -> (AuditRecord, Option<f64>) {
    let h = check_condition_h(dp, cfg.c1);
    if !h.satisfied {
        return (
            AuditRecord::not_applicable(
                "enstrophy-ball",
                format!(
                    "condition (H) unmet: margin_L = {:.3e}, margin_Pr = {:.3e}",
                    h.margin_l, h.margin_pr
                ),
            ),
            None,
        );
    }
    let r = ball_radius(dp);
    let t0 = rows[0].t;
    let t1 = t0 + time_t1(rows[0].norms.l2_theta, dp.a);
    let entry = rows.iter().find(|row| row.t >= t1 && row.norms.enstrophy <= r);
    let Some(entry) = entry else {
        return (
            AuditRecord {
                name: "enstrophy-ball",
                worst_margin: f64::NEG_INFINITY,
                t_worst: f64::NAN,
                status: AuditStatus::Fail,
                detail: format!("never entered the ball of radius {r:.6e} after T1 = {t1:.4}"),
            },
            None,
        );
    };
    let tstar = entry.t;
    let cap = r * (1.0 + cfg.ball_tol);
    let (worst, t_worst) =
        worst_over(rows.iter().filter(|row| row.t >= tstar).map(|row| (row, cap - row.norms.enstrophy)));
    let rec = AuditRecord {
        name: "enstrophy-ball",
        worst_margin: worst,
        t_worst,
        status: if worst >= 0.0 { AuditStatus::Pass } else { AuditStatus::Fail },
        detail: format!("R = {r:.6e}, entry at t* = {tstar:.4}"),
    };
    (rec, Some(tstar))
}

/// Gradient-temperature bound: reports the constant implied by
/// `sup |grad theta|^2 <= c4 A D^{3/2} (1+A) (1+Ra^3)` over the trailing
/// half of the run.
pub fn grad_theta_audit(rows: &[StepDiagnostics], dp: &DimensionlessParams) -> (AuditRecord, f64) {
    let half = rows.len() / 2;
    let sup = rows[half..]
        .iter()
        .map(|r| r.norms.h1semi_theta.powi(2))
        .fold(0.0f64, f64::max);
    let scale = dp.a * dp.d.powf(1.5) * (1.0 + dp.a) * (1.0 + dp.ra.powi(3));
    let c4 = sup / scale;
    let rec = AuditRecord {
        name: "grad-theta-bound",
        worst_margin: c4,
        t_worst: rows.last().map(|r| r.t).unwrap_or(f64::NAN),
        status: if c4.is_finite() { AuditStatus::Pass } else { AuditStatus::Fail },
        detail: format!("implied c4 = {c4:.6e} over trailing half"),
    };
    (rec, c4)
}

/// Runs every audit over a trajectory's diagnostics.
pub fn run_all(
    rows: &[StepDiagnostics],
    dp: &DimensionlessParams,
    cfg: &AuditConfig,
) -> AuditReport {
    assert!(!rows.is_empty(), "audits need at least one diagnostics row");
    let mut records = max_principle_audit(rows, cfg);
    records.push(theta_bound_audit(rows, dp, cfg));
    records.push(energy_bound_audit(rows, dp, cfg));
    records.push(mean_enstrophy_audit(rows, dp, cfg));
    let (ball, tstar) = enstrophy_ball_audit(rows, dp, cfg);
    records.push(ball);
    let (grad, c4) = grad_theta_audit(rows, dp);
    records.push(grad);
    AuditReport {
        records,
        t1: time_t1(rows[0].norms.l2_theta, dp.a),
        ball_radius: ball_radius(dp),
        d: dp.d,
        implied_c4: c4,
        empirical_t2: tstar,
    }
}

/// Estimates the Agmon constant `c1` of
/// `|v|_inf <= c1 |grad v|^{1/2} |P Delta v|^{1/2}` from below by
/// maximizing the ratio over random fields in the Stokes span, followed by
/// coordinate ascent over the lowest modes. Sampling is a prefix stream:
/// growing `samples` can only increase the estimate for a fixed seed.
pub fn calibrate_agmon_c1(basis: &Arc<EigenBasis>, samples: usize, seed: u64) -> f64 {
    let n = basis.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ratio = |coeffs: &[f64]| -> f64 {
        let f = Field::new(basis.clone(), coeffs.to_vec()).unwrap();
        let sup = f.max_abs();
        let h1 = f.h1semi();
        let op = f.op_norm();
        if h1 == 0.0 || op == 0.0 {
            0.0
        } else {
            sup / (h1.sqrt() * op.sqrt())
        }
    };
    let mut best = vec![0.0; n];
    let mut best_ratio = 0.0;
    for _ in 0..samples {
        // bias towards low modes where the ratio peaks
        let c: Vec<f64> = (0..n)
            .map(|i| rng.gen_range(-1.0..1.0) / (1.0 + basis.modes[i].lambda / LAMBDA_1))
            .collect();
        let r = ratio(&c);
        if r > best_ratio {
            best_ratio = r;
            best = c;
        }
    }
    // coordinate ascent on the lowest modes
    let active = n.min(32);
    let scale = best.iter().map(|v| v.abs()).fold(0.0f64, f64::max).max(1e-3);
    for &delta in &[0.5, 0.2, 0.08, 0.03] {
        for i in 0..active {
            for sign in [1.0, -1.0] {
                let mut cand = best.clone();
                cand[i] += sign * delta * scale;
                let r = ratio(&cand);
                if r > best_ratio {
                    best_ratio = r;
                    best = cand;
                }
            }
        }
    }
    best_ratio
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{test_spec, BasisSet};
    use crate::field::NormSet;

    fn dp() -> DimensionlessParams {
        DimensionlessParams::new(1.0, 1.0, 0.0, 1.0, 2.0, 0.0, 1.0, 1.0).unwrap()
    }

    fn row(t: f64) -> StepDiagnostics {
        StepDiagnostics {
            t,
            norms: NormSet::default(),
            div_gamma_sq: 0.0,
            cross_rot: 0.0,
            cross_buoy: 0.0,
            residual: [0.0; 3],
        }
    }

    #[test]
    fn t1_formula_values() {
        assert_eq!(time_t1(0.0, 4.0), 0.0);
        // |theta_0| = sqrt(A): T1 = ln 2 / pi^2
        let a: f64 = 2.37;
        assert!((time_t1(a.sqrt(), a) - 0.070230492772682876).abs() < 1e-15);
        // |theta_0| = 3 sqrt(A): T1 = ln 4 / pi^2 = 2 ln 2 / pi^2
        assert!((time_t1(3.0 * a.sqrt(), a) - 0.140460985545365753).abs() < 1e-15);
    }

    #[test]
    fn ball_radius_values() {
        // A = 1, D = 2, Ra = 1: R = 8 pi / sqrt 6
        let p = dp();
        assert_eq!(p.d, 2.0);
        assert!((ball_radius(&p) - 10.260398641294913).abs() < 1e-12);
        // doubling Ra quadruples R
        let p2 = DimensionlessParams::new(2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 1.0, 1.0).unwrap();
        assert!((ball_radius(&p2) / ball_radius(&p) - 4.0).abs() < 1e-12);
        // M/L = 3 makes D = 3 and scales R by 3/2 against D = 2
        let p3 = DimensionlessParams::new(1.0, 1.0, 0.0, 1.0, 3.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(p3.d, 3.0);
        assert!((ball_radius(&p3) / ball_radius(&p) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn radius_polynomial_sign_structure() {
        // V = 0 gives the positive constant term.
        let p = DimensionlessParams::new(3.0, 500.0, 0.1, 1.0, 1.0, 0.0, 2.0, 2.0).unwrap();
        let c1 = 0.3;
        assert!((radius_polynomial(0.0, &p, c1) - 32.0 * p.ra * p.ra * p.a).abs() < 1e-12);
        let h = check_condition_h(&p, c1);
        assert!(h.satisfied, "test parameters should satisfy (H): {h:?}");
        let r = ball_radius(&p);
        assert!(radius_polynomial(r, &p, c1) <= 0.0);
        // cubic with two positive roots bracketing R: sign pattern + - +
        // located by a bisection oracle on [0, 2R] and beyond
        let f = |v: f64| radius_polynomial(v, &p, c1);
        let mut lo_root = None;
        let mut hi_root = None;
        let mut prev = f(0.0);
        let mut v = 0.0;
        // the upper root sits near sqrt(pi^2 / (2 c1^4 eps^4 D^4))
        let hi_scale = (LAMBDA_1 / (2.0 * c1.powi(4) * p.eps.powi(4) * p.d.powi(4))).sqrt();
        let vmax = 2.0 * hi_scale;
        let dv = vmax / 200_000.0;
        while v < vmax {
            let next = f(v + dv);
            if prev > 0.0 && next <= 0.0 {
                lo_root = Some(v);
            }
            if prev <= 0.0 && next > 0.0 {
                hi_root = Some(v);
            }
            prev = next;
            v += dv;
        }
        let (lo, hi) = (lo_root.unwrap(), hi_root.unwrap());
        assert!(lo < r && r < hi, "roots {lo} {hi} should bracket {r}");
    }

    #[test]
    fn condition_h_implies_nonpositive_polynomial_at_r() {
        // 100-point parameter sweep over (Ra, Pr, M, L) where (H) holds.
        let mut s = 0x853c49e6748fea9bu64;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        let c1 = 0.31;
        let mut checked = 0;
        while checked < 100 {
            let ra = 1.0 + 999.0 * next();
            let l = 0.2 + 3.0 * next();
            let m = 0.2 + 9.0 * next();
            let k = next() * 3.0 * LAMBDA_1 * l / 16.0;
            let ax = 0.5 + 3.0 * next();
            let ay = 0.5 + 3.0 * next();
            let d = (m / l).max(2.0);
            let pr_min = 2.0 * c1 * ra * d.powf(1.5) * (ax * ay).sqrt();
            let pr = pr_min * (1.0 + 2.0 * next());
            let p = DimensionlessParams::new(ra, pr, k, l, m, 0.0, ax, ay).unwrap();
            let h = check_condition_h(&p, c1);
            if !h.satisfied {
                continue;
            }
            let r = ball_radius(&p);
            let val = radius_polynomial(r, &p, c1);
            assert!(val <= 1e-9 * r, "poly(R) = {val} at Ra={ra} Pr={pr} M={m} L={l}");
            checked += 1;
        }
    }

    #[test]
    fn zero_trajectory_audits() {
        let p = dp();
        let rows: Vec<StepDiagnostics> = (0..50).map(|i| row(i as f64 * 0.01)).collect();
        let cfg = AuditConfig::default();
        let report = run_all(&rows, &p, &cfg);
        // margins of the trivial run: everything passes or is not applicable
        assert!(report.all_applicable_pass());
        // mean enstrophy margin equals the steady term for the zero run
        let me = report.records.iter().find(|r| r.name == "mean-enstrophy").unwrap();
        let steady = 8.0 * p.a * p.ra * p.ra / (p.d * LAMBDA_1);
        assert!((me.worst_margin - steady).abs() < 1e-12);
        // theta bound margin is the full bound, and positive
        let tb = report.records.iter().find(|r| r.name == "theta-l2-bound").unwrap();
        assert!(tb.worst_margin >= 2.0 * p.a.sqrt());
        // implied c4 of the zero trajectory is zero
        assert_eq!(report.implied_c4, 0.0);
    }

    #[test]
    fn energy_bound_branch_selection() {
        // D eps = 1 exactly: Pr = D = 2.
        let p = DimensionlessParams::new(1.0, 2.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(p.d * p.eps, 1.0);
        let rows: Vec<StepDiagnostics> = (0..10).map(|i| row(i as f64 * 0.01)).collect();
        let rec = energy_bound_audit(&rows, &p, &AuditConfig::default());
        assert!(rec.detail.contains("D*eps = 1"));
        let p2 = DimensionlessParams::new(1.0, 10.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0).unwrap();
        let rec2 = energy_bound_audit(&rows, &p2, &AuditConfig::default());
        assert!(rec2.detail.contains("!= 1"));
    }

    #[test]
    fn ball_audit_gates_on_condition_h() {
        // Huge Ra with small Pr violates (H): not-applicable, no pass/fail.
        let p = DimensionlessParams::new(1e6, 1.0, 0.0, 1.0, 1.0, 0.0, 2.0, 2.0).unwrap();
        let rows: Vec<StepDiagnostics> = (0..10).map(|i| row(i as f64 * 0.01)).collect();
        let (rec, tstar) = enstrophy_ball_audit(&rows, &p, &AuditConfig::default());
        assert_eq!(rec.status, AuditStatus::NotApplicable);
        assert!(tstar.is_none());
        // zero state with (H) satisfied stays in the ball forever
        let p2 = DimensionlessParams::new(1.0, 1000.0, 0.0, 1.0, 1.0, 0.0, 2.0, 2.0).unwrap();
        let (rec2, tstar2) = enstrophy_ball_audit(&rows, &p2, &AuditConfig::default());
        assert_eq!(rec2.status, AuditStatus::Pass);
        assert_eq!(tstar2, Some(0.0));
    }

    #[test]
    fn agmon_calibration_properties() {
        let set = BasisSet::build(&test_spec()).unwrap();
        // single ground-mode ratio from the stored profile is a lower bound
        let mut c = vec![0.0; set.stokes.len()];
        c[0] = 1.0;
        let f = Field::new(set.stokes.clone(), c).unwrap();
        let single = f.max_abs() / (f.h1semi().sqrt() * f.op_norm().sqrt());
        let est = calibrate_agmon_c1(&set.stokes, 40, 1);
        assert!(est >= single * 0.999, "estimate {est} below ground mode {single}");
        // prefix property: more samples never decrease the estimate
        let est10 = calibrate_agmon_c1(&set.stokes, 400, 1);
        assert!(est10 >= est * (1.0 - 1e-12));
        // two seeds agree within 15%
        let a = calibrate_agmon_c1(&set.stokes, 200, 1);
        let b = calibrate_agmon_c1(&set.stokes, 200, 2);
        assert!((a - b).abs() <= 0.15 * a.max(b), "{a} vs {b}");
    }
}
