//! Ordered eigenbases of the scalar Laplacian, the componentwise vector
//! Laplacian and the Stokes operator on the horizontally periodic channel
//! with homogeneous Dirichlet conditions at the walls `x3 in {0, 1}`.
//!
//! Every basis function is a finite sum of separable terms
//! `scale * X(x) * Y(y) * prof(z)` where `X, Y` are normalized trigonometric
//! factors and `prof` is either a sine or a clamped polynomial profile from
//! the vertical Stokes eigenproblem. Terms carry sampled profiles on the
//! quadrature grid together with their first two z-derivatives, so all
//! differential operators act exactly on the span.

pub mod cache;
pub mod grid;
pub mod legendre;
pub mod vertical;

use crate::error::Error;
use crate::util::pairwise_sum_by;
use crate::Result;
use crate::LAMBDA_1;
use grid::{column_of, Discretization};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

/// Discretization request: domain geometry, resolutions and per-operator
/// truncation counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSpec {
    /// Scaled horizontal periods.
    pub ax: f64,
    pub ay: f64,
    /// Vertical resolution of the Stokes eigensolve.
    pub mv: usize,
    /// Horizontal mode cutoff per direction.
    pub nh: usize,
    /// Basis truncation counts per operator.
    pub n_scalar: usize,
    pub n_vector: usize,
    pub n_stokes: usize,
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.ax > 0.0 && self.ay > 0.0) {
            return Err(Error::Config("horizontal periods must be positive".into()));
        }
        if self.mv < 8 {
            return Err(Error::Config(format!("Mv must be >= 8, got {}", self.mv)));
        }
        if self.nh < 1 {
            return Err(Error::Config("Nh must be >= 1".into()));
        }
        if self.n_scalar < 1 || self.n_vector < 1 || self.n_stokes < 1 {
            return Err(Error::Config("Nmodes must be >= 1".into()));
        }
        Ok(())
    }

    /// Horizontal area `A = ax * ay`.
    pub fn area(&self) -> f64 {
        self.ax * self.ay
    }

    /// Largest vertical sine index carried by the discretization.
    pub fn jmax(&self) -> usize {
        self.mv / 2
    }

    /// Retained vertical Stokes modes per wavenumber.
    pub fn stokes_vertical_keep(&self) -> usize {
        (self.mv - 4) / 2
    }

    /// True when two specs describe the same geometry and resolutions
    /// (truncation counts may differ).
    pub fn geometry_eq(&self, other: &DomainSpec) -> bool {
        self.ax == other.ax && self.ay == other.ay && self.mv == other.mv && self.nh == other.nh
    }

    pub fn discretization(&self) -> Arc<Discretization> {
        Arc::new(Discretization::new(self.ax, self.ay, self.nh, self.mv))
    }

    /// Available mode counts `(scalar, vector, stokes)` before truncation.
    pub fn available_modes(&self) -> (usize, usize, usize) {
        let p = 2 * self.nh + 1;
        let hmodes = p * p;
        let scalar = hmodes * self.jmax();
        let vector = 3 * scalar;
        let stokes =
            2 * self.jmax() + (hmodes - 1) * (self.jmax() + self.stokes_vertical_keep());
        (scalar, vector, stokes)
    }
}

/// Operator whose eigenfunctions a basis holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    ScalarLaplacian,
    VectorLaplacian,
    Stokes,
}

impl OperatorKind {
    pub fn tag(&self) -> &'static str {
        match self {
            OperatorKind::ScalarLaplacian => "scalar-laplacian",
            OperatorKind::VectorLaplacian => "vector-laplacian",
            OperatorKind::Stokes => "stokes",
        }
    }
}

/// Identity of one eigenfunction; the tie-breaking sort key after the
/// eigenvalue is `(family, vertical index, m, n, component)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeId {
    Scalar { m: i32, n: i32, j: u32 },
    Vector { m: i32, n: i32, j: u32, comp: u8 },
    /// `k = (0,0)` horizontal-velocity polarization family.
    StokesPol { j: u32, pol: u8 },
    /// Zero wall-normal velocity family with sine profiles.
    StokesVort { m: i32, n: i32, j: u32 },
    /// Wall-normal family from the clamped vertical eigenproblem.
    StokesW { m: i32, n: i32, l: u32 },
}

impl ModeId {
    fn sort_key(&self) -> (u8, u32, i32, i32, u8) {
        match *self {
            ModeId::Scalar { m, n, j } => (0, j, m, n, 0),
            ModeId::Vector { m, n, j, comp } => (0, j, m, n, comp),
            ModeId::StokesPol { j, pol } => (0, j, 0, 0, pol),
            ModeId::StokesVort { m, n, j } => (1, j, m, n, 0),
            ModeId::StokesW { m, n, l } => (2, l, m, n, 0),
        }
    }
}

/// One separable term `scale * X_cx(x) * Y_cy(y) * prof(z)` of a basis
/// function, placed in component `comp`.
#[derive(Debug, Clone)]
pub struct ModeTerm {
    pub comp: u8,
    pub cx: usize,
    pub cy: usize,
    pub scale: f64,
    /// Profile and its first two z-derivatives on the vertical grid.
    pub prof: Vec<f64>,
    pub dprof: Vec<f64>,
    pub d2prof: Vec<f64>,
    /// Profile value and z-derivative at the walls `z = 0, 1`.
    pub wall: [f64; 2],
    pub dwall: [f64; 2],
}

/// One eigenfunction with its eigenvalue.
#[derive(Debug, Clone)]
pub struct Mode {
    pub lambda: f64,
    pub id: ModeId,
    pub terms: Vec<ModeTerm>,
}

/// Ordered eigenbasis of one operator.
#[derive(Debug)]
pub struct EigenBasis {
    pub operator: OperatorKind,
    pub domain: DomainSpec,
    pub disc: Arc<Discretization>,
    /// Modes in ascending eigenvalue order with deterministic tie-breaking.
    pub modes: Vec<Mode>,
}

impl EigenBasis {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn lambda_min(&self) -> f64 {
        self.modes.first().map(|m| m.lambda).unwrap_or(f64::NAN)
    }

    pub fn lambda_max(&self) -> f64 {
        self.modes.last().map(|m| m.lambda).unwrap_or(f64::NAN)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.lambda).collect()
    }

    /// Number of field components carried by this basis.
    pub fn components(&self) -> usize {
        match self.operator {
            OperatorKind::ScalarLaplacian => 1,
            _ => 3,
        }
    }

    /// L2 inner product of two modes under the discrete quadrature.
    pub fn mode_inner(&self, a: usize, b: usize) -> f64 {
        let wz = &self.disc.wz;
        let ma = &self.modes[a];
        let mb = &self.modes[b];
        let mut s = 0.0;
        for ta in &ma.terms {
            for tb in &mb.terms {
                if ta.comp == tb.comp && ta.cx == tb.cx && ta.cy == tb.cy {
                    let v = pairwise_sum_by(wz.len(), |q| wz[q] * ta.prof[q] * tb.prof[q]);
                    s += ta.scale * tb.scale * v;
                }
            }
        }
        s
    }

    /// Largest absolute value of the mode on the two walls, sampled on the
    /// horizontal grid.
    pub fn mode_wall_max(&self, idx: usize) -> f64 {
        let d = &self.disc;
        let mode = &self.modes[idx];
        let mut worst: f64 = 0.0;
        for wall in 0..2 {
            for ix in 0..d.gx {
                for iy in 0..d.gy {
                    let mut v = [0.0f64; 3];
                    for t in &mode.terms {
                        v[t.comp as usize] +=
                            t.scale * d.synth_x[[ix, t.cx]] * d.synth_y[[iy, t.cy]] * t.wall[wall];
                    }
                    let mag = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                    worst = worst.max(mag);
                }
            }
        }
        worst
    }
}

fn sine_term(
    disc: &Discretization,
    comp: u8,
    cx: usize,
    cy: usize,
    scale: f64,
    j: usize,
) -> ModeTerm {
    let sq2 = std::f64::consts::SQRT_2;
    let jp = j as f64 * PI;
    let prof: Vec<f64> = disc.zs.iter().map(|&z| sq2 * (jp * z).sin()).collect();
    let dprof: Vec<f64> = disc.zs.iter().map(|&z| sq2 * jp * (jp * z).cos()).collect();
    let d2prof: Vec<f64> = prof.iter().map(|&v| -jp * jp * v).collect();
    // sine profiles vanish at the walls exactly in this representation
    let sgn = if j % 2 == 0 { 1.0 } else { -1.0 };
    let dwall = [sq2 * jp, sq2 * jp * sgn];
    ModeTerm { comp, cx, cy, scale, prof, dprof, d2prof, wall: [0.0, 0.0], dwall }
}

fn scalar_lambda(disc: &Discretization, m: i32, n: i32, j: usize) -> f64 {
    let kx = disc.kx(m);
    let ky = disc.ky(n);
    kx * kx + ky * ky + (j as f64 * PI).powi(2)
}

fn sort_and_truncate(mut modes: Vec<Mode>, n: usize, what: &str) -> Result<Vec<Mode>> {
    if n > modes.len() {
        return Err(Error::Config(format!(
            "requested {n} {what} modes but only {} are available at this resolution",
            modes.len()
        )));
    }
    modes.sort_by(|a, b| {
        a.lambda
            .partial_cmp(&b.lambda)
            .unwrap()
            .then_with(|| a.id.sort_key().cmp(&b.id.sort_key()))
    });
    modes.truncate(n);
    Ok(modes)
}

/// Builds the ordered eigenbasis of the scalar Laplacian.
pub fn build_scalar_basis(spec: &DomainSpec, disc: Arc<Discretization>) -> Result<EigenBasis> {
    spec.validate()?;
    let nh = spec.nh as i32;
    let mut modes = Vec::new();
    for j in 1..=spec.jmax() {
        for m in -nh..=nh {
            for n in -nh..=nh {
                let lambda = scalar_lambda(&disc, m, n, j);
                modes.push(Mode {
                    lambda,
                    id: ModeId::Scalar { m, n, j: j as u32 },
                    terms: vec![sine_term(&disc, 0, column_of(m), column_of(n), 1.0, j)],
                });
            }
        }
    }
    let modes = sort_and_truncate(modes, spec.n_scalar, "scalar")?;
    Ok(EigenBasis { operator: OperatorKind::ScalarLaplacian, domain: *spec, disc, modes })
}

/// Builds the componentwise vector Laplacian eigenbasis.
pub fn build_vector_basis(spec: &DomainSpec, disc: Arc<Discretization>) -> Result<EigenBasis> {
    spec.validate()?;
    let nh = spec.nh as i32;
    let mut modes = Vec::new();
    for j in 1..=spec.jmax() {
        for m in -nh..=nh {
            for n in -nh..=nh {
                let lambda = scalar_lambda(&disc, m, n, j);
                for comp in 0..3u8 {
                    modes.push(Mode {
                        lambda,
                        id: ModeId::Vector { m, n, j: j as u32, comp },
                        terms: vec![sine_term(&disc, comp, column_of(m), column_of(n), 1.0, j)],
                    });
                }
            }
        }
    }
    let modes = sort_and_truncate(modes, spec.n_vector, "vector")?;
    Ok(EigenBasis { operator: OperatorKind::VectorLaplacian, domain: *spec, disc, modes })
}

/// Builds the Stokes eigenbasis: the `k = 0` polarization family, the
/// zero-wall-normal family and the wall-normal family obtained from the
/// per-wavenumber clamped vertical eigenproblem.
pub fn build_stokes_basis(spec: &DomainSpec, disc: Arc<Discretization>) -> Result<EigenBasis> {
    spec.validate()?;
    let nh = spec.nh as i32;
    let mut modes = Vec::new();

    // k = (0,0): horizontal polarizations, wall-normal component zero.
    for j in 1..=spec.jmax() {
        let lambda = (j as f64 * PI).powi(2);
        for pol in 0..2u8 {
            modes.push(Mode {
                lambda,
                id: ModeId::StokesPol { j: j as u32, pol },
                terms: vec![sine_term(&disc, pol, 0, 0, 1.0, j)],
            });
        }
    }

    // Distinct wavenumber magnitudes for the vertical eigenproblem.
    let mut mags: Vec<(i32, i32)> = Vec::new();
    for ma in 0..=nh {
        for mb in 0..=nh {
            if ma != 0 || mb != 0 {
                mags.push((ma, mb));
            }
        }
    }
    let solved: BTreeMap<(i32, i32), vertical::VerticalModes> = mags
        .par_iter()
        .map(|&(ma, mb)| {
            let kx = disc.kx(ma);
            let ky = disc.ky(mb);
            let k = (kx * kx + ky * ky).sqrt();
            vertical::solve_vertical(k, spec.mv)
                .map(|vm| ((ma, mb), vm))
                .map_err(|e| match e {
                    Error::BasisConstruction(_, _, msg) => Error::BasisConstruction(ma, mb, msg),
                    other => other,
                })
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .collect();

    for m in -nh..=nh {
        for n in -nh..=nh {
            if m == 0 && n == 0 {
                continue;
            }
            let kx = disc.kx(m);
            let ky = disc.ky(n);
            let k2 = kx * kx + ky * ky;
            let kmag = k2.sqrt();
            let cm = column_of(m);
            let cn = column_of(n);

            // zero wall-normal family: V_j(z) * rot_h of the horizontal factor
            for j in 1..=spec.jmax() {
                let lambda = k2 + (j as f64 * PI).powi(2);
                let mut terms = Vec::new();
                let sy = disc.dy_scale[cn];
                if sy != 0.0 {
                    terms.push(sine_term(&disc, 0, cm, disc.dy_map[cn], sy / kmag, j));
                }
                let sx = disc.dx_scale[cm];
                if sx != 0.0 {
                    terms.push(sine_term(&disc, 1, disc.dx_map[cm], cn, -sx / kmag, j));
                }
                modes.push(Mode { lambda, id: ModeId::StokesVort { m, n, j: j as u32 }, terms });
            }

            // wall-normal family
            let vm = &solved[&(m.abs(), n.abs())];
            for (l, (&lambda, coeffs)) in vm.lambdas.iter().zip(&vm.coeffs).enumerate() {
                let vals = legendre::eval_clamped_combination(coeffs, &disc.zs);
                let wallv = legendre::eval_clamped_combination(coeffs, &[0.0, 1.0]);
                let [w, dw, d2w, d3w] = vals;
                let mut terms = Vec::new();
                let sx = disc.dx_scale[cm];
                if sx != 0.0 {
                    terms.push(ModeTerm {
                        comp: 0,
                        cx: disc.dx_map[cm],
                        cy: cn,
                        scale: sx / k2,
                        prof: dw.clone(),
                        dprof: d2w.clone(),
                        d2prof: d3w.clone(),
                        wall: [wallv[1][0], wallv[1][1]],
                        dwall: [wallv[2][0], wallv[2][1]],
                    });
                }
                let sy = disc.dy_scale[cn];
                if sy != 0.0 {
                    terms.push(ModeTerm {
                        comp: 1,
                        cx: cm,
                        cy: disc.dy_map[cn],
                        scale: sy / k2,
                        prof: dw.clone(),
                        dprof: d2w.clone(),
                        d2prof: d3w.clone(),
                        wall: [wallv[1][0], wallv[1][1]],
                        dwall: [wallv[2][0], wallv[2][1]],
                    });
                }
                terms.push(ModeTerm {
                    comp: 2,
                    cx: cm,
                    cy: cn,
                    scale: 1.0,
                    prof: w,
                    dprof: dw,
                    d2prof: d2w,
                    wall: [wallv[0][0], wallv[0][1]],
                    dwall: [wallv[1][0], wallv[1][1]],
                });
                modes.push(Mode {
                    lambda,
                    id: ModeId::StokesW { m, n, l: (l + 1) as u32 },
                    terms,
                });
            }
        }
    }

    let modes = sort_and_truncate(modes, spec.n_stokes, "stokes")?;
    Ok(EigenBasis { operator: OperatorKind::Stokes, domain: *spec, disc, modes })
}

/// The three bases of one domain sharing a single discretization.
#[derive(Debug, Clone)]
pub struct BasisSet {
    pub stokes: Arc<EigenBasis>,
    pub vector: Arc<EigenBasis>,
    pub scalar: Arc<EigenBasis>,
}

impl BasisSet {
    pub fn build(spec: &DomainSpec) -> Result<Self> {
        spec.validate()?;
        let disc = spec.discretization();
        Ok(Self {
            stokes: Arc::new(build_stokes_basis(spec, disc.clone())?),
            vector: Arc::new(build_vector_basis(spec, disc.clone())?),
            scalar: Arc::new(build_scalar_basis(spec, disc)?),
        })
    }

    pub fn disc(&self) -> &Arc<Discretization> {
        &self.scalar.disc
    }
}

/// Smallest eigenvalue, its deviation from `pi^2`, and worst Poincare
/// residuals over random fields in the basis span.
#[derive(Debug, Clone, Copy)]
pub struct PoincareReport {
    pub operator: OperatorKind,
    pub lambda_min: f64,
    pub deviation_from_pi2: f64,
    /// Worst (most negative) residual `|grad v|^2 - pi^2 |v|^2`.
    pub min_residual_h1: f64,
    /// Worst residual `|Av|^2 - pi^2 |grad v|^2` of the second-order
    /// inequality, with `A` the diagonal operator action.
    pub min_residual_h2: f64,
    pub samples: usize,
}

/// Verifies the Poincare inequalities on random unit fields in the span.
pub fn poincare_audit(basis: &EigenBasis, samples: usize, seed: u64) -> PoincareReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = basis.len();
    let mut min1 = f64::INFINITY;
    let mut min2 = f64::INFINITY;
    for _ in 0..samples {
        let mut c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let nrm = pairwise_sum_by(n, |i| c[i] * c[i]).sqrt();
        for v in &mut c {
            *v /= nrm;
        }
        let l2 = pairwise_sum_by(n, |i| c[i] * c[i]);
        let h1 = pairwise_sum_by(n, |i| basis.modes[i].lambda * c[i] * c[i]);
        let h2 = pairwise_sum_by(n, |i| basis.modes[i].lambda.powi(2) * c[i] * c[i]);
        min1 = min1.min(h1 - LAMBDA_1 * l2);
        min2 = min2.min(h2 - LAMBDA_1 * h1);
    }
    PoincareReport {
        operator: basis.operator,
        lambda_min: basis.lambda_min(),
        deviation_from_pi2: (basis.lambda_min() - LAMBDA_1).abs(),
        min_residual_h1: min1,
        min_residual_h2: min2,
        samples,
    }
}

/// A small default spec for tests.
#[cfg(test)]
pub(crate) fn test_spec() -> DomainSpec {
    DomainSpec { ax: 2.0, ay: 2.0, mv: 16, nh: 2, n_scalar: 40, n_vector: 60, n_stokes: 60 }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_ground_state_is_pi2() {
        let spec = test_spec();
        let b = build_scalar_basis(&spec, spec.discretization()).unwrap();
        assert!((b.lambda_min() - LAMBDA_1).abs() < 1e-12);
        match b.modes[0].id {
            ModeId::Scalar { m: 0, n: 0, j: 1 } => {}
            other => panic!("unexpected ground mode {other:?}"),
        }
        // second vertical mode at 4 pi^2
        let found = b
            .modes
            .iter()
            .any(|m| matches!(m.id, ModeId::Scalar { m: 0, n: 0, j: 2 }) && (m.lambda - 4.0 * LAMBDA_1).abs() < 1e-12);
        assert!(found);
    }

    #[test]
    fn scalar_mixed_mode_eigenvalue() {
        // ax = ay = 2: mode (1, 0, 1) has eigenvalue pi^2 + pi^2.
        let spec = test_spec();
        let b = build_scalar_basis(&spec, spec.discretization()).unwrap();
        let m = b
            .modes
            .iter()
            .find(|m| matches!(m.id, ModeId::Scalar { m: 1, n: 0, j: 1 }))
            .unwrap();
        assert!((m.lambda - 19.739208802178717).abs() < 1e-12);
    }

    #[test]
    fn vector_ground_state_has_multiplicity_three() {
        let spec = test_spec();
        let b = build_vector_basis(&spec, spec.discretization()).unwrap();
        assert!((b.lambda_min() - LAMBDA_1).abs() < 1e-12);
        let count = b.modes.iter().filter(|m| (m.lambda - LAMBDA_1).abs() < 1e-12).count();
        assert_eq!(count, 3);
    }

    #[test]
    fn stokes_ground_state_and_k0_family() {
        let spec = test_spec();
        let b = build_stokes_basis(&spec, spec.discretization()).unwrap();
        assert!((b.lambda_min() - LAMBDA_1).abs() < 1e-12);
        for j in 1..=2u32 {
            for pol in 0..2u8 {
                let lam = (j as f64 * PI).powi(2);
                assert!(b
                    .modes
                    .iter()
                    .any(|m| m.id == ModeId::StokesPol { j, pol } && (m.lambda - lam).abs() < 1e-12));
            }
        }
    }

    #[test]
    fn gram_matrix_is_identity() {
        let spec = test_spec();
        let set = BasisSet::build(&spec).unwrap();
        for basis in [&set.scalar, &set.vector, &set.stokes] {
            let n = basis.len();
            let mut worst: f64 = 0.0;
            for i in 0..n {
                for j in i..n {
                    let g = basis.mode_inner(i, j);
                    let expect = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((g - expect).abs());
                }
            }
            assert!(worst < 1e-10, "{:?} gram deviation {worst}", basis.operator);
        }
    }

    #[test]
    fn stokes_walls_are_clean() {
        let spec = test_spec();
        let b = build_stokes_basis(&spec, spec.discretization()).unwrap();
        for i in 0..b.len() {
            let wall = b.mode_wall_max(i);
            let h1 = (1.0 + b.modes[i].lambda).sqrt();
            assert!(wall <= 1e-10 * h1, "mode {i} wall value {wall}");
        }
    }

    #[test]
    fn truncation_too_large_is_rejected() {
        let mut spec = test_spec();
        let (avail, _, _) = spec.available_modes();
        spec.n_scalar = avail + 1;
        assert!(build_scalar_basis(&spec, spec.discretization()).is_err());
    }

    #[test]
    fn ordering_is_reproducible() {
        let spec = test_spec();
        let a = build_stokes_basis(&spec, spec.discretization()).unwrap();
        let b = build_stokes_basis(&spec, spec.discretization()).unwrap();
        for (x, y) in a.modes.iter().zip(&b.modes) {
            assert_eq!(x.id, y.id);
            assert_eq!(x.lambda.to_bits(), y.lambda.to_bits());
        }
    }

    #[test]
    fn poincare_residuals_nonnegative() {
        let spec = test_spec();
        let set = BasisSet::build(&spec).unwrap();
        for basis in [&set.scalar, &set.vector, &set.stokes] {
            let rep = poincare_audit(basis, 200, 7);
            assert!(rep.min_residual_h1 >= -1e-10);
            assert!(rep.min_residual_h2 >= -1e-10);
            assert!(rep.deviation_from_pi2 < 1e-8);
        }
    }

    #[test]
    fn ground_mode_poincare_equality() {
        let spec = test_spec();
        let b = build_scalar_basis(&spec, spec.discretization()).unwrap();
        // residual of the first eigenfunction itself
        let lam = b.modes[0].lambda;
        assert!((lam - LAMBDA_1).abs() < 1e-10);
        let res = lam - LAMBDA_1;
        assert!(res.abs() < 1e-10);
    }
}
