//! Field representation in modal and physical form, differential operators,
//! Galerkin projections and the norm functionals used by the estimates.

pub mod transform;

use crate::basis::grid::Discretization;
use crate::basis::{EigenBasis, Mode, OperatorKind};
use crate::error::Error;
use crate::params::DimensionlessParams;
use crate::util::{pairwise_sum_by, pairwise_dot};
use crate::Result;
use ndarray::Array3;
use std::sync::{Arc, OnceLock};
use transform::{ddx, ddy, modal_tensors, synth, ProfileDeriv};

/// Scalar or three-component field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Scalar,
    Vector3,
}

/// Grid samples of a field, one array `[gx, gy, gz]` per component.
#[derive(Debug, Clone)]
pub struct GridData {
    pub comps: Vec<Array3<f64>>,
}

/// A field as a coefficient vector over one eigenbasis, with lazily
/// synthesized physical samples. Fields are immutable values; any change
/// of coefficients creates a new field, so the sample cache can never go
/// stale.
#[derive(Debug, Clone)]
pub struct Field {
    pub basis: Arc<EigenBasis>,
    pub coeffs: Vec<f64>,
    samples: OnceLock<Arc<GridData>>,
}

impl Field {
    pub fn new(basis: Arc<EigenBasis>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::BasisMismatch(format!(
                "coefficient length {} does not match basis truncation {}",
                coeffs.len(),
                basis.len()
            )));
        }
        Ok(Self { basis, coeffs, samples: OnceLock::new() })
    }

    pub fn zero(basis: Arc<EigenBasis>) -> Self {
        let n = basis.len();
        Self { basis, coeffs: vec![0.0; n], samples: OnceLock::new() }
    }

    pub fn kind(&self) -> FieldKind {
        match self.basis.operator {
            OperatorKind::ScalarLaplacian => FieldKind::Scalar,
            _ => FieldKind::Vector3,
        }
    }

    /// Physical samples on the quadrature grid (computed once per field).
    pub fn samples(&self) -> &Arc<GridData> {
        self.samples.get_or_init(|| {
            Arc::new(GridData { comps: transform::synthesize_values(&self.basis, &self.coeffs) })
        })
    }

    /// L2 norm by Parseval.
    pub fn l2(&self) -> f64 {
        pairwise_dot(&self.coeffs, &self.coeffs).sqrt()
    }

    /// H1 seminorm by eigenvalue-weighted Parseval.
    pub fn h1semi(&self) -> f64 {
        pairwise_sum_by(self.coeffs.len(), |i| {
            self.basis.modes[i].lambda * self.coeffs[i] * self.coeffs[i]
        })
        .sqrt()
    }

    /// `|A v|_2` with `A` the diagonal operator action (`-Delta` for the
    /// Laplacian bases, `-P Delta` for the Stokes basis).
    pub fn op_norm(&self) -> f64 {
        pairwise_sum_by(self.coeffs.len(), |i| {
            (self.basis.modes[i].lambda * self.coeffs[i]).powi(2)
        })
        .sqrt()
    }

    /// Diagonal Laplacian action: returns the field with coefficients
    /// `-lambda_i c_i` (for Stokes this is the projected Laplacian).
    pub fn laplacian(&self) -> Field {
        let coeffs =
            self.coeffs.iter().zip(&self.basis.modes).map(|(c, m)| -m.lambda * c).collect();
        Field { basis: self.basis.clone(), coeffs, samples: OnceLock::new() }
    }

    /// Pointwise maximum Euclidean magnitude over the grid.
    pub fn max_abs(&self) -> f64 {
        let g = self.samples();
        let d = &self.basis.disc;
        let mut worst: f64 = 0.0;
        for ix in 0..d.gx {
            for iy in 0..d.gy {
                for iz in 0..d.gz {
                    let mut s = 0.0;
                    for c in &g.comps {
                        let v = c[[ix, iy, iz]];
                        s += v * v;
                    }
                    worst = worst.max(s);
                }
            }
        }
        worst.sqrt()
    }

    fn same_basis(&self, other: &Field) -> bool {
        Arc::ptr_eq(&self.basis, &other.basis)
            || (self.basis.operator == other.basis.operator
                && self.basis.domain == other.basis.domain)
    }

    /// Coefficient-space linear combination `self + s * other`.
    pub fn add_scaled(&self, other: &Field, s: f64) -> Result<Field> {
        if !self.same_basis(other) {
            return Err(Error::BasisMismatch("add_scaled across different bases".into()));
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + s * b).collect();
        Ok(Field { basis: self.basis.clone(), coeffs, samples: OnceLock::new() })
    }
}

/// Synthesizes a field to grid samples.
pub fn synthesize(f: &Field) -> GridData {
    GridData { comps: transform::synthesize_values(&f.basis, &f.coeffs) }
}

/// L2-projects grid samples onto a basis span (exact on the span; the
/// orthogonal projection otherwise).
pub fn analyze(basis: &Arc<EigenBasis>, grid: &GridData) -> Result<Field> {
    if grid.comps.len() != basis.components() {
        return Err(Error::KindMismatch(format!(
            "{} components offered to a {}-component basis",
            grid.comps.len(),
            basis.components()
        )));
    }
    for c in &grid.comps {
        let (gx, gy, gz) = c.dim();
        if (gx, gy, gz) != (basis.disc.gx, basis.disc.gy, basis.disc.gz) {
            return Err(Error::BasisMismatch("grid resolution mismatch in analyze".into()));
        }
    }
    let coeffs = transform::analyze_grid(basis, &grid.comps);
    Field::new(basis.clone(), coeffs)
}

/// Leray/Galerkin projection of vector grid samples onto the Stokes span.
pub fn galerkin_project(basis: &Arc<EigenBasis>, grid: &GridData) -> Result<Field> {
    if basis.operator != OperatorKind::Stokes {
        return Err(Error::KindMismatch("galerkin_project needs the Stokes basis".into()));
    }
    analyze(basis, grid)
}

/// Gradient of every component: `out[comp][dir]`.
pub fn gradient(f: &Field) -> Vec<[Array3<f64>; 3]> {
    let d = &f.basis.disc;
    let tv = modal_tensors(&f.basis, &f.coeffs, ProfileDeriv::Value);
    let tz = modal_tensors(&f.basis, &f.coeffs, ProfileDeriv::Dz);
    tv.comps
        .iter()
        .zip(&tz.comps)
        .map(|(t, tzc)| [synth(d, &ddx(d, t)), synth(d, &ddy(d, t)), synth(d, tzc)])
        .collect()
}

/// Divergence of a vector field on the grid.
pub fn divergence(f: &Field) -> Result<Array3<f64>> {
    if f.kind() != FieldKind::Vector3 {
        return Err(Error::KindMismatch("divergence needs a vector field".into()));
    }
    let d = &f.basis.disc;
    let tv = modal_tensors(&f.basis, &f.coeffs, ProfileDeriv::Value);
    let tz = modal_tensors(&f.basis, &f.coeffs, ProfileDeriv::Dz);
    let modal = ddx(d, &tv.comps[0]) + ddy(d, &tv.comps[1]) + &tz.comps[2];
    Ok(synth(d, &modal))
}

/// Curl of a vector field on the grid.
pub fn rot(f: &Field) -> Result<GridData> {
    if f.kind() != FieldKind::Vector3 {
        return Err(Error::KindMismatch("rot needs a vector field".into()));
    }
    let d = &f.basis.disc;
    let tv = modal_tensors(&f.basis, &f.coeffs, ProfileDeriv::Value);
    let tz = modal_tensors(&f.basis, &f.coeffs, ProfileDeriv::Dz);
    let c0 = ddy(d, &tv.comps[2]) - &tz.comps[1];
    let c1 = &tz.comps[0] - &ddx(d, &tv.comps[2]);
    let c2 = ddx(d, &tv.comps[1]) - &ddy(d, &tv.comps[0]);
    Ok(GridData { comps: vec![synth(d, &c0), synth(d, &c1), synth(d, &c2)] })
}

/// `grad(div f)` of a vector field on the grid.
pub fn grad_div(f: &Field) -> Result<GridData> {
    if f.kind() != FieldKind::Vector3 {
        return Err(Error::KindMismatch("grad_div needs a vector field".into()));
    }
    let d = &f.basis.disc;
    let tv = modal_tensors(&f.basis, &f.coeffs, ProfileDeriv::Value);
    let tz = modal_tensors(&f.basis, &f.coeffs, ProfileDeriv::Dz);
    let tzz = modal_tensors(&f.basis, &f.coeffs, ProfileDeriv::Dzz);
    let div = ddx(d, &tv.comps[0]) + ddy(d, &tv.comps[1]) + &tz.comps[2];
    let divz = ddx(d, &tz.comps[0]) + ddy(d, &tz.comps[1]) + &tzz.comps[2];
    Ok(GridData {
        comps: vec![synth(d, &ddx(d, &div)), synth(d, &ddy(d, &div)), synth(d, &divz)],
    })
}

/// Raw separable term used by the coefficient-space operator assembly.
#[derive(Debug, Clone)]
pub struct RawTerm {
    pub comp: u8,
    pub cx: usize,
    pub cy: usize,
    pub scale: f64,
    pub prof: Vec<f64>,
}

/// Expands `rot mode` into raw terms.
pub fn rot_terms(d: &Discretization, mode: &Mode) -> Vec<RawTerm> {
    let mut out = Vec::new();
    let mut push = |comp: u8, cx: usize, cy: usize, scale: f64, prof: &[f64]| {
        if scale != 0.0 {
            out.push(RawTerm { comp, cx, cy, scale, prof: prof.to_vec() });
        }
    };
    for t in &mode.terms {
        match t.comp {
            0 => {
                push(1, t.cx, t.cy, t.scale, &t.dprof);
                push(2, t.cx, d.dy_map[t.cy], -t.scale * d.dy_scale[t.cy], &t.prof);
            }
            1 => {
                push(0, t.cx, t.cy, -t.scale, &t.dprof);
                push(2, d.dx_map[t.cx], t.cy, t.scale * d.dx_scale[t.cx], &t.prof);
            }
            2 => {
                push(0, t.cx, d.dy_map[t.cy], t.scale * d.dy_scale[t.cy], &t.prof);
                push(1, d.dx_map[t.cx], t.cy, -t.scale * d.dx_scale[t.cx], &t.prof);
            }
            _ => unreachable!(),
        }
    }
    out
}

/// Expands `div mode` into scalar raw terms (component 0).
pub fn div_terms(d: &Discretization, mode: &Mode) -> Vec<RawTerm> {
    let mut out = Vec::new();
    for t in &mode.terms {
        match t.comp {
            0 => {
                let s = t.scale * d.dx_scale[t.cx];
                if s != 0.0 {
                    out.push(RawTerm { comp: 0, cx: d.dx_map[t.cx], cy: t.cy, scale: s, prof: t.prof.clone() });
                }
            }
            1 => {
                let s = t.scale * d.dy_scale[t.cy];
                if s != 0.0 {
                    out.push(RawTerm { comp: 0, cx: t.cx, cy: d.dy_map[t.cy], scale: s, prof: t.prof.clone() });
                }
            }
            2 => out.push(RawTerm { comp: 0, cx: t.cx, cy: t.cy, scale: t.scale, prof: t.dprof.clone() }),
            _ => unreachable!(),
        }
    }
    out
}

/// L2 inner product of two raw-term lists under the discrete quadrature.
pub fn raw_inner(d: &Discretization, a: &[RawTerm], b: &[RawTerm]) -> f64 {
    let wz = &d.wz;
    let mut s = 0.0;
    for ta in a {
        for tb in b {
            if ta.comp == tb.comp && ta.cx == tb.cx && ta.cy == tb.cy {
                s += ta.scale
                    * tb.scale
                    * pairwise_sum_by(wz.len(), |q| wz[q] * ta.prof[q] * tb.prof[q]);
            }
        }
    }
    s
}

/// Raw terms of a basis mode itself.
pub fn mode_terms(mode: &Mode) -> Vec<RawTerm> {
    mode.terms
        .iter()
        .map(|t| RawTerm { comp: t.comp, cx: t.cx, cy: t.cy, scale: t.scale, prof: t.prof.clone() })
        .collect()
}

/// Solver state: modal coefficients of `(u, gamma, theta)` at one instant.
#[derive(Debug, Clone)]
pub struct State {
    pub t: f64,
    pub u: Field,
    pub gamma: Field,
    pub theta: Field,
}

impl State {
    pub fn new(t: f64, u: Field, gamma: Field, theta: Field) -> Result<Self> {
        if u.basis.operator != OperatorKind::Stokes
            || gamma.basis.operator != OperatorKind::VectorLaplacian
            || theta.basis.operator != OperatorKind::ScalarLaplacian
        {
            return Err(Error::BasisMismatch(
                "state fields must live in (stokes, vector, scalar) bases".into(),
            ));
        }
        if !u.basis.domain.geometry_eq(&gamma.basis.domain)
            || !u.basis.domain.geometry_eq(&theta.basis.domain)
        {
            return Err(Error::BasisMismatch("state fields on different domains".into()));
        }
        Ok(Self { t, u, gamma, theta })
    }

    pub fn zero(bases: &crate::basis::BasisSet) -> Self {
        Self {
            t: 0.0,
            u: Field::zero(bases.stokes.clone()),
            gamma: Field::zero(bases.vector.clone()),
            theta: Field::zero(bases.scalar.clone()),
        }
    }

    /// Total modal dimension.
    pub fn dim(&self) -> usize {
        self.u.coeffs.len() + self.gamma.coeffs.len() + self.theta.coeffs.len()
    }
}

/// The norms recorded along trajectories.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NormSet {
    pub l2_u: f64,
    pub l2_gamma: f64,
    pub l2_theta: f64,
    pub h1semi_u: f64,
    pub h1semi_gamma: f64,
    pub h1semi_theta: f64,
    /// Enstrophy functional `|grad u|^2 + M |grad gamma|^2`.
    pub enstrophy: f64,
    /// `|(T-1)^+|_2` with `T = theta + 1 - x3`.
    pub pos_part: f64,
    /// `|T^-|_2`.
    pub neg_part: f64,
}

/// `(|(T-1)^+|, |T^-|)` from theta grid samples.
pub fn temperature_excess_norms(theta: &Field) -> (f64, f64) {
    let d = &theta.basis.disc;
    let g = &theta.samples().comps[0];
    let mut pos = 0.0;
    let mut neg = 0.0;
    for iz in 0..d.gz {
        let z = d.zs[iz];
        let w = d.wz[iz] * d.wx * d.wy;
        let mut ppos = 0.0;
        let mut pneg = 0.0;
        for ix in 0..d.gx {
            for iy in 0..d.gy {
                // T - 1 = theta - x3 ; T = theta + 1 - x3
                let th = g[[ix, iy, iz]];
                let over = th - z;
                if over > 0.0 {
                    ppos += over * over;
                }
                let t = th + 1.0 - z;
                if t < 0.0 {
                    pneg += t * t;
                }
            }
        }
        pos += w * ppos;
        neg += w * pneg;
    }
    (pos.sqrt(), neg.sqrt())
}

/// Computes the full norm set of a state.
pub fn norms(s: &State, dp: &DimensionlessParams) -> NormSet {
    let h1_u = s.u.h1semi();
    let h1_g = s.gamma.h1semi();
    let (pos, neg) = temperature_excess_norms(&s.theta);
    NormSet {
        l2_u: s.u.l2(),
        l2_gamma: s.gamma.l2(),
        l2_theta: s.theta.l2(),
        h1semi_u: h1_u,
        h1semi_gamma: h1_g,
        h1semi_theta: s.theta.h1semi(),
        enstrophy: h1_u * h1_u + dp.m * h1_g * h1_g,
        pos_part: pos,
        neg_part: neg,
    }
}

/// Maximum of `|div u|` over the grid.
pub fn max_abs_div(f: &Field) -> Result<f64> {
    let div = divergence(f)?;
    Ok(div.iter().fold(0.0f64, |acc, &v| acc.max(v.abs())))
}
