//! Separable spectral transforms between modal coefficients and the
//! physical quadrature grid.
//!
//! A field is synthesized in two stages: modal accumulation collapses the
//! basis coefficients onto a horizontal-modal x vertical-grid tensor
//! `T[cx, cy, iz]` per component, and the dense horizontal tables then map
//! that tensor to the grid. Horizontal derivatives act on `T` as a column
//! permutation with wavenumber factors, vertical derivatives by
//! accumulating with the stored profile derivatives, so every operator is
//! exact on the span.

use crate::basis::grid::Discretization;
use crate::basis::EigenBasis;
use crate::util::pairwise_sum_by;
use ndarray::Array3;

/// Which stored profile enters the modal accumulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileDeriv {
    Value,
    Dz,
    Dzz,
}

/// Modal-horizontal x vertical-grid tensors, one per field component.
#[derive(Debug, Clone)]
pub struct ModalTensor {
    pub comps: Vec<Array3<f64>>,
}

/// Accumulates basis coefficients into modal tensors.
pub fn modal_tensors(basis: &EigenBasis, coeffs: &[f64], deriv: ProfileDeriv) -> ModalTensor {
    assert_eq!(coeffs.len(), basis.len(), "coefficient length mismatch");
    let d = &basis.disc;
    let p = d.columns();
    let ncomp = basis.components();
    let mut comps = vec![Array3::zeros((p, p, d.gz)); ncomp];
    for (mode, &c) in basis.modes.iter().zip(coeffs) {
        if c == 0.0 {
            continue;
        }
        for t in &mode.terms {
            let prof = match deriv {
                ProfileDeriv::Value => &t.prof,
                ProfileDeriv::Dz => &t.dprof,
                ProfileDeriv::Dzz => &t.d2prof,
            };
            let amp = c * t.scale;
            let tgt = &mut comps[t.comp as usize];
            for (iz, &v) in prof.iter().enumerate() {
                tgt[[t.cx, t.cy, iz]] += amp * v;
            }
        }
    }
    ModalTensor { comps }
}

/// Applies `d/dx` to one modal tensor.
pub fn ddx(d: &Discretization, t: &Array3<f64>) -> Array3<f64> {
    let (p, _, gz) = t.dim();
    let mut out = Array3::zeros((p, p, gz));
    for a in 0..p {
        let s = d.dx_scale[a];
        if s == 0.0 {
            continue;
        }
        let ta = d.dx_map[a];
        for b in 0..p {
            for iz in 0..gz {
                out[[ta, b, iz]] += s * t[[a, b, iz]];
            }
        }
    }
    out
}

/// Applies `d/dy` to one modal tensor.
pub fn ddy(d: &Discretization, t: &Array3<f64>) -> Array3<f64> {
    let (p, _, gz) = t.dim();
    let mut out = Array3::zeros((p, p, gz));
    for b in 0..p {
        let s = d.dy_scale[b];
        if s == 0.0 {
            continue;
        }
        let tb = d.dy_map[b];
        for a in 0..p {
            for iz in 0..gz {
                out[[a, tb, iz]] += s * t[[a, b, iz]];
            }
        }
    }
    out
}

/// Horizontal synthesis of one modal tensor to grid samples `[gx, gy, gz]`.
pub fn synth(d: &Discretization, t: &Array3<f64>) -> Array3<f64> {
    let (p, p2, gz) = t.dim();
    debug_assert_eq!(p, p2);
    // U[ix, b, iz] = sum_a Sx[ix, a] T[a, b, iz]
    let t2 = t
        .view()
        .into_shape((p, p2 * gz))
        .expect("modal tensor must be standard layout");
    let u2 = d.synth_x.dot(&t2); // (gx, p*gz)
    let u3 = u2.into_shape((d.gx, p, gz)).unwrap();
    // V[b, ix, iz]
    let v = u3.permuted_axes([1, 0, 2]).as_standard_layout().to_owned();
    let v2 = v.into_shape((p, d.gx * gz)).unwrap();
    let w2 = d.synth_y.dot(&v2); // (gy, gx*gz)
    let w3 = w2.into_shape((d.gy, d.gx, gz)).unwrap();
    w3.permuted_axes([1, 0, 2]).as_standard_layout().to_owned()
}

/// Horizontal analysis of grid samples back to a modal tensor.
pub fn anal(d: &Discretization, g: &Array3<f64>) -> Array3<f64> {
    let (gx, gy, gz) = g.dim();
    debug_assert_eq!((gx, gy, gz), (d.gx, d.gy, d.gz));
    let p = d.columns();
    let g2 = g.view().into_shape((gx, gy * gz)).expect("grid must be standard layout");
    let h2 = d.anal_x.dot(&g2); // (p, gy*gz)
    let h3 = h2.into_shape((p, gy, gz)).unwrap();
    let h = h3.permuted_axes([1, 0, 2]).as_standard_layout().to_owned();
    let h2b = h.into_shape((gy, p * gz)).unwrap();
    let t2 = d.anal_y.dot(&h2b); // (p, p*gz) indexed [b, a, iz]
    let t3 = t2.into_shape((p, p, gz)).unwrap();
    t3.permuted_axes([1, 0, 2]).as_standard_layout().to_owned()
}

/// Projects analyzed modal tensors onto the basis (vertical quadrature
/// against each mode's profiles). `tensors` must come from [`anal`].
pub fn project_tensors(basis: &EigenBasis, tensors: &[Array3<f64>]) -> Vec<f64> {
    let d = &basis.disc;
    let wz = &d.wz;
    basis
        .modes
        .iter()
        .map(|mode| {
            let mut c = 0.0;
            for t in &mode.terms {
                let tensor = &tensors[t.comp as usize];
                let v = pairwise_sum_by(wz.len(), |q| wz[q] * t.prof[q] * tensor[[t.cx, t.cy, q]]);
                c += t.scale * v;
            }
            c
        })
        .collect()
}

/// Full L2-projection of grid samples onto the basis span.
pub fn analyze_grid(basis: &EigenBasis, comps: &[Array3<f64>]) -> Vec<f64> {
    assert_eq!(comps.len(), basis.components(), "component count mismatch");
    let d = &basis.disc;
    let tensors: Vec<Array3<f64>> = comps.iter().map(|g| anal(d, g)).collect();
    project_tensors(basis, &tensors)
}

/// Convenience: dense synthesis of all components of a coefficient vector.
pub fn synthesize_values(basis: &EigenBasis, coeffs: &[f64]) -> Vec<Array3<f64>> {
    let t = modal_tensors(basis, coeffs, ProfileDeriv::Value);
    t.comps.iter().map(|c| synth(&basis.disc, c)).collect()
}

/// Synthesis matrices sanity check used by tests: quadrature inner product
/// of two grids.
pub fn grid_inner(d: &Discretization, a: &[Array3<f64>], b: &[Array3<f64>]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut total = 0.0;
    for (ga, gb) in a.iter().zip(b) {
        total += pairwise_sum_by(d.gx * d.gy * d.gz, |i| {
            let iz = i % d.gz;
            let rest = i / d.gz;
            let iy = rest % d.gy;
            let ix = rest / d.gy;
            d.weight(iz) * ga[[ix, iy, iz]] * gb[[ix, iy, iz]]
        });
    }
    total
}
