//! Physical-to-dimensionless parameter derivation, the largeness condition
//! (H) on the Prandtl number and micropolar damping, and the background
//! temperature change of variables `theta = T - (1 - x3)`.
//!
//! Units live in documentation only; every quantity is carried as `f64`.

use crate::error::Error;
use crate::Result;
use crate::LAMBDA_1;

/// Dimensional constants of the channel problem.
///
/// All fields are strictly positive except the microrotation viscosity
/// `nu_r >= 0` and the second micropolar viscosity coefficient `beta >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Kinematic viscosity.
    pub nu: f64,
    /// Microrotation viscosity (zero gives the Newtonian fluid).
    pub nu_r: f64,
    /// Reference density.
    pub rho0: f64,
    /// Thermal expansion coefficient.
    pub alpha_bar: f64,
    /// Gravitational acceleration.
    pub g: f64,
    /// Microinertia density.
    pub j: f64,
    /// Angular viscosity.
    pub alpha: f64,
    /// Second angular viscosity.
    pub beta: f64,
    /// Thermal diffusivity.
    pub chi: f64,
    /// Bottom-plate temperature.
    pub t_b: f64,
    /// Channel height.
    pub h: f64,
    /// Horizontal extents.
    pub lx1: f64,
    pub lx2: f64,
}

impl PhysicalParams {
    /// Validates the sign constraints.
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("nu", self.nu),
            ("rho0", self.rho0),
            ("alpha_bar", self.alpha_bar),
            ("g", self.g),
            ("j", self.j),
            ("alpha", self.alpha),
            ("chi", self.chi),
            ("t_b", self.t_b),
            ("h", self.h),
            ("lx1", self.lx1),
            ("lx2", self.lx2),
        ];
        for (name, v) in pos {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::ParamDomain(format!("{name} must be > 0, got {v}")));
            }
        }
        for (name, v) in [("nu_r", self.nu_r), ("beta", self.beta)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::ParamDomain(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Scaled model constants of the dimensionless system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionlessParams {
    /// Rayleigh number `alpha_bar g T_B h^3 / (nu chi)`.
    pub ra: f64,
    /// Prandtl number `nu / chi`.
    pub pr: f64,
    /// Grashof number `Ra / Pr`.
    pub gr: f64,
    /// Microrotation coupling `nu_r / nu`.
    pub k: f64,
    /// Micropolar damping `alpha / (h^2 nu)`.
    pub l: f64,
    /// Micropolar inertia `j / h^2`.
    pub m: f64,
    /// Second micropolar viscosity `beta / (h^2 nu)`.
    pub g: f64,
    /// Inverse Prandtl number.
    pub eps: f64,
    /// Scaled horizontal periods.
    pub ax: f64,
    pub ay: f64,
    /// Scaled horizontal area `ax * ay`.
    pub a: f64,
    /// Inertia-to-damping constant `max(2, M/L)`, stored once.
    pub d: f64,
}

impl DimensionlessParams {
    /// Builds the scaled constants from the raw dimensionless inputs.
    ///
    /// `L = 0` together with `M > 0` is rejected: the ratio `M/L` entering
    /// `D = max(2, M/L)` would be undefined.
    #[allow(clippy::too_many_arguments)]
    pub fn new(ra: f64, pr: f64, k: f64, l: f64, m: f64, g: f64, ax: f64, ay: f64) -> Result<Self> {
        for (name, v) in [("ra", ra), ("k", k), ("l", l), ("m", m), ("g", g)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::ParamDomain(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(pr > 0.0) || !pr.is_finite() {
            return Err(Error::ParamDomain(format!("pr must be > 0, got {pr}")));
        }
        for (name, v) in [("ax", ax), ("ay", ay)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::ParamDomain(format!("{name} must be > 0, got {v}")));
            }
        }
        if l == 0.0 && m > 0.0 {
            return Err(Error::ParamDomain(
                "L = 0 with M > 0 leaves D = max(2, M/L) undefined".into(),
            ));
        }
        let d = if m == 0.0 { 2.0 } else { (m / l).max(2.0) };
        Ok(Self {
            ra,
            pr,
            gr: ra / pr,
            k,
            l,
            m,
            g,
            eps: 1.0 / pr,
            ax,
            ay,
            a: ax * ay,
            d,
        })
    }
}

/// Derives the dimensionless constants from physical ones.
pub fn derive_dimensionless(p: &PhysicalParams) -> Result<DimensionlessParams> {
    p.validate()?;
    let ra = p.alpha_bar * p.g * p.t_b * p.h.powi(3) / (p.nu * p.chi);
    let pr = p.nu / p.chi;
    let k = p.nu_r / p.nu;
    let l = p.alpha / (p.h * p.h * p.nu);
    let m = p.j / (p.h * p.h);
    let g = p.beta / (p.h * p.h * p.nu);
    DimensionlessParams::new(ra, pr, k, l, m, g, p.lx1 / p.h, p.lx2 / p.h)
}

/// Outcome of the largeness condition (H).
///
/// (H) requires `L >= 16 K / (3 pi^2)` and `Pr >= 2 c1 Ra D^{3/2} sqrt(A)`,
/// where `c1` is the constant of the Agmon inequality on the channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HReport {
    /// Both margins nonnegative.
    pub satisfied: bool,
    /// `L - 16 K / (3 pi^2)`.
    pub margin_l: f64,
    /// `Pr - 2 c1 Ra D^{3/2} sqrt(A)`.
    pub margin_pr: f64,
    /// The Agmon constant estimate that was used.
    pub c1_used: f64,
}

/// Evaluates condition (H) for the given Agmon constant estimate.
pub fn check_condition_h(dp: &DimensionlessParams, c1: f64) -> HReport {
    assert!(c1 > 0.0, "Agmon constant estimate must be positive");
    let margin_l = dp.l - 16.0 / (3.0 * LAMBDA_1) * dp.k;
    let margin_pr = dp.pr - 2.0 * c1 * dp.ra * dp.d.powf(1.5) * dp.a.sqrt();
    HReport {
        satisfied: margin_l >= 0.0 && margin_pr >= 0.0,
        margin_l,
        margin_pr,
        c1_used: c1,
    }
}

/// Largest admissible coupling `K_max = 3 pi^2 L / 16` for which the first
/// inequality of (H) still holds.
pub fn k_max(l: f64) -> f64 {
    3.0 * LAMBDA_1 * l / 16.0
}

/// Conduction profile `tau(x3) = 1 - x3`.
pub fn conduction_profile(x3: f64) -> f64 {
    1.0 - x3
}

/// Replaces temperature samples `T` by `theta = T - (1 - x3)` in place.
///
/// `z_of_sample` gives the vertical coordinate of each sample; the two
/// slices must have equal length.
pub fn background_shift(t_samples: &mut [f64], z_of_sample: &[f64]) {
    assert_eq!(t_samples.len(), z_of_sample.len(), "sample/coordinate mismatch");
    for (t, &z) in t_samples.iter_mut().zip(z_of_sample) {
        *t -= conduction_profile(z);
    }
}

/// Inverse of [`background_shift`]: `T = theta + (1 - x3)`.
pub fn background_unshift(theta_samples: &mut [f64], z_of_sample: &[f64]) {
    assert_eq!(theta_samples.len(), z_of_sample.len(), "sample/coordinate mismatch");
    for (th, &z) in theta_samples.iter_mut().zip(z_of_sample) {
        *th += conduction_profile(z);
    }
}
