//! Circular membrane drum mode and magnetic-gradient spin-motion coupling.
//!
//! This is the only module that works in SI units. It produces angular
//! frequencies (rad/s); [`Device::dimensionless`] divides them by ω_m for
//! the rest of the crate.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constants::{BESSEL_J0_ZERO, G_E, HBAR, MU_B};
use crate::{Error, Result};

/// Calibrated so that R = 1.5 μm and a 2.7×10⁷ T/m peak gradient give
/// g₀/ω_m = 2 with the default areal density.
pub const DEFAULT_TENSION: f64 = 1.0261e-5;
/// Monolayer hBN, kg/m².
pub const DEFAULT_AREAL_DENSITY: f64 = 7.5e-7;
/// 270 G/nm expressed in T/m.
pub const DEFAULT_PEAK_GRADIENT: f64 = 2.7e7;

/// `μ_B g_e / ħ` in rad/(s·T).
pub fn gyromagnetic_ratio() -> f64 {
    MU_B * G_E / HBAR
}

/// Bessel function of the first kind, order 0 (power series; accurate for |x| ≲ 10).
pub fn bessel_j0(x: f64) -> f64 {
    bessel_series(x, 0)
}

/// Bessel function of the first kind, order 1.
pub fn bessel_j1(x: f64) -> f64 {
    bessel_series(x, 1)
}

fn bessel_series(x: f64, order: u32) -> f64 {
    let half = 0.5 * x;
    let mut term = half.powi(order as i32) / (1..=order).map(f64::from).product::<f64>();
    let mut sum = term;
    let q = -half * half;
    for k in 1..200u32 {
        term *= q / (f64::from(k) * f64::from(k + order));
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// Physical membrane parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembraneConfig {
    /// m
    pub radius: f64,
    /// kg/m²
    pub areal_density: f64,
    /// N/m
    pub tension: f64,
    pub quality_factor: f64,
    /// K
    pub temperature: f64,
}

impl MembraneConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("radius", self.radius),
            ("areal_density", self.areal_density),
            ("tension", self.tension),
            ("quality_factor", self.quality_factor),
            ("temperature", self.temperature),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("membrane {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

impl Default for MembraneConfig {
    fn default() -> Self {
        MembraneConfig {
            radius: 1.5e-6,
            areal_density: DEFAULT_AREAL_DENSITY,
            tension: DEFAULT_TENSION,
            quality_factor: 1e5,
            temperature: 14e-3,
        }
    }
}

/// Out-of-plane field and its z-gradient in the membrane plane.
pub trait FieldProfile: Send + Sync + std::fmt::Debug {
    /// B_⊥(r, θ, z = 0) in T.
    fn b_perp(&self, r: f64, theta: f64) -> f64;
    /// ∂_z B_⊥(r, θ, 0) in T/m.
    fn gradient(&self, r: f64, theta: f64) -> f64;
    /// Polar position of the gradient maximum.
    fn sweet_spot(&self) -> (f64, f64);
}

/// Magnetic-tip model: uniform bias plus a Gaussian bump in both field and
/// gradient centered on the sweet spot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TipField {
    /// Uniform bias field, T.
    pub bias: f64,
    /// Extra field at the sweet spot, T.
    pub tip_field: f64,
    /// Peak |∂_z B_⊥|, T/m.
    pub peak_gradient: f64,
    /// Gaussian width, m.
    pub width: f64,
    pub sweet_spot_r: f64,
    pub sweet_spot_theta: f64,
}

impl TipField {
    /// Bias field that produces the splitting `splitting_hz` (cycles/s).
    pub fn bias_for_splitting(splitting_hz: f64) -> f64 {
        2.0 * PI * splitting_hz / gyromagnetic_ratio()
    }

    fn bump(&self, r: f64, theta: f64) -> f64 {
        let (r0, t0) = (self.sweet_spot_r, self.sweet_spot_theta);
        let d2 = r * r + r0 * r0 - 2.0 * r * r0 * (theta - t0).cos();
        (-0.5 * d2.max(0.0) / (self.width * self.width)).exp()
    }
}

impl Default for TipField {
    fn default() -> Self {
        TipField {
            bias: Self::bias_for_splitting(2.0e9),
            tip_field: 0.05,
            peak_gradient: DEFAULT_PEAK_GRADIENT,
            width: 1.0e-6,
            sweet_spot_r: 0.0,
            sweet_spot_theta: 0.0,
        }
    }
}

impl FieldProfile for TipField {
    fn b_perp(&self, r: f64, theta: f64) -> f64 {
        self.bias + self.tip_field * self.bump(r, theta)
    }

    fn gradient(&self, r: f64, theta: f64) -> f64 {
        self.peak_gradient * self.bump(r, theta)
    }

    fn sweet_spot(&self) -> (f64, f64) {
        (self.sweet_spot_r, self.sweet_spot_theta)
    }
}

/// Fundamental drum mode of the clamped membrane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MechanicalMode {
    /// rad/s
    pub omega_m: f64,
    /// kg
    pub m_eff: f64,
    /// m, `√(ħ / 2 m_eff ω_m)`
    pub z_zp: f64,
    /// m
    pub radius: f64,
}

impl MechanicalMode {
    /// ψ(r) = J₀(α₀₁ r/R), normalized to 1 at the center and 0 at the edge.
    pub fn profile(&self, r: f64) -> f64 {
        if r >= self.radius {
            return 0.0;
        }
        bessel_j0(BESSEL_J0_ZERO * r / self.radius).max(0.0)
    }

    /// Local zero-point amplitude ψ(r)·z_zp.
    pub fn local_zpf(&self, r: f64) -> f64 {
        self.profile(r) * self.z_zp
    }
}

/// ∫ψ² dA / (πR²) by composite Simpson quadrature on the radial integral.
pub fn mode_mass_fraction() -> f64 {
    let n = 4000;
    let h = 1.0 / n as f64;
    let f = |x: f64| {
        let p = bessel_j0(BESSEL_J0_ZERO * x);
        2.0 * x * p * p
    };
    let mut s = f(0.0) + f(1.0);
    for k in 1..n {
        s += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Tensioned-drum fundamental mode.
pub fn fundamental_mode(cfg: &MembraneConfig) -> Result<MechanicalMode> {
    cfg.validate()?;
    let omega_m = BESSEL_J0_ZERO / cfg.radius * (cfg.tension / cfg.areal_density).sqrt();
    let m_eff = cfg.areal_density * PI * cfg.radius * cfg.radius * mode_mass_fraction();
    let z_zp = (HBAR / (2.0 * m_eff * omega_m)).sqrt();
    Ok(MechanicalMode { omega_m, m_eff, z_zp, radius: cfg.radius })
}

/// Which job a qubit does in the protocols.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SiteRole {
    Central,
    Cooling,
}

/// A defect qubit at a point of the membrane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitSite {
    pub r: f64,
    pub theta: f64,
    /// Δ, rad/s
    pub splitting: f64,
    /// g, rad/s
    pub coupling: f64,
    pub role: SiteRole,
}

/// Δ and g of a qubit at `(r, θ)`.
pub fn site_parameters(
    mode: &MechanicalMode,
    field: &dyn FieldProfile,
    r: f64,
    theta: f64,
    role: SiteRole,
) -> Result<QubitSite> {
    if !(r >= 0.0) || r > mode.radius * (1.0 + 1e-12) {
        return Err(Error::OutsideDisc { r, radius: mode.radius });
    }
    let gamma_e = gyromagnetic_ratio();
    Ok(QubitSite {
        r,
        theta,
        splitting: gamma_e * field.b_perp(r, theta),
        coupling: gamma_e * field.gradient(r, theta) * mode.local_zpf(r),
        role,
    })
}

/// Cooling-qubit placement and its figure of merit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoolingSite {
    pub site: QubitSite,
    /// g_c² / (Γ γ_m N̄)
    pub margin: f64,
}

/// Places the cooling qubit on the sweet-spot ray where g_c = Γ/2.
///
/// Feasibility requires g_c < Γ (true by construction) and
/// g_c² ≥ `min_margin`·Γγ_mN̄.
pub fn choose_cooling_site(
    mode: &MechanicalMode,
    field: &dyn FieldProfile,
    relaxation: f64,
    gamma_m: f64,
    nbar: f64,
    min_margin: f64,
) -> Result<CoolingSite> {
    if !(relaxation > 0.0) {
        return Err(Error::InfeasibleCoolingSite(format!(
            "g_c < Γ cannot hold for Γ = {relaxation:e}"
        )));
    }
    let target = 0.5 * relaxation;
    let noise = relaxation * gamma_m * nbar;
    let margin = target * target / noise;
    if !(margin >= min_margin) {
        return Err(Error::InfeasibleCoolingSite(format!(
            "g_c² ≫ Γγ_mN̄ violated: g_c²/(Γγ_mN̄) = {margin:.3e} < {min_margin}"
        )));
    }
    let (r0, theta0) = field.sweet_spot();
    let g_at = |r: f64| gyromagnetic_ratio() * field.gradient(r, theta0).abs() * mode.local_zpf(r);
    let g0 = g_at(r0);
    if g0 < target {
        return Err(Error::InfeasibleCoolingSite(format!(
            "peak coupling {g0:.4e} rad/s is below Γ/2 = {target:.4e} rad/s"
        )));
    }
    let (mut lo, mut hi) = (r0, mode.radius);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g_at(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * mode.radius {
            break;
        }
    }
    let site = site_parameters(mode, field, 0.5 * (lo + hi), theta0, SiteRole::Cooling)?;
    let g = site.coupling.abs();
    Ok(CoolingSite { margin: g * g / noise, site })
}

/// A membrane, its field profile and derived mode.
#[derive(Clone, Debug)]
pub struct Device {
    pub membrane: MembraneConfig,
    pub field: Arc<dyn FieldProfile>,
    pub mode: MechanicalMode,
}

impl Device {
    pub fn new(membrane: MembraneConfig, field: Arc<dyn FieldProfile>) -> Result<Self> {
        let mode = fundamental_mode(&membrane)?;
        Ok(Device { membrane, field, mode })
    }

    pub fn gamma_m(&self) -> f64 {
        self.mode.omega_m / self.membrane.quality_factor
    }

    /// N̄ at the mechanical frequency.
    pub fn mechanical_occupation(&self) -> f64 {
        crate::model::thermal_occupation_si(self.mode.omega_m, self.membrane.temperature)
    }

    pub fn site_at(&self, r: f64, theta: f64, role: SiteRole) -> Result<QubitSite> {
        site_parameters(&self.mode, self.field.as_ref(), r, theta, role)
    }

    pub fn sweet_spot_site(&self) -> Result<QubitSite> {
        let (r0, t0) = self.field.sweet_spot();
        self.site_at(r0, t0, SiteRole::Central)
    }

    /// g₀/ω_m at the sweet spot.
    pub fn xi(&self) -> Result<f64> {
        Ok(self.sweet_spot_site()?.coupling / self.mode.omega_m)
    }

    /// Cooling site for a relaxation rate given in units of ω_m.
    pub fn cooling_site(&self, relaxation_over_omega: f64, min_margin: f64) -> Result<CoolingSite> {
        choose_cooling_site(
            &self.mode,
            self.field.as_ref(),
            relaxation_over_omega * self.mode.omega_m,
            self.gamma_m(),
            self.mechanical_occupation(),
            min_margin,
        )
    }

    /// Converts an SI angular frequency to units of ω_m.
    pub fn dimensionless(&self, omega: f64) -> f64 {
        omega / self.mode.omega_m
    }
}
