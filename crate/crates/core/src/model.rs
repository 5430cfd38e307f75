//! Physical parameters of the driven dimer and the derived scalars of the
//! effective (second order in g/Δ, rotating frame, mean-field photon) theory.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::SQRT_2;

use num_complex::Complex64;

use crate::{Error, Result};

/// Qubit, cavity and bath constants. Frequencies and rates in 2π×GHz.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DimerParams {
    pub omega_c: f64,
    pub omega_q: f64,
    /// Light-matter coupling.
    pub g: f64,
    /// Photon hopping between the cavities.
    pub j: f64,
    /// Photon leakage.
    pub kappa: f64,
    /// Qubit decay.
    pub gamma: f64,
    /// Pure dephasing.
    pub gamma_phi: f64,
}

impl DimerParams {
    /// The typical experimental energy scales used throughout.
    pub const TABLE_I: DimerParams = DimerParams {
        omega_c: 6.0,
        omega_q: 7.0,
        g: 0.1,
        j: 0.1,
        kappa: 1e-4,
        gamma: 1e-5,
        gamma_phi: 1e-6,
    };

    pub fn detuning(&self) -> f64 {
        self.omega_q - self.omega_c
    }

    /// Symmetric-mode frequency ω_c − J.
    pub fn omega_c_minus(&self) -> f64 {
        self.omega_c - self.j
    }

    /// Asymmetric-mode frequency ω_c + J.
    pub fn omega_c_plus(&self) -> f64 {
        self.omega_c + self.j
    }

    /// Multiplies every frequency and rate by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            omega_c: self.omega_c * s,
            omega_q: self.omega_q * s,
            g: self.g * s,
            j: self.j * s,
            kappa: self.kappa * s,
            gamma: self.gamma * s,
            gamma_phi: self.gamma_phi * s,
        }
    }

    fn named_fields(&self) -> [(&'static str, f64); 7] {
        [
            ("omega_c", self.omega_c),
            ("omega_q", self.omega_q),
            ("g", self.g),
            ("J", self.j),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("gamma_phi", self.gamma_phi),
        ]
    }
}

impl Default for DimerParams {
    fn default() -> Self {
        Self::TABLE_I
    }
}

/// Strength and frequency of the two identical coherent drives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveParams {
    pub epsilon_d: f64,
    pub omega_d: f64,
}

impl DriveParams {
    pub fn new(epsilon_d: f64, omega_d: f64) -> Result<Self> {
        let d = Self { epsilon_d, omega_d };
        d.check()?;
        Ok(d)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.epsilon_d >= 0.0) || !self.epsilon_d.is_finite() {
            return Err(Error::InvalidParameter {
                name: "epsilon_d",
                reason: format!("must be finite and >= 0, got {}", self.epsilon_d),
            });
        }
        if !(self.omega_d > 0.0) || !self.omega_d.is_finite() {
            return Err(Error::NonPositive {
                name: "omega_d",
                value: self.omega_d,
            });
        }
        Ok(())
    }
}

/// Scalars parametrizing the reduced qubit theory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveParams {
    /// Δ = ω_q − ω_c.
    pub delta: f64,
    pub omega_c_minus: f64,
    pub omega_c_plus: f64,
    /// Mean symmetric-mode amplitude Ā.
    pub a_bar: Complex64,
    /// N̄ = |Ā|².
    pub n_bar: f64,
    /// Ω_R = 2 (g/Δ) ε_d.
    pub omega_rabi: f64,
    /// Renormalized qubit detuning in the rotating frame.
    pub delta_q: f64,
    /// Fluctuation coupling λ = (g/Δ)² (ĀΔ + ε_d/√2).
    pub lambda: Complex64,
    /// Triplet mixing α = √2 (g/Δ)(ε_d/Δ_q).
    pub alpha: f64,
    /// XY exchange J (g/Δ)².
    pub j_eff: f64,
}

/// Floors below which `derived_params` refuses to divide.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HazardFloor {
    /// Relative to ω_q.
    pub relative: f64,
}

impl Default for HazardFloor {
    fn default() -> Self {
        Self { relative: 1e-6 }
    }
}

pub fn derived_params(p: &DimerParams, d: &DriveParams) -> Result<EffectiveParams> {
    derived_params_with_floor(p, d, HazardFloor::default())
}

pub fn derived_params_with_floor(
    p: &DimerParams,
    d: &DriveParams,
    floor: HazardFloor,
) -> Result<EffectiveParams> {
    d.check()?;
    let floor_abs = floor.relative * libm::fabs(p.omega_q);
    let delta = p.detuning();
    if !(libm::fabs(delta) >= floor_abs) {
        return Err(Error::DivisionHazard {
            quantity: "Delta",
            value: delta,
            floor: floor_abs,
        });
    }
    let eps = d.epsilon_d;
    let ratio = p.g / delta;
    let omega_c_minus = p.omega_c_minus();
    let omega_c_plus = p.omega_c_plus();

    let a_bar = Complex64::new(SQRT_2 * eps, 0.0)
        / Complex64::new(d.omega_d - omega_c_minus, p.kappa / 2.0);
    let n_bar = a_bar.norm_sqr();
    let omega_rabi = 2.0 * ratio * eps;
    let delta_q = p.omega_q - d.omega_d
        + ratio * ratio * ((n_bar + 1.0) * delta + SQRT_2 * eps * a_bar.re);
    if !(libm::fabs(delta_q) >= floor_abs) {
        return Err(Error::DivisionHazard {
            quantity: "Delta_q",
            value: delta_q,
            floor: floor_abs,
        });
    }
    let lambda = (a_bar * delta + eps / SQRT_2) * (ratio * ratio);
    let alpha = SQRT_2 * ratio * eps / delta_q;
    Ok(EffectiveParams {
        delta,
        omega_c_minus,
        omega_c_plus,
        a_bar,
        n_bar,
        omega_rabi,
        delta_q,
        lambda,
        alpha,
        j_eff: p.j * ratio * ratio,
    })
}

/// One violated `≫` inequality of the energy-scale hierarchy.
#[derive(Clone, Debug, PartialEq)]
pub struct HierarchyWarning {
    pub larger: &'static str,
    pub smaller: &'static str,
    pub ratio: f64,
}

impl core::fmt::Display for HierarchyWarning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{} ≫ {} violated, ratio {}", self.larger, self.smaller, self.ratio)
    }
}

impl HierarchyWarning {
    pub fn message(&self) -> String {
        format!("{self}")
    }
}

/// Default threshold for a `≫` to count as satisfied.
pub const DEFAULT_HIERARCHY_RATIO: f64 = 5.0;

pub fn validate_params(p: &DimerParams) -> Result<Vec<HierarchyWarning>> {
    validate_params_with_ratio(p, DEFAULT_HIERARCHY_RATIO)
}

/// Checks Δ > 0 and Δ ≫ {g, J} ≫ {κ, γ} ≫ γ_φ.
pub fn validate_params_with_ratio(p: &DimerParams, threshold: f64) -> Result<Vec<HierarchyWarning>> {
    for (name, value) in p.named_fields() {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::NonPositive { name, value });
        }
    }
    let delta = p.detuning();
    let mut warnings = Vec::new();
    if !(delta > 0.0) {
        // ratio carries Δ itself here
        warnings.push(HierarchyWarning {
            larger: "Δ",
            smaller: "0",
            ratio: delta,
        });
    }
    let pairs: [(&'static str, f64, &'static str, f64); 8] = [
        ("Δ", delta, "g", p.g),
        ("Δ", delta, "J", p.j),
        ("g", p.g, "κ", p.kappa),
        ("g", p.g, "γ", p.gamma),
        ("J", p.j, "κ", p.kappa),
        ("J", p.j, "γ", p.gamma),
        ("κ", p.kappa, "γ_φ", p.gamma_phi),
        ("γ", p.gamma, "γ_φ", p.gamma_phi),
    ];
    for (larger, big, smaller, small) in pairs {
        let ratio = big / small;
        if !(ratio >= threshold) {
            warnings.push(HierarchyWarning {
                larger,
                smaller,
                ratio,
            });
        }
    }
    Ok(warnings)
}
