//! Physical constants and unit conversions.
//!
//! Public APIs speak the units the lab speaks (nm, µm, µC/cm², µF/cm²,
//! Ω·cm, cm⁻³); everything is converted to SI at the point of use. The
//! helpers here keep those conversions in one place.

use serde::{Deserialize, Serialize};

/// Vacuum permittivity (F/m), CODATA 2018.
pub const EPS0_F_PER_M: f64 = 8.854_187_812_8e-12;

/// Elementary charge (C), CODATA 2018 (exact).
pub const Q_C: f64 = 1.602_176_634e-19;

/// Bundle of the physical constants the electrostatics uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysConstants {
    /// Vacuum permittivity (F/m).
    pub eps0: f64,
    /// Elementary charge (C).
    pub q: f64,
}

impl Default for PhysConstants {
    fn default() -> Self {
        Self { eps0: EPS0_F_PER_M, q: Q_C }
    }
}

pub fn nm_to_m(x: f64) -> f64 {
    x * 1e-9
}

pub fn m_to_nm(x: f64) -> f64 {
    x * 1e9
}

pub fn um_to_m(x: f64) -> f64 {
    x * 1e-6
}

pub fn um2_to_m2(a: f64) -> f64 {
    a * 1e-12
}

/// µF/cm² → F/m².
pub fn uf_cm2_to_f_m2(c: f64) -> f64 {
    c * 1e-2
}

/// µC/cm² → C/m².
pub fn uc_cm2_to_c_m2(p: f64) -> f64 {
    p * 1e-2
}

/// cm⁻³ → m⁻³.
pub fn per_cm3_to_per_m3(n: f64) -> f64 {
    n * 1e6
}

/// Ω·cm → Ω·m.
pub fn ohm_cm_to_ohm_m(r: f64) -> f64 {
    r * 1e-2
}
