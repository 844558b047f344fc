//! Stack electrostatics: the ferroelectric capacitor in series with the
//! semiconducting WOx channel.
//!
//! The gate stack is treated as two capacitors in series (HZO film and WOx
//! depletion layer) over a uniformly doped channel. A gate-referenced bias
//! `v_gs` opens a depletion region of width
//!
//! `x_d = (ε₀ε/C) · (√(1 + 2C²·v_gs / (q·N_D·ε₀ε)) − 1)`
//!
//! which thins the conducting channel from its metallurgical thickness
//! `d_wox` to `t_eff = d_wox − x_d` and raises the source–drain resistance
//! `R = ρ·L / (W·t_eff)`, capped at the instrument compliance `r_max`. The
//! ferroelectric couples in by converting remanent polarization to an
//! equivalent gate potential via the stack capacitance.
//!
//! Lab units throughout the public surface: nm, µm, µm², µC/cm², µF/cm²,
//! Ω·cm, cm⁻³; conversions to SI happen internally.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units;
pub use crate::units::PhysConstants;

/// Geometry and material parameters of one transistor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceStack {
    /// WOx channel thickness (nm), within [1, 100].
    pub d_wox: f64,
    /// WOx relative permittivity.
    pub eps_wox: f64,
    /// HZO capacitance per area (µF/cm²).
    pub c_hzo_area: f64,
    /// Channel donor density (cm⁻³).
    pub n_d: f64,
    /// Channel resistivity (Ω·cm).
    pub rho: f64,
    /// Electron mobility (cm²/V·s); informational, consistent with `rho` and `n_d`.
    pub mu: f64,
    /// Channel width (µm).
    pub width: f64,
    /// Channel length (µm).
    pub length: f64,
    /// Ferroelectric capacitor area (µm²).
    pub area_cap: f64,
    /// Measurement compliance ceiling for the channel resistance (Ω).
    pub r_max: f64,
}

impl Default for DeviceStack {
    fn default() -> Self {
        Self {
            d_wox: 8.0,
            eps_wox: 189.0,
            c_hzo_area: 2.7,
            n_d: 1.01e20,
            rho: 0.327,
            mu: 0.19,
            width: 20.0,
            length: 5.0,
            area_cap: 3600.0,
            r_max: 1.0e8,
        }
    }
}

impl DeviceStack {
    pub fn validate(&self) -> Result<()> {
        let positive: [(&str, f64); 9] = [
            ("eps_wox", self.eps_wox),
            ("c_hzo_area", self.c_hzo_area),
            ("n_d", self.n_d),
            ("rho", self.rho),
            ("width", self.width),
            ("length", self.length),
            ("area_cap", self.area_cap),
            ("r_max", self.r_max),
            ("d_wox", self.d_wox),
        ];
        for (name, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidStack(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if !self.mu.is_finite() || self.mu < 0.0 {
            return Err(Error::InvalidStack(format!(
                "mu must be finite and >= 0, got {}",
                self.mu
            )));
        }
        if !(1.0..=100.0).contains(&self.d_wox) {
            return Err(Error::InvalidStack(format!(
                "d_wox must lie in [1, 100] nm, got {} nm",
                self.d_wox
            )));
        }
        let r_on = self.r_on();
        if self.r_max <= r_on {
            return Err(Error::InvalidStack(format!(
                "r_max ({:.4e} ohm) must exceed the undepleted channel resistance ({:.4e} ohm)",
                self.r_max, r_on
            )));
        }
        Ok(())
    }

    /// Undepleted channel resistance ρL/(W·d_wox), in Ω.
    pub fn r_on(&self) -> f64 {
        units::ohm_cm_to_ohm_m(self.rho) * units::um_to_m(self.length)
            / (units::um_to_m(self.width) * units::nm_to_m(self.d_wox))
    }

    /// Absolute HZO capacitance over `area_cap`, in F.
    pub fn c_hzo(&self) -> f64 {
        units::uf_cm2_to_f_m2(self.c_hzo_area) * units::um2_to_m2(self.area_cap)
    }
}

/// Total capacitance of the HZO film in series with a dielectric layer of
/// thickness `d_wox` (nm) and relative permittivity `eps_wox` over
/// `area` (µm²). `c_hzo` is the absolute film capacitance in F.
pub fn series_capacitance(c_hzo: f64, d_wox: f64, eps_wox: f64, area: f64) -> Result<f64> {
    for (name, v) in [("c_hzo", c_hzo), ("d_wox", d_wox), ("eps_wox", eps_wox), ("area", area)] {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::InvalidStack(format!("{name} must be finite and > 0, got {v}")));
        }
    }
    let c_layer = units::EPS0_F_PER_M * eps_wox * units::um2_to_m2(area) / units::nm_to_m(d_wox);
    Ok(1.0 / (1.0 / c_hzo + 1.0 / c_layer))
}

/// Inverts [`series_capacitance`] for the layer permittivity: given the
/// measured total and the film capacitance, recovers `eps_wox` exactly, so
/// `extract_permittivity(series_capacitance(..)) ` round-trips to numerical
/// precision. Requires `0 < c_total < c_hzo`.
pub fn extract_permittivity(c_hzo: f64, c_total: f64, d_wox: f64, area: f64) -> Result<f64> {
    for (name, v) in [("c_hzo", c_hzo), ("c_total", c_total), ("d_wox", d_wox), ("area", area)] {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::InvalidStack(format!("{name} must be finite and > 0, got {v}")));
        }
    }
    if c_total >= c_hzo {
        return Err(Error::SeriesCapacitanceBound { total: c_total, c_hzo });
    }
    let inv_layer = 1.0 / c_total - 1.0 / c_hzo;
    Ok(units::nm_to_m(d_wox) / (units::EPS0_F_PER_M * units::um2_to_m2(area) * inv_layer))
}

/// Depletion width (nm) opened in the channel by a non-negative gate bias.
///
/// Negative bias means accumulation, outside this model's validity; it is
/// rejected rather than extrapolated.
pub fn depletion_width(stack: &DeviceStack, v_gs: f64) -> Result<f64> {
    if !v_gs.is_finite() || v_gs < 0.0 {
        return Err(Error::NegativeGateBias(v_gs));
    }
    let c = units::uf_cm2_to_f_m2(stack.c_hzo_area);
    let eps = units::EPS0_F_PER_M * stack.eps_wox;
    let n_d = units::per_cm3_to_per_m3(stack.n_d);
    let ratio = 2.0 * c * c * v_gs / (units::Q_C * n_d * eps);
    Ok(units::m_to_nm(eps / c * ((1.0 + ratio).sqrt() - 1.0)))
}

/// Gate potential (V) equivalent to a remanent polarization charge
/// `p` (µC/cm²) across the stack capacitance `c_hzo_area` (µF/cm²), with a
/// dimensionless coupling efficiency `scale` in (0, 1].
pub fn gate_potential_from_polarization(p: f64, c_hzo_area: f64, scale: f64) -> Result<f64> {
    if !p.is_finite() {
        return Err(Error::InvalidStack(format!("polarization must be finite, got {p}")));
    }
    if !c_hzo_area.is_finite() || c_hzo_area <= 0.0 {
        return Err(Error::InvalidStack(format!(
            "c_hzo_area must be finite and > 0, got {c_hzo_area}"
        )));
    }
    if !scale.is_finite() || scale <= 0.0 || scale > 1.0 {
        return Err(Error::InvalidStack(format!("scale must lie in (0, 1], got {scale}")));
    }
    // µC/cm² over µF/cm² is volts directly; no SI conversion needed.
    Ok(scale * p.abs() / c_hzo_area)
}

/// Source–drain resistance (Ω) for a given depletion width `x_d` (nm):
/// ρL/(W·t_eff) with `t_eff = d_wox − x_d`, clamped at `r_max`. A fully
/// depleted channel (`t_eff <= 0`) reads as `r_max`.
pub fn channel_resistance(stack: &DeviceStack, x_d: f64) -> f64 {
    let t_eff = units::nm_to_m(stack.d_wox - x_d.max(0.0));
    if t_eff <= 0.0 {
        return stack.r_max;
    }
    let r = units::ohm_cm_to_ohm_m(stack.rho) * units::um_to_m(stack.length)
        / (units::um_to_m(stack.width) * t_eff);
    r.min(stack.r_max)
}

/// Resistance contrast `(R_off - R_on) / R_on` between the depleted state at
/// `v_gs` and the undepleted channel. Algebraically `x_d / (d_wox - x_d)`
/// until the compliance cap engages.
pub fn on_off_ratio(stack: &DeviceStack, v_gs: f64) -> Result<f64> {
    let x_d = depletion_width(stack, v_gs)?;
    let r_off = channel_resistance(stack, x_d);
    let r_on = stack.r_on();
    Ok((r_off - r_on) / r_on)
}

/// One row of a depletion-width sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XdPoint {
    /// Donor density (cm⁻³).
    pub n_d: f64,
    /// Gate bias (V).
    pub v_gs: f64,
    /// Depletion width (nm).
    pub x_d: f64,
}

/// Tabulates depletion width over a donor-density grid at each listed gate
/// bias. Rows are ordered by `n_d` first, then `v_gs`.
pub fn xd_vs_nd_curve(
    stack: &DeviceStack,
    n_d_grid: &[f64],
    v_gs_list: &[f64],
) -> Result<Vec<XdPoint>> {
    if n_d_grid.is_empty() || v_gs_list.is_empty() {
        return Err(Error::InvalidStack("n_d grid and v_gs list must be non-empty".into()));
    }
    let mut rows = Vec::with_capacity(n_d_grid.len() * v_gs_list.len());
    for &n_d in n_d_grid {
        if !n_d.is_finite() || n_d <= 0.0 {
            return Err(Error::InvalidStack(format!("n_d must be finite and > 0, got {n_d}")));
        }
        let s = DeviceStack { n_d, ..stack.clone() };
        for &v_gs in v_gs_list {
            rows.push(XdPoint { n_d, v_gs, x_d: depletion_width(&s, v_gs)? });
        }
    }
    Ok(rows)
}
