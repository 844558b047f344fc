//! Preisach-style domain ensemble for the ferroelectric layer.
//!
//! The HZO film is modeled as a weighted collection of bistable "hysterons",
//! each a rectangular elementary loop with an upward switching threshold
//! `v_up` and a downward threshold `v_down` (`v_up > v_down`). Switching is
//! quasi-static and rate-independent: applying a voltage flips every hysteron
//! whose threshold the voltage crosses, and nothing else. This reproduces the
//! classical Preisach phenomenology — wiping-out of inner reversals by larger
//! excursions, return-point memory, and minor loops nested inside the major
//! loop — without integrating any dynamics.
//!
//! Thresholds are drawn from two Gaussians (means `mean_v_up`, `mean_v_down`,
//! common spread `sigma_c`), re-drawn per hysteron until `v_up > v_down`.
//! Wake-up cycling is modeled as a global `active_fraction` multiplier on the
//! polarization, saturating exponentially in the cycle count.
//!
//! ```
//! use ferrosim_core::domains::{DomainEnsemble, EnsembleConfig};
//!
//! let mut ens = DomainEnsemble::build(&EnsembleConfig::default()).unwrap();
//! ens.set_wakeup(100_000, 1.0e4, 0.5).unwrap();
//! ens.apply_voltage(4.0);
//! ens.apply_voltage(0.0);
//! let p_up = ens.polarization().unwrap();
//! assert!(p_up > 10.0); // remanent, µC/cm²
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::{Trace, TraceKind, Waveform};

/// One bistable domain: a rectangular elementary hysteresis loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hysteron {
    /// Upward switching threshold (V).
    pub v_up: f64,
    /// Downward switching threshold (V); always below `v_up`.
    pub v_down: f64,
    /// Contribution weight; ensemble weights sum to 1.
    pub weight: f64,
    /// Current state, +1 (up) or -1 (down).
    pub state: i8,
    /// Whether the domain responds to fields and counts toward polarization.
    pub active: bool,
}

/// Recipe for building a [`DomainEnsemble`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    /// Number of hysterons.
    pub n_hysterons: usize,
    /// Mean upward threshold (V).
    pub mean_v_up: f64,
    /// Mean downward threshold (V).
    pub mean_v_down: f64,
    /// Gaussian spread of both thresholds (V).
    pub sigma_c: f64,
    /// Saturation polarization of the film (µC/cm²).
    pub p_sat: f64,
    /// RNG seed for threshold sampling.
    pub seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_hysterons: 2000,
            mean_v_up: 0.91,
            mean_v_down: -1.27,
            sigma_c: 0.475,
            p_sat: 12.5,
            seed: 42,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_hysterons == 0 {
            return Err(Error::InvalidEnsemble("n_hysterons must be >= 1".into()));
        }
        if !self.sigma_c.is_finite() || self.sigma_c < 0.0 {
            return Err(Error::InvalidEnsemble(format!(
                "sigma_c must be finite and >= 0, got {}",
                self.sigma_c
            )));
        }
        if !(self.mean_v_up.is_finite() && self.mean_v_down.is_finite()) {
            return Err(Error::InvalidEnsemble("threshold means must be finite".into()));
        }
        if self.mean_v_up <= self.mean_v_down {
            return Err(Error::InvalidEnsemble(format!(
                "mean_v_up ({}) must exceed mean_v_down ({})",
                self.mean_v_up, self.mean_v_down
            )));
        }
        if !self.p_sat.is_finite() || self.p_sat < 0.0 {
            return Err(Error::InvalidEnsemble(format!(
                "p_sat must be finite and >= 0, got {}",
                self.p_sat
            )));
        }
        Ok(())
    }
}

/// The ferroelectric layer: a seeded, weighted hysteron population plus the
/// wake-up state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainEnsemble {
    hysterons: Vec<Hysteron>,
    p_sat: f64,
    active_fraction: f64,
    rng_seed: u64,
}

impl DomainEnsemble {
    /// Builds an ensemble from `config`. Deterministic in `config.seed`.
    ///
    /// Thresholds are sampled pairwise and rejected until `v_up > v_down`.
    /// Initial states alternate up/down, so a fresh ensemble sits near zero
    /// net polarization. `active_fraction` starts at 1; use
    /// [`set_wakeup`](Self::set_wakeup) to model a pristine or cycled film.
    pub fn build(config: &EnsembleConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let up = Normal::new(config.mean_v_up, config.sigma_c)
            .map_err(|e| Error::InvalidEnsemble(format!("threshold distribution: {e}")))?;
        let down = Normal::new(config.mean_v_down, config.sigma_c)
            .map_err(|e| Error::InvalidEnsemble(format!("threshold distribution: {e}")))?;

        let n = config.n_hysterons;
        let weight = 1.0 / n as f64;
        let mut hysterons = Vec::with_capacity(n);
        for i in 0..n {
            let (v_up, v_down) = loop {
                let vu = up.sample(&mut rng);
                let vd = down.sample(&mut rng);
                if vu > vd {
                    break (vu, vd);
                }
            };
            hysterons.push(Hysteron {
                v_up,
                v_down,
                weight,
                state: if i % 2 == 0 { 1 } else { -1 },
                active: true,
            });
        }

        Ok(Self { hysterons, p_sat: config.p_sat, active_fraction: 1.0, rng_seed: config.seed })
    }

    /// Assembles an ensemble from explicit hysterons, for hand-built cases.
    pub fn from_parts(
        hysterons: Vec<Hysteron>,
        p_sat: f64,
        active_fraction: f64,
        rng_seed: u64,
    ) -> Result<Self> {
        if hysterons.is_empty() {
            return Err(Error::InvalidEnsemble(
                "ensemble must contain at least one hysteron".into(),
            ));
        }
        for (i, h) in hysterons.iter().enumerate() {
            if !(h.v_up.is_finite() && h.v_down.is_finite()) || h.v_up <= h.v_down {
                return Err(Error::InvalidEnsemble(format!(
                    "hysteron {i}: need finite v_up > v_down, got {} / {}",
                    h.v_up, h.v_down
                )));
            }
            if !h.weight.is_finite() || h.weight < 0.0 {
                return Err(Error::InvalidEnsemble(format!(
                    "hysteron {i}: weight must be finite and >= 0, got {}",
                    h.weight
                )));
            }
            if h.state != 1 && h.state != -1 {
                return Err(Error::InvalidEnsemble(format!(
                    "hysteron {i}: state must be +1 or -1, got {}",
                    h.state
                )));
            }
        }
        if !p_sat.is_finite() || p_sat < 0.0 {
            return Err(Error::InvalidEnsemble(format!(
                "p_sat must be finite and >= 0, got {p_sat}"
            )));
        }
        if !(0.0..=1.0).contains(&active_fraction) {
            return Err(Error::InvalidEnsemble(format!(
                "active_fraction must lie in [0, 1], got {active_fraction}"
            )));
        }
        Ok(Self { hysterons, p_sat, active_fraction, rng_seed })
    }

    /// Quasi-statically applies `v`: every active hysteron with `v >= v_up`
    /// switches up, every one with `v <= v_down` switches down, the rest keep
    /// their state. Voltages strictly inside (v_down, v_up) change nothing.
    pub fn apply_voltage(&mut self, v: f64) {
        for h in &mut self.hysterons {
            if !h.active {
                continue;
            }
            if v >= h.v_up {
                h.state = 1;
            } else if v <= h.v_down {
                h.state = -1;
            }
        }
    }

    /// Net polarization (µC/cm²): the weighted mean state of the active
    /// domains, scaled by `p_sat` and the wake-up `active_fraction`.
    pub fn polarization(&self) -> Result<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        for h in &self.hysterons {
            if h.active {
                num += h.weight * f64::from(h.state);
                den += h.weight;
            }
        }
        if den == 0.0 {
            return Err(Error::NoActiveDomains);
        }
        Ok(self.active_fraction * self.p_sat * num / den)
    }

    /// Steps through a waveform's samples, applying each voltage and
    /// recording the polarization, producing a P–V trace.
    pub fn run_waveform(&mut self, waveform: &Waveform) -> Result<Trace> {
        let mut trace = Trace::new(TraceKind::Polarization);
        for (t, v) in waveform.sample_points() {
            self.apply_voltage(v);
            trace.push(t, v, self.polarization()?);
        }
        Ok(trace)
    }

    /// Sets the wake-up state after `n_cycles` of field cycling:
    /// `active_fraction = a_min + (1 - a_min) * (1 - exp(-n_cycles / n_w))`.
    ///
    /// The count is absolute, not incremental; pass the cumulative number of
    /// cycles the film has seen. `n_cycles = 0` leaves a pristine film at
    /// `a_min`.
    pub fn set_wakeup(&mut self, n_cycles: i64, n_w: f64, a_min: f64) -> Result<()> {
        if n_cycles < 0 {
            return Err(Error::NegativeCycleCount(n_cycles));
        }
        if !n_w.is_finite() || n_w <= 0.0 {
            return Err(Error::InvalidEnsemble(format!("n_w must be finite and > 0, got {n_w}")));
        }
        if !(0.0..=1.0).contains(&a_min) {
            return Err(Error::InvalidEnsemble(format!("a_min must lie in [0, 1], got {a_min}")));
        }
        let n = n_cycles as f64;
        self.active_fraction = (a_min + (1.0 - a_min) * (1.0 - (-n / n_w).exp())).clamp(0.0, 1.0);
        Ok(())
    }

    /// Marks one hysteron (in)active. State values are untouched.
    pub fn set_hysteron_active(&mut self, index: usize, active: bool) -> Result<()> {
        let h = self.hysterons.get_mut(index).ok_or_else(|| {
            Error::InvalidEnsemble(format!("hysteron index {index} out of range"))
        })?;
        h.active = active;
        Ok(())
    }

    pub fn hysterons(&self) -> &[Hysteron] {
        &self.hysterons
    }

    pub fn p_sat(&self) -> f64 {
        self.p_sat
    }

    pub fn active_fraction(&self) -> f64 {
        self.active_fraction
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    /// Polarization reached when every domain points the same way:
    /// `active_fraction * p_sat`.
    pub fn saturation_polarization(&self) -> f64 {
        self.active_fraction * self.p_sat
    }

    /// Serializes the full ensemble state to JSON.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Restores an ensemble from [`to_json`](Self::to_json) output,
    /// re-validating the invariants.
    pub fn from_json(json: &str) -> Result<Self> {
        let ens: Self = serde_json::from_str(json)?;
        Self::from_parts(ens.hysterons, ens.p_sat, ens.active_fraction, ens.rng_seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_hysteron_pair() -> DomainEnsemble {
        // Deterministic pair at the default threshold means.
        let cfg = EnsembleConfig { n_hysterons: 2, sigma_c: 0.0, ..EnsembleConfig::default() };
        DomainEnsemble::build(&cfg).unwrap()
    }

    #[test]
    fn saturating_sweeps_reach_full_polarization() {
        let mut ens = two_hysteron_pair();
        ens.apply_voltage(2.0);
        assert_eq!(ens.polarization().unwrap(), 12.5);
        ens.apply_voltage(-2.0);
        assert_eq!(ens.polarization().unwrap(), -12.5);
    }

    #[test]
    fn voltages_inside_both_thresholds_change_nothing() {
        let mut ens = two_hysteron_pair();
        let before = ens.polarization().unwrap();
        ens.apply_voltage(0.5); // 0.5 < v_up = 0.91, 0.5 > v_down = -1.27
        assert_eq!(ens.polarization().unwrap(), before);
    }

    #[test]
    fn fresh_ensemble_sits_near_zero() {
        let ens = DomainEnsemble::build(&EnsembleConfig::default()).unwrap();
        let p = ens.polarization().unwrap();
        assert!(p.abs() <= ens.p_sat() / ens.hysterons().len() as f64 + 1e-12);
        let total: f64 = ens.hysterons().iter().map(|h| h.weight).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(ens.hysterons().iter().all(|h| h.v_up > h.v_down));
    }

    #[test]
    fn build_is_deterministic_in_seed() {
        let cfg = EnsembleConfig::default();
        let a = DomainEnsemble::build(&cfg).unwrap();
        let b = DomainEnsemble::build(&cfg).unwrap();
        assert_eq!(a, b);
        let c = DomainEnsemble::build(&EnsembleConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.hysterons()[0].v_up, c.hysterons()[0].v_up);
    }

    #[test]
    fn wakeup_follows_saturating_exponential() {
        let mut ens = two_hysteron_pair();
        ens.set_wakeup(0, 1.0e4, 0.5).unwrap();
        assert_eq!(ens.active_fraction(), 0.5);
        ens.set_wakeup(100_000, 1.0e4, 0.5).unwrap();
        assert!((ens.active_fraction() - 0.9999773).abs() < 1e-6);
        assert!(ens.set_wakeup(-1, 1.0e4, 0.5).is_err());
        assert!(ens.set_wakeup(10, 0.0, 0.5).is_err());
        assert!(ens.set_wakeup(10, 1.0e4, 1.5).is_err());
    }

    #[test]
    fn wakeup_scales_remanence() {
        let mut ens = two_hysteron_pair();
        ens.apply_voltage(2.0);
        ens.set_wakeup(0, 1.0e4, 0.5).unwrap();
        assert_eq!(ens.polarization().unwrap(), 6.25);
    }

    #[test]
    fn all_inactive_is_an_error() {
        let mut ens = two_hysteron_pair();
        ens.set_hysteron_active(0, false).unwrap();
        ens.set_hysteron_active(1, false).unwrap();
        assert!(matches!(ens.polarization(), Err(Error::NoActiveDomains)));
    }

    #[test]
    fn inactive_hysterons_do_not_switch() {
        let mut ens = two_hysteron_pair();
        ens.apply_voltage(-2.0);
        ens.set_hysteron_active(0, false).unwrap();
        ens.apply_voltage(2.0);
        assert_eq!(ens.hysterons()[0].state, -1);
        assert_eq!(ens.hysterons()[1].state, 1);
    }

    #[test]
    fn zero_sigma_collapses_thresholds() {
        let ens = two_hysteron_pair();
        for h in ens.hysterons() {
            assert_eq!(h.v_up, 0.91);
            assert_eq!(h.v_down, -1.27);
        }
    }

    #[test]
    fn config_validation_rejects_bad_fields() {
        let base = EnsembleConfig::default();
        assert!(EnsembleConfig { n_hysterons: 0, ..base.clone() }.validate().is_err());
        assert!(EnsembleConfig { sigma_c: -0.1, ..base.clone() }.validate().is_err());
        assert!(EnsembleConfig { mean_v_up: -2.0, ..base.clone() }.validate().is_err());
        assert!(EnsembleConfig { p_sat: f64::NAN, ..base }.validate().is_err());
    }

    #[test]
    fn snapshot_round_trips() {
        let mut ens = DomainEnsemble::build(&EnsembleConfig::default()).unwrap();
        ens.set_wakeup(12_345, 1.0e4, 0.5).unwrap();
        ens.apply_voltage(1.3);
        let json = ens.to_json().unwrap();
        let back = DomainEnsemble::from_json(&json).unwrap();
        assert_eq!(ens.p_sat(), back.p_sat());
        assert_eq!(ens.active_fraction(), back.active_fraction());
        assert_eq!(ens.rng_seed(), back.rng_seed());
        for (i, (a, b)) in ens.hysterons().iter().zip(back.hysterons()).enumerate() {
            assert_eq!(a, b, "hysteron {i}");
        }
    }

    #[test]
    fn snapshot_rejects_corrupted_state() {
        let ens = two_hysteron_pair();
        let json = ens.to_json().unwrap().replace("\"state\": 1", "\"state\": 3");
        assert!(DomainEnsemble::from_json(&json).is_err());
    }
}
