//! Measurement protocol engine: a virtual probe station around one device.
//!
//! [`FeFETDevice`] couples a ferroelectric [`DomainEnsemble`] to a
//! [`DeviceStack`] and exposes the standard characterization protocols:
//! pulsed R–V staircases, quasi-static P–V loops, C–V butterflies, PUND,
//! endurance and retention runs, and potentiation/depression pulse ladders.
//!
//! The coupling chain for a resistance read is: polarization → up-domain
//! charge share → equivalent gate potential → depletion width → channel
//! resistance. Reads apply multiplicative Gaussian noise from a dedicated
//! seeded stream and never disturb the ferroelectric state; write pulses
//! below the instrument's minimum width are delivered but switch nothing.
//!
//! Sign convention: write amplitudes are source/drain-referenced, so a
//! positive pulse polarizes the film toward the depleting direction and
//! raises the read-out resistance.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domains::DomainEnsemble;
use crate::electrostatics::{
    self, channel_resistance, depletion_width, gate_potential_from_polarization, DeviceStack,
};
use crate::error::{Error, Result};
use crate::units;
use crate::waveform::{Trace, TraceKind, Waveform};

/// Settle time budgeted per staircase step for the resistance read (s);
/// sets the time axis of staircase traces.
const READ_DWELL: f64 = 1e-3;

/// Instrument-side knobs, separate from the device physics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstrumentConfig {
    /// Polarization-to-gate-potential coupling efficiency, in (0, 1].
    pub scale: f64,
    /// Multiplicative read noise sigma (fraction of the true resistance).
    pub read_noise_sigma: f64,
    /// Shortest write pulse the pulse generator resolves (s); shorter pulses
    /// reach the device but cannot switch domains.
    pub min_pulse_width: f64,
    /// Seed of the read-noise stream.
    pub noise_seed: u64,
}

impl Default for InstrumentConfig {
    fn default() -> Self {
        Self { scale: 0.30, read_noise_sigma: 0.01, min_pulse_width: 10e-9, noise_seed: 42 }
    }
}

impl InstrumentConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.scale.is_finite() || self.scale <= 0.0 || self.scale > 1.0 {
            return Err(Error::InvalidProtocol(format!(
                "scale must lie in (0, 1], got {}",
                self.scale
            )));
        }
        if !self.read_noise_sigma.is_finite() || self.read_noise_sigma < 0.0 {
            return Err(Error::InvalidProtocol(format!(
                "read_noise_sigma must be finite and >= 0, got {}",
                self.read_noise_sigma
            )));
        }
        if !self.min_pulse_width.is_finite() || self.min_pulse_width < 0.0 {
            return Err(Error::InvalidProtocol(format!(
                "min_pulse_width must be finite and >= 0, got {}",
                self.min_pulse_width
            )));
        }
        Ok(())
    }
}

/// Which half of a pulse ladder a point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Potentiation,
    Depression,
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::Potentiation => "potentiation",
            Branch::Depression => "depression",
        }
    }
}

impl std::str::FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "potentiation" => Ok(Branch::Potentiation),
            "depression" => Ok(Branch::Depression),
            other => Err(Error::MalformedData(format!("unknown branch label {other:?}"))),
        }
    }
}

/// One pulse-and-read record from a potentiation/depression run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulsePoint {
    /// Cycle number, 1-based.
    pub cycle: u32,
    /// Position within the cycle, 1-based, contiguous across both branches.
    pub pulse_index: u32,
    pub branch: Branch,
    /// Write amplitude (V).
    pub v_write: f64,
    /// Write width (s).
    pub width: f64,
    /// Resistance read after the pulse (Ω).
    pub r_ds: f64,
}

/// An ordered collection of pulse ladder records.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PulseSeries {
    pub points: Vec<PulsePoint>,
}

impl PulseSeries {
    pub fn n_cycles(&self) -> u32 {
        self.points.iter().map(|p| p.cycle).max().unwrap_or(0)
    }

    pub fn branch_points(&self, branch: Branch) -> impl Iterator<Item = &PulsePoint> + '_ {
        self.points.iter().filter(move |p| p.branch == branch)
    }

    /// Checks that pulse indices restart at 1 and increase by one within each
    /// cycle, and that every cycle repeats the same (index, branch, v, width)
    /// layout, so per-position statistics across cycles are well defined.
    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::AnalysisInput("pulse series is empty".into()));
        }
        let mut layout: Vec<(u32, Branch, f64, f64)> = Vec::new();
        let mut cur_cycle = 0u32;
        let mut pos = 0usize;
        for p in &self.points {
            if p.cycle != cur_cycle {
                if p.cycle != cur_cycle + 1 || p.pulse_index != 1 {
                    return Err(Error::MalformedData(format!(
                        "cycle {} does not start at pulse_index 1 after cycle {}",
                        p.cycle, cur_cycle
                    )));
                }
                if cur_cycle > 0 && pos != layout.len() {
                    return Err(Error::MalformedData(format!(
                        "cycle {cur_cycle} is shorter than cycle 1"
                    )));
                }
                cur_cycle = p.cycle;
                pos = 0;
            }
            let key = (p.pulse_index, p.branch, p.v_write, p.width);
            if cur_cycle == 1 {
                if p.pulse_index as usize != layout.len() + 1 {
                    return Err(Error::MalformedData(format!(
                        "pulse_index {} out of order in cycle 1",
                        p.pulse_index
                    )));
                }
                layout.push(key);
            } else {
                if pos >= layout.len() || layout[pos] != key {
                    return Err(Error::MalformedData(format!(
                        "cycle {cur_cycle} pulse {} does not match cycle 1's layout",
                        p.pulse_index
                    )));
                }
            }
            pos += 1;
        }
        if cur_cycle > 1 && pos != layout.len() {
            return Err(Error::MalformedData(format!("cycle {cur_cycle} is shorter than cycle 1")));
        }
        Ok(())
    }
}

/// Pulse ladder recipes for [`FeFETDevice::potentiation_depression`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PulseScheme {
    /// Fixed width; amplitude climbs 0 → `v_pot_max` in `step_v` increments,
    /// then 0 → `v_dep_min` on the depression side.
    AmplitudeRamp { v_pot_max: f64, v_dep_min: f64, step_v: f64, width: f64 },
    /// Fixed amplitudes; width sweeps `width_start` → `width_end` over
    /// `n_steps` pulses on each branch.
    WidthRamp { v_pot: f64, v_dep: f64, width_start: f64, width_end: f64, n_steps: usize },
}

/// One branch of a write schedule: (amplitude, width) per pulse.
type BranchSchedule = Vec<(f64, f64)>;

impl PulseScheme {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PulseScheme::AmplitudeRamp { v_pot_max, v_dep_min, step_v, width } => {
                if !v_pot_max.is_finite() || v_pot_max < 0.0 {
                    return Err(Error::InvalidProtocol(format!(
                        "v_pot_max must be >= 0, got {v_pot_max}"
                    )));
                }
                if !v_dep_min.is_finite() || v_dep_min > 0.0 {
                    return Err(Error::InvalidProtocol(format!(
                        "v_dep_min must be <= 0, got {v_dep_min}"
                    )));
                }
                if !step_v.is_finite() || step_v < 0.0 {
                    return Err(Error::InvalidProtocol(format!(
                        "step_v must be >= 0, got {step_v}"
                    )));
                }
                if !width.is_finite() || width <= 0.0 {
                    return Err(Error::InvalidProtocol(format!("width must be > 0, got {width}")));
                }
            }
            PulseScheme::WidthRamp { v_pot, v_dep, width_start, width_end, n_steps } => {
                if !v_pot.is_finite() || v_pot < 0.0 {
                    return Err(Error::InvalidProtocol(format!("v_pot must be >= 0, got {v_pot}")));
                }
                if !v_dep.is_finite() || v_dep > 0.0 {
                    return Err(Error::InvalidProtocol(format!("v_dep must be <= 0, got {v_dep}")));
                }
                for (name, w) in [("width_start", width_start), ("width_end", width_end)] {
                    if !w.is_finite() || w <= 0.0 {
                        return Err(Error::InvalidProtocol(format!("{name} must be > 0, got {w}")));
                    }
                }
                if n_steps < 2 {
                    return Err(Error::InvalidProtocol(format!(
                        "n_steps must be >= 2, got {n_steps}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The per-cycle (amplitude, width) schedule, potentiation branch first.
    fn schedule(&self) -> (BranchSchedule, BranchSchedule) {
        match *self {
            PulseScheme::AmplitudeRamp { v_pot_max, v_dep_min, step_v, width } => {
                let ladder = |limit: f64, sign: f64| -> Vec<(f64, f64)> {
                    if step_v == 0.0 || limit == 0.0 {
                        return vec![(0.0, width)];
                    }
                    let n = (limit / step_v * (1.0 + 1e-12)).floor() as usize;
                    (0..=n).map(|k| (sign * k as f64 * step_v, width)).collect()
                };
                (ladder(v_pot_max, 1.0), ladder(-v_dep_min, -1.0))
            }
            PulseScheme::WidthRamp { v_pot, v_dep, width_start, width_end, n_steps } => {
                let widths: Vec<f64> = (0..n_steps)
                    .map(|i| {
                        width_start + (width_end - width_start) * i as f64 / (n_steps - 1) as f64
                    })
                    .collect();
                (
                    widths.iter().map(|&w| (v_pot, w)).collect(),
                    widths.iter().map(|&w| (v_dep, w)).collect(),
                )
            }
        }
    }

    /// Amplitude and width of the conditioning pulse that precedes cycle 1.
    fn conditioning_pulse(&self) -> (f64, f64) {
        match *self {
            PulseScheme::AmplitudeRamp { v_dep_min, width, .. } => (v_dep_min, width),
            PulseScheme::WidthRamp { v_dep, width_start, width_end, .. } => {
                (v_dep, width_start.max(width_end))
            }
        }
    }
}

/// Switched-charge breakdown of a PUND measurement (all µC/cm²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PundResult {
    /// Remanence change over the first positive (switching) pulse.
    pub p_switched: f64,
    /// Remanence change over the second positive (non-switching) pulse.
    pub u_switched: f64,
    /// Remanence change magnitude over the first negative pulse.
    pub n_switched: f64,
    /// Remanence change magnitude over the second negative pulse.
    pub d_switched: f64,
    /// Net switchable remanent polarization ((P−U) + (N−D)) / 2.
    pub total_remanent: f64,
}

/// One leg of an endurance frequency schedule: cycles up to
/// `up_to_cycles` (cumulative) run at `frequency`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyLeg {
    pub up_to_cycles: u64,
    pub frequency: f64,
}

/// One sampled point of an endurance run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndurancePoint {
    pub n_cycles: u64,
    /// Cumulative stress time (s) under the frequency schedule.
    pub t: f64,
    /// PUND switchable polarization at this point (µC/cm²).
    pub p_total: f64,
    pub active_fraction: f64,
}

/// Target and write amplitude for one retention state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetentionState {
    pub index: usize,
    /// Programming amplitude (V).
    pub write_amplitude: f64,
    /// Resistance the ladder aimed this state at (Ω).
    pub target_r: f64,
}

/// Parameters of [`FeFETDevice::retention_protocol`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetentionParams {
    pub n_states: usize,
    /// Observation span per state (s).
    pub duration: f64,
    /// Read cadence (s).
    pub interval: f64,
    /// Reset pulse amplitude (V), normally strongly negative.
    pub reset_amplitude: f64,
    /// Reset pulse width (s).
    pub reset_width: f64,
    /// Programming pulse width (s).
    pub write_width: f64,
}

impl RetentionParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_states < 1 {
            return Err(Error::InvalidProtocol("n_states must be >= 1".into()));
        }
        if !self.duration.is_finite() || self.duration < 0.0 {
            return Err(Error::InvalidProtocol(format!(
                "duration must be >= 0, got {}",
                self.duration
            )));
        }
        if !self.interval.is_finite() || self.interval <= 0.0 {
            return Err(Error::InvalidProtocol(format!(
                "interval must be > 0, got {}",
                self.interval
            )));
        }
        for (name, w) in [("reset_width", self.reset_width), ("write_width", self.write_width)] {
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::InvalidProtocol(format!("{name} must be > 0, got {w}")));
            }
        }
        if !self.reset_amplitude.is_finite() {
            return Err(Error::InvalidProtocol("reset_amplitude must be finite".into()));
        }
        Ok(())
    }
}

impl Default for RetentionParams {
    fn default() -> Self {
        Self {
            n_states: 18,
            duration: 1500.0,
            interval: 5.0,
            reset_amplitude: -4.0,
            reset_width: 1e-3,
            write_width: 5e-6,
        }
    }
}

/// Output of a retention run: one read trace per programmed state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetentionResult {
    pub states: Vec<RetentionState>,
    pub traces: Vec<Trace>,
}

/// A ferroelectric transistor under test, with its read-out instrument.
#[derive(Debug, Clone)]
pub struct FeFETDevice {
    ensemble: DomainEnsemble,
    stack: DeviceStack,
    config: InstrumentConfig,
    noise: ChaCha8Rng,
}

impl FeFETDevice {
    pub fn new(
        ensemble: DomainEnsemble,
        stack: DeviceStack,
        config: InstrumentConfig,
    ) -> Result<Self> {
        stack.validate()?;
        config.validate()?;
        let noise = ChaCha8Rng::seed_from_u64(config.noise_seed);
        Ok(Self { ensemble, stack, config, noise })
    }

    pub fn ensemble(&self) -> &DomainEnsemble {
        &self.ensemble
    }

    pub fn ensemble_mut(&mut self) -> &mut DomainEnsemble {
        &mut self.ensemble
    }

    pub fn stack(&self) -> &DeviceStack {
        &self.stack
    }

    pub fn config(&self) -> &InstrumentConfig {
        &self.config
    }

    pub fn set_wakeup(&mut self, n_cycles: i64, n_w: f64, a_min: f64) -> Result<()> {
        self.ensemble.set_wakeup(n_cycles, n_w, a_min)
    }

    /// Applies one rectangular write pulse and returns to 0 V. Pulses
    /// narrower than the generator's minimum width leave the domains alone.
    pub fn write_pulse(&mut self, amplitude: f64, width: f64) -> Result<()> {
        if !amplitude.is_finite() {
            return Err(Error::InvalidProtocol(format!(
                "pulse amplitude must be finite, got {amplitude}"
            )));
        }
        if !width.is_finite() || width <= 0.0 {
            return Err(Error::InvalidProtocol(format!("pulse width must be > 0, got {width}")));
        }
        if width >= self.config.min_pulse_width {
            self.ensemble.apply_voltage(amplitude);
            self.ensemble.apply_voltage(0.0);
        }
        Ok(())
    }

    /// Remanent polarization of the film (µC/cm²), read without noise.
    pub fn polarization(&self) -> Result<f64> {
        self.ensemble.polarization()
    }

    /// The noiseless read-out chain: polarization → depleting charge →
    /// equivalent gate potential → depletion width → channel resistance.
    ///
    /// The depleting charge is the up-domain share of the polarization,
    /// `(P + P_span) / 2` clamped to `[0, P_span]`, so a fully down-polarized
    /// film leaves the channel undepleted and a fully up-polarized one
    /// applies the whole switchable charge.
    pub fn true_rds(&self) -> Result<f64> {
        let p = self.ensemble.polarization()?;
        let span = self.ensemble.saturation_polarization();
        let q_dep = if span > 0.0 { ((p + span) / 2.0).clamp(0.0, span) } else { 0.0 };
        let v_gs =
            gate_potential_from_polarization(q_dep, self.stack.c_hzo_area, self.config.scale)?;
        let x_d = depletion_width(&self.stack, v_gs)?;
        Ok(channel_resistance(&self.stack, x_d))
    }

    /// Reads the source–drain resistance with multiplicative Gaussian noise.
    /// Reading never disturbs the ferroelectric state.
    pub fn read_rds(&mut self) -> Result<f64> {
        let r = self.true_rds()?;
        let z: f64 = StandardNormal.sample(&mut self.noise);
        Ok(r * (1.0 + self.config.read_noise_sigma * z))
    }

    /// Pulsed R–V staircase 0 → `v_max` → `v_min` → 0: one write pulse and
    /// one read per step. The trace's time axis advances by the pulse width
    /// plus the read dwell per step.
    pub fn rv_hysteresis(
        &mut self,
        v_max: f64,
        v_min: f64,
        n_steps: usize,
        width: f64,
    ) -> Result<Trace> {
        if !(v_max.is_finite() && v_min.is_finite()) || v_max <= 0.0 || v_min >= 0.0 {
            return Err(Error::InvalidProtocol(format!(
                "staircase needs v_max > 0 > v_min, got {v_max} / {v_min}"
            )));
        }
        if n_steps < 4 {
            return Err(Error::InvalidProtocol(format!("n_steps must be >= 4, got {n_steps}")));
        }
        let dv = (v_max - v_min) / n_steps as f64;
        let voltages = staircase_voltages(v_max, v_min, dv)?;
        let mut trace = Trace::new(TraceKind::Resistance);
        let step_period = width + READ_DWELL;
        for (k, v) in voltages.into_iter().enumerate() {
            self.write_pulse(v, width)?;
            trace.push(k as f64 * step_period, v, self.read_rds()?);
        }
        Ok(trace)
    }

    /// Quasi-static P–V loop under `n_periods` repetitions of a triangular
    /// sweep. With a pristine ensemble the first rising quarter is still
    /// history-laden; the second period retraces the closed loop.
    pub fn pv_loop(
        &mut self,
        amplitude: f64,
        frequency: f64,
        samples_per_period: usize,
        n_periods: usize,
    ) -> Result<Trace> {
        if n_periods == 0 {
            return Err(Error::InvalidProtocol("n_periods must be >= 1".into()));
        }
        let one = Waveform::triangular(amplitude, frequency, samples_per_period)?;
        let mut segments = Vec::with_capacity(3 * n_periods);
        for _ in 0..n_periods {
            segments.extend(one.segments.iter().cloned());
        }
        let wf = Waveform::new(segments, one.sample_dt)?;
        self.ensemble.run_waveform(&wf)
    }

    /// C–V butterfly: sweeps 0 → `v_range` → −`v_range` → 0 in `dv` steps and
    /// differentiates the total stack charge `Q = P·A + C_lin·V` branch-wise,
    /// so each wing of the butterfly is differentiated only against its own
    /// sweep direction. The time axis is the step counter.
    pub fn cv_butterfly(&mut self, v_range: f64, dv: f64) -> Result<Trace> {
        if !v_range.is_finite() || v_range <= 0.0 {
            return Err(Error::InvalidProtocol(format!("v_range must be > 0, got {v_range}")));
        }
        if !dv.is_finite() || dv <= 0.0 {
            return Err(Error::InvalidProtocol(format!("dv must be > 0, got {dv}")));
        }
        if dv > v_range / 10.0 {
            return Err(Error::InvalidProtocol(format!(
                "dv = {dv} V is too coarse to resolve the loop; need dv <= v_range/10 = {}",
                v_range / 10.0
            )));
        }
        let c_lin = electrostatics::series_capacitance(
            self.stack.c_hzo(),
            self.stack.d_wox,
            self.stack.eps_wox,
            self.stack.area_cap,
        )?;
        let area_m2 = units::um2_to_m2(self.stack.area_cap);

        let voltages = staircase_voltages(v_range, -v_range, dv)?;
        let n_leg1 = (v_range / dv).round() as usize;
        let n_leg2 = (2.0 * v_range / dv).round() as usize;
        let boundaries = [0, n_leg1, n_leg1 + n_leg2, voltages.len() - 1];

        let mut charge = Vec::with_capacity(voltages.len());
        for &v in &voltages {
            self.ensemble.apply_voltage(v);
            let p = self.ensemble.polarization()?;
            charge.push(units::uc_cm2_to_c_m2(p) * area_m2 + c_lin * v);
        }

        let mut trace = Trace::new(TraceKind::Capacitance);
        let mut t = 0.0;
        for leg in boundaries.windows(2) {
            let (lo, hi) = (leg[0], leg[1]);
            for i in (lo + 1)..hi {
                let c = (charge[i + 1] - charge[i - 1]) / (voltages[i + 1] - voltages[i - 1]);
                t += 1.0;
                trace.push(t, voltages[i], c);
            }
        }
        Ok(trace)
    }

    /// Five-pulse PUND sequence at ±`amplitude`: preset down, then P-U-N-D.
    /// Switched charge per pulse is the remanence change it causes, P and U
    /// positive-going, N and D negative-going.
    pub fn pund(&mut self, amplitude: f64, width: f64) -> Result<PundResult> {
        if !amplitude.is_finite() || amplitude <= 0.0 {
            return Err(Error::InvalidProtocol(format!("amplitude must be > 0, got {amplitude}")));
        }
        self.write_pulse(-amplitude, width)?;
        let rem0 = self.ensemble.polarization()?;
        self.write_pulse(amplitude, width)?;
        let rem_p = self.ensemble.polarization()?;
        self.write_pulse(amplitude, width)?;
        let rem_u = self.ensemble.polarization()?;
        self.write_pulse(-amplitude, width)?;
        let rem_n = self.ensemble.polarization()?;
        self.write_pulse(-amplitude, width)?;
        let rem_d = self.ensemble.polarization()?;

        let p_switched = rem_p - rem0;
        let u_switched = rem_u - rem_p;
        let n_switched = (rem_n - rem_u).abs();
        let d_switched = (rem_d - rem_n).abs();
        Ok(PundResult {
            p_switched,
            u_switched,
            n_switched,
            d_switched,
            total_remanent: ((p_switched - u_switched) + (n_switched - d_switched)) / 2.0,
        })
    }

    /// Wake-up/endurance run: advances the cumulative cycle count through
    /// `points`, updating the active fraction via the saturating-exponential
    /// wake-up law (`n_w`, `a_min`), and takes a PUND reading at each point.
    /// `legs` maps cumulative cycles to stress time and must cover the last
    /// point.
    pub fn endurance_run(
        &mut self,
        points: &[u64],
        legs: &[FrequencyLeg],
        amplitude: f64,
        width: f64,
        n_w: f64,
        a_min: f64,
    ) -> Result<Vec<EndurancePoint>> {
        if points.is_empty() {
            return Err(Error::InvalidProtocol("endurance needs at least one cycle point".into()));
        }
        if !points.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::InvalidProtocol("cycle points must be strictly increasing".into()));
        }
        if legs.is_empty() {
            return Err(Error::InvalidProtocol("endurance needs a frequency schedule".into()));
        }
        for leg in legs {
            if !leg.frequency.is_finite() || leg.frequency <= 0.0 {
                return Err(Error::InvalidProtocol(format!(
                    "cycling frequency must be > 0, got {}",
                    leg.frequency
                )));
            }
        }
        if !legs.windows(2).all(|w| w[1].up_to_cycles > w[0].up_to_cycles) {
            return Err(Error::InvalidProtocol(
                "frequency legs must be strictly increasing in cycles".into(),
            ));
        }
        let last = *points.last().unwrap();
        if legs.last().unwrap().up_to_cycles < last {
            return Err(Error::InvalidProtocol(format!(
                "frequency schedule ends at {} cycles but the run reaches {last}",
                legs.last().unwrap().up_to_cycles
            )));
        }

        let mut out = Vec::with_capacity(points.len());
        for &n in points {
            let n_i64 = i64::try_from(n).map_err(|_| {
                Error::InvalidProtocol(format!("cycle count {n} exceeds the supported range"))
            })?;
            self.ensemble.set_wakeup(n_i64, n_w, a_min)?;
            let pund = self.pund(amplitude, width)?;
            out.push(EndurancePoint {
                n_cycles: n,
                t: cycles_to_seconds(legs, n),
                p_total: pund.total_remanent,
                active_fraction: self.ensemble.active_fraction(),
            });
        }
        Ok(out)
    }

    /// Programs a ladder of `n_states` resistance levels, equally spaced
    /// across the reachable read-out window, and records each level for
    /// `duration` at `interval` cadence. Every state is programmed from a
    /// hard reset; amplitudes are found by bisecting the device's own
    /// reset-write-read response, which lands each level within one domain
    /// quantum of its target.
    pub fn retention_protocol(&mut self, params: &RetentionParams) -> Result<RetentionResult> {
        params.validate()?;

        // Programming window: amplitudes below every up-threshold and above
        // all of them bracket the reachable states, rebound at 0 V included.
        let (v_floor, v_ceil) = {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for h in self.ensemble.hysterons() {
                lo = lo.min(h.v_up);
                hi = hi.max(h.v_up);
            }
            (lo - 0.5, hi + 0.5)
        };
        let r_lo = self.programmed_resistance(params, v_floor)?;
        let r_hi = self.programmed_resistance(params, v_ceil)?;
        let n = params.n_states;
        let targets: Vec<f64> = (0..n)
            .map(|i| {
                if n == 1 {
                    (r_lo + r_hi) / 2.0
                } else {
                    r_lo + (r_hi - r_lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect();

        let mut states = Vec::with_capacity(n);
        let mut traces = Vec::with_capacity(n);
        let n_reads = (params.duration / params.interval + 1e-9).floor() as usize;
        for (index, &target_r) in targets.iter().enumerate() {
            // The programmed resistance is a monotone step function of the
            // write amplitude; bisect it onto the target.
            let mut lo = v_floor;
            let mut hi = v_ceil;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if self.programmed_resistance(params, mid)? < target_r {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let (r_under, r_over) =
                (self.programmed_resistance(params, lo)?, self.programmed_resistance(params, hi)?);
            let write_amplitude = if target_r - r_under <= r_over - target_r { lo } else { hi };
            self.write_pulse(params.reset_amplitude, params.reset_width)?;
            self.write_pulse(write_amplitude, params.write_width)?;
            let mut trace = Trace::new(TraceKind::Resistance);
            for j in 0..=n_reads {
                trace.push(j as f64 * params.interval, write_amplitude, self.read_rds()?);
            }
            states.push(RetentionState { index, write_amplitude, target_r });
            traces.push(trace);
        }
        Ok(RetentionResult { states, traces })
    }

    /// Runs `n_cycles` of a potentiation/depression pulse ladder, reading the
    /// resistance after every pulse. One unrecorded conditioning pulse at the
    /// depression endpoint precedes cycle 1 so every recorded cycle starts
    /// from the same accumulated state.
    pub fn potentiation_depression(
        &mut self,
        scheme: &PulseScheme,
        n_cycles: u32,
    ) -> Result<PulseSeries> {
        scheme.validate()?;
        if n_cycles == 0 {
            return Err(Error::InvalidProtocol("n_cycles must be >= 1".into()));
        }
        let (pot, dep) = scheme.schedule();
        let (v_cond, w_cond) = scheme.conditioning_pulse();
        self.write_pulse(v_cond, w_cond)?;

        let mut series = PulseSeries::default();
        for cycle in 1..=n_cycles {
            let mut pulse_index = 0u32;
            for (branch, sched) in [(Branch::Potentiation, &pot), (Branch::Depression, &dep)] {
                for &(v, w) in sched.iter() {
                    self.write_pulse(v, w)?;
                    pulse_index += 1;
                    series.points.push(PulsePoint {
                        cycle,
                        pulse_index,
                        branch,
                        v_write: v,
                        width: w,
                        r_ds: self.read_rds()?,
                    });
                }
            }
        }
        Ok(series)
    }

    /// Noiseless resistance after a reset and a write at `amplitude`.
    fn programmed_resistance(&mut self, params: &RetentionParams, amplitude: f64) -> Result<f64> {
        self.write_pulse(params.reset_amplitude, params.reset_width)?;
        self.write_pulse(amplitude, params.write_width)?;
        self.true_rds()
    }
}

/// Staircase grid `0 → v_max → v_min → 0` with step counts chosen so each
/// leg lands exactly on its endpoints with steps as close to `dv` as the
/// span allows.
fn staircase_voltages(v_max: f64, v_min: f64, dv: f64) -> Result<Vec<f64>> {
    let n1 = (v_max / dv).round().max(1.0) as usize;
    let n2 = ((v_max - v_min) / dv).round().max(1.0) as usize;
    let n3 = (-v_min / dv).round().max(1.0) as usize;
    let total = n1 + n2 + n3 + 1;
    if total > 20_000_000 {
        return Err(Error::InvalidProtocol(format!(
            "staircase would take {total} steps; raise dv"
        )));
    }
    let mut v = Vec::with_capacity(total);
    v.push(0.0);
    for k in 1..=n1 {
        v.push(v_max * k as f64 / n1 as f64);
    }
    for k in 1..=n2 {
        v.push(v_max + (v_min - v_max) * k as f64 / n2 as f64);
    }
    for k in 1..=n3 {
        v.push(v_min - v_min * k as f64 / n3 as f64);
    }
    Ok(v)
}

/// Cumulative stress time after `n` cycles under a frequency schedule.
fn cycles_to_seconds(legs: &[FrequencyLeg], n: u64) -> f64 {
    let mut t = 0.0;
    let mut done = 0u64;
    for leg in legs {
        let upto = leg.up_to_cycles.min(n);
        if upto > done {
            t += (upto - done) as f64 / leg.frequency;
            done = upto;
        }
        if done == n {
            break;
        }
    }
    t
}
