//! Run configuration: a TOML file mirroring the device and protocol
//! parameters, with defaults matching the calibrated device.
//!
//! Unknown keys are rejected so a typo cannot silently fall back to a
//! default. The resolved configuration (everything except the output
//! location) is serialized next to each run's outputs and hashed; the hash
//! goes into every data file header, so a file always names the exact
//! parameter set that produced it.

use ferrosim_core::instrument::{FrequencyLeg, InstrumentConfig, PulseScheme, RetentionParams};
use ferrosim_core::waveform::Waveform;
use ferrosim_core::{DeviceStack, EnsembleConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// XOR salt decorrelating the read-noise stream from the ensemble sampling
/// stream when both derive from the one user-facing seed.
const NOISE_SEED_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub device: DeviceSection,
    pub run: RunSection,
    #[serde(skip_serializing)]
    pub output: OutputSection,
    pub pv_loop: PvLoopSection,
    pub cv_butterfly: CvButterflySection,
    pub rv_hysteresis: RvHysteresisSection,
    pub minor_loops: MinorLoopsSection,
    pub pund: PundSection,
    pub endurance: EnduranceSection,
    pub retention: RetentionSection,
    pub potdep: PotdepSection,
    pub potdep_width: PotdepWidthSection,
    pub xd_curve: XdCurveSection,
    pub metrics: MetricsSection,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceSection {
    pub ensemble: EnsembleSection,
    pub stack: StackSection,
    pub instrument: InstrumentSection,
    /// Optional electrical history override: when present, the device starts
    /// at the activity level reached after `n_cycles` wake-up cycles instead
    /// of fully woken.
    pub wakeup: Option<WakeupSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSection {
    pub n_hysterons: usize,
    pub mean_v_up: f64,
    pub mean_v_down: f64,
    pub sigma_c: f64,
    pub p_sat: f64,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        let c = EnsembleConfig::default();
        Self {
            n_hysterons: c.n_hysterons,
            mean_v_up: c.mean_v_up,
            mean_v_down: c.mean_v_down,
            sigma_c: c.sigma_c,
            p_sat: c.p_sat,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StackSection {
    pub d_wox: f64,
    pub eps_wox: f64,
    pub c_hzo_area: f64,
    pub n_d: f64,
    pub rho: f64,
    pub mu: f64,
    pub width: f64,
    pub length: f64,
    pub area_cap: f64,
    pub r_max: f64,
}

impl Default for StackSection {
    fn default() -> Self {
        let s = DeviceStack::default();
        Self {
            d_wox: s.d_wox,
            eps_wox: s.eps_wox,
            c_hzo_area: s.c_hzo_area,
            n_d: s.n_d,
            rho: s.rho,
            mu: s.mu,
            width: s.width,
            length: s.length,
            area_cap: s.area_cap,
            r_max: s.r_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InstrumentSection {
    pub scale: f64,
    pub read_noise_sigma: f64,
    pub min_pulse_width: f64,
}

impl Default for InstrumentSection {
    fn default() -> Self {
        let c = InstrumentConfig::default();
        Self {
            scale: c.scale,
            read_noise_sigma: c.read_noise_sigma,
            min_pulse_width: c.min_pulse_width,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WakeupSection {
    pub n_cycles: i64,
    pub n_w: f64,
    pub a_min: f64,
}

impl Default for WakeupSection {
    fn default() -> Self {
        Self { n_cycles: 0, n_w: 1.0e4, a_min: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { seed: 42 }
    }
}

/// Where and how outputs land. Deliberately excluded from the resolved
/// config and its hash: moving a run to a different directory must not
/// change a single byte inside the output files.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: Option<String>,
    pub format: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PvLoopSection {
    pub amplitude: f64,
    pub frequency: f64,
    pub samples_per_period: usize,
    pub n_periods: usize,
}

impl Default for PvLoopSection {
    fn default() -> Self {
        Self { amplitude: 3.5, frequency: 10.0, samples_per_period: 4096, n_periods: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CvButterflySection {
    pub v_range: f64,
    pub dv: f64,
}

impl Default for CvButterflySection {
    fn default() -> Self {
        Self { v_range: 3.0, dv: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RvHysteresisSection {
    pub v_max: f64,
    pub v_min: f64,
    pub n_steps: usize,
    pub width: f64,
}

impl Default for RvHysteresisSection {
    fn default() -> Self {
        Self { v_max: 3.5, v_min: -4.0, n_steps: 160, width: 1.0e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinorLoopsSection {
    /// Symmetric sweep amplitudes, run in order on one device so each loop
    /// nests inside the history left by the previous one.
    pub amplitudes: Vec<f64>,
    pub n_steps: usize,
    pub width: f64,
}

impl Default for MinorLoopsSection {
    fn default() -> Self {
        Self { amplitudes: vec![4.0, 3.5, 3.0, 2.5, 2.0, 1.5], n_steps: 160, width: 1.0e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PundSection {
    pub amplitude: f64,
    pub width: f64,
}

impl Default for PundSection {
    fn default() -> Self {
        Self { amplitude: 3.5, width: 1.0e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnduranceSection {
    pub points: Vec<u64>,
    pub amplitude: f64,
    pub width: f64,
    pub n_w: f64,
    pub a_min: f64,
    pub legs: Vec<LegSection>,
}

impl Default for EnduranceSection {
    fn default() -> Self {
        Self {
            points: vec![1, 10, 100, 1_000, 10_000, 100_000, 1_000_000],
            amplitude: 3.5,
            width: 1.0e-3,
            n_w: 1.0e4,
            a_min: 0.5,
            legs: vec![
                LegSection { up_to_cycles: 10_000, frequency: 1.0e3 },
                LegSection { up_to_cycles: 1_000_000, frequency: 1.0e6 },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LegSection {
    pub up_to_cycles: u64,
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetentionSection {
    pub n_states: usize,
    pub duration: f64,
    pub interval: f64,
    pub reset_amplitude: f64,
    pub reset_width: f64,
    pub write_width: f64,
}

impl Default for RetentionSection {
    fn default() -> Self {
        let p = RetentionParams::default();
        Self {
            n_states: p.n_states,
            duration: p.duration,
            interval: p.interval,
            reset_amplitude: p.reset_amplitude,
            reset_width: p.reset_width,
            write_width: p.write_width,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotdepSection {
    pub v_pot_max: f64,
    pub v_dep_min: f64,
    pub step_v: f64,
    pub width: f64,
    pub n_cycles: u32,
}

impl Default for PotdepSection {
    fn default() -> Self {
        Self { v_pot_max: 3.5, v_dep_min: -3.0, step_v: 0.1, width: 2.0e-7, n_cycles: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotdepWidthSection {
    pub v_pot: f64,
    pub v_dep: f64,
    pub width_start: f64,
    pub width_end: f64,
    pub n_steps: usize,
    pub n_cycles: u32,
}

impl Default for PotdepWidthSection {
    fn default() -> Self {
        Self {
            v_pot: 3.5,
            v_dep: -3.0,
            width_start: 4.0e-8,
            width_end: 2.5e-7,
            n_steps: 36,
            n_cycles: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct XdCurveSection {
    pub n_d_min: f64,
    pub n_d_max: f64,
    pub n_points: usize,
    pub v_gs: Vec<f64>,
}

impl Default for XdCurveSection {
    fn default() -> Self {
        Self { n_d_min: 1.0e19, n_d_max: 1.0e21, n_points: 25, v_gs: vec![1.0, 2.0, 3.0, 4.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsSection {
    /// Write-amplitude window for the potentiation linear fit (V).
    pub pot_fit_window: [f64; 2],
    /// Write-amplitude window for the depression linear fit (V).
    pub dep_fit_window: [f64; 2],
    pub sf_levels: usize,
    /// Separation threshold, in combined standard errors, for counting
    /// distinguishable states.
    pub k_sigma: f64,
    pub i_gate: f64,
    pub energy_v: f64,
    pub energy_t: f64,
}

impl Default for MetricsSection {
    fn default() -> Self {
        Self {
            pot_fit_window: [0.2, 1.6],
            dep_fit_window: [-2.1, -0.5],
            sf_levels: 32,
            k_sigma: 2.0,
            i_gate: 3.02e-8,
            energy_v: 3.5,
            energy_t: 2.0e-7,
        }
    }
}

impl Config {
    /// Parses a TOML string, rejecting unknown keys.
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// The configuration as it will be recorded beside the outputs, with any
    /// command-line seed override already applied and the output section
    /// stripped.
    pub fn resolved_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// Short content hash of the resolved configuration.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.resolved_toml().as_bytes());
        let mut hex = String::with_capacity(16);
        for b in &digest[..8] {
            hex.push_str(&format!("{b:02x}"));
        }
        hex
    }

    pub fn ensemble_config(&self, seed: u64) -> EnsembleConfig {
        let e = &self.device.ensemble;
        EnsembleConfig {
            n_hysterons: e.n_hysterons,
            mean_v_up: e.mean_v_up,
            mean_v_down: e.mean_v_down,
            sigma_c: e.sigma_c,
            p_sat: e.p_sat,
            seed,
        }
    }

    pub fn device_stack(&self) -> DeviceStack {
        let s = &self.device.stack;
        DeviceStack {
            d_wox: s.d_wox,
            eps_wox: s.eps_wox,
            c_hzo_area: s.c_hzo_area,
            n_d: s.n_d,
            rho: s.rho,
            mu: s.mu,
            width: s.width,
            length: s.length,
            area_cap: s.area_cap,
            r_max: s.r_max,
        }
    }

    pub fn instrument_config(&self, seed: u64) -> InstrumentConfig {
        let i = &self.device.instrument;
        InstrumentConfig {
            scale: i.scale,
            read_noise_sigma: i.read_noise_sigma,
            min_pulse_width: i.min_pulse_width,
            noise_seed: seed ^ NOISE_SEED_SALT,
        }
    }

    pub fn pulse_scheme_amplitude(&self) -> PulseScheme {
        let p = &self.potdep;
        PulseScheme::AmplitudeRamp {
            v_pot_max: p.v_pot_max,
            v_dep_min: p.v_dep_min,
            step_v: p.step_v,
            width: p.width,
        }
    }

    pub fn pulse_scheme_width(&self) -> PulseScheme {
        let p = &self.potdep_width;
        PulseScheme::WidthRamp {
            v_pot: p.v_pot,
            v_dep: p.v_dep,
            width_start: p.width_start,
            width_end: p.width_end,
            n_steps: p.n_steps,
        }
    }

    pub fn retention_params(&self) -> RetentionParams {
        let r = &self.retention;
        RetentionParams {
            n_states: r.n_states,
            duration: r.duration,
            interval: r.interval,
            reset_amplitude: r.reset_amplitude,
            reset_width: r.reset_width,
            write_width: r.write_width,
        }
    }

    pub fn endurance_legs(&self) -> Vec<FrequencyLeg> {
        self.endurance
            .legs
            .iter()
            .map(|l| FrequencyLeg { up_to_cycles: l.up_to_cycles, frequency: l.frequency })
            .collect()
    }
}

/// Checks every section against the same invariants the protocols enforce,
/// without running anything. Returns one line per violation, prefixed with
/// the config path of the offending section.
pub fn violations(cfg: &Config) -> Vec<String> {
    let mut out = Vec::new();

    check(&mut out, "device.ensemble", cfg.ensemble_config(cfg.run.seed).validate());
    check(&mut out, "device.stack", cfg.device_stack().validate());
    check(&mut out, "device.instrument", cfg.instrument_config(cfg.run.seed).validate());
    if let Some(w) = &cfg.device.wakeup {
        if w.n_cycles < 0 {
            out.push(format!("device.wakeup: n_cycles must be >= 0, got {}", w.n_cycles));
        }
        if !w.n_w.is_finite() || w.n_w <= 0.0 {
            out.push(format!("device.wakeup: n_w must be finite and > 0, got {}", w.n_w));
        }
        if !(0.0..=1.0).contains(&w.a_min) {
            out.push(format!("device.wakeup: a_min must lie in [0, 1], got {}", w.a_min));
        }
    }
    if let Some(f) = &cfg.output.format {
        if !matches!(f.as_str(), "csv" | "json" | "svg") {
            out.push(format!("output.format: must be one of csv, json, svg; got {f:?}"));
        }
    }

    let pv = &cfg.pv_loop;
    check(
        &mut out,
        "pv_loop",
        Waveform::triangular(pv.amplitude, pv.frequency, pv.samples_per_period).map(|_| ()),
    );
    if pv.n_periods == 0 {
        out.push("pv_loop: n_periods must be >= 1".into());
    }

    let cv = &cfg.cv_butterfly;
    if !cv.v_range.is_finite() || cv.v_range <= 0.0 {
        out.push(format!("cv_butterfly: v_range must be > 0, got {}", cv.v_range));
    } else if !cv.dv.is_finite() || cv.dv <= 0.0 {
        out.push(format!("cv_butterfly: dv must be > 0, got {}", cv.dv));
    } else if cv.dv > cv.v_range / 10.0 {
        out.push(format!(
            "cv_butterfly: dv = {} V is too coarse; need dv <= v_range/10 = {}",
            cv.dv,
            cv.v_range / 10.0
        ));
    }

    check_staircase(
        "rv_hysteresis",
        &mut out,
        cfg.rv_hysteresis.v_max,
        cfg.rv_hysteresis.v_min,
        cfg.rv_hysteresis.n_steps,
        cfg.rv_hysteresis.width,
    );

    let ml = &cfg.minor_loops;
    if ml.amplitudes.is_empty() {
        out.push("minor_loops: amplitudes must not be empty".into());
    }
    for (i, &a) in ml.amplitudes.iter().enumerate() {
        if !a.is_finite() || a <= 0.0 {
            out.push(format!("minor_loops: amplitudes[{i}] must be > 0, got {a}"));
        }
    }
    if let Some(&a) = ml.amplitudes.iter().find(|a| a.is_finite() && **a > 0.0) {
        check_staircase("minor_loops", &mut out, a, -a, ml.n_steps, ml.width);
    }

    let pu = &cfg.pund;
    if !pu.amplitude.is_finite() || pu.amplitude <= 0.0 {
        out.push(format!("pund: amplitude must be > 0, got {}", pu.amplitude));
    }
    if !pu.width.is_finite() || pu.width <= 0.0 {
        out.push(format!("pund: width must be > 0, got {}", pu.width));
    }

    let en = &cfg.endurance;
    if en.points.is_empty() {
        out.push("endurance: points must not be empty".into());
    }
    if !en.points.windows(2).all(|w| w[1] > w[0]) {
        out.push("endurance: points must be strictly increasing".into());
    }
    if !en.amplitude.is_finite() || en.amplitude <= 0.0 {
        out.push(format!("endurance: amplitude must be > 0, got {}", en.amplitude));
    }
    if !en.width.is_finite() || en.width <= 0.0 {
        out.push(format!("endurance: width must be > 0, got {}", en.width));
    }
    if !en.n_w.is_finite() || en.n_w <= 0.0 {
        out.push(format!("endurance: n_w must be finite and > 0, got {}", en.n_w));
    }
    if !(0.0..=1.0).contains(&en.a_min) {
        out.push(format!("endurance: a_min must lie in [0, 1], got {}", en.a_min));
    }
    if en.legs.is_empty() {
        out.push("endurance: legs must not be empty".into());
    }
    for (i, l) in en.legs.iter().enumerate() {
        if !l.frequency.is_finite() || l.frequency <= 0.0 {
            out.push(format!("endurance: legs[{i}].frequency must be > 0, got {}", l.frequency));
        }
    }
    if !en.legs.windows(2).all(|w| w[1].up_to_cycles > w[0].up_to_cycles) {
        out.push("endurance: legs must be strictly increasing in up_to_cycles".into());
    }
    if let (Some(last_point), Some(last_leg)) = (en.points.last(), en.legs.last()) {
        if last_leg.up_to_cycles < *last_point {
            out.push(format!(
                "endurance: frequency schedule ends at {} cycles but points reach {}",
                last_leg.up_to_cycles, last_point
            ));
        }
    }

    check(&mut out, "retention", cfg.retention_params().validate());
    check(&mut out, "potdep", cfg.pulse_scheme_amplitude().validate());
    if cfg.potdep.n_cycles == 0 {
        out.push("potdep: n_cycles must be >= 1".into());
    }
    check(&mut out, "potdep_width", cfg.pulse_scheme_width().validate());
    if cfg.potdep_width.n_cycles == 0 {
        out.push("potdep_width: n_cycles must be >= 1".into());
    }

    let xd = &cfg.xd_curve;
    if !xd.n_d_min.is_finite() || xd.n_d_min <= 0.0 {
        out.push(format!("xd_curve: n_d_min must be > 0, got {}", xd.n_d_min));
    }
    if !xd.n_d_max.is_finite() || xd.n_d_max <= xd.n_d_min {
        out.push(format!(
            "xd_curve: n_d_max must exceed n_d_min = {}, got {}",
            xd.n_d_min, xd.n_d_max
        ));
    }
    if xd.n_points < 2 {
        out.push(format!("xd_curve: n_points must be >= 2, got {}", xd.n_points));
    }
    if xd.v_gs.is_empty() {
        out.push("xd_curve: v_gs must not be empty".into());
    }
    for (i, &v) in xd.v_gs.iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            out.push(format!("xd_curve: v_gs[{i}] must be >= 0, got {v}"));
        }
    }

    let m = &cfg.metrics;
    for (name, w) in [("pot_fit_window", m.pot_fit_window), ("dep_fit_window", m.dep_fit_window)] {
        if !(w[0].is_finite() && w[1].is_finite()) {
            out.push(format!("metrics: {name} must be finite, got [{}, {}]", w[0], w[1]));
        }
    }
    if m.sf_levels < 3 {
        out.push(format!("metrics: sf_levels must be >= 3, got {}", m.sf_levels));
    }
    if !m.k_sigma.is_finite() || m.k_sigma <= 0.0 {
        out.push(format!("metrics: k_sigma must be > 0, got {}", m.k_sigma));
    }
    if !m.i_gate.is_finite() || m.i_gate <= 0.0 {
        out.push(format!("metrics: i_gate must be > 0, got {}", m.i_gate));
    }
    if !m.energy_v.is_finite() || m.energy_v <= 0.0 {
        out.push(format!("metrics: energy_v must be > 0, got {}", m.energy_v));
    }
    if !m.energy_t.is_finite() || m.energy_t < 0.0 {
        out.push(format!("metrics: energy_t must be >= 0, got {}", m.energy_t));
    }

    out
}

fn check(out: &mut Vec<String>, path: &str, r: Result<(), ferrosim_core::Error>) {
    if let Err(e) = r {
        out.push(format!("{path}: {e}"));
    }
}

fn check_staircase(
    path: &str,
    out: &mut Vec<String>,
    v_max: f64,
    v_min: f64,
    n_steps: usize,
    width: f64,
) {
    if !(v_max.is_finite() && v_min.is_finite()) || v_max <= 0.0 || v_min >= 0.0 {
        out.push(format!("{path}: staircase needs v_max > 0 > v_min, got {v_max} / {v_min}"));
    }
    if n_steps < 4 {
        out.push(format!("{path}: n_steps must be >= 4, got {n_steps}"));
    }
    if !width.is_finite() || width <= 0.0 {
        out.push(format!("{path}: width must be > 0, got {width}"));
    }
}
