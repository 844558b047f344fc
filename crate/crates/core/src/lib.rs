//! Device-level simulator and analysis toolkit for ferroelectric
//! HZO/WOx synaptic transistors.
//!
//! The crate models one device end to end:
//!
//! * [`domains`] — the ferroelectric layer as a seeded Preisach ensemble of
//!   bistable domains, including wake-up.
//! * [`electrostatics`] — the gate stack: series capacitance, channel
//!   depletion, and the polarization-to-resistance read-out chain.
//! * [`instrument`] — a virtual probe station running the standard
//!   protocols (P–V, C–V, R–V, PUND, endurance, retention, pulse ladders).
//! * [`analysis`] — linearity fits, Gaussian-process regression over pulse
//!   series, update-symmetry metrics, cycle statistics.
//! * [`persist`] — deterministic CSV/JSON writers and readers for traces,
//!   pulse series, and tables.
//!
//! All randomness flows through explicit seeds; identical inputs produce
//! byte-identical outputs.

pub mod analysis;
pub mod domains;
pub mod electrostatics;
pub mod error;
pub mod instrument;
pub mod persist;
pub mod units;
pub mod waveform;

pub use domains::{DomainEnsemble, EnsembleConfig, Hysteron};
pub use electrostatics::{
    channel_resistance, depletion_width, extract_permittivity, gate_potential_from_polarization,
    on_off_ratio, series_capacitance, xd_vs_nd_curve, DeviceStack, PhysConstants, XdPoint,
};
pub use error::{Error, Result};
pub use instrument::{
    Branch, EndurancePoint, FeFETDevice, FrequencyLeg, InstrumentConfig, PulsePoint, PulseScheme,
    PulseSeries, PundResult, RetentionParams, RetentionResult, RetentionState,
};
pub use waveform::{Segment, Trace, TraceKind, TraceSample, Waveform};
