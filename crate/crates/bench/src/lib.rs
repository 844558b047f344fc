//! Shared builders for the benchmark suite. The measurements themselves live
//! in `benches/`; this crate's library only removes setup boilerplate so each
//! bench body is the workload and nothing else.

use ferrosim_core::{
    DeviceStack, DomainEnsemble, EnsembleConfig, FeFETDevice, InstrumentConfig, PulseScheme,
};

/// A freshly built device with default film, stack, and instrument settings.
pub fn default_device() -> FeFETDevice {
    let ensemble = DomainEnsemble::build(&EnsembleConfig::default()).expect("default ensemble");
    FeFETDevice::new(ensemble, DeviceStack::default(), InstrumentConfig::default())
        .expect("default device")
}

/// The default amplitude-ramp write scheme used by the pulse-train benches.
pub fn default_scheme() -> PulseScheme {
    PulseScheme::AmplitudeRamp { v_pot_max: 3.5, v_dep_min: -3.0, step_v: 0.1, width: 2e-7 }
}
