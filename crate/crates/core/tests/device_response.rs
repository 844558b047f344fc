//! Frozen device-level responses of the default device: remanence, coercive
//! crossings, and the reachable resistance window.

use ferrosim_core::analysis::loop_remanence;
use ferrosim_core::{DeviceStack, DomainEnsemble, EnsembleConfig, FeFETDevice, InstrumentConfig};

fn default_device() -> FeFETDevice {
    let ensemble = DomainEnsemble::build(&EnsembleConfig::default()).unwrap();
    FeFETDevice::new(ensemble, DeviceStack::default(), InstrumentConfig::default()).unwrap()
}

fn noise_free_device() -> FeFETDevice {
    let ensemble = DomainEnsemble::build(&EnsembleConfig::default()).unwrap();
    let config = InstrumentConfig { read_noise_sigma: 0.0, ..InstrumentConfig::default() };
    FeFETDevice::new(ensemble, DeviceStack::default(), config).unwrap()
}

#[test]
fn remanence_and_coercive_crossings_of_the_default_loop() {
    let mut dev = default_device();
    // Two periods: the second retraces the settled loop, and the extractor
    // keeps the last crossing of each kind.
    let trace = dev.pv_loop(3.5, 10.0, 4096, 2).unwrap();
    let m = loop_remanence(&trace).unwrap();
    assert!((m.p_r_plus - 12.4).abs() < 0.6, "P_r+ = {}", m.p_r_plus);
    assert!((m.p_r_minus + 11.8).abs() < 0.6, "P_r- = {}", m.p_r_minus);
    assert!((m.v_c_plus - 0.91).abs() < 0.1, "V_c+ = {}", m.v_c_plus);
    assert!((m.v_c_minus + 1.27).abs() < 0.1, "V_c- = {}", m.v_c_minus);
}

#[test]
fn resistance_window_of_the_default_sweep() {
    let mut dev = noise_free_device();
    let r_on = dev.stack().r_on();
    let r_max = dev.stack().r_max;
    let trace = dev.rv_hysteresis(3.5, -4.0, 160, 1e-3).unwrap();
    let values: Vec<f64> = trace.values().collect();
    let lo = values.iter().copied().fold(f64::MAX, f64::min);
    let hi = values.iter().copied().fold(f64::MIN, f64::max);
    // The sweep returns to 0 V between points, so the floor sits a hair
    // above the fully-on resistance (domains with sub-zero up-thresholds
    // re-switch) and the ceiling a hair below full depletion.
    assert!(lo >= r_on, "floor {lo} below r_on {r_on}");
    assert!(lo < 1.05 * r_on, "floor {lo} far above r_on {r_on}");
    assert!(hi < r_max);
    assert!(hi / lo > 1.3, "window ratio {}", hi / lo);
}

#[test]
fn loop_shape_is_stable_across_rebuilds() {
    // Building the same ensemble twice and sweeping twice must give
    // identical traces: all randomness is seed-bound.
    let mut a = default_device();
    let mut b = default_device();
    let ta = a.pv_loop(3.5, 10.0, 512, 1).unwrap();
    let tb = b.pv_loop(3.5, 10.0, 512, 1).unwrap();
    assert_eq!(ta, tb);
}
