//! Hot-path benchmarks: quasi-static ensemble updates, full measurement
//! protocols, and the GP regression that dominates the metrics pipeline.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use ferrosim_bench::{default_device, default_scheme};
use ferrosim_core::analysis::gpr_fit;
use ferrosim_core::instrument::Branch;
use ferrosim_core::{DomainEnsemble, EnsembleConfig};

fn ensemble_staircase(c: &mut Criterion) {
    let mut ensemble = DomainEnsemble::build(&EnsembleConfig::default()).expect("ensemble");
    c.bench_function("ensemble_staircase_320_steps", |b| {
        b.iter(|| {
            for k in 0..320u32 {
                let v = 3.5 * (f64::from(k % 40) / 20.0 - 1.0);
                ensemble.apply_voltage(black_box(v));
            }
            ensemble.polarization().expect("polarization")
        })
    });
}

fn pv_loop(c: &mut Criterion) {
    c.bench_function("pv_loop_2_periods_1024_samples", |b| {
        b.iter(|| {
            let mut device = default_device();
            device.pv_loop(black_box(3.5), 10.0, 1024, 2).expect("loop")
        })
    });
}

fn potdep_cycle(c: &mut Criterion) {
    let scheme = default_scheme();
    c.bench_function("potdep_amplitude_ramp_1_cycle", |b| {
        b.iter(|| {
            let mut device = default_device();
            device.potentiation_depression(black_box(&scheme), 1).expect("pulse train")
        })
    });
}

fn gpr(c: &mut Criterion) {
    let mut device = default_device();
    let series = device.potentiation_depression(&default_scheme(), 5).expect("pulse train");
    let x: Vec<f64> =
        series.branch_points(Branch::Potentiation).map(|p| f64::from(p.pulse_index)).collect();
    let y: Vec<f64> = series.branch_points(Branch::Potentiation).map(|p| p.r_ds).collect();
    let mut group = c.benchmark_group("gpr");
    group.sample_size(10);
    group.bench_function("gpr_fit_175_points", |b| {
        b.iter(|| gpr_fit(black_box(&x), black_box(&y)).expect("fit"))
    });
    group.finish();
}

criterion_group!(benches, ensemble_staircase, pv_loop, potdep_cycle, gpr);
criterion_main!(benches);
