//! Property tests for the hysteron ensemble, checked against a brute-force
//! restatement of the switching rule that shares no code with the library.

use proptest::prelude::*;

use ferrosim_core::{DomainEnsemble, EnsembleConfig, Hysteron};

/// Replays a voltage sequence hysteron by hysteron, straight from the rule:
/// v >= v_up switches up, v <= v_down switches down, anything strictly
/// between leaves the state alone. Returns the polarization after each step.
fn naive_polarizations(hysterons: &[Hysteron], p_sat: f64, af: f64, seq: &[f64]) -> Vec<f64> {
    let mut states: Vec<i8> = hysterons.iter().map(|h| h.state).collect();
    let den: f64 = hysterons.iter().map(|h| h.weight).sum();
    let mut out = Vec::with_capacity(seq.len());
    for &v in seq {
        for (h, s) in hysterons.iter().zip(states.iter_mut()) {
            if v >= h.v_up {
                *s = 1;
            } else if v <= h.v_down {
                *s = -1;
            }
        }
        let num: f64 =
            hysterons.iter().zip(states.iter()).map(|(h, s)| h.weight * f64::from(*s)).sum();
        out.push(af * p_sat * num / den);
    }
    out
}

fn hysteron() -> impl Strategy<Value = Hysteron> {
    (-2.0..2.0f64, 0.01..3.0f64, 0.1..10.0f64, any::<bool>()).prop_map(|(vu, gap, w, up)| {
        Hysteron {
            v_up: vu,
            v_down: vu - gap,
            weight: w,
            state: if up { 1 } else { -1 },
            active: true,
        }
    })
}

fn small_ensemble() -> impl Strategy<Value = Vec<Hysteron>> {
    prop::collection::vec(hysteron(), 1..=10)
}

fn drive_sequence() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, 1..40)
}

fn relative_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    // The ensemble must agree with the hysteron-by-hysteron replay after
    // every single step of an arbitrary drive sequence.
    #[test]
    fn matches_the_brute_force_oracle(
        hysterons in small_ensemble(),
        seq in drive_sequence(),
        p_sat in 0.1..20.0f64,
        af in 0.5..1.0f64,
    ) {
        let expected = naive_polarizations(&hysterons, p_sat, af, &seq);
        let mut ens = DomainEnsemble::from_parts(hysterons, p_sat, af, 0).unwrap();
        for (v, want) in seq.iter().zip(expected) {
            ens.apply_voltage(*v);
            let got = ens.polarization().unwrap();
            prop_assert!(relative_close(got, want), "at v={v}: {got} vs {want}");
        }
    }

    // |P| can never exceed the saturation polarization.
    #[test]
    fn polarization_stays_bounded(
        hysterons in small_ensemble(),
        seq in drive_sequence(),
        p_sat in 0.1..20.0f64,
    ) {
        let mut ens = DomainEnsemble::from_parts(hysterons, p_sat, 1.0, 0).unwrap();
        let bound = ens.saturation_polarization() * (1.0 + 1e-12);
        for v in seq {
            ens.apply_voltage(v);
            prop_assert!(ens.polarization().unwrap().abs() <= bound);
        }
    }

    // A drive beyond every up-threshold wipes out all history: the
    // polarization lands exactly at saturation no matter what came before.
    #[test]
    fn saturation_wipes_out_history(
        hysterons in small_ensemble(),
        seq in drive_sequence(),
        p_sat in 0.1..20.0f64,
    ) {
        let v_sat = hysterons.iter().map(|h| h.v_up).fold(f64::MIN, f64::max) + 0.1;
        let mut ens = DomainEnsemble::from_parts(hysterons, p_sat, 1.0, 0).unwrap();
        for v in seq {
            ens.apply_voltage(v);
        }
        ens.apply_voltage(v_sat);
        let got = ens.polarization().unwrap();
        let want = ens.saturation_polarization();
        prop_assert!(relative_close(got, want));
    }

    // Return-point memory: once a minor loop a -> b -> a has been traversed,
    // retracing it reproduces the polarization at both turning points
    // exactly, for any prior history.
    #[test]
    fn minor_loops_close_and_repeat(
        hysterons in small_ensemble(),
        prefix in prop::collection::vec(-5.0..5.0f64, 0..20),
        a in -4.0..4.0f64,
        gap in 0.01..3.0f64,
    ) {
        let b = a - gap;
        let mut ens = DomainEnsemble::from_parts(hysterons, 10.0, 1.0, 0).unwrap();
        for v in prefix {
            ens.apply_voltage(v);
        }
        // Prime the loop once, then record a full cycle.
        ens.apply_voltage(a);
        ens.apply_voltage(b);
        ens.apply_voltage(a);
        let p_top = ens.polarization().unwrap();
        ens.apply_voltage(b);
        let p_bottom = ens.polarization().unwrap();
        for _ in 0..3 {
            ens.apply_voltage(a);
            prop_assert_eq!(ens.polarization().unwrap(), p_top);
            ens.apply_voltage(b);
            prop_assert_eq!(ens.polarization().unwrap(), p_bottom);
        }
    }

    // Quasi-static response is monotone under a monotone drive.
    #[test]
    fn rising_drive_never_lowers_polarization(
        hysterons in small_ensemble(),
        mut seq in drive_sequence(),
    ) {
        seq.sort_by(f64::total_cmp);
        let mut ens = DomainEnsemble::from_parts(hysterons, 10.0, 1.0, 0).unwrap();
        let mut last = f64::MIN;
        for v in seq {
            ens.apply_voltage(v);
            let p = ens.polarization().unwrap();
            prop_assert!(p >= last);
            last = p;
        }
    }

    // A sub-loop driven to smaller extremes stays inside the envelope of the
    // loop driven to larger ones, both starting from negative saturation.
    #[test]
    fn sub_loops_stay_inside_the_major_envelope(
        hysterons in small_ensemble(),
        a_minor in 0.1..3.0f64,
        extra in 0.1..2.0f64,
    ) {
        let a_major = a_minor + extra;
        let span = |ens: &mut DomainEnsemble, amp: f64| {
            ens.apply_voltage(-6.0);
            let mut lo = f64::MAX;
            let mut hi = f64::MIN;
            for _ in 0..2 {
                for k in -20i32..=20 {
                    let v = amp * f64::from(k) / 20.0;
                    ens.apply_voltage(v);
                    let p = ens.polarization().unwrap();
                    lo = lo.min(p);
                    hi = hi.max(p);
                }
            }
            (lo, hi)
        };
        let mut minor_ens =
            DomainEnsemble::from_parts(hysterons.clone(), 10.0, 1.0, 0).unwrap();
        let mut major_ens = DomainEnsemble::from_parts(hysterons, 10.0, 1.0, 0).unwrap();
        let (min_lo, min_hi) = span(&mut minor_ens, a_minor);
        let (maj_lo, maj_hi) = span(&mut major_ens, a_major);
        prop_assert!(min_lo >= maj_lo - 1e-12);
        prop_assert!(min_hi <= maj_hi + 1e-12);
    }

    // Wake-up only ever raises the active fraction as cycling accumulates.
    #[test]
    fn wakeup_is_monotone_in_cycle_count(
        n1 in 0i64..2_000_000,
        extra in 0i64..2_000_000,
        n_w in 1.0e2..1.0e6f64,
        a_min in 0.05..1.0f64,
    ) {
        let config = EnsembleConfig { n_hysterons: 4, ..EnsembleConfig::default() };
        let mut ens = DomainEnsemble::build(&config).unwrap();
        ens.set_wakeup(n1, n_w, a_min).unwrap();
        let af1 = ens.active_fraction();
        ens.set_wakeup(n1 + extra, n_w, a_min).unwrap();
        let af2 = ens.active_fraction();
        prop_assert!(af2 >= af1);
        prop_assert!((a_min..=1.0).contains(&af1));
    }
}

// The drive grid in the sub-loop property lands exactly on ±amplitude, and
// the oracle comparison needs a deterministic spot check too: a fixed seed
// regression so the suite never silently weakens.
#[test]
fn oracle_agreement_on_a_fixed_case() {
    let hysterons = vec![
        Hysteron { v_up: 0.9, v_down: -1.3, weight: 2.0, state: -1, active: true },
        Hysteron { v_up: 0.2, v_down: -0.4, weight: 1.0, state: 1, active: true },
        Hysteron { v_up: 1.7, v_down: 0.3, weight: 0.5, state: -1, active: true },
    ];
    let seq = [0.5, -0.6, 1.8, -2.0, 0.95, 0.0, -1.29, 3.0];
    let expected = naive_polarizations(&hysterons, 12.5, 0.8, &seq);
    let mut ens = DomainEnsemble::from_parts(hysterons, 12.5, 0.8, 0).unwrap();
    for (v, want) in seq.iter().zip(expected) {
        ens.apply_voltage(*v);
        assert_eq!(ens.polarization().unwrap(), want);
    }
}
