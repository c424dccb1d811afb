use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use xychain::cli::{parse_list, parse_window};
use xychain::format::sig17;
use xychain::{
    amplitude, fidelity_direct, fidelity_xi, find_peak, make_encoding, make_xi_k, optimal_encoding, propagate,
    ChainSpec, EncodingState, FnObjective, TimeObjective, Variant, XiParameters,
};

fn encoding(n: usize, vacuum: bool, raw: &[(f64, f64)]) -> EncodingState {
    let amps: Vec<Complex64> = raw.iter().take(n + 1).map(|&(a, b)| Complex64::new(a, b)).collect();
    let start = if vacuum { 0 } else { 1 };
    let norm = amps[start..].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let alpha0 = if vacuum { amps[0] / norm } else { Complex64::default() };
    make_encoding(n, alpha0, (1..amps.len()).map(|j| (j, amps[j] / norm))).unwrap()
}

fn raw_amplitudes() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.1f64..1.0, -1.0f64..1.0), 61)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evolution_preserves_norm(n in 1usize..60, vacuum: bool, raw in raw_amplitudes(),
                                h in -1.0f64..1.0, t in 0.0f64..200.0) {
        let chain = ChainSpec::new(n, 1.0, h).unwrap();
        let state = propagate(&chain, &encoding(n, vacuum, &raw), t).unwrap();
        prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn amplitudes_are_symmetric_and_mirror_invariant(n in 1usize..80, a in 0usize..80, b in 0usize..80,
                                                     t in 0.0f64..150.0) {
        let (s, j) = (a % n + 1, b % n + 1);
        let chain = ChainSpec::new(n, 1.3, 0.2).unwrap();
        let f = amplitude(&chain, s, j, t).unwrap();
        prop_assert!((f - amplitude(&chain, j, s, t).unwrap()).norm() < 1e-12);
        prop_assert!((f - amplitude(&chain, n + 1 - s, n + 1 - j, t).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn top_singular_value_bounds_every_encoding(n in 2usize..60, r_seed in 0usize..10, raw in raw_amplitudes(),
                                                t in 0.0f64..100.0) {
        let r = r_seed % n + 1;
        let chain = ChainSpec::new(n, 1.0, 0.0).unwrap();
        let opt = optimal_encoding(&chain, r, t).unwrap();
        prop_assert!(opt.top_singular_value <= 1.0 + 1e-12);
        let enc = encoding(r, false, &raw).on_chain(n).unwrap();
        let f = fidelity_direct(&chain, &enc, t).unwrap().fidelity;
        prop_assert!(f <= opt.top_singular_value + 1e-12);
        // σ₁ is the norm of what the optimal input leaves in the receiver window
        let state = propagate(&chain, &opt.to_encoding_state(n).unwrap(), t).unwrap();
        let window: f64 = state.site_amplitudes[n - r..].iter().map(|w| w.norm_sqr()).sum();
        prop_assert!((window.sqrt() - opt.top_singular_value).abs() < 1e-9);
    }

    #[test]
    fn overlap_fidelity_is_bounded(k in 1usize..6, extra in 0usize..60, theta in 0.0f64..PI,
                                   phi in 0.0f64..6.0, h in -1.0f64..1.0, t in 0.0f64..100.0) {
        let n = 2 * k - 1 + extra;
        let chain = ChainSpec::new(n, 1.0, h).unwrap();
        let params = XiParameters::new(theta, phi, k).unwrap();
        let f = fidelity_xi(&chain, &params, t, Variant::Overlap).unwrap().fidelity;
        prop_assert!((0.0..=1.0 + 1e-12).contains(&f));
        let direct = fidelity_direct(&chain, &make_xi_k(&chain, &params).unwrap(), t).unwrap().fidelity;
        prop_assert!((f - direct).abs() < 1e-12);
    }

    #[test]
    fn fidelity_is_periodic_in_the_field(k in 1usize..6, extra in 0usize..60, theta in 0.0f64..PI,
                                         h in 0.0f64..1.0, t in 0.5f64..100.0) {
        let n = 2 * k - 1 + extra;
        let params = XiParameters::new(theta, 0.3, k).unwrap();
        for variant in [Variant::Overlap, Variant::DoubledTail] {
            let a = fidelity_xi(&ChainSpec::new(n, 1.0, h).unwrap(), &params, t, variant).unwrap().fidelity;
            let b = fidelity_xi(&ChainSpec::new(n, 1.0, h + PI / t).unwrap(), &params, t, variant).unwrap().fidelity;
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn encoding_json_round_trips_exactly(n in 1usize..40, vacuum: bool, raw in raw_amplitudes()) {
        let enc = encoding(n, vacuum, &raw);
        let back = EncodingState::from_json(&enc.to_json()).unwrap();
        prop_assert_eq!(back.vacuum_amplitude(), enc.vacuum_amplitude());
        prop_assert_eq!(back.amplitudes(), enc.amplitudes());
    }

    #[test]
    fn sig17_round_trips(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        prop_assert_eq!(sig17(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn size_lists_round_trip(values in prop::collection::vec(1usize..100_000, 1..20)) {
        let text: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        prop_assert_eq!(parse_list(&text.join(",")).unwrap(), values);
    }

    #[test]
    fn windows_round_trip(lo in -1e6f64..1e6, width in 1e-6f64..1e6) {
        let hi = lo + width;
        prop_assume!(lo < hi);
        prop_assert_eq!(parse_window(&format!("{lo}:{hi}")).unwrap(), (lo, hi));
    }

    #[test]
    fn peak_dominates_its_coarse_scan(a in 0.1f64..3.0, b in 0.1f64..3.0, w in 0.2f64..5.0, hi in 1.0f64..50.0) {
        let objective = FnObjective(move |t: f64| a * (w * t).sin() + b * (0.37 * w * t).cos());
        let peak = find_peak(&objective, (0.0, hi)).unwrap();
        let steps = (hi / 0.1 + 1e-9).floor() as usize;
        for v in objective.values_on_grid(0.0, 0.1, steps + 1) {
            prop_assert!(peak.fidelity >= v);
        }
        prop_assert!(peak.t0 >= 0.0 && peak.t0 <= hi);
        prop_assert!((objective.value(peak.t0) - peak.fidelity).abs() < 1e-12);
    }
}
