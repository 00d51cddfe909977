use faked_states::detmodel::{
    choose_control_values, linear_grid, Brightness, ControlValue, DetectorPair, EfficiencyCurve, LabelConvention,
    MismatchSpec,
};
use faked_states::ekert::{self, BasisPair, MixtureWeights, Normalization};
use faked_states::engine::{wilson_interval, AttackStats, RunSettings, Z95};
use faked_states::exact::{self, Exact};
use faked_states::polar::{click_probabilities, overlap_probability, ClickEfficiencies, EquatorState, MeasurementBasis};
use faked_states::sarg04::{self, AnnouncedPair, Letter, SargState, SiftOutcome};
use faked_states::{bb84, dpsk, phasetime};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn q(n: i64, d: i64) -> Exact {
    exact::ratio(n, d)
}

fn rational() -> impl Strategy<Value = Exact> {
    (1i64..=48).prop_flat_map(|d| (0..=d).prop_map(move |n| q(n, d)))
}

fn rational_spec() -> impl Strategy<Value = MismatchSpec<Exact>> {
    (rational(), rational(), rational(), rational())
        .prop_map(|(a, b, c, d)| MismatchSpec::try_new(a, b, c, d).unwrap())
}

fn float_spec() -> impl Strategy<Value = MismatchSpec> {
    (0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0)
        .prop_map(|(a, b, c, d)| MismatchSpec::new(a, b, c, d).unwrap())
}

fn weighted_sum(c: [i64; 4], m: &MismatchSpec<Exact>) -> Exact {
    q(c[0], 1) * &m.eta0_t0 + q(c[1], 1) * &m.eta0_t1 + q(c[2], 1) * &m.eta1_t0 + q(c[3], 1) * &m.eta1_t1
}

fn check_stats(s: &AttackStats) -> Result<(), TestCaseError> {
    prop_assert!(s.errors <= s.sifted);
    prop_assert!(s.sifted <= s.rounds);
    prop_assert!(s.diagnostics.is_consistent());
    let sent: u64 = s.diagnostics.per_control.iter().map(|c| c.sent).sum();
    let clicked: u64 = s.diagnostics.per_control.iter().map(|c| c.clicked).sum();
    prop_assert_eq!(clicked, s.diagnostics.total_clicks);
    prop_assert!(s.diagnostics.per_control.iter().all(|c| c.clicked <= c.sent) || sent == 0);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn curves_stay_in_unit_interval(
        center in -5.0f64..5.0,
        width in 0.01f64..5.0,
        peak in 0.0f64..=1.0,
        t in -20.0f64..20.0,
    ) {
        let curve = EfficiencyCurve::gaussian(center, width, peak).unwrap();
        let t = ControlValue::new(t).unwrap();
        let e = curve.efficiency_at(t).unwrap();
        prop_assert!((0.0..=1.0).contains(&e));
        prop_assert_eq!(e.to_bits(), curve.efficiency_at(t).unwrap().to_bits());
    }

    #[test]
    fn chosen_controls_minimize_ratios(
        c0 in -2.0f64..2.0, c1 in -2.0f64..2.0,
        w0 in 0.1f64..2.0, w1 in 0.1f64..2.0,
        steps in 2usize..60,
    ) {
        let pair = DetectorPair::new(
            EfficiencyCurve::gaussian(c0, w0, 1.0).unwrap(),
            EfficiencyCurve::gaussian(c1, w1, 1.0).unwrap(),
            LabelConvention::default(),
        ).unwrap();
        let grid = linear_grid(-3.0, 3.0, steps).unwrap();
        let choice = choose_control_values(&pair, &grid).unwrap();
        let s = &choice.spec;
        for &t in &grid {
            let e0 = pair.efficiency(faked_states::detmodel::Detector::Zero, t).unwrap();
            let e1 = pair.efficiency(faked_states::detmodel::Detector::One, t).unwrap();
            if e1 > 0.0 {
                prop_assert!(s.eta0_t1 / s.eta1_t1 <= e0 / e1);
            }
            if e0 > 0.0 {
                prop_assert!(s.eta1_t0 / s.eta0_t0 <= e1 / e0);
            }
        }
    }

    #[test]
    fn brightness_never_exceeds_unit_efficiency(
        spec in float_spec(),
        t0 in 0.0f64..50.0,
        t1 in 0.0f64..50.0,
    ) {
        let b = Brightness { normal: 1.0, t0, t1 };
        let applied = b.apply(&spec);
        for v in [applied.eta0_t0, applied.eta0_t1, applied.eta1_t0, applied.eta1_t1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert_eq!(applied.eta0_t0, (t0 * spec.eta0_t0).min(1.0));
    }

    #[test]
    fn click_probabilities_partition_unity(
        state in 0.0f64..360.0,
        axis in 0.0f64..360.0,
        plus in 0.0f64..=1.0,
        minus in 0.0f64..=1.0,
    ) {
        let (p, m, none) = click_probabilities(
            EquatorState::new(state),
            MeasurementBasis::new(axis),
            ClickEfficiencies { plus, minus },
        );
        prop_assert!(p >= 0.0 && m >= 0.0 && none >= -1e-15);
        prop_assert!((p + m + none - 1.0).abs() <= 1e-15);
        let s = EquatorState::new(state);
        prop_assert!((overlap_probability(s, axis) + overlap_probability(s, axis + 180.0) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn bb84_enumeration_is_the_closed_form(m in rational_spec()) {
        let num = weighted_sum([0, 2, 2, 0], &m);
        let den = weighted_sum([1, 3, 3, 1], &m);
        let enumerated = bb84::enumerate_attack(&m, &Brightness::unit());
        match enumerated {
            Ok(stats) => {
                prop_assert_eq!(stats.qber.clone(), num / &den);
                prop_assert!(Exact::zero() <= stats.error && stats.error <= stats.arrival);
                prop_assert!(stats.arrival <= Exact::one());
                prop_assert_eq!(Ok(stats.qber), bb84::analytic_qber(&m).map_err(|_| ()));
            }
            Err(_) => prop_assert!(den.is_zero()),
        }
    }

    #[test]
    fn sarg04_enumeration_is_the_closed_form(m in rational_spec()) {
        let num = weighted_sum([0, 4, 4, 0], &m);
        let den = weighted_sum([1, 7, 7, 1], &m);
        match sarg04::enumerate_attack(&m, &Brightness::unit()) {
            Ok(stats) => {
                prop_assert_eq!(stats.qber.clone(), num / &den);
                prop_assert!(Exact::zero() <= stats.error && stats.error <= stats.arrival);
                prop_assert!(stats.arrival <= Exact::one());
            }
            Err(_) => prop_assert!(den.is_zero()),
        }
    }

    #[test]
    fn symmetric_forms_match_equalized_enumeration(eta in rational()) {
        prop_assume!(!eta.is_zero());
        let spec = MismatchSpec::symmetric(eta.clone()).unwrap();
        let b = Brightness::equalizing(&spec).unwrap();
        prop_assert_eq!(bb84::symmetric_qber(eta.clone()).unwrap(), bb84::enumerate_attack(&spec, &b).unwrap().qber);
        prop_assert_eq!(sarg04::symmetric_qber(eta.clone()).unwrap(), sarg04::enumerate_attack(&spec, &b).unwrap().qber);
    }

    #[test]
    fn sarg04_never_beats_bb84(eta in rational()) {
        prop_assume!(!eta.is_zero());
        prop_assert!(sarg04::symmetric_qber(eta.clone()).unwrap() >= bb84::symmetric_qber(eta).unwrap());
    }

    #[test]
    fn wilson_interval_brackets_the_estimate(n in 1u64..100_000, frac in 0.0f64..=1.0) {
        let k = ((n as f64) * frac).floor() as u64;
        let (lo, hi) = wilson_interval(k, n, Z95);
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p + 1e-12);
        prop_assert!(p - 1e-12 <= hi && hi <= 1.0);
    }

    #[test]
    fn simplex_mixtures_are_physical(a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0) {
        prop_assume!(a + b + c > 1e-6);
        let s = a + b + c;
        let w = MixtureWeights::new(a / s, b / s, 1.0 - a / s - b / s).unwrap();
        let m = ekert::mixture_correlations(&w, Normalization::PerPair);
        for pair in BasisPair::all() {
            prop_assert!(m.d(pair) >= 0.0);
            if let Some(e) = m.e(pair) {
                prop_assert!(e.abs() <= 1.0 + 1e-12, "{pair:?}: {e}");
            }
        }
        // global normalization shares one denominator, so only |E| mean(d) <= d holds
        let g = ekert::mixture_correlations(&w, Normalization::Global);
        let mean = BasisPair::all().map(|p| g.d(p)).sum::<f64>() / 9.0;
        for pair in BasisPair::all() {
            if let Some(e) = g.e(pair) {
                prop_assert!(e.abs() * mean <= g.d(pair) + 1e-12, "{pair:?}: {e}");
            }
        }
        for pair in BasisPair::all().filter(|p| p.is_key()) {
            if let Some(e) = m.e(pair) {
                prop_assert!((e + 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn s_of_beta_is_chsh_of_the_mixture(p in 0.0f64..1.0) {
        let w = MixtureWeights::new(1.0 - p, p, 0.0).unwrap();
        let s = ekert::chsh(&ekert::mixture_correlations(&w, Normalization::PerPair)).unwrap();
        prop_assert!((s - ekert::s_of_beta(p).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn dpsk_plans_honour_random_records(
        len in 2usize..64,
        raw in prop::collection::vec((1i64..64, 0u8..2), 0..40),
        mu in 0.01f64..1.0,
    ) {
        let mut record = dpsk::EveDetectionRecord::new(len, []).unwrap();
        for (w, b) in raw {
            if w < len as i64 && record.get(w).is_none() {
                record.insert(w, b).unwrap();
            }
        }
        let plan = dpsk::continuous_train_plan(&record, mu).unwrap();
        plan.validate(&record).unwrap();
        prop_assert!(plan.null_residual() < 1e-24 * len as f64);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn worker_count_never_changes_results(seed in any::<u64>(), workers in 2usize..7) {
        let one = RunSettings::new(seed, 1);
        let many = RunSettings::new(seed, workers);
        let spec = MismatchSpec::symmetric(0.1).unwrap();
        let opts = bb84::AttackOptions::default();

        let a = bb84::simulate(10_000, &spec, &opts, &one).unwrap();
        prop_assert_eq!(&a, &bb84::simulate(10_000, &spec, &opts, &many).unwrap());
        check_stats(&a)?;

        let a = sarg04::simulate(10_000, &spec, &opts, &one).unwrap();
        prop_assert_eq!(&a, &sarg04::simulate(10_000, &spec, &opts, &many).unwrap());
        check_stats(&a)?;

        let total = MismatchSpec::total();
        let pt = phasetime::PhaseTimeOptions::default();
        let a = phasetime::simulate(10_000, &total, &pt, &one).unwrap();
        prop_assert_eq!(&a, &phasetime::simulate(10_000, &total, &pt, &many).unwrap());
        check_stats(&a.stats)?;

        let dp = dpsk::DpskOptions { frame_len: 16, ..Default::default() };
        let a = dpsk::simulate(5_000, &total, &dp, &one).unwrap();
        prop_assert_eq!(&a, &dpsk::simulate(5_000, &total, &dp, &many).unwrap());
        check_stats(&a)?;

        let w = MixtureWeights::equal_terms();
        let a = ekert::simulate(10_000, &w, &one).unwrap();
        prop_assert_eq!(&a, &ekert::simulate(10_000, &w, &many).unwrap());
        check_stats(&a.stats)?;
    }
}

#[test]
fn sift_keeps_only_unambiguous_outcomes() {
    for sent in SargState::ALL {
        for letter in [Letter::A, Letter::B] {
            let announced = AnnouncedPair::new(sent, letter);
            for bob in SargState::ALL {
                let [x, y] = announced.states();
                let rules_out = [bob.is_orthogonal_to(x), bob.is_orthogonal_to(y)];
                let got = sarg04::sift(announced, bob);
                match rules_out {
                    [true, false] => assert_eq!(got, SiftOutcome::Keep(y.bit)),
                    [false, true] => assert_eq!(got, SiftOutcome::Keep(x.bit)),
                    _ => assert_eq!(got, SiftOutcome::Discard, "{sent} {bob}"),
                }
                // an outcome Alice's own state can produce never keeps the wrong bit
                let possible = overlap_probability(sent.equator(), bob.equator().angle()) > 0.0;
                if let (true, SiftOutcome::Keep(b)) = (possible, got) {
                    assert_eq!(b, sent.bit);
                }
            }
        }
    }
}

#[test]
fn combination_variants_commute() {
    for combo in ekert::standard_combinations() {
        let swapped = combo.swapped();
        for pair in BasisPair::all() {
            let a = ekert::combination_correlation(&combo, pair);
            let b = ekert::combination_correlation(&swapped, pair);
            assert_eq!(a.d, b.d);
            assert_eq!(a.e, b.e);
            let alice_plus = a.joint[0][0] + a.joint[0][1];
            let bob_plus = a.joint[0][0] + a.joint[1][0];
            assert!((2.0 * alice_plus - a.d).abs() < 1e-12, "{} {pair:?}", combo.name);
            assert!((2.0 * bob_plus - a.d).abs() < 1e-12, "{} {pair:?}", combo.name);
        }
    }
}
