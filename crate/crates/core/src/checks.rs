//! Closed forms checked against the exact oracles, plus the headline
//! numbers printed by `faked-states tables`.

use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::detmodel::{Brightness, ControlTag, MismatchSpec};
use crate::dpsk::{continuous_train_plan, EveDetectionRecord};
use crate::ekert::{self, MixtureWeights, Normalization, WeightTarget};
use crate::exact::{self, to_f64, Exact};
use crate::interferometry::{interfere, residual_energy, Pulse, PulseTrain};
use crate::phasetime::{self, PhaseTimeSymbol};
use crate::{bb84, sarg04, Result};

/// Number of random specs per rational identity.
pub const RANDOM_SPECS: usize = 100;
const SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name,
            passed,
            detail: detail.into(),
        }
    }
}

/// A mismatch spec with entries `k/d`, `d` in 1..=24.
pub fn random_rational_spec<R: Rng + ?Sized>(rng: &mut R) -> MismatchSpec<Exact> {
    let mut entry = || {
        let d = rng.random_range(1..=24i64);
        exact::ratio(rng.random_range(0..=d), d)
    };
    let (a, b, c, e) = (entry(), entry(), entry(), entry());
    MismatchSpec::try_new(a, b, c, e).expect("entries lie in [0, 1]")
}

fn same<T: PartialEq>(a: &Result<T>, b: &Result<T>) -> bool {
    match (a, b) {
        (Ok(x), Ok(y)) => x == y,
        (Err(_), Err(_)) => true,
        _ => false,
    }
}

fn count_failures(mut f: impl FnMut(&MismatchSpec<Exact>) -> bool) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    (0..RANDOM_SPECS)
        .filter(|_| !f(&random_rational_spec(&mut rng)))
        .count()
}

fn identity(name: &'static str, failures: usize) -> CheckResult {
    CheckResult::new(
        name,
        failures == 0,
        format!("{} of {RANDOM_SPECS} random specs agree", RANDOM_SPECS - failures),
    )
}

fn grid() -> Vec<Exact> {
    (0..=30).map(|k| exact::ratio(k, 30)).collect()
}

fn bb84_checks(out: &mut Vec<CheckResult>) {
    let unit = Brightness::<Exact>::unit();
    out.push(identity(
        "bb84 enumeration matches closed-form qber",
        count_failures(|m| {
            let oracle = bb84::enumerate_attack(m, &unit).map(|s| s.qber);
            same(&oracle, &bb84::analytic_qber(m))
        }),
    ));
    let bad = grid()
        .into_iter()
        .filter(|eta| {
            let m = MismatchSpec::symmetric(eta.clone()).unwrap();
            let b = Brightness::equalizing(&m).unwrap();
            let oracle = bb84::enumerate_attack(&m, &b).map(|s| s.qber);
            !same(&oracle, &bb84::symmetric_qber(eta.clone()))
        })
        .count();
    out.push(CheckResult::new(
        "bb84 symmetric qber under equalizing brightness",
        bad == 0,
        format!("{bad} mismatching grid points"),
    ));
    let cm = bb84::enumerate_attack_with_random_assignment(&MismatchSpec::total(), &unit);
    out.push(CheckResult::new(
        "bb84 random assignment exposes total mismatch",
        matches!(&cm, Ok(s) if s.qber == exact::ratio(1, 2)),
        match &cm {
            Ok(s) => format!("qber {}", s.qber),
            Err(e) => e.to_string(),
        },
    ));
}

fn sarg04_checks(out: &mut Vec<CheckResult>) {
    let unit = Brightness::<Exact>::unit();
    out.push(identity(
        "sarg04 enumeration matches closed-form qber",
        count_failures(|m| {
            let oracle = sarg04::enumerate_attack(m, &unit).map(|s| s.qber);
            same(&oracle, &sarg04::analytic_qber(m))
        }),
    ));
    out.push(identity(
        "sarg04 enumeration matches closed-form arrival",
        count_failures(|m| {
            let forms = sarg04::attack_forms();
            forms.arrival.evaluate(m) == sarg04::p_arrive(m)
        }),
    ));
    let given = sarg04::attack_forms_given(sarg04::SargState::ALL[0]);
    out.push(identity(
        "sarg04 arrival given 0_a matches closed form",
        count_failures(|m| given.arrival.evaluate(m) == sarg04::p_arrive_given_0a(m)),
    ));
    let bad = grid()
        .into_iter()
        .filter(|eta| {
            let m = MismatchSpec::symmetric(eta.clone()).unwrap();
            let b = Brightness::equalizing(&m).unwrap();
            let oracle = sarg04::enumerate_attack(&m, &b).map(|s| s.qber);
            let sarg = sarg04::symmetric_qber(eta.clone());
            let bb = bb84::symmetric_qber(eta.clone()).unwrap();
            !same(&oracle, &sarg) || sarg.map(|q| q < bb).unwrap_or(true)
        })
        .count();
    out.push(CheckResult::new(
        "sarg04 symmetric qber, never below bb84",
        bad == 0,
        format!("{bad} mismatching grid points"),
    ));
}

fn random_record<R: Rng + ?Sized>(len: usize, rng: &mut R) -> EveDetectionRecord {
    let mut entries = Vec::new();
    for w in 1..len as i64 {
        if rng.random::<f64>() < 0.3 {
            entries.push((w, u8::from(rng.random::<bool>())));
        }
    }
    EveDetectionRecord::new(len, entries).expect("windows are keyed")
}

/// Largest residual over the phase-time faked states and 200 random DPSK
/// plans.
pub fn worst_null_residual() -> f64 {
    let mut worst: f64 = 0.0;
    for eve in PhaseTimeSymbol::ALL {
        let train = phasetime::faked_state_for(eve, 1.0).expect("fixed faked states");
        worst = worst.max(residual_energy(&interfere(&train, 0.0), &phasetime::null_targets(eve)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for _ in 0..200 {
        let len = rng.random_range(2..=64);
        let record = random_record(len, &mut rng);
        match continuous_train_plan(&record, 1.0) {
            Ok(plan) if plan.validate(&record).is_ok() => worst = worst.max(plan.null_residual()),
            _ => return f64::INFINITY,
        }
    }
    worst
}

/// Largest `|E_out - E_in|` over random trains of 64 slots.
pub fn worst_energy_drift(trains: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 1);
    let mut worst: f64 = 0.0;
    for _ in 0..trains {
        let pulses: Vec<Option<Pulse>> = (0..64)
            .map(|_| {
                rng.random_bool(0.8).then(|| {
                    let a = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    Pulse::new(a, ControlTag::Normal)
                })
            })
            .collect();
        let train = PulseTrain::new(rng.random_range(-8..8), pulses, 1.0).expect("valid train");
        let out = interfere(&train, rng.random_range(0.0..std::f64::consts::TAU));
        worst = worst.max((out.energy() - train.energy()).abs());
    }
    worst
}

fn interference_checks(out: &mut Vec<CheckResult>) {
    let r = worst_null_residual();
    out.push(CheckResult::new(
        "faked pulse trains stay dark at null targets",
        r < 1e-24,
        format!("worst residual {r:.3e}"),
    ));
    let d = worst_energy_drift(200);
    out.push(CheckResult::new(
        "interferometer conserves energy",
        d < 1e-12,
        format!("worst drift {d:.3e}"),
    ));
}

fn ekert_checks(out: &mut Vec<CheckResult>) {
    let s2 = 2.0 * std::f64::consts::SQRT_2;
    let s_two = ekert::chsh(&ekert::mixture_correlations(
        &MixtureWeights::two_combination(),
        Normalization::PerPair,
    ));
    out.push(CheckResult::new(
        "ekert alpha/beta mix reaches the singlet S",
        matches!(s_two, Ok(s) if (s + s2).abs() < 1e-12),
        format!("{s_two:?}"),
    ));
    let m = ekert::mixture_correlations(&MixtureWeights::equal_terms(), Normalization::PerPair);
    let terms = m.chsh_terms();
    let ok = matches!(&terms, Ok(t) if t.iter().all(|e| (e.abs() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12));
    out.push(CheckResult::new(
        "ekert three-way mix gives equal CHSH terms",
        ok,
        format!("{terms:?}"),
    ));
    let solved = ekert::solve_weights(WeightTarget::EqualTerms(std::f64::consts::FRAC_1_SQRT_2));
    let closed = MixtureWeights::equal_terms().as_array();
    out.push(CheckResult::new(
        "ekert solver recovers the closed-form weights",
        matches!(&solved, Ok(w) if w.as_array().iter().zip(closed).all(|(a, b)| (a - b).abs() < 1e-9)),
        format!("{solved:?}"),
    ));
    let bad = (0..20)
        .map(|k| k as f64 / 20.0)
        .filter(|&p| {
            let w = MixtureWeights::new(1.0 - p, p, 0.0).unwrap();
            let s = ekert::chsh(&ekert::mixture_correlations(&w, Normalization::PerPair));
            !matches!((s, ekert::s_of_beta(p)), (Ok(a), Ok(b)) if (a - b).abs() < 1e-12)
        })
        .count();
    out.push(CheckResult::new(
        "ekert S as a function of the beta weight",
        bad == 0,
        format!("{bad} mismatching weights"),
    ));
}

/// Every analytic-versus-oracle identity.
pub fn verify() -> Vec<CheckResult> {
    let mut out = Vec::new();
    bb84_checks(&mut out);
    sarg04_checks(&mut out);
    interference_checks(&mut out);
    ekert_checks(&mut out);
    out
}

pub fn write_checks<W: Write>(results: &[CheckResult], mut out: W) -> Result<()> {
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    for r in results {
        let verdict = if r.passed { "PASS" } else { "FAIL" };
        writeln!(out, "{verdict}  {:<width$}  {}", r.name, r.detail)?;
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    writeln!(out, "{} checks, {failed} failed", results.len())?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableEntry {
    pub quantity: String,
    /// Exact rational, when there is one.
    pub exact: Option<String>,
    pub value: f64,
}

fn entry(quantity: impl Into<String>, exact: Option<&Exact>, value: f64) -> TableEntry {
    TableEntry {
        quantity: quantity.into(),
        exact: exact.map(ToString::to_string),
        value,
    }
}

/// Threshold QBERs and the Ekert mixtures.
pub fn tables() -> Result<Vec<TableEntry>> {
    let mut rows = Vec::new();
    let q = bb84::symmetric_qber(exact::ratio(1, 15))?;
    rows.push(entry("bb84 qber at eta=1/15", Some(&q), to_f64(&q)));
    let q = sarg04::symmetric_qber(exact::ratio(1, 30))?;
    rows.push(entry("sarg04 qber at eta=1/30", Some(&q), to_f64(&q)));

    for (name, w) in [
        ("two-combination", MixtureWeights::two_combination()),
        ("equal-terms", MixtureWeights::equal_terms()),
    ] {
        let [a, b, g] = w.as_array();
        rows.push(entry(format!("ekert {name} weight alpha"), None, a));
        rows.push(entry(format!("ekert {name} weight beta"), None, b));
        rows.push(entry(format!("ekert {name} weight gamma"), None, g));
        let m = ekert::mixture_correlations(&w, Normalization::PerPair);
        for (pair, e) in ekert::CHSH_PAIRS.iter().zip(m.chsh_terms()?) {
            rows.push(entry(format!("ekert {name} E({pair})"), None, e));
        }
        rows.push(entry(format!("ekert {name} S"), None, ekert::chsh(&m)?));
    }
    let rounded = MixtureWeights::new(0.586, 0.414, 0.0)?;
    let m = ekert::mixture_correlations(&rounded, Normalization::PerPair);
    rows.push(entry(
        "ekert weights (0.586, 0.414, 0) E(a1b3)",
        None,
        m.e(ekert::BasisPair::new(1, 3)).unwrap_or(f64::NAN),
    ));
    rows.push(entry("ekert weights (0.586, 0.414, 0) S", None, ekert::chsh(&m)?));
    Ok(rows)
}

pub fn write_tables<W: Write>(rows: &[TableEntry], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["quantity", "exact", "value"])?;
    for r in rows {
        w.write_record([r.quantity.as_str(), r.exact.as_deref().unwrap_or(""), &r.value.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_identities_hold() {
        for r in verify() {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }

    #[test]
    fn tables_carry_thresholds() {
        let rows = tables().unwrap();
        assert_eq!(rows[0].exact.as_deref(), Some("1/9"));
        assert_eq!(rows[1].exact.as_deref(), Some("4/37"));
    }
}
