use serde::Serialize;

use super::config::{BrightnessMode, Mode, Protocol, ScenarioConfig, SweepParam};
use super::{Diagnostics, RunSettings};
use crate::bb84::{self, AttackOptions};
use crate::detmodel::{ControlTag, Detector, MismatchSpec};
use crate::dpsk::{self, DpskOptions};
use crate::ekert::{self, BasisPair, MixtureWeights, Normalization, KEY_PAIRS};
use crate::exact::to_f64;
use crate::phasetime::{self, PhaseTimeOptions};
use crate::sarg04;
use crate::{Error, Result};

/// Protocol-specific results beyond the common columns.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Extra {
    None,
    TimeShift {
        arrival_rate: Option<f64>,
        expected_accuracy: Option<f64>,
    },
    PhaseTime {
        /// Clicks per detection slot S0..S4 and port.
        histogram: [[u64; 2]; 5],
    },
    Ekert {
        weights: [f64; 3],
        normalization: Normalization,
        chsh_sigma: Option<f64>,
        expected_chsh: Option<f64>,
        /// `(pair, coincidences per emitted pair, E)` for all nine pairs.
        correlations: Vec<(String, f64, Option<f64>)>,
    },
}

/// One output row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub protocol: &'static str,
    pub mode: &'static str,
    pub sweep_param: Option<&'static str>,
    pub sweep_value: Option<f64>,
    /// `[η₀(t₀), η₀(t₁), η₁(t₀), η₁(t₁)]`
    pub eta: [f64; 4],
    pub seed: u64,
    pub rounds: u64,
    pub sifted: u64,
    pub errors: u64,
    pub qber: Option<f64>,
    pub qber_ci: Option<(f64, f64)>,
    pub expected_qber: Option<f64>,
    pub eve_knowledge: Option<f64>,
    pub coincidence_rate: Option<f64>,
    pub chsh: Option<f64>,
    pub diagnostics: Option<Diagnostics>,
    pub extra: Extra,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutcome {
    pub records: Vec<RunRecord>,
}

fn settings(c: &ScenarioConfig) -> RunSettings {
    RunSettings::new(c.seed, c.workers)
}

fn eta_array(m: &MismatchSpec) -> [f64; 4] {
    [m.eta0_t0, m.eta0_t1, m.eta1_t0, m.eta1_t1]
}

fn base_record(c: &ScenarioConfig, spec: &MismatchSpec) -> RunRecord {
    RunRecord {
        protocol: c.protocol.name(),
        mode: c.mode.name(),
        sweep_param: None,
        sweep_value: None,
        eta: eta_array(spec),
        seed: c.seed,
        rounds: 0,
        sifted: 0,
        errors: 0,
        qber: None,
        qber_ci: None,
        expected_qber: None,
        eve_knowledge: None,
        coincidence_rate: None,
        chsh: None,
        diagnostics: None,
        extra: Extra::None,
    }
}

fn fill_attack(rec: &mut RunRecord, stats: &crate::engine::AttackStats) {
    rec.rounds = stats.rounds;
    rec.sifted = stats.sifted;
    rec.errors = stats.errors;
    rec.qber = stats.qber();
    rec.qber_ci = stats.qber_estimate().ok().map(|q| (q.low, q.high));
    rec.eve_knowledge = stats.eve_knowledge();
    rec.coincidence_rate = stats.coincidence_rate();
    rec.diagnostics = Some(stats.diagnostics.clone());
}

/// Accuracy of guessing the more efficient detector at each shift.
fn time_shift_accuracy(m: &MismatchSpec, p_t0: f64) -> Option<f64> {
    let mut hit = 0.0;
    let mut arrive = 0.0;
    for (tag, p) in [(ControlTag::Zero, p_t0), (ControlTag::One, 1.0 - p_t0)] {
        let e0 = *m.eta(Detector::Zero, tag)?;
        let e1 = *m.eta(Detector::One, tag)?;
        hit += p * e0.max(e1);
        arrive += p * (e0 + e1);
    }
    (arrive > 0.0).then(|| hit / arrive)
}

/// Runs a single scenario, ignoring any sweep section.
pub fn run(c: &ScenarioConfig) -> Result<RunRecord> {
    let spec = c.detectors.spec().clone();
    let mut rec = base_record(c, &spec);
    match c.protocol {
        Protocol::Bb84 | Protocol::Sarg04 => {
            let brightness = c.brightness_for(&spec)?;
            let exact_b = brightness.to_exact();
            let opts = AttackOptions {
                brightness,
                eve_efficiency: c.eve_efficiency,
            };
            let exact_spec = spec.to_exact();
            let (stats, expected) = match (c.protocol, c.mode) {
                (Protocol::Bb84, Mode::Attack) => (
                    bb84::simulate(c.rounds, &spec, &opts, &settings(c))?,
                    bb84::enumerate_attack(&exact_spec, &exact_b).ok(),
                ),
                (Protocol::Bb84, Mode::Countermeasure) => (
                    bb84::simulate_with_random_assignment(c.rounds, &spec, &opts, &settings(c))?,
                    bb84::enumerate_attack_with_random_assignment(&exact_spec, &exact_b).ok(),
                ),
                (Protocol::Bb84, Mode::TimeShift) => {
                    let ts = bb84::time_shift_simulate(c.rounds, &spec, c.p_shift_to_t0, &settings(c))?;
                    rec.rounds = ts.rounds;
                    rec.sifted = ts.arrivals;
                    rec.errors = ts.errors;
                    rec.qber = ts.qber();
                    rec.qber_ci = super::qber_estimate(ts.errors, ts.arrivals).ok().map(|q| (q.low, q.high));
                    rec.expected_qber = Some(0.0);
                    rec.eve_knowledge = ts.guess_accuracy();
                    rec.extra = Extra::TimeShift {
                        arrival_rate: ts.arrival_rate(),
                        expected_accuracy: time_shift_accuracy(&spec, c.p_shift_to_t0),
                    };
                    return Ok(rec);
                }
                (Protocol::Sarg04, Mode::Attack) => (
                    sarg04::simulate(c.rounds, &spec, &opts, &settings(c))?,
                    sarg04::enumerate_attack(&exact_spec, &exact_b).ok(),
                ),
                _ => unreachable!("mode checked while resolving the config"),
            };
            fill_attack(&mut rec, &stats);
            rec.expected_qber = expected.map(|e| to_f64(&e.qber));
        }
        Protocol::Phasetime => {
            let opts = PhaseTimeOptions {
                mu: c.mu,
                brightness: c.brightness_for(&spec)?,
                normal: c.normal,
                attack: c.mode == Mode::Attack,
            };
            let st = phasetime::simulate(c.rounds, &spec, &opts, &settings(c))?;
            fill_attack(&mut rec, &st.stats);
            rec.extra = Extra::PhaseTime {
                histogram: st.histogram,
            };
        }
        Protocol::Dpsk => {
            let brightness = match (c.mode, &c.brightness) {
                (Mode::Honest, BrightnessMode::Compensating) => crate::detmodel::Brightness::unit(),
                _ => c.brightness_for(&spec)?,
            };
            let opts = DpskOptions {
                frame_len: c.frame_len,
                mu: c.mu,
                brightness,
                normal: c.normal,
                attack: c.mode == Mode::Attack,
            };
            let st = dpsk::simulate(c.rounds, &spec, &opts, &settings(c))?;
            fill_attack(&mut rec, &st);
        }
        Protocol::Ekert => {
            let st = ekert::simulate(c.rounds, &c.weights, &settings(c))?;
            fill_attack(&mut rec, &st.stats);
            let (s, sigma) = match st.chsh() {
                Ok((s, sigma)) => (Some(s), Some(sigma)),
                Err(_) => (None, None),
            };
            rec.chsh = s;
            let model = ekert::mixture_correlations(&c.weights, c.normalization);
            let (mut err, mut weight) = (0.0, 0.0);
            for p in KEY_PAIRS {
                if let Some(e) = model.e(p) {
                    err += model.d(p) * (1.0 + e) / 2.0;
                    weight += model.d(p);
                }
            }
            rec.expected_qber = (weight > 0.0).then(|| err / weight);
            let empirical = st.correlation_matrix();
            rec.extra = Extra::Ekert {
                weights: c.weights.as_array(),
                normalization: c.normalization,
                chsh_sigma: sigma,
                expected_chsh: ekert::chsh(&model).ok(),
                correlations: BasisPair::all()
                    .map(|p| (p.to_string(), empirical.d(p), empirical.e(p)))
                    .collect(),
            };
        }
    }
    if c.mode == Mode::Honest {
        rec.eve_knowledge = None;
    }
    Ok(rec)
}

fn apply_param(c: &mut ScenarioConfig, param: SweepParam, value: f64) -> Result<()> {
    match param {
        SweepParam::Eta => {
            c.detectors = super::DetectorSetup::Mismatch(MismatchSpec::symmetric(value)?);
        }
        SweepParam::Mu => c.mu = value,
        SweepParam::EveEfficiency => c.eve_efficiency = value,
        SweepParam::PShift => c.p_shift_to_t0 = value,
        SweepParam::PBeta => {
            c.weights = MixtureWeights::new(1.0 - value, value, 0.0)?;
        }
    }
    Ok(())
}

/// Runs every point of the configured sweep, or the single scenario when
/// there is none. Point `i` is seeded with `seed + i`.
pub fn sweep(c: &ScenarioConfig) -> Result<RunOutcome> {
    let Some(spec) = c.sweep else {
        return Ok(RunOutcome {
            records: vec![run(c)?],
        });
    };
    let mut records = Vec::with_capacity(spec.steps);
    for (i, value) in spec.values().into_iter().enumerate() {
        let mut point = c.clone();
        point.seed = c.seed.wrapping_add(i as u64);
        apply_param(&mut point, spec.param, value)
            .map_err(|e| Error::config("sweep", format!("at {value}: {e}")))?;
        let mut rec = run(&point)?;
        rec.sweep_param = Some(spec.param.name());
        rec.sweep_value = Some(value);
        records.push(rec);
    }
    Ok(RunOutcome { records })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ScenarioConfig {
        ScenarioConfig::from_toml(text).unwrap()
    }

    #[test]
    fn bb84_total_mismatch_is_silent() {
        let rec = run(&cfg("[scenario]\nprotocol = \"bb84\"\nrounds = 20000\nworkers = 2\n")).unwrap();
        assert_eq!(rec.errors, 0);
        assert_eq!(rec.expected_qber, Some(0.0));
        assert_eq!(rec.eve_knowledge, Some(1.0));
    }

    #[test]
    fn sweep_rows_and_seeds() {
        let c = cfg("[scenario]\nprotocol = \"sarg04\"\nrounds = 4000\nseed = 10\n[sweep]\nparam = \"eta\"\nfrom = 0\nto = 0.2\nsteps = 5\n");
        let out = sweep(&c).unwrap();
        assert_eq!(out.records.len(), 5);
        assert_eq!(out.records[3].seed, 13);
        assert_eq!(out.records[4].sweep_value, Some(0.2));
        assert_eq!(out.records[0].qber, Some(0.0));
    }

    #[test]
    fn time_shift_accuracy_oracle() {
        let m = MismatchSpec::new(1.0, 0.25, 0.25, 1.0).unwrap();
        assert!((time_shift_accuracy(&m, 0.5).unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(time_shift_accuracy(&MismatchSpec::total(), 0.3), Some(1.0));
    }
}
