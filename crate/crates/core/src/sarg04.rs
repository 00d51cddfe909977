//! SARG04 under the faked-states attack.
//!
//! SARG04 uses the BB84 states but carries the bit in the basis. A state
//! `x_l` has bit `x` and letter `l`; Bob measures basis `x` with detector
//! `a` registering `x_a` and detector `b` registering `x_b`. After Bob's
//! detection Alice announces the sent state together with a random state of
//! the opposite bit, and Bob keeps a bit only when his outcome rules out
//! exactly one of the two.

use num_traits::{Num, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bb84::{AttackForms, AttackOptions, ExactStats};
use crate::detmodel::{Brightness, ControlTag, Detector, MismatchSpec};
use crate::engine::{run_partitioned, AttackStats, RunSettings};
use crate::exact::{self, EtaForm, Exact};
use crate::polar::{self, ClickEfficiencies, EquatorState, MeasurementBasis, Outcome, Sign};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Letter {
    A,
    B,
}

impl Letter {
    pub const BOTH: [Letter; 2] = [Letter::A, Letter::B];

    pub fn other(self) -> Self {
        match self {
            Letter::A => Letter::B,
            Letter::B => Letter::A,
        }
    }

    /// Detector `a` is detector Zero, `b` is detector One.
    pub fn detector(self) -> Detector {
        match self {
            Letter::A => Detector::Zero,
            Letter::B => Detector::One,
        }
    }

    fn from_sign(sign: Sign) -> Self {
        match sign {
            Sign::Plus => Letter::A,
            Sign::Minus => Letter::B,
        }
    }

    /// t_a (tag Zero) leaves only detector `a` live; t_b leaves only `b`.
    pub fn control(self) -> ControlTag {
        ControlTag::favouring(self.detector())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SargState {
    pub bit: u8,
    pub letter: Letter,
}

impl SargState {
    pub const ALL: [SargState; 4] = [
        SargState::new(0, Letter::A),
        SargState::new(1, Letter::A),
        SargState::new(0, Letter::B),
        SargState::new(1, Letter::B),
    ];

    pub const fn new(bit: u8, letter: Letter) -> Self {
        Self { bit, letter }
    }

    /// 0_a = 0°, 1_a = 90°, 0_b = 180°, 1_b = 270°.
    pub fn equator(self) -> EquatorState {
        let letter = match self.letter {
            Letter::A => 0.0,
            Letter::B => 180.0,
        };
        EquatorState::new(90.0 * f64::from(self.bit) + letter)
    }

    pub fn is_orthogonal_to(self, other: SargState) -> bool {
        self.bit == other.bit && self.letter != other.letter
    }

    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::ALL[rng.random_range(0..4)]
    }
}

impl std::fmt::Display for SargState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let l = match self.letter {
            Letter::A => 'a',
            Letter::B => 'b',
        };
        write!(f, "{}_{l}", self.bit)
    }
}

/// Bob's measurement for bit value `bit`: `+` is `bit_a`, `-` is `bit_b`.
pub fn measurement(bit: u8) -> MeasurementBasis {
    MeasurementBasis::new(90.0 * f64::from(bit))
}

fn outcome_state(basis: u8, sign: Sign) -> SargState {
    SargState::new(basis, Letter::from_sign(sign))
}

/// The sent state and one state of the opposite bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnouncedPair {
    pub sent: SargState,
    pub other: SargState,
}

impl AnnouncedPair {
    pub fn new(sent: SargState, other_letter: Letter) -> Self {
        Self {
            sent,
            other: SargState::new(1 - sent.bit, other_letter),
        }
    }

    pub fn states(self) -> [SargState; 2] {
        [self.sent, self.other]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SiftOutcome {
    Discard,
    Keep(u8),
}

/// Keeps the bit of the announced state that Bob's outcome does not rule
/// out, when his outcome rules out exactly one of them.
pub fn sift(announced: AnnouncedPair, bob: SargState) -> SiftOutcome {
    let [x, y] = announced.states();
    match (bob.is_orthogonal_to(x), bob.is_orthogonal_to(y)) {
        (true, false) => SiftOutcome::Keep(y.bit),
        (false, true) => SiftOutcome::Keep(x.bit),
        _ => SiftOutcome::Discard,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FakedState {
    pub state: SargState,
    pub tag: ControlTag,
}

/// Flip bit and letter; send with t of the detected letter.
pub fn faked_state_for(eve: SargState) -> FakedState {
    FakedState {
        state: SargState::new(1 - eve.bit, eve.letter.other()),
        tag: eve.letter.control(),
    }
}

fn small<T: Num + Clone>(n: u32) -> T {
    (0..n).fold(T::zero(), |acc, _| acc + T::one())
}

/// Probability that a 0_a qubit reaches Bob and survives sifting:
/// `(1/8)[(1/4)η_a(t_a) + (1/4)η_a(t_b) + (13/4)η_b(t_a) + (1/4)η_b(t_b)]`.
pub fn p_arrive_given_0a<T: Num + Clone>(m: &MismatchSpec<T>) -> T {
    let sum = m.eta0_t0.clone() + m.eta0_t1.clone() + small::<T>(13) * m.eta1_t0.clone() + m.eta1_t1.clone();
    sum / small::<T>(32)
}

/// Arrival probability averaged over Alice's four states:
/// `(1/32)[η_a(t_a) + 7η_a(t_b) + 7η_b(t_a) + η_b(t_b)]`.
pub fn p_arrive<T: Num + Clone>(m: &MismatchSpec<T>) -> T {
    denominator(m) / small::<T>(32)
}

fn denominator<T: Num + Clone>(m: &MismatchSpec<T>) -> T {
    m.eta0_t0.clone()
        + small::<T>(7) * m.eta0_t1.clone()
        + small::<T>(7) * m.eta1_t0.clone()
        + m.eta1_t1.clone()
}

/// `[4η_a(t_b) + 4η_b(t_a)] / [η_a(t_a) + 7η_a(t_b) + 7η_b(t_a) + η_b(t_b)]`.
pub fn analytic_qber<T: Num + Clone>(m: &MismatchSpec<T>) -> Result<T> {
    let den = denominator(m);
    if den.is_zero() {
        return Err(Error::Undefined("SARG04 QBER"));
    }
    let four = small::<T>(4);
    Ok((four.clone() * m.eta0_t1.clone() + four * m.eta1_t0.clone()) / den)
}

/// Symmetric curves with brightness equalization: `4η / (1 + 7η)`.
pub fn symmetric_qber<T: Num + Clone + PartialOrd>(eta: T) -> Result<T> {
    if eta < T::zero() || eta > T::one() {
        return Err(Error::param("eta", "must lie in [0, 1]"));
    }
    Ok(small::<T>(4) * eta.clone() / (T::one() + small::<T>(7) * eta))
}

/// One line of the attack table for a fixed state sent by Alice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackTableRow {
    pub alice: SargState,
    /// Eve's detection and its probability (including her ½ basis choice).
    pub eve_detected: SargState,
    pub eve_weight: Exact,
    pub resent: FakedState,
    pub bob_basis: u8,
    pub bob_detector: Letter,
    /// Click probability given Eve's resent state and Bob's basis.
    pub probability: EtaForm,
    /// Sifting result for each of Alice's two possible announcements.
    pub sifting: [(AnnouncedPair, SiftOutcome); 2],
}

/// Every (Eve detection, Bob basis, Bob detector) branch for one sent
/// state, including zero-probability clicks.
pub fn attack_table(alice: SargState) -> Vec<AttackTableRow> {
    let half = exact::ratio(1, 2);
    let mut rows = Vec::new();
    for eve_basis in [0u8, 1] {
        for letter in Letter::BOTH {
            let eve_detected = SargState::new(eve_basis, letter);
            let p = polar::exact_overlap(alice.equator(), eve_detected.equator().angle())
                .expect("quarter turns");
            if p.is_zero() {
                continue;
            }
            let resent = faked_state_for(eve_detected);
            for bob_basis in [0u8, 1] {
                for bob_detector in Letter::BOTH {
                    let outcome = SargState::new(bob_basis, bob_detector);
                    let overlap = polar::exact_overlap(resent.state.equator(), outcome.equator().angle())
                        .expect("quarter turns");
                    let probability = EtaForm::term(overlap, bob_detector.detector(), resent.tag);
                    let sifting = Letter::BOTH.map(|other| {
                        let pair = AnnouncedPair::new(alice, other);
                        (pair, sift(pair, outcome))
                    });
                    rows.push(AttackTableRow {
                        alice,
                        eve_detected,
                        eve_weight: &half * &p,
                        resent,
                        bob_basis,
                        bob_detector,
                        probability,
                        sifting,
                    });
                }
            }
        }
    }
    rows
}

/// Arrival and error forms for one sent state.
pub fn attack_forms_given(alice: SargState) -> AttackForms {
    let quarter = exact::ratio(1, 4);
    let mut arrival = EtaForm::zero();
    let mut error = EtaForm::zero();
    for row in attack_table(alice) {
        // ½ for Bob's basis, ½ per announcement
        let w = &row.eve_weight * &quarter;
        for (_, outcome) in row.sifting {
            if let SiftOutcome::Keep(bit) = outcome {
                let term = row.probability.clone() * &w;
                if bit != alice.bit {
                    error += term.clone();
                }
                arrival += term;
            }
        }
    }
    AttackForms { arrival, error }
}

/// Forms averaged over Alice's four states.
pub fn attack_forms() -> AttackForms {
    let quarter = exact::ratio(1, 4);
    let mut arrival = EtaForm::zero();
    let mut error = EtaForm::zero();
    for alice in SargState::ALL {
        let f = attack_forms_given(alice);
        arrival += f.arrival * &quarter;
        error += f.error * &quarter;
    }
    AttackForms { arrival, error }
}

/// Exact oracle.
pub fn enumerate_attack(m: &MismatchSpec<Exact>, brightness: &Brightness<Exact>) -> Result<ExactStats> {
    attack_forms().evaluate(m, brightness)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SargRound {
    pub alice: SargState,
    pub eve: Option<SargState>,
    pub faked: Option<FakedState>,
    pub bob_basis: u8,
    pub bob: Option<SargState>,
    pub announced: AnnouncedPair,
    pub sift: SiftOutcome,
    pub eve_guess: Option<u8>,
}

fn eff_of(eff: &MismatchSpec, letter: Letter, tag: ControlTag) -> f64 {
    *eff.eta(letter.detector(), tag).expect("faked states carry t_a or t_b")
}

/// Eve's maximum a posteriori guess of the kept bit. She knows what she
/// sent, the announced pair and Bob's basis-independent keep decision.
fn eve_guess(faked: FakedState, announced: AnnouncedPair, eff: &MismatchSpec) -> u8 {
    let mut weight = [0.0f64; 2];
    for outcome in SargState::ALL {
        if let SiftOutcome::Keep(bit) = sift(announced, outcome) {
            weight[bit as usize] += polar::overlap_probability(faked.state.equator(), outcome.equator().angle())
                * eff_of(eff, outcome.letter, faked.tag);
        }
    }
    u8::from(weight[1] > weight[0])
}

pub fn play_round<R: Rng + ?Sized>(rng: &mut R, eff: &MismatchSpec, eve_efficiency: f64) -> SargRound {
    let alice = SargState::random(rng);
    let bob_basis = u8::from(rng.random::<bool>());
    let announced = AnnouncedPair::new(alice, if rng.random() { Letter::B } else { Letter::A });
    let mut round = SargRound {
        alice,
        eve: None,
        faked: None,
        bob_basis,
        bob: None,
        announced,
        sift: SiftOutcome::Discard,
        eve_guess: None,
    };
    if rng.random::<f64>() >= eve_efficiency {
        return round;
    }
    let eve_basis = u8::from(rng.random::<bool>());
    let Outcome::Click(sign) = polar::measure(alice.equator(), measurement(eve_basis), ClickEfficiencies::PERFECT, rng)
    else {
        unreachable!("Eve's replica is lossless");
    };
    let detected = outcome_state(eve_basis, sign);
    let faked = faked_state_for(detected);
    round.eve = Some(detected);
    round.faked = Some(faked);

    let clicks = ClickEfficiencies {
        plus: eff_of(eff, Letter::A, faked.tag),
        minus: eff_of(eff, Letter::B, faked.tag),
    };
    if let Outcome::Click(sign) = polar::measure(faked.state.equator(), measurement(bob_basis), clicks, rng) {
        let bob = outcome_state(bob_basis, sign);
        round.bob = Some(bob);
        round.sift = sift(announced, bob);
        if matches!(round.sift, SiftOutcome::Keep(_)) {
            round.eve_guess = Some(eve_guess(faked, announced, eff));
        }
    }
    round
}

/// Monte Carlo of the attack. Options are shared with BB84.
pub fn simulate(n: u64, m: &MismatchSpec, opts: &AttackOptions, settings: &RunSettings) -> Result<AttackStats> {
    if n == 0 {
        return Err(Error::param("rounds", "must be positive"));
    }
    if !(0.0..=1.0).contains(&opts.eve_efficiency) {
        return Err(Error::param("eve_efficiency", "must lie in [0, 1]"));
    }
    let eff = opts.brightness.apply(m);
    Ok(run_partitioned(n, settings, |rng, count| {
        let mut stats = AttackStats::default();
        for _ in 0..count {
            let round = play_round(rng, &eff, opts.eve_efficiency);
            stats.rounds += 1;
            if let Some(faked) = round.faked {
                stats.diagnostics.record_sent(faked.tag);
                if let Some(bob) = round.bob {
                    stats.diagnostics.record_click(faked.tag, bob.letter.detector());
                }
            }
            if let SiftOutcome::Keep(bit) = round.sift {
                stats.record_sifted(bit != round.alice.bit, round.eve_guess == Some(bit));
            }
        }
        stats
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, ratio};

    const A: Letter = Letter::A;
    const B: Letter = Letter::B;

    fn s(bit: u8, letter: Letter) -> SargState {
        SargState::new(bit, letter)
    }

    #[test]
    fn sift_examples() {
        let pair = AnnouncedPair::new(s(0, A), A);
        assert_eq!(pair.other, s(1, A));
        assert_eq!(sift(pair, s(1, B)), SiftOutcome::Keep(0));
        assert_eq!(sift(pair, s(0, A)), SiftOutcome::Discard);
        assert_eq!(sift(pair, s(0, B)), SiftOutcome::Keep(1));
        assert_eq!(sift(pair, s(1, A)), SiftOutcome::Discard);
    }

    #[test]
    fn never_keeps_when_both_compatible() {
        for sent in SargState::ALL {
            for other in Letter::BOTH {
                let pair = AnnouncedPair::new(sent, other);
                assert_ne!(pair.sent.bit, pair.other.bit);
                for bob in SargState::ALL {
                    let compatible = pair.states().iter().filter(|x| !bob.is_orthogonal_to(**x)).count();
                    let kept = matches!(sift(pair, bob), SiftOutcome::Keep(_));
                    assert_eq!(kept, compatible == 1, "{sent} {other:?} {bob}");
                }
            }
        }
    }

    #[test]
    fn faked_state_examples() {
        let cases = [
            (s(0, A), s(1, B), ControlTag::Zero),
            (s(1, A), s(0, B), ControlTag::Zero),
            (s(1, B), s(0, A), ControlTag::One),
            (s(0, B), s(1, A), ControlTag::One),
        ];
        for (eve, state, tag) in cases {
            assert_eq!(faked_state_for(eve), FakedState { state, tag });
        }
    }

    #[test]
    fn geometry() {
        for x in SargState::ALL {
            for y in SargState::ALL {
                let p = polar::overlap_probability(x.equator(), y.equator().angle());
                let expect = if x == y {
                    1.0
                } else if x.is_orthogonal_to(y) {
                    0.0
                } else {
                    0.5
                };
                assert_eq!(p, expect, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn closed_form_examples() {
        let ones = MismatchSpec::<Exact>::symmetric(int(1)).unwrap();
        assert_eq!(p_arrive_given_0a(&ones), ratio(1, 2));
        assert_eq!(p_arrive(&ones), ratio(1, 2));
        assert_eq!(analytic_qber(&ones).unwrap(), ratio(1, 2));

        let only_b_ta = MismatchSpec { eta0_t0: int(0), eta0_t1: int(0), eta1_t0: int(1), eta1_t1: int(0) };
        assert_eq!(p_arrive_given_0a(&only_b_ta), ratio(13, 32));

        let total = MismatchSpec::<Exact>::total();
        assert_eq!(p_arrive_given_0a(&total), ratio(1, 16));
        assert_eq!(p_arrive(&total), ratio(1, 16));
        assert!(analytic_qber(&total).unwrap().is_zero());

        let seventh = MismatchSpec { eta0_t0: int(0), eta0_t1: ratio(1, 7), eta1_t0: int(0), eta1_t1: int(0) };
        assert_eq!(p_arrive(&seventh), ratio(1, 32));

        let crosses = MismatchSpec::<f64>::symmetric(0.1).unwrap();
        assert!((analytic_qber(&crosses).unwrap() - 0.8 / 3.4).abs() < 1e-15);

        assert_eq!(symmetric_qber(ratio(1, 30)).unwrap(), ratio(4, 37));
        assert_eq!(symmetric_qber(int(0)).unwrap(), int(0));
        assert_eq!(symmetric_qber(int(1)).unwrap(), ratio(1, 2));
    }

    #[test]
    fn enumeration_coefficients_for_0a() {
        let f = attack_forms_given(s(0, A));
        assert_eq!(
            f.arrival.to_array(),
            [ratio(1, 32), ratio(1, 32), ratio(13, 32), ratio(1, 32)]
        );
    }

    #[test]
    fn averaged_forms_match_closed_forms() {
        let f = attack_forms();
        assert_eq!(f.arrival.to_array(), [ratio(1, 32), ratio(7, 32), ratio(7, 32), ratio(1, 32)]);
        assert_eq!(f.error.to_array(), [int(0), ratio(4, 32), ratio(4, 32), int(0)]);
    }

    #[test]
    fn zero_probability_row() {
        let rows = attack_table(s(0, A));
        let row = rows
            .iter()
            .find(|r| r.eve_detected == s(0, A) && r.bob_basis == 1 && r.bob_detector == A)
            .unwrap();
        assert_eq!(row.probability, EtaForm::zero());
    }

    #[test]
    fn total_mismatch_simulation_is_clean() {
        let stats = simulate(
            100_000,
            &MismatchSpec::total(),
            &AttackOptions::default(),
            &RunSettings::new(2, 2),
        )
        .unwrap();
        assert!(stats.sifted > 0);
        assert_eq!(stats.errors, 0);
        assert_eq!(stats.eve_knowledge(), Some(1.0));
    }

    #[test]
    fn seeded_runs_repeat() {
        let spec = MismatchSpec::symmetric(0.3).unwrap();
        let a = simulate(10_000, &spec, &AttackOptions::default(), &RunSettings::new(8, 1)).unwrap();
        let b = simulate(10_000, &spec, &AttackOptions::default(), &RunSettings::new(8, 4)).unwrap();
        assert_eq!(a, b);
    }
}
