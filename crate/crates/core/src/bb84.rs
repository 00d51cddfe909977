//! BB84 under the faked-states attack.
//!
//! Eve measures every qubit with a replica of Bob's receiver. Having seen
//! bit `d` in basis `B`, she resends bit `1-d` in the other basis with the
//! control value t_d, which blinds Bob's detector for `1-d`. Bob then clicks
//! only when he measures in Eve's basis, and only with Eve's bit, so every
//! wrong-basis interception is removed by sifting.

use num_traits::{Num, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::detmodel::{Brightness, ControlTag, Detector, MismatchSpec};
use crate::engine::{run_partitioned, AttackStats, Merge, RunSettings};
use crate::exact::{self, EtaForm, Exact};
use crate::polar::{self, ClickEfficiencies, EquatorState, MeasurementBasis, Outcome, Sign};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub const BOTH: [Basis; 2] = [Basis::Z, Basis::X];

    pub fn other(self) -> Self {
        match self {
            Basis::Z => Basis::X,
            Basis::X => Basis::Z,
        }
    }

    /// Z states at 0°/180°, X states at 90°/270°.
    pub fn measurement(self) -> MeasurementBasis {
        match self {
            Basis::Z => MeasurementBasis::new(0.0),
            Basis::X => MeasurementBasis::new(90.0),
        }
    }

    pub fn state(self, bit: u8) -> EquatorState {
        EquatorState::new(self.measurement().eigen_angle(Sign::from_bit(bit)))
    }

    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.random() {
            Basis::X
        } else {
            Basis::Z
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FakedState {
    pub basis: Basis,
    pub bit: u8,
    pub tag: ControlTag,
}

impl FakedState {
    pub fn state(self) -> EquatorState {
        self.basis.state(self.bit)
    }
}

/// Opposite bit in the opposite basis, sent with the control value that
/// leaves only the detector for Eve's own bit live.
pub fn faked_state_for(eve_basis: Basis, eve_bit: u8) -> FakedState {
    FakedState {
        basis: eve_basis.other(),
        bit: 1 - eve_bit,
        tag: ControlTag::favouring(Detector::from_bit(eve_bit)),
    }
}

fn two<T: Num + Clone>() -> T {
    T::one() + T::one()
}

/// QBER of the attack for a general mismatch:
/// `[2η₀(t₁) + 2η₁(t₀)] / [η₀(t₀) + 3η₀(t₁) + 3η₁(t₀) + η₁(t₁)]`.
pub fn analytic_qber<T: Num + Clone>(m: &MismatchSpec<T>) -> Result<T> {
    let three = two::<T>() + T::one();
    let num = two::<T>() * m.eta0_t1.clone() + two::<T>() * m.eta1_t0.clone();
    let den = m.eta0_t0.clone()
        + three.clone() * m.eta0_t1.clone()
        + three * m.eta1_t0.clone()
        + m.eta1_t1.clone();
    if den.is_zero() {
        return Err(Error::Undefined("BB84 QBER"));
    }
    Ok(num / den)
}

/// Symmetric curves with brightness equalization: `2η / (1 + 3η)`.
pub fn symmetric_qber<T: Num + Clone + PartialOrd>(eta: T) -> Result<T> {
    if eta < T::zero() || eta > T::one() {
        return Err(Error::param("eta", "must lie in [0, 1]"));
    }
    let three = two::<T>() + T::one();
    Ok(two::<T>() * eta.clone() / (T::one() + three * eta))
}

/// Exact arrival and error probabilities per round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactStats {
    /// P(Bob clicks and the bit survives sifting).
    pub arrival: Exact,
    /// P(the sifted bit differs from Alice's).
    pub error: Exact,
    pub qber: Exact,
}

impl ExactStats {
    pub(crate) fn from_probabilities(arrival: Exact, error: Exact) -> Result<Self> {
        if arrival.is_zero() {
            return Err(Error::Undefined("QBER (zero arrival probability)"));
        }
        let qber = &error / &arrival;
        Ok(Self {
            arrival,
            error,
            qber,
        })
    }
}

/// Arrival and error probabilities as linear forms in the four
/// brightness-adjusted efficiencies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackForms {
    pub arrival: EtaForm,
    pub error: EtaForm,
}

impl AttackForms {
    pub fn evaluate(&self, m: &MismatchSpec<Exact>, brightness: &Brightness<Exact>) -> Result<ExactStats> {
        let eff = brightness.apply(m);
        ExactStats::from_probabilities(self.arrival.evaluate(&eff), self.error.evaluate(&eff))
    }
}

/// Walks every (Alice basis, Alice bit, Eve basis, Eve outcome, Bob basis,
/// [assignment flip], Bob projection) branch with exact weights.
///
/// With `random_assignment`, Bob routes projection outcome `b` to detector
/// `b XOR flip` for a uniformly random flip, while Eve keeps attacking as if
/// the assignment were fixed.
pub fn attack_forms(random_assignment: bool) -> AttackForms {
    let half = exact::ratio(1, 2);
    let flips: &[u8] = if random_assignment { &[0, 1] } else { &[0] };
    let flip_weight = exact::ratio(1, flips.len() as i64);
    let mut arrival = EtaForm::zero();
    let mut error = EtaForm::zero();
    for alice_basis in Basis::BOTH {
        for alice_bit in [0u8, 1] {
            let alice = alice_basis.state(alice_bit);
            let w_alice = exact::ratio(1, 4);
            for eve_basis in Basis::BOTH {
                for eve_bit in [0u8, 1] {
                    let p_eve = polar::exact_overlap(alice, eve_basis.state(eve_bit).angle())
                        .expect("BB84 states are quarter turns apart");
                    if p_eve.is_zero() {
                        continue;
                    }
                    let faked = faked_state_for(eve_basis, eve_bit);
                    let w_eve = &w_alice * &half * &p_eve;
                    // only Bob's choice equal to Alice's basis can be sifted
                    let bob_basis = alice_basis;
                    for &flip in flips {
                        for bob_bit in [0u8, 1] {
                            let p_proj = polar::exact_overlap(
                                faked.state(),
                                bob_basis.state(bob_bit).angle(),
                            )
                            .expect("quarter turns");
                            if p_proj.is_zero() {
                                continue;
                            }
                            let w = &w_eve * &half * &flip_weight * &p_proj;
                            let detector = Detector::from_bit(bob_bit ^ flip);
                            arrival.add_term(&w, detector, faked.tag);
                            if bob_bit != alice_bit {
                                error.add_term(&w, detector, faked.tag);
                            }
                        }
                    }
                }
            }
        }
    }
    AttackForms { arrival, error }
}

/// Exact oracle for the plain attack.
pub fn enumerate_attack(m: &MismatchSpec<Exact>, brightness: &Brightness<Exact>) -> Result<ExactStats> {
    attack_forms(false).evaluate(m, brightness)
}

/// Exact oracle with Bob's random detector assignment.
pub fn enumerate_attack_with_random_assignment(
    m: &MismatchSpec<Exact>,
    brightness: &Brightness<Exact>,
) -> Result<ExactStats> {
    attack_forms(true).evaluate(m, brightness)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackOptions {
    pub brightness: Brightness,
    /// Probability that Eve's replica registers the photon at all.
    pub eve_efficiency: f64,
}

impl Default for AttackOptions {
    fn default() -> Self {
        Self {
            brightness: Brightness::unit(),
            eve_efficiency: 1.0,
        }
    }
}

impl AttackOptions {
    pub fn with_brightness(brightness: Brightness) -> Self {
        Self {
            brightness,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eve_efficiency) {
            return Err(Error::param("eve_efficiency", "must lie in [0, 1]"));
        }
        for tag in ControlTag::ALL {
            let w = *self.brightness.weight(tag);
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::param("brightness", format!("{w} is not a valid weight")));
            }
        }
        Ok(())
    }
}

/// Everything that happened in one simulated round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bb84Round {
    pub alice_basis: Basis,
    pub alice_bit: u8,
    /// Eve's basis and detected bit; `None` when her replica saw nothing and
    /// she sent vacuum.
    pub eve: Option<(Basis, u8)>,
    pub faked: Option<FakedState>,
    pub bob_basis: Basis,
    pub assignment_flipped: bool,
    /// Bit Bob records (already corrected for the assignment flip).
    pub bob_bit: Option<u8>,
    pub bob_detector: Option<Detector>,
    /// Eve's best guess of Bob's bit from her records and the public bases.
    pub eve_guess: Option<u8>,
}

impl Bb84Round {
    pub fn sifted(&self) -> bool {
        self.bob_bit.is_some() && self.alice_basis == self.bob_basis
    }
}

fn eff_of(eff: &MismatchSpec, detector: Detector, tag: ControlTag) -> f64 {
    *eff.eta(detector, tag).expect("faked states carry t0 or t1")
}

/// Eve's maximum-likelihood guess of Bob's bit given her faked state and
/// Bob's announced basis, assuming the unflipped detector assignment.
fn eve_guess(faked: FakedState, bob_basis: Basis, eff: &MismatchSpec) -> u8 {
    let likelihood = |bit: u8| {
        polar::overlap_probability(faked.state(), bob_basis.state(bit).angle())
            * eff_of(eff, Detector::from_bit(bit), faked.tag)
    };
    if likelihood(1) > likelihood(0) {
        1
    } else {
        0
    }
}

/// Plays one round. `eff` holds brightness-adjusted efficiencies.
pub fn play_round<R: Rng + ?Sized>(
    rng: &mut R,
    eff: &MismatchSpec,
    eve_efficiency: f64,
    random_assignment: bool,
) -> Bb84Round {
    let alice_basis = Basis::random(rng);
    let alice_bit = u8::from(rng.random::<bool>());
    let bob_basis = Basis::random(rng);
    let flip = random_assignment && rng.random::<bool>();
    let mut round = Bb84Round {
        alice_basis,
        alice_bit,
        eve: None,
        faked: None,
        bob_basis,
        assignment_flipped: flip,
        bob_bit: None,
        bob_detector: None,
        eve_guess: None,
    };

    if rng.random::<f64>() >= eve_efficiency {
        return round;
    }
    let eve_basis = Basis::random(rng);
    let eve_bit = match polar::measure(
        alice_basis.state(alice_bit),
        eve_basis.measurement(),
        ClickEfficiencies::PERFECT,
        rng,
    ) {
        Outcome::Click(sign) => sign.bit(),
        Outcome::NoClick => unreachable!("Eve's replica is lossless"),
    };
    let faked = faked_state_for(eve_basis, eve_bit);
    round.eve = Some((eve_basis, eve_bit));
    round.faked = Some(faked);

    // projection outcome b lands on detector b ^ flip
    let routed = |sign: Sign| Detector::from_bit(sign.bit() ^ u8::from(flip));
    let clicks = ClickEfficiencies {
        plus: eff_of(eff, routed(Sign::Plus), faked.tag),
        minus: eff_of(eff, routed(Sign::Minus), faked.tag),
    };
    if let Outcome::Click(sign) = polar::measure(faked.state(), bob_basis.measurement(), clicks, rng) {
        round.bob_bit = Some(sign.bit());
        round.bob_detector = Some(routed(sign));
        round.eve_guess = Some(eve_guess(faked, bob_basis, eff));
    }
    round
}

fn accumulate(stats: &mut AttackStats, round: &Bb84Round) {
    stats.rounds += 1;
    if let Some(faked) = round.faked {
        stats.diagnostics.record_sent(faked.tag);
        if let Some(det) = round.bob_detector {
            stats.diagnostics.record_click(faked.tag, det);
        }
    }
    if round.sifted() {
        let bob = round.bob_bit.expect("sifted rounds have a bit");
        stats.record_sifted(bob != round.alice_bit, round.eve_guess == Some(bob));
    }
}

fn simulate_impl(
    n: u64,
    m: &MismatchSpec,
    opts: &AttackOptions,
    settings: &RunSettings,
    random_assignment: bool,
) -> Result<AttackStats> {
    if n == 0 {
        return Err(Error::param("rounds", "must be positive"));
    }
    opts.validate()?;
    let eff = opts.brightness.apply(m);
    Ok(run_partitioned(n, settings, |rng, count| {
        let mut stats = AttackStats::default();
        for _ in 0..count {
            let round = play_round(rng, &eff, opts.eve_efficiency, random_assignment);
            accumulate(&mut stats, &round);
        }
        stats
    }))
}

/// Monte Carlo of the faked-states attack.
pub fn simulate(
    n: u64,
    m: &MismatchSpec,
    opts: &AttackOptions,
    settings: &RunSettings,
) -> Result<AttackStats> {
    simulate_impl(n, m, opts, settings, false)
}

/// Same attack against a receiver that flips its detector-to-bit
/// assignment at random every round.
pub fn simulate_with_random_assignment(
    n: u64,
    m: &MismatchSpec,
    opts: &AttackOptions,
    settings: &RunSettings,
) -> Result<AttackStats> {
    simulate_impl(n, m, opts, settings, true)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TimeShiftStats {
    pub rounds: u64,
    /// Sifted arrivals.
    pub arrivals: u64,
    pub correct_guesses: u64,
    pub errors: u64,
}

impl TimeShiftStats {
    pub fn arrival_rate(&self) -> Option<f64> {
        (self.rounds > 0).then(|| self.arrivals as f64 / self.rounds as f64)
    }

    pub fn guess_accuracy(&self) -> Option<f64> {
        (self.arrivals > 0).then(|| self.correct_guesses as f64 / self.arrivals as f64)
    }

    pub fn qber(&self) -> Option<f64> {
        (self.arrivals > 0).then(|| self.errors as f64 / self.arrivals as f64)
    }
}

impl Merge for TimeShiftStats {
    fn merge(&mut self, o: Self) {
        self.rounds += o.rounds;
        self.arrivals += o.arrivals;
        self.correct_guesses += o.correct_guesses;
        self.errors += o.errors;
    }
}

/// Eve shifts each qubit to t₀ (probability `p_shift_to_t0`) or t₁ without
/// measuring it, then guesses each sifted bit as the detector that is more
/// efficient at the applied shift.
pub fn time_shift_simulate(
    n: u64,
    m: &MismatchSpec,
    p_shift_to_t0: f64,
    settings: &RunSettings,
) -> Result<TimeShiftStats> {
    if n == 0 {
        return Err(Error::param("rounds", "must be positive"));
    }
    if !(0.0..=1.0).contains(&p_shift_to_t0) {
        return Err(Error::param("p_shift_to_t0", "must lie in [0, 1]"));
    }
    Ok(run_partitioned(n, settings, |rng, count| {
        let mut stats = TimeShiftStats::default();
        for _ in 0..count {
            stats.rounds += 1;
            let alice_basis = Basis::random(rng);
            let alice_bit = u8::from(rng.random::<bool>());
            let bob_basis = Basis::random(rng);
            let tag = if rng.random::<f64>() < p_shift_to_t0 {
                ControlTag::Zero
            } else {
                ControlTag::One
            };
            let clicks = ClickEfficiencies {
                plus: eff_of(m, Detector::Zero, tag),
                minus: eff_of(m, Detector::One, tag),
            };
            let outcome = polar::measure(
                alice_basis.state(alice_bit),
                bob_basis.measurement(),
                clicks,
                rng,
            );
            let Outcome::Click(sign) = outcome else {
                continue;
            };
            if bob_basis != alice_basis {
                continue;
            }
            let bob_bit = sign.bit();
            let guess = u8::from(clicks.minus > clicks.plus);
            stats.arrivals += 1;
            stats.correct_guesses += u64::from(guess == bob_bit);
            stats.errors += u64::from(bob_bit != alice_bit);
        }
        stats
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, ratio};

    #[test]
    fn faked_state_rule() {
        assert_eq!(
            faked_state_for(Basis::X, 0),
            FakedState {
                basis: Basis::Z,
                bit: 1,
                tag: ControlTag::Zero
            }
        );
        assert_eq!(
            faked_state_for(Basis::Z, 1),
            FakedState {
                basis: Basis::X,
                bit: 0,
                tag: ControlTag::One
            }
        );
        assert_eq!(
            faked_state_for(Basis::Z, 0),
            FakedState {
                basis: Basis::X,
                bit: 1,
                tag: ControlTag::Zero
            }
        );
    }

    #[test]
    fn analytic_examples() {
        let total = MismatchSpec::new(0.7, 0.0, 0.0, 0.4).unwrap();
        assert_eq!(analytic_qber(&total).unwrap(), 0.0);
        let crosses = MismatchSpec::new(1.0, 0.1, 0.1, 1.0).unwrap();
        assert!((analytic_qber(&crosses).unwrap() - 0.4 / 2.6).abs() < 1e-15);
        let flat = MismatchSpec::new(0.3, 0.3, 0.3, 0.3).unwrap();
        assert!((analytic_qber(&flat).unwrap() - 0.5).abs() < 1e-15);
        let dark = MismatchSpec::new(0.0, 0.0, 0.0, 0.0).unwrap();
        assert!(matches!(analytic_qber(&dark), Err(Error::Undefined(_))));
    }

    #[test]
    fn symmetric_examples() {
        assert_eq!(symmetric_qber(0.0).unwrap(), 0.0);
        assert_eq!(symmetric_qber(ratio(1, 15)).unwrap(), ratio(1, 9));
        assert_eq!(symmetric_qber(int(1)).unwrap(), ratio(1, 2));
        assert!(symmetric_qber(1.5).is_err());
    }

    #[test]
    fn enumeration_reproduces_closed_form() {
        let spec = MismatchSpec {
            eta0_t0: int(1),
            eta0_t1: ratio(1, 10),
            eta1_t0: ratio(1, 10),
            eta1_t1: int(1),
        };
        let ex = enumerate_attack(&spec, &Brightness::unit()).unwrap();
        assert_eq!(ex.qber, ratio(2, 13));
        assert_eq!(ex.qber, analytic_qber(&spec).unwrap());

        let total = MismatchSpec::<Exact>::total();
        let ex = enumerate_attack(&total, &Brightness::unit()).unwrap();
        assert!(ex.error.is_zero());
        assert_eq!(ex.arrival, ratio(1, 8));
    }

    #[test]
    fn enumeration_coefficients() {
        // arrival = (1/16)[η0(t0) + 3η0(t1) + 3η1(t0) + η1(t1)], error = (1/8)[η0(t1) + η1(t0)]
        let f = attack_forms(false);
        assert_eq!(
            f.arrival.to_array(),
            [ratio(1, 16), ratio(3, 16), ratio(3, 16), ratio(1, 16)]
        );
        assert_eq!(f.error.to_array(), [int(0), ratio(1, 8), ratio(1, 8), int(0)]);
    }

    #[test]
    fn equalized_symmetric_spec_matches_closed_form() {
        for (n, d) in [(1, 15), (1, 3), (2, 7), (0, 1), (1, 1)] {
            let eta = ratio(n, d);
            // unequal diagonals so brightness matters
            let spec = MismatchSpec {
                eta0_t0: ratio(1, 2),
                eta0_t1: &eta * ratio(4, 5),
                eta1_t0: &eta * ratio(1, 2),
                eta1_t1: ratio(4, 5),
            };
            let b = Brightness::equalizing(&spec).unwrap();
            let ex = enumerate_attack(&spec, &b).unwrap();
            assert_eq!(ex.qber, symmetric_qber(eta).unwrap());
        }
    }

    #[test]
    fn countermeasure_oracle_total_mismatch() {
        let ex = enumerate_attack_with_random_assignment(
            &MismatchSpec::total(),
            &Brightness::unit(),
        )
        .unwrap();
        assert_eq!(ex.qber, ratio(1, 2));
        assert_eq!(ex.arrival, ratio(1, 4));
        assert_eq!(ex.error, ratio(1, 8));
    }

    #[test]
    fn total_mismatch_simulation_is_clean() {
        let stats = simulate(
            100_000,
            &MismatchSpec::total(),
            &AttackOptions::default(),
            &RunSettings::new(1, 2),
        )
        .unwrap();
        assert!(stats.sifted > 0);
        assert_eq!(stats.errors, 0);
        assert_eq!(stats.eve_knowledge(), Some(1.0));
        assert!(stats.diagnostics.is_consistent());
    }

    #[test]
    fn same_seed_same_stats() {
        let spec = MismatchSpec::symmetric(0.2).unwrap();
        let opts = AttackOptions::default();
        let a = simulate(10_000, &spec, &opts, &RunSettings::new(9, 1)).unwrap();
        let b = simulate(10_000, &spec, &opts, &RunSettings::new(9, 3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn eve_loss_reduces_rate_not_qber() {
        let spec = MismatchSpec::total();
        let opts = AttackOptions {
            eve_efficiency: 0.5,
            ..AttackOptions::default()
        };
        let stats = simulate(50_000, &spec, &opts, &RunSettings::new(4, 1)).unwrap();
        assert_eq!(stats.errors, 0);
        let sent: u64 = stats.diagnostics.per_control.iter().map(|c| c.sent).sum();
        assert!((sent as f64 / 50_000.0 - 0.5).abs() < 0.01);
    }

    #[test]
    fn time_shift_total_mismatch() {
        let ts = time_shift_simulate(
            50_000,
            &MismatchSpec::total(),
            0.5,
            &RunSettings::new(5, 1),
        )
        .unwrap();
        assert!(ts.arrivals > 0);
        assert_eq!(ts.guess_accuracy(), Some(1.0));
        assert_eq!(ts.qber(), Some(0.0));
        assert!(time_shift_simulate(10, &MismatchSpec::total(), 1.5, &RunSettings::new(5, 1)).is_err());
    }
}
