//! Two-level states and measurements on the Poincaré-sphere equator, plus
//! the two poles (circular polarizations).
//!
//! Angles are Poincaré angles in degrees, so orthogonal states sit 180°
//! apart and conjugate bases 90° apart.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::detmodel::{ControlValue, Detector, DetectorPair};
use crate::exact::{self, Exact};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquatorState {
    angle: f64,
}

impl EquatorState {
    pub fn new(degrees: f64) -> Self {
        Self {
            angle: normalize(degrees),
        }
    }

    pub fn angle(self) -> f64 {
        self.angle
    }

    pub fn orthogonal(self) -> Self {
        Self::new(self.angle + 180.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PoleState {
    North,
    South,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PolarState {
    Equator(EquatorState),
    Pole(PoleState),
}

impl PolarState {
    pub fn equator(degrees: f64) -> Self {
        Self::Equator(EquatorState::new(degrees))
    }
}

impl From<EquatorState> for PolarState {
    fn from(s: EquatorState) -> Self {
        Self::Equator(s)
    }
}

impl From<PoleState> for PolarState {
    fn from(s: PoleState) -> Self {
        Self::Pole(s)
    }
}

/// Measurement along `axis`: the `+` outcome projects onto the equator state
/// at `axis`, the `-` outcome onto `axis + 180°`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementBasis {
    axis: f64,
}

impl MeasurementBasis {
    pub fn new(axis_degrees: f64) -> Self {
        Self {
            axis: normalize(axis_degrees),
        }
    }

    pub fn axis(self) -> f64 {
        self.axis
    }

    pub fn eigen_angle(self, outcome: Sign) -> f64 {
        match outcome {
            Sign::Plus => self.axis,
            Sign::Minus => normalize(self.axis + 180.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    /// The detector that registers this outcome with the unflipped
    /// assignment (`+` → detector Zero).
    pub fn detector(self) -> Detector {
        match self {
            Sign::Plus => Detector::Zero,
            Sign::Minus => Detector::One,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit == 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn value(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Click(Sign),
    NoClick,
}

fn normalize(degrees: f64) -> f64 {
    let a = degrees.rem_euclid(360.0);
    // rem_euclid can return 360.0 for tiny negative inputs
    if a >= 360.0 {
        0.0
    } else {
        a
    }
}

/// cos of an angle in degrees, exact at multiples of 45°.
fn cos_deg(degrees: f64) -> f64 {
    let a = normalize(degrees);
    let eighth = a / 45.0;
    if eighth.fract() == 0.0 {
        const H: f64 = std::f64::consts::FRAC_1_SQRT_2;
        return [1.0, H, 0.0, -H, -1.0, -H, 0.0, H][eighth as usize];
    }
    a.to_radians().cos()
}

/// Born-rule probability that `state` projects onto the equator eigenstate
/// at `eigen_angle`: `(1 + cos Δ)/2` for equator states, 1/2 for poles.
pub fn overlap_probability(state: impl Into<PolarState>, eigen_angle: f64) -> f64 {
    match state.into() {
        PolarState::Equator(s) => 0.5 * (1.0 + cos_deg(s.angle - eigen_angle)),
        PolarState::Pole(_) => 0.5,
    }
}

/// Exact overlap when the angle difference is a multiple of 90° (or the
/// state is a pole); `None` otherwise.
pub fn exact_overlap(state: impl Into<PolarState>, eigen_angle: f64) -> Option<Exact> {
    match state.into() {
        PolarState::Pole(_) => Some(exact::ratio(1, 2)),
        PolarState::Equator(s) => {
            let quarter = normalize(s.angle - eigen_angle) / 90.0;
            if quarter.fract() != 0.0 {
                return None;
            }
            Some(match quarter as u8 {
                0 => exact::int(1),
                2 => exact::int(0),
                _ => exact::ratio(1, 2),
            })
        }
    }
}

/// Efficiencies of the detectors registering the `+` and `-` outcomes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClickEfficiencies {
    pub plus: f64,
    pub minus: f64,
}

impl ClickEfficiencies {
    pub const PERFECT: Self = Self {
        plus: 1.0,
        minus: 1.0,
    };

    pub fn of(self, sign: Sign) -> f64 {
        match sign {
            Sign::Plus => self.plus,
            Sign::Minus => self.minus,
        }
    }
}

/// `(P(+ click), P(- click), P(no click))` for a single photon.
pub fn click_probabilities(
    state: impl Into<PolarState>,
    basis: MeasurementBasis,
    eff: ClickEfficiencies,
) -> (f64, f64, f64) {
    let state = state.into();
    let plus = overlap_probability(state, basis.eigen_angle(Sign::Plus)) * eff.plus;
    let minus = overlap_probability(state, basis.eigen_angle(Sign::Minus)) * eff.minus;
    (plus, minus, 1.0 - (plus + minus))
}

/// Single-photon measurement: at most one projection outcome, which
/// registers only if its detector fires.
pub fn measure<R: Rng + ?Sized>(
    state: impl Into<PolarState>,
    basis: MeasurementBasis,
    eff: ClickEfficiencies,
    rng: &mut R,
) -> Outcome {
    let (plus, minus, _) = click_probabilities(state, basis, eff);
    let u: f64 = rng.random();
    if u < plus {
        Outcome::Click(Sign::Plus)
    } else if u < plus + minus {
        Outcome::Click(Sign::Minus)
    } else {
        Outcome::NoClick
    }
}

/// [`measure`] with efficiencies read off a detector pair at control `t`.
pub fn measure_with_pair<R: Rng + ?Sized>(
    state: impl Into<PolarState>,
    basis: MeasurementBasis,
    detectors: &DetectorPair,
    t: ControlValue,
    rng: &mut R,
) -> Result<Outcome> {
    let eff = ClickEfficiencies {
        plus: detectors.efficiency(Detector::Zero, t)?,
        minus: detectors.efficiency(Detector::One, t)?,
    };
    Ok(measure(state, basis, eff, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detmodel::{EfficiencyCurve, LabelConvention};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn overlap_examples() {
        let s = EquatorState::new(30.0);
        assert_eq!(overlap_probability(s, 30.0), 1.0);
        assert_eq!(overlap_probability(s, 210.0), 0.0);
        assert_eq!(overlap_probability(s, 120.0), 0.5);
        assert_eq!(overlap_probability(PoleState::North, 17.0), 0.5);
    }

    #[test]
    fn quarter_turn_geometry() {
        // 0_a, 1_a, 0_b, 1_b
        let states = [0.0, 90.0, 180.0, 270.0];
        assert_eq!(overlap_probability(EquatorState::new(states[0]), states[1]), 0.5);
        assert_eq!(overlap_probability(EquatorState::new(states[0]), states[2]), 0.0);
        assert_eq!(overlap_probability(EquatorState::new(states[1]), states[3]), 0.0);
        assert_eq!(
            exact_overlap(EquatorState::new(90.0), 0.0),
            Some(exact::ratio(1, 2))
        );
        assert_eq!(exact_overlap(EquatorState::new(45.0), 0.0), None);
    }

    #[test]
    fn perfect_and_blinded_detectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let basis = MeasurementBasis::new(45.0);
        let state = EquatorState::new(45.0);
        for _ in 0..1000 {
            assert_eq!(
                measure(state, basis, ClickEfficiencies::PERFECT, &mut rng),
                Outcome::Click(Sign::Plus)
            );
            let blind = ClickEfficiencies {
                plus: 0.0,
                minus: 1.0,
            };
            assert_eq!(measure(state, basis, blind, &mut rng), Outcome::NoClick);
        }
    }

    #[test]
    fn conjugate_state_click_rates() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let eff = ClickEfficiencies {
            plus: 0.5,
            minus: 0.5,
        };
        let (mut plus, mut minus) = (0u32, 0u32);
        for _ in 0..n {
            match measure(EquatorState::new(90.0), MeasurementBasis::new(0.0), eff, &mut rng) {
                Outcome::Click(Sign::Plus) => plus += 1,
                Outcome::Click(Sign::Minus) => minus += 1,
                Outcome::NoClick => {}
            }
        }
        let sigma = (n as f64 * 0.25 * 0.75).sqrt();
        let none = n - plus - minus;
        assert!((plus as f64 - 25_000.0).abs() < 3.0 * sigma);
        assert!((minus as f64 - 25_000.0).abs() < 3.0 * sigma);
        let sigma_none = (n as f64 * 0.25).sqrt();
        assert!((none as f64 - 50_000.0).abs() < 3.0 * sigma_none);
    }

    #[test]
    fn measure_reads_pair_at_control() {
        let pair = DetectorPair::new(
            EfficiencyCurve::constant(0.0).unwrap(),
            EfficiencyCurve::constant(1.0).unwrap(),
            LabelConvention::Bits,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = ControlValue::new(0.0).unwrap();
        let out = measure_with_pair(
            EquatorState::new(180.0),
            MeasurementBasis::new(0.0),
            &pair,
            t,
            &mut rng,
        )
        .unwrap();
        assert_eq!(out, Outcome::Click(Sign::Minus));
    }

    proptest! {
        #[test]
        fn probabilities_sum_to_one(
            angle in -720.0f64..720.0,
            axis in 0.0f64..360.0,
            plus in 0.0f64..=1.0,
            minus in 0.0f64..=1.0,
        ) {
            let (p, m, n) = click_probabilities(
                EquatorState::new(angle),
                MeasurementBasis::new(axis),
                ClickEfficiencies { plus, minus },
            );
            prop_assert_eq!((p + m) + n, 1.0);
            prop_assert!(n >= 0.0);
        }

        #[test]
        fn antipodal_overlaps_complement(angle in -720.0f64..720.0, axis in -360.0f64..360.0) {
            let s = EquatorState::new(angle);
            let total = overlap_probability(s, axis) + overlap_probability(s, axis + 180.0);
            prop_assert!((total - 1.0).abs() < 1e-15);
        }
    }
}
