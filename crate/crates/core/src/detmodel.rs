//! Detector efficiency as a function of the eavesdropper's control parameter.
//!
//! Detector indices are shared across protocols: [`Detector::Zero`] is the
//! BB84 "0" detector, SARG04 detector `a`, interferometer port D0 and the
//! Ekert `+1` detector; [`Detector::One`] is the other one. A control value
//! tagged [`ControlTag::Zero`] (t₀, t_a, t₊₁) blinds detector `One`, and
//! [`ControlTag::One`] (t₁, t_b, t₋₁) blinds detector `Zero`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Abstract control coordinate (timing or wavelength offset). Always finite.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct ControlValue(f64);

impl ControlValue {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() {
            Ok(Self(value))
        } else {
            Err(Error::param("control value", format!("{value} is not finite")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl fmt::Display for ControlValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Detector {
    Zero,
    One,
}

impl Detector {
    pub const BOTH: [Detector; 2] = [Detector::Zero, Detector::One];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit == 0 {
            Detector::Zero
        } else {
            Detector::One
        }
    }

    pub fn other(self) -> Self {
        match self {
            Detector::Zero => Detector::One,
            Detector::One => Detector::Zero,
        }
    }
}

/// Symbolic control value carried by a faked state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ControlTag {
    /// Blinds neither detector (honest light, phase-time single-pulse states).
    Normal,
    /// t₀: blinds detector `One`.
    Zero,
    /// t₁: blinds detector `Zero`.
    One,
}

impl ControlTag {
    pub const ALL: [ControlTag; 3] = [ControlTag::Normal, ControlTag::Zero, ControlTag::One];

    pub fn index(self) -> usize {
        self as usize
    }

    /// The control value that leaves `detector` live and blinds the other one.
    pub fn favouring(detector: Detector) -> Self {
        match detector {
            Detector::Zero => ControlTag::Zero,
            Detector::One => ControlTag::One,
        }
    }

    pub fn blinds(self) -> Option<Detector> {
        match self {
            ControlTag::Normal => None,
            ControlTag::Zero => Some(Detector::One),
            ControlTag::One => Some(Detector::Zero),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ControlTag::Normal => "t_normal",
            ControlTag::Zero => "t0",
            ControlTag::One => "t1",
        }
    }
}

/// Efficiency of one detector as a function of the control value.
#[derive(Debug, Clone, PartialEq)]
pub enum EfficiencyCurve {
    Constant(f64),
    /// `peak * exp(-(t - center)^2 / (2 width^2))`
    Gaussian { center: f64, width: f64, peak: f64 },
    /// Sorted, duplicate-free `(t, efficiency)` samples; linear interpolation,
    /// no extrapolation.
    Table(Vec<(f64, f64)>),
}

fn check_efficiency(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() && (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(Error::param(name, format!("{v} is not in [0, 1]")))
    }
}

impl EfficiencyCurve {
    pub fn constant(value: f64) -> Result<Self> {
        Ok(Self::Constant(check_efficiency("efficiency", value)?))
    }

    pub fn gaussian(center: f64, width: f64, peak: f64) -> Result<Self> {
        if !center.is_finite() {
            return Err(Error::param("gaussian center", "must be finite"));
        }
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::param("gaussian width", format!("{width} is not positive")));
        }
        Ok(Self::Gaussian {
            center,
            width,
            peak: check_efficiency("gaussian peak", peak)?,
        })
    }

    pub fn table(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::param("table", "no samples"));
        }
        for &(t, v) in &points {
            if !t.is_finite() {
                return Err(Error::param("table", format!("control value {t} is not finite")));
            }
            check_efficiency("table efficiency", v)?;
        }
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::param(
                "table",
                "control values must be strictly increasing",
            ));
        }
        Ok(Self::Table(points))
    }

    /// `None` means the curve is defined for every finite control value.
    pub fn domain(&self) -> Option<(f64, f64)> {
        match self {
            Self::Table(points) => Some((points[0].0, points[points.len() - 1].0)),
            _ => None,
        }
    }

    pub fn efficiency_at(&self, t: ControlValue) -> Result<f64> {
        let t = t.get();
        let v = match self {
            Self::Constant(v) => *v,
            Self::Gaussian {
                center,
                width,
                peak,
            } => {
                let z = (t - center) / width;
                peak * (-0.5 * z * z).exp()
            }
            Self::Table(points) => {
                let (low, high) = (points[0].0, points[points.len() - 1].0);
                if t < low || t > high {
                    return Err(Error::OutOfDomain {
                        value: t,
                        low,
                        high,
                    });
                }
                let i = points.partition_point(|&(x, _)| x <= t);
                if i == points.len() {
                    points[i - 1].1
                } else {
                    let (x0, y0) = points[i - 1];
                    let (x1, y1) = points[i];
                    y0 + (y1 - y0) * (t - x0) / (x1 - x0)
                }
            }
        };
        Ok(v.clamp(0.0, 1.0))
    }
}

impl FromStr for EfficiencyCurve {
    type Err = Error;

    /// `constant:<v>`, `gauss:<center>,<width>,<peak>` or
    /// `table:<t1>:<v1>;<t2>:<v2>;...`
    fn from_str(s: &str) -> Result<Self> {
        let invalid = |reason: &str| Error::InvalidCurve {
            spec: s.to_string(),
            reason: reason.to_string(),
        };
        let num = |x: &str| -> Result<f64> {
            x.trim()
                .parse::<f64>()
                .map_err(|_| invalid(&format!("`{}` is not a number", x.trim())))
        };
        let (kind, body) = s
            .split_once(':')
            .ok_or_else(|| invalid("expected `<kind>:<parameters>`"))?;
        let curve = match kind.trim() {
            "constant" => Self::constant(num(body)?),
            "gauss" => {
                let parts: Vec<&str> = body.split(',').collect();
                if parts.len() != 3 {
                    return Err(invalid("gauss takes <center>,<width>,<peak>"));
                }
                Self::gaussian(num(parts[0])?, num(parts[1])?, num(parts[2])?)
            }
            "table" => {
                let mut points = Vec::new();
                for entry in body.split(';').filter(|e| !e.trim().is_empty()) {
                    let (t, v) = entry
                        .split_once(':')
                        .ok_or_else(|| invalid("table entries are <t>:<v>"))?;
                    points.push((num(t)?, num(v)?));
                }
                Self::table(points)
            }
            other => return Err(invalid(&format!("unknown curve kind `{other}`"))),
        };
        curve.map_err(|e| invalid(&e.to_string()))
    }
}

impl fmt::Display for EfficiencyCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(v) => write!(f, "constant:{v}"),
            Self::Gaussian {
                center,
                width,
                peak,
            } => write!(f, "gauss:{center},{width},{peak}"),
            Self::Table(points) => {
                write!(f, "table:")?;
                for (i, (t, v)) in points.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{t}:{v}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum LabelConvention {
    /// BB84: bit-0 and bit-1 detectors.
    #[default]
    Bits,
    /// SARG04: detectors `a` and `b`.
    Letters,
    /// Interferometric receivers: output ports D0 and D1.
    Ports,
    /// Ekert: the `+1` and `-1` detectors.
    Signs,
}

impl LabelConvention {
    pub fn label(self, detector: Detector) -> &'static str {
        match (self, detector) {
            (Self::Bits, Detector::Zero) => "0",
            (Self::Bits, Detector::One) => "1",
            (Self::Letters, Detector::Zero) => "a",
            (Self::Letters, Detector::One) => "b",
            (Self::Ports, Detector::Zero) => "D0",
            (Self::Ports, Detector::One) => "D1",
            (Self::Signs, Detector::Zero) => "+1",
            (Self::Signs, Detector::One) => "-1",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorPair {
    curves: [EfficiencyCurve; 2],
    pub labels: LabelConvention,
}

impl DetectorPair {
    pub fn new(zero: EfficiencyCurve, one: EfficiencyCurve, labels: LabelConvention) -> Result<Self> {
        if zero.domain() != one.domain() {
            return Err(Error::param(
                "detector pair",
                "both curves must share the same control domain",
            ));
        }
        Ok(Self {
            curves: [zero, one],
            labels,
        })
    }

    pub fn curve(&self, detector: Detector) -> &EfficiencyCurve {
        &self.curves[detector.index()]
    }

    pub fn efficiency(&self, detector: Detector, t: ControlValue) -> Result<f64> {
        self.curve(detector).efficiency_at(t)
    }
}

/// The four efficiencies η_d(t_c) that matter to the attack, indexed by
/// detector `d` and control tag `c ∈ {t₀, t₁}`.
///
/// Generic so the same formulas run on `f64` and on exact rationals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MismatchSpec<T = f64> {
    pub eta0_t0: T,
    pub eta0_t1: T,
    pub eta1_t0: T,
    pub eta1_t1: T,
}

impl<T> MismatchSpec<T> {
    /// η_detector(tag); `None` for [`ControlTag::Normal`], which is not
    /// part of the mismatch spec.
    pub fn eta(&self, detector: Detector, tag: ControlTag) -> Option<&T> {
        match (detector, tag) {
            (_, ControlTag::Normal) => None,
            (Detector::Zero, ControlTag::Zero) => Some(&self.eta0_t0),
            (Detector::Zero, ControlTag::One) => Some(&self.eta0_t1),
            (Detector::One, ControlTag::Zero) => Some(&self.eta1_t0),
            (Detector::One, ControlTag::One) => Some(&self.eta1_t1),
        }
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> MismatchSpec<U> {
        MismatchSpec {
            eta0_t0: f(&self.eta0_t0),
            eta0_t1: f(&self.eta0_t1),
            eta1_t0: f(&self.eta1_t0),
            eta1_t1: f(&self.eta1_t1),
        }
    }
}

impl<T: Clone + PartialOrd + Zero + One> MismatchSpec<T> {
    pub fn try_new(eta0_t0: T, eta0_t1: T, eta1_t0: T, eta1_t1: T) -> Result<Self> {
        let spec = Self {
            eta0_t0,
            eta0_t1,
            eta1_t0,
            eta1_t1,
        };
        let unit = |v: &T| *v >= T::zero() && *v <= T::one();
        if [&spec.eta0_t0, &spec.eta0_t1, &spec.eta1_t0, &spec.eta1_t1]
            .into_iter()
            .all(unit)
        {
            Ok(spec)
        } else {
            Err(Error::param("mismatch spec", "efficiencies must lie in [0, 1]"))
        }
    }

    /// η₀(t₀) = η₁(t₁) = 1, crosses η.
    pub fn symmetric(eta: T) -> Result<Self> {
        Self::try_new(T::one(), eta.clone(), eta, T::one())
    }

    /// η₀(t₀) = η₁(t₁) = 1, crosses 0.
    pub fn total() -> Self {
        Self {
            eta0_t0: T::one(),
            eta0_t1: T::zero(),
            eta1_t0: T::zero(),
            eta1_t1: T::one(),
        }
    }

    pub fn is_total(&self) -> bool {
        self.eta0_t1.is_zero() && self.eta1_t0.is_zero()
    }
}

impl<T> MismatchSpec<T>
where
    T: Clone + PartialOrd + Zero + One + std::ops::Div<Output = T>,
{
    /// The two ratios Eve minimizes: η₀(t₁)/η₁(t₁) and η₁(t₀)/η₀(t₀).
    /// A vanishing numerator gives 0; a positive numerator over a zero
    /// denominator gives `None` (infinite).
    pub fn ratios(&self) -> (Option<T>, Option<T>) {
        let ratio = |num: &T, den: &T| {
            if num.is_zero() {
                Some(T::zero())
            } else if den.is_zero() {
                None
            } else {
                Some(num.clone() / den.clone())
            }
        };
        (
            ratio(&self.eta0_t1, &self.eta1_t1),
            ratio(&self.eta1_t0, &self.eta0_t0),
        )
    }

    /// `Some(η)` when both ratios are equal.
    pub fn symmetric_ratio(&self) -> Option<T> {
        match self.ratios() {
            (Some(a), Some(b)) if a == b => Some(a),
            _ => None,
        }
    }
}

impl MismatchSpec<f64> {
    pub fn new(eta0_t0: f64, eta0_t1: f64, eta1_t0: f64, eta1_t1: f64) -> Result<Self> {
        for v in [eta0_t0, eta0_t1, eta1_t0, eta1_t1] {
            if !v.is_finite() {
                return Err(Error::param("mismatch spec", format!("{v} is not finite")));
            }
        }
        Self::try_new(eta0_t0, eta0_t1, eta1_t0, eta1_t1)
    }

    /// Symmetric ratio allowing for rounding in curve evaluation.
    pub fn approx_symmetric_ratio(&self, tol: f64) -> Option<f64> {
        match self.ratios() {
            (Some(a), Some(b)) if (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0) => {
                Some(0.5 * (a + b))
            }
            _ => None,
        }
    }

    pub fn to_exact(&self) -> MismatchSpec<crate::exact::Exact> {
        self.map(|v| crate::exact::from_f64(*v))
    }
}

/// Per-control brightness multipliers applied to Bob's detection
/// probabilities (single-photon model) or to the mean photon number
/// (coherent-pulse model).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Brightness<T = f64> {
    pub normal: T,
    pub t0: T,
    pub t1: T,
}

impl<T: Clone> Brightness<T> {
    pub fn weight(&self, tag: ControlTag) -> &T {
        match tag {
            ControlTag::Normal => &self.normal,
            ControlTag::Zero => &self.t0,
            ControlTag::One => &self.t1,
        }
    }
}

impl<T> Brightness<T>
where
    T: Clone + PartialOrd + Zero + One + std::ops::Div<Output = T> + std::ops::Mul<Output = T>,
{
    pub fn unit() -> Self {
        Self {
            normal: T::one(),
            t0: T::one(),
            t1: T::one(),
        }
    }

    /// Scales t₀ and t₁ light so that Bob's live-detector response
    /// w·η₀(t₀) = w·η₁(t₁) equals the larger of the two.
    pub fn equalizing(spec: &MismatchSpec<T>) -> Result<Self> {
        if spec.eta0_t0.is_zero() || spec.eta1_t1.is_zero() {
            return Err(Error::param(
                "brightness",
                "cannot equalize when η₀(t₀) or η₁(t₁) is zero",
            ));
        }
        let top = if spec.eta0_t0 >= spec.eta1_t1 {
            spec.eta0_t0.clone()
        } else {
            spec.eta1_t1.clone()
        };
        Ok(Self {
            normal: T::one(),
            t0: top.clone() / spec.eta0_t0.clone(),
            t1: top / spec.eta1_t1.clone(),
        })
    }

    /// Effective efficiencies `min(1, w(t)·η_d(t))`.
    pub fn apply(&self, spec: &MismatchSpec<T>) -> MismatchSpec<T> {
        let clamp = |v: T| if v > T::one() { T::one() } else { v };
        MismatchSpec {
            eta0_t0: clamp(self.t0.clone() * spec.eta0_t0.clone()),
            eta0_t1: clamp(self.t1.clone() * spec.eta0_t1.clone()),
            eta1_t0: clamp(self.t0.clone() * spec.eta1_t0.clone()),
            eta1_t1: clamp(self.t1.clone() * spec.eta1_t1.clone()),
        }
    }
}

impl Brightness<f64> {
    pub fn to_exact(&self) -> Brightness<crate::exact::Exact> {
        Brightness {
            normal: crate::exact::from_f64(self.normal),
            t0: crate::exact::from_f64(self.t0),
            t1: crate::exact::from_f64(self.t1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlChoice {
    pub t0: ControlValue,
    pub t1: ControlValue,
    pub spec: MismatchSpec,
}

/// Picks t₁ minimizing η₀/η₁ and t₀ minimizing η₁/η₀ over `grid`.
///
/// Points where a ratio is 0/0 are skipped and points where it is x/0 are
/// infinite; ties go to the smaller control value.
pub fn choose_control_values(pair: &DetectorPair, grid: &[ControlValue]) -> Result<ControlChoice> {
    if grid.is_empty() {
        return Err(Error::param("grid", "empty"));
    }
    let mut best_t1: Option<(f64, ControlValue)> = None;
    let mut best_t0: Option<(f64, ControlValue)> = None;
    let better = |cand: (f64, ControlValue), best: Option<(f64, ControlValue)>| match best {
        None => true,
        Some((r, t)) => match cand.0.partial_cmp(&r) {
            Some(Ordering::Less) => true,
            Some(Ordering::Equal) => cand.1 < t,
            _ => false,
        },
    };
    for &t in grid {
        let e0 = pair.efficiency(Detector::Zero, t)?;
        let e1 = pair.efficiency(Detector::One, t)?;
        if e0 == 0.0 && e1 == 0.0 {
            continue;
        }
        if e1 > 0.0 {
            let cand = (e0 / e1, t);
            if better(cand, best_t1) {
                best_t1 = Some(cand);
            }
        }
        if e0 > 0.0 {
            let cand = (e1 / e0, t);
            if better(cand, best_t0) {
                best_t0 = Some(cand);
            }
        }
    }
    let (Some((_, t0)), Some((_, t1))) = (best_t0, best_t1) else {
        return Err(Error::NoSignal);
    };
    let spec = MismatchSpec::new(
        pair.efficiency(Detector::Zero, t0)?,
        pair.efficiency(Detector::Zero, t1)?,
        pair.efficiency(Detector::One, t0)?,
        pair.efficiency(Detector::One, t1)?,
    )?;
    Ok(ControlChoice { t0, t1, spec })
}

/// `steps` evenly spaced control values from `from` to `to` inclusive.
pub fn linear_grid(from: f64, to: f64, steps: usize) -> Result<Vec<ControlValue>> {
    if steps == 0 {
        return Err(Error::param("grid steps", "must be positive"));
    }
    if steps == 1 {
        return Ok(vec![ControlValue::new(from)?]);
    }
    (0..steps)
        .map(|i| ControlValue::new(from + (to - from) * i as f64 / (steps - 1) as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cv(v: f64) -> ControlValue {
        ControlValue::new(v).unwrap()
    }

    #[test]
    fn evaluates_each_curve_family() {
        let c = EfficiencyCurve::constant(0.1).unwrap();
        assert_eq!(c.efficiency_at(cv(-7.0)).unwrap(), 0.1);
        let t = EfficiencyCurve::table(vec![(0.0, 0.0), (1.0, 1.0)]).unwrap();
        assert_eq!(t.efficiency_at(cv(0.5)).unwrap(), 0.5);
        assert_eq!(t.efficiency_at(cv(1.0)).unwrap(), 1.0);
        let g = EfficiencyCurve::gaussian(0.0, 1.0, 0.1).unwrap();
        assert_eq!(g.efficiency_at(cv(0.0)).unwrap(), 0.1);
    }

    #[test]
    fn table_rejects_extrapolation_and_bad_samples() {
        let t = EfficiencyCurve::table(vec![(0.0, 0.2), (1.0, 0.4)]).unwrap();
        assert!(matches!(
            t.efficiency_at(cv(1.5)),
            Err(Error::OutOfDomain { .. })
        ));
        assert!(EfficiencyCurve::table(vec![(0.0, 0.2), (0.0, 0.4)]).is_err());
        assert!(EfficiencyCurve::table(vec![(1.0, 0.2), (0.0, 0.4)]).is_err());
        assert!(EfficiencyCurve::table(vec![(0.0, 1.2)]).is_err());
    }

    #[test]
    fn parses_curve_grammar() {
        let g: EfficiencyCurve = "gauss:-1,0.5,0.9".parse().unwrap();
        assert_eq!(
            g,
            EfficiencyCurve::Gaussian {
                center: -1.0,
                width: 0.5,
                peak: 0.9
            }
        );
        let t: EfficiencyCurve = "table:0:0;1:1;2:0.5".parse().unwrap();
        assert_eq!(t.efficiency_at(cv(1.5)).unwrap(), 0.75);
        assert_eq!(t.to_string().parse::<EfficiencyCurve>().unwrap(), t);
        for bad in ["gauss:1,2", "const:1", "constant:x", "constant:2", "table:1"] {
            assert!(bad.parse::<EfficiencyCurve>().is_err(), "{bad}");
        }
    }

    #[test]
    fn disjoint_bumps_give_total_mismatch() {
        let zero = EfficiencyCurve::table(vec![(-1.0, 1.0), (0.0, 0.0), (1.0, 0.0)]).unwrap();
        let one = EfficiencyCurve::table(vec![(-1.0, 0.0), (0.0, 0.0), (1.0, 1.0)]).unwrap();
        let pair = DetectorPair::new(zero, one, LabelConvention::Bits).unwrap();
        let grid = [cv(-1.0), cv(0.0), cv(1.0)];
        let choice = choose_control_values(&pair, &grid).unwrap();
        assert_eq!(choice.t0, cv(-1.0));
        assert_eq!(choice.t1, cv(1.0));
        assert!(choice.spec.is_total());
    }

    #[test]
    fn identical_curves_tie_to_smallest_value() {
        let c = EfficiencyCurve::gaussian(0.0, 1.0, 0.8).unwrap();
        let pair = DetectorPair::new(c.clone(), c, LabelConvention::Bits).unwrap();
        let grid = linear_grid(-2.0, 2.0, 9).unwrap();
        let choice = choose_control_values(&pair, &grid).unwrap();
        assert_eq!(choice.t0, cv(-2.0));
        assert_eq!(choice.t1, cv(-2.0));
    }

    #[test]
    fn no_signal_is_an_error() {
        let z = EfficiencyCurve::constant(0.0).unwrap();
        let pair = DetectorPair::new(z.clone(), z, LabelConvention::Bits).unwrap();
        assert_eq!(
            choose_control_values(&pair, &[cv(0.0), cv(1.0)]),
            Err(Error::NoSignal)
        );
    }

    #[test]
    fn total_mismatch_is_symmetric_with_zero_ratio() {
        let spec = MismatchSpec::<f64>::total();
        assert!(spec.is_total());
        assert_eq!(spec.symmetric_ratio(), Some(0.0));
        let sym = MismatchSpec::symmetric(1.0 / 15.0).unwrap();
        assert_eq!(sym.symmetric_ratio(), Some(1.0 / 15.0));
        let lopsided = MismatchSpec::new(1.0, 0.1, 0.2, 1.0).unwrap();
        assert_eq!(lopsided.symmetric_ratio(), None);
    }

    #[test]
    fn equalizing_brightness_matches_live_detectors() {
        let spec = MismatchSpec::new(0.5, 0.05, 0.05, 0.25).unwrap();
        let b = Brightness::equalizing(&spec).unwrap();
        let eff = b.apply(&spec);
        assert_eq!(eff.eta0_t0, 0.5);
        assert_eq!(eff.eta1_t1, 0.5);
        assert!(eff.eta0_t1 <= 1.0 && eff.eta1_t0 <= 1.0);
    }
}
