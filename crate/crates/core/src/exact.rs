//! Exact rational arithmetic for the enumeration oracles.

use std::fmt;
use std::ops::{Add, AddAssign, Mul};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::detmodel::{ControlTag, Detector, MismatchSpec};

pub type Exact = BigRational;

pub fn ratio(numer: i64, denom: i64) -> Exact {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(v: i64) -> Exact {
    BigRational::from_integer(BigInt::from(v))
}

/// Exact value of a finite `f64` (every finite double is a dyadic rational).
pub fn from_f64(v: f64) -> Exact {
    BigRational::from_float(v).expect("finite efficiency")
}

pub fn to_f64(v: &Exact) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Linear form in the four mismatch efficiencies
/// `c₀₀·η₀(t₀) + c₀₁·η₀(t₁) + c₁₀·η₁(t₀) + c₁₁·η₁(t₁)`.
///
/// Every attack probability in the single-photon model is linear in the
/// (brightness-adjusted) efficiencies, so enumerating once symbolically
/// gives the exact coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EtaForm {
    /// Indexed `[detector][control]`, control 0 = t₀, 1 = t₁.
    coeffs: [[Exact; 2]; 2],
}

fn control_index(tag: ControlTag) -> usize {
    match tag {
        ControlTag::Zero => 0,
        ControlTag::One => 1,
        ControlTag::Normal => panic!("t_normal has no mismatch coefficient"),
    }
}

impl EtaForm {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn term(coeff: Exact, detector: Detector, tag: ControlTag) -> Self {
        let mut f = Self::zero();
        f.coeffs[detector.index()][control_index(tag)] = coeff;
        f
    }

    pub fn coeff(&self, detector: Detector, tag: ControlTag) -> &Exact {
        &self.coeffs[detector.index()][control_index(tag)]
    }

    pub fn add_term(&mut self, coeff: &Exact, detector: Detector, tag: ControlTag) {
        self.coeffs[detector.index()][control_index(tag)] += coeff;
    }

    pub fn evaluate(&self, spec: &MismatchSpec<Exact>) -> Exact {
        let mut acc = Exact::zero();
        for d in Detector::BOTH {
            for tag in [ControlTag::Zero, ControlTag::One] {
                let eta = spec.eta(d, tag).expect("mismatch control");
                acc += self.coeff(d, tag) * eta;
            }
        }
        acc
    }

    /// Coefficients in the order η₀(t₀), η₀(t₁), η₁(t₀), η₁(t₁).
    pub fn to_array(&self) -> [Exact; 4] {
        [
            self.coeffs[0][0].clone(),
            self.coeffs[0][1].clone(),
            self.coeffs[1][0].clone(),
            self.coeffs[1][1].clone(),
        ]
    }
}

impl Add for EtaForm {
    type Output = EtaForm;
    fn add(mut self, rhs: EtaForm) -> EtaForm {
        self += rhs;
        self
    }
}

impl AddAssign for EtaForm {
    fn add_assign(&mut self, rhs: EtaForm) {
        for d in 0..2 {
            for c in 0..2 {
                self.coeffs[d][c] += &rhs.coeffs[d][c];
            }
        }
    }
}

impl Mul<&Exact> for EtaForm {
    type Output = EtaForm;
    fn mul(mut self, k: &Exact) -> EtaForm {
        for row in &mut self.coeffs {
            for c in row {
                *c *= k;
            }
        }
        self
    }
}

impl fmt::Display for EtaForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = ["η0(t0)", "η0(t1)", "η1(t0)", "η1(t1)"];
        let mut first = true;
        for (c, name) in self.to_array().iter().zip(names) {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            write!(f, "{c}·{name}")?;
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn form_evaluates_linearly() {
        let mut f = EtaForm::term(ratio(1, 4), Detector::Zero, ControlTag::Zero);
        f.add_term(&ratio(13, 4), Detector::One, ControlTag::Zero);
        let spec = MismatchSpec {
            eta0_t0: ratio(1, 2),
            eta0_t1: int(0),
            eta1_t0: ratio(1, 13),
            eta1_t1: int(1),
        };
        assert_eq!(f.evaluate(&spec), ratio(3, 8));
        assert_eq!((f.clone() + f).evaluate(&spec), ratio(3, 4));
    }

    #[test]
    fn f64_conversion_is_exact() {
        assert_eq!(from_f64(0.375), ratio(3, 8));
        assert_eq!(to_f64(&ratio(1, 4)), 0.25);
    }
}
