//! Pulse trains through an unbalanced (one-slot delay) interferometer.
//!
//! A train occupies consecutive arrival slots. Detection slot `k` sees the
//! pulse from arrival slot `k-1` through the long arm and the pulse from
//! arrival slot `k` through the short arm:
//!
//! ```text
//! D0_k = (a_{k-1} + e^{iφ} a_k) / 2
//! D1_k = (a_{k-1} - e^{iφ} a_k) / 2
//! ```
//!
//! A train of `n` pulses starting at arrival slot `s` therefore lights
//! detection slots `s ..= s + n`. Clicks follow coherent-state statistics:
//! a (slot, port) with mean photon number `m` fires with `1 - e^{-m}`.

use std::collections::BTreeSet;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::detmodel::{Brightness, ControlTag, Detector, MismatchSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    pub amplitude: Complex64,
    pub tag: ControlTag,
}

impl Pulse {
    pub fn new(amplitude: Complex64, tag: ControlTag) -> Self {
        Self { amplitude, tag }
    }

    pub fn real(amplitude: f64, tag: ControlTag) -> Self {
        Self::new(Complex64::new(amplitude, 0.0), tag)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseTrain {
    base: i64,
    pulses: Vec<Option<Pulse>>,
    mu: f64,
}

impl PulseTrain {
    /// `pulses[i]` sits at arrival slot `base + i`; `None` is vacuum. `mu`
    /// is the mean photon number per unit `|amplitude|²`.
    ///
    /// Neighbouring pulses meet in one detection slot, so they must carry
    /// the same control tag.
    pub fn new(base: i64, pulses: Vec<Option<Pulse>>, mu: f64) -> Result<Self> {
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::param("mu", format!("{mu} is not a finite non-negative number")));
        }
        for p in pulses.iter().flatten() {
            if !(p.amplitude.re.is_finite() && p.amplitude.im.is_finite()) {
                return Err(Error::param("pulse amplitude", "must be finite"));
            }
        }
        for (i, pair) in pulses.windows(2).enumerate() {
            if let [Some(x), Some(y)] = pair {
                if x.tag != y.tag {
                    return Err(Error::MixedTags {
                        slot: base + i as i64 + 1,
                        first: x.tag,
                        second: y.tag,
                    });
                }
            }
        }
        Ok(Self { base, pulses, mu })
    }

    /// Contiguous pulses that share one tag.
    pub fn uniform(base: i64, amplitudes: &[Complex64], tag: ControlTag, mu: f64) -> Result<Self> {
        Self::new(
            base,
            amplitudes.iter().map(|&a| Some(Pulse::new(a, tag))).collect(),
            mu,
        )
    }

    pub fn real(base: i64, amplitudes: &[f64], tag: ControlTag, mu: f64) -> Result<Self> {
        let amps: Vec<Complex64> = amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect();
        Self::uniform(base, &amps, tag, mu)
    }

    pub fn base(&self) -> i64 {
        self.base
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn pulses(&self) -> &[Option<Pulse>] {
        &self.pulses
    }

    pub fn amplitude(&self, slot: i64) -> Complex64 {
        self.pulse(slot).map_or(Complex64::new(0.0, 0.0), |p| p.amplitude)
    }

    fn pulse(&self, slot: i64) -> Option<Pulse> {
        let i = slot.checked_sub(self.base)?;
        usize::try_from(i).ok().and_then(|i| self.pulses.get(i).copied().flatten())
    }

    pub fn energy(&self) -> f64 {
        self.pulses.iter().flatten().map(|p| p.amplitude.norm_sqr()).sum()
    }

    pub fn with_mu(mut self, mu: f64) -> Result<Self> {
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::param("mu", format!("{mu} is not a finite non-negative number")));
        }
        self.mu = mu;
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlotAmplitudes {
    pub slot: i64,
    #[serde(skip)]
    pub d0: Complex64,
    #[serde(skip)]
    pub d1: Complex64,
    /// Tag of the pulses feeding this slot; `None` for an empty slot.
    pub tag: Option<ControlTag>,
}

impl SlotAmplitudes {
    pub fn port(&self, port: Detector) -> Complex64 {
        match port {
            Detector::Zero => self.d0,
            Detector::One => self.d1,
        }
    }
}

/// Output amplitudes of one train, one entry per lit detection slot.
#[derive(Debug, Clone, PartialEq)]
pub struct PortAmplitudes {
    slots: Vec<SlotAmplitudes>,
    mu: f64,
}

impl PortAmplitudes {
    pub fn slots(&self) -> &[SlotAmplitudes] {
        &self.slots
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn at(&self, slot: i64) -> Option<&SlotAmplitudes> {
        let first = self.slots.first()?.slot;
        let i = usize::try_from(slot.checked_sub(first)?).ok()?;
        self.slots.get(i)
    }

    /// `|A|²` at (slot, port); zero outside the lit range.
    pub fn intensity(&self, slot: i64, port: Detector) -> f64 {
        self.at(slot).map_or(0.0, |s| s.port(port).norm_sqr())
    }

    pub fn energy(&self) -> f64 {
        self.slots
            .iter()
            .map(|s| s.d0.norm_sqr() + s.d1.norm_sqr())
            .sum()
    }

    /// Waveform dump: `slot,re_d0,im_d0,re_d1,im_d1,control_tag`.
    pub fn write_waveform_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["slot", "re_d0", "im_d0", "re_d1", "im_d1", "control_tag"])?;
        for s in &self.slots {
            w.write_record([
                s.slot.to_string(),
                s.d0.re.to_string(),
                s.d0.im.to_string(),
                s.d1.re.to_string(),
                s.d1.im.to_string(),
                s.tag.map_or("vacuum", ControlTag::label).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn interfere(train: &PulseTrain, bob_phase: f64) -> PortAmplitudes {
    let rot = Complex64::from_polar(1.0, bob_phase);
    let first = train.base;
    let last = train.base + train.pulses.len() as i64;
    let slots = (first..=last)
        .map(|k| {
            let long = train.pulse(k - 1);
            let short = train.pulse(k);
            let a = long.map_or(Complex64::new(0.0, 0.0), |p| p.amplitude);
            let b = short.map_or(Complex64::new(0.0, 0.0), |p| p.amplitude) * rot;
            SlotAmplitudes {
                slot: k,
                d0: (a + b) * 0.5,
                d1: (a - b) * 0.5,
                tag: long.or(short).map(|p| p.tag),
            }
        })
        .collect();
    PortAmplitudes {
        slots,
        mu: train.mu,
    }
}

/// Detection slots in which Bob's detectors are armed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GateSet {
    gated: BTreeSet<i64>,
}

impl GateSet {
    pub fn new(slots: impl IntoIterator<Item = i64>) -> Self {
        Self {
            gated: slots.into_iter().collect(),
        }
    }

    pub fn range(first: i64, last: i64) -> Self {
        Self::new(first..=last)
    }

    pub fn contains(&self, slot: i64) -> bool {
        self.gated.contains(&slot)
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> + '_ {
        self.gated.iter().copied()
    }
}

/// Port efficiencies per control tag, plus brightness multipliers on the
/// mean photon number of faked light.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortEfficiencies {
    /// `[tag][port]`, tag indexed by [`ControlTag::index`].
    eta: [[f64; 2]; 3],
    brightness: [f64; 3],
}

impl PortEfficiencies {
    pub fn new(normal: [f64; 2], spec: &MismatchSpec, brightness: &Brightness) -> Result<Self> {
        for v in normal {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param("normal efficiency", "must lie in [0, 1]"));
            }
        }
        let mut weights = [0.0; 3];
        for tag in ControlTag::ALL {
            let w = *brightness.weight(tag);
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::param("brightness", format!("{w} is not a valid weight")));
            }
            weights[tag.index()] = w;
        }
        Ok(Self {
            eta: [
                normal,
                [spec.eta0_t0, spec.eta1_t0],
                [spec.eta0_t1, spec.eta1_t1],
            ],
            brightness: weights,
        })
    }

    pub fn ideal() -> Self {
        Self {
            eta: [[1.0; 2]; 3],
            brightness: [1.0; 3],
        }
    }

    pub fn eta(&self, tag: ControlTag, port: Detector) -> f64 {
        self.eta[tag.index()][port.index()]
    }

    pub fn brightness(&self, tag: ControlTag) -> f64 {
        self.brightness[tag.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Click {
    pub slot: i64,
    pub port: Detector,
    pub tag: ControlTag,
}

/// `1 - exp(-w·μ·|A|²·η)` for a gated (slot, port); 0 for ungated slots.
pub fn click_probability(
    ports: &PortAmplitudes,
    slot: i64,
    port: Detector,
    gates: &GateSet,
    eff: &PortEfficiencies,
) -> f64 {
    if !gates.contains(slot) {
        return 0.0;
    }
    let Some(s) = ports.at(slot) else {
        return 0.0;
    };
    let Some(tag) = s.tag else {
        return 0.0;
    };
    let mean = eff.brightness(tag) * ports.mu * s.port(port).norm_sqr() * eff.eta(tag, port);
    -(-mean).exp_m1()
}

/// Independent Poisson clicks over gated slots in ascending order, D0
/// before D1.
pub fn detect<R: Rng + ?Sized>(
    ports: &PortAmplitudes,
    gates: &GateSet,
    eff: &PortEfficiencies,
    rng: &mut R,
) -> Vec<Click> {
    let mut clicks = Vec::new();
    for s in &ports.slots {
        if !gates.contains(s.slot) {
            continue;
        }
        let Some(tag) = s.tag else { continue };
        for port in Detector::BOTH {
            let p = click_probability(ports, s.slot, port, gates, eff);
            if p > 0.0 && rng.random::<f64>() < p {
                clicks.push(Click {
                    slot: s.slot,
                    port,
                    tag,
                });
            }
        }
    }
    clicks
}

/// Energy that reaches `(slot, port)` targets; used to certify that a
/// faked state leaves them dark.
pub fn residual_energy(ports: &PortAmplitudes, targets: &[(i64, Detector)]) -> f64 {
    targets
        .iter()
        .map(|&(slot, port)| ports.intensity(slot, port))
        .sum()
}
