//! Differential phase shift keying and the overlapping-train attack.
//!
//! Alice sends a frame of `L` equal-amplitude pulses with phases in
//! {0, π} in arrival slots `0..L`. Bob's one-slot delay interferometer
//! compares neighbours: window `k` (1 ≤ k < L) carries bit 0 when
//! `φ_{k-1} = φ_k`, seen on D0, and bit 1 otherwise, seen on D1. Windows 0
//! and `L` only see a lone pulse and are never keyed.
//!
//! Eve detects the frame with a lossless replica, then sends two
//! continuous trains at once. The t₀ train (D1 blinded) is phased so D0
//! lights up only at windows where she saw bit 0; the t₁ train does the
//! same for D1 and bit 1.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::detmodel::{Brightness, ControlTag, Detector, MismatchSpec};
use crate::engine::{run_partitioned, AttackStats, RunSettings};
use crate::interferometry::{detect, interfere, Click, GateSet, PortAmplitudes, PortEfficiencies, PulseTrain};
use crate::{Error, Result};

/// Energy below which a port counts as dark.
pub const NULL_ENERGY: f64 = 1e-24;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DpskFrame {
    /// 0 for phase 0, 1 for phase π.
    phases: Vec<u8>,
}

impl DpskFrame {
    pub fn new(phases: Vec<u8>) -> Result<Self> {
        if phases.len() < 2 {
            return Err(Error::param("frame length", "needs at least two pulses"));
        }
        if phases.iter().any(|&p| p > 1) {
            return Err(Error::param("phases", "must be 0 or 1 (0 or π)"));
        }
        Ok(Self { phases })
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Result<Self> {
        Self::new((0..len).map(|_| u8::from(rng.random::<bool>())).collect())
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn phases(&self) -> &[u8] {
        &self.phases
    }

    /// Differential bit of window `k`, for keyed windows only.
    pub fn bit(&self, window: i64) -> Option<u8> {
        let k = usize::try_from(window).ok()?;
        if k == 0 || k >= self.phases.len() {
            return None;
        }
        Some(self.phases[k - 1] ^ self.phases[k])
    }

    pub fn to_train(&self, mu: f64) -> Result<PulseTrain> {
        let amps: Vec<f64> = self.phases.iter().map(|&p| if p == 0 { 1.0 } else { -1.0 }).collect();
        PulseTrain::real(0, &amps, ControlTag::Normal, mu)
    }
}

/// Windows 1..L-1, the only ones Bob arms and keys.
pub fn keyed_windows(frame_len: usize) -> GateSet {
    GateSet::range(1, frame_len as i64 - 1)
}

/// Windows at which Eve's replica clicked, with the bit it showed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EveDetectionRecord {
    frame_len: usize,
    entries: BTreeMap<i64, u8>,
}

impl EveDetectionRecord {
    pub fn new(frame_len: usize, entries: impl IntoIterator<Item = (i64, u8)>) -> Result<Self> {
        let mut rec = Self {
            frame_len,
            entries: BTreeMap::new(),
        };
        for (w, b) in entries {
            rec.insert(w, b)?;
        }
        Ok(rec)
    }

    pub fn insert(&mut self, window: i64, bit: u8) -> Result<()> {
        if window < 1 || window >= self.frame_len as i64 {
            return Err(Error::Precondition(format!(
                "window {window} is not keyed in a frame of {}",
                self.frame_len
            )));
        }
        if bit > 1 {
            return Err(Error::param("bit", "must be 0 or 1"));
        }
        match self.entries.get(&window) {
            Some(&prev) if prev != bit => Err(Error::Precondition(format!(
                "window {window} recorded with both bit values"
            ))),
            _ => {
                self.entries.insert(window, bit);
                Ok(())
            }
        }
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn get(&self, window: i64) -> Option<u8> {
        self.entries.get(&window).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, u8)> + '_ {
        self.entries.iter().map(|(&w, &b)| (w, b))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Eve's replica: lossless detectors, coherent-state click statistics.
pub fn eve_detect<R: Rng + ?Sized>(frame: &DpskFrame, mu: f64, rng: &mut R) -> Result<EveDetectionRecord> {
    let ports = interfere(&frame.to_train(mu)?, 0.0);
    let clicks = detect(&ports, &keyed_windows(frame.len()), &PortEfficiencies::ideal(), rng);
    let mut rec = EveDetectionRecord::new(frame.len(), [])?;
    for c in clicks {
        rec.insert(c.slot, c.port.index() as u8)?;
    }
    Ok(rec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WindowIntent {
    /// Full interference at the live port.
    Constructive,
    /// Live port exactly cancelled.
    Null,
    /// Lone pulse at the frame boundary, outside Bob's gates.
    Edge,
}

/// Two overlapping trains, one per live detector.
#[derive(Debug, Clone, PartialEq)]
pub struct FakedTrainPlan {
    /// Indexed by live detector: `trains[0]` uses t₀ and lights D0.
    pub trains: [PulseTrain; 2],
    /// Per window 0..=L, indexed by live detector.
    pub intents: [Vec<WindowIntent>; 2],
}

impl FakedTrainPlan {
    pub fn outputs(&self) -> [PortAmplitudes; 2] {
        [interfere(&self.trains[0], 0.0), interfere(&self.trains[1], 0.0)]
    }

    /// Checks the plan against the record: constructive windows are
    /// exactly the recorded windows with the live bit, and null windows are
    /// dark at the live port.
    pub fn validate(&self, record: &EveDetectionRecord) -> Result<()> {
        let outputs = self.outputs();
        for live in Detector::BOTH {
            let bit = live.index() as u8;
            for (w, intent) in self.intents[live.index()].iter().enumerate() {
                let w = w as i64;
                let energy = outputs[live.index()].intensity(w, live);
                let wanted = record.get(w) == Some(bit);
                let ok = match intent {
                    WindowIntent::Constructive => wanted && energy > NULL_ENERGY,
                    WindowIntent::Null => !wanted && energy < NULL_ENERGY,
                    WindowIntent::Edge => w == 0 || w == record.frame_len() as i64,
                };
                if !ok {
                    return Err(Error::Precondition(format!(
                        "plan violates its intent {intent:?} at window {w} for D{bit}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Live-port energy at every window that should be dark.
    pub fn null_residual(&self) -> f64 {
        let outputs = self.outputs();
        Detector::BOTH
            .iter()
            .map(|&live| {
                self.intents[live.index()]
                    .iter()
                    .enumerate()
                    .filter(|(_, i)| **i == WindowIntent::Null)
                    .map(|(w, _)| outputs[live.index()].intensity(w as i64, live))
                    .sum::<f64>()
            })
            .sum()
    }
}

/// Phases each train so its live port lights exactly at the recorded
/// windows with its bit, and is cancelled at every other keyed window.
pub fn continuous_train_plan(record: &EveDetectionRecord, mu: f64) -> Result<FakedTrainPlan> {
    let len = record.frame_len();
    if len < 2 {
        return Err(Error::param("frame length", "needs at least two pulses"));
    }
    let build = |live: Detector| -> Result<(PulseTrain, Vec<WindowIntent>)> {
        let bit = live.index() as u8;
        let mut phase = 0u8;
        let mut amps = vec![Complex64::new(1.0, 0.0)];
        let mut intents = vec![WindowIntent::Edge];
        for k in 1..len as i64 {
            let wanted = record.get(k) == Some(bit);
            // phase step that puts window k's light on the live port or the other one
            let step = if wanted { bit } else { 1 - bit };
            phase ^= step;
            amps.push(Complex64::new(if phase == 0 { 1.0 } else { -1.0 }, 0.0));
            intents.push(if wanted {
                WindowIntent::Constructive
            } else {
                WindowIntent::Null
            });
        }
        intents.push(WindowIntent::Edge);
        let train = PulseTrain::uniform(0, &amps, ControlTag::favouring(live), mu)?;
        Ok((train, intents))
    };
    let (t0, i0) = build(Detector::Zero)?;
    let (t1, i1) = build(Detector::One)?;
    let plan = FakedTrainPlan {
        trains: [t0, t1],
        intents: [i0, i1],
    };
    plan.validate(record)?;
    Ok(plan)
}

/// A lone pulse at arrival slot `window` with control t_bit. It lights
/// windows `window` and `window + 1`, so Eve must have seen `bit` in both.
pub fn single_pulse_faked_state(record: &EveDetectionRecord, window: i64, bit: u8, mu: f64) -> Result<PulseTrain> {
    if record.get(window) != Some(bit) || record.get(window + 1) != Some(bit) {
        return Err(Error::Precondition(format!(
            "single-pulse faked state needs bit {bit} recorded at windows {window} and {}",
            window + 1
        )));
    }
    PulseTrain::real(window, &[1.0], ControlTag::favouring(Detector::from_bit(bit)), mu)
}

/// Clicks of several trains over the keyed windows, merged in window
/// order.
pub fn bob_detect<R: Rng + ?Sized>(
    outputs: &[PortAmplitudes],
    frame_len: usize,
    eff: &PortEfficiencies,
    rng: &mut R,
) -> Vec<Click> {
    let gates = keyed_windows(frame_len);
    let mut clicks: Vec<Click> = outputs.iter().flat_map(|o| detect(o, &gates, eff, rng)).collect();
    clicks.sort();
    clicks
}

/// Brightness factor on the faked trains that makes Bob's mean click rate
/// under a total-mismatch attack equal the honest one.
///
/// Honest windows click with `1 - e^{-μ η_h}`; under attack only the
/// fraction `1 - e^{-μ}` of windows Eve detected can click, each with
/// `1 - e^{-f μ η_live}`.
pub fn compensating_brightness(mu: f64, eta_honest: f64, eta_live: f64) -> Result<f64> {
    if !(mu > 0.0 && eta_live > 0.0 && (0.0..=1.0).contains(&eta_honest)) {
        return Err(Error::param("brightness", "needs μ > 0, η_live > 0, η_honest in [0, 1]"));
    }
    let honest = -(-mu * eta_honest).exp_m1();
    let eve = -(-mu).exp_m1();
    let need = honest / eve;
    if need >= 1.0 {
        return Err(Error::Infeasible(
            "Eve's detection rate cannot match the honest click rate".into(),
        ));
    }
    Ok(-(-need).ln_1p() / (mu * eta_live))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpskOptions {
    pub frame_len: usize,
    pub mu: f64,
    pub brightness: Brightness,
    pub normal: [f64; 2],
    pub attack: bool,
}

impl Default for DpskOptions {
    fn default() -> Self {
        Self {
            frame_len: 64,
            mu: 0.2,
            brightness: Brightness::unit(),
            normal: [1.0, 1.0],
            attack: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameOutcome {
    pub frame: DpskFrame,
    pub record: Option<EveDetectionRecord>,
    pub clicks: Vec<Click>,
    /// Windows Bob announces with the bit he keeps.
    pub kept: Vec<(i64, u8)>,
    /// Windows with more than one click, discarded.
    pub coincidences: Vec<i64>,
}

struct Setup {
    len: usize,
    mu: f64,
    eff: PortEfficiencies,
    /// Eve's guess at windows she did not record (only wrong-port light
    /// can land there).
    fallback_guess: u8,
}

impl Setup {
    fn new(spec: &MismatchSpec, opts: &DpskOptions) -> Result<Self> {
        if opts.frame_len < 2 {
            return Err(Error::param("frame_len", "needs at least two pulses"));
        }
        if !(opts.mu.is_finite() && opts.mu > 0.0) {
            return Err(Error::param("mu", "must be positive"));
        }
        let eff = PortEfficiencies::new(opts.normal, spec, &opts.brightness)?;
        // D1 light from the t0 train vs D0 light from the t1 train
        let stray1 = eff.brightness(ControlTag::Zero) * spec.eta1_t0;
        let stray0 = eff.brightness(ControlTag::One) * spec.eta0_t1;
        Ok(Self {
            len: opts.frame_len,
            mu: opts.mu,
            eff,
            fallback_guess: u8::from(stray1 > stray0),
        })
    }

    fn play<R: Rng + ?Sized>(&self, attack: bool, rng: &mut R) -> Result<FrameOutcome> {
        let frame = DpskFrame::random(self.len, rng)?;
        let (record, clicks) = if attack {
            let record = eve_detect(&frame, self.mu, rng)?;
            let plan = continuous_train_plan(&record, self.mu)?;
            let clicks = bob_detect(&plan.outputs(), self.len, &self.eff, rng);
            (Some(record), clicks)
        } else {
            let honest = interfere(&frame.to_train(self.mu)?, 0.0);
            (None, bob_detect(&[honest], self.len, &self.eff, rng))
        };
        let mut kept = Vec::new();
        let mut coincidences = Vec::new();
        let mut i = 0;
        while i < clicks.len() {
            let w = clicks[i].slot;
            let mut j = i;
            while j < clicks.len() && clicks[j].slot == w {
                j += 1;
            }
            if j - i == 1 {
                kept.push((w, clicks[i].port.index() as u8));
            } else {
                coincidences.push(w);
            }
            i = j;
        }
        Ok(FrameOutcome {
            frame,
            record,
            clicks,
            kept,
            coincidences,
        })
    }
}

/// Plays one frame (for inspection and tests).
pub fn play_frame<R: Rng + ?Sized>(rng: &mut R, spec: &MismatchSpec, opts: &DpskOptions) -> Result<FrameOutcome> {
    Setup::new(spec, opts)?.play(opts.attack, rng)
}

/// `n` frames. `rounds` in the result counts frames; sifted bits are
/// Bob's single-click windows.
pub fn simulate(n: u64, spec: &MismatchSpec, opts: &DpskOptions, settings: &RunSettings) -> Result<AttackStats> {
    if n == 0 {
        return Err(Error::param("frames", "must be positive"));
    }
    let setup = Setup::new(spec, opts)?;
    // validate once so the per-frame path cannot fail
    setup.play(opts.attack, &mut crate::engine::derive_stream(0, 0))?;
    Ok(run_partitioned(n, settings, |rng, count| {
        let mut st = AttackStats::default();
        for _ in 0..count {
            let out = setup.play(opts.attack, rng).expect("validated setup");
            st.rounds += 1;
            if opts.attack {
                st.diagnostics.record_sent(ControlTag::Zero);
                st.diagnostics.record_sent(ControlTag::One);
            } else {
                st.diagnostics.record_sent(ControlTag::Normal);
            }
            for c in &out.clicks {
                st.diagnostics.record_click(c.tag, c.port);
            }
            st.diagnostics.coincidences += out.coincidences.len() as u64;
            for &(w, bit) in &out.kept {
                let truth = out.frame.bit(w).expect("keyed window");
                let guess = out
                    .record
                    .as_ref()
                    .map(|r| r.get(w).unwrap_or(setup.fallback_guess));
                st.record_sifted(bit != truth, guess == Some(bit));
            }
        }
        st
    }))
}
