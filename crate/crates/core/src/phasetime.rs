//! Phase-time encoded BB84 and its faked states.
//!
//! Alice sends one of `|l⟩`, `|s⟩`, `|l⟩+|s⟩`, `|l⟩-|s⟩` as one or two
//! pulses in adjacent arrival slots 0 and 1. Bob's one-slot-delay
//! interferometer spreads them over detection slots 0..=2, which are the
//! only gated ones:
//!
//! | detection slot | label | role                    |
//! |---------------:|-------|-------------------------|
//! | -1             | S0    | ungated                 |
//! | 0              | S1    | time bit `l`            |
//! | 1              | S2    | interference (`+`/`-`)  |
//! | 2              | S3    | time bit `s`            |
//! | 3              | S4    | ungated                 |
//!
//! Eve's faked states put their unwanted light into the ungated slots or
//! onto the port her control value blinds.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::detmodel::{Brightness, ControlTag, Detector, MismatchSpec};
use crate::engine::{run_partitioned, AttackStats, Merge, RunSettings};
use crate::interferometry::{
    self, detect, interfere, GateSet, PortAmplitudes, PortEfficiencies, PulseTrain,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PtBasis {
    Time,
    Phase,
}

/// Time basis: bit 0 is `l`, bit 1 is `s`. Phase basis: bit 0 is `+`,
/// bit 1 is `-`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PhaseTimeSymbol {
    pub basis: PtBasis,
    pub bit: u8,
}

impl PhaseTimeSymbol {
    pub const L: Self = Self::new(PtBasis::Time, 0);
    pub const S: Self = Self::new(PtBasis::Time, 1);
    pub const PLUS: Self = Self::new(PtBasis::Phase, 0);
    pub const MINUS: Self = Self::new(PtBasis::Phase, 1);
    pub const ALL: [Self; 4] = [Self::L, Self::S, Self::PLUS, Self::MINUS];

    pub const fn new(basis: PtBasis, bit: u8) -> Self {
        Self { basis, bit }
    }

    fn index(self) -> usize {
        match self.basis {
            PtBasis::Time => self.bit as usize,
            PtBasis::Phase => 2 + self.bit as usize,
        }
    }
}

impl std::fmt::Display for PhaseTimeSymbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match (self.basis, self.bit) {
            (PtBasis::Time, 0) => "l",
            (PtBasis::Time, _) => "s",
            (PtBasis::Phase, 0) => "+",
            (PtBasis::Phase, _) => "-",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SlotRole {
    UngatedEarly,
    TimeL,
    Interference,
    TimeS,
    UngatedLate,
}

pub const FIRST_SLOT: i64 = -1;
pub const LAST_SLOT: i64 = 3;
pub const INTERFERENCE_SLOT: i64 = 1;

pub fn slot_role(slot: i64) -> Option<SlotRole> {
    Some(match slot {
        -1 => SlotRole::UngatedEarly,
        0 => SlotRole::TimeL,
        1 => SlotRole::Interference,
        2 => SlotRole::TimeS,
        3 => SlotRole::UngatedLate,
        _ => return None,
    })
}

pub fn slot_label(slot: i64) -> Option<&'static str> {
    const LABELS: [&str; 5] = ["S0", "S1", "S2", "S3", "S4"];
    usize::try_from(slot - FIRST_SLOT)
        .ok()
        .and_then(|i| LABELS.get(i).copied())
}

pub fn gates() -> GateSet {
    GateSet::range(0, 2)
}

pub fn encode(symbol: PhaseTimeSymbol, mu: f64) -> Result<PulseTrain> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (base, amps): (i64, &[f64]) = match (symbol.basis, symbol.bit) {
        (PtBasis::Time, 0) => (0, &[1.0]),
        (PtBasis::Time, _) => (1, &[1.0]),
        (PtBasis::Phase, 0) => (0, &[h, h]),
        (PtBasis::Phase, _) => (0, &[h, -h]),
    };
    PulseTrain::real(base, amps, ControlTag::Normal, mu)
}

/// Result carried by a gated click; `None` for ungated slots.
pub fn classify_click(slot: i64, port: Detector) -> Option<PhaseTimeSymbol> {
    match slot_role(slot)? {
        SlotRole::TimeL => Some(PhaseTimeSymbol::L),
        SlotRole::TimeS => Some(PhaseTimeSymbol::S),
        SlotRole::Interference => Some(PhaseTimeSymbol::new(PtBasis::Phase, port.index() as u8)),
        SlotRole::UngatedEarly | SlotRole::UngatedLate => None,
    }
}

/// What Eve resends after obtaining `eve`.
///
/// Time results become a lone pulse one slot outside Alice's pair, so one
/// of its two outputs falls in an ungated slot and neither reaches the
/// interference slot. Phase results become four pulses whose live port
/// (D0 under t₀ for `+`, D1 under t₁ for `-`) is dark in both time slots.
pub fn faked_state_for(eve: PhaseTimeSymbol, mu: f64) -> Result<PulseTrain> {
    match (eve.basis, eve.bit) {
        (PtBasis::Time, 0) => PulseTrain::real(-1, &[1.0], ControlTag::Normal, mu),
        (PtBasis::Time, _) => PulseTrain::real(2, &[1.0], ControlTag::Normal, mu),
        (PtBasis::Phase, 0) => PulseTrain::real(-1, &[-0.5, 0.5, 0.5, -0.5], ControlTag::Zero, mu),
        (PtBasis::Phase, _) => PulseTrain::real(-1, &[0.5, 0.5, -0.5, -0.5], ControlTag::One, mu),
    }
}

/// Gated (slot, port) pairs that must stay dark for the faked state of
/// `eve`, given that the control value blinds the other port.
pub fn null_targets(eve: PhaseTimeSymbol) -> Vec<(i64, Detector)> {
    use Detector::{One, Zero};
    match (eve.basis, eve.bit) {
        (PtBasis::Time, 0) => vec![(1, Zero), (1, One), (2, Zero), (2, One)],
        (PtBasis::Time, _) => vec![(0, Zero), (0, One), (1, Zero), (1, One)],
        (PtBasis::Phase, 0) => vec![(0, Zero), (2, Zero), (1, One)],
        (PtBasis::Phase, _) => vec![(0, One), (2, One), (1, Zero)],
    }
}

fn sample_click<R: Rng + ?Sized>(ports: &PortAmplitudes, rng: &mut R) -> Option<PhaseTimeSymbol> {
    let total = ports.energy();
    let mut u = rng.random::<f64>() * total;
    for s in ports.slots() {
        for port in Detector::BOTH {
            let e = s.port(port).norm_sqr();
            if e <= 0.0 {
                continue;
            }
            if u < e {
                return classify_click(s.slot, port);
            }
            u -= e;
        }
    }
    None
}

/// Eve's replica: a lossless receiver that registers exactly one click
/// with probability proportional to `|A|²` over (slot, port).
pub fn eve_measure<R: Rng + ?Sized>(alice: PhaseTimeSymbol, rng: &mut R) -> Option<PhaseTimeSymbol> {
    let train = encode(alice, 1.0).expect("fixed encoding");
    sample_click(&interfere(&train, 0.0), rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimeOptions {
    pub mu: f64,
    pub brightness: Brightness,
    /// Bob's port efficiencies at t_normal.
    pub normal: [f64; 2],
    pub attack: bool,
}

impl Default for PhaseTimeOptions {
    fn default() -> Self {
        Self {
            mu: 0.1,
            brightness: Brightness::unit(),
            normal: [1.0, 1.0],
            attack: true,
        }
    }
}

/// Attack counters plus Bob's click histogram over detection slots.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PhaseTimeStats {
    pub stats: AttackStats,
    /// `[slot - FIRST_SLOT][port]`.
    pub histogram: [[u64; 2]; 5],
}

impl PhaseTimeStats {
    pub fn clicks(&self, slot: i64, port: Detector) -> u64 {
        usize::try_from(slot - FIRST_SLOT)
            .ok()
            .and_then(|i| self.histogram.get(i))
            .map_or(0, |row| row[port.index()])
    }

    /// `slot_label,port,clicks`.
    pub fn write_histogram_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["slot_label", "port", "clicks"])?;
        for slot in FIRST_SLOT..=LAST_SLOT {
            for port in Detector::BOTH {
                w.write_record([
                    slot_label(slot).expect("slot in range").to_string(),
                    format!("D{}", port.index()),
                    self.clicks(slot, port).to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

impl Merge for PhaseTimeStats {
    fn merge(&mut self, o: Self) {
        self.stats.merge(o.stats);
        for (a, b) in self.histogram.iter_mut().zip(o.histogram) {
            a[0] += b[0];
            a[1] += b[1];
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseTimeRound {
    pub alice: PhaseTimeSymbol,
    pub eve: Option<PhaseTimeSymbol>,
    pub clicks: Vec<interferometry::Click>,
    /// Bob's result; `None` without clicks or with conflicting clicks.
    pub bob: Option<PhaseTimeSymbol>,
}

impl PhaseTimeRound {
    pub fn sifted(&self) -> bool {
        self.bob.is_some_and(|b| b.basis == self.alice.basis)
    }
}

/// Precomputed Bob-side output amplitudes for the four honest and four
/// faked trains.
struct Receiver {
    honest: Vec<PortAmplitudes>,
    faked: Vec<PortAmplitudes>,
    eff: PortEfficiencies,
    gates: GateSet,
}

impl Receiver {
    fn new(spec: &MismatchSpec, opts: &PhaseTimeOptions) -> Result<Self> {
        if !(opts.mu.is_finite() && opts.mu > 0.0) {
            return Err(Error::param("mu", "must be positive"));
        }
        let build = |f: fn(PhaseTimeSymbol, f64) -> Result<PulseTrain>| {
            PhaseTimeSymbol::ALL
                .iter()
                .map(|&s| f(s, opts.mu).map(|t| interfere(&t, 0.0)))
                .collect::<Result<Vec<_>>>()
        };
        Ok(Self {
            honest: build(encode)?,
            faked: build(faked_state_for)?,
            eff: PortEfficiencies::new(opts.normal, spec, &opts.brightness)?,
            gates: gates(),
        })
    }
}

fn random_symbol<R: Rng + ?Sized>(rng: &mut R) -> PhaseTimeSymbol {
    PhaseTimeSymbol::ALL[rng.random_range(0..4)]
}

fn play(rx: &Receiver, attack: bool, rng: &mut impl Rng) -> PhaseTimeRound {
    let alice = random_symbol(rng);
    let (eve, ports) = if attack {
        match eve_measure(alice, rng) {
            Some(e) => (Some(e), Some(&rx.faked[e.index()])),
            None => (None, None),
        }
    } else {
        (None, Some(&rx.honest[alice.index()]))
    };
    let clicks = ports.map_or_else(Vec::new, |p| detect(p, &rx.gates, &rx.eff, rng));
    let mut results = clicks.iter().filter_map(|c| classify_click(c.slot, c.port));
    let bob = match results.next() {
        Some(first) if results.all(|r| r == first) => Some(first),
        _ => None,
    };
    PhaseTimeRound {
        alice,
        eve,
        clicks,
        bob,
    }
}

/// Plays a single round (for inspection and tests).
pub fn play_round<R: Rng>(
    rng: &mut R,
    spec: &MismatchSpec,
    opts: &PhaseTimeOptions,
) -> Result<PhaseTimeRound> {
    let rx = Receiver::new(spec, opts)?;
    Ok(play(&rx, opts.attack, rng))
}

/// Full rounds Alice → (Eve) → Bob with BB84 sifting on the announced
/// bases. With the attack off, Alice's trains go straight to Bob at
/// t_normal.
pub fn simulate(
    n: u64,
    spec: &MismatchSpec,
    opts: &PhaseTimeOptions,
    settings: &RunSettings,
) -> Result<PhaseTimeStats> {
    if n == 0 {
        return Err(Error::param("rounds", "must be positive"));
    }
    let rx = Receiver::new(spec, opts)?;
    Ok(run_partitioned(n, settings, |rng, count| {
        let mut out = PhaseTimeStats::default();
        for _ in 0..count {
            let round = play(&rx, opts.attack, rng);
            let st = &mut out.stats;
            st.rounds += 1;
            let tag = if opts.attack { round.eve.map(faked_tag) } else { Some(ControlTag::Normal) };
            if let Some(tag) = tag {
                st.diagnostics.record_sent(tag);
            }
            for c in &round.clicks {
                st.diagnostics.record_click(c.tag, c.port);
                out.histogram[(c.slot - FIRST_SLOT) as usize][c.port.index()] += 1;
            }
            if round.clicks.len() > 1 {
                st.diagnostics.coincidences += 1;
            }
            if round.sifted() {
                let bob = round.bob.expect("sifted");
                st.record_sifted(bob.bit != round.alice.bit, round.eve == Some(bob));
            }
        }
        out
    }))
}

fn faked_tag(eve: PhaseTimeSymbol) -> ControlTag {
    match (eve.basis, eve.bit) {
        (PtBasis::Time, _) => ControlTag::Normal,
        (PtBasis::Phase, 0) => ControlTag::Zero,
        (PtBasis::Phase, _) => ControlTag::One,
    }
}
