//! Ekert protocol with a faked pair source.
//!
//! Alice measures along a₁ = 0°, a₂ = 45° or a₃ = 90°, Bob along
//! b₁ = 45°, b₂ = 90° or b₃ = 135° (Poincaré angles). The pairs (a₂, b₁) and
//! (a₃, b₂) form the key; (a₁, b₁), (a₁, b₃), (a₃, b₁), (a₃, b₃) enter the
//! CHSH quantity `S = E₁₁ - E₁₃ + E₃₁ + E₃₃`.
//!
//! On each side one detector registers +1 in every basis and the other
//! registers -1, so a control value blinds one outcome sign everywhere:
//! t₊₁ leaves only +1 live, t₋₁ only -1. Eve replaces the source with a
//! weighted mix of three combinations of faked pairs:
//!
//! * α: circular states with opposite controls. Every basis pair sees
//!   d = 1/4 and perfect anticorrelation.
//! * β: (-a₃, -b₁) under t₊₁ or (a₃, b₁) under t₋₁. Among the CHSH pairs it
//!   only reaches (a₁, b₃), with perfect correlation.
//! * γ: (-a₂, -b₂) under t₊₁ or (a₂, b₂) under t₋₁. Reaches all four CHSH
//!   pairs with perfect correlation and none of the key pairs.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::detmodel::{ControlTag, Detector, MismatchSpec};
use crate::engine::{run_partitioned, AttackStats, Merge, RunSettings};
use crate::polar::{self, ClickEfficiencies, EquatorState, MeasurementBasis, Outcome, PoleState, PolarState, Sign};
use crate::{Error, Result};

pub const ALICE_AXES: [f64; 3] = [0.0, 45.0, 90.0];
pub const BOB_AXES: [f64; 3] = [45.0, 90.0, 135.0];

/// Bases by 1-based index, as in a₁..a₃ and b₁..b₃.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisPair {
    pub alice: u8,
    pub bob: u8,
}

impl BasisPair {
    pub const fn new(alice: u8, bob: u8) -> Self {
        Self { alice, bob }
    }

    pub fn all() -> impl Iterator<Item = BasisPair> {
        (1..=3).flat_map(|a| (1..=3).map(move |b| BasisPair::new(a, b)))
    }

    pub fn alice_basis(self) -> MeasurementBasis {
        MeasurementBasis::new(ALICE_AXES[self.alice as usize - 1])
    }

    pub fn bob_basis(self) -> MeasurementBasis {
        MeasurementBasis::new(BOB_AXES[self.bob as usize - 1])
    }

    pub fn is_key(self) -> bool {
        KEY_PAIRS.contains(&self)
    }

    pub fn is_chsh(self) -> bool {
        CHSH_PAIRS.contains(&self)
    }

    fn index(self) -> (usize, usize) {
        (self.alice as usize - 1, self.bob as usize - 1)
    }
}

impl std::fmt::Display for BasisPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "a{}b{}", self.alice, self.bob)
    }
}

pub const KEY_PAIRS: [BasisPair; 2] = [BasisPair::new(2, 1), BasisPair::new(3, 2)];

/// In the order of the CHSH sum; the second term enters with a minus sign.
pub const CHSH_PAIRS: [BasisPair; 4] = [
    BasisPair::new(1, 1),
    BasisPair::new(1, 3),
    BasisPair::new(3, 1),
    BasisPair::new(3, 3),
];

const CHSH_SIGNS: [f64; 4] = [1.0, -1.0, 1.0, 1.0];

/// `-cos Δ` for a singlet, Δ the Poincaré angle between the two axes.
pub fn singlet_correlation(pair: BasisPair) -> f64 {
    let overlap = polar::overlap_probability(
        EquatorState::new(pair.alice_basis().axis()),
        pair.bob_basis().axis(),
    );
    1.0 - 2.0 * overlap
}

/// What one party receives from Eve's source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FakedParticle {
    Pure(PolarState),
    /// Equal mixture of two states.
    Mixture(EquatorState, EquatorState),
}

impl FakedParticle {
    fn overlap(self, eigen_angle: f64) -> f64 {
        match self {
            FakedParticle::Pure(s) => polar::overlap_probability(s, eigen_angle),
            FakedParticle::Mixture(x, y) => {
                0.5 * (polar::overlap_probability(x, eigen_angle) + polar::overlap_probability(y, eigen_angle))
            }
        }
    }

    fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> PolarState {
        match self {
            FakedParticle::Pure(s) => s,
            FakedParticle::Mixture(x, y) => {
                if rng.random() {
                    y.into()
                } else {
                    x.into()
                }
            }
        }
    }
}

/// t₊₁: only the +1 detector live.
pub const T_PLUS: ControlTag = ControlTag::Zero;
/// t₋₁: only the -1 detector live.
pub const T_MINUS: ControlTag = ControlTag::One;

fn live_sign(tag: ControlTag) -> Option<Sign> {
    match tag {
        ControlTag::Zero => Some(Sign::Plus),
        ControlTag::One => Some(Sign::Minus),
        ControlTag::Normal => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FakedPair {
    pub alice: FakedParticle,
    pub alice_tag: ControlTag,
    pub bob: FakedParticle,
    pub bob_tag: ControlTag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FakedPairCombination {
    pub name: String,
    pub variants: [FakedPair; 2],
}

fn eq(deg: f64) -> FakedParticle {
    FakedParticle::Pure(PolarState::equator(deg))
}

fn antipodal(axis: f64) -> FakedParticle {
    FakedParticle::Mixture(EquatorState::new(axis), EquatorState::new(axis + 180.0))
}

impl FakedPairCombination {
    pub fn alpha() -> Self {
        let circ = FakedParticle::Pure(PolarState::Pole(PoleState::North));
        Self::symmetric("alpha", circ, T_PLUS, circ, T_MINUS)
    }

    /// α built from protocol states: each side gets a random member of
    /// one basis (a₃ for Alice, b₁ for Bob).
    pub fn alpha_from_basis_states() -> Self {
        let a = antipodal(ALICE_AXES[2]);
        let b = antipodal(BOB_AXES[0]);
        Self::symmetric("alpha_basis_states", a, T_PLUS, b, T_MINUS)
    }

    pub fn beta() -> Self {
        Self::signed("beta", ALICE_AXES[2], BOB_AXES[0])
    }

    pub fn gamma() -> Self {
        Self::signed("gamma", ALICE_AXES[1], BOB_AXES[1])
    }

    /// The same particles with the controls swapped between variants.
    fn symmetric(name: &str, alice: FakedParticle, alice_tag: ControlTag, bob: FakedParticle, bob_tag: ControlTag) -> Self {
        let flip = |t: ControlTag| if t == T_PLUS { T_MINUS } else { T_PLUS };
        Self {
            name: name.into(),
            variants: [
                FakedPair { alice, alice_tag, bob, bob_tag },
                FakedPair {
                    alice,
                    alice_tag: flip(alice_tag),
                    bob,
                    bob_tag: flip(bob_tag),
                },
            ],
        }
    }

    /// `[(-a)_{t+1}, (-b)_{t+1}]` or `[(a)_{t-1}, (b)_{t-1}]`.
    fn signed(name: &str, alice_axis: f64, bob_axis: f64) -> Self {
        Self {
            name: name.into(),
            variants: [
                FakedPair {
                    alice: eq(alice_axis + 180.0),
                    alice_tag: T_PLUS,
                    bob: eq(bob_axis + 180.0),
                    bob_tag: T_PLUS,
                },
                FakedPair {
                    alice: eq(alice_axis),
                    alice_tag: T_MINUS,
                    bob: eq(bob_axis),
                    bob_tag: T_MINUS,
                },
            ],
        }
    }

    pub fn swapped(&self) -> Self {
        Self {
            name: self.name.clone(),
            variants: [self.variants[1], self.variants[0]],
        }
    }
}

/// The three combinations in α, β, γ order.
pub fn standard_combinations() -> [FakedPairCombination; 3] {
    [
        FakedPairCombination::alpha(),
        FakedPairCombination::beta(),
        FakedPairCombination::gamma(),
    ]
}

/// Coincidence probability and correlation for one basis pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairCorrelation {
    pub d: f64,
    /// `None` when no coincidences occur.
    pub e: Option<f64>,
    /// `P(s_A, s_B)` before normalization, `[+/-][+/-]`.
    pub joint: [[f64; 2]; 2],
}

impl PairCorrelation {
    fn from_joint(joint: [[f64; 2]; 2]) -> Self {
        let d: f64 = joint.iter().flatten().sum();
        let e = (d > 0.0).then(|| (joint[0][0] + joint[1][1] - joint[0][1] - joint[1][0]) / d);
        Self { d, e, joint }
    }
}

fn sign_index(s: Sign) -> usize {
    match s {
        Sign::Plus => 0,
        Sign::Minus => 1,
    }
}

/// Live-outcome probabilities of one variant under total mismatch.
fn variant_joint(v: &FakedPair, pair: BasisPair) -> [[f64; 2]; 2] {
    let mut joint = [[0.0; 2]; 2];
    let (Some(sa), Some(sb)) = (live_sign(v.alice_tag), live_sign(v.bob_tag)) else {
        return joint;
    };
    let pa = v.alice.overlap(pair.alice_basis().eigen_angle(sa));
    let pb = v.bob.overlap(pair.bob_basis().eigen_angle(sb));
    joint[sign_index(sa)][sign_index(sb)] = pa * pb;
    joint
}

/// (d, E) of a combination at one basis pair, assuming total mismatch with
/// perfect live detectors on both sides.
pub fn combination_correlation(combo: &FakedPairCombination, pair: BasisPair) -> PairCorrelation {
    let mut joint = [[0.0; 2]; 2];
    for v in &combo.variants {
        let j = variant_joint(v, pair);
        for (row, jrow) in joint.iter_mut().zip(j) {
            for (x, y) in row.iter_mut().zip(jrow) {
                *x += 0.5 * y;
            }
        }
    }
    PairCorrelation::from_joint(joint)
}

/// [`combination_correlation`] for explicit detector specs; only total
/// mismatch with unit live efficiency is modelled.
pub fn combination_correlation_for(
    combo: &FakedPairCombination,
    pair: BasisPair,
    alice: &MismatchSpec,
    bob: &MismatchSpec,
) -> Result<PairCorrelation> {
    for spec in [alice, bob] {
        if !spec.is_total() || spec.eta0_t0 != 1.0 || spec.eta1_t1 != 1.0 {
            return Err(Error::Unsupported(
                "faked pair sources are modelled for total mismatch with unit live efficiency only".into(),
            ));
        }
    }
    Ok(combination_correlation(combo, pair))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl MixtureWeights {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let w = Self { alpha, beta, gamma };
        let all = w.as_array();
        if all.iter().any(|&p| !(p.is_finite() && p >= 0.0)) {
            return Err(Error::param("weights", "must be finite and non-negative"));
        }
        if (all.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::param("weights", "must sum to 1"));
        }
        Ok(w)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.alpha, self.beta, self.gamma]
    }

    /// `(1 : 4√2 : 2) / (3 + 4√2)`: equal CHSH terms of magnitude 1/√2.
    pub fn equal_terms() -> Self {
        let r = 4.0 * std::f64::consts::SQRT_2;
        let n = 3.0 + r;
        Self {
            alpha: 1.0 / n,
            beta: r / n,
            gamma: 2.0 / n,
        }
    }

    /// α and β only, reaching S = -2√2.
    pub fn two_combination() -> Self {
        let b = std::f64::consts::SQRT_2 - 1.0;
        Self {
            alpha: 1.0 - b,
            beta: b,
            gamma: 0.0,
        }
    }
}

/// How Alice and Bob normalize coincidence counts before forming E.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Separately for every basis pair.
    #[default]
    PerPair,
    /// By the coincidence probability averaged over all nine pairs.
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    /// `[alice - 1][bob - 1]`.
    entries: [[PairCorrelation; 3]; 3],
}

impl CorrelationMatrix {
    pub fn get(&self, pair: BasisPair) -> &PairCorrelation {
        let (a, b) = pair.index();
        &self.entries[a][b]
    }

    pub fn e(&self, pair: BasisPair) -> Option<f64> {
        self.get(pair).e
    }

    pub fn d(&self, pair: BasisPair) -> f64 {
        self.get(pair).d
    }

    /// Honest singlet with perfect detectors: d = 1 everywhere.
    pub fn singlet() -> Self {
        Self::from_fn(|pair| {
            let e = singlet_correlation(pair);
            let same = 0.25 * (1.0 + e);
            let diff = 0.25 * (1.0 - e);
            PairCorrelation {
                d: 1.0,
                e: Some(e),
                joint: [[same, diff], [diff, same]],
            }
        })
    }

    fn from_fn(mut f: impl FnMut(BasisPair) -> PairCorrelation) -> Self {
        let entries = [0, 1, 2].map(|a| [0, 1, 2].map(|b| f(BasisPair::new(a as u8 + 1, b as u8 + 1))));
        Self { entries }
    }

    /// CHSH terms `[E₁₁, E₁₃, E₃₁, E₃₃]`.
    pub fn chsh_terms(&self) -> Result<[f64; 4]> {
        let mut out = [0.0; 4];
        for (o, pair) in out.iter_mut().zip(CHSH_PAIRS) {
            *o = self.e(pair).ok_or(Error::Undefined("correlation at a CHSH pair (no coincidences)"))?;
        }
        Ok(out)
    }
}

/// `S = E₁₁ - E₁₃ + E₃₁ + E₃₃`.
pub fn chsh(matrix: &CorrelationMatrix) -> Result<f64> {
    Ok(chsh_from_terms(matrix.chsh_terms()?))
}

pub fn chsh_from_terms(terms: [f64; 4]) -> f64 {
    terms.iter().zip(CHSH_SIGNS).map(|(e, s)| e * s).sum()
}

/// Weighted mix of arbitrary combinations.
pub fn mix(parts: &[(f64, &FakedPairCombination)], normalization: Normalization) -> CorrelationMatrix {
    let raw = CorrelationMatrix::from_fn(|pair| {
        let mut joint = [[0.0; 2]; 2];
        for (w, combo) in parts {
            let c = combination_correlation(combo, pair);
            for (row, crow) in joint.iter_mut().zip(c.joint) {
                for (x, y) in row.iter_mut().zip(crow) {
                    *x += w * y;
                }
            }
        }
        PairCorrelation::from_joint(joint)
    });
    match normalization {
        Normalization::PerPair => raw,
        Normalization::Global => {
            let mean = BasisPair::all().map(|p| raw.d(p)).sum::<f64>() / 9.0;
            CorrelationMatrix::from_fn(|pair| {
                let c = *raw.get(pair);
                let j = c.joint;
                PairCorrelation {
                    e: (c.d > 0.0 && mean > 0.0).then(|| (j[0][0] + j[1][1] - j[0][1] - j[1][0]) / mean),
                    ..c
                }
            })
        }
    }
}

/// The α/β/γ mixture.
pub fn mixture_correlations(weights: &MixtureWeights, normalization: Normalization) -> CorrelationMatrix {
    let combos = standard_combinations();
    let parts: Vec<(f64, &FakedPairCombination)> =
        weights.as_array().into_iter().zip(combos.iter()).collect();
    mix(&parts, normalization)
}

/// Which correlations Eve aims for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightTarget {
    /// All four CHSH terms of magnitude `m` with the honest signs
    /// (-m, +m, -m, -m), using α, β and γ.
    EqualTerms(f64),
    /// A given S from α and β only; E₁₃ absorbs the change, the other
    /// CHSH terms stay at -1.
    TwoCombination(f64),
}

/// Solves the linear conditions `Σ_k P_k d_k (E_k - target) = 0` at every
/// CHSH pair together with `Σ P_k = 1` by least squares, and accepts the
/// result only if it is exact and inside the simplex.
pub fn solve_weights(target: WeightTarget) -> Result<MixtureWeights> {
    let (targets, n_combos) = match target {
        WeightTarget::EqualTerms(m) => {
            if !(m.is_finite() && (0.0..=1.0).contains(&m)) {
                return Err(Error::param("target", "term magnitude must lie in [0, 1]"));
            }
            ([-m, m, -m, -m], 3)
        }
        WeightTarget::TwoCombination(s) => {
            if !s.is_finite() {
                return Err(Error::param("target", "S must be finite"));
            }
            ([-1.0, -3.0 - s, -1.0, -1.0], 2)
        }
    };
    let combos = standard_combinations();
    let mut a = DMatrix::<f64>::zeros(5, n_combos);
    let mut b = DVector::<f64>::zeros(5);
    for (row, (pair, t)) in CHSH_PAIRS.iter().zip(targets).enumerate() {
        for (k, combo) in combos.iter().take(n_combos).enumerate() {
            let c = combination_correlation(combo, *pair);
            a[(row, k)] = c.d * (c.e.unwrap_or(0.0) - t);
        }
    }
    for k in 0..n_combos {
        a[(4, k)] = 1.0;
    }
    b[4] = 1.0;
    let x = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::Infeasible(e.to_string()))?;
    let residual = (&a * &x - &b).norm();
    if residual > 1e-9 || x.iter().any(|&p| p < -1e-12) {
        return Err(Error::Infeasible(format!(
            "no non-negative weights reach {target:?} (residual {residual:.3e})"
        )));
    }
    let p = |k: usize| if k < n_combos { x[k].max(0.0) } else { 0.0 };
    let total = p(0) + p(1) + p(2);
    let weights = MixtureWeights::new(p(0) / total, p(1) / total, p(2) / total)?;
    // a pair without coincidences satisfies its equation trivially
    let reached = mixture_correlations(&weights, Normalization::PerPair).chsh_terms();
    match reached {
        Ok(terms) if terms.iter().zip(targets).all(|(e, t)| (e - t).abs() < 1e-9) => Ok(weights),
        _ => Err(Error::Infeasible(format!(
            "{target:?} leaves a CHSH pair without coincidences"
        ))),
    }
}

/// S for an α/β mix with weight `p_beta` on β: `-2 - 2 P_β`.
pub fn s_of_beta(p_beta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p_beta) {
        return Err(Error::param("p_beta", "must lie in [0, 1)"));
    }
    Ok(-2.0 - 2.0 * p_beta)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SideEffectRow {
    pub pair: BasisPair,
    pub d: f64,
    pub e_mix: Option<f64>,
    pub e_singlet: f64,
    pub in_key_set: bool,
    pub in_chsh_set: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SideEffectsReport {
    pub rows: Vec<SideEffectRow>,
    /// Largest over smallest nonzero d.
    pub d_disparity: f64,
    /// Pairs whose d differs from the mean, or whose E differs from the
    /// singlet value, beyond 1e-9.
    pub flagged: Vec<BasisPair>,
}

impl SideEffectsReport {
    /// `pair,d,E_mix,E_singlet,in_key_set,in_chsh_set`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["pair", "d", "E_mix", "E_singlet", "in_key_set", "in_chsh_set"])?;
        for r in &self.rows {
            w.write_record([
                r.pair.to_string(),
                r.d.to_string(),
                r.e_mix.map_or(String::new(), |e| e.to_string()),
                r.e_singlet.to_string(),
                r.in_key_set.to_string(),
                r.in_chsh_set.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// All nine pairs for a source; `None` means the honest singlet.
pub fn side_effects_report(weights: Option<&MixtureWeights>) -> SideEffectsReport {
    let matrix = match weights {
        Some(w) => mixture_correlations(w, Normalization::PerPair),
        None => CorrelationMatrix::singlet(),
    };
    let rows: Vec<SideEffectRow> = BasisPair::all()
        .map(|pair| SideEffectRow {
            pair,
            d: matrix.d(pair),
            e_mix: matrix.e(pair),
            e_singlet: singlet_correlation(pair),
            in_key_set: pair.is_key(),
            in_chsh_set: pair.is_chsh(),
        })
        .collect();
    let mean = rows.iter().map(|r| r.d).sum::<f64>() / rows.len() as f64;
    let nonzero = rows.iter().map(|r| r.d).filter(|&d| d > 0.0);
    let (lo, hi) = nonzero.fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
    let flagged = rows
        .iter()
        .filter(|r| (r.d - mean).abs() > 1e-9 || r.e_mix.is_none_or(|e| (e - r.e_singlet).abs() > 1e-9))
        .map(|r| r.pair)
        .collect();
    SideEffectsReport {
        rows,
        d_disparity: if lo.is_finite() { hi / lo } else { f64::NAN },
        flagged,
    }
}

/// Key and correlation counters of a simulated faked source.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EkertStats {
    /// Key-pair coincidences; errors are non-anticorrelated outcomes.
    pub stats: AttackStats,
    /// Emitted pairs per basis pair, `[alice - 1][bob - 1]`.
    pub pairs: [[u64; 3]; 3],
    /// Coincidence counts `[alice - 1][bob - 1][+/- Alice][+/- Bob]`.
    pub counts: [[[[u64; 2]; 2]; 3]; 3],
}

impl Merge for EkertStats {
    fn merge(&mut self, o: Self) {
        self.stats.merge(o.stats);
        for a in 0..3 {
            for b in 0..3 {
                self.pairs[a][b] += o.pairs[a][b];
                for x in 0..2 {
                    for y in 0..2 {
                        self.counts[a][b][x][y] += o.counts[a][b][x][y];
                    }
                }
            }
        }
    }
}

impl EkertStats {
    pub fn coincidences(&self, pair: BasisPair) -> u64 {
        let (a, b) = pair.index();
        self.counts[a][b].iter().flatten().sum()
    }

    /// Empirical matrix with per-pair normalization.
    pub fn correlation_matrix(&self) -> CorrelationMatrix {
        CorrelationMatrix::from_fn(|pair| {
            let (a, b) = pair.index();
            let n = self.pairs[a][b] as f64;
            let c = self.counts[a][b];
            let joint = c.map(|row| row.map(|k| if n > 0.0 { k as f64 / n } else { 0.0 }));
            PairCorrelation::from_joint(joint)
        })
    }

    /// Empirical S and its standard error `sqrt(Σ (1 - E²)/N)`.
    pub fn chsh(&self) -> Result<(f64, f64)> {
        let m = self.correlation_matrix();
        let terms = m.chsh_terms()?;
        let var: f64 = CHSH_PAIRS
            .iter()
            .zip(terms)
            .map(|(p, e)| (1.0 - e * e).max(0.0) / self.coincidences(*p) as f64)
            .sum();
        Ok((chsh_from_terms(terms), var.sqrt()))
    }
}

fn measure_side<R: Rng + ?Sized>(particle: FakedParticle, tag: ControlTag, basis: MeasurementBasis, rng: &mut R) -> Option<Sign> {
    let live = live_sign(tag)?;
    let eff = ClickEfficiencies {
        plus: f64::from(u8::from(live == Sign::Plus)),
        minus: f64::from(u8::from(live == Sign::Minus)),
    };
    match polar::measure(particle.draw(rng), basis, eff, rng) {
        Outcome::Click(s) => Some(s),
        Outcome::NoClick => None,
    }
}

/// Samples combination, variant and both bases for every pair; outcomes
/// come from single-photon measurements with the blinded detector dead.
pub fn simulate(n: u64, weights: &MixtureWeights, settings: &RunSettings) -> Result<EkertStats> {
    if n == 0 {
        return Err(Error::param("pairs", "must be positive"));
    }
    let weights = MixtureWeights::new(weights.alpha, weights.beta, weights.gamma)?;
    let combos = standard_combinations();
    let cumulative = [weights.alpha, weights.alpha + weights.beta];
    Ok(run_partitioned(n, settings, |rng, count| {
        let mut st = EkertStats::default();
        for _ in 0..count {
            let u: f64 = rng.random();
            let k = cumulative.iter().take_while(|&&c| u >= c).count();
            let variant = combos[k].variants[usize::from(rng.random::<bool>())];
            let pair = BasisPair::new(rng.random_range(1..=3), rng.random_range(1..=3));
            let (a, b) = pair.index();
            st.pairs[a][b] += 1;
            st.stats.rounds += 1;
            st.stats.diagnostics.record_sent(variant.alice_tag);
            let sa = measure_side(variant.alice, variant.alice_tag, pair.alice_basis(), rng);
            let sb = measure_side(variant.bob, variant.bob_tag, pair.bob_basis(), rng);
            if let Some(s) = sa {
                st.stats.diagnostics.record_click(variant.alice_tag, Detector::from_bit(s.bit()));
            }
            let (Some(sa), Some(sb)) = (sa, sb) else { continue };
            st.counts[a][b][sign_index(sa)][sign_index(sb)] += 1;
            if pair.is_key() {
                // Bob inverts his bit; Eve knows the live sign she forced on Alice
                let alice_bit = sa.bit();
                let bob_bit = 1 - sb.bit();
                let eve_guess = live_sign(variant.alice_tag).map(Sign::bit);
                st.stats.record_sifted(alice_bit != bob_bit, eve_guess == Some(alice_bit));
            }
        }
        st
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn singlet_values() {
        assert_eq!(singlet_correlation(BasisPair::new(2, 1)), -1.0);
        assert_eq!(singlet_correlation(BasisPair::new(3, 2)), -1.0);
        assert!(close(singlet_correlation(BasisPair::new(1, 1)), -FRAC_1_SQRT_2, 1e-15));
        assert!(close(singlet_correlation(BasisPair::new(1, 3)), FRAC_1_SQRT_2, 1e-15));
        let s = chsh(&CorrelationMatrix::singlet()).unwrap();
        assert!(close(s, -2.0 * SQRT_2, 1e-12));
    }

    #[test]
    fn chsh_of_simple_matrices() {
        assert_eq!(chsh_from_terms([-1.0; 4]), -2.0);
        assert_eq!(chsh_from_terms([0.0; 4]), 0.0);
    }

    #[test]
    fn alpha_everywhere() {
        for combo in [FakedPairCombination::alpha(), FakedPairCombination::alpha_from_basis_states()] {
            for pair in BasisPair::all() {
                let c = combination_correlation(&combo, pair);
                assert!(close(c.d, 0.25, 1e-15), "{} {pair}", combo.name);
                assert_eq!(c.e, Some(-1.0));
            }
        }
    }

    #[test]
    fn beta_reaches_only_listed_pairs() {
        let beta = FakedPairCombination::beta();
        let reached: Vec<BasisPair> = BasisPair::all()
            .filter(|&p| combination_correlation(&beta, p).d > 1e-15)
            .collect();
        let expected = [(1, 2), (1, 3), (2, 2), (2, 3)].map(|(a, b)| BasisPair::new(a, b));
        assert_eq!(reached, expected);
        let c = combination_correlation(&beta, BasisPair::new(1, 3));
        assert!(close(c.d, 0.25, 1e-15));
        assert_eq!(c.e, Some(1.0));
        assert_eq!(combination_correlation(&beta, BasisPair::new(3, 1)).e, None);
    }

    #[test]
    fn gamma_at_chsh_pairs() {
        let gamma = FakedPairCombination::gamma();
        let g = (3.0 - 2.0 * SQRT_2) / 8.0;
        for p in CHSH_PAIRS {
            let c = combination_correlation(&gamma, p);
            assert!(close(c.d, g, 1e-15));
            assert_eq!(c.e, Some(1.0));
        }
        for p in KEY_PAIRS {
            assert_eq!(combination_correlation(&gamma, p).d, 0.0);
        }
    }

    #[test]
    fn swapping_variants_changes_nothing() {
        for combo in standard_combinations() {
            for pair in BasisPair::all() {
                let a = combination_correlation(&combo, pair);
                let b = combination_correlation(&combo.swapped(), pair);
                assert!(close(a.d, b.d, 1e-15));
                assert_eq!(a.e, b.e);
            }
        }
    }

    #[test]
    fn outcomes_equiprobable_per_side() {
        for combo in standard_combinations() {
            for pair in BasisPair::all() {
                let c = combination_correlation(&combo, pair);
                let alice_plus = c.joint[0][0] + c.joint[0][1];
                let alice_minus = c.joint[1][0] + c.joint[1][1];
                let bob_plus = c.joint[0][0] + c.joint[1][0];
                let bob_minus = c.joint[0][1] + c.joint[1][1];
                assert!(close(alice_plus, alice_minus, 1e-15));
                assert!(close(bob_plus, bob_minus, 1e-15));
            }
        }
    }

    #[test]
    fn partial_mismatch_is_unsupported() {
        let partial = MismatchSpec::symmetric(0.1).unwrap();
        let total = MismatchSpec::total();
        let alpha = FakedPairCombination::alpha();
        assert!(matches!(
            combination_correlation_for(&alpha, BasisPair::new(1, 1), &partial, &total),
            Err(Error::Unsupported(_))
        ));
        assert!(combination_correlation_for(&alpha, BasisPair::new(1, 1), &total, &total).is_ok());
    }

    #[test]
    fn closed_form_weights() {
        let w = MixtureWeights::equal_terms();
        let m = mixture_correlations(&w, Normalization::PerPair);
        let t = m.chsh_terms().unwrap();
        for (e, expect) in t.iter().zip([-FRAC_1_SQRT_2, FRAC_1_SQRT_2, -FRAC_1_SQRT_2, -FRAC_1_SQRT_2]) {
            assert!(close(*e, expect, 1e-12));
        }
        for p in KEY_PAIRS {
            assert_eq!(m.e(p), Some(-1.0));
        }
    }

    #[test]
    fn solver_matches_closed_forms() {
        let w = solve_weights(WeightTarget::EqualTerms(FRAC_1_SQRT_2)).unwrap();
        let c = MixtureWeights::equal_terms();
        for (x, y) in w.as_array().iter().zip(c.as_array()) {
            assert!(close(*x, y, 1e-10));
        }
        let w = solve_weights(WeightTarget::TwoCombination(-2.0 * SQRT_2)).unwrap();
        assert!(close(w.beta, SQRT_2 - 1.0, 1e-12));
        assert!(close(w.alpha, 2.0 - SQRT_2, 1e-12));
        let w = solve_weights(WeightTarget::TwoCombination(-2.0)).unwrap();
        assert!(close(w.alpha, 1.0, 1e-12));
        assert!(matches!(solve_weights(WeightTarget::EqualTerms(1.0)), Err(Error::Infeasible(_))));
        assert!(matches!(solve_weights(WeightTarget::TwoCombination(-4.5)), Err(Error::Infeasible(_))));
    }

    #[test]
    fn s_of_beta_matches_mixture() {
        for i in 0..100 {
            let p = f64::from(i) / 100.0;
            let w = MixtureWeights::new(1.0 - p, p, 0.0).unwrap();
            let s = chsh(&mixture_correlations(&w, Normalization::PerPair)).unwrap();
            assert!(close(s, s_of_beta(p).unwrap(), 1e-12));
        }
        assert!(s_of_beta(1.0).is_err());
    }

    #[test]
    fn global_normalization_differs() {
        let w = MixtureWeights::equal_terms();
        let m = mixture_correlations(&w, Normalization::Global);
        let s = chsh(&m).unwrap();
        assert!(s.is_finite());
        assert!((s + 2.0 * SQRT_2).abs() > 1e-3);
    }

    #[test]
    fn side_effects() {
        let honest = side_effects_report(None);
        assert!(honest.flagged.is_empty());
        assert!(close(honest.d_disparity, 1.0, 1e-15));

        let w = MixtureWeights::equal_terms();
        let r = side_effects_report(Some(&w));
        let d = |a, b| r.rows.iter().find(|x| x.pair == BasisPair::new(a, b)).unwrap().d;
        assert!(close(d(2, 1), w.alpha / 4.0, 1e-15));
        assert!(d(1, 3) / d(2, 1) > 6.0);
        assert!(!r.flagged.is_empty());
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 10);
    }

    #[test]
    fn simulated_key_is_clean() {
        let st = simulate(200_000, &MixtureWeights::equal_terms(), &RunSettings::new(5, 2)).unwrap();
        assert!(st.stats.sifted > 0);
        assert_eq!(st.stats.errors, 0);
        assert_eq!(st.stats.eve_knowledge(), Some(1.0));
        let (s, sigma) = st.chsh().unwrap();
        assert!((s + 2.0 * SQRT_2).abs() < 4.0 * sigma, "S = {s} ± {sigma}");
    }
}
