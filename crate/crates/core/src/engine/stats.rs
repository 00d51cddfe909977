use serde::Serialize;

use super::Merge;
use crate::detmodel::{ControlTag, Detector};
use crate::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ControlCounter {
    pub sent: u64,
    pub clicked: u64,
}

/// Rate and coincidence monitoring counters.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Diagnostics {
    /// Indexed by [`ControlTag::index`].
    pub per_control: [ControlCounter; 3],
    pub detector_clicks: [u64; 2],
    pub total_clicks: u64,
    /// Rounds (or windows) in which more than one click was registered.
    pub coincidences: u64,
}

impl Diagnostics {
    pub fn record_sent(&mut self, tag: ControlTag) {
        self.per_control[tag.index()].sent += 1;
    }

    pub fn record_click(&mut self, tag: ControlTag, detector: Detector) {
        self.per_control[tag.index()].clicked += 1;
        self.detector_clicks[detector.index()] += 1;
        self.total_clicks += 1;
    }

    pub fn detection_rate(&self, tag: ControlTag) -> Option<f64> {
        let c = self.per_control[tag.index()];
        (c.sent > 0).then(|| c.clicked as f64 / c.sent as f64)
    }

    pub fn click_share(&self, detector: Detector) -> Option<f64> {
        (self.total_clicks > 0)
            .then(|| self.detector_clicks[detector.index()] as f64 / self.total_clicks as f64)
    }

    /// Per-detector clicks add up to the total.
    pub fn is_consistent(&self) -> bool {
        self.detector_clicks.iter().sum::<u64>() == self.total_clicks
    }
}

impl Merge for Diagnostics {
    fn merge(&mut self, o: Self) {
        for (a, b) in self.per_control.iter_mut().zip(o.per_control) {
            a.sent += b.sent;
            a.clicked += b.clicked;
        }
        for (a, b) in self.detector_clicks.iter_mut().zip(o.detector_clicks) {
            *a += b;
        }
        self.total_clicks += o.total_clicks;
        self.coincidences += o.coincidences;
    }
}

/// Sifted-key counters of one simulated run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AttackStats {
    pub rounds: u64,
    pub sifted: u64,
    pub errors: u64,
    /// Sifted bits whose value Eve's records determine correctly.
    pub eve_known: u64,
    pub diagnostics: Diagnostics,
}

impl AttackStats {
    pub fn qber(&self) -> Option<f64> {
        (self.sifted > 0).then(|| self.errors as f64 / self.sifted as f64)
    }

    pub fn eve_knowledge(&self) -> Option<f64> {
        (self.sifted > 0).then(|| self.eve_known as f64 / self.sifted as f64)
    }

    pub fn qber_estimate(&self) -> Result<QberEstimate> {
        qber_estimate(self.errors, self.sifted)
    }

    pub fn coincidence_rate(&self) -> Option<f64> {
        (self.rounds > 0).then(|| self.diagnostics.coincidences as f64 / self.rounds as f64)
    }

    pub(crate) fn record_sifted(&mut self, error: bool, eve_knows: bool) {
        self.sifted += 1;
        self.errors += u64::from(error);
        self.eve_known += u64::from(eve_knows);
    }
}

impl Merge for AttackStats {
    fn merge(&mut self, o: Self) {
        self.rounds += o.rounds;
        self.sifted += o.sifted;
        self.errors += o.errors;
        self.eve_known += o.eve_known;
        self.diagnostics.merge(o.diagnostics);
    }
}

/// QBER point estimate with a Wilson-score 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QberEstimate {
    pub point: f64,
    pub low: f64,
    pub high: f64,
    pub errors: u64,
    pub kept: u64,
}

impl QberEstimate {
    pub fn contains(&self, value: f64) -> bool {
        self.low <= value && value <= self.high
    }

    pub fn overlaps(&self, other: &QberEstimate) -> bool {
        self.low <= other.high && other.low <= self.high
    }

    /// Binomial standard error at the point estimate.
    pub fn sigma(&self) -> f64 {
        binomial_sigma(self.point, self.kept)
    }
}

pub fn qber_estimate(errors: u64, kept: u64) -> Result<QberEstimate> {
    if kept == 0 {
        return Err(Error::Undefined("QBER (no sifted bits)"));
    }
    if errors > kept {
        return Err(Error::param("errors", "exceed the number of kept bits"));
    }
    let point = errors as f64 / kept as f64;
    let (low, high) = wilson_interval(errors, kept, Z95);
    Ok(QberEstimate {
        point,
        low: low.min(point),
        high: high.max(point),
        errors,
        kept,
    })
}

pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

pub fn binomial_sigma(p: f64, n: u64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Statistical agreement classes: within 3σ passes, 3σ–4σ is flagged but
/// tolerated, beyond 4σ fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Agreement {
    Within,
    Flagged,
    Failed,
}

impl Agreement {
    pub fn acceptable(self) -> bool {
        self != Agreement::Failed
    }
}

pub fn agreement(observed: f64, expected: f64, sigma: f64) -> Agreement {
    let dev = (observed - expected).abs();
    if dev <= 3.0 * sigma {
        Agreement::Within
    } else if dev <= 4.0 * sigma {
        Agreement::Flagged
    } else {
        Agreement::Failed
    }
}
