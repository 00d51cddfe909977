//! Scenario configuration.
//!
//! A scenario file is TOML with optional sections `[scenario]`,
//! `[detectors]`, `[brightness]`, `[bb84]`, `[phasetime]`, `[dpsk]`,
//! `[ekert]`, `[sweep]` and `[output]`. Command-line flags are expressed as
//! a second [`RawConfig`] and layered on top with [`RawConfig::overlay`].
//! [`RawConfig::resolve`] validates everything and reports problems with
//! the dotted key that caused them.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::detmodel::{
    choose_control_values, linear_grid, Brightness, ControlChoice, DetectorPair, EfficiencyCurve,
    LabelConvention, MismatchSpec,
};
use crate::ekert::{MixtureWeights, Normalization, WeightTarget};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Bb84,
    Sarg04,
    Phasetime,
    Dpsk,
    Ekert,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Bb84 => "bb84",
            Protocol::Sarg04 => "sarg04",
            Protocol::Phasetime => "phasetime",
            Protocol::Dpsk => "dpsk",
            Protocol::Ekert => "ekert",
        }
    }
}

impl FromStr for Protocol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "bb84" => Protocol::Bb84,
            "sarg04" => Protocol::Sarg04,
            "phasetime" => Protocol::Phasetime,
            "dpsk" => Protocol::Dpsk,
            "ekert" => Protocol::Ekert,
            other => return Err(Error::config("scenario.protocol", format!("unknown protocol `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// The faked-states attack.
    Attack,
    /// No eavesdropper (phase-time and DPSK).
    Honest,
    /// BB84 attack against randomized detector assignment.
    Countermeasure,
    /// BB84 time-shift attack.
    TimeShift,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Attack => "attack",
            Mode::Honest => "honest",
            Mode::Countermeasure => "countermeasure",
            Mode::TimeShift => "time-shift",
        }
    }

    fn supported_by(self, p: Protocol) -> bool {
        match self {
            Mode::Attack => true,
            Mode::Honest => matches!(p, Protocol::Phasetime | Protocol::Dpsk),
            Mode::Countermeasure | Mode::TimeShift => p == Protocol::Bb84,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParam {
    /// Symmetric mismatch ratio η (diagonals 1).
    Eta,
    Mu,
    EveEfficiency,
    PShift,
    /// Weight of β in an α/β Ekert mix.
    PBeta,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Eta => "eta",
            SweepParam::Mu => "mu",
            SweepParam::EveEfficiency => "eve_efficiency",
            SweepParam::PShift => "p_shift",
            SweepParam::PBeta => "p_beta",
        }
    }
}

impl FromStr for SweepParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "eta" => SweepParam::Eta,
            "mu" => SweepParam::Mu,
            "eve_efficiency" | "eve-efficiency" => SweepParam::EveEfficiency,
            "p_shift" | "p-shift" => SweepParam::PShift,
            "p_beta" | "p-beta" => SweepParam::PBeta,
            other => return Err(Error::config("sweep.param", format!("unknown sweep parameter `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl SweepSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.from];
        }
        let step = (self.to - self.from) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| if i + 1 == self.steps { self.to } else { self.from + step * i as f64 })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum BrightnessMode {
    Unit,
    /// Scale t₀/t₁ light so both live detectors respond equally.
    Equalizing,
    /// DPSK: keep Bob's click rate at its honest value.
    Compensating,
    Explicit(Brightness),
}

/// Where the four mismatch efficiencies come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DetectorSetup {
    Mismatch(MismatchSpec),
    Curves { pair: DetectorPair, choice: ControlChoice },
}

impl DetectorSetup {
    pub fn spec(&self) -> &MismatchSpec {
        match self {
            DetectorSetup::Mismatch(m) => m,
            DetectorSetup::Curves { choice, .. } => &choice.spec,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub protocol: Protocol,
    pub mode: Mode,
    pub rounds: u64,
    pub seed: u64,
    pub workers: usize,
    pub detectors: DetectorSetup,
    /// Bob's port efficiencies at t_normal.
    pub normal: [f64; 2],
    pub brightness: BrightnessMode,
    pub eve_efficiency: f64,
    pub p_shift_to_t0: f64,
    pub mu: f64,
    pub frame_len: usize,
    pub weights: MixtureWeights,
    pub normalization: Normalization,
    pub sweep: Option<SweepSpec>,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub scenario: RawScenario,
    #[serde(default)]
    pub detectors: RawDetectors,
    #[serde(default)]
    pub brightness: RawBrightness,
    #[serde(default)]
    pub bb84: RawBb84,
    #[serde(default)]
    pub phasetime: RawPulsed,
    #[serde(default)]
    pub dpsk: RawDpsk,
    #[serde(default)]
    pub ekert: RawEkert,
    #[serde(default)]
    pub sweep: RawSweep,
    #[serde(default)]
    pub output: RawOutput,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScenario {
    pub protocol: Option<String>,
    pub mode: Option<String>,
    pub rounds: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDetectors {
    /// Symmetric ratio; diagonals 1.
    pub eta: Option<f64>,
    pub eta0_t0: Option<f64>,
    pub eta0_t1: Option<f64>,
    pub eta1_t0: Option<f64>,
    pub eta1_t1: Option<f64>,
    /// Efficiency curve of detector 0 (`constant:`, `gauss:`, `table:`).
    pub zero: Option<String>,
    pub one: Option<String>,
    pub grid_from: Option<f64>,
    pub grid_to: Option<f64>,
    pub grid_steps: Option<usize>,
    pub normal: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawBrightness {
    /// `unit`, `equalizing`, `compensating` or `explicit`.
    pub mode: Option<String>,
    pub normal: Option<f64>,
    pub t0: Option<f64>,
    pub t1: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawBb84 {
    pub eve_efficiency: Option<f64>,
    pub p_shift_to_t0: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPulsed {
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDpsk {
    pub mu: Option<f64>,
    pub frame_len: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawEkert {
    /// Explicit `[P_α, P_β, P_γ]`.
    pub weights: Option<[f64; 3]>,
    /// `equal-terms` or `two-combination`, solved when no weights are given.
    pub target: Option<String>,
    pub normalization: Option<Normalization>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSweep {
    pub param: Option<String>,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOutput {
    pub format: Option<OutputFormat>,
    pub path: Option<PathBuf>,
}

macro_rules! overlay_fields {
    ($base:expr, $top:expr; $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

impl RawConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let path = e
                .span()
                .map(|s| format!("line {}", text[..s.start].lines().count().max(1)))
                .unwrap_or_else(|| "config".into());
            Error::config(path, msg)
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        Self::from_toml(&text)
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(mut self, top: &RawConfig) -> Self {
        overlay_fields!(self.scenario, top.scenario; protocol, mode, rounds, seed, workers);
        overlay_fields!(self.detectors, top.detectors;
            eta, eta0_t0, eta0_t1, eta1_t0, eta1_t1, zero, one, grid_from, grid_to, grid_steps, normal);
        overlay_fields!(self.brightness, top.brightness; mode, normal, t0, t1);
        overlay_fields!(self.bb84, top.bb84; eve_efficiency, p_shift_to_t0);
        overlay_fields!(self.phasetime, top.phasetime; mu);
        overlay_fields!(self.dpsk, top.dpsk; mu, frame_len);
        overlay_fields!(self.ekert, top.ekert; weights, target, normalization);
        overlay_fields!(self.sweep, top.sweep; param, from, to, steps);
        overlay_fields!(self.output, top.output; format, path);
        self
    }

    pub fn resolve(&self) -> Result<ScenarioConfig> {
        let protocol: Protocol = self
            .scenario
            .protocol
            .as_deref()
            .ok_or_else(|| Error::config("scenario.protocol", "missing"))?
            .parse()?;
        let mode = match self.scenario.mode.as_deref() {
            None | Some("attack") => Mode::Attack,
            Some("honest") => Mode::Honest,
            Some("countermeasure") => Mode::Countermeasure,
            Some("time-shift") => Mode::TimeShift,
            Some(other) => return Err(Error::config("scenario.mode", format!("unknown mode `{other}`"))),
        };
        if !mode.supported_by(protocol) {
            return Err(Error::config(
                "scenario.mode",
                format!("mode `{}` is not available for {}", mode.name(), protocol.name()),
            ));
        }
        let rounds = self.scenario.rounds.unwrap_or(100_000);
        if rounds == 0 {
            return Err(Error::config("scenario.rounds", "must be positive"));
        }
        let workers = self.scenario.workers.unwrap_or_else(|| {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        });
        if workers == 0 {
            return Err(Error::config("scenario.workers", "must be positive"));
        }

        let detectors = self.resolve_detectors()?;
        let normal = self.detectors.normal.unwrap_or([1.0, 1.0]);
        if normal.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::config("detectors.normal", "efficiencies must lie in [0, 1]"));
        }
        let brightness = self.resolve_brightness(protocol)?;

        let eve_efficiency = self.bb84.eve_efficiency.unwrap_or(1.0);
        unit_interval("bb84.eve_efficiency", eve_efficiency)?;
        let p_shift_to_t0 = self.bb84.p_shift_to_t0.unwrap_or(0.5);
        unit_interval("bb84.p_shift_to_t0", p_shift_to_t0)?;

        let (mu, mu_key) = match protocol {
            Protocol::Dpsk => (self.dpsk.mu.unwrap_or(0.2), "dpsk.mu"),
            _ => (self.phasetime.mu.unwrap_or(0.1), "phasetime.mu"),
        };
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::config(mu_key, "must be positive"));
        }
        let frame_len = self.dpsk.frame_len.unwrap_or(64);
        if frame_len < 2 {
            return Err(Error::config("dpsk.frame_len", "needs at least two pulses"));
        }

        let weights = match (self.ekert.weights, self.ekert.target.as_deref()) {
            (Some([a, b, g]), _) => {
                MixtureWeights::new(a, b, g).map_err(|e| Error::config("ekert.weights", e.to_string()))?
            }
            (None, None | Some("equal-terms")) => MixtureWeights::equal_terms(),
            (None, Some("two-combination")) => {
                crate::ekert::solve_weights(WeightTarget::TwoCombination(-2.0 * std::f64::consts::SQRT_2))
                    .map_err(|e| Error::config("ekert.target", e.to_string()))?
            }
            (None, Some(other)) => {
                return Err(Error::config("ekert.target", format!("unknown target `{other}`")))
            }
        };
        let normalization = self.ekert.normalization.unwrap_or_default();

        let sweep = self.resolve_sweep(protocol, mode)?;
        let seed = self.scenario.seed.unwrap_or(1);
        Ok(ScenarioConfig {
            protocol,
            mode,
            rounds,
            seed,
            workers,
            detectors,
            normal,
            brightness,
            eve_efficiency,
            p_shift_to_t0,
            mu,
            frame_len,
            weights,
            normalization,
            sweep,
            format: self.output.format.unwrap_or_default(),
            out: self.output.path.clone(),
        })
    }

    fn resolve_detectors(&self) -> Result<DetectorSetup> {
        let d = &self.detectors;
        let explicit = [d.eta0_t0, d.eta0_t1, d.eta1_t0, d.eta1_t1];
        let curves = d.zero.is_some() || d.one.is_some();
        let sources = usize::from(d.eta.is_some())
            + usize::from(explicit.iter().any(Option::is_some))
            + usize::from(curves);
        if sources > 1 {
            return Err(Error::config(
                "detectors",
                "give exactly one of `eta`, the four `etaX_tY` values, or `zero`/`one` curves",
            ));
        }
        if let Some(eta) = d.eta {
            let spec = MismatchSpec::symmetric(eta).map_err(|e| Error::config("detectors.eta", e.to_string()))?;
            return Ok(DetectorSetup::Mismatch(spec));
        }
        if explicit.iter().any(Option::is_some) {
            let names = ["eta0_t0", "eta0_t1", "eta1_t0", "eta1_t1"];
            let mut v = [0.0; 4];
            for ((slot, val), name) in v.iter_mut().zip(explicit).zip(names) {
                *slot = val.ok_or_else(|| Error::config(format!("detectors.{name}"), "missing"))?;
                if !(0.0..=1.0).contains(slot) {
                    return Err(Error::config(format!("detectors.{name}"), "must lie in [0, 1]"));
                }
            }
            return Ok(DetectorSetup::Mismatch(MismatchSpec::new(v[0], v[1], v[2], v[3])?));
        }
        if curves {
            let parse = |key: &str, text: &Option<String>| -> Result<EfficiencyCurve> {
                let text = text
                    .as_deref()
                    .ok_or_else(|| Error::config(format!("detectors.{key}"), "missing"))?;
                text.parse()
                    .map_err(|e: Error| Error::config(format!("detectors.{key}"), e.to_string()))
            };
            let zero = parse("zero", &d.zero)?;
            let one = parse("one", &d.one)?;
            let pair = DetectorPair::new(zero, one, LabelConvention::Bits)
                .map_err(|e| Error::config("detectors", e.to_string()))?;
            let (lo, hi) = pair.curve(crate::detmodel::Detector::Zero).domain().unwrap_or((-3.0, 3.0));
            let grid = linear_grid(
                d.grid_from.unwrap_or(lo),
                d.grid_to.unwrap_or(hi),
                d.grid_steps.unwrap_or(61),
            )
            .map_err(|e| Error::config("detectors.grid_steps", e.to_string()))?;
            let choice = choose_control_values(&pair, &grid)
                .map_err(|e| Error::config("detectors", e.to_string()))?;
            return Ok(DetectorSetup::Curves { pair, choice });
        }
        Ok(DetectorSetup::Mismatch(MismatchSpec::total()))
    }

    fn resolve_brightness(&self, protocol: Protocol) -> Result<BrightnessMode> {
        let b = &self.brightness;
        let explicit = b.t0.is_some() || b.t1.is_some() || b.normal.is_some();
        let mode = match (b.mode.as_deref(), explicit) {
            (None, false) | (Some("unit"), false) => BrightnessMode::Unit,
            (None | Some("explicit"), true) => {
                let w = Brightness {
                    normal: b.normal.unwrap_or(1.0),
                    t0: b.t0.unwrap_or(1.0),
                    t1: b.t1.unwrap_or(1.0),
                };
                for (key, v) in [("normal", w.normal), ("t0", w.t0), ("t1", w.t1)] {
                    if !(v.is_finite() && v >= 0.0) {
                        return Err(Error::config(format!("brightness.{key}"), "must be finite and non-negative"));
                    }
                }
                BrightnessMode::Explicit(w)
            }
            (Some("equalizing"), false) => BrightnessMode::Equalizing,
            (Some("compensating"), false) => {
                if protocol != Protocol::Dpsk {
                    return Err(Error::config("brightness.mode", "`compensating` applies to dpsk only"));
                }
                BrightnessMode::Compensating
            }
            (Some(m), true) => {
                return Err(Error::config(
                    "brightness",
                    format!("explicit weights conflict with mode `{m}`"),
                ))
            }
            (Some(other), false) => {
                return Err(Error::config("brightness.mode", format!("unknown mode `{other}`")))
            }
        };
        Ok(mode)
    }

    fn resolve_sweep(&self, protocol: Protocol, mode: Mode) -> Result<Option<SweepSpec>> {
        let s = &self.sweep;
        let Some(param) = s.param.as_deref() else {
            if s.from.is_some() || s.to.is_some() || s.steps.is_some() {
                return Err(Error::config("sweep.param", "missing"));
            }
            return Ok(None);
        };
        let param: SweepParam = param.parse()?;
        let allowed = match param {
            SweepParam::Eta => protocol != Protocol::Ekert,
            SweepParam::Mu => matches!(protocol, Protocol::Phasetime | Protocol::Dpsk),
            SweepParam::EveEfficiency => matches!(protocol, Protocol::Bb84 | Protocol::Sarg04) && mode != Mode::TimeShift,
            SweepParam::PShift => mode == Mode::TimeShift,
            SweepParam::PBeta => protocol == Protocol::Ekert,
        };
        if !allowed {
            return Err(Error::config(
                "sweep.param",
                format!("`{}` cannot be swept for {} ({})", param.name(), protocol.name(), mode.name()),
            ));
        }
        let from = s.from.ok_or_else(|| Error::config("sweep.from", "missing"))?;
        let to = s.to.ok_or_else(|| Error::config("sweep.to", "missing"))?;
        let steps = s.steps.ok_or_else(|| Error::config("sweep.steps", "missing"))?;
        if steps == 0 {
            return Err(Error::config("sweep.steps", "must be positive"));
        }
        if !(from.is_finite() && to.is_finite()) {
            return Err(Error::config("sweep.from", "range must be finite"));
        }
        let spec = SweepSpec { param, from, to, steps };
        let (lo, hi) = match param {
            SweepParam::Eta | SweepParam::EveEfficiency | SweepParam::PShift => (0.0, 1.0),
            SweepParam::PBeta => (0.0, 1.0 - f64::EPSILON),
            SweepParam::Mu => (f64::MIN_POSITIVE, f64::MAX),
        };
        if spec.values().iter().any(|v| !(lo..=hi).contains(v)) {
            return Err(Error::config("sweep.to", format!("range leaves the domain of `{}`", param.name())));
        }
        Ok(Some(spec))
    }
}

fn unit_interval(key: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::config(key, "must lie in [0, 1]"))
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        RawConfig::from_toml(text)?.resolve()
    }

    /// Brightness weights for a given mismatch.
    pub fn brightness_for(&self, spec: &MismatchSpec) -> Result<Brightness> {
        match &self.brightness {
            BrightnessMode::Unit => Ok(Brightness::unit()),
            BrightnessMode::Explicit(b) => Ok(b.clone()),
            BrightnessMode::Equalizing => {
                Brightness::equalizing(spec).map_err(|e| Error::config("brightness.mode", e.to_string()))
            }
            BrightnessMode::Compensating => {
                let eta_h = 0.5 * (self.normal[0] + self.normal[1]);
                let f0 = crate::dpsk::compensating_brightness(self.mu, eta_h, spec.eta0_t0)
                    .map_err(|e| Error::config("brightness.mode", e.to_string()))?;
                let f1 = crate::dpsk::compensating_brightness(self.mu, eta_h, spec.eta1_t1)
                    .map_err(|e| Error::config("brightness.mode", e.to_string()))?;
                Ok(Brightness {
                    normal: 1.0,
                    t0: f0,
                    t1: f1,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let c = ScenarioConfig::from_toml("[scenario]\nprotocol = \"bb84\"\n").unwrap();
        assert_eq!(c.protocol, Protocol::Bb84);
        assert_eq!(c.mode, Mode::Attack);
        assert!(c.detectors.spec().is_total());
        assert_eq!(c.rounds, 100_000);
    }

    #[test]
    fn curve_errors_name_the_key() {
        let err = ScenarioConfig::from_toml(
            "[scenario]\nprotocol = \"bb84\"\n[detectors]\nzero = \"gauss:0,1\"\none = \"constant:0.5\"\n",
        )
        .unwrap_err();
        match err {
            Error::Config { path, .. } => assert_eq!(path, "detectors.zero"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_and_protocols() {
        assert!(ScenarioConfig::from_toml("[scenario]\nprotocol = \"bb84\"\nfoo = 1\n").is_err());
        let err = ScenarioConfig::from_toml("[scenario]\nprotocol = \"b92\"\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref path, .. } if path == "scenario.protocol"));
        let err = ScenarioConfig::from_toml("[scenario]\nprotocol = \"sarg04\"\nmode = \"honest\"\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref path, .. } if path == "scenario.mode"));
    }

    #[test]
    fn curves_choose_controls() {
        let c = ScenarioConfig::from_toml(
            "[scenario]\nprotocol = \"bb84\"\n[detectors]\nzero = \"table:-1:1;0:0;1:0\"\none = \"table:-1:0;0:0;1:1\"\ngrid_steps = 3\n",
        )
        .unwrap();
        let spec = c.detectors.spec();
        assert!(spec.is_total());
        assert_eq!(spec.eta0_t0, 1.0);
    }

    #[test]
    fn overlay_wins() {
        let file = RawConfig::from_toml("[scenario]\nprotocol = \"bb84\"\nseed = 5\nrounds = 10\n").unwrap();
        let mut flags = RawConfig::default();
        flags.scenario.seed = Some(9);
        let c = file.overlay(&flags).resolve().unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.rounds, 10);
    }

    #[test]
    fn sweep_values() {
        let s = SweepSpec {
            param: SweepParam::Eta,
            from: 0.0,
            to: 0.2,
            steps: 21,
        };
        let v = s.values();
        assert_eq!(v.len(), 21);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[20], 0.2);
        let bad = ScenarioConfig::from_toml(
            "[scenario]\nprotocol = \"bb84\"\n[sweep]\nparam = \"eta\"\nfrom = 0\nto = 2\nsteps = 3\n",
        );
        assert!(bad.is_err());
    }
}
