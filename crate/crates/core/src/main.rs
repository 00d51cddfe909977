use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use faked_states::checks;
use faked_states::ekert::Normalization;
use faked_states::engine::{self, OutputFormat, RawConfig, RunOutcome};

#[derive(Parser)]
#[command(name = "faked-states", version, about = "Faked-states attacks on QKD receivers with detector efficiency mismatch")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// BB84 with a faked-states (or time-shift) eavesdropper.
    Bb84(ScenarioArgs),
    /// SARG04 under the faked-states attack.
    Sarg04(ScenarioArgs),
    /// Phase-time encoded BB84 through an unbalanced interferometer.
    Phasetime(ScenarioArgs),
    /// Differential phase shift keying with overlapping faked trains.
    Dpsk(ScenarioArgs),
    /// Ekert protocol fed by a faked pair source.
    Ekert(ScenarioArgs),
    /// Sweep one parameter and emit one row per point.
    Sweep(SweepArgs),
    /// Check every closed form against its exact oracle.
    Verify {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print threshold QBERs and Ekert mixture values.
    Tables {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Attack,
    Honest,
    Countermeasure,
    TimeShift,
}

#[derive(Clone, Copy, ValueEnum)]
enum BrightnessArg {
    Unit,
    Equalizing,
    Compensating,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    Bb84,
    Sarg04,
    Phasetime,
    Dpsk,
    Ekert,
}

#[derive(Args, Default)]
struct ScenarioArgs {
    /// TOML scenario file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, env = "FAKED_STATES_SEED")]
    seed: Option<u64>,
    /// Worker threads; never changes the numbers.
    #[arg(long)]
    workers: Option<usize>,
    /// Rounds, frames (dpsk) or pairs (ekert).
    #[arg(long)]
    rounds: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Symmetric mismatch ratio with unit diagonal efficiencies.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    eta0_t0: Option<f64>,
    #[arg(long)]
    eta0_t1: Option<f64>,
    #[arg(long)]
    eta1_t0: Option<f64>,
    #[arg(long)]
    eta1_t1: Option<f64>,
    /// Efficiency curve of detector 0, e.g. `gauss:-1,0.5,1`.
    #[arg(long)]
    curve_zero: Option<String>,
    #[arg(long)]
    curve_one: Option<String>,
    #[arg(long, value_enum)]
    brightness: Option<BrightnessArg>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    frame_len: Option<usize>,
    #[arg(long)]
    eve_efficiency: Option<f64>,
    #[arg(long)]
    p_shift: Option<f64>,
    /// Ekert mixture weights `alpha,beta,gamma`.
    #[arg(long, value_delimiter = ',')]
    weights: Vec<f64>,
    #[arg(long, value_enum)]
    normalization: Option<NormalizationArg>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormalizationArg {
    PerPair,
    Global,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    protocol: Option<ProtocolArg>,
    /// eta, mu, eve_efficiency, p_shift or p_beta.
    #[arg(long)]
    param: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    from: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    to: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[command(flatten)]
    scenario: ScenarioArgs,
}

impl ScenarioArgs {
    fn overlay(&self, protocol: Option<&str>) -> RawConfig {
        let mut raw = RawConfig::default();
        raw.scenario.protocol = protocol.map(str::to_string);
        raw.scenario.seed = self.seed;
        raw.scenario.workers = self.workers;
        raw.scenario.rounds = self.rounds;
        raw.scenario.mode = self.mode.map(|m| {
            match m {
                ModeArg::Attack => "attack",
                ModeArg::Honest => "honest",
                ModeArg::Countermeasure => "countermeasure",
                ModeArg::TimeShift => "time-shift",
            }
            .to_string()
        });
        let d = &mut raw.detectors;
        d.eta = self.eta;
        d.eta0_t0 = self.eta0_t0;
        d.eta0_t1 = self.eta0_t1;
        d.eta1_t0 = self.eta1_t0;
        d.eta1_t1 = self.eta1_t1;
        d.zero = self.curve_zero.clone();
        d.one = self.curve_one.clone();
        raw.brightness.mode = self.brightness.map(|b| {
            match b {
                BrightnessArg::Unit => "unit",
                BrightnessArg::Equalizing => "equalizing",
                BrightnessArg::Compensating => "compensating",
            }
            .to_string()
        });
        raw.phasetime.mu = self.mu;
        raw.dpsk.mu = self.mu;
        raw.dpsk.frame_len = self.frame_len;
        raw.bb84.eve_efficiency = self.eve_efficiency;
        raw.bb84.p_shift_to_t0 = self.p_shift;
        raw.ekert.weights = <[f64; 3]>::try_from(self.weights.as_slice()).ok();
        raw.ekert.normalization = self.normalization.map(|n| match n {
            NormalizationArg::PerPair => Normalization::PerPair,
            NormalizationArg::Global => Normalization::Global,
        });
        raw.output.format = self.format.map(|f| match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        });
        raw.output.path = self.out.clone();
        raw
    }

    /// File values, then flags, with detector flags replacing any detector
    /// source from the file wholesale.
    fn load(&self, top: RawConfig) -> faked_states::Result<RawConfig> {
        if !matches!(self.weights.len(), 0 | 3) {
            return Err(faked_states::Error::Config {
                path: "ekert.weights".into(),
                message: "expected three comma-separated weights".into(),
            });
        }
        let mut base = match &self.config {
            Some(path) => RawConfig::from_file(path)?,
            None => RawConfig::default(),
        };
        let d = &top.detectors;
        let detector_flags = d.eta.is_some()
            || d.eta0_t0.is_some()
            || d.eta0_t1.is_some()
            || d.eta1_t0.is_some()
            || d.eta1_t1.is_some()
            || d.zero.is_some()
            || d.one.is_some();
        if detector_flags {
            let normal = base.detectors.normal;
            base.detectors = Default::default();
            base.detectors.normal = normal;
        }
        if top.ekert.weights.is_some() {
            base.ekert.target = None;
        }
        Ok(base.overlay(&top))
    }
}

fn protocol_name(p: ProtocolArg) -> &'static str {
    match p {
        ProtocolArg::Bb84 => "bb84",
        ProtocolArg::Sarg04 => "sarg04",
        ProtocolArg::Phasetime => "phasetime",
        ProtocolArg::Dpsk => "dpsk",
        ProtocolArg::Ekert => "ekert",
    }
}

fn open_out(path: Option<&PathBuf>) -> faked_states::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit(outcome: &RunOutcome, format: OutputFormat, out: Option<&PathBuf>) -> faked_states::Result<()> {
    let mut w = open_out(out)?;
    match format {
        OutputFormat::Csv => engine::write_csv(outcome, &mut w)?,
        OutputFormat::Json => engine::write_json(outcome, &mut w)?,
    }
    w.flush()?;
    Ok(())
}

fn scenario(args: &ScenarioArgs, protocol: &str, sweep: Option<&SweepArgs>) -> faked_states::Result<()> {
    let mut top = args.overlay(Some(protocol));
    if let Some(s) = sweep {
        top.sweep.param = s.param.clone();
        top.sweep.from = s.from;
        top.sweep.to = s.to;
        top.sweep.steps = s.steps;
    }
    let raw = args.load(top)?;
    let config = raw.resolve()?;
    let outcome = if sweep.is_some() || config.sweep.is_some() {
        engine::sweep(&config)?
    } else {
        RunOutcome {
            records: vec![engine::run(&config)?],
        }
    };
    emit(&outcome, config.format, config.out.as_ref())
}

fn sweep_cmd(args: &SweepArgs) -> faked_states::Result<()> {
    // the protocol may come from the config file instead of the flag
    let protocol = match args.protocol {
        Some(p) => protocol_name(p).to_string(),
        None => {
            let base = args.scenario.load(args.scenario.overlay(None))?;
            base.scenario.protocol.ok_or_else(|| {
                faked_states::Error::Config {
                    path: "scenario.protocol".into(),
                    message: "missing (use --protocol)".into(),
                }
            })?
        }
    };
    scenario(&args.scenario, &protocol, Some(args))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Bb84(a) => scenario(a, "bb84", None),
        Command::Sarg04(a) => scenario(a, "sarg04", None),
        Command::Phasetime(a) => scenario(a, "phasetime", None),
        Command::Dpsk(a) => scenario(a, "dpsk", None),
        Command::Ekert(a) => scenario(a, "ekert", None),
        Command::Sweep(a) => sweep_cmd(a),
        Command::Verify { out } => {
            let results = checks::verify();
            let all = results.iter().all(|r| r.passed);
            match open_out(out.as_ref()).and_then(|mut w| {
                checks::write_checks(&results, &mut w)?;
                w.flush().map_err(Into::into)
            }) {
                Ok(()) if all => Ok(()),
                Ok(()) => return ExitCode::FAILURE,
                Err(e) => Err(e),
            }
        }
        Command::Tables { out } => checks::tables().and_then(|rows| {
            let mut w = open_out(out.as_ref())?;
            checks::write_tables(&rows, &mut w)?;
            w.flush().map_err(Into::into)
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
