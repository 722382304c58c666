//! Command-line grammar and the `key=value` config file merged under it.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fpb_core::sim::{EveMode, SessionConfig, Tuning};

use crate::curves::parse_rate;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "fpb",
    version,
    about = "Entangling-probe attack on BB84: curves, sessions, receiver checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form table over an inclusive grid of error rates.
    Curves(CurvesArgs),
    /// Monte Carlo key-distribution session.
    Simulate(SimulateArgs),
    /// Numerical check of the unambiguous-discrimination receiver.
    PovmCheck(PovmCheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    None,
    Projective,
    Povm,
}

impl From<Mode> for EveMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::None => EveMode::None,
            Mode::Projective => EveMode::Projective,
            Mode::Povm => EveMode::Povm,
        }
    }
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    /// Lowest error rate; decimals or fractions such as 1/3.
    #[arg(value_parser = parse_rate, allow_hyphen_values = true)]
    pub e_min: f64,
    #[arg(value_parser = parse_rate, allow_hyphen_values = true)]
    pub e_max: f64,
    /// Number of rows, endpoints included.
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub pulses: Option<u64>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long, value_parser = parse_rate, conflicts_with = "inconclusive_rate")]
    pub error_rate: Option<f64>,
    #[arg(long, value_parser = parse_rate)]
    pub inconclusive_rate: Option<f64>,
    /// Channel erasure probability.
    #[arg(long, value_parser = parse_rate)]
    pub loss: Option<f64>,
    /// Forward only pulses with a conclusive probe outcome (povm mode).
    #[arg(long)]
    pub selective_relay: bool,
    /// Reject runs whose inconclusive rate differs from the loss.
    #[arg(long)]
    pub require_loss_match: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub shards: Option<u32>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the per-pulse CSV log here.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// File of `key=value` lines using the long flag names; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(id = "rate", required = true, multiple = false)]
pub struct PovmCheckArgs {
    #[arg(long, value_parser = parse_rate, group = "rate")]
    pub error_rate: Option<f64>,
    #[arg(long, value_parser = parse_rate, group = "rate")]
    pub inconclusive_rate: Option<f64>,
}

/// Fully resolved `simulate` invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatePlan {
    pub session: SessionConfig,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub log: Option<PathBuf>,
}

pub const DEFAULT_PULSES: u64 = 100_000;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

fn parse_bool(key: &str, value: &str) -> CliResult<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => usage(format!(
            "config key {key}: expected a boolean, got {value:?}"
        )),
    }
}

fn parse_value<T: ValueEnum>(key: &str, value: &str) -> CliResult<T> {
    T::from_str(value, false)
        .map_err(|_| CliError::Usage(format!("config key {key}: bad value {value:?}")))
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> CliResult<T> {
    value
        .parse()
        .map_err(|_| CliError::Usage(format!("config key {key}: bad number {value:?}")))
}

fn parse_cfg_rate(key: &str, value: &str) -> CliResult<f64> {
    parse_rate(value).map_err(|e| CliError::Usage(format!("config key {key}: {e}")))
}

impl SimulateArgs {
    /// Parses config file text into the same shape as the flags.
    /// Blank lines and lines starting with `#` are skipped; keys may use `-` or `_`.
    pub fn from_config_text(text: &str) -> CliResult<Self> {
        let mut a = SimulateArgs::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return usage(format!("config line {}: expected key=value", n + 1));
            };
            let key = key.trim().replace('_', "-");
            let value = value.trim();
            match key.as_str() {
                "pulses" => a.pulses = Some(parse_num(&key, value)?),
                "mode" => a.mode = Some(parse_value(&key, value)?),
                "error-rate" => a.error_rate = Some(parse_cfg_rate(&key, value)?),
                "inconclusive-rate" => a.inconclusive_rate = Some(parse_cfg_rate(&key, value)?),
                "loss" => a.loss = Some(parse_cfg_rate(&key, value)?),
                "selective-relay" => a.selective_relay = parse_bool(&key, value)?,
                "require-loss-match" => a.require_loss_match = parse_bool(&key, value)?,
                "seed" => a.seed = Some(parse_num(&key, value)?),
                "shards" => a.shards = Some(parse_num(&key, value)?),
                "format" => a.format = Some(parse_value(&key, value)?),
                "out" => a.out = Some(PathBuf::from(value)),
                "log" => a.log = Some(PathBuf::from(value)),
                _ => return usage(format!("config line {}: unknown key {key:?}", n + 1)),
            }
        }
        if a.error_rate.is_some() && a.inconclusive_rate.is_some() {
            return usage("config gives both error-rate and inconclusive-rate");
        }
        Ok(a)
    }

    /// Fills everything the flags left unset from `file`. A tuning flag
    /// replaces both tuning keys of the file.
    pub fn merged_over(self, file: SimulateArgs) -> SimulateArgs {
        let flag_tuning = self.error_rate.is_some() || self.inconclusive_rate.is_some();
        SimulateArgs {
            pulses: self.pulses.or(file.pulses),
            mode: self.mode.or(file.mode),
            error_rate: if flag_tuning {
                self.error_rate
            } else {
                file.error_rate
            },
            inconclusive_rate: if flag_tuning {
                self.inconclusive_rate
            } else {
                file.inconclusive_rate
            },
            loss: self.loss.or(file.loss),
            selective_relay: self.selective_relay || file.selective_relay,
            require_loss_match: self.require_loss_match || file.require_loss_match,
            seed: self.seed.or(file.seed),
            shards: self.shards.or(file.shards),
            format: self.format.or(file.format),
            out: self.out.or(file.out),
            log: self.log.or(file.log),
            config: self.config,
        }
    }

    /// Applies defaults and checks the combination.
    pub fn plan(&self) -> CliResult<SimulatePlan> {
        let tuning = match (self.error_rate, self.inconclusive_rate) {
            (Some(_), Some(_)) => return usage("--error-rate and --inconclusive-rate conflict"),
            (Some(e), None) => Some(Tuning::ErrorRate(e)),
            (None, Some(r)) => Some(Tuning::InconclusiveRate(r)),
            (None, None) => None,
        };
        let mode = self.mode.unwrap_or(Mode::None);
        if self.selective_relay && mode != Mode::Povm {
            return usage("--selective-relay requires --mode povm");
        }
        let session = SessionConfig {
            n_pulses: self.pulses.unwrap_or(DEFAULT_PULSES),
            eve_mode: mode.into(),
            tuning,
            channel_loss: self.loss.unwrap_or(0.0),
            selective_relay: self.selective_relay,
            require_loss_match: self.require_loss_match,
            seed: self.seed.unwrap_or(0),
            shards: self.shards.unwrap_or(1),
        };
        session
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(SimulatePlan {
            session,
            format: self.format.unwrap_or(Format::Json),
            out: self.out.clone(),
            log: self.log.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("fpb").chain(args.iter().copied()))
    }

    fn simulate(args: &[&str]) -> SimulateArgs {
        match parse(&[&["simulate"], args].concat()).unwrap().command {
            Command::Simulate(a) => a,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn curves_accepts_fractions() {
        match parse(&["curves", "0", "1/3", "11", "--format", "json"])
            .unwrap()
            .command
        {
            Command::Curves(c) => {
                assert_eq!((c.e_min, c.e_max, c.steps), (0.0, 1.0 / 3.0, 11));
                assert_eq!(c.format, Format::Json);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tuning_flags_conflict() {
        assert!(parse(&[
            "simulate",
            "--error-rate",
            "0.2",
            "--inconclusive-rate",
            "0.5"
        ])
        .is_err());
        assert!(parse(&["povm-check"]).is_err());
        assert!(parse(&[
            "povm-check",
            "--error-rate",
            "0.1",
            "--inconclusive-rate",
            "0.5"
        ])
        .is_err());
    }

    #[test]
    fn plan_defaults_and_checks() {
        let plan = simulate(&[]).plan().unwrap();
        assert_eq!(plan.session.n_pulses, DEFAULT_PULSES);
        assert_eq!(plan.session.eve_mode, EveMode::None);
        assert_eq!(plan.format, Format::Json);

        let plan = simulate(&[
            "--mode",
            "povm",
            "--inconclusive-rate",
            "0.5",
            "--selective-relay",
        ])
        .plan()
        .unwrap();
        assert_eq!(plan.session.tuning, Some(Tuning::InconclusiveRate(0.5)));
        assert!(plan.session.selective_relay);

        for bad in [
            &[
                "--selective-relay",
                "--mode",
                "projective",
                "--error-rate",
                "0.1",
            ][..],
            &["--mode", "projective"],
            &["--mode", "projective", "--error-rate", "0.4"],
            &["--loss", "1.5"],
            &["--pulses", "0"],
        ] {
            assert!(
                matches!(simulate(bad).plan(), Err(CliError::Usage(_))),
                "{bad:?}"
            );
        }
    }

    #[test]
    fn config_file_is_overridden_by_flags() {
        let file = SimulateArgs::from_config_text(
            "# session\npulses = 500\nmode=povm\nerror_rate=0.1\nseed=9\nselective-relay=true\n\nformat=csv\n",
        )
        .unwrap();
        let flags = simulate(&["--seed", "4", "--inconclusive-rate", "1/2"]);
        let plan = flags.merged_over(file).plan().unwrap();
        assert_eq!(plan.session.n_pulses, 500);
        assert_eq!(plan.session.seed, 4);
        assert_eq!(plan.session.tuning, Some(Tuning::InconclusiveRate(0.5)));
        assert!(plan.session.selective_relay);
        assert_eq!(plan.format, Format::Csv);
    }

    #[test]
    fn bad_config_lines() {
        for text in [
            "pulses",
            "color=red",
            "pulses=many",
            "mode=psychic",
            "error-rate=0.1\ninconclusive-rate=0.5",
        ] {
            assert!(
                matches!(
                    SimulateArgs::from_config_text(text),
                    Err(CliError::Usage(_))
                ),
                "{text}"
            );
        }
    }
}
