//! Command-line arguments and their translation into configurations.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use platoon_core::f64::PlatoonConfig;
use platoon_core::model::parse_profile;
use platoon_core::Scenario;

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "platoon", version, about = "Spectra, sweeps, simulations and H-infinity norms of vehicle platoons")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-loop spectrum of one configuration.
    Eigs(EigsArgs),
    /// Galerkin spectrum of the continuum model.
    Pde(PdeArgs),
    /// Stability margins and norms over a range of platoon sizes.
    Sweep(SweepArgs),
    /// Gain schedule of a mistuned configuration, optionally from a profile search.
    Mistune(MistuneArgs),
    /// Time-domain response to an initial spacing error.
    Simulate(SimulateArgs),
    /// H-infinity norm by Hamiltonian bisection and by frequency sweep.
    Hinf(HinfArgs),
    /// Closed-form slow-mode predictions against the platoon spectrum.
    Asymptote(AsymptoteArgs),
}

/// Flags describing one platoon configuration.
#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// JSON configuration file; individual flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of vehicles [default: 20].
    #[arg(long)]
    pub n: Option<usize>,
    /// Nominal position gain [default: 1].
    #[arg(long)]
    pub k0: Option<f64>,
    /// Nominal velocity damping [default: 0.5].
    #[arg(long)]
    pub b0: Option<f64>,
    /// Boundary scenario, I or II [default: I].
    #[arg(long)]
    pub scenario: Option<Scenario>,
    /// Mistuning amplitude in [0, 1) [default: 0].
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Mistuning profile: optimal, symmetric, optimal_step_i,
    /// optimal_constant_ii, sine or piecewise_constant [default: optimal].
    #[arg(long)]
    pub profile: Option<String>,
    /// Amplitude of the sine profile.
    #[arg(long, allow_negative_numbers = true)]
    pub amplitude: Option<f64>,
    /// Wavenumber of the sine profile.
    #[arg(long, allow_negative_numbers = true)]
    pub wavenumber: Option<f64>,
    /// Pieces of a piecewise-constant profile as `x:value,x:value,...`.
    #[arg(long, allow_hyphen_values = true)]
    pub pieces: Option<String>,
    /// Write `{command}_{scenario}_{N}.csv` into this directory instead of
    /// printing the table.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EigsArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct PdeArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Number of Galerkin basis functions [default: depends on N].
    #[arg(long)]
    pub basis: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Explicit platoon sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub n_values: Option<Vec<usize>>,
    /// Smallest platoon size of the log-spaced range.
    #[arg(long, default_value_t = 10)]
    pub n_min: usize,
    /// Largest platoon size of the log-spaced range.
    #[arg(long, default_value_t = 400)]
    pub n_max: usize,
    /// Number of log-spaced sizes.
    #[arg(long, default_value_t = 12)]
    pub count: usize,
    /// Outputs to evaluate: spectrum, pde_spectrum, asymptote, hinf.
    #[arg(long, value_delimiter = ',', default_value = "spectrum")]
    pub outputs: Vec<String>,
    /// Also track this many slowest mode branches over the sizes.
    #[arg(long)]
    pub track: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MistuneArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Replace the profile by the best piecewise-constant profile with at
    /// most this many interior jumps for mode 1.
    #[arg(long)]
    pub search: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Integration step.
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    /// Final time.
    #[arg(long, default_value_t = 300.0)]
    pub t_final: f64,
    /// Desired gap between vehicles.
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Desired velocity.
    #[arg(long, default_value_t = 5.0)]
    pub vd: f64,
    /// Initial spacing error of the first vehicle.
    #[arg(long, default_value_t = 0.5)]
    pub perturbation: f64,
}

#[derive(Debug, Args)]
pub struct HinfArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Relative tolerance of the bisection.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct AsymptoteArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Number of modes to compare.
    #[arg(long, default_value_t = 3)]
    pub modes: usize,
}

fn parse_pieces(text: &str) -> Result<Vec<(f64, f64)>, CliError> {
    text.split(',')
        .map(|piece| {
            let (x, v) = piece
                .split_once(':')
                .ok_or_else(|| CliError::usage(format!("piece \"{piece}\" is not of the form x:value")))?;
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| CliError::usage(format!("piece \"{piece}\": {e}")));
            Ok((parse(x)?, parse(v)?))
        })
        .collect()
}

impl ConfigArgs {
    /// The configuration from the JSON file, if any, with flag overrides.
    pub fn resolve(&self) -> Result<PlatoonConfig, CliError> {
        let mut config = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
                let mut c = PlatoonConfig::from_json_str(&text)?;
                if let Some(n) = self.n {
                    c.n_vehicles = n;
                }
                c
            }
            None => PlatoonConfig {
                n_vehicles: self.n.unwrap_or(20),
                k0: 1.0,
                b0: 0.5,
                scenario: Scenario::ScenarioI,
                epsilon: 0.0,
                profile: platoon_core::MistuningProfile::OptimalStepI,
            },
        };
        if let Some(k0) = self.k0 {
            config.k0 = k0;
        }
        if let Some(b0) = self.b0 {
            config.b0 = b0;
        }
        if let Some(s) = self.scenario {
            config.scenario = s;
        }
        if let Some(e) = self.epsilon {
            config.epsilon = e;
        }
        let profile_given = self.profile.is_some() || self.pieces.is_some() || self.amplitude.is_some();
        if profile_given || self.config.is_none() {
            let kind = self.profile.as_deref().unwrap_or("optimal");
            let pieces = self.pieces.as_deref().map(parse_pieces).transpose()?;
            config.profile = parse_profile(kind, config.scenario, pieces.as_deref(), self.amplitude, self.wavenumber)?;
        }
        config.validate()?;
        Ok(config)
    }
}
