//! Parameter sweeps over the platoon size.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_complex::Complex;
use rayon::prelude::*;

use crate::asymptotics::mistuned_asymptote;
use crate::error::{Error, Result};
use crate::format::fmt_sig;
use crate::model::{build_gain_schedule, MistuningProfile, PlatoonConfig, Scenario};
use crate::pde::{assemble_galerkin, default_basis_size, pde_spectrum};
use crate::robustness::hinf_bisection;
use crate::scalar::Real;
use crate::statespace::{analyze_spectrum, build_closed_loop, modal_branches};

/// Relative tolerance of the H-infinity values produced by sweeps.
pub const SWEEP_HINF_TOLERANCE: f64 = 1e-5;

/// Quantities a sweep can evaluate for each platoon size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SweepOutput {
    Spectrum,
    PdeSpectrum,
    Asymptote,
    Hinf,
}

impl SweepOutput {
    pub fn name(self) -> &'static str {
        match self {
            SweepOutput::Spectrum => "spectrum",
            SweepOutput::PdeSpectrum => "pde_spectrum",
            SweepOutput::Asymptote => "asymptote",
            SweepOutput::Hinf => "hinf",
        }
    }

    /// Value of the `source` column.
    pub fn source(self) -> &'static str {
        match self {
            SweepOutput::Spectrum | SweepOutput::Hinf => "platoon",
            SweepOutput::PdeSpectrum => "pde",
            SweepOutput::Asymptote => "asymptote",
        }
    }
}

impl std::str::FromStr for SweepOutput {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "spectrum" => Ok(SweepOutput::Spectrum),
            "pde_spectrum" | "pde" => Ok(SweepOutput::PdeSpectrum),
            "asymptote" => Ok(SweepOutput::Asymptote),
            "hinf" => Ok(SweepOutput::Hinf),
            other => Err(Error::config(format!("unknown sweep output \"{other}\""))),
        }
    }
}

/// Everything of a configuration except the platoon size.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseConfig<T = f64> {
    pub k0: T,
    pub b0: T,
    pub scenario: Scenario,
    pub epsilon: T,
    pub profile: MistuningProfile<T>,
}

impl<T: Real> BaseConfig<T> {
    pub fn with_n(&self, n_vehicles: usize) -> Result<PlatoonConfig<T>> {
        PlatoonConfig::new(n_vehicles, self.k0, self.b0, self.scenario, self.epsilon, self.profile.clone())
    }
}

impl<T: Real> From<&PlatoonConfig<T>> for BaseConfig<T> {
    fn from(c: &PlatoonConfig<T>) -> Self {
        Self {
            k0: c.k0,
            b0: c.b0,
            scenario: c.scenario,
            epsilon: c.epsilon,
            profile: c.profile.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec<T = f64> {
    pub n_values: Vec<usize>,
    pub base_config: BaseConfig<T>,
    pub outputs: BTreeSet<SweepOutput>,
}

impl<T: Real> SweepSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() {
            return Err(Error::config("n_values must not be empty"));
        }
        if self.n_values.iter().any(|&n| n < 2) {
            return Err(Error::config("n_vehicles must be ≥ 2"));
        }
        if self.n_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("n_values must be strictly increasing"));
        }
        if self.outputs.is_empty() {
            return Err(Error::config("at least one sweep output is required"));
        }
        self.base_config.with_n(self.n_values[0]).map(|_| ())
    }
}

/// Roughly log-spaced integers from `lo` to `hi` inclusive, deduplicated.
pub fn log_spaced_sizes(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    if count <= 1 || lo >= hi {
        return vec![lo];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut v: Vec<usize> = (0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp().round() as usize)
        .collect();
    v.dedup();
    v
}

/// One value of a sweep; failures are recorded as NaN with a warning.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub output: SweepOutput,
    pub value: f64,
    pub warning: Option<String>,
}

/// Sweep results grouped by output, rows in ascending `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub tables: Vec<(SweepOutput, Vec<SweepRow>)>,
}

impl SweepResult {
    pub fn table(&self, output: SweepOutput) -> Option<&[SweepRow]> {
        self.tables.iter().find(|t| t.0 == output).map(|t| t.1.as_slice())
    }

    pub fn warnings(&self) -> Vec<String> {
        self.tables
            .iter()
            .flat_map(|t| t.1.iter().filter_map(|r| r.warning.clone()))
            .collect()
    }
}

/// `N,source,value` CSV of one table.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("N,source,value\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.n, r.output.source(), fmt_sig(r.value));
    }
    out
}

fn evaluate<T: Real>(config: &PlatoonConfig<T>, output: SweepOutput) -> Result<f64> {
    let v = match output {
        SweepOutput::Spectrum => {
            analyze_spectrum(&build_closed_loop(&build_gain_schedule(config)?)?)?.stability_margin
        }
        SweepOutput::PdeSpectrum => {
            let disc = assemble_galerkin(config, config.scenario.boundary(), default_basis_size(config.n_vehicles))?;
            pde_spectrum(&disc)?.stability_margin
        }
        SweepOutput::Asymptote => -mistuned_asymptote(config, 1)?.s_plus,
        SweepOutput::Hinf => {
            let model = build_closed_loop(&build_gain_schedule(config)?)?;
            hinf_bisection(&model, T::lit(SWEEP_HINF_TOLERANCE))?.gamma
        }
    };
    Ok(v.to_f64_lossy())
}

/// Evaluates every requested output for every platoon size.
///
/// Sizes are processed in parallel; results are collected in ascending `N`.
pub fn run_sweep<T: Real>(spec: &SweepSpec<T>) -> Result<SweepResult> {
    spec.validate()?;
    let per_n: Vec<Vec<SweepRow>> = spec
        .n_values
        .par_iter()
        .map(|&n| {
            spec.outputs
                .iter()
                .map(|&output| {
                    let result = spec.base_config.with_n(n).and_then(|c| evaluate(&c, output));
                    match result {
                        Ok(value) => SweepRow { n, output, value, warning: None },
                        Err(e) => SweepRow {
                            n,
                            output,
                            value: f64::NAN,
                            warning: Some(format!("N = {n}, {}: {e}", output.name())),
                        },
                    }
                })
                .collect()
        })
        .collect();
    let tables = spec
        .outputs
        .iter()
        .map(|&output| {
            let rows = per_n.iter().flat_map(|rows| rows.iter().filter(|r| r.output == output).cloned()).collect();
            (output, rows)
        })
        .collect();
    Ok(SweepResult { tables })
}

/// Least-squares slope of `ln value` against `ln N`, ignoring non-finite or
/// nonpositive values.
pub fn loglog_slope(ns: &[usize], values: &[f64]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .zip(values)
        .filter(|(_, &v)| v.is_finite() && v > 0.0)
        .map(|(&n, &v)| ((n as f64).ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::numerical("a log-log fit needs at least two positive values"));
    }
    let k = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / k, sy / k);
    let (sxy, sxx) = pts
        .iter()
        .fold((0.0, 0.0), |a, p| (a.0 + (p.0 - mx) * (p.1 - my), a.1 + (p.0 - mx).powi(2)));
    if sxx == 0.0 {
        return Err(Error::numerical("a log-log fit needs distinct sizes"));
    }
    Ok(sxy / sxx)
}

/// Slope of a sweep table over the upper half of its sizes.
pub fn upper_half_slope(rows: &[SweepRow]) -> Result<f64> {
    let start = rows.len() / 2;
    let upper = &rows[start.min(rows.len().saturating_sub(2))..];
    let ns: Vec<usize> = upper.iter().map(|r| r.n).collect();
    let vs: Vec<f64> = upper.iter().map(|r| r.value).collect();
    loglog_slope(&ns, &vs)
}

/// The slowest modes of one platoon size, by mode index.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackedModes<T = f64> {
    pub n: usize,
    /// `s⁺` of modes `1..=count`.
    pub s_plus: Vec<Complex<T>>,
    /// Least stable eigenvalue of the full spectrum.
    pub least_stable: Complex<T>,
}

impl<T: Real> TrackedModes<T> {
    /// True when mode 1 carries the largest real part of the whole spectrum.
    pub fn first_mode_is_least_stable(&self) -> bool {
        let tol = T::tol(1e-9) * self.least_stable.norm().max(T::one());
        self.s_plus[0].re >= self.least_stable.re - tol
            && self.s_plus.iter().all(|s| s.re <= self.s_plus[0].re + tol)
    }
}

/// Follows the `count` slowest mode branches over the platoon sizes.
///
/// Modes are labelled by the ordering of the coupling-matrix eigenvalues,
/// which are real and simple for every admissible schedule and therefore
/// keep their order as `N` varies.
pub fn track_least_stable<T: Real>(base: &BaseConfig<T>, n_values: &[usize], count: usize) -> Result<Vec<TrackedModes<T>>> {
    n_values
        .par_iter()
        .map(|&n| {
            let config = base.with_n(n)?;
            let schedule = build_gain_schedule(&config)?;
            let modes = modal_branches(&schedule)?;
            let spectrum = analyze_spectrum(&build_closed_loop(&schedule)?)?;
            Ok(TrackedModes {
                n,
                s_plus: modes.iter().take(count).map(|m| m.s_plus).collect(),
                least_stable: spectrum.least_stable,
            })
        })
        .collect()
}
