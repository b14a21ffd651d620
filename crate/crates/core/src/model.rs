//! Platoon configuration, mistuning profiles and sampled gain schedules.
//!
//! A mistuning profile is a function `p: [0, 2π] → [-1, 1]` describing the
//! relative perturbation of the front gain along the platoon. The back gain
//! receives the opposite perturbation, so the sum of the two gains stays at
//! `2 k0` for every vehicle:
//!
//! ```text
//! k_f(x) = k0 (1 + ε p(x)),    k_b(x) = k0 (1 - ε p(x))
//! ```
//!
//! Vehicle `i` sits at the desired scaled position `x_i = 2π - i δ`, where the
//! spacing `δ` depends on whether the platoon has a fictitious follower.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest platoon handled by the dense solvers.
pub const MAX_VEHICLES: usize = 1000;

/// Boundary configuration of the platoon.
///
/// Scenario I has a fictitious leader and a fictitious follower (both ends
/// pinned); scenario II has only the fictitious leader, so the last vehicle
/// uses front feedback alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scenario {
    #[serde(rename = "I")]
    ScenarioI,
    #[serde(rename = "II")]
    ScenarioII,
}

impl Scenario {
    /// Boundary conditions of the continuum model paired with this scenario.
    pub fn boundary(self) -> Boundary {
        match self {
            Scenario::ScenarioI => Boundary::DirichletDirichlet,
            Scenario::ScenarioII => Boundary::NeumannDirichlet,
        }
    }

    /// Number of gaps the scaled length `2π` is divided into.
    pub fn gaps(self, n_vehicles: usize) -> usize {
        match self {
            Scenario::ScenarioI => n_vehicles + 1,
            Scenario::ScenarioII => n_vehicles,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Scenario::ScenarioI => "I",
            Scenario::ScenarioII => "II",
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "I" | "i" | "1" => Ok(Scenario::ScenarioI),
            "II" | "ii" | "2" => Ok(Scenario::ScenarioII),
            other => Err(Error::config(format!(
                "scenario must be \"I\" or \"II\", got \"{other}\""
            ))),
        }
    }
}

/// Boundary conditions of the continuum model on `[0, 2π]`.
///
/// The first letter refers to `x = 0` (the tail of the platoon), the second
/// to `x = 2π` (the fictitious leader).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Boundary {
    DirichletDirichlet,
    NeumannDirichlet,
}

impl Boundary {
    /// Wavenumber `q_l` of the `l`-th Laplacian eigenfunction
    /// (`sin(q x)` for DD, `cos(q x)` for ND), `l ≥ 1`.
    pub fn wavenumber<T: Real>(self, l: usize) -> T {
        match self {
            Boundary::DirichletDirichlet => T::from_usize_lossy(l) * T::lit(0.5),
            Boundary::NeumannDirichlet => T::from_usize_lossy(2 * l - 1) * T::lit(0.25),
        }
    }

    /// Laplacian eigenvalue `λ_l = -q_l²`.
    pub fn laplacian_eigenvalue<T: Real>(self, l: usize) -> T {
        let q: T = self.wavenumber(l);
        -q * q
    }

    pub fn label(self) -> &'static str {
        match self {
            Boundary::DirichletDirichlet => "DD",
            Boundary::NeumannDirichlet => "ND",
        }
    }
}

/// Relative front-gain perturbation `p(x)` on `[0, 2π]`.
#[derive(Debug, Clone, PartialEq)]
pub enum MistuningProfile<T = f64> {
    /// `p ≡ 0`.
    Symmetric,
    /// `p(x) = 2 (H(x - π) - 1/2)` with `H(0) = 1`: the front half of the
    /// platoon leans on its predecessor, the rear half on its follower.
    OptimalStepI,
    /// `p ≡ 1`.
    OptimalConstantII,
    /// Piecewise constant: `(x_k, v_k)` means `p = v_k` on `[x_k, x_{k+1})`.
    /// The first breakpoint is `0`; the last piece extends to and includes
    /// `2π`.
    PiecewiseConstant(Vec<(T, T)>),
    /// `p(x) = amplitude · sin(wavenumber · x)`.
    Sine { amplitude: T, wavenumber: T },
}

impl<T: Real> MistuningProfile<T> {
    /// The first-order optimal profile for a scenario.
    pub fn optimal_for(scenario: Scenario) -> Self {
        match scenario {
            Scenario::ScenarioI => MistuningProfile::OptimalStepI,
            Scenario::ScenarioII => MistuningProfile::OptimalConstantII,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            MistuningProfile::Symmetric => "symmetric",
            MistuningProfile::OptimalStepI => "optimal_step_i",
            MistuningProfile::OptimalConstantII => "optimal_constant_ii",
            MistuningProfile::PiecewiseConstant(_) => "piecewise_constant",
            MistuningProfile::Sine { .. } => "sine",
        }
    }

    /// Checks the sup-norm bound and the ordering of breakpoints.
    pub fn validate(&self) -> Result<()> {
        match self {
            MistuningProfile::PiecewiseConstant(pieces) => {
                let first = pieces
                    .first()
                    .ok_or_else(|| Error::config("piecewise-constant profile needs at least one piece"))?;
                if first.0 != T::zero() {
                    return Err(Error::config("first breakpoint must be 0"));
                }
                for w in pieces.windows(2) {
                    if !(w[1].0 > w[0].0) {
                        return Err(Error::config("breakpoints must be strictly increasing"));
                    }
                }
                for &(x, v) in pieces {
                    if !(x >= T::zero() && x <= T::two_pi()) {
                        return Err(Error::config(format!("breakpoint {x} outside [0, 2π]")));
                    }
                    if !(v.abs() <= T::one()) {
                        return Err(Error::config(format!("profile value {v} exceeds 1 in magnitude")));
                    }
                }
                Ok(())
            }
            MistuningProfile::Sine { amplitude, wavenumber } => {
                if !(amplitude.abs() <= T::one()) || !wavenumber.is_finite() {
                    return Err(Error::config("sine profile needs |amplitude| ≤ 1 and finite wavenumber"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Interior points where the profile may jump, for quadrature panelling.
    pub fn breakpoints(&self) -> Vec<T> {
        match self {
            MistuningProfile::OptimalStepI => vec![T::PI()],
            MistuningProfile::PiecewiseConstant(pieces) => pieces.iter().skip(1).map(|p| p.0).collect(),
            _ => Vec::new(),
        }
    }

    /// Upper bound on `|p(x)|`.
    pub fn sup_norm(&self) -> T {
        match self {
            MistuningProfile::Symmetric => T::zero(),
            MistuningProfile::OptimalStepI | MistuningProfile::OptimalConstantII => T::one(),
            MistuningProfile::PiecewiseConstant(pieces) => {
                pieces.iter().fold(T::zero(), |m, p| m.max(p.1.abs()))
            }
            MistuningProfile::Sine { amplitude, .. } => amplitude.abs(),
        }
    }

    /// Evaluates `p(x)` without the domain check.
    pub(crate) fn value_unchecked(&self, x: T) -> T {
        match self {
            MistuningProfile::Symmetric => T::zero(),
            MistuningProfile::OptimalStepI => {
                if x >= T::PI() {
                    T::one()
                } else {
                    -T::one()
                }
            }
            MistuningProfile::OptimalConstantII => T::one(),
            MistuningProfile::PiecewiseConstant(pieces) => pieces
                .iter()
                .rev()
                .find(|p| x >= p.0)
                .or(pieces.first())
                .map_or(T::zero(), |p| p.1),
            MistuningProfile::Sine { amplitude, wavenumber } => *amplitude * (*wavenumber * x).sin(),
        }
    }
}

/// Evaluates the front-gain perturbation `p(x)` of a profile.
pub fn evaluate_profile<T: Real>(profile: &MistuningProfile<T>, x: T) -> Result<T> {
    if !(x >= T::zero() && x <= T::two_pi()) {
        return Err(Error::Domain {
            name: "x",
            value: x.to_f64_lossy(),
            domain: "[0, 2π]",
        });
    }
    Ok(profile.value_unchecked(x))
}

/// Platoon size, nominal gains, boundary scenario and mistuning.
#[derive(Debug, Clone, PartialEq)]
pub struct PlatoonConfig<T = f64> {
    pub n_vehicles: usize,
    pub k0: T,
    pub b0: T,
    pub scenario: Scenario,
    pub epsilon: T,
    pub profile: MistuningProfile<T>,
}

impl<T: Real> PlatoonConfig<T> {
    /// A validated configuration.
    pub fn new(
        n_vehicles: usize,
        k0: T,
        b0: T,
        scenario: Scenario,
        epsilon: T,
        profile: MistuningProfile<T>,
    ) -> Result<Self> {
        let config = Self {
            n_vehicles,
            k0,
            b0,
            scenario,
            epsilon,
            profile,
        };
        config.validate()?;
        Ok(config)
    }

    /// Symmetric gains (`ε = 0`).
    pub fn symmetric(n_vehicles: usize, k0: T, b0: T, scenario: Scenario) -> Result<Self> {
        Self::new(n_vehicles, k0, b0, scenario, T::zero(), MistuningProfile::Symmetric)
    }

    /// The scenario's first-order optimal profile at amplitude `epsilon`.
    pub fn optimal(n_vehicles: usize, k0: T, b0: T, scenario: Scenario, epsilon: T) -> Result<Self> {
        Self::new(n_vehicles, k0, b0, scenario, epsilon, MistuningProfile::optimal_for(scenario))
    }

    pub fn with_n(&self, n_vehicles: usize) -> Result<Self> {
        let mut c = self.clone();
        c.n_vehicles = n_vehicles;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_vehicles < 2 {
            return Err(Error::config("n_vehicles must be ≥ 2"));
        }
        if self.n_vehicles > MAX_VEHICLES {
            return Err(Error::config(format!("n_vehicles must be ≤ {MAX_VEHICLES}")));
        }
        if !(self.k0 > T::zero() && self.k0.is_finite()) {
            return Err(Error::config("k0 must be positive"));
        }
        if !(self.b0 > T::zero() && self.b0.is_finite()) {
            return Err(Error::config("b0 must be positive"));
        }
        if !(self.epsilon >= T::zero() && self.epsilon < T::one()) {
            return Err(Error::config("epsilon must lie in [0, 1)"));
        }
        self.profile.validate()
    }

    pub fn is_symmetric(&self) -> bool {
        self.epsilon == T::zero() || self.profile == MistuningProfile::Symmetric
    }

    /// Scaled inter-vehicle spacing `δ`.
    pub fn delta(&self) -> T {
        T::two_pi() / T::from_usize_lossy(self.scenario.gaps(self.n_vehicles))
    }
}

/// Desired scaled positions `x_i = 2π - i δ`, `i = 1..=N`.
///
/// Computed as `2π · ((g - i) / g)` over the gap count `g`, so a vehicle at
/// the midpoint lands exactly on `π`.
pub fn sample_positions<T: Real>(n_vehicles: usize, scenario: Scenario) -> Vec<T> {
    let g = scenario.gaps(n_vehicles);
    let gf = T::from_usize_lossy(g);
    (1..=n_vehicles)
        .map(|i| T::two_pi() * (T::from_usize_lossy(g - i) / gf))
        .collect()
}

/// Per-vehicle feedback gains.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSchedule<T = f64> {
    pub k_front: Vec<T>,
    pub k_back: Vec<T>,
    pub damping: Vec<T>,
    pub scenario: Scenario,
    pub delta: T,
}

impl<T: Real> GainSchedule<T> {
    pub fn n_vehicles(&self) -> usize {
        self.k_front.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.k_front.len();
        if n < 2 {
            return Err(Error::config("n_vehicles must be ≥ 2"));
        }
        if n > MAX_VEHICLES {
            return Err(Error::config(format!("n_vehicles must be ≤ {MAX_VEHICLES}")));
        }
        if self.k_back.len() != n || self.damping.len() != n {
            return Err(Error::Dimension("gain vectors differ in length".into()));
        }
        if let Some(i) = self.k_front.iter().position(|&k| !(k > T::zero() && k.is_finite())) {
            return Err(Error::config(format!("front gain of vehicle {} is not positive", i + 1)));
        }
        if let Some(i) = self.damping.iter().position(|&b| !(b > T::zero() && b.is_finite())) {
            return Err(Error::config(format!("damping of vehicle {} is not positive", i + 1)));
        }
        let active = match self.scenario {
            Scenario::ScenarioI => n,
            Scenario::ScenarioII => n - 1,
        };
        if let Some(i) = self.k_back[..active].iter().position(|&k| !(k > T::zero() && k.is_finite())) {
            return Err(Error::config(format!("back gain of vehicle {} is not positive", i + 1)));
        }
        if self.scenario == Scenario::ScenarioII && self.k_back[n - 1] != T::zero() {
            return Err(Error::config("scenario II requires a zero back gain on the last vehicle"));
        }
        Ok(())
    }
}

/// Samples the continuous gain profiles at the desired vehicle positions.
pub fn build_gain_schedule<T: Real>(config: &PlatoonConfig<T>) -> Result<GainSchedule<T>> {
    config.validate()?;
    if !(config.epsilon * config.profile.sup_norm() < T::one()) {
        return Err(Error::config("epsilon times the profile sup-norm must be below 1"));
    }
    let n = config.n_vehicles;
    let positions = sample_positions::<T>(n, config.scenario);
    let mut k_front = Vec::with_capacity(n);
    let mut k_back = Vec::with_capacity(n);
    for &x in &positions {
        let p = config.epsilon * evaluate_profile(&config.profile, x)?;
        k_front.push(config.k0 * (T::one() + p));
        k_back.push(config.k0 * (T::one() - p));
    }
    if config.scenario == Scenario::ScenarioII {
        k_back[n - 1] = T::zero();
    }
    let schedule = GainSchedule {
        k_front,
        k_back,
        damping: vec![config.b0; n],
        scenario: config.scenario,
        delta: config.delta(),
    };
    schedule.validate()?;
    Ok(schedule)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    kind: String,
    #[serde(default)]
    pieces: Option<Vec<(f64, f64)>>,
    #[serde(default)]
    amplitude: Option<f64>,
    #[serde(default)]
    wavenumber: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    n_vehicles: usize,
    k0: f64,
    b0: f64,
    scenario: Scenario,
    #[serde(default)]
    epsilon: f64,
    #[serde(default)]
    profile: Option<RawProfile>,
}

/// Parses a profile kind name together with its optional parameters.
///
/// `optimal` resolves to the scenario's optimal profile.
pub fn parse_profile<T: Real>(
    kind: &str,
    scenario: Scenario,
    pieces: Option<&[(f64, f64)]>,
    amplitude: Option<f64>,
    wavenumber: Option<f64>,
) -> Result<MistuningProfile<T>> {
    let profile = match kind {
        "symmetric" | "Symmetric" | "none" => MistuningProfile::Symmetric,
        "optimal" => MistuningProfile::optimal_for(scenario),
        "optimal_step_i" | "OptimalStepI" | "step" => MistuningProfile::OptimalStepI,
        "optimal_constant_ii" | "OptimalConstantII" | "constant" => MistuningProfile::OptimalConstantII,
        "piecewise_constant" | "CustomPiecewiseConstant" => {
            let pieces = pieces.ok_or_else(|| Error::config("piecewise_constant profile needs \"pieces\""))?;
            MistuningProfile::PiecewiseConstant(pieces.iter().map(|&(x, v)| (T::lit(x), T::lit(v))).collect())
        }
        "sine" | "CustomSine" => MistuningProfile::Sine {
            amplitude: T::lit(amplitude.ok_or_else(|| Error::config("sine profile needs \"amplitude\""))?),
            wavenumber: T::lit(wavenumber.ok_or_else(|| Error::config("sine profile needs \"wavenumber\""))?),
        },
        other => return Err(Error::config(format!("unknown profile kind \"{other}\""))),
    };
    profile.validate()?;
    Ok(profile)
}

impl<T: Real> PlatoonConfig<T> {
    /// Loads a configuration from its JSON document.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let profile = match &raw.profile {
            None => MistuningProfile::Symmetric,
            Some(p) => parse_profile(&p.kind, raw.scenario, p.pieces.as_deref(), p.amplitude, p.wavenumber)?,
        };
        Self::new(raw.n_vehicles, T::lit(raw.k0), T::lit(raw.b0), raw.scenario, T::lit(raw.epsilon), profile)
    }
}
