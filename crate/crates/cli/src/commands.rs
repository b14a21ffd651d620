//! The subcommands.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use platoon_core::asymptotics::{mistuned_asymptote, optimal_profile_search, predictions_csv, PredictionRow};
use platoon_core::f64::{PlatoonConfig, SimulationSetup};
use platoon_core::format::fmt_sig;
use platoon_core::model::sample_positions;
use platoon_core::pde::{assemble_galerkin, default_basis_size, pde_spectrum};
use platoon_core::robustness::{
    default_omega_grid, frequency_response, frequency_response_csv, hinf_bisection, hinf_sweep, GOLDEN_SECTION_TOLERANCE,
};
use platoon_core::sim::simulate;
use platoon_core::statespace::{closed_loop_from_config, modal_branches};
use platoon_core::sweep::{
    log_spaced_sizes, run_sweep, sweep_csv, track_least_stable, upper_half_slope, BaseConfig, SweepOutput, SweepSpec,
};
use platoon_core::{analyze_spectrum, build_gain_schedule};
use serde::Serialize;

use crate::args::{AsymptoteArgs, EigsArgs, HinfArgs, MistuneArgs, PdeArgs, SimulateArgs, SweepArgs};
use crate::error::CliError;
use crate::output::{rounded, Sink};

/// Window of the tail fit, relative to the initial error norm.
const TAIL_WINDOW: (f64, f64) = (1e-9, 1e-2);
/// Error level of the reported settling time, relative to the initial error.
const SETTLING_FRACTION: f64 = 0.05;

#[derive(Serialize)]
struct SpectrumSummary {
    n: usize,
    stability_margin: Option<f64>,
    least_stable_re: Option<f64>,
    least_stable_im: Option<f64>,
}

pub fn eigs(args: &EigsArgs) -> Result<(), CliError> {
    let config = args.config.resolve()?;
    let spectrum = analyze_spectrum(&closed_loop_from_config(&config)?)?;
    let mut sink = Sink::new(args.config.out.as_deref())?;
    sink.table("eigs", config.scenario, &config.n_vehicles.to_string(), &spectrum.to_csv())?;
    sink.summary(&SpectrumSummary {
        n: config.n_vehicles,
        stability_margin: rounded(spectrum.stability_margin),
        least_stable_re: rounded(spectrum.least_stable.re),
        least_stable_im: rounded(spectrum.least_stable.im),
    })?;
    sink.flush()
}

#[derive(Serialize)]
struct PdeSummary {
    n: usize,
    basis_size: usize,
    stability_margin: Option<f64>,
    least_stable_re: Option<f64>,
    least_stable_im: Option<f64>,
}

pub fn pde(args: &PdeArgs) -> Result<(), CliError> {
    let config = args.config.resolve()?;
    let basis_size = args.basis.unwrap_or_else(|| default_basis_size(config.n_vehicles));
    let disc = assemble_galerkin(&config, config.scenario.boundary(), basis_size)?;
    let spectrum = pde_spectrum(&disc)?;
    let mut sink = Sink::new(args.config.out.as_deref())?;
    sink.table("pde", config.scenario, &config.n_vehicles.to_string(), &spectrum.to_csv())?;
    sink.summary(&PdeSummary {
        n: config.n_vehicles,
        basis_size,
        stability_margin: rounded(spectrum.stability_margin),
        least_stable_re: rounded(spectrum.least_stable.re),
        least_stable_im: rounded(spectrum.least_stable.im),
    })?;
    sink.flush()
}

#[derive(Serialize)]
struct SweepSummary {
    n_values: Vec<usize>,
    /// Upper-half log-log slope of each output against `N`.
    slopes: BTreeMap<&'static str, Option<f64>>,
    warnings: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    first_mode_least_stable: Option<bool>,
}

pub fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    let config = args.config.resolve()?;
    let n_values = match &args.n_values {
        Some(v) => v.clone(),
        None => {
            if args.n_min < 2 || args.n_max < args.n_min || args.count == 0 {
                return Err(CliError::usage("need 2 ≤ n_min ≤ n_max and count ≥ 1"));
            }
            log_spaced_sizes(args.n_min, args.n_max, args.count)
        }
    };
    let outputs = args
        .outputs
        .iter()
        .map(|s| s.parse::<SweepOutput>())
        .collect::<Result<_, _>>()?;
    let base = BaseConfig::from(&config);
    let spec = SweepSpec { n_values: n_values.clone(), base_config: base.clone(), outputs };
    let result = run_sweep(&spec)?;
    let label = format!("{}-{}", n_values[0], n_values[n_values.len() - 1]);
    let mut sink = Sink::new(args.config.out.as_deref())?;
    let mut slopes = BTreeMap::new();
    for (output, rows) in &result.tables {
        sink.table(&format!("sweep_{}", output.name()), config.scenario, &label, &sweep_csv(rows))?;
        slopes.insert(output.name(), upper_half_slope(rows).ok().and_then(rounded));
    }
    let warnings = result.warnings();
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let mut first_mode_least_stable = None;
    if let Some(count) = args.track {
        if count == 0 {
            return Err(CliError::usage("--track needs at least one mode"));
        }
        let tracked = track_least_stable(&base, &n_values, count)?;
        let mut csv = String::from("N,l,re,im\n");
        for t in &tracked {
            for (l, s) in t.s_plus.iter().enumerate() {
                let _ = writeln!(csv, "{},{},{},{}", t.n, l + 1, fmt_sig(s.re), fmt_sig(s.im));
            }
        }
        sink.table("sweep_modes", config.scenario, &label, &csv)?;
        first_mode_least_stable = Some(tracked.iter().all(|t| t.first_mode_is_least_stable()));
    }
    sink.summary(&SweepSummary { n_values, slopes, warnings: warnings.len(), first_mode_least_stable })?;
    sink.flush()
}

#[derive(Serialize)]
struct MistuneSummary {
    n: usize,
    epsilon: Option<f64>,
    profile: &'static str,
    predicted_shift: Option<f64>,
    stability_margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shift_coefficient: Option<f64>,
}

pub fn mistune(args: &MistuneArgs) -> Result<(), CliError> {
    let mut config: PlatoonConfig = args.config.resolve()?;
    let mut shift_coefficient = None;
    if let Some(k) = args.search {
        let found = optimal_profile_search::<f64>(config.scenario.boundary(), 1, k)?;
        config.profile = found.profile;
        config.validate()?;
        shift_coefficient = rounded(found.shift_coefficient);
    }
    let schedule = build_gain_schedule(&config)?;
    let positions = sample_positions::<f64>(config.n_vehicles, config.scenario);
    let mut csv = String::from("vehicle,x,k_front,k_back,damping\n");
    for i in 0..config.n_vehicles {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            i + 1,
            fmt_sig(positions[i]),
            fmt_sig(schedule.k_front[i]),
            fmt_sig(schedule.k_back[i]),
            fmt_sig(schedule.damping[i])
        );
    }
    let prediction = mistuned_asymptote(&config, 1)?;
    let spectrum = analyze_spectrum(&closed_loop_from_config(&config)?)?;
    let mut sink = Sink::new(args.config.out.as_deref())?;
    sink.table("mistune", config.scenario, &config.n_vehicles.to_string(), &csv)?;
    sink.summary(&MistuneSummary {
        n: config.n_vehicles,
        epsilon: rounded(config.epsilon),
        profile: config.profile.kind_name(),
        predicted_shift: rounded(prediction.shift),
        stability_margin: rounded(spectrum.stability_margin),
        shift_coefficient,
    })?;
    sink.flush()
}

#[derive(Serialize)]
struct SimulationSummary {
    n: usize,
    stability_margin: Option<f64>,
    tail_slope: Option<f64>,
    time_to_5pct: Option<f64>,
    final_max_abs_error: Option<f64>,
}

pub fn simulate_cmd(args: &SimulateArgs) -> Result<(), CliError> {
    let config = args.config.resolve()?;
    let setup = SimulationSetup {
        config: config.clone(),
        delta_phys: args.delta,
        v_desired: args.vd,
        t_final: args.t_final,
        dt: args.dt,
        initial_perturbation: args.perturbation,
    };
    setup.validate()?;
    let trajectory = simulate(&setup, &build_gain_schedule(&config)?)?;
    let margin = analyze_spectrum(&closed_loop_from_config(&config)?)?.stability_margin;
    let mut sink = Sink::new(args.config.out.as_deref())?;
    sink.table("simulate", config.scenario, &config.n_vehicles.to_string(), &trajectory.to_csv())?;
    sink.summary(&SimulationSummary {
        n: config.n_vehicles,
        stability_margin: rounded(margin),
        tail_slope: trajectory.tail_log_slope(TAIL_WINDOW.0, TAIL_WINDOW.1).ok().and_then(rounded),
        time_to_5pct: trajectory.time_to_fraction(SETTLING_FRACTION).and_then(rounded),
        final_max_abs_error: rounded(trajectory.max_abs_error(trajectory.samples() - 1)),
    })?;
    sink.flush()
}

#[derive(Serialize)]
struct HinfSummary {
    n: usize,
    gamma_bisect: Option<f64>,
    gamma_sweep: Option<f64>,
    peak_frequency: Option<f64>,
    rel_diff: Option<f64>,
    agree: bool,
}

pub fn hinf(args: &HinfArgs) -> Result<(), CliError> {
    let config = args.config.resolve()?;
    let model = closed_loop_from_config(&config)?;
    let grid = default_omega_grid::<f64>();
    let bisect = hinf_bisection(&model, args.tol)?;
    let sweep = hinf_sweep(&model, &grid)?;
    let rel_diff = (bisect.gamma - sweep.gamma).abs() / bisect.gamma;
    let agree = rel_diff <= args.tol + GOLDEN_SECTION_TOLERANCE;
    let mut sink = Sink::new(args.config.out.as_deref())?;
    if args.config.out.is_some() {
        let curve = frequency_response(&model, &grid)?;
        sink.table("hinf", config.scenario, &config.n_vehicles.to_string(), &frequency_response_csv(&curve))?;
    }
    sink.summary(&HinfSummary {
        n: config.n_vehicles,
        gamma_bisect: rounded(bisect.gamma),
        gamma_sweep: rounded(sweep.gamma),
        peak_frequency: rounded(sweep.peak_frequency),
        rel_diff: rounded(rel_diff),
        agree,
    })?;
    sink.flush()?;
    if agree {
        Ok(())
    } else {
        Err(CliError::numerical(format!(
            "bisection ({}) and sweep ({}) disagree by {} relative",
            fmt_sig(bisect.gamma),
            fmt_sig(sweep.gamma),
            fmt_sig(rel_diff)
        )))
    }
}

#[derive(Serialize)]
struct AsymptoteSummary {
    n: usize,
    l_c: Option<f64>,
    /// Largest relative error over the modes inside the range of validity.
    max_rel_err_valid: Option<f64>,
}

pub fn asymptote(args: &AsymptoteArgs) -> Result<(), CliError> {
    let config = args.config.resolve()?;
    if args.modes == 0 || args.modes > config.n_vehicles {
        return Err(CliError::usage(format!("--modes must lie in 1..={}", config.n_vehicles)));
    }
    let branches = modal_branches(&build_gain_schedule(&config)?)?;
    let mut rows = Vec::with_capacity(args.modes);
    let mut max_valid: Option<f64> = None;
    let mut l_c = f64::NAN;
    for l in 1..=args.modes {
        let p = mistuned_asymptote(&config, l)?;
        let row = PredictionRow { n: config.n_vehicles, l, s_plus_pred: p.s_plus, s_plus_numeric: branches[l - 1].s_plus.re };
        if p.validity.valid {
            max_valid = Some(max_valid.map_or(row.rel_err(), |m| m.max(row.rel_err())));
        }
        l_c = p.validity.l_c;
        rows.push(row);
    }
    let mut sink = Sink::new(args.config.out.as_deref())?;
    sink.table("asymptote", config.scenario, &config.n_vehicles.to_string(), &predictions_csv(&rows))?;
    sink.summary(&AsymptoteSummary { n: config.n_vehicles, l_c: rounded(l_c), max_rel_err_valid: max_valid.and_then(rounded) })?;
    sink.flush()
}
