//! Time-domain simulation of the platoon in physical coordinates.
//!
//! Vehicle `i` is a double integrator driven by
//!
//! ```text
//! Z̈_i = -k_f,i (Z_i - Z_{i-1} + Δ) - k_b,i (Z_i - Z_{i+1} - Δ) - b_i (V_i - V_d)
//! ```
//!
//! with a fictitious leader `Z_0 = V_d t` and, in scenario I, a fictitious
//! follower `Z_{N+1} = V_d t - (N+1) Δ`. The dynamics are integrated in the
//! deviations `Z_i - Z_i^d` and `V_i - V_d` from the desired motion, which
//! keeps the errors free of the rounding of growing absolute positions. The
//! state is advanced with the classic fourth-order Runge-Kutta method at a
//! fixed step.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::format::fmt_sig;
use crate::matrix::Matrix;
use crate::model::{GainSchedule, PlatoonConfig, Scenario};
use crate::scalar::Real;

/// Any absolute error beyond this aborts the run as divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// Largest number of time rows per vehicle written to CSV.
pub const MAX_CSV_ROWS_PER_VEHICLE: usize = 2000;

/// Experiment definition.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSetup<T = f64> {
    pub config: PlatoonConfig<T>,
    /// Desired gap `Δ`.
    pub delta_phys: T,
    /// Desired velocity `V_d`.
    pub v_desired: T,
    pub t_final: T,
    pub dt: T,
    /// Initial spacing error of vehicle 1 with respect to the leader.
    pub initial_perturbation: T,
}

impl<T: Real> SimulationSetup<T> {
    /// `Δ = 1`, `V_d = 5`, `dt = 0.01`, `T = 300`, perturbation `0.5`.
    pub fn standard(config: PlatoonConfig<T>) -> Self {
        Self {
            config,
            delta_phys: T::one(),
            v_desired: T::lit(5.0),
            t_final: T::lit(300.0),
            dt: T::lit(0.01),
            initial_perturbation: T::lit(0.5),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if !(self.dt > T::zero() && self.dt.is_finite()) {
            return Err(Error::config("dt must be positive"));
        }
        if !(self.t_final >= self.dt && self.t_final.is_finite()) {
            return Err(Error::config("t_final must be at least dt"));
        }
        if !(self.delta_phys > T::zero() && self.delta_phys.is_finite()) {
            return Err(Error::config("delta_phys must be positive"));
        }
        if !self.v_desired.is_finite() || !self.initial_perturbation.is_finite() {
            return Err(Error::config("v_desired and initial_perturbation must be finite"));
        }
        Ok(())
    }

    /// Number of steps: `round(t_final / dt)`.
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round().to_usize().unwrap_or(0).max(1)
    }
}

/// Sampled trajectories; matrices are `N × T` with one column per instant.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryResult<T = f64> {
    pub times: Vec<T>,
    /// `Z_i^d - Z_i`.
    pub abs_error: Matrix<T>,
    /// `Z_{i-1} - Z_i - Δ`.
    pub rel_error: Matrix<T>,
    pub velocities: Matrix<T>,
}

struct Dynamics<'a, T> {
    schedule: &'a GainSchedule<T>,
}

impl<T: Real> Dynamics<'_, T> {
    /// Time derivative of the deviations `[ζ_1..ζ_N, ν_1..ν_N]` with
    /// `ζ_i = Z_i - Z_i^d` and `ν_i = V_i - V_d`. The fictitious vehicles
    /// follow their desired motion exactly, so their deviations vanish.
    fn rhs(&self, state: &[T], out: &mut [T]) {
        let n = self.schedule.n_vehicles();
        let (z, v) = state.split_at(n);
        for i in 0..n {
            let front = if i == 0 { T::zero() } else { z[i - 1] };
            let mut acc = -self.schedule.k_front[i] * (z[i] - front);
            let back = if i + 1 < n {
                Some(z[i + 1])
            } else if self.schedule.scenario == Scenario::ScenarioI {
                Some(T::zero())
            } else {
                None
            };
            if let Some(back) = back {
                acc -= self.schedule.k_back[i] * (z[i] - back);
            }
            acc -= self.schedule.damping[i] * v[i];
            out[i] = v[i];
            out[n + i] = acc;
        }
    }
}

/// Integrates the platoon from the perturbed initial condition.
pub fn simulate<T: Real>(setup: &SimulationSetup<T>, schedule: &GainSchedule<T>) -> Result<TrajectoryResult<T>> {
    setup.validate()?;
    schedule.validate()?;
    let n = schedule.n_vehicles();
    if schedule.scenario != setup.config.scenario || n != setup.config.n_vehicles {
        return Err(Error::precondition("schedule does not belong to the setup's configuration"));
    }
    let dyn_ = Dynamics { schedule };
    let steps = setup.steps();
    let dt = setup.dt;
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);

    let mut state = vec![T::zero(); 2 * n];
    state[0] = -setup.initial_perturbation;

    let cols = steps + 1;
    let mut times = Vec::with_capacity(cols);
    let mut abs_error = Matrix::zeros(n, cols);
    let mut rel_error = Matrix::zeros(n, cols);
    let mut velocities = Matrix::zeros(n, cols);
    let limit = T::lit(DIVERGENCE_LIMIT);

    let mut record = |k: usize, t: T, state: &[T]| -> Result<()> {
        times.push(t);
        let mut prev_abs = T::zero();
        for i in 0..n {
            let e = -state[i];
            if !(e.abs() <= limit) {
                return Err(Error::Divergence {
                    time: t.to_f64_lossy(),
                    vehicle: i + 1,
                    value: e.to_f64_lossy(),
                });
            }
            abs_error[(i, k)] = e;
            rel_error[(i, k)] = e - prev_abs;
            velocities[(i, k)] = setup.v_desired + state[n + i];
            prev_abs = e;
        }
        Ok(())
    };

    record(0, T::zero(), &state)?;
    let mut k1 = vec![T::zero(); 2 * n];
    let mut k2 = vec![T::zero(); 2 * n];
    let mut k3 = vec![T::zero(); 2 * n];
    let mut k4 = vec![T::zero(); 2 * n];
    let mut tmp = vec![T::zero(); 2 * n];
    for step in 0..steps {
        dyn_.rhs(&state, &mut k1);
        for j in 0..2 * n {
            tmp[j] = state[j] + half * dt * k1[j];
        }
        dyn_.rhs(&tmp, &mut k2);
        for j in 0..2 * n {
            tmp[j] = state[j] + half * dt * k2[j];
        }
        dyn_.rhs(&tmp, &mut k3);
        for j in 0..2 * n {
            tmp[j] = state[j] + dt * k3[j];
        }
        dyn_.rhs(&tmp, &mut k4);
        for j in 0..2 * n {
            state[j] += dt * sixth * (k1[j] + T::lit(2.0) * (k2[j] + k3[j]) + k4[j]);
        }
        record(step + 1, dt * T::from_usize_lossy(step + 1), &state)?;
    }
    Ok(TrajectoryResult {
        times,
        abs_error,
        rel_error,
        velocities,
    })
}

impl<T: Real> TrajectoryResult<T> {
    pub fn samples(&self) -> usize {
        self.times.len()
    }

    /// Euclidean norm of the absolute errors at sample `k`.
    pub fn error_norm(&self, k: usize) -> T {
        (0..self.abs_error.rows())
            .map(|i| self.abs_error[(i, k)].powi(2))
            .sum::<T>()
            .sqrt()
    }

    /// Largest absolute error over the platoon at sample `k`.
    pub fn max_abs_error(&self, k: usize) -> T {
        (0..self.abs_error.rows()).fold(T::zero(), |m, i| m.max(self.abs_error[(i, k)].abs()))
    }

    /// Least-squares slope of `ln ‖abs_error(t)‖` over the samples whose norm
    /// lies in `[lo, hi] · ‖abs_error(0)‖`.
    ///
    /// The window skips the initial transient and stops well above the
    /// floating-point floor of the position errors.
    pub fn tail_log_slope(&self, lo: T, hi: T) -> Result<T> {
        let initial = self.error_norm(0);
        if initial == T::zero() {
            return Err(Error::precondition("trajectory starts at equilibrium"));
        }
        let (mut st, mut sy, mut stt, mut sty, mut count) = (T::zero(), T::zero(), T::zero(), T::zero(), 0usize);
        let first = (0..self.samples()).find(|&k| self.error_norm(k) <= hi * initial);
        let Some(first) = first else {
            return Err(Error::numerical("errors never enter the fitting window"));
        };
        for k in first..self.samples() {
            let e = self.error_norm(k);
            if e < lo * initial {
                break;
            }
            if e > hi * initial {
                continue;
            }
            let (t, y) = (self.times[k], e.ln());
            st += t;
            sy += y;
            stt += t * t;
            sty += t * y;
            count += 1;
        }
        if count < 10 {
            return Err(Error::numerical("too few samples in the fitting window"));
        }
        let nf = T::from_usize_lossy(count);
        Ok((nf * sty - st * sy) / (nf * stt - st * st))
    }

    /// Earliest time after which the largest absolute error stays below
    /// `fraction` of its initial value, if the run gets there.
    pub fn time_to_fraction(&self, fraction: T) -> Option<T> {
        let threshold = fraction * self.max_abs_error(0);
        let mut last_above = None;
        for k in 0..self.samples() {
            if self.max_abs_error(k) >= threshold {
                last_above = Some(k);
            }
        }
        match last_above {
            None => Some(self.times[0]),
            Some(k) if k + 1 < self.samples() => Some(self.times[k + 1]),
            Some(_) => None,
        }
    }

    /// Long-format CSV `t,vehicle,abs_error,rel_error,velocity`, with time
    /// downsampled to at most 2000 rows per vehicle.
    pub fn to_csv(&self) -> String {
        let samples = self.samples();
        let stride = samples.div_ceil(MAX_CSV_ROWS_PER_VEHICLE).max(1);
        let mut out = String::from("t,vehicle,abs_error,rel_error,velocity\n");
        for k in (0..samples).step_by(stride) {
            for i in 0..self.abs_error.rows() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    fmt_sig(self.times[k].to_f64_lossy()),
                    i + 1,
                    fmt_sig(self.abs_error[(i, k)].to_f64_lossy()),
                    fmt_sig(self.rel_error[(i, k)].to_f64_lossy()),
                    fmt_sig(self.velocities[(i, k)].to_f64_lossy())
                );
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_gain_schedule;

    #[test]
    fn equilibrium_stays_put() {
        let config = PlatoonConfig::<f64>::symmetric(5, 1.0, 0.5, Scenario::ScenarioI).unwrap();
        let mut setup = SimulationSetup::standard(config.clone());
        setup.initial_perturbation = 0.0;
        setup.t_final = 5.0;
        let r = simulate(&setup, &build_gain_schedule(&config).unwrap()).unwrap();
        assert!((0..r.samples()).all(|k| r.max_abs_error(k) < 1e-12));
    }

    #[test]
    fn relative_errors_are_differences_of_absolute_errors() {
        let config = PlatoonConfig::<f64>::optimal(6, 1.0, 0.5, Scenario::ScenarioII, 0.1).unwrap();
        let mut setup = SimulationSetup::standard(config.clone());
        setup.t_final = 2.0;
        let r = simulate(&setup, &build_gain_schedule(&config).unwrap()).unwrap();
        assert_eq!(r.rel_error[(0, 0)], r.abs_error[(0, 0)]);
        assert!((r.abs_error[(0, 0)] - 0.5).abs() < 1e-15);
        for k in [0, 50, 200] {
            for i in 1..6 {
                let d = r.abs_error[(i, k)] - r.abs_error[(i - 1, k)];
                assert!((r.rel_error[(i, k)] - d).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rejects_bad_step() {
        let config = PlatoonConfig::<f64>::symmetric(5, 1.0, 0.5, Scenario::ScenarioI).unwrap();
        let mut setup = SimulationSetup::standard(config.clone());
        setup.dt = 0.0;
        assert!(simulate(&setup, &build_gain_schedule(&config).unwrap()).is_err());
    }
}
