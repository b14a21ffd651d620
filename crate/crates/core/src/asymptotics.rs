//! Closed-form predictors for the slow eigenvalue branches.
//!
//! Every first-order formula derives from one projection. For a mode with
//! Laplacian eigenfunction of wavenumber `q` and unperturbed root `r0`, the
//! first-order shift per unit `ε` is
//!
//! ```text
//! DD:  r1 = [ (q/2πρ0) ∫ k_m sin(2qx) dx - (q²/2πρ0²) ∫ k_s sin²(qx) dx ] / (2 r0 + b0)
//! ND:  r1 = [-(q/2πρ0) ∫ k_m sin(2qx) dx - (q²/2πρ0²) ∫ k_s cos²(qx) dx ] / (2 r0 + b0)
//! ```
//!
//! For `l = 1` in DD (`q = 1/2`) this is
//! `[l/(4πρ0) ∫ k_m sin(lx) - l²/(8πρ0²) ∫ k_s sin²(lx/2)] / (2r0 + b0)`.
//! The large-`N` predictions replace `2 r0 + b0` by `b0` (since
//! `r0 = O(1/N²)`), drop the `k_s` term and use `ρ0 = N/2π`.

use std::fmt::Write as _;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::format::fmt_sig;
use crate::model::{Boundary, MistuningProfile, PlatoonConfig};
use crate::pde::{config_fields, mean_density, Coefficient};
use crate::scalar::Real;

/// Threshold on `|2 r0 + b0|` below which the two branches of a mode
/// collide and first-order theory breaks down.
pub const DEGENERACY_THRESHOLD: f64 = 1e-8;

/// Cells of the uniform grid the profile search runs on.
pub const SEARCH_CELLS: usize = 512;

/// Range of validity of the slow-branch formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validity<T = f64> {
    /// Critical wavenumber `b0 N / (2π √k0)`.
    pub l_c: T,
    /// Critical platoon size `π √(2 k0) / b0`.
    pub n_c: T,
    /// `l < l_c / 4`.
    pub valid: bool,
}

/// Predicted real parts of the eigenvalue pair of mode `l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticPrediction<T = f64> {
    pub mode_index: usize,
    pub s_plus: T,
    pub s_minus: T,
    /// First-order mistuning shift of `s_plus` (zero for symmetric gains).
    pub shift: T,
    pub validity: Validity<T>,
}

fn validity<T: Real>(k0: T, b0: T, n: usize, l: usize) -> Validity<T> {
    let nf = T::from_usize_lossy(n);
    let l_c = b0 * nf / (T::two_pi() * k0.sqrt());
    let n_c = T::PI() * (T::lit(2.0) * k0).sqrt() / b0;
    Validity {
        l_c,
        n_c,
        valid: T::from_usize_lossy(l) < l_c / T::lit(4.0),
    }
}

/// Large-`N` slow root of the symmetric platoon: `-k0 q² / (b0 ρ0²)`.
///
/// DD gives `-π² k0 l² / (b0 N²)`; ND gives `-π² k0 (2l-1)² / (4 b0 N²)`.
pub fn symmetric_asymptote<T: Real>(k0: T, b0: T, n: usize, l: usize, boundary: Boundary) -> AsymptoticPrediction<T> {
    let q: T = boundary.wavenumber(l);
    let rho0: T = mean_density(n);
    let s_plus = -k0 * q * q / (b0 * rho0 * rho0);
    AsymptoticPrediction {
        mode_index: l,
        s_plus,
        s_minus: -b0 - s_plus,
        shift: T::zero(),
        validity: validity(k0, b0, n, l),
    }
}

/// `∫ k_m sin(2qx) dx` and the `k_s` moment of the mode.
fn mode_moments<T: Real>(
    k_m: &Coefficient<T>,
    k_s: &Coefficient<T>,
    q: T,
    boundary: Boundary,
) -> Result<(T, T)> {
    let two = T::lit(2.0);
    let advective = k_m.integrate_against(|x| (two * q * x).sin())?;
    let diffusive = match boundary {
        Boundary::DirichletDirichlet => k_s.integrate_against(|x| (q * x).sin().powi(2))?,
        Boundary::NeumannDirichlet => k_s.integrate_against(|x| (q * x).cos().powi(2))?,
    };
    Ok((advective, diffusive))
}

/// Numerator of the resonance condition.
fn resonance_numerator<T: Real>(
    k_m: &Coefficient<T>,
    k_s: &Coefficient<T>,
    rho0: T,
    l: usize,
    boundary: Boundary,
    include_ks: bool,
) -> Result<T> {
    if l == 0 {
        return Err(Error::precondition("mode index starts at 1"));
    }
    let q: T = boundary.wavenumber(l);
    let (adv, diff) = mode_moments(k_m, k_s, q, boundary)?;
    let sign = match boundary {
        Boundary::DirichletDirichlet => T::one(),
        Boundary::NeumannDirichlet => -T::one(),
    };
    let mut num = sign * q / (T::two_pi() * rho0) * adv;
    if include_ks {
        num -= q * q / (T::two_pi() * rho0 * rho0) * diff;
    }
    Ok(num)
}

/// First-order shift `r1` per unit `ε` of the eigenvalue `r0` of mode `l`,
/// with `ρ0 = N/2π`.
pub fn resonance_condition<T: Real>(
    k_m: &Coefficient<T>,
    k_s: &Coefficient<T>,
    r0: Complex<T>,
    b0: T,
    n_vehicles: usize,
    l: usize,
    boundary: Boundary,
) -> Result<Complex<T>> {
    resonance_condition_with_density(k_m, k_s, r0, b0, mean_density(n_vehicles), l, boundary)
}

/// [`resonance_condition`] at an explicit density `ρ0`.
pub fn resonance_condition_with_density<T: Real>(
    k_m: &Coefficient<T>,
    k_s: &Coefficient<T>,
    r0: Complex<T>,
    b0: T,
    rho0: T,
    l: usize,
    boundary: Boundary,
) -> Result<Complex<T>> {
    let denom = r0 * T::lit(2.0) + b0;
    if denom.norm() < T::tol(DEGENERACY_THRESHOLD) {
        return Err(Error::DegenerateMode(denom.norm().to_f64_lossy()));
    }
    let num = resonance_numerator(k_m, k_s, rho0, l, boundary, true)?;
    Ok(Complex::new(num, T::zero()) / denom)
}

/// First-order prediction for the mistuned configuration.
///
/// DD: `shift = ε k0 · l/(2 b0 N) ∫ 2p(x) sin(lx) dx`; ND with `l = 1`:
/// `shift = -ε k0 · 1/(4 b0 N) ∫ 2p(x) sin(x/2) dx`. Higher ND modes use
/// their own wavenumber `(2l-1)/4`.
pub fn mistuned_asymptote<T: Real>(config: &PlatoonConfig<T>, l: usize) -> Result<AsymptoticPrediction<T>> {
    config.validate()?;
    let boundary = config.scenario.boundary();
    let base = symmetric_asymptote(config.k0, config.b0, config.n_vehicles, l, boundary);
    let (k_m, k_s) = config_fields(config);
    let per_eps =
        resonance_numerator(&k_m, &k_s, mean_density(config.n_vehicles), l, boundary, false)? / config.b0;
    let shift = config.epsilon * per_eps;
    let s_plus = base.s_plus + shift;
    Ok(AsymptoticPrediction {
        mode_index: l,
        s_plus,
        s_minus: -config.b0 - s_plus,
        shift,
        validity: base.validity,
    })
}

/// One row of a prediction-versus-numerics table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionRow {
    pub n: usize,
    pub l: usize,
    pub s_plus_pred: f64,
    pub s_plus_numeric: f64,
}

impl PredictionRow {
    pub fn rel_err(&self) -> f64 {
        (self.s_plus_pred - self.s_plus_numeric).abs() / self.s_plus_numeric.abs()
    }
}

/// CSV with header `N,l,s_plus_pred,s_plus_numeric,rel_err`.
pub fn predictions_csv(rows: &[PredictionRow]) -> String {
    let mut out = String::from("N,l,s_plus_pred,s_plus_numeric,rel_err\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.n,
            r.l,
            fmt_sig(r.s_plus_pred),
            fmt_sig(r.s_plus_numeric),
            fmt_sig(r.rel_err())
        );
    }
    out
}

/// Result of the first-order profile search.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSearchResult<T = f64> {
    pub profile: MistuningProfile<T>,
    /// `∫ k_m(x) sin(2qx) dx` with `k_m = 2p`.
    pub integral: T,
    /// `c` such that the predicted shift is `c · ε k0 / (b0 N)`; negative is
    /// stabilising.
    pub shift_coefficient: T,
}

/// Finds the piecewise-constant profile with at most `max_breakpoints`
/// interior jumps and `|p| ≤ 1` minimising the first-order shift of mode `l`.
///
/// The shift is linear in `p`, so on each piece the optimal value is
/// `-sign(∫_piece w)` for the mode weight `w`, and the search reduces to
/// partitioning a uniform grid of cells into at most `max_breakpoints + 1`
/// runs maximising `Σ |∫_run w|`, solved by dynamic programming.
pub fn optimal_profile_search<T: Real>(
    boundary: Boundary,
    l: usize,
    max_breakpoints: usize,
) -> Result<ProfileSearchResult<T>> {
    if l == 0 {
        return Err(Error::precondition("mode index starts at 1"));
    }
    let q: T = boundary.wavenumber(l);
    let two = T::lit(2.0);
    // Shift per unit ε and k0/(b0 N) is sign·q·∫ 2p sin(2qx) dx.
    let sign = match boundary {
        Boundary::DirichletDirichlet => T::one(),
        Boundary::NeumannDirichlet => -T::one(),
    };
    let cells = SEARCH_CELLS;
    let edge = |k: usize| T::two_pi() * (T::from_usize_lossy(k) / T::from_usize_lossy(cells));
    // Exact cell integrals of the weight w(x) = sign · sin(2qx).
    let cell_w: Vec<T> = (0..cells)
        .map(|k| {
            let (a, b) = (edge(k), edge(k + 1));
            sign * ((two * q * a).cos() - (two * q * b).cos()) / (two * q)
        })
        .collect();
    let mut prefix = vec![T::zero(); cells + 1];
    for k in 0..cells {
        prefix[k + 1] = prefix[k] + cell_w[k];
    }
    let runs = max_breakpoints + 1;
    // best[r][k]: best value covering cells 0..k with exactly r runs.
    let neg = T::neg_infinity();
    let mut best = vec![vec![neg; cells + 1]; runs + 1];
    let mut arg = vec![vec![0usize; cells + 1]; runs + 1];
    best[0][0] = T::zero();
    for r in 1..=runs {
        for k in 1..=cells {
            for j in (r - 1)..k {
                if best[r - 1][j] == neg {
                    continue;
                }
                let v = best[r - 1][j] + (prefix[k] - prefix[j]).abs();
                if v > best[r][k] {
                    best[r][k] = v;
                    arg[r][k] = j;
                }
            }
        }
    }
    let (r_best, _) = (1..=runs).fold((1, neg), |acc, r| if best[r][cells] > acc.1 + T::tol(1e-13) { (r, best[r][cells]) } else { acc });
    let mut bounds = vec![cells];
    let mut k = cells;
    for r in (1..=r_best).rev() {
        k = arg[r][k];
        bounds.push(k);
    }
    bounds.reverse();
    let tiny = T::tol(1e-12);
    let mut pieces: Vec<(T, T)> = Vec::new();
    for w in bounds.windows(2) {
        let s = prefix[w[1]] - prefix[w[0]];
        let v = if s > tiny {
            -T::one()
        } else if s < -tiny {
            T::one()
        } else {
            T::zero()
        };
        match pieces.last() {
            Some(&(_, last)) if last == v => {}
            _ => pieces.push((edge(w[0]), v)),
        }
    }
    let profile = canonical_profile(pieces);
    let k_m = Coefficient::Profile { scale: two, profile: profile.clone() };
    let integral = k_m.integrate_against(|x| (two * q * x).sin())?;
    Ok(ProfileSearchResult {
        profile,
        integral,
        shift_coefficient: sign * q * integral,
    })
}

fn canonical_profile<T: Real>(pieces: Vec<(T, T)>) -> MistuningProfile<T> {
    match pieces.as_slice() {
        [(_, v)] if *v == T::zero() => MistuningProfile::Symmetric,
        [(_, v)] if *v == T::one() => MistuningProfile::OptimalConstantII,
        [(_, a), (x, b)] if *a == -T::one() && *b == T::one() && *x == T::PI() => MistuningProfile::OptimalStepI,
        _ => MistuningProfile::PiecewiseConstant(pieces),
    }
}
