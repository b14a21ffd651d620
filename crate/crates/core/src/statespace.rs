//! Exact closed-loop state-space models and their spectra.
//!
//! With state `(ỹ, ṽ)` of scaled position and velocity errors, the platoon
//! obeys
//!
//! ```text
//! d/dt [ỹ; ṽ] = [[0, I], [-K, -B]] [ỹ; ṽ] + [0; I] w,     e = C ỹ
//! ```
//!
//! with `K = K_f Mᵀ + K_b M` (scenario I) or `K_f Mᵀ + K_b M_o`
//! (scenario II). `M` is upper bidiagonal with `1` on the diagonal and `-1`
//! on the superdiagonal; `M_o` is `M` with its last row zeroed.

use std::cmp::Ordering;
use std::fmt::Write as _;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::format::fmt_sig;
use crate::linalg::eigenvalues_dense;
use crate::matrix::Matrix;
use crate::model::{build_gain_schedule, GainSchedule, PlatoonConfig, Scenario};
use crate::scalar::Real;

/// Real parts closer than this are treated as tied when picking the least
/// stable eigenvalue.
pub const TIE_TOLERANCE: f64 = 1e-10;

/// The closed-loop system matrix with its disturbance input and spacing-error
/// output maps.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopModel<T = f64> {
    pub a_matrix: Matrix<T>,
    pub b_matrix: Matrix<T>,
    pub c_matrix: Matrix<T>,
    pub n_vehicles: usize,
    pub scenario: Option<Scenario>,
}

impl<T: Real> ClosedLoopModel<T> {
    /// Wraps arbitrary `(A, B, C)` matrices, for example a reference system
    /// used to check the robustness computations.
    pub fn from_matrices(a: Matrix<T>, b: Matrix<T>, c: Matrix<T>) -> Result<Self> {
        if !a.is_square() || b.rows() != a.rows() || c.cols() != a.cols() {
            return Err(Error::Dimension(format!(
                "A {}x{}, B {}x{}, C {}x{}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols(),
                c.rows(),
                c.cols()
            )));
        }
        let n_vehicles = b.cols();
        Ok(Self {
            a_matrix: a,
            b_matrix: b,
            c_matrix: c,
            n_vehicles,
            scenario: None,
        })
    }

    pub fn order(&self) -> usize {
        self.a_matrix.rows()
    }
}

/// The position-coupling matrix `K_f Mᵀ + K_b M` (or `M_o`).
pub fn stiffness_matrix<T: Real>(schedule: &GainSchedule<T>) -> Result<Matrix<T>> {
    schedule.validate()?;
    let n = schedule.n_vehicles();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        let kf = schedule.k_front[i];
        // Row i of K_f Mᵀ: kf at (i, i) and -kf at (i, i-1).
        k[(i, i)] += kf;
        if i > 0 {
            k[(i, i - 1)] -= kf;
        }
        let last_back_row = schedule.scenario == Scenario::ScenarioII && i == n - 1;
        if !last_back_row {
            let kb = schedule.k_back[i];
            // Row i of K_b M: kb at (i, i) and -kb at (i, i+1).
            k[(i, i)] += kb;
            if i + 1 < n {
                k[(i, i + 1)] -= kb;
            }
        }
    }
    Ok(k)
}

/// Assembles the closed-loop model of a gain schedule.
pub fn build_closed_loop<T: Real>(schedule: &GainSchedule<T>) -> Result<ClosedLoopModel<T>> {
    let n = schedule.n_vehicles();
    let k = stiffness_matrix(schedule)?;
    let mut a = Matrix::zeros(2 * n, 2 * n);
    a.set_block(0, n, &Matrix::identity(n));
    a.set_block(n, 0, &k.scale(-T::one()));
    for i in 0..n {
        a[(n + i, n + i)] = -schedule.damping[i];
    }
    let mut b = Matrix::zeros(2 * n, n);
    b.set_block(n, 0, &Matrix::identity(n));
    Ok(ClosedLoopModel {
        a_matrix: a,
        b_matrix: b,
        c_matrix: output_map(n, schedule.scenario),
        n_vehicles: n,
        scenario: Some(schedule.scenario),
    })
}

/// Spacing-error output map.
///
/// Rows `1..=N` give the front spacing errors `e_i = ỹ_{i-1} - ỹ_i` with
/// `ỹ_0 = 0` (the block `[-Mᵀ | 0]`). In scenario I the gap between vehicle
/// `N` and the fictitious follower, `ỹ_N - ỹ_{N+1} = ỹ_N`, is a spacing error
/// too and forms an extra last row.
pub fn output_map<T: Real>(n: usize, scenario: Scenario) -> Matrix<T> {
    let rows = match scenario {
        Scenario::ScenarioI => n + 1,
        Scenario::ScenarioII => n,
    };
    let mut c = Matrix::zeros(rows, 2 * n);
    for i in 0..n {
        c[(i, i)] = -T::one();
        if i > 0 {
            c[(i, i - 1)] = T::one();
        }
    }
    if scenario == Scenario::ScenarioI {
        c[(n, n - 1)] = T::one();
    }
    c
}

/// Builds the gain schedule of a configuration and its closed-loop model.
pub fn closed_loop_from_config<T: Real>(config: &PlatoonConfig<T>) -> Result<ClosedLoopModel<T>> {
    build_closed_loop(&build_gain_schedule(config)?)
}

/// A set of closed-loop eigenvalues with its least stable member.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T = f64> {
    pub eigenvalues: Vec<Complex<T>>,
    pub least_stable: Complex<T>,
    pub stability_margin: T,
}

/// Orders eigenvalues by descending real part, then ascending `|Im|`, then
/// nonnegative imaginary part first.
pub fn spectral_order<T: Real>(a: &Complex<T>, b: &Complex<T>) -> Ordering {
    b.re.partial_cmp(&a.re)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.im.abs().partial_cmp(&b.im.abs()).unwrap_or(Ordering::Equal))
        .then_with(|| b.im.partial_cmp(&a.im).unwrap_or(Ordering::Equal))
}

impl<T: Real> Spectrum<T> {
    pub fn from_eigenvalues(eigenvalues: Vec<Complex<T>>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::precondition("empty spectrum"));
        }
        let max_re = eigenvalues.iter().fold(T::neg_infinity(), |m, z| m.max(z.re));
        let tie = T::tol(TIE_TOLERANCE);
        let least_stable = eigenvalues
            .iter()
            .filter(|z| z.re >= max_re - tie)
            .min_by(|a, b| {
                a.im.abs()
                    .partial_cmp(&b.im.abs())
                    .unwrap_or(Ordering::Equal)
                    .then_with(|| b.im.partial_cmp(&a.im).unwrap_or(Ordering::Equal))
            })
            .copied()
            .expect("nonempty");
        Ok(Self {
            eigenvalues,
            least_stable,
            stability_margin: -least_stable.re,
        })
    }

    /// Eigenvalues sorted by [`spectral_order`].
    pub fn sorted(&self) -> Vec<Complex<T>> {
        let mut v = self.eigenvalues.clone();
        v.sort_by(spectral_order);
        v
    }

    /// True when every eigenvalue lies in the open left half-plane.
    pub fn is_hurwitz(&self) -> bool {
        self.stability_margin > T::zero()
    }

    /// CSV with header `l,re,im`, sorted by descending real part.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("l,re,im\n");
        for (l, z) in self.sorted().iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", l + 1, fmt_sig(z.re.to_f64_lossy()), fmt_sig(z.im.to_f64_lossy()));
        }
        out
    }
}

/// The full spectrum of the closed-loop matrix.
pub fn analyze_spectrum<T: Real>(model: &ClosedLoopModel<T>) -> Result<Spectrum<T>> {
    Spectrum::from_eigenvalues(eigenvalues_dense(&model.a_matrix)?)
}

/// Roots `(s⁺, s⁻)` of `s² + b s + μ = 0`.
///
/// `s⁺` has the larger real part. For real `μ` with real roots it is formed
/// as `-2μ / (b + √(b² - 4μ))` to avoid cancellation; complex roots have real
/// part exactly `-b/2`. The roots always sum to `-b`.
pub fn damped_roots<T: Real>(b: T, mu: Complex<T>) -> (Complex<T>, Complex<T>) {
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    if mu.im == T::zero() {
        let d = b * b - four * mu.re;
        if d >= T::zero() {
            let sq = d.sqrt();
            let plus = if b + sq != T::zero() { -two * mu.re / (b + sq) } else { (-b + sq) / two };
            let minus = -b - plus;
            return (Complex::new(plus, T::zero()), Complex::new(minus, T::zero()));
        }
        let w = (-d).sqrt() / two;
        let re = -b / two;
        return (Complex::new(re, w), Complex::new(re, -w));
    }
    let d = Complex::new(b * b, T::zero()) - mu * four;
    let sq = d.sqrt();
    let denom = sq + b;
    let plus = if denom.norm() > T::zero() { -(mu * two) / denom } else { (sq - b) / two };
    let minus = Complex::new(-b, T::zero()) - plus;
    if plus.re >= minus.re {
        (plus, minus)
    } else {
        (minus, plus)
    }
}

/// Closed-form spectrum of a symmetric platoon.
///
/// Scenario I: `k0 (2 - 2 cos(lπ/(N+1)))` are the eigenvalues of `K`;
/// scenario II: `k0 (2 - 2 cos((2l-1)π/(2N+1)))`. Each gives the pair of
/// roots of `s² + b0 s + μ_l = 0`.
pub fn symmetric_spectrum_analytic<T: Real>(config: &PlatoonConfig<T>) -> Result<Spectrum<T>> {
    config.validate()?;
    if !config.is_symmetric() {
        return Err(Error::precondition("the closed form needs epsilon = 0"));
    }
    let mut eig = Vec::with_capacity(2 * config.n_vehicles);
    for mu in symmetric_stiffness_eigenvalues(config.n_vehicles, config.k0, config.scenario) {
        let (p, m) = damped_roots(config.b0, Complex::new(mu, T::zero()));
        eig.push(p);
        eig.push(m);
    }
    Spectrum::from_eigenvalues(eig)
}

/// Eigenvalues of `K` for symmetric gains, ascending.
pub fn symmetric_stiffness_eigenvalues<T: Real>(n: usize, k0: T, scenario: Scenario) -> Vec<T> {
    let two = T::lit(2.0);
    (1..=n)
        .map(|l| {
            let angle = match scenario {
                Scenario::ScenarioI => T::PI() * T::from_usize_lossy(l) / T::from_usize_lossy(n + 1),
                Scenario::ScenarioII => T::PI() * T::from_usize_lossy(2 * l - 1) / T::from_usize_lossy(2 * n + 1),
            };
            // 2 - 2cos θ = 4 sin²(θ/2), free of cancellation for small θ.
            let s = (angle / two).sin();
            k0 * two * two * s * s
        })
        .collect()
}

/// One mode of a platoon with uniform damping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeBranch<T = f64> {
    /// Mode index, `1` for the smallest stiffness eigenvalue.
    pub l: usize,
    /// Eigenvalue of the coupling matrix `K`.
    pub mu: Complex<T>,
    pub s_plus: Complex<T>,
    pub s_minus: Complex<T>,
}

/// Closed-loop eigenvalues organised into modes.
///
/// With uniform damping `b0` every eigenvalue of `A` solves
/// `s² + b0 s + μ = 0` for an eigenvalue `μ` of `K`. The coupling matrix is
/// tridiagonal with positive products of opposite off-diagonals, hence
/// similar to a symmetric matrix: its `μ` are real and simple, and sorting
/// them gives a labelling that is continuous in the gains.
pub fn modal_branches<T: Real>(schedule: &GainSchedule<T>) -> Result<Vec<ModeBranch<T>>> {
    let b0 = schedule.damping[0];
    if schedule.damping.iter().any(|&b| b != b0) {
        return Err(Error::precondition("modal decomposition needs uniform damping"));
    }
    let k = stiffness_matrix(schedule)?;
    let mut mus = eigenvalues_dense(&k)?;
    mus.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap_or(Ordering::Equal));
    Ok(mus
        .into_iter()
        .enumerate()
        .map(|(i, mu)| {
            let mu = if mu.im.abs() <= T::tol(1e-10) * mu.norm() { Complex::new(mu.re, T::zero()) } else { mu };
            let (s_plus, s_minus) = damped_roots(b0, mu);
            ModeBranch { l: i + 1, mu, s_plus, s_minus }
        })
        .collect())
}
