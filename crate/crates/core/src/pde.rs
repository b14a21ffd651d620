//! Continuum approximation of the platoon.
//!
//! Mistuned gains turn the closed loop into the damped wave equation
//!
//! ```text
//! ṽ_tt = a0² ṽ_xx + ε [ (k_m/ρ0) ṽ_x + (k_s/2ρ0²) ṽ_xx ] - b0 ṽ_t
//! ```
//!
//! on `[0, 2π]`, with `a0² = k0/ρ0²`, Dirichlet conditions at both ends
//! (scenario I) or Neumann at `x = 0` and Dirichlet at `x = 2π`
//! (scenario II). `k_m` and `k_s` are the antisymmetric and symmetric parts
//! of the gain perturbation. This module provides the nominal eigenvalues in
//! closed form, a Galerkin discretisation on the Laplacian eigenfunctions,
//! and the central-difference discretisation that maps back onto the
//! platoon.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues_dense, CompositeRule};
use crate::matrix::Matrix;
use crate::model::{sample_positions, Boundary, MistuningProfile, PlatoonConfig, Scenario};
use crate::scalar::Real;
use crate::statespace::{damped_roots, Spectrum};

/// Default basis floor.
pub const MIN_DEFAULT_BASIS: usize = 64;

/// Largest basis accepted.
pub const MAX_BASIS: usize = 512;

/// Default number of retained basis functions: `max(2N, 64)`, at most 512.
pub fn default_basis_size(n_vehicles: usize) -> usize {
    (2 * n_vehicles).max(MIN_DEFAULT_BASIS).min(MAX_BASIS)
}

/// Mean density `ρ0 = N / 2π` used by the closed-form continuum results.
pub fn mean_density<T: Real>(n_vehicles: usize) -> T {
    T::from_usize_lossy(n_vehicles) / T::two_pi()
}

/// Density matched to the discrete platoon: `1/δ` with the gap count of the
/// scenario, `(N+1)/2π` for DD and `(N+½)/2π` for ND (the discrete Neumann
/// end lies half a gap behind the last vehicle).
pub fn matched_density<T: Real>(n_vehicles: usize, boundary: Boundary) -> T {
    let n = T::from_usize_lossy(n_vehicles);
    match boundary {
        Boundary::DirichletDirichlet => (n + T::one()) / T::two_pi(),
        Boundary::NeumannDirichlet => (n + T::lit(0.5)) / T::two_pi(),
    }
}

/// Basis function `ψ_l` and its first two derivatives.
fn basis<T: Real>(boundary: Boundary, l: usize, x: T) -> (T, T, T) {
    let q: T = boundary.wavenumber(l);
    let (s, c) = (q * x).sin_cos();
    match boundary {
        Boundary::DirichletDirichlet => (s, q * c, -q * q * s),
        Boundary::NeumannDirichlet => (c, -q * s, -q * q * c),
    }
}

/// Eigenvalue pairs `(s_l⁺, s_l⁻)` of the unperturbed PDE with `ρ0 = N/2π`.
pub fn nominal_pde_eigenvalues<T: Real>(
    k0: T,
    b0: T,
    n_vehicles: usize,
    boundary: Boundary,
    l_max: usize,
) -> Vec<(Complex<T>, Complex<T>)> {
    nominal_pde_eigenvalues_with_density(k0, b0, mean_density(n_vehicles), boundary, l_max)
}

/// Unperturbed eigenvalue pairs at an explicit density: roots of
/// `s² + b0 s - a0² λ_l = 0`.
pub fn nominal_pde_eigenvalues_with_density<T: Real>(
    k0: T,
    b0: T,
    rho0: T,
    boundary: Boundary,
    l_max: usize,
) -> Vec<(Complex<T>, Complex<T>)> {
    let a0_sq = k0 / (rho0 * rho0);
    (1..=l_max)
        .map(|l| damped_roots(b0, Complex::new(-a0_sq * boundary.laplacian_eigenvalue::<T>(l), T::zero())))
        .collect()
}

/// A coefficient field on `[0, 2π]`.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient<T = f64> {
    Zero,
    Constant(T),
    /// `scale · p(x)` for a mistuning profile `p`.
    Profile { scale: T, profile: MistuningProfile<T> },
}

impl<T: Real> Coefficient<T> {
    pub fn eval(&self, x: T) -> T {
        match self {
            Coefficient::Zero => T::zero(),
            Coefficient::Constant(c) => *c,
            Coefficient::Profile { scale, profile } => *scale * profile.value_unchecked(x),
        }
    }

    pub fn breakpoints(&self) -> Vec<T> {
        match self {
            Coefficient::Profile { profile, .. } => profile.breakpoints(),
            _ => Vec::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Coefficient::Zero => true,
            Coefficient::Constant(c) => *c == T::zero(),
            Coefficient::Profile { scale, profile } => {
                *scale == T::zero() || *profile == MistuningProfile::Symmetric
            }
        }
    }

    /// `∫₀^{2π} c(x) w(x) dx` with the quadrature panelled at the
    /// coefficient's breakpoints.
    pub fn integrate_against(&self, w: impl Fn(T) -> T) -> Result<T> {
        if self.is_zero() {
            return Ok(T::zero());
        }
        let rule = CompositeRule::with_breakpoints(T::zero(), T::two_pi(), &self.breakpoints())?;
        rule.integrate(|x| self.eval(x) * w(x))
    }
}

/// Coefficient fields of a configuration: `k_m = 2 k0 p`, `k_s = 0`.
pub fn config_fields<T: Real>(config: &PlatoonConfig<T>) -> (Coefficient<T>, Coefficient<T>) {
    let k_m = Coefficient::Profile {
        scale: T::lit(2.0) * config.k0,
        profile: config.profile.clone(),
    };
    (k_m, Coefficient::Zero)
}

/// Parameters of a Galerkin assembly given directly as fields.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeProblem<T = f64> {
    pub boundary: Boundary,
    pub k0: T,
    pub b0: T,
    pub rho0: T,
    pub epsilon: T,
    pub k_m: Coefficient<T>,
    pub k_s: Coefficient<T>,
}

/// Galerkin matrices of the mistuned PDE.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeDiscretization<T = f64> {
    pub boundary: Boundary,
    pub basis_size: usize,
    pub wave_speed_sq: T,
    pub rho0: T,
    pub b0: T,
    /// `stiffness[m][l] = (1/π) ∫ ψ_m L ψ_l dx`.
    pub stiffness: Matrix<T>,
    /// `[[0, I], [stiffness, -b0 I]]`.
    pub companion: Matrix<T>,
}

/// Galerkin discretisation of a configuration with the boundary conditions
/// of `boundary` and density matched to the platoon.
pub fn assemble_galerkin<T: Real>(
    config: &PlatoonConfig<T>,
    boundary: Boundary,
    basis_size: usize,
) -> Result<PdeDiscretization<T>> {
    config.validate()?;
    let (k_m, k_s) = config_fields(config);
    assemble_galerkin_fields(
        &PdeProblem {
            boundary,
            k0: config.k0,
            b0: config.b0,
            rho0: matched_density(config.n_vehicles, boundary),
            epsilon: config.epsilon,
            k_m,
            k_s,
        },
        basis_size,
    )
}

/// Galerkin discretisation of explicit coefficient fields.
///
/// The constant-coefficient part is diagonal in the basis and entered
/// exactly; the perturbation is projected with composite Gauss-Legendre
/// quadrature. Rows are assembled in parallel, each entry with a fixed
/// summation order.
pub fn assemble_galerkin_fields<T: Real>(problem: &PdeProblem<T>, basis_size: usize) -> Result<PdeDiscretization<T>> {
    if basis_size == 0 || basis_size > MAX_BASIS {
        return Err(Error::precondition(format!("basis_size must lie in 1..={MAX_BASIS}")));
    }
    if !(problem.rho0 > T::zero() && problem.k0 > T::zero() && problem.b0 > T::zero()) {
        return Err(Error::precondition("rho0, k0 and b0 must be positive"));
    }
    let l_count = basis_size;
    let boundary = problem.boundary;
    let a0_sq = problem.k0 / (problem.rho0 * problem.rho0);
    let mut stiffness = Matrix::zeros(l_count, l_count);
    for l in 0..l_count {
        stiffness[(l, l)] = a0_sq * boundary.laplacian_eigenvalue::<T>(l + 1);
    }

    let perturbed = problem.epsilon != T::zero() && !(problem.k_m.is_zero() && problem.k_s.is_zero());
    if perturbed {
        let mut breaks = problem.k_m.breakpoints();
        breaks.extend(problem.k_s.breakpoints());
        let rule = CompositeRule::with_breakpoints(T::zero(), T::two_pi(), &breaks)?;
        let adv_scale = problem.epsilon / problem.rho0;
        let diff_scale = problem.epsilon / (T::lit(2.0) * problem.rho0 * problem.rho0);
        // Per node: weight times the two coefficient fields.
        let wm: Vec<T> = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&x, &w)| w * adv_scale * problem.k_m.eval(x))
            .collect();
        let ws: Vec<T> = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&x, &w)| w * diff_scale * problem.k_s.eval(x))
            .collect();
        // Basis tables, one row per basis function.
        let tables: Vec<(Vec<T>, Vec<T>, Vec<T>)> = (1..=l_count)
            .map(|l| {
                let mut v = Vec::with_capacity(rule.len());
                let mut d1 = Vec::with_capacity(rule.len());
                let mut d2 = Vec::with_capacity(rule.len());
                for &x in &rule.nodes {
                    let (a, b, c) = basis(boundary, l, x);
                    v.push(a);
                    d1.push(b);
                    d2.push(c);
                }
                (v, d1, d2)
            })
            .collect();
        let inv_pi = T::one() / T::PI();
        let rows: Vec<Vec<T>> = (0..l_count)
            .into_par_iter()
            .map(|m| {
                let psi_m = &tables[m].0;
                let gm: Vec<T> = psi_m.iter().zip(&wm).map(|(&p, &w)| p * w).collect();
                let gs: Vec<T> = psi_m.iter().zip(&ws).map(|(&p, &w)| p * w).collect();
                (0..l_count)
                    .map(|l| {
                        let (_, d1, d2) = &tables[l];
                        let mut acc = T::zero();
                        for k in 0..d1.len() {
                            acc += gm[k] * d1[k] + gs[k] * d2[k];
                        }
                        acc * inv_pi
                    })
                    .collect()
            })
            .collect();
        for (m, row) in rows.into_iter().enumerate() {
            for (l, v) in row.into_iter().enumerate() {
                stiffness[(m, l)] += v;
            }
        }
        if !stiffness.is_finite() {
            return Err(Error::numerical("Galerkin projection produced non-finite entries"));
        }
    }

    let mut companion = Matrix::zeros(2 * l_count, 2 * l_count);
    companion.set_block(0, l_count, &Matrix::identity(l_count));
    companion.set_block(l_count, 0, &stiffness);
    for i in 0..l_count {
        companion[(l_count + i, l_count + i)] = -problem.b0;
    }
    Ok(PdeDiscretization {
        boundary,
        basis_size,
        wave_speed_sq: a0_sq,
        rho0: problem.rho0,
        b0: problem.b0,
        stiffness,
        companion,
    })
}

/// Eigenvalues of the Galerkin companion matrix.
pub fn pde_spectrum<T: Real>(disc: &PdeDiscretization<T>) -> Result<Spectrum<T>> {
    Spectrum::from_eigenvalues(eigenvalues_dense(&disc.companion)?)
}

/// Eigenvalue pairs of the Galerkin model ordered by mode.
///
/// The companion matrix has the same structure as the platoon: its
/// eigenvalues are the roots of `s² + b0 s - σ = 0` over the eigenvalues `σ`
/// of the stiffness matrix, sorted from the slowest mode (largest `Re σ`)
/// down.
pub fn galerkin_modes<T: Real>(disc: &PdeDiscretization<T>) -> Result<Vec<(Complex<T>, Complex<T>)>> {
    let mut sigma = eigenvalues_dense(&disc.stiffness)?;
    sigma.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap_or(std::cmp::Ordering::Equal));
    Ok(sigma.into_iter().map(|s| damped_roots(disc.b0, -s)).collect())
}

/// Central-difference discretisation of the PDE on the vehicle grid.
///
/// With `k⁺ = 2k0 + ε k0 k_s` and `k⁻ = ε k0 k_m` sampled at the desired
/// positions and `ρ0 = 1/δ`, the stencils
/// `ṽ_xx ≈ (ṽ_{i-1} - 2ṽ_i + ṽ_{i+1})/δ²` and
/// `ṽ_x ≈ (ṽ_{i-1} - ṽ_{i+1})/(2δ)` (vehicle `i-1` sits at `x_i + δ`) are
/// applied with `ṽ_0 = 0` at the leader, `ṽ_{N+1} = 0` for DD and the ghost
/// value `ṽ_{N+1} = ṽ_N` for the Neumann end. The result is the 2N×2N
/// first-order system matrix.
pub fn discretize_pde_fd<T: Real>(config: &PlatoonConfig<T>) -> Result<Matrix<T>> {
    config.validate()?;
    let n = config.n_vehicles;
    let delta = config.delta();
    let rho0 = T::one() / delta;
    let two = T::lit(2.0);
    let positions = sample_positions::<T>(n, config.scenario);
    let mut a = Matrix::zeros(2 * n, 2 * n);
    a.set_block(0, n, &Matrix::identity(n));
    for (i, &x) in positions.iter().enumerate() {
        // Relative perturbations: front gain k0(1 + εp), back gain k0(1 - εp).
        let p = config.epsilon * config.profile.value_unchecked(x);
        let k_plus = two * config.k0;
        let k_minus = two * config.k0 * p;
        let c_xx = k_plus / (two * rho0 * rho0) / (delta * delta);
        let c_x = k_minus / rho0 / (two * delta);
        // Coefficients of ṽ_{i-1}, ṽ_i, ṽ_{i+1}.
        let prev = c_xx + c_x;
        let next = c_xx - c_x;
        let mut centre = -two * c_xx;
        let row = n + i;
        if i > 0 {
            a[(row, i - 1)] += prev;
        }
        if i + 1 < n {
            a[(row, i + 1)] += next;
        } else if config.scenario == Scenario::ScenarioII {
            centre += next;
        }
        a[(row, i)] += centre;
        a[(row, n + i)] = -config.b0;
    }
    Ok(a)
}
