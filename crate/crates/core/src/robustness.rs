//! H-infinity norm of the disturbance-to-spacing-error transfer function
//! `G_we(s) = C (sI - A)⁻¹ B`.
//!
//! Two independent methods are provided: bisection on the imaginary-axis
//! eigenvalues of the Hamiltonian matrix, and a dense frequency sweep with
//! golden-section refinement.

use std::fmt::Write as _;

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format::fmt_sig;
use crate::linalg::{eigenvalues_dense, ComplexLu};
use crate::matrix::Matrix;
use crate::scalar::Real;
use crate::statespace::{analyze_spectrum, ClosedLoopModel};

/// Hamiltonian eigenvalues with `|Re|` below this count as imaginary.
pub const IMAGINARY_AXIS_TOLERANCE: f64 = 1e-7;

/// Relative convergence of the power iteration for `σ_max`.
pub const POWER_ITERATION_TOLERANCE: f64 = 1e-8;

pub const POWER_ITERATION_MAX: usize = 500;

/// Relative width at which golden-section refinement stops.
pub const GOLDEN_SECTION_TOLERANCE: f64 = 1e-4;

/// Pivot ratio beyond which `(jωI - A)` is reported as ill-conditioned.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Frequencies used to seed the lower end of the bisection bracket.
pub const COARSE_FREQUENCIES: [f64; 8] = [0.0, 1e-2, 3e-2, 0.1, 0.3, 1.0, 3.0, 10.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HinfMethod {
    HamiltonianBisection,
    FrequencySweep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HinfResult<T = f64> {
    pub gamma: T,
    pub peak_frequency: T,
    pub method: HinfMethod,
    /// Initial bisection bracket (both equal to `gamma` for the sweep).
    pub lower_bracket: T,
    pub upper_bracket: T,
}

/// Largest singular value of `G(jω)`.
pub fn sigma_max_at<T: Real>(model: &ClosedLoopModel<T>, omega: T) -> Result<T> {
    let a = &model.a_matrix;
    let b = &model.b_matrix;
    let c = &model.c_matrix;
    let n = a.rows();
    let m = b.cols();
    let zero = Complex::new(T::zero(), T::zero());
    let mut shifted = vec![zero; n * n];
    for i in 0..n {
        for j in 0..n {
            shifted[i * n + j] = Complex::new(-a[(i, j)], T::zero());
        }
        shifted[i * n + i] += Complex::new(T::zero(), omega);
    }
    let lu = ComplexLu::factor(n, shifted)?;
    if lu.pivot_ratio() > T::lit(CONDITION_LIMIT) {
        return Err(Error::numerical(format!(
            "jωI - A is ill-conditioned at ω = {omega}"
        )));
    }
    // G = C X with (jωI - A) X = B, one column at a time.
    let p = c.rows();
    let mut g = vec![zero; p * m];
    let mut col = vec![zero; n];
    for j in 0..m {
        for i in 0..n {
            col[i] = Complex::new(b[(i, j)], T::zero());
        }
        lu.solve_in_place(&mut col);
        for r in 0..p {
            let mut acc = zero;
            for k in 0..n {
                let ck = c[(r, k)];
                if ck != T::zero() {
                    acc += col[k] * ck;
                }
            }
            g[r * m + j] = acc;
        }
    }
    Ok(power_sigma_max(&g, p, m))
}

/// `σ_max` of a `p × m` complex matrix by power iteration on `GᴴG`.
fn power_sigma_max<T: Real>(g: &[Complex<T>], p: usize, m: usize) -> T {
    let zero = Complex::new(T::zero(), T::zero());
    let norm = |v: &[Complex<T>]| v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
    let mut x = vec![Complex::new(T::one() / T::from_usize_lossy(m).sqrt(), T::zero()); m];
    let mut y = vec![zero; p];
    let mut lambda = T::zero();
    for _ in 0..POWER_ITERATION_MAX {
        for r in 0..p {
            y[r] = (0..m).map(|j| g[r * m + j] * x[j]).fold(zero, |a, b| a + b);
        }
        let mut z = vec![zero; m];
        for (j, zj) in z.iter_mut().enumerate() {
            *zj = (0..p).map(|r| g[r * m + j].conj() * y[r]).fold(zero, |a, b| a + b);
        }
        let nz = norm(&z);
        if nz == T::zero() {
            return T::zero();
        }
        let next = nz;
        for (xj, zj) in x.iter_mut().zip(&z) {
            *xj = *zj / nz;
        }
        let converged = (next - lambda).abs() <= T::tol(POWER_ITERATION_TOLERANCE) * next;
        lambda = next;
        if converged {
            break;
        }
    }
    // Rayleigh quotient for the final vector.
    for r in 0..p {
        y[r] = (0..m).map(|j| g[r * m + j] * x[j]).fold(zero, |a, b| a + b);
    }
    norm(&y).max(lambda.sqrt())
}

fn require_hurwitz<T: Real>(model: &ClosedLoopModel<T>) -> Result<T> {
    let spectrum = analyze_spectrum(model)?;
    if !spectrum.is_hurwitz() {
        return Err(Error::precondition("A is not Hurwitz"));
    }
    Ok(spectrum.least_stable.re)
}

fn spectral_norm<T: Real>(m: &Matrix<T>) -> T {
    let g: Vec<Complex<T>> = m.as_slice().iter().map(|&v| Complex::new(v, T::zero())).collect();
    power_sigma_max(&g, m.rows(), m.cols())
}

/// Imaginary-axis eigenvalues of the Hamiltonian at level `gamma`, as
/// nonnegative frequencies.
fn imaginary_crossings<T: Real>(model: &ClosedLoopModel<T>, gamma: T) -> Result<Vec<T>> {
    let a = &model.a_matrix;
    let n = a.rows();
    let b = &model.b_matrix;
    let c = &model.c_matrix;
    let bbt = b.matmul(&b.transpose())?;
    let ctc = c.transpose().matmul(c)?;
    let inv = T::one() / gamma;
    let mut h = Matrix::zeros(2 * n, 2 * n);
    h.set_block(0, 0, a);
    h.set_block(0, n, &bbt.scale(inv));
    h.set_block(n, 0, &ctc.scale(-inv));
    h.set_block(n, n, &a.transpose().scale(-T::one()));
    let eig = eigenvalues_dense(&h)?;
    let tol = T::tol(IMAGINARY_AXIS_TOLERANCE);
    Ok(eig.into_iter().filter(|z| z.re.abs() < tol).map(|z| z.im.abs()).collect())
}

/// H-infinity norm by bisection on the Hamiltonian imaginary-axis test.
///
/// `gamma > ‖G‖_∞` exactly when the Hamiltonian has no imaginary
/// eigenvalues. The returned `gamma` is the upper end of the final bracket,
/// within `tol_rel` of the norm.
pub fn hinf_bisection<T: Real>(model: &ClosedLoopModel<T>, tol_rel: T) -> Result<HinfResult<T>> {
    if !(tol_rel > T::lit(1e-8) && tol_rel < T::lit(1e-2)) {
        return Err(Error::precondition("tol_rel must lie in (1e-8, 1e-2)"));
    }
    let least_re = require_hurwitz(model)?;
    let mut lo = T::zero();
    let mut lo_omega = T::zero();
    for &w in &COARSE_FREQUENCIES {
        let s = sigma_max_at(model, T::lit(w))?;
        if s > lo {
            lo = s;
            lo_omega = T::lit(w);
        }
    }
    if lo == T::zero() {
        return Ok(HinfResult {
            gamma: T::zero(),
            peak_frequency: T::zero(),
            method: HinfMethod::HamiltonianBisection,
            lower_bracket: T::zero(),
            upper_bracket: T::zero(),
        });
    }
    let two = T::lit(2.0);
    let mut hi = two * spectral_norm(&model.b_matrix) * spectral_norm(&model.c_matrix) / least_re.abs();
    hi = hi.max(lo * two);
    let mut doublings = 0;
    while !imaginary_crossings(model, hi)?.is_empty() {
        hi = hi * two;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::numerical("could not bracket the H-infinity norm from above"));
        }
    }
    let (lower_bracket, upper_bracket) = (lo, hi);
    let mut peak = lo_omega;
    while hi - lo > tol_rel * lo {
        let mid = (lo + hi) / two;
        let crossings = imaginary_crossings(model, mid)?;
        if crossings.is_empty() {
            hi = mid;
        } else {
            let wmin = crossings.iter().fold(T::infinity(), |m, &w| m.min(w));
            let wmax = crossings.iter().fold(T::zero(), |m, &w| m.max(w));
            peak = (wmin + wmax) / two;
            lo = mid;
        }
    }
    Ok(HinfResult {
        gamma: hi,
        peak_frequency: peak,
        method: HinfMethod::HamiltonianBisection,
        lower_bracket,
        upper_bracket,
    })
}

/// `ω = 0` followed by 2000 log-spaced frequencies on `[1e-3, 1e2]`.
pub fn default_omega_grid<T: Real>() -> Vec<T> {
    let count = 2000;
    let mut grid = vec![T::zero()];
    grid.extend((0..count).map(|k| {
        let e = -3.0 + 5.0 * k as f64 / (count - 1) as f64;
        T::lit(10f64.powf(e))
    }));
    grid
}

/// `σ_max(G(jω))` at every grid frequency, in grid order.
pub fn frequency_response<T: Real>(model: &ClosedLoopModel<T>, omega_grid: &[T]) -> Result<Vec<(T, T)>> {
    omega_grid
        .par_iter()
        .map(|&w| sigma_max_at(model, w).map(|s| (w, s)))
        .collect()
}

/// CSV `omega,sigma_max`.
pub fn frequency_response_csv<T: Real>(curve: &[(T, T)]) -> String {
    let mut out = String::from("omega,sigma_max\n");
    for &(w, s) in curve {
        let _ = writeln!(out, "{},{}", fmt_sig(w.to_f64_lossy()), fmt_sig(s.to_f64_lossy()));
    }
    out
}

/// H-infinity norm as the maximum over a frequency grid, refined by
/// golden-section search between the neighbours of the best grid point.
pub fn hinf_sweep<T: Real>(model: &ClosedLoopModel<T>, omega_grid: &[T]) -> Result<HinfResult<T>> {
    if omega_grid.is_empty() {
        return Err(Error::precondition("empty frequency grid"));
    }
    if omega_grid.windows(2).any(|w| !(w[1] > w[0])) || omega_grid[0] < T::zero() {
        return Err(Error::precondition("frequency grid must be nonnegative and increasing"));
    }
    require_hurwitz(model)?;
    let curve = frequency_response(model, omega_grid)?;
    let (mut best_k, mut best) = (0, T::neg_infinity());
    for (k, &(_, s)) in curve.iter().enumerate() {
        if s > best {
            best = s;
            best_k = k;
        }
    }
    let mut peak = omega_grid[best_k];
    let mut gamma = best;
    if omega_grid.len() > 1 {
        let mut a = if best_k == 0 { omega_grid[0] } else { omega_grid[best_k - 1] };
        let mut b = if best_k + 1 == omega_grid.len() { omega_grid[best_k] } else { omega_grid[best_k + 1] };
        let ratio = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
        let mut x1 = b - ratio * (b - a);
        let mut x2 = a + ratio * (b - a);
        let mut f1 = sigma_max_at(model, x1)?;
        let mut f2 = sigma_max_at(model, x2)?;
        let tol = T::tol(GOLDEN_SECTION_TOLERANCE);
        let mut iterations = 0;
        while (b - a) > tol * b.abs().max(T::tol(1e-12)) && iterations < 200 {
            if f1 >= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - ratio * (b - a);
                f1 = sigma_max_at(model, x1)?;
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + ratio * (b - a);
                f2 = sigma_max_at(model, x2)?;
            }
            iterations += 1;
        }
        for (w, f) in [(x1, f1), (x2, f2)] {
            if f > gamma {
                gamma = f;
                peak = w;
            }
        }
    }
    Ok(HinfResult {
        gamma,
        peak_frequency: peak,
        method: HinfMethod::FrequencySweep,
        lower_bracket: gamma,
        upper_bracket: gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_lag() -> ClosedLoopModel<f64> {
        ClosedLoopModel::from_matrices(
            Matrix::from_rows(&[vec![-1.0]]).unwrap(),
            Matrix::from_rows(&[vec![1.0]]).unwrap(),
            Matrix::from_rows(&[vec![1.0]]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn first_order_lag_has_unit_norm() {
        let m = scalar_lag();
        let b = hinf_bisection(&m, 1e-6).unwrap();
        assert!(b.gamma >= 1.0 && b.gamma - 1.0 < 1e-5, "{}", b.gamma);
        let s = hinf_sweep(&m, &default_omega_grid()).unwrap();
        assert!((s.gamma - 1.0).abs() < 1e-12);
        assert_eq!(s.peak_frequency, 0.0);
    }

    #[test]
    fn power_iteration_on_a_diagonal() {
        let c = |x: f64| Complex::new(x, 0.0);
        let g = vec![c(1.0), c(0.0), c(0.0), c(-3.0)];
        assert!((power_sigma_max(&g, 2, 2) - 3.0).abs() < 1e-7);
    }

    #[test]
    fn rejects_unstable_systems() {
        let m = ClosedLoopModel::from_matrices(
            Matrix::from_rows(&[vec![1.0]]).unwrap(),
            Matrix::from_rows(&[vec![1.0]]).unwrap(),
            Matrix::from_rows(&[vec![1.0]]).unwrap(),
        )
        .unwrap();
        assert!(matches!(hinf_bisection(&m, 1e-4), Err(Error::Precondition(_))));
    }
}
