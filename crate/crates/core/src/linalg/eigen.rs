//! Dense nonsymmetric eigenvalues: balancing, Householder reduction to upper
//! Hessenberg form and the implicitly double-shifted Francis QR iteration.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Real;

/// Iteration cap per eigenvalue before the QR sweep gives up.
pub const MAX_ITERATIONS_PER_EIGENVALUE: usize = 60;

/// Relative subdiagonal threshold for deflation.
pub const DEFLATION_TOLERANCE: f64 = 1e-12;

/// All eigenvalues of a real square matrix.
///
/// The order of the returned values follows the deflation order of the QR
/// iteration; callers that need a canonical order sort them.
pub fn eigenvalues_dense<T: Real>(matrix: &Matrix<T>) -> Result<Vec<Complex<T>>> {
    if !matrix.is_square() {
        return Err(Error::Dimension(format!(
            "eigenvalues of a {}x{} matrix",
            matrix.rows(),
            matrix.cols()
        )));
    }
    if !matrix.is_finite() {
        return Err(Error::numerical("matrix has non-finite entries"));
    }
    let n = matrix.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = matrix.as_slice().to_vec();
    balance(n, &mut h);
    reduce_to_hessenberg(n, &mut h);
    hessenberg_qr(n, &mut h)
}

/// Diagonal similarity scaling by powers of two so that row and column norms
/// are comparable.
fn balance<T: Real>(n: usize, a: &mut [T]) {
    let radix = T::lit(2.0);
    let sqrdx = radix * radix;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = T::zero();
            let mut r = T::zero();
            for j in 0..n {
                if j != i {
                    c += a[j * n + i].abs();
                    r += a[i * n + j].abs();
                }
            }
            if c == T::zero() || r == T::zero() {
                continue;
            }
            let s = c + r;
            let mut g = r / radix;
            let mut f = T::one();
            while c < g {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= sqrdx;
            }
            if (c + r) / f < T::lit(0.95) * s {
                done = false;
                let g = T::one() / f;
                for j in 0..n {
                    a[i * n + j] *= g;
                }
                for j in 0..n {
                    a[j * n + i] *= f;
                }
            }
        }
    }
}

/// Orthogonal similarity reduction to upper Hessenberg form.
fn reduce_to_hessenberg<T: Real>(n: usize, h: &mut [T]) {
    if n < 3 {
        return;
    }
    let mut ort = vec![T::zero(); n];
    let high = n - 1;
    for m in 1..high {
        let scale: T = (m..=high).map(|i| h[i * n + m - 1].abs()).sum();
        if scale == T::zero() {
            continue;
        }
        let mut hh = T::zero();
        for i in (m..=high).rev() {
            ort[i] = h[i * n + m - 1] / scale;
            hh += ort[i] * ort[i];
        }
        let mut g = hh.sqrt();
        if ort[m] > T::zero() {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;

        for j in m..n {
            let mut f = T::zero();
            for i in (m..=high).rev() {
                f += ort[i] * h[i * n + j];
            }
            f /= hh;
            for i in m..=high {
                h[i * n + j] -= f * ort[i];
            }
        }
        for i in 0..=high {
            let mut f = T::zero();
            for j in (m..=high).rev() {
                f += ort[j] * h[i * n + j];
            }
            f /= hh;
            for j in m..=high {
                h[i * n + j] -= f * ort[j];
            }
        }
        ort[m] *= scale;
        h[m * n + m - 1] = scale * g;
        for i in m + 1..=high {
            h[i * n + m - 1] = T::zero();
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (eigenvalues only).
fn hessenberg_qr<T: Real>(order: usize, h: &mut [T]) -> Result<Vec<Complex<T>>> {
    let nn = order;
    let at = |i: usize, j: usize| i * nn + j;
    let eps = T::epsilon();
    let defl = T::tol(DEFLATION_TOLERANCE);
    let half = T::lit(0.5);

    let mut wr = vec![T::zero(); nn];
    let mut wi = vec![T::zero(); nn];

    let mut norm = T::zero();
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h[at(i, j)].abs();
        }
    }

    let low = 0usize;
    let mut n = nn as isize - 1;
    let mut exshift = T::zero();
    let mut iter = 0usize;
    let (mut p, mut q, mut r, mut s, mut z, mut w, mut x, mut y);

    while n >= low as isize {
        let nu = n as usize;
        // Find a negligible subdiagonal element.
        let mut l = nu;
        while l > low {
            s = h[at(l - 1, l - 1)].abs() + h[at(l, l)].abs();
            if s == T::zero() {
                s = norm;
            }
            if h[at(l, l - 1)].abs() < defl * s {
                break;
            }
            l -= 1;
        }

        if l == nu {
            // One root found.
            h[at(nu, nu)] += exshift;
            wr[nu] = h[at(nu, nu)];
            wi[nu] = T::zero();
            n -= 1;
            iter = 0;
        } else if l + 1 == nu {
            // Two roots found.
            w = h[at(nu, nu - 1)] * h[at(nu - 1, nu)];
            p = (h[at(nu - 1, nu - 1)] - h[at(nu, nu)]) * half;
            q = p * p + w;
            z = q.abs().sqrt();
            h[at(nu, nu)] += exshift;
            h[at(nu - 1, nu - 1)] += exshift;
            x = h[at(nu, nu)];
            if q >= T::zero() {
                z = if p >= T::zero() { p + z } else { p - z };
                wr[nu - 1] = x + z;
                wr[nu] = wr[nu - 1];
                if z != T::zero() {
                    wr[nu] = x - w / z;
                }
                wi[nu - 1] = T::zero();
                wi[nu] = T::zero();
            } else {
                wr[nu - 1] = x + p;
                wr[nu] = x + p;
                wi[nu - 1] = z;
                wi[nu] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            x = h[at(nu, nu)];
            y = h[at(nu - 1, nu - 1)];
            w = h[at(nu, nu - 1)] * h[at(nu - 1, nu)];

            if iter > 0 && iter % 20 == 10 {
                // Wilkinson's exceptional shift.
                exshift += x;
                for i in low..=nu {
                    h[at(i, i)] -= x;
                }
                s = h[at(nu, nu - 1)].abs() + h[at(nu - 1, nu - 2)].abs();
                x = T::lit(0.75) * s;
                y = x;
                w = T::lit(-0.4375) * s * s;
            }
            if iter > 0 && iter % 20 == 0 {
                // Ad hoc shift used once the iteration stalls.
                s = (y - x) * half;
                s = s * s + w;
                if s > T::zero() {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) * half + s);
                    for i in low..=nu {
                        h[at(i, i)] -= s;
                    }
                    exshift += s;
                    x = T::lit(0.964);
                    y = x;
                    w = x;
                }
            }

            iter += 1;
            if iter > MAX_ITERATIONS_PER_EIGENVALUE {
                return Err(Error::NoConvergence {
                    index: nu,
                    order: nn,
                    iterations: iter - 1,
                });
            }

            // Look for two consecutive small subdiagonal elements.
            let mut m = nu - 2;
            loop {
                z = h[at(m, m)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[at(m + 1, m)] + h[at(m, m + 1)];
                q = h[at(m + 1, m + 1)] - z - r - s;
                r = h[at(m + 2, m + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let lhs = h[at(m, m - 1)].abs() * (q.abs() + r.abs());
                let rhs = eps
                    * (p.abs()
                        * (h[at(m - 1, m - 1)].abs() + z.abs() + h[at(m + 1, m + 1)].abs()));
                if lhs < rhs {
                    break;
                }
                m -= 1;
            }

            for i in m + 2..=nu {
                h[at(i, i - 2)] = T::zero();
                if i > m + 2 {
                    h[at(i, i - 3)] = T::zero();
                }
            }

            // Double QR step on rows l..=n and columns m..=n.
            let mut k = m;
            while k < nu {
                let notlast = k != nu - 1;
                if k != m {
                    p = h[at(k, k - 1)];
                    q = h[at(k + 1, k - 1)];
                    r = if notlast { h[at(k + 2, k - 1)] } else { T::zero() };
                    x = p.abs() + q.abs() + r.abs();
                    if x == T::zero() {
                        k += 1;
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                } else {
                    x = T::one();
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < T::zero() {
                    s = -s;
                }
                if s != T::zero() {
                    if k != m {
                        h[at(k, k - 1)] = -s * x;
                    } else if l != m {
                        h[at(k, k - 1)] = -h[at(k, k - 1)];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;

                    for j in k..nn.min(nu + 1) {
                        p = h[at(k, j)] + q * h[at(k + 1, j)];
                        if notlast {
                            p += r * h[at(k + 2, j)];
                            h[at(k + 2, j)] -= p * z;
                        }
                        h[at(k, j)] -= p * x;
                        h[at(k + 1, j)] -= p * y;
                    }
                    for i in l..=nu.min(k + 3) {
                        p = x * h[at(i, k)] + y * h[at(i, k + 1)];
                        if notlast {
                            p += z * h[at(i, k + 2)];
                            h[at(i, k + 2)] -= p * r;
                        }
                        h[at(i, k)] -= p;
                        h[at(i, k + 1)] -= p * q;
                    }
                }
                k += 1;
            }
        }
    }

    Ok(wr
        .into_iter()
        .zip(wi)
        .map(|(re, im)| Complex::new(re, im))
        .collect())
}
