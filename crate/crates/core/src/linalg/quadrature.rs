//! Composite Gauss-Legendre quadrature on intervals with breakpoints.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Nodes per Gauss-Legendre panel.
pub const NODES_PER_PANEL: usize = 32;

/// Total panels spread over the integration interval.
pub const PANELS: usize = 64;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre<T: Real>(order: usize) -> Result<(Vec<T>, Vec<T>)> {
    if order == 0 {
        return Err(Error::precondition("Gauss-Legendre order must be positive"));
    }
    let mut nodes = vec![T::zero(); order];
    let mut weights = vec![T::zero(); order];
    let m = order.div_ceil(2);
    // Newton's iteration is carried out in f64 and then rounded: the nodes
    // only need to be correct to the working precision.
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut converged = false;
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(order, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-15 * x.abs().max(1e-300) || dx == 0.0 {
                let (_, d) = legendre_with_derivative(order, x);
                dp = d;
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::numerical(format!(
                "Gauss-Legendre node {i} of order {order} did not converge"
            )));
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = T::lit(-x);
        nodes[order - 1 - i] = T::lit(x);
        weights[i] = T::lit(w);
        weights[order - 1 - i] = T::lit(w);
    }
    Ok((nodes, weights))
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A fixed composite rule: nodes and weights on a union of panels.
#[derive(Debug, Clone)]
pub struct CompositeRule<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> CompositeRule<T> {
    /// Builds the rule on `[a, b]` with panel edges placed at every interior
    /// breakpoint; `PANELS` panels are shared out in proportion to segment
    /// length, at least one per segment.
    pub fn with_breakpoints(a: T, b: T, breakpoints: &[T]) -> Result<Self> {
        if !(b > a) {
            return Err(Error::precondition("integration interval must have b > a"));
        }
        let mut edges: Vec<T> = vec![a];
        let mut interior: Vec<T> = breakpoints
            .iter()
            .copied()
            .filter(|&x| x > a && x < b)
            .collect();
        interior.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
        interior.dedup();
        edges.extend(interior);
        edges.push(b);

        let (gx, gw) = gauss_legendre::<T>(NODES_PER_PANEL)?;
        let total = b - a;
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for seg in edges.windows(2) {
            let (lo, hi) = (seg[0], seg[1]);
            let share = ((hi - lo) / total * T::from_usize_lossy(PANELS))
                .round()
                .to_usize()
                .unwrap_or(1)
                .max(1);
            let width = (hi - lo) / T::from_usize_lossy(share);
            for p in 0..share {
                let pa = lo + width * T::from_usize_lossy(p);
                let pb = if p + 1 == share { hi } else { pa + width };
                let half = (pb - pa) * T::lit(0.5);
                let mid = (pa + pb) * T::lit(0.5);
                for (&x, &w) in gx.iter().zip(&gw) {
                    nodes.push(mid + half * x);
                    weights.push(half * w);
                }
            }
        }
        Ok(Self { nodes, weights })
    }

    pub fn integrate(&self, f: impl Fn(T) -> T) -> Result<T> {
        let v: T = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum();
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::numerical("quadrature produced a non-finite value"))
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}
