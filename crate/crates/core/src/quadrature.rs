//! Gauss-Legendre rules and tensor-product rectangle means.

use std::f64::consts::PI;

/// An n-point Gauss-Legendre rule on [−1, 1].
///
/// Exact for polynomials of degree ≤ 2n − 1.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the rule by Newton iteration on `P_n`, starting from the
    /// Chebyshev-like guess cos(π(i − 1/4)/(n + 1/2)).
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature order must be at least 1");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, z);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// ∫_lo^hi g(t) dt.
    pub fn integrate(&self, lo: f64, hi: f64, g: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let s: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| w * g(mid + half * t))
            .sum();
        half * s
    }

    /// Mean of g over [u0, u1] × [v0, v1] by the tensor rule.
    pub fn rect_mean(
        &self,
        u0: f64,
        u1: f64,
        v0: f64,
        v1: f64,
        g: impl Fn(f64, f64) -> f64,
    ) -> f64 {
        let (uh, um) = (0.5 * (u1 - u0), 0.5 * (u1 + u0));
        let (vh, vm) = (0.5 * (v1 - v0), 0.5 * (v1 + v0));
        let mut acc = 0.0;
        for (tu, wu) in self.nodes.iter().zip(&self.weights) {
            let u = um + uh * tu;
            let mut row = 0.0;
            for (tv, wv) in self.nodes.iter().zip(&self.weights) {
                row += wv * g(u, vm + vh * tv);
            }
            acc += wu * row;
        }
        // weights sum to 2 per axis
        0.25 * acc
    }
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}
