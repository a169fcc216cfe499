//! Gauss-Legendre and Gauss-Hermite rules computed by Newton iteration on the
//! orthogonal-polynomial recurrences.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::math::{cos, fabs, sqrt};

/// Quadrature nodes and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// `n`-point Gauss-Legendre rule on `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Rule {
    let mut nodes = alloc::vec![0.0; n];
    let mut weights = alloc::vec![0.0; n];
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if fabs(dz) < 1e-15 {
                break;
            }
        }
        if dp == 0.0 {
            dp = legendre_with_derivative(n, z).1;
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = mid - half * z;
        nodes[n - 1 - i] = mid + half * z;
        weights[i] = half * w;
        weights[n - 1 - i] = half * w;
    }
    Rule { nodes, weights }
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = 0.0;
    for j in 0..n {
        let jf = j as f64;
        let p2 = p1;
        p1 = p0;
        p0 = ((2.0 * jf + 1.0) * z * p1 - jf * p2) / (jf + 1.0);
    }
    let d = n as f64 * (z * p0 - p1) / (z * z - 1.0);
    (p0, d)
}

/// `n`-point Gauss-Hermite rule for the weight `exp(-x²)` on the real line.
pub fn gauss_hermite(n: usize) -> Rule {
    let mut nodes = alloc::vec![0.0; n];
    let mut weights = alloc::vec![0.0; n];
    let pim4 = 1.0 / libm::pow(PI, 0.25);
    let nf = n as f64;
    let m = n.div_ceil(2);
    let mut z = 0.0;
    for i in 0..m {
        // Asymptotic starting guesses for the largest roots, then extrapolation.
        z = match i {
            0 => sqrt(2.0 * nf + 1.0) - 1.85575 * libm::pow(2.0 * nf + 1.0, -0.16667),
            1 => z - 1.14 * libm::pow(nf, 0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[0],
            3 => 1.91 * z - 0.91 * nodes[1],
            _ => 2.0 * z - nodes[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            // Orthonormal Hermite recurrence avoids overflow for large n.
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let jf = j as f64;
                let p3 = p2;
                p2 = p1;
                p1 = z * sqrt(2.0 / (jf + 1.0)) * p2 - sqrt(jf / (jf + 1.0)) * p3;
            }
            pp = sqrt(2.0 * nf) * p2;
            let dz = p1 / pp;
            z -= dz;
            if fabs(dz) <= 1e-15 * (1.0 + fabs(z)) {
                break;
            }
        }
        nodes[i] = z;
        nodes[n - 1 - i] = -z;
        weights[i] = 2.0 / (pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    nodes.reverse();
    weights.reverse();
    Rule { nodes, weights }
}

/// Expectation of `f(λ)` for `λ ~ N(mean, sigma²)` through Gauss-Hermite.
pub fn gaussian_expectation(rule: &Rule, mean: f64, sigma: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let scale = core::f64::consts::SQRT_2 * sigma;
    rule.integrate(|x| f(mean + scale * x)) / sqrt(PI)
}
