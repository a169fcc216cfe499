//! Scalar helpers usable without `std`.

use alloc::vec::Vec;

pub use libm::{acos, atan, atan2, cos, exp, fabs, log, log2, sin, sqrt};

/// `ln(n!)`, exact summation below 64 and Stirling series above.
pub fn ln_factorial(n: usize) -> f64 {
    if n < 64 {
        let mut acc = 0.0;
        for k in 2..=n {
            acc += log(k as f64);
        }
        acc
    } else {
        libm::lgamma(n as f64 + 1.0)
    }
}

/// Generalized Laguerre polynomial `L_n^{(a)}(x)` by the three-term recurrence.
pub fn laguerre(n: usize, a: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + a - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - x) * cur - (kf + a) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// All `L_k^{(a)}(x)` for `k < len`.
pub fn laguerre_table(len: usize, a: f64, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    if len == 0 {
        return out;
    }
    out.push(1.0);
    if len == 1 {
        return out;
    }
    out.push(1.0 + a - x);
    for k in 1..len - 1 {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - x) * out[k] - (kf + a) * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    out
}

/// Pairwise (cascade) summation; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        acc
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Binary entropy in bits, with `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * log2(x) };
    term(p) + term(1.0 - p)
}
