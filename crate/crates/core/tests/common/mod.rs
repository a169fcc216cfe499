#![allow(dead_code)]

use jcbell_core::bellchsh::{Mat3, Vec3};
use jcbell_core::fockspace::{CMatrix, FockVector, HybridState, QubitOperator};
use jcbell_core::C64;
use proptest::prelude::*;

/// Normalized hybrid state from raw `(re, im)` pairs, `g` block first.
pub fn state_from_pairs(pairs: &[(f64, f64)]) -> HybridState {
    let flat: Vec<C64> = pairs.iter().map(|&(r, i)| C64::new(r, i)).collect();
    let norm = flat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let flat: Vec<C64> = flat.iter().map(|z| z / norm).collect();
    HybridState::from_flat(&flat).unwrap()
}

/// Random normalized states with cutoff in `lo..=hi`.
pub fn hybrid_state(lo: usize, hi: usize) -> impl Strategy<Value = HybridState> {
    (lo..=hi)
        .prop_flat_map(|n| prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 2 * n))
        .prop_filter("non-degenerate", |v| v.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-3)
        .prop_map(|v| state_from_pairs(&v))
}

pub fn product_state(lo: usize, hi: usize) -> impl Strategy<Value = HybridState> {
    (lo..=hi)
        .prop_flat_map(|n| {
            (
                prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n),
                (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64),
            )
        })
        .prop_filter("non-degenerate", |(f, q)| {
            f.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-3 && q.0 * q.0 + q.1 * q.1 + q.2 * q.2 + q.3 * q.3 > 1e-3
        })
        .prop_map(|(field, (gr, gi, er, ei))| {
            let fnorm = field.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
            let qnorm = (gr * gr + gi * gi + er * er + ei * ei).sqrt();
            let f: Vec<C64> = field.iter().map(|&(a, b)| C64::new(a, b) / fnorm).collect();
            let g = C64::new(gr, gi) / qnorm;
            let e = C64::new(er, ei) / qnorm;
            HybridState::new(
                FockVector::new(f.iter().map(|z| z * g).collect()).unwrap(),
                FockVector::new(f.iter().map(|z| z * e).collect()).unwrap(),
            )
            .unwrap()
        })
}

/// `exp(−i(a σ_z/2)) exp(−i(b σ_y/2)) exp(−i(c σ_z/2))` in `(g, e)` order.
pub fn su2(a: f64, b: f64, c: f64) -> QubitOperator {
    let rz = |x: f64| -> QubitOperator {
        // σ_z = diag(−1, +1) with g first.
        [
            [C64::from_polar(1.0, x / 2.0), C64::new(0.0, 0.0)],
            [C64::new(0.0, 0.0), C64::from_polar(1.0, -x / 2.0)],
        ]
    };
    let (s, co) = (b / 2.0).sin_cos();
    // σ_y = [[0, i], [−i, 0]] in (g, e) order.
    let ry: QubitOperator = [[C64::new(co, 0.0), C64::new(s, 0.0)], [C64::new(-s, 0.0), C64::new(co, 0.0)]];
    mul2(&mul2(&rz(a), &ry), &rz(c))
}

pub fn mul2(x: &QubitOperator, y: &QubitOperator) -> QubitOperator {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
        }
    }
    out
}

/// `⟨ψ|(A ⊗ B)|ψ⟩` through the full `2N × 2N` Kronecker matrix.
pub fn dense_expectation(state: &HybridState, field: &CMatrix, qubit: &QubitOperator) -> C64 {
    let n = state.cutoff();
    let psi = state.to_flat();
    let mut acc = C64::new(0.0, 0.0);
    for a in 0..2 {
        for k in 0..n {
            let row = a * n + k;
            let mut mv = C64::new(0.0, 0.0);
            for b in 0..2 {
                for l in 0..n {
                    mv += qubit[a][b] * field.get(k, l) * psi[b * n + l];
                }
            }
            acc += psi[row].conj() * mv;
        }
    }
    acc
}

pub fn bloch(theta: f64, phi: f64) -> Vec3 {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

fn bilinear(t: &Mat3, a: Vec3, b: Vec3) -> f64 {
    (0..3).map(|k| a[k] * (0..3).map(|l| t[k][l] * b[l]).sum::<f64>()).sum()
}

/// CHSH expression for eight angles `(θ_a, φ_a, θ_a′, φ_a′, θ_b, φ_b, θ_b′, φ_b′)`.
pub fn chsh(t: &Mat3, x: &[f64; 8]) -> f64 {
    let a = bloch(x[0], x[1]);
    let a2 = bloch(x[2], x[3]);
    let b = bloch(x[4], x[5]);
    let b2 = bloch(x[6], x[7]);
    (bilinear(t, a, b) + bilinear(t, a2, b) + bilinear(t, a, b2) - bilinear(t, a2, b2)).abs()
}

/// Nelder–Mead maximization from `start`.
pub fn nelder_mead_max(f: impl Fn(&[f64; 8]) -> f64, start: [f64; 8], step: f64, iters: usize) -> ([f64; 8], f64) {
    let mut simplex: Vec<([f64; 8], f64)> = Vec::with_capacity(9);
    simplex.push((start, -f(&start)));
    for i in 0..8 {
        let mut p = start;
        p[i] += step;
        simplex.push((p, -f(&p)));
    }
    for _ in 0..iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if (simplex[8].1 - simplex[0].1).abs() < 1e-15 {
            break;
        }
        let mut centroid = [0.0; 8];
        for (p, _) in &simplex[..8] {
            for i in 0..8 {
                centroid[i] += p[i] / 8.0;
            }
        }
        let worst = simplex[8];
        let along = |t: f64| -> [f64; 8] { core::array::from_fn(|i| centroid[i] + t * (worst.0[i] - centroid[i])) };
        let r = along(-1.0);
        let fr = -f(&r);
        if fr < simplex[0].1 {
            let e = along(-2.0);
            let fe = -f(&e);
            simplex[8] = if fe < fr { (e, fe) } else { (r, fr) };
        } else if fr < simplex[7].1 {
            simplex[8] = (r, fr);
        } else {
            let c = if fr < worst.1 { along(-0.5) } else { along(0.5) };
            let fc = -f(&c);
            if fc < worst.1.min(fr) {
                simplex[8] = (c, fc);
            } else {
                let best = simplex[0].0;
                for s in simplex.iter_mut().skip(1) {
                    s.0 = core::array::from_fn(|i| best[i] + 0.5 * (s.0[i] - best[i]));
                    s.1 = -f(&s.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    (simplex[0].0, -simplex[0].1)
}
