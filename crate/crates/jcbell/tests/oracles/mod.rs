//! Brute-force references for the acceptance suite.

use jcbell::core::bellchsh::Mat3;
use jcbell::core::fockspace::{make_pseudospin, pauli, CMatrix, HybridState, QubitOperator};
use jcbell::core::C64;
use rand::Rng;

const ZERO: C64 = C64::new(0.0, 0.0);

pub fn random_state<R: Rng>(rng: &mut R, n: usize) -> HybridState {
    let flat: Vec<C64> = (0..2 * n)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let norm = flat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let flat: Vec<C64> = flat.iter().map(|z| z / norm).collect();
    HybridState::from_flat(&flat).unwrap()
}

/// `⟨ψ|(A ⊗ B)|ψ⟩` via the full Kronecker product.
pub fn dense_expectation(state: &HybridState, field: &CMatrix, qubit: &QubitOperator) -> C64 {
    let n = state.cutoff();
    let psi = state.to_flat();
    let mut acc = ZERO;
    for a in 0..2 {
        for k in 0..n {
            let mut mv = ZERO;
            for b in 0..2 {
                for l in 0..n {
                    mv += qubit[a][b] * field.get(k, l) * psi[b * n + l];
                }
            }
            acc += psi[a * n + k].conj() * mv;
        }
    }
    acc
}

pub fn dense_t(state: &HybridState, q: usize) -> Mat3 {
    let spin = make_pseudospin(q, state.cutoff()).unwrap();
    let s = [spin.sx().to_dense(), spin.sy().to_dense(), spin.sz().to_dense()];
    let p = [pauli::sigma_x(), pauli::sigma_y(), pauli::sigma_z()];
    std::array::from_fn(|k| std::array::from_fn(|l| dense_expectation(state, &s[k], &p[l]).re))
}

/// `exp(−iHt)` for the truncated interaction-picture JC Hamiltonian by
/// scaling and squaring of a Taylor series.
pub fn jc_expm(lambda: f64, n: usize, t: f64) -> CMatrix {
    let dim = 2 * n;
    // a σ₊ takes |m, g⟩ to √m |m−1, e⟩; flat index g = m, e = n + m.
    let h = CMatrix::from_fn(dim, |r, c| {
        if c < n && r >= n && c >= 1 && r - n == c - 1 {
            C64::new(lambda * (c as f64).sqrt(), 0.0)
        } else if r < n && c >= n && r >= 1 && c - n == r - 1 {
            C64::new(lambda * (r as f64).sqrt(), 0.0)
        } else {
            ZERO
        }
    });
    let norm = lambda * (n as f64).sqrt() * t;
    let squarings = (norm.max(1.0).log2().ceil() as u32) + 4;
    let scale = t / f64::from(1u32 << squarings);
    let a = CMatrix::from_fn(dim, |r, c| h.get(r, c) * C64::new(0.0, -scale));
    let mut term = CMatrix::identity(dim);
    let mut sum = CMatrix::identity(dim);
    for k in 1..=30 {
        let next = term.matmul(&a);
        term = CMatrix::from_fn(dim, |r, c| next.get(r, c) / k as f64);
        sum = CMatrix::from_fn(dim, |r, c| sum.get(r, c) + term.get(r, c));
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum);
    }
    sum
}

pub fn matvec(m: &CMatrix, v: &[C64]) -> Vec<C64> {
    (0..v.len()).map(|r| (0..v.len()).map(|c| m.get(r, c) * v[c]).sum()).collect()
}

fn bloch(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

fn bilinear(t: &Mat3, a: [f64; 3], b: [f64; 3]) -> f64 {
    (0..3).map(|k| a[k] * (0..3).map(|l| t[k][l] * b[l]).sum::<f64>()).sum()
}

pub fn chsh(t: &Mat3, x: &[f64; 8]) -> f64 {
    let (a, a2, b, b2) = (bloch(x[0], x[1]), bloch(x[2], x[3]), bloch(x[4], x[5]), bloch(x[6], x[7]));
    (bilinear(t, a, b) + bilinear(t, a2, b) + bilinear(t, a, b2) - bilinear(t, a2, b2)).abs()
}

fn nelder_mead_max(f: &dyn Fn(&[f64; 8]) -> f64, start: [f64; 8], step: f64, iters: usize) -> ([f64; 8], f64) {
    let mut s: Vec<([f64; 8], f64)> = vec![(start, -f(&start))];
    for i in 0..8 {
        let mut p = start;
        p[i] += step;
        s.push((p, -f(&p)));
    }
    for _ in 0..iters {
        s.sort_by(|a, b| a.1.total_cmp(&b.1));
        if s[8].1 - s[0].1 < 1e-15 {
            break;
        }
        let mut c = [0.0; 8];
        for (p, _) in &s[..8] {
            for i in 0..8 {
                c[i] += p[i] / 8.0;
            }
        }
        let worst = s[8];
        let along = |k: f64| -> [f64; 8] { std::array::from_fn(|i| c[i] + k * (worst.0[i] - c[i])) };
        let r = along(-1.0);
        let fr = -f(&r);
        if fr < s[0].1 {
            let e = along(-2.0);
            let fe = -f(&e);
            s[8] = if fe < fr { (e, fe) } else { (r, fr) };
        } else if fr < s[7].1 {
            s[8] = (r, fr);
        } else {
            let cc = if fr < worst.1 { along(-0.5) } else { along(0.5) };
            let fc = -f(&cc);
            if fc < worst.1.min(fr) {
                s[8] = (cc, fc);
            } else {
                let best = s[0].0;
                for p in s.iter_mut().skip(1) {
                    p.0 = std::array::from_fn(|i| best[i] + 0.5 * (p.0[i] - best[i]));
                    p.1 = -f(&p.0);
                }
            }
        }
    }
    s.sort_by(|a, b| a.1.total_cmp(&b.1));
    (s[0].0, -s[0].1)
}

/// Grid over 24 directions per setting, then Nelder–Mead from the best four.
pub fn brute_force_chsh(t: &Mat3) -> f64 {
    use std::f64::consts::PI;
    let mut dirs = Vec::new();
    for i in 0..6 {
        for j in 0..4 {
            dirs.push((PI * (i as f64 + 0.5) / 6.0, PI * j as f64 / 2.0 + 0.3 * i as f64));
        }
    }
    let mut best: Vec<([f64; 8], f64)> = Vec::new();
    for &a in &dirs {
        for &a2 in &dirs {
            for &b in &dirs {
                for &b2 in &dirs {
                    let x = [a.0, a.1, a2.0, a2.1, b.0, b.1, b2.0, b2.1];
                    let v = chsh(t, &x);
                    if best.len() < 4 || v > best[3].1 {
                        best.push((x, v));
                        best.sort_by(|p, q| q.1.total_cmp(&p.1));
                        best.truncate(4);
                    }
                }
            }
        }
    }
    let f = |x: &[f64; 8]| chsh(t, x);
    best.iter()
        .map(|(x, _)| {
            let (mut cur, mut val) = (*x, 0.0);
            for step in [0.3, 0.05, 0.01, 1e-3] {
                (cur, val) = nelder_mead_max(&f, cur, step, 6000);
            }
            val
        })
        .fold(0.0, f64::max)
}
