//! Test-side oracles, independent of the crate's solvers.

#![allow(dead_code)]

use raidrel_core::ctmc::{DiskLocalModel, LumpedChain, TransitionKind};

pub type Dense = Vec<Vec<f64>>;

fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

/// `exp(q * t)` by scaling and squaring with a truncated Taylor series.
pub fn expm(q: &Dense, t: f64) -> Dense {
    let n = q.len();
    let norm = q
        .iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        * t;
    let mut squarings = 0;
    while norm / 2f64.powi(squarings) > 0.25 {
        squarings += 1;
    }
    let h = t / 2f64.powi(squarings);
    let a: Dense = q.iter().map(|r| r.iter().map(|x| x * h).collect()).collect();
    let mut result: Dense = (0..n).map(|i| (0..n).map(|j| f64::from(i == j)).collect()).collect();
    let mut term = result.clone();
    for k in 1..=30 {
        term = matmul(&term, &a);
        for row in term.iter_mut() {
            for x in row.iter_mut() {
                *x /= k as f64;
            }
        }
        for i in 0..n {
            for j in 0..n {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    result
}

/// `p * exp(q t)`.
pub fn transient_dense(q: &Dense, p: &[f64], t: f64) -> Vec<f64> {
    let e = expm(q, t);
    (0..q.len())
        .map(|j| p.iter().enumerate().map(|(i, pi)| pi * e[i][j]).sum())
        .collect()
}

/// Dense generator of a lumped chain.
pub fn dense_of(chain: &LumpedChain) -> Dense {
    let n = chain.len();
    let mut q = vec![vec![0.0; n]; n];
    for i in 0..n {
        for (j, r) in chain.row(i) {
            q[i][j] += r;
        }
        q[i][i] -= chain.exit_rate(i);
    }
    q
}

/// Chain from a dense generator whose last state is absorbing.
pub fn chain_from_dense(q: &Dense) -> LumpedChain {
    let n = q.len();
    let occ = (0..n - 1).map(|i| vec![i as u16].into_boxed_slice()).collect();
    let mut triplets = Vec::new();
    for (i, row) in q.iter().enumerate() {
        for (j, &r) in row.iter().enumerate() {
            if i != j && r > 0.0 {
                triplets.push((i, j, r));
            }
        }
    }
    LumpedChain::from_triplets(occ, &triplets, 0).unwrap()
}

/// Unlumped `n`-disk product chain with an absorbing LOSS state (last).
/// Loss: more than `tolerance` failed disks, or exactly `tolerance` with
/// an operational defective disk; checked on failures only when
/// `on_failure_only`.
pub fn product_chain(
    disk: &DiskLocalModel,
    n: usize,
    tolerance: usize,
    on_failure_only: bool,
) -> (Dense, usize) {
    let l = disk.states.len();
    let total = l.pow(n as u32);
    let decode = |mut code: usize| -> Vec<usize> {
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            v.push(code % l);
            code /= l;
        }
        v
    };
    let encode = |v: &[usize]| v.iter().rev().fold(0, |acc, &s| acc * l + s);
    let lossy = |v: &[usize]| {
        let failed = v.iter().filter(|&&s| disk.states[s].rebuild_stage.is_some()).count();
        let latent = v
            .iter()
            .filter(|&&s| disk.states[s].rebuild_stage.is_none() && disk.states[s].latent_defect)
            .count();
        failed > tolerance || (failed == tolerance && latent >= 1)
    };
    let loss = total;
    let mut q = vec![vec![0.0; total + 1]; total + 1];
    for code in 0..total {
        let v = decode(code);
        for d in 0..n {
            for t in disk.transitions.iter().filter(|t| t.from == v[d]) {
                let mut w = v.clone();
                w[d] = t.to;
                let checked = !on_failure_only || t.kind == TransitionKind::Failure;
                let target = if checked && lossy(&w) { loss } else { encode(&w) };
                q[code][target] += t.rate;
                q[code][code] -= t.rate;
            }
        }
    }
    (q, encode(&vec![disk.initial; n]))
}

/// Two-sample-free Kolmogorov-Smirnov statistic against a CDF.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// 1% critical value of the one-sample KS statistic (asymptotic).
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}
