use rayon::prelude::*;
use serde::Serialize;

use super::chain::LumpedChain;
use crate::error::{invalid, Error, Result};

/// Internal L1 truncation bound per solve.
pub const DEFAULT_EPSILON: f64 = 1e-8;
/// Largest `q t` attempted in a single uniformization step.
pub const MAX_QT: f64 = 1e10;

/// Poisson weights on `[left, left + weights.len())`; the discarded mass
/// on both sides is below the requested epsilon.
#[derive(Debug, Clone)]
pub struct PoissonWindow {
    pub left: usize,
    pub weights: Vec<f64>,
}

impl PoissonWindow {
    pub fn right(&self) -> usize {
        self.left + self.weights.len() - 1
    }
}

/// Poisson(`lambda`) probabilities, computed by the ratio recurrence
/// outward from the mode (no under- or overflow for large `lambda`),
/// normalized, then trimmed so each tail drops less than `epsilon / 2`.
pub fn poisson_window(lambda: f64, epsilon: f64) -> PoissonWindow {
    if lambda == 0.0 {
        return PoissonWindow {
            left: 0,
            weights: vec![1.0],
        };
    }
    const NEGLIGIBLE: f64 = 1e-40;
    let mode = lambda.floor() as usize;
    let mut down = Vec::new();
    let mut w = 1.0;
    let mut k = mode;
    while k > 0 {
        w *= k as f64 / lambda;
        if w < NEGLIGIBLE {
            break;
        }
        down.push(w);
        k -= 1;
    }
    let left = mode - down.len();
    let mut weights: Vec<f64> = down.into_iter().rev().collect();
    weights.push(1.0);
    let mut w = 1.0;
    let mut k = mode;
    loop {
        k += 1;
        w *= lambda / k as f64;
        if w < NEGLIGIBLE {
            break;
        }
        weights.push(w);
    }
    // Summing small-to-large from each side keeps the total accurate.
    let peak = mode - left;
    let total: f64 = weights[..peak].iter().sum::<f64>() + weights[peak..].iter().rev().sum::<f64>();
    for w in &mut weights {
        *w /= total;
    }
    let half = epsilon / 2.0;
    let mut lo = 0;
    let mut acc = 0.0;
    while lo < peak && acc + weights[lo] < half {
        acc += weights[lo];
        lo += 1;
    }
    let mut hi = weights.len() - 1;
    let mut acc = 0.0;
    while hi > peak && acc + weights[hi] < half {
        acc += weights[hi];
        hi -= 1;
    }
    PoissonWindow {
        left: left + lo,
        weights: weights[lo..=hi].to_vec(),
    }
}

/// Transient solution on a time grid.
#[derive(Debug, Clone, Serialize)]
pub struct TransientResult {
    /// Hours, ascending.
    pub times: Vec<f64>,
    /// Probability of LOSS at each time.
    pub loss: Vec<f64>,
    /// Full state distributions, when requested.
    #[serde(skip)]
    pub distributions: Option<Vec<Vec<f64>>>,
    /// L1 truncation bound of each solve.
    pub epsilon: f64,
    pub uniformization_rate: f64,
    /// Matrix-vector products performed.
    pub products: usize,
}

/// One step of the uniformized DTMC: `next = v (I + Q / q)`.
fn dtmc_step(chain: &LumpedChain, q: f64, v: &[f64], next: &mut [f64]) {
    let body = |(j, out): (usize, &mut f64)| {
        let mut acc = v[j] * (1.0 - chain.exit_rate(j) / q);
        for (i, rate) in chain.column(j) {
            acc += v[i] * (rate / q);
        }
        *out = acc;
    };
    if v.len() >= 4096 {
        next.par_iter_mut().enumerate().with_min_len(1024).for_each(body);
    } else {
        next.iter_mut().enumerate().for_each(body);
    }
}

/// Advance `start` by `t` hours. Returns the distribution and the number of
/// products used.
pub fn propagate(chain: &LumpedChain, start: &[f64], t: f64, epsilon: f64) -> Result<(Vec<f64>, usize)> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidTime(t));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid("epsilon", format!("must lie in (0, 1), got {epsilon}")));
    }
    let q = chain.max_exit_rate();
    if t == 0.0 || q == 0.0 {
        return Ok((start.to_vec(), 0));
    }
    let qt = q * t;
    if qt > MAX_QT {
        return Err(Error::UniformizationOverflow { qt });
    }
    let window = poisson_window(qt, epsilon);
    let mut v = start.to_vec();
    let mut next = vec![0.0; v.len()];
    let mut acc = vec![0.0; v.len()];
    for k in 0..=window.right() {
        if k >= window.left {
            let w = window.weights[k - window.left];
            acc.iter_mut().zip(&v).for_each(|(a, x)| *a += w * x);
        }
        if k < window.right() {
            dtmc_step(chain, q, &v, &mut next);
            std::mem::swap(&mut v, &mut next);
        }
    }
    Ok((acc, window.right()))
}

/// State distribution at time `t` from the chain's initial state.
pub fn uniformize(chain: &LumpedChain, t: f64, epsilon: f64) -> Result<TransientResult> {
    transient(chain, &[t], epsilon, true)
}

/// Solve at every time of an ascending grid, stepping from one grid time
/// to the next.
pub fn transient(
    chain: &LumpedChain,
    grid: &[f64],
    epsilon: f64,
    keep_distributions: bool,
) -> Result<TransientResult> {
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("grid", "times must be ascending"));
    }
    let mut v = chain.initial_distribution();
    let mut prev = 0.0;
    let mut loss = Vec::with_capacity(grid.len());
    let mut dists = keep_distributions.then(Vec::new);
    let mut products = 0;
    for &t in grid {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::InvalidTime(t));
        }
        let (next, k) = propagate(chain, &v, t - prev, epsilon)?;
        products += k;
        v = next;
        prev = t;
        loss.push(v[chain.loss_index()].clamp(0.0, 1.0));
        if let Some(d) = dists.as_mut() {
            d.push(v.clone());
        }
    }
    // Truncation can only remove mass, so enforce the absorbing monotonicity.
    for i in 1..loss.len() {
        if loss[i] < loss[i - 1] {
            loss[i] = loss[i - 1];
        }
    }
    Ok(TransientResult {
        times: grid.to_vec(),
        loss,
        distributions: dists,
        epsilon,
        uniformization_rate: chain.max_exit_rate(),
        products,
    })
}
