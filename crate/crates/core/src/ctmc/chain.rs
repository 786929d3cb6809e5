use std::collections::HashMap;
use std::io::{self, Write};

use super::model::{ClassCounts, DiskLocalModel, LossRule};
use crate::error::{invalid, Error, Result};

/// Default cap on the number of lumped states.
pub const DEFAULT_STATE_CAP: usize = 5_000_000;

/// Symmetry-reduced system chain. States are occupancy vectors (how many
/// disks sit in each local state) plus one absorbing LOSS state, which
/// always has the last index.
#[derive(Debug, Clone)]
pub struct LumpedChain {
    occupancies: Vec<Box<[u16]>>,
    /// Outgoing off-diagonal rates in CSR form.
    out_ptr: Vec<usize>,
    out_idx: Vec<u32>,
    out_rate: Vec<f64>,
    /// Incoming off-diagonal rates (the transpose), for gather-style products.
    in_ptr: Vec<usize>,
    in_idx: Vec<u32>,
    in_rate: Vec<f64>,
    /// Total outflow of each state; the diagonal is its negation.
    exit: Vec<f64>,
    initial: usize,
}

impl LumpedChain {
    /// Assemble from triplets over `states` transient states; index
    /// `states` is LOSS. Duplicate triplets are summed.
    pub fn from_triplets(
        occupancies: Vec<Box<[u16]>>,
        triplets: &[(usize, usize, f64)],
        initial: usize,
    ) -> Result<Self> {
        let n = occupancies.len() + 1;
        if initial >= n {
            return Err(invalid("initial", "out of range"));
        }
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for &(i, j, r) in triplets {
            if i >= n || j >= n || i == j {
                return Err(invalid("triplet", format!("({i},{j}) not an off-diagonal entry")));
            }
            if !(r.is_finite() && r >= 0.0) {
                return Err(invalid("rate", format!("({i},{j}) = {r}")));
            }
            if r > 0.0 {
                rows[i].push((j as u32, r));
            }
        }
        if !rows[n - 1].is_empty() {
            return Err(invalid("triplet", "LOSS state must be absorbing"));
        }
        let mut out_ptr = Vec::with_capacity(n + 1);
        let mut out_idx = Vec::new();
        let mut out_rate = Vec::new();
        let mut exit = vec![0.0; n];
        out_ptr.push(0);
        for (i, row) in rows.iter_mut().enumerate() {
            row.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut r = 0.0;
                while k < row.len() && row[k].0 == j {
                    r += row[k].1;
                    k += 1;
                }
                out_idx.push(j);
                out_rate.push(r);
                exit[i] += r;
            }
            out_ptr.push(out_idx.len());
        }
        let (in_ptr, in_idx, in_rate) = transpose(n, &out_ptr, &out_idx, &out_rate);
        Ok(Self {
            occupancies,
            out_ptr,
            out_idx,
            out_rate,
            in_ptr,
            in_idx,
            in_rate,
            exit,
            initial,
        })
    }

    /// Number of states including LOSS.
    pub fn len(&self) -> usize {
        self.exit.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Transient (non-LOSS) states.
    pub fn transient_states(&self) -> usize {
        self.occupancies.len()
    }

    pub fn loss_index(&self) -> usize {
        self.exit.len() - 1
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn occupancy(&self, state: usize) -> Option<&[u16]> {
        self.occupancies.get(state).map(|o| &o[..])
    }

    pub fn exit_rate(&self, state: usize) -> f64 {
        self.exit[state]
    }

    pub fn max_exit_rate(&self) -> f64 {
        self.exit.iter().copied().fold(0.0, f64::max)
    }

    /// Off-diagonal `(to, rate)` pairs out of `state`.
    pub fn row(&self, state: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.out_ptr[state]..self.out_ptr[state + 1];
        self.out_idx[r.clone()]
            .iter()
            .zip(&self.out_rate[r])
            .map(|(&j, &q)| (j as usize, q))
    }

    /// Off-diagonal `(from, rate)` pairs into `state`.
    pub fn column(&self, state: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.in_ptr[state]..self.in_ptr[state + 1];
        self.in_idx[r.clone()]
            .iter()
            .zip(&self.in_rate[r])
            .map(|(&j, &q)| (j as usize, q))
    }

    pub fn nonzeros(&self) -> usize {
        self.out_idx.len() + self.exit.iter().filter(|&&e| e > 0.0).count()
    }

    /// Largest absolute generator row sum; zero up to rounding.
    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.len())
            .map(|i| (self.row(i).map(|(_, q)| q).sum::<f64>() - self.exit[i]).abs())
            .fold(0.0, f64::max)
    }

    pub fn initial_distribution(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.len()];
        p[self.initial] = 1.0;
        p
    }

    /// Write the generator as `row col rate` lines, diagonal included.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# generator triplets: row col rate (per hour)")?;
        writeln!(
            w,
            "# states {} (LOSS = {}), initial {}",
            self.len(),
            self.loss_index(),
            self.initial
        )?;
        for i in 0..self.len() {
            if self.exit[i] > 0.0 {
                writeln!(w, "{i} {i} {:e}", -self.exit[i])?;
            }
            for (j, q) in self.row(i) {
                writeln!(w, "{i} {j} {q:e}")?;
            }
        }
        Ok(())
    }
}

fn transpose(
    n: usize,
    ptr: &[usize],
    idx: &[u32],
    rate: &[f64],
) -> (Vec<usize>, Vec<u32>, Vec<f64>) {
    let mut count = vec![0usize; n + 1];
    for &j in idx {
        count[j as usize + 1] += 1;
    }
    for i in 0..n {
        count[i + 1] += count[i];
    }
    let mut fill = count.clone();
    let mut t_idx = vec![0u32; idx.len()];
    let mut t_rate = vec![0.0; idx.len()];
    for i in 0..n {
        for k in ptr[i]..ptr[i + 1] {
            let j = idx[k] as usize;
            t_idx[fill[j]] = i as u32;
            t_rate[fill[j]] = rate[k];
            fill[j] += 1;
        }
    }
    (count, t_idx, t_rate)
}

/// Explore the reachable occupancy vectors of `n` exchangeable disks
/// breadth-first from the all-initial occupancy. A transition `i -> j`
/// fires at `occupancy[i] * rate(i -> j)` and is redirected to LOSS when
/// `loss` triggers on the successor.
pub fn build_lumped_chain(
    disk: &DiskLocalModel,
    n: usize,
    loss: &dyn LossRule,
    state_cap: usize,
) -> Result<LumpedChain> {
    disk.validate()?;
    if n == 0 || n > u16::MAX as usize {
        return Err(invalid("n", format!("disk count {n} out of range")));
    }
    let outgoing = disk.outgoing();
    let mut start = vec![0u16; disk.len()].into_boxed_slice();
    start[disk.initial] = n as u16;

    const LOSS: usize = usize::MAX;
    let mut index: HashMap<Box<[u16]>, usize> = HashMap::new();
    let mut states: Vec<Box<[u16]>> = vec![start.clone()];
    index.insert(start, 0);
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();

    let mut head = 0;
    while head < states.len() {
        let occ = states[head].clone();
        for (i, &count) in occ.iter().enumerate() {
            if count == 0 {
                continue;
            }
            for t in &outgoing[i] {
                let mut next = occ.clone();
                next[i] -= 1;
                next[t.to] += 1;
                let counts = ClassCounts::of(disk, &next);
                let target = if loss.triggers(counts, t.kind) {
                    LOSS
                } else if let Some(&k) = index.get(&next) {
                    k
                } else {
                    if states.len() >= state_cap {
                        return Err(Error::StateCapExceeded { cap: state_cap });
                    }
                    let k = states.len();
                    index.insert(next.clone(), k);
                    states.push(next);
                    k
                };
                triplets.push((head, target, count as f64 * t.rate));
            }
        }
        head += 1;
    }
    let loss_index = states.len();
    for t in &mut triplets {
        if t.1 == LOSS {
            t.1 = loss_index;
        }
    }
    LumpedChain::from_triplets(states, &triplets, 0)
}

/// Birth-death chain over the number of failed disks `0..=m`, with LOSS
/// after the `(m+1)`-th failure. Failures occur at `(n-i) lambda`, repairs
/// at `mu`. A fraction `h` of the failures out of state `m-1` jumps
/// straight to LOSS (unrecoverable sector error during critical rebuild);
/// `h = 0` gives the plain chain. Occupancies are `[up, down]`.
pub fn build_naive_chain(m: usize, n: usize, lambda: f64, mu: f64, h: f64) -> Result<LumpedChain> {
    if !(m >= 1 && m < n) {
        return Err(invalid("m", format!("need 1 <= m < n, got m={m}, n={n}")));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(invalid("lambda", "must be > 0"));
    }
    if !(mu.is_finite() && mu >= 0.0) {
        return Err(invalid("mu", "must be >= 0"));
    }
    if !(0.0..=1.0).contains(&h) {
        return Err(invalid("h", "must be a probability"));
    }
    let occupancies: Vec<Box<[u16]>> = (0..=m)
        .map(|i| vec![(n - i) as u16, i as u16].into_boxed_slice())
        .collect();
    let loss = m + 1;
    let mut triplets = Vec::new();
    for i in 0..=m {
        let fail = (n - i) as f64 * lambda;
        let next = if i == m { loss } else { i + 1 };
        if i + 1 == m && h > 0.0 {
            triplets.push((i, next, fail * (1.0 - h)));
            triplets.push((i, loss, fail * h));
        } else {
            triplets.push((i, next, fail));
        }
        if i > 0 && mu > 0.0 {
            triplets.push((i, i - 1, mu));
        }
    }
    LumpedChain::from_triplets(occupancies, &triplets, 0)
}
