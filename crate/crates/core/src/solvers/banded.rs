//! Direct sparse solve: reverse Cuthill–McKee reordering followed by a banded
//! LU factorization with partial pivoting (the `gbtrf`/`gbtrs` scheme).

use std::collections::VecDeque;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Reverse Cuthill–McKee ordering of the symmetrized sparsity pattern.
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &SparseMatrix) -> Vec<usize> {
    let n = a.nrows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j, _) in a.triplets() {
        if i != j {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for nb in adj.iter_mut() {
        nb.sort_unstable();
        nb.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    for nb in adj.iter_mut() {
        nb.sort_by_key(|&v| (degree[v], v));
    }

    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    let mut level = vec![usize::MAX; n];
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (degree[v], v));

    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(seed, &adj, &degree, &mut level);
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in &adj[v] {
                if !visited[w] {
                    visited[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    order.reverse();
    order
}

/// George–Liu search for a node of (near) maximal eccentricity in the
/// component of `seed`.
fn pseudo_peripheral(seed: usize, adj: &[Vec<usize>], degree: &[usize], level: &mut [usize]) -> usize {
    let mut root = seed;
    let (mut ecc, mut last) = bfs_levels(root, adj, level);
    for _ in 0..8 {
        let Some(candidate) = last.iter().copied().min_by_key(|&v| (degree[v], v)) else {
            break;
        };
        let (ecc2, last2) = bfs_levels(candidate, adj, level);
        if ecc2 <= ecc {
            break;
        }
        root = candidate;
        ecc = ecc2;
        last = last2;
    }
    root
}

fn bfs_levels(root: usize, adj: &[Vec<usize>], level: &mut [usize]) -> (usize, Vec<usize>) {
    let mut touched = vec![root];
    level[root] = 0;
    let mut queue = VecDeque::from([root]);
    let mut max_level = 0;
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if level[w] == usize::MAX {
                level[w] = level[v] + 1;
                max_level = max_level.max(level[w]);
                touched.push(w);
                queue.push_back(w);
            }
        }
    }
    let last: Vec<usize> = touched.iter().copied().filter(|&v| level[v] == max_level).collect();
    for v in touched {
        level[v] = usize::MAX;
    }
    (max_level, last)
}

/// Lower and upper bandwidth of `a` after the symmetric permutation `perm`.
pub fn bandwidths(a: &SparseMatrix, perm: &[usize]) -> (usize, usize) {
    let mut inv = vec![0usize; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let (mut kl, mut ku) = (0, 0);
    for (i, j, _) in a.triplets() {
        let (pi, pj) = (inv[i], inv[j]);
        if pi > pj {
            kl = kl.max(pi - pj);
        } else {
            ku = ku.max(pj - pi);
        }
    }
    (kl, ku)
}

#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    /// Row-major band: entry `(i, j)` lives at `i * width + (j + kl - i)`.
    band: Vec<Complex64>,
    /// Multipliers of column `k` for rows `k+1..=k+kl`.
    lower: Vec<Complex64>,
    pivots: Vec<usize>,
    perm: Vec<usize>,
}

impl BandedLu {
    /// Estimated storage in complex entries for a given ordering.
    pub fn storage_for(n: usize, kl: usize, ku: usize) -> usize {
        n.saturating_mul(2 * kl + ku + 1).saturating_add(n.saturating_mul(kl))
    }

    pub fn factor(a: &SparseMatrix, perm: Vec<usize>, max_storage: usize) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || perm.len() != n {
            return Err(Error::DimensionMismatch("banded LU needs a square matrix and a full permutation".into()));
        }
        let (kl, ku) = bandwidths(a, &perm);
        let storage = Self::storage_for(n, kl, ku);
        if storage > max_storage {
            return Err(Error::SizeLimit {
                what: "banded factorization storage",
                required: storage,
                limit: max_storage,
                hint: "reduce the Fock cutoffs or use trajectories",
            });
        }
        let width = 2 * kl + ku + 1;
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut band = vec![ZERO; n * width];
        for (i, j, v) in a.triplets() {
            let (pi, pj) = (inv[i], inv[j]);
            band[pi * width + (pj + kl - pi)] = v;
        }
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        let mut lower = vec![ZERO; n * kl];
        let mut pivots = vec![0usize; n];

        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = 0.0;
            for i in k..=last_row {
                let v = band[i * width + (k + kl - i)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= 1e-300 * scale || !best.is_finite() {
                return Err(Error::Solver(format!(
                    "singular matrix: no usable pivot in column {k} of {n}; increase the cutoffs or regularize"
                )));
            }
            pivots[k] = p;
            let last_col = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    band.swap(k * width + (j + kl - k), p * width + (j + kl - p));
                }
            }
            let pivot = band[k * width + kl];
            let (head, tail) = band.split_at_mut((k + 1) * width);
            let row_k = &head[k * width + kl + 1..k * width + kl + 1 + (last_col - k)];
            for i in k + 1..=last_row {
                let off = i - k - 1;
                let base = off * width;
                let lik = tail[base + (k + kl - i)];
                if lik == ZERO {
                    continue;
                }
                let m = lik / pivot;
                lower[k * kl + off] = m;
                tail[base + (k + kl - i)] = ZERO;
                let start = base + (k + 1 + kl - i);
                let row_i = &mut tail[start..start + (last_col - k)];
                for (x, &u) in row_i.iter_mut().zip(row_k) {
                    *x -= m * u;
                }
            }
        }
        Ok(Self {
            n,
            kl,
            ku,
            width,
            band,
            lower,
            pivots,
            perm,
        })
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    pub fn storage(&self) -> usize {
        self.band.len() + self.lower.len()
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let (n, kl, ku, w) = (self.n, self.kl, self.ku, self.width);
        let mut x: Vec<Complex64> = self.perm.iter().map(|&old| b[old]).collect();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk == ZERO {
                continue;
            }
            for i in k + 1..=(k + kl).min(n - 1) {
                x[i] -= self.lower[k * kl + (i - k - 1)] * xk;
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + kl + ku).min(n - 1);
            let row = &self.band[k * w..(k + 1) * w];
            let mut s = x[k];
            for j in k + 1..=last_col {
                s -= row[j + kl - k] * x[j];
            }
            x[k] = s / row[kl];
        }
        let mut out = vec![ZERO; n];
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = x[new];
        }
        out
    }
}
