//! Exact sampling of percolated rank-1 graphs.
//!
//! Vertices are 0-based internally and sorted by non-increasing weight, so
//! for a fixed row `i` the envelope `min(1, π w_i w_j / ℓ_n)` is
//! non-increasing in `j`. Rows are walked with geometric skips under that
//! envelope and each proposal is accepted with the ratio of the true kernel
//! probability to the envelope (at most 1 for all three kernels). Expected
//! work is `O(n + Σ_{i<j} min(1, π w_i w_j / ℓ_n))`.

use std::io::Write;

use rand::Rng;
use serde::Serialize;

use crate::constants::Kernel;
use crate::error::{invalid, Result};
use crate::rng::{self, open_unit, StreamRng};
use crate::weights::WeightSequence;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PercolatedGraph {
    pub n: usize,
    /// Unordered pairs `[i, j]` with `i < j`, 0-based, ascending.
    pub edges: Vec<[u32; 2]>,
    pub kernel: Kernel,
    /// Retention probability. Limit-model samples store their intensity λ
    /// here instead.
    pub pi: f64,
    pub seed: u64,
}

impl PercolatedGraph {
    /// Builds a graph from arbitrary pairs, normalizing each to `i < j` and
    /// sorting. Rejects self-loops, duplicates and out-of-range endpoints.
    pub fn from_edges(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        check_vertex_count(n)?;
        let mut edges = Vec::new();
        for (a, b) in pairs {
            if a >= n || b >= n {
                return Err(invalid(format!("edge ({a}, {b}) out of range for n = {n}")));
            }
            if a == b {
                return Err(invalid(format!("self-loop at vertex {a}")));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            edges.push([i as u32, j as u32]);
        }
        edges.sort_unstable();
        if edges.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("duplicate edge"));
        }
        Ok(PercolatedGraph {
            n,
            edges,
            kernel: Kernel::Nr,
            pi: 1.0,
            seed: 0,
        })
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Sorted neighbors of `v`.
    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let v = v as u32;
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&[a, b]| {
                if a == v {
                    Some(b as usize)
                } else if b == v {
                    Some(a as usize)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Text export: one `i j` pair per line, 1-based, ascending.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        debug_assert!(self.edges.windows(2).all(|w| w[0] < w[1]));
        for &[i, j] in &self.edges {
            writeln!(out, "{} {}", i as u64 + 1, j as u64 + 1)?;
        }
        Ok(())
    }
}

fn check_vertex_count(n: usize) -> Result<()> {
    if n as u64 > u32::MAX as u64 {
        return Err(invalid("n must fit in 32-bit vertex labels"));
    }
    Ok(())
}

fn check_pi(pi: f64) -> Result<()> {
    if (0.0..=1.0).contains(&pi) {
        Ok(())
    } else {
        Err(invalid(format!("pi must lie in [0,1], got {pi}")))
    }
}

/// Percolated connection probability `π q(w_i w_j / ℓ_n)`.
#[inline]
pub fn edge_prob(kernel: Kernel, w_i: f64, w_j: f64, ell_n: f64, pi: f64) -> f64 {
    pi * kernel.connect(w_i * w_j / ell_n)
}

/// Skip-samples all pairs among the first `m` entries of `weights`
/// (non-increasing), appending accepted pairs to `edges` in ascending order.
pub(crate) fn skip_sample_rows<R: Rng + ?Sized>(
    weights: &[f64],
    m: usize,
    ell_n: f64,
    kernel: Kernel,
    pi: f64,
    rng: &mut R,
    edges: &mut Vec<[u32; 2]>,
) {
    if pi <= 0.0 || m < 2 {
        return;
    }
    for i in 0..m - 1 {
        let wi = weights[i];
        let scale = pi * wi / ell_n;
        let mut j = i + 1;
        let mut envelope = (scale * weights[j]).min(1.0);
        while j < m && envelope > 0.0 {
            if envelope < 1.0 {
                let skip = (open_unit(rng).ln() / (-envelope).ln_1p()).floor();
                if skip >= (m - j) as f64 {
                    break;
                }
                j += skip as usize;
            }
            let x = wi * weights[j] / ell_n;
            let target = pi * kernel.connect(x);
            if rng.random::<f64>() * envelope < target {
                edges.push([i as u32, j as u32]);
            }
            envelope = (pi * x).min(1.0);
            j += 1;
        }
    }
}

/// Samples the percolated graph on all `n` vertices.
pub fn sample_graph(ws: &WeightSequence, kernel: Kernel, pi: f64, seed: u64) -> Result<PercolatedGraph> {
    sample_restricted_replicate(ws, kernel, pi, ws.n(), seed, 0)
}

/// [`sample_graph`] on the `replicate`-th independent stream of `seed`.
pub fn sample_graph_replicate(
    ws: &WeightSequence,
    kernel: Kernel,
    pi: f64,
    seed: u64,
    replicate: u64,
) -> Result<PercolatedGraph> {
    sample_restricted_replicate(ws, kernel, pi, ws.n(), seed, replicate)
}

/// Same law as [`sample_graph`] but only pairs inside the `m` heaviest
/// vertices; labels are preserved.
pub fn sample_restricted(
    ws: &WeightSequence,
    kernel: Kernel,
    pi: f64,
    m: usize,
    seed: u64,
) -> Result<PercolatedGraph> {
    sample_restricted_replicate(ws, kernel, pi, m, seed, 0)
}

pub fn sample_restricted_replicate(
    ws: &WeightSequence,
    kernel: Kernel,
    pi: f64,
    m: usize,
    seed: u64,
    replicate: u64,
) -> Result<PercolatedGraph> {
    check_pi(pi)?;
    check_vertex_count(ws.n())?;
    if m == 0 || m > ws.n() {
        return Err(invalid(format!("restriction size m = {m} outside [1, {}]", ws.n())));
    }
    let mut rng: StreamRng = rng::stream(seed, replicate, rng::tag::GRAPH);
    let mut edges = Vec::new();
    skip_sample_rows(ws.weights(), m, ws.ell_n(), kernel, pi, &mut rng, &mut edges);
    Ok(PercolatedGraph {
        n: ws.n(),
        edges,
        kernel,
        pi,
        seed,
    })
}

/// `N_n(a) = ⌊a n^{(3-τ)/2}⌋`.
pub fn core_size(n: usize, tau: f64, a: f64) -> usize {
    (a * (n as f64).powf((3.0 - tau) / 2.0)).floor() as usize
}

/// Number of vertices other than `i`, `j` adjacent to both.
pub fn two_step_count(graph: &PercolatedGraph, i: usize, j: usize) -> Result<usize> {
    if i == j {
        return Err(invalid("two_step_count needs distinct vertices"));
    }
    if i >= graph.n || j >= graph.n {
        return Err(invalid("vertex out of range"));
    }
    let (ni, nj) = (graph.neighbors(i), graph.neighbors(j));
    let (mut a, mut b, mut count) = (0, 0, 0);
    while a < ni.len() && b < nj.len() {
        match ni[a].cmp(&nj[b]) {
            std::cmp::Ordering::Less => a += 1,
            std::cmp::Ordering::Greater => b += 1,
            std::cmp::Ordering::Equal => {
                if ni[a] != i && ni[a] != j {
                    count += 1;
                }
                a += 1;
                b += 1;
            }
        }
    }
    Ok(count)
}

/// Exact finite-`n` mean of [`two_step_count`]:
/// `Σ_{v ∉ {i,j}} π² q(w_i w_v/ℓ_n) q(w_j w_v/ℓ_n)`.
pub fn expected_two_step(ws: &WeightSequence, kernel: Kernel, pi: f64, i: usize, j: usize) -> f64 {
    let (wi, wj, ell) = (ws.w(i), ws.w(j), ws.ell_n());
    ws.weights()
        .iter()
        .enumerate()
        .filter(|&(v, _)| v != i && v != j)
        .map(|(_, &wv)| edge_prob(kernel, wi, wv, ell, pi) * edge_prob(kernel, wj, wv, ell, pi))
        .sum()
}
