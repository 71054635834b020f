//! Connected components of sampled graphs and the weight functionals built
//! on them.

use std::io::Write;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::graphgen::PercolatedGraph;
use crate::weights::{CompensatedSum, WeightSequence};

/// Components ordered by size (descending), ties broken by smallest member.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentSummary {
    pub n: usize,
    pub m: usize,
    pub sizes: Vec<usize>,
    /// Summed vertex weight per component, same order as `sizes`.
    pub weights: Vec<f64>,
    pub min_vertex: Vec<usize>,
    /// Rank of the component containing each vertex (0 = largest).
    pub membership: Vec<u32>,
}

struct DisjointSets {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut v: u32) -> u32 {
        let mut root = v;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        while self.parent[v as usize] != root {
            let next = self.parent[v as usize];
            self.parent[v as usize] = root;
            v = next;
        }
        root
    }

    fn union(&mut self, a: u32, b: u32) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
    }
}

/// Components of `graph` with per-vertex weights `vertex_weights`
/// (`ws.weights()` for finite graphs, θ values for limit-model samples).
pub fn connected_components(graph: &PercolatedGraph, vertex_weights: &[f64]) -> Result<ComponentSummary> {
    let n = graph.n;
    if vertex_weights.len() != n {
        return Err(invalid(format!(
            "graph has {n} vertices but {} weights were supplied",
            vertex_weights.len()
        )));
    }
    let mut dsu = DisjointSets::new(n);
    for &[a, b] in &graph.edges {
        if a as usize >= n || b as usize >= n {
            return Err(invalid(format!("edge ({a}, {b}) out of range for n = {n}")));
        }
        dsu.union(a, b);
    }

    // Vertices are scanned in ascending order, so the first member seen is the
    // minimum. Singletons are already in tie-break order and skip the sort.
    const NONE: u32 = u32::MAX;
    let mut slot = vec![NONE; n];
    let mut multi: Vec<(usize, usize, u32)> = Vec::new();
    let mut singletons = Vec::new();
    let mut root_of = vec![0u32; n];
    for (v, root) in root_of.iter_mut().enumerate() {
        let r = dsu.find(v as u32);
        *root = r;
        let size = dsu.size[r as usize] as usize;
        if size == 1 {
            singletons.push(v);
        } else if slot[r as usize] == NONE {
            slot[r as usize] = 0;
            multi.push((size, v, r));
        }
    }
    multi.sort_unstable_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));

    let count = multi.len() + singletons.len();
    let mut sizes = Vec::with_capacity(count);
    let mut min_vertex = Vec::with_capacity(count);
    for (rank, &(size, minv, r)) in multi.iter().enumerate() {
        slot[r as usize] = rank as u32;
        sizes.push(size);
        min_vertex.push(minv);
    }
    let base = multi.len();
    for (k, &v) in singletons.iter().enumerate() {
        slot[v] = (base + k) as u32;
        sizes.push(1);
        min_vertex.push(v);
    }

    let mut sums = vec![CompensatedSum::new(); base];
    let mut membership = vec![0u32; n];
    for v in 0..n {
        let rank = slot[root_of[v] as usize];
        membership[v] = rank;
        if (rank as usize) < base {
            sums[rank as usize].add(vertex_weights[v]);
        }
    }
    let mut weights: Vec<f64> = sums.iter().map(CompensatedSum::value).collect();
    weights.extend(singletons.iter().map(|&v| vertex_weights[v]));

    Ok(ComponentSummary {
        n,
        m: graph.edges.len(),
        sizes,
        weights,
        min_vertex,
        membership,
    })
}

impl ComponentSummary {
    pub fn component_count(&self) -> usize {
        self.sizes.len()
    }

    /// Rank of the component containing `v`.
    pub fn component_of(&self, v: usize) -> usize {
        self.membership[v] as usize
    }

    pub fn same_component(&self, u: usize, v: usize) -> bool {
        self.membership[u] == self.membership[v]
    }

    /// Total weight of the component containing `v`.
    pub fn weight_of(&self, v: usize) -> f64 {
        self.weights[self.component_of(v)]
    }

    /// Component weights sorted non-increasing.
    pub fn sorted_weights(&self) -> Vec<f64> {
        let mut w = self.weights.clone();
        w.sort_unstable_by(|a, b| b.total_cmp(a));
        w
    }

    /// CSV with columns `rank,size,weight,min_vertex`; ranks and vertices
    /// are 1-based.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "rank,size,weight,min_vertex")?;
        for (k, ((&s, &w), &v)) in self.sizes.iter().zip(&self.weights).zip(&self.min_vertex).enumerate() {
            writeln!(out, "{},{},{},{}", k + 1, s, w, v + 1)?;
        }
        Ok(())
    }
}

/// `Σ_{i > skip_top} W_(i)²`, components taken in the summary order.
pub fn l2_weight_mass(summary: &ComponentSummary, skip_top: usize) -> f64 {
    summary.weights.iter().skip(skip_top).map(|w| w * w).sum()
}

/// Whether every vertex with `w_v ≥ n^{1/2+δ}` lies in the largest component.
pub fn hub_containment(summary: &ComponentSummary, ws: &WeightSequence, delta: f64) -> Result<bool> {
    if delta <= 0.0 {
        return Err(invalid("delta must be positive"));
    }
    let threshold = (ws.n() as f64).powf(0.5 + delta);
    // weights are non-increasing, so the qualifying vertices form a prefix
    Ok(ws
        .weights()
        .iter()
        .take_while(|&&w| w >= threshold)
        .enumerate()
        .all(|(v, _)| summary.membership[v] == 0))
}
