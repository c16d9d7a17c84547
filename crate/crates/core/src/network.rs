//! Multiplex directed networks.
//!
//! A [`MultiplexNetwork`] holds `n` nodes and `M` ordered layers. Every edge is
//! a `(lender, borrower)` pair: the lender holds a loan of the layer's
//! seniority on the borrower. Layer 0 is the most junior.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// A directed `(lender, borrower)` edge.
pub type Edge = (u32, u32);

#[derive(Debug, Clone, PartialEq, Eq)]
struct Layer {
    /// Sorted, duplicate-free.
    edges: Vec<Edge>,
    out_offsets: Vec<usize>,
    out_targets: Vec<u32>,
    in_offsets: Vec<usize>,
    in_sources: Vec<u32>,
}

impl Layer {
    fn build(index: usize, n: usize, mut edges: Vec<Edge>) -> Result<Self> {
        for &(u, v) in &edges {
            if u as usize >= n || v as usize >= n {
                return Err(Error::EdgeOutOfRange {
                    layer: index,
                    lender: u,
                    borrower: v,
                    n,
                });
            }
        }
        edges.sort_unstable();
        if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateEdge {
                layer: index,
                lender: w[0].0,
                borrower: w[0].1,
            });
        }

        let (out_offsets, out_targets) = csr(n, edges.iter().map(|&(u, v)| (u, v)));
        let (in_offsets, in_sources) = csr(n, edges.iter().map(|&(u, v)| (v, u)));
        Ok(Layer {
            edges,
            out_offsets,
            out_targets,
            in_offsets,
            in_sources,
        })
    }
}

fn csr(n: usize, pairs: impl Iterator<Item = (u32, u32)> + Clone) -> (Vec<usize>, Vec<u32>) {
    let mut offsets = vec![0usize; n + 1];
    for (a, _) in pairs.clone() {
        offsets[a as usize + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut targets = vec![0u32; offsets[n]];
    for (a, b) in pairs {
        targets[fill[a as usize]] = b;
        fill[a as usize] += 1;
    }
    (offsets, targets)
}

/// `n` nodes and an ordered list of directed edge sets, with cached
/// adjacency in both directions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiplexNetwork {
    n: usize,
    layers: Vec<Layer>,
}

impl MultiplexNetwork {
    /// Builds a network from edge lists ordered junior → senior.
    ///
    /// Edges are sorted; a repeated edge within a layer is an error, as is an
    /// endpoint outside `[0, n)`.
    pub fn new(n: usize, layers: Vec<Vec<Edge>>) -> Result<Self> {
        if n > u32::MAX as usize {
            return Err(Error::invalid("node count exceeds u32 range"));
        }
        let layers = layers
            .into_iter()
            .enumerate()
            .map(|(i, edges)| Layer::build(i, n, edges))
            .collect::<Result<Vec<_>>>()?;
        Ok(MultiplexNetwork { n, layers })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    /// Sorted edges of `layer`.
    pub fn edges(&self, layer: usize) -> &[Edge] {
        &self.layers[layer].edges
    }

    pub fn edge_count(&self) -> usize {
        self.layers.iter().map(|l| l.edges.len()).sum()
    }

    /// Borrowers of `node` in `layer` (its out-neighbors).
    pub fn borrowers(&self, layer: usize, node: usize) -> &[u32] {
        let l = &self.layers[layer];
        &l.out_targets[l.out_offsets[node]..l.out_offsets[node + 1]]
    }

    /// Lenders to `node` in `layer` (its in-neighbors).
    pub fn lenders(&self, layer: usize, node: usize) -> &[u32] {
        let l = &self.layers[layer];
        &l.in_sources[l.in_offsets[node]..l.in_offsets[node + 1]]
    }

    /// Number of loans `node` holds in `layer` (`l_α`).
    pub fn out_degree(&self, layer: usize, node: usize) -> usize {
        let l = &self.layers[layer];
        l.out_offsets[node + 1] - l.out_offsets[node]
    }

    /// Number of debts `node` owes in `layer` (`b_α`).
    pub fn in_degree(&self, layer: usize, node: usize) -> usize {
        let l = &self.layers[layer];
        l.in_offsets[node + 1] - l.in_offsets[node]
    }

    pub fn out_degrees(&self, layer: usize) -> Vec<u32> {
        (0..self.n).map(|v| self.out_degree(layer, v) as u32).collect()
    }

    pub fn in_degrees(&self, layer: usize) -> Vec<u32> {
        (0..self.n).map(|v| self.in_degree(layer, v) as u32).collect()
    }

    /// Total interbank loans of `node` across all layers.
    pub fn total_out_degree(&self, node: usize) -> usize {
        (0..self.layers.len()).map(|a| self.out_degree(a, node)).sum()
    }

    /// Canonical text form: `n M` on the first line, then one
    /// `layer lender borrower` line per edge (layers 1-indexed), sorted.
    pub fn to_canonical_string(&self) -> String {
        let mut s = String::with_capacity(16 * (self.edge_count() + 1));
        let _ = writeln!(s, "{} {}", self.n, self.layers.len());
        for (a, layer) in self.layers.iter().enumerate() {
            for &(u, v) in &layer.edges {
                let _ = writeln!(s, "{} {} {}", a + 1, u, v);
            }
        }
        s
    }

    pub fn from_canonical_str(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            reason: "missing header".into(),
        })?;
        let fields: Vec<_> = header.split_whitespace().collect();
        let parse_err = |line: usize, reason: &str| Error::Parse {
            line: line + 1,
            reason: reason.to_string(),
        };
        if fields.len() != 2 {
            return Err(parse_err(hline, "header must be `n M`"));
        }
        let n: usize = fields[0].parse().map_err(|_| parse_err(hline, "bad n"))?;
        let m: usize = fields[1].parse().map_err(|_| parse_err(hline, "bad M"))?;
        let mut layers = vec![Vec::new(); m];
        for (ln, line) in lines {
            let f: Vec<_> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(parse_err(ln, "edge line must be `layer lender borrower`"));
            }
            let a: usize = f[0].parse().map_err(|_| parse_err(ln, "bad layer"))?;
            let u: u32 = f[1].parse().map_err(|_| parse_err(ln, "bad lender"))?;
            let v: u32 = f[2].parse().map_err(|_| parse_err(ln, "bad borrower"))?;
            if a == 0 || a > m {
                return Err(parse_err(ln, "layer index out of range"));
            }
            layers[a - 1].push((u, v));
        }
        MultiplexNetwork::new(n, layers)
    }
}

/// Number of ordered pairs present in at least two layers.
pub fn overlap_count(net: &MultiplexNetwork) -> usize {
    let mut all: Vec<Edge> = (0..net.layer_count())
        .flat_map(|a| net.edges(a).iter().copied())
        .collect();
    all.sort_unstable();
    let mut count = 0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i + 1;
        while j < all.len() && all[j] == all[i] {
            j += 1;
        }
        if j - i >= 2 {
            count += 1;
        }
        i = j;
    }
    count
}
