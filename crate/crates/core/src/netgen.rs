//! Random multiplex network generators.
//!
//! All generators are pure functions of their parameters and a 64-bit seed.
//! None of them emit self-loops or repeated edges; whenever a draw conflicts
//! with an existing edge it is redrawn up to [`MAX_REDRAWS`] times and then
//! dropped, and the number of dropped edges is returned with the layer.

use std::collections::HashSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::Geometric;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Edge, MultiplexNetwork};
pub use crate::network::overlap_count;
use crate::rng::{derive_seed, rng_from_seed, stream};

/// Redraw budget per conflicting edge.
pub const MAX_REDRAWS: usize = 100;

/// One generated edge set together with the number of edges that had to be
/// erased after exhausting the redraw budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSet {
    pub n: usize,
    pub edges: Vec<Edge>,
    pub erased: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LayerSpec {
    ErdosRenyi {
        mean_out_degree: f64,
    },
    Configuration {
        out_degrees: Vec<u32>,
        in_degrees: Vec<u32>,
    },
    StaticModel {
        gamma: f64,
        mean_out_degree: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub junior_fraction: f64,
}

impl SplitSpec {
    pub fn new(junior_fraction: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&junior_fraction) {
            return Err(Error::invalid(format!(
                "junior_fraction must lie in [0, 1], got {junior_fraction}"
            )));
        }
        Ok(SplitSpec { junior_fraction })
    }
}

/// How to build a whole multiplex network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NetworkSpec {
    /// Independent layers, junior first.
    Layers { n: usize, layers: Vec<LayerSpec> },
    /// One graph whose edges are split into a junior and a senior layer.
    Split {
        n: usize,
        base: LayerSpec,
        junior_fraction: f64,
    },
}

#[derive(Debug, Clone)]
pub struct GeneratedNetwork {
    pub network: MultiplexNetwork,
    /// Erased edges per generated edge set (one entry per layer, or a single
    /// entry for the base graph of a split).
    pub erased: Vec<usize>,
}

impl GeneratedNetwork {
    pub fn total_erased(&self) -> usize {
        self.erased.iter().sum()
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 nodes, got {n}")));
    }
    if n > u32::MAX as usize {
        return Err(Error::invalid("node count exceeds u32 range"));
    }
    Ok(())
}

/// Directed G(n, p) with `p = mean_out_degree / (n - 1)`: every ordered pair
/// `(u, v)`, `u != v`, is present independently.
///
/// Pairs are visited by geometric skipping, so the cost is proportional to
/// the number of edges rather than `n²`.
pub fn sample_er_directed_layer(n: usize, mean_out_degree: f64, seed: u64) -> Result<EdgeSet> {
    check_n(n)?;
    let max_mean = (n - 1) as f64;
    if !(mean_out_degree >= 0.0) || mean_out_degree > max_mean {
        return Err(Error::invalid(format!(
            "mean out-degree must lie in [0, {max_mean}], got {mean_out_degree}"
        )));
    }
    let p = mean_out_degree / max_mean;
    let mut edges = Vec::new();
    if p > 0.0 {
        let mut rng = rng_from_seed(seed);
        let geo = Geometric::new(p).map_err(|e| Error::invalid(e.to_string()))?;
        let total = (n as u64) * (n as u64 - 1);
        let per_row = n as u64 - 1;
        let mut idx: u64 = 0;
        let mut first = true;
        loop {
            let skip = geo.sample(&mut rng);
            let step = if first { skip } else { skip.saturating_add(1) };
            first = false;
            idx = match idx.checked_add(step) {
                Some(i) if i < total => i,
                _ => break,
            };
            let u = idx / per_row;
            let r = idx % per_row;
            let v = if r < u { r } else { r + 1 };
            edges.push((u as u32, v as u32));
        }
    }
    Ok(EdgeSet {
        n,
        edges,
        erased: 0,
    })
}

/// Configuration model: out-stubs matched uniformly at random to in-stubs.
///
/// A pair that would form a self-loop or repeat an edge swaps its in-stub
/// with a random still-unmatched one; after [`MAX_REDRAWS`] failed swaps the
/// pair is erased. Degrees are preserved except at erased pairs.
pub fn sample_configuration_layer(out_seq: &[u32], in_seq: &[u32], seed: u64) -> Result<EdgeSet> {
    let n = out_seq.len();
    if in_seq.len() != n {
        return Err(Error::invalid(format!(
            "degree sequences differ in length: {} vs {}",
            n,
            in_seq.len()
        )));
    }
    let out_total: u64 = out_seq.iter().map(|&d| d as u64).sum();
    let in_total: u64 = in_seq.iter().map(|&d| d as u64).sum();
    if out_total != in_total {
        return Err(Error::StubMismatch {
            out_total,
            in_total,
        });
    }
    if n > u32::MAX as usize {
        return Err(Error::invalid("node count exceeds u32 range"));
    }

    let mut rng = rng_from_seed(seed);
    let sources: Vec<u32> = stubs(out_seq);
    let mut targets: Vec<u32> = stubs(in_seq);
    targets.shuffle(&mut rng);

    let m = sources.len();
    let mut seen: HashSet<Edge> = HashSet::with_capacity(m);
    let mut edges = Vec::with_capacity(m);
    let mut erased = 0;
    for i in 0..m {
        let u = sources[i];
        let ok = |v: u32, seen: &HashSet<Edge>| v != u && !seen.contains(&(u, v));
        if !ok(targets[i], &seen) {
            let mut fixed = false;
            if i + 1 < m {
                for _ in 0..MAX_REDRAWS {
                    let j = rng.random_range(i + 1..m);
                    if ok(targets[j], &seen) {
                        targets.swap(i, j);
                        fixed = true;
                        break;
                    }
                }
            }
            if !fixed {
                erased += 1;
                continue;
            }
        }
        seen.insert((u, targets[i]));
        edges.push((u, targets[i]));
    }
    Ok(EdgeSet { n, edges, erased })
}

fn stubs(seq: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(seq.iter().map(|&d| d as usize).sum());
    for (v, &d) in seq.iter().enumerate() {
        out.extend(std::iter::repeat_n(v as u32, d as usize));
    }
    out
}

/// Directed static model with out-degree tail `k^-gamma`.
///
/// Node `i = 1..n` carries weight `i^-mu`, `mu = 1/(gamma - 1)`. Each of the
/// `ceil(n * mean_out_degree)` edges draws its lender proportionally to the
/// weights and its borrower uniformly among the other `n - 1` nodes, so
/// in-degrees are close to Poisson.
pub fn sample_static_model_directed(
    n: usize,
    gamma: f64,
    mean_out_degree: f64,
    seed: u64,
) -> Result<EdgeSet> {
    check_n(n)?;
    if !(gamma > 2.0) {
        return Err(Error::invalid(format!("static model needs gamma > 2, got {gamma}")));
    }
    if !(mean_out_degree >= 0.0) || mean_out_degree > (n - 1) as f64 {
        return Err(Error::invalid(format!(
            "mean out-degree must lie in [0, {}], got {mean_out_degree}",
            n - 1
        )));
    }
    let target_edges = (n as f64 * mean_out_degree).ceil() as usize;
    if target_edges == 0 {
        return Ok(EdgeSet {
            n,
            edges: Vec::new(),
            erased: 0,
        });
    }

    let mu = 1.0 / (gamma - 1.0);
    let weights: Vec<f64> = (1..=n).map(|i| (i as f64).powf(-mu)).collect();
    let lender_law = WeightedIndex::new(&weights).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = rng_from_seed(seed);
    let mut seen: HashSet<Edge> = HashSet::with_capacity(target_edges);
    let mut edges = Vec::with_capacity(target_edges);
    let mut erased = 0;
    for _ in 0..target_edges {
        let mut placed = false;
        for _ in 0..=MAX_REDRAWS {
            let u = lender_law.sample(&mut rng);
            let mut v = rng.random_range(0..n - 1);
            if v >= u {
                v += 1;
            }
            let e = (u as u32, v as u32);
            if seen.insert(e) {
                edges.push(e);
                placed = true;
                break;
            }
        }
        if !placed {
            erased += 1;
        }
    }
    Ok(EdgeSet { n, edges, erased })
}

pub fn sample_layer(n: usize, spec: &LayerSpec, seed: u64) -> Result<EdgeSet> {
    match spec {
        LayerSpec::ErdosRenyi { mean_out_degree } => {
            sample_er_directed_layer(n, *mean_out_degree, seed)
        }
        LayerSpec::Configuration {
            out_degrees,
            in_degrees,
        } => {
            if out_degrees.len() != n {
                return Err(Error::invalid(format!(
                    "configuration layer has {} nodes, network has {n}",
                    out_degrees.len()
                )));
            }
            sample_configuration_layer(out_degrees, in_degrees, seed)
        }
        LayerSpec::StaticModel {
            gamma,
            mean_out_degree,
        } => sample_static_model_directed(n, *gamma, *mean_out_degree, seed),
    }
}

/// Splits one edge set into a junior layer (each edge independently with
/// probability `junior_fraction`) and a senior layer (the rest).
pub fn split_edges_by_seniority(edges: &EdgeSet, spec: SplitSpec, seed: u64) -> Result<MultiplexNetwork> {
    let spec = SplitSpec::new(spec.junior_fraction)?;
    let mut rng = rng_from_seed(seed);
    let mut junior = Vec::new();
    let mut senior = Vec::new();
    for &e in &edges.edges {
        if rng.random::<f64>() < spec.junior_fraction {
            junior.push(e);
        } else {
            senior.push(e);
        }
    }
    MultiplexNetwork::new(edges.n, vec![junior, senior])
}

/// Builds a network from a [`NetworkSpec`]. Layer `α` uses the child seed
/// `derive_seed(seed, LAYER, α)`; a split uses `derive_seed(seed, SPLIT, 0)`
/// for the assignment.
pub fn generate(spec: &NetworkSpec, seed: u64) -> Result<GeneratedNetwork> {
    match spec {
        NetworkSpec::Layers { n, layers } => {
            if layers.is_empty() {
                return Err(Error::invalid("a network needs at least one layer"));
            }
            let mut edge_lists = Vec::with_capacity(layers.len());
            let mut erased = Vec::with_capacity(layers.len());
            for (a, layer) in layers.iter().enumerate() {
                let set = sample_layer(*n, layer, derive_seed(seed, stream::LAYER, a as u64))?;
                erased.push(set.erased);
                edge_lists.push(set.edges);
            }
            Ok(GeneratedNetwork {
                network: MultiplexNetwork::new(*n, edge_lists)?,
                erased,
            })
        }
        NetworkSpec::Split {
            n,
            base,
            junior_fraction,
        } => {
            let set = sample_layer(*n, base, derive_seed(seed, stream::LAYER, 0))?;
            let network = split_edges_by_seniority(
                &set,
                SplitSpec::new(*junior_fraction)?,
                derive_seed(seed, stream::SPLIT, 0),
            )?;
            Ok(GeneratedNetwork {
                network,
                erased: vec![set.erased],
            })
        }
    }
}

/// Estimates the exponent `gamma` of a degree tail `P(k) ~ k^-gamma` by
/// least-squares regression of `ln(rank)` on `ln(degree)` over the largest
/// `top_fraction` of the degrees (zeros excluded).
pub fn tail_exponent_rank_fit(degrees: &[u32], top_fraction: f64) -> Option<f64> {
    let mut d: Vec<u32> = degrees.iter().copied().filter(|&k| k > 0).collect();
    d.sort_unstable_by(|a, b| b.cmp(a));
    let take = ((degrees.len() as f64) * top_fraction).round() as usize;
    let take = take.min(d.len());
    if take < 3 {
        return None;
    }
    let pts: Vec<(f64, f64)> = d[..take]
        .iter()
        .enumerate()
        .map(|(r, &k)| ((k as f64).ln(), ((r + 1) as f64).ln()))
        .collect();
    let nx = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nx;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nx;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(1.0 - sxy / sxx)
}
