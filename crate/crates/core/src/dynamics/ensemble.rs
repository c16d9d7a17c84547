use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_cascade, SeedSpec};
use crate::error::{Error, Result};
use crate::netgen::{generate, NetworkSpec};
use crate::rng::{derive_seed, stream};

/// Replicated cascade experiment: a fresh network and a fresh seed placement
/// per replica.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub network: NetworkSpec,
    pub r1: f64,
    pub seeds: SeedSpec,
    pub replicas: usize,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaRecord {
    pub replica: usize,
    pub network_seed: u64,
    pub cascade_seed: u64,
    /// Cumulative fractions at level `≥ i`, `i = 1..=M`.
    pub final_fractions: Vec<f64>,
    pub rounds: usize,
    pub erased_edges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub mean: Vec<f64>,
    /// Sample standard deviation (zero for a single replica).
    pub stdev: Vec<f64>,
    pub records: Vec<ReplicaRecord>,
}

/// Runs all replicas (in parallel) and aggregates per-level final fractions.
///
/// Replica `r` uses network seed `derive_seed(master, NETWORK, r)` and
/// seed-placement seed `derive_seed(master, CASCADE, r)`, so results do not
/// depend on scheduling.
pub fn ensemble_run(spec: &EnsembleSpec) -> Result<EnsembleSummary> {
    if spec.replicas == 0 {
        return Err(Error::invalid("replicas must be at least 1"));
    }
    let records = (0..spec.replicas)
        .into_par_iter()
        .map(|r| {
            let network_seed = derive_seed(spec.master_seed, stream::NETWORK, r as u64);
            let cascade_seed = derive_seed(spec.master_seed, stream::CASCADE, r as u64);
            let g = generate(&spec.network, network_seed)?;
            let res = run_cascade(&g.network, spec.r1, &spec.seeds, cascade_seed)?;
            Ok(ReplicaRecord {
                replica: r,
                network_seed,
                cascade_seed,
                final_fractions: res.default_fractions,
                rounds: res.rounds,
                erased_edges: g.total_erased(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let m = records[0].final_fractions.len();
    let count = records.len() as f64;
    let mean: Vec<f64> = (0..m)
        .map(|i| records.iter().map(|r| r.final_fractions[i]).sum::<f64>() / count)
        .collect();
    let stdev = (0..m)
        .map(|i| {
            if records.len() < 2 {
                return 0.0;
            }
            let ss: f64 = records
                .iter()
                .map(|r| (r.final_fractions[i] - mean[i]).powi(2))
                .sum();
            (ss / (count - 1.0)).sqrt()
        })
        .collect();
    Ok(EnsembleSummary { mean, stdev, records })
}

/// One row per replica and level: `replica,level,final_fraction,rounds`.
pub fn write_ensemble_csv<W: Write>(out: &mut W, summary: &EnsembleSummary) -> std::io::Result<()> {
    writeln!(out, "replica,level,final_fraction,rounds")?;
    for rec in &summary.records {
        for (i, f) in rec.final_fractions.iter().enumerate() {
            writeln!(out, "{},{},{:.16e},{}", rec.replica, i + 1, f, rec.rounds)?;
        }
    }
    Ok(())
}
