use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{marching_squares, AxisRange, Segment};
use crate::dynamics::{ensemble_run, EnsembleSpec, SeedSpec};
use crate::error::{Error, Result};
use crate::netgen::{sample_static_model_directed, LayerSpec, NetworkSpec};
use crate::rng::{derive_seed, stream};
use crate::theory::{build_jacobian, DegreeModel, ModelEnsemble};

/// Monte Carlo part of the junior-fraction experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationGrid {
    pub z_values: Vec<f64>,
    pub fractions: Vec<f64>,
    pub replicas: usize,
    pub seeds: SeedSpec,
}

/// Static-model graph whose edges are split into junior (with probability
/// `fraction`) and senior loans, scanned over mean degree and fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JuniorFractionSpec {
    pub n: usize,
    pub gamma: f64,
    pub r1: f64,
    pub z: AxisRange,
    pub fractions: AxisRange,
    #[serde(default)]
    pub simulation: Option<SimulationGrid>,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryCell {
    pub fraction: f64,
    pub z: f64,
    pub lambda_max: f64,
}

/// Upper edge of the cascade region in `z` at a given junior fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub fraction: f64,
    /// Largest `z` where `λmax` falls through 1 (interpolated), `None` when
    /// the column is never super-critical. Equals the top of the `z` range
    /// if the region is still open there.
    pub height: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationCell {
    pub fraction: f64,
    pub z: f64,
    /// Mean cumulative default fractions (level ≥ 1, level ≥ 2).
    pub mean: Vec<f64>,
    pub stdev: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JuniorFractionResult {
    /// Row-major, `z` outer.
    pub theory: Vec<TheoryCell>,
    pub boundary: Vec<BoundaryPoint>,
    /// `λmax = 1` level curve in `(fraction, z)`.
    pub contour: Vec<Segment>,
    /// Junior fraction with the lowest boundary.
    pub optimal_fraction: Option<f64>,
    /// `(1 − f*) / f*`.
    pub implied_ratio: Option<f64>,
    pub simulation: Vec<SimulationCell>,
}

impl JuniorFractionResult {
    pub fn write_theory_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "fraction,z,lambda_max,cascade")?;
        for c in &self.theory {
            writeln!(out, "{:.16e},{:.16e},{:.16e},{}", c.fraction, c.z, c.lambda_max, (c.lambda_max > 1.0) as u8)?;
        }
        Ok(())
    }

    pub fn write_simulation_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "fraction,z,junior_default_mean,senior_default_mean,junior_default_stdev,senior_default_stdev")?;
        for c in &self.simulation {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                c.fraction, c.z, c.mean[0], c.mean[1], c.stdev[0], c.stdev[1]
            )?;
        }
        Ok(())
    }
}

/// Layer laws of one realized static-model graph split at `fraction`.
///
/// Each edge is junior with probability `fraction`, so per-node junior
/// counts are binomial thinnings of the realized degrees.
fn split_ensemble(out: &DegreeModel, inn: &DegreeModel, fraction: f64, r1: f64) -> Result<ModelEnsemble> {
    ModelEnsemble::new(
        vec![out.thinned(fraction)?, out.thinned(1.0 - fraction)?],
        vec![inn.thinned(fraction)?],
        r1,
    )
}

fn upper_crossing(zs: &[f64], lambdas: &[f64]) -> Option<f64> {
    let last = (0..lambdas.len()).rev().find(|&i| lambdas[i] >= 1.0)?;
    if last + 1 == lambdas.len() {
        return Some(zs[last]);
    }
    let (a, b) = (lambdas[last], lambdas[last + 1]);
    Some(zs[last] + (a - 1.0) / (a - b) * (zs[last + 1] - zs[last]))
}

/// Theory raster, boundary and (optionally) simulation grid.
///
/// For each `z` a single graph is drawn with seed
/// `derive_seed(master, THEORY_GRAPH, iz)`; its exact degree PMFs, thinned
/// by the fraction, give `λmax`. Simulation cell `c` runs an ensemble with
/// master seed `derive_seed(master, NETWORK, c)`.
pub fn junior_fraction_experiment(spec: &JuniorFractionSpec) -> Result<JuniorFractionResult> {
    spec.z.validate()?;
    spec.fractions.validate()?;
    if spec.fractions.lo < 0.0 || spec.fractions.hi > 1.0 {
        return Err(Error::invalid("fractions must lie in [0, 1]"));
    }
    if !(spec.r1 > 0.0) {
        return Err(Error::invalid("R1 must be positive"));
    }
    let zs = spec.z.values();
    let fs = spec.fractions.values();

    let laws = zs
        .par_iter()
        .enumerate()
        .map(|(iz, &z)| {
            let set = sample_static_model_directed(spec.n, spec.gamma, z, derive_seed(spec.master_seed, stream::THEORY_GRAPH, iz as u64))?;
            let mut out = vec![0u32; spec.n];
            let mut inn = vec![0u32; spec.n];
            for &(u, v) in &set.edges {
                out[u as usize] += 1;
                inn[v as usize] += 1;
            }
            Ok((DegreeModel::from_degree_sequence(&out)?, DegreeModel::from_degree_sequence(&inn)?))
        })
        .collect::<Result<Vec<_>>>()?;

    let theory = (0..zs.len() * fs.len())
        .into_par_iter()
        .map(|idx| {
            let (iz, jf) = (idx / fs.len(), idx % fs.len());
            let (out, inn) = &laws[iz];
            let ens = split_ensemble(out, inn, fs[jf], spec.r1)?;
            Ok(TheoryCell {
                fraction: fs[jf],
                z: zs[iz],
                lambda_max: build_jacobian(&ens)?.lambda_max(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let boundary: Vec<BoundaryPoint> = fs
        .iter()
        .enumerate()
        .map(|(jf, &fraction)| {
            let col: Vec<f64> = (0..zs.len()).map(|iz| theory[iz * fs.len() + jf].lambda_max).collect();
            BoundaryPoint {
                fraction,
                height: upper_crossing(&zs, &col),
            }
        })
        .collect();
    let optimal_fraction = boundary
        .iter()
        .filter_map(|b| b.height.map(|h| (b.fraction, h)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(f, _)| f);
    let implied_ratio = optimal_fraction.filter(|&f| f > 0.0).map(|f| (1.0 - f) / f);
    let shifted: Vec<f64> = theory.iter().map(|c| c.lambda_max - 1.0).collect();
    let contour = marching_squares(&shifted, &fs, &zs, 0.0);

    let simulation = match &spec.simulation {
        None => Vec::new(),
        Some(sim) => run_simulation(spec, sim)?,
    };

    Ok(JuniorFractionResult {
        theory,
        boundary,
        contour,
        optimal_fraction,
        implied_ratio,
        simulation,
    })
}

fn run_simulation(spec: &JuniorFractionSpec, sim: &SimulationGrid) -> Result<Vec<SimulationCell>> {
    let mut cells = Vec::with_capacity(sim.z_values.len() * sim.fractions.len());
    for (iz, &z) in sim.z_values.iter().enumerate() {
        for (jf, &fraction) in sim.fractions.iter().enumerate() {
            let index = (iz * sim.fractions.len() + jf) as u64;
            let ens = EnsembleSpec {
                network: NetworkSpec::Split {
                    n: spec.n,
                    base: LayerSpec::StaticModel {
                        gamma: spec.gamma,
                        mean_out_degree: z,
                    },
                    junior_fraction: fraction,
                },
                r1: spec.r1,
                seeds: sim.seeds.clone(),
                replicas: sim.replicas,
                master_seed: derive_seed(spec.master_seed, stream::NETWORK, index),
            };
            let summary = ensemble_run(&ens)?;
            cells.push(SimulationCell {
                fraction,
                z,
                mean: summary.mean,
                stdev: summary.stdev,
            });
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_interpolates_last_exit() {
        let zs = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(upper_crossing(&zs, &[0.5, 1.5, 1.5, 0.5, 0.2]), Some(2.5));
        assert_eq!(upper_crossing(&zs, &[0.5; 5]), None);
        assert_eq!(upper_crossing(&zs, &[0.5, 0.5, 0.5, 0.5, 1.2]), Some(4.0));
    }

    #[test]
    fn small_experiment_runs() {
        let spec = JuniorFractionSpec {
            n: 300,
            gamma: 2.83,
            r1: 0.18,
            z: AxisRange::new(0.0, 10.0, 6).unwrap(),
            fractions: AxisRange::new(0.0, 1.0, 5).unwrap(),
            simulation: Some(SimulationGrid {
                z_values: vec![4.0],
                fractions: vec![0.5],
                replicas: 2,
                seeds: SeedSpec::most_senior(2, 3),
            }),
            master_seed: 3,
        };
        let r = junior_fraction_experiment(&spec).unwrap();
        assert_eq!(r.theory.len(), 30);
        assert_eq!(r.boundary.len(), 5);
        assert_eq!(r.simulation.len(), 1);
        assert!(r.theory.iter().filter(|c| c.z == 0.0).all(|c| c.lambda_max == 0.0));
        assert_eq!(junior_fraction_experiment(&spec).unwrap(), r);
    }
}
