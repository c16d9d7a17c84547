//! Per-command JSON configs. Every field has a default, so an omitted
//! `--config` runs the desk-scale recipe.

use serde::{Deserialize, Serialize};
use seniority_cascade::dynamics::SeedSpec;
use seniority_cascade::netgen::{LayerSpec, NetworkSpec};
use seniority_cascade::regions::{AxisRange, GridSpec};
use seniority_cascade::theory::{DegreeModel, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE};

fn duplex_er(n: usize, junior: f64, senior: f64) -> NetworkSpec {
    NetworkSpec::Layers {
        n,
        layers: vec![
            LayerSpec::ErdosRenyi { mean_out_degree: junior },
            LayerSpec::ErdosRenyi { mean_out_degree: senior },
        ],
    }
}

fn sigma_axis() -> AxisRange {
    AxisRange {
        lo: 0.0,
        hi: 6.0,
        count: 121,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateConfig {
    pub network: NetworkSpec,
    pub seed: u64,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            network: duplex_er(1000, 2.0, 5.0),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub network: NetworkSpec,
    pub r1: f64,
    pub seeds: SeedSpec,
    pub replicas: usize,
    pub master_seed: u64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            network: duplex_er(10_000, 2.0, 5.0),
            r1: 0.18,
            seeds: SeedSpec::most_senior(2, 5),
            replicas: 10,
            master_seed: 0,
        }
    }
}

/// Either Poisson layers given by their means, or explicit out/in laws.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedPointConfig {
    pub r1: f64,
    pub poisson_means: Option<Vec<f64>>,
    pub out_models: Option<Vec<DegreeModel>>,
    pub in_models: Option<Vec<DegreeModel>>,
    pub phi0: Vec<f64>,
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        FixedPointConfig {
            r1: 0.18,
            poisson_means: None,
            out_models: None,
            in_models: None,
            phi0: vec![5e-4, 5e-4],
            tolerance: DEFAULT_TOLERANCE,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionConfig {
    pub r1: f64,
    pub grid: GridSpec,
}

impl Default for RegionConfig {
    fn default() -> Self {
        let axis = AxisRange {
            lo: 0.0,
            hi: 10.0,
            count: 300,
        };
        RegionConfig {
            r1: 0.18,
            grid: GridSpec { x: axis, y: axis },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowConfig {
    pub sigma: f64,
    pub r1: f64,
    pub r_max: f64,
    pub dr: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            sigma: 1.0,
            r1: 0.18,
            r_max: 12.0,
            dr: 0.01,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimalRatioConfig {
    pub r1: f64,
    pub sigma_grid: AxisRange,
    pub r_max: f64,
    pub dr: f64,
}

impl Default for OptimalRatioConfig {
    fn default() -> Self {
        OptimalRatioConfig {
            r1: 0.18,
            sigma_grid: sigma_axis(),
            r_max: 12.0,
            dr: 0.01,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub r1_values: Vec<f64>,
    pub sigma_grid: AxisRange,
    pub r_max: f64,
    pub dr: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            r1_values: (0..=20).map(|i| 0.1 + 0.01 * i as f64).collect(),
            sigma_grid: sigma_axis(),
            r_max: 20.0,
            dr: 0.01,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MLayerConfig {
    pub m_list: Vec<usize>,
    pub r1: AxisRange,
    pub z: AxisRange,
}

impl Default for MLayerConfig {
    fn default() -> Self {
        MLayerConfig {
            m_list: vec![1, 2, 3, 4],
            r1: AxisRange {
                lo: 0.002,
                hi: 0.4,
                count: 200,
            },
            z: AxisRange {
                lo: 0.0,
                hi: 20.0,
                count: 200,
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub z_values: Vec<f64>,
    pub fractions: Vec<f64>,
    pub replicas: usize,
    pub seeds: SeedSpec,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            z_values: vec![8.5],
            fractions: vec![0.05, 0.3, 0.95],
            replicas: 30,
            seeds: SeedSpec::most_senior(2, 10),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JuniorFractionConfig {
    pub n: usize,
    pub gamma: f64,
    pub r1: f64,
    pub z: AxisRange,
    pub fractions: AxisRange,
    pub simulation: Option<SimulationConfig>,
    pub master_seed: u64,
}

impl Default for JuniorFractionConfig {
    fn default() -> Self {
        JuniorFractionConfig {
            n: 2400,
            gamma: 2.83,
            r1: 0.18,
            z: AxisRange {
                lo: 0.0,
                hi: 20.0,
                count: 81,
            },
            fractions: AxisRange {
                lo: 0.0,
                hi: 1.0,
                count: 101,
            },
            simulation: None,
            master_seed: 0,
        }
    }
}
