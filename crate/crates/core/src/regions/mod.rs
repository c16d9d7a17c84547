//! Cascade regions over parameter grids, cascade windows along rays of fixed
//! seniority ratio, and the experiments built on them.

mod contour;
mod junior;
mod mlayer;
mod window;

pub use contour::{marching_squares, Segment};
pub use junior::{
    junior_fraction_experiment, BoundaryPoint, JuniorFractionResult, JuniorFractionSpec, SimulationCell, SimulationGrid,
    TheoryCell,
};
pub use mlayer::{m_layer_split_regions, MLayerRaster};
pub use window::{
    cascade_window, duplex_er_lambda, optimal_seniority_ratio, sweep_thresholds, CascadeWindow, OptimalRatio,
    ThresholdJump, ThresholdSweep,
};

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::theory::{cascade_conditions, CascadeConditions, ModelEnsemble};

/// Evenly spaced inclusive range `lo, …, hi` with `count` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisRange {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl AxisRange {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        let a = AxisRange { lo, hi, count };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::invalid("axis needs at least one point"));
        }
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi) {
            return Err(Error::invalid(format!("bad axis range [{}, {}]", self.lo, self.hi)));
        }
        if self.count == 1 && self.lo != self.hi {
            return Err(Error::invalid("a single-point axis needs lo == hi"));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| if i + 1 == self.count { self.hi } else { self.lo + step * i as f64 })
            .collect()
    }
}

/// Two-axis raster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x: AxisRange,
    pub y: AxisRange,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        self.x.validate()?;
        self.y.validate()
    }
}

/// One evaluated grid cell of a duplex region scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionCell {
    pub junior_mean: f64,
    pub senior_mean: f64,
    pub lambda_max: f64,
    pub multiplex: bool,
    pub junior_only: bool,
    pub senior_only: bool,
}

/// Cascade conditions of independent Poisson junior/senior layers over a
/// grid of mean degrees (`x` = junior, `y` = senior). Cells are stored
/// row-major with `y` outer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionScan {
    pub r1: f64,
    pub grid: GridSpec,
    pub cells: Vec<RegionCell>,
}

impl RegionScan {
    pub fn cell(&self, ix: usize, iy: usize) -> &RegionCell {
        &self.cells[iy * self.grid.x.count + ix]
    }

    /// Cells where a single-layer condition holds but the multiplex one
    /// does not (always empty for a valid scan).
    pub fn containment_violations(&self) -> usize {
        self.cells
            .iter()
            .filter(|c| (c.junior_only || c.senior_only) && !c.multiplex)
            .count()
    }

    pub fn multiplex_count(&self) -> usize {
        self.cells.iter().filter(|c| c.multiplex).count()
    }

    /// Marching-squares boundary of `λmax = 1`.
    pub fn boundary(&self) -> Vec<Segment> {
        let vals: Vec<f64> = self.cells.iter().map(|c| c.lambda_max - 1.0).collect();
        marching_squares(&vals, &self.grid.x.values(), &self.grid.y.values(), 0.0)
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "junior_mean,senior_mean,lambda_max,multiplex,junior_only,senior_only")?;
        for c in &self.cells {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{},{},{}",
                c.junior_mean, c.senior_mean, c.lambda_max, c.multiplex as u8, c.junior_only as u8, c.senior_only as u8
            )?;
        }
        Ok(())
    }
}

/// Evaluates the duplex cascade conditions at every grid cell, with
/// Erdős–Rényi layers (Poisson in- and out-degrees of the same mean).
pub fn scan_region(grid: &GridSpec, r1: f64) -> Result<RegionScan> {
    grid.validate()?;
    if grid.x.lo < 0.0 || grid.y.lo < 0.0 {
        return Err(Error::invalid("mean degrees must be >= 0"));
    }
    let xs = grid.x.values();
    let ys = grid.y.values();
    let cells = (0..xs.len() * ys.len())
        .into_par_iter()
        .map(|idx| {
            let (x, y) = (xs[idx % xs.len()], ys[idx / xs.len()]);
            let ens = ModelEnsemble::erdos_renyi(&[x, y], r1)?;
            let CascadeConditions {
                multiplex,
                per_layer_only,
                lambda_max,
                ..
            } = cascade_conditions(&ens)?;
            Ok(RegionCell {
                junior_mean: x,
                senior_mean: y,
                lambda_max,
                multiplex,
                junior_only: per_layer_only[0],
                senior_only: per_layer_only[1],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RegionScan { r1, grid: *grid, cells })
}
