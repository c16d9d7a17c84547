use serde::{Deserialize, Serialize};

use super::degree::DegreeModel;
use crate::error::{Error, Result};

/// Degree laws of an `M`-layer multiplex plus the junior threshold `R1`.
///
/// `in_models[k]` is the borrowing (in-degree) law of layer `k`; only layers
/// `0..M-1` enter any formula, so the senior in-model may be omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEnsemble {
    pub out_models: Vec<DegreeModel>,
    pub in_models: Vec<DegreeModel>,
    pub r1: f64,
}

impl ModelEnsemble {
    pub fn new(out_models: Vec<DegreeModel>, in_models: Vec<DegreeModel>, r1: f64) -> Result<Self> {
        let e = ModelEnsemble {
            out_models,
            in_models,
            r1,
        };
        e.validate()?;
        Ok(e)
    }

    /// Independent Poisson layers with the given means; in-degrees of each
    /// layer share its out-degree mean.
    pub fn erdos_renyi(means: &[f64], r1: f64) -> Result<Self> {
        let models = means
            .iter()
            .map(|&m| DegreeModel::poisson(m))
            .collect::<Result<Vec<_>>>()?;
        Self::new(models.clone(), models, r1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.out_models.is_empty() {
            return Err(Error::invalid("ensemble needs at least one layer"));
        }
        if !(self.r1 > 0.0 && self.r1.is_finite()) {
            return Err(Error::invalid(format!("R1 must be positive and finite, got {}", self.r1)));
        }
        if self.in_models.len() + 1 < self.out_models.len() {
            return Err(Error::invalid(format!(
                "{} layers need at least {} in-degree models, got {}",
                self.out_models.len(),
                self.out_models.len() - 1,
                self.in_models.len()
            )));
        }
        for m in self.out_models.iter().chain(&self.in_models) {
            m.validate()?;
        }
        Ok(())
    }

    pub fn layer_count(&self) -> usize {
        self.out_models.len()
    }

    /// Largest total loan count `L` with `R1 · L < 1`: banks this small
    /// default after losing a single loan.
    pub fn max_fragile_total(&self) -> Option<usize> {
        max_fragile_total(self.r1)
    }
}

/// Largest integer `L ≥ 0` with `R1 · L < 1`, i.e. `⌈1/R1⌉ − 1` away from
/// float ties. `None` if `R1` is not positive.
pub fn max_fragile_total(r1: f64) -> Option<usize> {
    if !(r1 > 0.0) {
        return None;
    }
    let mut l = ((1.0 / r1).ceil() as usize).saturating_sub(1);
    while l > 0 && (l as f64) * r1 >= 1.0 {
        l -= 1;
    }
    while ((l + 1) as f64) * r1 < 1.0 {
        l += 1;
    }
    Some(l)
}

/// A truncated sum together with the probability mass it skipped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncated {
    pub value: f64,
    /// Upper bound on the probability outside the enumerated support; the
    /// absolute error is at most this times `sup |weight|` there.
    pub truncated_mass: f64,
}

fn combined_tail(models: &[&DegreeModel]) -> f64 {
    1.0 - models.iter().map(|m| 1.0 - m.truncated_mass()).product::<f64>()
}

/// `E[w(l⃗)]` over the product of out-degree laws.
pub fn truncated_expectation<F>(ens: &ModelEnsemble, weight: F) -> Result<Truncated>
where
    F: Fn(&[usize]) -> f64,
{
    let pmfs: Vec<Vec<f64>> = ens.out_models.iter().map(|m| m.pmf()).collect();
    let mut idx = vec![0usize; pmfs.len()];
    let value = product_sum(&pmfs, &mut idx, 0, 1.0, &|l| weight(l))?;
    let tail = combined_tail(&ens.out_models.iter().collect::<Vec<_>>());
    Ok(Truncated { value, truncated_mass: tail })
}

/// `E[w(l⃗, b⃗)]` with `b⃗` over the in-degree laws of layers `0..M-1`.
pub fn truncated_expectation_with_borrowings<F>(ens: &ModelEnsemble, weight: F) -> Result<Truncated>
where
    F: Fn(&[usize], &[usize]) -> f64,
{
    let m = ens.layer_count();
    let ins = &ens.in_models[..m - 1];
    let pmfs: Vec<Vec<f64>> = ens.out_models.iter().chain(ins).map(|d| d.pmf()).collect();
    let mut idx = vec![0usize; pmfs.len()];
    let value = product_sum(&pmfs, &mut idx, 0, 1.0, &|v| weight(&v[..m], &v[m..]))?;
    let tail = combined_tail(&ens.out_models.iter().chain(ins).collect::<Vec<_>>());
    Ok(Truncated { value, truncated_mass: tail })
}

fn product_sum(
    pmfs: &[Vec<f64>],
    idx: &mut Vec<usize>,
    depth: usize,
    prob: f64,
    weight: &dyn Fn(&[usize]) -> f64,
) -> Result<f64> {
    if depth == pmfs.len() {
        let w = weight(idx);
        if !w.is_finite() {
            return Err(Error::NonFiniteWeight { loans: idx.clone() });
        }
        return Ok(prob * w);
    }
    let mut acc = 0.0;
    for (k, &p) in pmfs[depth].iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        idx[depth] = k;
        acc += product_sum(pmfs, idx, depth + 1, prob * p, weight)?;
    }
    Ok(acc)
}
