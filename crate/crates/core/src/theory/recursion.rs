use serde::{Deserialize, Serialize};

use super::ensemble::ModelEnsemble;
use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Degree-vector branches lighter than this are skipped; their mass is
/// reported.
const PRUNE: f64 = 1e-16;

/// End state of [`iterate_recursion`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    /// `phi[i-1]`: probability of default at level `≥ i`.
    pub phi: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `max_i |φ_{t+1} − φ_t|` at the last step.
    pub residual: f64,
    pub tolerance: f64,
    /// Probability mass of skipped degree configurations (per evaluation).
    pub truncated_mass: f64,
}

/// Pre-tabulated laws for repeated evaluation of the recursion map.
struct Tables {
    r1: f64,
    out_pmfs: Vec<Vec<f64>>,
    /// `shield[i]`: law of `Σ_{k<i} b_k`, for levels `i+1 = 1..=M`.
    shield: Vec<Vec<f64>>,
    truncated_mass: f64,
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Smallest integer `t` with `t as f64 > thr`.
fn first_integer_above(thr: f64) -> i64 {
    let mut t = thr.floor() as i64 + 1;
    while ((t - 1) as f64) > thr {
        t -= 1;
    }
    while (t as f64) <= thr {
        t += 1;
    }
    t
}

impl Tables {
    fn new(ens: &ModelEnsemble) -> Result<Self> {
        ens.validate()?;
        let m = ens.layer_count();
        let out_pmfs: Vec<Vec<f64>> = ens.out_models.iter().map(|d| d.pmf()).collect();
        let mut shield = vec![vec![1.0]];
        for k in 0..m.saturating_sub(1) {
            let next = convolve(&shield[k], &ens.in_models[k].pmf());
            shield.push(next);
        }
        let truncated_mass = 1.0
            - ens
                .out_models
                .iter()
                .chain(&ens.in_models[..m - 1])
                .map(|d| 1.0 - d.truncated_mass())
                .product::<f64>();
        Ok(Tables {
            r1: ens.r1,
            out_pmfs,
            shield,
            truncated_mass,
        })
    }

    /// `E[F_i]` for every level, with losses drawn as independent
    /// binomials with success probabilities `phi`, and the mass pruned.
    fn response_probabilities(&self, phi: &[f64]) -> (Vec<f64>, f64) {
        let m = self.out_pmfs.len();
        let mut acc = vec![0.0; m];
        let mut pruned = 0.0;
        self.descend(0, 1.0, 0, &[1.0], phi, &mut acc, &mut pruned);
        (acc, pruned)
    }

    #[allow(clippy::too_many_arguments)]
    fn descend(
        &self,
        layer: usize,
        prob: f64,
        total: usize,
        loss: &[f64],
        phi: &[f64],
        acc: &mut [f64],
        pruned: &mut f64,
    ) {
        if layer == self.out_pmfs.len() {
            if total > 0 {
                self.leaf(prob, total, loss, acc);
            }
            return;
        }
        let q = phi[layer];
        let mut cur = loss.to_vec();
        for (l, &p) in self.out_pmfs[layer].iter().enumerate() {
            if l > 0 {
                // cur ← cur * Bernoulli(q)
                cur.push(0.0);
                for t in (1..cur.len()).rev() {
                    cur[t] = cur[t] * (1.0 - q) + cur[t - 1] * q;
                }
                cur[0] *= 1.0 - q;
            }
            let w = prob * p;
            if w < PRUNE {
                *pruned += w;
                continue;
            }
            self.descend(layer + 1, w, total + l, &cur, phi, acc, pruned);
        }
    }

    fn leaf(&self, prob: f64, total: usize, loss: &[f64], acc: &mut [f64]) {
        // tail[x] = P[T ≥ x]
        let mut tail = vec![0.0; loss.len() + 1];
        for t in (0..loss.len()).rev() {
            tail[t] = tail[t + 1] + loss[t];
        }
        let t_min = first_integer_above(self.r1 * total as f64);
        for (a, shield) in acc.iter_mut().zip(&self.shield) {
            let mut s = 0.0;
            for (c, &pc) in shield.iter().enumerate() {
                let x = t_min + c as i64;
                if x as usize >= loss.len() {
                    break;
                }
                s += pc * tail[x.max(0) as usize];
            }
            *a += prob * s;
        }
    }
}

fn check_phi(phi: &[f64], m: usize, what: &str) -> Result<()> {
    if phi.len() != m {
        return Err(Error::invalid(format!("{what} has {} entries for {m} layers", phi.len())));
    }
    if phi.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::invalid(format!("{what} entries must lie in [0, 1]")));
    }
    Ok(())
}

/// One application of the recursion: `g_i(φ) = φ0_i + (1 − φ0_i) E[F_i]`.
pub fn recursion_map(ens: &ModelEnsemble, phi0: &[f64], phi: &[f64]) -> Result<Vec<f64>> {
    let tables = Tables::new(ens)?;
    check_phi(phi0, ens.layer_count(), "phi0")?;
    check_phi(phi, ens.layer_count(), "phi")?;
    let (f, _) = tables.response_probabilities(phi);
    Ok(phi0.iter().zip(f).map(|(&s, f)| s + (1.0 - s) * f).collect())
}

/// Iterates the recursion from `φ0` until successive iterates differ by
/// less than `tol` in every component, or `max_iter` steps.
pub fn iterate_recursion(ens: &ModelEnsemble, phi0: &[f64], tol: f64, max_iter: usize) -> Result<FixedPoint> {
    let m = ens.layer_count();
    check_phi(phi0, m, "phi0")?;
    if phi0.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::invalid("phi0 must be non-increasing in seniority"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let tables = Tables::new(ens)?;
    let mut phi = phi0.to_vec();
    let mut residual = f64::INFINITY;
    let mut pruned_max: f64 = 0.0;
    let mut iterations = 0;
    while iterations < max_iter {
        let (f, pruned) = tables.response_probabilities(&phi);
        pruned_max = pruned_max.max(pruned);
        let next: Vec<f64> = phi0
            .iter()
            .zip(f)
            .map(|(&s, f)| (s + (1.0 - s) * f).clamp(0.0, 1.0))
            .collect();
        residual = next
            .iter()
            .zip(&phi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        phi = next;
        iterations += 1;
        if residual < tol {
            break;
        }
    }
    Ok(FixedPoint {
        phi,
        iterations,
        converged: residual < tol,
        residual,
        tolerance: tol,
        truncated_mass: tables.truncated_mass + pruned_max,
    })
}
