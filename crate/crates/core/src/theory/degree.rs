use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};

pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-12;

fn default_tail_tolerance() -> f64 {
    DEFAULT_TAIL_TOLERANCE
}

/// Probability law of a per-layer degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DegreeLaw {
    Poisson { mean: f64 },
    /// `pmf[k]` is the probability of degree `k`.
    Empirical { pmf: Vec<f64> },
    Delta { k: u32 },
    /// Poisson mixture whose rate is Pareto with exponent `gamma` and the
    /// given mean, truncated at `cutoff` and renormalized. The degree tail
    /// decays like `k^-gamma`.
    PowerLawTail { gamma: f64, mean: f64, cutoff: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegreeModel {
    pub law: DegreeLaw,
    /// Probability mass the finite support may drop.
    #[serde(default = "default_tail_tolerance")]
    pub tail_tolerance: f64,
}

fn poisson_ln_pmf(k: usize, mean: f64) -> f64 {
    k as f64 * mean.ln() - mean - ln_gamma(k as f64 + 1.0)
}

fn poisson_pmf(k: usize, mean: f64) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    poisson_ln_pmf(k, mean).exp()
}

/// `P[Poisson(mean) > k]`.
fn poisson_tail(k: usize, mean: f64) -> f64 {
    if mean == 0.0 {
        0.0
    } else {
        gamma_lr(k as f64 + 1.0, mean)
    }
}

impl DegreeModel {
    pub fn new(law: DegreeLaw) -> Result<Self> {
        Self::with_tolerance(law, DEFAULT_TAIL_TOLERANCE)
    }

    pub fn with_tolerance(law: DegreeLaw, tail_tolerance: f64) -> Result<Self> {
        let m = DegreeModel { law, tail_tolerance };
        m.validate()?;
        Ok(m)
    }

    pub fn poisson(mean: f64) -> Result<Self> {
        Self::new(DegreeLaw::Poisson { mean })
    }

    pub fn delta(k: u32) -> Self {
        DegreeModel {
            law: DegreeLaw::Delta { k },
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
        }
    }

    pub fn empirical(pmf: Vec<f64>) -> Result<Self> {
        Self::new(DegreeLaw::Empirical { pmf })
    }

    pub fn power_law_tail(gamma: f64, mean: f64, cutoff: u32) -> Result<Self> {
        Self::new(DegreeLaw::PowerLawTail { gamma, mean, cutoff })
    }

    /// Exact PMF of an observed degree sequence.
    pub fn from_degree_sequence(degrees: &[u32]) -> Result<Self> {
        if degrees.is_empty() {
            return Err(Error::invalid("empty degree sequence"));
        }
        let max = *degrees.iter().max().unwrap() as usize;
        let mut pmf = vec![0.0; max + 1];
        for &d in degrees {
            pmf[d as usize] += 1.0;
        }
        let n = degrees.len() as f64;
        pmf.iter_mut().for_each(|p| *p /= n);
        Self::empirical(pmf)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tail_tolerance > 0.0 && self.tail_tolerance < 1.0) {
            return Err(Error::invalid("tail_tolerance must lie in (0, 1)"));
        }
        match &self.law {
            DegreeLaw::Poisson { mean } => {
                if !(mean.is_finite() && *mean >= 0.0) {
                    return Err(Error::invalid(format!("Poisson mean must be finite and >= 0, got {mean}")));
                }
            }
            DegreeLaw::Empirical { pmf } => {
                if pmf.is_empty() || pmf.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                    return Err(Error::invalid("empirical pmf must be a non-empty list of probabilities"));
                }
                let total: f64 = pmf.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::invalid(format!("empirical pmf sums to {total}, not 1")));
                }
            }
            DegreeLaw::Delta { .. } => {}
            DegreeLaw::PowerLawTail { gamma, mean, cutoff } => {
                if !(*gamma > 2.0 && gamma.is_finite()) {
                    return Err(Error::invalid(format!("power-law exponent must exceed 2, got {gamma}")));
                }
                if !(*mean > 0.0 && mean.is_finite()) {
                    return Err(Error::invalid("power-law mean must be positive"));
                }
                if *cutoff == 0 {
                    return Err(Error::invalid("power-law cutoff must be positive"));
                }
            }
        }
        Ok(())
    }

    /// Largest degree carried by the truncated support.
    pub fn support_max(&self) -> usize {
        match &self.law {
            DegreeLaw::Poisson { mean } => {
                if *mean == 0.0 {
                    return 0;
                }
                let mut k = (mean + 12.0 * mean.sqrt() + 20.0).ceil() as usize;
                while poisson_tail(k, *mean) >= self.tail_tolerance {
                    k += 1;
                }
                k
            }
            DegreeLaw::Empirical { pmf } => pmf.len() - 1,
            DegreeLaw::Delta { k } => *k as usize,
            DegreeLaw::PowerLawTail { cutoff, .. } => *cutoff as usize,
        }
    }

    /// PMF on `0..=support_max()`.
    pub fn pmf(&self) -> Vec<f64> {
        self.pmf_upto(self.support_max())
    }

    /// PMF on `0..=kmax`. Poisson laws are exact at every `k`; other laws
    /// are zero beyond their support.
    pub fn pmf_upto(&self, kmax: usize) -> Vec<f64> {
        match &self.law {
            DegreeLaw::Poisson { mean } => (0..=kmax).map(|k| poisson_pmf(k, *mean)).collect(),
            DegreeLaw::Empirical { pmf } => (0..=kmax).map(|k| pmf.get(k).copied().unwrap_or(0.0)).collect(),
            DegreeLaw::Delta { k } => (0..=kmax).map(|j| if j == *k as usize { 1.0 } else { 0.0 }).collect(),
            DegreeLaw::PowerLawTail { gamma, mean, cutoff } => {
                let (mut p, _) = power_law_tail_pmf(*gamma, *mean, *cutoff as usize);
                p.resize(kmax + 1, 0.0);
                p
            }
        }
    }

    /// Probability mass dropped by the truncated support (before any
    /// renormalization).
    pub fn truncated_mass(&self) -> f64 {
        match &self.law {
            DegreeLaw::Poisson { mean } => poisson_tail(self.support_max(), *mean),
            DegreeLaw::PowerLawTail { gamma, mean, cutoff } => {
                power_law_tail_pmf(*gamma, *mean, *cutoff as usize).1
            }
            _ => 0.0,
        }
    }

    pub fn mean(&self) -> f64 {
        match &self.law {
            DegreeLaw::Poisson { mean } => *mean,
            DegreeLaw::Delta { k } => *k as f64,
            _ => self.pmf().iter().enumerate().map(|(k, p)| k as f64 * p).sum(),
        }
    }

    /// `P[degree = 0]`.
    pub fn p0(&self) -> f64 {
        self.pmf_upto(0)[0]
    }

    /// Law after keeping each unit independently with probability `keep`.
    pub fn thinned(&self, keep: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&keep) {
            return Err(Error::invalid(format!("thinning probability must lie in [0, 1], got {keep}")));
        }
        if let DegreeLaw::Poisson { mean } = self.law {
            return Self::with_tolerance(DegreeLaw::Poisson { mean: mean * keep }, self.tail_tolerance);
        }
        let p = self.pmf();
        if keep == 1.0 {
            return Self::with_tolerance(DegreeLaw::Empirical { pmf: normalized(p) }, self.tail_tolerance);
        }
        if keep == 0.0 {
            return Self::with_tolerance(DegreeLaw::Empirical { pmf: vec![1.0] }, self.tail_tolerance);
        }
        let mut out = vec![0.0; p.len()];
        for (k, &pk) in p.iter().enumerate() {
            if pk == 0.0 {
                continue;
            }
            for (o, b) in out.iter_mut().zip(binomial_row(k, keep)) {
                *o += pk * b;
            }
        }
        Self::with_tolerance(DegreeLaw::Empirical { pmf: normalized(out) }, self.tail_tolerance)
    }

    /// Size-biased law `k p_k / <k>` (degree of the node at the end of a
    /// uniformly random edge).
    pub fn size_biased(&self) -> Result<Self> {
        let p = self.pmf();
        let m: f64 = p.iter().enumerate().map(|(k, pk)| k as f64 * pk).sum();
        if !(m > 0.0) {
            return Err(Error::invalid("size-biased law needs a positive mean"));
        }
        let q: Vec<f64> = p.iter().enumerate().map(|(k, pk)| k as f64 * pk / m).collect();
        Self::with_tolerance(DegreeLaw::Empirical { pmf: normalized(q) }, self.tail_tolerance)
    }
}

/// `Binomial(k, q)` PMF for `0 < q < 1`, built outward from the mode so
/// that large `k` does not underflow the whole row.
fn binomial_row(k: usize, q: f64) -> Vec<f64> {
    let mut row = vec![0.0; k + 1];
    let mode = (((k + 1) as f64 * q).floor() as usize).min(k);
    row[mode] = (ln_binomial(k as u64, mode as u64) + mode as f64 * q.ln() + (k - mode) as f64 * (1.0 - q).ln()).exp();
    let odds = q / (1.0 - q);
    for j in mode..k {
        row[j + 1] = row[j] * (k - j) as f64 / (j + 1) as f64 * odds;
        if row[j + 1] == 0.0 {
            break;
        }
    }
    for j in (1..=mode).rev() {
        row[j - 1] = row[j] * j as f64 / (k - j + 1) as f64 / odds;
        if row[j - 1] == 0.0 {
            break;
        }
    }
    row
}

fn normalized(mut p: Vec<f64>) -> Vec<f64> {
    let s: f64 = p.iter().sum();
    if s > 0.0 {
        p.iter_mut().for_each(|x| *x /= s);
    }
    while p.len() > 1 && *p.last().unwrap() == 0.0 {
        p.pop();
    }
    p
}

/// Renormalized PMF on `0..=cutoff` and the mass that fell beyond it.
///
/// `p_k = ∫_0^∞ Poi(k; c e^t) (γ−1) e^{−(γ−1)t} dt` with
/// `c = mean (γ−2)/(γ−1)`, evaluated by composite Simpson in `t`.
fn power_law_tail_pmf(gamma: f64, mean: f64, cutoff: usize) -> (Vec<f64>, f64) {
    let c = mean * (gamma - 2.0) / (gamma - 1.0);
    // Past this rate every k <= cutoff has negligible Poisson weight.
    let t_max = ((3.0 * (cutoff as f64 + 30.0)) / c).ln().max(1.0);
    let steps = 8192usize;
    let h = t_max / steps as f64;
    let mut p = vec![0.0; cutoff + 1];
    for s in 0..=steps {
        let t = s as f64 * h;
        let w = if s == 0 || s == steps {
            1.0
        } else if s % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let rate = c * t.exp();
        let ln_density = (gamma - 1.0).ln() - (gamma - 1.0) * t;
        for (k, pk) in p.iter_mut().enumerate() {
            *pk += w * (poisson_ln_pmf(k, rate) + ln_density).exp();
        }
    }
    p.iter_mut().for_each(|x| *x *= h / 3.0);
    let total: f64 = p.iter().sum();
    let dropped = (1.0 - total).max(0.0);
    p.iter_mut().for_each(|x| *x /= total);
    (p, dropped)
}
