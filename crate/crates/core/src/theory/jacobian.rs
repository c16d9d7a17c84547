use nalgebra::{DMatrix, DVector, Schur};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use super::degree::{DegreeLaw, DegreeModel};
use super::ensemble::{max_fragile_total, ModelEnsemble};
use crate::error::{Error, Result};

/// Which construction produced a Jacobian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianKind {
    /// Linearized recursion of the seniority model (rank one).
    Baseline,
    /// Closed form for independent Poisson layers (rank one).
    ClosedFormEr,
    /// Two layers with an exogenous senior threshold.
    Exogenous,
    /// Two undirected layers (excess-degree laws).
    Undirected,
    General,
}

impl JacobianKind {
    pub fn is_rank_one(self) -> bool {
        matches!(self, JacobianKind::Baseline | JacobianKind::ClosedFormEr)
    }
}

/// Square linearization of a default recursion at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobianMatrix {
    pub dim: usize,
    /// Row-major entries.
    pub entries: Vec<f64>,
    pub kind: JacobianKind,
    /// Probability mass outside the enumerated degree support.
    pub truncated_mass: f64,
}

impl JacobianMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>, kind: JacobianKind) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid("Jacobian must be a non-empty square matrix"));
        }
        Ok(JacobianMatrix {
            dim,
            entries: rows.into_iter().flatten().collect(),
            kind,
            truncated_mass: 0.0,
        })
    }

    fn zeros(dim: usize, kind: JacobianKind) -> Self {
        JacobianMatrix {
            dim,
            entries: vec![0.0; dim * dim],
            kind,
            truncated_mass: 0.0,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.dim + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    pub fn determinant(&self) -> f64 {
        DMatrix::from_row_slice(self.dim, self.dim, &self.entries).determinant()
    }

    /// Largest eigenvalue. Rank-one kinds return the trace; 2×2 matrices
    /// use the quadratic formula; larger ones take the largest modulus of
    /// the complex spectrum (the Perron root of a nonnegative matrix).
    pub fn lambda_max(&self) -> f64 {
        if self.kind.is_rank_one() {
            return self.trace();
        }
        match self.dim {
            1 => self.entries[0],
            2 => {
                let (a, b, c, d) = (self.get(0, 0), self.get(0, 1), self.get(1, 0), self.get(1, 1));
                let disc = ((a - d) * (a - d) + 4.0 * b * c).max(0.0);
                (a + d + disc.sqrt()) / 2.0
            }
            n => {
                let a = DMatrix::from_row_slice(n, n, &self.entries);
                match Schur::try_new(a.clone(), f64::EPSILON, 10_000) {
                    Some(s) => s.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max),
                    None => perron_root(&a),
                }
            }
        }
    }
}

/// Spectral radius of a nonnegative matrix by power iteration on `A + I`,
/// whose dominant eigenvalue `ρ + 1` is isolated even for cyclic `A`.
fn perron_root(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let shifted = a + DMatrix::<f64>::identity(n, n);
    let mut v = DVector::from_element(n, 1.0 / n as f64);
    let mut rho = 0.0;
    for _ in 0..100_000 {
        let w = &shifted * &v;
        let norm = w.sum();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm - 1.0;
        v = w / norm;
        if (next - rho).abs() <= 1e-15 * next.abs().max(1.0) {
            return next.max(0.0);
        }
        rho = next;
    }
    rho.max(0.0)
}

/// `Σ_{l⃗ : Σl ≤ max_total} Π p_s(l_s) · w(l⃗)`.
fn restricted_sum(pmfs: &[Vec<f64>], max_total: usize, w: &dyn Fn(&[usize]) -> f64) -> f64 {
    fn go(pmfs: &[Vec<f64>], budget: usize, depth: usize, prob: f64, l: &mut Vec<usize>, w: &dyn Fn(&[usize]) -> f64) -> f64 {
        if depth == pmfs.len() {
            return prob * w(l);
        }
        let mut acc = 0.0;
        for (k, &p) in pmfs[depth].iter().enumerate().take(budget + 1) {
            if p == 0.0 {
                continue;
            }
            l[depth] = k;
            acc += go(pmfs, budget - k, depth + 1, prob * p, l, w);
        }
        acc
    }
    let mut l = vec![0; pmfs.len()];
    go(pmfs, max_total, 0, 1.0, &mut l, w)
}

/// Mass the model's PMF misses on `0..=k` relative to its law.
fn missing_mass(m: &DegreeModel) -> f64 {
    match m.law {
        DegreeLaw::Poisson { .. } => 0.0,
        _ => m.truncated_mass(),
    }
}

/// `E[l_j · 1{R1 Σl < 1}]` for every layer `j`.
fn fragile_loan_means(models: &[DegreeModel], r1: f64) -> Result<(Vec<f64>, f64)> {
    let k = max_fragile_total(r1).ok_or_else(|| Error::invalid("threshold must be positive"))?;
    let pmfs: Vec<Vec<f64>> = models.iter().map(|m| m.pmf_upto(k)).collect();
    let means = (0..models.len())
        .map(|j| restricted_sum(&pmfs, k, &|l| l[j] as f64))
        .collect();
    let tail = 1.0 - models.iter().map(|m| 1.0 - missing_mass(m)).product::<f64>();
    Ok((means, tail))
}

/// `J_ij = Π_{k<i} P[b_k = 0] · E[l_j · 1{R1 Σ_α l_α < 1}]`.
///
/// Row `i` is the response at level `i+1`: the bank must owe nothing on
/// every more junior layer for one lost loan to reach that level.
pub fn build_jacobian(ens: &ModelEnsemble) -> Result<JacobianMatrix> {
    ens.validate()?;
    let m = ens.layer_count();
    let (col, tail) = fragile_loan_means(&ens.out_models, ens.r1)?;
    let mut j = JacobianMatrix::zeros(m, JacobianKind::Baseline);
    let mut factor = 1.0;
    for i in 0..m {
        if i > 0 {
            factor *= ens.in_models[i - 1].p0();
        }
        for (c, v) in col.iter().enumerate() {
            j.set(i, c, factor * v);
        }
    }
    j.truncated_mass = tail;
    Ok(j)
}

/// Closed form of [`build_jacobian`] for independent Poisson layers whose
/// in- and out-degrees share the mean:
/// `J_ij = <l_j> · Q(K, Σ<l>) · exp(−Σ_{k<i} <l_k>)` with `K` the largest
/// fragile total and `Q` the regularized upper incomplete gamma function,
/// `Q(K, y) = P[Poisson(y) ≤ K − 1]`.
pub fn jacobian_m_er_closed_form(means: &[f64], r1: f64) -> Result<JacobianMatrix> {
    if means.is_empty() {
        return Err(Error::invalid("need at least one layer"));
    }
    if means.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
        return Err(Error::invalid("mean degrees must be finite and >= 0"));
    }
    let k = max_fragile_total(r1).ok_or_else(|| Error::invalid("R1 must be positive"))?;
    if k == 0 {
        return Err(Error::invalid(format!(
            "R1 = {r1} leaves no bank fragile to a single loss (incomplete-gamma order must be positive)"
        )));
    }
    let total: f64 = means.iter().sum();
    let q = if total == 0.0 { 1.0 } else { gamma_ur(k as f64, total) };
    let m = means.len();
    let mut j = JacobianMatrix::zeros(m, JacobianKind::ClosedFormEr);
    let mut shield = 0.0;
    for i in 0..m {
        if i > 0 {
            shield += means[i - 1];
        }
        let factor = q * (-shield).exp();
        for (c, &mean) in means.iter().enumerate() {
            j.set(i, c, mean * factor);
        }
    }
    Ok(j)
}

/// Two-layer Jacobian when the senior threshold `R_S` is exogenous:
/// `Ĵ_ij = E[l_j · 1{1 > R_i (l_J + l_S)}]`.
pub fn build_jacobian_exogenous(out_models: &[DegreeModel], r_j: f64, r_s: f64) -> Result<JacobianMatrix> {
    if out_models.len() != 2 {
        return Err(Error::invalid("exogenous-threshold Jacobian needs exactly two layers"));
    }
    if !(0.0 < r_j && r_j <= r_s && r_s <= 1.0) {
        return Err(Error::invalid(format!("thresholds must satisfy 0 < R_J <= R_S <= 1, got {r_j}, {r_s}")));
    }
    let (row_j, tail) = fragile_loan_means(out_models, r_j)?;
    let (row_s, _) = fragile_loan_means(out_models, r_s)?;
    let mut j = JacobianMatrix::from_rows(vec![row_j, row_s], JacobianKind::Exogenous)?;
    j.truncated_mass = tail;
    Ok(j)
}

/// Two-layer Jacobian for undirected layers. The node reached along a
/// layer-α edge has the size-biased law `k p_k / <k>` in layer α:
///
/// ```text
/// [ E_J[(l_J−1)·1]        E_J[l_S·1]             ]
/// [ p0_J · E_S[l_J·1]     p0_J · E_S[(l_S−1)·1]  ]
/// ```
///
/// with `1 = 1{1 > R_J (l_J + l_S)}`.
pub fn build_jacobian_undirected(models: &[DegreeModel], r_j: f64) -> Result<JacobianMatrix> {
    if models.len() != 2 {
        return Err(Error::invalid("undirected Jacobian needs exactly two layers"));
    }
    if models.iter().any(|m| !(m.mean() > 0.0)) {
        return Err(Error::invalid("undirected Jacobian needs positive mean degree in every layer"));
    }
    let k = max_fragile_total(r_j).ok_or_else(|| Error::invalid("R_J must be positive"))?;
    let (pj, ps) = (&models[0], &models[1]);
    let (sj, ss) = (pj.size_biased()?, ps.size_biased()?);
    let via_j = [sj.pmf_upto(k), ps.pmf_upto(k)];
    let via_s = [pj.pmf_upto(k), ss.pmf_upto(k)];
    let excess = |x: usize| x.saturating_sub(1) as f64;
    let p0 = pj.p0();
    let rows = vec![
        vec![
            restricted_sum(&via_j, k, &|l| excess(l[0])),
            restricted_sum(&via_j, k, &|l| l[1] as f64),
        ],
        vec![
            p0 * restricted_sum(&via_s, k, &|l| l[0] as f64),
            p0 * restricted_sum(&via_s, k, &|l| excess(l[1])),
        ],
    ];
    let mut j = JacobianMatrix::from_rows(rows, JacobianKind::Undirected)?;
    j.truncated_mass = 1.0 - models.iter().map(|m| 1.0 - missing_mass(m)).product::<f64>();
    Ok(j)
}

/// Cascade conditions read off a Jacobian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeConditions {
    /// `λmax > 1`.
    pub multiplex: bool,
    /// `J_ii > 1`: a default at level `i+1` triggers on average more than
    /// one other default at that level through layer `i` alone.
    pub per_layer_only: Vec<bool>,
    pub lambda_max: f64,
    pub diagonal: Vec<f64>,
}

impl CascadeConditions {
    pub fn from_jacobian(j: &JacobianMatrix) -> Self {
        let diagonal = j.diagonal();
        let lambda_max = j.lambda_max();
        CascadeConditions {
            multiplex: lambda_max > 1.0,
            per_layer_only: diagonal.iter().map(|&d| d > 1.0).collect(),
            lambda_max,
            diagonal,
        }
    }
}

pub fn cascade_conditions(ens: &ModelEnsemble) -> Result<CascadeConditions> {
    Ok(CascadeConditions::from_jacobian(&build_jacobian(ens)?))
}
