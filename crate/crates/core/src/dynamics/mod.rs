//! Multilevel default cascade on a concrete multiplex network.
//!
//! Each bank's equity is `w = R1 · Σ_α l_α`. A bank at level `i` cannot repay
//! any debt in layers `< i`; its lenders in those layers count it as a loss.
//! Levels only rise, so the dynamics reach a fixed point that does not depend
//! on the update order.

mod ensemble;

pub use ensemble::{ensemble_run, write_ensemble_csv, EnsembleSpec, EnsembleSummary, ReplicaRecord};

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::MultiplexNetwork;
use crate::rng::rng_from_seed;

/// Outcome of [`classify_default_level`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DefaultLevel {
    Solvent,
    /// Default on every layer up to and including this 1-based level.
    Layer(usize),
    /// Losses exceed equity plus all interbank borrowing; external
    /// creditors are not repaid either.
    Complete,
}

impl DefaultLevel {
    /// Level used by the contagion dynamics: complete default acts like
    /// default at the most senior level `m`.
    pub fn contagion_level(self, m: usize) -> usize {
        match self {
            DefaultLevel::Solvent => 0,
            DefaultLevel::Layer(i) => i,
            DefaultLevel::Complete => m,
        }
    }
}

/// Stylized bank balance sheet with unit-size interbank contracts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceSheet {
    pub external_assets: f64,
    pub external_liabilities: f64,
    /// Loans per layer (`l_α`), junior first.
    pub loans: Vec<u32>,
    /// Borrowings per layer (`b_α`), junior first.
    pub borrowings: Vec<u32>,
}

impl BalanceSheet {
    pub fn equity(&self) -> f64 {
        let interbank: f64 = self
            .loans
            .iter()
            .zip(&self.borrowings)
            .map(|(&l, &b)| l as f64 - b as f64)
            .sum();
        self.external_assets - self.external_liabilities + interbank
    }

    pub fn classify(&self, total_loss: u32) -> DefaultLevel {
        classify_default_level(self.equity(), &self.borrowings, total_loss)
    }
}

/// Default level of a bank with equity `w`, borrowings `b` per layer and
/// `total_loss` defaulted interbank assets.
///
/// Solvent iff `w ≥ loss`; level `α` iff
/// `w + Σ_{k<α} b_k < loss ≤ w + Σ_{k≤α} b_k`; complete iff the loss exceeds
/// `w + Σ_k b_k`.
pub fn classify_default_level(equity: f64, borrowings: &[u32], total_loss: u32) -> DefaultLevel {
    let loss = total_loss as f64;
    if equity >= loss {
        return DefaultLevel::Solvent;
    }
    let mut buffer = equity;
    for (a, &b) in borrowings.iter().enumerate() {
        buffer += b as f64;
        if loss <= buffer {
            return DefaultLevel::Layer(a + 1);
        }
    }
    DefaultLevel::Complete
}

/// Response function `F_i`: true iff
/// `Σ_s m_s − Σ_{k<i} b_k > R1 · Σ_s l_s` (strict).
///
/// `level` is 1-based. Monotone: `F_i` implies `F_j` for every `j < i`.
pub fn response(level: usize, loans: &[u32], borrowings: &[u32], losses: &[u32], r1: f64) -> bool {
    debug_assert!(level >= 1);
    let total_loans: u32 = loans.iter().sum();
    let total_loss: u32 = losses.iter().sum();
    let shield: u32 = borrowings.iter().take(level - 1).sum();
    (total_loss as f64 - shield as f64) > r1 * total_loans as f64
}

/// Highest level whose response fires for the given counts, or 0.
fn response_level(total_loss: u32, threshold: f64, borrowings: impl Iterator<Item = u32>, m: usize) -> usize {
    let mut shield = 0u32;
    let mut level = 0;
    let mut b = borrowings;
    for i in 1..=m {
        if (total_loss as f64 - shield as f64) > threshold {
            level = i;
        } else {
            break;
        }
        shield += b.next().unwrap_or(0);
    }
    level
}

/// How initial defaults are placed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SeedSpec {
    /// `counts[i-1]` nodes start at exactly level `i`. Nodes are drawn
    /// uniformly without replacement, most senior level first.
    Counts(Vec<usize>),
    /// Each node independently starts at level `≥ i` with probability
    /// `probabilities[i-1]` (non-increasing in `i`).
    Probabilities(Vec<f64>),
}

impl SeedSpec {
    pub fn none() -> Self {
        SeedSpec::Counts(Vec::new())
    }

    /// `count` seeds at level `m`.
    pub fn most_senior(m: usize, count: usize) -> Self {
        let mut counts = vec![0; m];
        if m > 0 {
            counts[m - 1] = count;
        }
        SeedSpec::Counts(counts)
    }

    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        match self {
            SeedSpec::Counts(c) => {
                if c.len() > m {
                    return Err(Error::invalid(format!("seed counts for {} levels but M = {m}", c.len())));
                }
                let total: usize = c.iter().sum();
                if total > n {
                    return Err(Error::invalid(format!("{total} seeds exceed {n} nodes")));
                }
            }
            SeedSpec::Probabilities(p) => {
                if p.len() > m {
                    return Err(Error::invalid(format!(
                        "seed probabilities for {} levels but M = {m}",
                        p.len()
                    )));
                }
                if p.iter().any(|x| !(0.0..=1.0).contains(x)) {
                    return Err(Error::invalid("seed probabilities must lie in [0, 1]"));
                }
                if p.windows(2).any(|w| w[1] > w[0]) {
                    return Err(Error::invalid(
                        "seed probabilities must be non-increasing in seniority",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Initial per-node levels.
    pub fn place(&self, n: usize, m: usize, seed: u64) -> Result<Vec<u8>> {
        self.validate(n, m)?;
        let mut rng = rng_from_seed(seed);
        let mut levels = vec![0u8; n];
        match self {
            SeedSpec::Counts(c) => {
                let total: usize = c.iter().sum();
                let chosen = sample(&mut rng, n, total).into_vec();
                let mut it = chosen.into_iter();
                for (i, &count) in c.iter().enumerate().rev() {
                    for v in it.by_ref().take(count) {
                        levels[v] = (i + 1) as u8;
                    }
                }
            }
            SeedSpec::Probabilities(p) => {
                for level in levels.iter_mut() {
                    let u: f64 = rng.random();
                    *level = p.iter().take_while(|&&q| u < q).count() as u8;
                }
            }
        }
        Ok(levels)
    }
}

/// Node update order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UpdateSchedule {
    /// All nodes re-evaluated against the previous round's state.
    Synchronous,
    /// Nodes updated one at a time in this order, each seeing the
    /// latest state; the order is repeated until nothing changes.
    Sequential(Vec<usize>),
}

/// Mutable state of one cascade run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CascadeState {
    /// Per-node default level, 0 = solvent.
    pub levels: Vec<u8>,
    /// `losses[s][v]`: borrowers of `v` in layer `s` whose level exceeds `s`.
    pub losses: Vec<Vec<u32>>,
}

impl CascadeState {
    pub fn new(net: &MultiplexNetwork, levels: Vec<u8>) -> Self {
        let m = net.layer_count();
        let mut losses = vec![vec![0u32; net.node_count()]; m];
        for (u, &lv) in levels.iter().enumerate() {
            for (s, layer_losses) in losses.iter_mut().enumerate().take(lv as usize) {
                for &v in net.lenders(s, u) {
                    layer_losses[v as usize] += 1;
                }
            }
        }
        CascadeState { levels, losses }
    }

    fn raise(&mut self, net: &MultiplexNetwork, node: usize, to: u8, touched: &mut Vec<usize>) {
        let from = self.levels[node];
        for s in from as usize..to as usize {
            for &v in net.lenders(s, node) {
                self.losses[s][v as usize] += 1;
                touched.push(v as usize);
            }
        }
        self.levels[node] = to;
    }

    fn target_level(&self, net: &MultiplexNetwork, node: usize, r1: f64) -> u8 {
        let m = net.layer_count();
        let total_loans = net.total_out_degree(node);
        if total_loans == 0 {
            return self.levels[node];
        }
        let loss: u32 = (0..m).map(|s| self.losses[s][node]).sum();
        let threshold = r1 * total_loans as f64;
        let lvl = response_level(loss, threshold, (0..m).map(|s| net.in_degree(s, node) as u32), m);
        (lvl as u8).max(self.levels[node])
    }

    /// Fraction of nodes at level `≥ i`, for `i = 1..=m`.
    pub fn default_fractions(&self, m: usize) -> Vec<f64> {
        cumulative_fractions(&self.levels, m)
    }
}

fn cumulative_fractions(levels: &[u8], m: usize) -> Vec<f64> {
    let n = levels.len().max(1) as f64;
    let mut counts = vec![0usize; m + 1];
    for &l in levels {
        counts[l as usize] += 1;
    }
    (1..=m)
        .map(|i| counts[i..].iter().sum::<usize>() as f64 / n)
        .collect()
}

/// Final state and bookkeeping of a cascade run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeResult {
    /// `default_fractions[i-1]`: fraction of nodes at level `≥ i`.
    pub default_fractions: Vec<f64>,
    /// Fraction of nodes that end solvent.
    pub solvent_fraction: f64,
    /// Number of update rounds, including the final round that changed
    /// nothing.
    pub rounds: usize,
    pub seeded: usize,
    pub seed: u64,
    #[serde(skip)]
    pub levels: Vec<u8>,
    /// Per-round cumulative fractions (index 0 is the seeded state), when
    /// requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Vec<Vec<f64>>>,
}

impl CascadeResult {
    /// Fraction of nodes at exactly level `i`, `i = 0..=m`.
    pub fn exact_fractions(&self) -> Vec<f64> {
        let m = self.default_fractions.len();
        let mut out = Vec::with_capacity(m + 1);
        out.push(self.solvent_fraction);
        for i in 0..m {
            let next = self.default_fractions.get(i + 1).copied().unwrap_or(0.0);
            out.push(self.default_fractions[i] - next);
        }
        out
    }
}

/// Places seeds by `seeds` and runs synchronous rounds until no level
/// changes.
pub fn run_cascade(net: &MultiplexNetwork, r1: f64, seeds: &SeedSpec, seed: u64) -> Result<CascadeResult> {
    let levels = seeds.place(net.node_count(), net.layer_count(), seed)?;
    let mut res = run_cascade_from(net, r1, levels, &UpdateSchedule::Synchronous, false)?;
    res.seed = seed;
    Ok(res)
}

/// Runs the dynamics from explicit initial levels. Seeds are never lowered.
pub fn run_cascade_from(
    net: &MultiplexNetwork,
    r1: f64,
    initial: Vec<u8>,
    schedule: &UpdateSchedule,
    record_trajectory: bool,
) -> Result<CascadeResult> {
    if !(r1 > 0.0) {
        return Err(Error::invalid(format!("R1 must be positive, got {r1}")));
    }
    let n = net.node_count();
    let m = net.layer_count();
    if initial.len() != n {
        return Err(Error::invalid("initial level vector has wrong length"));
    }
    if initial.iter().any(|&l| l as usize > m) {
        return Err(Error::invalid("initial level exceeds layer count"));
    }
    let seeded = initial.iter().filter(|&&l| l > 0).count();
    let mut state = CascadeState::new(net, initial);
    let mut trajectory = record_trajectory.then(|| vec![state.default_fractions(m)]);
    let max_rounds = n * m.max(1) + 1;

    let mut rounds = 0;
    let mut touched: Vec<usize> = Vec::new();
    match schedule {
        UpdateSchedule::Synchronous => {
            // Only nodes whose losses changed can change level; round one
            // looks at everybody.
            let mut candidates: Vec<usize> = (0..n).collect();
            let mut mark = vec![false; n];
            loop {
                rounds += 1;
                let changes: Vec<(usize, u8)> = candidates
                    .iter()
                    .filter_map(|&v| {
                        let t = state.target_level(net, v, r1);
                        (t > state.levels[v]).then_some((v, t))
                    })
                    .collect();
                if changes.is_empty() || rounds > max_rounds {
                    break;
                }
                touched.clear();
                for (v, t) in changes {
                    state.raise(net, v, t, &mut touched);
                }
                candidates.clear();
                for &v in &touched {
                    if !mark[v] {
                        mark[v] = true;
                        candidates.push(v);
                    }
                }
                for &v in &candidates {
                    mark[v] = false;
                }
                candidates.sort_unstable();
                if let Some(t) = trajectory.as_mut() {
                    t.push(state.default_fractions(m));
                }
            }
        }
        UpdateSchedule::Sequential(order) => {
            if order.iter().any(|&v| v >= n) {
                return Err(Error::invalid("update order references a node out of range"));
            }
            loop {
                rounds += 1;
                let mut changed = false;
                for &v in order {
                    let t = state.target_level(net, v, r1);
                    if t > state.levels[v] {
                        touched.clear();
                        state.raise(net, v, t, &mut touched);
                        changed = true;
                    }
                }
                if !changed || rounds > max_rounds {
                    break;
                }
                if let Some(t) = trajectory.as_mut() {
                    t.push(state.default_fractions(m));
                }
            }
        }
    }

    let default_fractions = state.default_fractions(m);
    let solvent = state.levels.iter().filter(|&&l| l == 0).count() as f64 / n.max(1) as f64;
    Ok(CascadeResult {
        default_fractions,
        solvent_fraction: solvent,
        rounds,
        seeded,
        seed: 0,
        levels: state.levels,
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_examples() {
        assert_eq!(classify_default_level(3.0, &[3, 2], 2), DefaultLevel::Solvent);
        assert_eq!(classify_default_level(1.0, &[3, 2], 2), DefaultLevel::Layer(1));
        assert_eq!(classify_default_level(1.0, &[3, 2], 5), DefaultLevel::Layer(2));
        assert_eq!(classify_default_level(1.0, &[3, 2], 7), DefaultLevel::Complete);
        assert_eq!(classify_default_level(1.0, &[3], 5), DefaultLevel::Complete);
        assert_eq!(DefaultLevel::Complete.contagion_level(2), 2);
        // Boundary: loss equal to w + b_J is still junior-default only.
        assert_eq!(classify_default_level(1.0, &[3, 2], 4), DefaultLevel::Layer(1));
    }

    #[test]
    fn balance_sheet_equity() {
        let bs = BalanceSheet {
            external_assets: 10.0,
            external_liabilities: 12.0,
            loans: vec![3, 4],
            borrowings: vec![3, 2],
        };
        assert_eq!(bs.equity(), 0.0);
        assert_eq!(bs.classify(0), DefaultLevel::Solvent);
        assert_eq!(bs.classify(1), DefaultLevel::Layer(1));
    }

    #[test]
    fn response_examples() {
        let l = [3, 4];
        for i in 1..=2 {
            assert!(!response(i, &l, &[3, 2], &[0, 0], 0.18));
        }
        assert!(response(1, &l, &[3, 2], &[1, 1], 0.18));
        assert!(!response(2, &l, &[3, 2], &[1, 1], 0.18));
    }

    #[test]
    fn strict_threshold_on_tie() {
        // 1 loss against R1 · 5 = 1 exactly: does not fire.
        assert!(!response(1, &[5], &[0], &[1], 0.2));
        assert!(response(1, &[5], &[0], &[2], 0.2));
    }

    #[test]
    fn seeds_place_exact_counts_most_senior_first() {
        let levels = SeedSpec::Counts(vec![3, 2]).place(50, 2, 1).unwrap();
        assert_eq!(levels.iter().filter(|&&l| l == 1).count(), 3);
        assert_eq!(levels.iter().filter(|&&l| l == 2).count(), 2);
        assert!(SeedSpec::Counts(vec![30, 30]).place(50, 2, 1).is_err());
        assert!(SeedSpec::Probabilities(vec![0.1, 0.2]).validate(10, 2).is_err());
    }

    #[test]
    fn probability_seeds_are_nested() {
        let levels = SeedSpec::Probabilities(vec![1.0, 0.0]).place(20, 2, 3).unwrap();
        assert!(levels.iter().all(|&l| l == 1));
    }

    #[test]
    fn no_seeds_one_round() {
        let net = MultiplexNetwork::new(3, vec![vec![(0, 1), (1, 2)], vec![]]).unwrap();
        let res = run_cascade(&net, 0.18, &SeedSpec::none(), 0).unwrap();
        assert_eq!(res.rounds, 1);
        assert_eq!(res.default_fractions, vec![0.0, 0.0]);
        assert_eq!(res.solvent_fraction, 1.0);
    }

    #[test]
    fn chain_propagates_junior_default() {
        // 0 lends to 1 lends to 2 on the junior layer; 2 defaults.
        let net = MultiplexNetwork::new(3, vec![vec![(0, 1), (1, 2)], vec![]]).unwrap();
        let res = run_cascade_from(&net, 0.5, vec![0, 0, 2], &UpdateSchedule::Synchronous, true).unwrap();
        // Node 1 loses its only loan but its junior debt shields level 2;
        // node 0 owes nothing, so one loss takes it straight to level 2.
        assert_eq!(res.levels, vec![2, 1, 2]);
        assert_eq!(res.rounds, 3);
        let traj = res.trajectory.as_ref().unwrap();
        assert_eq!(traj.len(), 3);
        assert_eq!(res.exact_fractions().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn senior_default_needs_loss_beyond_junior_debt() {
        // Node 0 lends to 1 (junior) and 2 (senior); owes nothing.
        let net = MultiplexNetwork::new(3, vec![vec![(0, 1)], vec![(0, 2)]]).unwrap();
        // Borrower 2 at level 1 only hurts junior lenders -> no loss to 0.
        let r = run_cascade_from(&net, 0.4, vec![0, 0, 1], &UpdateSchedule::Synchronous, false).unwrap();
        assert_eq!(r.levels[0], 0);
        // Borrower 1 at level 1 -> loss 1 > 0.8 with b = 0 -> straight to level 2.
        let r = run_cascade_from(&net, 0.4, vec![0, 1, 0], &UpdateSchedule::Synchronous, false).unwrap();
        assert_eq!(r.levels[0], 2);
    }

    #[test]
    fn rejects_nonpositive_threshold() {
        let net = MultiplexNetwork::new(2, vec![vec![]]).unwrap();
        assert!(run_cascade(&net, 0.0, &SeedSpec::none(), 0).is_err());
    }
}
