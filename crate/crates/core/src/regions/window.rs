use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::theory::{jacobian_m_er_closed_form, max_fragile_total};

/// `λmax` of independent Erdős–Rényi junior/senior layers.
pub fn duplex_er_lambda(junior_mean: f64, senior_mean: f64, r1: f64) -> f64 {
    if max_fragile_total(r1) == Some(0) {
        return 0.0;
    }
    jacobian_m_er_closed_form(&[junior_mean, senior_mean], r1)
        .map(|j| j.lambda_max())
        .unwrap_or(f64::NAN)
}

fn ray_lambda(sigma: f64, r: f64, r1: f64) -> f64 {
    let s = (1.0 + sigma * sigma).sqrt();
    duplex_er_lambda(r / s, r * sigma / s, r1)
}

/// Super-critical part of the ray `(<l_J>, <l_S>) = r (1, σ) / √(1+σ²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeWindow {
    pub sigma: f64,
    pub r1: f64,
    /// Total length (in `r`) of `{r ≥ 0 : λmax ≥ 1}`.
    pub measure: f64,
    /// Disjoint sorted `(r_lo, r_hi)` intervals.
    pub segments: Vec<(f64, f64)>,
    pub r_max: f64,
    pub dr: f64,
}

/// Scans `r = 0, dr, …, r_max`, brackets each crossing of `λmax = 1` and
/// bisects it to `dr · 1e-3`.
///
/// Fails with [`Error::WindowNotClosed`] if `λmax ≥ 1` anywhere on the last
/// unit stretch `[r_max − 1, r_max]`.
pub fn cascade_window(sigma: f64, r1: f64, r_max: f64, dr: f64) -> Result<CascadeWindow> {
    if !(dr > 0.0 && dr.is_finite()) {
        return Err(Error::invalid("dr must be positive"));
    }
    if !(r_max >= 1.0 && r_max.is_finite()) {
        return Err(Error::invalid("r_max must be at least 1"));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("sigma must be finite and >= 0"));
    }
    if !(r1 > 0.0) {
        return Err(Error::invalid("R1 must be positive"));
    }
    let f = |r: f64| ray_lambda(sigma, r, r1) - 1.0;
    let steps = (r_max / dr).ceil() as usize;
    let rs: Vec<f64> = (0..=steps).map(|k| (k as f64 * dr).min(r_max)).collect();
    let vals: Vec<f64> = rs.iter().map(|&r| f(r)).collect();

    for (&r, &v) in rs.iter().zip(&vals) {
        if r >= r_max - 1.0 && v >= 0.0 {
            return Err(Error::WindowNotClosed {
                r,
                lambda_max: v + 1.0,
                r_max,
            });
        }
    }

    let tol = dr * 1e-3;
    // Crossing between a (below/at) and b where f(lo) and f(hi) differ in
    // sign class f ≥ 0.
    let bisect = |mut lo: f64, mut hi: f64| {
        let lo_in = f(lo) >= 0.0;
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if (f(mid) >= 0.0) == lo_in {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let mut segments = Vec::new();
    let mut open: Option<f64> = if vals[0] >= 0.0 { Some(0.0) } else { None };
    for k in 1..rs.len() {
        let (a, b) = (vals[k - 1] >= 0.0, vals[k] >= 0.0);
        if a == b {
            continue;
        }
        let x = bisect(rs[k - 1], rs[k]);
        if b {
            open = Some(x);
        } else if let Some(start) = open.take() {
            segments.push((start, x));
        }
    }
    let measure = segments.iter().map(|(a, b)| b - a).sum();
    Ok(CascadeWindow {
        sigma,
        r1,
        measure,
        segments,
        r_max,
        dr,
    })
}

/// Minimizer of the cascade-window measure over the seniority ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalRatio {
    pub r1: f64,
    pub sigma_star: f64,
    pub measure_star: f64,
    /// `(σ, measure)` on the input grid.
    pub window_curve: Vec<(f64, f64)>,
    /// Some ratio on the grid has an empty window, so the minimizer is not
    /// unique; `sigma_star` is then the midpoint of the longest run of
    /// empty-window ratios.
    pub degenerate: bool,
    pub empty_interval: Option<(f64, f64)>,
}

const GOLDEN_TOL: f64 = 1e-3;

/// Grid minimum of the window measure, refined by golden-section search on
/// the bracketing grid interval.
pub fn optimal_seniority_ratio(r1: f64, sigma_grid: &[f64], r_max: f64, dr: f64) -> Result<OptimalRatio> {
    if sigma_grid.len() < 3 {
        return Err(Error::invalid("sigma grid needs at least three points"));
    }
    if sigma_grid[0] != 0.0 {
        return Err(Error::invalid("sigma grid must start at 0"));
    }
    if sigma_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("sigma grid must be strictly increasing"));
    }
    if *sigma_grid.last().unwrap() < 5.0 {
        return Err(Error::invalid("sigma grid must reach at least 5"));
    }
    let measures = sigma_grid
        .par_iter()
        .map(|&s| cascade_window(s, r1, r_max, dr).map(|w| w.measure))
        .collect::<Result<Vec<f64>>>()?;
    let window_curve: Vec<(f64, f64)> = sigma_grid.iter().copied().zip(measures.iter().copied()).collect();

    // Longest contiguous run of empty windows.
    let mut best_run: Option<(usize, usize)> = None;
    let mut k = 0;
    while k < measures.len() {
        if measures[k] == 0.0 {
            let start = k;
            while k + 1 < measures.len() && measures[k + 1] == 0.0 {
                k += 1;
            }
            if best_run.is_none_or(|(a, b)| k - start > b - a) {
                best_run = Some((start, k));
            }
        }
        k += 1;
    }
    if let Some((a, b)) = best_run {
        let (lo, hi) = (sigma_grid[a], sigma_grid[b]);
        return Ok(OptimalRatio {
            r1,
            sigma_star: 0.5 * (lo + hi),
            measure_star: 0.0,
            window_curve,
            degenerate: true,
            empty_interval: Some((lo, hi)),
        });
    }

    let kmin = (0..measures.len())
        .min_by(|&a, &b| measures[a].total_cmp(&measures[b]))
        .unwrap();
    let lo = sigma_grid[kmin.saturating_sub(1)];
    let hi = sigma_grid[(kmin + 1).min(sigma_grid.len() - 1)];
    let measure = |s: f64| cascade_window(s, r1, r_max, dr).map(|w| w.measure);
    let (s_gs, m_gs) = golden_section(lo, hi, sigma_grid[kmin], &measure)?;
    let (sigma_star, measure_star) = if m_gs <= measures[kmin] {
        (s_gs, m_gs)
    } else {
        (sigma_grid[kmin], measures[kmin])
    };
    Ok(OptimalRatio {
        r1,
        sigma_star,
        measure_star,
        window_curve,
        degenerate: false,
        empty_interval: None,
    })
}

fn golden_section(
    mut a: f64,
    mut b: f64,
    scale: f64,
    f: &dyn Fn(f64) -> Result<f64>,
) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let tol = GOLDEN_TOL * scale.abs().max(GOLDEN_TOL);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

/// A change of the optimal ratio between two consecutive thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdJump {
    pub r1_lo: f64,
    pub r1_hi: f64,
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    /// Values `1/k` with `r1_lo < 1/k ≤ r1_hi`, where the set of banks
    /// fragile to a single loss changes.
    pub boundaries: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSweep {
    /// Results in increasing order of `R1`.
    pub points: Vec<OptimalRatio>,
    pub jumps: Vec<ThresholdJump>,
}

/// Optimal ratio at each threshold, sorted by `R1`, plus the places where
/// it changes.
///
/// The duplex Erdős–Rényi `λmax` depends on `R1` only through the largest
/// fragile total, so the optimum is piecewise constant and changes only
/// across some `1/k`.
pub fn sweep_thresholds(r1_list: &[f64], sigma_grid: &[f64], r_max: f64, dr: f64) -> Result<ThresholdSweep> {
    if r1_list.is_empty() {
        return Err(Error::invalid("threshold list is empty"));
    }
    if r1_list.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::invalid("every R1 must be positive"));
    }
    let mut r1s = r1_list.to_vec();
    r1s.sort_by(f64::total_cmp);
    let points = r1s
        .iter()
        .map(|&r1| optimal_seniority_ratio(r1, sigma_grid, r_max, dr))
        .collect::<Result<Vec<_>>>()?;
    let mut jumps = Vec::new();
    for w in points.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.sigma_star != b.sigma_star || a.degenerate != b.degenerate {
            let boundaries = (1..)
                .map(|k| 1.0 / k as f64)
                .take_while(|&x| x > a.r1)
                .filter(|&x| x <= b.r1)
                .collect();
            jumps.push(ThresholdJump {
                r1_lo: a.r1,
                r1_hi: b.r1,
                sigma_lo: a.sigma_star,
                sigma_hi: b.sigma_star,
                boundaries,
            });
        }
    }
    Ok(ThresholdSweep { points, jumps })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_grid() -> Vec<f64> {
        (0..=120).map(|k| k as f64 * 0.05).collect()
    }

    #[test]
    fn high_threshold_gives_empty_window() {
        let w = cascade_window(1.0, 1.5, 12.0, 0.01).unwrap();
        assert_eq!(w.measure, 0.0);
        assert!(w.segments.is_empty());
        let opt = optimal_seniority_ratio(1.5, &default_grid(), 12.0, 0.05).unwrap();
        assert!(opt.degenerate);
        assert!(opt.window_curve.iter().all(|&(_, m)| m == 0.0));
        assert_eq!(opt.empty_interval, Some((0.0, 6.0)));
    }

    #[test]
    fn window_must_close() {
        assert!(matches!(
            cascade_window(0.0, 0.18, 5.0, 0.01),
            Err(Error::WindowNotClosed { .. })
        ));
    }

    #[test]
    fn measure_is_sum_of_segments_and_stable_under_refinement() {
        let a = cascade_window(0.0, 0.18, 12.0, 0.02).unwrap();
        let b = cascade_window(0.0, 0.18, 12.0, 0.01).unwrap();
        let sum: f64 = a.segments.iter().map(|(x, y)| y - x).sum();
        assert!((a.measure - sum).abs() < 0.02 * 1e-2);
        assert!((a.measure - b.measure).abs() < 2.0 * 0.02);
        assert!(a.segments.windows(2).all(|w| w[0].1 < w[1].0));
    }

    #[test]
    fn all_junior_window_is_wider_than_optimum() {
        let w0 = cascade_window(0.0, 0.18, 12.0, 0.01).unwrap();
        let w = cascade_window(1.79, 0.18, 12.0, 0.01).unwrap();
        assert!(w0.measure > w.measure);
    }

    #[test]
    fn window_curve_is_asymmetric() {
        let w2 = cascade_window(2.0, 0.18, 12.0, 0.01).unwrap();
        let w_half = cascade_window(0.5, 0.18, 12.0, 0.01).unwrap();
        assert!((w2.measure - w_half.measure).abs() > 1e-3);
    }

    #[test]
    fn single_threshold_sweep_matches_direct() {
        let g = default_grid();
        let s = sweep_thresholds(&[0.18], &g, 12.0, 0.02).unwrap();
        let d = optimal_seniority_ratio(0.18, &g, 12.0, 0.02).unwrap();
        assert_eq!(s.points, vec![d]);
        assert!(s.jumps.is_empty());
        assert!(optimal_seniority_ratio(0.18, &[0.5, 1.0, 6.0], 12.0, 0.02).is_err());
        assert!(optimal_seniority_ratio(0.18, &[0.0, 1.0, 4.0], 12.0, 0.02).is_err());
    }
}
