use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use seniority_cascade::theory::{
    build_jacobian, build_jacobian_exogenous, cascade_conditions, jacobian_m_er_closed_form, recursion_map,
    DegreeModel, JacobianKind, JacobianMatrix, ModelEnsemble,
};

/// Poisson PMF by the multiplicative recurrence, independent of the crate.
fn poisson_pmf(mean: f64, kmax: usize) -> Vec<f64> {
    let mut p = vec![(-mean).exp()];
    for k in 1..=kmax {
        let prev = p[k - 1];
        p.push(prev * mean / k as f64);
    }
    p
}

#[test]
fn duplex_jacobian_matches_unsimplified_triple_sum() {
    for &(lj, ls, r1) in &[(2.0, 5.0, 0.18), (1.0, 1.0, 0.18), (6.0, 3.0, 0.1), (0.5, 8.0, 0.3)] {
        let j = build_jacobian(&ModelEnsemble::erdos_renyi(&[lj, ls], r1).unwrap()).unwrap();
        let (pj, ps, pb) = (poisson_pmf(lj, 200), poisson_pmf(ls, 200), poisson_pmf(lj, 30));
        // One lost loan pushes a bank to level 1 when 1 > R1 Σl, and to
        // level 2 when additionally 1 − b_J > R1 Σl.
        let mut want = [[0.0; 2]; 2];
        for (a, &qa) in pj.iter().enumerate() {
            for (b, &qb) in ps.iter().enumerate() {
                let total = r1 * (a + b) as f64;
                if 1.0 > total {
                    want[0][0] += qa * qb * a as f64;
                    want[0][1] += qa * qb * b as f64;
                }
                for (bj, &qc) in pb.iter().enumerate() {
                    if 1.0 - bj as f64 > total {
                        want[1][0] += qa * qb * qc * a as f64;
                        want[1][1] += qa * qb * qc * b as f64;
                    }
                }
            }
        }
        for r in 0..2 {
            for c in 0..2 {
                assert!((j.get(r, c) - want[r][c]).abs() < 1e-10, "({lj},{ls},{r1}) [{r}][{c}]");
            }
        }
    }
}

#[test]
fn single_layer_closed_form_is_poisson_cdf() {
    // K = 5 at R1 = 0.18, so J = 7 · Q(5, 7) = 7 · P[Poisson(7) ≤ 4].
    let j = jacobian_m_er_closed_form(&[7.0], 0.18).unwrap();
    let cdf: f64 = poisson_pmf(7.0, 4).iter().sum();
    assert!((j.get(0, 0) - 7.0 * cdf).abs() < 1e-12);
}

#[test]
fn four_layer_trace_matches_nested_sums() {
    let laws = [
        vec![0.3, 0.5, 0.2],
        vec![0.1, 0.2, 0.3, 0.4],
        vec![0.6, 0.4],
        vec![0.25, 0.25, 0.25, 0.25],
    ];
    let models: Vec<DegreeModel> = laws.iter().map(|p| DegreeModel::empirical(p.clone()).unwrap()).collect();
    for &r1 in &[0.1, 0.18, 0.3] {
        let ens = ModelEnsemble::new(models.clone(), models.clone(), r1).unwrap();
        let j = build_jacobian(&ens).unwrap();
        let mut col = [0.0; 4];
        for (a, pa) in laws[0].iter().enumerate() {
            for (b, pb) in laws[1].iter().enumerate() {
                for (c, pc) in laws[2].iter().enumerate() {
                    for (d, pd) in laws[3].iter().enumerate() {
                        let l = [a, b, c, d];
                        if r1 * l.iter().sum::<usize>() as f64 >= 1.0 {
                            continue;
                        }
                        for s in 0..4 {
                            col[s] += pa * pb * pc * pd * l[s] as f64;
                        }
                    }
                }
            }
        }
        let mut shield = 1.0;
        let mut trace = 0.0;
        for i in 0..4 {
            if i > 0 {
                shield *= laws[i - 1][0];
            }
            trace += shield * col[i];
        }
        assert!((j.trace() - trace).abs() < 1e-12, "R1 = {r1}");
    }
}

fn power_iteration(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut v = vec![1.0; n];
    let mut rho = 0.0;
    for _ in 0..10_000 {
        let w: Vec<f64> = (0..n).map(|i| (0..n).map(|k| a[i][k] * v[k]).sum()).collect();
        rho = w.iter().cloned().fold(0.0, f64::max);
        v = w.iter().map(|x| x / rho).collect();
    }
    rho
}

#[test]
fn general_spectral_radius_matches_power_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for trial in 0..20 {
        let n = 3 + trial % 3;
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(0.01..2.0)).collect()).collect();
        let want = power_iteration(&rows);
        let got = JacobianMatrix::from_rows(rows, JacobianKind::General).unwrap().lambda_max();
        assert!((got - want).abs() < 1e-9 * want, "{got} vs {want}");
    }
    // Rank one: u vᵀ has spectral radius v · u.
    for _ in 0..20 {
        let u: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..3.0)).collect();
        let v: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..3.0)).collect();
        let rows = u.iter().map(|a| v.iter().map(|b| a * b).collect()).collect();
        let want: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
        let got = JacobianMatrix::from_rows(rows, JacobianKind::General).unwrap().lambda_max();
        assert!((got - want).abs() < 1e-9 * (1.0 + want));
    }
}

#[test]
fn exogenous_thresholds_break_rank_one() {
    // Independent Poisson layers factor as <l_j> · P[Poisson(Σ) ≤ K_i − 1],
    // so the rows stay proportional whatever the thresholds.
    let p = DegreeModel::poisson(3.0).unwrap();
    let j = build_jacobian_exogenous(&[p.clone(), p], 0.15, 0.4).unwrap();
    assert!(j.determinant().abs() < 1e-12);

    let laws = [vec![0.2, 0.0, 0.0, 0.5, 0.3], vec![0.1, 0.6, 0.0, 0.0, 0.0, 0.3]];
    let models: Vec<DegreeModel> = laws.iter().map(|l| DegreeModel::empirical(l.clone()).unwrap()).collect();
    let (rj, rs) = (0.15, 0.4);
    let j = build_jacobian_exogenous(&models, rj, rs).unwrap();
    let mut want = [[0.0; 2]; 2];
    for (a, pa) in laws[0].iter().enumerate() {
        for (b, pb) in laws[1].iter().enumerate() {
            for (i, r) in [rj, rs].iter().enumerate() {
                if 1.0 > r * (a + b) as f64 {
                    want[i][0] += pa * pb * a as f64;
                    want[i][1] += pa * pb * b as f64;
                }
            }
        }
    }
    for r in 0..2 {
        for c in 0..2 {
            assert!((j.get(r, c) - want[r][c]).abs() < 1e-12);
        }
    }
    let det = want[0][0] * want[1][1] - want[0][1] * want[1][0];
    assert!(det.abs() > 1e-6, "det = {det}");
    assert!((j.determinant() - det).abs() < 1e-12);
    assert!(j.lambda_max() < j.trace());
}

#[test]
fn junior_layer_alone_can_be_supercritical() {
    let c = cascade_conditions(&ModelEnsemble::erdos_renyi(&[4.0, 0.0], 0.18).unwrap()).unwrap();
    assert_eq!(c.per_layer_only, vec![true, false]);
    assert!(c.multiplex);
    let c = cascade_conditions(&ModelEnsemble::erdos_renyi(&[0.5, 0.5], 0.18).unwrap()).unwrap();
    assert!(!c.multiplex);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn recursion_map_is_monotone_and_nested(
        lj in 0.0f64..6.0,
        ls in 0.0f64..6.0,
        r1 in 0.05f64..0.5,
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
        bump in 0.0f64..0.5,
    ) {
        let ens = ModelEnsemble::erdos_renyi(&[lj, ls], r1).unwrap();
        let phi0 = [1e-3, 5e-4];
        let lo = [a.max(b), a.min(b)];
        let hi = [(lo[0] + bump).min(1.0), (lo[1] + bump).min(lo[0] + bump).min(1.0)];
        let g_lo = recursion_map(&ens, &phi0, &lo).unwrap();
        let g_hi = recursion_map(&ens, &phi0, &hi).unwrap();
        for i in 0..2 {
            prop_assert!(g_lo[i] <= g_hi[i] + 1e-12);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&g_lo[i]));
        }
        prop_assert!(g_lo[1] <= g_lo[0] + 1e-12);
    }
}
