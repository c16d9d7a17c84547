use std::io::Write;

use serde::Serialize;
use serde_json::{json, Map, Value};
use seniority_cascade::dynamics::{ensemble_run, write_ensemble_csv, EnsembleSpec};
use seniority_cascade::netgen::generate;
use seniority_cascade::regions::{
    cascade_window, junior_fraction_experiment, m_layer_split_regions, optimal_seniority_ratio, scan_region,
    sweep_thresholds, JuniorFractionSpec, SimulationGrid,
};
use seniority_cascade::theory::{cascade_conditions, iterate_recursion, ModelEnsemble, DEFAULT_TAIL_TOLERANCE};

use crate::config::*;
use crate::output::{Provenance, Report, Table};
use crate::Failure;

fn object(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => Map::new(),
    }
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

fn csv(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory");
    buf
}

pub fn generate_cmd(c: GenerateConfig) -> Result<Report, Failure> {
    let provenance = Provenance::new("generate", &c, Some(c.seed));
    let g = generate(&c.network, c.seed)?;
    let net = &g.network;
    let layers: Vec<_> = (0..net.layer_count()).map(|s| net.edges(s).to_vec()).collect();
    let body = csv(|w| {
        writeln!(w, "layer,lender,borrower")?;
        for (s, edges) in layers.iter().enumerate() {
            for (u, v) in edges {
                writeln!(w, "{s},{u},{v}")?;
            }
        }
        Ok(())
    });
    let summary = object(json!({
        "nodes": net.node_count(),
        "edges_per_layer": layers.iter().map(Vec::len).collect::<Vec<_>>(),
        "erased_edges": g.erased,
    }));
    Ok(Report {
        provenance,
        json: json!({ "n": net.node_count(), "erased_edges": g.erased, "layers": layers }),
        summary,
        tables: vec![Table::main(body)],
    })
}

pub fn simulate_cmd(c: SimulateConfig) -> Result<Report, Failure> {
    let provenance = Provenance::new("simulate", &c, Some(c.master_seed));
    let spec = EnsembleSpec {
        network: c.network,
        r1: c.r1,
        seeds: c.seeds,
        replicas: c.replicas,
        master_seed: c.master_seed,
    };
    let summary = ensemble_run(&spec)?;
    let body = csv(|w| write_ensemble_csv(w, &summary));
    Ok(Report {
        provenance,
        summary: object(json!({ "mean": summary.mean, "stdev": summary.stdev })),
        tables: vec![Table::main(body)],
        json: to_json(&summary),
    })
}

pub fn fixed_point_cmd(c: FixedPointConfig) -> Result<Report, Failure> {
    let ens = match (&c.poisson_means, &c.out_models, &c.in_models) {
        (Some(means), None, None) => ModelEnsemble::erdos_renyi(means, c.r1)?,
        (None, None, None) => ModelEnsemble::erdos_renyi(&[2.0, 5.0], c.r1)?,
        (None, Some(out), Some(inn)) => ModelEnsemble::new(out.clone(), inn.clone(), c.r1)?,
        _ => {
            return Err(Failure::validation(
                "give either poisson_means or both out_models and in_models",
            ))
        }
    };
    let mut provenance = Provenance::new("fixed-point", &c, None)
        .tolerance("tolerance", c.tolerance)
        .tolerance("max_iter", c.max_iter)
        .tolerance("degree_tail", DEFAULT_TAIL_TOLERANCE);
    let fp = iterate_recursion(&ens, &c.phi0, c.tolerance, c.max_iter)?;
    let conditions = cascade_conditions(&ens)?;
    provenance.converged = fp.converged;
    provenance = provenance.tolerance("truncated_mass", fp.truncated_mass);
    let body = csv(|w| {
        writeln!(w, "level,phi,converged")?;
        for (i, p) in fp.phi.iter().enumerate() {
            writeln!(w, "{},{:.16e},{}", i + 1, p, fp.converged as u8)?;
        }
        Ok(())
    });
    Ok(Report {
        provenance,
        summary: object(json!({
            "iterations": fp.iterations,
            "residual": fp.residual,
            "lambda_max": conditions.lambda_max,
            "multiplex_cascade": conditions.multiplex,
        })),
        tables: vec![Table::main(body)],
        json: json!({ "fixed_point": fp, "conditions": conditions }),
    })
}

pub fn region_cmd(c: RegionConfig) -> Result<Report, Failure> {
    let provenance = Provenance::new("region", &c, None).tolerance("degree_tail", DEFAULT_TAIL_TOLERANCE);
    let scan = scan_region(&c.grid, c.r1)?;
    let boundary = scan.boundary();
    let body = csv(|w| scan.write_csv(w));
    let segments = csv(|w| {
        writeln!(w, "x0,y0,x1,y1")?;
        for s in &boundary {
            writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e}", s.start.0, s.start.1, s.end.0, s.end.1)?;
        }
        Ok(())
    });
    Ok(Report {
        provenance,
        summary: object(json!({
            "multiplex_cells": scan.multiplex_count(),
            "containment_violations": scan.containment_violations(),
        })),
        tables: vec![Table::main(body), Table::extra("boundary", segments)],
        json: json!({
            "multiplex_cells": scan.multiplex_count(),
            "containment_violations": scan.containment_violations(),
            "boundary": boundary,
            "scan": scan,
        }),
    })
}

fn window_tolerances(p: Provenance, r_max: f64, dr: f64) -> Provenance {
    p.tolerance("r_max", r_max).tolerance("dr", dr).tolerance("crossing", dr * 1e-3)
}

pub fn window_cmd(c: WindowConfig) -> Result<Report, Failure> {
    let provenance = window_tolerances(Provenance::new("window", &c, None), c.r_max, c.dr);
    let w = cascade_window(c.sigma, c.r1, c.r_max, c.dr)?;
    let body = csv(|out| {
        writeln!(out, "r_start,r_end")?;
        for (a, b) in &w.segments {
            writeln!(out, "{a:.16e},{b:.16e}")?;
        }
        Ok(())
    });
    Ok(Report {
        provenance,
        summary: object(json!({ "sigma": w.sigma, "measure": w.measure })),
        tables: vec![Table::main(body)],
        json: to_json(&w),
    })
}

pub fn optimal_ratio_cmd(c: OptimalRatioConfig) -> Result<Report, Failure> {
    c.sigma_grid.validate()?;
    let provenance =
        window_tolerances(Provenance::new("optimal-ratio", &c, None), c.r_max, c.dr).tolerance("golden_section_rel", 1e-3);
    let opt = optimal_seniority_ratio(c.r1, &c.sigma_grid.values(), c.r_max, c.dr)?;
    let body = csv(|w| {
        writeln!(w, "sigma,measure")?;
        for (s, m) in &opt.window_curve {
            writeln!(w, "{s:.16e},{m:.16e}")?;
        }
        Ok(())
    });
    Ok(Report {
        provenance,
        summary: object(json!({
            "sigma_star": opt.sigma_star,
            "measure_star": opt.measure_star,
            "degenerate": opt.degenerate,
        })),
        tables: vec![Table::main(body)],
        json: to_json(&opt),
    })
}

pub fn sweep_cmd(c: SweepConfig) -> Result<Report, Failure> {
    c.sigma_grid.validate()?;
    let provenance =
        window_tolerances(Provenance::new("sweep-threshold", &c, None), c.r_max, c.dr).tolerance("golden_section_rel", 1e-3);
    let sweep = sweep_thresholds(&c.r1_values, &c.sigma_grid.values(), c.r_max, c.dr)?;
    let body = csv(|w| {
        writeln!(w, "r1,sigma_star,measure_star,degenerate")?;
        for p in &sweep.points {
            writeln!(w, "{:.16e},{:.16e},{:.16e},{}", p.r1, p.sigma_star, p.measure_star, p.degenerate as u8)?;
        }
        Ok(())
    });
    let jumps = csv(|w| {
        writeln!(w, "r1_lo,r1_hi,sigma_lo,sigma_hi,boundaries")?;
        for j in &sweep.jumps {
            let b: Vec<String> = j.boundaries.iter().map(|x| format!("{x:.16e}")).collect();
            writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e},{}", j.r1_lo, j.r1_hi, j.sigma_lo, j.sigma_hi, b.join(";"))?;
        }
        Ok(())
    });
    Ok(Report {
        provenance,
        summary: object(json!({ "jumps": sweep.jumps.len() })),
        tables: vec![Table::main(body), Table::extra("jumps", jumps)],
        json: to_json(&sweep),
    })
}

pub fn mlayer_cmd(c: MLayerConfig) -> Result<Report, Failure> {
    let provenance = Provenance::new("mlayer", &c, None);
    let rasters = m_layer_split_regions(&c.m_list, &c.r1, &c.z)?;
    let counts: Vec<usize> = rasters.iter().map(|r| r.membership_count()).collect();
    let tables = rasters
        .iter()
        .map(|r| Table::extra(format!("m{}", r.m), csv(|w| r.write_csv(w))))
        .collect();
    Ok(Report {
        provenance,
        summary: object(json!({ "m_list": c.m_list, "membership_counts": counts })),
        tables,
        json: json!({ "membership_counts": counts, "rasters": rasters }),
    })
}

pub fn junior_fraction_cmd(c: JuniorFractionConfig) -> Result<Report, Failure> {
    let provenance = Provenance::new("junior-fraction", &c, Some(c.master_seed)).tolerance("degree_tail", DEFAULT_TAIL_TOLERANCE);
    let spec = JuniorFractionSpec {
        n: c.n,
        gamma: c.gamma,
        r1: c.r1,
        z: c.z,
        fractions: c.fractions,
        simulation: c.simulation.map(|s| SimulationGrid {
            z_values: s.z_values,
            fractions: s.fractions,
            replicas: s.replicas,
            seeds: s.seeds,
        }),
        master_seed: c.master_seed,
    };
    let res = junior_fraction_experiment(&spec)?;
    let mut tables = vec![Table::main(csv(|w| res.write_theory_csv(w)))];
    tables.push(Table::extra(
        "boundary",
        csv(|w| {
            writeln!(w, "fraction,height")?;
            for b in &res.boundary {
                match b.height {
                    Some(h) => writeln!(w, "{:.16e},{h:.16e}", b.fraction)?,
                    None => writeln!(w, "{:.16e},", b.fraction)?,
                }
            }
            Ok(())
        }),
    ));
    if !res.simulation.is_empty() {
        tables.push(Table::extra("simulation", csv(|w| res.write_simulation_csv(w))));
    }
    Ok(Report {
        provenance,
        summary: object(json!({
            "optimal_fraction": res.optimal_fraction,
            "implied_ratio": res.implied_ratio,
        })),
        tables,
        json: to_json(&res),
    })
}
