use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AxisRange;
use crate::error::{Error, Result};
use crate::theory::{jacobian_m_er_closed_form, max_fragile_total};

/// Cascade region over `(R1, z)` for an Erdős–Rényi graph of mean degree
/// `z` split into `m` independent layers of mean `z/m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MLayerRaster {
    pub m: usize,
    pub r1_values: Vec<f64>,
    pub z_values: Vec<f64>,
    /// Row-major, `z` outer.
    pub lambda_max: Vec<f64>,
}

impl MLayerRaster {
    pub fn lambda(&self, iz: usize, ir: usize) -> f64 {
        self.lambda_max[iz * self.r1_values.len() + ir]
    }

    pub fn member(&self, iz: usize, ir: usize) -> bool {
        self.lambda(iz, ir) > 1.0
    }

    pub fn membership_count(&self) -> usize {
        self.lambda_max.iter().filter(|&&l| l > 1.0).count()
    }

    /// Index of the `R1` column closest to `r1`.
    pub fn nearest_column(&self, r1: f64) -> usize {
        (0..self.r1_values.len())
            .min_by(|&a, &b| (self.r1_values[a] - r1).abs().total_cmp(&(self.r1_values[b] - r1).abs()))
            .unwrap_or(0)
    }

    pub fn column_count(&self, ir: usize) -> usize {
        (0..self.z_values.len()).filter(|&iz| self.member(iz, ir)).count()
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "m,r1,z,lambda_max,cascade")?;
        for (iz, z) in self.z_values.iter().enumerate() {
            for (ir, r1) in self.r1_values.iter().enumerate() {
                let l = self.lambda(iz, ir);
                writeln!(out, "{},{:.16e},{:.16e},{:.16e},{}", self.m, r1, z, l, (l > 1.0) as u8)?;
            }
        }
        Ok(())
    }
}

/// One raster per entry of `m_list`, each cell holding `tr J` of the
/// closed-form Poisson Jacobian.
pub fn m_layer_split_regions(m_list: &[usize], r1_axis: &AxisRange, z_axis: &AxisRange) -> Result<Vec<MLayerRaster>> {
    r1_axis.validate()?;
    z_axis.validate()?;
    if m_list.is_empty() || m_list.contains(&0) {
        return Err(Error::invalid("layer counts must be >= 1"));
    }
    if r1_axis.lo <= 0.0 {
        return Err(Error::invalid("R1 axis must be positive"));
    }
    if z_axis.lo < 0.0 {
        return Err(Error::invalid("z axis must be >= 0"));
    }
    let r1s = r1_axis.values();
    let zs = z_axis.values();
    m_list
        .iter()
        .map(|&m| {
            let lambda_max = (0..zs.len() * r1s.len())
                .into_par_iter()
                .map(|idx| {
                    let (z, r1) = (zs[idx / r1s.len()], r1s[idx % r1s.len()]);
                    if max_fragile_total(r1) == Some(0) {
                        return Ok(0.0);
                    }
                    Ok(jacobian_m_er_closed_form(&vec![z / m as f64; m], r1)?.lambda_max())
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(MLayerRaster {
                m,
                r1_values: r1s.clone(),
                z_values: zs.clone(),
                lambda_max,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shrinks_with_layers_and_vanishes_at_zero_degree() {
        let r1 = AxisRange::new(0.02, 0.4, 40).unwrap();
        let z = AxisRange::new(0.0, 20.0, 41).unwrap();
        let rs = m_layer_split_regions(&[1, 2, 3], &r1, &z).unwrap();
        for w in rs.windows(2) {
            for iz in 0..41 {
                for ir in 0..40 {
                    assert!(!w[1].member(iz, ir) || w[0].member(iz, ir));
                }
            }
        }
        assert!((0..40).all(|ir| rs.iter().all(|r| !r.member(0, ir))));
        assert!(rs[0].membership_count() > rs[2].membership_count());
    }

    #[test]
    fn one_layer_uses_single_layer_condition() {
        let r1 = AxisRange::new(0.3, 0.3, 1).unwrap();
        let z = AxisRange::new(2.0, 2.0, 1).unwrap();
        let r = &m_layer_split_regions(&[1], &r1, &z).unwrap()[0];
        // z · P[Poisson(z) ≤ 2] at z = 2, K = 3.
        let expect = 2.0 * (-2f64).exp() * (1.0 + 2.0 + 2.0);
        assert!((r.lambda(0, 0) - expect).abs() < 1e-12);
    }
}
