//! Plot-ready tables. Floats are written with 17 significant digits.

use std::io::Write;

use serde::Serialize;

use crate::allencahn::{EnergyGrowth, NodalSet, ReducedField2D};
use crate::error::{LabError, Result};
use crate::geometry::{ProfileCurve, Side};
use crate::jacobi::{SpectralCertificate, WeightChoice};
use crate::scalar::Real;
use crate::toda::LiouvilleSolution;

/// Scientific notation with 17 significant digits.
pub fn num<T: Real>(x: T) -> String {
    format!("{:.16e}", x.as_f64())
}

fn io_err(e: impl std::fmt::Display) -> LabError {
    LabError::Domain(format!("write failed: {e}"))
}

/// Generic CSV table with a header row.
pub fn table<W: Write>(out: W, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(io_err)?;
    for row in rows {
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// `s,x,y,tx,ty,kappa,A2,weight`, one row per node.
pub fn write_curve_csv<T: Real, W: Write>(curve: &ProfileCurve<T>, out: W) -> Result<()> {
    table(
        out,
        &["s", "x", "y", "tx", "ty", "kappa", "A2", "weight"],
        (0..curve.len()).map(|i| {
            [
                curve.s[i],
                curve.x[i],
                curve.y[i],
                curve.tx[i],
                curve.ty[i],
                curve.kappa[i],
                curve.a2[i],
                curve.weight[i],
            ]
            .into_iter()
            .map(num)
            .collect()
        }),
    )
}

/// `s,A2,v,v_asymptotic,deviation`.
pub fn write_liouville_csv<T: Real, W: Write>(sol: &LiouvilleSolution<T>, out: W) -> Result<()> {
    table(
        out,
        &["s", "A2", "v", "v_asymptotic", "deviation"],
        (0..sol.v.len()).map(|i| {
            [
                sol.s[i],
                sol.a2[i],
                sol.v[i],
                sol.v_asymptotic[i],
                sol.v[i] - sol.v_asymptotic[i],
            ]
            .into_iter()
            .map(num)
            .collect()
        }),
    )
}

/// `r,t,u`, `r` outermost.
pub fn write_field_csv<T: Real, W: Write>(field: &ReducedField2D<T>, out: W) -> Result<()> {
    let nt = field.t_grid.len();
    table(
        out,
        &["r", "t", "u"],
        (0..field.u.len()).map(|idx| {
            vec![
                num(field.r_grid[idx / nt]),
                num(field.t_grid[idx % nt]),
                num(field.u[idx]),
            ]
        }),
    )
}

/// `s,z,component_id` with `z` in curve units.
pub fn write_nodal_csv<T: Real, W: Write>(set: &NodalSet<T>, out: W) -> Result<()> {
    table(
        out,
        &["s", "z", "component_id"],
        set.components.iter().flat_map(|c| {
            c.s.iter()
                .zip(&c.z)
                .map(move |(s, z)| vec![num(*s), num(*z), c.id.to_string()])
        }),
    )
}

/// `R,E,log_slope_running`.
pub fn write_energy_csv<T: Real, W: Write>(growth: &EnergyGrowth<T>, out: W) -> Result<()> {
    table(
        out,
        &["R", "E", "log_slope_running"],
        growth.samples.iter().map(|(r, e, k)| vec![num(*r), num(*e), num(*k)]),
    )
}

/// JSON form of a spectral certificate.
#[derive(Debug, Clone, Serialize)]
pub struct CertificateRecord {
    pub m: usize,
    pub n: usize,
    pub side: Side,
    pub domain: (f64, f64),
    pub weight_choice: WeightChoice,
    pub nodes: usize,
    pub lambda_min: f64,
    pub converged: bool,
}

impl CertificateRecord {
    pub fn new<T: Real>(curve: &ProfileCurve<T>, cert: &SpectralCertificate<T>) -> Self {
        CertificateRecord {
            m: curve.cone.m,
            n: curve.cone.n,
            side: curve.side,
            domain: (cert.domain.0.as_f64(), cert.domain.1.as_f64()),
            weight_choice: cert.weight_choice,
            nodes: cert.discretization_size,
            lambda_min: cert.lambda_min.as_f64(),
            converged: cert.converged,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{cone_ray, ConeParams};

    #[test]
    fn curve_table() {
        let ray = cone_ray(ConeParams::new(4, 4).unwrap(), 1.0, 1.02, 0.01).unwrap();
        let mut buf = Vec::new();
        write_curve_csv(&ray, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "s,x,y,tx,ty,kappa,A2,weight");
        assert_eq!(lines.len(), ray.len() + 1);
        let first: f64 = lines[1].split(',').next().unwrap().parse().unwrap();
        assert_eq!(first, ray.s[0]);
        assert!(lines[1].starts_with("1.0000000000000000e0,"));
    }
}
