//! Subcommand pipelines. Each writes its artifacts and returns a JSON summary.

use std::time::Instant;

use lawson_core::allencahn::{
    build_ansatz, energy_growth, nodal_components, residual_field, uniform_grid, LayerAnsatz,
};
use lawson_core::export::{self, num, CertificateRecord};
use lawson_core::geometry::{cone_distance_series, integrate_profile, mean_curvature_residual, ProfileCurve};
use lawson_core::heteroclinic::{energy_constant, interaction_coefficient, solve_profile_bvp};
use lawson_core::jacobi::{
    dilation_jacobi_field, jacobi_solution_basis, morse_index_lower_bound, smallest_eigenvalue, SturmLiouvilleProblem,
    WeightChoice,
};
use lawson_core::toda::{
    decouple, energy_balance, recombine, solve_liouville, toda_residual, LiouvilleSolution, TodaPair,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::artifacts::ArtifactSink;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::report;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Subcommand {
    Profile,
    Surface,
    Jacobi,
    Liouville,
    Toda,
    Ansatz,
    Report,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Profile => "profile",
            Subcommand::Surface => "surface",
            Subcommand::Jacobi => "jacobi",
            Subcommand::Liouville => "liouville",
            Subcommand::Toda => "toda",
            Subcommand::Ansatz => "ansatz",
            Subcommand::Report => "report",
        }
    }
}

/// Runs one subcommand and writes the effective configuration next to its artifacts.
pub fn run(sub: Subcommand, config: &RunConfig) -> Result<Value, CliError> {
    config.validate()?;
    let mut sink = ArtifactSink::new(config)?;
    sink.config(sub.name(), config)?;
    let start = Instant::now();
    let summary = match sub {
        Subcommand::Profile => profile(config, &mut sink),
        Subcommand::Surface => surface(config, &mut sink),
        Subcommand::Jacobi => jacobi(config, &mut sink),
        Subcommand::Liouville => liouville(config, &mut sink),
        Subcommand::Toda => toda(config, &mut sink),
        Subcommand::Ansatz => ansatz(config, &mut sink),
        Subcommand::Report => report::run_report(config, &mut sink),
    }?;
    eprintln!("{} finished in {:.2} s", sub.name(), start.elapsed().as_secs_f64());
    Ok(summary)
}

/// The configured coupling, or the fitted interaction coefficient.
pub fn effective_a_star(config: &RunConfig) -> f64 {
    config.a_star.unwrap_or_else(|| interaction_coefficient::<f64>().a0)
}

pub fn shoot(config: &RunConfig) -> Result<ProfileCurve<f64>, CliError> {
    Ok(integrate_profile(
        config.cone(),
        config.side.start_axis(),
        config.curve_length,
        config.tol,
    )?)
}

/// Sup of `|H|` off the axes, with the curvature taken from the sampled tangent.
pub fn mean_curvature_sup(curve: &ProfileCurve<f64>) -> f64 {
    mean_curvature_residual(curve)
        .into_iter()
        .flatten()
        .fold(0.0f64, |a, h| a.max(h.abs()))
}

fn profile(config: &RunConfig, sink: &mut ArtifactSink) -> Result<Value, CliError> {
    let p = solve_profile_bvp(10.0f64, 2001)?;
    let err: Vec<f64> = p
        .z_grid
        .iter()
        .zip(&p.w)
        .map(|(z, w)| w - (z / std::f64::consts::SQRT_2).tanh())
        .collect();
    sink.table("profile", None, None, |out| {
        export::table(
            out,
            &["z", "w", "w_prime", "error_vs_tanh"],
            (0..p.w.len()).map(|i| vec![num(p.z_grid[i]), num(p.w[i]), num(p.w_prime[i]), num(err[i])]),
        )
    })?;
    let fit = interaction_coefficient::<f64>();
    let summary = json!({
        "subcommand": "profile",
        "m": config.m,
        "n": config.n,
        "nodes": p.w.len(),
        "newton_iterations": p.newton_iterations,
        "ode_residual": p.ode_residual,
        "sup_error_vs_tanh": err.iter().fold(0.0f64, |a, e| a.max(e.abs())),
        "energy_constant": energy_constant::<f64>(),
        "energy_constant_exact": 2.0 * std::f64::consts::SQRT_2 / 3.0,
        "interaction_coefficient": fit.a0,
        "interaction_slope": fit.slope,
        "interaction_fit_residual": fit.relative_fit_residual,
        "interaction_warning": fit.warning,
    });
    sink.json("profile", Some("summary"), &summary)?;
    Ok(summary)
}

fn surface(config: &RunConfig, sink: &mut ArtifactSink) -> Result<Value, CliError> {
    let curve = shoot(config)?;
    sink.table("surface", None, None, |out| export::write_curve_csv(&curve, out))?;
    let dist = cone_distance_series(&curve);
    let summary = json!({
        "subcommand": "surface",
        "m": config.m,
        "n": config.n,
        "start_axis": config.side.start_axis(),
        "side": curve.side,
        "nodes": curve.len(),
        "arclength": curve.s[curve.len() - 1],
        "crossing_count": dist.crossing_count,
        "crossings": dist.crossings,
        "mean_curvature_sup": mean_curvature_sup(&curve),
    });
    sink.json("surface", Some("summary"), &summary)?;
    Ok(summary)
}

fn jacobi(config: &RunConfig, sink: &mut ArtifactSink) -> Result<Value, CliError> {
    let curve = shoot(config)?;
    let problem = SturmLiouvilleProblem::new(&curve, config.domain.s0, config.domain.s1)?;
    let cert = smallest_eigenvalue(&problem, WeightChoice::A2Weight, config.nodes)?;
    sink.json("jacobi", None, &CertificateRecord::new(&curve, &cert))?;
    sink.table("jacobi", Some("eigenvector"), None, |out| {
        export::table(
            out,
            &["s", "phi"],
            cert.grid
                .iter()
                .zip(&cert.eigenvector)
                .map(|(s, p)| vec![num(*s), num(*p)]),
        )
    })?;
    let dil = dilation_jacobi_field(&curve);
    let window = problem.first..=problem.last;
    let min_abs = dil.phi[window].iter().fold(f64::INFINITY, |a, p| a.min(p.abs()));
    let basis = if config.domain.s0 >= 0.01 {
        let b = jacobi_solution_basis(&problem)?;
        json!({
            "growth": [b.solutions[0].growth, b.solutions[1].growth],
            "nondegenerate": b.nondegenerate,
            "wronskian_drift": b.wronskian_drift,
        })
    } else {
        Value::Null
    };
    let negative = match config.morse_k {
        Some(k) => {
            let dirs = morse_index_lower_bound(&problem, k)?;
            sink.table("jacobi", Some("negative"), None, |out| {
                export::table(
                    out,
                    &["index", "s0", "s1", "Q"],
                    dirs.iter()
                        .enumerate()
                        .map(|(i, d)| vec![i.to_string(), num(d.window.0), num(d.window.1), num(d.energy)]),
                )
            })?;
            json!(dirs
                .iter()
                .map(|d| json!({"window": [d.window.0, d.window.1], "Q": d.energy}))
                .collect::<Vec<_>>())
        }
        None => Value::Null,
    };
    let summary = json!({
        "subcommand": "jacobi",
        "m": config.m,
        "n": config.n,
        "side": curve.side,
        "domain": [cert.domain.0, cert.domain.1],
        "lambda_min": cert.lambda_min,
        "converged": cert.converged,
        "dilation_residual_sup": dil.residual_sup,
        "dilation_min_abs": min_abs,
        "dilation_zeros": dil.zeros,
        "basis": basis,
        "negative_directions": negative,
    });
    sink.json("jacobi", Some("summary"), &summary)?;
    Ok(summary)
}

fn solve_all(
    config: &RunConfig,
    curve: &ProfileCurve<f64>,
    a_star: f64,
) -> Result<Vec<LiouvilleSolution<f64>>, CliError> {
    let domain = (config.domain.s0, config.domain.s1);
    let sols: Result<Vec<_>, _> = config
        .eps
        .par_iter()
        .map(|e| solve_liouville(curve, *e, a_star, domain))
        .collect();
    Ok(sols?)
}

fn liouville(config: &RunConfig, sink: &mut ArtifactSink) -> Result<Value, CliError> {
    let curve = shoot(config)?;
    let a_star = effective_a_star(config);
    let sols = solve_all(config, &curve, a_star)?;
    let mut runs = Vec::new();
    for sol in &sols {
        sink.table("liouville", None, Some(sol.epsilon), |out| {
            export::write_liouville_csv(sol, out)
        })?;
        let bal = energy_balance(&curve, sol);
        runs.push(json!({
            "eps": sol.epsilon,
            "newton_iterations": sol.newton_iterations,
            "final_residual": sol.final_residual,
            "max_deviation": sol.max_deviation(),
            "energy_imbalance": bal.relative_imbalance,
        }));
    }
    let summary = json!({
        "subcommand": "liouville",
        "m": config.m,
        "n": config.n,
        "a_star": a_star,
        "runs": runs,
    });
    sink.json("liouville", Some("summary"), &summary)?;
    Ok(summary)
}

/// Heights recombined from a Liouville solution, with their residuals in the two-layer
/// system.
pub struct TodaCheck {
    pub pair: TodaPair<f64>,
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    /// Decoupling then recombining returns the heights bit for bit.
    pub bit_exact: bool,
}

pub fn toda_check(curve: &ProfileCurve<f64>, sol: &LiouvilleSolution<f64>, a0: f64) -> Result<TodaCheck, CliError> {
    let pair = TodaPair::from_liouville(sol, a0)?;
    let (r1, r2) = toda_residual(&pair, curve)?;
    let (v1, v2) = decouple(&pair.h1, &pair.h2)?;
    let (h1, h2) = recombine(&v1, &v2)?;
    let bit_exact = h1.iter().zip(&pair.h1).all(|(a, b)| a.to_bits() == b.to_bits())
        && h2.iter().zip(&pair.h2).all(|(a, b)| a.to_bits() == b.to_bits());
    Ok(TodaCheck {
        pair,
        r1,
        r2,
        bit_exact,
    })
}

fn toda(config: &RunConfig, sink: &mut ArtifactSink) -> Result<Value, CliError> {
    let curve = shoot(config)?;
    let a_star = effective_a_star(config);
    let sols = solve_all(config, &curve, a_star)?;
    let mut runs = Vec::new();
    for sol in &sols {
        let TodaCheck {
            pair,
            r1,
            r2,
            bit_exact: exact,
        } = toda_check(&curve, sol, a_star)?;
        sink.table("toda", None, Some(sol.epsilon), |out| {
            export::table(
                out,
                &["s", "h1", "h2", "r1", "r2"],
                (0..r1.len()).map(|j| vec![num(sol.s[j]), num(pair.h1[j]), num(pair.h2[j]), num(r1[j]), num(r2[j])]),
            )
        })?;
        let sup = r1.iter().chain(&r2).fold(0.0f64, |a, r| a.max(r.abs()));
        runs.push(json!({
            "eps": sol.epsilon,
            "residual_sup": sup,
            "decouple_recombine_bit_exact": exact,
        }));
    }
    let summary = json!({
        "subcommand": "toda",
        "m": config.m,
        "n": config.n,
        "a0": a_star,
        "runs": runs,
    });
    sink.json("toda", Some("summary"), &summary)?;
    Ok(summary)
}

fn ansatz(config: &RunConfig, sink: &mut ArtifactSink) -> Result<Value, CliError> {
    let curve = shoot(config)?;
    let a_star = effective_a_star(config);
    let sols = solve_all(config, &curve, a_star)?;
    let grid = uniform_grid(config.grid_nodes, config.grid_spacing);
    let extent = grid[grid.len() - 1];
    let mut runs = Vec::new();
    for sol in &sols {
        let eps = sol.epsilon;
        let layers = LayerAnsatz::from_liouville(curve.clone(), sol, config.k, config.tube_radius)?;
        let field = build_ansatz(&layers, &grid, &grid)?;
        let (_, residual_sup) = residual_field(&field);
        let nodal = nodal_components(&field)?;
        if config.write_field {
            sink.table("ansatz", None, Some(eps), |out| export::write_field_csv(&field, out))?;
        }
        sink.table("ansatz", Some("nodal"), Some(eps), |out| {
            export::write_nodal_csv(&nodal, out)
        })?;
        let slope = if 2.0 / eps < extent {
            let growth = energy_growth(&field, 2.0 / eps, extent, 16)?;
            sink.table("ansatz", Some("energy"), Some(eps), |out| {
                export::write_energy_csv(&growth, out)
            })?;
            Some(growth.slope)
        } else {
            None
        };
        runs.push(json!({
            "eps": eps,
            "residual_sup": residual_sup,
            "nodal_count": nodal.count,
            "components": nodal.components.iter().map(|c| json!({
                "id": c.id,
                "single_valued": c.single_valued,
                "inside_tube": c.inside_tube,
                "truncated": c.truncated,
                "points": c.points.len(),
            })).collect::<Vec<_>>(),
            "warnings": nodal.warnings,
            "energy_slope": slope,
        }));
    }
    let summary = json!({
        "subcommand": "ansatz",
        "m": config.m,
        "n": config.n,
        "k": config.k,
        "a_star": a_star,
        "grid": {"nodes": config.grid_nodes, "spacing": config.grid_spacing},
        "runs": runs,
    });
    sink.json("ansatz", Some("summary"), &summary)?;
    Ok(summary)
}
