//! Run configuration: defaults, TOML file loading, flag overrides and validation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lawson_core::{ConeParams, StartAxis};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CliError;

/// Which branch of generating curve to shoot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SideChoice {
    /// Shot from the y-axis.
    Plus,
    /// Shot from the x-axis.
    Minus,
}

impl SideChoice {
    pub fn start_axis(self) -> StartAxis {
        match self {
            SideChoice::Plus => StartAxis::YAxis,
            SideChoice::Minus => StartAxis::XAxis,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Arclength interval written `s0:s1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub s0: f64,
    pub s1: f64,
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.s0, self.s1)
    }
}

impl FromStr for Domain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| format!("domain `{s}` is not of the form s0:s1"))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad domain end `{t}`: {e}"))
        };
        Ok(Domain {
            s0: parse(a)?,
            s1: parse(b)?,
        })
    }
}

impl Serialize for Domain {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Domain {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub m: usize,
    pub n: usize,
    pub side: SideChoice,
    /// Strictly decreasing.
    pub eps: Vec<f64>,
    /// Number of layers for `ansatz`.
    pub k: usize,
    /// Liouville coupling; the fitted interaction coefficient when absent.
    pub a_star: Option<f64>,
    /// Window for `jacobi`, `liouville`, `toda` and `ansatz`.
    pub domain: Domain,
    /// Arclength the generating curve is shot to.
    pub curve_length: f64,
    /// Integrator tolerance.
    pub tol: f64,
    /// Nodes of the eigenvalue grid.
    pub nodes: usize,
    /// Requested number of negative Jacobi directions.
    pub morse_k: Option<usize>,
    /// Grid spacing of the reduced field in the blown-up scale.
    pub grid_spacing: f64,
    /// Grid nodes per direction.
    pub grid_nodes: usize,
    /// Fermi tube radius in curve units.
    pub tube_radius: f64,
    /// Also write the full reduced field from `ansatz`.
    pub write_field: bool,
    pub output_dir: PathBuf,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            m: 4,
            n: 4,
            side: SideChoice::Minus,
            eps: vec![0.1, 0.05, 0.025],
            k: 2,
            a_star: None,
            domain: Domain { s0: 0.01, s1: 150.0 },
            curve_length: 200.0,
            tol: 1e-10,
            nodes: 2000,
            morse_k: None,
            grid_spacing: 0.1,
            grid_nodes: 1500,
            tube_radius: 1.0,
            write_field: true,
            output_dir: PathBuf::from("out"),
            format: Format::Csv,
        }
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Validation(msg()))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn cone(&self) -> ConeParams {
        ConeParams { m: self.m, n: self.n }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        check((2..=32).contains(&self.m) && (2..=32).contains(&self.n), || {
            format!("m and n must lie in [2, 32] (got {}, {})", self.m, self.n)
        })?;
        check(!self.eps.is_empty(), || "eps list is empty".into())?;
        for e in &self.eps {
            check(*e > 0.0 && *e <= 0.5, || format!("eps {e} outside (0, 0.5]"))?;
        }
        check(self.eps.windows(2).all(|p| p[1] < p[0]), || {
            format!("eps list {:?} is not strictly decreasing", self.eps)
        })?;
        check((1..=10).contains(&self.k), || format!("k = {} outside [1, 10]", self.k))?;
        if let Some(a) = self.a_star {
            check(a > 0.0 && a.is_finite(), || format!("a_star {a} must be positive"))?;
        }
        check((50.0..=5000.0).contains(&self.curve_length), || {
            format!("curve_length {} outside [50, 5000]", self.curve_length)
        })?;
        let Domain { s0, s1 } = self.domain;
        check(s0 >= 0.0 && s1 > s0 && s1 <= self.curve_length, || {
            format!("domain {} must satisfy 0 <= s0 < s1 <= curve_length", self.domain)
        })?;
        check((1e-12..=1e-6).contains(&self.tol), || {
            format!("tol {:e} outside [1e-12, 1e-6]", self.tol)
        })?;
        check((200..=200_000).contains(&self.nodes), || {
            format!("nodes = {} outside [200, 200000]", self.nodes)
        })?;
        if let Some(k) = self.morse_k {
            check((1..=64).contains(&k), || format!("morse_k = {k} outside [1, 64]"))?;
        }
        check(self.grid_spacing > 0.0 && self.grid_spacing <= 0.25, || {
            format!("grid_spacing {} outside (0, 0.25]", self.grid_spacing)
        })?;
        check((16..=10_000).contains(&self.grid_nodes), || {
            format!("grid_nodes = {} outside [16, 10000]", self.grid_nodes)
        })?;
        check(self.tube_radius > 0.0 && self.tube_radius <= 10.0, || {
            format!("tube_radius {} outside (0, 10]", self.tube_radius)
        })?;
        Ok(())
    }
}

/// Flag values that override the file (or the defaults).
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// TOML file with a run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Cone parameter m.
    #[arg(long)]
    pub m: Option<usize>,
    /// Cone parameter n.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_enum)]
    pub side: Option<SideChoice>,
    /// Comma-separated, strictly decreasing.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub eps: Option<Vec<f64>>,
    /// Number of layers in `ansatz`.
    #[arg(long)]
    pub k: Option<usize>,
    /// Interaction coefficient; defaults to the fitted tail constant.
    #[arg(long = "a-star")]
    pub a_star: Option<f64>,
    /// Arclength window `s0:s1`.
    #[arg(long)]
    pub domain: Option<Domain>,
    /// Arclength of the shot curve.
    #[arg(long = "curve-length")]
    pub curve_length: Option<f64>,
    /// Integrator tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Finite-element nodes for the Jacobi problem.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Ask `jacobi` for this many disjoint negative directions.
    #[arg(long = "morse-k")]
    pub morse_k: Option<usize>,
    /// Ansatz grid spacing in r and t.
    #[arg(long = "grid-spacing")]
    pub grid_spacing: Option<f64>,
    /// Ansatz grid nodes per axis.
    #[arg(long = "grid-nodes")]
    pub grid_nodes: Option<usize>,
    /// Tube half-width delta around the curve.
    #[arg(long = "tube-radius")]
    pub tube_radius: Option<f64>,
    /// Skip the full field table in `ansatz`.
    #[arg(long = "no-field")]
    pub no_field: bool,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl Overrides {
    /// Merged and validated configuration.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        macro_rules! take {
            ($($f:ident => $g:ident),*) => {$(
                if let Some(v) = self.$f.clone() {
                    c.$g = v;
                }
            )*};
        }
        take!(m => m, n => n, side => side, eps => eps, k => k, domain => domain,
              curve_length => curve_length, tol => tol, nodes => nodes,
              grid_spacing => grid_spacing, grid_nodes => grid_nodes,
              tube_radius => tube_radius, out => output_dir, format => format);
        if self.a_star.is_some() {
            c.a_star = self.a_star;
        }
        if self.morse_k.is_some() {
            c.morse_k = self.morse_k;
        }
        if self.no_field {
            c.write_field = false;
        }
        c.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = RunConfig::default();
        c.validate().unwrap();
        let back: RunConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        let c = RunConfig {
            a_star: Some(2.5),
            morse_k: Some(3),
            domain: Domain { s0: 0.0, s1: 0.1 + 0.2 },
            ..c
        };
        let back: RunConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            RunConfig {
                eps: vec![0.05, 0.1],
                ..Default::default()
            },
            RunConfig {
                eps: vec![0.6],
                ..Default::default()
            },
            RunConfig {
                m: 1,
                ..Default::default()
            },
            RunConfig {
                tol: 1e-3,
                ..Default::default()
            },
            RunConfig {
                domain: Domain { s0: 5.0, s1: 1.0 },
                ..Default::default()
            },
            RunConfig {
                a_star: Some(-1.0),
                ..Default::default()
            },
            RunConfig {
                grid_spacing: 0.5,
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(CliError::Validation(_))), "{c:?}");
        }
    }

    #[test]
    fn domain_parsing() {
        assert_eq!("0.01:150".parse::<Domain>().unwrap(), Domain { s0: 0.01, s1: 150.0 });
        assert!("0.01-150".parse::<Domain>().is_err());
        assert!("a:1".parse::<Domain>().is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("mm = 3").is_err());
        let c: RunConfig = toml::from_str("m = 3\nn = 5\neps = [0.2]").unwrap();
        assert_eq!((c.m, c.n, c.eps.clone()), (3, 5, vec![0.2]));
        assert_eq!(c.tol, 1e-10);
    }
}
