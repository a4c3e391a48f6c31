use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use proxbound::graph::{load_edge_list, load_matrix_market, preprocess};
use proxbound::pairwise::SPECTRAL_TOL;
use proxbound::{Graph, IndexBase};

use crate::output;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphFormat {
    /// Edge list with 0-based ids.
    Edges0,
    /// Edge list with 1-based ids.
    Edges1,
    /// Matrix Market coordinate file.
    Mtx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Katz,
    Commute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScalingArg {
    Residual,
    Degree,
}

impl From<ScalingArg> for proxbound::column_katz::Scaling {
    fn from(s: ScalingArg) -> Self {
        match s {
            ScalingArg::Residual => Self::Residual,
            ScalingArg::Degree => Self::DegreeScaled,
        }
    }
}

/// `hard` for `1/(||A||_2 + 1)`, or an explicit positive value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaArg {
    Hard,
    Value(f64),
}

impl FromStr for AlphaArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("hard") {
            return Ok(AlphaArg::Hard);
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(AlphaArg::Value(v)),
            _ => Err(format!("expected `hard` or a positive number, got {s:?}")),
        }
    }
}

/// Options shared by every command.
#[derive(Debug, Clone, Args)]
pub struct GraphArgs {
    /// Input graph file.
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, value_enum, default_value = "edges0")]
    pub format: GraphFormat,
    /// Directory for output files (created if missing).
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// Seed for every random choice (start vectors, sampling).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl GraphArgs {
    pub fn load(&self) -> Result<Graph> {
        let file = File::open(&self.graph).with_context(|| format!("cannot open {}", self.graph.display()))?;
        let reader = BufReader::new(file);
        let raw = match self.format {
            GraphFormat::Edges0 => load_edge_list(reader, IndexBase::Zero, None),
            GraphFormat::Edges1 => load_edge_list(reader, IndexBase::One, None),
            GraphFormat::Mtx => load_matrix_market(reader),
        }
        .with_context(|| format!("cannot parse {}", self.graph.display()))?;
        let g = preprocess(&raw)?;
        std::fs::create_dir_all(&self.out_dir)
            .with_context(|| format!("cannot create {}", self.out_dir.display()))?;
        output::write_vertex_map(&self.out_dir, &g)?;
        Ok(g)
    }

    /// Internal index of an external vertex id.
    pub fn vertex(&self, g: &Graph, label: usize) -> Result<usize> {
        g.vertex_for_label(label).ok_or_else(|| {
            anyhow!(
                "vertex {label} is not in the largest component; the id map is in {}",
                self.out_dir.join(output::VERTEX_MAP).display()
            )
        })
    }
}

/// Damping value and, when it was computed, `||A||_2`.
pub fn resolve_alpha(g: &Graph, alpha: AlphaArg, seed: u64) -> Result<(f64, Option<f64>)> {
    match alpha {
        AlphaArg::Hard => {
            let sigma = proxbound::operator::spectral_norm_estimate(g, SPECTRAL_TOL, seed)?;
            let a = 1.0 / (sigma + 1.0);
            if a * sigma >= 1.0 || !a.is_finite() {
                bail!("hard alpha {a} does not satisfy alpha * sigma_max < 1");
            }
            Ok((a, Some(sigma)))
        }
        AlphaArg::Value(a) => Ok((a, None)),
    }
}

pub fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        bail!("{name} must be positive, got {v}");
    }
    Ok(())
}
