use anyhow::Result;
use clap::Args;
use proxbound::operator::spectral_norm_estimate;
use proxbound::pairwise::SPECTRAL_TOL;

use crate::config::GraphArgs;
use crate::output;

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Skip the Lanczos estimate of ||A||_2.
    #[arg(long)]
    pub no_sigma: bool,
}

/// Writes `stats.json` and prints it.
pub fn run(args: &StatsArgs) -> Result<()> {
    let g = args.graph.load()?;
    let mut summary = g.summary();
    if !args.no_sigma {
        summary.sigma_max = Some(spectral_norm_estimate(&g, SPECTRAL_TOL, args.graph.seed)?);
    }
    output::write_json(&args.graph.out_dir.join("stats.json"), &summary)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}
