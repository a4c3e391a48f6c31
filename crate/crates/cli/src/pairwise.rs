use anyhow::Result;
use clap::Args;
use proxbound::eval::performance_ratio;
use proxbound::pairwise::{
    cg_pairwise_baseline, commute_pairwise_bounds, katz_pairwise_bounds, validate_spectrum_bounds, BaselineKind,
    BaselineResult, BoundsTrace, PairwiseParams,
};
use proxbound::{AdjustedLaplacianOperator, Graph, KatzOperator};
use serde::Serialize;

use crate::config::{check_positive, resolve_alpha, AlphaArg, GraphArgs, KindArg};
use crate::output;

/// Graphs up to this size get a dense check of the spectrum bounds.
const SPECTRUM_CHECK_LIMIT: usize = 500;

#[derive(Debug, Clone, Args)]
pub struct PairwiseArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// External id of the first vertex.
    #[arg(long)]
    pub i: usize,
    /// External id of the second vertex.
    #[arg(long)]
    pub j: usize,
    /// Katz damping: `hard` or a value.
    #[arg(long, default_value = "hard")]
    pub alpha: AlphaArg,
    /// Lower bound on the operator spectrum.
    #[arg(long, default_value_t = proxbound::pairwise::DEFAULT_LAMBDA_LO)]
    pub lambda_lo: f64,
    /// Upper bound on the operator spectrum [default: the operator 1-norm].
    #[arg(long)]
    pub lambda_hi: Option<f64>,
    /// Stop once upper - lower < tau.
    #[arg(long, default_value_t = proxbound::pairwise::DEFAULT_TAU)]
    pub tau: f64,
    /// Iteration cap [default: min(n, 500)].
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Also run conjugate gradient with the pairwise stopping rule.
    #[arg(long)]
    pub baseline: bool,
}

#[derive(Serialize)]
struct PairwiseReport<'a> {
    kind: &'static str,
    i: usize,
    j: usize,
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_max: Option<f64>,
    trace: &'a BoundsTrace,
    #[serde(skip_serializing_if = "Option::is_none")]
    baseline: Option<&'a BaselineResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    performance_ratio: Option<f64>,
}

/// Runs one query on internal vertex ids.
pub fn query(
    g: &Graph,
    kind: KindArg,
    i: usize,
    j: usize,
    alpha: Option<f64>,
    params: &PairwiseParams,
    baseline: bool,
) -> Result<(BoundsTrace, Option<BaselineResult>)> {
    let max_iter = params.max_iter.unwrap_or(g.n().min(proxbound::pairwise::DEFAULT_MAX_ITER_CAP));
    Ok(match kind {
        KindArg::Commute => {
            let t = commute_pairwise_bounds(g, i, j, params)?;
            let b = if baseline {
                Some(cg_pairwise_baseline(g, BaselineKind::Commute, i, j, params.tau, max_iter)?)
            } else {
                None
            };
            (t, b)
        }
        KindArg::Katz => {
            let a = alpha.expect("Katz queries need alpha");
            let t = katz_pairwise_bounds(g, a, i, j, params)?;
            let b = if baseline {
                Some(cg_pairwise_baseline(g, BaselineKind::Katz { alpha: a }, i, j, params.tau, max_iter)?)
            } else {
                None
            };
            (t, b)
        }
    })
}

pub fn kind_name(kind: KindArg) -> &'static str {
    match kind {
        KindArg::Katz => "katz",
        KindArg::Commute => "commute",
    }
}

pub fn run(args: &PairwiseArgs) -> Result<()> {
    check_positive("tau", args.tau)?;
    check_positive("lambda-lo", args.lambda_lo)?;
    let g = args.graph.load()?;
    let i = args.graph.vertex(&g, args.i)?;
    let j = args.graph.vertex(&g, args.j)?;
    let params = PairwiseParams {
        lambda_lo: args.lambda_lo,
        lambda_hi: args.lambda_hi,
        tau: args.tau,
        max_iter: args.max_iter,
        ..PairwiseParams::default()
    };
    let (alpha, sigma_max) = match args.kind {
        KindArg::Katz => {
            let (a, s) = resolve_alpha(&g, args.alpha, args.graph.seed)?;
            (Some(a), s)
        }
        KindArg::Commute => (None, None),
    };
    if g.n() <= SPECTRUM_CHECK_LIMIT {
        match args.kind {
            KindArg::Commute => {
                let hi = args.lambda_hi.unwrap_or_else(|| proxbound::operator::adjusted_laplacian_one_norm(&g));
                validate_spectrum_bounds(&AdjustedLaplacianOperator::new(&g), args.lambda_lo, hi)?;
            }
            KindArg::Katz => {
                let op = KatzOperator::new(&g, alpha.unwrap_or(0.0))?;
                let hi = args.lambda_hi.unwrap_or_else(|| op.one_norm());
                validate_spectrum_bounds(&op, args.lambda_lo, hi)?;
            }
        }
    }
    let (trace, baseline) = query(&g, args.kind, i, j, alpha, &params, args.baseline)?;

    let stem = format!("trace_{}_{}_{}", kind_name(args.kind), args.i, args.j);
    let dir = &args.graph.out_dir;
    write_trace_csv(&dir.join(format!("{stem}.csv")), &trace, baseline.as_ref())?;
    let ratio = baseline
        .as_ref()
        .and_then(|b| performance_ratio(b.matvecs, trace.matvecs).ok());
    let report = PairwiseReport {
        kind: kind_name(args.kind),
        i: args.i,
        j: args.j,
        n: g.n(),
        sigma_max,
        trace: &trace,
        baseline: baseline.as_ref(),
        performance_ratio: ratio,
    };
    output::write_json(&dir.join(format!("{stem}.json")), &report)?;
    println!(
        "{} ({}, {}): [{}, {}] after {} iterations, {} matvecs{}",
        kind_name(args.kind),
        args.i,
        args.j,
        trace.final_lower,
        trace.final_upper,
        trace.iterations(),
        trace.matvecs,
        if trace.converged { "" } else { " (not converged)" }
    );
    if let Some(b) = &baseline {
        println!("cg: {} after {} matvecs", b.estimate, b.matvecs);
    }
    Ok(())
}

/// `iteration,lower,upper[,cg_estimate]`; cells past the end of the shorter
/// sequence are left empty.
fn write_trace_csv(path: &std::path::Path, trace: &BoundsTrace, baseline: Option<&BaselineResult>) -> Result<()> {
    let mut w = output::csv_writer(path)?;
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    match baseline {
        None => {
            w.write_record(["iteration", "lower", "upper"])?;
            for r in &trace.rows {
                w.write_record([r.iteration.to_string(), r.lower.to_string(), r.upper.to_string()])?;
            }
        }
        Some(b) => {
            w.write_record(["iteration", "lower", "upper", "cg_estimate"])?;
            let len = trace.rows.len().max(b.estimates.len());
            for k in 0..len {
                let row = trace.rows.get(k);
                w.write_record([
                    (k + 1).to_string(),
                    cell(row.map(|r| r.lower)),
                    cell(row.map(|r| r.upper)),
                    cell(b.estimates.get(k).copied()),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
