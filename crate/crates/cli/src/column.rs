use anyhow::Result;
use clap::Args;
use proxbound::column_commute::{commute_column, inverse_degree_heuristic, CommuteColumn, COMPLETE_LIMIT};
use proxbound::column_katz::{katz_column_push, KatzColumn, PushOptions};
use proxbound::eval::{kendall_tau_b, precision_at_k, Direction, TopKSet};
use proxbound::solvers::{DenseReference, DENSE_LIMIT};
use proxbound::Graph;
use serde::Serialize;

use crate::config::{check_positive, resolve_alpha, AlphaArg, GraphArgs, KindArg, ScalingArg};
use crate::output;

/// Scores closer than this at the k-th position make a top-k set ambiguous.
const TIE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Args)]
pub struct ColumnArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// External id of the source vertex.
    #[arg(long)]
    pub i: usize,
    /// Top-k sizes for the oracle comparison.
    #[arg(long, value_delimiter = ',', default_value = "10,25,100,1000")]
    pub k: Vec<usize>,
    /// Katz damping: `hard` or a value.
    #[arg(long, default_value = "hard")]
    pub alpha: AlphaArg,
    /// Push threshold for Katz columns. A threshold at or above the initial
    /// residual means no push happens, and the column is reported as zero.
    #[arg(long, default_value_t = 1e-4)]
    pub tau: f64,
    /// Relative residual target for commute columns.
    #[arg(long, default_value_t = proxbound::column_commute::DEFAULT_TOL)]
    pub tol: f64,
    /// Push priority for Katz columns.
    #[arg(long, value_enum, default_value = "degree")]
    pub scaling: ScalingArg,
    /// Push budget [default: 50 n].
    #[arg(long)]
    pub max_pushes: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub method: &'static str,
    pub k: usize,
    pub precision: f64,
    /// Kendall tau-b on the exact top-k set; empty when undefined.
    pub kendall_tau: Option<f64>,
    /// The exact k-th and (k+1)-th scores (nearly) tie.
    pub boundary_tied: bool,
}

/// Precision@k and Kendall tau of `approx` against `exact`.
pub fn compare(
    method: &'static str,
    approx: &[f64],
    exact: &[f64],
    source: usize,
    k: usize,
    direction: Direction,
) -> Result<CompareRow> {
    let a = TopKSet::from_scores(approx, k, direction, Some(source));
    let e = TopKSet::from_scores(exact, k, direction, Some(source));
    let precision = precision_at_k(&a, &e)?;
    let alg_on_exact: Vec<f64> = e.vertices.iter().map(|&v| approx[v]).collect();
    let kendall_tau = kendall_tau_b(&alg_on_exact, &e.scores).ok();
    Ok(CompareRow {
        method,
        k,
        precision,
        kendall_tau,
        boundary_tied: TopKSet::boundary_tied(exact, k, direction, Some(source), TIE_EPS),
    })
}

#[derive(Serialize)]
struct KatzRow {
    vertex: usize,
    score: f64,
}

#[derive(Serialize)]
struct CommuteRow {
    vertex: usize,
    score: f64,
    solve_part: f64,
    diag_part: f64,
}

#[derive(Serialize)]
struct KatzStats<'a> {
    source: usize,
    alpha: f64,
    tau: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_max: Option<f64>,
    converged: bool,
    #[serde(flatten)]
    stats: &'a proxbound::column_katz::PushStats,
}

#[derive(Serialize)]
struct CommuteStats {
    source: usize,
    tol: f64,
    complete: bool,
    iterations: usize,
    matvecs: usize,
    residual_norm: f64,
    converged: bool,
}

pub fn katz_column(g: &Graph, alpha: f64, sigma_max: Option<f64>, i: usize, args: &ColumnArgs) -> Result<KatzColumn> {
    let opts = PushOptions {
        tau: args.tau,
        scaling: args.scaling.into(),
        max_pushes: args.max_pushes,
        sigma_max,
    };
    Ok(katz_column_push(g, alpha, i, &opts)?)
}

pub fn run(args: &ColumnArgs) -> Result<()> {
    check_positive("tau", args.tau)?;
    check_positive("tol", args.tol)?;
    let g = args.graph.load()?;
    let i = args.graph.vertex(&g, args.i)?;
    let dir = &args.graph.out_dir;
    let with_oracle = g.n() <= DENSE_LIMIT;
    let mut report = Vec::new();
    match args.kind {
        KindArg::Katz => {
            let (alpha, sigma_max) = resolve_alpha(&g, args.alpha, args.graph.seed)?;
            let col = katz_column(&g, alpha, sigma_max, i, args)?;
            let rows: Vec<KatzRow> = col
                .sorted_by_score()
                .into_iter()
                .map(|(v, score)| KatzRow {
                    vertex: g.label(v),
                    score,
                })
                .collect();
            output::write_rows(&dir.join(format!("column_katz_{}.csv", args.i)), &rows)?;
            let stats = KatzStats {
                source: args.i,
                alpha,
                tau: args.tau,
                sigma_max,
                converged: col.converged,
                stats: &col.stats,
            };
            output::write_json(&dir.join(format!("column_katz_{}_stats.json", args.i)), &stats)?;
            if with_oracle {
                let exact = DenseReference::new(&g, Some(alpha))?.katz_column(i);
                let approx = col.to_dense();
                for &k in &args.k {
                    report.push(compare("push", &approx, &exact, i, k, Direction::Largest)?);
                }
            }
            println!(
                "katz column {}: {} entries, {} pushes, {:.3} effective matvecs",
                args.i,
                col.entries.len(),
                col.stats.pushes,
                col.stats.effective_matvecs
            );
        }
        KindArg::Commute => {
            let col: CommuteColumn = commute_column(&g, i, args.tol)?;
            let mut order: Vec<usize> = (0..g.n()).collect();
            order.sort_by(|&a, &b| col.scores[a].total_cmp(&col.scores[b]).then(a.cmp(&b)));
            let rows: Vec<CommuteRow> = order
                .into_iter()
                .map(|v| CommuteRow {
                    vertex: g.label(v),
                    score: col.scores[v],
                    solve_part: col.solve_part[v],
                    diag_part: col.diag_part[v],
                })
                .collect();
            output::write_rows(&dir.join(format!("column_commute_{}.csv", args.i)), &rows)?;
            let stats = CommuteStats {
                source: args.i,
                tol: args.tol,
                complete: g.n() <= COMPLETE_LIMIT,
                iterations: col.iterations,
                matvecs: col.matvecs,
                residual_norm: col.residual_norm,
                converged: col.converged,
            };
            output::write_json(&dir.join(format!("column_commute_{}_stats.json", args.i)), &stats)?;
            if with_oracle {
                let exact = DenseReference::new(&g, None)?.commute_column(i);
                let heuristic = inverse_degree_heuristic(&g, i)?;
                for &k in &args.k {
                    report.push(compare("cg_lanczos", &col.scores, &exact, i, k, Direction::Smallest)?);
                    report.push(compare("inverse_degree", &heuristic, &exact, i, k, Direction::Smallest)?);
                }
            }
            println!(
                "commute column {}: {} iterations, relative residual {:e}",
                args.i, col.iterations, col.residual_norm
            );
        }
    }
    if with_oracle {
        let kind = crate::pairwise::kind_name(args.kind);
        output::write_rows(&dir.join(format!("column_{kind}_{}_report.csv", args.i)), &report)?;
        for r in &report {
            println!(
                "{} k={}: precision {:.4}, kendall tau {}",
                r.method,
                r.k,
                r.precision,
                r.kendall_tau.map(|t| format!("{t:.4}")).unwrap_or_else(|| "undefined".into())
            );
        }
    }
    Ok(())
}
