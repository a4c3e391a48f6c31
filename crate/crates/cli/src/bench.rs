use std::path::Path;
use std::time::Instant;

use anyhow::Result;
use clap::{Args, ValueEnum};
use proxbound::column_commute::{commute_column, inverse_degree_heuristic};
use proxbound::column_katz::PushOptions;
use proxbound::eval::{
    percentile, performance_ratio, sample_vertex_pairs, vertices_at_degree_ranks, rank_ladder, Direction,
    SamplingScheme, Summary,
};
use proxbound::pairwise::PairwiseParams;
use proxbound::solvers::{DenseReference, DENSE_LIMIT};
use proxbound::Graph;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::column::{compare, CompareRow};
use crate::config::{check_positive, resolve_alpha, AlphaArg, GraphArgs, KindArg, ScalingArg};
use crate::output;
use crate::pairwise::{kind_name, query};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Pairwise,
    Column,
    Localization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    /// Pairs from a seeded random permutation.
    Random,
    /// Vertices at fixed degree ranks.
    Degree,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long, value_enum, default_value = "random")]
    pub scheme: SchemeArg,
    /// Commute-time pairs in the pairwise suite.
    #[arg(long, default_value_t = 20)]
    pub commute_pairs: usize,
    /// Katz pairs in the pairwise suite.
    #[arg(long, default_value_t = 100)]
    pub katz_pairs: usize,
    /// Source vertices in the column and localization suites.
    #[arg(long, default_value_t = 50)]
    pub columns: usize,
    /// Katz damping: `hard` or a value.
    #[arg(long, default_value = "hard")]
    pub alpha: AlphaArg,
    /// Lower bound on the commute operator spectrum
    #[arg(long, default_value_t = proxbound::pairwise::DEFAULT_LAMBDA_LO)]
    pub lambda_lo: f64,
    /// Pairwise gap tolerance, CG tolerance and push threshold.
    #[arg(long, default_value_t = 1e-4)]
    pub tau: f64,
    /// Relative residual target for commute columns.
    #[arg(long, default_value_t = proxbound::column_commute::DEFAULT_TOL)]
    pub tol: f64,
    /// Push priority for Katz columns
    #[arg(long, value_enum, default_value = "degree")]
    pub scaling: ScalingArg,
    /// Push budget per column [default: 50 n]
    #[arg(long)]
    pub max_pushes: Option<usize>,
    /// Iteration cap for bounds and CG [default: min(n, 500)]
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Top-k sizes for the column suite.
    #[arg(long, value_delimiter = ',', default_value = "10,25,100,1000")]
    pub k: Vec<usize>,
}

pub fn run(args: &BenchArgs) -> Result<()> {
    check_positive("tau", args.tau)?;
    check_positive("tol", args.tol)?;
    check_positive("lambda-lo", args.lambda_lo)?;
    let g = args.graph.load()?;
    match args.suite {
        Suite::Pairwise => pairwise_suite(&g, args),
        Suite::Column => column_suite(&g, args),
        Suite::Localization => localization_suite(&g, args),
    }
}

#[derive(Serialize)]
struct PairRow {
    kind: &'static str,
    i: usize,
    j: usize,
    lower: Option<f64>,
    upper: Option<f64>,
    iterations: Option<usize>,
    matvecs: Option<usize>,
    converged: Option<bool>,
    cg_estimate: Option<f64>,
    cg_matvecs: Option<usize>,
    cg_converged: Option<bool>,
    performance_ratio: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct PairTiming {
    kind: &'static str,
    i: usize,
    j: usize,
    seconds: f64,
}

#[derive(Serialize)]
struct PercentileRow {
    group: String,
    metric: &'static str,
    count: usize,
    p25: f64,
    p50: f64,
    p75: f64,
}

fn percentiles(group: String, metric: &'static str, data: &[f64]) -> Option<PercentileRow> {
    Some(PercentileRow {
        group,
        metric,
        count: data.len(),
        p25: percentile(data, 25.0).ok()?,
        p50: percentile(data, 50.0).ok()?,
        p75: percentile(data, 75.0).ok()?,
    })
}

fn sources(g: &Graph, scheme: SchemeArg, count: usize, seed: u64) -> Vec<usize> {
    match scheme {
        SchemeArg::Random => {
            let mut v: Vec<usize> = (0..g.n()).collect();
            v.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            v.truncate(count);
            v
        }
        SchemeArg::Degree => {
            let mut v = vertices_at_degree_ranks(g, &rank_ladder(g.n(), &[1, 2, 3, 4, 5]));
            v.truncate(count);
            v
        }
    }
}

fn pairwise_suite(g: &Graph, args: &BenchArgs) -> Result<()> {
    let (alpha, _) = resolve_alpha(g, args.alpha, args.graph.seed)?;
    let params = PairwiseParams {
        lambda_lo: args.lambda_lo,
        tau: args.tau,
        max_iter: args.max_iter,
        ..PairwiseParams::default()
    };
    let (commute_scheme, katz_scheme) = match args.scheme {
        SchemeArg::Random => (SamplingScheme::Random, SamplingScheme::Random),
        SchemeArg::Degree => (SamplingScheme::DegreeCommute, SamplingScheme::DegreeKatz),
    };
    let seed = args.graph.seed;
    let mut queries: Vec<(KindArg, usize, usize)> = Vec::new();
    for (i, j) in sample_vertex_pairs(g, commute_scheme, args.commute_pairs, seed) {
        queries.push((KindArg::Commute, i, j));
    }
    for (i, j) in sample_vertex_pairs(g, katz_scheme, args.katz_pairs, seed.wrapping_add(1)) {
        queries.push((KindArg::Katz, i, j));
    }

    let results: Vec<(PairRow, PairTiming)> = queries
        .par_iter()
        .map(|&(kind, i, j)| {
            let start = Instant::now();
            let res = query(g, kind, i, j, Some(alpha), &params, true);
            let seconds = start.elapsed().as_secs_f64();
            let (ei, ej) = (g.label(i), g.label(j));
            let name = kind_name(kind);
            let row = match res {
                Ok((t, b)) => {
                    let b = b.expect("baseline requested");
                    PairRow {
                        kind: name,
                        i: ei,
                        j: ej,
                        lower: Some(t.final_lower),
                        upper: Some(t.final_upper),
                        iterations: Some(t.iterations()),
                        matvecs: Some(t.matvecs),
                        converged: Some(t.converged),
                        cg_estimate: Some(b.estimate),
                        cg_matvecs: Some(b.matvecs),
                        cg_converged: Some(b.converged),
                        performance_ratio: performance_ratio(b.matvecs, t.matvecs).ok(),
                        error: None,
                    }
                }
                Err(e) => PairRow {
                    kind: name,
                    i: ei,
                    j: ej,
                    lower: None,
                    upper: None,
                    iterations: None,
                    matvecs: None,
                    converged: None,
                    cg_estimate: None,
                    cg_matvecs: None,
                    cg_converged: None,
                    performance_ratio: None,
                    error: Some(format!("{e:#}")),
                },
            };
            let timing = PairTiming {
                kind: name,
                i: ei,
                j: ej,
                seconds,
            };
            (row, timing)
        })
        .collect();
    let (rows, timings): (Vec<_>, Vec<_>) = results.into_iter().unzip();

    let mut summary = Vec::new();
    let mut timing_summary = Vec::new();
    for kind in ["commute", "katz"] {
        let ratios: Vec<f64> = rows
            .iter()
            .filter(|r| r.kind == kind)
            .filter_map(|r| r.performance_ratio)
            .collect();
        summary.extend(percentiles(kind.into(), "performance_ratio", &ratios));
        let secs: Vec<f64> = timings.iter().filter(|t| t.kind == kind).map(|t| t.seconds).collect();
        timing_summary.extend(percentiles(kind.into(), "seconds", &secs));
    }
    let dir = &args.graph.out_dir;
    output::write_rows(&dir.join("bench_pairwise.csv"), &rows)?;
    output::write_rows(&dir.join("bench_pairwise_summary.csv"), &summary)?;
    write_timings(dir, "bench_pairwise", &timings, &timing_summary)?;
    for s in &summary {
        println!(
            "{}: performance ratio p25 {:.3} p50 {:.3} p75 {:.3} over {} pairs",
            s.group, s.p25, s.p50, s.p75, s.count
        );
    }
    Ok(())
}

fn write_timings<T: Serialize>(dir: &Path, stem: &str, rows: &[T], summary: &[PercentileRow]) -> Result<()> {
    output::write_rows(&dir.join(format!("{stem}_timings.csv")), rows)?;
    output::write_rows(&dir.join(format!("{stem}_timings_summary.csv")), summary)
}

#[derive(Serialize)]
struct ColumnRow {
    kind: &'static str,
    source: usize,
    method: &'static str,
    k: Option<usize>,
    precision: Option<f64>,
    kendall_tau: Option<f64>,
    boundary_tied: Option<bool>,
    /// Pushes (Katz) or CG-Lanczos iterations (commute).
    steps: Option<usize>,
    /// Effective (Katz) or actual (commute) matrix-vector products.
    matvecs: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct ColumnTiming {
    kind: &'static str,
    source: usize,
    seconds: f64,
}

fn column_rows(kind: &'static str, source: usize, steps: usize, matvecs: f64, cmp: Vec<CompareRow>) -> Vec<ColumnRow> {
    let mut rows = vec![ColumnRow {
        kind,
        source,
        method: if kind == "katz" { "push" } else { "cg_lanczos" },
        k: None,
        precision: None,
        kendall_tau: None,
        boundary_tied: None,
        steps: Some(steps),
        matvecs: Some(matvecs),
        error: None,
    }];
    rows.extend(cmp.into_iter().map(|c| ColumnRow {
        kind,
        source,
        method: c.method,
        k: Some(c.k),
        precision: Some(c.precision),
        kendall_tau: c.kendall_tau,
        boundary_tied: Some(c.boundary_tied),
        steps: None,
        matvecs: None,
        error: None,
    }));
    rows
}

fn error_row(kind: &'static str, source: usize, e: anyhow::Error) -> Vec<ColumnRow> {
    vec![ColumnRow {
        kind,
        source,
        method: if kind == "katz" { "push" } else { "cg_lanczos" },
        k: None,
        precision: None,
        kendall_tau: None,
        boundary_tied: None,
        steps: None,
        matvecs: None,
        error: Some(format!("{e:#}")),
    }]
}

fn column_suite(g: &Graph, args: &BenchArgs) -> Result<()> {
    let (alpha, sigma_max) = resolve_alpha(g, args.alpha, args.graph.seed)?;
    let oracle = if g.n() <= DENSE_LIMIT {
        Some(DenseReference::new(g, Some(alpha))?)
    } else {
        None
    };
    let srcs = sources(g, args.scheme, args.columns, args.graph.seed);
    let opts = PushOptions {
        tau: args.tau,
        scaling: args.scaling.into(),
        max_pushes: args.max_pushes,
        sigma_max,
    };
    let mut jobs: Vec<(&'static str, usize)> = srcs.iter().map(|&s| ("katz", s)).collect();
    jobs.extend(srcs.iter().map(|&s| ("commute", s)));

    let results: Vec<(Vec<ColumnRow>, ColumnTiming)> = jobs
        .par_iter()
        .map(|&(kind, s)| {
            let start = Instant::now();
            let label = g.label(s);
            let rows = if kind == "katz" {
                match proxbound::column_katz::katz_column_push(g, alpha, s, &opts) {
                    Ok(col) => {
                        let mut cmp = Vec::new();
                        let mut err = None;
                        if let Some(o) = &oracle {
                            let exact = o.katz_column(s);
                            let approx = col.to_dense();
                            for &k in &args.k {
                                match compare("push", &approx, &exact, s, k, Direction::Largest) {
                                    Ok(c) => cmp.push(c),
                                    Err(e) => err = Some(e),
                                }
                            }
                        }
                        match err {
                            Some(e) => error_row(kind, label, e),
                            None => column_rows(kind, label, col.stats.pushes, col.stats.effective_matvecs, cmp),
                        }
                    }
                    Err(e) => error_row(kind, label, e.into()),
                }
            } else {
                match commute_column(g, s, args.tol) {
                    Ok(col) => {
                        let mut cmp = Vec::new();
                        let mut err = None;
                        if let Some(o) = &oracle {
                            let exact = o.commute_column(s);
                            let heur = inverse_degree_heuristic(g, s).expect("valid source");
                            for &k in &args.k {
                                for (m, v) in [("cg_lanczos", &col.scores), ("inverse_degree", &heur)] {
                                    match compare(m, v, &exact, s, k, Direction::Smallest) {
                                        Ok(c) => cmp.push(c),
                                        Err(e) => err = Some(e),
                                    }
                                }
                            }
                        }
                        match err {
                            Some(e) => error_row(kind, label, e),
                            None => column_rows(kind, label, col.iterations, col.matvecs as f64, cmp),
                        }
                    }
                    Err(e) => error_row(kind, label, e.into()),
                }
            };
            let timing = ColumnTiming {
                kind,
                source: label,
                seconds: start.elapsed().as_secs_f64(),
            };
            (rows, timing)
        })
        .collect();
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for (r, t) in results {
        rows.extend(r);
        timings.push(t);
    }

    let mut summary = Vec::new();
    for kind in ["katz", "commute"] {
        for method in ["push", "cg_lanczos", "inverse_degree"] {
            for &k in &args.k {
                let p: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.kind == kind && r.method == method && r.k == Some(k))
                    .filter_map(|r| r.precision)
                    .collect();
                summary.extend(percentiles(format!("{kind}/{method}/k={k}"), "precision", &p));
                let t: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.kind == kind && r.method == method && r.k == Some(k))
                    .filter_map(|r| r.kendall_tau)
                    .collect();
                summary.extend(percentiles(format!("{kind}/{method}/k={k}"), "kendall_tau", &t));
            }
        }
    }
    let mut timing_summary = Vec::new();
    for kind in ["katz", "commute"] {
        let secs: Vec<f64> = timings.iter().filter(|t| t.kind == kind).map(|t| t.seconds).collect();
        timing_summary.extend(percentiles(kind.into(), "seconds", &secs));
    }
    let dir = &args.graph.out_dir;
    output::write_rows(&dir.join("bench_column.csv"), &rows)?;
    output::write_rows(&dir.join("bench_column_summary.csv"), &summary)?;
    write_timings(dir, "bench_column", &timings, &timing_summary)?;
    for s in &summary {
        println!("{} {}: p25 {:.3} p50 {:.3} p75 {:.3}", s.group, s.metric, s.p25, s.p50, s.p75);
    }
    Ok(())
}

#[derive(Serialize)]
struct LocalizationRow {
    source: usize,
    participation_ratio: Option<f64>,
    entries: Option<usize>,
    pushes: Option<usize>,
    effective_matvecs: Option<f64>,
    converged: Option<bool>,
    error: Option<String>,
}

#[derive(Serialize)]
struct LocalizationSummary {
    n: usize,
    alpha: f64,
    tau: f64,
    columns: usize,
    min: f64,
    mean: f64,
    median: f64,
    max: f64,
}

fn localization_suite(g: &Graph, args: &BenchArgs) -> Result<()> {
    let (alpha, sigma_max) = resolve_alpha(g, args.alpha, args.graph.seed)?;
    let srcs = sources(g, args.scheme, args.columns, args.graph.seed);
    let opts = PushOptions {
        tau: args.tau,
        scaling: args.scaling.into(),
        max_pushes: args.max_pushes,
        sigma_max,
    };
    let results: Vec<(LocalizationRow, ColumnTiming)> = srcs
        .par_iter()
        .map(|&s| {
            let start = Instant::now();
            let label = g.label(s);
            let row = match proxbound::column_katz::participation_trace(g, alpha, &[s], &opts)
                .and_then(|rep| Ok((rep, proxbound::column_katz::katz_column_push(g, alpha, s, &opts)?)))
            {
                Ok((rep, col)) => LocalizationRow {
                    source: label,
                    participation_ratio: Some(rep.ratios[0]),
                    entries: Some(col.entries.len()),
                    pushes: Some(col.stats.pushes),
                    effective_matvecs: Some(col.stats.effective_matvecs),
                    converged: Some(col.converged),
                    error: None,
                },
                Err(e) => LocalizationRow {
                    source: label,
                    participation_ratio: None,
                    entries: None,
                    pushes: None,
                    effective_matvecs: None,
                    converged: None,
                    error: Some(e.to_string()),
                },
            };
            let timing = ColumnTiming {
                kind: "katz",
                source: label,
                seconds: start.elapsed().as_secs_f64(),
            };
            (row, timing)
        })
        .collect();
    let (rows, timings): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.participation_ratio).collect();
    let dir = &args.graph.out_dir;
    output::write_rows(&dir.join("bench_localization.csv"), &rows)?;
    let secs: Vec<f64> = timings.iter().map(|t| t.seconds).collect();
    let timing_summary: Vec<_> = percentiles("katz".into(), "seconds", &secs).into_iter().collect();
    write_timings(dir, "bench_localization", &timings, &timing_summary)?;
    if let Ok(s) = Summary::of(&ratios) {
        let summary = LocalizationSummary {
            n: g.n(),
            alpha,
            tau: args.tau,
            columns: s.count,
            min: s.min,
            mean: s.mean,
            median: s.median,
            max: s.max,
        };
        output::write_rows(&dir.join("bench_localization_summary.csv"), &[&summary])?;
        println!(
            "participation ratio over {} columns: min {:.2} mean {:.2} median {:.2} max {:.2}",
            s.count, s.min, s.mean, s.median, s.max
        );
    }
    Ok(())
}
