use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

const TRIANGLE_WITH_TAIL: &str = "1 2\n2 3\n3 1\n3 4\n10 11\n";

fn setup(edges: &str) -> (tempfile::TempDir, PathBuf, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.txt");
    fs::write(&graph, edges).unwrap();
    let out = dir.path().join("out");
    (dir, graph, out)
}

fn run(cmd: &str, graph: &Path, out: &Path, extra: &[&str]) -> anyhow::Result<()> {
    let mut args = vec![
        "proxbound".to_string(),
        cmd.to_string(),
        "--graph".into(),
        graph.display().to_string(),
        "--out-dir".into(),
        out.display().to_string(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    proxbound_cli::run_from(args)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Checks `type`, `enum`, `required`, `properties` and `items`.
fn validate(schema: &Value, v: &Value, at: &str) -> Result<(), String> {
    if let Some(t) = schema.get("type").and_then(Value::as_str) {
        let ok = match t {
            "object" => v.is_object(),
            "array" => v.is_array(),
            "string" => v.is_string(),
            "boolean" => v.is_boolean(),
            "integer" => v.is_u64() || v.is_i64(),
            "number" => v.is_number(),
            other => return Err(format!("{at}: unsupported schema type {other}")),
        };
        if !ok {
            return Err(format!("{at}: expected {t}, got {v}"));
        }
    }
    if let Some(options) = schema.get("enum").and_then(Value::as_array) {
        if !options.contains(v) {
            return Err(format!("{at}: {v} not in {options:?}"));
        }
    }
    if let Some(req) = schema.get("required").and_then(Value::as_array) {
        for r in req {
            let key = r.as_str().unwrap();
            if v.get(key).is_none() {
                return Err(format!("{at}: missing {key}"));
            }
        }
    }
    if let (Some(props), Some(obj)) = (schema.get("properties").and_then(Value::as_object), v.as_object()) {
        for (key, value) in obj {
            let sub = props.get(key).ok_or_else(|| format!("{at}: unexpected key {key}"))?;
            validate(sub, value, &format!("{at}.{key}"))?;
        }
    }
    if let (Some(items), Some(arr)) = (schema.get("items"), v.as_array()) {
        for (k, item) in arr.iter().enumerate() {
            validate(items, item, &format!("{at}[{k}]"))?;
        }
    }
    Ok(())
}

fn check_schema(name: &str, file: &Path) {
    let schema_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(name);
    let schema = read_json(&schema_path);
    validate(&schema, &read_json(file), "$").unwrap_or_else(|e| panic!("{}: {e}", file.display()));
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn stats_drops_small_components() {
    let (_d, g, out) = setup(TRIANGLE_WITH_TAIL);
    run("stats", &g, &out, &[]).unwrap();
    let s = read_json(&out.join("stats.json"));
    assert_eq!(s["n"], 4);
    assert_eq!(s["m"], 4);
    assert_eq!(s["max_deg"], 3);
    assert_eq!(s["volume"], 8);
    assert_eq!(s["components_discarded"], 1);
    check_schema("stats.schema.json", &out.join("stats.json"));
    let map = csv_rows(&out.join("vertex_map.csv"));
    assert_eq!(map[3], vec!["3", "4"]);
}

#[test]
fn stats_without_sigma() {
    let (_d, g, out) = setup(TRIANGLE_WITH_TAIL);
    run("stats", &g, &out, &["--no-sigma"]).unwrap();
    assert!(read_json(&out.join("stats.json")).get("sigma_max").is_none());
}

#[test]
fn one_based_and_matrix_market_inputs() {
    let (_d, g, out) = setup("1 2\n2 3\n");
    run("stats", &g, &out, &["--format", "edges1"]).unwrap();
    assert_eq!(csv_rows(&out.join("vertex_map.csv"))[0], vec!["0", "1"]);

    let (_d, g, out) = setup("%%MatrixMarket matrix coordinate pattern symmetric\n3 3 2\n2 1\n3 2\n");
    run("stats", &g, &out, &["--format", "mtx"]).unwrap();
    assert_eq!(read_json(&out.join("stats.json"))["n"], 3);
}

#[test]
fn single_edge_commute_trace() {
    let (_d, g, out) = setup("0 1\n");
    run("pairwise", &g, &out, &["--kind", "commute", "--i", "0", "--j", "1", "--baseline"]).unwrap();
    let rows = csv_rows(&out.join("trace_commute_0_1.csv"));
    let last = rows.last().unwrap();
    let lower: f64 = last[1].parse().unwrap();
    let upper: f64 = last[2].parse().unwrap();
    assert!(lower <= 2.0 + 1e-12 && 2.0 - 1e-12 <= upper && upper - lower < 1e-4);
    check_schema("pairwise.schema.json", &out.join("trace_commute_0_1.json"));
    let j = read_json(&out.join("trace_commute_0_1.json"));
    assert!(j["performance_ratio"].is_number());
}

#[test]
fn katz_trace_and_schema() {
    let (_d, g, out) = setup(TRIANGLE_WITH_TAIL);
    run("pairwise", &g, &out, &["--kind", "katz", "--i", "1", "--j", "4", "--alpha", "0.2"]).unwrap();
    let j = read_json(&out.join("trace_katz_1_4.json"));
    assert_eq!(j["trace"]["alpha"], 0.2);
    assert!(j.get("baseline").is_none());
    check_schema("pairwise.schema.json", &out.join("trace_katz_1_4.json"));
    let header = csv::Reader::from_path(out.join("trace_katz_1_4.csv")).unwrap().headers().unwrap().clone();
    assert_eq!(header.iter().collect::<Vec<_>>(), ["iteration", "lower", "upper"]);
}

#[test]
fn unknown_vertex_names_the_map() {
    let (_d, g, out) = setup(TRIANGLE_WITH_TAIL);
    let err = run("pairwise", &g, &out, &["--kind", "commute", "--i", "1", "--j", "10"]).unwrap_err();
    let msg = format!("{err:#}");
    assert!(msg.contains("10") && msg.contains("vertex_map.csv"), "{msg}");
}

#[test]
fn bad_parameters_are_rejected() {
    let (_d, g, out) = setup(TRIANGLE_WITH_TAIL);
    assert!(run("pairwise", &g, &out, &["--kind", "commute", "--i", "1", "--j", "1"]).is_err());
    assert!(run("pairwise", &g, &out, &["--kind", "commute", "--i", "1", "--j", "2", "--tau", "0"]).is_err());
    assert!(run("pairwise", &g, &out, &["--kind", "katz", "--i", "1", "--j", "2", "--alpha", "0.9"]).is_err());
    assert!(run("column", &g, &out, &["--kind", "katz", "--i", "1", "--alpha", "nope"]).is_err());
    assert!(run("stats", Path::new("/nonexistent/graph"), &out, &[]).is_err());
}

#[test]
fn katz_column_outputs() {
    let (_d, g, out) = setup("0 1\n");
    run("column", &g, &out, &["--kind", "katz", "--i", "0", "--alpha", "0.5", "--tau", "1e-12", "--k", "1"]).unwrap();
    let rows = csv_rows(&out.join("column_katz_0.csv"));
    assert_eq!(rows[0][0], "1");
    assert!((rows[0][1].parse::<f64>().unwrap() - 2.0 / 3.0).abs() < 1e-10);
    assert!((rows[1][1].parse::<f64>().unwrap() - 1.0 / 3.0).abs() < 1e-10);
    check_schema("column_katz_stats.schema.json", &out.join("column_katz_0_stats.json"));
    let report = csv_rows(&out.join("column_katz_0_report.csv"));
    assert_eq!(report[0][0], "push");
    assert_eq!(report[0][1], "1");
    assert_eq!(report[0][2].parse::<f64>().unwrap(), 1.0);
}

#[test]
fn commute_column_outputs() {
    let (_d, g, out) = setup("0 1\n1 2\n2 3\n3 0\n");
    run("column", &g, &out, &["--kind", "commute", "--i", "0", "--k", "2"]).unwrap();
    let rows = csv_rows(&out.join("column_commute_0.csv"));
    // ascending: the source itself, then the two neighbours, then the far corner
    assert_eq!(rows[0][0], "0");
    let far = rows.iter().find(|r| r[0] == "2").unwrap();
    // cycle C4: resistance 1 between opposite corners, volume 8
    assert!((far[1].parse::<f64>().unwrap() - 8.0).abs() < 1e-8);
    check_schema("column_commute_stats.schema.json", &out.join("column_commute_0_stats.json"));
    let methods: Vec<String> = csv_rows(&out.join("column_commute_0_report.csv")).into_iter().map(|r| r[0].clone()).collect();
    assert_eq!(methods, ["cg_lanczos", "inverse_degree"]);
}

#[test]
fn bench_suites_write_their_tables() {
    let mut edges = String::new();
    let g = proxbound::fixtures::preferential_attachment(120, 2, 3);
    for u in 0..g.n() {
        for &v in g.neighbors(u) {
            if (v as usize) > u {
                edges.push_str(&format!("{u} {v}\n"));
            }
        }
    }
    let (_d, path, out) = setup(&edges);
    run("bench", &path, &out, &["--suite", "pairwise", "--commute-pairs", "4", "--katz-pairs", "6"]).unwrap();
    let rows = csv_rows(&out.join("bench_pairwise.csv"));
    assert_eq!(rows.len(), 10);
    assert!(out.join("bench_pairwise_summary.csv").exists());
    assert_eq!(csv_rows(&out.join("bench_pairwise_timings.csv")).len(), 10);

    run("bench", &path, &out, &["--suite", "localization", "--columns", "5"]).unwrap();
    assert_eq!(csv_rows(&out.join("bench_localization.csv")).len(), 5);
    assert_eq!(csv_rows(&out.join("bench_localization_summary.csv")).len(), 1);

    run("bench", &path, &out, &["--suite", "column", "--columns", "2", "--k", "5", "--scheme", "degree"]).unwrap();
    let rows = csv_rows(&out.join("bench_column.csv"));
    // per source: katz work + 1 comparison, commute work + 2 comparisons
    assert_eq!(rows.len(), 2 * (2 + 3));
}
