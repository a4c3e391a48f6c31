use std::fs::File;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use proxbound::Graph;
use serde::Serialize;

pub const VERTEX_MAP: &str = "vertex_map.csv";

pub fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

#[derive(Serialize)]
struct MapRow {
    internal: usize,
    external: usize,
}

/// `internal,external` for every vertex of the processed graph.
pub fn write_vertex_map(dir: &Path, g: &Graph) -> Result<()> {
    let rows: Vec<MapRow> = (0..g.n())
        .map(|v| MapRow {
            internal: v,
            external: g.label(v),
        })
        .collect();
    write_rows(&dir.join(VERTEX_MAP), &rows)
}
