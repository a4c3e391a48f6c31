//! Undirected graphs in compressed sparse row form, plus the loaders and the
//! cleanup pass (symmetrize, drop self-loops and duplicates, keep the largest
//! connected component) every input goes through.

use std::collections::VecDeque;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index base of vertex ids in an edge-list file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexBase {
    Zero,
    One,
}

impl IndexBase {
    pub fn offset(self) -> usize {
        match self {
            IndexBase::Zero => 0,
            IndexBase::One => 1,
        }
    }
}

/// Edges exactly as read from the input, shifted to 0-based indices.
///
/// Self-loops and duplicates are kept; [`preprocess`] removes them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawEdges {
    /// Declared vertex count, or one past the largest index seen.
    pub num_vertices: usize,
    pub edges: Vec<(usize, usize)>,
    /// Added to a 0-based index to recover the id used in the file.
    pub index_base: usize,
}

fn parse_index(tok: &str, line: usize, base: usize) -> Result<usize> {
    let raw: i64 = tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("expected an integer vertex id, found {tok:?}"),
    })?;
    if raw < base as i64 {
        return Err(Error::Parse {
            line,
            msg: format!("vertex id {raw} is below the index base {base}"),
        });
    }
    Ok(raw as usize - base)
}

/// Reads a whitespace separated edge list, one `u v` pair per line.
///
/// Blank lines and lines starting with `#` or `%` are skipped. Tokens after
/// the first two (edge weights) are ignored. When `declared_vertices` is
/// given, any id outside `0..declared_vertices` (after the base shift) is an
/// error.
pub fn load_edge_list<R: BufRead>(
    source: R,
    base: IndexBase,
    declared_vertices: Option<usize>,
) -> Result<RawEdges> {
    let offset = base.offset();
    let mut edges = Vec::new();
    let mut max_seen = 0usize;
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let mut toks = trimmed.split_whitespace();
        let (Some(a), Some(b)) = (toks.next(), toks.next()) else {
            return Err(Error::Parse {
                line: line_no,
                msg: "expected two vertex ids".into(),
            });
        };
        let u = parse_index(a, line_no, offset)?;
        let v = parse_index(b, line_no, offset)?;
        if let Some(n) = declared_vertices {
            for w in [u, v] {
                if w >= n {
                    return Err(Error::VertexOutOfRange { vertex: w + offset, n });
                }
            }
        }
        max_seen = max_seen.max(u + 1).max(v + 1);
        edges.push((u, v));
    }
    Ok(RawEdges {
        num_vertices: declared_vertices.unwrap_or(max_seen),
        edges,
        index_base: offset,
    })
}

/// Reads a MatrixMarket coordinate file. Values are ignored, so `pattern`,
/// `real` and `integer` fields all work, as do `general` and `symmetric`
/// storage.
pub fn load_matrix_market<R: BufRead>(source: R) -> Result<RawEdges> {
    let mut lines = source.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((i, l)) => {
                let l = l?;
                if !l.trim().is_empty() {
                    break (i + 1, l);
                }
            }
            None => {
                return Err(Error::Parse {
                    line: 0,
                    msg: "empty MatrixMarket file".into(),
                })
            }
        }
    };
    let banner = header.1.to_ascii_lowercase();
    if !banner.starts_with("%%matrixmarket") || !banner.contains("coordinate") {
        return Err(Error::Parse {
            line: header.0,
            msg: "expected a '%%MatrixMarket matrix coordinate' banner".into(),
        });
    }
    let mut size: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let mut toks = t.split_whitespace();
        match size {
            None => {
                let mut dims = [0usize; 3];
                for d in dims.iter_mut() {
                    let tok = toks.next().ok_or_else(|| Error::Parse {
                        line: line_no,
                        msg: "size line needs rows, cols and nnz".into(),
                    })?;
                    *d = tok.parse().map_err(|_| Error::Parse {
                        line: line_no,
                        msg: format!("bad size entry {tok:?}"),
                    })?;
                }
                if dims[0] != dims[1] {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("adjacency matrix must be square, got {}x{}", dims[0], dims[1]),
                    });
                }
                size = Some((dims[0], dims[2]));
                edges.reserve(dims[2]);
            }
            Some((n, _)) => {
                let (Some(a), Some(b)) = (toks.next(), toks.next()) else {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "expected row and column indices".into(),
                    });
                };
                let u = parse_index(a, line_no, 1)?;
                let v = parse_index(b, line_no, 1)?;
                for w in [u, v] {
                    if w >= n {
                        return Err(Error::VertexOutOfRange { vertex: w + 1, n });
                    }
                }
                edges.push((u, v));
            }
        }
    }
    let (n, _) = size.ok_or(Error::Parse {
        line: 0,
        msg: "missing size line".into(),
    })?;
    Ok(RawEdges {
        num_vertices: n,
        edges,
        index_base: 1,
    })
}

/// An immutable, connected, undirected, unweighted graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    row_offsets: Vec<usize>,
    neighbors: Vec<u32>,
    degrees: Vec<usize>,
    volume: usize,
    /// External id of each vertex (file id, including the index base).
    labels: Vec<usize>,
    components_discarded: usize,
}

impl Graph {
    /// Builds a graph from an explicit undirected edge list on `n` vertices,
    /// labelling vertices `0..n`. The edges go through the same cleanup as
    /// [`preprocess`], including the largest-component restriction.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Graph> {
        preprocess(&RawEdges {
            num_vertices: n,
            edges: edges.to_vec(),
            index_base: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.volume / 2
    }

    pub fn degree(&self, v: usize) -> usize {
        self.degrees[v]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn max_degree(&self) -> usize {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    /// Sum of all adjacency entries, `2m`.
    pub fn volume(&self) -> usize {
        self.volume
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.neighbors[self.row_offsets[v]..self.row_offsets[v + 1]]
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> usize {
        self.labels[v]
    }

    /// Internal index for an external id, if that vertex survived preprocessing.
    pub fn vertex_for_label(&self, label: usize) -> Option<usize> {
        self.labels.binary_search(&label).ok()
    }

    pub fn components_discarded(&self) -> usize {
        self.components_discarded
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    /// `y = A x`.
    pub fn adjacency_matvec(&self, x: &[f64], y: &mut [f64]) {
        for (v, yv) in y.iter_mut().enumerate() {
            *yv = self.neighbors(v).iter().map(|&u| x[u as usize]).sum();
        }
    }

    /// Checks the structural invariants: symmetric, loop-free, sorted
    /// adjacency, consistent degrees and volume, and a single component.
    pub fn validate(&self) -> bool {
        let n = self.n();
        if self.row_offsets.len() != n + 1 || self.labels.len() != n {
            return false;
        }
        let mut total = 0;
        for v in 0..n {
            let nb = self.neighbors(v);
            if nb.len() != self.degrees[v] {
                return false;
            }
            total += nb.len();
            if nb.windows(2).any(|w| w[0] >= w[1]) {
                return false;
            }
            for &u in nb {
                let u = u as usize;
                if u == v || u >= n || !self.has_edge(u, v) {
                    return false;
                }
            }
        }
        total == self.volume && component_labels(&self.row_offsets, &self.neighbors).1 == 1
    }

    pub fn summary(&self) -> GraphSummary {
        GraphSummary {
            n: self.n(),
            m: self.num_edges(),
            avg_degree: self.volume as f64 / self.n() as f64,
            max_degree: self.max_degree(),
            volume: self.volume,
            components_discarded: self.components_discarded,
            sigma_max: None,
        }
    }
}

/// Table-style summary of a loaded graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "avg_deg")]
    pub avg_degree: f64,
    #[serde(rename = "max_deg")]
    pub max_degree: usize,
    pub volume: usize,
    pub components_discarded: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_max: Option<f64>,
}

/// Connected-component id per vertex (in order of smallest member) and the
/// number of components.
fn component_labels(offsets: &[usize], nbrs: &[u32]) -> (Vec<usize>, usize) {
    let n = offsets.len() - 1;
    let mut comp = vec![usize::MAX; n];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = count;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            for &u in &nbrs[offsets[v]..offsets[v + 1]] {
                let u = u as usize;
                if comp[u] == usize::MAX {
                    comp[u] = count;
                    queue.push_back(u);
                }
            }
        }
        count += 1;
    }
    (comp, count)
}

fn build_csr(n: usize, mut pairs: Vec<(usize, usize)>) -> (Vec<usize>, Vec<u32>) {
    pairs.sort_unstable();
    pairs.dedup();
    let mut offsets = vec![0usize; n + 1];
    for &(u, _) in &pairs {
        offsets[u + 1] += 1;
    }
    for v in 0..n {
        offsets[v + 1] += offsets[v];
    }
    let nbrs = pairs.into_iter().map(|(_, v)| v as u32).collect();
    (offsets, nbrs)
}

/// Symmetrizes, strips self-loops and duplicate edges, keeps the largest
/// connected component and relabels its vertices `0..n` in increasing order
/// of their original ids. Ties between equally large components go to the
/// one containing the smallest original id. Isolated vertices count as
/// singleton components.
pub fn preprocess(raw: &RawEdges) -> Result<Graph> {
    if raw.edges.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let n0 = raw.num_vertices;
    let mut pairs = Vec::with_capacity(2 * raw.edges.len());
    for &(u, v) in &raw.edges {
        if u >= n0 || v >= n0 {
            return Err(Error::VertexOutOfRange {
                vertex: u.max(v) + raw.index_base,
                n: n0,
            });
        }
        if u != v {
            pairs.push((u, v));
            pairs.push((v, u));
        }
    }
    let (offsets, nbrs) = build_csr(n0, pairs);
    let (comp, count) = component_labels(&offsets, &nbrs);
    let mut sizes = vec![0usize; count];
    for &c in &comp {
        sizes[c] += 1;
    }
    // Components are numbered by their smallest vertex, so the first maximum
    // is the tie-break winner.
    let (best, &best_size) = sizes
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .expect("at least one component");
    if best_size < 2 {
        return Err(Error::EmptyGraph);
    }
    // ids that never occur in an edge are gaps in the numbering, not components
    let mut seen = vec![false; count];
    for &(u, v) in &raw.edges {
        seen[comp[u]] = true;
        seen[comp[v]] = true;
    }
    let discarded = seen.iter().enumerate().filter(|&(c, &s)| s && c != best).count();

    let mut new_id = vec![usize::MAX; n0];
    let mut labels = Vec::with_capacity(best_size);
    for v in 0..n0 {
        if comp[v] == best {
            new_id[v] = labels.len();
            labels.push(v + raw.index_base);
        }
    }
    let mut row_offsets = Vec::with_capacity(best_size + 1);
    row_offsets.push(0);
    let mut neighbors = Vec::new();
    let mut degrees = Vec::with_capacity(best_size);
    for v in 0..n0 {
        if comp[v] != best {
            continue;
        }
        let row = &nbrs[offsets[v]..offsets[v + 1]];
        // relabeling is monotone, so rows stay sorted
        neighbors.extend(row.iter().map(|&u| new_id[u as usize] as u32));
        degrees.push(row.len());
        row_offsets.push(neighbors.len());
    }
    let volume = neighbors.len();
    Ok(Graph {
        row_offsets,
        neighbors,
        degrees,
        volume,
        labels,
        components_discarded: discarded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(text: &str, base: IndexBase) -> RawEdges {
        load_edge_list(text.as_bytes(), base, None).unwrap()
    }

    #[test]
    fn parses_zero_and_one_based() {
        assert_eq!(raw("0 1\n1 2", IndexBase::Zero).edges, vec![(0, 1), (1, 2)]);
        assert_eq!(raw("1 2\n2 3", IndexBase::One).edges, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn keeps_self_loops_for_preprocess() {
        assert_eq!(raw("0 0\n0 1", IndexBase::Zero).edges, vec![(0, 0), (0, 1)]);
    }

    #[test]
    fn comments_and_weights_are_skipped() {
        let r = raw("# header\n% other\n\n0 1 3.5\n1 2 1\n", IndexBase::Zero);
        assert_eq!(r.edges, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = load_edge_list("0 1\n1 x\n".as_bytes(), IndexBase::Zero, None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = load_edge_list("0 1\n7\n".as_bytes(), IndexBase::Zero, None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn out_of_range_ids_are_rejected() {
        let err = load_edge_list("0 1\n1 5\n".as_bytes(), IndexBase::Zero, Some(3)).unwrap_err();
        assert!(matches!(err, Error::VertexOutOfRange { vertex: 5, n: 3 }));
        let err = load_edge_list("0 1\n".as_bytes(), IndexBase::One, None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn dedupe_and_strip_loops() {
        let g = preprocess(&RawEdges {
            num_vertices: 2,
            edges: vec![(0, 1), (1, 0), (1, 1)],
            index_base: 0,
        })
        .unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.num_edges(), 1);
        assert_eq!(g.degrees(), &[1, 1]);
        assert_eq!(g.volume(), 2);
        assert!(g.validate());
    }

    #[test]
    fn equal_components_keep_smallest_id() {
        let g = Graph::from_edges(6, &[(3, 4), (4, 5), (5, 3), (0, 1), (1, 2), (2, 0)]).unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.labels(), &[0, 1, 2]);
        assert_eq!(g.components_discarded(), 1);
    }

    #[test]
    fn largest_component_is_relabelled_in_order() {
        let g = Graph::from_edges(7, &[(0, 1), (6, 2), (2, 4), (4, 6), (5, 6)]).unwrap();
        assert_eq!(g.labels(), &[2, 4, 5, 6]);
        assert_eq!(g.vertex_for_label(5), Some(2));
        assert_eq!(g.vertex_for_label(0), None);
        assert!(g.has_edge(0, 3));
        assert!(g.has_edge(2, 3));
        assert!(g.validate());
    }

    #[test]
    fn path_degrees() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(g.degrees(), &[1, 2, 1]);
        assert_eq!(g.volume(), 4);
    }

    #[test]
    fn empty_inputs_error() {
        assert!(matches!(Graph::from_edges(3, &[]), Err(Error::EmptyGraph)));
        assert!(matches!(Graph::from_edges(3, &[(1, 1)]), Err(Error::EmptyGraph)));
    }

    #[test]
    fn matrix_market_symmetric_pattern() {
        let text = "%%MatrixMarket matrix coordinate pattern symmetric\n% c\n3 3 2\n2 1\n3 2\n";
        let r = load_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(r.num_vertices, 3);
        assert_eq!(r.edges, vec![(1, 0), (2, 1)]);
        let g = preprocess(&r).unwrap();
        assert_eq!(g.degrees(), &[1, 2, 1]);
        assert_eq!(g.labels(), &[1, 2, 3]);
    }

    #[test]
    fn matrix_market_values_ignored_and_range_checked() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 2 0.5\n2 1 0.5\n";
        let g = preprocess(&load_matrix_market(text.as_bytes()).unwrap()).unwrap();
        assert_eq!(g.num_edges(), 1);
        let bad = "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 3 1\n";
        assert!(matches!(
            load_matrix_market(bad.as_bytes()),
            Err(Error::VertexOutOfRange { vertex: 3, n: 2 })
        ));
        let rect = "%%MatrixMarket matrix coordinate pattern general\n2 3 1\n1 2\n";
        assert!(load_matrix_market(rect.as_bytes()).is_err());
    }

    #[test]
    fn summary_counts() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let s = g.summary();
        assert_eq!((s.n, s.m, s.max_degree, s.volume), (2, 1, 1, 2));
        assert_eq!(s.avg_degree, 1.0);
    }
}
