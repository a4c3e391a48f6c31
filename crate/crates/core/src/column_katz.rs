//! Katz columns with a Gauss-Southwell push solver.
//!
//! Solves `(I - alpha A) x = e_i` by repeatedly zeroing the largest residual
//! entry: `x_j += r_j` and every neighbor's residual grows by `alpha r_j`.
//! Only vertices that ever carry residual are touched, which makes the solver
//! cheap when the column is localized.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{participation_ratio, Summary};
use crate::graph::Graph;

/// Factor of `n` giving the default push budget.
pub const DEFAULT_PUSHES_PER_VERTEX: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    /// Priority `r_j`.
    Residual,
    /// Priority `r_j / d_j`.
    #[default]
    DegreeScaled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PushOptions {
    pub tau: f64,
    pub scaling: Scaling,
    /// `None` means `50 n`.
    pub max_pushes: Option<usize>,
    /// `||A||_2` when known; `alpha >= 1/sigma_max` is then rejected.
    pub sigma_max: Option<f64>,
}

impl PushOptions {
    pub fn new(tau: f64) -> Self {
        Self {
            tau,
            scaling: Scaling::default(),
            max_pushes: None,
            sigma_max: None,
        }
    }

    pub fn with_scaling(mut self, scaling: Scaling) -> Self {
        self.scaling = scaling;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct PushStats {
    pub pushes: usize,
    pub edge_touches: usize,
    /// `edge_touches / vol(G)`: full matrix-vector products worth of work.
    pub effective_matvecs: f64,
    pub touched_vertices: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    priority: f64,
    vertex: u32,
}

impl Eq for Entry {}

impl Ord for Entry {
    // max-heap on priority, smaller vertex id first among equals
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority
            .total_cmp(&other.priority)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Vertex-indexed values, sparse until many vertices are involved.
#[derive(Debug, Clone)]
enum Store {
    Sparse(HashMap<u32, f64>),
    Dense(Vec<f64>),
}

impl Store {
    fn get(&self, v: u32) -> f64 {
        match self {
            Store::Sparse(m) => m.get(&v).copied().unwrap_or(0.0),
            Store::Dense(d) => d[v as usize],
        }
    }

    fn slot(&mut self, v: u32) -> &mut f64 {
        match self {
            Store::Sparse(m) => m.entry(v).or_insert(0.0),
            Store::Dense(d) => &mut d[v as usize],
        }
    }

    fn densify(&mut self, n: usize) {
        if let Store::Sparse(m) = self {
            let mut d = vec![0.0; n];
            for (&v, &x) in m.iter() {
                d[v as usize] = x;
            }
            *self = Store::Dense(d);
        }
    }

    fn to_dense(&self, n: usize) -> Vec<f64> {
        match self {
            Store::Sparse(m) => {
                let mut d = vec![0.0; n];
                for (&v, &x) in m {
                    d[v as usize] = x;
                }
                d
            }
            Store::Dense(d) => d.clone(),
        }
    }
}

/// Push solver state for one column; advance with [`PushSolver::step`] or
/// [`PushSolver::run`].
#[derive(Debug, Clone)]
pub struct PushSolver<'g> {
    graph: &'g Graph,
    alpha: f64,
    source: usize,
    tau: f64,
    scaling: Scaling,
    max_pushes: usize,
    x: Store,
    r: Store,
    touched: Vec<bool>,
    touched_count: usize,
    heap: BinaryHeap<Entry>,
    stats: PushStats,
    exhausted: bool,
}

/// One performed push.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Push {
    pub vertex: usize,
    pub amount: f64,
}

impl<'g> PushSolver<'g> {
    pub fn new(graph: &'g Graph, alpha: f64, source: usize, opts: &PushOptions) -> Result<Self> {
        let n = graph.n();
        if source >= n {
            return Err(Error::VertexOutOfRange { vertex: source, n });
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        if !(opts.tau > 0.0) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {}", opts.tau)));
        }
        match opts.sigma_max {
            Some(s) if alpha * s >= 1.0 => {
                return Err(Error::InvalidParameter(format!(
                    "alpha = {alpha} is not below 1/||A||_2 = {}",
                    1.0 / s
                )))
            }
            None if alpha * graph.max_degree() as f64 >= 1.0 => {
                log::warn!("alpha = {alpha} >= 1/d_max; the push solver converges only for alpha < 1/||A||_2");
            }
            _ => {}
        }
        let mut s = Self {
            graph,
            alpha,
            source,
            tau: opts.tau,
            scaling: opts.scaling,
            max_pushes: opts.max_pushes.unwrap_or(DEFAULT_PUSHES_PER_VERTEX * n),
            x: Store::Sparse(HashMap::new()),
            r: Store::Sparse(HashMap::new()),
            touched: vec![false; n],
            touched_count: 0,
            heap: BinaryHeap::new(),
            stats: PushStats::default(),
            exhausted: false,
        };
        s.touch(source as u32);
        *s.r.slot(source as u32) = 1.0;
        s.enqueue(source as u32);
        Ok(s)
    }

    fn priority(&self, v: u32) -> f64 {
        let r = self.r.get(v);
        match self.scaling {
            Scaling::Residual => r,
            Scaling::DegreeScaled => r / self.graph.degree(v as usize) as f64,
        }
    }

    fn enqueue(&mut self, v: u32) {
        let p = self.priority(v);
        if p > self.tau {
            self.heap.push(Entry { priority: p, vertex: v });
        }
    }

    fn touch(&mut self, v: u32) {
        if !self.touched[v as usize] {
            self.touched[v as usize] = true;
            self.touched_count += 1;
            let n = self.graph.n();
            if self.touched_count > n / 4 {
                self.x.densify(n);
                self.r.densify(n);
            }
        }
    }

    /// Performs the next push, or returns `None` once no residual priority
    /// exceeds `tau` or the push budget is spent.
    pub fn step(&mut self) -> Option<Push> {
        if self.stats.pushes >= self.max_pushes {
            self.exhausted = !self.is_done_queue();
            return None;
        }
        let j = loop {
            let e = self.heap.pop()?;
            if e.priority == self.priority(e.vertex) {
                break e.vertex;
            }
        };
        let eta = self.r.get(j);
        *self.x.slot(j) += eta;
        *self.r.slot(j) = 0.0;
        let g = self.graph;
        for &u in g.neighbors(j as usize) {
            self.touch(u);
            *self.r.slot(u) += self.alpha * eta;
            self.enqueue(u);
        }
        self.stats.pushes += 1;
        self.stats.edge_touches += g.degree(j as usize);
        Some(Push {
            vertex: j as usize,
            amount: eta,
        })
    }

    fn is_done_queue(&mut self) -> bool {
        while let Some(e) = self.heap.peek().copied() {
            if e.priority == self.priority(e.vertex) {
                return false;
            }
            self.heap.pop();
        }
        true
    }

    /// Runs to completion and returns the column.
    pub fn run(mut self) -> KatzColumn {
        while self.step().is_some() {}
        self.finish()
    }

    pub fn pushes(&self) -> usize {
        self.stats.pushes
    }

    pub fn stats(&self) -> PushStats {
        let mut s = self.stats;
        s.effective_matvecs = s.edge_touches as f64 / self.graph.volume() as f64;
        s.touched_vertices = self.touched_count;
        s
    }

    /// Current `x` (before the final `- e_i` correction).
    pub fn solution(&self) -> Vec<f64> {
        self.x.to_dense(self.graph.n())
    }

    pub fn residual(&self) -> Vec<f64> {
        self.r.to_dense(self.graph.n())
    }

    /// `e' r`, summed over touched vertices.
    pub fn residual_one_norm(&self) -> f64 {
        (0..self.graph.n())
            .filter(|&v| self.touched[v])
            .map(|v| self.r.get(v as u32).abs())
            .sum()
    }

    /// Turns the state into the reported column: `x - e_i` over touched
    /// vertices, or an empty column when no push happened.
    pub fn finish(self) -> KatzColumn {
        let stats = self.stats();
        let converged = !self.exhausted;
        let mut entries: Vec<(usize, f64)> = Vec::new();
        if stats.pushes > 0 {
            for v in 0..self.graph.n() {
                if self.touched[v] {
                    let mut val = self.x.get(v as u32);
                    if v == self.source {
                        val -= 1.0;
                    }
                    entries.push((v, val));
                }
            }
        }
        KatzColumn {
            source: self.source,
            n: self.graph.n(),
            alpha: self.alpha,
            entries,
            stats,
            converged,
        }
    }
}

/// Sparse approximation of `K e_i = (I - alpha A)^{-1} e_i - e_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KatzColumn {
    pub source: usize,
    pub n: usize,
    pub alpha: f64,
    /// `(vertex, score)` for every touched vertex, by vertex id.
    pub entries: Vec<(usize, f64)>,
    pub stats: PushStats,
    /// False when the push budget ran out first.
    pub converged: bool,
}

impl KatzColumn {
    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for &(v, x) in &self.entries {
            d[v] = x;
        }
        d
    }

    /// Entries by descending score, ties by vertex id.
    pub fn sorted_by_score(&self) -> Vec<(usize, f64)> {
        let mut e = self.entries.clone();
        e.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        e
    }
}

/// Gauss-Southwell push for column `i` of the Katz matrix.
pub fn katz_column_push(g: &Graph, alpha: f64, i: usize, opts: &PushOptions) -> Result<KatzColumn> {
    Ok(PushSolver::new(g, alpha, i, opts)?.run())
}

/// Upper bound `(1 - (1 - alpha d_max)/n)^k` on `||r^(k)||_1` after `k`
/// pushes with residual priorities, valid for `alpha < 1/d_max`.
pub fn residual_bound(alpha: f64, d_max: usize, n: usize, k: usize) -> Result<f64> {
    let ad = alpha * d_max as f64;
    if !(alpha >= 0.0) || ad >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "the bound needs 0 <= alpha < 1/d_max, got alpha = {alpha}, d_max = {d_max}"
        )));
    }
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let base = 1.0 - (1.0 - ad) / n as f64;
    Ok(base.powi(k.min(i32::MAX as usize) as i32))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub columns: Vec<usize>,
    pub ratios: Vec<f64>,
    pub summary: Summary,
}

/// Participation ratios of pushed Katz columns. A column with no entries
/// (no push happened) is reported as the singleton ratio 1.
pub fn participation_trace(
    g: &Graph,
    alpha: f64,
    columns: &[usize],
    opts: &PushOptions,
) -> Result<LocalizationReport> {
    let mut ratios = Vec::with_capacity(columns.len());
    for &c in columns {
        let col = katz_column_push(g, alpha, c, opts)?;
        let vals: Vec<f64> = col.entries.iter().map(|e| e.1).collect();
        ratios.push(match participation_ratio(&vals) {
            Ok(p) => p,
            Err(Error::UndefinedMetric(_)) => 1.0,
            Err(e) => return Err(e),
        });
    }
    let summary = Summary::of(&ratios)?;
    Ok(LocalizationReport {
        columns: columns.to_vec(),
        ratios,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_edge_column() {
        let g = fixtures::single_edge();
        let col = katz_column_push(&g, 0.5, 0, &PushOptions::new(1e-10)).unwrap();
        let d = col.to_dense();
        assert_abs_diff_eq!(d[0], 1.0 / 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(d[1], 2.0 / 3.0, epsilon = 1e-9);
        assert!(col.converged);
    }

    #[test]
    fn large_tau_gives_zero_column() {
        let g = fixtures::star(3);
        let col = katz_column_push(&g, 0.2, 0, &PushOptions::new(2.0)).unwrap();
        assert_eq!(col.stats.pushes, 0);
        assert!(col.entries.is_empty());
        assert_eq!(col.to_dense(), vec![0.0; 4]);
    }

    #[test]
    fn remark_bound_examples() {
        assert_eq!(residual_bound(0.3, 2, 10, 0).unwrap(), 1.0);
        assert_abs_diff_eq!(residual_bound(0.0, 5, 4, 3).unwrap(), 0.75f64.powi(3), epsilon = 1e-15);
        assert_abs_diff_eq!(residual_bound(0.5, 1, 2, 2).unwrap(), 0.5625, epsilon = 1e-15);
        assert!(residual_bound(0.5, 2, 10, 1).is_err());
    }

    #[test]
    fn ties_prefer_small_ids() {
        let g = fixtures::star(3);
        let mut s = PushSolver::new(&g, 0.2, 0, &PushOptions::new(1e-6).with_scaling(Scaling::Residual)).unwrap();
        assert_eq!(s.step().unwrap().vertex, 0);
        assert_eq!(s.step().unwrap().vertex, 1);
        assert_eq!(s.step().unwrap().vertex, 2);
    }

    #[test]
    fn budget_is_reported() {
        let g = fixtures::cycle(10);
        let opts = PushOptions {
            max_pushes: Some(3),
            ..PushOptions::new(1e-12)
        };
        let col = katz_column_push(&g, 0.3, 0, &opts).unwrap();
        assert_eq!(col.stats.pushes, 3);
        assert!(!col.converged);
    }

    #[test]
    fn sigma_max_check() {
        let g = fixtures::star(4);
        let opts = PushOptions {
            sigma_max: Some(2.0),
            ..PushOptions::new(1e-6)
        };
        assert!(PushSolver::new(&g, 0.5, 0, &opts).is_err());
        assert!(PushSolver::new(&g, 0.4, 0, &opts).is_ok());
    }
}
