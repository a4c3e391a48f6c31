//! Evaluation metrics and vertex sampling for benchmark runs.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// `(sum v^2)^2 / sum v^4`, the effective number of nonzeros of `v`.
///
/// Entries are divided by the largest magnitude first, so a constant vector
/// gives exactly its length.
pub fn participation_ratio(v: &[f64]) -> Result<f64> {
    let top = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !(top > 0.0) {
        return Err(Error::UndefinedMetric("participation ratio of a zero vector"));
    }
    let (s2, s4) = v.iter().fold((0.0, 0.0), |(a, b), &x| {
        let x = x / top;
        let x2 = x * x;
        (a + x2, b + x2 * x2)
    });
    if s4 == 0.0 {
        return Err(Error::UndefinedMetric("participation ratio of a zero vector"));
    }
    Ok(s2 * s2 / s4)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Highest scores first (Katz).
    Largest,
    /// Lowest scores first (commute time).
    Smallest,
}

/// The `k` best vertices of a score vector, excluding the source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopKSet {
    pub k: usize,
    pub direction: Direction,
    pub vertices: Vec<usize>,
    pub scores: Vec<f64>,
}

impl TopKSet {
    /// Ties are broken by vertex id.
    pub fn from_scores(scores: &[f64], k: usize, direction: Direction, source: Option<usize>) -> Self {
        let mut idx: Vec<usize> = (0..scores.len()).filter(|&v| Some(v) != source).collect();
        idx.sort_by(|&a, &b| {
            let ord = match direction {
                Direction::Largest => scores[b].total_cmp(&scores[a]),
                Direction::Smallest => scores[a].total_cmp(&scores[b]),
            };
            ord.then(a.cmp(&b))
        });
        idx.truncate(k);
        Self {
            k,
            direction,
            scores: idx.iter().map(|&v| scores[v]).collect(),
            vertices: idx,
        }
    }

    /// Whether the `k`-th and `(k+1)`-th scores of `scores` (source excluded)
    /// are closer than `eps`, which makes the set ambiguous.
    pub fn boundary_tied(scores: &[f64], k: usize, direction: Direction, source: Option<usize>, eps: f64) -> bool {
        let t = Self::from_scores(scores, k + 1, direction, source);
        t.scores.len() > k && (t.scores[k - 1] - t.scores[k]).abs() <= eps
    }
}

/// Fraction of the exact set recovered by the approximate one.
pub fn precision_at_k(approx: &TopKSet, exact: &TopKSet) -> Result<f64> {
    if approx.k != exact.k || approx.direction != exact.direction {
        return Err(Error::InvalidParameter(
            "top-k sets differ in k or direction".into(),
        ));
    }
    if exact.vertices.is_empty() {
        return Err(Error::UndefinedMetric("precision of an empty set"));
    }
    let hits = approx
        .vertices
        .iter()
        .filter(|v| exact.vertices.contains(v))
        .count();
    Ok(hits as f64 / exact.vertices.len() as f64)
}

/// Tie-adjusted Kendall tau-b between two score vectors on the same items.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidParameter("score vectors differ in length".into()));
    }
    if x.len() < 2 {
        return Err(Error::UndefinedMetric("Kendall tau needs two items"));
    }
    let (mut conc, mut disc, mut tie_x, mut tie_y) = (0i64, 0i64, 0i64, 0i64);
    for a in 0..x.len() {
        for b in a + 1..x.len() {
            let dx = (x[a] - x[b]).partial_cmp(&0.0);
            let dy = (y[a] - y[b]).partial_cmp(&0.0);
            match (dx, dy) {
                (Some(std::cmp::Ordering::Equal), Some(std::cmp::Ordering::Equal)) => {}
                (Some(std::cmp::Ordering::Equal), _) => tie_x += 1,
                (_, Some(std::cmp::Ordering::Equal)) => tie_y += 1,
                (p, q) if p == q => conc += 1,
                _ => disc += 1,
            }
        }
    }
    let nx = (conc + disc + tie_y) as f64;
    let ny = (conc + disc + tie_x) as f64;
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::UndefinedMetric("Kendall tau of a constant ranking"));
    }
    Ok((conc - disc) as f64 / (nx * ny).sqrt())
}

/// `(k_cg - k_alg) / k_cg`: 0 for equal work, 1 when the algorithm needs no
/// products, negative when it needs more than CG.
pub fn performance_ratio(k_cg: usize, k_alg: usize) -> Result<f64> {
    if k_cg == 0 {
        return Err(Error::UndefinedMetric("performance ratio with zero CG products"));
    }
    Ok((k_cg as f64 - k_alg as f64) / k_cg as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingScheme {
    /// Consecutive pairs of a seeded random permutation.
    Random,
    /// All pairs among the vertices at degree ranks 1-5, 10-50, 100-500, ...
    DegreeKatz,
    /// All pairs among the vertices at degree ranks 1, 5, 10, 50, 100, ...
    DegreeCommute,
}

/// Ranks `m * 10^e <= n` for the given multipliers, ascending.
pub fn rank_ladder(n: usize, multipliers: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut base = 1usize;
    while base <= n {
        for &m in multipliers {
            let r = m * base;
            if r <= n && !out.contains(&r) {
                out.push(r);
            }
        }
        base = match base.checked_mul(10) {
            Some(b) => b,
            None => break,
        };
    }
    out.sort_unstable();
    out
}

/// Vertices by descending degree, ties by id.
pub fn degree_order(g: &Graph) -> Vec<usize> {
    let mut v: Vec<usize> = (0..g.n()).collect();
    v.sort_by(|&a, &b| g.degree(b).cmp(&g.degree(a)).then(a.cmp(&b)));
    v
}

/// Vertices at the given 1-based ranks of [`degree_order`].
pub fn vertices_at_degree_ranks(g: &Graph, ranks: &[usize]) -> Vec<usize> {
    let order = degree_order(g);
    ranks
        .iter()
        .filter(|&&r| r >= 1 && r <= order.len())
        .map(|&r| order[r - 1])
        .collect()
}

fn all_pairs(vs: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for a in 0..vs.len() {
        for b in a + 1..vs.len() {
            out.push((vs[a], vs[b]));
        }
    }
    out
}

/// Query pairs for a benchmark sweep. Asking for more pairs than the scheme
/// provides returns all of them and logs a warning.
pub fn sample_vertex_pairs(g: &Graph, scheme: SamplingScheme, count: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut pairs = match scheme {
        SamplingScheme::Random => {
            let mut perm: Vec<usize> = (0..g.n()).collect();
            perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            perm.chunks_exact(2).map(|c| (c[0], c[1])).collect::<Vec<_>>()
        }
        SamplingScheme::DegreeKatz => all_pairs(&vertices_at_degree_ranks(g, &rank_ladder(g.n(), &[1, 2, 3, 4, 5]))),
        SamplingScheme::DegreeCommute => all_pairs(&vertices_at_degree_ranks(g, &rank_ladder(g.n(), &[1, 5]))),
    };
    if pairs.len() < count {
        log::warn!("requested {count} pairs, only {} available", pairs.len());
    }
    pairs.truncate(count);
    pairs
}

/// Nearest-rank percentile (`p` in `[0, 100]`) of unsorted data.
pub fn percentile(data: &[f64], p: f64) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::UndefinedMetric("percentile of no data"));
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("percentile {p} outside [0, 100]")));
    }
    let mut s = data.to_vec();
    s.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * s.len() as f64).ceil() as usize;
    Ok(s[rank.clamp(1, s.len()) - 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub min: f64,
    pub mean: f64,
    pub median: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(data: &[f64]) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::UndefinedMetric("summary of no data"));
        }
        let mut s = data.to_vec();
        s.sort_by(f64::total_cmp);
        let n = s.len();
        let median = if n % 2 == 1 {
            s[n / 2]
        } else {
            0.5 * (s[n / 2 - 1] + s[n / 2])
        };
        Ok(Self {
            count: n,
            min: s[0],
            mean: s.iter().sum::<f64>() / n as f64,
            median,
            max: s[n - 1],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn participation_examples() {
        assert_eq!(participation_ratio(&[0.3; 7]).unwrap(), 7.0);
        assert_eq!(participation_ratio(&[0.0, 2.5, 0.0]).unwrap(), 1.0);
        assert_eq!(participation_ratio(&[1.0, 1.0, 0.0, 0.0]).unwrap(), 2.0);
        assert!(participation_ratio(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn precision_examples() {
        let mk = |v: Vec<usize>| TopKSet {
            k: 4,
            direction: Direction::Largest,
            scores: vec![0.0; v.len()],
            vertices: v,
        };
        assert_eq!(precision_at_k(&mk(vec![1, 2, 3, 4]), &mk(vec![4, 3, 2, 1])).unwrap(), 1.0);
        assert_eq!(precision_at_k(&mk(vec![1, 2, 3, 4]), &mk(vec![5, 6, 7, 8])).unwrap(), 0.0);
        assert_eq!(precision_at_k(&mk(vec![1, 2, 3, 9]), &mk(vec![1, 2, 3, 4])).unwrap(), 0.75);
    }

    #[test]
    fn topk_excludes_source_and_breaks_ties_by_id() {
        let t = TopKSet::from_scores(&[5.0, 1.0, 3.0, 3.0], 2, Direction::Largest, Some(0));
        assert_eq!(t.vertices, vec![2, 3]);
        let s = TopKSet::from_scores(&[0.0, 1.0, 3.0, 1.0], 5, Direction::Smallest, Some(0));
        assert_eq!(s.vertices, vec![1, 3, 2]);
    }

    #[test]
    fn kendall_examples() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(kendall_tau_b(&a, &a).unwrap(), 1.0);
        assert_eq!(kendall_tau_b(&a, &[4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0);
        let t = kendall_tau_b(&a, &[1.0, 2.0, 4.0, 3.0]).unwrap();
        assert!((t - 2.0 / 3.0).abs() < 1e-15);
        assert!(kendall_tau_b(&a, &[1.0; 4]).is_err());
    }

    #[test]
    fn performance_examples() {
        assert_eq!(performance_ratio(10, 10).unwrap(), 0.0);
        assert_eq!(performance_ratio(10, 0).unwrap(), 1.0);
        assert_eq!(performance_ratio(10, 20).unwrap(), -1.0);
        assert_eq!(performance_ratio(10, 30).unwrap(), -2.0);
    }

    #[test]
    fn ladders() {
        assert_eq!(rank_ladder(120, &[1, 2, 3, 4, 5]), vec![1, 2, 3, 4, 5, 10, 20, 30, 40, 50, 100]);
        assert_eq!(rank_ladder(600, &[1, 5]), vec![1, 5, 10, 50, 100, 500]);
    }

    #[test]
    fn degree_scheme_picks_top_vertices() {
        // degrees 5,4,3,... on distinct vertices
        let g = crate::graph::Graph::from_edges(
            6,
            &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (1, 2), (1, 3), (1, 4), (2, 3)],
        )
        .unwrap();
        let top = vertices_at_degree_ranks(&g, &[1, 2, 3]);
        assert_eq!(top, vec![0, 1, 2]);
    }

    #[test]
    fn random_pairs() {
        let g = fixtures::cycle(4);
        let p = sample_vertex_pairs(&g, SamplingScheme::Random, 2, 5);
        assert_eq!(p.len(), 2);
        let mut seen: Vec<usize> = p.iter().flat_map(|&(a, b)| [a, b]).collect();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2, 3]);
        assert_eq!(p, sample_vertex_pairs(&g, SamplingScheme::Random, 2, 5));
    }

    #[test]
    fn percentiles_nearest_rank() {
        let d = [15.0, 20.0, 35.0, 40.0, 50.0];
        assert_eq!(percentile(&d, 30.0).unwrap(), 20.0);
        assert_eq!(percentile(&d, 40.0).unwrap(), 20.0);
        assert_eq!(percentile(&d, 50.0).unwrap(), 35.0);
        assert_eq!(percentile(&d, 100.0).unwrap(), 50.0);
        assert_eq!(percentile(&d, 0.0).unwrap(), 15.0);
    }
}
