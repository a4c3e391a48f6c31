//! Small deterministic graphs and seeded random generators used by tests,
//! benchmarks and the synthetic stand-ins for real networks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::Graph;

fn build(n: usize, edges: &[(usize, usize)]) -> Graph {
    Graph::from_edges(n, edges).expect("fixture graphs are nonempty")
}

pub fn single_edge() -> Graph {
    build(2, &[(0, 1)])
}

pub fn path(n: usize) -> Graph {
    let edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
    build(n, &edges)
}

pub fn cycle(n: usize) -> Graph {
    let edges: Vec<_> = (0..n).map(|v| (v, (v + 1) % n)).collect();
    build(n, &edges)
}

pub fn complete(n: usize) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            edges.push((u, v));
        }
    }
    build(n, &edges)
}

/// `K_{1,leaves}` with the center at vertex 0.
pub fn star(leaves: usize) -> Graph {
    let edges: Vec<_> = (1..=leaves).map(|v| (0, v)).collect();
    build(leaves + 1, &edges)
}

/// `G(n, p)` restricted to its largest component.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    if edges.is_empty() {
        edges.push((0, 1));
    }
    build(n, &edges)
}

/// Barabasi-Albert preferential attachment: a seed clique on `m + 1`
/// vertices, then each new vertex links to `m` distinct existing vertices
/// chosen with probability proportional to degree. Always connected.
pub fn preferential_attachment(n: usize, m: usize, seed: u64) -> Graph {
    assert!(m >= 1 && n > m, "need n > m >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    // each vertex appears once per incident edge endpoint
    let mut endpoints: Vec<usize> = Vec::new();
    for u in 0..=m {
        for v in u + 1..=m {
            edges.push((u, v));
            endpoints.push(u);
            endpoints.push(v);
        }
    }
    let mut chosen = Vec::with_capacity(m);
    for v in m + 1..n {
        chosen.clear();
        while chosen.len() < m {
            let t = *endpoints.choose(&mut rng).expect("nonempty");
            if !chosen.contains(&t) {
                chosen.push(t);
            }
        }
        for &t in &chosen {
            edges.push((t, v));
            endpoints.push(t);
            endpoints.push(v);
        }
    }
    build(n, &edges)
}

/// A connected graph whose degrees are heavy-tailed: preferential attachment
/// with a few hub vertices wired to many leaves. Used where `1/d_max` and
/// `1/sigma_max` must be far apart.
pub fn hub_and_spokes(n: usize, hubs: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let core = n / 2;
    let base = preferential_attachment(core, 2, seed ^ 0x9e37);
    let mut edges: Vec<(usize, usize)> = (0..base.n())
        .flat_map(|u| {
            base.neighbors(u)
                .iter()
                .filter(move |&&v| (v as usize) > u)
                .map(move |&v| (u, v as usize))
        })
        .collect();
    for v in core..n {
        let h = rng.gen_range(0..hubs.min(core));
        edges.push((h, v));
    }
    build(n, &edges)
}
