//! Small-graph enumeration: every undirected graph on `n <= 8` vertices up
//! to isomorphism, and seeded samples of strongly connected digraphs.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::graph::Digraph;

pub const MAX_ENUMERATION_N: usize = 8;

#[inline]
fn pair_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

fn adjacency(n: usize, mask: u64) -> Vec<u16> {
    let mut adj = vec![0u16; n];
    for i in 0..n {
        for j in i + 1..n {
            if mask >> pair_index(n, i, j) & 1 == 1 {
                adj[i] |= 1 << j;
                adj[j] |= 1 << i;
            }
        }
    }
    adj
}

/// Smallest edge mask over all relabellings that keep vertices sorted by
/// (degree, sorted neighbour degrees). Isomorphic graphs get equal values.
fn canonical(n: usize, adj: &[u16]) -> u64 {
    let deg: Vec<u32> = adj.iter().map(|a| a.count_ones()).collect();
    let key = |v: usize| {
        let mut nd: Vec<u32> = (0..n).filter(|&w| adj[v] >> w & 1 == 1).map(|w| deg[w]).collect();
        nd.sort_unstable();
        (deg[v], nd)
    };
    let keys: Vec<_> = (0..n).map(key).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    // blocks of equal key; labels inside a block may be permuted freely
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for &v in &order {
        match blocks.last_mut() {
            Some(b) if keys[b[0]] == keys[v] => b.push(v),
            _ => blocks.push(vec![v]),
        }
    }
    let mut label = vec![0usize; n];
    let mut best = u64::MAX;
    assign(n, adj, &blocks, 0, 0, &mut vec![false; n], &mut label, &mut best);
    best
}

#[allow(clippy::too_many_arguments)]
fn assign(
    n: usize,
    adj: &[u16],
    blocks: &[Vec<usize>],
    block: usize,
    next_label: usize,
    used: &mut [bool],
    label: &mut [usize],
    best: &mut u64,
) {
    if block == blocks.len() {
        let mut mask = 0u64;
        for i in 0..n {
            for j in i + 1..n {
                if adj[i] >> j & 1 == 1 {
                    mask |= 1 << pair_index(n, label[i], label[j]);
                }
            }
        }
        *best = (*best).min(mask);
        return;
    }
    let members = &blocks[block];
    let placed = members.iter().filter(|&&v| used[v]).count();
    if placed == members.len() {
        assign(n, adj, blocks, block + 1, next_label, used, label, best);
        return;
    }
    for &v in members {
        if !used[v] {
            used[v] = true;
            label[v] = next_label;
            assign(n, adj, blocks, block, next_label + 1, used, label, best);
            used[v] = false;
        }
    }
}

fn masks_up_to_iso(n: usize) -> Vec<u64> {
    if n <= 1 {
        return vec![0];
    }
    let smaller = masks_up_to_iso(n - 1);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for &m in &smaller {
        let base = adjacency(n - 1, m);
        for nbrs in 0u16..(1 << (n - 1)) {
            let mut adj: Vec<u16> = base.clone();
            adj.push(nbrs);
            for (w, a) in adj.iter_mut().enumerate().take(n - 1) {
                if nbrs >> w & 1 == 1 {
                    *a |= 1 << (n - 1);
                }
            }
            let c = canonical(n, &adj);
            if seen.insert(c) {
                out.push(c);
            }
        }
    }
    out.sort_unstable();
    out
}

fn to_graph(n: usize, mask: u64) -> Digraph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if mask >> pair_index(n, i, j) & 1 == 1 {
                edges.push((i, j));
            }
        }
    }
    Digraph::undirected(n, &edges).expect("enumerated edges are simple")
}

/// All undirected graphs on `n` vertices, one per isomorphism class.
pub fn nonisomorphic_graphs(n: usize) -> Result<Vec<Digraph>> {
    if n > MAX_ENUMERATION_N {
        return Err(invalid(format!("enumeration supports n <= {MAX_ENUMERATION_N}, got {n}")));
    }
    Ok(masks_up_to_iso(n).into_iter().map(|m| to_graph(n, m)).collect())
}

/// Connected undirected graphs on `n` vertices up to isomorphism.
pub fn connected_graphs(n: usize) -> Result<Vec<Digraph>> {
    Ok(nonisomorphic_graphs(n)?.into_iter().filter(|g| g.n() == 0 || g.weak_component(0).len() == g.n()).collect())
}

/// Connected graphs for every `n` in `2..=max_n`.
pub fn connected_graphs_up_to(max_n: usize) -> Result<Vec<Digraph>> {
    let mut all = Vec::new();
    for n in 2..=max_n {
        all.extend(connected_graphs(n)?);
    }
    Ok(all)
}

/// `count` strongly connected digraphs with `2 <= n <= max_n`, drawn by
/// picking `n` uniformly and each arc independently with a per-graph density
/// in `[0.2, 0.8]`, rejecting samples that are not strongly connected.
pub fn random_strongly_connected_digraphs(count: usize, max_n: usize, seed: u64) -> Result<Vec<Digraph>> {
    if max_n < 2 {
        return Err(invalid("strongly connected samples need max_n >= 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let n = rng.random_range(2..=max_n);
        let p = rng.random_range(0.2..0.8);
        let arcs: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| (0..n).map(move |v| (u, v)))
            .filter(|&(u, v)| u != v)
            .filter(|_| rng.random_bool(p))
            .collect();
        let g = Digraph::directed(n, &arcs)?;
        if g.is_strongly_connected() {
            out.push(g);
        }
    }
    Ok(out)
}

/// Ten small strongly connected graphs of mixed shape (undirected and
/// directed, regular and not) used to calibrate the simulators against the
/// exact solver. Every member has `n <= 8`.
pub fn calibration_panel() -> Vec<(String, Digraph)> {
    use crate::generators::{baseline_graph, BaselineKind::*};
    let base = |name: &str, kind, n| (name.to_string(), baseline_graph(kind, n).expect("valid baseline"));
    let directed =
        |name: &str, n, arcs: &[(usize, usize)]| (name.to_string(), Digraph::directed(n, arcs).expect("valid arcs"));
    vec![
        base("path:2", Path, 2),
        base("complete:3", Complete, 3),
        base("star:5", Star, 5),
        base("cycle:5", Cycle, 5),
        base("path:4", Path, 4),
        base("complete:6", Complete, 6),
        base("star:8", Star, 8),
        base("cycle:8", Cycle, 8),
        directed("dicycle:3", 3, &[(0, 1), (1, 2), (2, 0)]),
        directed("two-loops:5", 5, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 2), (0, 3)]),
    ]
}
