//! Random `d`-regular simple graphs.
//!
//! Two samplers are available. The pairing (configuration) model with
//! whole-sample rejection is exactly uniform but its acceptance rate decays
//! like `exp((1 - d^2) / 4)`, so it is only practical for small `d`. For
//! larger degrees the Steger–Wormald incremental pairing is used: it pairs
//! random points while avoiding loops and repeated edges and restarts when it
//! gets stuck, which is asymptotically uniform. Degrees above `(n - 1) / 2`
//! are sampled as complements of the sparser degree.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::graph::Digraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegularSampler {
    /// Configuration model, reject the whole sample on any loop or repeat.
    Pairing,
    /// Incremental pairing with restarts.
    StegerWormald,
    /// Pairing when its acceptance rate is reasonable, Steger–Wormald
    /// otherwise; complements dense degrees.
    Auto,
}

/// Attempts allowed for whole-sample rejection before giving up.
const PAIRING_ATTEMPTS: usize = 100_000;
/// Restarts allowed for the incremental sampler.
const STEGER_WORMALD_RESTARTS: usize = 1_000;
/// Pairing is used by `Auto` while `exp((1 - d^2)/4)` stays above this.
const PAIRING_MIN_ACCEPTANCE: f64 = 1e-3;

/// Uniform-ish random simple `d`-regular graph on `n` vertices.
pub fn random_regular_graph(n: usize, d: usize, seed: u64) -> Result<Digraph> {
    random_regular_graph_with(n, d, seed, RegularSampler::Auto, None)
}

/// As [`random_regular_graph`] with an explicit sampler and attempt budget.
pub fn random_regular_graph_with(
    n: usize,
    d: usize,
    seed: u64,
    sampler: RegularSampler,
    budget: Option<usize>,
) -> Result<Digraph> {
    if n == 0 {
        return Err(invalid("regular graph needs n >= 1"));
    }
    if d >= n {
        return Err(invalid(format!("degree {d} impossible on {n} vertices")));
    }
    if (n * d) % 2 == 1 {
        return Err(invalid(format!("n*d = {n}*{d} is odd; no {d}-regular graph on {n} vertices")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if d == 0 {
        return Digraph::undirected(n, &[]);
    }
    if d == n - 1 {
        let edges: Vec<_> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        return Digraph::undirected(n, &edges);
    }
    match sampler {
        RegularSampler::Pairing => pairing(n, d, &mut rng, budget.unwrap_or(PAIRING_ATTEMPTS)),
        RegularSampler::StegerWormald => steger_wormald(n, d, &mut rng, budget.unwrap_or(STEGER_WORMALD_RESTARTS)),
        RegularSampler::Auto => {
            if 2 * d > n - 1 {
                let sparse = random_regular_graph_with(n, n - 1 - d, seed, sampler, budget)?;
                return sparse.complement();
            }
            let acceptance = ((1.0 - (d * d) as f64) / 4.0).exp();
            if acceptance >= PAIRING_MIN_ACCEPTANCE {
                pairing(n, d, &mut rng, budget.unwrap_or(PAIRING_ATTEMPTS))
            } else {
                steger_wormald(n, d, &mut rng, budget.unwrap_or(STEGER_WORMALD_RESTARTS))
            }
        }
    }
}

#[inline]
fn key(u: usize, v: usize) -> (u32, u32) {
    if u < v {
        (u as u32, v as u32)
    } else {
        (v as u32, u as u32)
    }
}

fn to_graph(n: usize, edges: HashSet<(u32, u32)>) -> Result<Digraph> {
    let mut list: Vec<(usize, usize)> = edges.into_iter().map(|(u, v)| (u as usize, v as usize)).collect();
    list.sort_unstable();
    Digraph::undirected(n, &list)
}

fn pairing(n: usize, d: usize, rng: &mut ChaCha8Rng, attempts: usize) -> Result<Digraph> {
    let mut points: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    let mut edges = HashSet::with_capacity(n * d / 2);
    'attempt: for _ in 0..attempts {
        points.shuffle(rng);
        edges.clear();
        for pair in points.chunks_exact(2) {
            let (u, v) = (pair[0], pair[1]);
            if u == v || !edges.insert(key(u, v)) {
                continue 'attempt;
            }
        }
        return to_graph(n, std::mem::take(&mut edges));
    }
    Err(Error::Generation(format!(
        "pairing model found no simple {d}-regular graph on {n} vertices in {attempts} attempts"
    )))
}

fn steger_wormald(n: usize, d: usize, rng: &mut ChaCha8Rng, restarts: usize) -> Result<Digraph> {
    for _ in 0..restarts {
        if let Some(edges) = steger_wormald_once(n, d, rng) {
            return to_graph(n, edges);
        }
    }
    Err(Error::Generation(format!("incremental pairing got stuck {restarts} times for d={d}, n={n}")))
}

fn steger_wormald_once(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Option<HashSet<(u32, u32)>> {
    let mut edges = HashSet::with_capacity(n * d / 2);
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    let mut leftover = vec![0usize; n];
    while !stubs.is_empty() {
        stubs.shuffle(rng);
        leftover.iter_mut().for_each(|c| *c = 0);
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0], pair[1]);
            if u != v && !edges.contains(&key(u, v)) {
                edges.insert(key(u, v));
            } else {
                leftover[u] += 1;
                leftover[v] += 1;
            }
        }
        let open: Vec<usize> = (0..n).filter(|&v| leftover[v] > 0).collect();
        if open.is_empty() {
            break;
        }
        let suitable =
            open.iter().enumerate().any(|(i, &u)| open[i + 1..].iter().any(|&v| !edges.contains(&key(u, v))));
        if !suitable {
            return None;
        }
        stubs = open.iter().flat_map(|&v| std::iter::repeat_n(v, leftover[v])).collect();
    }
    Some(edges)
}
