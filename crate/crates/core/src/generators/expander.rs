//! Small-set expansion certificates for regular graphs.
//!
//! A `d`-regular graph on `n` vertices is a small-set expander when every
//! nonempty `S` with `|S| <= n^{1/3}` has `|E(S, V\S)| / |S| >= d/4`.
//!
//! Brute force enumerates every such set. The spectral route uses the
//! expander-mixing bound `|E(S, V\S)| >= (d - λ)|S||V\S|/n`, where `λ` is the
//! largest absolute non-trivial adjacency eigenvalue; the ratio bound
//! `(d - λ)(n - s)/n` is smallest at the largest admissible `s`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::integer_cube_root;
use crate::error::{invalid, Error, Result};
use crate::graph::Digraph;

/// Default cap on the number of subsets brute force may examine.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 20_000_000;

/// Added to the computed eigenvalue before certifying, so the certificate
/// stays valid under eigensolver round-off.
pub const SPECTRAL_SLACK: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificationMode {
    BruteForce,
    Spectral,
    /// Brute force when the enumeration fits the budget, spectral otherwise.
    Auto,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExpanderWitness {
    /// The minimising set and its boundary-to-size ratio.
    WorstSet { set: Vec<usize>, boundary: usize, ratio: f64 },
    /// Certified lower bound on the ratio, from the eigenvalue bound.
    SpectralBound { lambda: f64, lambda_bar: f64, ratio_lower_bound: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpanderCertificate {
    /// The mode actually used (never `Auto`).
    pub mode: CertificationMode,
    pub passed: bool,
    pub degree: usize,
    /// `d / 4`.
    pub threshold: f64,
    pub witness: ExpanderWitness,
    /// Largest `|S|` covered, `⌊n^{1/3}⌋`.
    pub checked_size_limit: usize,
}

/// Certifies (or refutes) small-set expansion of a `d`-regular undirected graph.
pub fn certify_small_set_expander(g: &Digraph, mode: CertificationMode, budget: u64) -> Result<ExpanderCertificate> {
    if g.is_directed() {
        return Err(invalid("expansion certificates need an undirected graph"));
    }
    let d = g.regular_degree().ok_or_else(|| invalid("expansion certificates need a regular graph"))?;
    let n = g.n();
    let s_max = integer_cube_root(n as u64) as usize;
    let count = subsets_up_to(n, s_max);
    match mode {
        CertificationMode::BruteForce => {
            if count.is_none_or(|c| c > budget) {
                return Err(Error::Capacity(format!(
                    "brute force would examine more than {budget} subsets (n={n}, |S|<={s_max}); use spectral mode"
                )));
            }
            Ok(brute_force(g, d, s_max))
        }
        CertificationMode::Spectral => spectral(g, d, s_max),
        CertificationMode::Auto => {
            if count.is_some_and(|c| c <= budget) {
                Ok(brute_force(g, d, s_max))
            } else {
                spectral(g, d, s_max)
            }
        }
    }
}

/// `Σ_{1<=s<=s_max} C(n, s)`, or `None` on overflow.
fn subsets_up_to(n: usize, s_max: usize) -> Option<u64> {
    let mut total: u64 = 0;
    let mut binom: u128 = 1;
    for s in 1..=s_max {
        binom = binom * (n - s + 1) as u128 / s as u128;
        total = total.checked_add(u64::try_from(binom).ok()?)?;
    }
    Some(total)
}

struct Search {
    adj: Vec<Vec<u64>>,
    d: usize,
    n: usize,
    s_max: usize,
    stack: Vec<usize>,
    best: Option<(usize, Vec<usize>)>,
}

impl Search {
    #[inline]
    fn adjacent(&self, u: usize, v: usize) -> bool {
        self.adj[u][v / 64] >> (v % 64) & 1 == 1
    }

    fn better(&self, boundary: usize, size: usize) -> bool {
        match &self.best {
            None => true,
            Some((b, set)) => boundary * set.len() < *b * size,
        }
    }

    /// Extends the current set with vertices `>= start`; `boundary` is the
    /// boundary of the current set.
    fn extend(&mut self, start: usize, boundary: usize) {
        if self.stack.len() == self.s_max {
            return;
        }
        for v in start..self.n {
            let inside = self.stack.iter().filter(|&&u| self.adjacent(u, v)).count();
            let next = boundary + self.d - 2 * inside;
            self.stack.push(v);
            if self.better(next, self.stack.len()) {
                self.best = Some((next, self.stack.clone()));
            }
            self.extend(v + 1, next);
            self.stack.pop();
        }
    }
}

fn brute_force(g: &Digraph, d: usize, s_max: usize) -> ExpanderCertificate {
    let n = g.n();
    let words = n.div_ceil(64);
    let mut adj = vec![vec![0u64; words]; n];
    for (u, v) in g.arcs() {
        adj[u][v / 64] |= 1 << (v % 64);
    }
    let mut search = Search { adj, d, n, s_max, stack: Vec::new(), best: None };
    search.extend(0, 0);
    let threshold = d as f64 / 4.0;
    let (boundary, set) = search.best.unwrap_or((0, Vec::new()));
    let ratio = if set.is_empty() { f64::INFINITY } else { boundary as f64 / set.len() as f64 };
    // exact comparison: 4·boundary >= d·|S|
    let passed = set.is_empty() || 4 * boundary >= d * set.len();
    ExpanderCertificate {
        mode: CertificationMode::BruteForce,
        passed,
        degree: d,
        threshold,
        witness: ExpanderWitness::WorstSet { set, boundary, ratio },
        checked_size_limit: s_max,
    }
}

/// Largest absolute eigenvalue after removing the trivial eigenvalue `d`.
pub(crate) fn nontrivial_lambda(g: &Digraph, d: usize) -> f64 {
    let n = g.n();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (u, v) in g.arcs() {
        a[(u, v)] = 1.0;
    }
    let mut eig: Vec<f64> = a.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    // eig[0] is d (up to round-off) for a regular graph
    debug_assert!((eig[0] - d as f64).abs() < 1e-6 * (1.0 + d as f64));
    if n == 1 {
        return 0.0;
    }
    eig[1].max(-eig[n - 1])
}

fn spectral(g: &Digraph, d: usize, s_max: usize) -> Result<ExpanderCertificate> {
    let n = g.n();
    if n > 4000 {
        return Err(Error::Capacity(format!("dense eigensolve refused for n={n} > 4000")));
    }
    let lambda = nontrivial_lambda(g, d);
    let lambda_bar = lambda + SPECTRAL_SLACK;
    let threshold = d as f64 / 4.0;
    let s = s_max.max(1) as f64;
    let ratio_lower_bound = (d as f64 - lambda_bar) * (n as f64 - s) / n as f64;
    Ok(ExpanderCertificate {
        mode: CertificationMode::Spectral,
        passed: ratio_lower_bound >= threshold,
        degree: d,
        threshold,
        witness: ExpanderWitness::SpectralBound { lambda, lambda_bar, ratio_lower_bound },
        checked_size_limit: s_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{baseline_graph, BaselineKind};

    fn two_cycles() -> Digraph {
        let mut e: Vec<(usize, usize)> = (0..3).map(|i| (i, (i + 1) % 3)).collect();
        e.extend((0..24).map(|i| (3 + i, 3 + (i + 1) % 24)));
        let e: Vec<_> = e.into_iter().map(|(u, v)| (u.min(v), u.max(v))).collect();
        Digraph::undirected(27, &e).unwrap()
    }

    #[test]
    fn complete_graph_passes_brute_force() {
        let k9 = baseline_graph(BaselineKind::Complete, 9).unwrap();
        let c = certify_small_set_expander(&k9, CertificationMode::BruteForce, DEFAULT_ENUMERATION_BUDGET).unwrap();
        assert!(c.passed);
        assert_eq!(c.checked_size_limit, 2);
        match c.witness {
            ExpanderWitness::WorstSet { set, boundary, ratio } => {
                assert_eq!(set.len(), 2);
                assert_eq!(boundary, 14);
                assert_eq!(ratio, 7.0);
            }
            _ => panic!("expected a worst set"),
        }
    }

    #[test]
    fn long_cycle_passes_with_arc_witness() {
        let c27 = baseline_graph(BaselineKind::Cycle, 27).unwrap();
        let c = certify_small_set_expander(&c27, CertificationMode::BruteForce, DEFAULT_ENUMERATION_BUDGET).unwrap();
        assert!(c.passed);
        assert_eq!(c.checked_size_limit, 3);
        match c.witness {
            ExpanderWitness::WorstSet { set, boundary, .. } => {
                assert_eq!(set, vec![0, 1, 2]);
                assert_eq!(boundary, 2);
            }
            _ => panic!("expected a worst set"),
        }
    }

    #[test]
    fn disconnected_union_fails() {
        let c = certify_small_set_expander(&two_cycles(), CertificationMode::BruteForce, DEFAULT_ENUMERATION_BUDGET)
            .unwrap();
        assert!(!c.passed);
        match c.witness {
            ExpanderWitness::WorstSet { set, boundary, ratio } => {
                assert_eq!(set, vec![0, 1, 2]);
                assert_eq!(boundary, 0);
                assert_eq!(ratio, 0.0);
            }
            _ => panic!("expected a worst set"),
        }
        let s = certify_small_set_expander(&two_cycles(), CertificationMode::Spectral, 0).unwrap();
        assert!(!s.passed);
    }

    #[test]
    fn spectral_on_complete_graph() {
        let k = baseline_graph(BaselineKind::Complete, 30).unwrap();
        let c = certify_small_set_expander(&k, CertificationMode::Spectral, 0).unwrap();
        assert!(c.passed);
        match c.witness {
            ExpanderWitness::SpectralBound { lambda, .. } => assert!((lambda - 1.0).abs() < 1e-9),
            _ => panic!("expected a spectral bound"),
        }
    }

    #[test]
    fn spectral_bound_never_exceeds_true_minimum() {
        // Petersen graph: λ = 2, every brute-force ratio must dominate the
        // spectral lower bound.
        let outer: Vec<(usize, usize)> = (0..5).map(|i| (i, (i + 1) % 5)).collect();
        let spokes: Vec<(usize, usize)> = (0..5).map(|i| (i, i + 5)).collect();
        let inner: Vec<(usize, usize)> = (0..5).map(|i| (5 + i, 5 + (i + 2) % 5)).collect();
        let e: Vec<_> = outer.into_iter().chain(spokes).chain(inner).map(|(u, v)| (u.min(v), u.max(v))).collect();
        let pet = Digraph::undirected(10, &e).unwrap();
        let b = certify_small_set_expander(&pet, CertificationMode::BruteForce, DEFAULT_ENUMERATION_BUDGET).unwrap();
        let s = certify_small_set_expander(&pet, CertificationMode::Spectral, 0).unwrap();
        let (ExpanderWitness::WorstSet { ratio, .. }, ExpanderWitness::SpectralBound { lambda, ratio_lower_bound, .. }) =
            (b.witness, s.witness)
        else {
            panic!("unexpected witnesses")
        };
        assert!((lambda - 2.0).abs() < 1e-9);
        assert!(ratio_lower_bound <= ratio);
    }

    #[test]
    fn argument_and_capacity_errors() {
        let path = baseline_graph(BaselineKind::Path, 5).unwrap();
        assert!(matches!(
            certify_small_set_expander(&path, CertificationMode::Auto, 100),
            Err(Error::InvalidArgument(_))
        ));
        let k = baseline_graph(BaselineKind::Complete, 200).unwrap();
        assert!(matches!(certify_small_set_expander(&k, CertificationMode::BruteForce, 1000), Err(Error::Capacity(_))));
    }

    #[test]
    fn subset_counts() {
        assert_eq!(subsets_up_to(9, 2), Some(9 + 36));
        assert_eq!(subsets_up_to(27, 3), Some(27 + 351 + 2925));
    }
}
