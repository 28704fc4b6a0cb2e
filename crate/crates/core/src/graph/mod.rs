//! Immutable simple digraphs.
//!
//! Undirected graphs are stored as symmetric digraphs so that a single
//! simulation engine serves both. Vertices are the dense ids `0..n`.
//! Adjacency is kept in CSR form with each neighbour list sorted, which makes
//! arc lookup a binary search and structural equality a slice comparison.

mod io;

pub use io::{GraphFile, LabelSets};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Partition tag carried by incubator vertices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Part {
    V1,
    V2,
    V3,
}

impl Part {
    pub const ALL: [Part; 3] = [Part::V1, Part::V2, Part::V3];

    pub fn name(self) -> &'static str {
        match self {
            Part::V1 => "V1",
            Part::V2 => "V2",
            Part::V3 => "V3",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Csr {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Csr {
    /// Builds sorted adjacency from arcs, rejecting loops and duplicates.
    fn build(n: usize, arcs: impl Iterator<Item = (usize, usize)> + Clone) -> Result<Self> {
        let mut counts = vec![0usize; n + 1];
        for (u, v) in arcs.clone() {
            if u >= n || v >= n {
                return Err(invalid(format!("arc ({u},{v}) out of range for n={n}")));
            }
            if u == v {
                return Err(invalid(format!("self-loop at vertex {u}")));
            }
            counts[u + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let offsets = counts.clone();
        let mut fill = counts;
        let mut targets = vec![0usize; offsets[n]];
        for (u, v) in arcs {
            targets[fill[u]] = v;
            fill[u] += 1;
        }
        for u in 0..n {
            let row = &mut targets[offsets[u]..offsets[u + 1]];
            row.sort_unstable();
            if let Some(w) = row.windows(2).find(|w| w[0] == w[1]) {
                return Err(invalid(format!("duplicate arc ({u},{})", w[0])));
            }
        }
        Ok(Csr { offsets, targets })
    }

    #[inline]
    fn row(&self, v: usize) -> &[usize] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }
}

/// A simple digraph (no loops, no parallel arcs), optionally labelled with
/// the incubator partition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Digraph {
    n: usize,
    directed: bool,
    out_adj: Csr,
    in_adj: Csr,
    labels: Option<Vec<Option<Part>>>,
}

impl Digraph {
    /// Directed graph from a list of arcs `u -> v`.
    pub fn directed(n: usize, arcs: &[(usize, usize)]) -> Result<Self> {
        let out_adj = Csr::build(n, arcs.iter().copied())?;
        let in_adj = Csr::build(n, arcs.iter().map(|&(u, v)| (v, u)))?;
        Ok(Digraph { n, directed: true, out_adj, in_adj, labels: None })
    }

    /// Undirected graph from a list of edges `{u, v}`, each listed once.
    pub fn undirected(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let both = edges.iter().flat_map(|&(u, v)| [(u, v), (v, u)]);
        let out_adj = Csr::build(n, both)?;
        let in_adj = out_adj.clone();
        Ok(Digraph { n, directed: false, out_adj, in_adj, labels: None })
    }

    /// Attaches partition labels; `labels.len()` must equal `n`.
    pub fn with_labels(mut self, labels: Vec<Option<Part>>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(invalid(format!("label vector has length {}, expected {}", labels.len(), self.n)));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Number of ordered pairs `(u, v)` in the arc set.
    pub fn arc_count(&self) -> usize {
        self.out_adj.targets.len()
    }

    /// Edge count with the usual convention: undirected edges count once.
    pub fn m(&self) -> usize {
        if self.directed {
            self.arc_count()
        } else {
            self.arc_count() / 2
        }
    }

    #[inline]
    pub fn out_neighbors(&self, v: usize) -> &[usize] {
        self.out_adj.row(v)
    }

    #[inline]
    pub fn in_neighbors(&self, v: usize) -> &[usize] {
        self.in_adj.row(v)
    }

    #[inline]
    pub fn out_degree(&self, v: usize) -> usize {
        self.out_adj.offsets[v + 1] - self.out_adj.offsets[v]
    }

    #[inline]
    pub fn in_degree(&self, v: usize) -> usize {
        self.in_adj.offsets[v + 1] - self.in_adj.offsets[v]
    }

    /// Degree of an undirected graph (equals the out-degree).
    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.out_degree(v)
    }

    pub fn has_arc(&self, u: usize, v: usize) -> bool {
        self.out_neighbors(u).binary_search(&v).is_ok()
    }

    /// All arcs in lexicographic order.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| self.out_neighbors(u).iter().map(move |&v| (u, v)))
    }

    /// Edges as stored in files: every arc for digraphs, `u < v` pairs for
    /// undirected graphs.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        if self.directed {
            self.arcs().collect()
        } else {
            self.arcs().filter(|&(u, v)| u < v).collect()
        }
    }

    pub fn labels(&self) -> Option<&[Option<Part>]> {
        self.labels.as_deref()
    }

    pub fn part(&self, v: usize) -> Option<Part> {
        self.labels.as_ref().and_then(|l| l[v])
    }

    /// Vertices carrying the given label (empty when unlabelled).
    pub fn vertices_in(&self, part: Part) -> Vec<usize> {
        match &self.labels {
            Some(l) => (0..self.n).filter(|&v| l[v] == Some(part)).collect(),
            None => Vec::new(),
        }
    }

    /// `Some(d)` when every vertex has out-degree and in-degree `d`.
    pub fn regular_degree(&self) -> Option<usize> {
        if self.n == 0 {
            return Some(0);
        }
        let d = self.out_degree(0);
        (0..self.n).all(|v| self.out_degree(v) == d && self.in_degree(v) == d).then_some(d)
    }

    /// Membership mask for a vertex set; rejects out-of-range ids and repeats.
    pub fn membership(&self, set: &[usize]) -> Result<Vec<bool>> {
        let mut mask = vec![false; self.n];
        for &v in set {
            if v >= self.n {
                return Err(invalid(format!("vertex {v} out of range for n={}", self.n)));
            }
            if mask[v] {
                return Err(invalid(format!("vertex {v} repeated in set")));
            }
            mask[v] = true;
        }
        Ok(mask)
    }

    /// `|E(S, V \ S)|`.
    pub fn edge_boundary(&self, s: &[usize]) -> Result<usize> {
        let in_s = self.membership(s)?;
        let mut count = 0;
        for &u in s {
            count += self.out_neighbors(u).iter().filter(|&&w| !in_s[w]).count();
            if self.directed {
                count += self.in_neighbors(u).iter().filter(|&&w| !in_s[w]).count();
            }
        }
        Ok(count)
    }

    /// `|E(S, T)|` for disjoint `S`, `T`; undirected edges count once and
    /// arcs in either direction count for digraphs.
    pub fn edges_between(&self, s: &[usize], t: &[usize]) -> Result<usize> {
        let in_s = self.membership(s)?;
        let in_t = self.membership(t)?;
        if let Some(v) = (0..self.n).find(|&v| in_s[v] && in_t[v]) {
            return Err(invalid(format!("sets overlap at vertex {v}")));
        }
        let mut count = 0;
        for &u in s {
            count += self.out_neighbors(u).iter().filter(|&&w| in_t[w]).count();
            if self.directed {
                count += self.in_neighbors(u).iter().filter(|&&w| in_t[w]).count();
            }
        }
        Ok(count)
    }

    /// Number of edges with both endpoints in `S`.
    pub fn edges_within(&self, s: &[usize]) -> Result<usize> {
        let in_s = self.membership(s)?;
        let arcs: usize = s.iter().map(|&u| self.out_neighbors(u).iter().filter(|&&w| in_s[w]).count()).sum();
        Ok(if self.directed { arcs } else { arcs / 2 })
    }

    /// Checks that `G[S, T]` is biregular; returns the two side degrees.
    pub fn is_biregular(&self, s: &[usize], t: &[usize]) -> Result<Option<(usize, usize)>> {
        if s.is_empty() || t.is_empty() {
            return Err(invalid("biregularity needs two nonempty sides"));
        }
        let in_s = self.membership(s)?;
        let in_t = self.membership(t)?;
        if let Some(v) = (0..self.n).find(|&v| in_s[v] && in_t[v]) {
            return Err(invalid(format!("sets overlap at vertex {v}")));
        }
        let side_degree = |v: usize, other: &[bool]| -> usize {
            let out = self.out_neighbors(v).iter().filter(|&&w| other[w]).count();
            if self.directed {
                out + self.in_neighbors(v).iter().filter(|&&w| other[w]).count()
            } else {
                out
            }
        };
        let ds = side_degree(s[0], &in_t);
        let dt = side_degree(t[0], &in_s);
        let ok = s.iter().all(|&v| side_degree(v, &in_t) == ds) && t.iter().all(|&v| side_degree(v, &in_s) == dt);
        Ok(ok.then_some((ds, dt)))
    }

    /// `N(S)`: union of out-neighbourhoods, sorted.
    pub fn neighborhood(&self, s: &[usize]) -> Vec<usize> {
        let mut mark = vec![false; self.n];
        for &u in s {
            for &w in self.out_neighbors(u) {
                mark[w] = true;
            }
        }
        (0..self.n).filter(|&v| mark[v]).collect()
    }

    fn reach_count(&self, start: usize, forward: bool) -> usize {
        let mut seen = vec![false; self.n];
        let mut stack = vec![start];
        seen[start] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            let next = if forward { self.out_neighbors(u) } else { self.in_neighbors(u) };
            for &w in next {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count
    }

    /// True iff every vertex reaches every other.
    pub fn is_strongly_connected(&self) -> bool {
        if self.n <= 1 {
            return true;
        }
        self.reach_count(0, true) == self.n && self.reach_count(0, false) == self.n
    }

    /// Vertices reachable from `start` ignoring arc directions.
    pub fn weak_component(&self, start: usize) -> Vec<usize> {
        let mut seen = vec![false; self.n];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(u) = stack.pop() {
            for &w in self.out_neighbors(u).iter().chain(self.in_neighbors(u)) {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        (0..self.n).filter(|&v| seen[v]).collect()
    }

    /// Subgraph induced by `set`, with vertex `set[i]` renamed to `i`.
    pub fn induced(&self, set: &[usize]) -> Result<Digraph> {
        self.membership(set)?;
        let mut index = vec![usize::MAX; self.n];
        for (i, &v) in set.iter().enumerate() {
            index[v] = i;
        }
        let mut arcs = Vec::new();
        for (i, &u) in set.iter().enumerate() {
            for &w in self.out_neighbors(u) {
                let j = index[w];
                if j != usize::MAX && (self.directed || i < j) {
                    arcs.push((i, j));
                }
            }
        }
        if self.directed {
            Digraph::directed(set.len(), &arcs)
        } else {
            Digraph::undirected(set.len(), &arcs)
        }
    }

    /// Undirected complement (loops excluded). Directed graphs are rejected.
    pub fn complement(&self) -> Result<Digraph> {
        if self.directed {
            return Err(invalid("complement is only defined here for undirected graphs"));
        }
        let mut edges = Vec::new();
        for u in 0..self.n {
            let row = self.out_neighbors(u);
            let mut it = row.iter().peekable();
            for v in (u + 1)..self.n {
                while it.peek().is_some_and(|&&w| w < v) {
                    it.next();
                }
                if it.peek() != Some(&&v) {
                    edges.push((u, v));
                }
            }
        }
        Digraph::undirected(self.n, &edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete(n: usize) -> Digraph {
        let mut e = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                e.push((u, v));
            }
        }
        Digraph::undirected(n, &e).unwrap()
    }

    fn cycle(n: usize, offset: usize) -> Vec<(usize, usize)> {
        (0..n).map(|i| (offset + i, offset + (i + 1) % n)).collect()
    }

    #[test]
    fn boundary_of_complete_graph_vertex() {
        let g = complete(4);
        assert_eq!(g.edges_between(&[0], &[1, 2, 3]).unwrap(), 3);
        assert_eq!(g.edge_boundary(&[0]).unwrap(), 3);
    }

    #[test]
    fn boundary_of_cycle_arc() {
        let g = Digraph::undirected(6, &cycle(6, 0)).unwrap();
        assert_eq!(g.edge_boundary(&[0, 1, 2]).unwrap(), 2);
    }

    #[test]
    fn disconnected_component_has_zero_boundary() {
        let mut e = cycle(3, 0);
        e.extend(cycle(24, 3));
        let g = Digraph::undirected(27, &e).unwrap();
        assert_eq!(g.regular_degree(), Some(2));
        assert_eq!(g.edge_boundary(&[0, 1, 2]).unwrap(), 0);
    }

    #[test]
    fn boundary_argument_errors() {
        let g = complete(4);
        assert!(g.edges_between(&[0, 1], &[1, 2]).is_err());
        assert!(g.edge_boundary(&[7]).is_err());
        assert!(g.edge_boundary(&[1, 1]).is_err());
    }

    #[test]
    fn strong_connectivity() {
        let tri = Digraph::directed(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        assert!(tri.is_strongly_connected());
        let path = Digraph::directed(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(!path.is_strongly_connected());
        let upath = Digraph::undirected(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(upath.is_strongly_connected());
    }

    #[test]
    fn biregular_examples() {
        let k23 = Digraph::undirected(5, &[(0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4)]).unwrap();
        assert_eq!(k23.is_biregular(&[0, 1], &[2, 3, 4]).unwrap(), Some((3, 2)));
        let star = Digraph::undirected(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        assert_eq!(star.is_biregular(&[0], &[1, 2, 3]).unwrap(), Some((3, 1)));
        let path = Digraph::undirected(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(path.is_biregular(&[0, 2], &[1]).unwrap(), Some((1, 2)));
        assert!(path.is_biregular(&[], &[1]).is_err());
        let p4 = Digraph::undirected(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        assert_eq!(p4.is_biregular(&[0, 2], &[1, 3]).unwrap(), None);
    }

    #[test]
    fn rejects_loops_and_duplicates() {
        assert!(Digraph::undirected(3, &[(0, 0)]).is_err());
        assert!(Digraph::undirected(3, &[(0, 1), (1, 0)]).is_err());
        assert!(Digraph::directed(3, &[(0, 1), (0, 1)]).is_err());
        assert!(Digraph::directed(3, &[(0, 1), (1, 0)]).is_ok());
        assert!(Digraph::directed(2, &[(0, 5)]).is_err());
    }

    #[test]
    fn adjacency_consistency() {
        let g = Digraph::directed(4, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 1)]).unwrap();
        for u in 0..4 {
            for &w in g.out_neighbors(u) {
                assert!(g.in_neighbors(w).contains(&u));
            }
        }
        let outs: usize = (0..4).map(|v| g.out_degree(v)).sum();
        let ins: usize = (0..4).map(|v| g.in_degree(v)).sum();
        assert_eq!(outs, ins);
        assert_eq!(g.m(), 5);
    }

    #[test]
    fn complement_of_cycle() {
        let c5 = Digraph::undirected(5, &cycle(5, 0)).unwrap();
        let comp = c5.complement().unwrap();
        assert_eq!(comp.regular_degree(), Some(2));
        assert_eq!(comp.m(), 5);
        assert!(!comp.has_arc(0, 1));
        assert!(comp.has_arc(0, 2));
    }
}
