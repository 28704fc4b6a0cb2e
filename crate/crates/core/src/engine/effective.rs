//! Rejection-free kernel over state-changing events.
//!
//! An active pair is an arc `u -> w` whose endpoints differ in type; the next
//! state change happens along active pair `(u, w)` with probability
//! proportional to `fit(u) / d_out(u)`. Vertices are first grouped into twin
//! classes (identical in- and out-neighbourhoods, either open or closed).
//! Between two classes the arcs are all present or all absent, so the total
//! active weight on a class-level arc depends only on the two mutant counts.
//! These weights sit in a sum tree, which makes a draw `O(log K)` for `K`
//! class arcs and a flip `O(class degree · log K)`. On graphs without twins
//! classes are single vertices and the bookkeeping is the usual per-arc
//! frontier.

use std::collections::HashMap;

use rand::Rng;

use super::sumtree::SumTree;
use super::{Outcome, SimOutcome};
use crate::error::{invalid, Result};
use crate::graph::Digraph;

#[derive(Clone, Debug)]
pub struct EffectiveKernel {
    n: usize,
    r: f64,
    class_of: Vec<u32>,
    /// Position of each vertex inside its class's slice of `members`.
    pos: Vec<u32>,
    /// Class `c` owns `members[start[c]..start[c + 1]]`; its mutants occupy
    /// the first `mutants[c]` slots.
    members: Vec<u32>,
    start: Vec<usize>,
    mutants: Vec<u32>,
    inv_dout: Vec<f64>,
    /// Class arcs `(from, to)`; `from == to` marks the internal arcs of a
    /// class of adjacent twins.
    arcs: Vec<(u32, u32)>,
    /// Arc ids touching each class.
    touching: Vec<Vec<u32>>,
    tree: SumTree,
    total_mutants: usize,
}

impl EffectiveKernel {
    pub fn new(g: &Digraph, r: f64) -> Result<Self> {
        super::check_fitness(r)?;
        let n = g.n();
        let classes = twin_classes(g);
        let mut class_of = vec![0u32; n];
        let mut pos = vec![0u32; n];
        let mut members = Vec::with_capacity(n);
        let mut start = Vec::with_capacity(classes.len() + 1);
        for (c, class) in classes.iter().enumerate() {
            start.push(members.len());
            for (i, &v) in class.iter().enumerate() {
                class_of[v] = c as u32;
                pos[v] = i as u32;
                members.push(v as u32);
            }
        }
        start.push(members.len());

        let k = classes.len();
        let mut inv_dout = vec![0.0; k];
        let mut arcs = Vec::new();
        let mut touching = vec![Vec::new(); k];
        let mut seen = vec![usize::MAX; k];
        for (c, class) in classes.iter().enumerate() {
            let rep = class[0];
            let d = g.out_degree(rep);
            if d > 0 {
                inv_dout[c] = 1.0 / d as f64;
            }
            for &w in g.out_neighbors(rep) {
                let dc = class_of[w] as usize;
                if seen[dc] != c {
                    seen[dc] = c;
                    let id = arcs.len() as u32;
                    arcs.push((c as u32, dc as u32));
                    touching[c].push(id);
                    if dc != c {
                        touching[dc].push(id);
                    }
                }
            }
        }
        let len = |c: u32| start[c as usize + 1] - start[c as usize];
        debug_assert_eq!(
            arcs.iter().map(|&(a, b)| if a == b { len(a) * (len(a) - 1) } else { len(a) * len(b) }).sum::<usize>(),
            g.arc_count(),
            "twin classes must tile the arc set"
        );
        let tree = SumTree::new(arcs.len());
        Ok(EffectiveKernel {
            n,
            r,
            class_of,
            pos,
            members,
            start,
            mutants: vec![0; k],
            inv_dout,
            arcs,
            touching,
            tree,
            total_mutants: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// Number of twin classes.
    pub fn class_count(&self) -> usize {
        self.start.len() - 1
    }

    /// Number of class-level arcs carried by the sum tree.
    pub fn class_arc_count(&self) -> usize {
        self.arcs.len()
    }

    #[inline]
    fn class_size(&self, c: usize) -> usize {
        self.start[c + 1] - self.start[c]
    }

    #[inline]
    pub fn is_mutant(&self, v: usize) -> bool {
        self.pos[v] < self.mutants[self.class_of[v] as usize]
    }

    pub fn mutant_count(&self) -> usize {
        self.total_mutants
    }

    #[inline]
    fn arc_weight(&self, a: usize) -> f64 {
        let (c, d) = (self.arcs[a].0 as usize, self.arcs[a].1 as usize);
        let mc = self.mutants[c] as f64;
        let sc = self.class_size(c) as f64;
        if c == d {
            (1.0 + self.r) * mc * (sc - mc) * self.inv_dout[c]
        } else {
            let md = self.mutants[d] as f64;
            let sd = self.class_size(d) as f64;
            (self.r * mc * (sd - md) + (sc - mc) * md) * self.inv_dout[c]
        }
    }

    fn swap_in_class(&mut self, v: usize, slot: usize) {
        let c = self.class_of[v] as usize;
        let base = self.start[c];
        let pv = self.pos[v] as usize;
        let other = self.members[base + slot] as usize;
        self.members.swap(base + pv, base + slot);
        self.pos[other] = pv as u32;
        self.pos[v] = slot as u32;
    }

    /// Changes `v`'s type without touching the tree.
    fn flip_raw(&mut self, v: usize, to_mutant: bool) {
        let c = self.class_of[v] as usize;
        if to_mutant {
            let slot = self.mutants[c] as usize;
            self.swap_in_class(v, slot);
            self.mutants[c] += 1;
            self.total_mutants += 1;
        } else {
            let slot = self.mutants[c] as usize - 1;
            self.swap_in_class(v, slot);
            self.mutants[c] -= 1;
            self.total_mutants -= 1;
        }
    }

    fn flip(&mut self, v: usize, to_mutant: bool) {
        self.flip_raw(v, to_mutant);
        let c = self.class_of[v] as usize;
        for i in 0..self.touching[c].len() {
            let a = self.touching[c][i] as usize;
            let w = self.arc_weight(a);
            self.tree.set(a, w);
        }
    }

    /// Resets to the configuration whose mutants are exactly `initial`.
    pub fn reset(&mut self, initial: &[usize]) -> Result<()> {
        self.mutants.iter_mut().for_each(|m| *m = 0);
        self.total_mutants = 0;
        for &v in initial {
            if v >= self.n {
                return Err(invalid(format!("vertex {v} out of range for n={}", self.n)));
            }
            if self.is_mutant(v) {
                return Err(invalid(format!("vertex {v} repeated in initial set")));
            }
            self.flip_raw(v, true);
        }
        for a in 0..self.arcs.len() {
            let w = self.arc_weight(a);
            self.tree.set_lazy(a, w);
        }
        self.tree.rebuild();
        Ok(())
    }

    /// Total active weight `Σ fit(u)/d_out(u)` over active pairs.
    pub fn active_weight(&self) -> f64 {
        self.tree.total()
    }

    /// Performs one state-changing event and returns `(vertex, now_mutant)`,
    /// or `None` when no active pair exists.
    pub fn event<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<(usize, bool)> {
        let total = self.tree.total();
        if total <= 0.0 {
            return None;
        }
        let a = loop {
            let a = self.tree.find(rng.random::<f64>() * total);
            if a < self.arcs.len() && self.tree.get(a) > 0.0 {
                break a;
            }
        };
        let (c, d) = (self.arcs[a].0 as usize, self.arcs[a].1 as usize);
        let birth = if c == d {
            rng.random::<f64>() * (1.0 + self.r) < self.r
        } else {
            let mc = self.mutants[c] as f64;
            let births = self.r * mc * (self.class_size(d) as f64 - self.mutants[d] as f64);
            let deaths = (self.class_size(c) as f64 - mc) * self.mutants[d] as f64;
            if births == 0.0 {
                false
            } else if deaths == 0.0 {
                true
            } else {
                rng.random::<f64>() * (births + deaths) < births
            }
        };
        let base = self.start[d];
        let md = self.mutants[d] as usize;
        let slot = if birth { rng.random_range(md..self.class_size(d)) } else { rng.random_range(0..md) };
        let w = self.members[base + slot] as usize;
        self.flip(w, birth);
        Some((w, birth))
    }

    /// Runs from `initial` until absorption or `cap` effective events,
    /// calling `observe(v, now_mutant)` after each flip.
    pub fn run_observed<R, F>(&mut self, initial: &[usize], rng: &mut R, cap: u64, mut observe: F) -> Result<SimOutcome>
    where
        R: Rng + ?Sized,
        F: FnMut(usize, bool),
    {
        self.reset(initial)?;
        let mut events = 0u64;
        let result = loop {
            if self.total_mutants == 0 {
                break Outcome::Extinction;
            }
            if self.total_mutants == self.n {
                break Outcome::Fixation;
            }
            if events >= cap {
                break Outcome::StepCapExceeded;
            }
            match self.event(rng) {
                Some((v, to)) => observe(v, to),
                // no active pair but not absorbed: only possible off the
                // strongly connected precondition; the run cannot finish
                None => break Outcome::StepCapExceeded,
            }
            events += 1;
        };
        Ok(SimOutcome { result, steps: events, effective_steps: events, max_v3_mutants: None, v3_hit: None })
    }

    pub fn run<R: Rng + ?Sized>(&mut self, initial: &[usize], rng: &mut R, cap: u64) -> Result<SimOutcome> {
        self.run_observed(initial, rng, cap, |_, _| {})
    }
}

/// Partitions vertices into twin classes: open twins (same in- and
/// out-neighbourhoods, hence non-adjacent) first, then closed twins among
/// the rest (same neighbourhoods after adding the vertex itself), then
/// singletons.
pub fn twin_classes(g: &Digraph) -> Vec<Vec<usize>> {
    let n = g.n();
    let mut open: HashMap<(&[usize], &[usize]), Vec<usize>> = HashMap::new();
    for v in 0..n {
        open.entry((g.out_neighbors(v), g.in_neighbors(v))).or_default().push(v);
    }
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut placed = vec![false; n];
    for group in open.into_values() {
        if group.len() > 1 {
            group.iter().for_each(|&v| placed[v] = true);
            classes.push(group);
        }
    }
    let closed_key = |row: &[usize], v: usize| {
        let mut k = row.to_vec();
        let at = k.partition_point(|&x| x < v);
        k.insert(at, v);
        k
    };
    let mut closed: HashMap<(Vec<usize>, Vec<usize>), Vec<usize>> = HashMap::new();
    for v in (0..n).filter(|&v| !placed[v]) {
        let key = (closed_key(g.out_neighbors(v), v), closed_key(g.in_neighbors(v), v));
        closed.entry(key).or_default().push(v);
    }
    classes.extend(closed.into_values());
    // HashMap iteration order is random; sort so the kernel is reproducible.
    classes.iter_mut().for_each(|c| c.sort_unstable());
    classes.sort_unstable_by_key(|c| c[0]);
    classes
}
