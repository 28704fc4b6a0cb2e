//! Moran process simulation.
//!
//! At every step a vertex `v` is chosen with probability `r/W` if it is a
//! mutant and `1/W` otherwise, where `W = n + (r - 1)|X|`; `v` then copies
//! its type onto a uniform out-neighbour (or nothing happens when `v` has no
//! out-neighbours). Two kernels run this to absorption: [`NaiveKernel`]
//! executes every step including no-ops, [`EffectiveKernel`] samples only
//! the steps that change the state. Both have the same absorption law.

mod effective;
mod sumtree;

pub use effective::{twin_classes, EffectiveKernel};

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{Digraph, Part};
use crate::stats::{wilson_interval, Interval, DEFAULT_CONFIDENCE};

/// Fraction of censored runs above which an estimate is flagged.
pub const CENSORING_FLAG_FRACTION: f64 = 1e-3;

pub(crate) fn check_fitness(r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("fitness r must be a finite positive real, got {r}")))
    }
}

/// `100·⌈r n⁴/(r−1)⌉` for `r > 1`; for `r < 1` the same with the roles of
/// the two types swapped, `100·⌈n⁴/(1−r)⌉`; `100·n⁶` in the neutral case.
/// Saturates at `u64::MAX`.
pub fn default_step_cap(n: usize, r: f64) -> u64 {
    let n4 = (n as f64).powi(4);
    let raw = if r > 1.0 {
        100.0 * (r * n4 / (r - 1.0)).ceil()
    } else if r < 1.0 {
        100.0 * (n4 / (1.0 - r)).ceil()
    } else {
        100.0 * (n as f64).powi(6)
    };
    if raw >= u64::MAX as f64 {
        u64::MAX
    } else {
        raw as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Fixation,
    Extinction,
    StepCapExceeded,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub result: Outcome,
    /// Moran steps taken; for the effective kernel this equals `effective_steps`.
    pub steps: u64,
    pub effective_steps: u64,
    pub max_v3_mutants: Option<usize>,
    pub v3_hit: Option<bool>,
}

/// A mutant set together with its total fitness.
#[derive(Clone, Debug, PartialEq)]
pub struct MutantConfiguration {
    n: usize,
    r: f64,
    bits: Vec<u64>,
    size: usize,
    total_weight: f64,
}

impl MutantConfiguration {
    pub fn new(n: usize, r: f64, members: &[usize]) -> Result<Self> {
        check_fitness(r)?;
        let mut cfg = MutantConfiguration { n, r, bits: vec![0; n.div_ceil(64)], size: 0, total_weight: n as f64 };
        for &v in members {
            if v >= n {
                return Err(invalid(format!("vertex {v} out of range for n={n}")));
            }
            if cfg.contains(v) {
                return Err(invalid(format!("vertex {v} repeated in mutant set")));
            }
            cfg.set(v, true);
        }
        Ok(cfg)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    #[inline]
    pub fn contains(&self, v: usize) -> bool {
        self.bits[v / 64] >> (v % 64) & 1 == 1
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// `W(X) = n + (r − 1)|X|`.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn members(&self) -> Vec<usize> {
        (0..self.n).filter(|&v| self.contains(v)).collect()
    }

    pub fn is_absorbed(&self) -> bool {
        self.size == 0 || self.size == self.n
    }

    fn set(&mut self, v: usize, mutant: bool) {
        if self.contains(v) == mutant {
            return;
        }
        self.bits[v / 64] ^= 1 << (v % 64);
        if mutant {
            self.size += 1;
        } else {
            self.size -= 1;
        }
        self.total_weight = self.n as f64 + (self.r - 1.0) * self.size as f64;
    }
}

/// One Moran step from `cfg`.
pub fn step<R: Rng + ?Sized>(
    g: &Digraph,
    r: f64,
    cfg: &MutantConfiguration,
    rng: &mut R,
) -> Result<MutantConfiguration> {
    check_fitness(r)?;
    if cfg.n != g.n() || cfg.r != r {
        return Err(invalid("configuration does not belong to this (graph, r)"));
    }
    let mut next = cfg.clone();
    if g.n() == 0 {
        return Ok(next);
    }
    // walk the vertices with weights r (mutant) or 1 until the draw is used up
    let mut x = rng.random::<f64>() * cfg.total_weight;
    let mut chosen = g.n() - 1;
    for v in 0..g.n() {
        let w = if cfg.contains(v) { r } else { 1.0 };
        if x < w {
            chosen = v;
            break;
        }
        x -= w;
    }
    let out = g.out_neighbors(chosen);
    if !out.is_empty() {
        let target = out[rng.random_range(0..out.len())];
        next.set(target, cfg.contains(chosen));
    }
    Ok(next)
}

/// Step-by-step kernel. Keeps all vertices in one array with the mutants in
/// front, so choosing the spawner is a single draw.
#[derive(Clone, Debug)]
pub struct NaiveKernel<'g> {
    g: &'g Digraph,
    r: f64,
    order: Vec<usize>,
    pos: Vec<usize>,
    mutants: usize,
}

impl<'g> NaiveKernel<'g> {
    pub fn new(g: &'g Digraph, r: f64) -> Result<Self> {
        check_fitness(r)?;
        let n = g.n();
        Ok(NaiveKernel { g, r, order: (0..n).collect(), pos: (0..n).collect(), mutants: 0 })
    }

    #[inline]
    pub fn is_mutant(&self, v: usize) -> bool {
        self.pos[v] < self.mutants
    }

    fn flip(&mut self, v: usize, to_mutant: bool) {
        let slot = if to_mutant { self.mutants } else { self.mutants - 1 };
        let other = self.order[slot];
        self.order.swap(self.pos[v], slot);
        self.pos[other] = self.pos[v];
        self.pos[v] = slot;
        if to_mutant {
            self.mutants += 1;
        } else {
            self.mutants -= 1;
        }
    }

    pub fn reset(&mut self, initial: &[usize]) -> Result<()> {
        self.mutants = 0;
        for &v in initial {
            if v >= self.g.n() {
                return Err(invalid(format!("vertex {v} out of range for n={}", self.g.n())));
            }
            if self.is_mutant(v) {
                return Err(invalid(format!("vertex {v} repeated in initial set")));
            }
            self.flip(v, true);
        }
        Ok(())
    }

    /// One Moran step; returns the flipped vertex if the state changed.
    #[inline]
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<(usize, bool)> {
        let n = self.g.n();
        let m = self.mutants;
        let mutant_mass = self.r * m as f64;
        let x = rng.random::<f64>() * (mutant_mass + (n - m) as f64);
        let idx = if x < mutant_mass {
            ((x / self.r) as usize).min(m - 1)
        } else {
            (m + (x - mutant_mass) as usize).min(n - 1)
        };
        let v = self.order[idx];
        let out = self.g.out_neighbors(v);
        if out.is_empty() {
            return None;
        }
        let w = out[rng.random_range(0..out.len())];
        let spawn = idx < m;
        if self.is_mutant(w) == spawn {
            return None;
        }
        self.flip(w, spawn);
        Some((w, spawn))
    }

    pub fn run<R: Rng + ?Sized>(&mut self, initial: &[usize], rng: &mut R, cap: u64) -> Result<SimOutcome> {
        self.reset(initial)?;
        let n = self.g.n();
        let (mut steps, mut effective) = (0u64, 0u64);
        let result = loop {
            if self.mutants == 0 {
                break Outcome::Extinction;
            }
            if self.mutants == n {
                break Outcome::Fixation;
            }
            if steps >= cap {
                break Outcome::StepCapExceeded;
            }
            steps += 1;
            if self.step(rng).is_some() {
                effective += 1;
            }
        };
        Ok(SimOutcome { result, steps, effective_steps: effective, max_v3_mutants: None, v3_hit: None })
    }
}

/// Runs the step-by-step process from `initial` to absorption.
pub fn run_to_absorption<R: Rng + ?Sized>(
    g: &Digraph,
    r: f64,
    initial: &[usize],
    rng: &mut R,
    step_cap: Option<u64>,
) -> Result<SimOutcome> {
    let cap = step_cap.unwrap_or_else(|| default_step_cap(g.n(), r));
    NaiveKernel::new(g, r)?.run(initial, rng, cap)
}

/// Runs the effective-event kernel from `initial` to absorption.
pub fn run_effective<R: Rng + ?Sized>(
    g: &Digraph,
    r: f64,
    initial: &[usize],
    rng: &mut R,
    effective_step_cap: Option<u64>,
) -> Result<SimOutcome> {
    let cap = effective_step_cap.unwrap_or_else(|| default_step_cap(g.n(), r));
    EffectiveKernel::new(g, r)?.run(initial, rng, cap)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Naive,
    Effective,
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kernel::Naive => "naive",
            Kernel::Effective => "effective",
        })
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(Kernel::Naive),
            "effective" => Ok(Kernel::Effective),
            _ => Err(invalid(format!("unknown kernel {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// One mutant placed uniformly at random, fresh per replicate.
    UniformVertex,
    FixedSet(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateConfig {
    pub init: InitMode,
    pub replicates: u64,
    pub seed: u64,
    pub kernel: Kernel,
    pub confidence: f64,
    /// `None` means [`default_step_cap`].
    pub step_cap: Option<u64>,
}

impl EstimateConfig {
    pub fn new(replicates: u64, seed: u64) -> Self {
        EstimateConfig {
            init: InitMode::UniformVertex,
            replicates,
            seed,
            kernel: Kernel::Effective,
            confidence: DEFAULT_CONFIDENCE,
            step_cap: None,
        }
    }

    pub fn kernel(mut self, kernel: Kernel) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn init(mut self, init: InitMode) -> Self {
        self.init = init;
        self
    }

    pub fn confidence(mut self, confidence: f64) -> Self {
        self.confidence = confidence;
        self
    }

    pub fn step_cap(mut self, cap: u64) -> Self {
        self.step_cap = Some(cap);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    /// Extinction frequency among uncensored runs.
    pub estimate: f64,
    pub ci: Interval,
    pub confidence: f64,
    pub replicates: u64,
    pub extinctions: u64,
    pub fixations: u64,
    pub censored: u64,
    /// Censoring exceeded [`CENSORING_FLAG_FRACTION`] of runs.
    pub flagged: bool,
    pub seed: u64,
    pub kernel: Kernel,
    pub mean_steps: f64,
}

/// Generator for replicate `index` of a batch seeded with `seed`.
pub fn replicate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

enum AnyKernel<'g> {
    Naive(NaiveKernel<'g>),
    Effective(EffectiveKernel),
}

impl AnyKernel<'_> {
    fn run(&mut self, initial: &[usize], rng: &mut ChaCha8Rng, cap: u64) -> Result<SimOutcome> {
        match self {
            AnyKernel::Naive(k) => k.run(initial, rng, cap),
            AnyKernel::Effective(k) => k.run(initial, rng, cap),
        }
    }
}

#[derive(Default, Clone, Copy)]
struct Tally {
    extinctions: u64,
    fixations: u64,
    censored: u64,
    steps: u128,
}

impl Tally {
    fn merge(self, o: Tally) -> Tally {
        Tally {
            extinctions: self.extinctions + o.extinctions,
            fixations: self.fixations + o.fixations,
            censored: self.censored + o.censored,
            steps: self.steps + o.steps,
        }
    }
}

/// Number of replicates handed to a worker at a time.
const CHUNK: u64 = 256;

/// Monte-Carlo extinction probability with a Wilson interval. Replicate `i`
/// draws from its own stream of the master seed, so results do not depend
/// on the thread count.
pub fn estimate_extinction(g: &Digraph, r: f64, cfg: &EstimateConfig) -> Result<Estimate> {
    check_fitness(r)?;
    if cfg.replicates == 0 {
        return Err(invalid("replicates must be at least 1"));
    }
    let n = g.n();
    if n == 0 {
        return Err(invalid("cannot simulate on the empty graph"));
    }
    if let InitMode::FixedSet(s) = &cfg.init {
        g.membership(s)?;
    }
    let cap = cfg.step_cap.unwrap_or_else(|| default_step_cap(n, r));
    let prototype = match cfg.kernel {
        Kernel::Naive => None,
        Kernel::Effective => Some(EffectiveKernel::new(g, r)?),
    };
    let chunks = cfg.replicates.div_ceil(CHUNK);
    let tally = (0..chunks)
        .into_par_iter()
        .map(|chunk| -> Result<Tally> {
            let mut kernel = match &prototype {
                None => AnyKernel::Naive(NaiveKernel::new(g, r)?),
                Some(k) => AnyKernel::Effective(k.clone()),
            };
            let mut t = Tally::default();
            let mut single = [0usize];
            for i in chunk * CHUNK..((chunk + 1) * CHUNK).min(cfg.replicates) {
                let mut rng = replicate_rng(cfg.seed, i);
                let initial: &[usize] = match &cfg.init {
                    InitMode::UniformVertex => {
                        single[0] = rng.random_range(0..n);
                        &single
                    }
                    InitMode::FixedSet(s) => s,
                };
                let out = kernel.run(initial, &mut rng, cap)?;
                t.steps += out.steps as u128;
                match out.result {
                    Outcome::Extinction => t.extinctions += 1,
                    Outcome::Fixation => t.fixations += 1,
                    Outcome::StepCapExceeded => t.censored += 1,
                }
            }
            Ok(t)
        })
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?;

    let finished = tally.extinctions + tally.fixations;
    let (estimate, ci) = if finished == 0 {
        (f64::NAN, Interval { lo: 0.0, hi: 1.0 })
    } else {
        (tally.extinctions as f64 / finished as f64, wilson_interval(tally.extinctions, finished, cfg.confidence)?)
    };
    Ok(Estimate {
        estimate,
        ci,
        confidence: cfg.confidence,
        replicates: cfg.replicates,
        extinctions: tally.extinctions,
        fixations: tally.fixations,
        censored: tally.censored,
        flagged: tally.censored as f64 > CENSORING_FLAG_FRACTION * cfg.replicates as f64,
        seed: cfg.seed,
        kernel: cfg.kernel,
        mean_steps: tally.steps as f64 / cfg.replicates as f64,
    })
}

/// Follows `|X ∩ V3|` over runs on a labelled graph. The effective kernel
/// visits the same sequence of distinct states as the step-by-step process,
/// so the maximum and the hit flag have the same law under both.
#[derive(Clone, Debug)]
pub struct V3Tracker {
    kernel: EffectiveKernel,
    in_v3: Vec<bool>,
}

impl V3Tracker {
    pub fn new(g: &Digraph, r: f64) -> Result<Self> {
        if g.labels().is_none() {
            return Err(invalid("V3 tracking needs a graph with V1/V2/V3 labels"));
        }
        let in_v3 = (0..g.n()).map(|v| g.part(v) == Some(Part::V3)).collect();
        Ok(V3Tracker { kernel: EffectiveKernel::new(g, r)?, in_v3 })
    }

    pub fn run<R: Rng + ?Sized>(
        &mut self,
        initial: &[usize],
        rng: &mut R,
        target: usize,
        cap: Option<u64>,
    ) -> Result<SimOutcome> {
        let cap = cap.unwrap_or_else(|| default_step_cap(self.kernel.n(), self.kernel.r()));
        let in_v3 = &self.in_v3;
        let mut current = initial.iter().filter(|&&v| v < in_v3.len() && in_v3[v]).count();
        let mut max = current;
        let mut out = self.kernel.run_observed(initial, rng, cap, |v, to_mutant| {
            if in_v3[v] {
                if to_mutant {
                    current += 1;
                    max = max.max(current);
                } else {
                    current -= 1;
                }
            }
        })?;
        out.max_v3_mutants = Some(max);
        out.v3_hit = Some(max >= target);
        Ok(out)
    }
}

/// Single tracked run; see [`V3Tracker`] for repeated runs on one graph.
pub fn track_v3_trajectory<R: Rng + ?Sized>(
    g: &Digraph,
    r: f64,
    initial: &[usize],
    rng: &mut R,
    target: usize,
) -> Result<SimOutcome> {
    V3Tracker::new(g, r)?.run(initial, rng, target, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{baseline_graph, BaselineKind};

    fn two_cycle() -> Digraph {
        Digraph::directed(2, &[(0, 1), (1, 0)]).unwrap()
    }

    #[test]
    fn configuration_weight_invariant() {
        let cfg = MutantConfiguration::new(5, 2.5, &[1, 3]).unwrap();
        assert_eq!(cfg.size(), 2);
        assert_eq!(cfg.total_weight(), 5.0 + 1.5 * 2.0);
        assert_eq!(cfg.members(), vec![1, 3]);
        assert!(MutantConfiguration::new(5, 2.0, &[5]).is_err());
        assert!(MutantConfiguration::new(5, 2.0, &[1, 1]).is_err());
        assert!(MutantConfiguration::new(5, 0.0, &[]).is_err());
    }

    #[test]
    fn absorbed_configurations_stay_put() {
        let g = baseline_graph(BaselineKind::Cycle, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let full = MutantConfiguration::new(4, 2.0, &[0, 1, 2, 3]).unwrap();
        let empty = MutantConfiguration::new(4, 2.0, &[]).unwrap();
        for _ in 0..100 {
            assert_eq!(step(&g, 2.0, &full, &mut rng).unwrap(), full);
            assert_eq!(step(&g, 2.0, &empty, &mut rng).unwrap(), empty);
        }
    }

    #[test]
    fn single_step_on_two_cycle() {
        let g = two_cycle();
        let cfg = MutantConfiguration::new(2, 2.0, &[0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let trials = 60_000;
        let mut grew = 0;
        for _ in 0..trials {
            let next = step(&g, 2.0, &cfg, &mut rng).unwrap();
            match next.size() {
                2 => grew += 1,
                0 => {}
                s => panic!("impossible size {s}"),
            }
        }
        assert!((grew as f64 / trials as f64 - 2.0 / 3.0).abs() < 0.01);
        assert!(step(&g, -1.0, &cfg, &mut rng).is_err());
    }

    #[test]
    fn no_out_neighbours_means_no_change() {
        let g = Digraph::directed(2, &[(0, 1)]).unwrap();
        let cfg = MutantConfiguration::new(2, 3.0, &[1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let next = step(&g, 3.0, &cfg, &mut rng).unwrap();
            // only 0 can spawn, and it can only overwrite 1
            assert!(next == cfg || next.size() == 0);
        }
    }

    #[test]
    fn trivial_runs() {
        let g = baseline_graph(BaselineKind::Complete, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let all = run_to_absorption(&g, 2.0, &[0, 1, 2], &mut rng, None).unwrap();
        assert_eq!((all.result, all.steps), (Outcome::Fixation, 0));
        let none = run_to_absorption(&g, 2.0, &[], &mut rng, None).unwrap();
        assert_eq!((none.result, none.steps), (Outcome::Extinction, 0));
        let capped = run_to_absorption(&g, 2.0, &[0], &mut rng, Some(0)).unwrap();
        assert_eq!(capped.result, Outcome::StepCapExceeded);
    }

    #[test]
    fn naive_kernel_counts_no_ops() {
        let g = baseline_graph(BaselineKind::Complete, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut saw_gap = false;
        for _ in 0..50 {
            let out = run_to_absorption(&g, 2.0, &[0], &mut rng, None).unwrap();
            assert!(out.effective_steps <= out.steps);
            saw_gap |= out.effective_steps < out.steps;
        }
        assert!(saw_gap);
    }

    #[test]
    fn default_caps() {
        assert_eq!(default_step_cap(2, 2.0), 100 * 32);
        assert_eq!(default_step_cap(3, 0.5), 100 * 162);
        assert_eq!(default_step_cap(2, 1.0), 6400);
        assert_eq!(default_step_cap(1 << 20, 1.0), u64::MAX);
    }

    #[test]
    fn estimate_is_reproducible_and_brackets_two_cycle() {
        let g = two_cycle();
        let cfg = EstimateConfig::new(20_000, 17).kernel(Kernel::Naive).confidence(0.99);
        let a = estimate_extinction(&g, 2.0, &cfg).unwrap();
        let b = estimate_extinction(&g, 2.0, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.ci.contains(1.0 / 3.0), "{a:?}");
        assert_eq!(a.censored, 0);
        assert!(!a.flagged);
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = single.install(|| estimate_extinction(&g, 2.0, &cfg).unwrap());
        assert_eq!(a, c);
    }

    #[test]
    fn estimate_flags_heavy_censoring() {
        let g = baseline_graph(BaselineKind::Cycle, 8).unwrap();
        let cfg = EstimateConfig::new(500, 1).step_cap(1);
        let e = estimate_extinction(&g, 2.0, &cfg).unwrap();
        assert!(e.censored > 0);
        assert!(e.flagged);
        assert!(estimate_extinction(&g, 2.0, &EstimateConfig::new(0, 1)).is_err());
    }

    #[test]
    fn kernel_names_round_trip() {
        for k in [Kernel::Naive, Kernel::Effective] {
            assert_eq!(k.to_string().parse::<Kernel>().unwrap(), k);
        }
        assert!("fast".parse::<Kernel>().is_err());
    }

    #[test]
    fn v3_tracking_trivial_cases() {
        let g = baseline_graph(BaselineKind::Complete, 4)
            .unwrap()
            .with_labels(vec![Some(Part::V1), Some(Part::V2), Some(Part::V3), Some(Part::V3)])
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = track_v3_trajectory(&g, 2.0, &[2, 3], &mut rng, 2).unwrap();
        assert_eq!(out.v3_hit, Some(true));
        let out = track_v3_trajectory(&g, 2.0, &[], &mut rng, 1).unwrap();
        assert_eq!((out.result, out.v3_hit), (Outcome::Extinction, Some(false)));
        let unlabelled = baseline_graph(BaselineKind::Complete, 4).unwrap();
        assert!(track_v3_trajectory(&unlabelled, 2.0, &[0], &mut rng, 1).is_err());
    }
}
