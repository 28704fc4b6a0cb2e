//! Exact extinction probabilities and absorption times by solving the
//! absorbing chain over all `2^n` mutant sets.
//!
//! For a non-absorbing set `S` let `w_a = fit(u)/d_out(u)` range over the
//! active arcs `a = u -> w` (endpoints of different type) and `S_a` be the
//! set after `u` overwrites `w`. Dividing out the lazy self-loop gives
//!
//! ```text
//! (Σ w_a) f(S) = Σ w_a f(S_a)            f(∅) = 1, f(V) = 0
//! (Σ w_a) T(S) = W(S) + Σ w_a T(S_a)     T(∅) = T(V) = 0
//! ```
//!
//! with `W(S) = n + (r − 1)|S|`. Small systems are solved by dense LU,
//! larger ones by Gauss–Seidel.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::Digraph;

pub const DEFAULT_STATE_CAP: usize = 14;
/// Largest `n` solved by dense LU.
pub const DENSE_LIMIT: usize = 10;
/// Required residual of the solved systems.
pub const RESIDUAL_TOLERANCE: f64 = 1e-12;
const MAX_SWEEPS: usize = 2_000_000;

/// Values for every mutant set, indexed by bitmask (bit `v` set iff `v` is a
/// mutant).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactSolution {
    pub n: usize,
    pub r: f64,
    pub extinction: Vec<f64>,
    pub expected_steps: Vec<f64>,
    /// Largest scaled residual over both systems.
    pub residual: f64,
}

impl ExactSolution {
    pub fn mask_of(&self, set: &[usize]) -> Result<usize> {
        let mut mask = 0usize;
        for &v in set {
            if v >= self.n {
                return Err(invalid(format!("vertex {v} out of range for n={}", self.n)));
            }
            if mask >> v & 1 == 1 {
                return Err(invalid(format!("vertex {v} repeated in set")));
            }
            mask |= 1 << v;
        }
        Ok(mask)
    }

    /// `ℓ_r(S)`.
    pub fn extinction_of(&self, set: &[usize]) -> Result<f64> {
        Ok(self.extinction[self.mask_of(set)?])
    }

    pub fn expected_steps_of(&self, set: &[usize]) -> Result<f64> {
        Ok(self.expected_steps[self.mask_of(set)?])
    }

    /// `ℓ_r(v)`.
    pub fn vertex_extinction(&self, v: usize) -> f64 {
        self.extinction[1 << v]
    }

    /// `ℓ_r(G)`, the average of the singleton values.
    pub fn mean_extinction(&self) -> f64 {
        (0..self.n).map(|v| self.vertex_extinction(v)).sum::<f64>() / self.n as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactResult {
    pub r: f64,
    pub n: usize,
    #[serde(serialize_with = "as_vertex_map")]
    pub per_vertex_extinction: Vec<f64>,
    pub mean_extinction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_set_cache: Option<ExactSolution>,
}

fn as_vertex_map<S: serde::Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = s.serialize_map(Some(values.len()))?;
    for (v, x) in values.iter().enumerate() {
        map.serialize_entry(&v.to_string(), x)?;
    }
    map.end()
}

impl ExactResult {
    /// JSON object with the vertex → `ℓ_r(v)` map; the per-set tables are
    /// dropped unless `with_sets`.
    pub fn to_json(&self, with_sets: bool) -> Result<String> {
        if with_sets || self.per_set_cache.is_none() {
            Ok(serde_json::to_string_pretty(self)?)
        } else {
            let slim = ExactResult { per_set_cache: None, ..self.clone() };
            Ok(serde_json::to_string_pretty(&slim)?)
        }
    }
}

struct Arc {
    from: usize,
    to: usize,
    inv_dout: f64,
}

fn check_solvable(g: &Digraph, r: f64, state_cap: usize) -> Result<()> {
    crate::engine::check_fitness(r)?;
    let n = g.n();
    if n == 0 {
        return Err(invalid("exact solve needs at least one vertex"));
    }
    if n > state_cap {
        return Err(Error::Capacity(format!("n = {n} exceeds the exact-solver cap {state_cap}")));
    }
    if n >= usize::BITS as usize - 1 {
        return Err(Error::Capacity(format!("n = {n} does not fit a bitmask state")));
    }
    if !g.is_strongly_connected() {
        return Err(invalid("exact solve needs a strongly connected graph"));
    }
    Ok(())
}

/// Solves both systems for every mutant set.
pub fn solve_all(g: &Digraph, r: f64, state_cap: usize) -> Result<ExactSolution> {
    check_solvable(g, r, state_cap)?;
    let n = g.n();
    let arcs: Vec<Arc> =
        g.arcs().map(|(u, w)| Arc { from: u, to: w, inv_dout: 1.0 / g.out_degree(u) as f64 }).collect();
    let states = 1usize << n;
    let full = states - 1;
    let (extinction, expected_steps) =
        if n <= DENSE_LIMIT { solve_dense(n, r, &arcs)? } else { solve_iterative(n, r, &arcs)? };
    let mut sol = ExactSolution { n, r, extinction, expected_steps, residual: 0.0 };
    sol.extinction[0] = 1.0;
    sol.extinction[full] = 0.0;
    sol.expected_steps[0] = 0.0;
    sol.expected_steps[full] = 0.0;
    sol.residual = residual(&sol, &arcs);
    if !(sol.residual <= RESIDUAL_TOLERANCE) {
        return Err(Error::Capacity(format!("solve residual {:.3e} above {RESIDUAL_TOLERANCE:e}", sol.residual)));
    }
    Ok(sol)
}

/// Active transitions out of `s` as `(target state, weight)`.
#[inline]
fn for_each_move(s: usize, r: f64, arcs: &[Arc], mut f: impl FnMut(usize, f64)) {
    for a in arcs {
        let um = s >> a.from & 1 == 1;
        let wm = s >> a.to & 1 == 1;
        if um != wm {
            let fit = if um { r } else { 1.0 };
            f(s ^ (1 << a.to), fit * a.inv_dout);
        }
    }
}

fn total_weight(n: usize, r: f64, s: usize) -> f64 {
    n as f64 + (r - 1.0) * s.count_ones() as f64
}

fn solve_dense(n: usize, r: f64, arcs: &[Arc]) -> Result<(Vec<f64>, Vec<f64>)> {
    use nalgebra::DMatrix;
    let states = 1usize << n;
    let full = states - 1;
    let mut a = DMatrix::<f64>::zeros(states, states);
    let mut b = DMatrix::<f64>::zeros(states, 2);
    for s in 0..states {
        if s == 0 || s == full {
            a[(s, s)] = 1.0;
            b[(s, 0)] = if s == 0 { 1.0 } else { 0.0 };
            continue;
        }
        let mut total = 0.0;
        for_each_move(s, r, arcs, |t, w| {
            a[(s, t)] -= w;
            total += w;
        });
        a[(s, s)] += total;
        b[(s, 1)] = total_weight(n, r, s);
    }
    let x = a.lu().solve(&b).ok_or_else(|| Error::Capacity("singular transition system".into()))?;
    Ok((x.column(0).iter().copied().collect(), x.column(1).iter().copied().collect()))
}

fn solve_iterative(n: usize, r: f64, arcs: &[Arc]) -> Result<(Vec<f64>, Vec<f64>)> {
    let states = 1usize << n;
    let full = states - 1;
    // start from the neutral-drift guess 1 − |S|/n
    let mut f: Vec<f64> = (0..states).map(|s| 1.0 - s.count_ones() as f64 / n as f64).collect();
    let mut t = vec![0.0; states];
    for sweep in 0..MAX_SWEEPS {
        let mut change = 0.0f64;
        // alternate direction each sweep; symmetric sweeps converge much
        // faster on chains that move both up and down
        let order: Box<dyn Iterator<Item = usize>> =
            if sweep % 2 == 0 { Box::new(1..full) } else { Box::new((1..full).rev()) };
        for s in order {
            let (mut total, mut fs, mut ts) = (0.0, 0.0, 0.0);
            for_each_move(s, r, arcs, |next, w| {
                total += w;
                fs += w * f[next];
                ts += w * t[next];
            });
            let nf = fs / total;
            let nt = (total_weight(n, r, s) + ts) / total;
            change = change.max((nf - f[s]).abs()).max((nt - t[s]).abs() / nt.max(1.0));
            f[s] = nf;
            t[s] = nt;
        }
        f[0] = 1.0;
        f[full] = 0.0;
        if change < 1e-15 {
            return Ok((f, t));
        }
    }
    Err(Error::Capacity(format!("Gauss–Seidel did not converge in {MAX_SWEEPS} sweeps")))
}

fn residual(sol: &ExactSolution, arcs: &[Arc]) -> f64 {
    let states = sol.extinction.len();
    let full = states - 1;
    let mut worst: f64 = (sol.extinction[0] - 1.0).abs()
        + sol.extinction[full].abs()
        + sol.expected_steps[0].abs()
        + sol.expected_steps[full].abs();
    for s in 1..full {
        let (mut total, mut fs, mut ts) = (0.0, 0.0, 0.0);
        for_each_move(s, sol.r, arcs, |next, w| {
            total += w;
            fs += w * sol.extinction[next];
            ts += w * sol.expected_steps[next];
        });
        let rf = (total * sol.extinction[s] - fs).abs() / total;
        let rt = (total * sol.expected_steps[s] - total_weight(sol.n, sol.r, s) - ts).abs()
            / (total * sol.expected_steps[s].max(1.0));
        worst = worst.max(rf).max(rt);
    }
    worst
}

/// `ℓ_r(v)` for every vertex and `ℓ_r(G)`; the full per-set solution is
/// kept in `per_set_cache`.
pub fn exact_extinction(g: &Digraph, r: f64, state_cap: usize) -> Result<ExactResult> {
    let sol = solve_all(g, r, state_cap)?;
    Ok(ExactResult {
        r,
        n: sol.n,
        per_vertex_extinction: (0..sol.n).map(|v| sol.vertex_extinction(v)).collect(),
        mean_extinction: sol.mean_extinction(),
        per_set_cache: Some(sol),
    })
}

/// `(ℓ_r(S), expected steps to absorption from S)`.
pub fn exact_extinction_from_set(g: &Digraph, r: f64, set: &[usize]) -> Result<(f64, f64)> {
    let sol = solve_all(g, r, DEFAULT_STATE_CAP)?;
    let mask = sol.mask_of(set)?;
    Ok((sol.extinction[mask], sol.expected_steps[mask]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeBoundReport {
    pub n: usize,
    pub r: f64,
    pub max_expected_steps: f64,
    /// A mutant set attaining the maximum.
    pub argmax: Vec<usize>,
    /// `r n⁴ / (r − 1)`.
    pub bound: f64,
    pub satisfied: bool,
}

/// Largest expected absorption time over all starting sets against `r n⁴/(r − 1)`.
pub fn expected_time_vs_bound(g: &Digraph, r: f64) -> Result<TimeBoundReport> {
    if !(r > 1.0) {
        return Err(invalid(format!("the absorption-time bound needs r > 1, got {r}")));
    }
    let sol = solve_all(g, r, DEFAULT_STATE_CAP)?;
    Ok(time_bound_from(&sol))
}

/// As [`expected_time_vs_bound`] on an existing solution (which must have `r > 1`).
pub fn time_bound_from(sol: &ExactSolution) -> TimeBoundReport {
    let (mask, &max) =
        sol.expected_steps.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("at least two states");
    let bound = sol.r * (sol.n as f64).powi(4) / (sol.r - 1.0);
    TimeBoundReport {
        n: sol.n,
        r: sol.r,
        max_expected_steps: max,
        argmax: (0..sol.n).filter(|&v| mask >> v & 1 == 1).collect(),
        bound,
        satisfied: max <= bound,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub r_low: f64,
    pub r_high: f64,
    pub extinction_low: f64,
    pub extinction_high: f64,
    pub satisfied: bool,
}

/// Checks `ℓ_{r_high}(G) ≤ ℓ_{r_low}(G) + 1e−10`.
pub fn monotonicity_check(g: &Digraph, r_low: f64, r_high: f64) -> Result<MonotonicityReport> {
    if !(r_low > 0.0 && r_low <= r_high) {
        return Err(invalid(format!("need 0 < r_low <= r_high, got {r_low}, {r_high}")));
    }
    let low = solve_all(g, r_low, DEFAULT_STATE_CAP)?.mean_extinction();
    let high = solve_all(g, r_high, DEFAULT_STATE_CAP)?.mean_extinction();
    Ok(MonotonicityReport { r_low, r_high, extinction_low: low, extinction_high: high, satisfied: high <= low + 1e-10 })
}
