//! Exact checks of the danger inequalities on small graphs. Every check is
//! gated on its hypothesis; a lemma with no qualifying instance is reported
//! as vacuous rather than passed.

use serde::{Deserialize, Serialize};

use super::danger;
use crate::engine::check_fitness;
use crate::error::{invalid, Result};
use crate::exact::{solve_all, ExactSolution, DEFAULT_STATE_CAP};
use crate::graph::Digraph;

/// Slack allowed for solver round-off when comparing exact values.
pub const LEMMA_TOLERANCE: f64 = 1e-12;

pub const EXTINCTION_FLOOR: &str = "extinction_floor";
pub const PAIR_BOUND: &str = "pair_bound";
pub const DANGER_BOUND: &str = "danger_bound";
pub const SET_NEIGHBOURHOOD_BOUND: &str = "set_neighbourhood_bound";
pub const SET_MEAN_BOUND: &str = "set_mean_bound";
const ALL_LEMMAS: [&str; 5] = [EXTINCTION_FLOOR, PAIR_BOUND, DANGER_BOUND, SET_NEIGHBOURHOOD_BOUND, SET_MEAN_BOUND];

/// One instance: `lhs <= rhs` is the inequality being checked.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub lemma: String,
    pub subject: Vec<usize>,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaStatus {
    Pass,
    Fail,
    Vacuous,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaSummary {
    pub lemma: String,
    pub checked: usize,
    pub failed: usize,
    pub status: LemmaStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub n: usize,
    pub r: f64,
    pub mean_extinction: f64,
    pub summaries: Vec<LemmaSummary>,
    pub checks: Vec<LemmaCheck>,
}

impl LemmaReport {
    pub fn summary(&self, lemma: &str) -> Option<&LemmaSummary> {
        self.summaries.iter().find(|s| s.lemma == lemma)
    }

    pub fn any_failed(&self) -> bool {
        self.summaries.iter().any(|s| s.status == LemmaStatus::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &LemmaCheck> {
        self.checks.iter().filter(|c| !c.holds)
    }
}

fn check(lemma: &str, subject: Vec<usize>, lhs: f64, rhs: f64) -> LemmaCheck {
    LemmaCheck { lemma: lemma.to_string(), subject, lhs, rhs, holds: lhs <= rhs + LEMMA_TOLERANCE }
}

/// Solves `g` exactly and runs [`verify_danger_lemmas_with`].
pub fn verify_danger_lemmas(g: &Digraph, r: f64) -> Result<LemmaReport> {
    let sol = solve_all(g, r, DEFAULT_STATE_CAP)?;
    verify_danger_lemmas_with(g, &sol, None)
}

/// Checks the danger inequalities against an exact solution.
///
/// * extinction floor: `Q_u/(r + Q_u) <= ℓ(u)` for every `u`;
/// * pair bound (`r >= 1`, `ℓ(u) <= 1/2`, `v ∈ N_out(u)`):
///   `(1 − 3r/(2r + Q_v)) ℓ(u) <= ℓ({u, v})`;
/// * danger bound (`r >= 1`, `ℓ(u) <= 1/4`):
///   `Q_u <= (4rℓ(u)/d_out(u)) Σ_{v ∈ N_out(u)} r/(2r + Q_v)`;
/// * set bounds (`r >= 1`, `α = max_{v∈S} ℓ(v) <= 1/4`):
///   `Σ_S Q_v <= 4r²α|N_out(S)|` and `Σ_S Q_v <= 4r²nαℓ(G)`.
///
/// `family` lists the sets `S` for the set bounds; by default all
/// singletons, all pairs, and the sets `A` and `A'` from [`heavy_set_with`].
pub fn verify_danger_lemmas_with(
    g: &Digraph,
    sol: &ExactSolution,
    family: Option<Vec<Vec<usize>>>,
) -> Result<LemmaReport> {
    let r = sol.r;
    check_fitness(r)?;
    if sol.n != g.n() {
        return Err(invalid("solution does not belong to this graph"));
    }
    let n = g.n();
    let q = danger(g)?.per_vertex;
    let ell: Vec<f64> = (0..n).map(|v| sol.vertex_extinction(v)).collect();
    let ell_g = sol.mean_extinction();
    let mut checks = Vec::new();

    for u in 0..n {
        checks.push(check(EXTINCTION_FLOOR, vec![u], q[u] / (r + q[u]), ell[u]));
    }
    if r >= 1.0 {
        for u in 0..n {
            if ell[u] <= 0.5 {
                for &v in g.out_neighbors(u) {
                    let pair = sol.extinction_of(&[u, v])?;
                    checks.push(check(PAIR_BOUND, vec![u, v], (1.0 - 3.0 * r / (2.0 * r + q[v])) * ell[u], pair));
                }
            }
        }
        if n >= 2 && g.is_strongly_connected() {
            for u in 0..n {
                if ell[u] <= 0.25 {
                    let out = g.out_neighbors(u);
                    let s: f64 = out.iter().map(|&v| r / (2.0 * r + q[v])).sum();
                    checks.push(check(DANGER_BOUND, vec![u], q[u], 4.0 * r * ell[u] / out.len() as f64 * s));
                }
            }
            let family = match family {
                Some(f) => f,
                None => default_family(g, &ell, &q, ell_g, r),
            };
            for set in family {
                if set.is_empty() {
                    continue;
                }
                g.membership(&set)?;
                let alpha = set.iter().map(|&v| ell[v]).fold(f64::NEG_INFINITY, f64::max);
                if alpha > 0.25 {
                    continue;
                }
                let sum_q: f64 = set.iter().map(|&v| q[v]).sum();
                let nout = g.neighborhood(&set).len() as f64;
                checks.push(check(SET_NEIGHBOURHOOD_BOUND, set.clone(), sum_q, 4.0 * r * r * alpha * nout));
                checks.push(check(SET_MEAN_BOUND, set, sum_q, 4.0 * r * r * n as f64 * alpha * ell_g));
            }
        }
    }

    let summaries = ALL_LEMMAS
        .iter()
        .map(|&lemma| {
            let mine: Vec<&LemmaCheck> = checks.iter().filter(|c| c.lemma == lemma).collect();
            let failed = mine.iter().filter(|c| !c.holds).count();
            let status = if mine.is_empty() {
                LemmaStatus::Vacuous
            } else if failed > 0 {
                LemmaStatus::Fail
            } else {
                LemmaStatus::Pass
            };
            LemmaSummary { lemma: lemma.to_string(), checked: mine.len(), failed, status }
        })
        .collect();
    Ok(LemmaReport { n, r, mean_extinction: ell_g, summaries, checks })
}

fn sets_a(ell: &[f64], q: &[f64], ell_g: f64, r: f64) -> (Vec<usize>, Vec<usize>) {
    let a: Vec<usize> = (0..ell.len()).filter(|&v| ell[v] <= 2.0 * ell_g).collect();
    let a_prime = a.iter().copied().filter(|&v| q[v] < 32.0 * r * r * ell_g * ell_g).collect();
    (a, a_prime)
}

fn default_family(g: &Digraph, ell: &[f64], q: &[f64], ell_g: f64, r: f64) -> Vec<Vec<usize>> {
    let n = g.n();
    let mut family: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
    for u in 0..n {
        for v in u + 1..n {
            family.push(vec![u, v]);
        }
    }
    let (a, a_prime) = sets_a(ell, q, ell_g, r);
    family.push(a);
    family.push(a_prime);
    family
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeavySetReport {
    pub n: usize,
    pub r: f64,
    pub mean_extinction: f64,
    /// `ℓ(G) <= 1/8`; when false nothing else is asserted.
    pub hypothesis_met: bool,
    pub a: Vec<usize>,
    pub a_prime: Vec<usize>,
    pub b: Vec<usize>,
    pub degree_sum: usize,
    /// `n/(144 r² ℓ(G))`.
    pub degree_sum_bound: f64,
    pub min_degree: Option<usize>,
    /// `1/(32 r² ℓ(G)²)`.
    pub min_degree_bound: f64,
    pub nonempty: bool,
    pub degree_sum_ok: bool,
    pub min_degree_ok: bool,
}

impl HeavySetReport {
    pub fn all_ok(&self) -> bool {
        self.hypothesis_met && self.nonempty && self.degree_sum_ok && self.min_degree_ok
    }
}

/// Solves `g` exactly and runs [`heavy_set_with`].
pub fn heavy_set(g: &Digraph, r: f64) -> Result<(Vec<usize>, HeavySetReport)> {
    if g.is_directed() {
        return Err(invalid("the heavy set is defined for undirected graphs"));
    }
    let sol = solve_all(g, r, DEFAULT_STATE_CAP)?;
    heavy_set_with(g, &sol)
}

/// `A = {ℓ(v) <= 2ℓ(G)}`, `A' = {v ∈ A : Q_v < 32r²ℓ(G)²}`, `B = N(A')`,
/// with the degree bounds on `B`.
pub fn heavy_set_with(g: &Digraph, sol: &ExactSolution) -> Result<(Vec<usize>, HeavySetReport)> {
    let r = sol.r;
    if !(r > 1.0) {
        return Err(invalid(format!("the heavy set needs r > 1, got {r}")));
    }
    if g.is_directed() || g.n() < 2 || g.weak_component(0).len() != g.n() {
        return Err(invalid("the heavy set needs a connected undirected graph with n >= 2"));
    }
    let n = g.n();
    let q = danger(g)?.per_vertex;
    let ell: Vec<f64> = (0..n).map(|v| sol.vertex_extinction(v)).collect();
    let ell_g = sol.mean_extinction();
    let hypothesis_met = ell_g <= 0.125;
    let (a, a_prime) = sets_a(&ell, &q, ell_g, r);
    let b = g.neighborhood(&a_prime);
    let degree_sum: usize = b.iter().map(|&v| g.degree(v)).sum();
    let min_degree = b.iter().map(|&v| g.degree(v)).min();
    let degree_sum_bound = n as f64 / (144.0 * r * r * ell_g);
    let min_degree_bound = 1.0 / (32.0 * r * r * ell_g * ell_g);
    let report = HeavySetReport {
        n,
        r,
        mean_extinction: ell_g,
        hypothesis_met,
        nonempty: !b.is_empty(),
        degree_sum_ok: degree_sum as f64 >= degree_sum_bound,
        min_degree_ok: min_degree.is_some_and(|d| d as f64 >= min_degree_bound),
        a,
        a_prime,
        b: b.clone(),
        degree_sum,
        degree_sum_bound,
        min_degree,
        min_degree_bound,
    };
    Ok((b, report))
}
