//! Closed-form bounds and exact checks around extinction probabilities:
//! vertex danger, the lower and upper bounds on `ℓ_r(G)`, gambler's-ruin
//! style auxiliary chains, and the danger lemmas.

mod chains;
mod lemmas;

pub use chains::{
    build_chain, chain_hitting_analysis, gamblers_chain, gamblers_ruin, hitting_by_iteration, BirthDeathChain,
    ChainKind, ChainParams, ChainState, GamblersRuin, HittingAnalysis, YFloorCheck, ZBoundsCheck,
};
pub use lemmas::{
    heavy_set, heavy_set_with, verify_danger_lemmas, verify_danger_lemmas_with, HeavySetReport, LemmaCheck,
    LemmaReport, LemmaStatus, LemmaSummary, DANGER_BOUND, EXTINCTION_FLOOR, LEMMA_TOLERANCE, PAIR_BOUND,
    SET_MEAN_BOUND, SET_NEIGHBOURHOOD_BOUND,
};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::engine::check_fitness;
use crate::enumerate::{connected_graphs_up_to, random_strongly_connected_digraphs};
use crate::error::{invalid, Result};
use crate::exact::{solve_all, time_bound_from, ExactSolution, DEFAULT_STATE_CAP};
use crate::graph::Digraph;

/// Out-degrees up to this size are summed exactly as rationals.
pub const EXACT_DANGER_MAX_DEGREE: usize = 1 << 20;

/// `Q_v = Σ_{u ∈ N_in(v)} 1/d_out(u)` for every vertex.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DangerProfile {
    pub per_vertex: Vec<f64>,
    /// Exact values when every out-degree is at most [`EXACT_DANGER_MAX_DEGREE`].
    #[serde(skip)]
    pub exact: Option<Vec<BigRational>>,
}

impl DangerProfile {
    /// Whether every `Q_v >= 1/n`, decided exactly when possible.
    pub fn all_at_least_one_over_n(&self) -> bool {
        let n = self.per_vertex.len();
        match &self.exact {
            Some(q) => {
                let floor = BigRational::new(BigInt::from(1), BigInt::from(n));
                q.iter().all(|x| *x >= floor)
            }
            None => self.per_vertex.iter().all(|&x| x >= 1.0 / n as f64),
        }
    }
}

/// Neumaier's compensated sum.
fn compensated_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

pub fn danger(g: &Digraph) -> Result<DangerProfile> {
    if let Some(v) = (0..g.n()).find(|&v| g.out_degree(v) == 0) {
        return Err(invalid(format!("vertex {v} has out-degree 0; danger is undefined")));
    }
    let max_out = (0..g.n()).map(|v| g.out_degree(v)).max().unwrap_or(0);
    if max_out <= EXACT_DANGER_MAX_DEGREE {
        let exact: Vec<BigRational> = (0..g.n())
            .map(|v| {
                g.in_neighbors(v).iter().fold(BigRational::zero(), |acc, &u| {
                    acc + BigRational::new(BigInt::from(1), BigInt::from(g.out_degree(u)))
                })
            })
            .collect();
        let per_vertex = exact.iter().map(|q| q.to_f64().unwrap_or(f64::NAN)).collect();
        Ok(DangerProfile { per_vertex, exact: Some(exact) })
    } else {
        let per_vertex = (0..g.n())
            .map(|v| compensated_sum(g.in_neighbors(v).iter().map(|&u| 1.0 / g.out_degree(u) as f64)))
            .collect();
        Ok(DangerProfile { per_vertex, exact: None })
    }
}

/// `Q_v / (r + Q_v)`, the chance that a lone mutant at `v` is overwritten
/// before it spawns.
pub fn danger_extinction_floor(g: &Digraph, r: f64, v: usize) -> Result<f64> {
    check_fitness(r)?;
    if v >= g.n() {
        return Err(invalid(format!("vertex {v} out of range for n={}", g.n())));
    }
    let q = danger(g)?.per_vertex[v];
    Ok(q / (r + q))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Lower,
    /// Only established for incubators with enormous branching values;
    /// evaluated for reference, never asserted.
    AsymptoticUpper,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedBound {
    pub name: String,
    pub value: f64,
    pub kind: BoundKind,
}

/// `1/(5 r √n)`: strongly connected digraphs.
pub const DIGRAPH_LOWER: &str = "digraph_lower";
/// `1/(42 r^{4/3} n^{1/3})`: connected undirected graphs.
pub const UNDIRECTED_LOWER: &str = "undirected_lower";
/// `n/(288 r² m)`: connected undirected graphs with `m` edges.
pub const EDGE_DENSITY_LOWER: &str = "edge_density_lower";
/// `71/(r (r−1)² n)^{1/3}`: dense incubators.
pub const DENSE_INCUBATOR_UPPER: &str = "dense_incubator_upper";
/// `2^14 r n/((r−1)² m)`: sparse incubators.
pub const SPARSE_INCUBATOR_UPPER: &str = "sparse_incubator_upper";
/// `r n⁴/(r − 1)` against the largest expected absorption time.
pub const ABSORPTION_TIME: &str = "absorption_time";

/// Evaluates the three lower bounds and the two asymptotic upper bounds.
pub fn theorem_bounds(n: usize, m: usize, r: f64) -> Result<Vec<NamedBound>> {
    if !(r.is_finite() && r > 1.0) {
        return Err(invalid(format!("the extinction bounds need r > 1, got {r}")));
    }
    if n < 2 || m < 1 {
        return Err(invalid(format!("the extinction bounds need n >= 2 and m >= 1, got n={n}, m={m}")));
    }
    let (nf, mf) = (n as f64, m as f64);
    let bound = |name: &str, value: f64, kind| NamedBound { name: name.to_string(), value, kind };
    Ok(vec![
        bound(DIGRAPH_LOWER, 1.0 / (5.0 * r * nf.sqrt()), BoundKind::Lower),
        bound(UNDIRECTED_LOWER, 1.0 / (42.0 * r.powf(4.0 / 3.0) * nf.cbrt()), BoundKind::Lower),
        bound(EDGE_DENSITY_LOWER, nf / (288.0 * r * r * mf), BoundKind::Lower),
        bound(DENSE_INCUBATOR_UPPER, 71.0 / (r * (r - 1.0).powi(2) * nf).cbrt(), BoundKind::AsymptoticUpper),
        bound(SPARSE_INCUBATOR_UPPER, 16384.0 * r * nf / ((r - 1.0).powi(2) * mf), BoundKind::AsymptoticUpper),
    ])
}

/// One bound compared against one measured value. `slack` is positive
/// exactly when the inequality holds with room to spare.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound_name: String,
    pub n: usize,
    pub m: usize,
    pub r: f64,
    pub bound: f64,
    pub measured: f64,
    pub satisfied: bool,
    pub slack: f64,
}

impl BoundReport {
    pub const CSV_HEADER: &'static str = "bound_name,n,m,r,bound,measured,satisfied,slack";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:e},{:e},{},{:e}",
            self.bound_name, self.n, self.m, self.r, self.bound, self.measured, self.satisfied, self.slack
        )
    }

    /// Header plus one line per report.
    pub fn to_csv(reports: &[BoundReport]) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in reports {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }

    pub fn to_json(reports: &[BoundReport]) -> Result<String> {
        Ok(serde_json::to_string_pretty(reports)?)
    }
}

fn lower_report(name: &str, g: &Digraph, r: f64, bound: f64, measured: f64, strict: bool) -> BoundReport {
    BoundReport {
        bound_name: name.to_string(),
        n: g.n(),
        m: g.m(),
        r,
        bound,
        measured,
        satisfied: if strict { measured > bound } else { measured >= bound },
        slack: measured - bound,
    }
}

/// Lower-bound reports for one solved graph: the digraph bound always, the
/// two undirected bounds when `g` is undirected, and the absorption-time
/// bound.
pub fn bound_reports_for(g: &Digraph, sol: &ExactSolution) -> Result<Vec<BoundReport>> {
    let r = sol.r;
    let bounds = theorem_bounds(g.n(), g.m().max(1), r)?;
    let value = |name: &str| bounds.iter().find(|b| b.name == name).map(|b| b.value).unwrap_or(f64::NAN);
    let ell = sol.mean_extinction();
    let mut out = vec![lower_report(DIGRAPH_LOWER, g, r, value(DIGRAPH_LOWER), ell, true)];
    if !g.is_directed() {
        out.push(lower_report(UNDIRECTED_LOWER, g, r, value(UNDIRECTED_LOWER), ell, true));
        out.push(lower_report(EDGE_DENSITY_LOWER, g, r, value(EDGE_DENSITY_LOWER), ell, false));
    }
    let t = time_bound_from(sol);
    out.push(BoundReport {
        bound_name: ABSORPTION_TIME.to_string(),
        n: g.n(),
        m: g.m(),
        r,
        bound: t.bound,
        measured: t.max_expected_steps,
        satisfied: t.satisfied,
        slack: t.bound - t.max_expected_steps,
    });
    Ok(out)
}

/// Solves every connected undirected graph with `2 <= n <= max_n` and
/// `digraph_sample` random strongly connected digraphs exactly, for each `r`
/// in `r_list`, and compares against the lower bounds.
pub fn verify_lower_bounds_exhaustive(
    max_n: usize,
    r_list: &[f64],
    digraph_sample: usize,
    seed: u64,
) -> Result<Vec<BoundReport>> {
    if max_n > DEFAULT_STATE_CAP {
        return Err(invalid(format!("max_n = {max_n} exceeds the exact-solver cap")));
    }
    if let Some(&r) = r_list.iter().find(|&&r| !(r.is_finite() && r > 1.0)) {
        return Err(invalid(format!("the extinction bounds need r > 1, got {r}")));
    }
    let mut graphs = connected_graphs_up_to(max_n)?;
    if digraph_sample > 0 {
        graphs.extend(random_strongly_connected_digraphs(digraph_sample, max_n.max(2), seed)?);
    }
    let mut reports = Vec::new();
    for g in &graphs {
        for &r in r_list {
            let sol = solve_all(g, r, DEFAULT_STATE_CAP)?;
            reports.extend(bound_reports_for(g, &sol)?);
        }
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{baseline_graph, BaselineKind};

    #[test]
    fn danger_examples() {
        let star = baseline_graph(BaselineKind::Star, 101).unwrap();
        let q = danger(&star).unwrap();
        assert_eq!(q.per_vertex[0], 100.0);
        assert!((q.per_vertex[1] - 0.01).abs() < 1e-15);
        let k5 = danger(&baseline_graph(BaselineKind::Complete, 5).unwrap()).unwrap();
        assert!(k5.per_vertex.iter().all(|&x| x == 1.0));
        let two = Digraph::directed(2, &[(0, 1), (1, 0)]).unwrap();
        assert_eq!(danger(&two).unwrap().per_vertex, vec![1.0, 1.0]);
        assert!(danger(&Digraph::directed(2, &[(0, 1)]).unwrap()).is_err());
    }

    #[test]
    fn danger_floor_of_star_centre() {
        let star = baseline_graph(BaselineKind::Star, 101).unwrap();
        let f = danger_extinction_floor(&star, 2.0, 0).unwrap();
        assert!((f - 100.0 / 102.0).abs() < 1e-15);
    }

    #[test]
    fn compensated_summation_beats_naive() {
        let xs = std::iter::once(1.0).chain(std::iter::repeat_n(1e-16, 10_000));
        let s = compensated_sum(xs);
        assert!((s - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn bound_values() {
        let b = theorem_bounds(100, 4950, 2.0).unwrap();
        let get = |name: &str| b.iter().find(|x| x.name == name).unwrap().value;
        assert!((get(DIGRAPH_LOWER) - 0.01).abs() < 1e-15);
        assert!((get(EDGE_DENSITY_LOWER) - 100.0 / 5_702_400.0).abs() < 1e-18);
        let b = theorem_bounds(1000, 10, 2.0).unwrap();
        let v = b.iter().find(|x| x.name == UNDIRECTED_LOWER).unwrap().value;
        assert!((v - 1.0 / (42.0 * 2f64.powf(4.0 / 3.0) * 10.0)).abs() < 1e-15);
        assert!((v - 9.45e-4).abs() < 1e-6);
        assert!(b.iter().filter(|x| x.kind == BoundKind::AsymptoticUpper).count() == 2);
        assert!(theorem_bounds(10, 10, 1.0).is_err());
        assert!(theorem_bounds(1, 10, 2.0).is_err());
    }

    #[test]
    fn exhaustive_sweep_small() {
        let reports = verify_lower_bounds_exhaustive(4, &[2.0], 10, 1).unwrap();
        assert!(reports.iter().all(|r| r.satisfied), "{reports:?}");
        // the single edge: ℓ = 1/3 against 1/(10√2)
        let edge = reports.iter().find(|r| r.n == 2 && r.bound_name == DIGRAPH_LOWER).unwrap();
        assert!((edge.measured - 1.0 / 3.0).abs() < 1e-12);
        assert!((edge.bound - 1.0 / (10.0 * 2f64.sqrt())).abs() < 1e-15);
        assert!(verify_lower_bounds_exhaustive(4, &[1.0], 0, 1).is_err());
    }

    #[test]
    fn csv_shape() {
        let reports = verify_lower_bounds_exhaustive(2, &[2.0], 0, 0).unwrap();
        let csv = BoundReport::to_csv(&reports);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), BoundReport::CSV_HEADER);
        assert!(lines.all(|l| l.split(',').count() == 8));
    }
}
