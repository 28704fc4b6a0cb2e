use std::path::PathBuf;

use clap::{Args, Subcommand};
use moran_core::analytics::{
    build_chain, chain_hitting_analysis, gamblers_chain, gamblers_ruin, heavy_set_with, verify_danger_lemmas_with,
    verify_lower_bounds_exhaustive, BoundReport, ChainKind, ChainState, HeavySetReport, HittingAnalysis, LemmaCheck,
    LemmaStatus, LemmaSummary,
};
use moran_core::engine::{estimate_extinction, EstimateConfig, Kernel};
use moran_core::enumerate::{calibration_panel, connected_graphs_up_to, random_strongly_connected_digraphs};
use moran_core::exact::{solve_all, DEFAULT_STATE_CAP};
use moran_core::generators::{baseline_graph, integer_cube_root, BaselineKind};
use moran_core::stats::Interval;
use moran_core::Digraph;
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{csv, emit, json, resolve, Format};
use crate::Failure;

/// Largest allowed gap between the closed-form and solved gambler's ruin.
pub const GAMBLER_TOLERANCE: f64 = 1e-10;

#[derive(Subcommand, Debug)]
pub enum Suite {
    /// Exact extinction against the lower bounds and the absorption-time bound.
    Bounds(BoundsArgs),
    /// The danger inequalities and the heavy-set construction.
    Lemmas(LemmasArgs),
    /// Gambler's ruin, the Y-chain floor and the Z-chain bounds.
    Chains(ChainsArgs),
    /// Naive and effective simulators against the exact solver.
    Kernels(KernelsArgs),
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    /// Every connected undirected graph with 2 <= n <= max-n is solved.
    #[arg(long, default_value_t = 7)]
    max_n: usize,
    #[arg(long, value_delimiter = ',', default_value = "1.5,2,5")]
    r: Vec<f64>,
    /// Random strongly connected digraphs added to the sweep.
    #[arg(long, default_value_t = 0)]
    digraphs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Debug)]
pub struct LemmasArgs {
    #[arg(long, default_value_t = 7)]
    max_n: usize,
    #[arg(long, value_delimiter = ',', default_value = "1.5,2,5")]
    r: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    digraphs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Clique sizes checked at the `--clique-r` fitness values.
    #[arg(long, value_delimiter = ',')]
    cliques: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "2,5,10,25")]
    clique_r: Vec<f64>,
    /// Also write every individual check to this CSV file.
    #[arg(long)]
    checks: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ChainsArgs {
    #[arg(long, value_delimiter = ',', default_value = "2")]
    r: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "120")]
    b: Vec<u64>,
    /// Number of stars; defaults to b² for each b.
    #[arg(long)]
    k: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct KernelsArgs {
    /// Panel graphs with more vertices are skipped.
    #[arg(long, default_value_t = 8)]
    max_n: usize,
    #[arg(long, value_delimiter = ',', default_value = "2")]
    r: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.99)]
    confidence: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(suite: Suite) -> Result<(), Failure> {
    match suite {
        Suite::Bounds(a) => bounds(a),
        Suite::Lemmas(a) => lemmas(a),
        Suite::Chains(a) => chains(a),
        Suite::Kernels(a) => kernels(a),
    }
}

fn verdict(suite: &str, checked: usize, failures: &[String]) -> Result<(), Failure> {
    eprintln!("{suite}: {checked} checks, {} failed", failures.len());
    for f in failures.iter().take(20) {
        eprintln!("  {f}");
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Checks(format!("{} {suite} check(s) failed", failures.len())))
    }
}

#[derive(Serialize)]
struct BoundsReport<'a> {
    suite: &'static str,
    passed: bool,
    checked: usize,
    failed: usize,
    reports: &'a [BoundReport],
}

fn bounds(a: BoundsArgs) -> Result<(), Failure> {
    let reports = verify_lower_bounds_exhaustive(a.max_n, &a.r, a.digraphs, a.seed)?;
    let failures: Vec<String> = reports.iter().filter(|r| !r.satisfied).map(BoundReport::csv_row).collect();
    let text = match a.format {
        Format::Csv => BoundReport::to_csv(&reports),
        Format::Json => json(&BoundsReport {
            suite: "bounds",
            passed: failures.is_empty(),
            checked: reports.len(),
            failed: failures.len(),
            reports: &reports,
        })?,
    };
    emit(resolve(a.out, &format!("verify_bounds.{}", a.format.extension())).as_deref(), &text)?;
    verdict("bounds", reports.len(), &failures)
}

fn edges_of(g: &Digraph) -> String {
    let pairs: Vec<String> = g.edges().iter().map(|(u, v)| format!("{u}-{v}")).collect();
    format!("{}{}:{}", if g.is_directed() { "d" } else { "u" }, g.n(), pairs.join(" "))
}

#[derive(Clone, Debug, Serialize)]
struct LocatedCheck {
    graph: String,
    r: f64,
    #[serde(flatten)]
    check: LemmaCheck,
}

#[derive(Clone, Debug, Serialize)]
struct HeavySetSummary {
    instances: usize,
    hypothesis_met: usize,
    failed: usize,
    failures: Vec<(String, HeavySetReport)>,
}

#[derive(Serialize)]
struct LemmasReport {
    suite: &'static str,
    passed: bool,
    graphs: usize,
    summaries: Vec<LemmaSummary>,
    heavy_set: HeavySetSummary,
    failures: Vec<LocatedCheck>,
}

struct GraphOutcome {
    checks: Vec<LocatedCheck>,
    heavy: Option<(String, HeavySetReport)>,
}

fn lemmas_for(g: &Digraph, r: f64) -> Result<GraphOutcome, Failure> {
    let sol = solve_all(g, r, DEFAULT_STATE_CAP)?;
    let id = edges_of(g);
    let rep = verify_danger_lemmas_with(g, &sol, None)?;
    let checks = rep.checks.into_iter().map(|check| LocatedCheck { graph: id.clone(), r, check }).collect();
    let heavy = if !g.is_directed() && r > 1.0 { Some((id, heavy_set_with(g, &sol)?.1)) } else { None };
    Ok(GraphOutcome { checks, heavy })
}

fn lemmas(a: LemmasArgs) -> Result<(), Failure> {
    let mut jobs: Vec<(Digraph, f64)> = Vec::new();
    let mut graphs = connected_graphs_up_to(a.max_n)?;
    if a.digraphs > 0 {
        graphs.extend(random_strongly_connected_digraphs(a.digraphs, a.max_n.max(2), a.seed)?);
    }
    for g in &graphs {
        jobs.extend(a.r.iter().map(|&r| (g.clone(), r)));
    }
    for &n in &a.cliques {
        let k = baseline_graph(BaselineKind::Complete, n)?;
        jobs.extend(a.clique_r.iter().map(|&r| (k.clone(), r)));
    }
    let graph_count = graphs.len() + a.cliques.len();
    let outcomes = jobs.par_iter().map(|(g, r)| lemmas_for(g, *r)).collect::<Result<Vec<_>, _>>()?;

    let mut all = Vec::new();
    let mut heavy = HeavySetSummary { instances: 0, hypothesis_met: 0, failed: 0, failures: Vec::new() };
    for o in outcomes {
        all.extend(o.checks);
        if let Some((id, h)) = o.heavy {
            heavy.instances += 1;
            if h.hypothesis_met {
                heavy.hypothesis_met += 1;
                if !h.all_ok() {
                    heavy.failed += 1;
                    heavy.failures.push((id, h));
                }
            }
        }
    }
    let names = ["extinction_floor", "pair_bound", "danger_bound", "set_neighbourhood_bound", "set_mean_bound"];
    let summaries: Vec<LemmaSummary> = names
        .iter()
        .map(|&lemma| {
            let (checked, failed) = all
                .iter()
                .filter(|c| c.check.lemma == lemma)
                .fold((0, 0), |(c, f), x| (c + 1, f + usize::from(!x.check.holds)));
            let status = match (checked, failed) {
                (0, _) => LemmaStatus::Vacuous,
                (_, 0) => LemmaStatus::Pass,
                _ => LemmaStatus::Fail,
            };
            LemmaSummary { lemma: lemma.to_string(), checked, failed, status }
        })
        .collect();
    let failures: Vec<LocatedCheck> = all.iter().filter(|c| !c.check.holds).cloned().collect();

    if let Some(path) = a.checks.as_deref() {
        #[derive(Serialize)]
        struct Flat<'a> {
            graph: &'a str,
            r: f64,
            lemma: &'a str,
            subject: String,
            lhs: f64,
            rhs: f64,
            holds: bool,
        }
        let flat: Vec<Flat> = all
            .iter()
            .map(|c| Flat {
                graph: &c.graph,
                r: c.r,
                lemma: &c.check.lemma,
                subject: c.check.subject.iter().map(usize::to_string).collect::<Vec<_>>().join(" "),
                lhs: c.check.lhs,
                rhs: c.check.rhs,
                holds: c.check.holds,
            })
            .collect();
        emit(Some(path), &csv(&["graph", "r", "lemma", "subject", "lhs", "rhs", "holds"], &flat)?)?;
    }

    for s in &summaries {
        eprintln!("{}: {:?} ({} checked, {} failed)", s.lemma, s.status, s.checked, s.failed);
    }
    eprintln!(
        "heavy_set: {} instances, {} meet the hypothesis, {} failed",
        heavy.instances, heavy.hypothesis_met, heavy.failed
    );
    let mut messages: Vec<String> = failures
        .iter()
        .map(|c| {
            format!("{} r={} {} {:?}: {} > {}", c.graph, c.r, c.check.lemma, c.check.subject, c.check.lhs, c.check.rhs)
        })
        .collect();
    messages.extend(heavy.failures.iter().map(|(id, h)| format!("heavy set on {id} r={}: {h:?}", h.r)));
    let report = LemmasReport {
        suite: "lemmas",
        passed: messages.is_empty(),
        graphs: graph_count,
        summaries,
        heavy_set: heavy,
        failures,
    };
    emit(resolve(a.out, "verify_lemmas.json").as_deref(), &json(&report)?)?;
    verdict("lemmas", all.len() + report.heavy_set.hypothesis_met, &messages)
}

#[derive(Clone, Debug, Serialize)]
pub struct GamblerCheck {
    pub p: f64,
    pub z: u64,
    pub a: u64,
    pub closed_form: f64,
    pub solved: f64,
    pub holds: bool,
}

/// Fifty `(p, z, a)` points: five up-probabilities on each side of 1/2
/// crossed with five `(z, a)` pairs.
pub fn gambler_grid() -> Vec<(f64, u64, u64)> {
    let ps = [0.1, 0.3, 0.45, 0.49, 0.51, 0.55, 0.6, 0.75, 0.9, 0.99];
    let za = [(0, 4), (1, 3), (3, 10), (7, 20), (25, 60)];
    ps.iter().flat_map(|&p| za.iter().map(move |&(z, a)| (p, z, a))).collect()
}

fn gambler_checks() -> Result<Vec<GamblerCheck>, Failure> {
    gambler_grid()
        .into_iter()
        .map(|(p, z, a)| {
            let closed_form = gamblers_ruin(p, z, a)?.hit_prob;
            let chain = gamblers_chain(p, z as usize, a as usize)?;
            let solved = chain_hitting_analysis(&chain, ChainState::Level(a as usize))?.hit_prob;
            let holds = (closed_form - solved).abs() <= GAMBLER_TOLERANCE;
            Ok(GamblerCheck { p, z, a, closed_form, solved, holds })
        })
        .collect()
}

#[derive(Serialize)]
struct ChainCase {
    r: f64,
    b: u64,
    k: u64,
    gamma: Option<usize>,
    target: usize,
    y: HittingAnalysis,
    z: HittingAnalysis,
}

#[derive(Serialize)]
struct ChainsReport {
    suite: &'static str,
    passed: bool,
    gambler: Vec<GamblerCheck>,
    cases: Vec<ChainCase>,
    vacuous: Vec<String>,
}

fn chains(a: ChainsArgs) -> Result<(), Failure> {
    let gambler = gambler_checks()?;
    let mut failures: Vec<String> = gambler
        .iter()
        .filter(|c| !c.holds)
        .map(|c| format!("gambler p={} z={} a={}: {} vs {}", c.p, c.z, c.a, c.closed_form, c.solved))
        .collect();
    let mut checked = gambler.len();
    let mut vacuous = Vec::new();
    let mut cases = Vec::new();
    for &r in &a.r {
        for &b in &a.b {
            let k = a.k.unwrap_or(b * b);
            let target = integer_cube_root(b) as usize;
            let ychain = build_chain(ChainKind::Y, r, k, b, None)?;
            let zchain = build_chain(ChainKind::Z, r, k, b, Some(0))?;
            let y = chain_hitting_analysis(&ychain, ChainState::Level(target))?;
            let z = chain_hitting_analysis(&zchain, ChainState::Level(target))?;
            let tag = format!("r={r} b={b} k={k}");
            match &y.y_floor {
                Some(f) if f.hypothesis_met => {
                    checked += 1;
                    if !f.satisfied {
                        failures.push(format!("Y floor {tag}: {} < {}", y.hit_prob, f.floor));
                    }
                }
                _ => vacuous.push(format!("Y floor {tag}")),
            }
            match &z.z_bounds {
                Some(zb) if zb.hypothesis_met => {
                    checked += 2;
                    if !zb.visits_ok {
                        failures.push(format!("Z visits {tag}: {} > {}", z.expected_hits_at_0, zb.visits_bound));
                    }
                    if !zb.time_ok {
                        failures.push(format!("Z time {tag}: {} > {}", z.expected_time, zb.time_bound));
                    }
                }
                _ => vacuous.push(format!("Z bounds {tag}")),
            }
            cases.push(ChainCase { r, b, k, gamma: ychain.params.gamma, target, y, z });
        }
    }
    for v in &vacuous {
        eprintln!("vacuous: {v} (hypothesis not met)");
    }
    let report = ChainsReport { suite: "chains", passed: failures.is_empty(), gambler, cases, vacuous };
    emit(resolve(a.out, "verify_chains.json").as_deref(), &json(&report)?)?;
    verdict("chains", checked, &failures)
}

#[derive(Serialize)]
struct KernelCase {
    graph: String,
    n: usize,
    r: f64,
    exact: f64,
    naive: Interval,
    naive_estimate: f64,
    effective: Interval,
    effective_estimate: f64,
    naive_contains: bool,
    effective_contains: bool,
    overlap: bool,
}

#[derive(Serialize)]
struct KernelsReport {
    suite: &'static str,
    passed: bool,
    replicates: u64,
    confidence: f64,
    seed: u64,
    cases: Vec<KernelCase>,
}

fn kernels(a: KernelsArgs) -> Result<(), Failure> {
    let mut cases = Vec::new();
    let mut failures = Vec::new();
    for (name, g) in calibration_panel().into_iter().filter(|(_, g)| g.n() <= a.max_n) {
        for &r in &a.r {
            let exact = solve_all(&g, r, DEFAULT_STATE_CAP)?.mean_extinction();
            let cfg = EstimateConfig::new(a.reps, a.seed).confidence(a.confidence);
            let naive = estimate_extinction(&g, r, &cfg.clone().kernel(Kernel::Naive))?;
            let eff = estimate_extinction(&g, r, &cfg.kernel(Kernel::Effective))?;
            let case = KernelCase {
                graph: name.clone(),
                n: g.n(),
                r,
                exact,
                naive_contains: naive.ci.contains(exact),
                effective_contains: eff.ci.contains(exact),
                overlap: naive.ci.lo <= eff.ci.hi && eff.ci.lo <= naive.ci.hi,
                naive: naive.ci,
                naive_estimate: naive.estimate,
                effective: eff.ci,
                effective_estimate: eff.estimate,
            };
            if !(case.naive_contains && case.effective_contains && case.overlap) {
                failures.push(format!(
                    "{name} r={r}: exact {exact}, naive {:?}, effective {:?}",
                    case.naive, case.effective
                ));
            }
            cases.push(case);
        }
    }
    let checked = cases.len() * 3;
    let report = KernelsReport {
        suite: "kernels",
        passed: failures.is_empty(),
        replicates: a.reps,
        confidence: a.confidence,
        seed: a.seed,
        cases,
    };
    emit(resolve(a.out, "verify_kernels.json").as_deref(), &json(&report)?)?;
    verdict("kernels", checked, &failures)
}
