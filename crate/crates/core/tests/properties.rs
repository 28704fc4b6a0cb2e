//! Property tests for the structural and numerical invariants of each module.

use moran_core::analytics::{
    bound_reports_for, build_chain, chain_hitting_analysis, danger, gamblers_chain, gamblers_ruin,
    hitting_by_iteration, theorem_bounds, verify_danger_lemmas_with, ChainKind, ChainState, DANGER_BOUND,
    DIGRAPH_LOWER, EDGE_DENSITY_LOWER, PAIR_BOUND, SET_MEAN_BOUND, SET_NEIGHBOURHOOD_BOUND, UNDIRECTED_LOWER,
};
use moran_core::engine::{default_step_cap, step, EffectiveKernel, MutantConfiguration, NaiveKernel, Outcome};
use moran_core::exact::solve_all;
use moran_core::generators::{
    beta_of, build_dense_incubator, build_incubator, incubator_counts, integer_cube_root, random_regular_graph,
    validate_incubator, IncubatorSpec,
};
use moran_core::{Digraph, Part};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A graph on `n` vertices whose arcs are read off `bits`.
fn graph_from_bits(n: usize, directed: bool, bits: &[bool]) -> Digraph {
    let mut arcs = Vec::new();
    let mut k = 0;
    for u in 0..n {
        for v in 0..n {
            if u == v || (!directed && v < u) {
                continue;
            }
            if bits[k % bits.len()] {
                arcs.push((u, v));
            }
            k += 1;
        }
    }
    if directed {
        Digraph::directed(n, &arcs).unwrap()
    } else {
        Digraph::undirected(n, &arcs).unwrap()
    }
}

fn arb_graph(max_n: usize) -> impl Strategy<Value = Digraph> {
    (1..=max_n, any::<bool>(), proptest::collection::vec(any::<bool>(), 64))
        .prop_map(|(n, directed, bits)| graph_from_bits(n, directed, &bits))
}

/// Strongly connected graphs (directed or undirected) with `2 <= n <= max_n`.
fn arb_connected(max_n: usize) -> impl Strategy<Value = Digraph> {
    (2..=max_n, any::<bool>(), proptest::collection::vec(prop::bool::weighted(0.6), 64))
        .prop_map(|(n, directed, bits)| graph_from_bits(n, directed, &bits))
        .prop_filter("strongly connected", |g| g.is_strongly_connected())
}

fn members_of(mask: u64, n: usize) -> Vec<usize> {
    (0..n).filter(|&v| mask >> v & 1 == 1).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn adjacency_is_consistent(g in arb_graph(9)) {
        let n = g.n();
        for v in 0..n {
            prop_assert!(!g.out_neighbors(v).contains(&v));
            prop_assert!(g.out_neighbors(v).windows(2).all(|w| w[0] < w[1]));
            for &w in g.out_neighbors(v) {
                prop_assert!(g.in_neighbors(w).contains(&v));
                if !g.is_directed() {
                    prop_assert!(g.has_arc(w, v));
                }
            }
        }
        let out: usize = (0..n).map(|v| g.out_degree(v)).sum();
        let inn: usize = (0..n).map(|v| g.in_degree(v)).sum();
        prop_assert_eq!(out, inn);
        prop_assert_eq!(out, g.arc_count());
        if !g.is_directed() {
            prop_assert_eq!(g.m() * 2, g.arc_count());
        }
    }

    #[test]
    fn regular_graphs_have_exact_degrees_and_symmetric_cuts(
        n in 2usize..24,
        d in 0usize..23,
        seed in any::<u64>(),
        mask in any::<u64>(),
    ) {
        prop_assume!(d < n && (n * d) % 2 == 0);
        let g = random_regular_graph(n, d, seed).unwrap();
        prop_assert!(!g.is_directed());
        prop_assert_eq!(g.regular_degree(), Some(d));
        for v in 0..n {
            prop_assert!(!g.has_arc(v, v));
            prop_assert!(g.out_neighbors(v).windows(2).all(|w| w[0] < w[1]));
        }
        let s = members_of(mask, n);
        let rest: Vec<usize> = (0..n).filter(|v| !s.contains(v)).collect();
        prop_assert_eq!(g.edge_boundary(&s).unwrap(), g.edge_boundary(&rest).unwrap());
    }

    #[test]
    fn danger_is_at_least_one_over_n_and_sums_to_n(g in arb_connected(8)) {
        let q = danger(&g).unwrap();
        prop_assert!(q.all_at_least_one_over_n());
        let n = g.n() as f64;
        prop_assert!(q.per_vertex.iter().all(|&x| x >= 1.0 / n - 1e-15));
        prop_assert!((q.per_vertex.iter().sum::<f64>() - n).abs() < 1e-12);
    }

    #[test]
    fn configuration_weight_and_single_step(
        g in arb_graph(8),
        r in 0.2f64..6.0,
        mask in any::<u64>(),
        seed in any::<u64>(),
    ) {
        let n = g.n();
        let mut cfg = MutantConfiguration::new(n, r, &members_of(mask, n)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            prop_assert!((cfg.total_weight() - (n as f64 + (r - 1.0) * cfg.size() as f64)).abs() < 1e-9);
            let next = step(&g, r, &cfg, &mut rng).unwrap();
            let changed: Vec<usize> = (0..n).filter(|&v| cfg.contains(v) != next.contains(v)).collect();
            prop_assert!(changed.len() <= 1);
            if let Some(&w) = changed.first() {
                // someone pointing at w had the type w took on
                let t = next.contains(w);
                prop_assert!(g.in_neighbors(w).iter().any(|&u| cfg.contains(u) == t));
            }
            if cfg.is_absorbed() {
                prop_assert_eq!(next.members(), cfg.members());
            }
            cfg = next;
        }
    }

    #[test]
    fn naive_kernel_never_flips_to_the_same_type(
        g in arb_connected(7),
        r in 0.3f64..5.0,
        mask in any::<u64>(),
        seed in any::<u64>(),
    ) {
        let n = g.n();
        let initial = members_of(mask, n);
        let mut kernel = NaiveKernel::new(&g, r).unwrap();
        kernel.reset(&initial).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..200 {
            let before: Vec<bool> = (0..n).map(|v| kernel.is_mutant(v)).collect();
            let flip = kernel.step(&mut rng);
            let after: Vec<bool> = (0..n).map(|v| kernel.is_mutant(v)).collect();
            match flip {
                None => prop_assert_eq!(&before, &after),
                Some((w, spawn)) => {
                    prop_assert_eq!(before[w], !spawn);
                    prop_assert_eq!(after[w], spawn);
                    prop_assert!(g.in_neighbors(w).iter().any(|&u| before[u] == spawn));
                    for v in (0..n).filter(|&v| v != w) {
                        prop_assert_eq!(before[v], after[v]);
                    }
                }
            }
        }
    }

    #[test]
    fn runs_absorb_in_one_of_the_two_states(
        g in arb_connected(7),
        r in 0.5f64..5.0,
        mask in any::<u64>(),
        seed in any::<u64>(),
    ) {
        let n = g.n();
        let initial = members_of(mask, n);
        prop_assume!(!initial.is_empty() && initial.len() < n);
        let cap = default_step_cap(n, r);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let mut naive = NaiveKernel::new(&g, r).unwrap();
        let out = naive.run(&initial, &mut rng, cap).unwrap();
        prop_assert!(out.effective_steps <= out.steps);
        let mutants = (0..n).filter(|&v| naive.is_mutant(v)).count();
        match out.result {
            Outcome::Fixation => prop_assert_eq!(mutants, n),
            Outcome::Extinction => prop_assert_eq!(mutants, 0),
            Outcome::StepCapExceeded => prop_assert!(false, "censored after {} steps", out.steps),
        }

        let mut effective = EffectiveKernel::new(&g, r).unwrap();
        let out = effective.run(&initial, &mut rng, cap).unwrap();
        prop_assert!(out.effective_steps <= out.steps);
        let mutants = effective.mutant_count();
        match out.result {
            Outcome::Fixation => prop_assert_eq!(mutants, n),
            Outcome::Extinction => prop_assert_eq!(mutants, 0),
            Outcome::StepCapExceeded => prop_assert!(false, "censored after {} steps", out.steps),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Swapping the two types and rescaling fitness by `1/r` turns extinction
    /// from `S` into fixation from `V∖S`.
    #[test]
    fn extinction_and_fixation_are_complementary(g in arb_connected(7), r in 1.05f64..6.0) {
        let n = g.n();
        let forward = solve_all(&g, r, 14).unwrap();
        let swapped = solve_all(&g, 1.0 / r, 14).unwrap();
        let full = (1usize << n) - 1;
        for mask in 0..=full {
            let sum = forward.extinction[mask] + swapped.extinction[full ^ mask];
            prop_assert!((sum - 1.0).abs() <= 1e-10, "mask {mask}: {sum}");
        }
    }

    #[test]
    fn exact_values_are_proper_probabilities(g in arb_connected(7), r in 0.2f64..25.0) {
        let sol = solve_all(&g, r, 14).unwrap();
        let n = g.n();
        prop_assert_eq!(sol.extinction[0], 1.0);
        prop_assert_eq!(sol.extinction[(1 << n) - 1], 0.0);
        prop_assert!(sol.extinction.iter().all(|&x| (0.0..=1.0).contains(&x)));
        for v in 0..n {
            let ell = sol.vertex_extinction(v);
            prop_assert!(ell > 0.0 && ell < 1.0, "vertex {v}: {ell}");
        }
        let mean = (0..n).map(|v| sol.vertex_extinction(v)).sum::<f64>() / n as f64;
        prop_assert!((sol.mean_extinction() - mean).abs() < 1e-15);
    }

    #[test]
    fn lower_bounds_hold_strictly(g in arb_connected(7), r in 1.01f64..12.0) {
        let sol = solve_all(&g, r, 14).unwrap();
        let reports = bound_reports_for(&g, &sol).unwrap();
        let bounds = theorem_bounds(g.n(), g.m(), r).unwrap();
        let value = |name: &str| bounds.iter().find(|b| b.name == name).unwrap().value;
        let ell = sol.mean_extinction();
        prop_assert!(ell > value(DIGRAPH_LOWER));
        if !g.is_directed() {
            prop_assert!(ell > value(UNDIRECTED_LOWER));
            prop_assert!(ell > value(EDGE_DENSITY_LOWER));
        }
        for rep in &reports {
            prop_assert!(rep.satisfied, "{rep:?}");
            prop_assert_eq!(rep.satisfied, rep.slack >= 0.0);
        }
    }

    /// Every emitted lemma instance satisfies its hypothesis, including when
    /// the whole vertex set is offered.
    #[test]
    fn lemma_checks_are_hypothesis_gated(g in arb_connected(7), r in 1.0f64..30.0) {
        let sol = solve_all(&g, r, 14).unwrap();
        let n = g.n();
        let all: Vec<usize> = (0..n).collect();
        let report = verify_danger_lemmas_with(&g, &sol, Some(vec![all.clone(), vec![0]])).unwrap();
        let ell = |v: usize| sol.vertex_extinction(v);
        for c in &report.checks {
            prop_assert!(c.holds, "{c:?}");
            match c.lemma.as_str() {
                PAIR_BOUND => prop_assert!(ell(c.subject[0]) <= 0.5),
                DANGER_BOUND => prop_assert!(ell(c.subject[0]) <= 0.25),
                SET_NEIGHBOURHOOD_BOUND | SET_MEAN_BOUND => {
                    prop_assert!(c.subject.iter().all(|&v| ell(v) <= 0.25));
                }
                _ => {}
            }
        }
        let whole_set_checked = report.checks.iter().any(|c| c.subject == all && c.lemma == SET_MEAN_BOUND);
        prop_assert_eq!(whole_set_checked, n > 1 && all.iter().all(|&v| ell(v) <= 0.25));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gamblers_ruin_matches_explicit_chain(
        p in prop_oneof![0.03f64..0.49, 0.51f64..0.97],
        a in 1usize..80,
        z_frac in 0.0f64..=1.0,
    ) {
        let z = ((a as f64) * z_frac).round() as usize;
        let closed = gamblers_ruin(p, z as u64, a as u64).unwrap().hit_prob;
        let chain = gamblers_chain(p, z, a).unwrap();
        let solved = chain_hitting_analysis(&chain, ChainState::Level(a)).unwrap().hit_prob;
        prop_assert!((closed - solved).abs() <= 1e-10, "{closed} vs {solved}");
    }

    #[test]
    fn chain_solve_matches_iteration(
        kind in prop_oneof![Just(ChainKind::Y), Just(ChainKind::Z)],
        r in 1.2f64..5.0,
        b in 1u64..40,
        extra in 0u64..200,
        target in 1usize..10,
    ) {
        let k = b * b + extra;
        let chain = build_chain(kind, r, k, b, None).unwrap();
        prop_assume!(chain.states.len() <= 200);
        let gamma = chain.params.gamma.unwrap();
        let target = target.min(gamma + usize::from(kind == ChainKind::Y));
        let exact = chain_hitting_analysis(&chain, ChainState::Level(target)).unwrap();
        let (hit, visits, time) = hitting_by_iteration(&chain, ChainState::Level(target), 5_000_000).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(1.0);
        prop_assert!(close(exact.hit_prob, hit), "{} vs {hit}", exact.hit_prob);
        prop_assert!(close(exact.expected_hits_at_0, visits), "{} vs {visits}", exact.expected_hits_at_0);
        prop_assert!(close(exact.expected_time, time), "{} vs {time}", exact.expected_time);
    }

    #[test]
    fn y_chain_entries_follow_the_definition(r in 1.1f64..6.0, b in 1u64..200, extra in 0u64..1000) {
        let k = b * b + extra;
        let chain = match build_chain(ChainKind::Y, r, k, b, None) {
            Ok(c) => c,
            Err(_) => return Ok(()), // failure probability above 1 for tiny b
        };
        let beta = beta_of(r).unwrap() as f64;
        let gamma = integer_cube_root(k * beta as u64) as usize;
        prop_assert_eq!(chain.params.gamma, Some(gamma));
        let rp = (1.0 + r) / 2.0;
        let (up, down) = (rp / (1.0 + rp), 1.0 / (1.0 + rp));
        let p0f = 6.0 / (r * beta.sqrt() * b as f64);
        let pif = 10.0 / (r * beta * (b * b) as f64);
        let (f, lv) = (ChainState::Fail, ChainState::Level);
        let eq = |a: f64, b: f64| (a - b).abs() <= 1e-15;
        prop_assert!(eq(chain.probability(lv(0), f), p0f));
        prop_assert!(eq(chain.probability(lv(0), lv(0)), (1.0 - p0f) * down));
        prop_assert!(eq(chain.probability(lv(0), lv(1)), (1.0 - p0f) * up));
        for i in 1..=gamma {
            prop_assert!(eq(chain.probability(lv(i), f), pif));
            prop_assert!(eq(chain.probability(lv(i), lv(i - 1)), (1.0 - pif) * down));
            prop_assert!(eq(chain.probability(lv(i), lv(i + 1)), (1.0 - pif) * up));
        }
        prop_assert_eq!(chain.probability(f, f), 1.0);
        prop_assert_eq!(chain.probability(lv(gamma + 1), lv(gamma + 1)), 1.0);
        prop_assert!(chain.validate().is_ok());
    }

    #[test]
    fn y_floor_holds_under_its_hypothesis(r in 1.2f64..5.0, b in 120u64..400) {
        let rp = (1.0 + r) / 2.0;
        prop_assume!(b as f64 >= (1.0 / rp.log2() + 1.0).powi(3));
        let t = integer_cube_root(b) as usize;
        let chain = build_chain(ChainKind::Y, r, b * b, b, None).unwrap();
        let a = chain_hitting_analysis(&chain, ChainState::Level(t)).unwrap();
        let beta = beta_of(r).unwrap() as f64;
        let floor = 1.0 - 25.0 / (beta.sqrt() * b as f64 * (r - 1.0));
        prop_assert!(a.hit_prob >= floor, "{} < {floor}", a.hit_prob);
        let check = a.y_floor.unwrap();
        prop_assert!(check.hypothesis_met && check.satisfied);
    }

    #[test]
    fn z_bounds_hold_under_their_hypothesis(r in 1.2f64..5.0, b in 2u64..400) {
        let rp = (1.0 + r) / 2.0;
        prop_assume!(b as f64 >= (1.0 / rp.log2() + 1.0).powi(3));
        let t = integer_cube_root(b) as usize;
        let chain = build_chain(ChainKind::Z, r, b * b, b, Some(0)).unwrap();
        prop_assume!(chain.params.gamma.unwrap() > t);
        let a = chain_hitting_analysis(&chain, ChainState::Level(t)).unwrap();
        prop_assert!(a.expected_hits_at_0 <= 2.0 * rp / (rp - 1.0));
        prop_assert!(a.expected_time <= 6.0 * t as f64 * rp / (rp - 1.0));
        let check = a.z_bounds.unwrap();
        prop_assert!(check.hypothesis_met && check.visits_ok && check.time_ok);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn dense_incubators_match_the_square_root_branching(r in 1.2f64..5.0, root in 1u64..=2) {
        let k = root * root;
        let dense = build_dense_incubator(r, k).unwrap();
        let spec = IncubatorSpec::new(r, k, root, 0).unwrap();
        let direct = build_incubator(&spec).unwrap();
        prop_assert_eq!((dense.n(), dense.m()), (direct.n(), direct.m()));
        for part in Part::ALL {
            prop_assert_eq!(dense.vertices_in(part).len(), direct.vertices_in(part).len());
        }
        let counts = incubator_counts(&spec);
        prop_assert_eq!((counts.n, counts.m), (direct.n() as u64, direct.m() as u64));
        prop_assert!(validate_incubator(&direct, &spec).unwrap().all_ok());
    }

    #[test]
    fn sparse_incubators_validate_and_match_counts(k in 2u64..=3, seed in any::<u64>()) {
        let spec = IncubatorSpec::new(2.0, k, 1, seed).unwrap();
        let g = build_incubator(&spec).unwrap();
        let counts = incubator_counts(&spec);
        prop_assert_eq!((counts.n, counts.m), (g.n() as u64, g.m() as u64));
        prop_assert!(validate_incubator(&g, &spec).unwrap().all_ok());
    }
}
