//! Finite birth-death chains: plain gambler's ruin, the `Y` chain (with a
//! failure state) and the reflecting `Z` chain.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::generators::{beta_of, integer_cube_root};

const ROW_TOLERANCE: f64 = 1e-12;
const SOLVE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GamblersRuin {
    pub hit_prob: f64,
    /// `(a/(p − q))·hit_prob`, only defined for `p > 1/2`.
    pub expected_steps_bound: Option<f64>,
}

/// Probability that a ±1 walk with up-probability `p`, absorbed at 0 and
/// `a`, reaches `a` from `z`.
pub fn gamblers_ruin(p: f64, z: u64, a: u64) -> Result<GamblersRuin> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!("up-probability must lie in (0,1), got {p}")));
    }
    if p == 0.5 {
        return Err(invalid("p = 1/2 is excluded"));
    }
    if a == 0 || z > a {
        return Err(invalid(format!("need a >= 1 and 0 <= z <= a, got z={z}, a={a}")));
    }
    let q = 1.0 - p;
    let ratio = q / p;
    let hit_prob = (1.0 - ratio.powf(z as f64)) / (1.0 - ratio.powf(a as f64));
    let expected_steps_bound = (p > 0.5).then(|| a as f64 / (p - q) * hit_prob);
    Ok(GamblersRuin { hit_prob, expected_steps_bound })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainKind {
    Gambler,
    Y,
    Z,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainState {
    Fail,
    Level(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub r: Option<f64>,
    /// `(1 + r)/2`.
    pub r_prime: Option<f64>,
    /// `⌊(kβ)^{1/3}⌋`.
    pub gamma: Option<usize>,
    pub beta: Option<u64>,
    pub b: Option<u64>,
    pub k: Option<u64>,
    /// Up-probability of a gambler's ruin chain.
    pub p: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BirthDeathChain {
    pub kind: ChainKind,
    pub states: Vec<ChainState>,
    /// `transitions[i][j]` is the probability of moving from `states[i]` to
    /// `states[j]`.
    pub transitions: Vec<Vec<f64>>,
    pub start: ChainState,
    pub params: ChainParams,
}

impl BirthDeathChain {
    pub fn index_of(&self, s: ChainState) -> Option<usize> {
        self.states.iter().position(|&x| x == s)
    }

    pub fn probability(&self, from: ChainState, to: ChainState) -> f64 {
        match (self.index_of(from), self.index_of(to)) {
            (Some(i), Some(j)) => self.transitions[i][j],
            _ => 0.0,
        }
    }

    pub fn is_absorbing(&self, i: usize) -> bool {
        self.transitions[i][i] == 1.0
    }

    /// Rows are non-negative and sum to one.
    pub fn validate(&self) -> Result<()> {
        let s = self.states.len();
        if self.transitions.len() != s || self.index_of(self.start).is_none() {
            return Err(invalid("chain has inconsistent states"));
        }
        for (i, row) in self.transitions.iter().enumerate() {
            if row.len() != s {
                return Err(invalid(format!("row {i} has length {}, expected {s}", row.len())));
            }
            if let Some(j) = row.iter().position(|&x| !(x >= 0.0)) {
                return Err(invalid(format!("entry ({i},{j}) = {} is negative", row[j])));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(invalid(format!("row {i} sums to {sum}")));
            }
        }
        Ok(())
    }
}

/// Explicit absorbing chain on `0..=a` for [`gamblers_ruin`].
pub fn gamblers_chain(p: f64, z: usize, a: usize) -> Result<BirthDeathChain> {
    if !(p > 0.0 && p < 1.0) || a == 0 || z > a {
        return Err(invalid(format!("bad gambler's ruin parameters p={p}, z={z}, a={a}")));
    }
    let s = a + 1;
    let mut t = vec![vec![0.0; s]; s];
    t[0][0] = 1.0;
    t[a][a] = 1.0;
    for (i, row) in t.iter_mut().enumerate().take(a).skip(1) {
        row[i + 1] = p;
        row[i - 1] = 1.0 - p;
    }
    let chain = BirthDeathChain {
        kind: ChainKind::Gambler,
        states: (0..s).map(ChainState::Level).collect(),
        transitions: t,
        start: ChainState::Level(z),
        params: ChainParams { r: None, r_prime: None, gamma: None, beta: None, b: None, k: None, p: Some(p) },
    };
    chain.validate()?;
    Ok(chain)
}

/// The `Y` chain (start 0, states `F, 0..=γ+1`) or the `Z` chain (start `z`,
/// states `0..=γ`) for an incubator with parameters `(r, k, b)`.
pub fn build_chain(kind: ChainKind, r: f64, k: u64, b: u64, z: Option<usize>) -> Result<BirthDeathChain> {
    if !(r.is_finite() && r > 1.0) {
        return Err(invalid(format!("chains need r > 1, got {r}")));
    }
    if k == 0 || b == 0 {
        return Err(invalid("chains need k, b >= 1"));
    }
    let beta = beta_of(r)?;
    let gamma = integer_cube_root(k * beta) as usize;
    let rp = (1.0 + r) / 2.0;
    let up = rp / (1.0 + rp);
    let down = 1.0 / (1.0 + rp);
    let params = ChainParams {
        r: Some(r),
        r_prime: Some(rp),
        gamma: Some(gamma),
        beta: Some(beta),
        b: Some(b),
        k: Some(k),
        p: None,
    };
    let chain = match kind {
        ChainKind::Gambler => return Err(invalid("use gamblers_chain for plain gambler's ruin")),
        ChainKind::Y => {
            let bf = b as f64;
            let betaf = beta as f64;
            let p0f = 6.0 / (r * betaf.sqrt() * bf);
            let pif = 10.0 / (r * betaf * bf * bf);
            if p0f > 1.0 {
                return Err(invalid(format!("p_(0,F) = {p0f} exceeds 1")));
            }
            if pif > 1.0 {
                return Err(invalid(format!("p_(i,F) = {pif} exceeds 1")));
            }
            // index 0 is F, index i + 1 is level i
            let s = gamma + 3;
            let mut t = vec![vec![0.0; s]; s];
            t[0][0] = 1.0;
            t[1][0] = p0f;
            t[1][1] = (1.0 - p0f) * down;
            t[1][2] = (1.0 - p0f) * up;
            for i in 1..=gamma {
                t[i + 1][0] = pif;
                t[i + 1][i] = (1.0 - pif) * down;
                t[i + 1][i + 2] = (1.0 - pif) * up;
            }
            t[gamma + 2][gamma + 2] = 1.0;
            let mut states = vec![ChainState::Fail];
            states.extend((0..=gamma + 1).map(ChainState::Level));
            BirthDeathChain { kind, states, transitions: t, start: ChainState::Level(0), params }
        }
        ChainKind::Z => {
            let z = z.unwrap_or(0);
            if z > gamma {
                return Err(invalid(format!("Z start {z} exceeds γ = {gamma}")));
            }
            let s = gamma + 1;
            let mut t = vec![vec![0.0; s]; s];
            t[0][0] = down;
            t[0][1] = up;
            for i in 1..gamma {
                t[i][i - 1] = down;
                t[i][i + 1] = up;
            }
            t[gamma][gamma - 1] = 1.0;
            BirthDeathChain {
                kind,
                states: (0..=gamma).map(ChainState::Level).collect(),
                transitions: t,
                start: ChainState::Level(z),
                params,
            }
        }
    };
    chain.validate()?;
    Ok(chain)
}

/// `b >= (1/lg r' + 1)³`.
fn z_hypothesis(r_prime: f64, b: u64) -> bool {
    b as f64 >= (1.0 / r_prime.log2() + 1.0).powi(3)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct YFloorCheck {
    /// `1 − 25/(√β b (r − 1))`.
    pub floor: f64,
    /// `b >= max((1/lg r' + 1)³, 120)`.
    pub hypothesis_met: bool,
    pub satisfied: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZBoundsCheck {
    /// `2r'/(r' − 1)`.
    pub visits_bound: f64,
    /// `6⌊b^{1/3}⌋ r'/(r' − 1)`.
    pub time_bound: f64,
    /// `b >= (1/lg r' + 1)³`.
    pub hypothesis_met: bool,
    pub visits_ok: bool,
    pub time_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HittingAnalysis {
    pub start: ChainState,
    pub target: ChainState,
    /// Probability of ever reaching `target`.
    pub hit_prob: f64,
    /// Expected visits to level 0 before the target or an absorbing state
    /// is reached.
    pub expected_hits_at_0: f64,
    /// Expected steps until the target or an absorbing state is reached.
    pub expected_time: f64,
    pub residual: f64,
    /// For `Y` with target `⌊b^{1/3}⌋`.
    pub y_floor: Option<YFloorCheck>,
    /// For `Z` started at 0 with target `⌊b^{1/3}⌋`.
    pub z_bounds: Option<ZBoundsCheck>,
}

/// Exact first-passage quantities by a linear solve over the transient
/// states (everything except `target` and absorbing states).
pub fn chain_hitting_analysis(chain: &BirthDeathChain, target: ChainState) -> Result<HittingAnalysis> {
    chain.validate()?;
    let t_idx =
        chain.index_of(target).ok_or_else(|| invalid(format!("target {target:?} is not a state of the chain")))?;
    let start = chain.index_of(chain.start).expect("validated");
    let s = chain.states.len();
    // Only states the walk can visit before stopping enter the system; the
    // rest (e.g. levels beyond the target) can make it badly conditioned.
    let stops = |i: usize| i == t_idx || chain.is_absorbing(i);
    let mut reachable = vec![false; s];
    let mut stack = vec![start];
    reachable[start] = true;
    while let Some(i) = stack.pop() {
        if stops(i) {
            continue;
        }
        for (j, &p) in chain.transitions[i].iter().enumerate() {
            if p > 0.0 && !reachable[j] {
                reachable[j] = true;
                stack.push(j);
            }
        }
    }
    let transient: Vec<usize> = (0..s).filter(|&i| reachable[i] && !stops(i)).collect();
    let mut local = vec![usize::MAX; s];
    for (li, &i) in transient.iter().enumerate() {
        local[i] = li;
    }
    let tn = transient.len();
    let zero_idx = chain.index_of(ChainState::Level(0));

    let (hit_prob, hits0, time, residual) = if start == t_idx {
        (1.0, 0.0, 0.0, 0.0)
    } else if local[start] == usize::MAX {
        (0.0, 0.0, 0.0, 0.0)
    } else {
        // (I − Q) on the transient block
        let mut a = DMatrix::<f64>::identity(tn, tn);
        let mut to_target = DVector::<f64>::zeros(tn);
        for (li, &i) in transient.iter().enumerate() {
            for (j, &p) in chain.transitions[i].iter().enumerate() {
                if local[j] != usize::MAX {
                    a[(li, local[j])] -= p;
                } else if j == t_idx {
                    to_target[li] += p;
                }
            }
        }
        let lu = a.clone().lu();
        let h = lu.solve(&to_target).ok_or_else(|| Error::Capacity("singular chain system".into()))?;
        // row `start` of the fundamental matrix: solve (I − Q)ᵀ y = e_start
        let mut e = DVector::<f64>::zeros(tn);
        e[local[start]] = 1.0;
        let y = a.transpose().lu().solve(&e).ok_or_else(|| Error::Capacity("singular chain system".into()))?;
        let res_h = (&a * &h - &to_target).amax();
        let res_y = (a.transpose() * &y - &e).amax() / y.amax().max(1.0);
        let hits0 = zero_idx.filter(|&z| local[z] != usize::MAX).map_or(0.0, |z| y[local[z]]);
        (h[local[start]], hits0, y.sum(), res_h.max(res_y))
    };
    if !(residual <= SOLVE_TOLERANCE) {
        return Err(Error::Capacity(format!("chain solve residual {residual:e} above tolerance")));
    }

    let mut out = HittingAnalysis {
        start: chain.start,
        target,
        hit_prob,
        expected_hits_at_0: hits0,
        expected_time: time,
        residual,
        y_floor: None,
        z_bounds: None,
    };
    if let (Some(r), Some(rp), Some(beta), Some(b)) =
        (chain.params.r, chain.params.r_prime, chain.params.beta, chain.params.b)
    {
        let level = integer_cube_root(b) as usize;
        if target == ChainState::Level(level) {
            match chain.kind {
                ChainKind::Y => {
                    let floor = 1.0 - 25.0 / ((beta as f64).sqrt() * b as f64 * (r - 1.0));
                    out.y_floor = Some(YFloorCheck {
                        floor,
                        hypothesis_met: z_hypothesis(rp, b) && b >= 120,
                        satisfied: hit_prob >= floor,
                    });
                }
                ChainKind::Z if chain.start == ChainState::Level(0) => {
                    let visits_bound = 2.0 * rp / (rp - 1.0);
                    let time_bound = 6.0 * level as f64 * rp / (rp - 1.0);
                    out.z_bounds = Some(ZBoundsCheck {
                        visits_bound,
                        time_bound,
                        hypothesis_met: z_hypothesis(rp, b),
                        visits_ok: hits0 <= visits_bound,
                        time_ok: time <= time_bound,
                    });
                }
                _ => {}
            }
        }
    }
    Ok(out)
}

/// The same quantities as [`chain_hitting_analysis`] by pushing the start
/// distribution forward until the transient mass drops below `1e−15` (or
/// `max_steps` is reached). Returns `(hit_prob, expected_hits_at_0, expected_time)`.
pub fn hitting_by_iteration(chain: &BirthDeathChain, target: ChainState, max_steps: usize) -> Result<(f64, f64, f64)> {
    chain.validate()?;
    let t_idx = chain.index_of(target).ok_or_else(|| invalid("target is not a state of the chain"))?;
    let s = chain.states.len();
    let zero = chain.index_of(ChainState::Level(0));
    let stops = |i: usize| i == t_idx || chain.is_absorbing(i);
    let mut dist = vec![0.0; s];
    dist[chain.index_of(chain.start).expect("validated")] = 1.0;
    let (mut hit, mut hits0, mut time) = (0.0, 0.0, 0.0);
    for _ in 0..max_steps {
        let live: f64 = (0..s).filter(|&i| !stops(i)).map(|i| dist[i]).sum();
        hit += dist[t_idx];
        dist[t_idx] = 0.0;
        if live < 1e-15 {
            return Ok((hit, hits0, time));
        }
        time += live;
        if let Some(z) = zero.filter(|&z| !stops(z)) {
            hits0 += dist[z];
        }
        let mut next = vec![0.0; s];
        for i in 0..s {
            if dist[i] == 0.0 {
                continue;
            }
            if stops(i) {
                next[i] += dist[i];
                continue;
            }
            for (j, &p) in chain.transitions[i].iter().enumerate() {
                next[j] += dist[i] * p;
            }
        }
        dist = next;
    }
    Err(Error::Capacity(format!("transient mass still present after {max_steps} steps")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamblers_closed_form_examples() {
        let g = gamblers_ruin(2.0 / 3.0, 1, 3).unwrap();
        assert!((g.hit_prob - 4.0 / 7.0).abs() < 1e-15);
        assert!(g.expected_steps_bound.is_some());
        assert_eq!(gamblers_ruin(0.7, 5, 5).unwrap().hit_prob, 1.0);
        assert_eq!(gamblers_ruin(0.7, 0, 5).unwrap().hit_prob, 0.0);
        assert!(gamblers_ruin(0.3, 1, 5).unwrap().expected_steps_bound.is_none());
        assert!(gamblers_ruin(0.5, 1, 3).is_err());
        assert!(gamblers_ruin(0.6, 4, 3).is_err());
        assert!(gamblers_ruin(1.0, 1, 3).is_err());
    }

    #[test]
    fn gamblers_chain_solve_agrees() {
        let chain = gamblers_chain(2.0 / 3.0, 1, 3).unwrap();
        let h = chain_hitting_analysis(&chain, ChainState::Level(3)).unwrap();
        assert!((h.hit_prob - 4.0 / 7.0).abs() < 1e-14);
    }

    #[test]
    fn y_chain_entries() {
        let y = build_chain(ChainKind::Y, 2.0, 14_400, 120, None).unwrap();
        assert_eq!(y.params.gamma, Some(114));
        let p0f = y.probability(ChainState::Level(0), ChainState::Fail);
        assert!((p0f - 6.0 / (2.0 * 104f64.sqrt() * 120.0)).abs() < 1e-16);
        assert!((p0f - 2.45145e-3).abs() < 1e-7);
        assert_eq!(y.probability(ChainState::Fail, ChainState::Fail), 1.0);
        assert_eq!(y.probability(ChainState::Level(115), ChainState::Level(115)), 1.0);
        let rp = 1.5;
        let pif = 10.0 / (2.0 * 104.0 * 14_400.0);
        let up = y.probability(ChainState::Level(7), ChainState::Level(8));
        assert!((up - (1.0 - pif) * rp / (1.0 + rp)).abs() < 1e-15);
    }

    #[test]
    fn z_chain_rows() {
        let z = build_chain(ChainKind::Z, 2.0, 14_400, 120, Some(3)).unwrap();
        z.validate().unwrap();
        assert_eq!(z.start, ChainState::Level(3));
        assert!((z.probability(ChainState::Level(0), ChainState::Level(0)) - 0.4).abs() < 1e-16);
        assert_eq!(z.probability(ChainState::Level(114), ChainState::Level(113)), 1.0);
        assert!(build_chain(ChainKind::Z, 2.0, 14_400, 120, Some(115)).is_err());
    }

    #[test]
    fn chain_argument_errors() {
        assert!(build_chain(ChainKind::Y, 1.0, 4, 2, None).is_err());
        assert!(build_chain(ChainKind::Y, 2.0, 0, 2, None).is_err());
        assert!(build_chain(ChainKind::Gambler, 2.0, 4, 2, None).is_err());
    }

    #[test]
    fn y_first_level_hit_is_two_way_race() {
        let y = build_chain(ChainKind::Y, 2.0, 4, 1, None).unwrap();
        let h = chain_hitting_analysis(&y, ChainState::Level(1)).unwrap();
        let p01 = y.probability(ChainState::Level(0), ChainState::Level(1));
        let p0f = y.probability(ChainState::Level(0), ChainState::Fail);
        assert!((h.hit_prob - p01 / (p01 + p0f)).abs() < 1e-14);
    }

    #[test]
    fn linear_solve_matches_iteration() {
        let y = build_chain(ChainKind::Y, 2.0, 14_400, 120, None).unwrap();
        let z = build_chain(ChainKind::Z, 1.5, 14_400, 120, None).unwrap();
        for (chain, target) in [(&y, ChainState::Level(4)), (&z, ChainState::Level(4)), (&z, ChainState::Level(20))] {
            let a = chain_hitting_analysis(chain, target).unwrap();
            let (h, v, t) = hitting_by_iteration(chain, target, 10_000_000).unwrap();
            assert!((a.hit_prob - h).abs() < 1e-9);
            assert!((a.expected_hits_at_0 - v).abs() < 1e-9 * v.max(1.0));
            assert!((a.expected_time - t).abs() < 1e-9 * t.max(1.0));
        }
    }

    #[test]
    fn z_from_below_target_hits_surely() {
        let z = build_chain(ChainKind::Z, 2.0, 14_400, 120, Some(113)).unwrap();
        let h = chain_hitting_analysis(&z, ChainState::Level(114)).unwrap();
        assert!((h.hit_prob - 1.0).abs() < 1e-12);
        let gr = gamblers_ruin(1.5 / 2.5, 113, 114).unwrap().hit_prob;
        assert!(h.hit_prob >= gr);
    }

    #[test]
    fn strong_drift_above_a_low_target_is_ignored() {
        // levels 2..=γ are unreachable from 0 before level 1 and would make the system near-singular
        let z = build_chain(ChainKind::Z, 4.8, 469, 19, Some(0)).unwrap();
        let a = chain_hitting_analysis(&z, ChainState::Level(1)).unwrap();
        let up = 2.9 / 3.9;
        assert!((a.hit_prob - 1.0).abs() < 1e-12);
        assert!((a.expected_time - 1.0 / up).abs() < 1e-12);
        assert!((a.expected_hits_at_0 - 1.0 / up).abs() < 1e-12);
    }
}
