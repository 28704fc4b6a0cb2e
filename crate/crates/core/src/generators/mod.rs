//! Graph families: incubators (sparse and dense), random regular graphs with
//! small-set-expansion certificates, and the baseline families used for
//! comparison (stars, cliques, cycles, paths).

mod expander;
mod incubator;
mod regular;

pub use expander::{
    certify_small_set_expander, CertificationMode, ExpanderCertificate, ExpanderWitness, DEFAULT_ENUMERATION_BUDGET,
    SPECTRAL_SLACK,
};
pub use incubator::{
    beta_of, build_dense_incubator, build_incubator, build_incubator_certified, incubator_counts, validate_incubator,
    IncubatorCounts, IncubatorSpec, IncubatorValidation, SizeBounds, EXPANDER_RETRY_BUDGET,
};
pub use regular::{random_regular_graph, random_regular_graph_with, RegularSampler};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::Digraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Star,
    Complete,
    Cycle,
    Path,
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineKind::Star => "star",
            BaselineKind::Complete => "complete",
            BaselineKind::Cycle => "cycle",
            BaselineKind::Path => "path",
        })
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "star" => Ok(BaselineKind::Star),
            "complete" | "clique" => Ok(BaselineKind::Complete),
            "cycle" => Ok(BaselineKind::Cycle),
            "path" => Ok(BaselineKind::Path),
            _ => Err(invalid(format!("unknown baseline family {s:?}"))),
        }
    }
}

/// Undirected baseline graph on `n` vertices. The star's centre is vertex 0.
pub fn baseline_graph(kind: BaselineKind, n: usize) -> Result<Digraph> {
    let min = if kind == BaselineKind::Cycle { 3 } else { 2 };
    if n < min {
        return Err(invalid(format!("{kind} needs at least {min} vertices, got {n}")));
    }
    let edges: Vec<(usize, usize)> = match kind {
        BaselineKind::Star => (1..n).map(|v| (0, v)).collect(),
        BaselineKind::Complete => (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect(),
        BaselineKind::Cycle => (0..n).map(|i| (i, (i + 1) % n)).map(|(u, v)| (u.min(v), u.max(v))).collect(),
        BaselineKind::Path => (1..n).map(|v| (v - 1, v)).collect(),
    };
    Digraph::undirected(n, &edges)
}

/// `⌈x⌉`, treating values within `1e-9` above an integer as that integer so
/// that exact products are not bumped up by rounding noise.
pub(crate) fn robust_ceil(x: f64) -> u64 {
    let c = x.ceil();
    if c - x > 1.0 - 1e-9 {
        (c - 1.0) as u64
    } else {
        c as u64
    }
}

/// Largest `s` with `s^3 <= n`.
pub fn integer_cube_root(n: u64) -> u64 {
    let mut s = (n as f64).cbrt().round() as u64;
    while s > 0 && s.checked_pow(3).is_none_or(|c| c > n) {
        s -= 1;
    }
    while (s + 1).checked_pow(3).is_some_and(|c| c <= n) {
        s += 1;
    }
    s
}

/// Largest `s` with `s^2 <= n`.
pub fn integer_sqrt(n: u64) -> u64 {
    let mut s = (n as f64).sqrt().round() as u64;
    while s > 0 && s.checked_mul(s).is_none_or(|c| c > n) {
        s -= 1;
    }
    while (s + 1).checked_mul(s + 1).is_some_and(|c| c <= n) {
        s += 1;
    }
    s
}
