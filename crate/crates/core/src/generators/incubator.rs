//! Incubator graphs.
//!
//! An incubator with parameters `(r, k, b)` has three parts: `V1`, the leaves
//! of `k` stars with `⌈r√β b⌉` leaves each; `V2`, the `k` star centres; and
//! `V3`, a `(βb² − 1)`-regular small-set expander on `βk` vertices. Every
//! centre sends `βb²` edges into `V3` and every `V3` vertex receives `b²`.
//! With `b = √k` the core is a clique and `V2–V3` is complete bipartite (the
//! dense incubator).
//!
//! Vertex ids are laid out as `V1`, then `V2`, then `V3`; the star of centre
//! `i` owns the leaves `i·L .. (i+1)·L`.

use serde::{Deserialize, Serialize};

use super::expander::{certify_small_set_expander, CertificationMode, ExpanderCertificate};
use super::regular::random_regular_graph;
use super::{integer_sqrt, robust_ceil, DEFAULT_ENUMERATION_BUDGET};
use crate::error::{invalid, Error, Result};
use crate::graph::{Digraph, Part};

/// Resamples of the expander core before construction gives up.
pub const EXPANDER_RETRY_BUDGET: usize = 100;

/// `β = 26·⌈r²/(r−1)⌉`.
pub fn beta_of(r: f64) -> Result<u64> {
    if !(r.is_finite() && r > 1.0) {
        return Err(invalid(format!("beta needs r > 1, got {r}")));
    }
    Ok(26 * robust_ceil(r * r / (r - 1.0)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncubatorSpec {
    pub r: f64,
    pub k: u64,
    /// Branching value `b(k)`.
    pub b: u64,
    pub beta: u64,
    /// Seed for the random expander core.
    pub seed: u64,
}

impl IncubatorSpec {
    pub fn new(r: f64, k: u64, b: u64, seed: u64) -> Result<Self> {
        let beta = beta_of(r)?;
        if k == 0 {
            return Err(invalid("incubator parameter k must be positive"));
        }
        let root = integer_sqrt(k);
        if b == 0 || b > root {
            return Err(invalid(format!("branching value b={b} must lie in [1, ⌊√k⌋ = {root}]")));
        }
        Ok(IncubatorSpec { r, k, b, beta, seed })
    }

    /// Dense incubator parameters: `k` a perfect square and `b = √k`.
    pub fn dense(r: f64, k: u64, seed: u64) -> Result<Self> {
        let root = integer_sqrt(k);
        if root * root != k {
            return Err(invalid(format!("dense incubators need a perfect-square k, got {k}")));
        }
        Self::new(r, k, root, seed)
    }

    /// Leaves per star, `⌈r·√β·b⌉`.
    pub fn leaves_per_star(&self) -> u64 {
        robust_ceil(self.r * (self.beta as f64).sqrt() * self.b as f64)
    }

    /// Degree of the expander core, `βb² − 1`.
    pub fn core_degree(&self) -> u64 {
        self.beta * self.b * self.b - 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncubatorCounts {
    pub n: u64,
    pub m: u64,
    pub v1: u64,
    pub v2: u64,
    pub v3: u64,
    pub leaves_per_star: u64,
    pub core_degree: u64,
}

/// Upper and lower vertex and edge counts, meaningful once `b >= β/r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeBounds {
    pub applicable: bool,
    pub n_range: (f64, f64),
    pub m_range: (f64, f64),
    pub density_range: (f64, f64),
    pub n_ok: bool,
    pub m_ok: bool,
    pub density_ok: bool,
}

impl SizeBounds {
    pub fn all_ok(&self) -> bool {
        self.n_ok && self.m_ok && self.density_ok
    }
}

impl IncubatorCounts {
    pub fn size_bounds(&self, spec: &IncubatorSpec) -> SizeBounds {
        let (r, k, b, beta) = (spec.r, spec.k as f64, spec.b as f64, spec.beta as f64);
        let base = k * r * beta.sqrt() * b;
        let n_range = (base, 2.0 * base);
        let m_range = (beta * beta * k * b * b / 2.0, beta * beta * k * b * b);
        let density_range = (beta.powf(1.5) * b / (4.0 * r), beta.powf(1.5) * b / r);
        let (n, m) = (self.n as f64, self.m as f64);
        let within = |x: f64, (lo, hi): (f64, f64)| x >= lo && x <= hi;
        SizeBounds {
            applicable: b >= beta / r,
            n_ok: within(n, n_range),
            m_ok: within(m, m_range),
            density_ok: within(m / n, density_range),
            n_range,
            m_range,
            density_range,
        }
    }
}

/// Exact vertex and edge counts of an incubator.
pub fn incubator_counts(spec: &IncubatorSpec) -> IncubatorCounts {
    let leaves = spec.leaves_per_star();
    let (k, beta, b) = (spec.k, spec.beta, spec.b);
    let v1 = k * leaves;
    let v3 = beta * k;
    let core_degree = spec.core_degree();
    IncubatorCounts {
        n: v1 + k + v3,
        m: v1 + beta * k * b * b + v3 * core_degree / 2,
        v1,
        v2: k,
        v3,
        leaves_per_star: leaves,
        core_degree,
    }
}

/// Builds an incubator and discards the core certificate.
pub fn build_incubator(spec: &IncubatorSpec) -> Result<Digraph> {
    build_incubator_certified(spec, CertificationMode::Auto).map(|(g, _)| g)
}

/// Dense incubator: `b = √k`, clique core, complete `V2–V3`.
pub fn build_dense_incubator(r: f64, k: u64) -> Result<Digraph> {
    build_incubator(&IncubatorSpec::dense(r, k, 0)?)
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Builds an incubator, returning the accepted certificate of its core.
pub fn build_incubator_certified(
    spec: &IncubatorSpec,
    mode: CertificationMode,
) -> Result<(Digraph, ExpanderCertificate)> {
    let counts = incubator_counts(spec);
    let core_n = usize::try_from(counts.v3).map_err(|_| invalid("core too large"))?;
    let core_d = counts.core_degree as usize;
    if core_d >= core_n {
        return Err(Error::Construction(format!(
            "core degree βb²−1 = {core_d} needs at least {} vertices, core has {core_n}",
            core_d + 1
        )));
    }
    if (core_n * core_d) % 2 == 1 {
        return Err(Error::Construction(format!("βk·(βb²−1) = {core_n}·{core_d} is odd, so no regular core exists")));
    }
    let per_centre = (spec.beta * spec.b * spec.b) as usize;
    if !(spec.k as usize * per_centre).is_multiple_of(core_n) {
        return Err(Error::Construction(format!(
            "k·βb² = {} is not divisible by |V3| = {core_n}",
            spec.k as usize * per_centre
        )));
    }

    let mut accepted = None;
    for attempt in 0..EXPANDER_RETRY_BUDGET {
        let seed = splitmix(spec.seed ^ splitmix(attempt as u64));
        let core = random_regular_graph(core_n, core_d, seed)?;
        let cert = certify_small_set_expander(&core, mode, DEFAULT_ENUMERATION_BUDGET)?;
        if cert.passed {
            accepted = Some((core, cert));
            break;
        }
    }
    let (core, cert) = accepted.ok_or_else(|| {
        Error::Generation(format!("no certified small-set expander core after {EXPANDER_RETRY_BUDGET} samples"))
    })?;

    let leaves = counts.leaves_per_star as usize;
    let k = spec.k as usize;
    let v1 = k * leaves;
    let v2_start = v1;
    let v3_start = v1 + k;
    let n = counts.n as usize;

    let mut edges = Vec::with_capacity(counts.m as usize);
    for centre in 0..k {
        for leaf in centre * leaves..(centre + 1) * leaves {
            edges.push((leaf, v2_start + centre));
        }
    }
    for centre in 0..k {
        for j in 0..per_centre {
            let target = (centre * per_centre + j) % core_n;
            edges.push((v2_start + centre, v3_start + target));
        }
    }
    edges.extend(core.edges().into_iter().map(|(u, v)| (v3_start + u, v3_start + v)));

    let mut labels = vec![Some(Part::V1); n];
    labels[v2_start..v3_start].fill(Some(Part::V2));
    labels[v3_start..].fill(Some(Part::V3));
    let g = Digraph::undirected(n, &edges)?.with_labels(labels)?;
    Ok((g, cert))
}

/// Outcome of re-checking every defining condition on a labelled graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncubatorValidation {
    pub part_sizes: bool,
    pub v1_v2_biregular: bool,
    pub v2_v3_biregular: bool,
    pub empty_parts: bool,
    pub core_regular: bool,
    pub core_certificate: Option<ExpanderCertificate>,
    pub counts_match: bool,
}

impl IncubatorValidation {
    pub fn all_ok(&self) -> bool {
        self.part_sizes
            && self.v1_v2_biregular
            && self.v2_v3_biregular
            && self.empty_parts
            && self.core_regular
            && self.core_certificate.as_ref().is_some_and(|c| c.passed)
            && self.counts_match
    }
}

/// Re-validates an incubator from its labels using only generic graph queries.
pub fn validate_incubator(g: &Digraph, spec: &IncubatorSpec) -> Result<IncubatorValidation> {
    if g.labels().is_none() {
        return Err(invalid("incubator validation needs V1/V2/V3 labels"));
    }
    let counts = incubator_counts(spec);
    let v1 = g.vertices_in(Part::V1);
    let v2 = g.vertices_in(Part::V2);
    let v3 = g.vertices_in(Part::V3);
    let part_sizes = v1.len() as u64 == counts.v1
        && v2.len() as u64 == counts.v2
        && v3.len() as u64 == counts.v3
        && (v1.len() + v2.len() + v3.len()) == g.n();
    if !part_sizes {
        return Ok(IncubatorValidation {
            part_sizes,
            v1_v2_biregular: false,
            v2_v3_biregular: false,
            empty_parts: false,
            core_regular: false,
            core_certificate: None,
            counts_match: false,
        });
    }
    let v1_v2_biregular = g.is_biregular(&v1, &v2)?.is_some() && g.edges_between(&v1, &v2)? as u64 == counts.v1;
    let v2_v3_biregular = g.is_biregular(&v2, &v3)?.is_some()
        && g.edges_between(&v2, &v3)? as u64 == spec.beta * spec.k * spec.b * spec.b;
    let empty_parts = g.edges_within(&v1)? == 0 && g.edges_within(&v2)? == 0 && g.edges_between(&v1, &v3)? == 0;
    let core = g.induced(&v3)?;
    let core_regular = core.regular_degree() == Some(counts.core_degree as usize);
    let core_certificate = if core_regular {
        Some(certify_small_set_expander(&core, CertificationMode::Auto, DEFAULT_ENUMERATION_BUDGET)?)
    } else {
        None
    };
    Ok(IncubatorValidation {
        part_sizes,
        v1_v2_biregular,
        v2_v3_biregular,
        empty_parts,
        core_regular,
        core_certificate,
        counts_match: g.n() as u64 == counts.n && g.m() as u64 == counts.m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_values() {
        assert_eq!(beta_of(2.0).unwrap(), 104);
        assert_eq!(beta_of(1.5).unwrap(), 130);
        assert_eq!(beta_of(3.0).unwrap(), 130);
        assert!(beta_of(1.0).is_err());
        assert!(beta_of(0.5).is_err());
    }

    #[test]
    fn counts_for_small_specs() {
        let c = incubator_counts(&IncubatorSpec::new(2.0, 4, 2, 0).unwrap());
        assert_eq!(c.leaves_per_star, 41);
        assert_eq!((c.n, c.m), (584, 88_148));
        let c1 = incubator_counts(&IncubatorSpec::new(2.0, 1, 1, 0).unwrap());
        assert_eq!(c1.leaves_per_star, 21);
        assert_eq!(c1.n, 126);
    }

    #[test]
    fn spec_rejects_bad_branching() {
        assert!(IncubatorSpec::new(2.0, 4, 3, 0).is_err());
        assert!(IncubatorSpec::new(2.0, 4, 0, 0).is_err());
        assert!(IncubatorSpec::new(2.0, 0, 1, 0).is_err());
        assert!(IncubatorSpec::dense(2.0, 3, 0).is_err());
    }

    #[test]
    fn size_bounds_hold_when_applicable() {
        // b >= β/r = 52 requires k >= 52²
        for &(k, b) in &[(2704, 52), (3000, 54), (10_000, 100)] {
            let spec = IncubatorSpec::new(2.0, k, b, 0).unwrap();
            let bounds = incubator_counts(&spec).size_bounds(&spec);
            assert!(bounds.applicable);
            assert!(bounds.all_ok(), "{bounds:?}");
        }
        let small = IncubatorSpec::new(2.0, 4, 2, 0).unwrap();
        assert!(!incubator_counts(&small).size_bounds(&small).applicable);
    }

    #[test]
    fn smallest_incubator_has_clique_core() {
        let spec = IncubatorSpec::new(2.0, 1, 1, 0).unwrap();
        let (g, cert) = build_incubator_certified(&spec, CertificationMode::Auto).unwrap();
        assert!(cert.passed);
        assert_eq!(cert.degree, 103);
        let core = g.induced(&g.vertices_in(Part::V3)).unwrap();
        assert_eq!(core.n(), 104);
        assert_eq!(core.m(), 104 * 103 / 2);
        let v = validate_incubator(&g, &spec).unwrap();
        assert!(v.all_ok(), "{v:?}");
    }

    #[test]
    fn sparse_incubator_with_random_core() {
        // k = 2, b = 1: core is a 103-regular graph on 208 vertices.
        let spec = IncubatorSpec::new(2.0, 2, 1, 11).unwrap();
        let g = build_incubator(&spec).unwrap();
        let c = incubator_counts(&spec);
        assert_eq!((g.n() as u64, g.m() as u64), (c.n, c.m));
        let v = validate_incubator(&g, &spec).unwrap();
        assert!(v.all_ok(), "{v:?}");
        let v2 = g.vertices_in(Part::V2);
        let v3 = g.vertices_in(Part::V3);
        assert_eq!(g.is_biregular(&v2, &v3).unwrap(), Some((104, 1)));
    }

    #[test]
    fn dense_matches_general_builder() {
        let dense = build_dense_incubator(2.0, 1).unwrap();
        let general = build_incubator(&IncubatorSpec::new(2.0, 1, 1, 0).unwrap()).unwrap();
        assert_eq!(dense, general);
        assert!(build_dense_incubator(2.0, 3).is_err());
    }

    #[test]
    fn validation_catches_a_broken_graph() {
        let spec = IncubatorSpec::new(2.0, 1, 1, 0).unwrap();
        let g = build_incubator(&spec).unwrap();
        // drop one leaf edge
        let mut edges = g.edges();
        edges.remove(0);
        let broken = Digraph::undirected(g.n(), &edges).unwrap().with_labels(g.labels().unwrap().to_vec()).unwrap();
        let v = validate_incubator(&broken, &spec).unwrap();
        assert!(!v.all_ok());
        assert!(!v.v1_v2_biregular);
    }
}
