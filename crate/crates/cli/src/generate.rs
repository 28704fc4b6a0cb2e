use std::path::PathBuf;

use clap::{Args, ValueEnum};
use moran_core::generators::{
    build_incubator_certified, certify_small_set_expander, incubator_counts, BaselineKind, CertificationMode,
    ExpanderCertificate, IncubatorCounts, SizeBounds, DEFAULT_ENUMERATION_BUDGET,
};
use serde::Serialize;

use crate::output::{emit, ensure_parent, json, resolve};
use crate::source::GraphSource;
use crate::Failure;

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Family {
    Incubator,
    Dense,
    Star,
    Complete,
    Cycle,
    Path,
    Regular,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Certify {
    Brute,
    Spectral,
    Auto,
}

impl From<Certify> for CertificationMode {
    fn from(c: Certify) -> Self {
        match c {
            Certify::Brute => CertificationMode::BruteForce,
            Certify::Spectral => CertificationMode::Spectral,
            Certify::Auto => CertificationMode::Auto,
        }
    }
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    family: Family,
    /// Vertex count (star, complete, cycle, path, regular).
    #[arg(long)]
    n: Option<usize>,
    /// Degree (regular).
    #[arg(long)]
    d: Option<usize>,
    /// Fitness the incubator is built for.
    #[arg(long)]
    r: Option<f64>,
    /// Number of stars (incubator, dense).
    #[arg(long)]
    k: Option<u64>,
    /// Branching value (incubator).
    #[arg(long)]
    b: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Certify the expander (regular graphs and incubator cores).
    #[arg(long)]
    certify: Option<Certify>,
    /// Largest number of subsets the brute-force certifier may enumerate.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
    budget: u64,
    /// Output file; `.json` keeps incubator labels, anything else is an edge list.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Summary {
    source: String,
    path: String,
    n: usize,
    m: usize,
    directed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    counts: Option<IncubatorCounts>,
    #[serde(skip_serializing_if = "Option::is_none")]
    counts_match: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    size_bounds: Option<SizeBounds>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<ExpanderCertificate>,
}

fn required<T>(v: Option<T>, flag: &str, family: Family) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::Usage(format!("--{flag} is required for {family:?}").to_lowercase()))
}

fn source_of(a: &GenerateArgs) -> Result<GraphSource, Failure> {
    let baseline = |kind| Ok(GraphSource::Baseline(kind, required(a.n, "n", a.family)?));
    match a.family {
        Family::Star => baseline(BaselineKind::Star),
        Family::Complete => baseline(BaselineKind::Complete),
        Family::Cycle => baseline(BaselineKind::Cycle),
        Family::Path => baseline(BaselineKind::Path),
        Family::Regular => Ok(GraphSource::Regular {
            n: required(a.n, "n", a.family)?,
            d: required(a.d, "d", a.family)?,
            seed: a.seed,
        }),
        Family::Incubator => Ok(GraphSource::Incubator {
            r: required(a.r, "r", a.family)?,
            k: required(a.k, "k", a.family)?,
            b: Some(required(a.b, "b", a.family)?),
            seed: a.seed,
        }),
        Family::Dense => Ok(GraphSource::Incubator {
            r: required(a.r, "r", a.family)?,
            k: required(a.k, "k", a.family)?,
            b: None,
            seed: a.seed,
        }),
    }
}

pub fn run(a: GenerateArgs) -> Result<(), Failure> {
    let src = source_of(&a)?;
    let mode: CertificationMode = a.certify.unwrap_or(Certify::Auto).into();
    let mut counts = None;
    let mut size_bounds = None;
    let mut certificate = None;
    let g = match src.incubator_spec()? {
        Some(spec) => {
            let (g, cert) = build_incubator_certified(&spec, mode)?;
            let c = incubator_counts(&spec);
            size_bounds = Some(c.size_bounds(&spec));
            counts = Some(c);
            certificate = Some(cert);
            g
        }
        None => {
            let g = src.build()?;
            if a.certify.is_some() {
                certificate = Some(certify_small_set_expander(&g, mode, a.budget)?);
            }
            g
        }
    };
    let path = resolve(a.out, &format!("{}.json", src.slug()))
        .unwrap_or_else(|| PathBuf::from(format!("{}.json", src.slug())));
    ensure_parent(&path)?;
    g.write_path(&path)?;

    let counts_match = counts.as_ref().map(|c| c.n == g.n() as u64 && c.m == g.m() as u64);
    let summary = Summary {
        source: src.to_string(),
        path: path.display().to_string(),
        n: g.n(),
        m: g.m(),
        directed: g.is_directed(),
        counts,
        counts_match,
        size_bounds,
        certificate,
    };
    emit(None, &json(&summary)?)?;

    let mut problems = Vec::new();
    if summary.counts_match == Some(false) {
        problems.push("vertex/edge counts differ from the closed form".to_string());
    }
    if let Some(ob) = summary.size_bounds.as_ref().filter(|ob| ob.applicable && !ob.all_ok()) {
        problems.push(format!("size bounds violated: {ob:?}"));
    }
    if let Some(cert) = summary.certificate.as_ref().filter(|c| !c.passed) {
        problems.push(format!("expander certification failed: {:?}", cert.witness));
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Failure::Checks(problems.join("; ")))
    }
}
