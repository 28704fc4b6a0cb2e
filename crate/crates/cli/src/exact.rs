use std::path::PathBuf;

use clap::Args;
use moran_core::analytics::{bound_reports_for, BoundReport};
use moran_core::exact::{exact_extinction, time_bound_from, ExactResult, TimeBoundReport, DEFAULT_STATE_CAP};
use serde::Serialize;

use crate::output::{emit, json, resolve};
use crate::source::GraphSource;
use crate::Failure;

#[derive(Args, Debug)]
pub struct ExactArgs {
    /// Graph file or generator spec.
    #[arg(long)]
    graph: GraphSource,
    /// Fitness values, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    r: Vec<f64>,
    /// Largest vertex count the solver will accept.
    #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
    state_cap: usize,
    /// Include the extinction probability and expected time of every mutant set.
    #[arg(long)]
    with_sets: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Entry {
    graph_id: String,
    #[serde(flatten)]
    result: ExactResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    time_bound: Option<TimeBoundReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    bounds: Vec<BoundReport>,
}

pub fn run(a: ExactArgs) -> Result<(), Failure> {
    let g = a.graph.build()?;
    let mut entries = Vec::new();
    for &r in &a.r {
        let mut result = exact_extinction(&g, r, a.state_cap)?;
        let sol = result.per_set_cache.as_ref().expect("solver keeps the tables");
        let (time_bound, bounds) =
            if r > 1.0 { (Some(time_bound_from(sol)), bound_reports_for(&g, sol)?) } else { (None, Vec::new()) };
        if !a.with_sets {
            result.per_set_cache = None;
        }
        entries.push(Entry { graph_id: a.graph.to_string(), result, time_bound, bounds });
    }
    let path = resolve(a.out, &format!("exact_{}.json", a.graph.slug()));
    emit(path.as_deref(), &json(&entries)?)
}
