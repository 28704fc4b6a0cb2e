use std::path::PathBuf;

use clap::Args;
use moran_core::engine::{InitMode, Kernel};
use moran_core::generators::BaselineKind;
use moran_core::stats::DEFAULT_CONFIDENCE;

use crate::estimate::{audit, estimate_row, EstimateRow, ExperimentConfig, ROW_HEADER};
use crate::output::{csv, emit, json, resolve, Format};
use crate::source::GraphSource;
use crate::Failure;

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Star sizes (total vertex count).
    #[arg(long, value_delimiter = ',')]
    stars: Vec<usize>,
    /// Clique sizes.
    #[arg(long, value_delimiter = ',')]
    cliques: Vec<usize>,
    /// Dense incubators, by number of stars (perfect squares).
    #[arg(long, value_delimiter = ',')]
    incubators: Vec<u64>,
    /// Add a clique of the same size next to each incubator.
    #[arg(long)]
    match_cliques: bool,
    #[arg(long, default_value_t = 2.0)]
    r: f64,
    #[arg(long, default_value_t = 10_000)]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "effective")]
    kernel: Kernel,
    #[arg(long, default_value_t = DEFAULT_CONFIDENCE)]
    confidence: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

fn family(a: &SweepArgs) -> Result<Vec<GraphSource>, Failure> {
    let mut out: Vec<GraphSource> = a.stars.iter().map(|&n| GraphSource::Baseline(BaselineKind::Star, n)).collect();
    out.extend(a.cliques.iter().map(|&n| GraphSource::Baseline(BaselineKind::Complete, n)));
    for &k in &a.incubators {
        let inc = GraphSource::Incubator { r: a.r, k, b: None, seed: a.seed };
        if a.match_cliques {
            let spec = inc.incubator_spec()?.expect("incubator source");
            let n = moran_core::generators::incubator_counts(&spec).n as usize;
            out.push(inc);
            out.push(GraphSource::Baseline(BaselineKind::Complete, n));
        } else {
            out.push(inc);
        }
    }
    Ok(out)
}

pub fn run(a: SweepArgs) -> Result<(), Failure> {
    let sources = family(&a)?;
    let cfg = ExperimentConfig {
        graph: String::new(),
        r: vec![a.r],
        init: InitMode::UniformVertex,
        replicates: a.reps,
        seed: a.seed,
        kernel: a.kernel,
        confidence: a.confidence,
        step_cap_multiplier: None,
    };
    let mut rows: Vec<EstimateRow> = Vec::new();
    for src in &sources {
        let g = src.build()?;
        let row = estimate_row(&src.to_string(), &g, a.r, &InitMode::UniformVertex, &cfg)?;
        eprintln!("{}: n={} estimate={:.5} [{:.5}, {:.5}]", row.graph_id, row.n, row.estimate, row.ci_low, row.ci_high);
        rows.push(row);
    }
    let text = match a.format {
        Format::Csv => csv(ROW_HEADER, &rows)?,
        Format::Json => json(&rows)?,
    };
    emit(resolve(a.out, &format!("amplify_sweep.{}", a.format.extension())).as_deref(), &text)?;
    audit(&rows);
    Ok(())
}
