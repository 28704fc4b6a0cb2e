//! Graph sources: a file path or a short generator spec such as `star:201`,
//! `regular:n=10,d=3,seed=1` or `incubator:r=2,k=4,b=2,seed=7`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use moran_core::generators::{baseline_graph, build_incubator, random_regular_graph, BaselineKind, IncubatorSpec};
use moran_core::Digraph;

#[derive(Clone, Debug, PartialEq)]
pub enum GraphSource {
    File(PathBuf),
    Baseline(BaselineKind, usize),
    Regular {
        n: usize,
        d: usize,
        seed: u64,
    },
    /// `b = None` is the dense incubator.
    Incubator {
        r: f64,
        k: u64,
        b: Option<u64>,
        seed: u64,
    },
}

fn keyed(body: &str) -> Result<BTreeMap<&str, &str>, String> {
    body.split(',')
        .filter(|t| !t.is_empty())
        .map(|t| t.split_once('=').ok_or_else(|| format!("expected key=value, got {t:?}")))
        .collect()
}

fn take<T: FromStr>(map: &mut BTreeMap<&str, &str>, key: &str) -> Result<Option<T>, String> {
    map.remove(key).map(|v| v.parse().map_err(|_| format!("bad value {v:?} for {key}"))).transpose()
}

fn need<T: FromStr>(map: &mut BTreeMap<&str, &str>, key: &str) -> Result<T, String> {
    take(map, key)?.ok_or_else(|| format!("missing {key}="))
}

impl FromStr for GraphSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (family, body) = s.split_once(':').unwrap_or((s, ""));
        let src = match family {
            "edge" if body.is_empty() => GraphSource::Baseline(BaselineKind::Path, 2),
            "star" | "complete" | "clique" | "cycle" | "path" => {
                let kind: BaselineKind = family.parse().map_err(|e| format!("{e}"))?;
                let n = body.strip_prefix("n=").unwrap_or(body);
                let n = n.parse().map_err(|_| format!("bad vertex count in {s:?}"))?;
                GraphSource::Baseline(kind, n)
            }
            "regular" | "incubator" | "dense" => {
                let mut map = keyed(body)?;
                let src = match family {
                    "regular" => GraphSource::Regular {
                        n: need(&mut map, "n")?,
                        d: need(&mut map, "d")?,
                        seed: take(&mut map, "seed")?.unwrap_or(0),
                    },
                    "incubator" => GraphSource::Incubator {
                        r: need(&mut map, "r")?,
                        k: need(&mut map, "k")?,
                        b: Some(need(&mut map, "b")?),
                        seed: take(&mut map, "seed")?.unwrap_or(0),
                    },
                    _ => GraphSource::Incubator {
                        r: need(&mut map, "r")?,
                        k: need(&mut map, "k")?,
                        b: None,
                        seed: take(&mut map, "seed")?.unwrap_or(0),
                    },
                };
                if let Some(key) = map.keys().next() {
                    return Err(format!("unknown key {key:?} in {s:?}"));
                }
                src
            }
            _ => GraphSource::File(PathBuf::from(s)),
        };
        Ok(src)
    }
}

impl fmt::Display for GraphSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSource::File(p) => write!(f, "{}", p.display()),
            GraphSource::Baseline(kind, n) => write!(f, "{kind}:{n}"),
            GraphSource::Regular { n, d, seed } => write!(f, "regular:n={n},d={d},seed={seed}"),
            GraphSource::Incubator { r, k, b: Some(b), seed } => {
                write!(f, "incubator:r={r},k={k},b={b},seed={seed}")
            }
            GraphSource::Incubator { r, k, b: None, seed } => write!(f, "dense:r={r},k={k},seed={seed}"),
        }
    }
}

impl GraphSource {
    pub fn incubator_spec(&self) -> moran_core::Result<Option<IncubatorSpec>> {
        match *self {
            GraphSource::Incubator { r, k, b: Some(b), seed } => IncubatorSpec::new(r, k, b, seed).map(Some),
            GraphSource::Incubator { r, k, b: None, seed } => IncubatorSpec::dense(r, k, seed).map(Some),
            _ => Ok(None),
        }
    }

    pub fn build(&self) -> moran_core::Result<Digraph> {
        match self {
            GraphSource::File(p) => Digraph::read_path(p),
            GraphSource::Baseline(kind, n) => baseline_graph(*kind, *n),
            GraphSource::Regular { n, d, seed } => random_regular_graph(*n, *d, *seed),
            GraphSource::Incubator { .. } => build_incubator(&self.incubator_spec()?.expect("incubator source")),
        }
    }

    /// A file-name friendly rendering of the source.
    pub fn slug(&self) -> String {
        match self {
            GraphSource::File(p) => p.file_stem().map_or("graph".into(), |s| s.to_string_lossy().into_owned()),
            other => {
                other.to_string().chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' }).collect()
            }
        }
    }
}
