//! Graph file formats: JSON (with optional partition labels) and a plain
//! edge list whose header line is `n directed`.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Digraph, Part};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSets {
    #[serde(rename = "V1", default)]
    pub v1: Vec<usize>,
    #[serde(rename = "V2", default)]
    pub v2: Vec<usize>,
    #[serde(rename = "V3", default)]
    pub v3: Vec<usize>,
}

/// On-disk JSON shape.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    pub directed: bool,
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<LabelSets>,
}

impl From<&Digraph> for GraphFile {
    fn from(g: &Digraph) -> Self {
        let labels = g.labels().map(|_| LabelSets {
            v1: g.vertices_in(Part::V1),
            v2: g.vertices_in(Part::V2),
            v3: g.vertices_in(Part::V3),
        });
        GraphFile {
            n: g.n(),
            directed: g.is_directed(),
            edges: g.edges().into_iter().map(|(u, v)| [u, v]).collect(),
            labels,
        }
    }
}

impl TryFrom<GraphFile> for Digraph {
    type Error = Error;

    fn try_from(f: GraphFile) -> Result<Self> {
        let edges: Vec<(usize, usize)> = f.edges.iter().map(|e| (e[0], e[1])).collect();
        let g = if f.directed { Digraph::directed(f.n, &edges)? } else { Digraph::undirected(f.n, &edges)? };
        match f.labels {
            None => Ok(g),
            Some(sets) => {
                let mut labels = vec![None; f.n];
                for (part, ids) in [(Part::V1, &sets.v1), (Part::V2, &sets.v2), (Part::V3, &sets.v3)] {
                    for &v in ids {
                        let slot = labels
                            .get_mut(v)
                            .ok_or_else(|| Error::Parse(format!("label id {v} out of range for n={}", f.n)))?;
                        if slot.is_some() {
                            return Err(Error::Parse(format!("vertex {v} carries two labels")));
                        }
                        *slot = Some(part);
                    }
                }
                g.with_labels(labels)
            }
        }
    }
}

impl Digraph {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&GraphFile::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: GraphFile = serde_json::from_str(s)?;
        f.try_into()
    }

    /// Edge-list text. Labels are not representable in this format.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {}\n", self.n(), self.is_directed());
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    pub fn from_edge_list(s: &str) -> Result<Self> {
        let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("empty edge list".into()))?;
        let mut h = header.split_whitespace();
        let n: usize =
            h.next().and_then(|t| t.parse().ok()).ok_or_else(|| Error::Parse(format!("bad header line {header:?}")))?;
        let directed = match h.next() {
            Some("true" | "1" | "directed") => true,
            Some("false" | "0" | "undirected") => false,
            other => return Err(Error::Parse(format!("bad directed flag {other:?}"))),
        };
        let mut edges = Vec::new();
        for line in lines {
            let mut it = line.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(u)), Some(Ok(v)), None) => edges.push((u, v)),
                _ => return Err(Error::Parse(format!("bad edge line {line:?}"))),
            }
        }
        if directed {
            Digraph::directed(n, &edges)
        } else {
            Digraph::undirected(n, &edges)
        }
    }

    /// Reads either format, choosing by extension (`.json` or anything else).
    pub fn read_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            Self::from_edge_list(&text)
        }
    }

    pub fn write_path(&self, path: &Path) -> Result<()> {
        let text = if path.extension().is_some_and(|e| e == "json") { self.to_json()? } else { self.to_edge_list() };
        std::fs::write(path, text)?;
        Ok(())
    }
}
