use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphcore::Graph;
use crate::jsonfmt::ObjectWriter;
use crate::numerics::Tensor;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Week,
    Day,
}

/// Undirected weighted edge list, 0-based, `i <= j`; `i == j` is a self-loop.
pub type EdgeList = Vec<(usize, usize, f64)>;

#[derive(Debug, Clone, PartialEq)]
pub enum Topology {
    Static(EdgeList),
    PerTimestep(Vec<EdgeList>),
}

/// Region graph plus a `T × n` table of case counts.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalGraphDataset {
    pub granularity: Granularity,
    pub nodes: Vec<String>,
    pub dates: Option<Vec<String>>,
    pub topology: Topology,
    /// `T × n`
    pub cases: Tensor,
    /// Raw directed movement counts per timestep, `(from, to, count)`.
    pub mobility: Option<Vec<EdgeList>>,
}

/// Canonical `(min, max)` order with duplicates summed, sorted.
pub(crate) fn normalize_edges(edges: impl IntoIterator<Item = (usize, usize, f64)>) -> EdgeList {
    let mut map = std::collections::BTreeMap::new();
    for (i, j, w) in edges {
        *map.entry((i.min(j), i.max(j))).or_insert(0.0) += w;
    }
    map.into_iter().map(|((i, j), w)| (i, j, w)).collect()
}

impl TemporalGraphDataset {
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    /// Number of timesteps.
    pub fn len(&self) -> usize {
        self.cases.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Series of node `v`.
    pub fn series(&self, v: usize) -> Vec<f64> {
        (0..self.len()).map(|t| self.cases.get(t, v)).collect()
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.eq_ignore_ascii_case(name))
    }

    pub fn edges_at(&self, t: usize) -> &EdgeList {
        match &self.topology {
            Topology::Static(e) => e,
            Topology::PerTimestep(e) => &e[t],
        }
    }

    /// Symmetric `n × n` adjacency in effect at timestep `t`.
    pub fn adjacency_at(&self, t: usize) -> Tensor {
        let n = self.n();
        let mut a = Tensor::zeros(n, n);
        for &(i, j, w) in self.edges_at(t) {
            a.set(i, j, w);
            a.set(j, i, w);
        }
        a
    }

    /// Graph at timestep `t` carrying the given node features.
    pub fn graph_at(&self, t: usize, features: Tensor) -> Result<Graph> {
        Graph::with_self_loops(self.adjacency_at(t), features)?.with_labels(self.nodes.clone())
    }

    /// Undirected edges excluding self-loops, for static topologies.
    pub fn static_edge_count(&self) -> Option<usize> {
        match &self.topology {
            Topology::Static(e) => Some(e.iter().filter(|(i, j, _)| i != j).count()),
            Topology::PerTimestep(_) => None,
        }
    }

    /// Checks the dataset invariants; `Err` carries the offending location.
    pub fn validate(&self) -> Result<()> {
        self.check().map_err(|(_, msg)| Error::data(msg))
    }

    fn check(&self) -> std::result::Result<(), (Location, String)> {
        let n = self.n();
        if n == 0 {
            return Err((Location::key("nodes"), "dataset has no nodes".into()));
        }
        if self.is_empty() {
            return Err((Location::key("cases"), "case series is empty".into()));
        }
        if self.cases.cols() != n {
            return Err((
                Location::key("cases"),
                format!("cases have {} columns for {n} nodes", self.cases.cols()),
            ));
        }
        for t in 0..self.len() {
            for v in 0..n {
                let y = self.cases.get(t, v);
                if !(y >= 0.0 && y.is_finite()) {
                    return Err((
                        Location::row("cases", t),
                        format!("cases[{t}][{v}] = {y} is not a finite non-negative count"),
                    ));
                }
            }
        }
        if let Some(d) = &self.dates {
            if d.len() != self.len() {
                return Err((
                    Location::key("dates"),
                    format!("{} dates for {} timesteps", d.len(), self.len()),
                ));
            }
        }
        let check_edges = |key: &'static str, row: Option<usize>, edges: &EdgeList, ordered: bool| {
            for &(i, j, w) in edges {
                let loc = row.map_or(Location::key(key), |r| Location::row(key, r));
                if i >= n || j >= n {
                    return Err((loc, format!("edge ({}, {}) out of range for {n} nodes", i + 1, j + 1)));
                }
                if ordered && i > j {
                    return Err((
                        loc,
                        format!("edge ({}, {}) must list the smaller index first", i + 1, j + 1),
                    ));
                }
                if !(w >= 0.0 && w.is_finite()) {
                    return Err((loc, format!("edge ({}, {}) has weight {w}", i + 1, j + 1)));
                }
            }
            Ok(())
        };
        match &self.topology {
            Topology::Static(e) => check_edges("edges", None, e, true)?,
            Topology::PerTimestep(days) => {
                if days.len() != self.len() {
                    return Err((
                        Location::key("edges_by_timestep"),
                        format!("{} adjacency timesteps for {} case rows", days.len(), self.len()),
                    ));
                }
                for (t, e) in days.iter().enumerate() {
                    check_edges("edges_by_timestep", Some(t), e, true)?;
                }
            }
        }
        if let Some(m) = &self.mobility {
            if m.len() != self.len() {
                return Err((
                    Location::key("mobility"),
                    format!("{} mobility timesteps for {} case rows", m.len(), self.len()),
                ));
            }
            for (t, e) in m.iter().enumerate() {
                check_edges("mobility", Some(t), e, false)?;
            }
        }
        Ok(())
    }

    pub fn to_canonical_string(&self) -> String {
        let one_based = |e: &EdgeList| e.iter().map(|&(i, j, w)| (i + 1, j + 1, w)).collect::<Vec<_>>();
        let mut w = ObjectWriter::new();
        w.field("schema_version", &SCHEMA_VERSION);
        w.field("granularity", &self.granularity);
        w.field("nodes", &self.nodes);
        if let Some(d) = &self.dates {
            w.field("dates", d);
        }
        match &self.topology {
            Topology::Static(e) => w.rows("edges", one_based(e)),
            Topology::PerTimestep(days) => w.rows("edges_by_timestep", days.iter().map(one_based)),
        }
        w.rows("cases", (0..self.len()).map(|t| self.cases.row(t)));
        if let Some(m) = &self.mobility {
            w.rows("mobility", m.iter().map(one_based));
        }
        w.finish()
    }

    pub fn from_canonical_str(text: &str, path: &Path) -> Result<Self> {
        type Triples = Vec<(usize, usize, f64)>;
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Doc {
            schema_version: u32,
            granularity: Granularity,
            nodes: Vec<String>,
            #[serde(default)]
            dates: Option<Vec<String>>,
            #[serde(default)]
            edges: Option<Triples>,
            #[serde(default)]
            edges_by_timestep: Option<Vec<Triples>>,
            cases: Vec<Vec<f64>>,
            #[serde(default)]
            mobility: Option<Vec<Triples>>,
        }
        let parse_err = |loc: Location, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: loc.line_in(text),
            msg,
        };
        let doc: Doc = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(parse_err(
                Location::key("schema_version"),
                format!(
                    "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                    doc.schema_version
                ),
            ));
        }
        let zero_based = |key: &'static str, row: Option<usize>, e: Triples| -> Result<EdgeList> {
            e.into_iter()
                .map(|(i, j, w)| {
                    if i == 0 || j == 0 {
                        let loc = row.map_or(Location::key(key), |r| Location::row(key, r));
                        return Err(parse_err(
                            loc,
                            format!("edge ({i}, {j}) uses 0 but indices are 1-based"),
                        ));
                    }
                    Ok((i - 1, j - 1, w))
                })
                .collect()
        };
        let topology = match (doc.edges, doc.edges_by_timestep) {
            (Some(e), None) => Topology::Static(zero_based("edges", None, e)?),
            (None, Some(days)) => Topology::PerTimestep(
                days.into_iter()
                    .enumerate()
                    .map(|(t, e)| zero_based("edges_by_timestep", Some(t), e))
                    .collect::<Result<_>>()?,
            ),
            _ => {
                return Err(parse_err(
                    Location::key("nodes"),
                    "exactly one of `edges` and `edges_by_timestep` is required".into(),
                ))
            }
        };
        let mobility = doc
            .mobility
            .map(|m| {
                m.into_iter()
                    .enumerate()
                    .map(|(t, e)| zero_based("mobility", Some(t), e))
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?;
        let n = doc.nodes.len();
        if let Some(t) = doc.cases.iter().position(|r| r.len() != n) {
            return Err(parse_err(
                Location::row("cases", t),
                format!("cases row {t} has {} values for {n} nodes", doc.cases[t].len()),
            ));
        }
        let t_len = doc.cases.len();
        if t_len == 0 || n == 0 {
            let key = if n == 0 { "nodes" } else { "cases" };
            return Err(parse_err(Location::key(key), format!("`{key}` is empty")));
        }
        let ds = TemporalGraphDataset {
            granularity: doc.granularity,
            nodes: doc.nodes,
            dates: doc.dates,
            topology,
            cases: Tensor::new(t_len, n, doc.cases.concat())?,
            mobility,
        };
        ds.check().map_err(|(loc, msg)| parse_err(loc, msg))?;
        Ok(ds)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_canonical_string()).map_err(|e| Error::io(path, e))
    }
}

/// Reads and validates a canonical dataset file.
pub fn load_canonical(path: &Path) -> Result<TemporalGraphDataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TemporalGraphDataset::from_canonical_str(&text, path)
}

/// Where in a canonical document a problem sits.
struct Location {
    key: &'static str,
    row: Option<usize>,
}

impl Location {
    fn key(key: &'static str) -> Self {
        Location { key, row: None }
    }

    fn row(key: &'static str, row: usize) -> Self {
        Location { key, row: Some(row) }
    }

    /// 1-based line, exact for files laid out like the canonical writer's
    /// output (one row per line); otherwise the line of the key; 0 if unknown.
    fn line_in(&self, text: &str) -> usize {
        let quoted = format!("\"{}\"", self.key);
        let Some((idx, line)) = text.lines().enumerate().find(|(_, l)| l.contains(&quoted)) else {
            return 0;
        };
        match self.row {
            Some(r) if line.trim_end().ends_with('[') => idx + 2 + r,
            _ => idx + 1,
        }
    }
}
