//! Importers for the published raw layouts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::dataset::{normalize_edges, EdgeList, Granularity, TemporalGraphDataset, Topology};
use crate::error::{Error, Result};
use crate::numerics::Tensor;

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        kind => Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("{kind:?}"),
        },
    }
}

fn reader(path: &Path, has_headers: bool) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(has_headers)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))
}

fn parse_count(path: &Path, line: u64, field: &str) -> Result<f64> {
    let y: f64 = field.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line: line as usize,
        msg: format!("`{field}` is not a number"),
    })?;
    if !(y >= 0.0 && y.is_finite()) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: line as usize,
            msg: format!("count {y} is negative or not finite"),
        });
    }
    Ok(y)
}

/// County adjacency list plus weekly per-county counts.
///
/// The series file has a header `Date,<county>,...` and one row per week.
/// Each edge row names two counties, either by name or by 0-based column
/// index into the series header. Rows repeating an undirected pair in
/// either direction collapse into one unit-weight edge.
pub fn import_chickenpox(edges_path: &Path, series_path: &Path) -> Result<TemporalGraphDataset> {
    let mut rdr = reader(series_path, true)?;
    let header = rdr.headers().map_err(|e| csv_err(series_path, e))?.clone();
    if header.len() < 2 {
        return Err(Error::data(format!(
            "{}: expected a date column and at least one county",
            series_path.display()
        )));
    }
    let nodes: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let n = nodes.len();
    let mut dates = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(series_path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != n + 1 {
            return Err(Error::data(format!(
                "{}:{line}: {} fields for {n} counties",
                series_path.display(),
                rec.len() - 1
            )));
        }
        dates.push(rec[0].to_string());
        for field in rec.iter().skip(1) {
            values.push(parse_count(series_path, line, field)?);
        }
    }
    let lookup = |field: &str| -> Option<usize> {
        field
            .parse::<usize>()
            .ok()
            .filter(|&i| i < n)
            .or_else(|| nodes.iter().position(|c| c.eq_ignore_ascii_case(field)))
    };
    let mut pairs = std::collections::BTreeSet::new();
    let mut erdr = reader(edges_path, true)?;
    for rec in erdr.records() {
        let rec = rec.map_err(|e| csv_err(edges_path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() < 2 {
            return Err(Error::Parse {
                path: edges_path.to_path_buf(),
                line: line as usize,
                msg: "edge rows need two counties".into(),
            });
        }
        let mut ends = [0usize; 2];
        for (k, end) in ends.iter_mut().enumerate() {
            *end = lookup(&rec[k])
                .ok_or_else(|| Error::data(format!("{}:{line}: unknown county `{}`", edges_path.display(), &rec[k])))?;
        }
        let [a, b] = ends;
        if a == b {
            return Err(Error::data(format!(
                "{}:{line}: self-loop on `{}`",
                edges_path.display(),
                nodes[a]
            )));
        }
        pairs.insert((a.min(b), a.max(b)));
    }
    let t = dates.len();
    let ds = TemporalGraphDataset {
        granularity: Granularity::Week,
        nodes,
        dates: Some(dates),
        topology: Topology::Static(pairs.into_iter().map(|(a, b)| (a, b, 1.0)).collect()),
        cases: Tensor::new(t, n, values)?,
        mobility: None,
    };
    ds.validate()?;
    Ok(ds)
}

/// What to do about days without a mobility file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GapPolicy {
    /// Missing or non-consecutive days are a data error.
    #[default]
    Reject,
    /// Reuse the previous day's mobility for missing days and accept
    /// non-consecutive label dates.
    CarryForward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MobilityOptions {
    pub gaps: GapPolicy,
    /// Labels hold cumulative counts; convert to daily new cases.
    pub cumulative_labels: bool,
}

/// Aggregated-mobility layout:
///
/// - `labels.csv`: header `name,<YYYY-MM-DD>,...`, one row of daily case
///   counts per region;
/// - `graphs/*_<YYYY-MM-DD>.csv`: rows `source,target,count` naming regions,
///   optional header.
///
/// The adjacency of each day is `A_ij = M_ij + M_ji` for `i ≠ j` and
/// `A_ii = M_ii`; a day without any movement gets unit self-loops only.
pub fn import_mobility(dir: &Path, opts: MobilityOptions) -> Result<TemporalGraphDataset> {
    let labels_path = dir.join("labels.csv");
    let mut rdr = reader(&labels_path, true)?;
    let header = rdr.headers().map_err(|e| csv_err(&labels_path, e))?.clone();
    let dates = header
        .iter()
        .skip(1)
        .map(|d| {
            NaiveDate::parse_from_str(d, "%Y-%m-%d")
                .map_err(|_| Error::data(format!("{}: bad date `{d}` in header", labels_path.display())))
        })
        .collect::<Result<Vec<_>>>()?;
    if dates.is_empty() {
        return Err(Error::data(format!("{}: no dates", labels_path.display())));
    }
    if opts.gaps == GapPolicy::Reject {
        if let Some(w) = dates.windows(2).find(|w| (w[1] - w[0]).num_days() != 1) {
            return Err(Error::data(format!("day gap between {} and {}", w[0], w[1])));
        }
    }
    let mut nodes = Vec::new();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(&labels_path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        nodes.push(rec[0].to_string());
        rows.push(
            rec.iter()
                .skip(1)
                .map(|f| parse_count(&labels_path, line, f))
                .collect::<Result<Vec<f64>>>()?,
        );
    }
    let n = nodes.len();
    let t_len = dates.len();
    let mut cases = Tensor::from_fn(t_len, n, |t, v| rows[v][t]);
    if opts.cumulative_labels {
        // Downward revisions of a cumulative total clamp to zero new cases.
        let raw = cases.clone();
        for t in 1..t_len {
            for v in 0..n {
                cases.set(t, v, (raw.get(t, v) - raw.get(t - 1, v)).max(0.0));
            }
        }
    }

    let mut files: BTreeMap<NaiveDate, PathBuf> = BTreeMap::new();
    let graphs_dir = dir.join("graphs");
    let entries = std::fs::read_dir(&graphs_dir).map_err(|e| Error::io(&graphs_dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(&graphs_dir, e))?.path();
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        if path.extension().and_then(|e| e.to_str()) != Some("csv") || stem.len() < 10 {
            continue;
        }
        if let Ok(day) = NaiveDate::parse_from_str(&stem[stem.len() - 10..], "%Y-%m-%d") {
            files.insert(day, path);
        }
    }

    let index = |name: &str| nodes.iter().position(|r| r == name);
    let mut mobility: Vec<EdgeList> = Vec::with_capacity(t_len);
    for day in &dates {
        let raw = match files.get(day) {
            Some(path) => read_movement(path, &index)?,
            None => match (opts.gaps, mobility.last()) {
                (GapPolicy::CarryForward, Some(prev)) => prev.clone(),
                _ => return Err(Error::data(format!("no mobility file for {day}"))),
            },
        };
        mobility.push(raw);
    }
    let topology = Topology::PerTimestep(mobility.iter().map(|m| symmetrize(m, n)).collect());
    let ds = TemporalGraphDataset {
        granularity: Granularity::Day,
        nodes,
        dates: Some(dates.iter().map(|d| d.to_string()).collect()),
        topology,
        cases,
        mobility: Some(mobility),
    };
    ds.validate()?;
    Ok(ds)
}

fn read_movement(path: &Path, index: &dyn Fn(&str) -> Option<usize>) -> Result<EdgeList> {
    let mut rdr = reader(path, false)?;
    let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 3 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: line as usize,
                msg: format!("expected source,target,count, got {} fields", rec.len()),
            });
        }
        if k == 0 && rec[2].parse::<f64>().is_err() {
            continue;
        }
        let count = parse_count(path, line, &rec[2])?;
        let mut ends = [0usize; 2];
        for (e, end) in ends.iter_mut().enumerate() {
            *end = index(&rec[e])
                .ok_or_else(|| Error::data(format!("{}:{line}: unknown region `{}`", path.display(), &rec[e])))?;
        }
        *acc.entry((ends[0], ends[1])).or_insert(0.0) += count;
    }
    Ok(acc
        .into_iter()
        .filter(|&(_, w)| w != 0.0)
        .map(|((i, j), w)| (i, j, w))
        .collect())
}

/// `A_ij = M_ij + M_ji`, `A_ii = M_ii`; unit self-loops when `M` is all zero.
pub fn symmetrize(directed: &EdgeList, n: usize) -> EdgeList {
    let total: f64 = directed.iter().map(|e| e.2).sum();
    if total == 0.0 {
        return (0..n).map(|i| (i, i, 1.0)).collect();
    }
    normalize_edges(directed.iter().copied())
}
