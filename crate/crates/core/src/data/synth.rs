//! Seeded synthetic corpora with the shapes of the two benchmark datasets.

use serde::{Deserialize, Serialize};

use super::dataset::{normalize_edges, EdgeList, Granularity, TemporalGraphDataset, Topology};
use super::import::symmetrize;
use crate::error::{Error, Result};
use crate::numerics::{Rng, Tensor};

/// Region movement plus an epidemic spreading along it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticMobility {
    pub regions: usize,
    pub days: usize,
    pub seed: u64,
}

impl Default for SyntheticMobility {
    fn default() -> Self {
        SyntheticMobility {
            regions: 30,
            days: 120,
            seed: 0,
        }
    }
}

/// Metapopulation SIR driven by daily gravity-model mobility.
///
/// Movement falls off with squared distance and dips on weekends. A single
/// wave grows until a restriction begins a third of the way in, which cuts
/// movement and transmission for the rest of the period, so the series rises,
/// peaks and declines. Reported counts carry a weekday reporting pattern and
/// multiplicative noise.
pub fn synthetic_mobility(cfg: SyntheticMobility) -> Result<TemporalGraphDataset> {
    let (n, days) = (cfg.regions, cfg.days);
    if n < 2 || days < 2 {
        return Err(Error::config("synthetic mobility needs at least 2 regions and 2 days"));
    }
    let mut rng = Rng::new(cfg.seed);
    let pos: Vec<(f64, f64)> = (0..n).map(|_| (rng.uniform_open(), rng.uniform_open())).collect();
    let pop: Vec<f64> = (0..n).map(|_| rng.uniform(0.5, 2.0) * 1e5).collect();
    let gravity = |i: usize, j: usize| {
        let d2 = (pos[i].0 - pos[j].0).powi(2) + (pos[i].1 - pos[j].1).powi(2);
        pop[i] * pop[j] / (d2 + 0.02) * 1e-7
    };
    let seeds = [rng.below(n), rng.below(n)];

    let mut s: Vec<f64> = pop.clone();
    let mut inf = vec![0.0; n];
    for &i in &seeds {
        inf[i] += 50.0;
        s[i] -= 50.0;
    }
    let gamma = 0.2;
    let mut cases = Tensor::zeros(days, n);
    let mut mobility: Vec<EdgeList> = Vec::with_capacity(days);
    for t in 0..days {
        let weekend = matches!(t % 7, 5 | 6);
        let restriction = if t >= days / 3 { 0.5 } else { 1.0 };
        let level = restriction * if weekend { 0.7 } else { 1.0 };
        let mut day = Vec::new();
        for i in 0..n {
            // Stay-at-home movement as the self entry.
            day.push((i, i, (pop[i] * 0.02 * rng.uniform(0.9, 1.1)).round()));
            for j in 0..n {
                if i != j {
                    let w = (gravity(i, j) * level * rng.uniform(0.8, 1.2)).round();
                    if w > 0.0 {
                        day.push((i, j, w));
                    }
                }
            }
        }
        let adj = symmetrize(&day, n);
        let mut rows = vec![vec![0.0; n]; n];
        for &(i, j, w) in &adj {
            rows[i][j] += w;
            if i != j {
                rows[j][i] += w;
            }
        }
        let beta = if t >= days / 3 { 0.19 } else { 0.32 };
        let prevalence: Vec<f64> = (0..n).map(|j| inf[j] / pop[j]).collect();
        let mut new = vec![0.0; n];
        for i in 0..n {
            let total: f64 = rows[i].iter().sum();
            let force: f64 = (0..n).map(|j| rows[i][j] / total * prevalence[j]).sum::<f64>() * beta;
            new[i] = s[i] * (1.0 - (-force).exp());
        }
        for i in 0..n {
            s[i] -= new[i];
            inf[i] += new[i] - gamma * inf[i];
            // Imported infections keep every region seeded.
            inf[i] += 0.5;
            let report = match t % 7 {
                0 => 1.25,
                5 | 6 => 0.7,
                _ => 1.0,
            };
            let noise = (0.15 * rng.normal()).exp();
            cases.set(t, i, (new[i] * report * noise).round().max(0.0));
        }
        mobility.push(day.into_iter().filter(|e| e.2 > 0.0).collect());
    }
    let topology = Topology::PerTimestep(mobility.iter().map(|m| symmetrize(m, n)).collect());
    let ds = TemporalGraphDataset {
        granularity: Granularity::Day,
        nodes: (0..n).map(|i| format!("R{:02}", i + 1)).collect(),
        dates: None,
        topology,
        cases,
        mobility: Some(mobility),
    };
    ds.validate()?;
    Ok(ds)
}

const COUNTIES: [&str; 20] = [
    "BUDAPEST", "BARANYA", "BACS", "BEKES", "BORSOD", "CSONGRAD", "FEJER", "GYOR", "HAJDU", "HEVES", "JASZ", "KOMAROM",
    "NOGRAD", "PEST", "SOMOGY", "SZABOLCS", "TOLNA", "VAS", "VESZPREM", "ZALA",
];

/// Connected random graph with exactly `edges` undirected edges.
pub fn random_connected_edges(n: usize, edges: usize, rng: &mut Rng) -> Result<EdgeList> {
    if n == 0 || edges + 1 < n || edges > n * (n - 1) / 2 {
        return Err(Error::config(format!(
            "no connected simple graph on {n} nodes has {edges} edges"
        )));
    }
    let order = rng.permutation(n);
    let mut set = std::collections::BTreeSet::new();
    for k in 1..n {
        let (a, b) = (order[k], order[rng.below(k)]);
        set.insert((a.min(b), a.max(b)));
    }
    while set.len() < edges {
        let (a, b) = (rng.below(n), rng.below(n));
        if a != b {
            set.insert((a.min(b), a.max(b)));
        }
    }
    Ok(normalize_edges(set.into_iter().map(|(a, b)| (a, b, 1.0))))
}

/// 20 counties, 61 edges, 522 weeks of seasonal counts coupled along the
/// graph. A stand-in with the benchmark's shape, not its values.
pub fn synthetic_chickenpox(seed: u64) -> Result<TemporalGraphDataset> {
    let (n, weeks) = (COUNTIES.len(), 522);
    let mut rng = Rng::new(seed);
    let mut edges = random_connected_edges(n, 60, &mut rng)?;
    // BUDAPEST (0) and PEST (13) always border each other.
    if !edges.iter().any(|&(a, b, _)| (a, b) == (0, 13)) {
        edges.push((0, 13, 1.0));
    } else {
        loop {
            let (a, b) = (rng.below(n), rng.below(n));
            if a != b && !edges.iter().any(|&(x, y, _)| (x, y) == (a.min(b), a.max(b))) {
                edges.push((a.min(b), a.max(b), 1.0));
                break;
            }
        }
    }
    let edges = normalize_edges(edges);
    let scale: Vec<f64> = (0..n).map(|_| rng.uniform(20.0, 120.0)).collect();
    let mut level = vec![0.0; n];
    let mut cases = Tensor::zeros(weeks, n);
    for t in 0..weeks {
        let season = (std::f64::consts::TAU * (t as f64 - 10.0) / 52.0).cos();
        let mut neighbour = vec![0.0; n];
        let mut deg = vec![0.0; n];
        for &(a, b, _) in &edges {
            neighbour[a] += level[b];
            neighbour[b] += level[a];
            deg[a] += 1.0;
            deg[b] += 1.0;
        }
        for v in 0..n {
            let coupled = 0.6 * level[v] + 0.3 * neighbour[v] / deg[v] + 0.4 * rng.normal();
            level[v] = coupled;
            let mean = scale[v] * (1.0 + 0.8 * season + 0.25 * level[v]).max(0.02);
            cases.set(t, v, (mean * (0.1 * rng.normal()).exp()).round());
        }
    }
    let ds = TemporalGraphDataset {
        granularity: Granularity::Week,
        nodes: COUNTIES.iter().map(|s| s.to_string()).collect(),
        dates: None,
        topology: Topology::Static(edges),
        cases,
        mobility: None,
    };
    ds.validate()?;
    Ok(ds)
}

/// Pearson correlation of two equal-length series.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mobility_shape_and_symmetry() {
        let ds = synthetic_mobility(SyntheticMobility::default()).unwrap();
        assert_eq!((ds.n(), ds.len()), (30, 120));
        for t in [0, 50, 119] {
            let a = ds.adjacency_at(t);
            assert_eq!(a, a.transpose());
            assert!((0..30).all(|i| a.get(i, i) > 0.0));
        }
        let total: f64 = ds.cases.data().iter().sum();
        assert!(total > 1000.0, "{total}");
        let again = synthetic_mobility(SyntheticMobility::default()).unwrap();
        assert_eq!(again, ds);
    }

    #[test]
    fn chickenpox_shape() {
        let ds = synthetic_chickenpox(1).unwrap();
        assert_eq!(ds.n(), 20);
        assert_eq!(ds.static_edge_count(), Some(61));
        assert!(ds.len() > 500);
        let (bp, pest) = (ds.node_index("budapest").unwrap(), ds.node_index("PEST").unwrap());
        assert!(pearson(&ds.series(bp), &ds.series(pest)) > 0.0);
    }

    #[test]
    fn connected_edges_exact_count() {
        let mut rng = Rng::new(5);
        let e = random_connected_edges(10, 12, &mut rng).unwrap();
        assert_eq!(e.len(), 12);
        assert!(random_connected_edges(10, 8, &mut rng).is_err());
    }
}
