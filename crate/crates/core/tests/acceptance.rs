//! One line per acceptance criterion. Run with `--nocapture` to see them.
//!
//! Criteria that depend on external data or on model quality print their
//! outcome but do not fail the test; everything else is asserted.

mod common;

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;

use common::{random_graph, random_partition, random_unweighted_graph};
use tmgnn::data::{
    import_chickenpox, import_mobility, synthetic_chickenpox, synthetic_mobility, MobilityOptions, SyntheticMobility,
    TemporalGraphDataset,
};
use tmgnn::graphcore::{coarsen, quadratic_coarsen, square_outbreak, Graph, LaplacianKind};
use tmgnn::harness::{baseline_forecast, run_experiment, BaselineKind, MetricsReport, TrainConfig};
use tmgnn::mgn::{encode, propagation, AssignMode, MgnConfig, MgnParams, Sampling};
use tmgnn::numerics::gradcheck::check_params;
use tmgnn::numerics::{gumbel_soft_sample, gumbel_softmax, Noise, ParamId, ParamStore, Rng, Tape, Tensor};
use tmgnn::temporal::{tmgnn_forward, CellKind, TmgnnConfig, TmgnnModel};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Asserted criteria fail the test; reported ones only print.
enum Gate {
    Asserted,
    Reported,
}

fn gradients() -> Outcome {
    let start = Instant::now();
    let ops = common::op_gradient_errors(10, 7);
    let (worst_op, worst) = ops
        .iter()
        .cloned()
        .fold(("", 0.0), |a, b| if b.1 > a.1 { b } else { a });

    let mut rng = Rng::new(21);
    let graphs: Vec<Graph> = (0..2).map(|_| random_graph(6, 3, &mut rng)).collect();
    let mgn = MgnConfig::new(vec![2, 3, 6], 4, 2);
    let model = TmgnnModel::new(TmgnnConfig::new(mgn, 2, CellKind::Lstm, 3, 2), &mut rng).unwrap();
    let sampling = Sampling::new(AssignMode::Soft, 1.0).unwrap();
    let draws = {
        let tape = Tape::new();
        let p = model.store.bind(&tape);
        let mut noise = Noise::sample(&mut rng);
        tmgnn_forward(&p, &model, &graphs, sampling, &mut noise).unwrap();
        noise.into_log()
    };
    let ids: Vec<ParamId> = model.store.ids().collect();
    let coords: Vec<(ParamId, usize)> = (0..16)
        .map(|_| {
            let id = ids[rng.below(ids.len())];
            (id, rng.below(model.store.get(id).len()))
        })
        .collect();
    let target = rng.uniform_tensor(6, 2, 1.0);
    let errs = check_params(&model.store, &coords, 1e-6, |p| {
        let out = tmgnn_forward(p, &model, &graphs, sampling, &mut Noise::replay(&draws))?;
        Ok(out.predictions.sub(p.tape().constant(target.clone()))?.square().mean())
    })
    .unwrap();
    let e2e = errs.iter().cloned().fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst < 1e-5 && e2e < 1e-3 && coords.len() >= 10 && secs < 60.0,
        format!(
            "{} ops, worst {worst:.1e} ({worst_op}) < 1e-5; end-to-end {} params, worst {e2e:.1e} < 1e-3; {secs:.1}s",
            ops.len(),
            coords.len()
        ),
    )
}

fn coarsening_oracle() -> Outcome {
    let mut rng = Rng::new(31);
    let mut failures = 0;
    for _ in 0..100 {
        let n = 1 + rng.below(12);
        let k = 1 + rng.below(n.min(5));
        let g = random_unweighted_graph(n, rng.uniform(0.1, 0.9), &mut rng);
        let part = random_partition(n, k, &mut rng);
        let coarse = coarsen(&g, &part).unwrap();
        let a = coarse.adjacency();

        let adj = DMatrix::from_row_slice(n, n, g.adjacency().data());
        let pi = DMatrix::from_fn(n, k, |i, c| if part.cluster_of(i) == c { 1.0 } else { 0.0 });
        let oracle = pi.transpose() * adj * &pi;
        let ours = quadratic_coarsen(&g, &part.assignment_matrix()).unwrap();

        let mut mass = 0.0;
        let mut ok = true;
        for i in 0..k {
            for j in 0..k {
                ok &= ours.get(i, j) == oracle[(i, j)];
                if i == j {
                    ok &= a.get(i, i) == 0.5 * oracle[(i, i)];
                    mass += a.get(i, i);
                } else {
                    ok &= a.get(i, j) == oracle[(i, j)];
                    mass += 0.5 * a.get(i, j);
                }
            }
        }
        ok &= mass == g.num_edges() as f64;
        failures += usize::from(!ok);
    }
    outcome(
        failures == 0,
        format!("{failures}/100 graphs disagree with the dense oracle or lose edge mass"),
    )
}

fn equivariance() -> Outcome {
    let mut rng = Rng::new(41);
    let mut encoder_worst: f64 = 0.0;
    let mut pipeline_worst: f64 = 0.0;
    for _ in 0..50 {
        let n = 5 + rng.below(8);
        let perm = rng.permutation(n);
        let g = random_graph(n, 3, &mut rng);
        let h = g.permute(&perm).unwrap();

        let cfg = MgnConfig::new(vec![1, n], 5, 2);
        let mut store = ParamStore::new();
        let params = MgnParams::new(&mut store, "m", &cfg, 3, &mut rng).unwrap();
        let enc = |g: &Graph| {
            let tape = Tape::new();
            let p = store.bind(&tape);
            let op = propagation(tape.constant(g.adjacency().clone()), LaplacianKind::Row, true).unwrap();
            encode(
                &p,
                &params.level(2).encoder,
                op,
                tape.constant(g.features().clone()),
                cfg.activation,
            )
            .unwrap()
            .value()
        };
        encoder_worst = encoder_worst.max(enc(&g).permute_rows(&perm).max_abs_diff(&enc(&h)));

        let graphs: Vec<Graph> = (0..2).map(|_| random_graph(n, 3, &mut rng)).collect();
        let permuted: Vec<Graph> = graphs.iter().map(|g| g.permute(&perm).unwrap()).collect();
        let mgn = MgnConfig::new(vec![2, 4, n], 4, 2);
        let model = TmgnnModel::new(TmgnnConfig::new(mgn, 2, CellKind::Lstm, 3, 2), &mut rng).unwrap();
        let sampling = Sampling::new(AssignMode::StraightThrough, 1.0).unwrap();
        let tape = Tape::new();
        let p = model.store.bind(&tape);
        let mut noise = Noise::sample(&mut rng);
        let a = tmgnn_forward(&p, &model, &graphs, sampling, &mut noise).unwrap();
        let draws = noise.into_log();
        // The first draw of each timestep assigns the input nodes.
        let per_step = draws.len() / graphs.len();
        let pdraws: Vec<Tensor> = draws
            .iter()
            .enumerate()
            .map(|(i, d)| {
                if i % per_step == 0 {
                    d.permute_rows(&perm)
                } else {
                    d.clone()
                }
            })
            .collect();
        let b = tmgnn_forward(&p, &model, &permuted, sampling, &mut Noise::replay(&pdraws)).unwrap();
        pipeline_worst = pipeline_worst.max(
            a.predictions
                .value()
                .permute_rows(&perm)
                .max_abs_diff(&b.predictions.value()),
        );
    }
    outcome(
        encoder_worst < 1e-9 && pipeline_worst < 1e-9,
        format!("50 pairs: encoder {encoder_worst:.1e}, pipeline {pipeline_worst:.1e} (tolerance 1e-9)"),
    )
}

fn gumbel_statistics() -> Outcome {
    let mut rng = Rng::new(51);
    let mut counts = [0usize; 4];
    for _ in 0..20000 {
        let tape = Tape::new();
        let y = gumbel_softmax(tape.constant(Tensor::zeros(1, 4)), 1.0, true, &mut rng)
            .unwrap()
            .value();
        counts[y.argmax_row(0)] += 1;
    }
    let freq: Vec<f64> = counts.iter().map(|&c| c as f64 / 20000.0).collect();
    let dev = freq.iter().map(|f| (f - 0.25).abs()).fold(0.0, f64::max);
    let soft = gumbel_soft_sample(&Tensor::row_vector(&[2f64.ln(), 0.0]), &Tensor::zeros(1, 2), 1.0).unwrap();
    let err = (soft.get(0, 0) - 2.0 / 3.0)
        .abs()
        .max((soft.get(0, 1) - 1.0 / 3.0).abs());
    outcome(
        dev <= 0.02 && err <= 1e-9,
        format!("frequencies {freq:.4?} (max deviation {dev:.4} ≤ 0.02); soft (ln 2, 0) error {err:.1e} ≤ 1e-9"),
    )
}

fn outbreak_walkthrough() -> Outcome {
    let steps = square_outbreak().unwrap();
    let sizes: Vec<[usize; 2]> = steps.iter().map(|s| s.cluster_sizes).collect();
    outcome(
        sizes == [[3, 1], [1, 3], [4, 0]],
        format!("cluster sizes {sizes:?}, expected [[3, 1], [1, 3], [4, 0]]"),
    )
}

fn brute_force(kind: BaselineKind, history: &[f64], d: usize, window: usize) -> Vec<f64> {
    let mut total = 0.0;
    let take = match kind {
        BaselineKind::Avg => history.len(),
        BaselineKind::LastDay => 1,
        BaselineKind::AvgWindow => window,
    };
    for x in &history[history.len() - take..] {
        total += x;
    }
    vec![total / take as f64; d]
}

fn baseline_exactness() -> Outcome {
    let mut rng = Rng::new(61);
    let mut mismatches = 0;
    for _ in 0..300 {
        let len = 1 + rng.below(60);
        let history: Vec<f64> = (0..len).map(|_| rng.uniform(0.0, 500.0).round()).collect();
        let d = 1 + rng.below(14);
        let window = 1 + rng.below(len);
        for kind in [BaselineKind::Avg, BaselineKind::LastDay, BaselineKind::AvgWindow] {
            let ours = baseline_forecast(kind, &history, d, window).unwrap();
            mismatches += usize::from(ours != brute_force(kind, &history, d, window));
        }
    }
    outcome(
        mismatches == 0,
        format!("{mismatches}/900 forecasts differ from the brute-force oracle"),
    )
}

fn determinism() -> Outcome {
    let ds = synthetic_chickenpox(3).unwrap();
    let mut cfg = TrainConfig::chickenpox(PathBuf::new(), PathBuf::new());
    cfg.epochs = 3;
    cfg.mgn.message_dim = 6;
    cfg.mgn.mp_layers = 2;
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        run_experiment(&ds, &cfg, &[0, 1], Some(d.path())).unwrap();
    }
    let files = [
        "summary.json",
        "metrics.tsv",
        "seed_0/checkpoint.json",
        "seed_0/loss.tsv",
        "seed_0/selections.tsv",
        "seed_1/checkpoint.json",
    ];
    let differing: Vec<&str> = files
        .iter()
        .copied()
        .filter(|f| std::fs::read(dirs[0].path().join(f)).unwrap() != std::fs::read(dirs[1].path().join(f)).unwrap())
        .collect();
    outcome(
        differing.is_empty(),
        format!("{} files compared, differing: {differing:?}", files.len()),
    )
}

fn mean_seconds(r: &MetricsReport) -> f64 {
    r.wall_clock_seconds.iter().sum::<f64>() / r.wall_clock_seconds.len() as f64
}

fn chickenpox() -> Outcome {
    let Some(dir) = std::env::var_os("TMGNN_CHICKENPOX_DIR") else {
        return outcome(false, "TMGNN_CHICKENPOX_DIR not set; the county data is required");
    };
    let dir = Path::new(&dir);
    let ds = match import_chickenpox(
        &dir.join("hungary_county_edges.csv"),
        &dir.join("hungary_chickenpox.csv"),
    ) {
        Ok(ds) => ds,
        Err(e) => return outcome(false, format!("import failed: {e}")),
    };
    let cfg = TrainConfig::chickenpox(PathBuf::new(), PathBuf::new());
    let report = run_experiment(&ds, &cfg, &[0, 1, 2], None).unwrap();
    let secs = mean_seconds(&report);
    outcome(
        report.mse.mean <= 1.10 && secs < 900.0,
        format!("MSE {} ≤ 1.10 over 3 seeds; {secs:.0}s per seed (< 900s)", report.mse),
    )
}

fn mobility_substitute(ds: &TemporalGraphDataset, d: usize) -> (MetricsReport, f64, f64) {
    let cfg = TrainConfig::mobility(ds.n(), d, PathBuf::new(), PathBuf::new());
    let report = run_experiment(ds, &cfg, &[0, 1, 2], None).unwrap();
    let base = |k: BaselineKind| report.baselines.iter().find(|b| b.kind == k).unwrap().mae;
    let (avg, last) = (base(BaselineKind::Avg), base(BaselineKind::LastDay));
    (report, avg, last)
}

fn mobility() -> Outcome {
    let ds = synthetic_mobility(SyntheticMobility::default()).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for d in [3, 7, 14] {
        let (report, avg, last) = mobility_substitute(&ds, d);
        let ok = report.mae.mean < avg && report.mae.mean < last;
        pass &= ok;
        parts.push(format!(
            "d={d}: MAE {:.3} vs AVG {avg:.3}, LAST_DAY {last:.3} [{}]",
            report.mae.mean,
            if ok { "ok" } else { "not beaten" }
        ));
    }
    outcome(
        pass,
        format!("synthetic 30 regions × 120 days, 3 seeds; {}", parts.join("; ")),
    )
}

fn england() -> Option<Outcome> {
    let dir = std::env::var_os("TMGNN_ENGLAND_DIR")?;
    let ds = match import_mobility(Path::new(&dir), MobilityOptions::default()) {
        Ok(ds) => ds,
        Err(e) => return Some(outcome(false, format!("import failed: {e}"))),
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for (d, target) in [(3, 6.26), (7, 6.55), (14, 6.80)] {
        let (report, _, _) = mobility_substitute(&ds, d);
        let rel = (report.mae.mean - target).abs() / target;
        pass &= rel <= 0.25;
        parts.push(format!(
            "d={d}: MAE {:.3} vs {target} ({:.0}%)",
            report.mae.mean,
            100.0 * rel
        ));
    }
    Some(outcome(pass, format!("within 25%: {}", parts.join("; "))))
}

#[test]
fn acceptance() {
    let criteria: Vec<(&str, Gate, fn() -> Outcome)> = vec![
        ("gradient correctness", Gate::Asserted, gradients),
        ("coarsening oracle", Gate::Asserted, coarsening_oracle),
        ("equivariance", Gate::Asserted, equivariance),
        ("gumbel statistics", Gate::Asserted, gumbel_statistics),
        ("square outbreak walkthrough", Gate::Asserted, outbreak_walkthrough),
        ("baseline exactness", Gate::Asserted, baseline_exactness),
        ("determinism", Gate::Asserted, determinism),
        ("chickenpox MSE", Gate::Reported, chickenpox),
        ("mobility forecasting", Gate::Reported, mobility),
    ];
    let mut asserted_failures = Vec::new();
    for (name, gate, run) in criteria {
        let start = Instant::now();
        let o = run();
        println!(
            "{} {name}: {} ({:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
        if !o.pass && matches!(gate, Gate::Asserted) {
            asserted_failures.push(name);
        }
    }
    if let Some(o) = england() {
        println!("{} england MAE: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    assert!(asserted_failures.is_empty(), "failed: {asserted_failures:?}");
}
