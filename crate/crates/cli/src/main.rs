use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;

use tmgnn::data::{
    import_chickenpox, import_mobility, load_canonical, make_windows, split, synthetic_chickenpox, synthetic_mobility,
    GapPolicy, MobilityOptions, SplitSpec, SyntheticMobility, WindowSpec,
};
use tmgnn::graphcore::LaplacianKind;
use tmgnn::harness::{
    evaluate_baseline, evaluate_mae, evaluate_mse, inspect_hierarchy, prepare, render_report, run_experiment,
    BaselineKind, Checkpoint, LossKind, TrainConfig,
};
use tmgnn::mgn::AssignMode;
use tmgnn::numerics::Activation;
use tmgnn::resattn::Contraction;
use tmgnn::temporal::CellKind;
use tmgnn::Error;

#[derive(Parser)]
#[command(
    name = "tmgnn",
    version,
    about = "Temporal multiresolution graph networks for case forecasting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ImportKind {
    /// `<edges.csv> <series.csv>`
    Chickenpox,
    /// `<dir>` with labels.csv and graphs/
    Mobility,
    /// No raw input; seeded 30-region, 120-day diffusion.
    SyntheticMobility,
    /// No raw input; seeded 20-county, 522-week series.
    SyntheticChickenpox,
}

#[derive(Subcommand)]
enum Command {
    /// Convert raw files into a canonical dataset.
    ImportData {
        kind: ImportKind,
        raw: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        /// Reuse the previous day's mobility for missing days.
        #[arg(long)]
        carry_forward: bool,
        /// Labels are cumulative totals.
        #[arg(long)]
        cumulative: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train one model per seed and write checkpoints and reports.
    Train {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Score a checkpoint on the test split of a dataset.
    Evaluate {
        #[arg(short = 'm', long)]
        model: PathBuf,
        #[arg(short, long)]
        dataset: PathBuf,
        #[arg(long)]
        horizon: usize,
    },
    /// Raw-scale MAE of a statistical baseline on the test split.
    Baseline {
        /// avg, last_day or avg_window
        kind: String,
        #[arg(short, long)]
        dataset: PathBuf,
        #[arg(long)]
        horizon: usize,
        #[arg(long, default_value_t = 7)]
        window: usize,
        #[arg(long, default_value_t = 7)]
        lags: usize,
        #[arg(long, default_value_t = 0.8)]
        train_fraction: f64,
    },
    /// Print the eval-mode hierarchy at one timestep.
    InspectHierarchy {
        #[arg(short = 'm', long)]
        model: PathBuf,
        #[arg(short, long)]
        dataset: PathBuf,
        /// 0-based timestep.
        #[arg(short, long)]
        timestep: usize,
    },
    /// Summarize a training output directory.
    Report {
        #[arg(short, long)]
        input: PathBuf,
    },
}

fn enum_arg<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_"))).map_err(|e| e.to_string())
}

/// One flag per config field.
#[derive(clap::Args, Default)]
struct Overrides {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    lags: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    seq_len: Option<usize>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long, value_parser = enum_arg::<AssignMode>)]
    train_assign: Option<AssignMode>,
    #[arg(long)]
    heads: Option<usize>,
    #[arg(long, value_parser = enum_arg::<Contraction>)]
    contraction: Option<Contraction>,
    #[arg(long, value_parser = enum_arg::<CellKind>)]
    cell: Option<CellKind>,
    #[arg(long)]
    hidden_dim: Option<usize>,
    /// Comma-separated, level 1 first, input size last.
    #[arg(long, value_delimiter = ',')]
    cluster_sizes: Option<Vec<usize>>,
    #[arg(long)]
    message_dim: Option<usize>,
    #[arg(long)]
    mp_layers: Option<usize>,
    #[arg(long, value_parser = enum_arg::<Activation>)]
    activation: Option<Activation>,
    #[arg(long, value_parser = enum_arg::<LaplacianKind>)]
    laplacian: Option<LaplacianKind>,
    #[arg(long)]
    self_loops: Option<bool>,
    #[arg(long)]
    cluster_layers: Option<usize>,
    #[arg(long, value_parser = enum_arg::<LossKind>)]
    loss: Option<LossKind>,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    eval_last: Option<usize>,
    #[arg(long)]
    avg_window: Option<usize>,
    #[arg(long)]
    dataset: Option<PathBuf>,
}

impl Overrides {
    fn apply(self, cfg: &mut TrainConfig) {
        macro_rules! set {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = self.$field { $target = v; })*
            };
        }
        set! {
            epochs => cfg.epochs,
            learning_rate => cfg.learning_rate,
            seed => cfg.seed,
            seeds => cfg.seeds,
            lags => cfg.lags,
            horizon => cfg.horizon,
            seq_len => cfg.seq_len,
            temperature => cfg.temperature,
            train_assign => cfg.train_assign,
            heads => cfg.heads,
            contraction => cfg.contraction,
            cell => cfg.cell,
            cluster_sizes => cfg.mgn.cluster_sizes,
            message_dim => cfg.mgn.message_dim,
            mp_layers => cfg.mgn.mp_layers,
            activation => cfg.mgn.activation,
            laplacian => cfg.mgn.laplacian,
            self_loops => cfg.mgn.self_loops,
            cluster_layers => cfg.mgn.cluster_layers,
            loss => cfg.loss,
            train_fraction => cfg.train_fraction,
            batch_size => cfg.batch_size,
            avg_window => cfg.avg_window,
            dataset => cfg.dataset,
        }
        if let Some(h) = self.hidden_dim {
            cfg.hidden_dim = Some(h);
        }
        if let Some(k) = self.eval_last {
            cfg.eval_last = Some(k);
        }
    }
}

fn import(
    kind: ImportKind,
    raw: &[PathBuf],
    output: &Path,
    carry_forward: bool,
    cumulative: bool,
    seed: u64,
) -> tmgnn::Result<()> {
    let want = |n: usize| {
        if raw.len() == n {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "this kind takes {n} raw path(s), got {}",
                raw.len()
            )))
        }
    };
    let ds = match kind {
        ImportKind::Chickenpox => {
            want(2)?;
            import_chickenpox(&raw[0], &raw[1])?
        }
        ImportKind::Mobility => {
            want(1)?;
            let opts = MobilityOptions {
                gaps: if carry_forward {
                    GapPolicy::CarryForward
                } else {
                    GapPolicy::Reject
                },
                cumulative_labels: cumulative,
            };
            import_mobility(&raw[0], opts)?
        }
        ImportKind::SyntheticMobility => {
            want(0)?;
            synthetic_mobility(SyntheticMobility {
                seed,
                ..Default::default()
            })?
        }
        ImportKind::SyntheticChickenpox => {
            want(0)?;
            synthetic_chickenpox(seed)?
        }
    };
    ds.save(output)?;
    let edges = ds
        .static_edge_count()
        .map_or("per-timestep".to_string(), |e| e.to_string());
    println!(
        "wrote {}: {} nodes, {} timesteps, edges {edges}",
        output.display(),
        ds.n(),
        ds.len()
    );
    Ok(())
}

fn run(cli: Cli) -> tmgnn::Result<()> {
    match cli.command {
        Command::ImportData {
            kind,
            raw,
            output,
            carry_forward,
            cumulative,
            seed,
        } => import(kind, &raw, &output, carry_forward, cumulative, seed),
        Command::Train {
            config,
            output,
            overrides,
        } => {
            let mut cfg = TrainConfig::load(&config)?;
            overrides.apply(&mut cfg);
            cfg.output_dir = output.clone();
            cfg.validate()?;
            let ds = load_canonical(&cfg.dataset)?;
            let report = run_experiment(&ds, &cfg, &cfg.run_seeds(), Some(&output))?;
            print!("{}", report.render());
            Ok(())
        }
        Command::Evaluate {
            model,
            dataset,
            horizon,
        } => {
            let ck = Checkpoint::load(&model)?;
            if horizon == 0 || horizon > ck.model.outputs {
                return Err(Error::Config(format!(
                    "checkpoint forecasts {} step(s); --horizon {horizon} is out of range",
                    ck.model.outputs
                )));
            }
            let ds = load_canonical(&dataset)?;
            let prepared = prepare(&ds, &ck.train)?;
            let net = ck.to_model()?;
            let mse = evaluate_mse(&net, &prepared.test, ck.train.eval_last)?;
            let mae = evaluate_mae(&net, &prepared.test, &ck.standardizer, horizon)?;
            println!("metric\tvalue\nmse\t{mse}\nmae\t{mae}");
            Ok(())
        }
        Command::Baseline {
            kind,
            dataset,
            horizon,
            window,
            lags,
            train_fraction,
        } => {
            let kind: BaselineKind = kind.parse()?;
            let ds = load_canonical(&dataset)?;
            let samples = make_windows(&ds.cases, WindowSpec::new(lags, horizon))?;
            let parts = split(samples, SplitSpec::chronological(train_fraction), horizon)?;
            let anchors: Vec<usize> = parts.test.iter().map(|s| s.anchor).collect();
            let mae = evaluate_baseline(&ds, kind, &anchors, horizon, window)?;
            println!(
                "baseline\thorizon\ttest_samples\tmae\n{kind}\t{horizon}\t{}\t{mae}",
                anchors.len()
            );
            Ok(())
        }
        Command::InspectHierarchy {
            model,
            dataset,
            timestep,
        } => {
            let ck = Checkpoint::load(&model)?;
            let ds = load_canonical(&dataset)?;
            print!("{}", inspect_hierarchy(&ck, &ds, timestep)?);
            Ok(())
        }
        Command::Report { input } => {
            print!("{}", render_report(&input)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
