use std::path::Path;
use std::process::{Command, Output};

fn tmgnn(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tmgnn"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

const TINY: &str = r#"
epochs = 3
learning_rate = 0.01
seed = 4
lags = 4
horizon = 2
heads = 2
dataset = "pox.json"
output_dir = "ignored"

[mgn]
cluster_sizes = [1, 4, 20]
message_dim = 4
mp_layers = 1
self_loops = true
"#;

#[test]
fn help_and_bad_flags() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&tmgnn(&["--help"], dir.path())), 0);
    assert_eq!(code(&tmgnn(&["train", "--no-such-flag"], dir.path())), 1);
    assert_eq!(
        code(&tmgnn(
            &["baseline", "median", "-d", "x.json", "--horizon", "1"],
            dir.path()
        )),
        1
    );
}

#[test]
fn import_train_evaluate_inspect_report() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let o = tmgnn(&["import-data", "synthetic-chickenpox", "-o", "pox.json"], p);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("20 nodes, 522 timesteps, edges 61"));

    std::fs::write(p.join("tiny.toml"), TINY).unwrap();
    let o = tmgnn(
        &[
            "train",
            "-c",
            "tiny.toml",
            "-o",
            "run",
            "--epochs",
            "2",
            "--seeds",
            "4,5",
        ],
        p,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("horizon 2"));
    for s in ["seed_4", "seed_5"] {
        let loss = std::fs::read_to_string(p.join("run").join(s).join("loss.tsv")).unwrap();
        assert_eq!(loss.lines().count(), 3, "header plus one line per epoch");
        assert!(p.join("run").join(s).join("checkpoint.json").exists());
    }
    for f in ["metrics.tsv", "summary.json", "timing.tsv"] {
        assert!(p.join("run").join(f).exists(), "{f}");
    }

    let ck = "run/seed_4/checkpoint.json";
    let o = tmgnn(&["evaluate", "-m", ck, "-d", "pox.json", "--horizon", "2"], p);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("metric\tvalue\nmse\t"));
    assert_eq!(
        code(&tmgnn(&["evaluate", "-m", ck, "-d", "pox.json", "--horizon", "3"], p)),
        1
    );

    let o = tmgnn(&["inspect-hierarchy", "-m", ck, "-d", "pox.json", "-t", "10"], p);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["timestep"], 10);
    assert_eq!(doc["level_sizes"], serde_json::json!([1, 4, 20]));
    assert_eq!(
        code(&tmgnn(&["inspect-hierarchy", "-m", ck, "-d", "pox.json", "-t", "1"], p)),
        1
    );

    let o = tmgnn(&["report", "-i", "run"], p);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("LAST_DAY"));

    let o = tmgnn(
        &[
            "baseline",
            "last-day",
            "-d",
            "pox.json",
            "--horizon",
            "2",
            "--lags",
            "4",
        ],
        p,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("LAST_DAY\t2\t"));
}

#[test]
fn validation_and_runtime_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("bad.toml"), "epochs = \"many\"\n").unwrap();
    assert_eq!(code(&tmgnn(&["train", "-c", "bad.toml", "-o", "run"], p)), 1);

    std::fs::write(p.join("tiny.toml"), TINY).unwrap();
    assert_eq!(
        code(&tmgnn(&["train", "-c", "tiny.toml", "-o", "run", "--heads", "9"], p)),
        1
    );
    // Missing dataset file is an I/O failure.
    assert_eq!(code(&tmgnn(&["train", "-c", "tiny.toml", "-o", "run"], p)), 2);
    assert_eq!(code(&tmgnn(&["report", "-i", "nowhere"], p)), 2);
    assert_eq!(
        code(&tmgnn(
            &["import-data", "chickenpox", "only-one.csv", "-o", "x.json"],
            p
        )),
        1
    );
}

#[test]
fn shipped_configs_match_presets() {
    use tmgnn::harness::TrainConfig;
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let pox = TrainConfig::load(&dir.join("chickenpox.toml")).unwrap();
    pox.validate().unwrap();
    assert_eq!(pox, TrainConfig::chickenpox(pox.dataset.clone(), pox.output_dir.clone()));
    let mob = TrainConfig::load(&dir.join("synthetic-mobility.toml")).unwrap();
    mob.validate().unwrap();
    assert_eq!(mob, TrainConfig::mobility(30, 7, mob.dataset.clone(), mob.output_dir.clone()));
}
