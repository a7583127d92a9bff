//! End-to-end checks of the `sparsenet` binary: every subcommand runs
//! against real files in a temp directory.

use std::path::Path;
use std::process::Command;

fn sparsenet() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sparsenet"))
}

fn write_sweep_config(path: &Path) {
    std::fs::write(
        path,
        r#"
[dataset]
kind = "synthetic"
classes = 3
dim = 10
train_per_class = 40
test_per_class = 12
separation = 0.6

[network]
layer_sizes = [10, 8, 3]
learning_rate = 0.05
batch_size = 16
epochs = 2

[sweep]
constructions = ["regular-rotating", "fibonacci-rotating", "fully-connected"]
degrees = [2, 5]
repeats = 2
"#,
    )
    .unwrap();
}

#[test]
fn sweep_then_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.toml");
    write_sweep_config(&config);
    let out = dir.path().join("out");

    let run = sparsenet()
        .args(["sweep"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .args(["--workers", "2", "--base-seed", "9"])
        .output()
        .unwrap();
    assert!(
        run.status.success(),
        "sweep failed: {}",
        String::from_utf8_lossy(&run.stderr)
    );
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.contains("10 rows"), "{stdout}");
    assert!(out.join("results.csv").exists());
    assert!(out.join("timings.csv").exists());

    // rerunning a finished sweep is a no-op with identical bytes
    let before = std::fs::read(out.join("results.csv")).unwrap();
    let rerun = sparsenet()
        .args(["sweep"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .args(["--base-seed", "9"])
        .output()
        .unwrap();
    assert!(rerun.status.success());
    assert_eq!(before, std::fs::read(out.join("results.csv")).unwrap());

    let report = sparsenet()
        .args(["report"])
        .arg(out.join("results.csv"))
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(
        report.status.success(),
        "report failed: {}",
        String::from_utf8_lossy(&report.stderr)
    );
    for table in [
        "fig2_3_accuracy_vs_density.csv",
        "fig4_comparison.csv",
        "fig5_connectivity_scatter.csv",
        "fig6_weight_stats.csv",
        "correlations.csv",
    ] {
        assert!(out.join(table).exists(), "missing {table}");
    }
    let text = String::from_utf8_lossy(&report.stdout);
    assert!(text.contains("pearson") || text.contains("k="), "{text}");
}

#[test]
fn analyze_prints_spectral_row() {
    let dir = tempfile::tempdir().unwrap();
    let topo = dir.path().join("topo.txt");
    let t = sparsenet::topology::build(
        sparsenet::topology::ConstructionSpec::new(
            sparsenet::topology::ConstructionKind::RegularRotating,
            2,
        ),
        4,
        4,
    )
    .unwrap();
    t.write_edge_list_path(&topo).unwrap();

    let csv_out = dir.path().join("spectral.csv");
    let run = sparsenet()
        .args(["analyze"])
        .arg(&topo)
        .arg("--out")
        .arg(&csv_out)
        .output()
        .unwrap();
    assert!(
        run.status.success(),
        "analyze failed: {}",
        String::from_utf8_lossy(&run.stderr)
    );
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.contains("construction,n,m,k,seed,component_count,lambda2"));
    assert!(stdout.contains("regular-rotating,4,4,2,-,"));
    let file = std::fs::read_to_string(&csv_out).unwrap();
    assert!(file.contains("regular-rotating,4,4,2,-,"));

    // malformed file fails with a nonzero exit
    std::fs::write(&topo, "not an edge list\n").unwrap();
    let run = sparsenet().args(["analyze"]).arg(&topo).output().unwrap();
    assert!(!run.status.success());
    assert!(String::from_utf8_lossy(&run.stderr).contains("error"));
}

#[test]
fn train_writes_checkpoint_and_record() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("train.toml");
    std::fs::write(
        &config,
        r#"
[dataset]
kind = "synthetic"
classes = 2
dim = 8
train_per_class = 40
test_per_class = 10
separation = 0.7

[network]
layer_sizes = [8, 6, 2]
epochs = 2
batch_size = 8
learning_rate = 0.05

[train]
constructions = ["long-short-rotating", "fully-connected"]
degrees = [3, 0]
seed = 21
checkpoint = "model.snnc"
record = "record.csv"
"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let run = sparsenet()
        .args(["train"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(
        run.status.success(),
        "train failed: {}",
        String::from_utf8_lossy(&run.stderr)
    );
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.contains("final accuracy"), "{stdout}");
    assert!(out.join("model.snnc").exists());
    assert!(out.join("record.csv").exists());

    let net = sparsenet::network::load_checkpoint(out.join("model.snnc")).unwrap();
    assert_eq!(net.config().layer_sizes, vec![8, 6, 2]);

    let record = std::fs::read_to_string(out.join("record.csv")).unwrap();
    assert!(record.starts_with("epoch,train_loss,test_accuracy\n0,,"));
    assert_eq!(record.lines().count(), 4);
}

#[test]
fn shipped_configs_parse() {
    use sparsenet::experiment::config::{load_sweep_spec, load_train_spec, Profile};
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "toml") {
            continue;
        }
        let text = std::fs::read_to_string(&path).unwrap();
        for profile in [Profile::Desk, Profile::Paper] {
            if text.contains("[sweep]") {
                load_sweep_spec(&path, profile, 42, 0)
                    .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            } else {
                load_train_spec(&path, profile, 42)
                    .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            }
        }
        seen += 1;
    }
    assert!(seen >= 6, "expected the shipped configs, found {seen}");
}

#[test]
fn bad_config_is_a_clean_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "[dataset]\nkind = \"warehouse\"\n").unwrap();
    let run = sparsenet().args(["sweep"]).arg(&config).output().unwrap();
    assert!(!run.status.success());
    let err = String::from_utf8_lossy(&run.stderr);
    assert!(err.starts_with("error:"), "{err}");
}
