//! End-to-end checks of the `pdns` binary: subcommands, config handling,
//! output files, and exit codes (0 ok, 2 config error, 1 runtime error).

use std::path::Path;
use std::process::Command;

use tempfile::TempDir;

fn pdns() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pdns"))
}

fn write_toy_data(dir: &Path) -> std::path::PathBuf {
    let lines: Vec<String> = (0..30)
        .flat_map(|u| (0..15).map(move |t| format!("u{u}\ti{}\t{t}", (u * 7 + t * 3) % 90)))
        .collect();
    let path = dir.join("toy.tsv");
    std::fs::write(&path, lines.join("\n")).unwrap();
    path
}

#[test]
fn train_writes_run_artifacts() {
    let dir = TempDir::new().unwrap();
    let data = write_toy_data(dir.path());
    let out = dir.path().join("run");
    let status = pdns()
        .args(["train", "--dataset"])
        .arg(&data)
        .args(["--set", "epochs=3", "--set", "k=10", "--set", "batch_size=64", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    for f in ["config.echo", "curve.csv", "summary.txt", "final.ckpt", "best.ckpt"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let curve = std::fs::read_to_string(out.join("curve.csv")).unwrap();
    assert!(curve.starts_with("epoch,train_loss,val_recall,val_ndcg,test_recall,test_ndcg"));
    assert_eq!(curve.lines().count(), 4); // header + 3 epochs
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = TempDir::new().unwrap();
    let data = write_toy_data(dir.path());
    let conf = dir.path().join("exp.conf");
    std::fs::write(
        &conf,
        format!(
            "dataset = {}\nepochs = 2\nk = 10\nbatch_size = 64\nseed = 5\n",
            data.display()
        ),
    )
    .unwrap();
    let out = dir.path().join("run");
    let status = pdns()
        .args(["train", "--config"])
        .arg(&conf)
        .args(["--set", "epochs=1", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let echo = std::fs::read_to_string(out.join("config.echo")).unwrap();
    assert!(echo.contains("epochs = 1"), "override not echoed:\n{echo}");
    assert!(echo.contains("seed = 5"), "file value lost:\n{echo}");
}

#[test]
fn config_errors_exit_2_runtime_errors_exit_1() {
    let dir = TempDir::new().unwrap();
    let data = write_toy_data(dir.path());

    // Unknown key: config error.
    let s = pdns()
        .args(["train", "--dataset"])
        .arg(&data)
        .args(["--set", "no_such_key=1"])
        .arg("--out")
        .arg(dir.path().join("x"))
        .status()
        .unwrap();
    assert_eq!(s.code(), Some(2));

    // Invalid value: config error.
    let s = pdns()
        .args(["train", "--dataset"])
        .arg(&data)
        .args(["--set", "alpha=1.5"])
        .arg("--out")
        .arg(dir.path().join("y"))
        .status()
        .unwrap();
    assert_eq!(s.code(), Some(2));

    // Missing dataset file: runtime error.
    let s = pdns()
        .args(["train", "--dataset", "/nonexistent/data.tsv", "--out"])
        .arg(dir.path().join("z"))
        .status()
        .unwrap();
    assert_eq!(s.code(), Some(1));
}

#[test]
fn split_exports_four_files() {
    let dir = TempDir::new().unwrap();
    let data = write_toy_data(dir.path());
    let out = dir.path().join("splits");
    let s = pdns()
        .args(["split", "--dataset"])
        .arg(&data)
        .args(["--mode", "fn-synthetic", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(s.code(), Some(0));
    let mut total = 0usize;
    for f in ["train.tsv", "val.tsv", "test.tsv", "fn.tsv"] {
        let text = std::fs::read_to_string(out.join(f)).unwrap();
        for line in text.lines() {
            assert_eq!(line.split('\t').count(), 2, "bad row {line:?} in {f}");
        }
        total += text.lines().count();
    }
    assert_eq!(total, 30 * 15); // every ingested pair lands in exactly one file
}

#[test]
fn evaluate_reads_checkpoint() {
    let dir = TempDir::new().unwrap();
    let data = write_toy_data(dir.path());
    let out = dir.path().join("run");
    assert!(pdns()
        .args(["train", "--dataset"])
        .arg(&data)
        .args(["--set", "epochs=2", "--set", "k=10", "--set", "batch_size=64", "--out"])
        .arg(&out)
        .status()
        .unwrap()
        .success());
    let output = pdns()
        .args(["evaluate", "--checkpoint"])
        .arg(out.join("best.ckpt"))
        .arg("--dataset")
        .arg(&data)
        .args(["--k", "10"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("test_recall@10 = "), "{stdout}");
}

#[test]
fn sweep_collates_rows() {
    let dir = TempDir::new().unwrap();
    let data = write_toy_data(dir.path());
    let out = dir.path().join("sweep");
    let output = pdns()
        .args(["sweep", "--dataset"])
        .arg(&data)
        .args([
            "--set", "epochs=2", "--set", "k=10", "--set", "batch_size=64",
            "--axis", "h", "--values", "1,4",
        ])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let sweep = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 3, "{sweep}"); // header + 2 values
}

#[test]
fn simulate_fn_requires_fn_split() {
    let dir = TempDir::new().unwrap();
    let data = write_toy_data(dir.path());
    // Temporal split: config error.
    let s = pdns()
        .args(["simulate-fn", "--dataset"])
        .arg(&data)
        .args(["--set", "epochs=2", "--out"])
        .arg(dir.path().join("bad"))
        .status()
        .unwrap();
    assert_eq!(s.code(), Some(2));

    let out = dir.path().join("fn");
    let s = pdns()
        .args(["simulate-fn", "--dataset"])
        .arg(&data)
        .args([
            "--set", "split=fn-synthetic", "--set", "epochs=3", "--set", "k=10",
            "--set", "batch_size=64", "--set", "fn_c=0.4", "--set", "first_disclosure=1",
        ])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(s.code(), Some(0));
    assert!(out.join("disclosures.csv").is_file());
}
