use std::fs;
use std::path::Path;
use std::process::Command as Process;

use clap::Parser;
use randlab_cli::{run, Cli, Outcome};
use randlab_core::bits::read_pair;
use randlab_core::BitString;
use serde_json::Value;
use tempfile::TempDir;

fn exec(args: &[&str], out: &Path) -> anyhow::Result<Outcome> {
    let mut argv = vec!["randlab"];
    argv.extend_from_slice(args);
    let out = out.to_str().unwrap();
    argv.extend_from_slice(&["--out", out]);
    run(&Cli::try_parse_from(argv)?.command)
}

fn summary(dir: &Path, key: &str) -> Value {
    let m: Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    m["summary"][key].clone()
}

fn assert_identical_dirs(a: &Path, b: &Path) {
    let mut names: Vec<_> = fs::read_dir(a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.iter().any(|n| n == "manifest.json"));
    for name in names {
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name:?}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let cases: &[&[&str]] = &[
        &["session", "--n", "5000", "--alpha2", "0.3", "--seed", "9"],
        &["signal", "--blocks", "6", "--block-len", "500", "--basis-c2", "0.2"],
        &["transmit", "--p-n", "0.5", "--p-omega", "0.3", "--message-len", "200", "--block-len", "128"],
        &["transmit", "--p-n", "0.5", "--message-len", "50", "--block-len", "256", "--policy", "haar"],
        &["capacity-sweep", "--grid", "5"],
        &["complexity", "--n", "4096"],
        &["champernowne", "--n", "4096"],
        &["omega", "--max-len", "13", "--budget", "1000"],
    ];
    for args in cases {
        let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
        assert!(exec(args, a.path()).unwrap().success(), "{args:?}");
        exec(args, b.path()).unwrap();
        assert_identical_dirs(a.path(), b.path());
    }
}

#[test]
fn one_bit_session() {
    let dir = TempDir::new().unwrap();
    exec(&["session", "--n", "1"], dir.path()).unwrap();
    let (bob, alice) = read_pair(fs::File::open(dir.path().join("session.bin")).unwrap()).unwrap();
    assert_eq!(bob.len(), 1);
    assert_eq!(bob, alice);
}

#[test]
fn session_frequency_tracks_alpha() {
    let dir = TempDir::new().unwrap();
    let outcome = exec(&["session", "--n", "1000000", "--alpha2", "0.7", "--seed", "3"], dir.path()).unwrap();
    assert!(outcome.success());
    let freq = summary(dir.path(), "alice_freq").as_f64().unwrap();
    let sigma = (0.7f64 * 0.3 / 1e6).sqrt();
    assert!((freq - 0.7).abs() <= 4.0 * sigma, "{freq}");
    let stats = fs::read_to_string(dir.path().join("stats.csv")).unwrap();
    assert!(stats.starts_with("n,alpha2,bob_freq,alice_freq,equal\n"));
    assert!(stats.trim_end().ends_with(",true"));
}

#[test]
fn invalid_input_exits_nonzero() {
    let dir = TempDir::new().unwrap();
    let bin = env!("CARGO_BIN_EXE_randlab");
    let status = Process::new(bin)
        .args(["session", "--n", "10", "--alpha2", "1.5", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let status = Process::new(bin)
        .args(["transmit", "--p-n", "1", "--block-len", "32", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let status = Process::new(bin)
        .args(["session", "--n", "10", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}

#[test]
fn capacity_single_point_and_diagonal() {
    let dir = TempDir::new().unwrap();
    exec(&["capacity-sweep", "--p0", "0", "--p1", "0"], dir.path()).unwrap();
    let mut rdr = csv::Reader::from_path(dir.path().join("capacity.csv")).unwrap();
    assert_eq!(
        rdr.headers().unwrap(),
        vec!["p0", "p1", "capacity_closed", "capacity_brute", "abs_diff", "optimal_prior"]
    );
    let row = rdr.records().next().unwrap().unwrap();
    assert_eq!(row[2].parse::<f64>().unwrap(), 1.0);

    let dir = TempDir::new().unwrap();
    assert!(exec(&["capacity-sweep", "--grid", "11"], dir.path()).unwrap().success());
    let mut diagonal = 0;
    for row in csv::Reader::from_path(dir.path().join("capacity.csv")).unwrap().records() {
        let row = row.unwrap();
        let (p0, p1): (f64, f64) = (row[0].parse().unwrap(), row[1].parse().unwrap());
        if (p0 + p1 - 1.0).abs() < 1e-9 {
            diagonal += 1;
            assert_eq!(row[2].parse::<f64>().unwrap(), 0.0);
        }
    }
    assert_eq!(diagonal, 11);
}

#[test]
fn transmit_examples() {
    let dir = TempDir::new().unwrap();
    let msg = dir.path().join("message.txt");
    fs::write(&msg, "0110 1001 0001 1110\n").unwrap();
    let out = dir.path().join("noiseless");
    exec(&["transmit", "--p-n", "1", "--message", msg.to_str().unwrap(), "--block-len", "128"], &out).unwrap();
    let received = BitString::from_ascii(&fs::read_to_string(out.join("received.txt")).unwrap()).unwrap();
    assert_eq!(received, BitString::from_ascii("0110100100011110").unwrap());

    let out = dir.path().join("silent");
    exec(&["transmit", "--p-n", "0", "--message-len", "64", "--block-len", "64"], &out).unwrap();
    assert_eq!(summary(&out, "capacity_predicted").as_f64().unwrap(), 0.0);

    let out = dir.path().join("noisy");
    let outcome = exec(
        &["transmit", "--p-n", "0.2", "--p-omega", "0.5", "--message-len", "10000", "--block-len", "64"],
        &out,
    )
    .unwrap();
    assert!(outcome.success());
    let p0 = summary(&out, "p0_empirical").as_f64().unwrap();
    let se = summary(&out, "p0_std_error").as_f64().unwrap();
    assert!((p0 - 0.9).abs() <= 4.0 * se, "{p0}");
    let blocks = fs::read_to_string(out.join("blocks.csv")).unwrap();
    assert!(blocks.starts_with("block_index,bob_freq,alice_freq,verdict\n"));
    assert_eq!(blocks.lines().count(), 10_001);
}

#[test]
fn omega_reports() {
    let dir = TempDir::new().unwrap();
    exec(&["omega", "--max-len", "4"], dir.path()).unwrap();
    assert_eq!(summary(dir.path(), "omega_decimal"), "0.00000000000000000000");
    assert_eq!(fs::read_to_string(dir.path().join("ledger.txt")).unwrap(), "");

    let dir = TempDir::new().unwrap();
    assert!(exec(&["omega", "--max-len", "16", "--budget", "1000000"], dir.path()).unwrap().success());
    assert_eq!(
        fs::read_to_string(dir.path().join("omega.txt")).unwrap(),
        "1491/4096\n0.36401367187500000000\n"
    );
    assert_eq!(fs::read_to_string(dir.path().join("ledger.txt")).unwrap().lines().count(), 432);
    assert!(exec(&["omega", "--max-len", "29"], dir.path()).is_err());
}

#[test]
fn champernowne_and_complexity_from_file() {
    let dir = TempDir::new().unwrap();
    assert!(exec(&["champernowne", "--n", "65536"], dir.path()).unwrap().success());
    let text = fs::read_to_string(dir.path().join("champernowne.txt")).unwrap();
    assert!(text.starts_with("0100011011000"));

    let raw = dir.path().join("zeros.bin");
    fs::write(&raw, vec![0u8; 512]).unwrap();
    let out = dir.path().join("zeros");
    exec(&["complexity", "--input", raw.to_str().unwrap(), "--format", "raw", "--p", "0.5"], &out).unwrap();
    assert_eq!(summary(&out, "verdict"), "p_compressible");
    assert_eq!(summary(&out, "n"), 4096);
}
