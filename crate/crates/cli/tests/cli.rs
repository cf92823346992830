// SPDX-License-Identifier: Apache-2.0

use std::path::Path;
use std::process::{Command, Output};

fn orthrus(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orthrus")).current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const SMALL_CAMPAIGN: &str = r#"
modes = ["baseline", "full"]
seeds = [2]
phase2_iterations = 2
out_dir = "out"

[system]
n_init = 8
t_max = 3
pool_size = 32
n_trees = 16

[tech]
n_init = 16
i_max = 1

[tech.de]
s_pop = 16
n_gen = 4

[tech.mlp]
epochs = 80
"#;

#[test]
fn gen_writes_a_parseable_netlist() {
    let dir = tempfile::tempdir().unwrap();
    let out = orthrus(
        dir.path(),
        &["gen", "--ct", "dt", "--cpa", "bk", "--rows", "1", "--cols", "1", "--width", "4", "-o", "mac.json"],
    );
    ok(&out);
    let text = std::fs::read_to_string(dir.path().join("mac.json")).unwrap();
    let g = orthrus_core::netlist::parse_netlist(&text).unwrap();
    assert!(g.cell_count() > 0);
}

#[test]
fn bad_architecture_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = orthrus(dir.path(), &["gen", "--ct", "xx", "-o", "mac.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn system_analyze_and_tech_loop_chain() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(&orthrus(
        p,
        &["system-loop", "--budget", "3", "--n-init", "6", "--pool-size", "32", "--seed", "3", "-o", "run.jsonl"],
    ));
    let lines = orthrus_core::sysloop::read_archive(&std::fs::read_to_string(p.join("run.jsonl")).unwrap()).unwrap();
    assert_eq!(lines.len(), 9);
    assert!(lines[0].cell_data.starts_with("run.cells.jsonl#"));
    assert!(p.join("run.cells.jsonl").exists());

    ok(&orthrus(p, &["gen", "--rows", "1", "--cols", "1", "-o", "pe.json"]));
    ok(&orthrus(
        p,
        &[
            "analyze",
            "--netlist",
            "pe.json",
            "--archive",
            "run.jsonl",
            "-o",
            "analysis.json",
            "--patterns",
            "patterns.json",
        ],
    ));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(p.join("analysis.json")).unwrap()).unwrap();
    let d = &report["direction"];
    let (wd, wp) = (d["w_delay"].as_f64().unwrap(), d["w_power"].as_f64().unwrap());
    assert!((wd.hypot(wp) - 1.0).abs() < 1e-9);
    let selected = report["patterns"].as_array().unwrap().iter().filter(|p| p["selected"] == true).count();
    assert_eq!(selected, 2);

    std::fs::write(p.join("tech.toml"), "n_init = 12\ni_max = 1\n[de]\ns_pop = 12\nn_gen = 3\n[mlp]\nepochs = 50\n")
        .unwrap();
    ok(&orthrus(p, &["tech-loop", "--direction", "analysis.json", "--seed", "7", "--config", "tech.toml"]));
    let table = std::fs::read_to_string(p.join("candidates.csv")).unwrap();
    assert!(table.starts_with("phig_n,"));
    assert_eq!(table.lines().count(), 1 + 1 + 12 + 5);
    let lib = orthrus_core::netlist::CellLibrary::from_json(&std::fs::read_to_string(p.join("library.json")).unwrap());
    assert!(lib.is_ok());
}

#[test]
fn tech_loop_needs_a_direction() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(&orthrus(p, &["gen", "--rows", "1", "--cols", "1", "--width", "4", "-o", "pe.json"]));
    ok(&orthrus(p, &["analyze", "--netlist", "pe.json", "-o", "analysis.json"]));
    let out = orthrus(p, &["tech-loop", "--direction", "analysis.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_writes_artifacts_and_report_reads_them() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("campaign.toml"), SMALL_CAMPAIGN).unwrap();
    let stdout = ok(&orthrus(p, &["run", "--config", "campaign.toml"]));
    assert!(stdout.contains("median hypervolume"), "{stdout}");
    for f in ["run.jsonl", "cells.jsonl", "frontier.csv", "directions.json", "patterns.json", "report.json"] {
        assert!(p.join("out").join(f).exists(), "{f}");
    }
    let stdout = ok(&orthrus(p, &["report", "--runs", "out/run.jsonl", "--out-dir", "rep"]));
    assert!(stdout.contains("full vs baseline"), "{stdout}");
    assert!(stdout.contains("cosine series"), "{stdout}");
    assert!(p.join("rep/frontier.csv").exists());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("bad.toml"), "rounds = 0\n").unwrap();
    assert_eq!(orthrus(p, &["run", "--config", "bad.toml"]).status.code(), Some(2));
    assert_eq!(orthrus(p, &["run", "--config", "missing.toml"]).status.code(), Some(2));
}

#[test]
fn stage_failures_exit_with_three_and_keep_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("campaign.toml"), format!("{SMALL_CAMPAIGN}\n[analysis]\nk = 500\n")).unwrap();
    let out = orthrus(p, &["run", "--config", "campaign.toml"]);
    assert_eq!(out.status.code(), Some(3));
    let report = orthrus_core::campaign::read_report(&p.join("out/report.json")).unwrap();
    assert!(report.failed);
}

#[test]
fn report_needs_two_archives() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(&orthrus(p, &["system-loop", "--budget", "1", "--n-init", "4", "--pool-size", "8", "-o", "a.jsonl"]));
    assert_eq!(orthrus(p, &["report", "--runs", "a.jsonl"]).status.code(), Some(2));
    ok(&orthrus(
        p,
        &["system-loop", "--budget", "1", "--n-init", "4", "--pool-size", "8", "--seed", "1", "-o", "b.jsonl"],
    ));
    let stdout = ok(&orthrus(p, &["report", "--runs", "a.jsonl", "b.jsonl"]));
    assert!(stdout.contains("a.jsonl:system"), "{stdout}");
}
