//! End-to-end checks of the binary: wiring between subcommands, the exit
//! code contract, and the environment overrides.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::json;
use tempfile::TempDir;

fn fragnet() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fragnet"));
    cmd.env_remove("FRAGNET_OUT_DIR");
    cmd.env_remove("FRAGNET_THREADS");
    cmd
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn fragnet");
    assert!(
        out.status.success(),
        "command failed: {}\n{}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(cmd: &mut Command) -> i32 {
    cmd.output()
        .expect("spawn fragnet")
        .status
        .code()
        .expect("exit code")
}

fn write(path: &Path, contents: &str) {
    fs::write(path, contents).expect("write fixture");
}

/// A 48-node plant with two well-separated halves, each split in two.
fn planted_spec_json() -> serde_json::Value {
    let left = json!({"left": 0.8, "center": 0.1, "right": 0.1, "identity": [0.7, 0.3]});
    let right = json!({"left": 0.1, "center": 0.1, "right": 0.8, "identity": [0.2, 0.8]});
    json!({
        "root_sizes": [24, 24],
        "branching": [[[0.5, 0.5], [0.5, 0.5]]],
        "p_in": 0.9,
        "p_between": [0.02, 0.3],
        "categories": ["women", "religious"],
        "labels": [left, left, right, right],
        "seed": 11
    })
}

fn synth_fixture(dir: &Path) -> PathBuf {
    let spec = dir.join("plant.json");
    write(&spec, &planted_spec_json().to_string());
    let out = dir.join("fixture");
    run_ok(
        fragnet()
            .args(["synth", "--spec"])
            .arg(&spec)
            .arg("--out-dir")
            .arg(&out),
    );
    out
}

fn detect_args<'a>(
    cmd: &'a mut Command,
    graph: &Path,
    scan: &Path,
    hierarchy: &Path,
) -> &'a mut Command {
    cmd.args([
        "detect",
        "--min-scale",
        "-0.5",
        "--max-scale",
        "1.5",
        "--n-scale",
        "24",
        "--n-tries",
        "6",
        "--window",
        "3",
        "--min-basin",
        "2",
        "--seed",
        "7",
    ])
    .arg("--graph")
    .arg(graph)
    .arg("--out-scan")
    .arg(scan)
    .arg("--out-hierarchy")
    .arg(hierarchy);
    cmd
}

fn run_config_json(fixture: &Path, out_dir: &Path) -> serde_json::Value {
    json!({
        "graph": fixture.join("graph.json"),
        "attributes": fixture.join("attributes.csv"),
        "categories": ["women", "religious"],
        "min_scale": -0.5,
        "max_scale": 1.5,
        "n_scale": 24,
        "n_tries": 6,
        "seed": 7,
        "window": 3,
        "min_basin": 2,
        "mc_samples": 2000,
        "out_dir": out_dir
    })
}

#[test]
fn stage_subcommands_chain_into_the_same_hierarchy_as_run() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let fixture = synth_fixture(dir);

    let scan = dir.join("scan.json");
    let hierarchy = dir.join("hierarchy.json");
    run_ok(detect_args(
        &mut fragnet(),
        &fixture.join("graph.json"),
        &scan,
        &hierarchy,
    ));

    let run_dir = dir.join("run");
    let config = dir.join("run.json");
    write(&config, &run_config_json(&fixture, &run_dir).to_string());
    run_ok(fragnet().args(["run", "--config"]).arg(&config));

    // Same graph, seed, and parameters: the standalone stage and the
    // orchestrated run must agree byte for byte.
    assert_eq!(
        fs::read(&hierarchy).unwrap(),
        fs::read(run_dir.join("hierarchy.json")).unwrap()
    );
    assert_eq!(
        fs::read(&scan).unwrap(),
        fs::read(run_dir.join("scan.json")).unwrap()
    );

    let frag = dir.join("frag.json");
    run_ok(
        fragnet()
            .args(["fragment", "--categories", "women,religious"])
            .arg("--hierarchy")
            .arg(&hierarchy)
            .arg("--attributes")
            .arg(fixture.join("attributes.csv"))
            .arg("--out")
            .arg(&frag),
    );
    assert_eq!(
        fs::read(&frag).unwrap(),
        fs::read(run_dir.join("fragmentation.json")).unwrap()
    );

    let sim = dir.join("sim.json");
    run_ok(
        fragnet()
            .args(["similarity", "--categories", "women,religious"])
            .arg("--hierarchy")
            .arg(&hierarchy)
            .arg("--attributes")
            .arg(fixture.join("attributes.csv"))
            .arg("--out")
            .arg(&sim),
    );
    assert_eq!(
        fs::read(&sim).unwrap(),
        fs::read(run_dir.join("similarity.json")).unwrap()
    );

    let corr = dir.join("corr.json");
    run_ok(
        fragnet()
            .args([
                "correlate",
                "--categories",
                "women,religious",
                "--mc-samples",
                "2000",
                "--seed",
                "7",
            ])
            .arg("--hierarchy")
            .arg(&hierarchy)
            .arg("--attributes")
            .arg(fixture.join("attributes.csv"))
            .arg("--out")
            .arg(&corr),
    );
    assert_eq!(
        fs::read(&corr).unwrap(),
        fs::read(run_dir.join("correlation.json")).unwrap()
    );
}

#[test]
fn report_bundles_a_run_directory() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let fixture = synth_fixture(dir);
    let run_dir = dir.join("run");
    let config = dir.join("run.json");
    write(&config, &run_config_json(&fixture, &run_dir).to_string());
    run_ok(fragnet().args(["run", "--config"]).arg(&config));

    run_ok(fragnet().args(["report", "--dir"]).arg(&run_dir));
    let summary = run_dir.join("summary.json");
    assert!(summary.exists());

    let elsewhere = dir.join("copy.json");
    run_ok(
        fragnet()
            .args(["report", "--dir"])
            .arg(&run_dir)
            .arg("--out")
            .arg(&elsewhere),
    );
    assert_eq!(fs::read(&summary).unwrap(), fs::read(&elsewhere).unwrap());
}

#[test]
fn out_dir_flag_beats_the_environment_override() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let fixture = synth_fixture(dir);
    let config = dir.join("run.json");
    write(
        &config,
        &run_config_json(&fixture, &dir.join("configured")).to_string(),
    );

    let via_env = dir.join("via-env");
    run_ok(
        fragnet()
            .env("FRAGNET_OUT_DIR", &via_env)
            .args(["run", "--config"])
            .arg(&config),
    );
    assert!(via_env.join("manifest.json").exists());
    assert!(!dir.join("configured").exists());

    let via_flag = dir.join("via-flag");
    run_ok(
        fragnet()
            .env("FRAGNET_OUT_DIR", dir.join("ignored"))
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out-dir")
            .arg(&via_flag),
    );
    assert!(via_flag.join("manifest.json").exists());
    assert!(!dir.join("ignored").exists());
}

#[test]
fn project_builds_the_co_follow_graph() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let edges = dir.join("edges.tsv");
    write(&edges, "u1\ta\nu1\tb\nu2\ta\nu2\tb\nu3\tb\nu3\tc\n");
    let out = dir.join("graph.json");
    run_ok(
        fragnet()
            .args(["project", "--edges"])
            .arg(&edges)
            .arg("--out")
            .arg(&out),
    );

    let graph: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(graph["num_users"], json!(3));
    assert_eq!(graph["node_ids"], json!(["a", "b", "c"]));
    // a-b is co-followed by u1 and u2, b-c by u3 alone.
    assert_eq!(graph["edges"], json!([[0, 1, 2], [1, 2, 1]]));
}

#[test]
fn missing_and_malformed_inputs_exit_with_code_2() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    assert_eq!(
        exit_code(
            fragnet()
                .args(["run", "--config"])
                .arg(dir.join("absent.json"))
        ),
        2
    );

    let garbled = dir.join("garbled.json");
    write(&garbled, "not json");
    assert_eq!(
        exit_code(
            fragnet()
                .args(["detect", "--out-scan"])
                .arg(dir.join("s.json"))
                .arg("--out-hierarchy")
                .arg(dir.join("h.json"))
                .arg("--graph")
                .arg(&garbled)
        ),
        2
    );

    // A graph artifact where a hierarchy is expected fails the schema check.
    let fixture = synth_fixture(dir);
    assert_eq!(
        exit_code(
            fragnet()
                .args(["fragment", "--out"])
                .arg(dir.join("f.json"))
                .arg("--hierarchy")
                .arg(fixture.join("graph.json"))
        ),
        2
    );
}

#[test]
fn single_level_hierarchy_makes_fragment_exit_with_code_3() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let hierarchy = dir.join("flat.json");
    write(
        &hierarchy,
        &json!({
            "schema_version": "fragnet/hierarchy/1",
            "node_ids": ["a", "b", "c", "d"],
            "fallback": false,
            "levels": [{
                "scale": 1.0,
                "num_communities": 2,
                "singleton_fraction": 0.0,
                "assignment": [0, 0, 1, 1]
            }],
            "transitions": []
        })
        .to_string(),
    );
    let out = fragnet()
        .args(["fragment", "--out"])
        .arg(dir.join("f.json"))
        .arg("--hierarchy")
        .arg(&hierarchy)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("no transitions"),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn thread_override_must_be_a_positive_count() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let fixture = synth_fixture(dir);

    assert_eq!(
        exit_code(
            fragnet()
                .env("FRAGNET_THREADS", "many")
                .args(["fragment", "--out"])
                .arg(dir.join("f.json"))
                .arg("--hierarchy")
                .arg(fixture.join("hierarchy.json"))
        ),
        2
    );

    run_ok(
        fragnet()
            .env("FRAGNET_THREADS", "1")
            .args(["fragment", "--out"])
            .arg(dir.join("f.json"))
            .arg("--hierarchy")
            .arg(fixture.join("hierarchy.json")),
    );
}

#[test]
fn synth_emits_ground_truth_matching_its_own_hierarchy() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let fixture = synth_fixture(dir);

    for name in [
        "graph.json",
        "hierarchy.json",
        "attributes.csv",
        "ground_truth_fragmentation.json",
    ] {
        assert!(fixture.join(name).exists(), "missing {name}");
    }

    // The planted hierarchy halves split in half: every transition doubles,
    // so the analytic score is exactly 2 everywhere.
    let truth: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(fixture.join("ground_truth_fragmentation.json")).unwrap(),
    )
    .unwrap();
    let overall = truth["report"]["overall_mean"].as_f64().unwrap();
    assert!((overall - 2.0).abs() < 1e-9, "overall {overall}");
}
