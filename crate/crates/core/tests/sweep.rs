use std::fs;

use notfire::dynamics::OptimizerRegistry;
use notfire::grid::parse_text;
use notfire::runner::{run_sweep, validate_and_load, ExperimentConfig};
use notfire::Error;

fn write_config(dir: &std::path::Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("sweep.cfg");
    fs::write(
        &path,
        format!("{body}\nout = {}\n", dir.join("out").display()),
    )
    .unwrap();
    path
}

#[test]
fn single_cell_sweep_writes_one_row_and_all_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(
        tmp.path(),
        "edge = 16\nm = 1\nc = 0\nv = 10\nseeds = 3\nfragility_trials = 4\nfines = 0, 0.05",
    );
    let config = validate_and_load(&path).unwrap();
    let report = run_sweep(&config, &OptimizerRegistry::default()).unwrap();
    assert_eq!(report.outcomes.len(), 1);

    let out = tmp.path().join("out");
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].ends_with(",W_p0,W_p0.05"));
    assert!(lines[1].starts_with("1,0,10,3,"));

    let run = out.join("runs/1_0_10_3");
    for f in [
        "grid.txt",
        "grid.pgm",
        "metrics.json",
        "ccdf.csv",
        "trace.csv",
    ] {
        assert!(run.join(f).is_file(), "missing {f}");
    }
    let grid = parse_text(&fs::read_to_string(run.join("grid.txt")).unwrap()).unwrap();
    assert_eq!(grid, report.outcomes[0].run.config);
    assert!(fs::read(run.join("grid.pgm"))
        .unwrap()
        .starts_with(b"P5\n16 16\n255\n"));

    let metrics: serde_json::Value =
        serde_json::from_slice(&fs::read(run.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["cell"]["seed"], 3);
    assert_eq!(metrics["manifest"]["params"]["seed"], 3);
    assert_eq!(metrics["fragility"]["shifted"].as_array().unwrap().len(), 4);
    assert_eq!(
        metrics["fines"][0]["welfare"],
        metrics["metrics"]["welfare"]
    );

    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["edge"], 16);
    assert_eq!(manifest["runs"][0]["dir"], "runs/1_0_10_3");

    let trace = fs::read_to_string(run.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 2);
}

#[test]
fn rerun_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(
        tmp.path(),
        "edge = 8\nm = 4, 16\nc = 0, 0.5\nv = 1\nseeds = 0, 1\nfragility_trials = 2\nworkers = 3",
    );
    let config = validate_and_load(&path).unwrap();
    run_sweep(&config, &OptimizerRegistry::default()).unwrap();
    let first = fs::read(tmp.path().join("out/summary.csv")).unwrap();
    let first_manifest = fs::read(tmp.path().join("out/manifest.json")).unwrap();
    run_sweep(&config, &OptimizerRegistry::default()).unwrap();
    assert_eq!(first, fs::read(tmp.path().join("out/summary.csv")).unwrap());
    assert_eq!(
        first_manifest,
        fs::read(tmp.path().join("out/manifest.json")).unwrap()
    );

    let summary = String::from_utf8(first).unwrap();
    let keys: Vec<String> = summary
        .lines()
        .skip(1)
        .map(|l| l.split(',').take(4).collect::<Vec<_>>().join(","))
        .collect();
    assert_eq!(
        keys,
        [
            "4,0,1,0",
            "4,0,1,1",
            "4,0.5,1,0",
            "4,0.5,1,1",
            "16,0,1,0",
            "16,0,1,1",
            "16,0.5,1,0",
            "16,0.5,1,1"
        ]
    );
}

#[test]
fn default_grid_at_edge_32_has_one_row_per_parameter_combination() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), "fragility_trials = 1");
    let config = validate_and_load(&path).unwrap();
    assert_eq!(config.edge, 32);
    let report = run_sweep(&config, &OptimizerRegistry::default()).unwrap();
    // six feasible player counts at edge 32, five costs, four spreads
    assert_eq!(report.outcomes.len(), 6 * 5 * 4);
    let summary = fs::read_to_string(tmp.path().join("out/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 120);
}

#[test]
fn bad_configs_are_rejected_before_running() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), "m = 3");
    assert!(matches!(validate_and_load(&path), Err(Error::Config(_))));
    let path = write_config(tmp.path(), "edge = 32\nm = 16384");
    assert!(validate_and_load(&path).is_err());
    let path = write_config(tmp.path(), "speed = 11");
    assert!(matches!(
        validate_and_load(&path),
        Err(Error::Parse { line: 1, .. })
    ));
    assert!(matches!(
        validate_and_load(&tmp.path().join("missing.cfg")),
        Err(Error::Io { .. })
    ));

    let mut config = ExperimentConfig::for_edge(4);
    config.optimizer = "annealing".into();
    config.out = tmp.path().join("never");
    assert!(matches!(
        run_sweep(&config, &OptimizerRegistry::default()),
        Err(Error::UnknownOptimizer(_))
    ));
}
