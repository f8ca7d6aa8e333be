use std::fs;
use std::process::{Command, Output};

fn qmon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmon"))
        .args(args)
        .env_remove("QMON_DIM_CAP")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn solve_phases_json() {
    let out = qmon(&["solve-phases", "--d", "4", "--eta", "0.5", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(report["residual_norm"].as_f64().unwrap() < 1e-10);
    assert_eq!(report["converged"], true);
    assert_eq!(report["phases"].as_array().unwrap().len(), 4);
}

#[test]
fn solve_phases_eta_one_is_immediate() {
    let out = qmon(&["solve-phases", "--d", "5", "--eta", "1.0"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(report["phases"]
        .as_array()
        .unwrap()
        .iter()
        .all(|p| p.as_f64() == Some(0.0)));
    assert_eq!(report["restarts"], 0);
}

#[test]
fn validation_errors_exit_one() {
    assert_eq!(
        qmon(&["solve-phases", "--d", "4", "--eta", "1.5"]).status.code(),
        Some(1)
    );
    assert_eq!(
        qmon(&["solve-phases", "--d", "1", "--eta", "0.5"]).status.code(),
        Some(1)
    );
    assert_eq!(qmon(&["solve-phases", "--d", "4"]).status.code(), Some(1));
    assert_eq!(qmon(&["solve-phases", "--bogus"]).status.code(), Some(1));
    let bad_state = qmon(&[
        "convergence",
        "--d",
        "3",
        "--theta",
        "1",
        "--n-max",
        "3",
        "--state",
        "ghz",
    ]);
    assert_eq!(bad_state.status.code(), Some(1));
    let zero_n = qmon(&["convergence", "--d", "3", "--theta", "1", "--n-max", "0"]);
    assert_eq!(zero_n.status.code(), Some(1));
    let neg_n = qmon(&["convergence", "--d", "3", "--theta", "1", "--n-max", "-2"]);
    assert_eq!(neg_n.status.code(), Some(1));
    assert_eq!(qmon(&["qubit-baseline", "--thetas", ""]).status.code(), Some(1));
}

#[test]
fn solver_not_found_exits_two() {
    // a single start with a tolerance no start can reach
    let out = qmon(&[
        "solve-phases",
        "--d",
        "6",
        "--eta",
        "0.05",
        "--tol",
        "1e-300",
        "--max-restarts",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["converged"], false);
}

#[test]
fn convergence_perfect_record() {
    let out = qmon(&[
        "convergence",
        "--d",
        "3",
        "--theta",
        "2.0943951023931953",
        "--n-max",
        "4",
        "--seed",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = stdout(&out);
    assert!(csv.starts_with("n,trace_distance_to_dephased,irreality_bits,effective_epsilon\n"));
    let dist = column(&csv, "trace_distance_to_dephased");
    assert_eq!(dist.len(), 5);
    assert!(dist[1] < 1e-10);
    assert!(dist.windows(2).all(|w| w[1] <= w[0] + 1e-12));
}

#[test]
fn convergence_without_noise_is_flat() {
    let out = qmon(&[
        "convergence",
        "--d",
        "3",
        "--eta",
        "1",
        "--n-max",
        "5",
        "--state",
        "plus-state",
    ]);
    let dist = column(&stdout(&out), "trace_distance_to_dephased");
    assert!(dist.iter().all(|x| (x - dist[0]).abs() < 1e-14));
    assert!(dist[0] > 0.5);
}

#[test]
fn convergence_damping() {
    let out = qmon(&[
        "convergence",
        "--d",
        "3",
        "--eta",
        "0.5",
        "--n-max",
        "10",
        "--state",
        "mixed-random(2)",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = stdout(&out);
    let dist = column(&csv, "trace_distance_to_dephased");
    assert!(dist[10] <= 3.0 * 0.5f64.powi(10));
    let eps = column(&csv, "effective_epsilon");
    assert!((eps[10] - (1.0 - 0.5f64.powi(10))).abs() < 1e-11);
}

#[test]
fn output_is_deterministic() {
    let args = [
        "convergence",
        "--d",
        "4",
        "--eta",
        "0.3",
        "--n-max",
        "6",
        "--seed",
        "11",
    ];
    assert_eq!(qmon(&args).stdout, qmon(&args).stdout);
    let args = ["qubit-baseline", "--points", "7", "--seed", "2"];
    assert_eq!(qmon(&args).stdout, qmon(&args).stdout);
    let other = qmon(&[
        "convergence",
        "--d",
        "4",
        "--eta",
        "0.3",
        "--n-max",
        "6",
        "--seed",
        "12",
    ]);
    assert_ne!(
        qmon(&[
            "convergence",
            "--d",
            "4",
            "--eta",
            "0.3",
            "--n-max",
            "6",
            "--seed",
            "11"
        ])
        .stdout,
        other.stdout
    );
}

#[test]
fn fragments_backends_agree() {
    let base = ["fragments", "--d", "3", "--eta", "0.5", "--n", "4", "--seed", "5"];
    let dense = qmon(&[&base[..], &["--backend", "dense"]].concat());
    let structured = qmon(&[&base[..], &["--backend", "structured"]].concat());
    assert_eq!(dense.status.code(), Some(0));
    let a = column(&stdout(&dense), "mutual_info_bits");
    let b = column(&stdout(&structured), "mutual_info_bits");
    assert_eq!(a.len(), 5);
    assert_eq!(a[0], 0.0);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-9);
    }
    assert!(a.windows(2).all(|w| w[1] >= w[0] - 1e-9));
}

#[test]
fn fragments_dimension_cap() {
    let args = [
        "fragments",
        "--d",
        "3",
        "--theta",
        "1",
        "--n",
        "6",
        "--m-max",
        "2",
        "--backend",
        "dense",
    ];
    let out = Command::new(env!("CARGO_BIN_EXE_qmon"))
        .args(args)
        .env("QMON_DIM_CAP", "100")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let auto = Command::new(env!("CARGO_BIN_EXE_qmon"))
        .args(["fragments", "--d", "3", "--theta", "1", "--n", "6", "--m-max", "2"])
        .env("QMON_DIM_CAP", "100")
        .output()
        .unwrap();
    assert_eq!(auto.status.code(), Some(0));
}

#[test]
fn fragments_with_explicit_phases_and_json() {
    let out = qmon(&[
        "fragments",
        "--d",
        "2",
        "--phases=-0.7,0.7",
        "--n",
        "2",
        "--format",
        "json",
        "--state",
        "plus-state",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let prof: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(prof["m_values"].as_array().unwrap().len(), 3);
    let eps = prof["effective_epsilon"].as_f64().unwrap();
    assert!((eps - (1.0 - 0.7f64.cos().powi(2))).abs() < 1e-12);
}

#[test]
fn qubit_baseline_rows() {
    let out = qmon(&["qubit-baseline", "--thetas", "0,0.7853981633974483", "--states", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = stdout(&out);
    assert!(csv.starts_with("theta,eps_cmaybe,eps_generalT,channel_distance\n"));
    let cm = column(&csv, "eps_cmaybe");
    let gt = column(&csv, "eps_generalT");
    let dist = column(&csv, "channel_distance");
    assert_eq!((cm[0], gt[0]), (1.0, 0.0));
    assert!((cm[1] - gt[1]).abs() < 1e-11);
    assert!(dist.iter().all(|d| *d < 1e-10));
}

#[test]
fn qubit_baseline_fifty_points_quickly() {
    let start = std::time::Instant::now();
    let out = qmon(&["qubit-baseline", "--points", "50"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(start.elapsed().as_secs_f64() < 10.0);
    assert_eq!(stdout(&out).lines().count(), 51);
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let out_path = dir.path().join("out.csv");
    fs::write(
        &cfg,
        r#"{"d": 3, "eta": 0.5, "n_max": 3, "state": "pure-random", "seed": 4}"#,
    )
    .unwrap();
    let out = qmon(&[
        "convergence",
        "--config",
        cfg.to_str().unwrap(),
        "--n-max",
        "6",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let csv = fs::read_to_string(&out_path).unwrap();
    assert_eq!(csv.lines().count(), 8);

    fs::write(&cfg, r#"{"d": 3, "eta": 0.5, "n_max": 3, "colour": "red"}"#).unwrap();
    let out = qmon(&["convergence", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn floats_have_twelve_significant_digits() {
    let out = qmon(&["qubit-baseline", "--thetas", "0.3", "--states", "1"]);
    let line = stdout(&out).lines().nth(1).unwrap().to_string();
    for field in line.split(',') {
        let mantissa = field.trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.replace('.', "").len(), 12, "{field}");
    }
}

#[test]
fn state_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rho.json");
    fs::write(&path, "[[[0.5,0],[0.5,0]],[[0.5,0],[0.5,0]]]").unwrap();
    let spec = format!("file:{}", path.display());
    let out = qmon(&[
        "convergence",
        "--d",
        "2",
        "--theta",
        "0.5",
        "--n-max",
        "2",
        "--state",
        &spec,
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let irr = column(&stdout(&out), "irreality_bits");
    assert!((irr[0] - 1.0).abs() < 1e-10);

    let wrong = qmon(&[
        "convergence",
        "--d",
        "3",
        "--theta",
        "0.5",
        "--n-max",
        "2",
        "--state",
        &spec,
    ]);
    assert_eq!(wrong.status.code(), Some(1));
}
