use std::process::{Command, Output};

fn qpump(args: &[&str], workers: Option<usize>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qpump"));
    cmd.args(args).env_remove("QPUMP_WORKERS");
    if let Some(n) = workers {
        cmd.env("QPUMP_WORKERS", n.to_string());
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn body(o: &Output) -> String {
    stdout(o).lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

fn summary(o: &Output, name: &str) -> f64 {
    let prefix = format!("# {name} = ");
    let line = stdout(o)
        .lines()
        .find(|l| l.starts_with(&prefix))
        .unwrap_or_else(|| panic!("no summary `{name}` in\n{}", stdout(o)))
        .to_string();
    line[prefix.len()..].parse().unwrap()
}

fn config_file(name: &str, text: &str) -> String {
    let path = std::env::temp_dir().join(format!("qpump-cli-test-{}-{name}.toml", std::process::id()));
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn steady_state_matches_gibbs_at_common_temperature() {
    let o = qpump(&["steady", "--at", "1.0,0.5"], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(summary(&o, "gibbs_residual") < 1e-10);
    assert!((summary(&o, "trace") - 1.0).abs() < 1e-12);
}

#[test]
fn steady_state_at_zero_field_is_maximally_mixed() {
    let o = qpump(&["steady", "--at", "0,0"], None);
    assert_eq!(o.status.code(), Some(0));
    let b = body(&o);
    for row in b.lines().skip(1) {
        let population: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
        assert!((population - 0.25).abs() < 1e-10, "{row}");
    }
}

#[test]
fn header_carries_version_hash_and_units() {
    let o = qpump(&["steady"], None);
    let text = stdout(&o);
    assert!(text.starts_with("# qpump: "));
    let hash = text.lines().find(|l| l.starts_with("# config-sha256: ")).unwrap();
    assert_eq!(hash.len(), "# config-sha256: ".len() + 64);
    assert!(body(&o).lines().next().unwrap().contains("energy [k_BT]"));
}

#[test]
fn json_output_is_parseable() {
    let o = qpump(&["steady", "--format", "json"], None);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
    assert!(v["summary"]["gibbs_residual"].as_f64().unwrap() < 1e-10);
}

#[test]
fn benchmark_balances_hold_and_pumps_cancel() {
    let o = qpump(&["--preset", "fig1", "benchmark", "--nodes", "16"], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(summary(&o, "max_residual") < 1e-6);
    let (l, r) = (summary(&o, "pumped_L [k_BT]"), summary(&o, "pumped_R [k_BT]"));
    assert!((l + r).abs() < 1e-9 * l.abs());
    assert_eq!(body(&o).lines().count(), 17);
}

#[test]
fn sweep_bodies_do_not_depend_on_worker_count() {
    let args = ["--preset", "fig3a", "sweep", "--grid", "6x5"];
    let one = qpump(&args, Some(1));
    let four = qpump(&args, Some(4));
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(body(&one), body(&four));
    assert_eq!(body(&one).lines().count(), 31);
}

/// The summed first-order kernel is a gradient at common temperature, so the
/// rotors cancel up to the second-order error of the grid derivative.
#[test]
fn rotors_of_the_two_baths_cancel_cellwise() {
    let path = config_file(
        "rotor",
        "[sweep]\nx_range = [-1.5, 1.5]\nz_range = [-1.5, 1.5]\ncell_centred = true\n",
    );
    let values = |n: usize, field: &str| -> Vec<f64> {
        let grid = format!("{n}x{n}");
        let o = qpump(&["--config", &path, "sweep", "--grid", &grid, "--field", field], None);
        assert_eq!(o.status.code(), Some(0));
        body(&o).lines().skip(1).map(|r| r.split(',').nth(2).unwrap().parse().unwrap()).collect()
    };
    let worst = |n: usize| {
        let (l, r) = (values(n, "rotor_L"), values(n, "rotor_R"));
        let peak = l.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        l.iter().zip(&r).fold(0.0f64, |m, (a, b)| m.max((a + b).abs())) / peak
    };
    let (coarse, fine) = (worst(11), worst(21));
    assert!(fine < 1e-2, "relative cancellation error {fine:e}");
    assert!(coarse / fine > 3.0, "error {coarse:e} -> {fine:e} is not second order");
}

#[test]
fn oracle_check_agrees_for_one_qubit_and_for_product_states() {
    let one = config_file("one", "[system]\nn_qubits = 1\n");
    for args in [vec!["--config", one.as_str(), "oracle-check", "--nodes", "6"], vec!["oracle-check", "--nodes", "6"]] {
        let o = qpump(&args, None);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(summary(&o, "max_relative_deviation") < 1e-8);
    }
}

#[test]
fn cycle_reports_sector_segments() {
    let o = qpump(&["--preset", "fig3a", "cycle", "--first-order-only"], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for k in 0..3 {
        summary(&o, &format!("segment{k}_Q_L [k_BT]"));
    }
    assert!(summary(&o, "pump_sum_residual [k_BT]").abs() < 1e-9);
}

#[test]
fn merit_scan_emits_one_row_per_combination() {
    let path = config_file(
        "scan",
        "[protocol]\nkind = \"circle\"\n[scan]\nexchange = [0.0, 1.0]\nasymmetry = [2.0]\nb0 = [1.0]\n",
    );
    let o = qpump(&["--config", &path, "merit-scan"], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: Vec<Vec<f64>> = body(&o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert!((r[5] - r[3] * r[3] / r[4]).abs() < 1e-10 * r[5]);
    }
    assert!(rows[0][5] > rows[1][5]);
}

#[test]
fn unknown_config_key_exits_with_code_two() {
    let path = config_file("typo", "[system]\nexchnage = 1.0\n");
    let o = qpump(&["--config", &path, "steady"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("exchnage"));
}

#[test]
fn malformed_arguments_exit_with_code_two() {
    for args in [
        vec!["sweep", "--grid", "81"],
        vec!["sweep", "--field", "rotor_Q", "--grid", "3x3"],
        vec!["--preset", "fig9", "steady"],
        vec!["--preset", "fig5", "oracle-check"],
        vec!["frobnicate"],
    ] {
        assert_eq!(qpump(&args, None).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn empty_sweep_range_is_a_configuration_error() {
    let path = config_file("range", "[sweep]\nx_range = [1.0, 1.0]\n");
    assert_eq!(qpump(&["--config", &path, "sweep"], None).status.code(), Some(2));
}

#[test]
fn unconverged_quadrature_exits_with_code_four() {
    let path = config_file("quad", "[quadrature]\nnodes = 4\nmax_doublings = 0\ntolerance = 1e-14\n");
    let o = qpump(&["--config", &path, "cycle", "--first-order-only"], None);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn every_preset_parses_and_shows_its_configuration() {
    for name in ["fig1", "fig3a", "fig3b", "fig4", "fig5", "fig6", "fig7"] {
        let o = qpump(&["--preset", name, "show-config"], None);
        assert_eq!(o.status.code(), Some(0), "{name}");
        assert!(stdout(&o).contains("[system]"));
    }
}
