use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn epinet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epinet"))
        .args(args)
        .env("EPINET_LOG", "error")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

struct Record {
    mode: String,
    key1: String,
    val1: Option<f64>,
    key2: String,
    val2: Option<f64>,
    quantity: String,
    value: f64,
}

fn records(dir: &Path) -> Vec<Record> {
    let mut reader = csv::Reader::from_path(dir.join("results.csv")).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["mode", "key1", "val1", "key2", "val2", "quantity", "value"]
    );
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            let num = |s: &str| (!s.is_empty()).then(|| s.parse::<f64>().unwrap());
            Record {
                mode: r[0].to_string(),
                key1: r[1].to_string(),
                val1: num(&r[2]),
                key2: r[3].to_string(),
                val2: num(&r[4]),
                quantity: r[5].to_string(),
                value: r[6].parse().unwrap(),
            }
        })
        .collect()
}

fn quantity<'a>(rows: &'a [Record], name: &str) -> Vec<&'a Record> {
    rows.iter().filter(|r| r.quantity == name).collect()
}

#[test]
fn equilibrium_example_prints_reference_values() {
    let out = epinet(&["ce", "--beta", "0.1", "--delta", "0.3", "--rho", "0.05", "--utility", "sqrt", "--c0", "0.1"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("a_ce = 4.94"), "{text}");
    assert!(text.contains("theta_ce = 0.393"), "{text}");
    assert!(text.contains("residual"), "{text}");
}

#[test]
fn threshold_action_is_extinct() {
    let out = epinet(&["steady", "--a", "3"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("a = 3: theta = 0 (extinct)"), "{}", stdout(&out));
}

#[test]
fn fixed_protection_example() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = epinet(&["protect", "--mode", "fixed", "--a", "4.47", "--gamma", "0.3", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("eta* = 0.67"), "{}", stdout(&out));
    let rows = records(&out_dir);
    let eta = quantity(&rows, "eta_star")[0].value;
    assert!((eta - 0.67).abs() < 5e-3);
}

#[test]
fn round_trip_reproduces_results_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    let out = epinet(&["sweep", "--axis", "delta=0.1:0.5:5", "--axis", "rho=0.02,0.1", "--over", "ce", "--out", first.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = first.join("manifest.json");
    let out = epinet(&["--config", manifest.to_str().unwrap(), "--out", second.to_str().unwrap(), "--jobs", "1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read(first.join("results.csv")).unwrap(), fs::read(second.join("results.csv")).unwrap());
}

#[test]
fn seeded_simulation_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    let args = ["abm", "--a", "6", "--agents", "300", "--replicates", "3", "--horizon", "20", "--seed", "7"];
    let out = epinet(&[&args[..], &["--out", first.to_str().unwrap()]].concat());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(first.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seeds"], serde_json::json!([7]));
    assert_eq!(manifest["config"]["abm"]["agents"], 300);
    let out = epinet(&["--config", first.join("manifest.json").to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    for file in ["results.csv", "trace.csv"] {
        assert_eq!(fs::read(first.join(file)).unwrap(), fs::read(second.join(file)).unwrap(), "{file}");
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.json");
    fs::write(&file, r#"{"mode": "ce", "beta": 0.2, "delta": 0.3}"#).unwrap();
    let from_file = stdout(&epinet(&["--config", file.to_str().unwrap()]));
    let overridden = stdout(&epinet(&["--config", file.to_str().unwrap(), "--beta", "0.1"]));
    assert!(!from_file.contains("a_ce = 4.94"), "{from_file}");
    assert!(overridden.contains("a_ce = 4.94"), "{overridden}");
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.json");
    fs::write(&file, r#"{"mode": "ce", "betta": 0.1}"#).unwrap();
    assert_eq!(code(&epinet(&["--config", file.to_str().unwrap()])), 2);
    fs::write(&file, "{ not json").unwrap();
    assert_eq!(code(&epinet(&["--config", file.to_str().unwrap()])), 2);
    assert_eq!(code(&epinet(&["ce", "--beta", "-1"])), 2);
    assert_eq!(code(&epinet(&["ce", "--no-such-flag"])), 2);
    assert_eq!(code(&epinet(&[])), 2);
    assert_eq!(code(&epinet(&["ce", "--scenario", "fig1"])), 2);
}

#[test]
fn more_than_two_axes_are_rejected() {
    let out = epinet(&["sweep", "--over", "ce", "--axis", "delta=0.2,0.3", "--axis", "beta=0.1", "--axis", "rho=0.05"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("at most 2 axes"));
    assert_eq!(code(&epinet(&["sweep", "--over", "ce", "--axis", "gamma=0.1"])), 2);
}

#[test]
fn precondition_failures_exit_with_three() {
    let out = epinet(&["protect", "--mode", "strategic", "--utility", "sqrt"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("u''' < 0"));
    // the peak action sits below the threshold, so there is no endemic equilibrium
    assert_eq!(code(&epinet(&["ce", "--c0", "0.4", "--delta", "0.5"])), 3);
}

#[test]
fn unwritable_output_exits_with_five() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = epinet(&["ce", "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(code(&out), 5);
}

#[test]
fn equilibrium_links_rise_with_curing_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out = epinet(&["sweep", "--over", "ce", "--axis", "delta=0.1:0.5:9", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let rows = records(dir.path());
    let actions: Vec<f64> = quantity(&rows, "a_ce").iter().map(|r| r.value).collect();
    assert_eq!(actions.len(), 9);
    assert!(actions.windows(2).all(|w| w[1] > w[0]), "{actions:?}");
    assert!(rows.iter().all(|r| r.value.is_finite() && r.key1 == "delta" && r.mode == "ce"));
}

#[test]
fn steady_sweep_has_kink_at_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let out = epinet(&["sweep", "--over", "steady", "--axis", "a=0:6:61", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let rows = records(dir.path());
    for r in quantity(&rows, "theta") {
        let a = r.val1.unwrap();
        if a <= 3.0 {
            assert_eq!(r.value, 0.0, "a = {a}");
        } else {
            assert!((r.value - (1.0 - 3.0 / a)).abs() < 1e-12);
        }
    }
}

#[test]
fn strategic_cost_curves_show_three_regimes() {
    let dir = tempfile::tempdir().unwrap();
    let out = epinet(&[
        "sweep", "--over", "protect", "--mode", "strategic", "--utility", "cubic", "--shape", "1,1e-5",
        "--axis", "gamma=0.5,0.9,1.2", "--axis", "eta=0:1:51", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = records(dir.path());
    let argmin = |gamma: f64| {
        quantity(&rows, "curve_cost")
            .into_iter()
            .filter(|r| r.val1 == Some(gamma))
            .min_by(|a, b| a.value.total_cmp(&b.value))
            .map(|r| r.val2.unwrap())
            .unwrap()
    };
    assert!(argmin(0.5) <= 0.04);
    let mid = argmin(0.9);
    assert!(mid > 0.04 && mid < 1.0, "{mid}");
    assert_eq!(argmin(1.2), 1.0);
    assert!(rows.iter().all(|r| r.key2 == "eta"));
}

#[test]
fn fixed_protection_scenario_writes_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out = epinet(&["--scenario", "fig3", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let rows = records(dir.path());
    assert!(rows.iter().all(|r| r.mode == "fig3" && r.value.is_finite()));
    let optima = quantity(&rows, "eta_star");
    assert!(optima.iter().filter(|r| r.val2.unwrap() < 1.0).all(|r| (r.value - 0.3 / 0.447).abs() < 1e-12));
    assert!(optima.iter().filter(|r| r.val2.unwrap() > 1.0).all(|r| r.value == 1.0));
    let manifest = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    assert!(manifest.contains("\"scenario\": \"fig3\""));
}

#[test]
fn hetero_types_follow_curing_rates() {
    let out = epinet(&["hetero", "--weights", "0.3,0.7", "--deltas", "0.2,0.45"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let actions: Vec<f64> = text
        .lines()
        .filter(|l| l.starts_with("type"))
        .map(|l| l.split("): a = ").nth(1).unwrap().split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(actions.len(), 2);
    assert!(actions[0] < actions[1]);
    assert_eq!(code(&epinet(&["hetero", "--weights", "0.5,0.5", "--deltas", "0.2"])), 2);
}

#[test]
fn dynamics_exports_sampled_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let out = epinet(&["dynamics", "--theta0", "0.05,0.9", "--samples", "11", "--epsilon", "0.01", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = records(dir.path());
    assert_eq!(quantity(&rows, "theta").len(), 22);
    assert_eq!(quantity(&rows, "action").len(), 22);
    for r in quantity(&rows, "crossing_time") {
        let bound = |q: &str| quantity(&rows, q).iter().find(|b| b.val1 == r.val1).unwrap().value;
        assert!(bound("bound_lower") < r.value && r.value < bound("bound_upper"));
    }
}
