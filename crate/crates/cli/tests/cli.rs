use std::path::Path;
use std::process::{Command, Output};

fn platoon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_platoon")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn summary(o: &Output) -> serde_json::Value {
    let text = stdout(o);
    let last = text.lines().last().expect("summary line");
    serde_json::from_str(last).expect("summary is JSON")
}

fn number(v: &serde_json::Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or_else(|| panic!("{key} missing in {v}"))
}

#[test]
fn eigs_symmetric_summary() {
    let o = platoon(&["eigs", "--n", "20", "--k0", "1", "--b0", "0.5", "--scenario", "I"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("l,re,im\n"));
    assert_eq!(text.lines().count(), 1 + 40 + 1);
    let s = summary(&o);
    assert_eq!(s["n"], 20);
    assert!((number(&s, "stability_margin") - 0.0496).abs() < 1e-4);
    assert!((number(&s, "least_stable_re") + number(&s, "stability_margin")).abs() < 1e-15);
}

#[test]
fn eigs_mistuned_summary() {
    let o = platoon(&["eigs", "--n", "20", "--scenario", "I", "--epsilon", "0.1", "--profile", "optimal"]);
    assert!(o.status.success());
    assert!((number(&summary(&o), "stability_margin") - 0.1281).abs() < 1e-3);
}

#[test]
fn invalid_platoon_size_is_a_usage_error() {
    let o = platoon(&["eigs", "--n", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n_vehicles must be ≥ 2"));
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(platoon(&["eigs", "--frobnicate"]).status.code(), Some(2));
    assert_eq!(platoon(&["eigs", "--scenario", "III"]).status.code(), Some(2));
    assert_eq!(platoon(&["eigs", "--epsilon", "1.5"]).status.code(), Some(2));
    assert_eq!(platoon(&["eigs", "--profile", "sine"]).status.code(), Some(2));
    assert_eq!(platoon(&["simulate", "--dt", "0"]).status.code(), Some(2));
    assert_eq!(platoon(&["nonsense"]).status.code(), Some(2));
    assert_eq!(platoon(&["eigs", "--config", "/nonexistent/config.json"]).status.code(), Some(2));
}

#[test]
fn output_is_deterministic() {
    let args = ["eigs", "--n", "30", "--scenario", "II", "--epsilon", "0.2", "--profile", "sine", "--amplitude", "-0.7", "--wavenumber", "1.5"];
    let a = platoon(&args);
    let b = platoon(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let mut threaded = Command::new(env!("CARGO_BIN_EXE_platoon"));
    threaded.args(["sweep", "--n-values", "5,9,14", "--outputs", "spectrum,hinf"]);
    let one = threaded.env("PLATOON_THREADS", "1").output().unwrap();
    let four = threaded.env("PLATOON_THREADS", "4").output().unwrap();
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn invalid_thread_count_is_rejected() {
    let o = Command::new(env!("CARGO_BIN_EXE_platoon"))
        .args(["eigs", "--n", "4"])
        .env("PLATOON_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn json_configuration_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    std::fs::write(
        &path,
        r#"{"n_vehicles": 20, "k0": 1.0, "b0": 0.5, "scenario": "II", "epsilon": 0.1, "profile": {"kind": "optimal"}}"#,
    )
    .unwrap();
    let p = path.to_str().unwrap();
    let o = platoon(&["eigs", "--config", p]);
    assert!(o.status.success());
    assert!((number(&summary(&o), "stability_margin") - 0.05).abs() < 0.005);
    let o = platoon(&["eigs", "--config", p, "--epsilon", "0"]);
    assert!((number(&summary(&o), "stability_margin") - 0.012026).abs() < 1e-5);
    std::fs::write(&path, r#"{"n_vehicles": 20, "k0": 1.0}"#).unwrap();
    assert_eq!(platoon(&["eigs", "--config", p]).status.code(), Some(2));
}

#[test]
fn out_directory_receives_named_tables() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = platoon(&["eigs", "--n", "12", "--scenario", "II", "--out", d]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 1);
    let table = std::fs::read_to_string(dir.path().join("eigs_II_12.csv")).unwrap();
    assert!(table.starts_with("l,re,im\n"));

    let o = platoon(&["hinf", "--n", "6", "--out", d]);
    assert!(o.status.success());
    let curve = std::fs::read_to_string(dir.path().join("hinf_I_6.csv")).unwrap();
    assert!(curve.starts_with("omega,sigma_max\n"));
    assert_eq!(curve.lines().count(), 2002);
}

#[test]
fn pde_summary() {
    let o = platoon(&["pde", "--n", "25", "--basis", "32"]);
    assert!(o.status.success());
    let s = summary(&o);
    assert_eq!(s["basis_size"], 32);
    let platoon_margin = number(&summary(&platoon(&["eigs", "--n", "25"])), "stability_margin");
    assert!((number(&s, "stability_margin") - platoon_margin).abs() / platoon_margin < 0.02);
    assert_eq!(platoon(&["pde", "--n", "10", "--basis", "0"]).status.code(), Some(2));
}

#[test]
fn sweep_reports_slopes_and_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = platoon(&["sweep", "--n-values", "50,100,200,400", "--outputs", "spectrum,asymptote", "--track", "6", "--out", d]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&o);
    let slope = s["slopes"]["spectrum"].as_f64().unwrap();
    assert!((slope + 2.0).abs() < 0.1, "{slope}");
    assert_eq!(s["first_mode_least_stable"], true);
    assert_eq!(s["warnings"], 0);
    let table = std::fs::read_to_string(dir.path().join("sweep_spectrum_I_50-400.csv")).unwrap();
    assert!(table.starts_with("N,source,value\n50,platoon,"));
    let asym = std::fs::read_to_string(dir.path().join("sweep_asymptote_I_50-400.csv")).unwrap();
    assert!(asym.lines().nth(1).unwrap().starts_with("50,asymptote,"));
    let modes = std::fs::read_to_string(dir.path().join("sweep_modes_I_50-400.csv")).unwrap();
    assert_eq!(modes.lines().count(), 1 + 4 * 6);
}

#[test]
fn sweep_records_failures_without_aborting() {
    let o = platoon(&["sweep", "--n-values", "10,2000", "--outputs", "asymptote"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("2000,asymptote,NaN"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    assert_eq!(summary(&o)["warnings"], 1);
    assert_eq!(platoon(&["sweep", "--outputs", "bode"]).status.code(), Some(2));
    assert_eq!(platoon(&["sweep", "--n-values", "9,5"]).status.code(), Some(2));
}

#[test]
fn mistune_prints_the_schedule() {
    let o = platoon(&["mistune", "--n", "20", "--scenario", "II", "--epsilon", "0.1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("vehicle,x,k_front,k_back,damping"));
    assert_eq!(lines.next().unwrap().split(',').collect::<Vec<_>>()[2..], ["1.1", "0.9", "0.5"]);
    assert!(text.contains("\n20,0,1.1,0,0.5\n"));
    let s = summary(&o);
    assert_eq!(s["profile"], "optimal_constant_ii");

    let o = platoon(&["mistune", "--n", "20", "--epsilon", "0.1", "--search", "1"]);
    let s = summary(&o);
    assert_eq!(s["profile"], "optimal_step_i");
    assert_eq!(number(&s, "shift_coefficient"), -4.0);
}

#[test]
fn simulate_defaults_decay_and_mistuning_speeds_the_tail() {
    let sym = platoon(&["simulate"]);
    assert!(sym.status.success());
    let text = stdout(&sym);
    assert!(text.starts_with("t,vehicle,abs_error,rel_error,velocity\n"));
    let vehicles: std::collections::BTreeSet<&str> =
        text.lines().skip(1).filter(|l| !l.starts_with('{')).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(vehicles.len(), 20);
    let s = summary(&sym);
    assert!(number(&s, "final_max_abs_error") < 1e-2);
    let mis = summary(&platoon(&["simulate", "--epsilon", "0.1"]));
    assert!(number(&mis, "tail_slope") < number(&s, "tail_slope"));
    let rel = (number(&s, "tail_slope") + number(&s, "stability_margin")).abs() / number(&s, "stability_margin");
    assert!(rel < 0.1);
}

#[test]
fn hinf_methods_agree() {
    let s = summary(&platoon(&["hinf", "--n", "20"]));
    assert!((number(&s, "gamma_bisect") - 6.69).abs() < 0.05);
    assert!((number(&s, "gamma_sweep") - 6.69).abs() < 0.05);
    assert_eq!(s["agree"], true);
    let s = summary(&platoon(&["hinf", "--n", "20", "--epsilon", "0.1"]));
    assert!((number(&s, "gamma_bisect") - 3.38).abs() < 0.05);
    let s = summary(&platoon(&["hinf", "--n", "5"]));
    assert!((number(&s, "gamma_bisect") - number(&s, "gamma_sweep")).abs() / number(&s, "gamma_bisect") < 1e-3);
}

#[test]
fn asymptote_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = platoon(&["asymptote", "--n", "400", "--modes", "2", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let table = std::fs::read_to_string(Path::new(dir.path()).join("asymptote_I_400.csv")).unwrap();
    assert!(table.starts_with("N,l,s_plus_pred,s_plus_numeric,rel_err\n400,1,"));
    let s = summary(&o);
    assert!(number(&s, "max_rel_err_valid") < 0.02);
    assert_eq!(platoon(&["asymptote", "--n", "4", "--modes", "5"]).status.code(), Some(2));
}
