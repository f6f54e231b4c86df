use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lolab(dir: &Path, args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lolab"));
    cmd.current_dir(dir).args(args).env_remove("LOLAB_THREADS");
    if let Some(t) = threads {
        cmd.env("LOLAB_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    std::fs::write(dir.join(name), body).unwrap();
    name.to_string()
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).expect("error JSON on stderr")
}

fn forward_config(experiment: &str) -> String {
    let constants = std::fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("calibration/constants.json"),
    )
    .unwrap();
    format!(
        r#"{{
  "experiment": "{experiment}",
  "seed": 31,
  "generator": {{"count": 40, "rank": 0, "c": 1.5, "n_min": 3, "n_max": 7,
                 "epsilon": "1/10", "n_prime_divisor": 10}},
  "constants": {constants},
  "output": {{"report": "report.json", "csv": "rows.csv"}}
}}"#
    )
}

#[test]
fn rho_envelope() {
    let d = tempfile::tempdir().unwrap();
    let f = write(d.path(), "v.json", r#"{"values":[1,1,1,1],"eta":{"label":"bernoulli"}}"#);
    let o = lolab(d.path(), &["rho", &f], None);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["result"]["rho"], "3/8");
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert!(v["constants"]["inverse_k"].is_number());
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();

    let o = lolab(p, &["no-such-command"], None);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["kind"], "usage");

    let f = write(p, "v.json", r#"{"values":[3,5,7,9,11],"eta":{"label":"bernoulli"}}"#);
    let o = lolab(p, &["invert", &f, "--epsilon", "1/2", "--n-prime", "3"], None);
    assert_eq!(o.status.code(), Some(2));

    let o = lolab(p, &["rho", "missing.json"], None);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["kind"], "invalid_input");

    let big: Vec<String> = (0..48).map(|i| (1_000_000_000_007i64 * (i % 3 + 1) + i).to_string()).collect();
    let f = write(
        p,
        "big.json",
        &format!(r#"{{"values":[{}],"eta":{{"label":"bernoulli"}}}}"#, big.join(",")),
    );
    let o = lolab(p, &["rho", &f], None);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_json(&o)["error"]["kind"], "budget_exceeded");
}

#[test]
fn smallball_without_seed_is_usage() {
    let d = tempfile::tempdir().unwrap();
    let f = write(
        d.path(),
        "w.json",
        r#"{"d":1,"vectors":[[0.6],[0.8]],"beta":0.1,"z":{"kind":"bernoulli"}}"#,
    );
    let o = lolab(d.path(), &["smallball", &f], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn thread_cap_is_validated() {
    let d = tempfile::tempdir().unwrap();
    let f = write(d.path(), "v.json", r#"{"values":[1,2],"eta":{"label":"bernoulli"}}"#);
    for bad in ["zero", "0", "-3"] {
        let o = lolab(d.path(), &["rho", &f], Some(bad));
        assert_eq!(o.status.code(), Some(2), "LOLAB_THREADS={bad}");
    }
    let o = lolab(d.path(), &["rho", &f], Some("2"));
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn verify_forward_is_deterministic() {
    let runs: Vec<(Vec<u8>, Vec<u8>)> = [None, Some("1"), Some("3")]
        .into_iter()
        .map(|threads| {
            let d = tempfile::tempdir().unwrap();
            let cfg = write(d.path(), "cfg.json", &forward_config("forward"));
            let o = lolab(d.path(), &["verify-forward", &cfg], threads);
            assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
            (
                std::fs::read(d.path().join("rows.csv")).unwrap(),
                std::fs::read(d.path().join("report.json")).unwrap(),
            )
        })
        .collect();
    assert!(runs.windows(2).all(|w| w[0] == w[1]));
    let csv = String::from_utf8(runs[0].0.clone()).unwrap();
    assert!(csv.starts_with("suite,instance,rho,bound,margin,pass"));
    for suite in ["oracle", "erdos", "stanley", "fourier"] {
        assert!(csv.lines().any(|l| l.starts_with(suite)), "{suite} missing");
    }
}

#[test]
fn verify_forward_rejects_calibrate() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "cfg.json", &forward_config("calibrate"));
    let o = lolab(d.path(), &["verify-forward", &cfg], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_config_is_invalid_input() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(
        d.path(),
        "cfg.json",
        &forward_config("oracle").replace("\"seed\": 31,", ""),
    );
    let o = lolab(d.path(), &["verify-forward", &cfg], None);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["kind"], "invalid_input");
}

#[test]
fn net_count_envelope() {
    let d = tempfile::tempdir().unwrap();
    let o = lolab(
        d.path(),
        &["net-count", "--n", "100", "--beta", "0.1", "--rho", "0.05", "--epsilon", "0.25"],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["command"], "net-count");
}
