use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_noninterferometer"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let idx = rdr.headers().unwrap().iter().position(|h| h == name).unwrap();
    rdr.records().map(|r| r.unwrap()[idx].to_string()).collect()
}

#[test]
fn quantize_prints_the_exact_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["quantize", "--species", "deuteron", "--n-a", "0", "--n-b", "1"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "1/2\n");
    let o = bin(&["quantize", "--species", "alpha_particle", "--n-a", "-3", "--n-b", "4"], dir.path());
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "7\n");
}

#[test]
fn holonomy_run_writes_seeded_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["holonomy", "--seed", "11"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = dir.path().join("holonomy.csv");
    let d = column(&csv, "discrepancy [rad]");
    assert_eq!(d.len(), 500);
    assert!(d.iter().all(|x| x.parse::<f64>().unwrap() < 1e-6));
    assert!(column(&csv, "seed").iter().all(|s| s == "11"));
    assert!(dir.path().join("run_log.json").exists());
}

#[test]
fn commutator_cases_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(
        &cfg,
        r#"
[grid]
nx = 256
ny = 256
spacing = 0.0625

[commutator]
alphas = ["1/2", "13/10"]

[[commutator.cases]]
x = 1.5
y = 1.0
a = -4.5
b = 3.75

[[commutator.cases]]
x = 1.5
y = 1.0
a = 2.0
b = -1.5
"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = bin(&["--config", cfg.to_str().unwrap(), "commutator"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = out.join("commutator.csv");
    let d = column(&csv, "discrepancy [rad]");
    assert_eq!(d.len(), 4);
    assert!(d.iter().all(|x| x.parse::<f64>().unwrap() < 1e-6), "{d:?}");
    assert!(column(&csv, "status").iter().all(|s| s == "ok"));
    let w: Vec<String> = column(&csv, "winding [turns]");
    assert_eq!(w.iter().filter(|s| *s != "0").count(), 2, "{w:?}");
}

#[test]
fn bad_config_reports_json_and_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[grid]\nnx = 64\nbogus = 1\n").unwrap();
    let o = bin(&["--config", cfg.to_str().unwrap(), "holonomy"], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "schema");
    assert_eq!(err["error"]["line"], 3);
}

#[test]
fn example_config_round_trips_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["example-config"], dir.path());
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text, fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/example.toml")).unwrap());
}
