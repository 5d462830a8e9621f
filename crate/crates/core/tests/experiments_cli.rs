use std::fs;
use std::path::{Path, PathBuf};

use fermi_mf::cli::main_with_args;
use fermi_mf::experiments::*;

const SMALL: &str = r#"
[model]
beta = 0.6666666666666666
field = 2.0

[model.potential]
kind = "exponential"
strength = 1.0
range = 1.0

[run]
n_values = [2, 3]
t_final = 0.2
dt = 1e-3
sample_every = 50
gamma = 0.5
"#;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fermi-mf-test-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn cli(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("fermi-mf").chain(args.iter().copied()))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn runs_are_deterministic() {
    let cfg = RunConfig::from_toml(SMALL).unwrap();
    let a = sweep(&cfg).unwrap();
    let b = sweep(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.iter().map(|r| r.n).collect::<Vec<_>>(), vec![2, 3]);
}

#[test]
fn slater_start_and_zero_interaction() {
    let mut cfg = RunConfig::from_toml(SMALL).unwrap();
    let rec = run_coupled(&cfg, 2).unwrap();
    assert!(rec.rows[0].alpha_n.abs() < 1e-14);
    assert!(rec.rows[0].trace_dist < 1e-12);
    assert!(rec.envelope_margin() >= -1e-9);

    // Without interaction the exact state stays the Slater state of the orbitals.
    cfg.model.potential = PotentialSpec::None;
    let rec = run_coupled(&cfg, 3).unwrap();
    for r in &rec.rows {
        assert!(r.alpha_n.abs() < 1e-12, "t={} alpha={}", r.t, r.alpha_n);
        assert!(r.alpha_m.unwrap().abs() < 1e-12);
    }
}

#[test]
fn config_errors() {
    assert!(matches!(RunConfig::from_toml("[model]\nbeta = 1.0"), Err(fermi_mf::error::Error::Config(_))));
    let missing = SMALL.replace("t_final = 0.2\n", "");
    match RunConfig::from_toml(&missing) {
        Err(fermi_mf::error::Error::Config(msg)) => assert!(msg.contains("t_final"), "{msg}"),
        other => panic!("{other:?}"),
    }
    let huge = SMALL.replace("n_values = [2, 3]", "n_values = [12]");
    assert!(matches!(RunConfig::from_toml(&huge), Err(fermi_mf::error::Error::Size { .. })));
    let bad_gamma = SMALL.replace("gamma = 0.5", "gamma = 1.5");
    assert!(RunConfig::from_toml(&bad_gamma).is_err());
}

#[test]
fn empty_verify_report_passes() {
    let report = verify_all(&VerifyOptions { sizes: vec![], ..VerifyOptions::default() }).unwrap();
    assert!(report.results.is_empty() && report.passed());
    assert!(verify_all(&VerifyOptions { sizes: vec![(5, 3)], ..VerifyOptions::default() }).is_err());
}

#[test]
fn verify_is_reproducible_for_a_seed() {
    let opts = VerifyOptions { seed: 11, sizes: vec![(2, 4)], cases: 5 };
    let a = verify_all(&opts).unwrap();
    assert_eq!(a, verify_all(&opts).unwrap());
    assert!(a.passed(), "{a:?}");
}

#[test]
fn cli_exit_codes() {
    let dir = scratch("codes");
    let out = dir.join("out");
    let out = out.to_str().unwrap();
    let good = write(&dir, "good.toml", SMALL);
    let broken = write(&dir, "broken.toml", &SMALL.replace("t_final = 0.2\n", ""));
    let unknown = write(&dir, "unknown.toml", &format!("{SMALL}\n[extra]\nx = 1\n"));

    assert_eq!(cli(&["--quiet", "--out", out, "run", "--config", &good]), 0);
    assert_eq!(cli(&["--quiet", "--out", out, "run"]), 2);
    assert_eq!(cli(&["--quiet", "--out", out, "run", "--config", &broken]), 2);
    assert_eq!(cli(&["--quiet", "--out", out, "run", "--config", &unknown]), 2);
    assert_eq!(cli(&["--quiet", "--out", out, "run", "--config", "/nonexistent/x.toml"]), 2);
    assert_eq!(cli(&["--quiet", "--out", out, "frobnicate"]), 2);
    assert_eq!(cli(&["--quiet", "--out", out, "verify", "--cases", "3"]), 0);
    assert!(Path::new(out).join("verify.json").exists());
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn sweep_csv_has_one_row_per_sample() {
    let dir = scratch("sweep");
    let out = dir.join("out");
    let cfg = write(&dir, "c.toml", SMALL);
    assert_eq!(cli(&["--quiet", "--out", out.to_str().unwrap(), "sweep", "--config", &cfg]), 0);
    let mut reader = csv::Reader::from_path(out.join("sweep.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    assert_eq!(&headers[0], "n");
    assert_eq!(&headers[2], "t");
    let keys: Vec<(String, String)> = reader.records().map(|r| r.unwrap()).map(|r| (r[0].to_string(), r[2].to_string())).collect();
    // t_final / dt = 200 steps sampled every 50: five samples per N.
    assert_eq!(keys.len(), 10);
    let mut unique = keys.clone();
    unique.sort();
    unique.dedup();
    assert_eq!(unique.len(), keys.len());
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("sweep_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["final_alpha"].as_array().unwrap().len(), 2);
    let _ = fs::remove_dir_all(&dir);
}
