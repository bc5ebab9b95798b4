use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"{
  "frontier": { "grid": { "g_points": 60, "mu_points": 20 }, "quartic": { "starts": 2, "max_iters": 800 } },
  "bootstrap": { "replicates": 4 },
  "tax": { "draws": 300 },
  "simulate": { "scale": 0.02, "resale_parcels": 120 }
}"#;

fn frontier(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frontier"))
        .arg("--out")
        .arg(dir)
        .arg("--config")
        .arg(dir.join("config.json"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("config.json"), SMALL).unwrap();
    dir
}

fn ok(dir: &Path, args: &[&str]) {
    let out = frontier(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

const UPSTREAM: [&[&str]; 4] = [&["simulate", "--markets", "200"], &["ingest"], &["hedonic"], &["frontier"]];

#[test]
fn full_pipeline_on_simulated_data() {
    let dir = workspace();
    let d = dir.path();
    for args in UPSTREAM {
        ok(d, args);
    }
    for args in [
        &["variances"][..],
        &["frontier", "--mode", "per-height"],
        &["frontier", "--mode", "quartic"],
        &["bootstrap"],
        &["tax"],
        &["bounds"],
        &["elasticity"],
        &["counterfactual", "--band-lo", "11", "--band-hi", "20", "--target", "24"],
        &["report"],
    ] {
        ok(d, args);
    }
    let header = fs::read_to_string(d.join("frontier_constrained.csv")).unwrap();
    let mut lines = header.lines();
    assert!(lines.next().unwrap().starts_with("# frontier "));
    assert_eq!(
        lines.next().unwrap(),
        "height,quantity,G_level,g_log,mu_u,sigma_u,sigma_v,sigma_w,AC,MC,band_lower,band_upper,interpolated"
    );
    let rows: Vec<&str> = lines.collect();
    assert!(rows.len() >= 30);

    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    // Only the quartic bands were skipped.
    assert_eq!(report["data"]["missing"], serde_json::json!(["bootstrap_quartic.csv"]), "{report}");

    let tax = fs::read_to_string(d.join("bounds.csv")).unwrap();
    assert_eq!(
        tax.lines().nth(1).unwrap(),
        "building_id,h,rate,se,bound_250,bound_500,bound_1000,kappa_S_mean,draws,seed"
    );
}

#[test]
fn artifacts_carry_version_and_config_hash() {
    let dir = workspace();
    let d = dir.path();
    for args in UPSTREAM {
        ok(d, args);
    }
    let mut hashes = Vec::new();
    for entry in fs::read_dir(d).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => {
                let first = text.lines().next().unwrap();
                let hash = first.split("config_sha256=").nth(1).unwrap().split(' ').next().unwrap();
                assert!(first.starts_with(&format!("# frontier {} ", env!("CARGO_PKG_VERSION"))));
                hashes.push(hash.to_string());
            }
            Some("json") if path.file_name().unwrap() != "config.json" => {
                let v: serde_json::Value = serde_json::from_str(&text).unwrap();
                assert_eq!(v["meta"]["version"], env!("CARGO_PKG_VERSION"));
                hashes.push(v["meta"]["config_sha256"].as_str().unwrap().to_string());
            }
            _ => {}
        }
    }
    assert!(hashes.len() > 8);
    assert!(hashes.iter().all(|h| h == &hashes[0] && h.len() == 64));

    let other = workspace();
    ok(other.path(), &["--seed", "7", "simulate", "--no-panel", "--markets", "10"]);
    let text = fs::read_to_string(other.path().join("markets.csv")).unwrap();
    assert!(!text.contains(&hashes[0]));
}

#[test]
fn same_seed_gives_identical_bytes() {
    let a = workspace();
    let b = workspace();
    for d in [a.path(), b.path()] {
        for args in UPSTREAM {
            ok(d, &[&["--seed", "11"], args].concat());
        }
        ok(d, &["--seed", "11", "--threads", "2", "tax"]);
    }
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() > 10);
    for name in names {
        let x = fs::read(a.path().join(&name)).unwrap();
        let y = fs::read(b.path().join(&name)).unwrap();
        assert!(x == y, "{name:?} differs");
    }
}

#[test]
fn missing_upstream_artifact_names_the_command() {
    let dir = workspace();
    let out = frontier(dir.path(), &["frontier"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("adjusted.csv") && err.contains("frontier hedonic"), "{err}");

    let out = frontier(dir.path(), &["elasticity"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("frontier --mode quartic"));

    let out = frontier(dir.path(), &["ingest"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("frontier simulate"));
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = workspace();
    assert_eq!(frontier(dir.path(), &["frontier", "--mode", "cubic"]).status.code(), Some(1));
    assert_eq!(frontier(dir.path(), &["nonsense"]).status.code(), Some(1));
    assert_eq!(frontier(dir.path(), &["--help"]).status.code(), Some(0));
    fs::write(dir.path().join("config.json"), r#"{ "seeds": 3 }"#).unwrap();
    let out = frontier(dir.path(), &["simulate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("configuration"));
}

#[test]
fn target_beyond_the_quantity_table_is_rejected() {
    let dir = workspace();
    let d = dir.path();
    for args in UPSTREAM {
        ok(d, args);
    }
    ok(d, &["frontier", "--mode", "quartic"]);
    let out = frontier(d, &["counterfactual", "--band-lo", "11", "--band-hi", "20", "--target", "90"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("90"));
}
