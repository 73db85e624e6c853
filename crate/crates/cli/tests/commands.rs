use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.json"))
}

fn ermakov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ermakov"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Writes `base` with edits applied and returns its path.
fn edited(dir: &TempDir, base: &str, file: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut v: Value =
        serde_json::from_str(&std::fs::read_to_string(scenario(base)).unwrap()).unwrap();
    edit(&mut v);
    let path = dir.path().join(file);
    std::fs::write(&path, v.to_string()).unwrap();
    path
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|f| f.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn simulate_lewis_follows_the_pinney_curve() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("lewis.csv");
    let run = ermakov(&[
        "simulate",
        "--config",
        p(&scenario("lewis")),
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let (header, rows) = csv_rows(&out);
    assert_eq!(header.join(","), "time,x,y,vx,vy,H,I0,I2,I3");
    assert_eq!(rows.len(), 101);
    let last = rows.last().unwrap();
    assert_eq!(last[0], 5.0);
    assert!((last[2] - 26f64.sqrt()).abs() < 1e-8, "{}", last[2]);
    assert!((last[1] - 1.0).abs() < 1e-10);
}

#[test]
fn columns_follow_the_request() {
    let dir = TempDir::new().unwrap();
    let cfg = edited(&dir, "lewis", "c.json", |v| {
        v["invariants"] = serde_json::json!(["I3", "H", "L"]);
    });
    let out = dir.path().join("c.csv");
    let run = ermakov(&["simulate", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    assert_eq!(csv_rows(&out).0.join(","), "time,x,y,vx,vy,H,I3");
    assert!(stderr(&run).contains("L is not a trajectory column"));

    let cfg = edited(&dir, "lewis", "d.json", |v| {
        v["invariants"] = serde_json::json!([])
    });
    let run = ermakov(&["simulate", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(code(&run), 0);
    assert_eq!(csv_rows(&out).0.join(","), "time,x,y,vx,vy");
}

#[test]
fn simulate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let run = ermakov(&[
            "simulate",
            "--config",
            p(&scenario("generic")),
            "--out",
            p(out),
        ]);
        assert_eq!(code(&run), 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let bad_n = edited(&dir, "lewis", "n.json", |v| {
        v["system"]["N"] = "u^(-2)/".into()
    });
    let run = ermakov(&["simulate", "--config", p(&bad_n)]);
    assert_eq!(code(&run), 2);
    assert!(stderr(&run).contains("system.N"), "{}", stderr(&run));

    let backwards = edited(&dir, "lewis", "t.json", |v| v["t_end"] = (-1.0).into());
    let run = ermakov(&["simulate", "--config", p(&backwards)]);
    assert_eq!(code(&run), 2);
    assert!(stderr(&run).contains("t_end"), "{}", stderr(&run));

    let typo = edited(&dir, "lewis", "k.json", |v| {
        v["sample_intervall"] = 0.1.into()
    });
    assert_eq!(code(&ermakov(&["simulate", "--config", p(&typo)])), 2);

    let missing = dir.path().join("absent.json");
    assert_eq!(code(&ermakov(&["simulate", "--config", p(&missing)])), 2);

    let run = ermakov(&[
        "analytic-compare",
        "--config",
        p(&scenario("lewis")),
        "--out",
        "x.csv",
    ]);
    assert_eq!(code(&run), 2);
}

#[test]
fn invariants_pass_and_fail() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("r.json");
    let run = ermakov(&[
        "invariants",
        "--config",
        p(&scenario("lewis")),
        "--report",
        p(&report),
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let r = read_json(&report);
    assert_eq!(r["passes"], true);
    let names: Vec<&str> = r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["drift H", "drift I0", "drift I2", "drift I3"]);
    for c in r["checks"].as_array().unwrap() {
        assert_eq!(c["tolerance"], 1e-7);
        assert!(c["value"].as_f64().unwrap() < 1e-7);
    }

    // tighter than the integrator can deliver
    let run = ermakov(&[
        "invariants",
        "--config",
        p(&scenario("lewis")),
        "--report",
        p(&report),
        "--tolerance",
        "1e-15",
    ]);
    assert_eq!(code(&run), 1);
    assert_eq!(read_json(&report)["passes"], false);

    // angular momentum is not conserved for the Lewis potential
    let cfg = edited(&dir, "lewis", "l.json", |v| {
        v["initial"] = serde_json::json!({ "x": 1, "y": 2, "vx": 0.3, "vy": -0.1 });
        v["invariants"] = serde_json::json!(["L"]);
    });
    assert_eq!(
        code(&ermakov(&[
            "invariants",
            "--config",
            p(&cfg),
            "--report",
            p(&report)
        ])),
        1
    );
}

#[test]
fn invariants_rejects_undefined_requests() {
    let dir = TempDir::new().unwrap();
    let general = edited(&dir, "lewis", "g.json", |v| {
        v["system"] = serde_json::json!({ "form": "general", "f": "v", "g": "1" });
        v["invariants"] = serde_json::json!(["I0", "H"]);
    });
    let run = ermakov(&["invariants", "--config", p(&general)]);
    assert_eq!(code(&run), 2);
    assert!(
        stderr(&run).contains("not conservative"),
        "{}",
        stderr(&run)
    );

    let empty = edited(&dir, "lewis", "e.json", |v| {
        v["invariants"] = serde_json::json!([])
    });
    assert_eq!(code(&ermakov(&["invariants", "--config", p(&empty)])), 2);

    let timed = edited(&dir, "lewis", "w.json", |v| v["omega"] = "1".into());
    assert_eq!(code(&ermakov(&["invariants", "--config", p(&timed)])), 2);
}

#[test]
fn invariants_on_a_supplied_trajectory() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("t.csv");
    let run = ermakov(&[
        "simulate",
        "--config",
        p(&scenario("generic")),
        "--out",
        p(&csv),
    ]);
    assert_eq!(code(&run), 0);
    let report = dir.path().join("r.json");
    let run = ermakov(&[
        "invariants",
        "--config",
        p(&scenario("generic")),
        "--trajectory",
        p(&csv),
        "--report",
        p(&report),
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let r = read_json(&report);
    assert_eq!(r["details"]["samples"], 201);
    assert_eq!(r["details"]["t_last"], 10.0);
}

#[test]
fn reduce_maps_the_lewis_pair() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r.csv");
    let report = dir.path().join("r.json");
    let run = ermakov(&[
        "reduce",
        "--config",
        p(&scenario("lewis_timed")),
        "--out",
        p(&out),
        "--report",
        p(&report),
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let (header, rows) = csv_rows(&out);
    assert_eq!(
        header.join(","),
        "time,x,y,vx,vy,rho,rhodot,T,X,Y,VX,VY,I0_residual"
    );
    for row in &rows {
        let t = row[0];
        assert!((row[5] - t.cos()).abs() < 1e-9);
        assert!((row[7] - t.tan()).abs() < 1e-8);
        assert!((row[8] - 1.0).abs() < 1e-8);
        assert!((row[9] - (1.0 + row[7] * row[7]).sqrt()).abs() < 1e-8);
        assert!(row[12].abs() < 1e-9);
    }
    let r = read_json(&report);
    assert_eq!(r["passes"], true);
    assert!(r["checks"][0]["value"].as_f64().unwrap() < 1e-7);
}

#[test]
fn reduce_without_frequency_is_the_identity() {
    let dir = TempDir::new().unwrap();
    let cfg = edited(&dir, "generic", "i.json", |v| v["t_end"] = 2.into());
    let out = dir.path().join("i.csv");
    let run = ermakov(&["reduce", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    for row in csv_rows(&out).1 {
        for k in 0..5 {
            assert!((row[k] - row[7 + k]).abs() < 1e-12, "{row:?}");
        }
    }
}

#[test]
fn reduce_names_the_zero_of_rho() {
    let dir = TempDir::new().unwrap();
    let cfg = edited(&dir, "lewis_timed", "z.json", |v| v["t_end"] = 2.into());
    let run = ermakov(&[
        "reduce",
        "--config",
        p(&cfg),
        "--out",
        p(&dir.path().join("z.csv")),
    ]);
    assert_eq!(code(&run), 3);
    let msg = stderr(&run);
    let numbers: Vec<f64> = msg
        .split(|c: char| !(c.is_ascii_digit() || c == '.' || c == 'e' || c == '-'))
        .filter_map(|w| w.parse().ok())
        .collect();
    assert!(msg.contains("rho crosses zero"), "{msg}");
    let half_pi = std::f64::consts::FRAC_PI_2;
    assert!(
        numbers
            .windows(2)
            .any(|w| w[0] <= half_pi + 1e-8 && half_pi <= w[1] + 1e-8),
        "{msg}"
    );
}

#[test]
fn analytic_compare_reports_both_residuals() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("a.json");
    let run = ermakov(&[
        "analytic-compare",
        "--config",
        p(&scenario("generic")),
        "--report",
        p(&report),
    ]);
    let r = read_json(&report);
    assert_eq!(code(&run), if r["passes"] == true { 0 } else { 1 });
    assert_eq!(r["checks"][0]["name"], "radial residual");
    assert!(r["checks"][0]["value"].as_f64().unwrap() < 1e-6);
    assert!(r["details"]["H"].as_f64().unwrap() > 0.0);
}

fn matrix(report: &Value) -> Vec<(String, bool, Option<bool>)> {
    report["details"]["matrix"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| {
            (
                m["vector"].as_str().unwrap().to_string(),
                m["case2"]["pass"].as_bool().unwrap(),
                m["case3"]["pass"].as_bool(),
            )
        })
        .collect()
}

#[test]
fn noether_scan_matrices() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("n.json");
    let scan = |name: &str| {
        let run = ermakov(&[
            "noether-scan",
            "--config",
            p(&scenario(name)),
            "--report",
            p(&report),
        ]);
        assert_eq!(code(&run), 0, "{name}: {}", stderr(&run));
        read_json(&report)
    };

    let lewis = scan("lewis");
    assert_eq!(
        matrix(&lewis),
        [
            ("dX".to_string(), true, Some(true)),
            ("dY".to_string(), false, Some(false)),
            ("rotation".to_string(), false, None),
            ("dilation".to_string(), true, Some(true)),
        ]
    );
    let hv = &lewis["details"]["matrix"][3];
    assert_eq!(hv["case2"]["constants"]["c1"], 0.0);
    assert_eq!(hv["case3"]["constants"]["c2"], 0.0);
    assert_eq!(hv["case3"]["constants"]["c3"], 0.0);
    assert_eq!(lewis["checks"].as_array().unwrap().len(), 4);

    let radial = scan("radial");
    assert!(matrix(&radial).contains(&("rotation".to_string(), true, None)));

    let kv = scan("gradient_kv");
    assert_eq!(
        matrix(&kv).last().unwrap(),
        &("2*dX+1*dY".to_string(), true, Some(true))
    );
}

#[test]
fn noether_scan_needs_a_potential() {
    let run = ermakov(&["noether-scan", "--config", p(&scenario("nonconservative"))]);
    assert_eq!(code(&run), 2);
}

#[test]
fn batch_writes_one_file_per_scenario() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("csv");
    let reports = dir.path().join("reports");
    let names = ["lewis", "generic", "radial"];
    let mut args = vec!["simulate".to_string()];
    for n in names {
        args.extend(["--config".to_string(), p(&scenario(n)).to_string()]);
    }
    args.extend([
        "--out".into(),
        p(&out).into(),
        "--report".into(),
        p(&reports).into(),
        "--jobs".into(),
        "3".into(),
    ]);
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let run = ermakov(&args);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    for n in names {
        assert!(out.join(format!("{n}.csv")).is_file());
        assert_eq!(read_json(&reports.join(format!("{n}.json")))["scenario"], n);
    }

    // the same scenario run alone gives the same bytes
    let single = dir.path().join("single.csv");
    ermakov(&[
        "simulate",
        "--config",
        p(&scenario("generic")),
        "--out",
        p(&single),
    ]);
    assert_eq!(
        std::fs::read(&single).unwrap(),
        std::fs::read(out.join("generic.csv")).unwrap()
    );
}

#[test]
fn batch_exit_code_is_the_worst() {
    let dir = TempDir::new().unwrap();
    let bad = edited(&dir, "lewis", "bad.json", |v| {
        v["system"]["N"] = "((u".into()
    });
    let reports = dir.path().join("reports");
    let run = ermakov(&[
        "invariants",
        "--config",
        p(&scenario("lewis")),
        "--config",
        p(&bad),
        "--report",
        p(&reports),
        "--jobs",
        "2",
    ]);
    assert_eq!(code(&run), 2);
    assert!(reports.join("lewis.json").is_file());
    assert!(!reports.join("bad.json").exists());

    // a batch has nowhere to print reports
    let run = ermakov(&[
        "invariants",
        "--config",
        p(&scenario("lewis")),
        "--config",
        p(&bad),
    ]);
    assert_eq!(code(&run), 2);
}

#[test]
fn truncated_run_keeps_its_samples() {
    let dir = TempDir::new().unwrap();
    // attracted into the singular axis y = 0
    let cfg = edited(&dir, "lewis", "s.json", |v| {
        v["system"] = serde_json::json!({ "form": "normalized", "F": "0", "G": "-1" });
        v["initial"] = serde_json::json!({ "x": 1, "y": 0.5, "vx": 0, "vy": -1 });
        v["t_end"] = 3.into();
        v["invariants"] = serde_json::json!(["I0"]);
    });
    let out = dir.path().join("s.csv");
    let run = ermakov(&["simulate", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(code(&run), 3);
    assert!(
        stderr(&run).contains("integration stopped"),
        "{}",
        stderr(&run)
    );
    let (_, rows) = csv_rows(&out);
    assert!(rows.len() > 2);
    let last = rows.last().unwrap();
    assert!(last[0] < 3.0 && last[2] > 0.0);
}
