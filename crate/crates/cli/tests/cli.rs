use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use fairmet_catalog::fixture;
use fairmet_catalog::Catalog;
use serde_json::Value;

fn fairmet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fairmet")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = fairmet(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn rows(start_hour: usize, values: &[&str]) -> String {
    let mut s = String::from("timestamp,station_id,variable,value\n");
    for (k, v) in values.iter().enumerate() {
        s.push_str(&format!("2023-05-01T{:02}:00:00Z,S1,TA,{v}\n", start_hour + k));
    }
    s
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(fairmet(&[]).status.code(), Some(2));
    assert_eq!(
        fairmet(&["fill", "--in", "x.csv", "--out", "y.csv", "--method", "magic"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        fairmet(&["gaps", "--in", "x.csv", "--report", "r.txt", "--colour", "red"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(fairmet(&["gaps", "--in", "x.csv"]).status.code(), Some(2));
    assert_eq!(
        fairmet(&["gaps", "--in", "x.csv", "--report", "r", "--step", "0s"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(fairmet(&["launch"]).status.code(), Some(2));
    assert_eq!(fairmet(&["--help"]).status.code(), Some(0));
}

#[test]
fn runtime_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.csv");
    let out = fairmet(&["gaps", "--in", p(&missing), "--report", p(&tmp.path().join("r.txt"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.csv"));

    let obs = tmp.path().join("obs.csv");
    std::fs::write(&obs, rows(0, &["1", "", "3"])).unwrap();
    let out = fairmet(&[
        "fill",
        "--in",
        p(&obs),
        "--method",
        "debias",
        "--out",
        p(&tmp.path().join("f.csv")),
    ]);
    assert_eq!(out.status.code(), Some(1));

    std::fs::write(&obs, "when,where,what\n").unwrap();
    let out = fairmet(&["ingest", "--in", p(&obs), "--out", p(&tmp.path().join("o.csv"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn ingest_regularizes_onto_the_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let raw = tmp.path().join("raw.csv");
    std::fs::write(
        &raw,
        "timestamp,station_id,variable,value\n\
         2023-05-01T02:00:00Z,S1,TA,12.5\n\
         2023-05-01T00:10:00+00:00,S1,TA,10\n\
         2023-05-01T03:00:00Z,S1,TA,NA\n\
         2023-05-01T04:00:00Z,S1,TA,14\n",
    )
    .unwrap();
    let out = tmp.path().join("obs.csv");
    ok(&["ingest", "--in", p(&raw), "--out", p(&out)]);
    assert_eq!(
        std::fs::read_to_string(&out).unwrap(),
        "timestamp,station_id,variable,value\n\
         2023-05-01T00:00:00Z,S1,TA,10\n\
         2023-05-01T01:00:00Z,S1,TA,\n\
         2023-05-01T02:00:00Z,S1,TA,12.5\n\
         2023-05-01T03:00:00Z,S1,TA,\n\
         2023-05-01T04:00:00Z,S1,TA,14\n"
    );
}

#[test]
fn gaps_report_lists_records_and_profile() {
    let tmp = tempfile::tempdir().unwrap();
    let obs = tmp.path().join("obs.csv");
    std::fs::write(&obs, rows(0, &["1", "", "3", "", "", "", "7"])).unwrap();
    let report = tmp.path().join("gaps.txt");
    ok(&["gaps", "--in", p(&obs), "--step", "3600s", "--report", p(&report)]);
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.contains("series S1/TA"), "{text}");
    assert!(
        text.contains("  1,1,2023-05-01T01:00:00Z,2023-05-01T01:00:00Z,TA\n"),
        "{text}"
    );
    assert!(
        text.contains("  3,3,2023-05-01T03:00:00Z,2023-05-01T05:00:00Z,TA\n"),
        "{text}"
    );
    assert!(text.contains("gap_count=2\n"));
    assert!(text.contains("total_missing_fraction=0.571429\n"));
    assert!(text.contains("duration_histogram=1:1 2-3:1 4-6:0"));
    assert!(text.contains("recurrence_score=0.500000\n"));
}

#[test]
fn fill_passes_gapless_series_through() {
    let tmp = tempfile::tempdir().unwrap();
    let obs = tmp.path().join("obs.csv");
    let input = rows(0, &["1.25", "2", "-3.5", "4", "5.125"]);
    std::fs::write(&obs, &input).unwrap();
    for method in ["pchip", "spline", "rbf", "ols"] {
        let out = tmp.path().join(format!("{method}.csv"));
        ok(&["fill", "--in", p(&obs), "--method", method, "--out", p(&out)]);
        assert_eq!(std::fs::read_to_string(&out).unwrap(), input, "{method}");
        let prov = std::fs::read_to_string(tmp.path().join(format!("{method}.csv.provenance.csv"))).unwrap();
        assert_eq!(prov, "station_id,variable,timestamp,index,source\n");
    }
}

#[test]
fn linear_fill_writes_values_and_provenance() {
    let tmp = tempfile::tempdir().unwrap();
    let obs = tmp.path().join("obs.csv");
    std::fs::write(&obs, rows(0, &["", "2", "", "", "8", ""])).unwrap();
    let out = tmp.path().join("filled.csv");
    let prov = tmp.path().join("prov.csv");
    ok(&[
        "fill",
        "--in",
        p(&obs),
        "--method",
        "linear",
        "--out",
        p(&out),
        "--provenance",
        p(&prov),
    ]);
    let values: Vec<String> = std::fs::read_to_string(&out)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().to_string())
        .collect();
    assert_eq!(values, ["", "2", "4", "6", "8", ""]);
    assert_eq!(
        std::fs::read_to_string(&prov).unwrap(),
        "station_id,variable,timestamp,index,source\n\
         S1,TA,2023-05-01T02:00:00Z,2,INTERP_LINEAR\n\
         S1,TA,2023-05-01T03:00:00Z,3,INTERP_LINEAR\n"
    );
}

fn hourly_csv(station: &str, n: usize, f: impl Fn(usize) -> Option<f64>) -> String {
    let mut s = String::from("timestamp,station_id,variable,value\n");
    for i in 0..n {
        let t = hour_stamp(i);
        let v = f(i).map_or(String::new(), |v| v.to_string());
        s.push_str(&format!("{t},{station},TA,{v}\n"));
    }
    s
}

/// Hourly timestamps from 2023-01-01 without a date library.
fn hour_stamp(i: usize) -> String {
    let (day, hour) = (i / 24, i % 24);
    format!("2023-01-{:02}T{hour:02}:00:00Z", day + 1)
}

#[test]
fn model_fill_uses_neighbors_and_writes_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let n = 24 * 20;
    let signal = |i: usize| 10.0 + 5.0 * (i as f64 * std::f64::consts::TAU / 24.0).sin() + (i % 7) as f64 * 0.1;
    let obs = tmp.path().join("obs.csv");
    std::fs::write(&obs, hourly_csv("S1", n, |i| (i % 10 != 3).then(|| signal(i) + 1.0))).unwrap();
    let nb = tmp.path().join("nb.csv");
    std::fs::write(&nb, hourly_csv("S2", n, |i| Some(signal(i)))).unwrap();
    let out = tmp.path().join("filled.csv");
    ok(&[
        "fill",
        "--in",
        p(&obs),
        "--method",
        "ols",
        "--neighbors",
        p(&nb),
        "--out",
        p(&out),
    ]);
    let manifest = std::fs::read_to_string(tmp.path().join("filled.csv.models.txt")).unwrap();
    assert!(
        manifest.starts_with("[S1/TA]\nkind=OLS\nfeature_set=TEMPORAL_NEIGHBORS\n"),
        "{manifest}"
    );
    assert!(manifest.contains("seed=42\n"));
    let text = std::fs::read_to_string(&out).unwrap();
    for (i, line) in text.lines().skip(1).enumerate() {
        let v: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((v - signal(i) - 1.0).abs() < 1e-6, "slot {i}: {v}");
    }
    let prov = std::fs::read_to_string(tmp.path().join("filled.csv.provenance.csv")).unwrap();
    assert_eq!(prov.lines().count() - 1, n / 10);
    assert!(prov.lines().nth(1).unwrap().ends_with(",3,OLS/TEMPORAL_NEIGHBORS"));
}

#[test]
fn qc_writes_flags_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let obs = tmp.path().join("obs.csv");
    std::fs::write(&obs, rows(0, &["10", "11", "40", "12", "", "13", "99"])).unwrap();
    let out = tmp.path().join("flags.csv");
    let report = tmp.path().join("qc.txt");
    let cfg = tmp.path().join("qc.toml");
    std::fs::write(&cfg, "persistence_k = 4\n[checks]\nclimatology = false\n").unwrap();
    ok(&[
        "qc",
        "--in",
        p(&obs),
        "--config",
        p(&cfg),
        "--out",
        p(&out),
        "--report",
        p(&report),
    ]);
    let flags: Vec<String> = std::fs::read_to_string(&out)
        .unwrap()
        .lines()
        .map(|l| l.rsplit(',').next().unwrap().to_string())
        .collect();
    assert_eq!(flags[0], "flag");
    assert_eq!(flags[1], "PASS");
    assert_eq!(flags[3], "SUSPECT");
    assert_eq!(flags[5], "MISSING");
    assert_eq!(flags[7], "FAIL");
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.starts_with("QC report for S1\n"), "{text}");
    assert!(text.contains("climatology  skipped"));

    std::fs::write(&cfg, "persistance_k = 4\n").unwrap();
    assert_eq!(
        fairmet(&["qc", "--in", p(&obs), "--config", p(&cfg), "--out", p(&out)])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn bench_on_files_with_report() {
    let tmp = tempfile::tempdir().unwrap();
    let n = 24 * 30;
    let obs = tmp.path().join("obs.csv");
    let mut text = hourly_csv("A", n, |i| Some((i as f64 * 0.2).sin() * 4.0 + 10.0));
    text.push_str(
        hourly_csv("B", n, |i| Some((i as f64 * 0.2).sin() * 4.0 + 9.0))
            .split_once('\n')
            .unwrap()
            .1,
    );
    std::fs::write(&obs, text).unwrap();
    let grid = tmp.path().join("grid.toml");
    std::fs::write(
        &grid,
        "variables = [\"TA\"]\nfeature_sets = [\"TEMPORAL_NEIGHBORS\"]\nmodels = [\"OLS\", \"BASELINE_LINEAR_INTERP\"]\ngap_sizes = [2]\nsites = [\"A\"]\n",
    )
    .unwrap();
    let out = tmp.path().join("results.csv");
    let report = tmp.path().join("summary.txt");
    ok(&[
        "bench",
        "--grid",
        p(&grid),
        "--in",
        p(&obs),
        "--out",
        p(&out),
        "--report",
        p(&report),
        "--group-by",
        "model",
    ]);
    let results = std::fs::read_to_string(&out).unwrap();
    let mut lines = results.lines();
    assert_eq!(
        lines.next().unwrap(),
        "variable,feature_set,model,gap_size,site,fold,r2,rmse,nrmse,mae,n_points,runtime_ms,seed"
    );
    assert_eq!(
        lines
            .clone()
            .filter(|l| l.starts_with("TA,TEMPORAL_NEIGHBORS,OLS,2,A,"))
            .count(),
        5
    );
    assert_eq!(
        lines
            .filter(|l| l.starts_with("TA,NONE,BASELINE_LINEAR_INTERP,2,A,"))
            .count(),
        5
    );
    let summary = std::fs::read_to_string(&report).unwrap();
    assert!(
        summary.contains("OLS") && summary.contains("BASELINE_LINEAR_INTERP"),
        "{summary}"
    );

    std::fs::write(
        &grid,
        "variables = [\"TA\"]\nfeature_sets = []\nmodels = [\"OLS\"]\nsites = [\"A\"]\n",
    )
    .unwrap();
    assert_eq!(
        fairmet(&["bench", "--grid", p(&grid), "--in", p(&obs), "--out", p(&out)])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn bench_seed_changes_synthetic_output() {
    let tmp = tempfile::tempdir().unwrap();
    let grid = tmp.path().join("grid.toml");
    std::fs::write(
        &grid,
        "variables = [\"TA\"]\nfeature_sets = [\"TEMPORAL\"]\nmodels = [\"OLS\"]\ngap_sizes = [6]\nsites = [\"SYN-02\"]\n",
    )
    .unwrap();
    let run = |seed: &str, name: &str| {
        let out = tmp.path().join(name);
        ok(&["bench", "--grid", p(&grid), "--out", p(&out), "--seed", seed]);
        std::fs::read(out).unwrap()
    };
    let (a, b, c) = (run("7", "a.csv"), run("7", "b.csv"), run("8", "c.csv"));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

fn write_fixture(dir: &Path) -> [std::path::PathBuf; 3] {
    [
        ("inventory.csv", fixture::INVENTORY),
        ("sites.csv", fixture::SITES),
        ("sensors.csv", fixture::SENSORS),
    ]
    .map(|(name, text)| {
        let path = dir.join(name);
        std::fs::write(&path, text).unwrap();
        path
    })
}

#[test]
fn catalog_import_and_stats() {
    let tmp = tempfile::tempdir().unwrap();
    let store = tmp.path().join("store");
    let files = write_fixture(tmp.path());
    let report = tmp.path().join("report.json");
    ok(&[
        "catalog-import",
        "--in",
        p(&files[0]),
        "--data-dir",
        p(&store),
        "--out",
        p(&report),
    ]);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["kind"], "networks");
    assert_eq!(r["imported"], 23);

    let stats_file = tmp.path().join("stats.json");
    ok(&["catalog-stats", "--data-dir", p(&store), "--out", p(&stats_file)]);
    let all: Value = serde_json::from_str(&std::fs::read_to_string(&stats_file).unwrap()).unwrap();
    let groups: Vec<&str> = all
        .as_array()
        .unwrap()
        .iter()
        .map(|g| g["group_by"].as_str().unwrap())
        .collect();
    assert_eq!(groups, ["country", "environment", "seasonality"]);
    assert!(all.as_array().unwrap().iter().all(|g| g["total"] == 23));
    assert_eq!(
        fairmet(&["catalog-stats", "--data-dir", p(&store), "--group-by", "colour"])
            .status
            .code(),
        Some(1)
    );

    // Sensors before their sites: every row is rejected, nothing is stored.
    let out = fairmet(&["catalog-import", "--in", p(&files[2]), "--data-dir", p(&store)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown_parent"));

    let bad = tmp.path().join("bad.csv");
    let mut text = fixture::SITES.to_string();
    text.push_str("x-1,no-such-network,X,45,19,,UTC,\n");
    std::fs::write(&bad, text).unwrap();
    assert_eq!(
        fairmet(&["catalog-import", "--in", p(&bad), "--data-dir", p(&store)])
            .status
            .code(),
        Some(1)
    );
    let c = Catalog::open(&store).unwrap();
    assert_eq!(c.snapshot().sites.len(), 40);
    assert!(c.snapshot().sensors.is_empty());

    std::fs::write(&bad, "name,colour\nx,red\n").unwrap();
    let out = fairmet(&["catalog-import", "--in", p(&bad), "--data-dir", p(&store)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("network_name"));
}

fn http(port: u16, request: &str) -> (u16, Value) {
    let mut s = TcpStream::connect(("127.0.0.1", port)).unwrap();
    s.write_all(request.as_bytes()).unwrap();
    let mut buf = String::new();
    s.read_to_string(&mut buf).unwrap();
    let status: u16 = buf.split_whitespace().nth(1).unwrap().parse().unwrap();
    let body = buf.split_once("\r\n\r\n").unwrap().1;
    (status, serde_json::from_str(body).unwrap_or(Value::Null))
}

#[test]
fn serve_answers_and_flushes_on_interrupt() {
    let tmp = tempfile::tempdir().unwrap();
    let store = tmp.path().join("store");
    let files = write_fixture(tmp.path());
    for f in &files {
        ok(&["catalog-import", "--in", p(f), "--data-dir", p(&store)]);
    }
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let mut child = Command::new(env!("CARGO_BIN_EXE_fairmet"))
        .args(["serve", "--data-dir", p(&store), "--port", &port.to_string()])
        .env("FAIRMET_ADMIN_TOKEN", "tok")
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stderr = BufReader::new(child.stderr.take().unwrap());
    let mut line = String::new();
    while !line.contains("serving") {
        line.clear();
        assert!(stderr.read_line(&mut line).unwrap() > 0, "server exited early");
    }
    assert!(line.contains("serving 23 networks"), "{line}");

    let (status, v) = http(
        port,
        "GET /api/stats?group_by=seasonality HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n",
    );
    assert_eq!(status, 200);
    assert_eq!(v["counts"], serde_json::json!({"SUMMER": 6, "YEAR_ROUND": 17}));

    let body = r#"{"id":"late","name":"Late","country":"Chile","local_environment":"RURAL","seasonality":"SUMMER","measurement_frequency_s":60}"#;
    let post = |token: &str| {
        format!(
            "POST /api/networks HTTP/1.1\r\nHost: x\r\nConnection: close\r\nAuthorization: Bearer {token}\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{body}",
            body.len()
        )
    };
    assert_eq!(http(port, &post("wrong")).0, 401);
    let (status, v) = http(port, &post("tok"));
    assert_eq!(status, 201);
    assert_eq!(v["id"], "late");

    let killed = Command::new("kill")
        .args(["-INT", &child.id().to_string()])
        .status()
        .unwrap();
    assert!(killed.success());
    assert!(child.wait().unwrap().success());
    let c = Catalog::open(&store).unwrap();
    assert_eq!(c.network_count(), 24);
    assert_eq!(c.network("late").unwrap().country, "Chile");
}
