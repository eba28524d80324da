use std::process::{Command, Output};

fn parsmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_parsmc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn filter_output_is_independent_of_lanes() {
    let base = ["filter", "--n", "1024", "--t", "20", "--seed", "9"];
    let runs: Vec<String> = ["1", "2", "8"]
        .iter()
        .map(|l| stdout(&parsmc(&[&base[..], &["--lanes", l]].concat())))
        .collect();
    assert!(runs[0].contains("index digest"));
    assert!(runs.iter().all(|r| r == &runs[0]));
}

#[test]
fn filter_json_carries_digests() {
    let text = stdout(&parsmc(&[
        "filter", "--n", "64", "--t", "3", "--format", "json", "--known",
    ]));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["steps"].as_array().unwrap().len(), 3);
    assert!(v["steps"][0].get("sigma2").is_none());
    assert_eq!(v["index_digest"].as_str().unwrap().len(), 16);
}

#[test]
fn bench_writes_csv_and_reports_read_it() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("b.csv");
    let csv_s = csv.to_str().unwrap();
    stdout(&parsmc(&[
        "bench",
        "--n",
        "64,128,256",
        "--t",
        "5",
        "--trials",
        "2",
        "--algo",
        "cpu_naive,par_cutpoint",
        "--lanes",
        "2",
        "--out",
        csv_s,
    ]));
    let records = parsmc_bench::read_csv(&csv).unwrap();
    assert_eq!(records.len(), 2 * 3 * 3);
    let ratio = stdout(&parsmc(&["ratio", "--input", csv_s, "--format", "json"]));
    let rows: serde_json::Value = serde_json::from_str(&ratio).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 3);
    let scaling = stdout(&parsmc(&[
        "scaling", "--input", csv_s, "--field", "resample",
    ]));
    assert!(scaling.contains("cpu_naive") && scaling.contains("par_cutpoint"));
}

#[test]
fn bench_json_to_stdout() {
    let text = stdout(&parsmc(&[
        "bench",
        "--n",
        "32",
        "--t",
        "3",
        "--trials",
        "1",
        "--algo",
        "cpu_systematic",
        "--format",
        "json",
    ]));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
    assert_eq!(v[1]["kind"], "aggregate");
}

#[test]
fn exit_codes() {
    assert_eq!(parsmc(&["bench", "--trials", "0"]).status.code(), Some(2));
    assert_eq!(parsmc(&["bench", "--algo", "gpu"]).status.code(), Some(2));
    assert_eq!(parsmc(&["filter", "--n", "100"]).status.code(), Some(2));
    assert_eq!(
        parsmc(&["filter", "--n", "100", "--algo", "cpu_naive", "--t", "2"])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        parsmc(&["scaling", "--input", "/nonexistent.csv"])
            .status
            .code(),
        Some(1)
    );
}
