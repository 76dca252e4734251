use std::path::Path;
use std::process::{Command, Output};

const GRID: &str = r#"
algorithms = ["pg", "rspg", "2-rspg", "rspgf"]
budgets = [3, 400]
replications = 2
runs = 5
evaluation_samples = 500
pilot_samples = 30

[[scenarios]]
name = "lsq"
problem = "least_squares"
n = 10
"#;

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rspg-bench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8(bytes.to_vec()).unwrap()
}

fn write_grid(dir: &Path, body: &str) -> String {
    let path = dir.join("grid.toml");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_writes_reports_and_summarize_reads_them_back() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_grid(tmp.path(), GRID);
    let out = tmp.path().join("out");
    let out_arg = out.to_string_lossy().into_owned();
    let run = bench(&["run", "--config", &config, "--seed", "3", "--out", &out_arg]);
    assert_eq!(run.status.code(), Some(0), "{}", text(&run.stderr));
    for file in ["report.json", "results.csv", "series.csv", "summary.csv"] {
        assert!(out.join(file).is_file(), "{file} missing");
    }
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(text(&run.stdout), summary);
    assert!(summary.starts_with("scenario,NS,metric,stat,pg,rspg,2-rspg,rspgf\n"));
    let results = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(results.starts_with("scenario,n,noise,algorithm,NS,"));

    // a 3-call budget cannot fund five two-phase runs
    let stderr = text(&run.stderr);
    assert!(stderr.contains("skipped lsq 2-rspg NS=3"), "{stderr}");

    let again = bench(&["summarize", "--report", &out_arg]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(text(&again.stdout), summary);

    let json = bench(&["summarize", "--report", &out_arg, "--format", "json"]);
    assert_eq!(json.status.code(), Some(0));
    let value: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(value["algorithms"].as_array().unwrap().len(), 4);
}

#[test]
fn bounds_prints_and_saves_the_table() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_grid(tmp.path(), GRID);
    let out = tmp.path().join("b");
    let out_arg = out.to_string_lossy().into_owned();
    let run = bench(&["bounds", "--config", &config, "--out", &out_arg]);
    assert_eq!(run.status.code(), Some(0), "{}", text(&run.stderr));
    let saved = std::fs::read_to_string(out.join("bounds.csv")).unwrap();
    assert_eq!(text(&run.stdout), saved);
    assert!(saved.starts_with("scenario,algorithm,NS,bound,value\n"));
    assert!(saved.contains("lsq,rspg,400,rspg_nonconvex,"));
}

#[test]
fn config_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_grid(
        tmp.path(),
        "budgets = []\n[[scenarios]]\nname = \"a\"\nproblem = \"s3vm\"\n",
    );
    let run = bench(&["run", "--config", &config]);
    assert_eq!(run.status.code(), Some(1));
    assert!(!text(&run.stderr).is_empty());

    let unknown = write_grid(tmp.path(), "budget = [100]\n");
    assert_eq!(
        bench(&["bounds", "--config", &unknown]).status.code(),
        Some(1)
    );
    assert_eq!(bench(&["run"]).status.code(), Some(1));
}

#[test]
fn damaged_report_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("report.json");
    std::fs::write(&path, "{\"config\": 1}").unwrap();
    let run = bench(&["summarize", "--report", &path.to_string_lossy()]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn verify_passes_every_check() {
    let run = bench(&["verify", "--seed", "1"]);
    let stdout = text(&run.stdout);
    assert_eq!(run.status.code(), Some(0), "{stdout}");
    assert!(!stdout.contains("FAIL"));
    assert!(stdout.trim_end().ends_with("7 of 7 checks passed"));
}
