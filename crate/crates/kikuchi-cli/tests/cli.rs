//! Runs the binary. Golden files live in `tests/golden`; set
//! `KIKUCHI_UPDATE_GOLDEN=1` to rewrite them.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_kikuchi"));
    c.current_dir(env!("CARGO_MANIFEST_DIR")).env_remove("KIKUCHI_THREADS").env("RUST_LOG", "error");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn golden(name: &str, got: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("KIKUCHI_UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, got).unwrap();
        return;
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert_eq!(got, want, "output differs from {}", path.display());
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("json output")
}

fn tmp(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("kikuchi-cli-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d.join(name)
}

#[test]
fn table1_csv() {
    let o = run(&["estimate", "--table1"]);
    assert!(o.status.success());
    let s = stdout(&o);
    let rows: Vec<&str> = s.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 5);
    assert!(rows[0].starts_with("n,Logical Qubits,Amp. amp. Repetitions"));
    let qubits: Vec<&str> = rows[1..].iter().map(|r| r.split(',').nth(1).unwrap()).collect();
    assert_eq!(qubits, ["525", "720", "900", "1110"]);
    golden("estimate_table1.csv", &s);
}

#[test]
fn estimate_json_and_markdown() {
    let o = run(&["estimate", "--n", "100"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["result"]["logical_qubits"], 900);
    assert_eq!(v["result"]["L"], 201);
    golden("estimate_n100.json", &stdout(&o));
    let md = run(&["estimate", "--table1", "--markdown"]);
    assert!(md.status.success());
    golden("estimate_table1.md", &stdout(&md));
}

#[test]
fn verify_circuits_dicke_l2() {
    let o = run(&["verify-circuits", "--dicke-l", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["result"]["passed"], true);
    assert!(v["result"]["checks"].as_array().unwrap().iter().any(|c| c["name"] == "dicke_semantics_l2"));
    golden("verify_circuits_l2.json", &stdout(&o));
}

#[test]
fn sample_detect_recover_chain() {
    let args = ["sample", "--n", "14", "--ell", "4", "--seed", "5", "--model", "simple", "--m", "600"];
    let s = run(&args);
    assert!(s.status.success());
    golden("sample_n14.txt", &stdout(&s));
    assert_eq!(stdout(&run(&args)), stdout(&s));

    let input = "tests/golden/sample_n14.txt";
    let d = run(&["detect", "--input", input, "--ell", "4", "--detect-m", "600", "--seed", "1"]);
    assert_eq!(d.status.code(), Some(0));
    assert_eq!(json(&d)["result"]["verdict"], "planted");
    golden("detect_n14.json", &stdout(&d));

    let r = run(&["recover", "--input", input, "--ell", "4", "--seed", "1", "--boost"]);
    assert!(r.status.success());
    let v = json(&r);
    assert!(v["result"]["correlation"].as_f64().unwrap() > 0.9);
    golden("recover_n14.json", &stdout(&r));
}

#[test]
fn null_instance_reads_random() {
    let o = run(&["detect", "--n", "14", "--ell", "4", "--model", "random", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["result"]["verdict"], "random");
}

#[test]
fn inconclusive_exits_two() {
    let o = run(&["detect", "--n", "10", "--ell", "4", "--m", "20", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json(&o)["result"]["verdict"], "inconclusive");
}

#[test]
fn fig2_small_grid() {
    let cfg = tmp("fig2.toml");
    std::fs::write(&cfg, "seed = 4\n[fig2]\nn = 10\nell = 4\ntrials = 2\nrhos = [0.0, 1.0]\nobs_fractions = [0.3]\n").unwrap();
    let o = run(&["fig2", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let s = stdout(&o);
    let body: Vec<&str> = s.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "setting,rho,obs_fraction,trials,mean_corr,std_corr");
    assert_eq!(body.len(), 3);
    let again = stdout(&run(&["fig2", "--config", cfg.to_str().unwrap()]));
    let strip = |t: &str| t.lines().filter(|l| !l.starts_with("# config")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&again), strip(&s));
}

#[test]
fn flags_override_config() {
    let cfg = tmp("prec.toml");
    std::fs::write(&cfg, "seed = 8\nthreads = 1\n[estimate]\nn = 80\nrho = 0.5\n").unwrap();
    let o = run(&["estimate", "--config", cfg.to_str().unwrap(), "--n", "60"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["config"]["seed"], 8);
    assert_eq!(v["config"]["threads"], 1);
    assert_eq!(v["config"]["estimate"]["n"], 60);
    assert_eq!(v["config"]["estimate"]["rho"], 0.5);
    assert_eq!(v["result"]["logical_qubits"], 525);
}

#[test]
fn thread_count_from_environment() {
    let o = bin().args(["estimate"]).env("KIKUCHI_THREADS", "1").output().unwrap();
    assert_eq!(json(&o)["config"]["threads"], 1);
    let bad = bin().args(["estimate"]).env("KIKUCHI_THREADS", "many").output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn bad_inputs_exit_one() {
    let cfg = tmp("bad.toml");
    std::fs::write(&cfg, "[problem]\nnn = 3\n").unwrap();
    let o = run(&["sample", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown field"));
    assert_eq!(run(&["detect", "--input", "no/such/file.txt"]).status.code(), Some(1));
    assert_eq!(run(&["estimate", "--n", "7"]).status.code(), Some(1));
    assert_eq!(run(&["sample", "--rho", "1.5"]).status.code(), Some(1));
}

#[test]
fn out_flag_writes_file() {
    let out = tmp("table.csv");
    let o = run(&["estimate", "--table1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success() && o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# kikuchi estimate"));
    assert!(text.contains("\n120,1110,"));
}

#[test]
fn bench_reports_model() {
    let o = run(&["bench", "--n", "12", "--ell", "4", "--reps", "2"]);
    assert!(o.status.success());
    let v = json(&o);
    let r = &v["result"];
    assert_eq!(r["dim"], 495);
    assert!(r["seconds_per_matvec_f64"].as_f64().unwrap() > 0.0);
    assert!(r["edges_realised"].as_f64().unwrap() <= r["edges_model"].as_f64().unwrap());
}
