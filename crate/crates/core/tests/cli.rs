use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

const BIN: &str = env!("CARGO_BIN_EXE_copulagraph");

fn run(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(BIN).args(args).current_dir(dir).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

fn simulate(dir: &Path) {
    write(dir, "sim.cfg", "scenarios = random/5/40\nreplicates = 2\nout = sim\nseed = 9\n");
    let out = run(&["simulate", "--config", "sim.cfg"], dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn simulate_fit_eval_ppc_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    simulate(d);
    write(d, "fit.cfg", "simulation_dir = sim\niterations = 1000\nthin = 10\n");
    assert!(run(&["fit", "--config", "fit.cfg", "--jobs", "2"], d).status.success());
    write(d, "eval.cfg", "simulation_dir = sim\nout = eval\n");
    assert!(run(&["eval", "--config", "eval.cfg"], d).status.success());

    let metrics = fs::read_to_string(d.join("eval/metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 3);
    assert!(metrics.starts_with("scenario,replicate,f1,mse,auc"));
    let summary = fs::read_to_string(d.join("eval/summary.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().starts_with("random_p5_n40,2,"));

    let rep = "sim/random_p5_n40/rep_0";
    write(
        d,
        "ppc.cfg",
        &format!("data = {rep}/data.csv\nschema = {rep}/schema.txt\nfit_dir = {rep}/fit\ndraws = 5\ncheck = V3:V1:0\nout = ppc\n"),
    );
    let out = run(&["ppc", "--config", "ppc.cfg"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let ppc = fs::read_to_string(d.join("ppc/ppc.csv")).unwrap();
    assert!(ppc.contains(",empirical") && ppc.contains(",predictive"));
}

#[test]
fn fit_outputs_are_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    simulate(d);
    let rep = "sim/random_p5_n40/rep_1";
    for out in ["a", "b"] {
        write(
            d,
            &format!("{out}.cfg"),
            &format!("data = {rep}/data.csv\nschema = {rep}/schema.txt\nout = {out}\niterations = 800\n"),
        );
        assert!(run(&["fit", "--config", &format!("{out}.cfg"), "--seed", "4"], d).status.success());
    }
    for f in ["edge_probs.csv", "selected_edges.csv", "selected.edgelist", "graph.dot", "size_trace.csv", "states.json"] {
        assert_eq!(fs::read(d.join("a").join(f)).unwrap(), fs::read(d.join("b").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn simulation_is_reproducible_with_parallel_jobs() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    simulate(d);
    fs::rename(d.join("sim"), d.join("first")).unwrap();
    assert!(run(&["simulate", "--config", "sim.cfg", "--jobs", "3"], d).status.success());
    for f in ["data.csv", "truth_graph.edgelist", "truth_precision.csv"] {
        let p = Path::new("random_p5_n40/rep_1").join(f);
        assert_eq!(fs::read(d.join("first").join(&p)).unwrap(), fs::read(d.join("sim").join(&p)).unwrap());
    }
}

#[test]
fn errors_exit_nonzero_with_message() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let out = run(&["fit", "--config", "missing.cfg"], d);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());

    write(d, "bad.cfg", "iterations = 10\nbogus_key = 1\n");
    let out = run(&["fit", "--config", "bad.cfg"], d);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus_key"));

    write(d, "eval.cfg", "simulation_dir = .\nout = eval\n");
    fs::create_dir_all(d.join("s/rep_0")).unwrap();
    let out = run(&["eval", "--config", "eval.cfg"], d);
    assert_eq!(out.status.code(), Some(1));

    write(d, "thr.cfg", "data = x.csv\nschema = s.txt\n");
    let out = run(&["fit", "--config", "thr.cfg", "--threshold", "1.5"], d);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn small_fit_finishes_quickly() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    simulate(d);
    let rep = "sim/random_p5_n40/rep_0";
    write(d, "fit.cfg", &format!("data = {rep}/data.csv\nschema = {rep}/schema.txt\nout = quick\n"));
    let start = Instant::now();
    let out = run(&["fit", "--config", "fit.cfg", "--iterations", "2000", "--burn-in", "1000"], d);
    assert!(out.status.success());
    assert!(start.elapsed().as_secs_f64() < 10.0);
    let probs = fs::read_to_string(d.join("quick/edge_probs.csv")).unwrap();
    assert_eq!(probs.lines().count(), 6);
}
