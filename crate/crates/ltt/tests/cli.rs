//! End-to-end tests of the `ltt` binary: artifact formats, option
//! precedence, exit codes, and byte determinism.

use std::process::{Command, Output};

fn ltt(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ltt"));
    cmd.args(args).env_remove("LTT_SEED");
    cmd
}

fn run(args: &[&str]) -> Output {
    ltt(args).output().expect("spawn ltt")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn expect_csv_grid_and_boundaries() {
    let out = run(&[
        "expect",
        "--lambda",
        "0.2",
        "--mu",
        "0",
        "--n",
        "5",
        "--condition",
        "origin",
        "--age",
        "10",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("sigma,expected_lineages"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 101);
    assert_eq!(rows[0], (0.0, 1.0));
    assert_eq!(rows[100], (1.0, 5.0));
    // expectation grows monotonically in sigma
    assert!(rows.windows(2).all(|w| w[1].1 >= w[0].1));
}

#[test]
fn expect_json_echoes_config() {
    let out = run(&[
        "expect",
        "--lambda",
        "1",
        "--mu",
        "0.5",
        "--n",
        "4",
        "--condition",
        "mrca",
        "--age",
        "3",
        "--grid",
        "11",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["config"]["n"], 4);
    assert_eq!(doc["config"]["condition"], "mrca");
    assert_eq!(doc["curve"]["points"].as_array().unwrap().len(), 11);
}

#[test]
fn density_csv_sums_to_one() {
    let out = run(&[
        "density",
        "--lambda",
        "1",
        "--mu",
        "0.5",
        "--n",
        "6",
        "--condition",
        "origin",
        "--age",
        "2",
        "--sigma",
        "0.5",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("m,probability"));
    let total: f64 = lines
        .map(|l| l.split_once(',').unwrap().1.parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-12, "pmf sums to {total}");
}

#[test]
fn age_density_runs_without_age() {
    let out = run(&[
        "age-density",
        "--lambda",
        "1",
        "--mu",
        "0.5",
        "--n",
        "5",
        "--grid",
        "20",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some("t,density"));
    assert_eq!(text.lines().count(), 21);
}

#[test]
fn simulate_csv_has_stderr_column_and_seed_determinism() {
    let args = [
        "simulate",
        "--lambda",
        "0.5",
        "--mu",
        "0",
        "--n",
        "3",
        "--condition",
        "origin",
        "--age",
        "2",
        "--reps",
        "200",
        "--grid",
        "5",
        "--seed",
        "7",
    ];
    let a = run(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let text = stdout(&a);
    assert_eq!(text.lines().next(), Some("sigma,expected_lineages,stderr"));
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout, "same seed, same bytes");

    // LTT_SEED is the fallback for --seed ...
    let env_args: Vec<&str> = args[..args.len() - 2].to_vec();
    let c = ltt(&env_args).env("LTT_SEED", "7").output().unwrap();
    assert_eq!(a.stdout, c.stdout, "LTT_SEED=7 matches --seed 7");
    // ... and the flag wins over the environment
    let d = ltt(&args).env("LTT_SEED", "8").output().unwrap();
    assert_eq!(a.stdout, d.stdout, "--seed beats LTT_SEED");
}

#[test]
fn simulate_dump_file() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("trees.csv");
    let out = run(&[
        "simulate",
        "--lambda",
        "0.5",
        "--mu",
        "0",
        "--n",
        "3",
        "--condition",
        "origin",
        "--age",
        "2",
        "--reps",
        "100",
        "--grid",
        "3",
        "--seed",
        "1",
        "--dump",
        dump.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&dump).unwrap();
    // 100 replicates x 3 grid points
    assert_eq!(text.lines().count(), 300);
    assert!(text.lines().all(|l| l.split(',').count() == 3));
}

#[test]
fn plot_fig2_svg_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let p1 = dir.path().join("a.svg");
    let p2 = dir.path().join("b.svg");
    for p in [&p1, &p2] {
        let out = run(&["plot", "--fig", "2", "--out", p.to_str().unwrap()]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let a = std::fs::read(&p1).unwrap();
    assert_eq!(
        a,
        std::fs::read(&p2).unwrap(),
        "identical bytes across runs"
    );
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("<svg"));
    assert!(text.contains("polyline"));
}

#[test]
fn verify_passes_and_prints_properties() {
    let out = run(&["verify"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 5);
    assert!(!text.contains("FAIL"));
}

#[test]
fn usage_errors_exit_2() {
    // --reps outside simulate
    let out = run(&["expect", "--age", "2", "--reps", "10"]);
    assert_eq!(out.status.code(), Some(2));
    // missing --age for a timed condition
    let out = run(&["expect", "--condition", "origin"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--age"));
    // unknown flag (clap)
    let out = run(&["expect", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    // plot without --fig
    let out = run(&["plot"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mc_budget_exhaustion_exits_4() {
    // 50 species out of lambda t = 0.01 will never be accepted
    let out = run(&[
        "simulate",
        "--lambda",
        "0.01",
        "--mu",
        "0",
        "--n",
        "50",
        "--condition",
        "origin",
        "--age",
        "1",
        "--reps",
        "100",
        "--grid",
        "3",
    ]);
    assert_eq!(
        out.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn config_file_fills_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "lambda = 0.2\nn = 5\nage = 10\ngrid = 3\n").unwrap();
    let from_file = run(&["expect", "--config", conf.to_str().unwrap()]);
    assert!(from_file.status.success());
    assert_eq!(stdout(&from_file).lines().count(), 4);
    // a flag overrides the file value
    let overridden = run(&["expect", "--config", conf.to_str().unwrap(), "--grid", "5"]);
    assert_eq!(stdout(&overridden).lines().count(), 6);
}
