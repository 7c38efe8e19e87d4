use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn statvar(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_statvar"))
        .args(args)
        .current_dir(dir)
        .env_remove("STATVAR_THREADS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

const AR2: &str = "[simulate]\nn = 400\nsigma = [[1.0, 0.3], [0.3, 0.8]]\nphi = [[[0.6, 0.1], [-0.2, 0.4]]]\nseed = 3\n";

const FIT: &str = "[model]\np = 1\n\n[prior]\nkind = \"exchangeable\"\npreset = \"prior1\"\n\n[data]\nholdout = 20\n\n\
                   [score]\nbaselines = [\"minnesota\", \"semi-conjugate\"]\n";

/// A 2 × 400 AR(1) series simulated through the CLI.
fn ar_data(dir: &Path) {
    write(dir, "sim.toml", AR2);
    let out = statvar(&["simulate", "--config", "sim.toml", "--out", "y.csv"], dir);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    write(dir, "fit.toml", FIT);
}

#[test]
fn missing_file_is_a_usage_error_naming_the_path() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "fit.toml", FIT);
    let out = statvar(&["fit", "--config", "fit.toml", "--data", "absent.csv", "--out", "d.csv"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("absent.csv"), "{}", stderr(&out));
    assert!(!dir.path().join("d.csv").exists());
}

#[test]
fn bad_inputs_exit_two() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    write(d, "fit.toml", FIT);
    write(d, "bad.csv", "y1,y2\n1,2\n3,oops\n");
    let out = statvar(&["fit", "--config", "fit.toml", "--data", "bad.csv", "--out", "d.csv"], d);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("malformed CSV"), "{}", stderr(&out));
    write(d, "bad.toml", "[model]\np = 0\n");
    write(d, "y.csv", "y1\n1\n2\n3\n");
    let out = statvar(&["fit", "--config", "bad.toml", "--data", "y.csv", "--out", "d.csv"], d);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("invalid config"));
    let out = statvar(&["transform", "sideways", "--data", "y.csv", "--out", "o.csv"], d);
    assert_eq!(code(&out), 2);
    let out = Command::new(env!("CARGO_BIN_EXE_statvar"))
        .args(["simulate", "--config", "bad.toml", "--out", "z.csv"])
        .current_dir(d)
        .env("STATVAR_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("STATVAR_THREADS"));
}

#[test]
fn simulate_white_noise_and_refuse_explosive() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    write(d, "wn.toml", "[simulate]\nn = 5\nsigma = [[1.0, 0.0], [0.0, 1.0]]\nphi = [[[0.0, 0.0], [0.0, 0.0]]]\n");
    let out = statvar(&["simulate", "--config", "wn.toml", "--out", "a.csv", "--seed", "4"], d);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = csv_rows(&read(d, "a.csv"));
    assert_eq!(rows[0], ["y1", "y2"]);
    assert_eq!(rows.len(), 6);
    let mean: f64 = rows[1..].iter().flatten().map(|v| v.parse::<f64>().unwrap()).sum::<f64>() / 10.0;
    assert!(mean.abs() < 1.5, "{mean}");
    statvar(&["simulate", "--config", "wn.toml", "--out", "b.csv", "--seed", "4"], d);
    assert_eq!(read(d, "a.csv"), read(d, "b.csv"));
    statvar(&["simulate", "--config", "wn.toml", "--out", "c.csv", "--seed", "5"], d);
    assert_ne!(read(d, "a.csv"), read(d, "c.csv"));

    write(d, "boom.toml", "[simulate]\nn = 5\nsigma = [[1.0]]\nphi = [[[1.5]]]\n");
    let out = statvar(&["simulate", "--config", "boom.toml", "--out", "x.csv"], d);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("stationary"), "{}", stderr(&out));
    assert!(!d.join("x.csv").exists());
}

#[test]
fn simulate_from_prior_writes_model() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    write(d, "p.toml", "[model]\np = 2\n[simulate]\nn = 30\nm = 3\n");
    let out = statvar(&["simulate", "--config", "p.toml", "--out", "y.csv"], d);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(read(d, "y.csv").lines().count(), 31);
    let model = read(d, "y.model.toml");
    assert!(model.contains("sigma") && model.contains("phi"));
}

#[test]
fn transform_examples() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    write(d, "p.csv", "role,lag,e1_1\np,1,0.6\n");
    let out = statvar(&["transform", "p-to-a", "--data", "p.csv", "--out", "a.csv"], d);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = csv_rows(&read(d, "a.csv"));
    assert_eq!(rows[0], ["role", "lag", "e1_1"]);
    assert_eq!(rows[1][..2], ["a", "1"]);
    assert!((rows[1][2].parse::<f64>().unwrap() - 0.75).abs() < 1e-12);

    write(d, "phi.csv", "role,lag,e1_1\nsigma,0,1\nphi,1,1.5\n");
    let out = statvar(&["transform", "phi-to-a", "--data", "phi.csv", "--out", "x.csv"], d);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("stationary"));

    let a = "role,lag,e1_1,e1_2,e2_1,e2_2\nsigma,0,2,0.5,0.5,1\na,1,1.3,-0.7,0.2,0.4\na,2,-0.9,0.6,1.1,-0.3\n";
    write(d, "ak.csv", a);
    for (there, back) in [("a-to-phi", "phi-to-a"), ("ak-to-rml", "rml-to-ak"), ("a-to-p", "p-to-a")] {
        assert_eq!(code(&statvar(&["transform", there, "--data", "ak.csv", "--out", "mid.csv"], d)), 0);
        assert_eq!(code(&statvar(&["transform", back, "--data", "mid.csv", "--out", "end.csv"], d)), 0);
        let want: Vec<f64> = csv_rows(a)[2..].iter().flat_map(|r| r[2..].to_vec()).map(|v| v.parse().unwrap()).collect();
        let got_rows = csv_rows(&read(d, "end.csv"));
        let got: Vec<f64> = got_rows
            .iter()
            .filter(|r| r[0] == "a")
            .flat_map(|r| r[2..].to_vec())
            .map(|v| v.parse().unwrap())
            .collect();
        assert_eq!(got.len(), want.len(), "{there}");
        for (x, y) in got.iter().zip(&want) {
            assert!((x - y).abs() < 1e-8, "{there}: {x} vs {y}");
        }
    }
}

#[test]
fn fit_then_score() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ar_data(d);
    let out = statvar(&["fit", "--config", "fit.toml", "--data", "y.csv", "--out", "d.csv"], d);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let draws = read(d, "d.csv");
    let rows = csv_rows(&draws);
    assert_eq!(rows.len(), 1 + 4 * 1000);
    assert_eq!(rows[0][..3], ["chain", "iter", "a1_1_1"]);
    assert_eq!(rows[0].last().unwrap(), "lp");
    assert_eq!(rows[4000][..2], ["4", "1000"]);
    let meta = read(d, "d.meta.toml");
    assert!(meta.contains("stationarity_probability = 1.0\n"), "{meta}");
    assert!(meta.contains("n_train = 380"));
    assert!(read(d, "d.summary.csv").starts_with("name,mean,sd,rhat,ess_bulk,ess\n"));

    let score = ["score", "--config", "fit.toml", "--data", "y.csv", "--draws", "d.csv", "--chains", "2", "--iters", "600", "--warmup", "300"];
    let mut args = score.to_vec();
    args.extend(["--out", "r1.csv"]);
    let out = statvar(&args, d);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = csv_rows(&read(d, "r1.csv"));
    assert_eq!(report[0], ["Prior", "Mode", "Pr(Stat.)", "CRPS_1", "CRPS_2", "logS_1", "logS_2", "ES_2", "ES_2"]);
    let labels: Vec<&str> = report[1..].iter().map(|r| r[0].as_str()).collect();
    assert_eq!(labels, ["exchangeable", "minnesota", "semi-conjugate"]);
    assert_eq!(report[1][2], "1.0000");
    assert!(String::from_utf8_lossy(&out.stdout).contains("1.0000"));

    let mut args = score.to_vec();
    args.extend(["--out", "r2.csv"]);
    statvar(&args, d);
    assert_eq!(read(d, "r1.csv"), read(d, "r2.csv"));

    // Draws fitted on a different training length are refused.
    let mut args = score.to_vec();
    args.extend(["--out", "r3.csv", "--holdout", "10"]);
    let out = statvar(&args, d);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("dimension"), "{}", stderr(&out));
}

#[test]
fn fit_is_byte_identical_on_rerun() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ar_data(d);
    let short = ["--chains", "2", "--iters", "300", "--warmup", "150"];
    let run = |out: &str, seed: &str| {
        let mut args = vec!["fit", "--config", "fit.toml", "--data", "y.csv", "--out", out, "--seed", seed];
        args.extend(short);
        let o = statvar(&args, d);
        assert!(matches!(code(&o), 0 | 3), "{}", stderr(&o));
    };
    run("a.csv", "8");
    run("b.csv", "8");
    run("c.csv", "9");
    assert_eq!(read(d, "a.csv"), read(d, "b.csv"));
    assert_eq!(read(d, "a.meta.toml"), read(d, "b.meta.toml"));
    assert_ne!(read(d, "a.csv"), read(d, "c.csv"));
}

#[test]
fn unconverged_fit_warns_with_exit_three() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ar_data(d);
    let out = statvar(
        &["fit", "--config", "fit.toml", "--data", "y.csv", "--out", "d.csv", "--iters", "24", "--warmup", "12", "--seed", "2"],
        d,
    );
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("R-hat above 1.05"));
    assert_eq!(read(d, "d.csv").lines().count(), 1 + 4 * 12);
}

#[test]
fn single_draw_scores() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ar_data(d);
    let header = "chain,iter,a1_1_1,a1_1_2,a1_2_1,a1_2_2,log_chol_1_1,chol_2_1,log_chol_2_2,mu1_1,mu2_1,log_omega1_1,log_omega2_1,lp";
    write(d, "one.csv", &format!("{header}\n1,1,0.5,0,0,0.5,0,0.2,0,0,0,0,0,-1\n"));
    let out = statvar(&["score", "--config", "fit.toml", "--data", "y.csv", "--draws", "one.csv", "--out", "r.csv", "--chains", "1", "--iters", "200", "--warmup", "100"], d);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = csv_rows(&read(d, "r.csv"));
    assert_eq!(report[1][..3], ["exchangeable", "rolling", "1.0000"]);
    assert!(report[1][3..].iter().all(|v| v.parse::<f64>().unwrap().is_finite()));

    // A coordinate set from another prior is a dimension mismatch.
    write(d, "other.csv", "chain,iter,a1_1_1,lp\n1,1,0.5,-1\n");
    let out = statvar(&["score", "--config", "fit.toml", "--data", "y.csv", "--draws", "other.csv", "--out", "r.csv"], d);
    assert_eq!(code(&out), 2);
}
