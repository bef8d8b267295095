use std::path::Path;
use std::process::{Command, Output};

fn dpoutlier(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpoutlier"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn records(path: &Path) -> Vec<csv::StringRecord> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    reader.records().map(Result::unwrap).collect()
}

fn header(path: &Path) -> Vec<String> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    reader.headers().unwrap().iter().map(str::to_string).collect()
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let idx = header(path).iter().position(|h| h == name).unwrap();
    records(path).iter().map(|r| r[idx].parse().unwrap()).collect()
}

#[test]
fn bounds_rows_for_small_dimensions() {
    let out = dpoutlier(&["bounds"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "d,k,lower,upper");
    assert!(lines.contains(&"1,3,7,7"));
    assert!(lines.contains(&"2,3,13,19"));
    assert_eq!(lines.len(), 1 + 100);
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(dir.path(), "bad.toml", "scenario = \"count\"\nbogus = 1\n");
    let out = dpoutlier(&["count", "--config", &unknown]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    let out = dpoutlier(&["count", "--delta", "1.5"]);
    assert_eq!(out.status.code(), Some(1));

    let out = dpoutlier(&["count", "--config", "/nonexistent/run.toml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn scenario_mismatch_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "b.toml", "scenario = \"bounds\"\n");
    let out = dpoutlier(&["count", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("'bounds' config"));
}

#[test]
fn injected_failure_exits_with_two_and_names_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "v.toml",
        "scenario = \"verify\"\n[verify]\npools = 10\nsmooth_instances = 3\nlocal_instances = 3\n\
         ls_t_instances = 1\nseb_instances = 10\nrecount_instances = 3\ndp_pairs = 1\ndp_draws = 20000\n\
         inject_failure = \"local-bound-soundness\"\n",
    );
    let out_csv = dir.path().join("verify.csv");
    let out = dpoutlier(&["verify", "--config", &cfg, "--out", out_csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("local-bound-soundness"), "{stderr}");
    let rows = records(&out_csv);
    assert_eq!(rows.len(), 7);
    let failing: Vec<&str> = rows.iter().filter(|r| &r[4] == "false").map(|r| r.get(0).unwrap()).collect();
    assert_eq!(failing, vec!["local-bound-soundness"]);
}

#[test]
fn oversized_search_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "rl.toml",
        "scenario = \"count\"\nk = 3\nr = 0.35\nepsilons = [0.5]\ndelta = 0.01\npool_cap = 1\n\
         [dataset]\nsource = \"synthetic\"\npreset = \"adult1-like\"\nstandardize = true\n",
    );
    let out = dpoutlier(&["count", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("resource limit"));
}

#[test]
fn count_output_is_reproducible_from_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("nested/b.csv");
    for path in [&a, &b] {
        let out = dpoutlier(&["count", "--reps", "2", "--seed", "7", "--out", path.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(records(&a).len(), 9 * 2);

    let c = dir.path().join("c.csv");
    dpoutlier(&["count", "--reps", "2", "--seed", "8", "--out", c.to_str().unwrap()]);
    assert_ne!(column(&a, "noisy_smooth"), column(&c, "noisy_smooth"));
}

#[test]
fn count_sigma_columns_follow_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("count.csv");
    let out = dpoutlier(&["count", "--eps", "0.25,1.5", "--delta", "0.05", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let eps = column(&path, "eps");
    let sg = column(&path, "sigma_global");
    let count = column(&path, "true_count");
    assert_eq!(eps, vec![0.25, 1.5]);
    assert!(count.iter().all(|&c| c == 6.0));
    let l = (2.0f64 / 0.05).ln();
    // synthetic 1 has N = 50, d = 2, k = 3: the lower global bound is 13
    for (e, s) in eps.iter().zip(&sg) {
        let closed = 13.0 * (2.0 * l).sqrt() / e;
        assert!((s - closed).abs() <= 1e-9 * closed, "{s} vs {closed}");
    }
}

#[test]
fn exhaustive_top_h_has_full_recall() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("toph.csv");
    // h equals the number of 1-attribute candidates
    let out = dpoutlier(&[
        "tophsubspace",
        "--h",
        "10",
        "--reps",
        "20",
        "--eps",
        "0.1,1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(column(&path, "recall").iter().all(|&r| r == 1.0));
    for (e, spent) in column(&path, "eps").iter().zip(column(&path, "ledger_epsilon")) {
        assert!((spent - e).abs() <= 1e-12);
    }
    assert!(column(&path, "ledger_delta").iter().all(|&d| (d - 0.01).abs() <= 1e-15));
}

#[test]
fn bundled_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = dpoutlier_cli::RunConfig::load(&path).unwrap();
        cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}
