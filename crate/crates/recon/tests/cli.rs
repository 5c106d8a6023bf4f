use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn recon(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_recon"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("RECON_NODE_CAP")
        .output()
        .expect("recon runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn thresholds_for_a_point_mass() {
    let dir = tempfile::tempdir().unwrap();
    let o = recon(&["thresholds", "--dist", "deterministic:d=30"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("delta_plus = 30\n"), "{text}");
    assert!(text.contains("delta_minus = 30\n"), "{text}");
    assert!(dir.path().join("thresholds.csv").exists());
    assert_eq!(fs::read_to_string(dir.path().join("summary.txt")).unwrap(), text);
}

#[test]
fn invalid_parameters_exit_with_two_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = recon(&["thresholds", "--dist", "binomial:n=10,p=2"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("dist"));

    let o = recon(&["frozen-sweep", "--dist", "deterministic:d=5", "--k-list", "1", "--h-list", "2"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("k"));
}

#[test]
fn node_cap_from_the_environment_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_recon"))
        .args(["coupling-decay", "--dist", "deterministic:d=3", "--k", "4", "--h", "4", "--out"])
        .arg(dir.path())
        .env("RECON_NODE_CAP", "10")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("node cap"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "experiment = thresholds\ndist = deterministic:d=12\n").unwrap();
    let cfg = cfg.to_str().unwrap();

    let o = recon(&["thresholds", "--config", cfg], &dir.path().join("a"));
    assert!(o.status.success());
    assert!(stdout(&o).contains("delta_plus = 12\n"));

    let o = recon(&["thresholds", "--config", cfg, "--dist", "deterministic:d=20"], &dir.path().join("b"));
    assert!(o.status.success());
    assert!(stdout(&o).contains("delta_plus = 20\n"));

    let o = recon(&["frozen-sweep", "--config", cfg], &dir.path().join("c"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn frozen_sweep_is_reproducible_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let args = |w: &'static str| {
        [
            "frozen-sweep",
            "--dist",
            "deterministic:d=30",
            "--k-list",
            "6,12",
            "--h-list",
            "1..4",
            "--n-trees",
            "200",
            "--seed",
            "9",
            "--workers",
            w,
        ]
    };
    let mut csvs = Vec::new();
    for (i, w) in ["1", "3", "1"].into_iter().enumerate() {
        let out = dir.path().join(i.to_string());
        assert!(recon(&args(w), &out).status.success());
        csvs.push(fs::read(out.join("frozen_sweep.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    assert_eq!(csvs[0], csvs[2]);

    let text = String::from_utf8(csvs.remove(0)).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "dist,k,h,n_trees,n_boundaries,frozen_rate,frozen_rate_uncond,extinct_rate,std_err,seed"
    );
    assert_eq!(text.lines().count(), 1 + 2 * 4);
}

#[test]
fn oracle_check_agrees_on_small_trees() {
    let dir = tempfile::tempdir().unwrap();
    let o = recon(
        &["oracle-check", "--k-list", "3", "--max-nodes", "6", "--exhaustive-nodes", "5", "--n-random", "20"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("oracle_check.csv")).unwrap();
    for col in ["marginal_mismatches", "support_mismatches", "identity_failures", "cauchy_schwarz_failures"] {
        assert!(column(&csv, col).iter().all(|v| v == "0"), "{col}: {csv}");
    }
}

#[test]
fn coupling_decay_replays_from_its_tree_dump() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let o = recon(
        &["coupling-decay", "--dist", "deterministic:d=3", "--k", "4", "--h", "4", "--n-samples", "200", "--seed", "1"],
        &first,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let tree = first.join("tree.txt");
    let second = dir.path().join("second");
    let o = recon(
        &["coupling-decay", "--tree-file", tree.to_str().unwrap(), "--k", "4", "--n-samples", "200", "--seed", "1"],
        &second,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    assert_eq!(fs::read(&tree).unwrap(), fs::read(second.join("tree.txt")).unwrap());
    assert_eq!(fs::read(first.join("boundary.csv")).unwrap(), fs::read(second.join("boundary.csv")).unwrap());
    let a = fs::read_to_string(first.join("coupling_decay.csv")).unwrap();
    let b = fs::read_to_string(second.join("coupling_decay.csv")).unwrap();
    assert_eq!(column(&a, "disagreement"), column(&b, "disagreement"));
    assert_eq!(column(&a, "level"), (0..=4).map(|l| l.to_string()).collect::<Vec<_>>());
}

#[test]
fn magnetization_and_membership_sweeps_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = recon(
        &["magnetization-sweep", "--dist", "deterministic:d=4", "--k-list", "3", "--h-list", "1..2", "--n-samples", "50"],
        &dir.path().join("m"),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("m/magnetization_sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);

    let o = recon(
        &["a-membership", "--dist", "binomial:n=100,p=0.1", "--h-list", "2,3", "--n-trees", "100"],
        &dir.path().join("a"),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("a/a_membership.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}
