use std::process::{Command, Output};

fn chibar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chibar"))
        .args(args)
        .env_remove("CHIBAR_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn sib_pair_weights() {
    let o = chibar(&["weights", "--model", "linkage:sib-pair"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("# config-hash: "));
    assert_eq!(rows(&text), ["j,w", "0,0.4020", "1,0.5000", "2,0.0980"]);
}

#[test]
fn orthant_weights_closed_form() {
    let o = chibar(&["weights", "--cone", "orthant2"]);
    assert_eq!(
        rows(&stdout(&o)),
        ["j,w", "0,0.2500", "1,0.5000", "2,0.2500"]
    );
}

#[test]
fn random_cone_compare_has_monte_carlo_column() {
    let o = chibar(&[
        "weights",
        "--cone",
        "random-r3",
        "--mc",
        "20000",
        "--compare",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let r = rows(&text);
    assert_eq!(r[0], "j,closed_form,monte_carlo,se");
    assert_eq!(r.len(), 5);
    let total: f64 = r[1..]
        .iter()
        .map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-3);
    assert!(r[1..].iter().all(|l| l.split(',').nth(1) == Some("NA")));
}

#[test]
fn hash_depends_on_configuration() {
    let a = stdout(&chibar(&["weights", "--cone", "orthant2"]));
    let b = stdout(&chibar(&["weights", "--cone", "orthant2", "--seed", "9"]));
    assert_ne!(a.lines().next(), b.lines().next());
}

#[test]
fn linkage_tables_blocks() {
    let o = chibar(&["linkage-tables", "--table", "information"]);
    let text = stdout(&o);
    let r = rows(&text);
    assert_eq!(r[0], "type,i11,i12,i22,u11,u12,u21,u22,w2");
    assert_eq!(r.len(), 8);
    assert!(r[1..5].iter().all(|l| l.ends_with(",0.0980")));
    let all = stdout(&chibar(&["linkage-tables"]));
    for block in ["# information", "# spectral", "# sib-cousin"] {
        assert!(all.contains(block));
    }
}

#[test]
fn simulate_sup_writes_draws() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("draws.csv");
    let o = chibar(&[
        "simulate-sup",
        "--model",
        "mix1",
        "--reps",
        "500",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let summary = stdout(&o);
    assert_eq!(rows(&summary)[0], "alpha,c");
    let draws = std::fs::read_to_string(&out).unwrap();
    assert_eq!(rows(&draws).len(), 501);
}

#[test]
fn configuration_errors_exit_two() {
    assert_eq!(
        chibar(&["weights", "--model", "nope"]).status.code(),
        Some(2)
    );
    assert_eq!(chibar(&["weights"]).status.code(), Some(2));
    assert_eq!(
        chibar(&["simulate-sup", "--model", "mix1", "--alpha", "1.5"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(chibar(&["bogus"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "model = \"mix1\"\nunknown_key = 1\n").unwrap();
    assert_eq!(
        chibar(&["refine", "--config", cfg.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(chibar(&["power", "--model", "mix1"]).status.code(), Some(2));
}

#[test]
fn environment_thread_count_is_validated() {
    let o = Command::new(env!("CARGO_BIN_EXE_chibar"))
        .args(["weights", "--cone", "orthant2"])
        .env("CHIBAR_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failure_rate_threshold_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fs.toml");
    std::fs::write(
        &cfg,
        "[finite_sample]\nasymptotic_reps = 200\nmax_failure_rate = -1.0\n",
    )
    .unwrap();
    let o = chibar(&[
        "finite-sample",
        "--model",
        "mix1",
        "--n",
        "100",
        "--reps",
        "20",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn mc_section_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mc.toml");
    std::fs::write(&cfg, "model = \"mix1\"\n\n[mc]\nreps = 300\nseed = 42\n").unwrap();
    let from_file = stdout(&chibar(&[
        "simulate-sup",
        "--config",
        cfg.to_str().unwrap(),
    ]));
    let from_flags = stdout(&chibar(&[
        "simulate-sup",
        "--model",
        "mix1",
        "--reps",
        "300",
        "--seed",
        "42",
    ]));
    assert_eq!(from_file, from_flags);
    let overridden = stdout(&chibar(&[
        "simulate-sup",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "43",
    ]));
    assert_ne!(rows(&overridden), rows(&from_file));
}

#[test]
fn single_point_refinement_is_the_marginal_quantile() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("refine.toml");
    std::fs::write(
        &cfg,
        "model = \"mix1\"\n\n[mc]\nreps = 40000\n\n[refine]\nsizes = [1]\n",
    )
    .unwrap();
    let text = stdout(&chibar(&["refine", "--config", cfg.to_str().unwrap()]));
    let r = rows(&text);
    assert_eq!(r[0], "grid_n,points,critical_value,std_error");
    let fields: Vec<f64> = r[1].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(fields[1], 1.0);
    // 0.9 quantile of chi2_1, the 0.95 point of (chi2_0 + chi2_1) / 2
    assert!(
        (fields[2] - 2.7055).abs() <= 3.0 * fields[3],
        "{} +- {}",
        fields[2],
        fields[3]
    );
}
