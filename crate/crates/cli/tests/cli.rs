use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_exdev");

fn schemas_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas")
}

fn exdev(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env_remove("EXDEV_THREADS")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Small budgets for every experiment kind.
fn small_config(kind: &str) -> String {
    let body = match kind {
        "tilt" => "[density]\nkind = \"weibull\"\nk = 3.0\n[tilt]\ngrid = \"10:1000:5\"\na = 4.0\nself_neglect_t = [100.0, 1000.0]\n",
        "edgeworth" => "[density]\nkind = \"weibull\"\nk = 2.0\n[edgeworth]\na = 1.2\nn_list = [2, 4]\ngrid_points = 4096\nx_points = 11\n",
        "tail" => "[density]\nkind = \"weibull\"\nk = 2.0\n[tail]\nn = 10\na = 3.0\noracle_samples = 20000\n",
        "gibbs-tv" => "[density]\nkind = \"weibull\"\nk = 2.5\n[gibbs_tv]\nn_list = [4, 8]\nchains = 2\nsteps = 600\n",
        "dlp" => "[dlp]\nk = 2.5\nn_list = [16, 32]\ncount = 5000\n",
        "levelset" => "[density]\nkind = \"weibull\"\nk = 3.0\n[levelset]\na_list = [5.0, 20.0]\ncount = 2000\n",
        "equiv" => "[density]\nkind = \"weibull\"\nk = 2.5\n[equiv]\nn = 16\ncount = 20000\n",
        other => panic!("{other}"),
    };
    format!("experiment = \"{kind}\"\nseed = 7\n{body}")
}

const KINDS: [&str; 7] = ["tilt", "edgeworth", "tail", "gibbs-tv", "dlp", "levelset", "equiv"];

fn run_kind(dir: &Path, kind: &str, extra: &[&str]) -> (Vec<u8>, Vec<u8>) {
    fs::write(dir.join("cfg.toml"), small_config(kind)).unwrap();
    let mut args = vec!["run", "--config", "cfg.toml"];
    args.extend_from_slice(extra);
    let o = exdev(dir, &args);
    assert!(o.status.success(), "{kind}: {}", stderr(&o));
    (
        fs::read(dir.join(format!("{kind}.json"))).unwrap(),
        fs::read(dir.join(format!("{kind}.csv"))).unwrap(),
    )
}

#[test]
fn version_names_library_and_schema() {
    let dir = tempfile::tempdir().unwrap();
    let o = exdev(dir.path(), &["--version"]);
    assert!(o.status.success());
    let s = String::from_utf8(o.stdout).unwrap();
    assert!(s.contains("exdev-core 0.1.0") && s.contains("schema v1"), "{s}");
}

#[test]
fn every_report_matches_its_schema() {
    let dir = tempfile::tempdir().unwrap();
    for kind in KINDS {
        let (json, csv) = run_kind(dir.path(), kind, &[]);
        let report: serde_json::Value = serde_json::from_slice(&json).unwrap();
        let schema: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(schemas_dir().join(format!("{kind}.v1.json"))).unwrap())
                .unwrap();
        let validator = jsonschema::validator_for(&schema).unwrap();
        let errors: Vec<String> = validator.iter_errors(&report).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{kind}: {errors:?}");
        assert_eq!(report["seed"], 7);
        assert_eq!(report["config"]["seed"], 7);
        let csv = String::from_utf8(csv).unwrap();
        assert!(!csv.contains('\r'));
        assert!(csv.lines().count() >= 2, "{kind}: {csv}");
    }
}

#[test]
fn tilt_report_carries_abelian_fields() {
    let dir = tempfile::tempdir().unwrap();
    let (json, csv) = run_kind(dir.path(), "tilt", &[]);
    let r: serde_json::Value = serde_json::from_slice(&json).unwrap();
    for key in ["t", "m", "s2", "mu3", "psi", "psi_prime", "m_ratio", "s2_ratio", "skewness"] {
        assert_eq!(r["result"]["abelian"][key].as_array().unwrap().len(), 5, "{key}");
    }
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 6);
}

#[test]
fn identical_config_and_seed_give_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for kind in KINDS {
        let ra = run_kind(a.path(), kind, &[]);
        let rb = run_kind(b.path(), kind, &[]);
        assert!(ra == rb, "{kind} differs between runs");
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for kind in ["tail", "gibbs-tv", "dlp"] {
        let ra = run_kind(a.path(), kind, &["--threads", "1"]);
        let rb = run_kind(b.path(), kind, &["--threads", "3"]);
        assert!(ra == rb, "{kind} depends on the thread count");
    }
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let (a, _) = run_kind(dir.path(), "tail", &[]);
    let (b, _) = run_kind(dir.path(), "tail", &["--seed", "8"]);
    let b: serde_json::Value = serde_json::from_slice(&b).unwrap();
    let a: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(b["seed"], 8);
    assert_ne!(a["result"]["oracle"]["estimate"], b["result"]["oracle"]["estimate"]);
}

#[test]
fn subcommand_flags_override_file_values() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.toml"), small_config("edgeworth")).unwrap();
    let o = exdev(
        dir.path(),
        &["edgeworth", "--config", "cfg.toml", "--n-list", "2,4,8", "--out", "e.csv"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let r: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("e.json")).unwrap()).unwrap();
    assert_eq!(r["config"]["edgeworth"]["n_list"], serde_json::json!([2, 4, 8]));
    assert_eq!(r["config"]["edgeworth"]["grid_points"], 4096);
    let csv = fs::read_to_string(dir.path().join("e.csv")).unwrap();
    assert!(csv.starts_with("n,x,oracle,edgeworth,gaussian,abs_err\n"));
}

#[test]
fn density_file_flag_and_report_alias() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("d.json"), r#"{"kind": "double_exp"}"#).unwrap();
    let o = exdev(
        dir.path(),
        &["tilt", "--density", "d.json", "--grid", "10:100:3", "--report", "out/r.json"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let r: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("out/r.json")).unwrap()).unwrap();
    assert_eq!(r["config"]["density"]["kind"], "double_exp");
    assert_eq!(r["result"]["class"], "infinity");
    assert!(dir.path().join("out/r.csv").exists());
}

fn expect_failure(dir: &Path, args: &[&str], code: i32, tag: &str) {
    let o = exdev(dir, args);
    assert_eq!(o.status.code(), Some(code), "{args:?}: {}", stderr(&o));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with(&format!("{tag}: ")), "{args:?}: {err}");
}

#[test]
fn invalid_inputs_exit_2_with_tags() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("bad.toml"), "experiment = \"tilt\"\n[tilt\n").unwrap();
    fs::write(p.join("unknown.toml"), "experiment = \"tilt\"\ncolour = 1\n").unwrap();
    fs::write(p.join("noexp.toml"), "[density]\nkind = \"double_exp\"\n").unwrap();
    fs::write(
        p.join("neg.toml"),
        "experiment = \"gibbs-tv\"\n[density]\nkind = \"weibull\"\nk = 2.5\n[gibbs_tv]\nalpha = -1.0\n",
    )
    .unwrap();
    fs::write(p.join("badk.toml"), "experiment = \"tilt\"\n[density]\nkind = \"weibull\"\nk = 0.5\n").unwrap();
    fs::write(p.join("d.toml"), "kind = \"weibull\"\nk = 2.0\n").unwrap();
    fs::write(p.join("badd.toml"), "kind = \"lognormal\"\n").unwrap();

    expect_failure(p, &["tilt", "--density", "missing.toml"], 2, "CONFIG_MISSING");
    expect_failure(p, &["run", "--config", "missing.toml"], 2, "CONFIG_MISSING");
    expect_failure(p, &["tilt"], 2, "CONFIG_MISSING");
    expect_failure(p, &["run", "--config", "bad.toml"], 2, "CONFIG_PARSE");
    expect_failure(p, &["run", "--config", "unknown.toml"], 2, "CONFIG_PARSE");
    expect_failure(p, &["tilt", "--density", "badd.toml"], 2, "CONFIG_PARSE");
    expect_failure(p, &["run", "--config", "noexp.toml"], 2, "CONFIG_INVALID");
    expect_failure(p, &["run"], 2, "CONFIG_INVALID");
    expect_failure(p, &["run", "--config", "neg.toml"], 2, "CONFIG_INVALID");
    expect_failure(p, &["tilt", "--config", "neg.toml"], 2, "CONFIG_INVALID");
    expect_failure(p, &["tilt", "--density", "d.toml", "--grid", "5:1:3"], 2, "CONFIG_INVALID");
    expect_failure(p, &["tilt", "--density", "d.toml", "--t", "1", "--a", "2"], 2, "CONFIG_INVALID");
    expect_failure(p, &["tail", "--density", "d.toml", "--n", "abc"], 2, "CONFIG_INVALID");
    expect_failure(p, &["levelset", "--density", "d.toml", "--f", "cube"], 2, "CONFIG_INVALID");
    expect_failure(p, &["frobnicate"], 2, "CONFIG_INVALID");
    expect_failure(p, &[], 2, "CONFIG_INVALID");
    expect_failure(p, &["run", "--config", "badk.toml"], 2, "INVALID_PARAMETER");
    expect_failure(p, &["tilt", "--density", "d.toml", "--threads", "0"], 2, "CONFIG_INVALID");

    let o = Command::new(BIN)
        .args(["tilt", "--density", "d.toml", "--grid", "10:100:3"])
        .current_dir(p)
        .env("EXDEV_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("CONFIG_INVALID: "));
}

#[test]
fn numerical_failure_exits_3_with_library_tag() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("d.toml"), "kind = \"weibull\"\nk = 2.0\n").unwrap();
    // λ_n is far below the admissibility threshold at n = 1
    expect_failure(p, &["tail", "--density", "d.toml", "--n", "1", "--a", "1.5"], 3, "OUT_OF_RANGE");
    // the exceedance level is unreachable from the tilt at this n
    expect_failure(
        p,
        &["equiv", "--density", "d.toml", "--n", "4", "--a", "0.2", "--count", "2000"],
        3,
        "NOT_SOLVABLE",
    );
}
