use std::path::Path;
use std::process::{Command, Output};

fn anovaemu(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anovaemu"))
        .args(args)
        .current_dir(dir)
        .env_remove("ANOVAEMU_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn screen_ishigami_writes_report() {
    let tmp = tempfile::tempdir().unwrap();
    let o = anovaemu(&["screen", "ishigami", "--out", "res"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("recommended d0 = 2"), "{text}");
    let csv = std::fs::read_to_string(tmp.path().join("res/screen_ishigami.csv")).unwrap();
    assert!(csv.starts_with("input,S,S_se,ST,ST_se,UB,UB_se\n"));
    assert_eq!(csv.lines().count(), 4);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("res/screen_ishigami.json")).unwrap())
            .unwrap();
    assert_eq!(json["recommended_d0"], 2);
}

#[test]
fn same_seed_gives_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = anovaemu(
            &["fit-predict", "gfunction-b", "--db", "--n", "200", "--test-n", "50", "--seed", "7", "--out", out],
            tmp.path(),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["predictions_gfunction-b.csv", "metrics_gfunction-b.json", "emulator_gfunction-b.json"] {
        let a = std::fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(f)).unwrap();
        assert!(a == b, "{f} differs");
    }
}

#[test]
fn seed_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_anovaemu"))
        .args(["--dump-config", "screen", "ishigami"])
        .env("ANOVAEMU_SEED", "42")
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(stdout(&o).contains("seed = 42"));
}

#[test]
fn dump_config_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let o = anovaemu(&["--dump-config", "--eps", "0.1", "--d0", "2", "screen", "ishigami"], tmp.path());
    assert!(o.status.success());
    std::fs::write(tmp.path().join("c.toml"), stdout(&o)).unwrap();
    let again = anovaemu(&["--dump-config", "--config", "c.toml", "screen", "ishigami"], tmp.path());
    assert!(again.status.success());
    assert_eq!(stdout(&o), stdout(&again));
    assert!(!tmp.path().join("anovaemu-out").exists());
}

#[test]
fn configuration_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: &[&[&str]] = &[
        &["benchmark", "df-constant", "--r", "0"],
        &["benchmark", "df-constant", "--r", "10"],
        &["--n", "0", "screen", "ishigami"],
        &["--tau", "1.5", "fit-predict", "gfunction-b"],
        &["--d0", "4", "fit-predict", "ishigami"],
        &["screen", "external-table"],
        &["--config", "missing.toml", "screen", "ishigami"],
        &["fit-predict", "external-table"],
    ];
    for args in cases {
        let o = anovaemu(args, tmp.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    std::fs::write(tmp.path().join("bad.toml"), "[run]\nbogus = 1\n").unwrap();
    let o = anovaemu(&["--config", "bad.toml", "screen", "ishigami"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn external_table_two_step_workflow() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(
        dir.join("ext.toml"),
        "[run]\nd0 = 1\nn = 300\n\n[[external.inputs]]\nkind = \"uniform\"\nparams = [0.0, 1.0]\n\n\
         [[external.inputs]]\nkind = \"uniform\"\nparams = [0.0, 2.0]\n",
    )
    .unwrap();
    let o = anovaemu(&["fit-predict", "external-table", "--config", "ext.toml", "--out", "r"], dir);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let plan = std::fs::read_to_string(dir.join("r/plan_external.csv")).unwrap();
    let mut lines = plan.lines();
    assert_eq!(lines.next(), Some("row,i,l,x1,x2"));
    let mut y = String::from("y\n");
    let mut rows = 0;
    for line in lines {
        let f: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        y.push_str(&format!("{}\n", f[3] + 2.0 * f[4]));
        rows += 1;
    }
    assert_eq!(rows, 300 * 2);
    std::fs::write(dir.join("y.csv"), y).unwrap();
    std::fs::write(dir.join("at.csv"), "x1,x2\n0.5,1.0\n").unwrap();

    let o = anovaemu(
        &[
            "fit-predict", "external-table", "--config", "ext.toml", "--out", "r",
            "--outputs", "y.csv", "--predict-at", "at.csv",
        ],
        dir,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let pred = std::fs::read_to_string(dir.join("r/predictions_external.csv")).unwrap();
    let p: f64 = pred.lines().nth(1).unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert!((p - 2.5).abs() < 0.3, "prediction {p}");
    assert!(dir.join("r/emulator_external.json").exists());
}

#[test]
fn benchmark_writes_study_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let o = anovaemu(&["benchmark", "db-linear", "--r", "30", "--ns", "100,400", "--out", "r"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("r/study_db-linear.csv")).unwrap();
    assert!(csv.starts_with("N,probe,bias,var,mse\n"));
    assert_eq!(csv.lines().count(), 1 + 2 * 5);
}

#[test]
fn pde_demo_small_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let o = anovaemu(&["pde-demo", "--d", "12", "--n", "256", "--out", "r"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("r/pde_summary.json")).unwrap()).unwrap();
    assert!(summary["gradient_check_d10_max_rel_error"].as_f64().unwrap() < 1e-6);
    assert!(tmp.path().join("r/pde_field.csv").exists());
}
