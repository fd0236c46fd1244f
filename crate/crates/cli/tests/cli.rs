use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chaossync_core::analysis::read_csv_table;

fn paper_toml() -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/worked-example.toml");
    fs::read_to_string(path).unwrap()
}

fn chaossync(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chaossync"))
        .args(args)
        .current_dir(cwd)
        .env_remove("CHAOSSYNC_OUT")
        .output()
        .unwrap()
}

fn text(o: &Output) -> String {
    format!(
        "{}{}",
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    )
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn rows(path: &Path) -> usize {
    read_csv_table(fs::File::open(path).unwrap())
        .unwrap()
        .rows
        .len()
}

#[test]
fn simulate_writes_trace_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "paper.toml", &paper_toml());
    let o = chaossync(
        &[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            "run",
        ],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", text(&o));
    assert_eq!(rows(&tmp.path().join("run/trace.csv")), 1001);
    let report = fs::read_to_string(tmp.path().join("run/report.csv")).unwrap();
    assert!(report.contains("lyapunov_monotone,true"));
    assert!(report.contains("settling_time:e11_2131,8.7"));
}

#[test]
fn duplicate_l_index_is_rejected_with_location() {
    let tmp = tempfile::tempdir().unwrap();
    let body = paper_toml().replace(r#""(1,3,2)""#, r#""(1,3,3)""#);
    let cfg = write_config(tmp.path(), "dup.toml", &body);
    let o = chaossync(&["simulate", "--config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let msg = text(&o);
    assert!(msg.contains("block 1, slot 2"), "{msg}");
    assert!(msg.contains("l-index 3"), "{msg}");
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn missing_and_malformed_configs_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = chaossync(&["simulate", "--config", "absent.toml"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("absent.toml"));

    let body = paper_toml().replace("gain = 1.0", "gain = \"fast\"");
    let cfg = write_config(tmp.path(), "bad.toml", &body);
    let o = chaossync(&["simulate", "--config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let msg = text(&o);
    assert!(msg.contains("gain") && msg.contains("line"), "{msg}");

    let o = chaossync(
        &[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--policy",
            "half",
        ],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn divergence_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "paper.toml", &paper_toml());
    let o = chaossync(
        &[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--policy",
            "even",
        ],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(3), "{}", text(&o));
    assert!(text(&o).contains("diverged"));
}

#[test]
fn flags_override_file_values() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "paper.toml", &paper_toml());
    let c = cfg.to_str().unwrap();
    let o = chaossync(
        &[
            "simulate", "--config", c, "--t-end", "1", "--dt", "0.01", "--out", "a",
        ],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", text(&o));
    // 100 steps recorded every 10th step.
    assert_eq!(rows(&tmp.path().join("a/trace.csv")), 11);

    let o = chaossync(
        &[
            "simulate",
            "--config",
            c,
            "--t-end",
            "1",
            "--variant",
            "without-z",
            "--out",
            "b",
        ],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", text(&o));
    let o = chaossync(
        &["simulate", "--config", c, "--variant", "sideways"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_directory_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let body = paper_toml()
        .replace("t_end = 10.0", "t_end = 0.1")
        .replace("[output]", "[output]\ndir = \"from-config\"");
    let cfg = write_config(tmp.path(), "c.toml", &body);
    let c = cfg.to_str().unwrap();
    let run = |extra: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_chaossync"));
        cmd.args(["simulate", "--config", c])
            .args(extra)
            .current_dir(tmp.path());
        match env {
            Some(v) => cmd.env("CHAOSSYNC_OUT", v),
            None => cmd.env_remove("CHAOSSYNC_OUT"),
        };
        assert!(cmd.output().unwrap().status.success());
    };
    run(&[], None);
    assert!(tmp.path().join("from-config/trace.csv").exists());
    run(&[], Some("from-env"));
    assert!(tmp.path().join("from-env/trace.csv").exists());
    run(&["--out", "from-flag"], Some("from-env-2"));
    assert!(tmp.path().join("from-flag/trace.csv").exists());
    assert!(!tmp.path().join("from-env-2").exists());

    let plain = write_config(
        tmp.path(),
        "p.toml",
        &paper_toml().replace("t_end = 10.0", "t_end = 0.1"),
    );
    let o = chaossync(
        &["simulate", "--config", plain.to_str().unwrap()],
        tmp.path(),
    );
    assert!(o.status.success());
    assert!(tmp.path().join("out/trace.csv").exists());
}

#[test]
fn validate_reports_classes_and_problems() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "paper.toml", &paper_toml());
    let o = chaossync(&["validate", "--config", cfg.to_str().unwrap()], tmp.path());
    assert!(o.status.success());
    let out = String::from_utf8(o.stdout).unwrap();
    assert_eq!(out.lines().filter(|l| l.contains(" slot ")).count(), 6);
    assert!(out.contains("block 1 slot 1: (2,1,3) j=m≠i≠l"));
    assert!(out.lines().last() == Some("ok"));

    let body = paper_toml().replace(r#""(2,1,3)""#, r#""(1,1,1)""#);
    let cfg = write_config(tmp.path(), "flat.toml", &body);
    let o = chaossync(&["validate", "--config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(
        text(&o).contains("block 1, slot 1: non-switching"),
        "{}",
        text(&o)
    );

    let mut body = paper_toml();
    for k in ["c1", "c2", "d1", "d2"] {
        body = body.replace(
            &format!("{k} = [1.0, 1.0, 1.0]"),
            &format!("{k} = [0.0, 0.0, 0.0]"),
        );
    }
    let cfg = write_config(tmp.path(), "nocd.toml", &body);
    let o = chaossync(&["validate", "--config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("C and D are both zero"), "{}", text(&o));
}

#[test]
fn enumerate_patterns_counts_and_range() {
    let tmp = tempfile::tempdir().unwrap();
    let o = chaossync(&["enumerate-patterns", "3"], tmp.path());
    assert!(text(&o).contains("n = 3: 78 valid switching tuples of 81"));
    let o = chaossync(&["enumerate-patterns", "2"], tmp.path());
    assert!(text(&o).contains("14 valid switching tuples of 16"));
    for n in ["1", "7"] {
        let o = chaossync(&["enumerate-patterns", n], tmp.path());
        assert_eq!(o.status.code(), Some(2));
    }
}

#[test]
fn reproduce_paper_figures() {
    let tmp = tempfile::tempdir().unwrap();
    let o = chaossync(&["reproduce-paper", "--out", "figs"], tmp.path());
    assert!(o.status.success(), "{}", text(&o));
    let dir = tmp.path().join("figs");
    let fig1 = read_csv_table(fs::File::open(dir.join("figure1.csv")).unwrap()).unwrap();
    assert_eq!(fig1.columns, ["t", "x12+y11", "z13+w11"]);
    for row in fig1.rows.iter().filter(|r| r[0] >= 8.7) {
        assert!((row[1] - row[2]).abs() < 1e-3);
    }
    let headers: Vec<String> = (1..=6)
        .map(|k| {
            let s = fs::read_to_string(dir.join(format!("figure{k}.csv"))).unwrap();
            s.lines().next().unwrap().to_string()
        })
        .collect();
    assert_eq!(headers[3], "t,x23+y22,z22+w21");
    assert_eq!(headers[5], "t,x22+y21,z21+w23");

    let fig7 = read_csv_table(fs::File::open(dir.join("figure7.csv")).unwrap()).unwrap();
    assert_eq!(fig7.columns.len(), 7);
    for c in 1..7 {
        let col: Vec<f64> = fig7.rows.iter().map(|r| r[c]).collect();
        assert!(col.windows(2).all(|w| w[1].abs() <= w[0].abs()));
        let settled = fig7.rows.iter().zip(&col).filter(|(r, _)| r[0] >= 8.7);
        assert!(settled.clone().all(|(_, e)| e.abs() < 1e-3));
    }
}

#[test]
fn sweep_runs_each_config_into_its_own_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let short = paper_toml().replace("t_end = 10.0", "t_end = 0.5");
    let a = write_config(tmp.path(), "a.toml", &short);
    let b = write_config(
        tmp.path(),
        "b.toml",
        &short.replace("gain = 1.0", "gain = 2.0"),
    );
    let o = chaossync(
        &[
            "sweep",
            "--config",
            a.to_str().unwrap(),
            "--config",
            b.to_str().unwrap(),
            "--out",
            "sw",
        ],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", text(&o));
    assert!(tmp.path().join("sw/a/trace.csv").exists());
    assert!(tmp.path().join("sw/b/report.csv").exists());

    let o = chaossync(
        &[
            "sweep",
            "--config",
            a.to_str().unwrap(),
            "--policy",
            "even",
            "--t-end",
            "3",
            "--out",
            "sw2",
        ],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(3));
}
