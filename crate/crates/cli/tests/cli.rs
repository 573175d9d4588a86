use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn dnls(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dnls"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn models() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn model(name: &str) -> String {
    models().join(name).canonicalize().unwrap().display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn small_config(dir: &Path, name: &str, model: &str, eps: f64, weights: &str, extra: &str) -> PathBuf {
    let text = format!(
        r#"model = "{model}"
[grid]
length = 100.0
points = 256
[solver]
dt = 0.01
t_end = 2.0
eps = {eps}
sample_count = 11
sample_spacing = "linear"
{extra}
[initial]
kind = "gaussian"
sigma = 2.0
weights = {weights}
"#
    );
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn manifest_complete(root: &Path) {
    let m: Value = serde_json::from_str(&fs::read_to_string(root.join("manifest.json")).unwrap()).unwrap();
    let listed: Vec<(String, String)> = m["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| {
            (
                f["path"].as_str().unwrap().to_string(),
                f["sha256"].as_str().unwrap().to_string(),
            )
        })
        .collect();
    let mut on_disk = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "manifest.json" {
                on_disk.push(p);
            }
        }
    }
    assert_eq!(on_disk.len(), listed.len(), "files in {}", root.display());
    for p in on_disk {
        let rel = p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
        let sha = hex::encode(Sha256::digest(fs::read(&p).unwrap()));
        assert!(listed.contains(&(rel.clone(), sha)), "{rel} missing or stale");
    }
}

#[test]
fn check_example3_holds() {
    let tmp = tempfile::tempdir().unwrap();
    let o = dnls(&["check", &model("example3.toml")], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("regime = b3"), "{s}");
    assert!(s.contains("[condition a]\nverdict = holds-exactly"), "{s}");
}

#[test]
fn check_violation_prints_witness() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(models().join("example2.toml"))
        .unwrap()
        .replace(
            "[2, 2, 0, 4, 0, 2, 1, 1.0, 0.5]",
            "[2, 2, 0, 4, 0, 2, 1, 3.0, 0.5]",
        );
    let p = tmp.path().join("ex2.toml");
    fs::write(&p, text).unwrap();
    let out = tmp.path().join("out");
    let o = dnls(
        &[
            "check",
            p.to_str().unwrap(),
            "--condition",
            "a,b0",
            "--out",
            out.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    let s = stdout(&o);
    assert!(
        s.contains("verdict = violated") && s.contains("witness = xi="),
        "{s}"
    );
    let dir = out.join("ex2-check");
    let rows = fs::read_to_string(dir.join("summary.jsonl")).unwrap();
    assert_eq!(rows.lines().count(), 2);
    manifest_complete(&dir);
}

#[test]
fn malformed_model_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("bad.toml"), "masses = [1.0\n").unwrap();
    let o = dnls(&["check", "bad.toml"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    fs::write(
        tmp.path().join("bad.toml"),
        "masses = [1.0]\nmonomials = [[1, 1, 0, 1, 0, 7, 0, 1.0, 0.0]]\n",
    )
    .unwrap();
    assert_eq!(dnls(&["check", "bad.toml"], tmp.path()).status.code(), Some(2));
}

#[test]
fn zero_data_gives_zero_observables() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(
        tmp.path(),
        "zero.toml",
        &model("nls_single.toml"),
        0.1,
        "[[0.0, 0.0]]",
        "",
    );
    let o = dnls(
        &[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            "runs",
            "-q",
        ],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(tmp.path().join("runs/zero/observables.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,l2_1,linf_1,w1inf_1"));
    let mut rows = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(v[1..].iter().all(|&x| x == 0.0), "{line}");
        rows += 1;
    }
    assert!(rows >= 11);
}

#[test]
fn reruns_are_byte_identical_in_new_directories() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(
        tmp.path(),
        "two.toml",
        &model("nls_two.toml"),
        0.5,
        "[[1.0, 0.0], [0.5, 0.5]]",
        "j_norms = true",
    );
    for _ in 0..2 {
        let o = dnls(
            &[
                "simulate",
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                "runs",
                "-q",
            ],
            tmp.path(),
        );
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = fs::read(tmp.path().join("runs/two/observables.csv")).unwrap();
    let b = fs::read(tmp.path().join("runs/two-2/observables.csv")).unwrap();
    assert_eq!(a, b);
    let header = String::from_utf8_lossy(&a).lines().next().unwrap().to_string();
    assert!(header.ends_with("j_l2_1,j_l2_2"), "{header}");
    manifest_complete(&tmp.path().join("runs/two"));
}

#[test]
fn blowup_exits_three_with_last_good_time() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(
        tmp.path(),
        "blow.toml",
        &model("nls_amplifying.toml"),
        3.0,
        "[[1.0, 0.0]]",
        "blowup_ceiling = 1e3",
    );
    let o = dnls(
        &[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            "runs",
            "-q",
        ],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(3));
    let root = tmp.path().join("runs/blow");
    let info: Value = serde_json::from_str(&fs::read_to_string(root.join("blowup.json")).unwrap()).unwrap();
    let t = info["last_good_time"].as_f64().unwrap();
    // the ODE i u' = i|u|²u from |u| = 3 blows up at t = 1/18
    assert!(t > 0.0 && t < 1.0 / 18.0 + 0.01, "{t}");
    manifest_complete(&root);
}

#[test]
fn pipeline_stops_when_resonance_fails() {
    let tmp = tempfile::tempdir().unwrap();
    // u1 ū2 u1 has mass 1 + 1 - 2 = 0, not m1 = 1
    fs::write(
        tmp.path().join("res.toml"),
        "masses = [1.0, 2.0]\nmonomials = [[1, 1, 0, 1, 0, 4, 0, 1.0, 0.0]]\n",
    )
    .unwrap();
    let cfg = small_config(
        tmp.path(),
        "res-run.toml",
        "res.toml",
        0.1,
        "[[1.0, 0.0], [1.0, 0.0]]",
        "",
    );
    let o = dnls(
        &[
            "pipeline",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            "runs",
            "-q",
        ],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    let s = stdout(&o);
    assert!(s.contains("stopped after check: condition (a) fails"), "{s}");
    let entries: Vec<String> = fs::read_dir(tmp.path().join("runs"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(entries, vec!["res-run-pipeline".to_string()]);
}

#[test]
fn pipeline_classifies_and_analyzes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(
        tmp.path(),
        "diss.toml",
        &model("nls_single.toml"),
        0.1,
        "[[1.0, 0.0]]",
        "snapshot_times = [1.0, 2.0]",
    );
    let o = dnls(
        &[
            "pipeline",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            "runs",
            "-q",
        ],
        tmp.path(),
    );
    let s = stdout(&o);
    assert!(s.contains("regime = b1"), "{s}");
    let analysis = tmp.path().join("runs/diss-analysis");
    for f in [
        "fits.json",
        "summary.jsonl",
        "profiles/0000.csv",
        "residuals/0001.csv",
    ] {
        assert!(analysis.join(f).exists(), "{f}");
    }
    let summary = fs::read_to_string(analysis.join("summary.jsonl")).unwrap();
    assert_eq!(summary.lines().count(), 2);
    manifest_complete(&analysis);
    manifest_complete(&tmp.path().join("runs/diss-pipeline"));
}

#[test]
fn reduce_leaves_free_profiles_unchanged() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("free.toml"), "masses = [1.0]\nmonomials = []\n").unwrap();
    fs::write(
        tmp.path().join("p.csv"),
        "t,xi,re_1,im_1\n1.0,-1.0,0.5,0.25\n1.0,0.0,1.0,0.0\n1.0,1.0,0.0,-0.5\n",
    )
    .unwrap();
    let o = dnls(
        &[
            "reduce",
            "--model",
            "free.toml",
            "--profile",
            "p.csv",
            "--t-end",
            "100",
            "--steps",
            "10",
        ],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    let last: Vec<f64> = s
        .lines()
        .nth(3)
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert_eq!(last, vec![100.0, 1.0, 0.0, -0.5]);
}

#[test]
fn reduce_matches_single_nls_closed_form() {
    // i α' = λ|α|²α/t with λ = -i: |α|² = |α₀|²/(1 + 2|α₀|² log(t/t₀))
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("p.csv"), "t,xi,re_1,im_1\n1.0,0.0,0.6,0.8\n").unwrap();
    let o = dnls(
        &[
            "reduce",
            "--model",
            &model("nls_single.toml"),
            "--profile",
            "p.csv",
            "--t-end",
            "1000",
            "--steps",
            "2000",
        ],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Vec<f64> = stdout(&o)
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    let exact = 1.0 / (1.0 + 2.0 * 1000f64.ln());
    assert!((v[2] * v[2] + v[3] * v[3] - exact).abs() < 1e-10);
}

#[test]
fn kms_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let ok = dnls(
        &[
            "kms",
            "--c0",
            "1",
            "--p",
            "2",
            "--q",
            "1.5",
            "--psi2",
            "1",
            "--samples",
            "5",
        ],
        tmp.path(),
    );
    assert_eq!(ok.status.code(), Some(0));
    let r: Value = serde_json::from_str(&stdout(&ok)).unwrap();
    assert!(r["min_margin"].as_f64().unwrap() >= 0.0);
    let bad = dnls(
        &["kms", "--c0", "-1", "--p", "2", "--q", "1.5", "--psi2", "1"],
        tmp.path(),
    );
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn sweep_runs_every_config() {
    let tmp = tempfile::tempdir().unwrap();
    let a = small_config(
        tmp.path(),
        "a.toml",
        &model("nls_single.toml"),
        0.1,
        "[[1.0, 0.0]]",
        "",
    );
    let b = small_config(
        tmp.path(),
        "b.toml",
        &model("dnls_single.toml"),
        0.1,
        "[[1.0, 0.0]]",
        "",
    );
    let o = dnls(
        &[
            "sweep",
            a.to_str().unwrap(),
            b.to_str().unwrap(),
            "--out",
            "runs",
            "--threads",
            "2",
        ],
        tmp.path(),
    );
    let rows: Vec<Value> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r["ok"] == Value::Bool(true)), "{rows:?}");
    for id in ["a", "b"] {
        manifest_complete(&tmp.path().join("runs").join(id));
    }
}
