use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_repairbench"));
    c.env_remove("REPAIRBENCH_API_KEY");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn fixture() -> String {
    concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/synthetic.jsonl").to_string()
}

/// Ingest the fixture and split it 80/10/10.
fn prepare(dir: &Path) {
    let o = run(dir, &["ingest", "--kind", "tufano", "--records", &fixture(), "--out", "store.jsonl"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o =
        run(dir, &["split", "--store", "store.jsonl", "--fractions", "0.8,0.1,0.1", "--seed", "3", "--pool", "all"]);
    assert_eq!(code(&o), 0);
    let counts: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(counts["Test"], 20);
    assert_eq!(counts["Train"], 160);
}

const CONFIG: &str = r#"
corpus = "store.jsonl"
prompt_mode = "few-shot"
ks = [1, 3]

[[backends]]
name = "oracle"
type = "oracle"

[[backends]]
name = "echo"
type = "echo"
"#;

#[test]
fn end_to_end_run_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    prepare(d);
    std::fs::write(d.join("run.toml"), CONFIG).unwrap();

    let first = run(d, &["run", "--config", "run.toml", "--run-dir", "a"]);
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    let report = String::from_utf8(first.stdout).unwrap();
    let echo = report.lines().position(|l| l.starts_with("echo")).unwrap();
    let oracle = report.lines().position(|l| l.starts_with("oracle")).unwrap();
    assert!(echo < oracle, "backends sorted by name");
    for cat in ["[All]", "[Insert]", "[Delete]", "[Update]"] {
        assert!(report.contains(cat), "{cat}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("a/manifest.json")).unwrap()).unwrap();
    let fingerprint = manifest["fingerprint"].as_str().unwrap().to_string();
    assert!(report.contains(&fingerprint));

    // fresh directory, same inputs: identical report bytes
    let second = run(d, &["run", "--config", "run.toml", "--run-dir", "b"]);
    assert_eq!(code(&second), 0);
    assert_eq!(std::fs::read(d.join("a/report.txt")).unwrap(), std::fs::read(d.join("b/report.txt")).unwrap());
    assert_eq!(
        std::fs::read(d.join("a/scores/scores.jsonl")).unwrap(),
        std::fs::read(d.join("b/scores/scores.jsonl")).unwrap()
    );

    // rerun in place: nothing regenerated, report unchanged
    let again = run(d, &["run", "--config", "run.toml", "--run-dir", "a"]);
    assert_eq!(code(&again), 0);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["backends"][0]["skipped"], 20);
    assert_eq!(manifest["backends"][0]["generated"], 0);
    let raw = std::fs::read_to_string(d.join("a/raw/oracle.jsonl")).unwrap();
    assert_eq!(raw.lines().count(), 20);

    let o = run(d, &["report", "--run-dir", "a"]);
    assert_eq!(code(&o), 0);
    assert_eq!(o.stdout, std::fs::read(d.join("b/report.txt")).unwrap());
}

#[test]
fn stages_one_by_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    prepare(d);
    std::fs::write(d.join("run.toml"), format!("run_dir = \"staged\"\n{CONFIG}")).unwrap();
    for stage in ["prompt", "predict", "clean", "eval"] {
        let o = run(d, &[stage, "--config", "run.toml"]);
        assert_eq!(code(&o), 0, "{stage}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let prompts = std::fs::read_to_string(d.join("staged/prompts/prompts.jsonl")).unwrap();
    assert_eq!(prompts.lines().count(), 20);
    assert!(d.join("staged/cleaned/echo.jsonl").exists());
    let o = run(d, &["report", "--run-dir", "staged"]);
    assert_eq!(code(&o), 0);

    let o = run(d, &["classify", "--store", "store.jsonl"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("degenerate\t0"));
    let o = run(d, &["index", "--store", "store.jsonl", "--out", "index.jsonl"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("160"));
}

#[test]
fn sampling_annotation_and_kappa() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    prepare(d);
    std::fs::write(d.join("run.toml"), CONFIG).unwrap();
    assert_eq!(code(&run(d, &["run", "--config", "run.toml", "--run-dir", "a"])), 0);
    let o = run(d, &["sample", "--run-dir", "a", "--backend", "oracle", "--seed", "1", "--out", "items.jsonl"]);
    assert_eq!(code(&o), 0);
    let n = std::fs::read_to_string(d.join("items.jsonl")).unwrap().lines().count();
    assert_eq!(n, 19);

    let annotate = |rater: &str, input: &str, resume: bool| {
        let mut args = vec!["annotate", "--rater", rater, "--backend", "oracle", "--input", "items.jsonl"];
        if resume {
            args.push("--resume");
        }
        let mut child = bin()
            .current_dir(d)
            .args(&args)
            .stdin(std::process::Stdio::piped())
            .stdout(std::process::Stdio::piped())
            .stderr(std::process::Stdio::piped())
            .spawn()
            .unwrap();
        use std::io::Write;
        child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
        child.wait_with_output().unwrap()
    };
    // first rater stops after three, then resumes
    let o = annotate("r1", "1\n1\n0\nq\n", false);
    assert_eq!(code(&o), 2);
    assert_eq!(code(&annotate("r1", "1\n", false)), 1, "refuses without --resume");
    let all_ones = "1\n".repeat(n);
    assert_eq!(code(&annotate("r1", &all_ones, true)), 0);
    assert_eq!(code(&annotate("r2", &all_ones, false)), 0);

    let o = run(d, &["kappa", "--input", "annotations.jsonl"]);
    assert_eq!(code(&o), 0);
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.contains("oracle"), "{table}");
    let lines = std::fs::read_to_string(d.join("annotations.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 2 * n);
    let rec: serde_json::Value = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
    for key in ["sample_id", "rater_id", "backend_name", "score", "timestamp"] {
        assert!(rec.get(key).is_some(), "{key}");
    }
}

#[test]
fn error_exits() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    prepare(d);

    let o = run(d, &["report", "--run-dir", "empty"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("no scored runs"));

    std::fs::write(d.join("chat.toml"), "corpus = \"store.jsonl\"\n[[backends]]\nname = \"gpt\"\ntype = \"chat\"\n")
        .unwrap();
    let o = run(d, &["run", "--config", "chat.toml", "--run-dir", "c"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("REPAIRBENCH_API_KEY"));
    assert!(!d.join("c/raw").exists(), "nothing generated before the credential check");

    std::fs::write(
        d.join("edit.toml"),
        "corpus = \"store.jsonl\"\nprompt_mode = \"few-shot\"\n[[backends]]\nname = \"e\"\ntype = \"edit\"\n",
    )
    .unwrap();
    let o = run(d, &["run", "--config", "edit.toml", "--run-dir", "e"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn unreachable_endpoint_is_partial() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    prepare(d);
    // a bound-then-dropped port refuses connections
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    std::fs::write(
        d.join("chat.toml"),
        format!(
            "corpus = \"store.jsonl\"\n[retry]\nmax_retries = 0\n[[backends]]\nname = \"gpt\"\ntype = \"chat\"\nbase_url = \"http://127.0.0.1:{port}/v1\"\n\n[[backends]]\nname = \"oracle\"\ntype = \"oracle\"\n"
        ),
    )
    .unwrap();
    let o = bin()
        .current_dir(d)
        .env("REPAIRBENCH_API_KEY", "test-key")
        .args(["run", "--config", "chat.toml", "--run-dir", "p"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    let failed = std::fs::read_to_string(d.join("p/raw/gpt.failed.jsonl")).unwrap();
    assert_eq!(failed.lines().count(), 20);
    let report = String::from_utf8(o.stdout).unwrap();
    assert!(report.lines().any(|l| l.starts_with("gpt") && l.contains("n/a")), "{report}");
}

#[test]
fn ingest_pairs_and_rejections() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("train.source"),
        "void f ( ) { |startfocus| a ( ) ; |endfocus| } |startcomment| drop this |endcomment|\nbroken line\n",
    )
    .unwrap();
    std::fs::write(d.join("train.target"), "|del|\nx\n").unwrap();
    let o = run(
        d,
        &[
            "ingest",
            "--kind",
            "r4r",
            "--source",
            "train.source",
            "--target",
            "train.target",
            "--split",
            "train",
            "--id-prefix",
            "train-",
            "--out",
            "s.jsonl",
        ],
    );
    assert_eq!(code(&o), 2, "rejected lines make the ingest partial");
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["kept"], 1);
    assert_eq!(report["rejected"][0]["line"], 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("tokenizer"));
    let store = std::fs::read_to_string(d.join("s.jsonl")).unwrap();
    assert!(store.contains("\"category\":\"Delete\""));
    assert!(store.contains("\"id\":\"train-000000\""));
}
