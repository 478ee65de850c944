use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use serde_json::{json, Value};
use textual_history::fixtures;

const BIN: &str = env!("CARGO_BIN_EXE_tht");

fn tht(dir: &Path) -> Command {
    let mut cmd = Command::new(BIN);
    cmd.env_remove("THT_SIBLING_LIMIT").env_remove("THT_AUTH_SECRET").env_remove("THT_PORT");
    cmd.env("THT_DATA_DIR", dir).env("USER", "tester");
    cmd
}

fn run(dir: &Path, args: &[&str]) -> Output {
    tht(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let o = run(dir, args);
    assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
    stdout(&o)
}

/// A fresh data dir with the given fixture imported.
fn store_from(commands: &[textual_history::Command]) -> (tempfile::TempDir, PathBuf) {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("data");
    let doc = tmp.path().join("doc.json");
    std::fs::write(&doc, fixtures::document(commands).unwrap().to_canonical_json()).unwrap();
    ok(&dir, &["init"]);
    let out = ok(&dir, &["import", doc.to_str().unwrap()]);
    assert!(out.starts_with("imported 1 work(s)"), "{out}");
    (tmp, dir)
}

#[test]
fn support_report_as_table_and_json() {
    let (_tmp, dir) = store_from(&fixtures::kv_stemma());
    let table = ok(&dir, &["report", "support", "--work", "KV", "--units", "1.1.1.1,1.1.1.2", "--layer", "Ny"]);
    assert!(table.contains("support: 24/25 (96.0%)"), "{table}");
    assert!(table.starts_with("layer: Ny"));

    let json: Value = serde_json::from_str(&ok(
        &dir,
        &["report", "support", "--work", "KV", "--units", "1.1.1.1,1.1.1.2", "--layer", "Pm", "--format", "json"],
    ))
    .unwrap();
    assert_eq!((json["supported_count"].as_u64(), json["total_tokens"].as_u64()), (Some(12), Some(25)));

    let hints = ok(&dir, &["report", "transmission", "--work", "KV", "--unit", "2.1.22.3"]);
    assert!(hints.contains("archetype hints: post-Ny, post-Tp"), "{hints}");
}

#[test]
fn domain_errors_exit_one_and_usage_errors_exit_two() {
    let (_tmp, dir) = store_from(&fixtures::kv_1_1_1());
    let o = run(&dir, &["report", "support", "--work", "KV", "--units", "1.1.1.1", "--layer", "Zz"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error[UnknownLayerLabel]"), "{}", stderr(&o));

    let o = run(&dir, &["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));
    assert!(!stderr(&o).contains('\x1b'));

    let o = run(&dir, &["tree", "--work", "KV", "--method", "parsimony"]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&dir, &["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("report"));

    let o = Command::new(BIN).env_remove("THT_DATA_DIR").arg("init").output().unwrap();
    assert_eq!(o.status.code(), Some(2));

    let empty = tempfile::tempdir().unwrap();
    let o = run(empty.path(), &["taxonomy", "show"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error[NotInitialized]"), "{}", stderr(&o));
    let o = run(&dir, &["init"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn tree_files_and_matrix() {
    let (tmp, dir) = store_from(&fixtures::three_taxon());
    let out = tmp.path().join("tree.nwk");
    let matrix = tmp.path().join("matrix.csv");
    let printed = ok(
        &dir,
        &[
            "tree", "--work", "DEMO", "--distance", "raw", "--out", out.to_str().unwrap(),
            "--matrix", matrix.to_str().unwrap(),
        ],
    );
    assert!(printed.contains("(3 taxa)"), "{printed}");
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "((A:1,B:1):1,C:2);\n");
    let csv = std::fs::read_to_string(&matrix).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 4, "{csv}");
    assert!(rows[1].starts_with("A,0,2,4"), "{csv}");

    let nj = ok(&dir, &["tree", "--work", "DEMO", "--method", "nj", "--distance", "raw"]);
    assert!(nj.starts_with('(') && nj.trim_end().ends_with(';'), "{nj}");
}

#[test]
fn export_then_import_reproduces_reports() {
    let (tmp, dir) = store_from(&fixtures::kv_stemma());
    let exported = tmp.path().join("export.json");
    ok(&dir, &["export", exported.to_str().unwrap()]);
    let to_stdout = ok(&dir, &["export", "-"]);
    assert_eq!(to_stdout, std::fs::read_to_string(&exported).unwrap());

    let fresh = tmp.path().join("fresh");
    ok(&fresh, &["init"]);
    ok(&fresh, &["import", exported.to_str().unwrap()]);
    for args in [
        &["report", "support", "--work", "KV", "--units", "1.1.1.1,1.1.1.2", "--layer", "Ny"][..],
        &["report", "transmission", "--work", "KV", "--unit", "2.1.22.3", "--format", "json"],
        &["tree", "--work", "KV", "--sources", "both", "--method", "nj", "--units", "1.1.1,1.1.1.1,1.1.1.2"],
    ] {
        assert_eq!(ok(&dir, args), ok(&fresh, args), "{args:?}");
    }
    assert_eq!(ok(&fresh, &["export", "-"]), to_stdout);

    // Import replaces the corpus, so importing the same document again is a no-op on content.
    ok(&fresh, &["import", exported.to_str().unwrap()]);
    assert_eq!(ok(&fresh, &["export", "-"]), to_stdout);
}

fn add_user(dir: &Path, name: &str, password: &str) -> Output {
    let mut child = tht(dir)
        .args(["user", "add", name, "--password-stdin"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    writeln!(child.stdin.take().unwrap(), "{password}").unwrap();
    child.wait_with_output().unwrap()
}

#[test]
fn users_are_managed_offline() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["init"]);
    assert_eq!(add_user(dir, "meera", "s3cret").status.code(), Some(0));
    let o = run(dir, &["user", "add", "ravi", "--role", "admin", "--password-stdin"]);
    assert_eq!(o.status.code(), Some(1), "empty stdin means an empty password");
    assert_eq!(add_user(dir, "ravi", "pw").status.code(), Some(0));
    let o = add_user(dir, "meera", "again");
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error[DuplicateUser]"), "{}", stderr(&o));
    assert_eq!(ok(dir, &["user", "list"]), "meera\tAnnotator\nravi\tAnnotator\n");

    let table: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("users.json")).unwrap()).unwrap();
    assert!(!table.to_string().contains("s3cret"));
}

#[test]
fn taxonomy_show_and_load() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("data");
    ok(&dir, &["init"]);
    let shown: Value = serde_json::from_str(&ok(&dir, &["taxonomy", "show"])).unwrap();
    assert!(shown["Direct"].is_array());

    let file = tmp.path().join("tax.json");
    std::fs::write(&file, json!({ "Direct": ["lemma"], "Indirect": ["echo", "paraphrase"] }).to_string()).unwrap();
    let out = ok(&dir, &["taxonomy", "load", file.to_str().unwrap()]);
    assert!(out.starts_with("taxonomy installed as event"), "{out}");
    assert_eq!(ok(&dir, &["taxonomy", "load", file.to_str().unwrap()]), "taxonomy unchanged\n");
    let shown: Value = serde_json::from_str(&ok(&dir, &["taxonomy", "show"])).unwrap();
    assert_eq!(shown["Indirect"], json!(["echo", "paraphrase"]));
    let log = std::fs::read_to_string(dir.join("events.log")).unwrap();
    assert!(log.contains("\"tester\""), "{log}");

    std::fs::write(&file, r#"{"Both": ["x"]}"#).unwrap();
    let o = run(&dir, &["taxonomy", "load", file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error[MalformedTaxonomy]"), "{}", stderr(&o));
}

#[test]
fn serve_requires_a_secret() {
    let (_tmp, dir) = store_from(&fixtures::kv_1_1_1());
    let o = run(&dir, &["serve", "--port", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error[MissingSecret]"), "{}", stderr(&o));
}

#[test]
fn serve_accepts_users_added_by_the_cli() {
    let (_tmp, dir) = store_from(&fixtures::kv_1_1_1());
    assert_eq!(add_user(&dir, "meera", "s3cret").status.code(), Some(0));
    let mut child = tht(&dir)
        .args(["serve", "--port", "0"])
        .env("THT_AUTH_SECRET", "cli-test-secret")
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let base = line.trim().strip_prefix("listening on ").expect("listening line").to_owned();

    let result = tokio::runtime::Runtime::new().unwrap().block_on(async {
        let client = reqwest::Client::new();
        let login: Value = client
            .post(format!("{base}/api/login"))
            .json(&json!({ "username": "meera", "password": "s3cret" }))
            .send()
            .await?
            .json()
            .await?;
        let token = login["token"].as_str().unwrap_or_default().to_owned();
        let works: Value = client.get(format!("{base}/api/works")).bearer_auth(token).send().await?.json().await?;
        Ok::<_, reqwest::Error>(works)
    });
    child.kill().unwrap();
    child.wait().unwrap();
    let works = result.unwrap();
    assert_eq!(works[0]["id"], "KV", "{works}");
}
