//! End-to-end runs of the `divfield` binary.

use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

struct Run {
    code: i32,
    json: Value,
    stderr: String,
}

fn run(cache: &Path, args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_divfield"))
        .args(args)
        .env("DIVFIELD_CACHE_DIR", cache)
        .env_remove("DIVFIELD_LMFDB_URL")
        .output()
        .expect("binary runs");
    let stdout = String::from_utf8(out.stdout).unwrap();
    Run {
        code: out.status.code().unwrap_or(-1),
        json: serde_json::from_str(&stdout).unwrap_or(Value::Null),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

#[test]
fn classify_cm_minus_27() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(dir.path(), &["classify", "--cm", "-27", "--n", "6"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.json["result"]["nilpotent"], false);
    assert!(!r.json["result"]["reasons"].as_array().unwrap().is_empty());
    assert_eq!(r.json["manifest"]["command"], "classify");
}

#[test]
fn classify_images() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(dir.path(), &["classify", "--images", "3=ns+", "--n", "3"]);
    assert_eq!(r.json["result"]["nilpotent"], true, "{}", r.stderr);
    let r = run(dir.path(), &["classify", "--j0", "2", "--n", "3"]);
    assert_eq!(r.json["result"]["nilpotent"], true, "{}", r.stderr);
    let r = run(dir.path(), &["classify", "--cm", "-11", "--n", "2"]);
    assert_eq!(r.json["result"]["nilpotent"], false, "{}", r.stderr);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["no-such-command"]).code, 2);
    assert_eq!(run(dir.path(), &["classify", "--n", "6", "--images", "3=bogus"]).code, 2);
    assert_eq!(run(dir.path(), &["classify", "--cm", "-5", "--n", "6"]).code, 2);
    assert_eq!(run(dir.path(), &["fetch", "xx"]).code, 2);
    // a well-formed label that is neither a fixture nor cached, offline
    assert_eq!(run(dir.path(), &["fetch", "11.a1"]).code, 3);
    // pole of a j-map
    assert_eq!(run(dir.path(), &["jmap", "--id", "h2", "--t", "0"]).code, 3);
}

#[test]
fn verify_table2_carries_sources() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(dir.path(), &["verify", "--table", "2"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows = r.json["result"][0]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|row| row["pass"] == true && !row["source"].as_str().unwrap().is_empty()));
    assert!(rows.iter().any(|row| row["found"] == "35.315.19"));
}

/// The exit status of `verify` agrees with the rows it prints.
#[test]
fn verify_status_matches_rows() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(dir.path(), &["verify", "--table", "1"]);
    let rows = r.json["result"][0]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    let failing = rows.iter().filter(|row| row["pass"] == false).count();
    if failing == 0 {
        assert_eq!(r.code, 0);
    } else {
        assert_eq!(r.code, 4);
        assert_eq!(r.stderr.matches("@@ ").count(), failing, "{}", r.stderr);
    }
}

#[test]
fn cache_hit_version_and_quarantine() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["search-nearco", "--p", "2", "--k", "2"];
    let first = run(dir.path(), &args);
    assert_eq!(first.code, 0, "{}", first.stderr);
    assert_eq!(first.json["manifest"]["cache"], "miss");
    let second = run(dir.path(), &args);
    assert_eq!(second.json["manifest"]["cache"], "hit");
    assert_eq!(first.json["manifest"]["result_digest"], second.json["manifest"]["result_digest"]);
    assert_eq!(first.json["result"], second.json["result"]);

    // corrupt the only blob
    let results = dir.path().join("results");
    let blob = fs::read_dir(&results).unwrap().next().unwrap().unwrap().path();
    fs::write(&blob, "{ not json").unwrap();
    let third = run(dir.path(), &args);
    assert_eq!(third.json["manifest"]["cache"], "quarantined");
    assert_eq!(third.json["manifest"]["result_digest"], first.json["manifest"]["result_digest"]);
    assert_eq!(fs::read_dir(dir.path().join("quarantine")).unwrap().count(), 1);
    assert_eq!(run(dir.path(), &args).json["manifest"]["cache"], "hit");
}

#[test]
fn digest_independent_of_threads() {
    let dir = tempfile::tempdir().unwrap();
    let one = run(dir.path(), &["--threads", "1", "--no-cache", "search-nilpotent", "--p", "2,3,5"]);
    let four = run(dir.path(), &["--threads", "4", "--no-cache", "search-nilpotent", "--p", "2,3,5"]);
    assert_eq!(one.code, 0, "{}", one.stderr);
    assert_eq!(one.json["manifest"]["cache"], "disabled");
    assert_eq!(one.json["manifest"]["result_digest"], four.json["manifest"]["result_digest"]);
    assert_eq!(one.json["result"]["3"].as_array().unwrap().len(), 1);
}

#[test]
fn jmap_values() {
    let dir = tempfile::tempdir().unwrap();
    let j = |args: &[&str]| run(dir.path(), args).json["result"]["j"].clone();
    assert_eq!(j(&["jmap", "--id", "h2", "--t", "256"]), "0");
    assert_eq!(j(&["jmap", "--id", "f2", "--t", "0"]), "1728");
    assert_eq!(j(&["jmap", "--id", "f15", "--x", "-1", "--y", "0"]), "1728");
    let off = run(dir.path(), &["jmap", "--id", "f15", "--x", "1", "--y", "2"]);
    assert_ne!(off.code, 0);
    assert!(off.stderr.contains("not on"), "{}", off.stderr);
}

#[test]
fn invariants_and_cartan() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(dir.path(), &["invariants", "--kind", "nonsplit+", "--p", "7"]);
    assert_eq!(r.json["result"]["invariants"]["label_prefix"], "7.21.0", "{}", r.stderr);
    let r = run(dir.path(), &["invariants", "--level", "3", "--gen", "[[1,1],[0,1]]", "--gen", "[[2,0],[0,1]]"]);
    // upper unitriangular times diag(*, 1): order 6 in a group of order 48
    assert_eq!(r.json["result"]["invariants"]["index"], 8, "{}", r.stderr);
    let r = run(dir.path(), &["cartan", "--cm", "-7", "--n", "3"]);
    // 3 is inert in Q(sqrt(-7)), so C_O(3) is F_9^x
    assert_eq!(r.json["result"]["group"]["order"], 8, "{}", r.stderr);
    assert_eq!(r.json["result"]["abelian"], true);
}

#[test]
fn fetch_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("../lmfdb/fixtures");
    let r = run(dir.path(), &["fetch", "32.a3", "--fixtures", fixtures.to_str().unwrap(), "--n", "4"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.json["result"]["record"]["cmDiscriminant"], -4);
    assert_eq!(r.json["result"]["descriptor"]["CM"], -4);
    assert_eq!(r.json["result"]["verdict"]["nilpotent"], true);
}
