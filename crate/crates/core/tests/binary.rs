use std::fs;
use std::process::Command;

fn qswap(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_qswap")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

const EXAMPLE1: &str = r#"{
  "schema": 1,
  "links": [
    {"capacity": 100, "success": 0.2},
    {"capacity": 200, "success": 0.2},
    {"capacity": 300, "success": 0.2},
    {"capacity": 400, "success": 0.2}
  ],
  "swap_probs": [0.5, 0.5, 0.5]
}"#;

#[test]
fn eval_and_search_from_the_shell() {
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("ex1.json");
    fs::write(&doc, EXAMPLE1).unwrap();
    let doc = doc.to_str().unwrap();

    let (code, out, _) = qswap(&["eval", doc, "--order", "3,2,1"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("[3,2,1] 7.16"), "{out}");

    let (code, out, _) = qswap(&["search", doc, "--strategy", "brute", "--precision", "4"]);
    assert_eq!(code, 0);
    assert_eq!(out, "[3,2,1] 7.1627\n");

    let (code, _, err) = qswap(&["eval", doc, "--order", "1,1,2"]);
    assert_eq!(code, 3);
    assert!(err.contains("error"), "{err}");
}

#[test]
fn simulate_is_reproducible_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("ex1.json");
    fs::write(&doc, EXAMPLE1).unwrap();
    let doc = doc.to_str().unwrap();
    let base = ["simulate", doc, "--order", "3,2,1", "--trials", "50000", "--seed", "12", "--json"];
    let one = qswap(&[&base[..], &["--jobs", "1"]].concat());
    let eight = qswap(&[&base[..], &["--jobs", "8"]].concat());
    assert_eq!(one.0, 0);
    let strip = |s: &str| {
        let mut v: serde_json::Value = serde_json::from_str(s).unwrap();
        v.as_object_mut().unwrap().remove("timing_ms");
        v
    };
    assert_eq!(strip(&one.1), strip(&eight.1));
}

#[test]
fn estimate_flags_short_coherence_without_failing() {
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("phys.json");
    fs::write(
        &doc,
        r#"{"schema":1,"links":[{"length_km":100,"memory_pairs":4},{"length_km":50,"memory_pairs":4},
            {"length_km":70,"memory_pairs":4}],"swap_probs":[0.5,0.5]}"#,
    )
    .unwrap();
    let (code, out, _) = qswap(&["estimate", doc.to_str().unwrap(), "--coherence", "0.001,0.05"]);
    assert_eq!(code, 0, "{out}");
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].ends_with("slot_nonpositive"));
    assert!(rows[2].contains(",0.0022,"), "{}", rows[2]);
}
