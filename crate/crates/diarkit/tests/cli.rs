use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_diarkit"))
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("DIARKIT_BACKEND_CMD").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn mock_cmd(fixture: &Path) -> String {
    format!(
        "'{}' mock-backend --fixture '{}'",
        env!("CARGO_BIN_EXE_diarkit"),
        fixture.display()
    )
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const RTTM: &str = "\
SPEAKER a 1 0.000 1.500 <NA> <NA> S0 <NA> <NA>
SPEAKER a 1 1.500 2.250 <NA> <NA> S1 <NA> <NA>
SPEAKER b 1 0.125 4.000 <NA> <NA> S0 <NA> <NA>
";

#[test]
fn convert_round_trip_is_exact_at_millisecond_precision() {
    let dir = tempfile::tempdir().unwrap();
    let rttm = dir.path().join("in.rttm");
    fs::write(&rttm, RTTM).unwrap();
    let single = dir.path().join("a.rttm");
    fs::write(&single, RTTM.lines().take(2).collect::<Vec<_>>().join("\n")).unwrap();
    let json = dir.path().join("a.json");
    let back = dir.path().join("back.rttm");
    assert_eq!(code(&run(&["convert", p(&single), p(&json)])), 0);
    assert_eq!(code(&run(&["convert", p(&json), p(&back)])), 0);
    assert_eq!(
        fs::read_to_string(&back).unwrap(),
        fs::read_to_string(&single).unwrap() + "\n"
    );

    // a multi-recording RTTM cannot become one JSON document
    let o = run(&["convert", p(&rttm), p(&json)]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn convert_reports_location_of_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.rttm");
    fs::write(
        &bad,
        "SPEAKER a 1 0 1 <NA> <NA> S0 <NA> <NA>\nSPEAKER a 1 x 1 <NA> <NA> S0 <NA> <NA>\n",
    )
    .unwrap();
    let o = run(&["convert", p(&bad), p(&dir.path().join("o.json"))]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("bad.rttm:2:"), "{}", stderr(&o));

    let bad_json = dir.path().join("bad.json");
    fs::write(
        &bad_json,
        r#"{"recording_id":"r","segments":[{"start":1,"end":1,"speaker":"A"}]}"#,
    )
    .unwrap();
    let o = run(&["convert", p(&bad_json), p(&dir.path().join("o.rttm"))]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("element 0"), "{}", stderr(&o));
}

#[test]
fn convert_directory_batch() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    fs::create_dir(&input).unwrap();
    fs::write(input.join("one.rttm"), RTTM).unwrap();
    fs::write(input.join("two.rttm"), "SPEAKER c 1 0 1 <NA> <NA> S0 <NA> <NA>\n").unwrap();
    fs::write(input.join("three.json"), r#"{"recording_id":"d","segments":[]}"#).unwrap();
    fs::write(input.join("notes.txt"), "ignored").unwrap();
    let out = dir.path().join("out");
    let o = run(&["convert", p(&input), p(&out), "--to", "json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut names: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["a.json", "b.json", "c.json", "d.json"]);

    let back = dir.path().join("back");
    assert_eq!(code(&run(&["convert", p(&out), p(&back), "--to", "rttm"])), 0);
    assert_eq!(fs::read_dir(&back).unwrap().count(), 4);
    assert_eq!(code(&run(&["convert", p(&input), p(&back)])), 2);
}

fn write_set(dir: &Path, name: &str) -> PathBuf {
    let d = dir.join(name);
    fs::create_dir(&d).unwrap();
    fs::write(d.join("x.rttm"), RTTM).unwrap();
    d
}

#[test]
fn score_der_identical_sets() {
    let dir = tempfile::tempdir().unwrap();
    let r = write_set(dir.path(), "ref");
    let h = write_set(dir.path(), "hyp");
    let o = run(&["score-der", p(&r), p(&h), "--json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["aggregate"]["der"], 0.0);
    check_der_report_schema(&v);

    let table = run(&["score-der", p(&r), p(&h)]);
    let text = String::from_utf8(table.stdout).unwrap();
    assert!(text.starts_with("recording"));
    assert!(text.contains("TOTAL"));
}

/// Shape documented in the README.
fn check_der_report_schema(v: &Value) {
    let obj = v.as_object().unwrap();
    let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
    keys.sort();
    assert_eq!(keys, ["aggregate", "metric", "options", "recordings"]);
    assert_eq!(v["metric"], "der");
    assert!(v["options"]["collar"].is_number());
    assert!(v["options"]["score_overlap"].is_boolean());
    let breakdown = |b: &Value| {
        for k in ["missed", "false_alarm", "confusion", "total_reference"] {
            assert!(b[k].as_f64().unwrap() >= 0.0, "{k}");
        }
        assert!(b["der"].is_number() || b["der"].is_null());
    };
    breakdown(&v["aggregate"]);
    for row in v["recordings"].as_array().unwrap() {
        assert!(row["recording_id"].is_string());
        breakdown(row);
    }
}

#[test]
fn score_der_missing_hypothesis_names_recording() {
    let dir = tempfile::tempdir().unwrap();
    let r = write_set(dir.path(), "ref");
    let h = dir.path().join("hyp");
    fs::create_dir(&h).unwrap();
    fs::write(h.join("a.json"), r#"{"recording_id":"a","segments":[]}"#).unwrap();
    let o = run(&["score-der", p(&r), p(&h)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("\"b\""), "{}", stderr(&o));
}

#[test]
fn score_der_file_pair_with_other_recording_is_error() {
    let dir = tempfile::tempdir().unwrap();
    let r = dir.path().join("r.json");
    let h = dir.path().join("h.json");
    fs::write(
        &r,
        r#"{"recording_id":"a","segments":[{"start":0,"end":1,"speaker":"A"}]}"#,
    )
    .unwrap();
    fs::write(
        &h,
        r#"{"recording_id":"z","segments":[{"start":0,"end":1,"speaker":"A"}]}"#,
    )
    .unwrap();
    assert_eq!(code(&run(&["score-der", p(&r), p(&h)])), 1);
}

#[test]
fn score_wer_reports_counts() {
    let dir = tempfile::tempdir().unwrap();
    let r = dir.path().join("ref.txt");
    let h = dir.path().join("hyp.txt");
    fs::write(&r, "আমি ভাত খাই।").unwrap();
    fs::write(&h, "আমি খাই, আজ").unwrap();
    let o = run(&["score-wer", p(&r), p(&h), "--json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["metric"], "wer");
    let agg = &v["aggregate"];
    assert_eq!(agg["reference_tokens"], 3);
    assert_eq!(
        agg["substitutions"].as_u64().unwrap()
            + agg["deletions"].as_u64().unwrap()
            + agg["insertions"].as_u64().unwrap(),
        2
    );

    let empty = dir.path().join("empty.txt");
    fs::write(&empty, "").unwrap();
    let o = run(&["score-wer", p(&empty), p(&h), "--json"]);
    assert_eq!(code(&o), 1);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["aggregate"]["wer"].is_null());
    assert_eq!(v["aggregate"]["insertions"], 3);
}

#[test]
fn postprocess_with_zero_params_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.json");
    let text = "{\"recording_id\":\"r\",\"segments\":[{\"start\":0,\"end\":0.1,\"speaker\":\"A\"},{\"start\":0.3,\"end\":2,\"speaker\":\"A\"}]}\n";
    fs::write(&input, text).unwrap();
    let o = run(&[
        "postprocess",
        p(&input),
        "--min-duration",
        "0",
        "--merge-gap",
        "0",
        "--aba-max-duration",
        "0",
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), text);

    let o = run(&["postprocess", p(&input)]);
    assert_eq!(
        String::from_utf8(o.stdout).unwrap(),
        "{\"recording_id\":\"r\",\"segments\":[{\"start\":0.3,\"end\":2,\"speaker\":\"A\"}]}\n"
    );
    assert_eq!(code(&run(&["postprocess", p(&input), "--merge-gap", "-1"])), 2);
}

#[test]
fn dedup_text_and_transcript() {
    let dir = tempfile::tempdir().unwrap();
    let txt = dir.path().join("t.txt");
    fs::write(&txt, "a b a b a b\nধীরে ধীরে চলো\n").unwrap();
    let o = run(&["dedup", p(&txt)]);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "a b\nধীরে ধীরে চলো\n");
    let js = dir.path().join("t.json");
    fs::write(
        &js,
        r#"{"recording_id":"r","entries":[{"start":0,"end":5,"text":"হ্যাঁ হ্যাঁ হ্যাঁ হ্যাঁ"}]}"#,
    )
    .unwrap();
    let o = run(&["dedup", p(&js)]);
    assert_eq!(
        String::from_utf8(o.stdout).unwrap(),
        "{\"recording_id\":\"r\",\"entries\":[{\"start\":0,\"end\":5,\"text\":\"হ্যাঁ\"}]}\n"
    );
}

#[test]
fn chunk_plan_packs_regions() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.json");
    fs::write(
        &input,
        r#"{"recording_id":"r","segments":[{"start":0,"end":10,"speaker":"A"},{"start":12,"end":20,"speaker":"B"},{"start":25,"end":40,"speaker":"A"}]}"#,
    )
    .unwrap();
    let o = run(&["chunk-plan", p(&input)]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["chunk_limit"], 30.0);
    let chunks: Vec<(f64, f64)> = v["chunks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| (c["start"].as_f64().unwrap(), c["end"].as_f64().unwrap()))
        .collect();
    assert_eq!(chunks, [(0.0, 20.0), (25.0, 40.0)]);
}

#[test]
fn two_pass_against_mock() {
    let cmd = mock_cmd(&fixtures().join("pipeline.json"));
    let o = run(&["two-pass", "--audio", "meeting.wav", "--backend-cmd", &cmd]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        String::from_utf8(o.stdout).unwrap(),
        concat!(
            "{\"recording_id\":\"meeting\",\"segments\":[",
            "{\"start\":0,\"end\":4.5,\"speaker\":\"spk_a\"},",
            "{\"start\":4.5,\"end\":8,\"speaker\":\"spk_b\"},",
            "{\"start\":8,\"end\":12,\"speaker\":\"spk_c\"}]}\n"
        )
    );
    let o = bin()
        .args(["two-pass", "--audio", "refused.wav"])
        .env("DIARKIT_BACKEND_CMD", &cmd)
        .output()
        .unwrap();
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("pass 1"), "{}", stderr(&o));
    assert_eq!(code(&run(&["two-pass", "--audio", "meeting.wav"])), 2);
}

#[test]
fn transcribe_against_mock() {
    let cmd = mock_cmd(&fixtures().join("pipeline.json"));
    let o = run(&["transcribe", "--audio", "long.wav", "--backend-cmd", &cmd]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        String::from_utf8(o.stdout).unwrap(),
        "{\"recording_id\":\"long\",\"entries\":[{\"start\":0,\"end\":20,\"text\":\"a\"},{\"start\":25,\"end\":40,\"text\":\"b\"}]}\n"
    );
    // a 15 s limit splits the last region into windows the fixture lacks
    let o = run(&[
        "transcribe",
        "--audio",
        "long.wav",
        "--chunk-limit",
        "15",
        "--backend-cmd",
        &cmd,
    ]);
    assert_eq!(code(&o), 3);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["entries"].as_array().unwrap().len(), 3);
    let o = run(&[
        "transcribe",
        "--audio",
        "long.wav",
        "--chunk-limit",
        "15",
        "--on-chunk-error",
        "fail",
        "--backend-cmd",
        &cmd,
    ]);
    assert_eq!(code(&o), 3);
    assert!(o.stdout.is_empty());
}

fn sweep_all(cache: &Path, extra: &[&str]) -> Output {
    let dir = fixtures().join("sweep");
    let cmd = mock_cmd(&dir.join("backend.json"));
    let spec = dir.join("spec.toml");
    let mut args = vec![
        "sweep",
        "all",
        "--spec",
        p(&spec),
        "--cache-dir",
        p(cache),
        "--backend-cmd",
        &cmd,
        "--json",
    ];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn sweep_all_reproduces_golden_report() {
    let golden = fs::read_to_string(fixtures().join("sweep/golden_report.json")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let o = sweep_all(&dir.path().join("cache"), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(String::from_utf8(o.stdout).unwrap(), golden);

    // parallel phase 3 yields the same bytes
    let o = sweep_all(&dir.path().join("cache2"), &["--jobs", "4"]);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), golden);

    // best index is the minimum of the emitted rows
    let v: Value = serde_json::from_str(&golden).unwrap();
    let rows = v["phase3"]["rows"].as_array().unwrap();
    let ders: Vec<f64> = rows.iter().map(|r| r["breakdown"]["der"].as_f64().unwrap()).collect();
    let min = ders.iter().copied().fold(f64::INFINITY, f64::min);
    let best = v["phase3"]["best"].as_u64().unwrap() as usize;
    assert_eq!(ders[best], min);
    assert_eq!(ders.iter().position(|d| *d == min), Some(best));
}

#[test]
fn sweep_phases_run_separately_and_resume() {
    let dir = fixtures().join("sweep");
    let cmd = mock_cmd(&dir.join("backend.json"));
    let spec = dir.join("spec.toml");
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("cache");
    let phase2 = |args: &[&str]| {
        let mut all = vec![
            "sweep",
            "phase2",
            "--spec",
            p(&spec),
            "--cache-dir",
            p(&cache),
            "--backend-cmd",
            &cmd,
        ];
        all.extend_from_slice(args);
        run(&all)
    };
    // phase 3 before phase 2 misses the cache
    let o = run(&[
        "sweep",
        "phase3",
        "--spec",
        p(&spec),
        "--cache-dir",
        p(&cache),
        "--threshold",
        "0.5",
    ]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("\"r1\""), "{}", stderr(&o));

    let o = phase2(&["--threshold", "0.5", "--json"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(
        (v["phase2"]["fetched"].as_u64(), v["phase2"]["reused"].as_u64()),
        (Some(2), Some(0))
    );
    let o = phase2(&["--threshold", "0.5", "--json"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(
        (v["phase2"]["fetched"].as_u64(), v["phase2"]["reused"].as_u64()),
        (Some(0), Some(2))
    );

    let o = run(&[
        "sweep",
        "phase3",
        "--spec",
        p(&spec),
        "--cache-dir",
        p(&cache),
        "--threshold",
        "0.5",
        "--json",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let golden: Value = serde_json::from_str(&fs::read_to_string(dir.join("golden_report.json")).unwrap()).unwrap();
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["phase3"], golden["phase3"]);

    // no fixture answers at 0.45, so every entry fails
    let o = phase2(&["--threshold", "0.45"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn help_documents_defaults() {
    let help = |args: &[&str]| String::from_utf8(run(args).stdout).unwrap();
    let pp = help(&["postprocess", "--help"]);
    for needle in ["[default: 0.2]", "[default: 0.5]", "[default: 0.3]"] {
        assert!(pp.contains(needle), "{needle} missing from\n{pp}");
    }
    let tr = help(&["transcribe", "--help"]);
    for needle in [
        "[default: 30]",
        "[default: continue]",
        "[default: 600]",
        "DIARKIT_BACKEND_CMD",
        "[default: 2]",
    ] {
        assert!(tr.contains(needle), "{needle} missing from\n{tr}");
    }
    let der = help(&["score-der", "--help"]);
    assert!(der.contains("[default: 0]"));
    assert_eq!(code(&run(&["no-such-command"])), 2);
}
