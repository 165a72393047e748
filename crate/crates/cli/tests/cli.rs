use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_narrascope"));
    cmd.env_remove("NARRASCOPE_CONFIG_DIR");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn narrascope")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A script of `n` scenes with rotating vocabularies.
fn script(n: usize) -> String {
    const WORDS: &[&str] = &[
        "rain", "glass", "watch", "late", "train", "steam", "fog", "ticket", "window", "glasses",
        "empty", "whistle", "platform", "night", "dawn", "door", "letter", "coat", "smoke",
        "piano",
    ];
    let mut out = String::from("A SCRIPT\n\n");
    for i in 0..n {
        out.push_str(&format!("INT. ROOM {i} - NIGHT\n\n"));
        let words: Vec<&str> = (0..8 + i % 5)
            .map(|k| WORDS[(i * 3 + k * k) % WORDS.len()])
            .collect();
        out.push_str(&words.join(" "));
        out.push_str(".\n\n");
    }
    out
}

fn analyzed(dir: &TempDir, scenes: usize) -> PathBuf {
    let input = dir.path().join("s.txt");
    fs::write(&input, script(scenes)).unwrap();
    let bundle = dir.path().join("s.bundle.json");
    ok(&["analyze", s(&input), "--out", s(&bundle)]);
    bundle
}

#[test]
fn full_pipeline() {
    let dir = TempDir::new().unwrap();
    let units = dir.path().join("units.json");
    ok(&["parse", s(&fixture("five_scenes.txt")), "--out", s(&units)]);
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&units).unwrap()).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["units"].as_array().unwrap().len(), 5);

    let bundle = dir.path().join("b.bundle.json");
    let table = dir.path().join("table.json");
    ok(&[
        "analyze",
        s(&units),
        "--table-out",
        s(&table),
        "--out",
        s(&bundle),
    ]);
    assert!(table.is_file());

    let newick = dir.path().join("tree.nwk");
    let segs = ok(&["cluster", s(&bundle), "--k", "2", "--newick", s(&newick)]);
    assert_eq!(segs.lines().count(), 2);
    assert!(fs::read_to_string(&newick)
        .unwrap()
        .trim_end()
        .ends_with(';'));

    let report = dir.path().join("report.json");
    let text = ok(&["test", s(&bundle), "--trials", "99", "--out", s(&report)]);
    let rows = text
        .lines()
        .skip(2)
        .filter(|l| !l.trim().is_empty())
        .count();
    assert_eq!(rows, 9);
    assert!(report.is_file());

    let plots = ok(&["render", s(&bundle), "--out-dir", s(dir.path())]);
    assert_eq!(plots.lines().count(), 2);
    for line in plots.lines() {
        assert!(Path::new(line).is_file(), "{line}");
    }
    let plots = ok(&[
        "render",
        s(&bundle),
        "--plot",
        "factors",
        "--out-dir",
        s(dir.path()),
    ]);
    assert!(plots.trim_end().ends_with(".svg"));
}

#[test]
fn k_one_is_the_whole_script() {
    let dir = TempDir::new().unwrap();
    let bundle = analyzed(&dir, 9);
    assert_eq!(ok(&["cluster", s(&bundle), "--k", "1"]), "1-9\n");
    let all = ok(&["cluster", s(&bundle), "--k", "9"]);
    let expected: String = (1..=9).map(|i| format!("{i}-{i}\n")).collect();
    assert_eq!(all, expected);
}

#[test]
fn test_output_independent_of_threads() {
    let dir = TempDir::new().unwrap();
    let bundle = analyzed(&dir, 12);
    let run_with = |extra: &[&str]| {
        let mut args = vec!["test", s(&bundle), "--trials", "199", "--seed", "7"];
        args.extend_from_slice(extra);
        ok(&args)
    };
    let base = run_with(&["--sequential"]);
    for t in ["1", "4", "8"] {
        assert_eq!(run_with(&["--threads", t]), base, "threads={t}");
    }
}

#[test]
fn analyze_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("s.txt");
    fs::write(&input, script(10)).unwrap();
    let a = ok(&["analyze", s(&input)]);
    let b = ok(&["analyze", s(&input)]);
    assert_eq!(a, b);
}

#[test]
fn beats_from_marker() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("beats.txt");
    fs::write(
        &input,
        "INT. HALL - NIGHT\n\nrain glass\n==BEAT==\nwatch late train\n==BEAT==\nfog ticket\n",
    )
    .unwrap();
    let out = ok(&[
        "parse",
        s(&input),
        "--scene",
        "1",
        "--beat-marker",
        "==BEAT==",
    ]);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["units"].as_array().unwrap().len(), 3);

    let out = run(&[
        "parse",
        s(&input),
        "--scene",
        "4",
        "--beat-marker",
        "==BEAT==",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn profile_from_config_dir() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("acts.toml"),
        "name = \"acts\"\nscene_heading_patterns = ['^ACT [0-9]+']\n",
    )
    .unwrap();
    let input = dir.path().join("acts.txt");
    fs::write(
        &input,
        "ACT 1\nrain glass\nACT 2\nfog ticket\nACT 3\nsmoke piano\n",
    )
    .unwrap();

    let out = run(&["parse", s(&input), "--profile", "acts"]);
    assert_eq!(
        code(&out),
        2,
        "profile should not resolve without a config dir"
    );

    let out = bin()
        .args(["parse", s(&input), "--profile", "acts"])
        .env("NARRASCOPE_CONFIG_DIR", dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["profile"], "acts");
    assert_eq!(doc["units"].as_array().unwrap().len(), 3);

    let path = dir.path().join("acts.toml");
    ok(&["parse", s(&input), "--profile", s(&path)]);
}

#[test]
fn input_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let bundle = analyzed(&dir, 6);

    let plain = dir.path().join("plain.txt");
    fs::write(&plain, "no headings here at all\n").unwrap();
    assert_eq!(code(&run(&["parse", s(&plain)])), 2);
    assert_eq!(
        code(&run(&["parse", s(&plain), "--profile", "nonesuch"])),
        2
    );
    assert_eq!(
        code(&run(&["parse", s(&dir.path().join("missing.txt"))])),
        2
    );
    assert_eq!(code(&run(&["cluster", s(&bundle), "--k", "0"])), 2);
    assert_eq!(code(&run(&["cluster", s(&bundle), "--k", "7"])), 2);
    assert_eq!(
        code(&run(&[
            "render",
            s(&bundle),
            "--plot",
            "factors",
            "--axes",
            "1,99"
        ])),
        2
    );

    let same = dir.path().join("same.txt");
    fs::write(
        &same,
        "INT. A - DAY\nfoo bar\nINT. A - DAY\nfoo bar\nINT. A - DAY\nfoo bar\n",
    )
    .unwrap();
    let out = run(&["analyze", s(&same)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate"));

    let mut text = fs::read_to_string(&bundle).unwrap();
    text = text.replacen("\"schema_version\": 1", "\"schema_version\": 99", 1);
    let bad = dir.path().join("bad.bundle.json");
    fs::write(&bad, text).unwrap();
    assert_eq!(code(&run(&["cluster", s(&bad)])), 2);
}

#[test]
fn batch_writes_bundles_and_table() {
    let dir = TempDir::new().unwrap();
    let scripts = dir.path().join("scripts");
    fs::create_dir(&scripts).unwrap();
    for (name, n) in [("a", 7), ("b", 9), ("c", 11)] {
        fs::write(scripts.join(format!("{name}.txt")), script(n)).unwrap();
    }
    let out = dir.path().join("out");
    ok(&["batch", s(&scripts), "--trials", "49", "--out-dir", s(&out)]);
    for name in ["a", "b", "c"] {
        assert!(out.join(format!("{name}.bundle.json")).is_file());
    }
    assert!(out.join("significance.json").is_file());
    assert!(out.join("significance.txt").is_file());

    let seq = dir.path().join("seq");
    ok(&[
        "batch",
        s(&scripts),
        "--trials",
        "49",
        "--sequential",
        "--out-dir",
        s(&seq),
    ]);
    assert_eq!(
        fs::read(out.join("significance.json")).unwrap(),
        fs::read(seq.join("significance.json")).unwrap()
    );
}
