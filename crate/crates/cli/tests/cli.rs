use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn seeker(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seeker")).current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// A scratch directory holding copies of a few ISCAS circuits.
fn workspace(circuits: &[&str]) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/iscas85");
    for c in circuits {
        fs::copy(data.join(format!("{c}.bench")), dir.path().join(format!("{c}.bench"))).unwrap();
    }
    dir
}

fn tree(root: &Path) -> BTreeSet<PathBuf> {
    let mut out = BTreeSet::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out
}

#[test]
fn restructured_circuit_is_equivalent_and_deterministic() {
    let w = workspace(&["c880"]);
    for out in ["o1", "o2"] {
        let o = seeker(w.path(), &["restructure", "--pipeline", "3", "--seed", "7", "--out", out, "c880.bench"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let a = fs::read(w.path().join("o1/c880_p3.bench")).unwrap();
    assert_eq!(a, fs::read(w.path().join("o2/c880_p3.bench")).unwrap());

    let o = seeker(w.path(), &["check-equiv", "c880.bench", "o1/c880_p3.bench"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "EQUIVALENT");

    let run: Value = serde_json::from_str(&fs::read_to_string(w.path().join("o1/run.json")).unwrap()).unwrap();
    assert_eq!(run["command"], "restructure");
    assert_eq!(run["seed"], 7);
    assert_eq!(run["pipeline"], "3");
}

#[test]
fn infected_circuit_is_not_equivalent() {
    let w = workspace(&["c1908"]);
    let o = seeker(w.path(), &["insert-ht", "--seed", "4", "--out", "ht", "c1908.bench"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rec: Value = serde_json::from_str(&fs::read_to_string(w.path().join("ht/trojan.json")).unwrap()).unwrap();
    assert_eq!(rec["validation"]["stealthy"], true);

    let o = seeker(w.path(), &["check-equiv", "--out", "eq", "c1908.bench", "ht/c1908_ht.bench"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.starts_with("NOT EQUIVALENT"), "{text}");
    assert!(text.contains("counterexample:"));
    let eq: Value = serde_json::from_str(&fs::read_to_string(w.path().join("eq/equiv.json")).unwrap()).unwrap();
    assert!(eq.get("counterexample").is_some());
}

#[test]
fn usage_errors_exit_2() {
    let w = workspace(&["c880"]);
    assert_eq!(seeker(w.path(), &["bogus"]).status.code(), Some(2));
    assert_eq!(seeker(w.path(), &["parse", "--no-such-flag", "c880.bench"]).status.code(), Some(2));
    // generation needs an explicit seed
    let o = seeker(w.path(), &["restructure", "--pipeline", "1", "--out", "o", "c880.bench"]);
    assert_eq!(o.status.code(), Some(2));
    let o = seeker(w.path(), &["restructure", "--pipeline", "19", "--seed", "1", "--out", "o", "c880.bench"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn domain_errors_exit_1_with_their_name() {
    let w = workspace(&[]);
    fs::write(w.path().join("bad.bench"), "INPUT(b)\nOUTPUT(y)\ny = AND(a, b)\n").unwrap();
    let o = seeker(w.path(), &["parse", "bad.bench"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("UndefinedNet"), "{}", stderr(&o));

    fs::write(w.path().join("small.bench"), "INPUT(a)\nOUTPUT(y)\ny = NOT(a)\n").unwrap();
    let o = seeker(w.path(), &["insert-ht", "--seed", "1", "--out", "o", "small.bench"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("InsufficientRareNets"), "{}", stderr(&o));
}

#[test]
fn bundle_game_round_trip() {
    let w = workspace(&["c880", "c1908"]);
    fs::write(
        w.path().join("game.json"),
        r#"{"bundle_id": "g", "sources": ["c880.bench", "c1908.bench"], "n_instances": 12, "pipeline": "1,5,18"}"#,
    )
    .unwrap();
    let before = tree(w.path());
    let run = |args: &[&str]| {
        let o = seeker(w.path(), args);
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
        o
    };
    run(&["gen-bundle", "--config", "game.json", "--seed", "3", "--p-infect", "0.5", "--out", "gen"]);
    run(&[
        "detect", "--bundle", "gen/bundle/g", "--golden", "c880.bench", "c1908.bench", "--seed", "1", "--budget",
        "256", "--out", "det",
    ]);
    let o = run(&[
        "score", "--bundle", "gen/bundle/g", "--reveal", "gen/reveal/g.json", "--verdicts", "det/verdicts.csv",
        "--out", "sc",
    ]);
    assert!(stdout(&o).contains("FP 0"), "{}", stdout(&o));
    let score: Value = serde_json::from_str(&fs::read_to_string(w.path().join("sc/score.json")).unwrap()).unwrap();
    assert_eq!(score["confusion"]["fp"], 0);
    let heat = fs::read_to_string(w.path().join("sc/heatmap.csv")).unwrap();
    assert_eq!(heat.lines().count(), 3);

    run(&["features", "--bundle", "gen/bundle/g", "--out", "ft"]);
    run(&["pca", "--features", "ft/features.csv", "--reveal", "gen/reveal/g.json", "--out", "pc"]);
    let scatter = fs::read_to_string(w.path().join("pc/scatter.csv")).unwrap();
    assert_eq!(scatter.lines().next(), Some("instance_id,pc1,pc2,class"));
    assert_eq!(scatter.lines().count(), 13);

    // nothing outside the --out directories changed
    let outs = ["gen", "det", "sc", "ft", "pc"];
    for p in tree(w.path()).difference(&before) {
        let top = p.components().next().unwrap().as_os_str().to_str().unwrap();
        assert!(outs.contains(&top), "unexpected write {}", p.display());
    }

    // same seed, same public bundle
    run(&["gen-bundle", "--config", "game.json", "--seed", "3", "--p-infect", "0.5", "--out", "gen2"]);
    let a = tree(&w.path().join("gen/bundle"));
    assert_eq!(a, tree(&w.path().join("gen2/bundle")));
    for f in &a {
        assert_eq!(fs::read(w.path().join("gen/bundle").join(f)).unwrap(), fs::read(w.path().join("gen2/bundle").join(f)).unwrap());
    }
}
