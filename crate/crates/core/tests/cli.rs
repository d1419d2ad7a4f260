use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ljsearch(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ljsearch"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let o = ljsearch(dir, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

#[test]
fn geometry_commands() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    ok(d, &["gen-lattice", "--kind", "ic", "--size", "1", "--out", "ic.xyz"]);
    assert_eq!(fs::read_to_string(d.join("ic.xyz")).unwrap().lines().count(), 13);

    let e: f64 = ok(d, &["energy", "ic.xyz"]).trim().parse().unwrap();
    assert!(e < -40.0);
    assert_eq!(ok(d, &["classify", "ic.xyz"]).trim(), "N1_IC");

    let m = ok(d, &["minimize", "ic.xyz", "--out", "min.xyz"]);
    assert!(m.contains("energy -44.3268"), "{m}");
    assert!(m.contains("converged true"));

    let seg = ok(d, &["segment", "min.xyz"]);
    let mut rows = seg.lines();
    assert_eq!(rows.next(), Some("id,layer,neighbors,nucleus"));
    assert_eq!(rows.next(), Some("1,1,12,1"));
    assert_eq!(rows.count(), 12);

    let snapped = ok(d, &["match", "min.xyz", "--lattice", "cb:2", "--out", "snap.xyz"]);
    let ids: Vec<usize> = snapped.lines().last().unwrap().split_whitespace().map(|s| s.parse().unwrap()).collect();
    assert_eq!(ids.len(), 13);
    assert_eq!(fs::read_to_string(d.join("snap.xyz")).unwrap().lines().count(), 13);
}

#[test]
fn gen_lattice_radius_cut() {
    let t = tempfile::tempdir().unwrap();
    let all = ok(t.path(), &["gen-lattice", "--kind", "cb", "--size", "2"]);
    assert_eq!(all.lines().count(), 125);
    let cut = ok(t.path(), &["gen-lattice", "--kind", "cb", "--size", "2", "--radius", "0.6"]);
    assert!(cut.lines().count() < 125 && !cut.is_empty());
}

#[test]
fn bruteforce_pair() {
    let t = tempfile::tempdir().unwrap();
    let out = ok(t.path(), &["bruteforce", "--lattice", "cb:1", "--n", "2", "--out", "pair.xyz"]);
    assert!(out.contains("energy -1\n"), "{out}");
    assert!(out.contains("enumerated 351"));
    assert!(t.path().join("pair.xyz").exists());
}

#[test]
fn exit_codes() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    assert_eq!(ljsearch(d, &["energy", "missing.xyz"]).status.code(), Some(2));
    assert_eq!(ljsearch(d, &["energy", "--bogus"]).status.code(), Some(1));
    assert_eq!(ljsearch(d, &["--help"]).status.code(), Some(0));
    fs::write(d.join("bad.xyz"), "0 0 0\n1 2\n").unwrap();
    let o = ljsearch(d, &["energy", "bad.xyz"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.xyz:2"));
    assert_eq!(ljsearch(d, &["gen-lattice", "--kind", "xx", "--size", "1"]).status.code(), Some(1));
}

#[test]
fn evolve_writes_outputs_and_notes_default_seed() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    let o = ljsearch(d, &["evolve", "--n", "13", "--out-dir", "run"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("no --seed given, using seed 0"));
    assert!(stdout(&o).contains("energy=-44.3268"));
    for f in ["best_store.csv", "lj13.xyz", "report.csv", "report.hist.csv", "report.diff.csv"] {
        assert!(d.join("run").join(f).exists(), "{f}");
    }
    ok(d, &["report", "run", "--out", "r.csv"]);
    let csv = fs::read_to_string(d.join("r.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("13,"));
}

#[test]
fn players_are_deterministic_with_one_worker() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    let run = |dir: &str| {
        ok(d, &["players", "--workers", "1", "--n-range", "13..15", "--sweeps", "1", "--seed", "5", "--out-dir", dir]);
        fs::read(d.join(dir).join("best_store.csv")).unwrap()
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 4);
}
