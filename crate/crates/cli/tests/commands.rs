use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const PLAN: &str = include_str!("data/two-towers-plan.pbr");
const SEQUENCE: &str = include_str!("data/two-towers-sequence.pbr");

fn packs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../domains/packs")
}

fn two_towers() -> String {
    packs().join("blocks/two-towers.pbr").to_string_lossy().into_owned()
}

fn pbr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pbr"))
        .args(args)
        .env_remove("PBR_SEED")
        .output()
        .expect("pbr runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn plan_two_towers() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("best.pbr");
    let trace = dir.path().join("trace.csv");
    let o = pbr(&[
        "plan",
        "--problem",
        &two_towers(),
        "--out",
        out.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let plan = fs::read_to_string(&out).unwrap();
    assert_eq!(plan.matches("(step ").count(), 4);
    assert!(plan.contains("(stack C D A)"));

    let trace = fs::read_to_string(&trace).unwrap();
    let mut lines = trace.lines();
    assert_eq!(
        lines.next(),
        Some("iteration,restart,rule,cost_before,cost_after,best,elapsed_ms")
    );
    let best: Vec<u64> = lines.map(|l| l.split(',').nth(5).unwrap().parse().unwrap()).collect();
    assert_eq!(best.first(), Some(&5));
    assert_eq!(best.last(), Some(&4));
    assert!(best.windows(2).all(|w| w[1] <= w[0]));

    let v = pbr(&["validate", "--problem", &two_towers(), "--plan", out.to_str().unwrap()]);
    assert!(v.status.success(), "{}", stdout(&v));
}

#[test]
fn validate_reports_threats() {
    let dir = TempDir::new().unwrap();
    let good = write(&dir, "good.pbr", PLAN);
    let o = pbr(&["validate", "--problem", &two_towers(), "--plan", &good]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("valid"));

    let bad = write(&dir, "bad.pbr", &PLAN.replace("(order 2 3 threat)", ""));
    let o = pbr(&["validate", "--problem", &two_towers(), "--plan", &bad]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).contains("threatens (clear B)"), "{}", stdout(&o));
}

#[test]
fn empty_goal_plan_is_valid() {
    let dir = TempDir::new().unwrap();
    let problem = write(
        &dir,
        "p.pbr",
        "(define (problem idle) :domain blocks :objects (A Table) :init ((on A Table) (clear A)) :goal (:and))",
    );
    let plan = write(&dir, "plan.pbr", "(plan)");
    let o = pbr(&["validate", "--problem", &problem, "--plan", &plan]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let o = pbr(&["plan", "--problem", "no-such-file.pbr"]);
    assert_eq!(o.status.code(), Some(1));

    let garbled = write(&dir, "g.pbr", "(define (problem");
    assert_eq!(pbr(&["plan", "--problem", &garbled]).status.code(), Some(1));

    let cyclic = fs::read_to_string(two_towers())
        .unwrap()
        .replace("(on C D))", "(on C D) (on D A))");
    let cyclic = write(&dir, "cyclic.pbr", &cyclic);
    let o = pbr(&["plan", "--problem", &cyclic]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no initial plan"), "{}", stderr(&o));

    let seq = write(&dir, "seq.pbr", "(sequence (stack C D Table))");
    let o = pbr(&["plan", "--problem", &two_towers(), "--initial", &seq]);
    assert_eq!(o.status.code(), Some(2));
    let o = pbr(&["to2po", "--problem", &two_towers(), "--sequence", &seq]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("precondition (clear D)"), "{}", stderr(&o));
}

#[test]
fn rewrite_all_embeddings() {
    let dir = TempDir::new().unwrap();
    let plan = write(&dir, "plan.pbr", PLAN);
    let o = pbr(&[
        "rewrite",
        "--problem",
        &two_towers(),
        "--plan",
        &plan,
        "--rule",
        "avoid-move-twice",
        "--all-embeddings",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.matches("(plan").count(), 1);
    assert!(text.contains("subst=(?n1=4 ?b1=C ?b2=A ?n2=1 ?b3=D)"));

    let outdir = dir.path().join("out");
    let o = pbr(&[
        "rewrite",
        "--problem",
        &two_towers(),
        "--plan",
        &plan,
        "--rule",
        "avoid-move-twice",
        "--out-dir",
        outdir.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let written = outdir.join("plan-1.pbr");
    let v = pbr(&[
        "validate",
        "--problem",
        &two_towers(),
        "--plan",
        written.to_str().unwrap(),
    ]);
    assert!(v.status.success(), "{}", stdout(&v));

    let o = pbr(&["rewrite", "--problem", &two_towers(), "--plan", &plan, "--rule", "nope"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn to2po_modes() {
    let dir = TempDir::new().unwrap();
    let seq = write(&dir, "seq.pbr", SEQUENCE);
    let max = pbr(&["to2po", "--problem", &two_towers(), "--sequence", &seq]);
    assert!(max.status.success());
    let all = pbr(&["to2po", "--problem", &two_towers(), "--sequence", &seq, "--mode", "all"]);
    assert!(all.status.success());
    let max_plan = stdout(&max);
    let body = max_plan.split_once('\n').unwrap().1;
    assert!(stdout(&all).contains(body));

    let outdir = dir.path().join("po");
    let o = pbr(&[
        "to2po",
        "--problem",
        &two_towers(),
        "--sequence",
        &seq,
        "--mode",
        "all",
        "--out-dir",
        outdir.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    for entry in fs::read_dir(&outdir).unwrap() {
        let p = entry.unwrap().path();
        let v = pbr(&["validate", "--problem", &two_towers(), "--plan", p.to_str().unwrap()]);
        assert!(v.status.success(), "{}", stdout(&v));
    }
}

#[test]
fn bench_rows_and_seeds() {
    let one = pbr(&["bench", "--pack", "blocks", "--sizes", "5", "--instances", "1"]);
    assert!(one.status.success(), "{}", stderr(&one));
    assert_eq!(stdout(&one).lines().count(), 2);
    assert!(stderr(&one).contains("mean final"));

    let sweep = pbr(&["bench", "--pack", "blocks", "--sizes", "3,6,9", "--seeds", "25"]);
    assert!(sweep.status.success());
    assert_eq!(stdout(&sweep).lines().count(), 76);

    let by_flag = pbr(&[
        "--seed",
        "3",
        "bench",
        "--pack",
        "logistics",
        "--sizes",
        "3",
        "--instances",
        "2",
    ]);
    let by_env = Command::new(env!("CARGO_BIN_EXE_pbr"))
        .args(["bench", "--pack", "logistics", "--sizes", "3", "--instances", "2"])
        .env("PBR_SEED", "3")
        .output()
        .unwrap();
    assert_eq!(by_flag.stdout, by_env.stdout);
    let other = pbr(&[
        "--seed",
        "4",
        "bench",
        "--pack",
        "logistics",
        "--sizes",
        "3",
        "--instances",
        "2",
    ]);
    assert_ne!(by_flag.stdout, other.stdout);
}

#[test]
fn bench_series_and_timing() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("runs.csv");
    let series = dir.path().join("series.csv");
    let o = pbr(&[
        "bench",
        "--pack",
        "manufacturing",
        "--sizes",
        "2,3",
        "--instances",
        "3",
        "--plateaus",
        "0,50",
        "--timing",
        "--out",
        csv.to_str().unwrap(),
        "--series",
        series.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let runs = fs::read_to_string(&csv).unwrap();
    assert_eq!(runs.lines().count(), 1 + 2 * 3 * 2);
    for line in runs.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert!(fields[11].parse::<u64>().is_ok(), "elapsed_ms in {line}");
    }
    let series = fs::read_to_string(&series).unwrap();
    assert_eq!(series.lines().count(), 1 + 2 * 2);
    assert!(series.starts_with("pack,size,strategy,plateau,runs"));
}

#[test]
fn generated_problems_plan() {
    let dir = TempDir::new().unwrap();
    for (pack, size) in [
        ("blocks", "6"),
        ("manufacturing", "3"),
        ("logistics", "3"),
        ("query", "3"),
    ] {
        let o = pbr(&[
            "gen",
            "--pack",
            pack,
            "--size",
            size,
            "--count",
            "2",
            "--out-dir",
            dir.path().to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        for i in 0..2 {
            let problem = dir.path().join(format!("{pack}-n{size}-{i}.pbr"));
            let out = dir.path().join(format!("{pack}-{i}.plan"));
            let o = pbr(&[
                "--strategy",
                "best",
                "--restarts",
                "3",
                "plan",
                "--problem",
                problem.to_str().unwrap(),
                "--check",
                "--out",
                out.to_str().unwrap(),
            ]);
            assert!(o.status.success(), "{pack}: {}", stderr(&o));
            let v = pbr(&[
                "validate",
                "--problem",
                problem.to_str().unwrap(),
                "--plan",
                out.to_str().unwrap(),
            ]);
            assert!(v.status.success(), "{pack}: {}", stdout(&v));
        }
    }
}

#[test]
fn custom_domain_needs_an_initial_sequence() {
    let dir = TempDir::new().unwrap();
    let domain = write(
        &dir,
        "d.pbr",
        "(domain switches)
         (define (operator on) :parameters (?s) :precondition (off ?s)
           :effect (:and (lit ?s) (:not (off ?s))))
         (define (operator off) :parameters (?s) :precondition (lit ?s)
           :effect (:and (off ?s) (:not (lit ?s))))",
    );
    let rules = write(
        &dir,
        "r.pbr",
        "(define-rule :name no-flicker
           :if (:operators ((?a (on ?s)) (?b (off ?s)) (?c (on ?s)))
                :links ((?a (lit ?s) ?b) (?b (off ?s) ?c)))
           :replace (:operators (?a ?b ?c))
           :with (:operators ((?d (on ?s)))))",
    );
    let problem = write(
        &dir,
        "p.pbr",
        "(define (problem flicker) :domain switches :objects (S) :init ((off S)) :goal (lit S))",
    );
    let seq = write(&dir, "s.pbr", "(sequence (on S) (off S) (on S))");
    let o = pbr(&["plan", "--problem", &problem, "--domain", &domain, "--rules", &rules]);
    assert_eq!(o.status.code(), Some(2));
    let o = pbr(&[
        "plan",
        "--problem",
        &problem,
        "--domain",
        &domain,
        "--rules",
        &rules,
        "--initial",
        &seq,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).matches("(step ").count(), 1);
    assert!(stderr(&o).contains("steps 3 -> 1"), "{}", stderr(&o));
}
