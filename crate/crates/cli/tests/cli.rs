use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fogmarl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fogmarl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = r#"
seeds = [0, 1]
arms = ["Random", "DRR", "Nearest", "Fastest-interval"]
desk_scale = 0.05
step_seconds = 0.01

[topology]
nodes = 13
aps = 8
"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn defaults_validate_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let d = fogmarl(&["defaults"]);
    assert!(d.status.success());
    let path = write(dir.path(), "full.toml", &stdout(&d));
    let v = fogmarl(&["validate", &path]);
    assert!(v.status.success(), "{}", stdout(&v));
    assert_eq!(stdout(&v).trim(), "ok");
}

#[test]
fn zero_interval_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "bad.toml", "interval_s = 0.0\n");
    let v = fogmarl(&["validate", &path]);
    assert!(!v.status.success());
    assert!(stdout(&v).contains("interval must be positive"), "{}", stdout(&v));
    let r = fogmarl(&["run", &path, "--out", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    assert!(stderr(&r).contains("interval must be positive"));
}

#[test]
fn uncovered_ap_is_named() {
    let dir = tempfile::tempdir().unwrap();
    // seed 0 of this scenario has APs 1, 3, 4, 6, 8, 10, 11, 12 and fog nodes 0, 2, 5, 7, 9
    let text = format!(
        "{SMALL}\n[topology.regions]\nkind = \"explicit\"\nregions = [{{ aps = [1, 3, 4, 6, 8, 10, 11], fogs = [0, 2, 5] }}]\n"
    );
    let path = write(dir.path(), "regions.toml", &text.replace("seeds = [0, 1]", "seeds = [0]"));
    let v = fogmarl(&["validate", &path]);
    assert!(!v.status.success());
    assert!(stdout(&v).contains("AP 12 is not covered"), "{}", stdout(&v));
}

#[test]
fn run_is_deterministic_and_replayable() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "small.toml", SMALL);
    let outs = ["a", "b"].map(|n| dir.path().join(n));
    for o in &outs {
        let r = fogmarl(&["run", &scenario, "--out", o.to_str().unwrap()]);
        assert!(r.status.success(), "{}", stderr(&r));
    }
    for f in ["results.csv", "aggregate.csv", "curves.csv", "summary.json", "logs/eval_Random_seed1.json"] {
        let a = fs::read(outs[0].join(f)).unwrap();
        assert_eq!(a, fs::read(outs[1].join(f)).unwrap(), "{f} differs");
    }
    let results = fs::read_to_string(outs[0].join("results.csv")).unwrap();
    let log = outs[0].join("logs/eval_Fastest-interval_seed0.json");
    let rp = fogmarl(&["replay", log.to_str().unwrap()]);
    assert!(rp.status.success());
    for line in stdout(&rp).lines() {
        assert!(results.contains(&format!("0,Fastest-interval,{line}\n")), "{line}");
    }
}

#[test]
fn seed_and_arm_subsets() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "small.toml", SMALL);
    let out = dir.path().join("out");
    let r = fogmarl(&["run", &scenario, "--seeds", "1", "--arms", "Nearest", "--out", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", stderr(&r));
    let results = fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(results.lines().skip(1).all(|l| l.starts_with("1,Nearest,")));
    let bad = fogmarl(&["run", &scenario, "--arms", "Random-interval"]);
    assert!(!bad.status.success());
}

#[test]
fn exported_topology_imports() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "small.toml", SMALL);
    let topo = dir.path().join("topo.json");
    let e = fogmarl(&["export-topology", &scenario, "--seed", "1", "--out", topo.to_str().unwrap()]);
    assert!(e.status.success());
    let imported = format!("topology_file = {:?}\n{}", topo.to_str().unwrap(), SMALL.replace("seeds = [0, 1]", "seeds = [5]"));
    let path = write(dir.path(), "imported.toml", &imported);
    let v = fogmarl(&["validate", &path]);
    assert!(v.status.success(), "{}", stdout(&v));
    let a = fogmarl(&["export-topology", &path, "--seed", "5"]);
    assert_eq!(stdout(&a).trim(), fs::read_to_string(&topo).unwrap().trim());
}
