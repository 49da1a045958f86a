use proptest::prelude::*;

use rigid_formation::cli::{self, cmd_check, cmd_generate, TriangleChoice, EXIT_INVALID, EXIT_OK};
use rigid_formation::rigidity::rigidity;
use rigid_formation::scenario::{builtin, Scenario, BUILTIN_NAMES};

fn run(args: &[&str]) -> i32 {
    cli::run(std::iter::once("formation").chain(args.iter().copied()))
}

#[test]
fn check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.json");
    let out = out.to_str().unwrap();
    assert_eq!(run(&["check", "epuck2d", "--out", out]), EXIT_OK);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(report["rank"], 5);
    assert_eq!(report["hurwitz"], true);
    assert_eq!(run(&["check", "tetra3d", "--out", out]), EXIT_OK);
    assert_eq!(run(&["check", "triangle", "--out", out]), EXIT_OK);
    assert_ne!(run(&["check", "square", "--out", out]), EXIT_OK);
    assert_eq!(run(&["check", "no-such-scenario"]), EXIT_INVALID);
}

#[test]
fn malformed_scenario_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"name\": \"x\", \"dim\": 2,").unwrap();
    let out = dir.path().join("o");
    assert_eq!(run(&["run", path.to_str().unwrap(), "--out", out.to_str().unwrap()]), EXIT_INVALID);
    std::fs::write(&path, builtin("triangle").unwrap().to_json().replace("\"dim\": 2", "\"dim\": 4")).unwrap();
    assert_eq!(run(&["check", path.to_str().unwrap()]), EXIT_INVALID);
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tri");
    assert_eq!(run(&["run", "triangle", "--out", out.to_str().unwrap()]), EXIT_OK);
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("t,x_1_1,x_1_2,x_2_1"));
    assert!(header.contains("e_1") && header.contains("muhat_3"));
    let verdict: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("verdict.json")).unwrap()).unwrap();
    assert_eq!(verdict["converged"], true);
}

#[test]
fn generated_scenarios_are_certified() {
    let s = cmd_generate(8, 2, 3, TriangleChoice::Acyclic).unwrap();
    assert_eq!(s.edges.len(), 13);
    let fw = s.target_framework().unwrap().unwrap();
    let rig = rigidity(&fw).unwrap();
    assert_eq!(rig.rank, 13);
    let report = cmd_check(&s).unwrap();
    assert!(report.certified());
    assert_eq!(report.rule_consistent, Some(true));

    let s = cmd_generate(4, 3, 1, TriangleChoice::Cyclic).unwrap();
    assert_eq!(s.edges.len(), 6);
    assert!(cmd_check(&s).unwrap().certified());
}

#[test]
fn builtins_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    for name in BUILTIN_NAMES {
        let s = builtin(name).unwrap();
        let path = dir.path().join(format!("{name}.json"));
        assert_eq!(run(&["builtin", name, "--out", path.to_str().unwrap()]), EXIT_OK);
        assert_eq!(Scenario::load(&path).unwrap(), s);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_scenarios_round_trip(n in 3usize..9, dim in 2usize..=3, seed in 0u64..10_000) {
        let n = n.max(dim + 1);
        let s = cmd_generate(n, dim, seed, TriangleChoice::Acyclic).unwrap();
        let back = Scenario::from_json(&s.to_json()).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(back.to_json(), s.to_json());
    }
}
