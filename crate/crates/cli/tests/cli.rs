use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use secgame_core::config::example_3node_source;
use secgame_core::report::SolveDocument;
use secgame_core::{evaluate_strategies, example_3node, solve, SolveOptions};
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_secgame"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn bundled_json() -> Value {
    serde_json::from_str(example_3node_source()).unwrap()
}

fn config_file(dir: &Path, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut v = bundled_json();
    edit(&mut v);
    write(dir, "config.json", &serde_json::to_string_pretty(&v).unwrap())
}

#[test]
fn validate_prints_effective_assets() {
    let out = run(&["validate", "example-3node"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let line = text.lines().find(|l| l.starts_with("effective assets:")).unwrap();
    let assets: Vec<f64> = line
        .trim_start_matches("effective assets:")
        .split_whitespace()
        .map(|t| t.parse().unwrap())
        .collect();
    assert_eq!(assets.len(), 3);
    for (a, e) in assets.iter().zip([11.0, 7.0, 22.0]) {
        assert!((a - e).abs() < 1e-9);
    }
    assert!(text.contains("supports:"));
    assert!(text.contains("influence matrix"));
}

#[test]
fn validate_reads_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "c.json", example_3node_source());
    assert!(run(&["validate", path.to_str().unwrap()]).status.success());
}

#[test]
fn short_influence_column_is_named() {
    let dir = tempfile::tempdir().unwrap();
    // explicit self-edge for node 3 makes its column sum 0.9
    let path = config_file(dir.path(), |v| {
        v["influence_edges"]
            .as_array_mut()
            .unwrap()
            .push(serde_json::json!({"from": "3", "to": "3", "weight": 0.9}));
    });
    let out = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr(&out);
    // columns are named after the node
    assert!(err.contains("influence.column[3]") && err.contains("0.9"), "{err}");
}

#[test]
fn probability_ordering_violation_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = config_file(dir.path(), |v| {
        v["nodes"][1]["probs"]["p_d1"] = serde_json::json!(0.45);
    });
    let out = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr(&out);
    assert!(err.contains("nodes[1].probs"), "{err}");
    assert!(err.contains("p_d1"), "{err}");
}

#[test]
fn every_violation_is_listed() {
    let dir = tempfile::tempdir().unwrap();
    let path = config_file(dir.path(), |v| {
        v["nodes"][0]["probs"]["p_d1"] = serde_json::json!(0.45);
        v["nodes"][2]["independent_asset"] = serde_json::json!(-1.0);
    });
    let out = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr(&out);
    assert!(err.contains("nodes[0].probs") && err.contains("[2]"), "{err}");
}

#[test]
fn parse_errors_carry_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let text = example_3node_source().replacen("\"independent_asset\"", "\"independant_asset\"", 1);
    let path = write(dir.path(), "typo.json", &text);
    let out = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("line ") && err.contains("nodes[0]"), "{err}");

    let path = write(dir.path(), "broken.json", "{ \"schema\": ");
    assert_eq!(run(&["solve", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn missing_file_is_an_io_error() {
    let out = run(&["validate", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn solve_prints_tables() {
    let out = run(&["solve", "example-3node"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let value_line = text.lines().find(|l| l.starts_with("1 (0,0,0): ")).unwrap();
    let v1: f64 = value_line.trim_start_matches("1 (0,0,0): ").parse().unwrap();
    assert!((v1 - 19.6078).abs() < 1e-3);

    let attacker = text.split("Defender strategies").next().unwrap();
    let ge4: Vec<&str> = attacker
        .lines()
        .find(|l| l.starts_with("4 (0,1,1)"))
        .unwrap()
        .split_whitespace()
        .skip(2)
        .collect();
    assert_eq!(ge4, ["1", "0", "0", "0"]);
    assert!(text.contains("converged in 43 iterations"));
}

#[test]
fn loose_tolerance_stops_early() {
    // first iterate whose sup-norm change is below 1, from the library itself
    let game = example_3node().game().unwrap();
    let full = solve(&game, SolveOptions::default()).unwrap();
    let expected = full.residual_history.iter().position(|r| *r < 1.0).unwrap() + 1;
    let out = run(&["solve", "example-3node", "--tol", "1"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains(&format!("converged in {expected} iterations")));
    assert!(expected < full.iterations);
}

#[test]
fn non_convergence_has_its_own_exit_code() {
    let out = run(&["solve", "example-3node", "--max-iters", "3"]);
    assert_eq!(out.status.code(), Some(4));
    let err = stderr(&out);
    assert!(err.contains("3 iterations") && err.contains("residual"), "{err}");
}

#[test]
fn solution_round_trips_through_policy_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("solution.json");
    let out = run(&["solve", "example-3node", "--tol", "1e-10", "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc = SolveDocument::from_json(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    let game = example_3node().game().unwrap();
    let (attacker, defender) = doc.profiles_for(&game).unwrap();
    let values = evaluate_strategies(&game, &attacker, &defender).unwrap();
    for (a, b) in values.iter().zip(doc.values()) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn simulation_is_reproducible() {
    let args = ["simulate", "example-3node", "--episodes", "1", "--seed", "7"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn doing_nothing_earns_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("sim.json");
    let out = run(&[
        "simulate",
        "example-3node",
        "--strategies",
        "do-nothing",
        "--episodes",
        "2000",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(doc["schema"], "secgame-simulate/1");
    let states = doc["per_state"].as_array().unwrap();
    assert_eq!(states.len(), 8);
    for s in states {
        assert_eq!(s["mean_payoff"].as_f64(), Some(0.0));
    }
}

#[test]
fn simulated_healthy_state_matches_value() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("sim.json");
    let out = run(&[
        "simulate",
        "example-3node",
        "--episodes",
        "100000",
        "--seed",
        "3",
        "--start-state",
        "(0,0,0)",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    let s = &doc["per_state"][0];
    assert_eq!(s["start_state"], 1);
    let mean = s["mean_payoff"].as_f64().unwrap();
    let se = s["std_error"].as_f64().unwrap();
    assert!((mean - 19.6078).abs() <= 3.0 * se, "{mean} ± {se}");
}

#[test]
fn strategy_file_for_another_game_names_the_state() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("full.json");
    let out = run(&["solve", "example-3node", "--action-mode", "full", "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success());
    // reduced mode drops attacks on compromised nodes, so state 2 differs
    let out = run(&[
        "simulate",
        "example-3node",
        "--episodes",
        "10",
        "--strategies",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("2 (0,0,1)"), "{}", stderr(&out));
}

#[test]
fn bad_start_state_is_rejected() {
    let out = run(&["simulate", "example-3node", "--start-state", "9", "--episodes", "1"]);
    assert_eq!(out.status.code(), Some(3));
}

fn assert_close(path: &str, a: &Value, b: &Value) {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{path}: {x} vs {y}");
        }
        (Value::Array(x), Value::Array(y)) => {
            assert_eq!(x.len(), y.len(), "{path}: length");
            for (k, (p, q)) in x.iter().zip(y).enumerate() {
                assert_close(&format!("{path}[{k}]"), p, q);
            }
        }
        (Value::Object(x), Value::Object(y)) => {
            assert_eq!(x.keys().collect::<Vec<_>>(), y.keys().collect::<Vec<_>>(), "{path}: keys");
            for (k, p) in x {
                assert_close(&format!("{path}.{k}"), p, &y[k]);
            }
        }
        _ => assert_eq!(a, b, "{path}"),
    }
}

#[test]
fn game_dump_matches_golden_file() {
    let out = run(&["describe", "example-3node", "--dump-game", "-"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let dump: Value = serde_json::from_str(&text[text.find('{').unwrap()..]).unwrap();
    let golden: Value = serde_json::from_str(include_str!("golden/example-3node-game.json")).unwrap();
    assert_close("$", &dump, &golden);

    // spot checks worked by hand from the config
    let s1 = &golden["states"][0];
    assert_eq!(s1["label"], "(0,0,0)");
    let payoff = &s1["payoff"];
    for (i, j, expected) in [(0, 0, 0.2 * 11.0), (0, 1, 0.4 * 11.0), (1, 1, 0.26 * 7.0), (1, 0, 0.46 * 7.0)] {
        assert!((payoff[i][j].as_f64().unwrap() - expected).abs() < 1e-12);
    }
    let cell = &s1["cells"][1];
    assert_eq!(cell["next"][1]["state"], 5);
    assert!((cell["end"].as_f64().unwrap() - 0.6 * 0.3).abs() < 1e-12);
}

#[test]
fn solve_can_dump_the_game_too() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("game.json");
    let out = run(&["solve", "example-3node", "--dump-game", path.to_str().unwrap()]);
    assert!(out.status.success());
    let dump: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let golden: Value = serde_json::from_str(include_str!("golden/example-3node-game.json")).unwrap();
    assert_close("$", &dump, &golden);
}

#[test]
fn matgame_solves_a_matrix_file() {
    let dir = tempfile::tempdir().unwrap();
    // no saddle; value (ad - bc) / (a + d - b - c) = 6 / 6
    let path = write(dir.path(), "m.txt", "3 0\n-1 2\n");
    let out = run(&["matgame", "solve", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("value: 1.000000"), "{}", stdout(&out));

    let path = write(dir.path(), "ragged.txt", "1 2\n3\n");
    assert_eq!(run(&["matgame", "solve", path.to_str().unwrap()]).status.code(), Some(2));
}
