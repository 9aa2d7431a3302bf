use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_entangle-coord");

fn invoke(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("ENTANGLE_COORD_SEED").output().unwrap()
}

fn json(args: &[&str]) -> Value {
    let out = invoke(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn code(args: &[&str]) -> Option<i32> {
    invoke(args).status.code()
}

#[test]
fn run_examples() {
    let v = json(&["run", "--bits", "1", "--trials", "100000", "--seed", "7"]);
    let hist = v["results"]["summary"]["action_number_histogram"].as_array().unwrap();
    for cell in hist {
        assert!((cell.as_f64().unwrap() - 0.5).abs() <= 0.01);
    }
    let v = json(&["run", "--bits", "8", "--trials", "1000", "--seed", "1"]);
    assert_eq!(v["results"]["summary"]["agreement_rate"], 1.0);
    assert_eq!(v["command"], "run");
    assert_eq!(v["seed"], 1);
}

#[test]
fn attack_examples() {
    let v = json(&["attack", "ghz", "--bits", "8", "--trials", "1000", "--seed", "3"]);
    assert_eq!(v["results"]["eavesdrop_success_rate"], 1.0);
    let v = json(&["attack", "w", "--bits", "1", "--trials", "100000", "--seed", "3"]);
    assert!((v["results"]["agreement_rate"].as_f64().unwrap() - 1.0 / 3.0).abs() <= 0.006);
    let v = json(&["attack", "wolf", "--bits", "4", "--trials", "100", "--target-bit", "0", "--seed", "3"]);
    assert_eq!(v["results"]["fidelity"], 1.0);
}

#[test]
fn bound_examples() {
    let v = json(&["bound", "--eps", "0.0001,0.01,0.5"]);
    let lengths: Vec<u64> =
        v["results"].as_array().unwrap().iter().map(|r| r["max_error_free_length"].as_u64().unwrap()).collect();
    assert_eq!(lengths, [678, 12, 0]);

    let v = json(&["bound", "--grid", "0.1:0.5:5"]);
    assert_eq!(v["results"].as_array().unwrap().len(), 5);
    assert_eq!(v["results"][4]["eps"], 0.5);
}

#[test]
fn nicd_and_reconcile_examples() {
    let v = json(&["nicd", "--m", "3", "--eps", "0.1"]);
    assert!((v["results"]["max_correlation"].as_f64().unwrap() - 0.8).abs() < 1e-9);
    let v = json(&["nicd", "--m", "1", "--eps", "0.0"]);
    assert_eq!(v["results"]["max_correlation"], 1.0);
    let v = json(&["nicd", "--m", "2", "--eps", "0.05,0.25", "--certify"]);
    assert_eq!(v["results"]["all_pass"], true);
    assert_eq!(v["results"]["rows"].as_array().unwrap().len(), 2);

    let v = json(&["reconcile", "--bits", "64", "--eps", "0.01", "--trials", "1000", "--seed", "9"]);
    assert!(v["results"]["aggregate"]["success_rate"].as_f64().unwrap() >= 0.99);
}

#[test]
fn parameters_include_defaults() {
    let v = json(&["run"]);
    let p = &v["parameters"];
    for key in ["bits", "eps", "theta_a", "theta_b", "trials", "agents", "records"] {
        assert!(p.get(key).is_some(), "missing {key}");
    }
    assert_eq!(p["trials"], 1);
    assert_eq!(p["agents"], 2);
    let v = json(&["attack", "wolf"]);
    assert_eq!(v["parameters"]["target_bit"], 0);
    let v = json(&["reconcile"]);
    assert_eq!(v["parameters"]["bits"], 64);
    assert_eq!(v["parameters"]["eps"], 0.01);
}

#[test]
fn usage_errors_exit_two() {
    let bad: &[&[&str]] = &[
        &["run", "--bits", "0"],
        &["run", "--bits", "65"],
        &["run", "--eps", "0.6"],
        &["run", "--eps", "-0.1"],
        &["run", "--trials", "0"],
        &["run", "--agents", "1"],
        &["run", "--bogus"],
        &["attack", "w", "--eve-first"],
        &["attack", "ghz", "--target-bit", "1"],
        &["attack", "wolf", "--target-bit", "2"],
        &["attack", "nobody"],
        &["bound", "--eps", "0"],
        &["bound", "--eps", "0.7"],
        &["bound"],
        &["bound", "--eps", "0.1", "--grid", "0.1:0.2:2"],
        &["bound", "--grid", "0.1:0.2"],
        &["nicd", "--m", "0", "--eps", "0.1"],
        &["nicd", "--m", "5", "--eps", "0.1"],
        &["nicd", "--m", "4", "--eps", "0.1", "--certify"],
        &["nicd", "--m", "2", "--eps", "0.9"],
        &["reconcile", "--eps", "0"],
        &[],
    ];
    for args in bad {
        let out = invoke(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn success_exits_zero() {
    for args in [
        &["run", "--agents", "3", "--bits", "2", "--trials", "5"][..],
        &["run", "--theta-a", "-0.3", "--theta-b", "0.2", "--trials", "5"],
        &["attack", "biseparable", "--trials", "5"],
        &["attack", "ghz", "--eve-first", "--bits", "3"],
        &["attack", "wolf", "--target-bit", "1"],
        &["nicd", "--m", "4", "--eps", "0.1"],
    ] {
        assert_eq!(code(args), Some(0), "{args:?}");
    }
}

#[test]
fn environment_seed_and_flag_precedence() {
    let from_env = Command::new(BIN).args(["run", "--trials", "4"]).env("ENTANGLE_COORD_SEED", "11").output().unwrap();
    let v: Value = serde_json::from_slice(&from_env.stdout).unwrap();
    assert_eq!(v["seed"], 11);

    let flag = Command::new(BIN)
        .args(["run", "--trials", "4", "--seed", "5"])
        .env("ENTANGLE_COORD_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(flag.stdout, invoke(&["run", "--trials", "4", "--seed", "5"]).stdout);
    let v: Value = serde_json::from_slice(&flag.stdout).unwrap();
    assert_eq!(v["seed"], 5);

    assert_eq!(json(&["run"])["seed"], 0);
}

#[test]
fn csv_columns() {
    let cases: &[(&[&str], &str)] = &[
        (&["run", "--trials", "2"], "trial,seed,alice_bits,bob_bits,alice_action_number,bob_action_number,agree,strike"),
        (&["run", "--trials", "2", "--agents", "3"], "trial,seed,agent_bits,action_numbers,all_agree,strike"),
        (&["attack", "w", "--trials", "2"], "trial,attacker_bits,alice_bits,bob_bits"),
        (&["bound", "--eps", "0.01"], "eps,entropy,raw_bound,max_error_free_length"),
        (
            &["nicd", "--m", "2", "--eps", "0.1"],
            "m,eps,max_agreement,max_correlation,search_size,dictator_attains,achiever_f,achiever_g,achiever",
        ),
        (
            &["nicd", "--m", "2", "--eps", "0.1", "--certify"],
            "m,eps,max_correlation,bound,passes,dictator_attains,search_size,achiever",
        ),
        (
            &["reconcile", "--trials", "2"],
            "trial,seed,n,errors_before,errors_after,disclosed_bits,passes,success",
        ),
    ];
    for (args, header) in cases {
        let mut full = args.to_vec();
        full.extend(["--format", "csv"]);
        let out = invoke(&full);
        assert_eq!(out.status.code(), Some(0));
        let text = String::from_utf8(out.stdout).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(*header), "{args:?}");
        let width = header.split(',').count();
        for line in lines {
            assert_eq!(line.split(',').count(), width, "{line}");
        }
    }
}

#[test]
fn output_file_matches_stdout() {
    let path = std::env::temp_dir().join(format!("entangle-coord-{}.json", std::process::id()));
    let out = invoke(&["attack", "ghz", "--bits", "2", "--trials", "3", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written = std::fs::read(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert_eq!(written, invoke(&["attack", "ghz", "--bits", "2", "--trials", "3"]).stdout);
}

#[test]
fn repeated_invocations_are_byte_identical() {
    for args in [
        &["run", "--bits", "5", "--trials", "200", "--eps", "0.1", "--records", "--seed", "4"][..],
        &["run", "--agents", "4", "--bits", "3", "--trials", "50", "--records"],
        &["attack", "biseparable", "--bits", "3", "--trials", "100", "--seed", "2"],
        &["reconcile", "--trials", "50", "--records", "--seed", "8"],
        &["reconcile", "--trials", "50", "--format", "csv"],
    ] {
        let a = invoke(args);
        let b = invoke(args);
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn envelope_matches_shipped_schema() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../schemas/report-envelope.v1.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let required: Vec<&str> = schema["required"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    let commands: Vec<&str> =
        schema["properties"]["command"]["enum"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(commands, ["run", "attack", "bound", "nicd", "reconcile"]);

    for args in [
        &["run"][..],
        &["attack", "ghz"],
        &["bound", "--eps", "0.1"],
        &["nicd", "--m", "1", "--eps", "0.1"],
        &["reconcile"],
    ] {
        let v = json(args);
        let object = v.as_object().unwrap();
        let keys: Vec<&str> = object.keys().map(String::as_str).collect();
        assert_eq!(keys, required, "{args:?}");
        assert_eq!(v["schema"], schema["properties"]["schema"]["const"]);
        assert_eq!(v["command"], args[0]);
        assert!(v["parameters"].is_object());
        assert!(v["seed"].is_u64());
        assert!(v["results"].is_object() || v["results"].is_array());
        assert!(v["version"].as_str().unwrap().chars().next().unwrap().is_ascii_digit());
    }
}
