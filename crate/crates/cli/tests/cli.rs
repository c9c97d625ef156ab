use std::process::{Command, Output};

use serde_json::Value;

fn irtensor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_irtensor")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

#[test]
fn cg_value() {
    let v = json(&irtensor(&["cg", "--j1", "1", "--m1", "0", "--j2", "1", "--m2", "0", "--j", "2", "--m", "0"]));
    assert!((v["value"].as_f64().unwrap() - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    let v = json(&irtensor(&["cg", "--j1", "1/2", "--m1", "1/2", "--j2", "1/2", "--m2", "-1/2", "--j", "0", "--m", "0"]));
    assert!((v["value"].as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
    let out = irtensor(&["cg", "--j1", "1", "--m1", "0", "--j2", "1", "--m2", "0", "--j", "2", "--m", "0", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("value"));
}

#[test]
fn epsilon_tensors() {
    let v = json(&irtensor(&["epsilon", "--n", "1", "--m", "0"]));
    assert_eq!(v["rank"], 1);
    assert_eq!(v["entries"], serde_json::json!([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]));
    let a = json(&irtensor(&["epsilon", "--n", "3", "--m", "-2", "--method", "explicit"]));
    let b = json(&irtensor(&["epsilon", "--n", "3", "--m", "-2", "--method", "harmonic"]));
    let diff = a["entries"]
        .as_array()
        .unwrap()
        .iter()
        .zip(b["entries"].as_array().unwrap())
        .map(|(x, y)| (x[0].as_f64().unwrap() - y[0].as_f64().unwrap()).abs() + (x[1].as_f64().unwrap() - y[1].as_f64().unwrap()).abs())
        .fold(0.0, f64::max);
    assert!(diff < 1e-12);
    assert_eq!(json(&irtensor(&["epsilon", "--n", "2", "--m", "1", "--basis", "partial:2"]))["rank"], 3);
    assert_eq!(json(&irtensor(&["epsilon", "--n", "4", "--m", "0", "--basis", "sym:2"]))["rank"], 4);
}

#[test]
fn dmat_and_harmonics() {
    let v = json(&irtensor(&["dmat", "--l", "1", "--axis", "0,0,1", "--angle", "0.3"]));
    let top = &v["matrix"][0][0];
    assert!((top[0].as_f64().unwrap() - 0.3f64.cos()).abs() < 1e-14);
    assert!((top[1].as_f64().unwrap() + 0.3f64.sin()).abs() < 1e-14);
    let v = json(&irtensor(&["dmat", "--l", "2", "--euler", "0.1,-0.4,2.0", "--method", "product-expansion"]));
    assert_eq!(v["matrix"].as_array().unwrap().len(), 5);
    let y = json(&irtensor(&["ylm", "--l", "0", "--m", "0", "--dir", "-1,2,0.5"]));
    assert!((y["value"][0].as_f64().unwrap() - 0.5 / std::f64::consts::PI.sqrt()).abs() < 1e-15);
    let g = json(&irtensor(&["ylm-grad", "--order", "2", "--l", "3", "--m", "-1", "--dir", "0.2,0.3,0.9"]));
    assert_eq!(g["rank"], 2);
}

#[test]
fn reduced_and_assembled_elements() {
    let r = json(&irtensor(&["rme", "--kind", "jpow", "--n", "1", "--j", "3/2"]));
    assert_eq!(r["bra_j"], "3/2");
    assert!((r["value"][0].as_f64().unwrap() - 3.75f64.sqrt()).abs() < 1e-12);
    let out = irtensor(&["rme", "--kind", "gradop", "--n", "2", "--l", "2"]);
    assert_eq!(out.status.code(), Some(2));
    // J_k from its reduced element √(j(j+1)): ⟨1 1|J_x|1 0⟩ = 1/√2
    let we = json(&irtensor(&[
        "we", "--class", "irreducible", "--rank", "1", "--rme", &format!("1={}", 2f64.sqrt()), "--jp", "1", "--mp", "1", "--j", "1", "--m", "0",
    ]));
    assert!((we["entries"][0][0].as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-14);
    assert!(we["entries"][2][0].as_f64().unwrap().abs() < 1e-14);
    let out = irtensor(&["we", "--class", "totally-symmetric", "--rank", "2", "--rme", "2=1", "--jp", "1", "--mp", "0", "--j", "1", "--m", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[0, 2]"));
}

#[test]
fn multipole_sources() {
    let dir = std::env::temp_dir().join(format!("irtensor-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let charges = dir.join("charges.json");
    std::fs::write(&charges, r#"{"charges":[{"pos":[0,0,0.2],"q":1},{"pos":[0.1,0,-0.1],"q":0.5}]}"#).unwrap();
    let loops = dir.join("loop.json");
    std::fs::write(&loops, r#"{"loops":[{"I":2,"vertices":[[1,0,0],[0,1,0],[-1,0,0],[0,-1,0],[1,0,0]]}]}"#).unwrap();

    let e = json(&irtensor(&["multipole", "--kind", "e", "--source", charges.to_str().unwrap(), "--order", "3", "--eval", "0,0,5"]));
    assert_eq!(e["kind"], "electric");
    let direct = e["field"]["potential"].as_f64().unwrap();
    assert!((direct - (1.0 / 4.8 + 0.5 / (0.01f64 + 5.1 * 5.1).sqrt())).abs() < 1e-12);
    let s = json(&irtensor(&[
        "multipole", "--kind", "e", "--source", charges.to_str().unwrap(), "--order", "3", "--eval", "0,0,5", "--method", "spherical",
    ]));
    assert!((s["field"]["potential"].as_f64().unwrap() - direct).abs() < 1e-4 * direct);

    let m = json(&irtensor(&[
        "multipole", "--kind", "m", "--source", loops.to_str().unwrap(), "--order", "2", "--eval", "0,0,-4", "--method", "spherical-full",
    ]));
    assert_eq!(m["kind"], "magnetic");
    assert_eq!(m["field"]["vector_potential"].as_array().unwrap().len(), 3);
    let csv = irtensor(&["multipole", "--kind", "m", "--source", loops.to_str().unwrap(), "--order", "2", "--format", "csv"]);
    assert_eq!(String::from_utf8(csv.stdout).unwrap().lines().count(), 1 + 3 + 5);

    let wrong = irtensor(&["multipole", "--kind", "e", "--source", loops.to_str().unwrap(), "--order", "2"]);
    assert_eq!(wrong.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn verify_module_and_determinism() {
    let a = irtensor(&["verify", "--module", "standard_basis"]);
    let v = json(&a);
    assert_eq!(v["passed"], true);
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["module"] == "standard_basis"));
    let b = irtensor(&["verify", "--module", "standard_basis"]);
    assert_eq!(a.stdout, b.stdout);

    let full = json(&irtensor(&["verify"]));
    let names: Vec<&str> = full["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    for module in ["tensor_core", "angular_momentum", "standard_basis", "spin_rotations", "harmonics", "wigner_eckart", "multipoles", "cli"] {
        assert!(full["checks"].as_array().unwrap().iter().any(|c| c["module"] == module), "{module}");
    }

    let seeded = irtensor(&["verify", "--module", "spin_rotations", "--seed", "0x1234"]);
    let again = irtensor(&["verify", "--module", "spin_rotations", "--seed", "4660"]);
    assert_eq!(json(&seeded)["seed"], 4660);
    assert_eq!(seeded.stdout, again.stdout);
}

#[test]
fn verify_failures_and_usage_errors() {
    let strict = irtensor(&["verify", "--module", "standard_basis", "--tol", "1e-15"]);
    assert_eq!(strict.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&strict.stdout).unwrap();
    assert_eq!(v["passed"], false);

    let bad = irtensor(&["verify", "--module", "nonsense"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("standard_basis"));
    assert_eq!(irtensor(&["transmogrify"]).status.code(), Some(2));
    assert_eq!(irtensor(&["cg", "--j1", "1"]).status.code(), Some(2));
    assert_eq!(irtensor(&["cg", "--j1", "1/3", "--m1", "0", "--j2", "1", "--m2", "0", "--j", "1", "--m", "0"]).status.code(), Some(2));

    let timed = json(&irtensor(&["verify", "--module", "cli", "--timings", "--format", "json"]));
    assert!(timed["checks"][0]["runtime_ms"].is_number());
    let csv = irtensor(&["verify", "--module", "cli", "--format", "csv"]);
    assert!(String::from_utf8(csv.stdout).unwrap().starts_with("name,module,identity,status"));
}

#[test]
fn rank_cap_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_irtensor"))
        .args(["epsilon", "--n", "5", "--m", "0"])
        .env("IRTENSOR_RANK_CAP", "4")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap 4"));
}
