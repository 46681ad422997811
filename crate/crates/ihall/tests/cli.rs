use std::process::Command;

fn ihall(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ihall")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn star_relations_on_p1_hold() {
    let (code, json, _) = ihall(&["--weights", "1,1", "--q", "2", "--suite", "relations:star", "--max-index", "1"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let recs = v["records"].as_array().unwrap();
    assert!(!recs.is_empty());
    for r in recs {
        assert_eq!(r["status"], "holds", "{r}");
        assert!(r["id"] == "iDR1b" || r["id"] == "iDR2" || r["id"] == "iDR3b");
        assert!(r.get("residual").is_none());
    }
}

#[test]
fn theorem_b_matches_bootstrap() {
    let (code, json, _) = ihall(&["--weights", "2,2", "--q", "3", "--suite", "theorem-b", "--max-index", "2"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["summary"]["fails"], 0);
    assert!(v["records"].as_array().unwrap().iter().any(|r| r["id"] == "rootset-Theta" && r["params"]["r"] == 2));
}

#[test]
fn reports_are_reproducible() {
    let args = ["--weights", "2,2", "--q", "3", "--suite", "associativity", "--seed", "7", "--max-index", "1"];
    let (c1, a, _) = ihall(&args);
    let (c2, b, _) = ihall(&args);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
}

#[test]
fn single_weight_is_rejected() {
    let (code, _, err) = ihall(&["--weights", "4", "--q", "2", "--suite", "relations"]);
    assert_eq!(code, 2);
    assert!(err.contains("t >= 2"), "{err}");
}

#[test]
fn square_ground_field_is_rejected() {
    let (code, _, _) = ihall(&["--weights", "1,1", "--q", "9", "--suite", "relations"]);
    assert_eq!(code, 2);
}

#[test]
fn config_file_and_flags() {
    let dir = std::env::temp_dir().join(format!("ihall-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.toml");
    let out = dir.join("report.json");
    std::fs::write(&cfg, "weights = [1, 1]\nlambda = [\"inf\", 0]\nq = 2\nsuite = \"relations:star\"\n[caps]\nmax_index = 1\n").unwrap();
    let (code, stdout, _) = ihall(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["suite"], "relations:star");
    assert_eq!(v["lambda"], serde_json::json!(["inf", "0"]));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn dumps() {
    let (code, s, _) = ihall(&["--weights", "1,1", "--q", "2", "dump", "star", "Theta", "0"]);
    assert_eq!(code, 0);
    assert_eq!(s.lines().count(), 1);
    assert!(s.contains("lines=[] ; torsion={} ; K=[0,0]"), "{s}");

    let (code, s, _) = ihall(&["--weights", "2,2", "--q", "3", "dump", "[1,1]", "B", "-1"]);
    assert_eq!(code, 0);
    assert_eq!(s, "-1 ; lines=[] ; torsion={e1: (0,1)} ; K=[1,-1,1,0]\n");

    let (_, s, _) = ihall(&["--weights", "2,2", "--q", "3", "dump", "[1,1]", "Theta", "1"]);
    assert_eq!(s.lines().count(), 3);

    let (code, _, err) = ihall(&["--weights", "2,2", "--q", "3", "dump", "[5,1]", "B", "0"]);
    assert_eq!(code, 2);
    assert!(!err.is_empty());
}
