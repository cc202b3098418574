use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_logcy"))
}

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_of(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn assert_golden(name: &str, got: &str) {
    let want = std::fs::read_to_string(golden(name)).unwrap();
    assert_eq!(got, want, "output differs from {name}");
}

#[test]
fn m05_relations_match_golden() {
    let out = stdout_of(&["relations", "--spec", "m05", "--order", "4"]);
    assert_golden("m05_relations_k4.txt", &out);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 5);
    // every relation has the shape z^{D_i}·θ_i + one constant term
    for (i, l) in ["θ1θ3", "θ2θ4", "θ3θ5", "θ1θ4", "θ2θ5"].iter().zip(&lines) {
        assert!(l.starts_with(i), "{l}");
        assert_eq!(l.matches(" + ").count(), 1, "{l}");
    }
}

#[test]
fn eight_cycle_is_semidefinite() {
    let spec = golden("eight_cycle.json");
    let out = stdout_of(&["classify", "--spec", spec.to_str().unwrap()]);
    assert_golden("eight_cycle_classify.txt", &out);
    assert!(out.starts_with("semidefinite"));
}

#[test]
fn chain_cyclic_output() {
    let out = stdout_of(&["cyclic", "--spec", "chain-n1-l4", "--format", "json"]);
    assert_golden("chain_n1_l4.json", &out);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["equations"][0]["text"], "x0·x2 = x1^4 + a1·x1^3 + a2·x1^2 + a3·x1 + a4");
    assert_eq!(v["dual_type"]["text"], "1/4(1,1)");
    assert_eq!(v["p_resolution"]["pair_dim"], 4);
}

#[test]
fn vertex_fiber_presentation() {
    let out = stdout_of(&[
        "relations", "--spec", "vertex-n1", "--order", "4", "--generators", "v2,v1,v3", "--contracted", "2,3",
    ]);
    assert_golden("vertex_n1_fiber.txt", &out);
    assert!(out.trim_end().ends_with("xyz - z^3 - x^2 = 0"));
}

#[test]
fn diagram_plot_data() {
    let out = stdout_of(&["diagram", "--spec", "m05", "--order", "3", "--format", "plotdata"]);
    assert_golden("m05_diagram.plot", &out);
    assert_eq!(out.lines().filter(|l| l.starts_with("ray\t")).count(), 5);
}

#[test]
fn identical_requests_give_identical_bytes() {
    let cases: [&[&str]; 4] = [
        &["diagram", "--spec", "cubic", "--order", "3", "--format", "json"],
        &["product", "v1", "v2", "v3", "--spec", "m05", "--order", "4", "--format", "json"],
        &["lift", "--spec", "m05", "--q", "v4", "--at", "0:1,1/3", "--format", "json"],
        &["check", "--spec", "m05", "--order", "4", "--seed", "9", "--trials", "4"],
    ];
    for args in cases {
        let a = run(args);
        let b = run(args);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn json_request_matches_flags() {
    let req = golden("../request_cyclic.json");
    let via_run = stdout_of(&["run", req.to_str().unwrap()]);
    let via_flags = stdout_of(&["cyclic", "--spec", "chain-n1-l4", "--format", "json"]);
    assert_eq!(via_run, via_flags);
}

#[test]
fn exit_codes_separate_bad_input() {
    let missing = run(&["classify", "--spec", "/nonexistent/spec.json"]);
    assert_eq!(missing.status.code(), Some(2));
    let bad_fan = bin()
        .args(["run"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .stderr(std::process::Stdio::piped())
        .spawn()
        .and_then(|mut c| {
            use std::io::Write;
            c.stdin.take().unwrap().write_all(
                br#"{"command":"classify","spec":{"fan_rays":[[1,0],[1,2],[-1,-1]],"blowups":[0,0,0]}}"#,
            )?;
            c.wait_with_output()
        })
        .unwrap();
    assert_eq!(bad_fan.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_fan.stderr).contains("invalid input"));
    let low_order = run(&["diagram", "--spec", "m05", "--order", "1/2"]);
    assert_eq!(low_order.status.code(), Some(2));
    let chain_as_pair = run(&["diagram", "--spec", "chain-n1-l4"]);
    assert_eq!(chain_as_pair.status.code(), Some(2));
}
