//! End-to-end CLI checks: planning, running with trace replay, suite
//! verification, exit codes, and input diagnostics.

use std::path::PathBuf;
use std::process::Command;

fn nmext() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nmext"))
}

fn tmp(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("nmext-cli-test-{}-{name}", std::process::id()));
    p
}

#[test]
fn plan_is_deterministic_and_reports_relations() {
    let out1 = tmp("plan1.cfg");
    let out2 = tmp("plan2.cfg");
    for out in [&out1, &out2] {
        let o = nmext()
            .args([
                "plan",
                "--profile",
                "const2src",
                "--n",
                "12",
                "--k",
                "6",
                "--eps",
                "0.25",
                "--seed",
                "7",
                "--out",
            ])
            .arg(out)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let stdout = String::from_utf8_lossy(&o.stdout);
        assert!(stdout.contains("alpha"), "relation table missing: {stdout}");
    }
    let a = std::fs::read(&out1).unwrap();
    let b = std::fs::read(&out2).unwrap();
    assert_eq!(a, b, "same flags must produce byte-identical configs");
    let text = String::from_utf8(a).unwrap();
    assert!(text.contains("alpha = 0.5"));
    assert!(text.contains("delta_prime = 0.1"));
}

#[test]
fn plan_rejects_infeasible() {
    let o = nmext()
        .args([
            "plan",
            "--profile",
            "const2src",
            "--n",
            "4",
            "--k",
            "8",
            "--eps",
            "0.25",
            "--out",
        ])
        .arg(tmp("bad.cfg"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("exceeds"),
        "diagnostic should name the violation: {err}"
    );
}

#[test]
fn run_roundtrip_and_replay() {
    let cfg = tmp("run.cfg");
    assert!(nmext()
        .args([
            "plan",
            "--profile",
            "constaffine",
            "--n",
            "12",
            "--k",
            "6",
            "--eps",
            "0.25",
            "--seed",
            "7",
            "--out",
        ])
        .arg(&cfg)
        .status()
        .unwrap()
        .success());
    let x = tmp("x.hex");
    std::fs::write(&x, "0xabc\n").unwrap();
    let trace = tmp("run.trace");
    let o1 = nmext()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--x"])
        .arg(&x)
        .args(["--trace"])
        .arg(&trace)
        .output()
        .unwrap();
    assert!(
        o1.status.success(),
        "{}",
        String::from_utf8_lossy(&o1.stderr)
    );
    let out1 = String::from_utf8_lossy(&o1.stdout).to_string();

    // Same input twice: identical output; replay agrees bit-exactly.
    let o2 = nmext()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--x"])
        .arg(&x)
        .args(["--replay"])
        .arg(&trace)
        .output()
        .unwrap();
    assert!(o2.status.success());
    let out2 = String::from_utf8_lossy(&o2.stdout).to_string();
    assert_eq!(out1.lines().next(), out2.lines().next());
    assert!(out2.contains("replay OK"));
}

#[test]
fn run_rejects_wrong_length_hex() {
    let cfg = tmp("len.cfg");
    assert!(nmext()
        .args([
            "plan",
            "--profile",
            "polylogaffine",
            "--n",
            "12",
            "--k",
            "6",
            "--eps",
            "0.25",
            "--out",
        ])
        .arg(&cfg)
        .status()
        .unwrap()
        .success());
    let x = tmp("short.hex");
    std::fs::write(&x, "0xab\n").unwrap();
    let o = nmext()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--x"])
        .arg(&x)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("n = 12"),
        "error must name the expected width: {err}"
    );
}

#[test]
fn verify_lemmas_suite_and_canonical_report() {
    let cfg = tmp("verify.cfg");
    assert!(nmext()
        .args([
            "plan",
            "--profile",
            "polylogaffine",
            "--n",
            "10",
            "--k",
            "5",
            "--eps",
            "0.25",
            "--seed",
            "11",
            "--out",
        ])
        .arg(&cfg)
        .status()
        .unwrap()
        .success());
    let rep1 = tmp("rep1.json");
    let rep2 = tmp("rep2.json");
    for rep in [&rep1, &rep2] {
        let o = nmext()
            .args(["verify", "--config"])
            .arg(&cfg)
            .args(["--suite", "pipelines", "--canonical", "--report"])
            .arg(rep)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).contains("PASS"));
    }
    assert_eq!(
        std::fs::read(&rep1).unwrap(),
        std::fs::read(&rep2).unwrap(),
        "canonical reports must regenerate byte-identically"
    );
    // Empty/unknown suite selection is a usage error.
    let o = nmext()
        .args(["verify", "--config"])
        .arg(&cfg)
        .args(["--suite", "nothing"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn env_seed_overrides_config() {
    let cfg = tmp("seedenv.cfg");
    assert!(nmext()
        .args([
            "plan",
            "--profile",
            "constaffine",
            "--n",
            "10",
            "--k",
            "5",
            "--eps",
            "0.25",
            "--seed",
            "3",
            "--out",
        ])
        .arg(&cfg)
        .status()
        .unwrap()
        .success());
    let x = tmp("seedenv.x");
    std::fs::write(&x, "0101010101\n").unwrap();
    let base = nmext()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--x"])
        .arg(&x)
        .output()
        .unwrap();
    let with_env = nmext()
        .env("NMEXT_SEED", "99")
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--x"])
        .arg(&x)
        .output()
        .unwrap();
    assert!(base.status.success() && with_env.status.success());
    // The override rebinds every seeded component, so the pipeline output
    // may differ; rerunning with the same override reproduces it.
    let with_env2 = nmext()
        .env("NMEXT_SEED", "99")
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--x"])
        .arg(&x)
        .output()
        .unwrap();
    assert_eq!(with_env.stdout, with_env2.stdout);
}

#[test]
fn replay_mismatch_exits_one() {
    let cfg = tmp("mismatch.cfg");
    assert!(nmext()
        .args([
            "plan",
            "--profile",
            "constaffine",
            "--n",
            "10",
            "--k",
            "5",
            "--eps",
            "0.25",
            "--out",
        ])
        .arg(&cfg)
        .status()
        .unwrap()
        .success());
    let x = tmp("mismatch.x");
    std::fs::write(&x, "1111100000\n").unwrap();
    let trace = tmp("mismatch.trace");
    assert!(nmext()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--x"])
        .arg(&x)
        .args(["--trace"])
        .arg(&trace)
        .status()
        .unwrap()
        .success());
    // Corrupt one bit of the stored trace.
    let text = std::fs::read_to_string(&trace).unwrap();
    let corrupted = if text.contains(" 0") {
        text.replacen(" 0", " 1", 1)
    } else {
        text.replacen(" 1", " 0", 1)
    };
    std::fs::write(&trace, corrupted).unwrap();
    let o = nmext()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--x"])
        .arg(&x)
        .args(["--replay"])
        .arg(&trace)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1), "corrupted replay must exit 1");
    assert!(String::from_utf8_lossy(&o.stdout).contains("MISMATCH"));
}
