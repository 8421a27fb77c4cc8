use serde_json::{json, Value};
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};

fn demon() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_demon"));
    c.env_remove("DEMON_SEED");
    c
}

fn ok(out: Output) -> Output {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

const TANH: [&str; 14] = [
    "run",
    "--model",
    "benchmark:2d",
    "--reward",
    "linear",
    "--demon",
    "tanh",
    "--K",
    "16",
    "--T",
    "64",
    "--beta",
    "0.1",
    "--seed",
];

#[test]
fn run_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut outs = Vec::new();
    for name in ["a", "b"] {
        let path = dir.path().join(format!("{name}.jsonl"));
        let stdout = ok(demon().args(TANH).arg("7").arg("-o").arg(&path).output().unwrap()).stdout;
        outs.push((read(&path), read(&dir.path().join(format!("{name}.summary.json"))), stdout));
    }
    assert_eq!(outs[0], outs[1]);
    let text = String::from_utf8(outs[0].0.clone()).unwrap();
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 64);
    let keys = |v: &Value| {
        let mut k: Vec<String> = v.as_object().unwrap().keys().cloned().collect();
        k.sort();
        k
    };
    assert_eq!(keys(&lines[0]), ["delta", "estimates", "mu_hat", "t", "tau", "weights", "z_star_norm"]);
    assert_eq!(keys(&lines[63]), ["final_reward", "final_state", "reward_queries", "wall_time_ms"]);
    assert_eq!(lines[63]["reward_queries"], 16 * 63);
    assert!(lines[63]["wall_time_ms"].is_null());
    let summary: Value = serde_json::from_slice(&outs[0].1).unwrap();
    assert_eq!(summary["final_reward"], lines[63]["final_reward"]);
}

#[test]
fn plain_and_best_of_n_runs() {
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("plain.jsonl");
    ok(demon()
        .args(["run", "--demon", "none", "--reward", "linear", "--T", "16", "--seed", "3", "-o"])
        .arg(&plain)
        .output()
        .unwrap());
    let text = std::fs::read_to_string(&plain).unwrap();
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 16);
    assert!(lines[..15].iter().all(|l| l["weights"] == json!([])));
    assert_eq!(lines[15]["reward_queries"], 0);

    let mut bon = Vec::new();
    for name in ["b1", "b2"] {
        let p = dir.path().join(format!("{name}.jsonl"));
        ok(demon()
            .args(["run", "--demon", "best-of-n", "--reward", "linear", "--K", "4", "--T", "8", "--seed", "5", "-o"])
            .arg(&p)
            .output()
            .unwrap());
        bon.push(read(&p));
    }
    assert_eq!(bon[0], bon[1]);
    assert_eq!(String::from_utf8(bon[0].clone()).unwrap().lines().count(), 29);
}

#[test]
fn env_seed_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"model": "benchmark:2d", "demon": {"K": 4, "T": 10, "ode_steps": 4, "seed": 1}, "reward": "bump"}"#,
    )
    .unwrap();
    let run = |env: Option<&str>, flag: Option<&str>, name: &str| {
        let out = dir.path().join(name);
        let mut c = demon();
        c.arg("run").arg("--config").arg(&cfg).arg("-o").arg(&out);
        if let Some(e) = env {
            c.env("DEMON_SEED", e);
        }
        if let Some(f) = flag {
            c.args(["--seed", f]);
        }
        ok(c.output().unwrap());
        read(&out)
    };
    let from_config = run(None, None, "c.jsonl");
    let from_env = run(Some("7"), None, "e.jsonl");
    let from_flag = run(None, Some("7"), "f.jsonl");
    assert_ne!(from_config, from_env);
    assert_eq!(from_env, from_flag);
}

#[test]
fn bad_inputs_exit_nonzero() {
    let out = demon().args(["verify", "lemma9"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = demon().args(["run", "--model", "no/such.json", "--reward", "linear"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no/such.json"));
    let out = demon().args(["run", "--demon", "tanh", "--tau", "inf", "--reward", "linear"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for name in ["x", "y"] {
        let out_dir = dir.path().join(name);
        let out = demon().args(["verify", "all", "--quick", "--seed", "7", "--out"]).arg(&out_dir).output().unwrap();
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&out_dir)
            .unwrap()
            .map(|e| {
                let p = e.unwrap().path();
                (p.file_name().unwrap().to_string_lossy().into_owned(), read(&p))
            })
            .collect();
        files.sort();
        runs.push((out.stdout, files, out.status.code()));
    }
    assert_eq!(runs[0], runs[1]);
    let names: Vec<&str> = runs[0].1.iter().map(|f| f.0.as_str()).collect();
    assert_eq!(names, ["curves.json", "reports.csv", "reports.json", "spread.json"]);
}

#[test]
fn verify_lemma5_passes() {
    let out = ok(demon().args(["verify", "lemma5", "--seed", "3"]).output().unwrap());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().next().unwrap().starts_with("PASS lemma5"));
}

/// Starts a server subcommand on an ephemeral port and returns its base URL.
fn start(args: &[&str]) -> (Child, String) {
    let mut child = demon().args(args).args(["--addr", "127.0.0.1:0"]).stderr(Stdio::piped()).spawn().unwrap();
    let mut line = String::new();
    BufReader::new(child.stderr.take().unwrap()).read_line(&mut line).unwrap();
    let url = line.trim().strip_prefix("listening on ").unwrap().to_string();
    (child, url)
}

fn post(url: &str, body: Value) -> String {
    let agent: ureq::Agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
    let mut r = agent.post(url).header("content-type", "application/json").send(body.to_string().as_str()).unwrap();
    r.body_mut().read_to_string().unwrap()
}

#[test]
fn judge_subcommand_is_deterministic() {
    let req = json!({"mode": "compare", "states": [[1.0, 1.0], [1.2, 0.9]], "meta": {"t": 0.5, "step": 0}});
    let mut answers = Vec::new();
    for _ in 0..2 {
        let (mut child, url) = start(&["judge", "--flip-prob", "0.5", "--seed", "4"]);
        answers.push((0..20).map(|_| post(&format!("{url}/"), req.clone())).collect::<Vec<_>>());
        child.kill().unwrap();
        child.wait().unwrap();
    }
    assert_eq!(answers[0], answers[1]);
    assert!(answers[0].iter().any(|a| a.contains("\"preferred\":1")));
    let (mut child, url) = start(&["judge"]);
    let scores = post(
        &format!("{url}/"),
        json!({"mode": "score", "states": [[1.0, 1.0], [4.0, 5.0]], "meta": {"t": 0.5, "step": 0}}),
    );
    assert_eq!(scores, r#"{"scores":[-0.0,-5.0]}"#);
    child.kill().unwrap();
    child.wait().unwrap();
}

#[test]
fn serve_subcommand_runs_sessions() {
    let (mut child, url) = start(&["serve"]);
    let body = json!({"model": "benchmark:2d", "demon": {"kind": "selection", "K": 3, "T": 3, "seed": 1}});
    let created: Value = serde_json::from_str(&post(&format!("{url}/sessions"), body)).unwrap();
    assert_eq!(created["state"]["candidates"].as_array().unwrap().len(), 3);
    child.kill().unwrap();
    child.wait().unwrap();
}
