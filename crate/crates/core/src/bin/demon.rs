use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use demon_core::config::{load_model, RewardRef, RunConfig};
use demon_core::demon::{best_of_n, sample_trajectory, DemonKind, Temperature};
use demon_core::net::serve_blocking;
use demon_core::rewards::{judge_router, SimulatedJudge};
use demon_core::service::{router, SessionStore};
use demon_core::verification::{reports_to_csv, run_suite, Suite, SuiteOptions};
use serde_json::json;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "demon", version, about = "Reward-guided diffusion sampling on analytic mixtures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample one trajectory (or a Best-of-N batch) and write JSONL plus a summary.
    Run(RunArgs),
    /// Run a verification suite; exits 0 iff every report passes.
    Verify(VerifyArgs),
    /// Serve the interactive steering API.
    Serve(ServeArgs),
    /// Serve a simulated judge speaking the external reward protocol.
    Judge(JudgeArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `benchmark:2d`, `benchmark:8d`, or a mixture JSON file.
    #[arg(long)]
    model: Option<String>,
    /// Preset name, `http(s)://` score endpoint, or `@file.json`.
    #[arg(long)]
    reward: Option<String>,
    #[arg(long = "demon")]
    kind: Option<DemonKind>,
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long = "T")]
    steps: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    t_min: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    /// `adaptive`, `inf`, or a number.
    #[arg(long)]
    tau: Option<Temperature>,
    #[arg(long)]
    ode_steps: Option<usize>,
    #[arg(long)]
    t_switch: Option<f64>,
    /// Best-of-N sample count.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, env = "DEMON_SEED")]
    seed: Option<u64>,
    /// Trajectory JSONL path; the summary is written to `<stem>.summary.json`.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Record wall time (makes outputs differ between runs).
    #[arg(long)]
    record_wall_time: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(Suite::NAMES))]
    suite: String,
    #[arg(long, env = "DEMON_SEED", default_value_t = 0)]
    seed: u64,
    /// Small sample sizes; for smoke runs only.
    #[arg(long)]
    quick: bool,
    /// Directory for `reports.json`, `reports.csv` and tables.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    record_wall_time: bool,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Write a JSON snapshot per session after every step and reload them at start.
    #[arg(long)]
    snapshot_dir: Option<PathBuf>,
}

#[derive(Args)]
struct JudgeArgs {
    #[arg(long, default_value = "127.0.0.1:8090")]
    addr: SocketAddr,
    /// Model whose dimension sizes the default hidden reward.
    #[arg(long, default_value = "benchmark:2d")]
    model: String,
    /// Hidden reward: preset name or `@spec.json`.
    #[arg(long, default_value = "neg_distance")]
    hidden: String,
    #[arg(long, default_value_t = 0.0)]
    flip_prob: f64,
    #[arg(long, env = "DEMON_SEED", default_value_t = 0)]
    seed: u64,
}

fn build_config(a: &RunArgs) -> Result<RunConfig> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(m) = &a.model {
        cfg.model = m.clone();
    }
    if let Some(r) = &a.reward {
        cfg.reward = Some(RewardRef::parse_arg(r)?);
    }
    let d = &mut cfg.demon;
    if let Some(kind) = a.kind {
        d.kind = kind;
        if kind == DemonKind::None && a.k.is_none() {
            d.k = 1;
        }
    }
    macro_rules! set {
        ($($field:ident => $target:ident),*) => { $(if let Some(v) = a.$field { d.$target = v; })* };
    }
    set!(k => k, steps => steps, beta => beta, rho => rho, t_min => t_min, t_max => t_max, ode_steps => ode_steps, seed => seed);
    if a.tau.is_some() {
        d.tau = a.tau;
    }
    if a.t_switch.is_some() {
        d.t_switch = a.t_switch;
    }
    if a.n.is_some() {
        d.n = a.n;
    }
    if let Some(o) = &a.output {
        cfg.output = Some(o.clone());
    }
    Ok(cfg)
}

fn summary_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    out.with_file_name(format!("{stem}.summary.json"))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(a: RunArgs) -> Result<ExitCode> {
    let cfg = build_config(&a)?;
    let (model, source) = cfg.resolve()?;
    let out = cfg.output.clone().unwrap_or_else(|| PathBuf::from("trajectory.jsonl"));
    let start = Instant::now();
    let (jsonl, summary) = if cfg.demon.kind == DemonKind::BestOfN {
        let n = cfg.demon.best_of_n_count();
        let res = best_of_n(&model, &cfg.demon, &source, n, demon_core::SeedPath::new(cfg.demon.seed))?;
        let wall = a.record_wall_time.then(|| start.elapsed().as_secs_f64() * 1e3);
        let mut text = String::new();
        for (i, r) in res.rewards.iter().enumerate() {
            text.push_str(&json!({"index": i, "reward": r}).to_string());
            text.push('\n');
        }
        let fin = json!({
            "final_state": res.best_state,
            "final_reward": res.best_reward,
            "reward_queries": res.reward_queries,
            "wall_time_ms": wall,
            "best_index": res.best_index,
        });
        text.push_str(&fin.to_string());
        text.push('\n');
        (text, fin)
    } else {
        let tr = sample_trajectory(&model, &cfg.demon, &source)?;
        let wall = a.record_wall_time.then(|| start.elapsed().as_secs_f64() * 1e3);
        let summary = json!({
            "final_reward": tr.final_reward,
            "reward_queries": tr.reward_queries,
            "wall_time_ms": wall,
            "score_evals": tr.score_evals,
            "steps": tr.steps.len(),
        });
        (tr.to_jsonl(wall), summary)
    };
    write(&out, &jsonl)?;
    let summary_text = serde_json::to_string_pretty(&summary)? + "\n";
    write(&summary_path(&out), &summary_text)?;
    print!("{summary_text}");
    Ok(ExitCode::SUCCESS)
}

fn verify(a: VerifyArgs) -> Result<ExitCode> {
    let suite: Suite = a.suite.parse().map_err(anyhow::Error::msg)?;
    let opts = SuiteOptions { seed: a.seed, quick: a.quick, record_wall_time: a.record_wall_time };
    let out = run_suite(suite, &opts)?;
    for r in &out.reports {
        println!("{}", r.summary_line());
    }
    if let Some(dir) = &a.out {
        write(&dir.join("reports.json"), &(serde_json::to_string_pretty(&out.reports)? + "\n"))?;
        write(&dir.join("reports.csv"), &reports_to_csv(&out.reports))?;
        for (name, table) in &out.tables {
            write(&dir.join(format!("{name}.json")), &(serde_json::to_string_pretty(table)? + "\n"))?;
        }
    }
    let failed = out.reports.iter().filter(|r| !r.pass).count();
    println!("{} of {} reports passed", out.reports.len() - failed, out.reports.len());
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn serve(a: ServeArgs) -> Result<ExitCode> {
    let store = SessionStore::new(a.snapshot_dir)?;
    let restored = store.restore()?;
    if restored > 0 {
        eprintln!("restored {restored} sessions");
    }
    serve_blocking(router(Arc::new(store)), a.addr)?;
    Ok(ExitCode::SUCCESS)
}

fn judge(a: JudgeArgs) -> Result<ExitCode> {
    let dim = load_model(&a.model)?.dim();
    let hidden = match RewardRef::parse_arg(&a.hidden)? {
        RewardRef::Preset(name) => demon_core::benchmarks::reward_preset(&name, dim),
        RewardRef::Spec(s) => Some(s),
        RewardRef::Source(_) => None,
    };
    let Some(hidden) = hidden else { bail!("hidden reward must be a preset or a reward spec") };
    hidden.validate(dim)?;
    let judge = SimulatedJudge::new(hidden, a.flip_prob)?;
    serve_blocking(judge_router(judge, a.seed), a.addr)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Verify(a) => verify(a),
        Command::Serve(a) => serve(a),
        Command::Judge(a) => judge(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
