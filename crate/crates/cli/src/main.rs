use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use nmext_core::gf2::BitString;
use nmext_core::pipeline::{resolve, PipelineTrace};
use nmext_core::planner::{plan, PlanRequest, PlannerConfig, Profile};
use nmext_core::report::RunReport;
use nmext_core::suites::{pipeline_suite, suite_components, suite_lemmas, SuiteReport};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

/// Construction-and-verification toolkit for two-source and affine
/// non-malleable extractors at desk scale.
#[derive(Parser)]
#[command(name = "nmext", version)]
struct Cli {
    /// Cap the worker-pool size for parallel certification scans.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Resolve a full parameter configuration and write it to a file.
    Plan {
        #[arg(long)]
        profile: String,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        seed: Option<u64>,
        /// Output config path.
        #[arg(long, default_value = "nmext.cfg")]
        out: PathBuf,
    },
    /// Run certification suites against a configuration.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// components | pipelines | lemmas | all
        #[arg(long)]
        suite: String,
        /// Write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Omit wall-clock timings so the report is byte-reproducible.
        #[arg(long)]
        canonical: bool,
    },
    /// Evaluate the configured pipeline on concrete inputs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// First source input (hex or binary text, or raw bytes).
        #[arg(long)]
        x: PathBuf,
        /// Second source input (two-source profiles).
        #[arg(long)]
        y: Option<PathBuf>,
        /// Dump the pipeline trace to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Replay a previously dumped trace and check bit-exact agreement.
        #[arg(long)]
        replay: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .is_err()
        {
            eprintln!("warning: worker pool already initialized; --jobs ignored");
        }
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command) -> anyhow::Result<ExitCode> {
    match cmd {
        Command::Plan {
            profile,
            n,
            k,
            eps,
            seed,
            out,
        } => cmd_plan(&profile, n, k, eps, seed, &out),
        Command::Verify {
            config,
            suite,
            report,
            canonical,
        } => cmd_verify(&config, &suite, report.as_deref(), canonical),
        Command::Run {
            config,
            x,
            y,
            trace,
            replay,
        } => cmd_run(
            &config,
            &x,
            y.as_deref(),
            trace.as_deref(),
            replay.as_deref(),
        ),
    }
}

fn env_seed() -> Option<u64> {
    std::env::var("NMEXT_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
}

fn cmd_plan(
    profile: &str,
    n: u32,
    k: u32,
    eps: f64,
    seed: Option<u64>,
    out: &Path,
) -> anyhow::Result<ExitCode> {
    let profile = Profile::parse(profile)?;
    let seed = seed.or_else(env_seed).unwrap_or(0x6e6d_6578);
    let cfg = plan(&PlanRequest {
        profile,
        n,
        k,
        eps,
        seed,
    })?;
    std::fs::write(out, cfg.to_config_text())
        .with_context(|| format!("writing {}", out.display()))?;
    println!("wrote {}", out.display());
    println!("{:<12} {:<58} value", "key", "relation");
    for r in &cfg.relations {
        println!("{:<12} {:<58} {}", r.key, r.relation, r.value);
    }
    Ok(ExitCode::SUCCESS)
}

fn load_config(path: &Path) -> anyhow::Result<PlannerConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let mut cfg = PlannerConfig::from_config_text(&text)?;
    if let Some(seed) = env_seed() {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn cmd_verify(
    config: &Path,
    suite: &str,
    report_path: Option<&Path>,
    canonical: bool,
) -> anyhow::Result<ExitCode> {
    let cfg = load_config(config)?;
    let mut suites: Vec<SuiteReport> = Vec::new();
    let mut timings: BTreeMap<String, u64> = BTreeMap::new();
    let mut run = |name: &str, f: &dyn Fn() -> nmext_core::Result<SuiteReport>| {
        let t0 = Instant::now();
        let r = f();
        if let Ok(ref s) = r {
            timings.insert(name.to_string(), t0.elapsed().as_millis() as u64);
            println!(
                "suite {:<12} {} ({} measurements)",
                s.name,
                if s.pass { "PASS" } else { "FAIL" },
                s.measurements.len()
            );
            for m in s.measurements.iter().filter(|m| !m.passed()) {
                println!("  FAIL {} = {} (budget {:?})", m.name, m.value, m.budget);
            }
        }
        r
    };
    match suite {
        "lemmas" => suites.push(run("lemmas", &|| suite_lemmas(cfg.seed))?),
        "components" => suites.push(run("components", &|| suite_components(&cfg))?),
        "pipelines" => suites.push(run("pipelines", &|| pipeline_suite(&cfg))?),
        "all" => {
            suites.push(run("lemmas", &|| suite_lemmas(cfg.seed))?);
            suites.push(run("components", &|| suite_components(&cfg))?);
            suites.push(run("pipelines", &|| pipeline_suite(&cfg))?);
        }
        other => bail!("unknown suite {other:?}; expected components|pipelines|lemmas|all"),
    }
    let pass = suites.iter().all(|s| s.pass);
    let mut report = RunReport::new(cfg.to_key_values(), suites);
    if !canonical {
        report = report.with_timings(timings);
    }
    if let Some(path) = report_path {
        std::fs::write(path, report.to_json()?)
            .with_context(|| format!("writing report {}", path.display()))?;
        println!("report written to {}", path.display());
    }
    Ok(if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

/// Parses an input file as binary text, hex text, or raw bytes, and
/// checks the exact bit width.
fn parse_input(path: &Path, n: u32) -> anyhow::Result<BitString> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(text) = std::str::from_utf8(&bytes) {
        let t = text.trim();
        if !t.is_empty() && t.chars().all(|c| c == '0' || c == '1') {
            if t.len() != n as usize {
                bail!(
                    "binary input {} has {} bits, expected n = {n}",
                    path.display(),
                    t.len()
                );
            }
            return Ok(BitString::parse_binary(t)?);
        }
        let h = t.strip_prefix("0x").unwrap_or(t);
        if !h.is_empty() && h.chars().all(|c| c.is_ascii_hexdigit()) {
            if h.len() != n.div_ceil(4) as usize {
                bail!(
                    "hex input {} has {} digits, expected {} for n = {n}",
                    path.display(),
                    h.len(),
                    n.div_ceil(4)
                );
            }
            let raw = u128::from_str_radix(h, 16).context("hex parse")?;
            if n < 128 && raw >> n != 0 {
                bail!("hex input {} has bits above n = {n}", path.display());
            }
            return Ok(BitString::from_raw(n, raw));
        }
    }
    // Raw bytes, little-endian bit order.
    if bytes.len() != n.div_ceil(8) as usize {
        bail!(
            "raw input {} has {} bytes, expected {} for n = {n}",
            path.display(),
            bytes.len(),
            n.div_ceil(8)
        );
    }
    let mut raw: u128 = 0;
    for (i, &b) in bytes.iter().enumerate() {
        raw |= (b as u128) << (8 * i);
    }
    if n < 128 && raw >> n != 0 {
        bail!("raw input {} has bits above n = {n}", path.display());
    }
    Ok(BitString::from_raw(n, raw))
}

fn cmd_run(
    config: &Path,
    x_path: &Path,
    y_path: Option<&Path>,
    trace_path: Option<&Path>,
    replay_path: Option<&Path>,
) -> anyhow::Result<ExitCode> {
    let cfg = load_config(config)?;
    let bound = resolve(&cfg)?;
    let x = parse_input(x_path, cfg.n)?;
    let (out, trace) = if cfg.profile.is_affine() {
        if y_path.is_some() {
            bail!("profile {} takes a single source; drop --y", cfg.profile);
        }
        bound.eval_affine(&x)?
    } else {
        let y_path = y_path.context("two-source profile needs --y")?;
        let y = parse_input(y_path, cfg.n)?;
        bound.eval_two(&x, &y)?
    };
    println!("output {out}");
    if let Some(path) = trace_path {
        std::fs::write(path, trace.to_text())
            .with_context(|| format!("writing trace {}", path.display()))?;
    }
    if let Some(path) = replay_path {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading trace {}", path.display()))?;
        let stored = PipelineTrace::from_text(&text)?;
        if stored == trace {
            println!("replay OK: trace reproduced bit-exactly");
        } else {
            println!("replay MISMATCH");
            return Ok(ExitCode::from(1));
        }
    }
    Ok(ExitCode::SUCCESS)
}
