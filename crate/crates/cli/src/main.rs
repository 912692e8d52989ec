//! `zkmcp` — key setup, the audit service, scripted agents, benchmarks, and
//! fixture regeneration.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;
use zkmcp_bench::{
    bench_circuit, emit_report, paired_overhead, BenchConfig, LatencyProfile, ReportFormat,
    SimulateConfig,
};
use zkmcp_core::params::{CircuitParams, TypeTable};
use zkmcp_core::proof::{load_crs, save_crs, setup, BackendKind, Prover};
use zkmcp_protocol::server::default_data_dir;
use zkmcp_protocol::{Agent, AgentConfig, Direction};

#[derive(Parser)]
#[command(name = "zkmcp", version, about = "Privacy-preserving session audits over typed agent messages")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the trusted setup for one circuit size and write the key bundle.
    Setup(SetupArgs),
    /// Audit service commands.
    #[command(subcommand)]
    Asp(AspCommand),
    /// Agent commands.
    #[command(subcommand)]
    Agent(AgentCommand),
    /// Measure setup/prove/verify across circuit sizes.
    Bench(BenchArgs),
    /// Run scripted agent sessions with injected latency and compare
    /// auditing on/off.
    Simulate(SimulateArgs),
    /// Fixture maintenance.
    #[command(subcommand)]
    Fixtures(FixturesCommand),
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    /// Pairing-based SNARK with trusted setup.
    Real,
    /// Development-only relation oracle; offers no soundness.
    Oracle,
}

impl From<Backend> for BackendKind {
    fn from(b: Backend) -> Self {
        match b {
            Backend::Real => BackendKind::Groth16,
            Backend::Oracle => BackendKind::InsecureOracle,
        }
    }
}

#[derive(Args)]
struct SetupArgs {
    /// Messages per session (circuit size).
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, value_enum, default_value_t = Backend::Real)]
    backend: Backend,
    /// Directory to create the key bundle under.
    #[arg(long)]
    out: PathBuf,
    /// Type table config (JSON {"types": [...]}); default table if omitted.
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Subcommand)]
enum AspCommand {
    /// Serve the audit service until interrupted.
    Serve(AspServeArgs),
}

#[derive(Args)]
struct AspServeArgs {
    #[arg(long, default_value = "127.0.0.1:7878")]
    listen: String,
    /// Key bundle directory (or its parent holding exactly one bundle).
    #[arg(long)]
    crs: PathBuf,
    /// Storage root; defaults to $ZKMCP_DATA_DIR or ./zkmcp-data.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Accept key bundles built with the insecure oracle backend.
    #[arg(long)]
    insecure: bool,
}

#[derive(Subcommand)]
enum AgentCommand {
    /// Run one scripted session from a messages file and submit its audit.
    Run(AgentRunArgs),
}

#[derive(Args)]
struct AgentRunArgs {
    /// Peer agent address or identifier (the audited channel is simulated).
    #[arg(long)]
    peer: String,
    /// Audit service address.
    #[arg(long)]
    asp: String,
    #[arg(long)]
    crs: PathBuf,
    /// JSON message script: [{"type": "request", "direction": "sent"}, ...].
    #[arg(long)]
    messages: PathBuf,
    #[arg(long, default_value = "agent-cli")]
    agent_id: String,
    #[arg(long)]
    table: Option<PathBuf>,
    /// Fail instead of padding short sessions with filler messages.
    #[arg(long)]
    no_filler: bool,
    /// Inter-message delay in milliseconds.
    #[arg(long, default_value_t = 0)]
    delay_ms: u64,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated circuit sizes, e.g. 1,2,4,8,16,32,64,128.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32,64,128")]
    n: Vec<usize>,
    #[arg(long, value_enum, default_value_t = Backend::Real)]
    backend: Backend,
    /// CSV output path.
    #[arg(long, default_value = "report.csv")]
    out: PathBuf,
    /// Optional JSON output path.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Skip circuit sizes above this constraint budget.
    #[arg(long, default_value_t = 2_000_000)]
    max_constraints: usize,
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 4)]
    sessions: usize,
    /// Scripted messages per session.
    #[arg(long, default_value_t = 8)]
    messages: usize,
    /// Fixed per-message latency in milliseconds (ignored with --profile).
    #[arg(long, default_value_t = 200)]
    latency_ms: u64,
    /// Named latency profile: deepseek-v3-like, gpt-4.1-mini-like,
    /// gpt-3.5-turbo-like.
    #[arg(long)]
    profile: Option<String>,
    /// "on" runs the paired baseline+audited comparison; "off" measures the
    /// baseline only.
    #[arg(long, default_value = "on")]
    audit: String,
    /// JSON output path for the overhead report.
    #[arg(long, default_value = "overhead.json")]
    out: PathBuf,
    /// Also write the report as CSV here.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Use an already-running audit service instead of an in-process one.
    #[arg(long)]
    asp: Option<String>,
    /// Key bundle to use; a fresh oracle bundle for the session size is
    /// created when omitted.
    #[arg(long)]
    crs: Option<PathBuf>,
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Subcommand)]
enum FixturesCommand {
    /// Recompute the digest test vectors for the default type table.
    Regen(FixturesRegenArgs),
}

#[derive(Args)]
struct FixturesRegenArgs {
    #[arg(long, default_value = "crates/core/tests/fixtures/digests.json")]
    out: PathBuf,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Setup(args) => run_setup(args),
        Command::Asp(AspCommand::Serve(args)) => run_asp_serve(args),
        Command::Agent(AgentCommand::Run(args)) => run_agent(args),
        Command::Bench(args) => run_bench(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Fixtures(FixturesCommand::Regen(args)) => run_fixtures_regen(args),
    }
}

fn load_table(path: &Option<PathBuf>) -> Result<TypeTable> {
    match path {
        Some(path) => TypeTable::from_config_path(path)
            .with_context(|| format!("loading type table from {}", path.display())),
        None => Ok(TypeTable::default_table()),
    }
}

fn run_setup(args: SetupArgs) -> Result<()> {
    let table = load_table(&args.table)?;
    let params = CircuitParams::new(args.n)?;
    let mut rng = rand::thread_rng();
    let crs = setup(params, &table, args.backend.into(), &mut rng)?;
    let dir = save_crs(&crs, &args.out)?;
    println!(
        "wrote {} key bundle for n={} ({} constraints) to {}",
        crs.backend_id,
        args.n,
        crs.circuit_meta.constraint_count,
        dir.display()
    );
    Ok(())
}

fn run_asp_serve(args: AspServeArgs) -> Result<()> {
    let data_dir = args.data.unwrap_or_else(default_data_dir);
    let (asp, server) =
        zkmcp_protocol::serve_asp(&args.listen, &args.crs, &data_dir, args.insecure)?;
    println!(
        "audit service on {} (backend {}, data {})",
        server.addr(),
        asp.backend_id(),
        data_dir.display()
    );
    loop {
        std::thread::sleep(Duration::from_secs(3600));
    }
}

/// One entry of an agent message script.
#[derive(Deserialize)]
struct ScriptedMessage {
    r#type: String,
    #[serde(default)]
    direction: Option<Direction>,
}

fn run_agent(args: AgentRunArgs) -> Result<()> {
    let table = load_table(&args.table)?;
    let crs = load_crs(&args.crs)?;
    let prover = Arc::new(Prover::new(crs, &table)?);
    let cfg = AgentConfig::new(&args.agent_id, &args.asp, table);
    let agent = Arc::new(Agent::new(cfg, prover)?);

    let text = std::fs::read_to_string(&args.messages)
        .with_context(|| format!("reading message script {}", args.messages.display()))?;
    let script: Vec<ScriptedMessage> =
        serde_json::from_str(&text).context("message script must be a JSON array")?;

    let s_id = agent.start_session(&args.peer);
    println!("session {s_id}: recording {} messages", script.len());
    for (k, msg) in script.iter().enumerate() {
        if args.delay_ms > 0 {
            std::thread::sleep(Duration::from_millis(args.delay_ms));
        }
        let direction = msg.direction.unwrap_or(if k % 2 == 0 {
            Direction::Sent
        } else {
            Direction::Received
        });
        agent.record_type(&s_id, &msg.r#type, direction)?;
    }
    let receipt = if args.no_filler {
        agent.generate_audit(&s_id)?
    } else {
        agent.audit_with_filler(&s_id)?
    };
    println!(
        "proved session {s_id}: counts {:?}, filler {}",
        receipt.bundle.statement.counts, receipt.filler_count
    );
    match agent.wait_for_audit(&s_id, Duration::from_secs(30)) {
        Some((status, reason)) => {
            println!("audit result: {status:?}{}", reason.map(|r| format!(" ({r})")).unwrap_or_default());
        }
        None => bail!("no audit result within 30 s"),
    }
    agent.wait_idle(Duration::from_secs(30));
    let dead = agent.dead_letters();
    if !dead.is_empty() {
        bail!("undeliverable events: {dead:?}");
    }
    Ok(())
}

fn run_bench(args: BenchArgs) -> Result<()> {
    let mut cfg = BenchConfig::new(args.n.clone(), args.backend.into());
    cfg.table = load_table(&args.table)?;
    cfg.max_constraints = args.max_constraints;
    let report = bench_circuit(&cfg)?;
    emit_report(&report, ReportFormat::Csv, &args.out)?;
    println!("wrote {}", args.out.display());
    if let Some(json) = &args.json {
        emit_report(&report, ReportFormat::Json, json)?;
        println!("wrote {}", json.display());
    }
    for row in &report.rows {
        println!(
            "n={:>4}  constraints={:>8}  setup={:>9.1}ms  prove={:>9.1}ms  verify={:>7.2}ms",
            row.n, row.constraints, row.setup_ms, row.prove_ms, row.verify_ms
        );
    }
    for skip in &report.skipped {
        println!("n={:>4}  skipped: {}", skip.n, skip.reason);
    }
    Ok(())
}

fn run_simulate(args: SimulateArgs) -> Result<()> {
    let table = load_table(&args.table)?;
    let latency = match &args.profile {
        Some(name) => LatencyProfile::by_name(name)
            .with_context(|| format!("unknown latency profile {name:?}"))?,
        None => LatencyProfile::fixed_ms(args.latency_ms),
    };
    let audit = match args.audit.as_str() {
        "on" => true,
        "off" => false,
        other => bail!("--audit must be on or off, got {other:?}"),
    };
    let crs = match &args.crs {
        Some(path) => load_crs(path)?,
        None => {
            let params = CircuitParams::new(args.messages.max(1))?;
            setup(params, &table, BackendKind::InsecureOracle, &mut rand::thread_rng())?
        }
    };
    let mut cfg = SimulateConfig::new(args.sessions, args.messages, latency, audit);
    if let Some(addr) = &args.asp {
        cfg.asp = zkmcp_bench::AspTarget::External(addr.clone());
    }

    if audit {
        let (report, baseline, audited) = paired_overhead(&cfg, &crs, &table)?;
        let row = &report.rows[0];
        println!(
            "profile {}: comm {:.1} ms -> {:.1} ms (overhead {:.3}%), prove {:.1} ms, verify {:.2} ms",
            row.model_profile,
            row.comm_ms_baseline,
            row.comm_ms_with_audit,
            row.overhead_pct,
            row.prove_ms,
            row.verify_ms
        );
        println!(
            "verify/total {:.3}%, (prove+verify)/comm {:.3}%",
            row.verify_pct_of_total, row.audit_pct_of_comm
        );
        let verified = audited.sessions.iter().filter(|s| s.verified == Some(true)).count();
        println!(
            "sessions: {} baseline, {} audited ({verified} verified)",
            baseline.sessions.len(),
            audited.sessions.len()
        );
        emit_report(&report, ReportFormat::Json, &args.out)?;
        if let Some(csv) = &args.csv {
            emit_report(&report, ReportFormat::Csv, csv)?;
        }
    } else {
        let run = zkmcp_bench::simulate_sessions(&cfg, &crs, &table)?;
        let comm = run.mean_comm_ms();
        println!("profile {}: baseline comm {:.1} ms over {} sessions", run.profile, comm, run.sessions.len());
        let report = zkmcp_bench::OverheadReport {
            rows: vec![zkmcp_bench::OverheadRow {
                model_profile: run.profile.clone(),
                n: run.n,
                comm_ms_baseline: comm,
                comm_ms_with_audit: comm,
                prove_ms: 0.0,
                verify_ms: 0.0,
                overhead_pct: 0.0,
                verify_pct_of_total: 0.0,
                audit_pct_of_comm: 0.0,
            }],
        };
        emit_report(&report, ReportFormat::Json, &args.out)?;
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn run_fixtures_regen(args: FixturesRegenArgs) -> Result<()> {
    let table = TypeTable::default_table();
    let fixtures = zkmcp_core::hashing::digest_fixtures(&table);
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(&args.out, format!("{}\n", serde_json::to_string_pretty(&fixtures)?))?;
    println!("wrote {} digest fixtures to {}", fixtures.len(), args.out.display());
    Ok(())
}
