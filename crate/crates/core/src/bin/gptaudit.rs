//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime failure, 3 diff found
//! changes.

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use gptaudit::analysis::{export_report, ReportFormat};
use gptaudit::audit::{AuditPolicy, Auditor};
use gptaudit::driver::{NativeUiDriver, SimulatedDriver, NATIVE_UNSUPPORTED};
use gptaudit::fixture::{generate_corpus, serve, CorpusConfig};
use gptaudit::ingest::ingest_path;
use gptaudit::model::DEFAULT_STORE_BASE;
use gptaudit::pipeline::{crawl, policy_resolver, reaudit, CrawlOutcome, DriverKind, RunConfig};
use gptaudit::store::{diff_snapshots, load_snapshot, read_manifest, write_snapshot};

const EXIT_RUNTIME: u8 = 2;
const EXIT_CHANGES: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "gptaudit",
    version,
    about = "Crawl, audit and monitor GPT-store privacy disclosures"
)]
struct Cli {
    /// Store base URL; app pages live at {base}/g/g-{id}.
    #[arg(long, global = true, default_value = DEFAULT_STORE_BASE)]
    base_url: String,
    #[arg(long, global = true, default_value = "snapshots")]
    snapshot_root: PathBuf,
    /// Per-attempt budget for one policy link, redirects included.
    #[arg(long, global = true, default_value_t = 10.0)]
    timeout_secs: f64,
    #[arg(long, global = true, default_value_t = 10)]
    max_redirects: usize,
    /// Concurrent panel fetches and link audits.
    #[arg(long, global = true, default_value_t = 8)]
    parallelism: usize,
    /// Concurrent audits against one host.
    #[arg(long, global = true, default_value_t = 2)]
    per_host: usize,
    /// Corpus seed for serve-fixture.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Store requests per second (0 disables the limit).
    #[arg(long, global = true, default_value_t = gptaudit::driver::DEFAULT_RATE_LIMIT)]
    rate_limit: f64,
    /// Resolve policy hosts via the fixture store's host table.
    #[arg(long, global = true)]
    fixture_dns: bool,
    /// simulated | native-stub
    #[arg(long, global = true, default_value = "simulated")]
    driver: DriverKind,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a metadata JSON Lines file and count apps per class.
    Ingest { path: PathBuf },
    /// Fetch privacy panels, audit every policy link and write a snapshot.
    Crawl { apps: PathBuf },
    /// Re-audit the links of a stored snapshot into a new snapshot.
    Audit { snapshot_id: String },
    /// Export the report tables of a snapshot.
    Report {
        snapshot_id: String,
        #[arg(long, default_value = "csv")]
        format: ReportFormat,
        /// Output directory [default: reports/<snapshot_id>]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print change events between two snapshots.
    Diff { from: String, to: String },
    /// Serve a generated fixture corpus until interrupted.
    ServeFixture {
        /// CorpusConfig JSON; the replica corpus when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write the corpus metadata as JSON Lines here.
        #[arg(long)]
        apps_out: Option<PathBuf>,
    },
}

/// All stdout output goes through here, one JSON document per line.
fn emit<T: Serialize>(out: &mut impl Write, value: &T) -> Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    tracing_subscriber::fmt()
        .with_writer(io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .init();

    let config = match run_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: starting runtime: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    match runtime.block_on(run(cli, config)) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn run_config(cli: &Cli) -> Result<RunConfig, String> {
    let mut config = RunConfig::new(&cli.base_url, &cli.snapshot_root)?;
    if !(cli.timeout_secs > 0.0 && cli.timeout_secs.is_finite()) {
        return Err("--timeout-secs must be positive".into());
    }
    config.driver = cli.driver;
    config.parallelism = cli.parallelism;
    config.rate_limit = cli.rate_limit;
    config.fixture_dns = cli.fixture_dns;
    config.audit = AuditPolicy {
        timeout: Duration::from_secs_f64(cli.timeout_secs),
        max_redirects: cli.max_redirects,
        parallelism: cli.parallelism,
        per_host: cli.per_host,
        ..AuditPolicy::default()
    };
    config.validate()?;
    Ok(config)
}

async fn run(cli: Cli, config: RunConfig) -> Result<u8> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Ingest { path } => {
            let report =
                ingest_path(&path).with_context(|| format!("reading {}", path.display()))?;
            for err in &report.rejected {
                eprintln!("{}: {err}", path.display());
            }
            let classes: std::collections::BTreeMap<&str, usize> = report
                .class_counts()
                .into_iter()
                .map(|(c, n)| (c.as_str(), n))
                .collect();
            eprintln!("{}", report.summary());
            emit(
                &mut out,
                &serde_json::json!({
                    "ingested": report.apps.len(),
                    "rejected": report.rejected.len(),
                    "classes": classes,
                }),
            )?;
            Ok(0)
        }
        Command::Crawl { apps } => {
            let report =
                ingest_path(&apps).with_context(|| format!("reading {}", apps.display()))?;
            for err in &report.rejected {
                eprintln!("{}: {err}", apps.display());
            }
            let auditor = Auditor::new(
                config.audit.clone(),
                policy_resolver(&config).await.map_err(anyhow::Error::msg)?,
            )?;
            let outcome = match config.driver {
                DriverKind::Simulated => {
                    let driver = SimulatedDriver::new(config.base(), config.rate_limit)?;
                    crawl(report.apps, Arc::new(driver), &auditor, config.parallelism).await
                }
                DriverKind::NativeStub => {
                    if !report.apps.is_empty() {
                        bail!(NATIVE_UNSUPPORTED);
                    }
                    crawl(
                        report.apps,
                        Arc::new(NativeUiDriver),
                        &auditor,
                        config.parallelism,
                    )
                    .await
                }
            };
            finish_crawl(&mut out, &config.snapshot_root, &outcome)
        }
        Command::Audit { snapshot_id } => {
            let source = load_snapshot(&config.snapshot_root, &snapshot_id)?;
            let auditor = Auditor::new(
                config.audit.clone(),
                policy_resolver(&config).await.map_err(anyhow::Error::msg)?,
            )?;
            let snapshot = reaudit(&source, &auditor).await;
            for record in &snapshot.audits {
                emit(&mut out, record)?;
            }
            write_snapshot(&snapshot, &config.snapshot_root)?;
            emit(
                &mut out,
                &read_manifest(&config.snapshot_root, &snapshot.snapshot_id)?,
            )?;
            Ok(0)
        }
        Command::Report {
            snapshot_id,
            format,
            out: dir,
        } => {
            let snapshot = load_snapshot(&config.snapshot_root, &snapshot_id)?;
            let dir = dir.unwrap_or_else(|| Path::new("reports").join(&snapshot_id));
            for path in export_report(&snapshot, format, &dir)? {
                emit(&mut out, &serde_json::json!({ "written": path }))?;
            }
            Ok(0)
        }
        Command::Diff { from, to } => {
            let a = load_snapshot(&config.snapshot_root, &from)?;
            let b = load_snapshot(&config.snapshot_root, &to)?;
            let diff = diff_snapshots(&a, &b);
            for event in &diff.events {
                emit(&mut out, event)?;
            }
            Ok(if diff.is_empty() { 0 } else { EXIT_CHANGES })
        }
        Command::ServeFixture {
            config: path,
            apps_out,
        } => {
            let mut corpus_config = match path {
                Some(p) => {
                    let text = std::fs::read_to_string(&p)
                        .with_context(|| format!("reading {}", p.display()))?;
                    serde_json::from_str::<CorpusConfig>(&text)
                        .with_context(|| format!("parsing {}", p.display()))?
                }
                None => CorpusConfig::replica(cli.seed),
            };
            corpus_config.seed = cli.seed;
            let corpus = generate_corpus(&corpus_config)?;
            if let Some(p) = &apps_out {
                std::fs::write(p, corpus.metadata_jsonl())
                    .with_context(|| format!("writing {}", p.display()))?;
            }
            let handle = serve(&corpus).await?;
            emit(
                &mut out,
                &serde_json::json!({
                    "base_url": handle.base_url(),
                    "apps": corpus.apps.len(),
                    "entries": corpus.entry_count(),
                    "hosts": handle.hosts().len(),
                }),
            )?;
            drop(out);
            tokio::signal::ctrl_c().await?;
            Ok(0)
        }
    }
}

fn finish_crawl(out: &mut impl Write, root: &Path, outcome: &CrawlOutcome) -> Result<u8> {
    for (id, err) in &outcome.failures {
        eprintln!("app {id}: {err}");
    }
    write_snapshot(&outcome.snapshot, root)?;
    emit(out, &read_manifest(root, &outcome.snapshot.snapshot_id)?)?;
    Ok(if outcome.transport_failed() {
        EXIT_RUNTIME
    } else {
        0
    })
}
