use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use futures::StreamExt;
use tracing_subscriber::EnvFilter;

use utiq_lab::client::{BrowserState, HeadlessClient, Visit};
use utiq_lab::report::{self, CountryMap, ReportError, ReportFormat};
use utiq_lab::scanner::{self, OriginMap, ProbeConfig, ScanConfig};
use utiq_lab::services::{http, ConsentDecision, SimConfig, SimServices};
use utiq_lab::Timestamp;

#[derive(Parser)]
#[command(name = "utiq-lab", version, about = "Simulated network-identity origin, client and adoption scanner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the simulated origin until interrupted.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        port: Option<u16>,
    },
    /// Run one headless page visit and print its trace as JSON.
    Flow {
        #[arg(long)]
        publisher: String,
        #[arg(long)]
        isp: String,
        #[arg(long, value_enum, default_value = "accept")]
        consent: Decision,
        /// The visitor accepted the publisher's own consent banner.
        #[arg(long)]
        site_consent: bool,
        /// Visit time, unix seconds or RFC 3339 (default: now).
        #[arg(long)]
        at: Option<Timestamp>,
        #[arg(long, default_value = "line-0001")]
        line: String,
        /// Origin base URL; an in-process origin is started when omitted.
        #[arg(long)]
        origin: Option<String>,
        /// Origin configuration for the in-process origin.
        #[arg(long, conflicts_with = "origin")]
        config: Option<PathBuf>,
        /// Browser state file, read before and written after the visit.
        #[arg(long)]
        state: Option<PathBuf>,
    },
    /// Probe a ranked domain list and write one JSON record per domain.
    Scan {
        #[arg(long)]
        list: PathBuf,
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long, default_value_t = 32)]
        concurrency: usize,
        #[arg(long, default_value_t = 10_000)]
        timeout_ms: u64,
        #[arg(long)]
        origin_map: Option<PathBuf>,
        #[arg(long)]
        homepage_signals: bool,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Defaults to standard output.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Extra precheck header as `name:value`, e.g. `x-sim-isp:Orange`.
        #[arg(long = "precheck-header")]
        precheck_headers: Vec<String>,
    },
    /// Aggregate scan output into adoption tables.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        country_map: Option<PathBuf>,
        #[arg(long, default_value = "markdown")]
        format: String,
        /// List compliant domains by rank instead of the per-country table.
        #[arg(long)]
        appendix: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Decision {
    Accept,
    Decline,
}

impl From<Decision> for ConsentDecision {
    fn from(d: Decision) -> Self {
        match d {
            Decision::Accept => ConsentDecision::Accept,
            Decision::Decline => ConsentDecision::Decline,
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let rt = tokio::runtime::Runtime::new().expect("tokio runtime");
    match rt.block_on(run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if matches!(e.downcast_ref(), Some(ReportError::UsageError(_))) {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

async fn run(command: Command) -> Result<()> {
    match command {
        Command::Serve { config, port } => serve(config, port).await,
        Command::Flow {
            publisher,
            isp,
            consent,
            site_consent,
            at,
            line,
            origin,
            config,
            state,
        } => {
            let visit = Visit {
                publisher,
                isp,
                site_consent,
                decision: consent.into(),
            };
            flow(visit, at, line, origin, config, state).await
        }
        Command::Scan {
            list,
            limit,
            concurrency,
            timeout_ms,
            origin_map,
            homepage_signals,
            checkpoint,
            output,
            precheck_headers,
        } => {
            let mut probe = ProbeConfig {
                timeout: Duration::from_millis(timeout_ms),
                homepage_signals,
                ..ProbeConfig::default()
            };
            if let Some(path) = origin_map {
                probe.origin_map = OriginMap::load(&path)
                    .with_context(|| format!("origin map {}", path.display()))?;
            }
            for h in precheck_headers {
                let Some((k, v)) = h.split_once(':') else {
                    bail!("--precheck-header expects name:value, got {h:?}");
                };
                probe.precheck_headers.push((k.trim().into(), v.trim().into()));
            }
            let config = ScanConfig {
                concurrency,
                probe,
                checkpoint,
                ..ScanConfig::default()
            };
            scan(list, limit, config, output).await
        }
        Command::Report {
            input,
            country_map,
            format,
            appendix,
        } => {
            let format: ReportFormat = format.parse()?;
            let map = match country_map {
                Some(p) => CountryMap::load(&p)?,
                None => CountryMap::default(),
            };
            let records = report::read_scan_records(&input)?;
            let out = if appendix {
                report::render_appendix(&report::appendix(&records, &map), format)
            } else {
                let verdicts: Vec<_> = records.iter().map(|r| r.verdict()).collect();
                let rows = report::aggregate(&verdicts, &map);
                let share = report::prebid_share(&records);
                let mut out = report::render_table(&rows, format);
                if records.iter().any(|r| r.signals().is_some()) {
                    out.push('\n');
                    out.push_str(&report::render_share("Prebid.js", &share, format));
                }
                out
            };
            std::io::stdout().write_all(out.as_bytes())?;
            Ok(())
        }
    }
}

async fn serve(config: Option<PathBuf>, port: Option<u16>) -> Result<()> {
    let mut config = match config {
        Some(p) => SimConfig::load(&p)?,
        None => SimConfig::default(),
    };
    if let Some(port) = port {
        config.bind = SocketAddr::new(config.bind.ip(), port);
    }
    let addr = config.bind;
    let services = Arc::new(SimServices::from_config(config)?);
    let origin = http::spawn(services, addr)
        .await
        .with_context(|| format!("binding {addr}"))?;
    tracing::info!("listening on {}", origin.base_url());
    tokio::signal::ctrl_c().await?;
    tracing::info!("shutting down");
    origin.shutdown().await?;
    Ok(())
}

async fn flow(
    visit: Visit,
    at: Option<Timestamp>,
    line: String,
    origin: Option<String>,
    config: Option<PathBuf>,
    state_path: Option<PathBuf>,
) -> Result<()> {
    let now = at.unwrap_or_else(Timestamp::now);
    let mut state = match &state_path {
        Some(p) if p.exists() => {
            let s: BrowserState = serde_json::from_reader(BufReader::new(File::open(p)?))
                .with_context(|| format!("browser state {}", p.display()))?;
            BrowserState { clock: now, ..s }
        }
        _ => BrowserState::new(line, now),
    };

    let (outcome, local) = match origin {
        Some(base) => (HeadlessClient::new(base).run_flow(&mut state, &visit).await, None),
        None => {
            let services = match config {
                Some(p) => SimServices::from_config(SimConfig::load(&p)?)?,
                None => SimServices::bundled(),
            };
            let services = Arc::new(services);
            let running = http::spawn_local(Arc::clone(&services)).await?;
            let client = HeadlessClient::with_headers(
                running.base_url(),
                services.isp_header(),
                services.line_header(),
            );
            (client.run_flow(&mut state, &visit).await, Some(running))
        }
    };
    if let Some(running) = local {
        running.shutdown().await?;
    }

    let doc = serde_json::json!({
        "publisher": visit.publisher,
        "isp": visit.isp,
        "at": now,
        "outcome": outcome,
        "utiq_eligibility": state.eligibility(&visit.publisher),
        "utiq_pass": state.utiq_pass(&visit.publisher),
    });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    if let Some(p) = state_path {
        std::fs::write(&p, serde_json::to_vec_pretty(&state)?)
            .with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

async fn scan(
    list: PathBuf,
    limit: Option<usize>,
    config: ScanConfig,
    output: Option<PathBuf>,
) -> Result<()> {
    let file = File::open(&list).with_context(|| format!("domain list {}", list.display()))?;
    let domains = scanner::load_domain_list(BufReader::new(file), limit)?;
    tracing::info!(domains = domains.len(), concurrency = config.concurrency, "scanning");
    let mut out: Box<dyn Write> = match output {
        Some(p) => Box::new(BufWriter::new(
            File::create(&p).with_context(|| format!("output {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    };
    let mut stream = Box::pin(scanner::scan(domains, config)?);
    let (mut total, mut compliant) = (0usize, 0usize);
    while let Some(record) = stream.next().await {
        let record = record?;
        total += 1;
        compliant += usize::from(record.compliant);
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    tracing::info!(total, compliant, "scan finished");
    Ok(())
}
