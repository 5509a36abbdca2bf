//! Adoption scanner.
//!
//! For every ranked domain the scanner requests `utiq.<domain>/utiqLoader.js`
//! and `utiq.<domain>/op/idconnect/mno-precheck`. A domain is compliant only
//! when both are reachable and the precheck answers with one of its two
//! documented bodies.

pub mod checkpoint;
pub mod list;
pub mod probe;
pub mod signals;

use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use futures::stream::{self, Stream, StreamExt};
use serde::{Deserialize, Serialize};

use crate::services::{PRECHECK_NOT_FOUND, PRECHECK_OK};
use checkpoint::{Checkpoint, CheckpointError, CheckpointWriter};

pub use list::{load_domain_list, DomainRecord, ListError};
pub use probe::{OriginMap, ProbeConfig, ProbeResult, ProbeStatus, Prober};
pub use signals::{detect_prebid, detect_premature_loader, HomepageSignals, PrebidPatterns};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictReason {
    /// Both URLs reachable; the precheck reported an eligible vantage ISP.
    Compliant,
    /// Both URLs reachable; the precheck reported the vantage ISP as not participating.
    CompliantIneligibleVantage,
    LoaderUnavailable,
    PrecheckUnavailable,
    BadBody,
}

impl VerdictReason {
    pub fn is_compliant(self) -> bool {
        matches!(
            self,
            VerdictReason::Compliant | VerdictReason::CompliantIneligibleVantage
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Verdict {
    pub domain: String,
    pub compliant: bool,
    pub reason: VerdictReason,
}

pub fn classify(result: &ProbeResult) -> Verdict {
    let reason = if !result.loader_status.is_ok() {
        VerdictReason::LoaderUnavailable
    } else if !result.precheck_status.is_ok() {
        VerdictReason::PrecheckUnavailable
    } else {
        match result.precheck_body.as_deref().map(str::as_bytes) {
            Some(b) if b == PRECHECK_OK => VerdictReason::Compliant,
            Some(b) if b == PRECHECK_NOT_FOUND => VerdictReason::CompliantIneligibleVantage,
            _ => VerdictReason::BadBody,
        }
    };
    Verdict {
        domain: result.domain.clone(),
        compliant: reason.is_compliant(),
        reason,
    }
}

/// One output record per scanned domain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub rank: u32,
    pub domain: String,
    pub compliant: bool,
    pub reason: VerdictReason,
    pub probe: ProbeResult,
}

impl ScanRecord {
    pub fn verdict(&self) -> Verdict {
        Verdict {
            domain: self.domain.clone(),
            compliant: self.compliant,
            reason: self.reason,
        }
    }

    pub fn signals(&self) -> Option<HomepageSignals> {
        self.probe.homepage_signals
    }
}

#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub concurrency: usize,
    pub probe: ProbeConfig,
    pub checkpoint: Option<PathBuf>,
    /// Flush the checkpoint after this many appended records.
    pub checkpoint_every: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            concurrency: 32,
            probe: ProbeConfig::default(),
            checkpoint: None,
            checkpoint_every: 64,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScanError {
    #[error("invalid scan configuration: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

/// Scans `list`, yielding one record per domain in input order regardless
/// of completion order.
///
/// With a checkpoint path, previously recorded probes are reused and new
/// ones appended, so an interrupted scan resumes where it stopped. A
/// checkpoint write failure ends the stream with an error.
pub fn scan(
    list: Vec<DomainRecord>,
    config: ScanConfig,
) -> Result<impl Stream<Item = Result<ScanRecord, ScanError>>, ScanError> {
    if config.concurrency == 0 {
        return Err(ScanError::Config("concurrency must be at least 1"));
    }
    if config.probe.timeout.is_zero() {
        return Err(ScanError::Config("timeout must be positive"));
    }
    let (done, writer) = match &config.checkpoint {
        Some(path) => {
            let done = Checkpoint::load(path)?;
            let writer = CheckpointWriter::open(path, config.checkpoint_every)?;
            (done, Some(Arc::new(Mutex::new(writer))))
        }
        None => (Checkpoint::default(), None),
    };
    let done = Arc::new(done);
    let prober = Arc::new(Prober::new(config.probe.clone()));

    let stream = stream::iter(list)
        .map(move |rec| {
            let prober = Arc::clone(&prober);
            let done = Arc::clone(&done);
            let writer = writer.clone();
            async move {
                let probe = match done.get(&rec.domain) {
                    Some(p) => p.clone(),
                    None => {
                        let p = prober.probe_domain(&rec.domain).await;
                        if let Some(w) = &writer {
                            w.lock().unwrap().append(&p)?;
                        }
                        p
                    }
                };
                let v = classify(&probe);
                Ok(ScanRecord {
                    rank: rec.rank,
                    domain: rec.domain,
                    compliant: v.compliant,
                    reason: v.reason,
                    probe,
                })
            }
        })
        .buffered(config.concurrency);

    // stop at the first checkpoint failure
    Ok(stream.scan(false, |failed, item: Result<ScanRecord, ScanError>| {
        let out = if *failed {
            None
        } else {
            *failed = item.is_err();
            Some(item)
        };
        futures::future::ready(out)
    }))
}

/// Runs [`scan`] to completion.
pub async fn scan_all(
    list: Vec<DomainRecord>,
    config: ScanConfig,
) -> Result<Vec<ScanRecord>, ScanError> {
    let mut out = Vec::with_capacity(list.len());
    let mut stream = Box::pin(scan(list, config)?);
    while let Some(item) = stream.next().await {
        out.push(item?);
    }
    Ok(out)
}
