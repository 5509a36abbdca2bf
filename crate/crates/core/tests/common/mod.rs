#![allow(dead_code)]

pub mod gates;
pub mod oracle;

use std::sync::Arc;

use utiq_lab::fixture::Population;
use utiq_lab::scanner::{self, DomainRecord, OriginMap, ProbeConfig, ScanConfig, ScanRecord};
use utiq_lab::services::http::{self, RunningOrigin};
use utiq_lab::services::SimServices;

pub async fn bundled_origin() -> (Arc<SimServices>, RunningOrigin) {
    let services = Arc::new(SimServices::bundled());
    let origin = http::spawn_local(Arc::clone(&services)).await.unwrap();
    (services, origin)
}

pub fn population_list() -> Vec<DomainRecord> {
    Population::bundled()
        .entries
        .iter()
        .map(|e| DomainRecord {
            rank: e.rank,
            domain: e.publisher.domain.clone(),
        })
        .collect()
}

pub fn scan_config(origin: &RunningOrigin, concurrency: usize) -> ScanConfig {
    ScanConfig {
        concurrency,
        probe: ProbeConfig {
            origin_map: OriginMap::all_to(origin.base_url()),
            homepage_signals: true,
            precheck_headers: vec![("x-sim-isp".into(), "Orange".into())],
            ..ProbeConfig::default()
        },
        ..ScanConfig::default()
    }
}

pub async fn scan_list(list: Vec<DomainRecord>, config: ScanConfig) -> Vec<ScanRecord> {
    scanner::scan_all(list, config).await.unwrap()
}

/// Verdict fields only, timing stripped.
pub fn verdict_view(records: &[ScanRecord]) -> Vec<(u32, String, bool, String)> {
    records
        .iter()
        .map(|r| {
            (
                r.rank,
                r.domain.clone(),
                r.compliant,
                format!("{:?}/{:?}", r.reason, r.signals()),
            )
        })
        .collect()
}
