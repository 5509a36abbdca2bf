//! Scans the first domains of the bundled population against a local origin.
//!
//! ```text
//! cargo run --example adoption_scan -- 2000
//! ```

use std::sync::Arc;

use futures::StreamExt;

use utiq_lab::fixture::Population;
use utiq_lab::scanner::{self, load_domain_list, OriginMap, ProbeConfig, ScanConfig};
use utiq_lab::services::{http, SimServices};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let limit = std::env::args().nth(1).map(|s| s.parse()).transpose()?;
    let population = Population::bundled();
    let list = load_domain_list(population.to_tranco_csv().as_bytes(), limit)?;

    let origin = http::spawn_local(Arc::new(SimServices::new(population.registry()))).await?;
    let config = ScanConfig {
        concurrency: 32,
        probe: ProbeConfig {
            homepage_signals: true,
            origin_map: OriginMap::all_to(origin.base_url()),
            precheck_headers: vec![("x-sim-isp".into(), "Orange".into())],
            ..ProbeConfig::default()
        },
        ..ScanConfig::default()
    };

    let total = list.len();
    let mut compliant = 0;
    let mut stream = Box::pin(scanner::scan(list, config)?);
    while let Some(record) = stream.next().await {
        let record = record?;
        if record.compliant {
            compliant += 1;
            let prebid = record.signals().is_some_and(|s| s.prebid);
            println!("{:>6} {:<24} {:?} prebid={prebid}", record.rank, record.domain, record.reason);
        }
    }
    println!("{compliant} of {total} compliant");
    origin.shutdown().await?;
    Ok(())
}
