//! Runs the page flow against an in-process origin and prints each step.
//!
//! ```text
//! cargo run --example headless_flow -- bild.de Vodafone
//! ```

use std::sync::Arc;

use utiq_lab::client::{BrowserState, HeadlessClient, Visit};
use utiq_lab::services::{http, ConsentDecision, SimServices};
use utiq_lab::{Span, Timestamp};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let publisher = args.next().unwrap_or_else(|| "bild.de".into());
    let isp = args.next().unwrap_or_else(|| "Vodafone".into());

    let origin = http::spawn_local(Arc::new(SimServices::bundled())).await?;
    let client = HeadlessClient::new(origin.base_url());
    let t0: Timestamp = "2024-05-02T10:00:00Z".parse()?;
    let mut state = BrowserState::new("line-0001", t0);

    let first = client
        .run_flow(
            &mut state,
            &Visit {
                publisher: publisher.clone(),
                isp: isp.clone(),
                site_consent: true,
                decision: ConsentDecision::Accept,
            },
        )
        .await;
    for step in &first.steps {
        println!("{}", serde_json::to_string(step)?);
    }
    println!("utiqPass: {:?}", state.utiq_pass(&publisher));

    for days in [10, 91] {
        let out = client
            .replay_visit(&mut state, &publisher, &isp, t0 + Span::days(days), ConsentDecision::Accept)
            .await;
        println!(
            "day {days}: consent manager shown={} pass={} halt={:?}",
            out.consent_manager_shown(),
            out.utiq_pass_present,
            out.halt_reason
        );
    }
    origin.shutdown().await?;
    Ok(())
}
