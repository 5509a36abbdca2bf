//! Starts the simulated origin on an ephemeral port and pokes a few routes.
//!
//! ```text
//! cargo run --example sim_origin
//! ```

use std::sync::Arc;

use utiq_lab::services::{http, SimServices};

async fn get(client: &reqwest::Client, base: &str, host: &str, path: &str, isp: &str) -> String {
    let resp = client
        .get(format!("{base}{path}"))
        .header("host", host)
        .header("x-sim-isp", isp)
        .send()
        .await
        .expect("origin reachable");
    let status = resp.status();
    let body = resp.text().await.unwrap_or_default();
    let preview: String = body.lines().next().unwrap_or("").chars().take(60).collect();
    format!("{status} {preview}")
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    let services = Arc::new(SimServices::bundled());
    let origin = http::spawn_local(services).await?;
    let base = origin.base_url();
    println!("origin at {base}");

    let client = reqwest::Client::new();
    for (host, path, isp) in [
        ("utiq.lefigaro.fr", "/op/idconnect/mno-precheck", "Orange"),
        ("utiq.lefigaro.fr", "/op/idconnect/mno-precheck", "ComcastUS"),
        ("utiq.example.fr", "/op/idconnect/mno-precheck", "Orange"),
        ("utiq.bild.de", "/utiqLoader.js", "Vodafone"),
        ("www.actu.fr", "/", "Orange"),
    ] {
        println!("{host}{path} [{isp}] -> {}", get(&client, &base, host, path, isp).await);
    }
    origin.shutdown().await
}
