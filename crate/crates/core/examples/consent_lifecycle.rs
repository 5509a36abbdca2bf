//! Walks one user through grant, expiry, revocation and a pause.
//!
//! ```text
//! cargo run --example consent_lifecycle
//! ```

use utiq_lab::consent::ConsentEngine;
use utiq_lab::{Span, Timestamp};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let engine = ConsentEngine::new();
    let user = "Orange:line-0001";
    let t0: Timestamp = "2024-04-01T09:00:00Z".parse()?;

    engine.grant(user, "lefigaro.fr", t0)?;
    engine.grant(user, "marmiton.org", t0)?;
    for days in [0, 89, 90] {
        let t = t0 + Span::days(days);
        println!("day {days:>3}: lefigaro.fr {:?}", engine.status(user, "lefigaro.fr", t));
    }

    engine.revoke(user, "marmiton.org")?;
    println!("after revoke: marmiton.org {:?}", engine.status(user, "marmiton.org", t0));

    let paused = t0 + Span::days(10);
    let pause = engine.pause_all(user, paused);
    println!("paused until {}", pause.until());
    match engine.grant(user, "bild.de", paused + Span::days(1)) {
        Ok(_) => println!("grant during pause accepted"),
        Err(e) => println!("grant during pause: {e}"),
    }
    let after = pause.until();
    engine.grant(user, "bild.de", after)?;
    println!("{after}: bild.de {:?}", engine.status(user, "bild.de", after));

    println!("{}", serde_json::to_string_pretty(&engine.snapshot())?);
    Ok(())
}
