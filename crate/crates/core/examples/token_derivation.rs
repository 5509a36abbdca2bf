//! Derives the token family for one connection and shows how it rotates.
//!
//! ```text
//! cargo run --example token_derivation
//! ```

use utiq_lab::eligibility::EligibilityTable;
use utiq_lab::tokens::{derive_consentpass, derive_token_pass, epoch_of, ConnectionIdentity};
use utiq_lab::{Span, Timestamp};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let genesis: Timestamp = "2023-08-01T00:00:00Z".parse()?;
    let eligibility = EligibilityTable::default();
    let key = [7u8; 32];
    let identity = ConnectionIdentity::new("Orange", "line-0001")?;

    let now: Timestamp = "2024-03-15T12:00:00Z".parse()?;
    for at in [now, now + Span::days(90)] {
        let epoch = epoch_of(at, genesis)?;
        let cp = derive_consentpass(&identity, &eligibility, &key, epoch)?;
        println!("{at}  epoch {}", epoch.0);
        println!("  consentpass  {}", cp.value);
        for publisher in ["lefigaro.fr", "bild.de"] {
            let pass = derive_token_pass(&cp, publisher)?;
            println!("  {publisher:<12} mtid {}", pass.martechpass);
            println!("  {:<12} atid {}", "", pass.adtechpass);
        }
    }

    let comcast = ConnectionIdentity::new("ComcastUS", "line-0001")?;
    let err = derive_consentpass(&comcast, &eligibility, &key, epoch_of(now, genesis)?)
        .unwrap_err();
    println!("ComcastUS: {err}");
    Ok(())
}
