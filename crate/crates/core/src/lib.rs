//! A desk-scale model of ISP-level user identification.
//!
//! - [`tokens`]: consentpass and the martechpass / adtechpass derivations.
//! - [`consent`]: the grant / revoke / pause lifecycle.
//! - [`services`]: a simulated origin serving the loader, the eligibility
//!   precheck and token issuance behind `utiq.<domain>` delegation.
//! - [`client`]: a headless browser model that walks the consent flow.
//! - [`scanner`]: the two-URL adoption probe over a ranked domain list.
//! - [`report`]: per-country adoption tables.
//! - [`fixture`]: the bundled 9,316-domain measurement population.

pub mod client;
pub mod consent;
pub mod country;
pub mod eligibility;
pub mod fixture;
pub mod report;
pub mod scanner;
pub mod services;
pub mod time;
pub mod tokens;

pub use country::Country;
pub use time::{Span, Timestamp};
