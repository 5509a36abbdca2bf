use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The three launch markets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Country {
    France,
    Germany,
    Spain,
}

impl Country {
    pub const ALL: [Country; 3] = [Country::France, Country::Germany, Country::Spain];

    pub fn as_str(self) -> &'static str {
        match self {
            Country::France => "France",
            Country::Germany => "Germany",
            Country::Spain => "Spain",
        }
    }

    /// Country implied by the domain's public suffix, if any.
    pub fn from_tld(domain: &str) -> Option<Country> {
        let tld = domain.trim_end_matches('.').rsplit('.').next()?;
        match tld.to_ascii_lowercase().as_str() {
            "fr" => Some(Country::France),
            "de" => Some(Country::Germany),
            "es" | "cat" => Some(Country::Spain),
            _ => None,
        }
    }
}

impl fmt::Display for Country {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("unknown country {0:?}")]
pub struct UnknownCountry(pub String);

impl FromStr for Country {
    type Err = UnknownCountry;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "france" | "fr" => Ok(Country::France),
            "germany" | "de" => Ok(Country::Germany),
            "spain" | "es" => Ok(Country::Spain),
            _ => Err(UnknownCountry(s.to_string())),
        }
    }
}
