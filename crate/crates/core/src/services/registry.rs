use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::country::Country;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublisherEntry {
    pub domain: String,
    /// Market the publisher serves; `None` for generic-suffix domains.
    #[serde(default)]
    pub country: Option<Country>,
    #[serde(default)]
    pub utiq_enabled: bool,
    #[serde(default)]
    pub prebid_enabled: bool,
    /// Homepage embeds the loader before any consent interaction.
    #[serde(default)]
    pub premature_loader: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("duplicate publisher domain {0:?}")]
    Duplicate(String),
    #[error("publisher domain {0:?} must be a non-empty lowercase host name")]
    InvalidDomain(String),
}

/// Publishers known to the simulated origin, keyed by domain.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PublisherRegistry {
    entries: BTreeMap<String, PublisherEntry>,
}

impl PublisherRegistry {
    pub fn new(entries: impl IntoIterator<Item = PublisherEntry>) -> Result<Self, RegistryError> {
        let mut map = BTreeMap::new();
        for e in entries {
            let valid = !e.domain.is_empty()
                && e.domain.contains('.')
                && e.domain
                    .bytes()
                    .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-' || b == b'.');
            if !valid {
                return Err(RegistryError::InvalidDomain(e.domain));
            }
            if map.contains_key(&e.domain) {
                return Err(RegistryError::Duplicate(e.domain));
            }
            map.insert(e.domain.clone(), e);
        }
        Ok(PublisherRegistry { entries: map })
    }

    pub fn get(&self, domain: &str) -> Option<&PublisherEntry> {
        self.entries.get(domain)
    }

    pub fn is_utiq_enabled(&self, domain: &str) -> bool {
        self.get(domain).is_some_and(|e| e.utiq_enabled)
    }

    pub fn iter(&self) -> impl Iterator<Item = &PublisherEntry> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
