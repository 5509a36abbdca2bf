use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::time::{Span, Timestamp};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredCookie {
    pub domain: String,
    pub name: String,
    pub value: String,
    pub expires: Timestamp,
}

/// What a `Set-Cookie` header did to the jar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum JarChange {
    Set {
        name: String,
        value: String,
        expires: Timestamp,
    },
    Cleared {
        name: String,
    },
}

/// Cookie jar on a simulated clock. Expired cookies are invisible to reads.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CookieJar {
    cookies: Vec<StoredCookie>,
}

fn domain_matches(host: &str, domain: &str) -> bool {
    host == domain
        || host
            .strip_suffix(domain)
            .is_some_and(|prefix| prefix.ends_with('.'))
}

impl CookieJar {
    pub fn get(&self, host: &str, name: &str, now: Timestamp) -> Option<&str> {
        self.cookies
            .iter()
            .find(|c| c.name == name && now < c.expires && domain_matches(host, &c.domain))
            .map(|c| c.value.as_str())
    }

    /// `Cookie` request header for `host`, if any cookie applies.
    pub fn header_for(&self, host: &str, now: Timestamp) -> Option<String> {
        let pairs: Vec<String> = self
            .cookies
            .iter()
            .filter(|c| now < c.expires && domain_matches(host, &c.domain))
            .map(|c| format!("{}={}", c.name, c.value))
            .collect();
        (!pairs.is_empty()).then(|| pairs.join("; "))
    }

    /// Applies one `Set-Cookie` header received from `host`.
    ///
    /// Session cookies (no `Max-Age`) are kept for a day of simulated time.
    pub fn apply_set_cookie(&mut self, host: &str, header: &str, now: Timestamp) -> Option<JarChange> {
        let parsed = cookie::Cookie::parse(header.to_string()).ok()?;
        let domain = parsed
            .domain()
            .map(|d| d.trim_start_matches('.').to_ascii_lowercase())
            .filter(|d| domain_matches(host, d))
            .unwrap_or_else(|| host.to_string());
        let name = parsed.name().to_string();
        self.cookies
            .retain(|c| !(c.name == name && c.domain == domain));
        let max_age = parsed.max_age().map(|d| d.whole_seconds()).unwrap_or(86_400);
        if max_age <= 0 {
            return Some(JarChange::Cleared { name });
        }
        let expires = now + Span::seconds(max_age);
        self.cookies.push(StoredCookie {
            domain,
            name: name.clone(),
            value: parsed.value().to_string(),
            expires,
        });
        Some(JarChange::Set {
            name,
            value: parsed.value().to_string(),
            expires,
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = &StoredCookie> {
        self.cookies.iter()
    }

    /// Cookies still live at `now`, keyed by (domain, name).
    pub fn live(&self, now: Timestamp) -> BTreeMap<(String, String), String> {
        self.cookies
            .iter()
            .filter(|c| now < c.expires)
            .map(|c| ((c.domain.clone(), c.name.clone()), c.value.clone()))
            .collect()
    }
}

/// Per-origin key/value documents, modelling `window.localStorage`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalStorage {
    origins: BTreeMap<String, BTreeMap<String, serde_json::Value>>,
}

impl LocalStorage {
    pub fn get(&self, origin: &str, key: &str) -> Option<&serde_json::Value> {
        self.origins.get(origin)?.get(key)
    }

    pub fn set(&mut self, origin: &str, key: &str, value: serde_json::Value) {
        self.origins
            .entry(origin.to_string())
            .or_default()
            .insert(key.to_string(), value);
    }

    pub fn remove(&mut self, origin: &str, key: &str) -> Option<serde_json::Value> {
        self.origins.get_mut(origin)?.remove(key)
    }
}
