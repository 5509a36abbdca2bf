//! Host-based routing standing in for CNAME delegation.
//!
//! `utiq.<domain>` is delegated to the central frontend only for enabled
//! publishers; the apex (and `www.`) host serves the publisher homepage.

use std::collections::HashMap;

use super::registry::PublisherRegistry;

/// CNAME target every publisher's `utiq.` subdomain points at.
pub const FRONTEND_HOST: &str = "frontend.prod.utiq-aws.net";
pub const UTIQ_PREFIX: &str = "utiq.";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Route {
    /// `utiq.<publisher>` delegated to the central frontend.
    Delegated { publisher: String },
    /// The frontend host itself.
    Frontend,
    Homepage { publisher: String },
}

#[derive(Debug, Clone, Default)]
pub struct RouteTable {
    routes: HashMap<String, Route>,
}

impl RouteTable {
    pub fn from_registry(registry: &PublisherRegistry) -> Self {
        let mut routes = HashMap::with_capacity(registry.len() * 3 + 1);
        routes.insert(FRONTEND_HOST.to_string(), Route::Frontend);
        for e in registry.iter() {
            let home = Route::Homepage {
                publisher: e.domain.clone(),
            };
            routes.insert(e.domain.clone(), home.clone());
            routes.insert(format!("www.{}", e.domain), home);
            if e.utiq_enabled {
                routes.insert(
                    format!("{UTIQ_PREFIX}{}", e.domain),
                    Route::Delegated {
                        publisher: e.domain.clone(),
                    },
                );
            }
        }
        RouteTable { routes }
    }

    /// Resolves a Host header value (an optional `:port` suffix is ignored).
    pub fn resolve(&self, host: &str) -> Option<&Route> {
        let name = strip_port(host).trim_end_matches('.').to_ascii_lowercase();
        self.routes.get(&name)
    }

    /// Publisher behind a delegated `utiq.` host.
    pub fn delegated_publisher(&self, host: &str) -> Option<&str> {
        match self.resolve(host)? {
            Route::Delegated { publisher } => Some(publisher),
            _ => None,
        }
    }
}

pub fn strip_port(host: &str) -> &str {
    match host.rsplit_once(':') {
        Some((name, port)) if port.bytes().all(|b| b.is_ascii_digit()) => name,
        _ => host,
    }
}
