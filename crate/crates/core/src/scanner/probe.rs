use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use reqwest::header::HOST;
use serde::{Deserialize, Serialize};

use super::signals::{homepage_signals, HomepageSignals, PrebidPatterns};

pub const LOADER_PATH: &str = "/utiqLoader.js";
pub const PRECHECK_PATH: &str = "/op/idconnect/mno-precheck";

/// Redirects logical hosts to concrete origins.
///
/// A host listed in `hosts` goes to its base URL; anything else goes to
/// `default` when set, and to `https://<host>` otherwise.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OriginMap {
    #[serde(default)]
    pub default: Option<String>,
    #[serde(default)]
    pub hosts: BTreeMap<String, String>,
}

impl OriginMap {
    /// Every host to one origin.
    pub fn all_to(base_url: impl Into<String>) -> Self {
        OriginMap {
            default: Some(base_url.into()),
            hosts: BTreeMap::new(),
        }
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(std::io::Error::other)
    }

    /// URL to request, and whether the `Host` header must be overridden.
    pub fn target(&self, host: &str, path: &str) -> (String, bool) {
        match self.hosts.get(host).or(self.default.as_ref()) {
            Some(base) => (format!("{}{}", base.trim_end_matches('/'), path), true),
            None => (format!("https://{host}{path}"), false),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub timeout: Duration,
    /// Extra attempts after a transport error.
    pub retries: u32,
    /// First backoff delay; doubled for each further retry.
    pub backoff: Duration,
    pub homepage_signals: bool,
    pub origin_map: OriginMap,
    /// Headers sent with the precheck, e.g. a simulated vantage ISP.
    pub precheck_headers: Vec<(String, String)>,
    pub prebid_patterns: PrebidPatterns,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            timeout: Duration::from_secs(10),
            retries: 2,
            backoff: Duration::from_millis(250),
            homepage_signals: false,
            origin_map: OriginMap::default(),
            precheck_headers: Vec::new(),
            prebid_patterns: PrebidPatterns::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbeStatus {
    Ok,
    HttpError { code: u16 },
    TransportError { message: String },
}

impl ProbeStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, ProbeStatus::Ok)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timing {
    pub loader_ms: u64,
    pub precheck_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub homepage_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub domain: String,
    pub loader_status: ProbeStatus,
    pub precheck_status: ProbeStatus,
    /// Present exactly when the precheck returned 2xx.
    pub precheck_body: Option<String>,
    /// Absent when homepage inspection was not requested.
    #[serde(default)]
    pub homepage_signals: Option<HomepageSignals>,
    #[serde(default)]
    pub homepage_status: Option<ProbeStatus>,
    pub timing: Timing,
}

/// Reusable probe with a pooled HTTP client.
#[derive(Debug, Clone)]
pub struct Prober {
    http: reqwest::Client,
    config: ProbeConfig,
}

struct Fetched {
    status: ProbeStatus,
    body: Option<Vec<u8>>,
    elapsed_ms: u64,
}

impl Prober {
    pub fn new(config: ProbeConfig) -> Self {
        let http = reqwest::Client::builder()
            .timeout(config.timeout)
            .redirect(reqwest::redirect::Policy::limited(5))
            .user_agent(concat!("utiq-lab-scanner/", env!("CARGO_PKG_VERSION")))
            .build()
            .expect("reqwest client");
        Prober { http, config }
    }

    pub fn config(&self) -> &ProbeConfig {
        &self.config
    }

    async fn fetch(&self, host: &str, path: &str, extra: &[(String, String)]) -> Fetched {
        let (url, override_host) = self.config.origin_map.target(host, path);
        let started = Instant::now();
        let mut attempt = 0;
        loop {
            let mut req = self.http.get(&url);
            if override_host {
                req = req.header(HOST, host);
            }
            for (k, v) in extra {
                req = req.header(k.as_str(), v.as_str());
            }
            let result = match req.send().await {
                Ok(resp) => {
                    let code = resp.status();
                    match resp.bytes().await {
                        Ok(body) if code.is_success() => Ok((ProbeStatus::Ok, Some(body.to_vec()))),
                        Ok(_) => Ok((ProbeStatus::HttpError { code: code.as_u16() }, None)),
                        Err(e) => Err(e),
                    }
                }
                Err(e) => Err(e),
            };
            match result {
                Ok((status, body)) => {
                    return Fetched {
                        status,
                        body,
                        elapsed_ms: started.elapsed().as_millis() as u64,
                    }
                }
                Err(e) if attempt >= self.config.retries => {
                    return Fetched {
                        status: ProbeStatus::TransportError {
                            message: transport_message(&e),
                        },
                        body: None,
                        elapsed_ms: started.elapsed().as_millis() as u64,
                    }
                }
                Err(_) => {
                    tokio::time::sleep(self.config.backoff * 2u32.pow(attempt)).await;
                    attempt += 1;
                }
            }
        }
    }

    /// Probes `utiq.<domain>` for the loader and the precheck, and optionally
    /// inspects the apex homepage. Failures are encoded in the result.
    pub async fn probe_domain(&self, domain: &str) -> ProbeResult {
        let utiq_host = format!("utiq.{domain}");
        let loader = self.fetch(&utiq_host, LOADER_PATH, &[]);
        let precheck = self.fetch(&utiq_host, PRECHECK_PATH, &self.config.precheck_headers);
        let homepage = async {
            if self.config.homepage_signals {
                Some(self.fetch(domain, "/", &[]).await)
            } else {
                None
            }
        };
        let (loader, precheck, homepage) = tokio::join!(loader, precheck, homepage);

        let (homepage_signals, homepage_status, homepage_ms) = match homepage {
            Some(h) => {
                let signals = h
                    .body
                    .as_deref()
                    .map(|b| homepage_signals(b, &self.config.prebid_patterns))
                    .unwrap_or_default();
                (Some(signals), Some(h.status), Some(h.elapsed_ms))
            }
            None => (None, None, None),
        };
        let precheck_body = if precheck.status.is_ok() {
            Some(String::from_utf8_lossy(precheck.body.as_deref().unwrap_or_default()).into_owned())
        } else {
            None
        };
        ProbeResult {
            domain: domain.to_string(),
            loader_status: loader.status,
            precheck_status: precheck.status,
            precheck_body,
            homepage_signals,
            homepage_status,
            timing: Timing {
                loader_ms: loader.elapsed_ms,
                precheck_ms: precheck.elapsed_ms,
                homepage_ms,
            },
        }
    }
}

fn transport_message(e: &reqwest::Error) -> String {
    if e.is_timeout() {
        "timeout".into()
    } else if e.is_connect() {
        "connect".into()
    } else {
        let mut msg = e.to_string();
        let mut source = std::error::Error::source(e);
        while let Some(s) = source {
            msg = format!("{msg}: {s}");
            source = s.source();
        }
        msg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_map_targets() {
        let mut m = OriginMap::all_to("http://127.0.0.1:9/");
        m.hosts
            .insert("utiq.actu.fr".into(), "http://127.0.0.1:10".into());
        assert_eq!(
            m.target("utiq.bild.de", LOADER_PATH),
            ("http://127.0.0.1:9/utiqLoader.js".into(), true)
        );
        assert_eq!(
            m.target("utiq.actu.fr", PRECHECK_PATH),
            ("http://127.0.0.1:10/op/idconnect/mno-precheck".into(), true)
        );
        assert_eq!(
            OriginMap::default().target("utiq.bild.de", LOADER_PATH),
            ("https://utiq.bild.de/utiqLoader.js".into(), false)
        );
    }

    #[test]
    fn origin_map_json() {
        let m: OriginMap =
            serde_json::from_str(r#"{"default":"http://x","hosts":{"a":"http://y"}}"#).unwrap();
        assert_eq!(m.hosts["a"], "http://y");
        assert!(serde_json::from_str::<OriginMap>(r#"{"nope":1}"#).is_err());
    }

    #[test]
    fn status_serialization() {
        let s = serde_json::to_string(&ProbeStatus::HttpError { code: 404 }).unwrap();
        assert_eq!(s, r#"{"kind":"http_error","code":404}"#);
    }
}
