//! Simulated Utiq origin: loader delivery behind `utiq.<domain>`
//! delegation, the eligibility precheck, consent capture, token issuance
//! and the Consenthub management surface.
//!
//! [`SimServices`] holds the transport-independent logic; [`http`] maps it
//! onto the wire.

pub mod http;
pub mod pages;
pub mod registry;
pub mod routing;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use hmac::{Hmac, Mac};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::Sha256;

use crate::consent::{ConsentEngine, ConsentError, ConsentSnapshot, ConsentStatus};
use crate::eligibility::{EligibilityRow, EligibilityTable};
use crate::fixture::Population;
use crate::time::Timestamp;
use crate::tokens::{self, ConnectionIdentity, Epoch, Token};

pub use registry::{PublisherEntry, PublisherRegistry, RegistryError};
pub use routing::{Route, RouteTable, FRONTEND_HOST};

pub const PRECHECK_OK: &[u8] = br#"{"status":"ok"}"#;
pub const PRECHECK_NOT_FOUND: &[u8] = br#"{"status":"Not found"}"#;

pub const CONSENT_COOKIE: &str = "utiq_consent_status";
pub const CONNECT_ID_COOKIE: &str = "connectId";
/// 90 days.
pub const COOKIE_MAX_AGE_SECS: i64 = 7_776_000;

pub const DEFAULT_ISP_HEADER: &str = "x-sim-isp";
pub const DEFAULT_LINE_HEADER: &str = "x-sim-line";
/// Simulated clock override carried by every request, in unix seconds or RFC 3339.
pub const NOW_HEADER: &str = "x-sim-now";

pub const CONSENT_GRANTED: &str = "granted";
pub const CONSENT_DENIED: &str = "denied";

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parsing {path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Consent(#[from] ConsentError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

fn default_bind() -> SocketAddr {
    "127.0.0.1:8080".parse().unwrap()
}
fn default_isp_header() -> String {
    DEFAULT_ISP_HEADER.into()
}
fn default_line_header() -> String {
    DEFAULT_LINE_HEADER.into()
}
fn default_genesis() -> Timestamp {
    "2023-08-01T00:00:00Z".parse().unwrap()
}
fn default_secret() -> String {
    "utiq-lab-simulation".into()
}

/// Startup configuration document (JSON).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default = "default_bind")]
    pub bind: SocketAddr,
    #[serde(default = "default_isp_header")]
    pub isp_header: String,
    #[serde(default = "default_line_header")]
    pub line_header: String,
    /// Start of epoch 0 for token rotation.
    #[serde(default = "default_genesis")]
    pub genesis: Timestamp,
    /// Master secret the per-ISP signing keys are derived from.
    #[serde(default = "default_secret")]
    pub signing_secret: String,
    /// Defaults to the eleven participating operator rows.
    #[serde(default)]
    pub eligibility: Option<Vec<EligibilityRow>>,
    /// Load the bundled 9,316-domain population into the registry.
    #[serde(default)]
    pub bundled_population: bool,
    #[serde(default)]
    pub publishers: Vec<PublisherEntry>,
    /// Consent snapshot loaded at startup and rewritten after every mutation.
    #[serde(default)]
    pub state_file: Option<PathBuf>,
    /// Replacement loader body; defaults to the built-in script.
    #[serde(default)]
    pub loader_file: Option<PathBuf>,
    /// Directory served under `/static/` on publisher homepages.
    #[serde(default)]
    pub assets_dir: Option<PathBuf>,
}

impl Default for SimConfig {
    fn default() -> Self {
        serde_json::from_str("{}").unwrap()
    }
}

impl SimConfig {
    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(path).map_err(|source| ServiceError::Io {
            path: path.into(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| ServiceError::Json {
            path: path.into(),
            source,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsentDecision {
    Accept,
    Decline,
}

/// The gate that stopped token issuance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gate {
    Consent,
    Eligibility,
    Pause,
    Revoked,
}

/// Body of a successful issuance, stored client-side as `utiqPass`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UtiqPassPayload {
    pub mtid: Token,
    pub atid: Token,
    pub expiry: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Refusal {
    pub refused: Gate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsentRequest {
    pub decision: ConsentDecision,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsentResponse {
    pub recorded: bool,
    pub status: ConsentStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub paused_until: Option<Timestamp>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenRequest {
    pub publisher: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevokeRequest {
    pub service_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceConsent {
    pub service_id: String,
    pub status: ConsentStatus,
    pub granted_at: Timestamp,
    pub expires_at: Timestamp,
}

/// Consenthub view of one subscriber.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsentListing {
    pub paused_until: Option<Timestamp>,
    pub consents: Vec<ServiceConsent>,
}

/// Everything the issuance endpoint needs, after the transport is peeled off.
#[derive(Debug, Clone)]
pub struct IssueRequest<'a> {
    pub host: &'a str,
    pub publisher: &'a str,
    pub identity: Option<ConnectionIdentity>,
    pub connect_id: Option<&'a str>,
    /// Value of the `utiq_consent_status` cookie, the client's consent proof.
    pub consent_cookie: Option<&'a str>,
    pub now: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issued {
    pub payload: UtiqPassPayload,
    /// Set when a fresh `connectId` handle was minted for this client.
    pub new_connect_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IssueError {
    #[error("no such route")]
    NotFound,
    #[error("malformed request: {0}")]
    Malformed(String),
    #[error("refused at the {0:?} gate")]
    Refused(Gate),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HubError {
    #[error("no such route")]
    NotFound,
    #[error(transparent)]
    Consent(#[from] ConsentError),
}

#[derive(Debug, Clone)]
struct ConnectState {
    identity: ConnectionIdentity,
    epoch: Epoch,
}

pub struct SimServices {
    registry: PublisherRegistry,
    eligibility: EligibilityTable,
    routes: RouteTable,
    isp_header: String,
    line_header: String,
    genesis: Timestamp,
    signing_secret: Vec<u8>,
    consent: ConsentEngine,
    connect_ids: Mutex<HashMap<String, ConnectState>>,
    loader: Vec<u8>,
    state_file: Option<PathBuf>,
    persist_lock: Mutex<()>,
    assets_dir: Option<PathBuf>,
    bind: SocketAddr,
}

impl std::fmt::Debug for SimServices {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SimServices")
            .field("publishers", &self.registry.len())
            .field("eligibility", &self.eligibility.len())
            .finish_non_exhaustive()
    }
}

impl SimServices {
    /// Services over the given registry with every other setting at its default.
    pub fn new(registry: PublisherRegistry) -> Self {
        Self::assemble(SimConfig::default(), registry, ConsentEngine::new(), None)
    }

    pub fn bundled() -> Self {
        Self::new(Population::bundled().registry())
    }

    pub fn from_config(config: SimConfig) -> Result<Self, ServiceError> {
        let mut entries = Vec::new();
        if config.bundled_population {
            entries.extend(Population::bundled().entries.into_iter().map(|e| e.publisher));
        }
        entries.extend(config.publishers.iter().cloned());
        let registry = PublisherRegistry::new(entries)?;

        let consent = match &config.state_file {
            Some(path) if path.exists() => {
                let text = std::fs::read_to_string(path).map_err(|source| ServiceError::Io {
                    path: path.clone(),
                    source,
                })?;
                let snap: ConsentSnapshot =
                    serde_json::from_str(&text).map_err(|source| ServiceError::Json {
                        path: path.clone(),
                        source,
                    })?;
                ConsentEngine::from_snapshot(snap)?
            }
            _ => ConsentEngine::new(),
        };
        let loader = match &config.loader_file {
            Some(path) => Some(std::fs::read(path).map_err(|source| ServiceError::Io {
                path: path.clone(),
                source,
            })?),
            None => None,
        };
        if config.signing_secret.is_empty() {
            return Err(ServiceError::Config("signing_secret must not be empty".into()));
        }
        Ok(Self::assemble(config, registry, consent, loader))
    }

    fn assemble(
        config: SimConfig,
        registry: PublisherRegistry,
        consent: ConsentEngine,
        loader: Option<Vec<u8>>,
    ) -> Self {
        let eligibility = match config.eligibility {
            Some(rows) => EligibilityTable::from_rows(rows),
            None => EligibilityTable::default(),
        };
        SimServices {
            routes: RouteTable::from_registry(&registry),
            registry,
            eligibility,
            isp_header: config.isp_header.to_ascii_lowercase(),
            line_header: config.line_header.to_ascii_lowercase(),
            genesis: config.genesis,
            signing_secret: config.signing_secret.into_bytes(),
            consent,
            connect_ids: Mutex::new(HashMap::new()),
            loader: loader.unwrap_or_else(|| pages::LOADER_SCRIPT.to_vec()),
            state_file: config.state_file,
            persist_lock: Mutex::new(()),
            assets_dir: config.assets_dir,
            bind: config.bind,
        }
    }

    pub fn registry(&self) -> &PublisherRegistry {
        &self.registry
    }

    pub fn eligibility(&self) -> &EligibilityTable {
        &self.eligibility
    }

    pub fn routes(&self) -> &RouteTable {
        &self.routes
    }

    pub fn consent(&self) -> &ConsentEngine {
        &self.consent
    }

    pub fn isp_header(&self) -> &str {
        &self.isp_header
    }

    pub fn line_header(&self) -> &str {
        &self.line_header
    }

    pub fn genesis(&self) -> Timestamp {
        self.genesis
    }

    pub fn bind_addr(&self) -> SocketAddr {
        self.bind
    }

    pub fn assets_dir(&self) -> Option<&Path> {
        self.assets_dir.as_deref()
    }

    /// Per-ISP signing key, derived from the master secret.
    pub fn isp_key(&self, isp_id: &str) -> [u8; 32] {
        let mut mac = Hmac::<Sha256>::new_from_slice(&self.signing_secret)
            .expect("HMAC can take key of any size");
        mac.update(b"isp-signing-key\0");
        mac.update(isp_id.as_bytes());
        mac.finalize().into_bytes().into()
    }

    pub fn serve_loader(&self, host: &str) -> Option<&[u8]> {
        match self.routes.resolve(host)? {
            Route::Delegated { .. } | Route::Frontend => Some(&self.loader),
            Route::Homepage { .. } => None,
        }
    }

    /// Precheck body for a visitor attributed to `source_isp`.
    pub fn mno_precheck(&self, host: &str, source_isp: Option<&str>) -> Option<&'static [u8]> {
        self.routes.delegated_publisher(host)?;
        match source_isp {
            Some(isp) if self.eligibility.is_eligible(isp) => Some(PRECHECK_OK),
            _ => Some(PRECHECK_NOT_FOUND),
        }
    }

    pub fn homepage(&self, host: &str) -> Option<String> {
        match self.routes.resolve(host)? {
            Route::Homepage { publisher } => self.registry.get(publisher).map(pages::homepage),
            _ => None,
        }
    }

    /// Records the consent manager decision.
    ///
    /// Grants attempted during an active pause are not recorded.
    pub fn record_consent(
        &self,
        host: &str,
        identity: &ConnectionIdentity,
        decision: ConsentDecision,
        now: Timestamp,
    ) -> Option<ConsentResponse> {
        let publisher = self.routes.delegated_publisher(host)?;
        let user = identity.user_key();
        let response = match decision {
            ConsentDecision::Accept => match self.consent.grant(&user, publisher, now) {
                Ok(_) => {
                    self.persist();
                    ConsentResponse {
                        recorded: true,
                        status: ConsentStatus::Granted,
                        paused_until: None,
                    }
                }
                Err(ConsentError::Paused { until, .. }) => ConsentResponse {
                    recorded: false,
                    status: ConsentStatus::Paused,
                    paused_until: Some(until),
                },
                Err(e) => unreachable!("grant only fails on pause: {e}"),
            },
            ConsentDecision::Decline => ConsentResponse {
                recorded: true,
                status: self.consent.status(&user, publisher, now),
                paused_until: self.consent.active_pause(&user, now).map(|p| p.until()),
            },
        };
        Some(response)
    }

    pub fn issue_tokens(&self, req: IssueRequest<'_>) -> Result<Issued, IssueError> {
        let publisher = self
            .routes
            .delegated_publisher(req.host)
            .ok_or(IssueError::NotFound)?;
        if req.publisher != publisher {
            return Err(IssueError::Malformed(format!(
                "publisher {:?} does not match host {:?}",
                req.publisher, req.host
            )));
        }

        let known = req.connect_id.and_then(|id| {
            self.connect_ids
                .lock()
                .unwrap()
                .get(id)
                .map(|s| (id.to_string(), s.identity.clone()))
        });
        let identity = match (&known, req.identity) {
            (Some((_, stored)), _) => stored.clone(),
            (None, Some(id)) => id,
            (None, None) => return Err(IssueError::Malformed("missing connection identity".into())),
        };
        identity
            .validate()
            .map_err(|e| IssueError::Malformed(e.to_string()))?;

        if !self.eligibility.is_eligible(&identity.isp_id) {
            return Err(IssueError::Refused(Gate::Eligibility));
        }
        let user = identity.user_key();
        match self.consent.status(&user, publisher, req.now) {
            ConsentStatus::Paused => return Err(IssueError::Refused(Gate::Pause)),
            ConsentStatus::Revoked => return Err(IssueError::Refused(Gate::Revoked)),
            ConsentStatus::Granted => {}
            ConsentStatus::None | ConsentStatus::Expired => {
                return Err(IssueError::Refused(Gate::Consent))
            }
        }
        if req.consent_cookie.is_some_and(|c| c != CONSENT_GRANTED) {
            return Err(IssueError::Refused(Gate::Consent));
        }

        let epoch = tokens::epoch_of(req.now, self.genesis)
            .map_err(|e| IssueError::Malformed(e.to_string()))?;
        let key = self.isp_key(&identity.isp_id);
        let cp = tokens::derive_consentpass(&identity, &self.eligibility, &key, epoch)
            .map_err(|e| IssueError::Malformed(e.to_string()))?;
        let pass = tokens::derive_token_pass(&cp, publisher)
            .map_err(|e| IssueError::Malformed(e.to_string()))?;

        let granted = self
            .consent
            .record(&user, publisher)
            .expect("granted status implies a record");
        let expiry = granted.expires_at().min(epoch.end(self.genesis));

        let new_connect_id = match known {
            Some(_) => None,
            None => {
                let mut raw = [0u8; 16];
                rand::thread_rng().fill_bytes(&mut raw);
                let handle = hex::encode(raw);
                self.connect_ids.lock().unwrap().insert(
                    handle.clone(),
                    ConnectState {
                        identity: identity.clone(),
                        epoch,
                    },
                );
                Some(handle)
            }
        };

        Ok(Issued {
            payload: UtiqPassPayload {
                mtid: pass.martechpass,
                atid: pass.adtechpass,
                expiry,
            },
            new_connect_id,
        })
    }

    /// Server-side state behind a `connectId` handle: identity and issuing epoch.
    pub fn connect_state(&self, handle: &str) -> Option<(ConnectionIdentity, Epoch)> {
        self.connect_ids
            .lock()
            .unwrap()
            .get(handle)
            .map(|s| (s.identity.clone(), s.epoch))
    }

    fn hub_route(&self, host: &str) -> Result<(), HubError> {
        match self.routes.resolve(host) {
            Some(Route::Delegated { .. } | Route::Frontend) => Ok(()),
            _ => Err(HubError::NotFound),
        }
    }

    pub fn hub_listing(
        &self,
        host: &str,
        identity: &ConnectionIdentity,
        now: Timestamp,
    ) -> Result<ConsentListing, HubError> {
        self.hub_route(host)?;
        let user = identity.user_key();
        Ok(ConsentListing {
            paused_until: self.consent.active_pause(&user, now).map(|p| p.until()),
            consents: self
                .consent
                .records_for(&user)
                .into_iter()
                .map(|r| ServiceConsent {
                    status: self.consent.status(&user, &r.service_id, now),
                    expires_at: r.expires_at(),
                    granted_at: r.granted_at,
                    service_id: r.service_id,
                })
                .collect(),
        })
    }

    pub fn hub_revoke(
        &self,
        host: &str,
        identity: &ConnectionIdentity,
        service_id: &str,
    ) -> Result<(), HubError> {
        self.hub_route(host)?;
        self.consent.revoke(&identity.user_key(), service_id)?;
        self.persist();
        Ok(())
    }

    pub fn hub_pause(
        &self,
        host: &str,
        identity: &ConnectionIdentity,
        now: Timestamp,
    ) -> Result<Timestamp, HubError> {
        self.hub_route(host)?;
        let until = self.consent.pause_all(&identity.user_key(), now).until();
        self.persist();
        Ok(until)
    }

    fn persist(&self) {
        let Some(path) = &self.state_file else { return };
        let _guard = self.persist_lock.lock().unwrap();
        let snap = self.consent.snapshot();
        let tmp = path.with_extension("tmp");
        let result = serde_json::to_vec_pretty(&snap)
            .map_err(std::io::Error::other)
            .and_then(|bytes| std::fs::write(&tmp, bytes))
            .and_then(|_| std::fs::rename(&tmp, path));
        if let Err(e) = result {
            tracing::error!(path = %path.display(), error = %e, "failed to persist consent state");
        }
    }
}
