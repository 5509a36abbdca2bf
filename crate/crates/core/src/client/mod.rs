//! Headless model of a browser running the loader.
//!
//! The loader logic is interpreted natively. One visit walks, in order:
//! site consent, loader fetch, cookie inspection, the consent manager
//! (only without a live `utiq_consent_status` cookie), the eligibility
//! precheck, and token issuance. Every step and every cookie or storage
//! mutation is appended to the trace.

pub mod jar;

use reqwest::header::{HeaderMap, HeaderName, HeaderValue, COOKIE, HOST, SET_COOKIE};
use reqwest::{Method, StatusCode};
use serde::{Deserialize, Serialize};

use crate::services::{
    ConsentDecision, ConsentResponse, Gate, Refusal, UtiqPassPayload, CONNECT_ID_COOKIE,
    CONSENT_COOKIE, CONSENT_DENIED, DEFAULT_ISP_HEADER, DEFAULT_LINE_HEADER, NOW_HEADER,
    PRECHECK_OK,
};
use crate::time::Timestamp;

pub use jar::{CookieJar, JarChange, LocalStorage, StoredCookie};

pub const ELIGIBILITY_KEY: &str = "utiqEligibility";
pub const PASS_KEY: &str = "utiqPass";

/// Cookies, storage and clock of one simulated browser on one subscriber line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BrowserState {
    pub line_id: String,
    pub clock: Timestamp,
    pub cookies: CookieJar,
    pub storage: LocalStorage,
}

impl BrowserState {
    pub fn new(line_id: impl Into<String>, clock: Timestamp) -> Self {
        BrowserState {
            line_id: line_id.into(),
            clock,
            cookies: CookieJar::default(),
            storage: LocalStorage::default(),
        }
    }

    pub fn eligibility(&self, publisher: &str) -> Option<EligibilityDoc> {
        let v = self.storage.get(&page_origin(publisher), ELIGIBILITY_KEY)?;
        serde_json::from_value(v.clone()).ok()
    }

    pub fn utiq_pass(&self, publisher: &str) -> Option<UtiqPassPayload> {
        let v = self.storage.get(&page_origin(publisher), PASS_KEY)?;
        serde_json::from_value(v.clone()).ok()
    }
}

/// `utiqEligibility` document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EligibilityDoc {
    pub eligible: bool,
    pub checked_at: Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HaltReason {
    NoSiteConsent,
    NoUtiqConsent,
    IneligibleIsp,
    Revoked,
    Paused,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum FlowEvent {
    SiteConsent { accepted: bool },
    LoaderFetched { status: u16 },
    CookiesInspected {
        consent_status: Option<String>,
        connect_id: Option<String>,
    },
    ConsentManagerShown { decision: ConsentDecision },
    ConsentRecorded(ConsentResponse),
    PrecheckCalled { body: String },
    TokensRequested { reused_connect_id: bool },
    TokensIssued,
    TokensRefused { gate: Gate },
    CookieSet {
        name: String,
        value: String,
        expires: Timestamp,
    },
    CookieCleared { name: String },
    StorageWritten {
        key: String,
        value: serde_json::Value,
    },
    StorageRemoved { key: String },
    Halted { reason: HaltReason },
    TransportError { step: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowOutcome {
    pub steps: Vec<FlowEvent>,
    pub utiq_pass_present: bool,
    pub halt_reason: Option<HaltReason>,
    /// Set when the trace was cut short by a network failure.
    pub transport_error: Option<String>,
}

impl FlowOutcome {
    pub fn consent_manager_shown(&self) -> bool {
        self.steps
            .iter()
            .any(|s| matches!(s, FlowEvent::ConsentManagerShown { .. }))
    }

    pub fn reached_precheck(&self) -> bool {
        self.steps
            .iter()
            .any(|s| matches!(s, FlowEvent::PrecheckCalled { .. }))
    }
}

/// One page visit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Visit {
    pub publisher: String,
    pub isp: String,
    pub site_consent: bool,
    /// Answer given if the consent manager is shown.
    pub decision: ConsentDecision,
}

pub fn page_origin(publisher: &str) -> String {
    format!("https://{publisher}")
}

/// Talks to a simulated (or live) origin. Every request goes to `base_url`
/// with the logical host carried in the `Host` header.
#[derive(Debug, Clone)]
pub struct HeadlessClient {
    http: reqwest::Client,
    base_url: String,
    isp_header: HeaderName,
    line_header: HeaderName,
}

#[derive(Debug)]
struct Reply {
    status: StatusCode,
    set_cookies: Vec<String>,
    body: Vec<u8>,
}

impl HeadlessClient {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self::with_headers(base_url, DEFAULT_ISP_HEADER, DEFAULT_LINE_HEADER)
    }

    pub fn with_headers(base_url: impl Into<String>, isp_header: &str, line_header: &str) -> Self {
        HeadlessClient {
            http: reqwest::Client::builder()
                .redirect(reqwest::redirect::Policy::none())
                .build()
                .expect("reqwest client"),
            base_url: base_url.into().trim_end_matches('/').to_string(),
            isp_header: HeaderName::from_bytes(isp_header.as_bytes()).expect("valid header name"),
            line_header: HeaderName::from_bytes(line_header.as_bytes())
                .expect("valid header name"),
        }
    }

    pub async fn run_flow(&self, state: &mut BrowserState, visit: &Visit) -> FlowOutcome {
        let mut flow = Flow {
            client: self,
            state,
            visit,
            steps: Vec::new(),
        };
        flow.run().await
    }

    /// A later visit at `now`. A live consent cookie skips the consent
    /// manager and the stored `connectId` is presented again.
    pub async fn replay_visit(
        &self,
        state: &mut BrowserState,
        publisher: &str,
        isp: &str,
        now: Timestamp,
        decision_if_asked: ConsentDecision,
    ) -> FlowOutcome {
        state.clock = now;
        let visit = Visit {
            publisher: publisher.to_string(),
            isp: isp.to_string(),
            site_consent: true,
            decision: decision_if_asked,
        };
        self.run_flow(state, &visit).await
    }

    async fn send(
        &self,
        method: Method,
        host: &str,
        path: &str,
        state: &BrowserState,
        isp: &str,
        body: Option<serde_json::Value>,
    ) -> reqwest::Result<Reply> {
        let mut headers = HeaderMap::new();
        let header = |s: &str| HeaderValue::from_str(s).unwrap_or(HeaderValue::from_static(""));
        headers.insert(HOST, header(host));
        headers.insert(self.isp_header.clone(), header(isp));
        headers.insert(self.line_header.clone(), header(&state.line_id));
        headers.insert(NOW_HEADER, header(&state.clock.secs().to_string()));
        if let Some(c) = state.cookies.header_for(host, state.clock) {
            headers.insert(COOKIE, header(&c));
        }
        let mut req = self
            .http
            .request(method, format!("{}{}", self.base_url, path))
            .headers(headers);
        if let Some(b) = body {
            req = req.json(&b);
        }
        let resp = req.send().await?;
        let status = resp.status();
        let set_cookies = resp
            .headers()
            .get_all(SET_COOKIE)
            .iter()
            .filter_map(|v| v.to_str().ok().map(str::to_string))
            .collect();
        let body = resp.bytes().await?.to_vec();
        Ok(Reply {
            status,
            set_cookies,
            body,
        })
    }
}

struct Flow<'a> {
    client: &'a HeadlessClient,
    state: &'a mut BrowserState,
    visit: &'a Visit,
    steps: Vec<FlowEvent>,
}

enum Step {
    Continue,
    Done(FlowOutcome),
}

impl Flow<'_> {
    fn utiq_host(&self) -> String {
        format!("utiq.{}", self.visit.publisher)
    }

    fn origin(&self) -> String {
        page_origin(&self.visit.publisher)
    }

    fn finish(&mut self, halt: Option<HaltReason>, transport_error: Option<String>) -> FlowOutcome {
        if let Some(reason) = halt {
            self.steps.push(FlowEvent::Halted { reason });
        }
        FlowOutcome {
            steps: std::mem::take(&mut self.steps),
            utiq_pass_present: halt.is_none() && transport_error.is_none(),
            halt_reason: halt,
            transport_error,
        }
    }

    fn halt(&mut self, reason: HaltReason) -> FlowOutcome {
        let origin = self.origin();
        if self.state.storage.remove(&origin, PASS_KEY).is_some() {
            self.steps.push(FlowEvent::StorageRemoved {
                key: PASS_KEY.into(),
            });
        }
        self.finish(Some(reason), None)
    }

    fn transport(&mut self, step: &str, message: String) -> FlowOutcome {
        self.steps.push(FlowEvent::TransportError {
            step: step.into(),
            message: message.clone(),
        });
        self.finish(None, Some(format!("{step}: {message}")))
    }

    fn absorb_cookies(&mut self, host: &str, headers: &[String]) {
        for h in headers {
            match self.state.cookies.apply_set_cookie(host, h, self.state.clock) {
                Some(JarChange::Set {
                    name,
                    value,
                    expires,
                }) => self.steps.push(FlowEvent::CookieSet {
                    name,
                    value,
                    expires,
                }),
                Some(JarChange::Cleared { name }) => {
                    self.steps.push(FlowEvent::CookieCleared { name })
                }
                None => {}
            }
        }
    }

    fn write_storage(&mut self, key: &str, value: serde_json::Value) {
        let origin = self.origin();
        self.state.storage.set(&origin, key, value.clone());
        self.steps.push(FlowEvent::StorageWritten {
            key: key.into(),
            value,
        });
    }

    async fn request(
        &mut self,
        step: &str,
        method: Method,
        path: &str,
        body: Option<serde_json::Value>,
    ) -> Result<Reply, FlowOutcome> {
        let host = self.utiq_host();
        match self
            .client
            .send(method, &host, path, self.state, &self.visit.isp, body)
            .await
        {
            Ok(reply) => {
                self.absorb_cookies(&host, &reply.set_cookies);
                Ok(reply)
            }
            Err(e) => Err(self.transport(step, e.to_string())),
        }
    }

    async fn run(&mut self) -> FlowOutcome {
        self.steps.push(FlowEvent::SiteConsent {
            accepted: self.visit.site_consent,
        });
        if !self.visit.site_consent {
            return self.finish(Some(HaltReason::NoSiteConsent), None);
        }

        match self.load_and_consent().await {
            Step::Done(outcome) => return outcome,
            Step::Continue => {}
        }

        let reply = match self
            .request("precheck", Method::GET, "/op/idconnect/mno-precheck", None)
            .await
        {
            Ok(r) => r,
            Err(outcome) => return outcome,
        };
        if !reply.status.is_success() {
            let msg = format!("http {}", reply.status.as_u16());
            return self.transport("precheck", msg);
        }
        self.steps.push(FlowEvent::PrecheckCalled {
            body: String::from_utf8_lossy(&reply.body).into_owned(),
        });
        let eligible = reply.body == PRECHECK_OK;
        let doc = EligibilityDoc {
            eligible,
            checked_at: self.state.clock,
        };
        self.write_storage(ELIGIBILITY_KEY, serde_json::to_value(doc).unwrap());
        if !eligible {
            return self.halt(HaltReason::IneligibleIsp);
        }

        self.issue().await
    }

    async fn load_and_consent(&mut self) -> Step {
        let reply = match self
            .request("loader", Method::GET, "/utiqLoader.js", None)
            .await
        {
            Ok(r) => r,
            Err(outcome) => return Step::Done(outcome),
        };
        self.steps.push(FlowEvent::LoaderFetched {
            status: reply.status.as_u16(),
        });
        if !reply.status.is_success() {
            let msg = format!("http {}", reply.status.as_u16());
            return Step::Done(self.transport("loader", msg));
        }

        let host = self.utiq_host();
        let now = self.state.clock;
        let consent_status = self
            .state
            .cookies
            .get(&host, CONSENT_COOKIE, now)
            .map(str::to_string);
        let connect_id = self
            .state
            .cookies
            .get(&host, CONNECT_ID_COOKIE, now)
            .map(str::to_string);
        self.steps.push(FlowEvent::CookiesInspected {
            consent_status: consent_status.clone(),
            connect_id,
        });

        match consent_status.as_deref() {
            Some(CONSENT_DENIED) => Step::Done(self.halt(HaltReason::NoUtiqConsent)),
            Some(_) => Step::Continue,
            None => {
                let decision = self.visit.decision;
                self.steps.push(FlowEvent::ConsentManagerShown { decision });
                let reply = match self
                    .request(
                        "consent",
                        Method::POST,
                        "/op/idconnect/consent",
                        Some(serde_json::json!({ "decision": decision })),
                    )
                    .await
                {
                    Ok(r) => r,
                    Err(outcome) => return Step::Done(outcome),
                };
                match serde_json::from_slice::<ConsentResponse>(&reply.body) {
                    Ok(resp) if reply.status.is_success() => {
                        self.steps.push(FlowEvent::ConsentRecorded(resp))
                    }
                    _ => {
                        let msg = format!("http {}", reply.status.as_u16());
                        return Step::Done(self.transport("consent", msg));
                    }
                }
                match decision {
                    ConsentDecision::Accept => Step::Continue,
                    ConsentDecision::Decline => Step::Done(self.halt(HaltReason::NoUtiqConsent)),
                }
            }
        }
    }

    async fn issue(&mut self) -> FlowOutcome {
        let reused = self
            .state
            .cookies
            .get(&self.utiq_host(), CONNECT_ID_COOKIE, self.state.clock)
            .is_some();
        self.steps.push(FlowEvent::TokensRequested {
            reused_connect_id: reused,
        });
        let body = serde_json::json!({ "publisher": self.visit.publisher });
        let reply = match self
            .request("token", Method::POST, "/op/idconnect/token", Some(body))
            .await
        {
            Ok(r) => r,
            Err(outcome) => return outcome,
        };
        if reply.status == StatusCode::FORBIDDEN {
            if let Ok(refusal) = serde_json::from_slice::<Refusal>(&reply.body) {
                self.steps.push(FlowEvent::TokensRefused {
                    gate: refusal.refused,
                });
                let reason = match refusal.refused {
                    Gate::Consent => HaltReason::NoUtiqConsent,
                    Gate::Eligibility => HaltReason::IneligibleIsp,
                    Gate::Pause => HaltReason::Paused,
                    Gate::Revoked => HaltReason::Revoked,
                };
                return self.halt(reason);
            }
        }
        match serde_json::from_slice::<UtiqPassPayload>(&reply.body) {
            Ok(pass) if reply.status.is_success() => {
                self.steps.push(FlowEvent::TokensIssued);
                self.write_storage(PASS_KEY, serde_json::to_value(pass).unwrap());
                self.finish(None, None)
            }
            _ => {
                let msg = format!("http {}", reply.status.as_u16());
                self.transport("token", msg)
            }
        }
    }
}
