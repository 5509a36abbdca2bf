//! HTTP surface of the simulated origin.
//!
//! | method | path                          | host                     |
//! |--------|-------------------------------|--------------------------|
//! | GET    | `/utiqLoader.js`              | `utiq.<d>`, frontend     |
//! | GET    | `/op/idconnect/mno-precheck`  | `utiq.<d>`               |
//! | POST   | `/op/idconnect/consent`       | `utiq.<d>`               |
//! | POST   | `/op/idconnect/token`         | `utiq.<d>`               |
//! | GET    | `/consenthub/consents`        | `utiq.<d>`, frontend     |
//! | POST   | `/consenthub/revoke`          | `utiq.<d>`, frontend     |
//! | POST   | `/consenthub/pause`           | `utiq.<d>`, frontend     |
//! | GET    | `/`                           | `<d>`, `www.<d>`         |
//! | GET    | `/static/*`                   | any (when configured)    |

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;
use tower_http::cors::{AllowHeaders, AllowOrigin, CorsLayer};
use tower_http::services::ServeDir;

use super::{
    ConsentRequest, Gate, HubError, IssueError, IssueRequest, Refusal, RevokeRequest,
    SimServices, TokenRequest, CONNECT_ID_COOKIE, CONSENT_COOKIE, CONSENT_DENIED,
    CONSENT_GRANTED, COOKIE_MAX_AGE_SECS, NOW_HEADER,
};
use crate::services::ConsentDecision;
use crate::time::Timestamp;
use crate::tokens::ConnectionIdentity;

type Shared = Arc<SimServices>;

pub fn router(services: Shared) -> Router {
    let cors = CorsLayer::new()
        .allow_origin(AllowOrigin::mirror_request())
        .allow_credentials(true)
        .allow_headers(AllowHeaders::mirror_request())
        .allow_methods([axum::http::Method::GET, axum::http::Method::POST]);

    let mut app = Router::new()
        .route("/", get(homepage))
        .route("/utiqLoader.js", get(loader))
        .route("/op/idconnect/mno-precheck", get(precheck))
        .route("/op/idconnect/consent", post(consent))
        .route("/op/idconnect/token", post(token))
        .route("/consenthub/consents", get(hub_list))
        .route("/consenthub/revoke", post(hub_revoke))
        .route("/consenthub/pause", post(hub_pause));
    if let Some(dir) = services.assets_dir() {
        app = app.nest_service("/static", ServeDir::new(dir));
    }
    app.fallback(|| async { not_found() })
        .layer(cors)
        .with_state(services)
}

/// A running origin bound to a local socket.
pub struct RunningOrigin {
    pub addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    task: JoinHandle<std::io::Result<()>>,
}

impl RunningOrigin {
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub async fn shutdown(mut self) -> std::io::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        self.task.await.map_err(std::io::Error::other)?
    }
}

pub async fn spawn(services: Shared, addr: SocketAddr) -> std::io::Result<RunningOrigin> {
    let listener = TcpListener::bind(addr).await?;
    let addr = listener.local_addr()?;
    let (tx, rx) = oneshot::channel::<()>();
    let app = router(services);
    let task = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await
    });
    Ok(RunningOrigin {
        addr,
        shutdown: Some(tx),
        task,
    })
}

/// Binds an ephemeral loopback port.
pub async fn spawn_local(services: Shared) -> std::io::Result<RunningOrigin> {
    spawn(services, "127.0.0.1:0".parse().unwrap()).await
}

fn not_found() -> Response {
    (StatusCode::NOT_FOUND, "not found\n").into_response()
}

fn bad_request(msg: impl Into<String>) -> Response {
    (
        StatusCode::BAD_REQUEST,
        Json(serde_json::json!({ "error": msg.into() })),
    )
        .into_response()
}

fn host(headers: &HeaderMap) -> &str {
    headers
        .get(header::HOST)
        .and_then(|h| h.to_str().ok())
        .unwrap_or("")
}

fn now(headers: &HeaderMap) -> Result<Timestamp, Response> {
    match headers.get(NOW_HEADER) {
        None => Ok(Timestamp::now()),
        Some(v) => v
            .to_str()
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad_request(format!("unparseable {NOW_HEADER} header"))),
    }
}

fn header_str<'a>(headers: &'a HeaderMap, name: &str) -> Option<&'a str> {
    headers
        .get(name)
        .and_then(|v| v.to_str().ok())
        .map(str::trim)
        .filter(|s| !s.is_empty())
}

fn identity(s: &SimServices, headers: &HeaderMap) -> Option<ConnectionIdentity> {
    let isp = header_str(headers, s.isp_header())?;
    let line = header_str(headers, s.line_header())?;
    ConnectionIdentity::new(isp, line).ok()
}

fn require_identity(s: &SimServices, headers: &HeaderMap) -> Result<ConnectionIdentity, Response> {
    identity(s, headers).ok_or_else(|| {
        bad_request(format!(
            "missing {} / {} headers",
            s.isp_header(),
            s.line_header()
        ))
    })
}

fn request_cookie(headers: &HeaderMap, name: &str) -> Option<String> {
    headers
        .get_all(header::COOKIE)
        .iter()
        .filter_map(|v| v.to_str().ok())
        .flat_map(|v| cookie::Cookie::split_parse(v.to_string()))
        .filter_map(Result::ok)
        .find(|c| c.name() == name)
        .map(|c| c.value().to_string())
}

fn set_cookie(name: &str, value: &str, domain: &str, max_age: i64) -> HeaderValue {
    HeaderValue::from_str(&format!(
        "{name}={value}; Max-Age={max_age}; Domain={domain}; Path=/; SameSite=Lax"
    ))
    .expect("cookie fields are header-safe")
}

async fn homepage(State(s): State<Shared>, headers: HeaderMap) -> Response {
    match s.homepage(host(&headers)) {
        Some(html) => ([(header::CONTENT_TYPE, "text/html; charset=utf-8")], html).into_response(),
        None => not_found(),
    }
}

async fn loader(State(s): State<Shared>, headers: HeaderMap) -> Response {
    match s.serve_loader(host(&headers)) {
        Some(body) => (
            [(header::CONTENT_TYPE, "application/javascript")],
            Bytes::copy_from_slice(body),
        )
            .into_response(),
        None => not_found(),
    }
}

async fn precheck(State(s): State<Shared>, headers: HeaderMap) -> Response {
    let isp = header_str(&headers, s.isp_header());
    match s.mno_precheck(host(&headers), isp) {
        Some(body) => (
            [(header::CONTENT_TYPE, "application/json")],
            Bytes::from_static(body),
        )
            .into_response(),
        None => not_found(),
    }
}

async fn consent(State(s): State<Shared>, headers: HeaderMap, body: Bytes) -> Response {
    let host = host(&headers);
    let Some(publisher) = s.routes().delegated_publisher(host).map(str::to_string) else {
        return not_found();
    };
    let req: ConsentRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return bad_request(e.to_string()),
    };
    let id = match require_identity(&s, &headers) {
        Ok(id) => id,
        Err(r) => return r,
    };
    let now = match now(&headers) {
        Ok(t) => t,
        Err(r) => return r,
    };
    let Some(resp) = s.record_consent(host, &id, req.decision, now) else {
        return not_found();
    };
    let mut out = Json(&resp).into_response();
    if resp.recorded {
        let value = match req.decision {
            ConsentDecision::Accept => CONSENT_GRANTED,
            ConsentDecision::Decline => CONSENT_DENIED,
        };
        out.headers_mut().append(
            header::SET_COOKIE,
            set_cookie(CONSENT_COOKIE, value, &publisher, COOKIE_MAX_AGE_SECS),
        );
    }
    out
}

async fn token(State(s): State<Shared>, headers: HeaderMap, body: Bytes) -> Response {
    let host = host(&headers);
    let Some(publisher) = s.routes().delegated_publisher(host).map(str::to_string) else {
        return not_found();
    };
    let req: TokenRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return bad_request(e.to_string()),
    };
    let now = match now(&headers) {
        Ok(t) => t,
        Err(r) => return r,
    };
    let connect_id = request_cookie(&headers, CONNECT_ID_COOKIE);
    let consent_cookie = request_cookie(&headers, CONSENT_COOKIE);
    let result = s.issue_tokens(IssueRequest {
        host,
        publisher: &req.publisher,
        identity: identity(&s, &headers),
        connect_id: connect_id.as_deref(),
        consent_cookie: consent_cookie.as_deref(),
        now,
    });
    match result {
        Ok(issued) => {
            let mut out = Json(&issued.payload).into_response();
            if let Some(handle) = issued.new_connect_id {
                out.headers_mut().append(
                    header::SET_COOKIE,
                    set_cookie(CONNECT_ID_COOKIE, &handle, &publisher, COOKIE_MAX_AGE_SECS),
                );
            }
            out
        }
        Err(IssueError::NotFound) => not_found(),
        Err(IssueError::Malformed(m)) => bad_request(m),
        Err(IssueError::Refused(gate)) => {
            let mut out =
                (StatusCode::FORBIDDEN, Json(Refusal { refused: gate })).into_response();
            if gate == Gate::Revoked {
                // a revoked service must ask for consent again on the next visit
                for name in [CONSENT_COOKIE, CONNECT_ID_COOKIE] {
                    out.headers_mut()
                        .append(header::SET_COOKIE, set_cookie(name, "", &publisher, 0));
                }
            }
            out
        }
    }
}

fn hub_error(e: HubError) -> Response {
    match e {
        HubError::NotFound => not_found(),
        HubError::Consent(c) => (
            StatusCode::NOT_FOUND,
            Json(serde_json::json!({ "error": c.to_string() })),
        )
            .into_response(),
    }
}

async fn hub_list(State(s): State<Shared>, headers: HeaderMap) -> Response {
    let id = match require_identity(&s, &headers) {
        Ok(id) => id,
        Err(r) => return r,
    };
    let now = match now(&headers) {
        Ok(t) => t,
        Err(r) => return r,
    };
    match s.hub_listing(host(&headers), &id, now) {
        Ok(listing) => Json(listing).into_response(),
        Err(e) => hub_error(e),
    }
}

async fn hub_revoke(State(s): State<Shared>, headers: HeaderMap, body: Bytes) -> Response {
    let req: RevokeRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return bad_request(e.to_string()),
    };
    let id = match require_identity(&s, &headers) {
        Ok(id) => id,
        Err(r) => return r,
    };
    match s.hub_revoke(host(&headers), &id, &req.service_id) {
        Ok(()) => Json(serde_json::json!({ "revoked": req.service_id })).into_response(),
        Err(e) => hub_error(e),
    }
}

async fn hub_pause(State(s): State<Shared>, headers: HeaderMap) -> Response {
    let id = match require_identity(&s, &headers) {
        Ok(id) => id,
        Err(r) => return r,
    };
    let now = match now(&headers) {
        Ok(t) => t,
        Err(r) => return r,
    };
    match s.hub_pause(host(&headers), &id, now) {
        Ok(until) => Json(serde_json::json!({ "paused_until": until })).into_response(),
        Err(e) => hub_error(e),
    }
}
