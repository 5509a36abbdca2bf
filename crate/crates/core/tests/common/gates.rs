//! Randomized visit histories and a stand-alone statement of when a visit
//! must end with tokens.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use utiq_lab::client::{BrowserState, FlowOutcome, HaltReason, HeadlessClient, Visit};
use utiq_lab::services::{ConsentDecision, SimServices};
use utiq_lab::tokens::ConnectionIdentity;
use utiq_lab::Timestamp;

const DAY: i64 = 86_400;
const GRANT_DAYS: i64 = 90;
const PAUSE_DAYS: i64 = 365;

pub const ELIGIBLE: &[&str] = &[
    "Orange",
    "Bouygues Telecom",
    "SFR",
    "Deutsche Telekom",
    "Vodafone",
    "Congstar",
    "Fraenk",
    "Movistar",
    "Jazztel",
    "Simyo",
];
pub const INELIGIBLE: &[&str] = &["ComcastUS", "unlisted-isp", "Free Mobile"];
pub const PUBLISHERS: &[&str] = &["lefigaro.fr", "bild.de", "marca.com", "elmundo.es"];

#[derive(Debug, Clone)]
pub struct Prior {
    pub at: Timestamp,
    pub decision: ConsentDecision,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub publisher: &'static str,
    pub isp: &'static str,
    pub line: String,
    pub site_consent: bool,
    pub decision: ConsentDecision,
    pub now: Timestamp,
    pub prior: Option<Prior>,
    /// Consenthub revocation of the publisher after the prior visit.
    pub revoke: bool,
    pub pause_at: Option<Timestamp>,
}

fn offset(rng: &mut ChaCha8Rng, days: i64, max_days: i64) -> i64 {
    match rng.gen_range(0..6) {
        0 => days * DAY,
        1 => days * DAY - 1,
        2 => days * DAY + 1,
        3 => 0,
        _ => rng.gen_range(0..max_days * DAY),
    }
}

pub fn generate(rng: &mut ChaCha8Rng, index: usize) -> Scenario {
    // 2024-06-01T00:00:00Z plus up to 100 days
    let now = Timestamp(1_717_200_000 + rng.gen_range(0..100 * DAY));
    let decision = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.7) {
            ConsentDecision::Accept
        } else {
            ConsentDecision::Decline
        }
    };
    let prior = rng.gen_bool(0.7).then(|| Prior {
        at: Timestamp(now.0 - offset(rng, GRANT_DAYS, 200)),
        decision: decision(rng),
    });
    Scenario {
        publisher: PUBLISHERS.choose(rng).unwrap(),
        isp: if rng.gen_bool(0.8) {
            ELIGIBLE.choose(rng).unwrap()
        } else {
            INELIGIBLE.choose(rng).unwrap()
        },
        line: format!("gate-line-{index:05}"),
        site_consent: rng.gen_bool(0.85),
        decision: decision(rng),
        now,
        revoke: prior.is_some() && rng.gen_bool(0.3),
        prior,
        pause_at: rng
            .gen_bool(0.35)
            .then(|| Timestamp(now.0 - offset(rng, PAUSE_DAYS, 500))),
    }
}

fn paused_at(s: &Scenario, t: Timestamp) -> bool {
    s.pause_at
        .is_some_and(|p| p.0 <= t.0 && t.0 < p.0 + PAUSE_DAYS * DAY)
}

/// Tokens are due exactly when the site banner was accepted, the line is
/// on a participating network, no pause covers the visit, and the visitor
/// holds live consent for the publisher: either from an earlier accepted,
/// unrevoked grant still within its cookie lifetime, or from accepting now
/// when no consent cookie is live.
pub fn expected_pass(s: &Scenario) -> bool {
    if !s.site_consent || !ELIGIBLE.contains(&s.isp) || paused_at(s, s.now) {
        return false;
    }
    let live_cookie = s.prior.as_ref().and_then(|p| {
        if s.now.0 >= p.at.0 + GRANT_DAYS * DAY {
            return None;
        }
        match p.decision {
            ConsentDecision::Decline => Some(false),
            ConsentDecision::Accept if paused_at(s, p.at) => None,
            ConsentDecision::Accept => Some(true),
        }
    });
    match live_cookie {
        Some(granted) => granted && !s.revoke,
        None => s.decision == ConsentDecision::Accept,
    }
}

/// Replays the history against the services and returns the final visit.
pub async fn run(
    services: &SimServices,
    client: &HeadlessClient,
    s: &Scenario,
) -> (FlowOutcome, BrowserState) {
    let identity = ConnectionIdentity::new(s.isp, s.line.clone()).unwrap();
    let host = format!("utiq.{}", s.publisher);
    let mut state = BrowserState::new(s.line.clone(), s.now);

    let pause = |t| {
        services.hub_pause(&host, &identity, t).unwrap();
    };
    let pause_first = match (&s.prior, s.pause_at) {
        (Some(p), Some(t)) => t.0 <= p.at.0,
        _ => true,
    };
    if pause_first {
        s.pause_at.map(pause);
    }
    if let Some(p) = &s.prior {
        state.clock = p.at;
        let visit = Visit {
            publisher: s.publisher.into(),
            isp: s.isp.into(),
            site_consent: true,
            decision: p.decision,
        };
        client.run_flow(&mut state, &visit).await;
        if s.revoke {
            // only meaningful when the prior visit left a record
            let _ = services.hub_revoke(&host, &identity, s.publisher);
        }
    }
    if !pause_first {
        s.pause_at.map(pause);
    }

    state.clock = s.now;
    let visit = Visit {
        publisher: s.publisher.into(),
        isp: s.isp.into(),
        site_consent: s.site_consent,
        decision: s.decision,
    };
    let outcome = client.run_flow(&mut state, &visit).await;
    (outcome, state)
}

/// Runs `count` scenarios from `seed`; returns mismatches as descriptions.
pub async fn brute_force(
    services: &SimServices,
    client: &HeadlessClient,
    seed: u64,
    count: usize,
) -> (usize, Vec<String>) {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut passes = 0;
    let mut failures = Vec::new();
    for i in 0..count {
        let s = generate(&mut rng, i);
        let (outcome, state) = run(services, client, &s).await;
        let expected = expected_pass(&s);
        passes += usize::from(expected);
        // a visit halted before the loader never touches storage, so an
        // earlier visit's pass may legitimately remain
        let stored = state.utiq_pass(s.publisher).is_some();
        let storage_ok = match outcome.halt_reason {
            None => stored,
            Some(HaltReason::NoSiteConsent) => true,
            Some(_) => !stored,
        };
        let consistent = storage_ok
            && outcome.halt_reason.is_none() == outcome.utiq_pass_present
            && outcome.transport_error.is_none();
        if outcome.utiq_pass_present != expected || !consistent {
            failures.push(format!(
                "scenario {i}: expected pass={expected}, got pass={} halt={:?} stored={stored}: {s:?}",
                outcome.utiq_pass_present, outcome.halt_reason
            ));
        }
    }
    (passes, failures)
}
