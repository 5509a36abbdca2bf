//! Consent lifecycle: per-service grants valid for 90 days, per-service
//! revocation, and a user-wide pause lasting 365 days.
//!
//! Windows are half-open. A grant is live on `[granted_at, granted_at + 90d)`
//! and a pause masks everything on `[paused_at, paused_at + 365d)`.

use std::collections::HashMap;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::time::{Span, Timestamp};

pub const GRANT_VALIDITY: Span = Span::days(90);
pub const PAUSE_DURATION: Span = Span::days(365);
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConsentError {
    #[error("user {user_id:?} has paused identification until {until}")]
    Paused { user_id: String, until: Timestamp },
    #[error("no consent record for user {user_id:?} and service {service_id:?}")]
    NotFound { user_id: String, service_id: String },
    #[error("unsupported snapshot version {0}")]
    UnsupportedVersion(u32),
    #[error("duplicate record in snapshot for {0:?}")]
    DuplicateRecord(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsentRecord {
    pub user_id: String,
    pub service_id: String,
    pub granted_at: Timestamp,
    pub revoked: bool,
}

impl ConsentRecord {
    pub fn expires_at(&self) -> Timestamp {
        self.granted_at + GRANT_VALIDITY
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PauseRecord {
    pub user_id: String,
    pub paused_at: Timestamp,
}

impl PauseRecord {
    pub fn until(&self) -> Timestamp {
        self.paused_at + PAUSE_DURATION
    }

    pub fn is_active(&self, now: Timestamp) -> bool {
        self.paused_at <= now && now < self.until()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsentStatus {
    None,
    Granted,
    Expired,
    Revoked,
    Paused,
}

/// Versioned persistence document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsentSnapshot {
    pub version: u32,
    pub consents: Vec<ConsentRecord>,
    pub pauses: Vec<PauseRecord>,
}

#[derive(Debug, Default)]
struct State {
    consents: HashMap<(String, String), ConsentRecord>,
    pauses: HashMap<String, PauseRecord>,
}

impl State {
    fn active_pause(&self, user_id: &str, now: Timestamp) -> Option<&PauseRecord> {
        self.pauses.get(user_id).filter(|p| p.is_active(now))
    }

    fn status(&self, user_id: &str, service_id: &str, now: Timestamp) -> ConsentStatus {
        if self.active_pause(user_id, now).is_some() {
            return ConsentStatus::Paused;
        }
        match self.consents.get(&(user_id.to_string(), service_id.to_string())) {
            None => ConsentStatus::None,
            Some(r) if r.revoked => ConsentStatus::Revoked,
            Some(r) if now >= r.granted_at && now < r.expires_at() => ConsentStatus::Granted,
            // a grant stamped after `now` is not yet in force
            Some(r) if now < r.granted_at => ConsentStatus::None,
            Some(_) => ConsentStatus::Expired,
        }
    }
}

/// Thread-safe consent store. Every mutation takes the write lock, so
/// mutations are serialized and reads observe a linearizable history.
#[derive(Debug, Default)]
pub struct ConsentEngine {
    state: RwLock<State>,
}

impl ConsentEngine {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn grant(
        &self,
        user_id: &str,
        service_id: &str,
        now: Timestamp,
    ) -> Result<ConsentRecord, ConsentError> {
        let mut state = self.state.write().unwrap();
        if let Some(p) = state.active_pause(user_id, now) {
            return Err(ConsentError::Paused {
                user_id: user_id.to_string(),
                until: p.until(),
            });
        }
        let record = ConsentRecord {
            user_id: user_id.to_string(),
            service_id: service_id.to_string(),
            granted_at: now,
            revoked: false,
        };
        state
            .consents
            .insert((user_id.to_string(), service_id.to_string()), record.clone());
        Ok(record)
    }

    pub fn status(&self, user_id: &str, service_id: &str, now: Timestamp) -> ConsentStatus {
        self.state.read().unwrap().status(user_id, service_id, now)
    }

    pub fn revoke(&self, user_id: &str, service_id: &str) -> Result<(), ConsentError> {
        let mut state = self.state.write().unwrap();
        match state
            .consents
            .get_mut(&(user_id.to_string(), service_id.to_string()))
        {
            Some(r) => {
                r.revoked = true;
                Ok(())
            }
            None => Err(ConsentError::NotFound {
                user_id: user_id.to_string(),
                service_id: service_id.to_string(),
            }),
        }
    }

    pub fn pause_all(&self, user_id: &str, now: Timestamp) -> PauseRecord {
        let record = PauseRecord {
            user_id: user_id.to_string(),
            paused_at: now,
        };
        self.state
            .write()
            .unwrap()
            .pauses
            .insert(user_id.to_string(), record.clone());
        record
    }

    pub fn is_issuable(&self, user_id: &str, service_id: &str, now: Timestamp) -> bool {
        self.status(user_id, service_id, now) == ConsentStatus::Granted
    }

    pub fn active_pause(&self, user_id: &str, now: Timestamp) -> Option<PauseRecord> {
        self.state
            .read()
            .unwrap()
            .active_pause(user_id, now)
            .cloned()
    }

    pub fn record(&self, user_id: &str, service_id: &str) -> Option<ConsentRecord> {
        self.state
            .read()
            .unwrap()
            .consents
            .get(&(user_id.to_string(), service_id.to_string()))
            .cloned()
    }

    /// All records of one user, sorted by service.
    pub fn records_for(&self, user_id: &str) -> Vec<ConsentRecord> {
        let state = self.state.read().unwrap();
        let mut out: Vec<_> = state
            .consents
            .values()
            .filter(|r| r.user_id == user_id)
            .cloned()
            .collect();
        out.sort_by(|a, b| a.service_id.cmp(&b.service_id));
        out
    }

    pub fn snapshot(&self) -> ConsentSnapshot {
        let state = self.state.read().unwrap();
        let mut consents: Vec<_> = state.consents.values().cloned().collect();
        consents.sort_by(|a, b| (&a.user_id, &a.service_id).cmp(&(&b.user_id, &b.service_id)));
        let mut pauses: Vec<_> = state.pauses.values().cloned().collect();
        pauses.sort_by(|a, b| a.user_id.cmp(&b.user_id));
        ConsentSnapshot {
            version: SNAPSHOT_VERSION,
            consents,
            pauses,
        }
    }

    pub fn from_snapshot(snapshot: ConsentSnapshot) -> Result<Self, ConsentError> {
        if snapshot.version != SNAPSHOT_VERSION {
            return Err(ConsentError::UnsupportedVersion(snapshot.version));
        }
        let mut state = State::default();
        for r in snapshot.consents {
            let key = (r.user_id.clone(), r.service_id.clone());
            if state.consents.contains_key(&key) {
                return Err(ConsentError::DuplicateRecord(format!("{}/{}", key.0, key.1)));
            }
            state.consents.insert(key, r);
        }
        for p in snapshot.pauses {
            if state.pauses.contains_key(&p.user_id) {
                return Err(ConsentError::DuplicateRecord(p.user_id));
            }
            state.pauses.insert(p.user_id.clone(), p);
        }
        Ok(ConsentEngine {
            state: RwLock::new(state),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const U: &str = "orange/line-7";
    const S: &str = "lefigaro.fr";

    fn t0() -> Timestamp {
        "2024-01-15T00:00:00Z".parse().unwrap()
    }

    #[test]
    fn fresh_grant_is_granted() {
        let e = ConsentEngine::new();
        e.grant(U, S, t0()).unwrap();
        assert_eq!(e.status(U, S, t0().plus_days(1)), ConsentStatus::Granted);
        assert_eq!(e.status(U, "bild.de", t0()), ConsentStatus::None);
    }

    #[test]
    fn validity_is_ninety_days_half_open() {
        let e = ConsentEngine::new();
        e.grant(U, S, t0()).unwrap();
        assert_eq!(e.status(U, S, t0().plus_days(89)), ConsentStatus::Granted);
        assert_eq!(
            e.status(U, S, t0().plus_days(90) - Span(1)),
            ConsentStatus::Granted
        );
        assert_eq!(e.status(U, S, t0().plus_days(90)), ConsentStatus::Expired);
    }

    #[test]
    fn regrant_replaces_timestamp() {
        let e = ConsentEngine::new();
        e.grant(U, S, t0()).unwrap();
        e.grant(U, S, t0().plus_days(50)).unwrap();
        assert_eq!(e.status(U, S, t0().plus_days(120)), ConsentStatus::Granted);
        assert_eq!(e.status(U, S, t0().plus_days(140)), ConsentStatus::Expired);
    }

    #[test]
    fn revoke_semantics() {
        let e = ConsentEngine::new();
        e.grant(U, S, t0()).unwrap();
        e.revoke(U, S).unwrap();
        assert_eq!(e.status(U, S, t0().plus_days(1)), ConsentStatus::Revoked);
        e.revoke(U, S).unwrap();
        assert_eq!(e.status(U, S, t0().plus_days(1)), ConsentStatus::Revoked);
        assert_eq!(
            e.revoke(U, "bild.de"),
            Err(ConsentError::NotFound {
                user_id: U.into(),
                service_id: "bild.de".into()
            })
        );
        // a new grant replaces the revoked record
        e.grant(U, S, t0().plus_days(2)).unwrap();
        assert_eq!(e.status(U, S, t0().plus_days(3)), ConsentStatus::Granted);
    }

    #[test]
    fn grant_during_pause_is_rejected() {
        let e = ConsentEngine::new();
        e.pause_all(U, t0());
        let err = e.grant(U, S, t0().plus_days(10)).unwrap_err();
        assert_eq!(
            err,
            ConsentError::Paused {
                user_id: U.into(),
                until: t0().plus_days(365)
            }
        );
    }

    #[test]
    fn pause_masks_then_lifts() {
        let e = ConsentEngine::new();
        e.grant(U, S, t0() - Span::days(10)).unwrap();
        e.pause_all(U, t0());
        assert_eq!(e.status(U, S, t0().plus_days(200)), ConsentStatus::Paused);
        assert_eq!(e.status(U, "any.de", t0().plus_days(200)), ConsentStatus::Paused);
        assert!(!e.is_issuable(U, S, t0().plus_days(1)));
        // after the pause lapses the old grant is long expired
        assert_eq!(e.status(U, S, t0().plus_days(365)), ConsentStatus::Expired);
        assert_eq!(e.status(U, "any.de", t0().plus_days(366)), ConsentStatus::None);
    }

    #[test]
    fn pause_lifts_exactly_at_boundary_revealing_live_grant() {
        let e = ConsentEngine::new();
        let paused = t0();
        e.pause_all(U, paused);
        // lift the pause artificially by granting just after it ends
        let end = paused + PAUSE_DURATION;
        assert_eq!(e.status(U, S, end - Span(1)), ConsentStatus::Paused);
        e.grant(U, S, end).unwrap();
        assert_eq!(e.status(U, S, end), ConsentStatus::Granted);
    }

    #[test]
    fn unexpired_grant_resumes_after_pause() {
        // A snapshot lets us place a grant whose window outlives the pause.
        let snapshot = ConsentSnapshot {
            version: 1,
            consents: vec![ConsentRecord {
                user_id: U.into(),
                service_id: S.into(),
                granted_at: t0().plus_days(300),
                revoked: false,
            }],
            pauses: vec![PauseRecord {
                user_id: U.into(),
                paused_at: t0(),
            }],
        };
        let e = ConsentEngine::from_snapshot(snapshot).unwrap();
        assert_eq!(e.status(U, S, t0().plus_days(365) - Span(1)), ConsentStatus::Paused);
        assert_eq!(e.status(U, S, t0().plus_days(365)), ConsentStatus::Granted);
    }

    #[test]
    fn repause_after_lapse() {
        let e = ConsentEngine::new();
        e.pause_all(U, t0());
        let again = t0().plus_days(400);
        e.pause_all(U, again);
        assert_eq!(e.status(U, S, again.plus_days(364)), ConsentStatus::Paused);
        assert_eq!(e.status(U, S, again.plus_days(365)), ConsentStatus::None);
    }

    #[test]
    fn snapshot_round_trip_and_validation() {
        let e = ConsentEngine::new();
        e.grant(U, S, t0()).unwrap();
        e.grant(U, "bild.de", t0()).unwrap();
        e.revoke(U, "bild.de").unwrap();
        e.pause_all("other", t0());
        let snap = e.snapshot();
        let json = serde_json::to_string(&snap).unwrap();
        let back: ConsentSnapshot = serde_json::from_str(&json).unwrap();
        let e2 = ConsentEngine::from_snapshot(back).unwrap();
        assert_eq!(e2.snapshot(), snap);

        let mut bad = snap.clone();
        bad.version = 9;
        assert_eq!(
            ConsentEngine::from_snapshot(bad).unwrap_err(),
            ConsentError::UnsupportedVersion(9)
        );
        let mut dup = snap;
        dup.consents.push(dup.consents[0].clone());
        assert!(matches!(
            ConsentEngine::from_snapshot(dup),
            Err(ConsentError::DuplicateRecord(_))
        ));
    }

    #[derive(Debug, Clone)]
    enum Op {
        Grant(i64),
        Revoke,
        Pause(i64),
    }

    fn op() -> impl Strategy<Value = Op> {
        prop_oneof![
            (0i64..800).prop_map(Op::Grant),
            Just(Op::Revoke),
            (0i64..800).prop_map(Op::Pause),
        ]
    }

    proptest! {
        #[test]
        fn issuable_iff_granted(ops in proptest::collection::vec(op(), 0..12), probe in 0i64..1200) {
            let e = ConsentEngine::new();
            for o in ops {
                match o {
                    Op::Grant(d) => { let _ = e.grant(U, S, t0().plus_days(d)); }
                    Op::Revoke => { let _ = e.revoke(U, S); }
                    Op::Pause(d) => { e.pause_all(U, t0().plus_days(d)); }
                }
            }
            let now = t0().plus_days(probe);
            prop_assert_eq!(e.is_issuable(U, S, now), e.status(U, S, now) == ConsentStatus::Granted);
        }

        #[test]
        fn pause_dominates_any_sequence(
            paused_at in 0i64..100,
            ops in proptest::collection::vec((0i64..364, any::<bool>()), 0..16),
        ) {
            let e = ConsentEngine::new();
            let p = t0().plus_days(paused_at);
            e.pause_all(U, p);
            for (offset, is_grant) in ops {
                let now = p.plus_days(offset);
                if is_grant {
                    prop_assert!(e.grant(U, S, now).is_err());
                } else {
                    let _ = e.revoke(U, S);
                }
                prop_assert!(!e.is_issuable(U, S, now));
            }
        }

        #[test]
        fn expiry_is_monotone(granted in 0i64..100, later in proptest::collection::vec(0i64..2000, 1..10)) {
            let e = ConsentEngine::new();
            let g = t0().plus_days(granted);
            e.grant(U, S, g).unwrap();
            let expired_at = g + GRANT_VALIDITY;
            prop_assert_eq!(e.status(U, S, expired_at), ConsentStatus::Expired);
            for d in later {
                let st = e.status(U, S, expired_at + Span::seconds(d * 3600));
                prop_assert_eq!(st, ConsentStatus::Expired);
            }
        }

        #[test]
        fn pause_boundary_sweep(paused_at in 0i64..10_000_000, delta in -1i64..=1) {
            let e = ConsentEngine::new();
            let p = t0() + Span(paused_at);
            e.pause_all(U, p);
            let now = p + PAUSE_DURATION + Span(delta);
            let expected = if delta < 0 { ConsentStatus::Paused } else { ConsentStatus::None };
            prop_assert_eq!(e.status(U, S, now), expected);
        }
    }
}
