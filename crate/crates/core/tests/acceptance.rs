//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

mod common;

use std::collections::{BTreeSet, HashSet};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use futures::StreamExt;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::oracle;
use utiq_lab::client::HeadlessClient;
use utiq_lab::consent::{ConsentEngine, ConsentError, ConsentStatus};
use utiq_lab::eligibility::EligibilityTable;
use utiq_lab::fixture::ADOPTERS;
use utiq_lab::report::{self, CountryMap, ReportFormat};
use utiq_lab::scanner::{self, ScanRecord};
use utiq_lab::services::http::RunningOrigin;
use utiq_lab::tokens::{
    derive_adtechpass, derive_consentpass, derive_martechpass, ConnectionIdentity, Consentpass,
    Epoch,
};
use utiq_lab::{Span, Timestamp};

type Outcome = Result<String, String>;

const TABLE_BUDGET: Duration = Duration::from_secs(60);
const RANDOM_CASES: usize = 200;
const GATE_SCENARIOS: usize = 1000;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn table_reproduction(records: &[ScanRecord], elapsed: Duration) -> Outcome {
    let verdicts: Vec<_> = records.iter().map(|r| r.verdict()).collect();
    let rows = report::aggregate(&verdicts, &CountryMap::default());
    let expected = [
        ("Total", 9316, 83, "0.89"),
        ("France", 2048, 14, "0.68"),
        ("Germany", 3591, 27, "0.75"),
        ("Spain", 3641, 42, "1.15"),
    ];
    for (want, got) in expected.iter().zip(&rows) {
        let got_t = (
            got.label.as_str(),
            got.websites,
            got.compliant,
            got.percentage().unwrap_or_default(),
        );
        ensure!(
            (want.0, want.1, want.2, want.3) == (got_t.0, got_t.1, got_t.2, got_t.3.as_str()),
            "row {:?} != expected {:?}",
            got_t,
            want
        );
    }
    ensure!(
        elapsed <= TABLE_BUDGET,
        "scan took {:.1}s, budget {}s",
        elapsed.as_secs_f64(),
        TABLE_BUDGET.as_secs()
    );
    Ok(format!(
        "9316/83/0.89%, 2048/14/0.68%, 3591/27/0.75%, 3641/42/1.15% in {:.1}s at concurrency 32",
        elapsed.as_secs_f64()
    ))
}

fn appendix_equality(records: &[ScanRecord]) -> Outcome {
    let compliant: BTreeSet<_> = records
        .iter()
        .filter(|r| r.compliant)
        .map(|r| r.domain.as_str())
        .collect();
    let expected: BTreeSet<_> = ADOPTERS.iter().map(|a| a.1).collect();
    ensure!(
        compliant == expected,
        "extra {:?}, missing {:?}",
        compliant.difference(&expected).collect::<Vec<_>>(),
        expected.difference(&compliant).collect::<Vec<_>>()
    );
    let rows = report::appendix(records, &CountryMap::default());
    let listed: Vec<_> = rows
        .iter()
        .map(|r| (r.rank, r.domain.as_str(), r.country.clone()))
        .collect();
    let published: Vec<_> = ADOPTERS
        .iter()
        .map(|(rank, d, c)| (*rank, *d, c.to_string()))
        .collect();
    ensure!(listed == published, "ranked listing differs from the published one");
    let csv = report::render_appendix(&rows, ReportFormat::Csv);
    let lines: Vec<_> = csv.lines().skip(1).collect();
    ensure!(
        lines.first() == Some(&"786,lefigaro.fr,France")
            && lines.last() == Some(&"97222,24auto.de,Germany"),
        "listing bounds {:?} .. {:?}",
        lines.first(),
        lines.last()
    );
    Ok(format!(
        "{} compliant domains, listing 786 lefigaro.fr France .. 97222 24auto.de Germany",
        compliant.len()
    ))
}

fn prebid_share(records: &[ScanRecord]) -> Outcome {
    let share = report::prebid_share(records);
    let p = share.percentage().unwrap_or_default();
    ensure!(
        (share.count, share.total, p.as_str()) == (66, 83, "79.52"),
        "got {}/{} = {}%",
        share.count,
        share.total,
        p
    );
    Ok(format!("{}/{} = {}%", share.count, share.total, p))
}

async fn precheck_golden(origin: &RunningOrigin) -> Outcome {
    let http = reqwest::Client::new();
    let url = format!("{}/op/idconnect/mno-precheck", origin.base_url());
    let mut seen = Vec::new();
    for (isp, want) in [
        ("Orange", &br#"{"status":"ok"}"#[..]),
        ("Movistar", br#"{"status":"ok"}"#),
        ("ComcastUS", br#"{"status":"Not found"}"#),
    ] {
        let resp = http
            .get(&url)
            .header("host", "utiq.lefigaro.fr")
            .header("x-sim-isp", isp)
            .send()
            .await
            .map_err(|e| e.to_string())?;
        let status = resp.status();
        let body = resp.bytes().await.map_err(|e| e.to_string())?;
        ensure!(status == 200, "{isp}: HTTP {status}");
        ensure!(body.as_ref() == want, "{isp}: body {:?}", String::from_utf8_lossy(&body));
        seen.push(String::from_utf8_lossy(&body).into_owned());
    }
    Ok(format!("byte-identical {} / {}", seen[0], seen[2]))
}

fn token_properties() -> Outcome {
    const ISPS: &[&str] = &["Orange", "SFR", "Vodafone", "Deutsche Telekom", "Movistar", "Simyo"];
    let table = EligibilityTable::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x70c3);
    let mut key = || -> Vec<u8> { (0..32).map(|_| rng.gen()).collect() };
    let keys: Vec<Vec<u8>> = (0..8).map(|_| key()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x70c4);
    let cp = |isp: &str, line: &str, key: &[u8], e: u64| -> Consentpass {
        let id = ConnectionIdentity::new(isp, line).unwrap();
        derive_consentpass(&id, &table, key, Epoch(e)).unwrap()
    };
    let publisher = |rng: &mut ChaCha8Rng| format!("pub{}.{}", rng.gen::<u32>(), ["fr", "de", "es"].choose(rng).unwrap());

    for case in 0..RANDOM_CASES {
        let isp = *ISPS.choose(&mut rng).unwrap();
        let line = format!("{:012x}", rng.gen::<u64>() & 0xffff_ffff_ffff);
        let key = keys.choose(&mut rng).unwrap();
        let e = rng.gen_range(0..500u64);
        let (p1, p2) = (publisher(&mut rng), publisher(&mut rng));

        let a = cp(isp, &line, key, e);
        let expect = oracle::consentpass(key, isp, &line, e);
        ensure!(a.value.0 == expect, "case {case}: consentpass differs from reference HMAC");
        // determinism
        ensure!(a == cp(isp, &line, key, e), "case {case}: not deterministic");
        let m1 = derive_martechpass(&a, &p1).unwrap();
        let m2 = derive_martechpass(&a, &p2).unwrap();
        ensure!(m1.0 == oracle::martechpass(&expect, &p1), "case {case}: martechpass differs from reference");
        ensure!(m1 == derive_martechpass(&a, &p1).unwrap(), "case {case}: martechpass not deterministic");
        // scoping
        ensure!(m1 != m2, "case {case}: martechpass not publisher-scoped");
        // cross-publisher stability: the value handed out for p1 and for p2 is one derivation
        let at = derive_adtechpass(&a);
        ensure!(at.0 == oracle::adtechpass(&expect), "case {case}: adtechpass differs from reference");
        ensure!(at == derive_adtechpass(&cp(isp, &line, key, e)), "case {case}: adtechpass unstable");
        // rotation
        let b = cp(isp, &line, key, e + 1);
        ensure!(
            a.value != b.value
                && derive_martechpass(&b, &p1).unwrap() != m1
                && derive_adtechpass(&b) != at,
            "case {case}: epoch change left a token unchanged"
        );
        // anonymization
        for t in [a.value.to_hex(), m1.to_hex(), at.to_hex()] {
            ensure!(
                !t.contains(&line) && !t.contains(&oracle::hex(line.as_bytes())) && !t.contains(&oracle::hex(isp.as_bytes())),
                "case {case}: identity substring in token {t}"
            );
        }
    }

    let mut distinct = HashSet::new();
    for i in 0..10_000 {
        distinct.insert(cp(ISPS[i % ISPS.len()], &format!("subscriber-{i}"), &keys[0], 3).value);
    }
    ensure!(distinct.len() == 10_000, "{} distinct consentpasses of 10000", distinct.len());
    Ok(format!(
        "{RANDOM_CASES} randomized cases against a reference HMAC; 10000 identities -> 10000 consentpasses"
    ))
}

async fn consent_lifecycle(origin: &RunningOrigin, services: &utiq_lab::services::SimServices) -> Outcome {
    let t0 = Timestamp(1_705_312_800);
    let e = ConsentEngine::new();
    e.grant("u", "lefigaro.fr", t0).map_err(|e| e.to_string())?;
    ensure!(
        e.status("u", "lefigaro.fr", t0 + Span::days(89)) == ConsentStatus::Granted,
        "not granted at +89d"
    );
    ensure!(
        e.status("u", "lefigaro.fr", t0 + Span::days(90) - Span(1)) == ConsentStatus::Granted,
        "not granted at +90d-1s"
    );
    ensure!(
        e.status("u", "lefigaro.fr", t0 + Span::days(90)) == ConsentStatus::Expired,
        "not expired at +90d"
    );

    let p = ConsentEngine::new();
    p.grant("v", "bild.de", t0).map_err(|e| e.to_string())?;
    p.pause_all("v", t0 + Span::days(1));
    let paused_from = t0 + Span::days(1);
    for probe in [Span(0), Span::days(30), Span::seconds(365 * 86_400 - 1)] {
        let at = paused_from + probe;
        ensure!(!p.is_issuable("v", "bild.de", at), "issuable during pause at {at}");
        ensure!(
            matches!(p.grant("v", "bild.de", at), Err(ConsentError::Paused { .. })),
            "grant during pause accepted at {at}"
        );
    }
    let lifted = paused_from + Span::days(365);
    ensure!(
        p.status("v", "bild.de", lifted) == ConsentStatus::Expired,
        "status after pause lapsed: {:?}",
        p.status("v", "bild.de", lifted)
    );
    p.grant("v", "bild.de", lifted).map_err(|e| e.to_string())?;
    ensure!(p.is_issuable("v", "bild.de", lifted), "no reset after 365 days");

    let client = HeadlessClient::new(origin.base_url());
    let (passes, failures) =
        common::gates::brute_force(services, &client, 0xacce97, GATE_SCENARIOS).await;
    ensure!(
        failures.is_empty(),
        "{} of {GATE_SCENARIOS} scenarios disagree with the gate predicate; first: {}",
        failures.len(),
        failures[0]
    );
    Ok(format!(
        "+89d granted, +90d expired, 365d pause mask and reset, grant-in-pause rejected; \
         {GATE_SCENARIOS} gate scenarios agree ({passes} with tokens)"
    ))
}

async fn scanner_robustness(origin: &RunningOrigin, baseline: &[ScanRecord]) -> Outcome {
    let list = common::population_list();
    let serial = common::scan_list(list.clone(), common::scan_config(origin, 1)).await;
    let wide = common::scan_list(list.clone(), common::scan_config(origin, 64)).await;
    let base_view = common::verdict_view(baseline);
    ensure!(common::verdict_view(&serial) == base_view, "concurrency 1 differs from 32");
    ensure!(common::verdict_view(&wide) == base_view, "concurrency 64 differs from 32");

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("fixture.ckpt");
    let mut config = common::scan_config(origin, 32);
    config.checkpoint = Some(path.clone());
    config.checkpoint_every = 50;
    {
        let mut stream = Box::pin(scanner::scan(list.clone(), config.clone()).map_err(|e| e.to_string())?);
        for _ in 0..list.len() / 2 {
            stream.next().await.unwrap().map_err(|e| e.to_string())?;
        }
    }
    let mut bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
    bytes.truncate(bytes.len() - 25);
    std::fs::write(&path, bytes).map_err(|e| e.to_string())?;
    let resumed = common::scan_list(list, config).await;
    ensure!(common::verdict_view(&resumed) == base_view, "resumed scan differs");

    let flagged: Vec<_> = baseline
        .iter()
        .filter(|r| r.signals().is_some_and(|s| s.premature_loader))
        .map(|r| r.domain.as_str())
        .collect();
    ensure!(flagged == ["actu.fr"], "premature-loader flags: {flagged:?}");
    Ok("concurrency 1 = 32 = 64; interrupted + torn checkpoint resumes identically; actu.fr flagged".into())
}

fn report_line(name: &str, outcome: &Outcome) -> bool {
    match outcome {
        Ok(detail) => {
            println!("PASS  {name}: {detail}");
            true
        }
        Err(reason) => {
            println!("FAIL  {name}: {reason}");
            false
        }
    }
}

fn main() -> ExitCode {
    let rt = tokio::runtime::Runtime::new().unwrap();
    let all_passed = rt.block_on(async {
        let (services, origin) = common::bundled_origin().await;
        let started = Instant::now();
        let records = common::scan_list(common::population_list(), common::scan_config(&origin, 32)).await;
        let elapsed = started.elapsed();

        let results = [
            ("table reproduction", table_reproduction(&records, elapsed)),
            ("appendix set equality", appendix_equality(&records)),
            ("prebid share", prebid_share(&records)),
            ("precheck golden bytes", precheck_golden(&origin).await),
            ("token property suite", token_properties()),
            ("consent lifecycle boundaries", consent_lifecycle(&origin, &services).await),
            ("scanner robustness", scanner_robustness(&origin, &records).await),
        ];
        println!();
        let mut ok = true;
        for (name, outcome) in &results {
            ok &= report_line(name, outcome);
        }
        let passed = results.iter().filter(|r| r.1.is_ok()).count();
        println!("\nacceptance: {passed}/{} criteria passed\n", results.len());
        origin.shutdown().await.unwrap();
        ok
    });
    if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
