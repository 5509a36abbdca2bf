//! Per-country adoption tables and the ranked adopter listing.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::country::Country;
use crate::fixture;
use crate::scanner::{ScanRecord, Verdict};

pub const NO_PERCENTAGE: &str = "n/a";

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("unknown format {0:?} (expected csv, json or markdown)")]
    UsageError(String),
    #[error("reading {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error("parsing {path}: {message}")]
    Parse {
        path: std::path::PathBuf,
        message: String,
    },
}

/// Explicit domain assignments with a public-suffix fallback.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountryMap {
    #[serde(default)]
    pub explicit: BTreeMap<String, Country>,
    #[serde(default = "yes")]
    pub tld_fallback: bool,
}

fn yes() -> bool {
    true
}

impl Default for CountryMap {
    /// Ships the assignments for adopters whose suffix does not reveal their market.
    fn default() -> Self {
        CountryMap {
            explicit: fixture::adopter_country_overrides(),
            tld_fallback: true,
        }
    }
}

impl CountryMap {
    pub fn load(path: &Path) -> Result<Self, ReportError> {
        let text = std::fs::read_to_string(path).map_err(|source| ReportError::Io {
            path: path.into(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| ReportError::Parse {
            path: path.into(),
            message: e.to_string(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Attribution {
    Country(Country),
    Unattributed,
}

impl Attribution {
    pub fn label(self) -> &'static str {
        match self {
            Attribution::Country(c) => c.as_str(),
            Attribution::Unattributed => "Unattributed",
        }
    }
}

pub fn attribute_country(domain: &str, map: &CountryMap) -> Attribution {
    if let Some(c) = map.explicit.get(domain) {
        return Attribution::Country(*c);
    }
    if map.tld_fallback {
        if let Some(c) = Country::from_tld(domain) {
            return Attribution::Country(c);
        }
    }
    Attribution::Unattributed
}

/// `100 * num / den` rounded half-up to hundredths, or `None` for `den == 0`.
pub fn percentage(num: u64, den: u64) -> Option<String> {
    if den == 0 {
        return None;
    }
    let hundredths = (20_000 * num + den) / (2 * den);
    Some(format!("{}.{:02}", hundredths / 100, hundredths % 100))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdoptionRow {
    pub label: String,
    pub websites: u64,
    pub compliant: u64,
}

impl AdoptionRow {
    pub fn percentage(&self) -> Option<String> {
        percentage(self.compliant, self.websites)
    }
}

/// A Total row, one row per launch country, and an Unattributed row when
/// any domain could not be placed.
pub fn aggregate<'a>(
    verdicts: impl IntoIterator<Item = &'a Verdict>,
    map: &CountryMap,
) -> Vec<AdoptionRow> {
    let mut counts: BTreeMap<Attribution, (u64, u64)> = Country::ALL
        .iter()
        .map(|c| (Attribution::Country(*c), (0, 0)))
        .collect();
    let (mut total, mut compliant) = (0, 0);
    for v in verdicts {
        let slot = counts
            .entry(attribute_country(&v.domain, map))
            .or_default();
        slot.0 += 1;
        total += 1;
        if v.compliant {
            slot.1 += 1;
            compliant += 1;
        }
    }
    let mut rows = vec![AdoptionRow {
        label: "Total".into(),
        websites: total,
        compliant,
    }];
    rows.extend(counts.into_iter().map(|(attr, (w, c))| AdoptionRow {
        label: attr.label().into(),
        websites: w,
        compliant: c,
    }));
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Share {
    pub count: u64,
    pub total: u64,
}

impl Share {
    pub fn percentage(&self) -> Option<String> {
        percentage(self.count, self.total)
    }
}

/// Compliant domains carrying a header-bidding signal, over all compliant domains.
pub fn prebid_share<'a>(records: impl IntoIterator<Item = &'a ScanRecord>) -> Share {
    let mut share = Share { count: 0, total: 0 };
    for r in records.into_iter().filter(|r| r.compliant) {
        share.total += 1;
        if r.signals().is_some_and(|s| s.prebid) {
            share.count += 1;
        }
    }
    share
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppendixRow {
    pub rank: u32,
    pub domain: String,
    pub country: String,
}

/// Compliant domains in rank order.
pub fn appendix<'a>(
    records: impl IntoIterator<Item = &'a ScanRecord>,
    map: &CountryMap,
) -> Vec<AppendixRow> {
    let mut rows: Vec<_> = records
        .into_iter()
        .filter(|r| r.compliant)
        .map(|r| AppendixRow {
            rank: r.rank,
            domain: r.domain.clone(),
            country: attribute_country(&r.domain, map).label().into(),
        })
        .collect();
    rows.sort_by_key(|r| r.rank);
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(ReportError::UsageError(other.to_string())),
        }
    }
}

pub fn render_table(rows: &[AdoptionRow], format: ReportFormat) -> String {
    let pct = |r: &AdoptionRow| r.percentage();
    match format {
        ReportFormat::Csv => {
            let mut out = String::from("country,websites,compliant,percentage\n");
            for r in rows {
                let p = pct(r).unwrap_or_else(|| NO_PERCENTAGE.into());
                let _ = writeln!(out, "{},{},{},{}", r.label, r.websites, r.compliant, p);
            }
            out
        }
        ReportFormat::Json => {
            let items: Vec<_> = rows
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "country": r.label,
                        "websites": r.websites,
                        "compliant": r.compliant,
                        "percentage": pct(r),
                    })
                })
                .collect();
            let mut out = serde_json::to_string_pretty(&items).unwrap();
            out.push('\n');
            out
        }
        ReportFormat::Markdown => {
            let mut out = String::from(
                "| Country | Websites | Utiq compliant | Percentage |\n|---|---:|---:|---:|\n",
            );
            for r in rows {
                let p = pct(r)
                    .map(|p| format!("{p}%"))
                    .unwrap_or_else(|| NO_PERCENTAGE.into());
                let _ = writeln!(
                    out,
                    "| **{}** | {} | {} | {} |",
                    r.label, r.websites, r.compliant, p
                );
            }
            out
        }
    }
}

pub fn render_share(label: &str, share: &Share, format: ReportFormat) -> String {
    let p = share.percentage();
    match format {
        ReportFormat::Csv => format!(
            "signal,count,total,percentage\n{label},{},{},{}\n",
            share.count,
            share.total,
            p.unwrap_or_else(|| NO_PERCENTAGE.into())
        ),
        ReportFormat::Json => {
            let mut out = serde_json::to_string_pretty(&serde_json::json!({
                "signal": label,
                "count": share.count,
                "total": share.total,
                "percentage": p,
            }))
            .unwrap();
            out.push('\n');
            out
        }
        ReportFormat::Markdown => format!(
            "{label}: {} of {} compliant websites ({})\n",
            share.count,
            share.total,
            p.map(|p| format!("{p}%"))
                .unwrap_or_else(|| NO_PERCENTAGE.into())
        ),
    }
}

pub fn render_appendix(rows: &[AppendixRow], format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => {
            let mut out = String::from("rank,domain,country\n");
            for r in rows {
                let _ = writeln!(out, "{},{},{}", r.rank, r.domain, r.country);
            }
            out
        }
        ReportFormat::Json => {
            let mut out = serde_json::to_string_pretty(rows).unwrap();
            out.push('\n');
            out
        }
        ReportFormat::Markdown => {
            let mut out = String::from("| Tranco rank | Domain | Country |\n|---:|---|---|\n");
            for r in rows {
                let _ = writeln!(out, "| {} | {} | {} |", r.rank, r.domain, r.country);
            }
            out
        }
    }
}

/// Reads scanner output (one JSON record per line).
pub fn read_scan_records(path: &Path) -> Result<Vec<ScanRecord>, ReportError> {
    let text = std::fs::read_to_string(path).map_err(|source| ReportError::Io {
        path: path.into(),
        source,
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| ReportError::Parse {
                path: path.into(),
                message: format!("line {}: {e}", i + 1),
            })
        })
        .collect()
}
