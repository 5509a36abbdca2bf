//! Homepage markers: header bidding and a loader fetched before consent.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

static COMMENT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)<!--.*?-->").unwrap());
static SCRIPT_SRC: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"(?is)<script\b[^>]*?\bsrc\s*=\s*(?:"([^"]*)"|'([^']*)'|([^\s>]+))"#).unwrap()
});

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HomepageSignals {
    pub prebid: bool,
    pub premature_loader: bool,
}

/// Patterns that mark a header-bidding integration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrebidPatterns {
    /// Case-insensitive substrings of a script `src`.
    pub script_src: Vec<String>,
    /// Identifiers matched on word boundaries anywhere in the document.
    pub identifiers: Vec<String>,
}

impl Default for PrebidPatterns {
    fn default() -> Self {
        PrebidPatterns {
            script_src: vec!["prebid".into()],
            identifiers: vec!["pbjs".into()],
        }
    }
}

pub fn strip_comments(html: &str) -> std::borrow::Cow<'_, str> {
    COMMENT.replace_all(html, "")
}

fn script_sources(html: &str) -> impl Iterator<Item = &str> {
    SCRIPT_SRC.captures_iter(html).filter_map(|c| {
        c.get(1)
            .or_else(|| c.get(2))
            .or_else(|| c.get(3))
            .map(|m| m.as_str())
    })
}

pub fn detect_prebid(homepage: &[u8], patterns: &PrebidPatterns) -> bool {
    let text = String::from_utf8_lossy(homepage);
    let html = strip_comments(&text);
    let src_hit = script_sources(&html).any(|src| {
        let src = src.to_ascii_lowercase();
        patterns
            .script_src
            .iter()
            .any(|p| src.contains(&p.to_ascii_lowercase()))
    });
    src_hit
        || patterns.identifiers.iter().any(|ident| {
            Regex::new(&format!(r"\b{}\b", regex::escape(ident)))
                .map(|re| re.is_match(&html))
                .unwrap_or(false)
        })
}

/// True when the initial document pulls `utiqLoader.js` from a script tag,
/// i.e. before any consent interaction could have happened.
pub fn detect_premature_loader(homepage: &[u8]) -> bool {
    let text = String::from_utf8_lossy(homepage);
    let html = strip_comments(&text);
    let found = script_sources(&html).any(|src| src.to_ascii_lowercase().contains("utiqloader.js"));
    found
}

pub fn homepage_signals(homepage: &[u8], patterns: &PrebidPatterns) -> HomepageSignals {
    HomepageSignals {
        prebid: detect_prebid(homepage, patterns),
        premature_loader: detect_premature_loader(homepage),
    }
}
