//! Tranco-format ranked domain lists (`rank,domain` per line).

use std::collections::HashSet;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DomainRecord {
    pub rank: u32,
    pub domain: String,
}

#[derive(Debug, thiserror::Error)]
pub enum ListError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("reading domain list: {0}")]
    Io(#[from] std::io::Error),
}

fn parse_err(line: usize, message: impl Into<String>) -> ListError {
    ListError::Parse {
        line,
        message: message.into(),
    }
}

/// Parses records in file order, stopping after `limit` records.
///
/// Blank lines are skipped; domains are lowercased. Duplicate domains or
/// ranks are rejected with the offending 1-based line number.
pub fn load_domain_list<R: BufRead>(
    source: R,
    limit: Option<usize>,
) -> Result<Vec<DomainRecord>, ListError> {
    let mut out = Vec::new();
    let mut domains = HashSet::new();
    let mut ranks = HashSet::new();
    for (idx, line) in source.lines().enumerate() {
        if limit.is_some_and(|n| out.len() >= n) {
            break;
        }
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (rank, domain) = line
            .split_once(',')
            .ok_or_else(|| parse_err(lineno, "expected `rank,domain`"))?;
        let rank: u32 = rank
            .trim()
            .parse()
            .map_err(|_| parse_err(lineno, format!("rank {rank:?} is not a positive integer")))?;
        if rank == 0 {
            return Err(parse_err(lineno, "rank must be positive"));
        }
        let domain = domain.trim().trim_end_matches('.').to_ascii_lowercase();
        if domain.is_empty() || domain.contains(',') || domain.contains(char::is_whitespace) {
            return Err(parse_err(lineno, format!("invalid domain {domain:?}")));
        }
        if !ranks.insert(rank) {
            return Err(parse_err(lineno, format!("duplicate rank {rank}")));
        }
        if !domains.insert(domain.clone()) {
            return Err(parse_err(lineno, format!("duplicate domain {domain}")));
        }
        out.push(DomainRecord { rank, domain });
    }
    Ok(out)
}
