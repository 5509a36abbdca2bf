//! Which ISPs participate in the identification scheme.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::country::Country;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EligibilityRow {
    pub country: Country,
    pub isp_id: String,
}

/// Set of (country, ISP) pairs whose subscribers can be identified.
///
/// The same ISP may appear under several countries (Orange operates in
/// both France and Spain); eligibility is keyed on the ISP id alone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EligibilityTable {
    rows: BTreeSet<EligibilityRow>,
}

/// The participating operators per launch country.
pub const DEFAULT_ISPS: &[(Country, &str)] = &[
    (Country::France, "Orange"),
    (Country::France, "Bouygues Telecom"),
    (Country::France, "SFR"),
    (Country::Germany, "Deutsche Telekom"),
    (Country::Germany, "Vodafone"),
    (Country::Germany, "Congstar"),
    (Country::Germany, "Fraenk"),
    (Country::Spain, "Movistar"),
    (Country::Spain, "Orange"),
    (Country::Spain, "Jazztel"),
    (Country::Spain, "Simyo"),
];

impl Default for EligibilityTable {
    fn default() -> Self {
        EligibilityTable::from_rows(DEFAULT_ISPS.iter().map(|(c, isp)| EligibilityRow {
            country: *c,
            isp_id: (*isp).to_string(),
        }))
    }
}

impl EligibilityTable {
    pub fn from_rows(rows: impl IntoIterator<Item = EligibilityRow>) -> Self {
        EligibilityTable {
            rows: rows.into_iter().collect(),
        }
    }

    pub fn is_eligible(&self, isp_id: &str) -> bool {
        self.rows.iter().any(|r| r.isp_id == isp_id)
    }

    pub fn countries_of<'a>(&'a self, isp_id: &'a str) -> impl Iterator<Item = Country> + 'a {
        self.rows
            .iter()
            .filter(move |r| r.isp_id == isp_id)
            .map(|r| r.country)
    }

    /// Distinct ISP ids, sorted.
    pub fn isp_ids(&self) -> BTreeSet<&str> {
        self.rows.iter().map(|r| r.isp_id.as_str()).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &EligibilityRow> {
        self.rows.iter()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_table_has_eleven_operator_rows() {
        let t = EligibilityTable::default();
        assert_eq!(t.len(), 11);
        assert_eq!(t.isp_ids().len(), 10);
        let orange: Vec<_> = t.countries_of("Orange").collect();
        assert_eq!(orange, vec![Country::France, Country::Spain]);
    }

    #[test]
    fn membership() {
        let t = EligibilityTable::default();
        assert!(t.is_eligible("Movistar"));
        assert!(t.is_eligible("Vodafone"));
        assert!(!t.is_eligible("ComcastUS"));
        assert!(!t.is_eligible("movistar"));
    }
}
