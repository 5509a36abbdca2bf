//! The bundled measurement population.
//!
//! 9,316 ranked domains: 9,280 in the three launch countries and 36 on
//! generic suffixes with no country. The 83 known adopters sit at their
//! real Tranco ranks; everything else is deterministic filler generated
//! from a fixed seed.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::country::Country;
use crate::services::registry::{PublisherEntry, PublisherRegistry};

use Country::{France as FR, Germany as DE, Spain as ES};

/// Known adopters with their Tranco rank and market.
pub const ADOPTERS: &[(u32, &str, Country)] = &[
    (786, "lefigaro.fr", FR),
    (841, "bild.de", DE),
    (936, "elmundo.es", ES),
    (1018, "marca.com", ES),
    (1065, "ouest-france.fr", FR),
    (1259, "merkur.de", DE),
    (1339, "actu.fr", FR),
    (1506, "marmiton.org", FR),
    (2385, "welt.de", DE),
    (2888, "faz.net", DE),
    (2956, "focus.de", DE),
    (3328, "abc.es", ES),
    (4454, "eldiario.es", ES),
    (4772, "elperiodico.com", ES),
    (5316, "sudouest.fr", FR),
    (5547, "fr.de", DE),
    (5693, "sport.es", ES),
    (6396, "elcorreo.com", ES),
    (6976, "tz.de", DE),
    (7059, "hna.de", DE),
    (7836, "voici.fr", FR),
    (7850, "lachainemeteo.com", FR),
    (9058, "programme.tv", FR),
    (10490, "expansion.com", ES),
    (11062, "wiwo.de", DE),
    (12455, "utopia.de", DE),
    (13732, "farodevigo.es", ES),
    (14685, "mopo.de", DE),
    (14992, "lasprovincias.es", ES),
    (15197, "lne.es", ES),
    (15302, "diariovasco.com", ES),
    (15409, "levante-emv.com", ES),
    (16089, "elcomercio.es", ES),
    (25772, "aufeminin.com", FR),
    (29822, "ideal.es", ES),
    (30343, "laverdad.es", ES),
    (30384, "diariosur.es", ES),
    (30903, "eldiariomontanes.es", ES),
    (33551, "wa.de", DE),
    (34097, "caminteresse.fr", FR),
    (34169, "fnp.de", DE),
    (35965, "epe.es", ES),
    (36443, "diariodemallorca.es", ES),
    (36637, "kreiszeitung.de", DE),
    (36949, "hoy.es", ES),
    (37321, "elnortedecastilla.es", ES),
    (38758, "informacion.es", ES),
    (39119, "autoplus.fr", FR),
    (39152, "elperiodicodearagon.com", ES),
    (40657, "promiflash.de", DE),
    (41891, "laopiniondemurcia.es", ES),
    (42416, "eldia.es", ES),
    (42919, "laprovincia.es", ES),
    (43756, "laopiniondemalaga.es", ES),
    (45457, "larioja.com", ES),
    (46415, "diariocordoba.com", ES),
    (47312, "telva.com", ES),
    (47428, "elcorreogallego.es", ES),
    (47496, "elperiodicoextremadura.com", ES),
    (47714, "ingame.de", DE),
    (47807, "op-online.de", DE),
    (49123, "charentelibre.fr", FR),
    (49246, "laopinioncoruna.es", ES),
    (50017, "diariodeibiza.es", ES),
    (50195, "elperiodicomediterraneo.com", ES),
    (51510, "laopiniondezamora.es", ES),
    (53081, "superdeporte.es", ES),
    (54247, "maison-travaux.fr", FR),
    (55751, "diaridegirona.cat", ES),
    (55823, "larepubliquedespyrenees.fr", FR),
    (56452, "leonoticias.com", ES),
    (60603, "come-on.de", DE),
    (64445, "buzzfeed.de", DE),
    (65374, "regio7.cat", ES),
    (65584, "soester-anzeiger.de", DE),
    (71058, "eatbetter.de", DE),
    (71971, "bw24.de", DE),
    (73728, "landtiere.de", DE),
    (73831, "24vita.de", DE),
    (82417, "einfach-tasty.de", DE),
    (90871, "lavozdigital.es", ES),
    (95878, "atf-tagmanager.de", DE),
    (97222, "24auto.de", DE),
];

/// Adopters that do not embed a header-bidding wrapper (17 of 83).
pub const ADOPTERS_WITHOUT_PREBID: &[&str] = &[
    "marmiton.org",
    "voici.fr",
    "lachainemeteo.com",
    "programme.tv",
    "utopia.de",
    "aufeminin.com",
    "caminteresse.fr",
    "autoplus.fr",
    "promiflash.de",
    "telva.com",
    "maison-travaux.fr",
    "buzzfeed.de",
    "eatbetter.de",
    "landtiere.de",
    "24vita.de",
    "einfach-tasty.de",
    "atf-tagmanager.de",
];

/// Adopter whose homepage pulls the loader before any consent interaction.
pub const PREMATURE_LOADER_DOMAIN: &str = "actu.fr";

/// Websites per country in the measured subset.
pub const POPULATION_PER_COUNTRY: [(Country, usize); 3] = [(FR, 2048), (DE, 3591), (ES, 3641)];

/// Domains in the population whose suffix names no launch country.
pub const POPULATION_UNATTRIBUTED: usize = 36;
pub const POPULATION_TOTAL: usize = 9316;

pub const POPULATION_SEED: u64 = 0x7574_6971_2024_0115;
const TOP_LIST_SIZE: u32 = 100_000;
const FILLER_PREBID_RATE: f64 = 0.2;

const SYLLABLES: &[&str] = &[
    "ma", "ri", "lo", "ta", "ne", "vi", "so", "la", "re", "mo", "ca", "de", "to", "na", "le", "ro",
    "sa", "ve", "co", "mi", "bo", "fe", "gu", "ze", "ha", "ku", "pe", "no", "li", "du", "ga", "te",
];
const STEMS: &[&str] = &[
    "zeitung", "journal", "noticias", "diario", "blog", "shop", "info", "news", "cuisine", "auto",
    "sport", "meteo", "reise", "immo", "mode", "tech", "radio", "club", "voyage", "casa",
];

/// One ranked row of the population.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PopulationEntry {
    pub rank: u32,
    pub publisher: PublisherEntry,
}

#[derive(Debug, Clone)]
pub struct Population {
    pub entries: Vec<PopulationEntry>,
}

impl Population {
    /// The bundled 9,316-domain population.
    pub fn bundled() -> Self {
        Self::generate(POPULATION_SEED)
    }

    pub fn generate(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut entries = Vec::new();
        let mut taken_names: HashSet<String> = HashSet::new();
        let mut taken_ranks: HashSet<u32> = HashSet::new();

        for &(rank, domain, country) in ADOPTERS {
            taken_names.insert(domain.to_string());
            taken_ranks.insert(rank);
            entries.push(PopulationEntry {
                rank,
                publisher: PublisherEntry {
                    domain: domain.to_string(),
                    country: Some(country),
                    utiq_enabled: true,
                    prebid_enabled: !ADOPTERS_WITHOUT_PREBID.contains(&domain),
                    premature_loader: domain == PREMATURE_LOADER_DOMAIN,
                },
            });
        }

        let filler_total = POPULATION_TOTAL - ADOPTERS.len();
        let mut ranks: Vec<u32> = (1..=TOP_LIST_SIZE)
            .filter(|r| !taken_ranks.contains(r))
            .collect();
        ranks.shuffle(&mut rng);
        ranks.truncate(filler_total);

        let mut countries = Vec::with_capacity(filler_total);
        for (country, total) in POPULATION_PER_COUNTRY {
            let adopters = ADOPTERS.iter().filter(|a| a.2 == country).count();
            countries.extend(std::iter::repeat(Some(country)).take(total - adopters));
        }
        countries.extend(std::iter::repeat(None).take(POPULATION_UNATTRIBUTED));
        debug_assert_eq!(countries.len(), filler_total);
        countries.shuffle(&mut rng);

        for (rank, country) in ranks.into_iter().zip(countries) {
            let domain = loop {
                let candidate = filler_name(&mut rng, country);
                if taken_names.insert(candidate.clone()) {
                    break candidate;
                }
            };
            entries.push(PopulationEntry {
                rank,
                publisher: PublisherEntry {
                    domain,
                    country,
                    utiq_enabled: false,
                    prebid_enabled: rng.gen_bool(FILLER_PREBID_RATE),
                    premature_loader: false,
                },
            });
        }

        entries.sort_by_key(|e| e.rank);
        Population { entries }
    }

    pub fn registry(&self) -> PublisherRegistry {
        PublisherRegistry::new(self.entries.iter().map(|e| e.publisher.clone()))
            .expect("generated population has unique domains")
    }

    /// Tranco-style `rank,domain` lines.
    pub fn to_tranco_csv(&self) -> String {
        let mut out = String::with_capacity(self.entries.len() * 24);
        for e in &self.entries {
            out.push_str(&format!("{},{}\n", e.rank, e.publisher.domain));
        }
        out
    }

    pub fn adopters(&self) -> BTreeSet<&str> {
        self.entries
            .iter()
            .filter(|e| e.publisher.utiq_enabled)
            .map(|e| e.publisher.domain.as_str())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Explicit assignments for adopters whose suffix does not reveal their market.
pub fn adopter_country_overrides() -> BTreeMap<String, Country> {
    ADOPTERS
        .iter()
        .filter(|(_, d, c)| Country::from_tld(d) != Some(*c))
        .map(|(_, d, c)| (d.to_string(), *c))
        .collect()
}

fn filler_name(rng: &mut ChaCha8Rng, country: Option<Country>) -> String {
    let tld = match country {
        Some(FR) => "fr",
        Some(DE) => "de",
        Some(ES) if rng.gen_bool(0.05) => "cat",
        Some(ES) => "es",
        None => *["com", "eu", "net", "info"].choose(rng).unwrap(),
    };
    let mut name = String::new();
    for _ in 0..rng.gen_range(2..=3) {
        name.push_str(SYLLABLES.choose(rng).unwrap());
    }
    if rng.gen_bool(0.5) {
        if rng.gen_bool(0.3) {
            name.push('-');
        }
        name.push_str(STEMS.choose(rng).unwrap());
    }
    if rng.gen_bool(0.25) {
        name.push_str(&rng.gen_range(1..100).to_string());
    }
    format!("{name}.{tld}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adopter_table_shape() {
        assert_eq!(ADOPTERS.len(), 83);
        let per = |c| ADOPTERS.iter().filter(|a| a.2 == c).count();
        assert_eq!((per(FR), per(DE), per(ES)), (14, 27, 42));
        assert!(ADOPTERS.windows(2).all(|w| w[0].0 < w[1].0));
        assert_eq!(ADOPTERS_WITHOUT_PREBID.len(), 17);
        for d in ADOPTERS_WITHOUT_PREBID {
            assert!(ADOPTERS.iter().any(|a| a.1 == *d), "{d}");
        }
    }

    #[test]
    fn bundled_population_counts() {
        let p = Population::bundled();
        assert_eq!(p.len(), 9316);
        for (country, n) in POPULATION_PER_COUNTRY {
            assert_eq!(
                p.entries.iter().filter(|e| e.publisher.country == Some(country)).count(),
                n
            );
        }
        assert_eq!(
            p.entries.iter().filter(|e| e.publisher.country.is_none()).count(),
            POPULATION_UNATTRIBUTED
        );
        assert_eq!(p.adopters().len(), 83);
        let prebid_adopters = p
            .entries
            .iter()
            .filter(|e| e.publisher.utiq_enabled && e.publisher.prebid_enabled)
            .count();
        assert_eq!(prebid_adopters, 66);
        assert!(p.entries.windows(2).all(|w| w[0].rank < w[1].rank));
    }

    #[test]
    fn fillers_are_attributable_by_suffix() {
        let p = Population::bundled();
        for e in p.entries.iter().filter(|e| !e.publisher.utiq_enabled) {
            assert_eq!(Country::from_tld(&e.publisher.domain), e.publisher.country);
            assert!(!e.publisher.domain.contains("utiq"));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(
            Population::bundled().to_tranco_csv(),
            Population::bundled().to_tranco_csv()
        );
    }

    #[test]
    fn overrides_cover_non_suffix_adopters() {
        let o = adopter_country_overrides();
        assert_eq!(o.get("marca.com"), Some(&ES));
        assert_eq!(o.get("programme.tv"), Some(&FR));
        assert_eq!(o.get("faz.net"), Some(&DE));
        assert!(!o.contains_key("lefigaro.fr"));
    }
}
