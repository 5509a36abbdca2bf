//! Static bodies served by the simulated origin.

use super::registry::PublisherEntry;

pub const LOADER_SCRIPT: &[u8] = include_bytes!("../../assets/utiqLoader.js");

/// Homepage markup for a publisher.
///
/// Enabled publishers inject the loader from a consent callback; only a
/// misconfigured publisher references it from a plain script tag.
pub fn homepage(entry: &PublisherEntry) -> String {
    let d = &entry.domain;
    let mut head = String::new();
    head.push_str(&format!(
        "    <meta charset=\"utf-8\">\n    <title>{d}</title>\n    <link rel=\"stylesheet\" href=\"/static/site.css\">\n"
    ));
    if entry.premature_loader {
        head.push_str(&format!(
            "    <script src=\"https://utiq.{d}/utiqLoader.js\" async></script>\n"
        ));
    }
    if entry.prebid_enabled {
        head.push_str(&format!(
            "    <script async src=\"https://cdn.{d}/js/prebid8.31.0.js\"></script>\n    <script>\n      window.pbjs = window.pbjs || {{}};\n      pbjs.que = pbjs.que || [];\n    </script>\n"
        ));
    } else if entry.utiq_enabled {
        head.push_str("    <!-- header bidding (prebid) retired; direct deals only -->\n");
    }
    if entry.utiq_enabled && !entry.premature_loader {
        head.push_str(&format!(
            "    <!-- loader pulled from https://utiq.{d}/utiqLoader.js once the visitor accepts -->\n    <script>\n      window.__cmp = window.__cmp || [];\n      __cmp.push([\"onAcceptAll\", function () {{\n        var s = document.createElement(\"script\");\n        s.src = \"https://utiq.{d}/utiqLoader.js\";\n        document.head.appendChild(s);\n      }}]);\n    </script>\n"
        ));
    }
    format!(
        "<!doctype html>\n<html>\n  <head>\n{head}  </head>\n  <body>\n    <main id=\"content\"><h1>{d}</h1></main>\n  </body>\n</html>\n"
    )
}
