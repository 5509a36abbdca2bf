//! Renders the adoption table and listing from a scan file.
//!
//! ```text
//! utiq-lab scan --list crates/core/fixtures/population.csv \
//!     --origin-map crates/core/fixtures/origin-map.json --homepage-signals --output scan.jsonl
//! cargo run --example report_tables -- scan.jsonl
//! ```

use std::path::PathBuf;

use utiq_lab::report::{
    aggregate, appendix, prebid_share, read_scan_records, render_appendix, render_share,
    render_table, CountryMap, ReportFormat,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = PathBuf::from(std::env::args().nth(1).ok_or("usage: report_tables <scan.jsonl>")?);
    let records = read_scan_records(&path)?;
    let map = CountryMap::default();
    let verdicts: Vec<_> = records.iter().map(|r| r.verdict()).collect();

    let rows = aggregate(&verdicts, &map);
    print!("{}", render_table(&rows, ReportFormat::Markdown));
    println!();
    print!("{}", render_table(&rows, ReportFormat::Csv));
    println!();
    println!(
        "{}",
        render_share("Prebid.js", &prebid_share(&records), ReportFormat::Markdown)
    );
    println!();
    print!("{}", render_appendix(&appendix(&records, &map), ReportFormat::Markdown));
    Ok(())
}
