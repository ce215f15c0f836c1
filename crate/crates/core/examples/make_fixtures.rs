//! Regenerates the bundled fixtures under `fixtures/` from the seeded
//! simulator. Run from the workspace root:
//!
//!     cargo run -p dhaka-weather --example make_fixtures

use chrono::NaiveDate;
use dhaka_weather::ingest::{synth, write_power_csv, Feature};
use dhaka_weather::seed;
use rand::seq::index;

fn main() -> std::io::Result<()> {
    let start = NaiveDate::from_ymd_opt(2021, 1, 1).unwrap();
    let end = NaiveDate::from_ymd_opt(2021, 12, 31).unwrap();
    let year = synth::simulate_dhaka(start, end, 2021);
    std::fs::create_dir_all("fixtures")?;
    std::fs::write("fixtures/dhaka_2021.csv", write_power_csv(&year))?;

    let mut rows = index::sample(&mut seed::rng(7), year.len(), 3).into_vec();
    rows.sort_unstable();
    let mut gaps = year.clone();
    for (row, feature) in rows.iter().zip([Feature::Rh2m, Feature::PrecTot, Feature::Ws10m]) {
        gaps = synth::inject_gaps(&gaps, &[*row], feature);
    }
    std::fs::write("fixtures/dhaka_2021_gaps.csv", write_power_csv(&gaps))?;
    println!("gap rows: {rows:?}");
    Ok(())
}
