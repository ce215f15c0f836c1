#![allow(dead_code)]

use std::path::PathBuf;

use chrono::NaiveDate;
use dhaka_weather::ingest::{parse_power_csv, WeatherTable};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap()
}

pub fn fixture_year() -> WeatherTable {
    parse_power_csv(&fixture_text("dhaka_2021.csv")).unwrap()
}

pub fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

/// Scaled precipitation-target features and labels of the fixture year.
pub fn fixture_precip() -> (ndarray::Array2<f64>, Vec<usize>, usize) {
    use dhaka_weather::preprocess::{apply_minmax, discretize_target, fit_minmax, select_features, Target};
    let t = fixture_year();
    let (x, _) = select_features(&t, Target::Precipitation);
    let x = apply_minmax(&fit_minmax(x.view()).unwrap(), x.view()).unwrap();
    let values: Vec<f64> = t.records().iter().map(|r| r.prectot()).collect();
    let (y, names) = discretize_target(&values, &Target::Precipitation.default_scheme(), None).unwrap();
    (x, y, names.len())
}
