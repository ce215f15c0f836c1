//! Daily point data from the NASA POWER service: download, CSV parsing,
//! missing-value cleaning, and a seeded climatology simulator used for the
//! bundled offline fixtures.

mod clean;
mod csv;
mod power;
pub mod synth;

pub use clean::{clean_missing, CleanError, CleaningPolicy};
pub use csv::{parse_power_csv, write_power_csv, ParseError};
pub use power::{
    fetch_power_daily, FetchError, FixtureTransport, HttpResponse, HttpTransport, PowerRequest,
    RetryPolicy, UreqTransport, POWER_DAILY_ENDPOINT,
};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

/// Value POWER writes for missing source data.
pub const MISSING_SENTINEL: f64 = -999.0;

/// Station coordinates used throughout the study (Dhaka).
pub const DHAKA_LATITUDE: f64 = 23.8103;
pub const DHAKA_LONGITUDE: f64 = 90.4125;

/// The sixteen daily features, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Feature {
    T2m,
    T2mDew,
    T2mWet,
    Ts,
    T2mRange,
    T2mMax,
    T2mMin,
    Qv2m,
    Rh2m,
    PrecTot,
    Ps,
    Ws10mRange,
    Ws10m,
    Wd10m,
    Ws10mMax,
    Ws10mMin,
}

impl Feature {
    pub const ALL: [Feature; 16] = [
        Feature::T2m,
        Feature::T2mDew,
        Feature::T2mWet,
        Feature::Ts,
        Feature::T2mRange,
        Feature::T2mMax,
        Feature::T2mMin,
        Feature::Qv2m,
        Feature::Rh2m,
        Feature::PrecTot,
        Feature::Ps,
        Feature::Ws10mRange,
        Feature::Ws10m,
        Feature::Wd10m,
        Feature::Ws10mMax,
        Feature::Ws10mMin,
    ];

    /// Internal column name.
    pub fn name(self) -> &'static str {
        match self {
            Feature::T2m => "T2M",
            Feature::T2mDew => "T2MDEW",
            Feature::T2mWet => "T2MWET",
            Feature::Ts => "TS",
            Feature::T2mRange => "T2M_RANGE",
            Feature::T2mMax => "T2M_MAX",
            Feature::T2mMin => "T2M_MIN",
            Feature::Qv2m => "QV2M",
            Feature::Rh2m => "RH2M",
            Feature::PrecTot => "PRECTOT",
            Feature::Ps => "PS",
            Feature::Ws10mRange => "WS10M_RANGE",
            Feature::Ws10m => "WS10M",
            Feature::Wd10m => "WD10M",
            Feature::Ws10mMax => "WS10M_MAX",
            Feature::Ws10mMin => "WS10M_MIN",
        }
    }

    /// Parameter name understood by the POWER API. Precipitation was renamed
    /// to its bias-corrected form `PRECTOTCORR`.
    pub fn power_parameter(self) -> &'static str {
        match self {
            Feature::PrecTot => "PRECTOTCORR",
            other => other.name(),
        }
    }

    pub fn from_column(name: &str) -> Option<Feature> {
        let name = name.trim();
        if name == "PRECTOTCORR" {
            return Some(Feature::PrecTot);
        }
        Feature::ALL.iter().copied().find(|f| f.name() == name)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn unit(self) -> &'static str {
        match self {
            Feature::T2m
            | Feature::T2mDew
            | Feature::T2mWet
            | Feature::Ts
            | Feature::T2mRange
            | Feature::T2mMax
            | Feature::T2mMin => "C",
            Feature::Qv2m => "g/kg",
            Feature::Rh2m => "%",
            Feature::PrecTot => "mm/day",
            Feature::Ps => "kPa",
            Feature::Ws10mRange | Feature::Ws10m | Feature::Ws10mMax | Feature::Ws10mMin => "m/s",
            Feature::Wd10m => "Degrees",
        }
    }
}

impl std::fmt::Display for Feature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One day of observations. Values are indexed by [`Feature`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherRecord {
    pub date: NaiveDate,
    values: [f64; 16],
}

impl WeatherRecord {
    pub fn new(date: NaiveDate, values: [f64; 16]) -> Self {
        Self { date, values }
    }

    pub fn get(&self, feature: Feature) -> f64 {
        self.values[feature.index()]
    }

    pub fn set(&mut self, feature: Feature, value: f64) {
        self.values[feature.index()] = value;
    }

    pub fn values(&self) -> &[f64; 16] {
        &self.values
    }

    pub fn t2m(&self) -> f64 {
        self.get(Feature::T2m)
    }

    pub fn prectot(&self) -> f64 {
        self.get(Feature::PrecTot)
    }

    pub fn has_missing(&self) -> bool {
        self.values.contains(&MISSING_SENTINEL)
    }

    /// Checks the physical consistency rules a cleaned record must satisfy.
    /// Returns a description of the first violated rule.
    pub fn check_invariants(&self) -> Result<(), String> {
        use Feature::*;
        if let Some(f) = Feature::ALL.iter().find(|f| self.get(**f) == MISSING_SENTINEL) {
            return Err(format!("{f} holds the missing-value sentinel"));
        }
        if let Some(f) = Feature::ALL.iter().find(|f| !self.get(**f).is_finite()) {
            return Err(format!("{f} is not finite"));
        }
        let ordered = |lo: Feature, mid: Feature, hi: Feature| -> Result<(), String> {
            if self.get(lo) <= self.get(mid) && self.get(mid) <= self.get(hi) {
                Ok(())
            } else {
                Err(format!(
                    "expected {lo} <= {mid} <= {hi}, got {} / {} / {}",
                    self.get(lo),
                    self.get(mid),
                    self.get(hi)
                ))
            }
        };
        ordered(T2mMin, T2m, T2mMax)?;
        ordered(Ws10mMin, Ws10m, Ws10mMax)?;
        if self.get(PrecTot) < 0.0 {
            return Err(format!("negative precipitation {}", self.get(PrecTot)));
        }
        if !(0.0..=100.0).contains(&self.get(Rh2m)) {
            return Err(format!("relative humidity {} outside [0, 100]", self.get(Rh2m)));
        }
        if !(0.0..360.0).contains(&self.get(Wd10m)) {
            return Err(format!("wind direction {} outside [0, 360)", self.get(Wd10m)));
        }
        Ok(())
    }
}

/// Date-ordered daily records for one station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherTable {
    records: Vec<WeatherRecord>,
    /// Where the rows came from: a URL or a file path.
    pub source: String,
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("records not strictly increasing by date at {date}")]
pub struct OrderError {
    pub date: NaiveDate,
}

impl WeatherTable {
    pub fn new(records: Vec<WeatherRecord>, source: impl Into<String>) -> Result<Self, OrderError> {
        if let Some(w) = records.windows(2).find(|w| w[0].date >= w[1].date) {
            return Err(OrderError { date: w[1].date });
        }
        Ok(Self {
            records,
            source: source.into(),
        })
    }

    pub fn records(&self) -> &[WeatherRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn feature_names() -> Vec<&'static str> {
        Feature::ALL.iter().map(|f| f.name()).collect()
    }

    pub fn column(&self, feature: Feature) -> Vec<f64> {
        self.records.iter().map(|r| r.get(feature)).collect()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.records.iter().map(|r| r.date).collect()
    }

    pub fn into_records(self) -> Vec<WeatherRecord> {
        self.records
    }
}
