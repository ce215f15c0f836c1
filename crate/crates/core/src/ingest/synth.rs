//! Seeded daily weather simulator tuned to Dhaka's monthly climatology.
//!
//! Produces tables with the same sixteen columns, units and two-decimal
//! rounding as POWER responses, with physically coupled fields: dew point
//! from temperature and humidity, specific humidity from dew point and
//! pressure, wet-bulb as the dry/dew mean, and rain days that are cooler,
//! more humid and have a narrower diurnal range. Used for offline fixtures
//! and for exercising the pipeline without network access; it is not a
//! substitute for observed data.

use chrono::{Datelike, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};

use super::{Feature, WeatherRecord, WeatherTable, MISSING_SENTINEL};

// mid-month climatology, January first
const T2M: [f64; 12] = [18.6, 22.1, 26.3, 28.4, 28.9, 29.0, 28.8, 29.0, 28.7, 27.6, 24.2, 20.3];
const RH2M: [f64; 12] = [68.0, 60.0, 56.0, 66.0, 75.0, 83.0, 85.0, 85.0, 84.0, 79.0, 72.0, 71.0];
const T2M_RANGE: [f64; 12] = [10.5, 11.5, 11.5, 9.5, 8.0, 6.0, 5.0, 5.2, 5.8, 7.0, 9.0, 10.0];
const WET_PROB: [f64; 12] = [0.08, 0.12, 0.2, 0.38, 0.55, 0.75, 0.82, 0.78, 0.7, 0.42, 0.1, 0.05];
const RAIN_MM: [f64; 12] = [7.0, 25.0, 60.0, 150.0, 300.0, 330.0, 370.0, 310.0, 300.0, 170.0, 30.0, 10.0];
const PS_KPA: [f64; 12] = [101.3, 101.1, 100.8, 100.5, 100.2, 99.8, 99.7, 99.8, 100.2, 100.7, 101.1, 101.4];
const WS10M: [f64; 12] = [1.7, 2.0, 2.5, 3.0, 3.0, 2.8, 2.7, 2.4, 2.0, 1.6, 1.5, 1.6];
const WD10M: [f64; 12] = [320.0, 300.0, 220.0, 180.0, 165.0, 155.0, 150.0, 150.0, 145.0, 90.0, 330.0, 330.0];

/// Wet-day persistence of the rain-occurrence Markov chain.
const RAIN_PERSISTENCE: f64 = 0.35;
const RAIN_SHAPE: f64 = 0.75;

/// Fractional month position: 0.0 at mid-January, 11.0 at mid-December.
fn month_position(date: NaiveDate) -> f64 {
    let days_in_month = match date.month() {
        2 if date.leap_year() => 29.0,
        2 => 28.0,
        4 | 6 | 9 | 11 => 30.0,
        _ => 31.0,
    };
    let frac = (date.day() as f64 - 0.5) / days_in_month;
    date.month0() as f64 + frac - 0.5
}

fn seasonal(table: &[f64; 12], pos: f64) -> f64 {
    let lo = pos.floor();
    let t = pos - lo;
    let i = (lo as i64).rem_euclid(12) as usize;
    let j = (i + 1) % 12;
    table[i] + t * (table[j] - table[i])
}

fn seasonal_angle(table: &[f64; 12], pos: f64) -> f64 {
    let lo = pos.floor();
    let t = pos - lo;
    let i = (lo as i64).rem_euclid(12) as usize;
    let j = (i + 1) % 12;
    let delta = (table[j] - table[i] + 540.0).rem_euclid(360.0) - 180.0;
    (table[i] + t * delta).rem_euclid(360.0)
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn dew_point(t: f64, rh: f64) -> f64 {
    let g = (rh / 100.0).ln() + 17.625 * t / (243.04 + t);
    243.04 * g / (17.625 - g)
}

fn specific_humidity(dew: f64, ps_kpa: f64) -> f64 {
    let e = 6.112 * (17.67 * dew / (dew + 243.5)).exp();
    let p = ps_kpa * 10.0;
    622.0 * e / (p - 0.378 * e)
}

/// Simulates every day in `start..=end`.
pub fn simulate_dhaka(start: NaiveDate, end: NaiveDate, seed: u64) -> WeatherTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std_normal = Normal::new(0.0, 1.0).unwrap();
    let mut z = || std_normal.sample(&mut rng);
    let mut records = Vec::new();
    let (mut t_anom, mut rh_anom, mut ps_anom, mut ws_anom) = (0.0, 0.0, 0.0, 0.0);
    let mut wet = false;
    let mut uniforms = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);

    for date in start.iter_days().take_while(|d| *d <= end) {
        let pos = month_position(date);
        let p = seasonal(&WET_PROB, pos);
        let p_wet = if wet {
            p + RAIN_PERSISTENCE * (1.0 - p)
        } else {
            p * (1.0 - RAIN_PERSISTENCE)
        };
        wet = uniforms.random::<f64>() < p_wet;
        let days = 30.44;
        let mean_wet_amount = seasonal(&RAIN_MM, pos) / (days * p);
        let rain = if wet {
            Gamma::new(RAIN_SHAPE, mean_wet_amount / RAIN_SHAPE)
                .unwrap()
                .sample(&mut uniforms)
        } else if uniforms.random::<f64>() < 0.5 {
            uniforms.random::<f64>() * 0.08
        } else {
            0.0
        };
        let rain_effect = if wet { (rain / 40.0).min(1.0) } else { 0.0 };

        t_anom = 0.8 * t_anom + 0.9 * z();
        rh_anom = 0.7 * rh_anom + 4.0 * z();
        ps_anom = 0.8 * ps_anom + 0.15 * z();
        ws_anom = 0.6 * ws_anom + 0.2 * z();

        let t2m = seasonal(&T2M, pos) + t_anom - if wet { 0.5 + 1.5 * rain_effect } else { 0.0 };
        let range_scale = if wet { 0.75 - 0.25 * rain_effect } else { 1.05 };
        let t_range = (seasonal(&T2M_RANGE, pos) * range_scale + 0.8 * z()).max(1.0);
        let t_max = t2m + 0.55 * t_range;
        let t_min = t_max - t_range;
        let rh = (seasonal(&RH2M, pos) + rh_anom + if wet { 5.0 + 8.0 * rain_effect } else { -2.0 })
            .clamp(20.0, 99.5);
        let dew = dew_point(t2m, rh);
        let wet_bulb = (t2m + dew) / 2.0;
        let skin_offset = if seasonal(&WET_PROB, pos) > 0.5 { 0.2 } else { 0.8 };
        let ts = t2m + skin_offset + 0.4 * z() - if wet { 0.5 } else { 0.0 };
        let ps = seasonal(&PS_KPA, pos) + ps_anom - if wet { 0.1 } else { 0.0 };
        let qv = specific_humidity(dew, ps);
        let ws = (seasonal(&WS10M, pos) * ws_anom.exp() + if wet { 0.3 } else { 0.0 }).max(0.2);
        let ws_range = (0.8 * ws + 0.4 * z()).max(0.3);
        let ws_max = ws + 0.6 * ws_range;
        let ws_min = (ws_max - ws_range).clamp(0.0, ws);
        let wd = (seasonal_angle(&WD10M, pos) + 35.0 * z()).rem_euclid(360.0);

        let mut v = [0.0; 16];
        let mut put = |f: Feature, x: f64| v[f.index()] = round2(x);
        put(Feature::T2m, t2m);
        put(Feature::T2mDew, dew);
        put(Feature::T2mWet, wet_bulb);
        put(Feature::Ts, ts);
        put(Feature::T2mMax, t_max);
        put(Feature::T2mMin, t_min);
        put(Feature::Qv2m, qv);
        put(Feature::Rh2m, rh);
        put(Feature::PrecTot, rain);
        put(Feature::Ps, ps);
        put(Feature::Ws10m, ws);
        put(Feature::Ws10mMax, ws_max);
        put(Feature::Ws10mMin, ws_min);
        put(Feature::Wd10m, wd);
        // ranges follow the rounded extremes so the columns stay consistent
        v[Feature::T2mRange.index()] = round2(v[Feature::T2mMax.index()] - v[Feature::T2mMin.index()]);
        v[Feature::Ws10mRange.index()] =
            round2(v[Feature::Ws10mMax.index()] - v[Feature::Ws10mMin.index()]);
        if v[Feature::Wd10m.index()] >= 360.0 {
            v[Feature::Wd10m.index()] = 0.0;
        }
        records.push(WeatherRecord::new(date, v));
    }
    let source = format!("synthetic: Dhaka climatology simulator, seed {seed}");
    WeatherTable::new(records, source).expect("consecutive days")
}

/// Overwrites `feature` with the missing sentinel on the given rows.
pub fn inject_gaps(table: &WeatherTable, rows: &[usize], feature: Feature) -> WeatherTable {
    let mut records = table.records().to_vec();
    for &i in rows {
        records[i].set(feature, MISSING_SENTINEL);
    }
    WeatherTable::new(records, table.source.clone()).expect("dates untouched")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    #[test]
    fn every_record_is_physically_consistent() {
        let t = simulate_dhaka(ymd(2010, 1, 1), ymd(2013, 12, 31), 3);
        assert_eq!(t.len(), 4 * 365 + 1);
        for r in t.records() {
            r.check_invariants().unwrap_or_else(|e| panic!("{}: {e}", r.date));
        }
    }

    #[test]
    fn same_seed_same_table() {
        let a = simulate_dhaka(ymd(2021, 1, 1), ymd(2021, 3, 1), 11);
        let b = simulate_dhaka(ymd(2021, 1, 1), ymd(2021, 3, 1), 11);
        assert_eq!(a, b);
    }

    #[test]
    fn interpolation_wraps_months() {
        assert!((seasonal(&T2M, -0.5) - (T2M[11] + T2M[0]) / 2.0).abs() < 1e-12);
        assert!((seasonal_angle(&WD10M, 9.5) - 30.0).abs() < 1e-9);
    }
}
