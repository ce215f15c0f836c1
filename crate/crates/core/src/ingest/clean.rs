use serde::{Deserialize, Serialize};

use super::{Feature, WeatherRecord, WeatherTable, MISSING_SENTINEL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CleaningPolicy {
    DropRow,
    #[default]
    LinearInterpolate,
}

impl std::str::FromStr for CleaningPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "drop_row" => Ok(CleaningPolicy::DropRow),
            "linear_interpolate" => Ok(CleaningPolicy::LinearInterpolate),
            other => Err(format!("unknown cleaning policy {other:?}")),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CleanError {
    #[error("feature {0} is missing on every row")]
    FeatureAllMissing(Feature),
    #[error("record {date}: {detail}")]
    Invariant { date: chrono::NaiveDate, detail: String },
}

/// Removes missing-value sentinels.
///
/// `DropRow` discards every row holding a sentinel. `LinearInterpolate` fills
/// interior gaps per feature, linear in elapsed days between the nearest
/// observed neighbours (wind direction along the shorter arc), then drops
/// leading and trailing rows that have no observed neighbour on one side.
///
/// A filled mean is clamped into its row's min/max, and a filled extreme is
/// widened to cover an observed mean. Wind direction is wrapped into
/// `[0, 360)`; any other violated record invariant is reported as an error.
pub fn clean_missing(table: &WeatherTable, policy: CleaningPolicy) -> Result<WeatherTable, CleanError> {
    if !table.is_empty() {
        if let Some(f) = Feature::ALL
            .iter()
            .find(|f| table.records().iter().all(|r| r.get(**f) == MISSING_SENTINEL))
        {
            return Err(CleanError::FeatureAllMissing(*f));
        }
    }

    let mut records: Vec<WeatherRecord> = match policy {
        CleaningPolicy::DropRow => table
            .records()
            .iter()
            .filter(|r| !r.has_missing())
            .cloned()
            .collect(),
        CleaningPolicy::LinearInterpolate => interpolate(table.records()),
    };

    for r in &mut records {
        let wd = r.get(Feature::Wd10m).rem_euclid(360.0);
        // rem_euclid can round up to exactly 360 for tiny negative inputs
        r.set(Feature::Wd10m, if wd >= 360.0 { 0.0 } else { wd });
        r.check_invariants()
            .map_err(|detail| CleanError::Invariant { date: r.date, detail })?;
    }
    Ok(WeatherTable::new(records, table.source.clone()).expect("subset of an ordered table"))
}

fn interpolate(rows: &[WeatherRecord]) -> Vec<WeatherRecord> {
    let mut out: Vec<WeatherRecord> = rows.to_vec();
    let mut resolvable = vec![true; rows.len()];
    let mut filled = vec![[false; 16]; rows.len()];
    let days: Vec<f64> = rows
        .iter()
        .map(|r| (r.date - rows[0].date).num_days() as f64)
        .collect();

    for f in Feature::ALL {
        let observed: Vec<usize> = (0..rows.len())
            .filter(|&i| rows[i].get(f) != MISSING_SENTINEL)
            .collect();
        for i in 0..rows.len() {
            if rows[i].get(f) != MISSING_SENTINEL {
                continue;
            }
            // nearest observed neighbours on each side
            let after = observed.partition_point(|&j| j < i);
            if after == 0 || after == observed.len() {
                resolvable[i] = false;
                continue;
            }
            let (lo, hi) = (observed[after - 1], observed[after]);
            let t = (days[i] - days[lo]) / (days[hi] - days[lo]);
            let (a, b) = (rows[lo].get(f), rows[hi].get(f));
            let v = if f == Feature::Wd10m {
                let delta = (b - a + 540.0).rem_euclid(360.0) - 180.0;
                (a + t * delta).rem_euclid(360.0)
            } else {
                a + t * (b - a)
            };
            out[i].set(f, v);
            filled[i][f.index()] = true;
        }
    }
    for (r, mask) in out.iter_mut().zip(&filled) {
        for (mean, min, max) in [
            (Feature::T2m, Feature::T2mMin, Feature::T2mMax),
            (Feature::Ws10m, Feature::Ws10mMin, Feature::Ws10mMax),
        ] {
            let (m, lo, hi) = (r.get(mean), r.get(min), r.get(max));
            if mask[min.index()] && m != MISSING_SENTINEL {
                r.set(min, lo.min(m));
            }
            if mask[max.index()] && m != MISSING_SENTINEL {
                r.set(max, hi.max(m));
            }
            let (lo, hi) = (r.get(min), r.get(max));
            if mask[mean.index()] && lo != MISSING_SENTINEL && hi != MISSING_SENTINEL && lo <= hi {
                r.set(mean, m.clamp(lo, hi));
            }
        }
    }
    out.into_iter()
        .zip(resolvable)
        .filter_map(|(r, ok)| ok.then_some(r))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn record(day: u32, t2m: f64) -> WeatherRecord {
        let mut v = [0.0; 16];
        v[Feature::T2m.index()] = t2m;
        v[Feature::T2mMax.index()] = 40.0;
        v[Feature::T2mMin.index()] = 0.0;
        v[Feature::Ws10m.index()] = 2.0;
        v[Feature::Ws10mMax.index()] = 3.0;
        v[Feature::Ws10mMin.index()] = 1.0;
        v[Feature::Rh2m.index()] = 70.0;
        v[Feature::Wd10m.index()] = 90.0;
        WeatherRecord::new(NaiveDate::from_ymd_opt(2021, 1, day).unwrap(), v)
    }

    fn table(t2m: &[f64]) -> WeatherTable {
        let recs = t2m.iter().enumerate().map(|(i, &t)| record(i as u32 + 1, t)).collect();
        WeatherTable::new(recs, "test").unwrap()
    }

    #[test]
    fn filled_mean_stays_inside_observed_extremes() {
        let mut rows: Vec<WeatherRecord> = [10.0, MISSING_SENTINEL, 30.0].iter().enumerate().map(|(i, &t)| record(i as u32 + 1, t)).collect();
        rows[1].set(Feature::T2mMax, 15.0);
        let t = clean_missing(&WeatherTable::new(rows, "").unwrap(), CleaningPolicy::LinearInterpolate).unwrap();
        assert_eq!(t.records()[1].t2m(), 15.0);
    }

    #[test]
    fn midpoint_is_interpolated() {
        let t = clean_missing(&table(&[10.0, MISSING_SENTINEL, 20.0]), CleaningPolicy::LinearInterpolate)
            .unwrap();
        assert_eq!(t.column(Feature::T2m), vec![10.0, 15.0, 20.0]);
    }

    #[test]
    fn interpolation_is_linear_in_time() {
        let mut recs = vec![record(1, 10.0), record(2, MISSING_SENTINEL), record(5, 20.0)];
        recs[2].date = NaiveDate::from_ymd_opt(2021, 1, 5).unwrap();
        let t = WeatherTable::new(recs, "gap").unwrap();
        let c = clean_missing(&t, CleaningPolicy::LinearInterpolate).unwrap();
        assert!((c.column(Feature::T2m)[1] - 12.5).abs() < 1e-12);
    }

    #[test]
    fn edges_are_dropped_when_unresolvable() {
        let t = table(&[MISSING_SENTINEL, 11.0, MISSING_SENTINEL, 13.0, MISSING_SENTINEL]);
        let c = clean_missing(&t, CleaningPolicy::LinearInterpolate).unwrap();
        assert_eq!(c.column(Feature::T2m), vec![11.0, 12.0, 13.0]);
        let d = clean_missing(&t, CleaningPolicy::DropRow).unwrap();
        assert_eq!(d.column(Feature::T2m), vec![11.0, 13.0]);
    }

    #[test]
    fn wind_direction_takes_the_short_way_round() {
        let mut t = table(&[10.0, 10.0, 10.0]).into_records();
        t[0].set(Feature::Wd10m, 350.0);
        t[1].set(Feature::Wd10m, MISSING_SENTINEL);
        t[2].set(Feature::Wd10m, 10.0);
        let c = clean_missing(&WeatherTable::new(t, "wd").unwrap(), CleaningPolicy::LinearInterpolate)
            .unwrap();
        assert!(c.column(Feature::Wd10m)[1].abs() < 1e-9);
    }

    #[test]
    fn clean_table_is_unchanged() {
        let t = table(&[10.0, 11.0, 12.0]);
        for policy in [CleaningPolicy::DropRow, CleaningPolicy::LinearInterpolate] {
            assert_eq!(clean_missing(&t, policy).unwrap(), t);
        }
    }

    #[test]
    fn fully_missing_feature_is_named() {
        let t = table(&[MISSING_SENTINEL, MISSING_SENTINEL]);
        assert_eq!(
            clean_missing(&t, CleaningPolicy::DropRow).unwrap_err(),
            CleanError::FeatureAllMissing(Feature::T2m)
        );
    }

    #[test]
    fn inconsistent_record_is_rejected() {
        let t = table(&[50.0]);
        assert!(matches!(
            clean_missing(&t, CleaningPolicy::DropRow),
            Err(CleanError::Invariant { .. })
        ));
    }
}
