mod common;

use chrono::Duration;
use common::*;
use dhaka_weather::ingest::{
    clean_missing, fetch_power_daily, parse_power_csv, synth, write_power_csv, CleaningPolicy, Feature,
    FetchError, FixtureTransport, HttpResponse, HttpTransport, PowerRequest, RetryPolicy, WeatherRecord,
    WeatherTable, MISSING_SENTINEL,
};
use proptest::prelude::*;

#[test]
fn fixture_year_has_365_clean_records() {
    let t = fixture_year();
    assert_eq!(t.len(), 365);
    assert_eq!(t.records()[0].date, ymd(2021, 1, 1));
    assert_eq!(t.records()[364].date, ymd(2021, 12, 31));
    // oracle: count data lines after the header marker
    let text = fixture_text("dhaka_2021.csv");
    let data_lines = text.lines().skip_while(|l| *l != "-END HEADER-").skip(2).count();
    assert_eq!(data_lines, 365);
    for r in t.records() {
        r.check_invariants().unwrap();
    }
}

#[test]
fn gap_fixture_drops_to_362_rows() {
    let t = parse_power_csv(&fixture_text("dhaka_2021_gaps.csv")).unwrap();
    let sentinel_rows = t.records().iter().filter(|r| r.has_missing()).count();
    assert_eq!(sentinel_rows, 3);
    let dropped = clean_missing(&t, CleaningPolicy::DropRow).unwrap();
    assert_eq!(dropped.len(), 365 - sentinel_rows);
    let filled = clean_missing(&t, CleaningPolicy::LinearInterpolate).unwrap();
    assert_eq!(filled.len(), 365);
    assert!(filled.records().iter().all(|r| !r.has_missing()));
}

#[test]
fn offline_fetch_is_byte_identical_to_fixture() {
    let req = PowerRequest::all_features(23.8103, 90.4125, ymd(2021, 1, 1), ymd(2021, 12, 31));
    let transport = FixtureTransport::new(fixture_path("dhaka_2021.csv"));
    let body = fetch_power_daily(&req, &transport, RetryPolicy::default()).unwrap();
    assert_eq!(body.as_bytes(), std::fs::read(fixture_path("dhaka_2021.csv")).unwrap().as_slice());
}

#[test]
fn default_range_spans_7306_days() {
    let days = (ymd(2023, 1, 1) - ymd(2003, 1, 1)).num_days() + 1;
    assert_eq!(days, 7306);
    let t = synth::simulate_dhaka(ymd(2003, 1, 1), ymd(2023, 1, 1), 1);
    assert_eq!(t.len(), 7306);
}

struct TwoDays;

impl HttpTransport for TwoDays {
    fn get(&self, url: &str) -> Result<HttpResponse, String> {
        assert!(url.contains("latitude=0&longitude=0&start=20200101&end=20200102"));
        Ok(HttpResponse {
            status: 200,
            body: "-BEGIN HEADER-\n-END HEADER-\nYEAR,MO,DY,T2M\n2020,1,1,25.1\n2020,1,2,24.8\n".into(),
        })
    }
}

#[test]
fn minimal_request_returns_two_rows() {
    let req = PowerRequest {
        latitude: 0.0,
        longitude: 0.0,
        start: ymd(2020, 1, 1),
        end: ymd(2020, 1, 2),
        parameters: vec!["T2M".into()],
    };
    let body = fetch_power_daily(&req, &TwoDays, RetryPolicy::default()).unwrap();
    let data: Vec<&str> = body.lines().skip_while(|l| *l != "-END HEADER-").skip(2).collect();
    assert_eq!(data.len(), 2);
}

struct BadCoordinates;

impl HttpTransport for BadCoordinates {
    fn get(&self, _url: &str) -> Result<HttpResponse, String> {
        Ok(HttpResponse { status: 422, body: r#"{"messages":["latitude must be in [-90, 90]"]}"#.into() })
    }
}

#[test]
fn api_rejection_carries_status_and_message() {
    let req = PowerRequest::all_features(123.0, 0.0, ymd(2020, 1, 1), ymd(2020, 1, 2));
    let err = fetch_power_daily(&req, &BadCoordinates, RetryPolicy { attempts: 3, initial_delay: std::time::Duration::ZERO }).unwrap_err();
    match err {
        FetchError::Http { status, excerpt } => {
            assert_eq!(status, 422);
            assert!(excerpt.contains("latitude"));
        }
        other => panic!("unexpected {other:?}"),
    }
}

fn arb_table() -> impl Strategy<Value = WeatherTable> {
    (1usize..40, any::<u64>(), proptest::collection::vec((0usize..40, 0usize..16), 0..12)).prop_map(
        |(n, seed, gaps)| {
            let start = ymd(2015, 1, 1) + Duration::days((seed % 3000) as i64);
            let t = synth::simulate_dhaka(start, start + Duration::days(n as i64 - 1), seed);
            let mut records = t.records().to_vec();
            for (row, f) in gaps {
                if row < n {
                    records[row].set(Feature::ALL[f], MISSING_SENTINEL);
                }
            }
            WeatherTable::new(records, t.source.clone()).unwrap()
        },
    )
}

fn policies() -> impl Strategy<Value = CleaningPolicy> {
    prop_oneof![Just(CleaningPolicy::DropRow), Just(CleaningPolicy::LinearInterpolate)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn serialize_then_parse_is_identity(t in arb_table()) {
        let back = parse_power_csv(&write_power_csv(&t)).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn cleaning_is_idempotent_and_leaves_valid_rows(t in arb_table(), policy in policies()) {
        match clean_missing(&t, policy) {
            Ok(once) => {
                for r in once.records() {
                    prop_assert!(r.check_invariants().is_ok(), "{:?}", r.check_invariants());
                }
                prop_assert_eq!(clean_missing(&once, policy).unwrap(), once);
            }
            // a fuzzed table can lose a whole feature; that is the documented error
            Err(e) => prop_assert!(e.to_string().contains("missing on every row"), "{}", e),
        }
    }

    #[test]
    fn interpolation_is_time_linear(a in -50.0f64..50.0, b in -50.0f64..50.0, gap in 1usize..6) {
        let t = synth::simulate_dhaka(ymd(2020, 3, 1), ymd(2020, 3, 1) + Duration::days(gap as i64 + 1), 5);
        let mut records: Vec<WeatherRecord> = t.records().to_vec();
        records[0].set(Feature::Ps, 100.0 + a / 10.0);
        records[gap + 1].set(Feature::Ps, 100.0 + b / 10.0);
        for r in records.iter_mut().take(gap + 1).skip(1) {
            r.set(Feature::Ps, MISSING_SENTINEL);
        }
        let cleaned = clean_missing(&WeatherTable::new(records, "").unwrap(), CleaningPolicy::LinearInterpolate).unwrap();
        for (i, r) in cleaned.records().iter().enumerate() {
            let expect = 100.0 + (a + (b - a) * i as f64 / (gap + 1) as f64) / 10.0;
            prop_assert!((r.get(Feature::Ps) - expect).abs() < 1e-9);
        }
    }
}
