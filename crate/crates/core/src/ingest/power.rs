use std::path::PathBuf;
use std::time::Duration;

use chrono::NaiveDate;

use super::Feature;

pub const POWER_DAILY_ENDPOINT: &str = "https://power.larc.nasa.gov/api/temporal/daily/point";

/// Daily point parameters accepted by [`PowerRequest::validate`]. A subset of
/// the POWER daily catalog covering the meteorology community parameters.
const DAILY_CATALOG: &[&str] = &[
    "T2M", "T2MDEW", "T2MWET", "TS", "T2M_RANGE", "T2M_MAX", "T2M_MIN", "QV2M", "RH2M",
    "PRECTOTCORR", "PRECTOT", "PS", "WS10M_RANGE", "WS10M", "WD10M", "WS10M_MAX", "WS10M_MIN",
    "WS2M", "WS2M_MAX", "WS2M_MIN", "WS2M_RANGE", "WD2M", "WS50M", "WS50M_MAX", "WS50M_MIN",
    "WS50M_RANGE", "WD50M", "ALLSKY_SFC_SW_DWN", "CLRSKY_SFC_SW_DWN", "ALLSKY_SFC_LW_DWN",
    "ALLSKY_SFC_PAR_TOT", "CLOUD_AMT", "GWETTOP", "GWETROOT", "GWETPROF", "EVPTRNS",
    "FROST_DAYS", "T2M_DEW",
];

#[derive(Debug, Clone, PartialEq)]
pub struct PowerRequest {
    pub latitude: f64,
    pub longitude: f64,
    pub start: NaiveDate,
    /// Inclusive, as the API treats it.
    pub end: NaiveDate,
    pub parameters: Vec<String>,
}

impl PowerRequest {
    /// All sixteen table features for a station and date range.
    pub fn all_features(latitude: f64, longitude: f64, start: NaiveDate, end: NaiveDate) -> Self {
        Self {
            latitude,
            longitude,
            start,
            end,
            parameters: Feature::ALL
                .iter()
                .map(|f| f.power_parameter().to_string())
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<(), FetchError> {
        if self.start >= self.end {
            return Err(FetchError::InvalidRequest(format!(
                "start {} must precede end {}",
                self.start, self.end
            )));
        }
        if self.parameters.is_empty() {
            return Err(FetchError::InvalidRequest("no parameters requested".into()));
        }
        if let Some(p) = self.parameters.iter().find(|p| !DAILY_CATALOG.contains(&p.as_str())) {
            return Err(FetchError::InvalidRequest(format!(
                "{p:?} is not a POWER daily parameter"
            )));
        }
        Ok(())
    }

    pub fn url(&self) -> String {
        format!(
            "{POWER_DAILY_ENDPOINT}?parameters={}&community=AG&latitude={}&longitude={}&start={}&end={}&format=CSV",
            self.parameters.join(","),
            self.latitude,
            self.longitude,
            self.start.format("%Y%m%d"),
            self.end.format("%Y%m%d"),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// Blocking GET. `Err` means the request never produced an HTTP response.
pub trait HttpTransport {
    fn get(&self, url: &str) -> Result<HttpResponse, String>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self { agent }
    }
}

impl Default for UreqTransport {
    fn default() -> Self {
        Self::new(Duration::from_secs(180))
    }
}

impl HttpTransport for UreqTransport {
    fn get(&self, url: &str) -> Result<HttpResponse, String> {
        let mut resp = self.agent.get(url).call().map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .with_config()
            .limit(64 * 1024 * 1024)
            .read_to_string()
            .map_err(|e| e.to_string())?;
        Ok(HttpResponse { status, body })
    }
}

/// Serves a local file for every URL; used for offline runs.
pub struct FixtureTransport {
    path: PathBuf,
}

impl FixtureTransport {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into() }
    }
}

impl HttpTransport for FixtureTransport {
    fn get(&self, _url: &str) -> Result<HttpResponse, String> {
        std::fs::read_to_string(&self.path)
            .map(|body| HttpResponse { status: 200, body })
            .map_err(|e| format!("{}: {e}", self.path.display()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            initial_delay: Duration::from_secs(2),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FetchError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("network failure after {attempts} attempts: {message}")]
    Network { attempts: u32, message: String },
    #[error("HTTP {status}: {excerpt}")]
    Http { status: u16, excerpt: String },
}

impl FetchError {
    pub fn is_retriable(&self) -> bool {
        match self {
            FetchError::Network { .. } => true,
            FetchError::Http { status, .. } => *status >= 500 || *status == 429,
            FetchError::InvalidRequest(_) => false,
        }
    }
}

fn excerpt(body: &str) -> String {
    const MAX: usize = 400;
    match body.char_indices().nth(MAX) {
        Some((cut, _)) => format!("{}...", &body[..cut]),
        None => body.to_string(),
    }
}

/// Downloads a POWER daily CSV and returns the body verbatim.
///
/// Transport failures, 5xx and 429 responses are retried with exponential
/// backoff up to `retry.attempts` tries in total.
pub fn fetch_power_daily(
    request: &PowerRequest,
    transport: &dyn HttpTransport,
    retry: RetryPolicy,
) -> Result<String, FetchError> {
    request.validate()?;
    let url = request.url();
    let attempts = retry.attempts.max(1);
    let mut delay = retry.initial_delay;
    let mut last = None;
    for attempt in 1..=attempts {
        let err = match transport.get(&url) {
            Ok(resp) if resp.status == 200 => return Ok(resp.body),
            Ok(resp) => FetchError::Http {
                status: resp.status,
                excerpt: excerpt(&resp.body),
            },
            Err(message) => FetchError::Network { attempts: attempt, message },
        };
        if !err.is_retriable() {
            return Err(err);
        }
        last = Some(err);
        if attempt < attempts {
            std::thread::sleep(delay);
            delay *= 2;
        }
    }
    Err(last.expect("at least one attempt"))
}
