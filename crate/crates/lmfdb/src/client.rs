//! Fixture-first, cache-backed HTTP client for curve records.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use crate::record::{validate_label, CurveRecord};
use crate::{LmfdbError, Result};

/// Public API root used when `DIVFIELD_LMFDB_URL` is unset.
pub const DEFAULT_BASE_URL: &str = "https://www.lmfdb.org/api";
/// Environment variable overriding the API root.
pub const BASE_URL_ENV: &str = "DIVFIELD_LMFDB_URL";
/// Environment variable overriding the cache root.
pub const CACHE_DIR_ENV: &str = "DIVFIELD_CACHE_DIR";
/// Requests in flight at once.
pub const MAX_CONCURRENT: usize = 2;

const ATTEMPTS: u32 = 3;

/// A counting semaphore bounding concurrent requests.
struct Permits {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Permits {
    fn acquire(&self) -> PermitGuard<'_> {
        let mut free = self.free.lock().expect("permit lock");
        while *free == 0 {
            free = self.cv.wait(free).expect("permit lock");
        }
        *free -= 1;
        PermitGuard(self)
    }
}

struct PermitGuard<'a>(&'a Permits);

impl Drop for PermitGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("permit lock") += 1;
        self.0.cv.notify_one();
    }
}

/// Where records come from: fixtures, then the cache, then (if live) HTTP.
pub struct Client {
    base_url: String,
    cache_root: PathBuf,
    fixtures: Option<PathBuf>,
    live: bool,
    backoff: Duration,
    http: reqwest::blocking::Client,
    permits: Permits,
}

impl Client {
    /// Offline client with the base URL and cache root from the environment.
    pub fn from_env() -> Result<Client> {
        let base = std::env::var(BASE_URL_ENV).unwrap_or_else(|_| DEFAULT_BASE_URL.to_string());
        let cache = std::env::var(CACHE_DIR_ENV).unwrap_or_else(|_| "cache".to_string());
        Client::new(base, cache)
    }

    pub fn new(base_url: impl Into<String>, cache_root: impl Into<PathBuf>) -> Result<Client> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(30))
            .user_agent(concat!("divfield/", env!("CARGO_PKG_VERSION")))
            .build()
            .map_err(|e| LmfdbError::Network { attempts: 0, message: e.to_string() })?;
        Ok(Client {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            cache_root: cache_root.into(),
            fixtures: None,
            live: false,
            backoff: Duration::from_millis(250),
            http,
            permits: Permits { free: Mutex::new(MAX_CONCURRENT), cv: Condvar::new() },
        })
    }

    /// Allows real network requests.
    pub fn live(mut self, live: bool) -> Client {
        self.live = live;
        self
    }

    /// Consults `dir/<label>.json` before anything else.
    pub fn with_fixtures(mut self, dir: impl Into<PathBuf>) -> Client {
        self.fixtures = Some(dir.into());
        self
    }

    /// Base delay between retries (doubled each attempt).
    pub fn backoff(mut self, base: Duration) -> Client {
        self.backoff = base;
        self
    }

    /// `cache/lmfdb/<label>.json`.
    pub fn cache_path(&self, label: &str) -> PathBuf {
        self.cache_root.join("lmfdb").join(format!("{label}.json"))
    }

    /// Resolves a record by label.
    pub fn fetch_curve(&self, label: &str) -> Result<CurveRecord> {
        validate_label(label)?;
        if let Some(dir) = &self.fixtures {
            let path = dir.join(format!("{label}.json"));
            if path.exists() {
                return load_fixture(&path);
            }
        }
        let cached = self.cache_path(label);
        if cached.exists() {
            log::debug!("cache hit for {label}");
            return CurveRecord::from_api_response(label, &fs::read_to_string(&cached)?);
        }
        if !self.live {
            return Err(LmfdbError::Offline(label.to_string()));
        }
        let body = self.get_with_retry(label)?;
        let record = CurveRecord::from_api_response(label, &body)?;
        write_atomic(&cached, body.as_bytes())?;
        Ok(record)
    }

    fn get_with_retry(&self, label: &str) -> Result<String> {
        let url = format!("{}/ec_curvedata/?lmfdb_label={label}&_format=json", self.base_url);
        let _permit = self.permits.acquire();
        let mut last = String::new();
        for attempt in 0..ATTEMPTS {
            if attempt > 0 {
                thread::sleep(self.backoff * 2u32.pow(attempt - 1));
            }
            match self.http.get(&url).send() {
                Ok(resp) if resp.status() == reqwest::StatusCode::NOT_FOUND => {
                    return Err(LmfdbError::UnknownLabel(label.to_string()));
                }
                Ok(resp) if resp.status().is_success() => {
                    return resp.text().map_err(|e| LmfdbError::Network { attempts: attempt + 1, message: e.to_string() });
                }
                Ok(resp) => last = format!("HTTP {}", resp.status()),
                Err(e) => last = e.to_string(),
            }
            log::warn!("request for {label} failed (attempt {}): {last}", attempt + 1);
        }
        Err(LmfdbError::Network { attempts: ATTEMPTS, message: last })
    }
}

/// Reads a record stored in the client's own format.
pub fn load_fixture(path: &Path) -> Result<CurveRecord> {
    let record: CurveRecord = serde_json::from_str(&fs::read_to_string(path)?)?;
    record.validate()?;
    Ok(record)
}

/// Canonical fixture text: pretty JSON with a trailing newline.
pub fn fixture_text(record: &CurveRecord) -> Result<String> {
    Ok(serde_json::to_string_pretty(record)? + "\n")
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| LmfdbError::Io(e.error.to_string()))?;
    Ok(())
}
