//! Content-addressed store for search results.
//!
//! A key is the SHA-256 of `(command, parameters, engine version)`. Each blob
//! records its own key material and the digest of its result, so a damaged or
//! mismatched file is detected on read and moved to `quarantine/`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

/// SHA-256 of the canonical JSON text of `v`, in hex.
pub fn digest(v: &Value) -> String {
    // serde_json maps are ordered, so the text is canonical
    hex::encode(Sha256::digest(v.to_string().as_bytes()))
}

/// Identity of a cached computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheKey {
    pub command: String,
    pub parameters: Value,
    pub engine_version: String,
}

impl CacheKey {
    pub fn new(command: &str, parameters: Value) -> CacheKey {
        CacheKey { command: command.to_string(), parameters, engine_version: divfield_core::ENGINE_VERSION.to_string() }
    }

    pub fn id(&self) -> String {
        digest(&serde_json::to_value(self).expect("keys serialize"))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Blob {
    key: CacheKey,
    result_digest: String,
    result: Value,
}

/// How a lookup went.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CacheStatus {
    Hit,
    Miss,
    /// A damaged entry was moved aside and the result recomputed.
    Quarantined,
    Disabled,
}

pub struct Cache {
    root: PathBuf,
}

impl Cache {
    pub fn new(root: impl Into<PathBuf>) -> Cache {
        Cache { root: root.into() }
    }

    pub fn path(&self, key: &CacheKey) -> PathBuf {
        self.root.join("results").join(format!("{}.json", key.id()))
    }

    pub fn quarantine_dir(&self) -> PathBuf {
        self.root.join("quarantine")
    }

    /// Returns the stored result, or `None` after quarantining a bad entry.
    pub fn get(&self, key: &CacheKey) -> (Option<Value>, CacheStatus) {
        let path = self.path(key);
        let Ok(text) = fs::read_to_string(&path) else {
            return (None, CacheStatus::Miss);
        };
        match serde_json::from_str::<Blob>(&text) {
            Ok(blob) if blob.key == *key && digest(&blob.result) == blob.result_digest => (Some(blob.result), CacheStatus::Hit),
            _ => {
                self.quarantine(&path);
                (None, CacheStatus::Quarantined)
            }
        }
    }

    /// Stores a result; a single writer is assumed.
    pub fn put(&self, key: &CacheKey, result: &Value) -> std::io::Result<()> {
        let blob = Blob { key: key.clone(), result_digest: digest(result), result: result.clone() };
        let text = serde_json::to_string_pretty(&blob).map_err(std::io::Error::other)?;
        divfield_lmfdb::write_atomic(&self.path(key), text.as_bytes()).map_err(|e| std::io::Error::other(e.to_string()))
    }

    fn quarantine(&self, path: &Path) {
        let dir = self.quarantine_dir();
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let stamp = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_nanos()).unwrap_or(0);
        let moved = fs::create_dir_all(&dir).and_then(|_| fs::rename(path, dir.join(format!("{name}.{stamp}"))));
        if moved.is_err() {
            // never reuse it, even if it cannot be moved
            let _ = fs::remove_file(path);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn round_trip_and_quarantine() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        let key = CacheKey::new("search-nearco", json!({"p": 5, "k": 2}));
        assert_eq!(cache.get(&key).1, CacheStatus::Miss);
        cache.put(&key, &json!({"classes": [1, 2]})).unwrap();
        assert_eq!(cache.get(&key), (Some(json!({"classes": [1, 2]})), CacheStatus::Hit));

        // tamper with the result but keep the old digest
        let path = cache.path(&key);
        let text = fs::read_to_string(&path).unwrap().replace("2", "3");
        fs::write(&path, text).unwrap();
        assert_eq!(cache.get(&key).1, CacheStatus::Quarantined);
        assert!(!path.exists());
        assert_eq!(fs::read_dir(cache.quarantine_dir()).unwrap().count(), 1);
        assert_eq!(cache.get(&key).1, CacheStatus::Miss);
    }

    #[test]
    fn keys_depend_on_version_and_params() {
        let a = CacheKey::new("x", json!({"p": 5}));
        let mut b = a.clone();
        b.engine_version.push_str("-next");
        assert_ne!(a.id(), b.id());
        assert_ne!(a.id(), CacheKey::new("x", json!({"p": 7})).id());
        assert_eq!(a.id(), CacheKey::new("x", json!({"p": 5})).id());
    }

    #[test]
    fn stale_version_is_a_miss() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        let mut old = CacheKey::new("x", json!({}));
        old.engine_version = "divfield-0.0.0".into();
        cache.put(&old, &json!(1)).unwrap();
        assert_eq!(cache.get(&CacheKey::new("x", json!({}))).1, CacheStatus::Miss);
    }
}
