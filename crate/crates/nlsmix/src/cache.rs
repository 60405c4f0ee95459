//! Content-addressed store of converged solver output.
//!
//! An entry lives in `<dir>/<sha256 of key>.json` and records the schema
//! version and the full key text next to the payload. Entries written under
//! another schema, or that fail to parse, are skipped with a warning.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const CACHE_SCHEMA: u32 = 1;
pub const CACHE_ENV: &str = "NLS_CACHE_DIR";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheKey {
    pub text: String,
    pub hash: String,
}

impl CacheKey {
    pub fn new(kind: &str, input: &impl Serialize) -> CacheKey {
        let text = format!("{kind}:{}", serde_json::to_string(input).expect("cache key serializes"));
        let hash = sha256_hex(text.as_bytes());
        CacheKey { text, hash }
    }
}

#[derive(Serialize, Deserialize)]
struct Entry<T> {
    schema: u32,
    key: String,
    payload: T,
}

#[derive(Deserialize)]
struct Header {
    schema: u32,
    key: String,
}

pub struct Cache {
    dir: PathBuf,
    schema: u32,
    hits: AtomicUsize,
    misses: AtomicUsize,
    warnings: Mutex<Vec<String>>,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Cache {
        Cache::with_schema(dir, CACHE_SCHEMA)
    }

    pub fn with_schema(dir: impl Into<PathBuf>, schema: u32) -> Cache {
        Cache {
            dir: dir.into(),
            schema,
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
            warnings: Mutex::new(Vec::new()),
        }
    }

    /// `--cache-dir`, then `NLS_CACHE_DIR`, then `.nlsmix-cache`.
    pub fn resolve_dir(flag: Option<&Path>) -> PathBuf {
        match flag {
            Some(p) => p.to_path_buf(),
            None => std::env::var_os(CACHE_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".nlsmix-cache")),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(format!("{}.json", key.hash))
    }

    fn warn(&self, msg: String) {
        eprintln!("warning: {msg}");
        self.warnings.lock().unwrap().push(msg);
    }

    pub fn lookup<T: DeserializeOwned>(&self, key: &CacheKey) -> Option<T> {
        let found = self.read(key);
        let counter = if found.is_some() { &self.hits } else { &self.misses };
        counter.fetch_add(1, Ordering::Relaxed);
        found
    }

    fn read<T: DeserializeOwned>(&self, key: &CacheKey) -> Option<T> {
        let path = self.path(key);
        let text = fs::read_to_string(&path).ok()?;
        let header: Header = match serde_json::from_str(&text) {
            Ok(h) => h,
            Err(e) => {
                self.warn(format!("ignoring corrupt cache entry {}: {e}", path.display()));
                return None;
            }
        };
        if header.schema != self.schema {
            self.warn(format!(
                "ignoring cache entry {} written with schema {} (current {})",
                path.display(),
                header.schema,
                self.schema
            ));
            return None;
        }
        if header.key != key.text {
            return None;
        }
        match serde_json::from_str::<Entry<T>>(&text) {
            Ok(e) => Some(e.payload),
            Err(e) => {
                self.warn(format!("ignoring corrupt cache entry {}: {e}", path.display()));
                None
            }
        }
    }

    /// Writes through a temporary file and a rename. Payloads that would not
    /// read back identically (non-finite numbers) are not stored.
    pub fn store<T: Serialize + DeserializeOwned + PartialEq>(&self, key: &CacheKey, value: &T) {
        let entry = Entry { schema: self.schema, key: key.text.clone(), payload: value };
        let Ok(text) = serde_json::to_string(&entry) else { return };
        match serde_json::from_str::<Entry<T>>(&text) {
            Ok(back) if back.payload == *value => {}
            _ => return,
        }
        if let Err(e) = fs::create_dir_all(&self.dir) {
            self.warn(format!("cannot create cache directory {}: {e}", self.dir.display()));
            return;
        }
        let path = self.path(key);
        let tmp = self.dir.join(format!("{}.{}.{:?}.tmp", key.hash, std::process::id(), std::thread::current().id()));
        let res = fs::write(&tmp, text).and_then(|_| fs::rename(&tmp, &path));
        if let Err(e) = res {
            let _ = fs::remove_file(&tmp);
            self.warn(format!("cannot write cache entry {}: {e}", path.display()));
        }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn take_warnings(&self) -> Vec<String> {
        std::mem::take(&mut *self.warnings.lock().unwrap())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    struct Payload {
        xs: Vec<f64>,
    }

    fn payload() -> Payload {
        Payload { xs: vec![0.1, 1.0 / 3.0, 4.273664068323042e-300] }
    }

    #[test]
    fn store_then_lookup_returns_the_same_value() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        let key = CacheKey::new("scan", &("q", 3.0, 1e-8));
        assert_eq!(cache.lookup::<Payload>(&key), None);
        cache.store(&key, &payload());
        assert_eq!(cache.lookup::<Payload>(&key), Some(payload()));
        assert_eq!((cache.hits(), cache.misses()), (1, 1));
    }

    #[test]
    fn changed_tolerance_misses() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        cache.store(&CacheKey::new("scan", &("q", 3.0, 1e-8)), &payload());
        assert_eq!(cache.lookup::<Payload>(&CacheKey::new("scan", &("q", 3.0, 1e-9))), None);
        assert!(cache.take_warnings().is_empty());
    }

    #[test]
    fn schema_bump_misses_with_warning() {
        let dir = tempfile::tempdir().unwrap();
        let key = CacheKey::new("scan", &1);
        Cache::with_schema(dir.path(), 1).store(&key, &payload());
        let newer = Cache::with_schema(dir.path(), 2);
        assert_eq!(newer.lookup::<Payload>(&key), None);
        let w = newer.take_warnings();
        assert_eq!(w.len(), 1);
        assert!(w[0].contains("schema 1"));
    }

    #[test]
    fn corrupt_entry_is_ignored_with_warning() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        let key = CacheKey::new("scan", &2);
        fs::write(dir.path().join(format!("{}.json", key.hash)), "{not json").unwrap();
        assert_eq!(cache.lookup::<Payload>(&key), None);
        assert_eq!(cache.take_warnings().len(), 1);
    }

    #[test]
    fn non_finite_payloads_are_not_stored() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        let key = CacheKey::new("scan", &3);
        cache.store(&key, &Payload { xs: vec![f64::INFINITY] });
        assert!(!dir.path().join(format!("{}.json", key.hash)).exists());
    }
}
