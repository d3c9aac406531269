use std::fmt;
use std::fs::{self, File};
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::SystemTime;

use sha2::{Digest, Sha256};

/// SHA-256 over endpoint path, model id and canonical request body.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CacheKey([u8; 32]);

impl CacheKey {
    pub fn new(path: &str, model_id: &str, canonical_body: &str) -> Self {
        let mut h = Sha256::new();
        h.update(path.as_bytes());
        h.update([0u8]);
        h.update(model_id.as_bytes());
        h.update([0u8]);
        h.update(canonical_body.as_bytes());
        CacheKey(h.finalize().into())
    }

    pub fn hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Display for CacheKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.hex())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheEntry {
    pub key: CacheKey,
    pub value: String,
    pub created_at: SystemTime,
}

/// Directory of response bodies named by hex digest.
///
/// Writes go to a temporary sibling and are renamed into place, so readers
/// never observe a partial file. Concurrent writers of one key race benignly:
/// the value is a function of the key.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl ResponseCache {
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(ResponseCache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(key.hex())
    }

    pub fn load(&self, key: &CacheKey) -> io::Result<Option<CacheEntry>> {
        let mut file = match File::open(self.path_for(key)) {
            Ok(f) => f,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e),
        };
        let mut value = String::new();
        file.read_to_string(&mut value)?;
        let created_at = file.metadata()?.modified()?;
        Ok(Some(CacheEntry {
            key: *key,
            value,
            created_at,
        }))
    }

    pub fn store(&self, key: &CacheKey, value: &str) -> io::Result<()> {
        self.write_atomic(&self.path_for(key), value)
    }

    /// Stores an auxiliary named document (e.g. a health record).
    pub fn store_named(&self, name: &str, value: &str) -> io::Result<()> {
        let sub = self.dir.join("meta");
        fs::create_dir_all(&sub)?;
        self.write_atomic(&sub.join(name), value)
    }

    pub fn load_named(&self, name: &str) -> io::Result<Option<String>> {
        match fs::read_to_string(self.dir.join("meta").join(name)) {
            Ok(s) => Ok(Some(s)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn write_atomic(&self, target: &Path, value: &str) -> io::Result<()> {
        let n = TMP_COUNTER.fetch_add(1, Ordering::Relaxed);
        let tmp = target.with_extension(format!("tmp.{}.{n}", std::process::id()));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(value.as_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, target)
    }
}
