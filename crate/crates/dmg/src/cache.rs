//! Content-addressed response cache: one JSON file per request, named by
//! the SHA-256 of the model name and the messages sent.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::endpoint::{ChatMessage, LlmResponse};

#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

pub fn cache_key(model: &str, messages: &[ChatMessage]) -> String {
    let mut h = Sha256::new();
    h.update(model.as_bytes());
    h.update([0u8]);
    h.update(serde_json::to_vec(messages).expect("messages serialize"));
    hex::encode(h.finalize())
}

impl ResponseCache {
    pub fn open(dir: impl AsRef<Path>) -> std::io::Result<Self> {
        fs::create_dir_all(dir.as_ref())?;
        Ok(Self {
            dir: dir.as_ref().to_path_buf(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// A missing or unreadable entry is a miss.
    pub fn get(&self, key: &str) -> Option<LlmResponse> {
        let text = fs::read_to_string(self.path(key)).ok()?;
        serde_json::from_str(&text).ok()
    }

    /// Writes through a temporary file and renames it into place, so
    /// concurrent readers never see a partial entry.
    pub fn put(&self, key: &str, response: &LlmResponse) -> std::io::Result<()> {
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(serde_json::to_string(response)?.as_bytes())?;
        tmp.persist(self.path(key)).map_err(|e| e.error)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_depends_on_model_and_messages() {
        let m = [ChatMessage::user("hello")];
        let k = cache_key("a", &m);
        assert_eq!(k.len(), 64);
        assert_eq!(k, cache_key("a", &m));
        assert_ne!(k, cache_key("b", &m));
        assert_ne!(k, cache_key("a", &[ChatMessage::user("hello!")]));
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::open(dir.path().join("c")).unwrap();
        let r = LlmResponse {
            text: "1. favor".into(),
            prompt_tokens: Some(3),
            completion_tokens: None,
        };
        assert!(cache.get("k").is_none());
        cache.put("k", &r).unwrap();
        assert_eq!(cache.get("k"), Some(r));
    }
}
