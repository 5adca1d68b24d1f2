//! Content-addressed persistence of keys and encrypted models.
//!
//! ```text
//! <root>/keys/<sha256>.bin
//! <root>/models/<sha256>.bin    serialized EncryptedModel
//! <root>/models/<sha256>.json   shape metadata
//! ```

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use hsstree_core::hss::paillier::Ciphertext;
use hsstree_core::protocol::EncryptedModel;
use hsstree_core::wire::decode_model;
use serde::{Deserialize, Serialize};

use crate::error::NetError;
use crate::message::ModelId;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelShape {
    pub modulus_bits: u32,
    pub trees: usize,
    pub heights: Vec<u32>,
    pub n: usize,
    pub t: u32,
    pub gbdt: bool,
    pub bytes: usize,
}

pub struct StoredModel {
    pub id: ModelId,
    pub bytes: Vec<u8>,
    pub model: EncryptedModel<Ciphertext>,
    pub shape: ModelShape,
}

impl StoredModel {
    fn decode(bytes: Vec<u8>) -> Result<Self, NetError> {
        let (model, modulus_bits) = decode_model(&bytes)?;
        let shape = ModelShape {
            modulus_bits,
            trees: model.trees.len(),
            heights: model.trees.iter().map(|t| t.h).collect(),
            n: model.n(),
            t: model.t(),
            gbdt: model.gbdt.is_some(),
            bytes: bytes.len(),
        };
        Ok(Self { id: ModelId::of(&bytes), bytes, model, shape })
    }
}

/// Models and keys by content hash. Reads run concurrently; writes are
/// exclusive.
#[derive(Default)]
pub struct ModelStore {
    root: Option<PathBuf>,
    models: RwLock<HashMap<ModelId, Arc<StoredModel>>>,
    keys: RwLock<HashMap<ModelId, Arc<Vec<u8>>>>,
}

fn store_err(path: &Path, e: impl std::fmt::Display) -> NetError {
    NetError::Store(format!("{}: {e}", path.display()))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), NetError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| store_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| store_err(path, e))
}

impl ModelStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn open(root: impl Into<PathBuf>) -> Result<Self, NetError> {
        let root = root.into();
        for sub in ["keys", "models"] {
            let dir = root.join(sub);
            fs::create_dir_all(&dir).map_err(|e| store_err(&dir, e))?;
        }
        Ok(Self { root: Some(root), ..Self::default() })
    }

    pub fn root(&self) -> Option<&Path> {
        self.root.as_deref()
    }

    fn path(&self, dir: &str, id: &ModelId, ext: &str) -> Option<PathBuf> {
        self.root.as_ref().map(|r| r.join(dir).join(format!("{id}.{ext}")))
    }

    /// Validates, persists and caches a serialized model.
    pub fn put_model(&self, bytes: Vec<u8>) -> Result<Arc<StoredModel>, NetError> {
        let stored = Arc::new(StoredModel::decode(bytes)?);
        if let Some(path) = self.path("models", &stored.id, "bin") {
            write_atomic(&path, &stored.bytes)?;
            let meta = serde_json::to_vec_pretty(&stored.shape).expect("shape serializes");
            write_atomic(&path.with_extension("json"), &meta)?;
        }
        self.models.write().expect("store lock").insert(stored.id, stored.clone());
        Ok(stored)
    }

    /// Cached or loaded from disk; the file must hash to `id`.
    pub fn get_model(&self, id: &ModelId) -> Result<Option<Arc<StoredModel>>, NetError> {
        if let Some(m) = self.models.read().expect("store lock").get(id) {
            return Ok(Some(m.clone()));
        }
        let Some(path) = self.path("models", id, "bin") else {
            return Ok(None);
        };
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(store_err(&path, e)),
        };
        if ModelId::of(&bytes) != *id {
            return Err(store_err(&path, "content does not match its id"));
        }
        let stored = Arc::new(StoredModel::decode(bytes)?);
        self.models.write().expect("store lock").insert(*id, stored.clone());
        Ok(Some(stored))
    }

    pub fn model_ids(&self) -> Result<Vec<ModelId>, NetError> {
        let mut ids: Vec<ModelId> = self.models.read().expect("store lock").keys().copied().collect();
        if let Some(root) = &self.root {
            let dir = root.join("models");
            for entry in fs::read_dir(&dir).map_err(|e| store_err(&dir, e))? {
                let path = entry.map_err(|e| store_err(&dir, e))?.path();
                if path.extension().is_some_and(|e| e == "bin") {
                    if let Some(id) = path.file_stem().and_then(|s| s.to_str()).and_then(|s| s.parse().ok()) {
                        ids.push(id);
                    }
                }
            }
        }
        ids.sort();
        ids.dedup();
        Ok(ids)
    }

    pub fn put_key(&self, bytes: Vec<u8>) -> Result<ModelId, NetError> {
        let id = ModelId::of(&bytes);
        if let Some(path) = self.path("keys", &id, "bin") {
            write_atomic(&path, &bytes)?;
        }
        self.keys.write().expect("store lock").insert(id, Arc::new(bytes));
        Ok(id)
    }

    pub fn get_key(&self, id: &ModelId) -> Result<Option<Arc<Vec<u8>>>, NetError> {
        if let Some(k) = self.keys.read().expect("store lock").get(id) {
            return Ok(Some(k.clone()));
        }
        let Some(path) = self.path("keys", id, "bin") else {
            return Ok(None);
        };
        match fs::read(&path) {
            Ok(b) if ModelId::of(&b) == *id => {
                let b = Arc::new(b);
                self.keys.write().expect("store lock").insert(*id, b.clone());
                Ok(Some(b))
            }
            Ok(_) => Err(store_err(&path, "content does not match its id")),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(store_err(&path, e)),
        }
    }
}
