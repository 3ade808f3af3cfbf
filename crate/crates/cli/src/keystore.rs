//! Named Ed25519 key pairs in a plaintext JSON file.
//!
//! Secrets are stored unencrypted with owner-only permissions where the
//! platform supports them; this is prototype-grade key management, not
//! production custody. Writes go through an advisory lock file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use utxo_debt_core::Keypair;

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KeyEntry {
    pub name: String,
    pub pubkey_hex: String,
    pub secret_hex: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Keystore {
    pub entries: Vec<KeyEntry>,
}

/// Held while writing; removing the lock file releases it.
struct WriteLock(PathBuf);

impl Drop for WriteLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

fn acquire_lock(path: &Path) -> Result<WriteLock, CliError> {
    let lock_path = path.with_extension("lock");
    match fs::OpenOptions::new()
        .write(true)
        .create_new(true)
        .open(&lock_path)
    {
        Ok(_) => Ok(WriteLock(lock_path)),
        Err(err) => Err(CliError::Usage(format!(
            "keystore is locked by another process ({}): {err}",
            lock_path.display()
        ))),
    }
}

impl Keystore {
    pub fn load(path: &Path) -> Result<Keystore, CliError> {
        if !path.exists() {
            return Ok(Keystore::default());
        }
        let raw = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read keystore: {e}")))?;
        serde_json::from_str(&raw).map_err(|e| CliError::Usage(format!("bad keystore file: {e}")))
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let _lock = acquire_lock(path)?;
        let json = serde_json::to_string_pretty(self).expect("keystore serializes");
        fs::write(path, json).map_err(|e| CliError::Usage(format!("cannot write keystore: {e}")))?;
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            let _ = fs::set_permissions(path, fs::Permissions::from_mode(0o600));
        }
        Ok(())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.iter().any(|e| e.name == name)
    }

    pub fn add(&mut self, name: &str, key: &Keypair) -> Result<(), CliError> {
        if self.contains(name) {
            return Err(CliError::Usage(format!("key name '{name}' already exists")));
        }
        self.entries.push(KeyEntry {
            name: name.to_string(),
            pubkey_hex: key.public().to_hex(),
            secret_hex: hex::encode(key.secret_bytes()),
        });
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<Keypair, CliError> {
        let entry = self
            .entries
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| CliError::Usage(format!("no key named '{name}' in the keystore")))?;
        let bytes = hex::decode(&entry.secret_hex)
            .map_err(|e| CliError::Usage(format!("corrupt secret for '{name}': {e}")))?;
        let seed: [u8; 32] = bytes
            .try_into()
            .map_err(|_| CliError::Usage(format!("secret for '{name}' is not 32 bytes")))?;
        Ok(Keypair::from_seed(seed))
    }
}
