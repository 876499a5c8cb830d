//! Pinned calibration constants, embedded at build time.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::Deserialize;
use sha2::{Digest, Sha256};

pub const CONSTANTS_TOML: &str = include_str!("../../constants.toml");

#[derive(Debug, Clone, Deserialize)]
struct File {
    lemp4: BTreeMap<String, f64>,
}

/// Constants read from the embedded file.
#[derive(Debug, Clone)]
pub struct Constants {
    lemp4: BTreeMap<String, f64>,
}

impl Constants {
    pub fn pinned() -> &'static Constants {
        static C: OnceLock<Constants> = OnceLock::new();
        C.get_or_init(|| {
            let f: File = toml::from_str(CONSTANTS_TOML).expect("embedded constants file parses");
            Constants { lemp4: f.lemp4 }
        })
    }

    /// Pinned `C_cal(r)` if `r` was calibrated.
    pub fn lemp4(&self, r: f64) -> Option<f64> {
        self.lemp4.get(&key(r)).copied()
    }

    pub fn lemp4_table(&self) -> &BTreeMap<String, f64> {
        &self.lemp4
    }
}

pub fn key(r: f64) -> String {
    format!("r{r}")
}

/// Hex sha256 of the embedded constants file.
pub fn constants_sha256() -> String {
    hex::encode(Sha256::digest(CONSTANTS_TOML.as_bytes()))
}
