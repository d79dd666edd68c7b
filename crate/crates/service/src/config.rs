use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ServiceError;

/// Environment variable that overrides `data_dir`.
pub const DATA_DIR_ENV: &str = "DENGUE_DATA_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApiConfig {
    pub bind: SocketAddr,
    pub data_dir: PathBuf,
    /// Reject every mutating endpoint with `READ_ONLY`.
    pub read_only: bool,
    /// Origins allowed to call the API from a browser. Empty disables CORS.
    pub cors: Vec<String>,
    /// Directory of a built UI bundle to serve at `/`.
    pub static_dir: Option<PathBuf>,
}

impl Default for ApiConfig {
    fn default() -> Self {
        ApiConfig {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            data_dir: PathBuf::from("data"),
            read_only: false,
            cors: Vec::new(),
            static_dir: None,
        }
    }
}

impl ApiConfig {
    pub fn from_file(path: &Path) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))
    }

    /// Applies `DENGUE_DATA_DIR` when it is set and non-empty.
    pub fn with_env(mut self) -> Self {
        if let Some(dir) = std::env::var_os(DATA_DIR_ENV).filter(|v| !v.is_empty()) {
            self.data_dir = PathBuf::from(dir);
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let c: ApiConfig = toml::from_str("read_only = true\ncors = [\"http://localhost:5173\"]").unwrap();
        assert!(c.read_only);
        assert_eq!(c.bind, ApiConfig::default().bind);
        assert_eq!(c.cors.len(), 1);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<ApiConfig>("port = 1").is_err());
    }
}
