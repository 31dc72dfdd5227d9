//! Flat run configuration shared by config files, flag overrides and manifests.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Every key a config file or manifest may carry. Unset keys fall back to
/// per-command defaults when the config is resolved.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backend: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perplexity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sam_rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_decay: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )*
    };
}

impl RunSettings {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(format!("cannot encode manifest: {e}")))
    }

    /// Values set in `top` replace those in `self`.
    pub fn overlay(mut self, top: &RunSettings) -> Self {
        overlay!(self, top; command, input, out, seed, backend, perplexity, scale_a, depth,
            epochs, snapshot, samples, resolution, learning_rate, sam_rho, weight_decay, tau, dt,
            half_width);
        self
    }

    pub fn require_input(&self) -> Result<&str, CliError> {
        self.input.as_deref().ok_or_else(|| {
            CliError::Config("no input given; pass a path or set `input` in the config file".into())
        })
    }

    pub fn require_out(&self) -> Result<&str, CliError> {
        self.out
            .as_deref()
            .ok_or_else(|| CliError::Config("no output directory; pass --out".into()))
    }

    /// Seeds are stored as TOML integers, which are signed 64-bit.
    pub fn check_seed(&self) -> Result<(), CliError> {
        match self.seed {
            Some(s) if s > i64::MAX as u64 => Err(CliError::Config(format!(
                "seed {s} exceeds the largest storable value {}",
                i64::MAX
            ))),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let file = RunSettings::parse("seed = 3\nepochs = 10\nbackend = \"infidelity\"\n").unwrap();
        let flags = RunSettings {
            epochs: Some(20),
            ..Default::default()
        };
        let merged = file.overlay(&flags);
        assert_eq!(merged.seed, Some(3));
        assert_eq!(merged.epochs, Some(20));
        assert_eq!(merged.backend.as_deref(), Some("infidelity"));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(RunSettings::parse("epocs = 3"), Err(CliError::Config(_))));
    }

    #[test]
    fn toml_round_trip() {
        let s = RunSettings {
            command: Some("embed".into()),
            perplexity: Some(0.1 + 0.2),
            learning_rate: Some(1e-3),
            seed: Some(7),
            ..Default::default()
        };
        assert_eq!(RunSettings::parse(&s.to_toml().unwrap()).unwrap(), s);
    }
}
