//! Structured text configuration: a TOML tree parsed into the typed
//! sections used across the crate, with strict validation (unknown keys are
//! errors) and `key.path=value` overrides applied after file values.

use crate::dataset::{frame_length, NormalizationSettings};
use crate::denoiser::NetworkConfig;
use crate::error::{Error, Result};
use crate::guides::GuideSpec;
use crate::trainer::TrainingConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Base topology selected when no explicit [network] section is given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Six-stage network with attention, as used for real training runs.
    #[default]
    Full,
    /// Two-stage network small enough to train on a desktop CPU.
    Desk,
}

/// The whole configuration file. Every section has documented defaults, so
/// an empty file is valid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    /// Model sample rate in Hz.
    pub fs: u32,
    /// Disk speed defining the revolution period (frame length).
    pub rpm: f64,
    pub profile: Profile,
    pub network: Option<NetworkConfig>,
    pub training: TrainingConfig,
    pub normalization: NormalizationSettings,
    pub guide: Option<GuideSpec>,
}

impl Default for FileConfig {
    fn default() -> Self {
        FileConfig {
            fs: 22050,
            rpm: 78.0,
            profile: Profile::Full,
            network: None,
            training: TrainingConfig::default(),
            normalization: NormalizationSettings::default(),
            guide: None,
        }
    }
}

impl FileConfig {
    /// Final network configuration: fill in the derived frame length where
    /// it was left unset, then validate. A frame length derived from
    /// (fs, rpm) is rounded to the nearest multiple of the total stride so
    /// deep topologies stay usable at any sample rate.
    pub fn resolve_network(&self) -> Result<NetworkConfig> {
        let mut net = match &self.network {
            Some(n) => n.clone(),
            None => match self.profile {
                Profile::Full => NetworkConfig::full(self.fs, 0),
                Profile::Desk => NetworkConfig::desk(self.fs, 0),
            },
        };
        if net.fs == 0 {
            net.fs = self.fs;
        }
        if net.sample_count == 0 {
            if self.rpm <= 0.0 {
                return Err(Error::Config(format!("rpm {} must be positive", self.rpm)));
            }
            let exact = frame_length(net.fs, self.rpm);
            let stride = net.total_stride().max(1);
            let rounded = ((exact as f64 / stride as f64).round() as usize).max(1) * stride;
            net.sample_count = rounded;
        }
        net.validate()?;
        self.training.validate()?;
        if let Some(g) = &self.guide {
            g.validate()?;
        }
        Ok(net)
    }
}

/// Parse a configuration file and apply `key.path=value` overrides on top.
pub fn parse_config(path: Option<&Path>, overrides: &[String]) -> Result<FileConfig> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
        None => String::new(),
    };
    parse_config_str(&text, overrides).map_err(|e| match (path, e) {
        (Some(p), Error::Config(msg)) => Error::Config(format!("{}: {msg}", p.display())),
        (_, e) => e,
    })
}

pub fn parse_config_str(text: &str, overrides: &[String]) -> Result<FileConfig> {
    let mut table: toml::Table = toml::from_str(text)
        .map_err(|e| Error::Config(format!("parse error: {e}")))?;
    for entry in overrides {
        apply_override(&mut table, entry)?;
    }
    let value = toml::Value::Table(table);
    let config: FileConfig = FileConfig::deserialize(value)
        .map_err(|e| Error::Config(format!("invalid configuration: {e}")))?;
    Ok(config)
}

/// Set `a.b.c=value` inside the raw TOML tree, creating intermediate
/// tables. The value text is parsed as TOML; bare words fall back to
/// strings.
fn apply_override(table: &mut toml::Table, entry: &str) -> Result<()> {
    let (path, raw) = entry.split_once('=').ok_or_else(|| {
        Error::Usage(format!("override '{entry}' must look like section.key=value"))
    })?;
    let path = path.trim();
    if path.is_empty() {
        return Err(Error::Usage(format!("override '{entry}' has an empty key path")));
    }
    let value = parse_value(raw.trim())?;
    let mut segments = path.split('.').collect::<Vec<_>>();
    let last = segments.pop().expect("non-empty path");
    let mut current = table;
    for seg in segments {
        let slot = current
            .entry(seg.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        current = slot.as_table_mut().ok_or_else(|| {
            Error::Usage(format!("override path '{path}' crosses the non-table key '{seg}'"))
        })?;
    }
    current.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> Result<toml::Value> {
    let wrapped = format!("v = {raw}");
    if let Ok(mut t) = toml::from_str::<toml::Table>(&wrapped) {
        if let Some(v) = t.remove("v") {
            return Ok(v);
        }
    }
    Ok(toml::Value::String(raw.to_string()))
}

/// Load a guide spec from its own TOML file.
pub fn parse_guide_spec(path: &Path) -> Result<GuideSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let spec: GuideSpec = toml::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::NormalizationMode;

    #[test]
    fn empty_config_gives_documented_defaults() {
        let cfg = parse_config_str("", &[]).unwrap();
        assert_eq!(cfg.fs, 22050);
        assert_eq!(cfg.rpm, 78.0);
        assert_eq!(cfg.profile, Profile::Full);
        assert_eq!(cfg.training.learning_rate, 2e-4);
        assert_eq!(cfg.training.ema_rate, 0.999);
        assert_eq!(cfg.training.batch_size, 16);
        assert_eq!(cfg.normalization.gain_db, -10.0);
        assert_eq!(cfg.normalization.b_chi, 1.4826);
        assert_eq!(cfg.normalization.mode, NormalizationMode::Consistent);
        let net = cfg.resolve_network().unwrap();
        assert_eq!(net.channels, vec![32, 64, 64, 128, 128, 256]);
        assert_eq!(net.attention_stages, vec![3, 4, 5]);
        // 22050·60/78 = 16961.5…, rounded to the nearest multiple of 32
        assert_eq!(net.sample_count % 32, 0);
        assert!((net.sample_count as i64 - 16962).abs() <= 16);
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let err = parse_config_str("frobnicate = 3\n", &[]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("frobnicate"), "{msg}");
        let err = parse_config_str("[training]\nlearning_rte = 1.0\n", &[]).unwrap_err();
        assert!(err.to_string().contains("learning_rte"));
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = parse_config_str("fs = =\n", &[]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 1"), "{msg}");
    }

    #[test]
    fn overrides_apply_after_file_values() {
        let text = "[training]\nlearning_rate = 1.0\n";
        let cfg =
            parse_config_str(text, &["training.learning_rate=2e-4".into()]).unwrap();
        assert_eq!(cfg.training.learning_rate, 2e-4);
        let cfg = parse_config_str("", &["profile=\"desk\"".into(), "fs=8000".into()]).unwrap();
        assert_eq!(cfg.profile, Profile::Desk);
        let net = cfg.resolve_network().unwrap();
        assert_eq!(net.fs, 8000);
        assert_eq!(net.channels, vec![8, 16]);
        assert_eq!(net.sample_count, 6154);
        // bad override shapes are usage errors
        assert!(matches!(
            parse_config_str("", &["training=5".into(), "training.x=1".into()]).unwrap_err(),
            Error::Usage(_)
        ));
        assert!(parse_config_str("", &["nonsense".into()]).is_err());
    }

    #[test]
    fn desk_profile_derives_even_frame_length() {
        let cfg = parse_config_str("profile = \"desk\"\nfs = 8000\n", &[]).unwrap();
        let net = cfg.resolve_network().unwrap();
        assert_eq!(net.sample_count, 6154); // round(8000·60/78), already even
        assert_eq!(net.total_stride(), 2);
    }

    #[test]
    fn explicit_network_section_is_validated() {
        let text = "
fs = 8000
[network]
fs = 8000
sample_count = 63
channels = [4, 8]
downsample_factors = [2]
";
        let cfg = parse_config_str(text, &[]).unwrap();
        assert!(cfg.resolve_network().is_err());
        let cfg = parse_config_str(
            text,
            &["network.sample_count=64".into()],
        )
        .unwrap();
        let net = cfg.resolve_network().unwrap();
        assert_eq!(net.sample_count, 64);
    }

    #[test]
    fn guide_spec_round_trips_through_toml() {
        let text = r#"
fs = 8000
[guide]
fs = 8000
length_s = 0.5
[guide.hiss]
level_db = -24.0
eq_bands = [{ center_hz = 2500.0, gain_db = 6.0, q = 1.0 }]
[[guide.thumps]]
tail_amplitude = 0.3
envelope_decay_s = 0.06
f_max_hz = 150.0
f_min_hz = 60.0
freq_decay_s = 0.02
onset_s = 0.2
"#;
        let cfg = parse_config_str(text, &[]).unwrap();
        let guide = cfg.guide.unwrap();
        assert_eq!(guide.thumps.len(), 1);
        assert_eq!(guide.hiss.as_ref().unwrap().eq_bands.len(), 1);
        assert_eq!(guide.frame_len(), 4000);
    }
}
