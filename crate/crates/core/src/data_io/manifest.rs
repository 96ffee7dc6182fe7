//! Run manifests: flat key-value text files that pin everything needed to
//! reproduce a run, sealed with a content checksum.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::data::hex;
use crate::error::{Error, Result};

const FORMAT_TAG: &str = "dplinear.manifest.v1";

/// Keys every manifest must carry.
const REQUIRED_KEYS: &[&str] = &[
    "format",
    "algorithm",
    "seed",
    "dataset_fingerprint",
    "software_version",
    "wall_ms",
];

/// A reproducibility record for one run: algorithm, seed, full
/// configuration, budget, and the dataset fingerprint, in insertion order.
///
/// `wall_ms` is informational and excluded from the checksum, so repeated
/// runs of the same configuration produce the same manifest hash.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunManifest {
    entries: Vec<(String, String)>,
}

impl RunManifest {
    /// Start a manifest; configuration keys are appended with
    /// [`set`](Self::set).
    pub fn new(algorithm: &str, seed: u64, dataset_fingerprint: &str) -> Self {
        let mut m = Self { entries: Vec::new() };
        m.set("format", FORMAT_TAG);
        m.set("algorithm", algorithm);
        m.set("seed", seed);
        m.set("dataset_fingerprint", dataset_fingerprint);
        m.set("software_version", env!("CARGO_PKG_VERSION"));
        m.set("wall_ms", 0u64);
        m
    }

    /// Insert or overwrite a key.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        debug_assert!(!key.contains('=') && !key.contains('\n'));
        debug_assert!(!value.contains('\n'));
        if let Some(e) = self.entries.iter_mut().find(|(k, _)| k == key) {
            e.1 = value;
        } else {
            self.entries.push((key.to_string(), value));
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Format(format!("manifest: missing field {key:?}")))
    }

    fn checksum_payload(&self) -> String {
        let mut payload = String::new();
        for (k, v) in &self.entries {
            if k == "wall_ms" || k == "checksum" {
                continue;
            }
            payload.push_str(k);
            payload.push('=');
            payload.push_str(v);
            payload.push('\n');
        }
        payload
    }

    /// Hash sealing the reproducibility-relevant content.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.checksum_payload().as_bytes());
        hex(&h.finalize())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            if k == "checksum" {
                continue;
            }
            out.push_str(&format!("{k}={v}\n"));
        }
        out.push_str(&format!("checksum={}\n", self.checksum()));
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut recorded_checksum = None;
        for (no, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Format(format!("manifest: line {} has no '='", no + 1))
            })?;
            if k == "checksum" {
                recorded_checksum = Some(v.to_string());
            } else {
                entries.push((k.to_string(), v.to_string()));
            }
        }
        let manifest = Self { entries };
        for key in REQUIRED_KEYS {
            manifest.require(key)?;
        }
        if manifest.require("format")? != FORMAT_TAG {
            return Err(Error::Format(format!(
                "manifest: unknown format {:?}",
                manifest.require("format")?
            )));
        }
        let recorded =
            recorded_checksum.ok_or_else(|| Error::Format("manifest: missing field \"checksum\"".into()))?;
        let actual = manifest.checksum();
        if recorded != actual {
            return Err(Error::Format(format!(
                "manifest: checksum mismatch (recorded {recorded}, content hashes to {actual})"
            )));
        }
        Ok(manifest)
    }
}

pub fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<()> {
    fs::write(path, manifest.to_text())?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    RunManifest::from_text(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunManifest {
        let mut m = RunManifest::new("dpsgd", 42, "deadbeef");
        m.set("epsilon", 1.0);
        m.set("delta", 1e-5);
        m.set("batch", 64);
        m.set("lr", 0.25);
        m.set("wall_ms", 1234u64);
        m
    }

    #[test]
    fn round_trip_preserves_content() {
        let m = sample();
        let back = RunManifest::from_text(&m.to_text()).unwrap();
        assert_eq!(m, back);
        assert_eq!(m.checksum(), back.checksum());
    }

    #[test]
    fn wall_clock_does_not_change_the_checksum() {
        let mut a = sample();
        let mut b = sample();
        a.set("wall_ms", 1u64);
        b.set("wall_ms", 99_999u64);
        assert_eq!(a.checksum(), b.checksum());
    }

    #[test]
    fn tampering_is_detected() {
        let text = sample().to_text();
        let tampered = text.replace("seed=42", "seed=43");
        let err = RunManifest::from_text(&tampered).unwrap_err();
        assert!(err.to_string().contains("checksum mismatch"));
    }

    #[test]
    fn missing_field_is_named() {
        let text = sample()
            .to_text()
            .lines()
            .filter(|l| !l.starts_with("seed="))
            .collect::<Vec<_>>()
            .join("\n");
        let err = RunManifest::from_text(&text).unwrap_err();
        assert!(err.to_string().contains("\"seed\""), "{err}");
    }

    #[test]
    fn file_round_trip() {
        let path = std::env::temp_dir().join(format!("dplinear-manifest-{}", std::process::id()));
        let m = sample();
        write_manifest(&path, &m).unwrap();
        let back = read_manifest(&path).unwrap();
        assert_eq!(m, back);
        fs::remove_file(path).unwrap();
    }
}
