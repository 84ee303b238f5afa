//! Trained-model persistence.
//!
//! Layout, little-endian:
//!
//! | field                 | encoding                                  |
//! |-----------------------|-------------------------------------------|
//! | magic                 | 8 bytes `QWNDLSTM`                        |
//! | version               | u32, currently 1                          |
//! | header                | u32 byte length + UTF-8 TOML (architecture, feature names, metadata) |
//! | input normalizer      | u32 d, d x f64 mean, d x f64 scale        |
//! | target normalizer     | same                                      |
//! | parameters            | u64 count + f64 values                    |
//! | checksum              | SHA-256 of everything above (32 bytes)    |

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::lstm::{Architecture, Network};
use super::normalizer::Normalizer;
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 8] = b"QWNDLSTM";
pub const MODEL_VERSION: u32 = 1;
const CHECKSUM_LEN: usize = 32;

/// Descriptive data stored alongside the weights.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelMetadata {
    /// Trajectory type the model was trained on, e.g. `hover` or `line`.
    pub trajectory: String,
    pub sequence_length: usize,
    /// Appends the previous wind estimate to each input row.
    pub autoregressive: bool,
    /// Positions are taken relative to the last sample of each window.
    pub relative_positions: bool,
    pub epochs_trained: usize,
    pub best_validation_loss: f64,
    pub seed: u64,
    pub config_hash: String,
    /// Description of the wind used to generate training data.
    pub training_wind: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub network: Network,
    pub input_norm: Normalizer,
    pub target_norm: Normalizer,
    pub metadata: ModelMetadata,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    architecture: Architecture,
    input_features: Vec<String>,
    target_features: Vec<String>,
    metadata: ModelMetadata,
}

impl Model {
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = Header {
            architecture: self.network.architecture().clone(),
            input_features: self.input_norm.names.clone(),
            target_features: self.target_norm.names.clone(),
            metadata: self.metadata.clone(),
        };
        let text = toml::to_string(&header).expect("header serializes");
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.extend_from_slice(&(text.len() as u32).to_le_bytes());
        out.extend_from_slice(text.as_bytes());
        for norm in [&self.input_norm, &self.target_norm] {
            out.extend_from_slice(&(norm.dim() as u32).to_le_bytes());
            for v in norm.mean.iter().chain(&norm.scale) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let params = self.network.params();
        out.extend_from_slice(&(params.len() as u64).to_le_bytes());
        for v in params {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    /// Parses a model; `origin` names the source in checksum errors.
    pub fn from_bytes(bytes: &[u8], origin: &Path) -> Result<Self> {
        let fmt = |offset: usize, reason: String| Error::Format {
            what: "model file",
            offset: offset as u64,
            reason,
        };
        if bytes.len() < MODEL_MAGIC.len() || &bytes[..8] != MODEL_MAGIC {
            return Err(fmt(0, "bad magic".into()));
        }
        if bytes.len() < 8 + CHECKSUM_LEN {
            return Err(Error::Checksum(origin.to_path_buf()));
        }
        let (body, stored) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
        if Sha256::digest(body).as_slice() != stored {
            return Err(Error::Checksum(origin.to_path_buf()));
        }

        let mut pos = 8;
        let mut take = |n: usize, what: &str| -> Result<&[u8]> {
            if body.len() - pos < n {
                return Err(fmt(pos, format!("truncated {what}")));
            }
            let s = &body[pos..pos + n];
            pos += n;
            Ok(s)
        };
        let u32_at = |b: &[u8]| u32::from_le_bytes(b.try_into().expect("4 bytes"));
        let version = u32_at(take(4, "version")?);
        if version != MODEL_VERSION {
            return Err(Error::Version {
                what: "model file",
                found: version,
                expected: MODEL_VERSION,
            });
        }
        let hlen = u32_at(take(4, "header length")?) as usize;
        let htext = std::str::from_utf8(take(hlen, "header")?).map_err(|e| fmt(16, e.to_string()))?;
        let header: Header = toml::from_str(htext).map_err(|e| fmt(16, e.to_string()))?;

        let mut read_norm = |names: Vec<String>| -> Result<Normalizer> {
            let d = u32_at(take(4, "normalizer size")?) as usize;
            if d != names.len() {
                return Err(fmt(0, format!("normalizer has {d} features, header names {}", names.len())));
            }
            let raw = take(16 * d, "normalizer")?;
            let vals: Vec<f64> = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            Ok(Normalizer {
                names,
                mean: vals[..d].to_vec(),
                scale: vals[d..].to_vec(),
            })
        };
        let input_norm = read_norm(header.input_features)?;
        let target_norm = read_norm(header.target_features)?;
        let count = u64::from_le_bytes(take(8, "parameter count")?.try_into().expect("8 bytes")) as usize;
        let raw = take(count.saturating_mul(8), "parameters")?;
        let params: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        if pos != body.len() {
            return Err(fmt(pos, "trailing bytes before checksum".into()));
        }
        let arch = header.architecture;
        if input_norm.dim() + usize::from(header.metadata.autoregressive) * arch.output_dim != arch.input_dim
            || target_norm.dim() != arch.output_dim
        {
            return Err(fmt(16, "normalizer sizes disagree with the architecture".into()));
        }
        let mut network = Network::zeros(arch)?;
        network.set_params(params)?;
        Ok(Self {
            network,
            input_norm,
            target_norm,
            metadata: header.metadata,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Matrix;

    fn sample_model() -> Model {
        let arch = Architecture {
            input_dim: 4,
            hidden: vec![5, 3],
            output_dim: 2,
            dropout: 0.1,
            candidate: Default::default(),
        };
        let rows = [[1.0, 2.0, 0.1, -0.1], [3.0, -1.0, 0.2, 0.3]];
        let targets = [[1.0, 2.0], [-1.0, 0.5]];
        Model {
            network: Network::new(arch, 7).unwrap(),
            input_norm: Normalizer::fit(&["pn", "pe", "phi", "theta"], rows.iter().map(|r| &r[..])).unwrap(),
            target_norm: Normalizer::fit(&["wn", "we"], targets.iter().map(|r| &r[..])).unwrap(),
            metadata: ModelMetadata {
                trajectory: "hover".into(),
                sequence_length: 10,
                seed: 3,
                best_validation_loss: 0.1 + 0.2,
                ..Default::default()
            },
        }
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let m = sample_model();
        let back = Model::from_bytes(&m.to_bytes(), Path::new("mem")).unwrap();
        assert_eq!(back, m);
        let probe = Matrix::from_vec(3, 4, (0..12).map(|i| i as f64 * 0.1).collect()).unwrap();
        assert_eq!(m.network.predict(&[&probe]).unwrap(), back.network.predict(&[&probe]).unwrap());
    }

    #[test]
    fn truncation_fails_checksum() {
        let bytes = sample_model().to_bytes();
        for cut in [bytes.len() - 1, bytes.len() / 2, 41] {
            assert!(matches!(Model::from_bytes(&bytes[..cut], Path::new("x")), Err(Error::Checksum(_))));
        }
    }

    #[test]
    fn corruption_fails_checksum() {
        let mut bytes = sample_model().to_bytes();
        let n = bytes.len();
        bytes[n / 2] ^= 1;
        assert!(matches!(Model::from_bytes(&bytes, Path::new("x")), Err(Error::Checksum(_))));
    }

    #[test]
    fn wrong_magic_is_a_format_error() {
        let mut bytes = sample_model().to_bytes();
        bytes[0] = b'Z';
        assert!(matches!(Model::from_bytes(&bytes, Path::new("x")), Err(Error::Format { offset: 0, .. })));
    }

    #[test]
    fn wrong_version_is_reported() {
        let mut bytes = sample_model().to_bytes();
        bytes[8] = 2;
        let n = bytes.len();
        let digest = Sha256::digest(&bytes[..n - 32]);
        bytes[n - 32..].copy_from_slice(&digest);
        assert!(matches!(Model::from_bytes(&bytes, Path::new("x")), Err(Error::Version { found: 2, .. })));
    }
}
