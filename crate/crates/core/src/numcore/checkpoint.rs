//! `BMMLP1` model checkpoints.
//!
//! Layout: the magic `BMMLP1`, a newline, one line of compact JSON describing
//! the layer stack, a newline, then every weight matrix (row-major) followed by
//! its bias vector, layer by layer, as little-endian `f64`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::mlp::{Activation, DenseLayer, MlpModel};
use crate::error::{Error, Result};

pub const MAGIC: &[u8] = b"BMMLP1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LayerHeader {
    in_dim: usize,
    out_dim: usize,
    activation: Activation,
    dropout_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    input_dim: usize,
    rng_seed: u64,
    layers: Vec<LayerHeader>,
}

pub fn encode(model: &MlpModel) -> Vec<u8> {
    let header = Header {
        input_dim: model.input_dim(),
        rng_seed: model.rng_seed(),
        layers: model
            .layers()
            .iter()
            .map(|l| LayerHeader {
                in_dim: l.in_dim(),
                out_dim: l.out_dim(),
                activation: l.activation,
                dropout_ratio: l.dropout_ratio,
            })
            .collect(),
    };
    let mut out = Vec::with_capacity(64 + model.num_params() * 8);
    out.extend_from_slice(MAGIC);
    out.push(b'\n');
    out.extend_from_slice(&serde_json::to_vec(&header).expect("header serialises"));
    out.push(b'\n');
    for l in model.layers() {
        for v in l.weights.as_slice().iter().chain(&l.bias) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> std::result::Result<MlpModel, String> {
    let (header, body) = split_header(bytes, MAGIC)?;
    let header: Header = serde_json::from_slice(header).map_err(|e| e.to_string())?;
    let mut floats = read_f64s(body)?.into_iter();
    let mut layers = Vec::with_capacity(header.layers.len());
    for lh in &header.layers {
        let mut take = |n: usize| -> std::result::Result<Vec<f64>, String> {
            let v: Vec<f64> = floats.by_ref().take(n).collect();
            if v.len() == n {
                Ok(v)
            } else {
                Err("truncated parameter block".into())
            }
        };
        let weights = Matrix::from_vec(lh.out_dim, lh.in_dim, take(lh.out_dim * lh.in_dim)?)
            .map_err(|e| e.to_string())?;
        let bias = take(lh.out_dim)?;
        layers.push(DenseLayer {
            weights,
            bias,
            activation: lh.activation,
            dropout_ratio: lh.dropout_ratio,
        });
    }
    if floats.next().is_some() {
        return Err("trailing data after parameters".into());
    }
    let model = MlpModel::from_layers(layers, header.rng_seed).map_err(|e| e.to_string())?;
    if model.input_dim() != header.input_dim {
        return Err("input_dim disagrees with first layer".into());
    }
    Ok(model)
}

pub fn save(model: &MlpModel, path: &Path) -> Result<()> {
    fs::write(path, encode(model)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<MlpModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|message| Error::Format {
        path: path.to_path_buf(),
        message,
    })
}

/// Splits `magic \n json \n body`.
pub(crate) fn split_header<'a>(
    bytes: &'a [u8],
    magic: &[u8],
) -> std::result::Result<(&'a [u8], &'a [u8]), String> {
    let rest = bytes
        .strip_prefix(magic)
        .and_then(|r| r.strip_prefix(b"\n"))
        .ok_or_else(|| format!("missing magic {}", String::from_utf8_lossy(magic)))?;
    let nl = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or("unterminated header")?;
    Ok((&rest[..nl], &rest[nl + 1..]))
}

pub(crate) fn read_f64s(body: &[u8]) -> std::result::Result<Vec<f64>, String> {
    if !body.len().is_multiple_of(8) {
        return Err("body length is not a multiple of 8".into());
    }
    Ok(body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::init_model;

    #[test]
    fn roundtrip_is_exact() {
        let m = init_model(7, 42).unwrap();
        let bytes = encode(&m);
        assert!(bytes.starts_with(b"BMMLP1\n"));
        assert_eq!(decode(&bytes).unwrap(), m);
    }

    #[test]
    fn body_is_little_endian_row_major() {
        let m = init_model(2, 1).unwrap();
        let bytes = encode(&m);
        let (_, body) = split_header(&bytes, MAGIC).unwrap();
        let first = f64::from_le_bytes(body[..8].try_into().unwrap());
        assert_eq!(first, m.layers()[0].weights.get(0, 0));
        let second = f64::from_le_bytes(body[8..16].try_into().unwrap());
        assert_eq!(second, m.layers()[0].weights.get(0, 1));
        assert_eq!(body.len(), m.num_params() * 8);
    }

    #[test]
    fn corrupt_inputs_rejected() {
        let m = init_model(3, 1).unwrap();
        let bytes = encode(&m);
        assert!(decode(&bytes[..bytes.len() - 8]).is_err());
        assert!(decode(b"BMMLP2\n{}\n").is_err());
        let mut extra = bytes.clone();
        extra.extend_from_slice(&[0u8; 8]);
        assert!(decode(&extra).is_err());
    }
}
