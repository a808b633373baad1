//! `BMDS1` dataset files and CSV export.
//!
//! Layout: magic `BMDS1`, newline, one line of compact JSON header, newline,
//! the feature matrix row-major as little-endian `f64`, then the labels.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, NormMeta};
use super::params::ScenarioParams;
use crate::error::{Error, Result};
use crate::numcore::checkpoint::{read_f64s, split_header};
use crate::numcore::Matrix;

pub const MAGIC: &[u8] = b"BMDS1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub scenario: ScenarioParams,
    pub norm_meta: NormMeta,
    pub rows: usize,
    pub cols: usize,
    pub adversarial: bool,
    pub epsilon: Option<f64>,
}

/// Encodes `data`; `adversarial_eps` tags FGSM-perturbed copies.
pub fn encode(data: &Dataset, adversarial_eps: Option<f64>) -> Vec<u8> {
    let header = DatasetHeader {
        scenario: data.scenario.clone(),
        norm_meta: data.norm_meta.clone(),
        rows: data.len(),
        cols: data.num_features(),
        adversarial: adversarial_eps.is_some(),
        epsilon: adversarial_eps,
    };
    let mut out = Vec::with_capacity(256 + (data.features.as_slice().len() + data.len()) * 8);
    out.extend_from_slice(MAGIC);
    out.push(b'\n');
    out.extend_from_slice(&serde_json::to_vec(&header).expect("header serialises"));
    out.push(b'\n');
    for v in data.features.as_slice().iter().chain(&data.labels) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> std::result::Result<(Dataset, DatasetHeader), String> {
    let (header, body) = split_header(bytes, MAGIC)?;
    let header: DatasetHeader = serde_json::from_slice(header).map_err(|e| e.to_string())?;
    let mut floats = read_f64s(body)?;
    let n_feat = header.rows * header.cols;
    if floats.len() != n_feat + header.rows {
        return Err(format!(
            "expected {} values, found {}",
            n_feat + header.rows,
            floats.len()
        ));
    }
    let labels = floats.split_off(n_feat);
    let features = Matrix::from_vec(header.rows, header.cols, floats).map_err(|e| e.to_string())?;
    Ok((
        Dataset {
            features,
            labels,
            norm_meta: header.norm_meta.clone(),
            scenario: header.scenario.clone(),
        },
        header,
    ))
}

pub fn write_dataset(path: &Path, data: &Dataset, adversarial_eps: Option<f64>) -> Result<()> {
    fs::write(path, encode(data, adversarial_eps)).map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: &Path) -> Result<(Dataset, DatasetHeader)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|message| Error::Format {
        path: path.to_path_buf(),
        message,
    })
}

/// One header row (`f0..f{n-1},label`) then one row per instance.
pub fn write_csv(path: &Path, data: &Dataset) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = std::io::BufWriter::new(fs::File::create(path).map_err(io)?);
    let header: Vec<String> = (0..data.num_features())
        .map(|i| format!("f{i}"))
        .chain(std::iter::once("label".to_string()))
        .collect();
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for (row, y) in data.features.iter_rows().zip(&data.labels) {
        let cells: Vec<String> = row.iter().chain(std::iter::once(y)).map(|v| v.to_string()).collect();
        writeln!(w, "{}", cells.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::build_dataset;

    #[test]
    fn roundtrip_and_flag() {
        let d = build_dataset(&ScenarioParams::default(), 20).unwrap();
        let bytes = encode(&d, Some(0.05));
        assert!(bytes.starts_with(b"BMDS1\n"));
        let (back, header) = decode(&bytes).unwrap();
        assert_eq!(back, d);
        assert!(header.adversarial);
        assert_eq!(header.epsilon, Some(0.05));
        let (_, clean) = decode(&encode(&d, None)).unwrap();
        assert!(!clean.adversarial);
    }

    #[test]
    fn truncated_rejected() {
        let d = build_dataset(&ScenarioParams::default(), 5).unwrap();
        let bytes = encode(&d, None);
        assert!(decode(&bytes[..bytes.len() - 8]).is_err());
    }

    #[test]
    fn csv_layout() {
        let d = build_dataset(&ScenarioParams::default(), 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        write_csv(&path, &d).unwrap();
        let text = fs::read_to_string(path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("f0,f1,"));
        assert!(lines[0].ends_with(",f15,label"));
        assert_eq!(lines[1].split(',').count(), 17);
    }
}
