//! Binary container for trained parameters.
//!
//! Layout (little endian): magic `RFWT`, u32 version, u64 manifest
//! length, a JSON manifest listing every tensor (name, shape, offset in
//! values), then all values as f64. Reloading is bit-identical.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::graph::{Param, ParamSet};

pub const WEIGHT_MAGIC: &[u8; 4] = b"RFWT";
pub const WEIGHT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    /// Offset into the value blob, counted in f64 values.
    offset: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    tensors: Vec<TensorEntry>,
    total_values: usize,
}

fn malformed(path: &Path, reason: impl Into<String>) -> Error {
    Error::MalformedFile {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

pub fn save_params(path: &Path, params: &ParamSet) -> Result<()> {
    let mut offset = 0usize;
    let tensors = params
        .params
        .iter()
        .map(|p| {
            let entry = TensorEntry {
                name: p.name.clone(),
                shape: p.shape.clone(),
                offset,
            };
            offset += p.data.len();
            entry
        })
        .collect();
    let manifest = Manifest {
        tensors,
        total_values: offset,
    };
    let manifest_json = serde_json::to_vec(&manifest)
        .map_err(|e| Error::Config(format!("weight manifest serialization: {e}")))?;

    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path.display().to_string(), e);
    w.write_all(WEIGHT_MAGIC).map_err(io_err)?;
    w.write_all(&WEIGHT_VERSION.to_le_bytes()).map_err(io_err)?;
    w.write_all(&(manifest_json.len() as u64).to_le_bytes()).map_err(io_err)?;
    w.write_all(&manifest_json).map_err(io_err)?;
    for p in &params.params {
        for &v in &p.data {
            w.write_all(&v.to_le_bytes()).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

pub fn load_params(path: &Path) -> Result<ParamSet> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut r = BufReader::new(file);

    let mut header = [0u8; 16];
    r.read_exact(&mut header)
        .map_err(|_| malformed(path, "file shorter than the 16-byte header"))?;
    if &header[0..4] != WEIGHT_MAGIC {
        return Err(malformed(path, "bad magic, expected RFWT"));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != WEIGHT_VERSION {
        return Err(malformed(path, format!("unsupported version {version}")));
    }
    let manifest_len = u64::from_le_bytes(header[8..16].try_into().unwrap()) as usize;
    let mut manifest_json = vec![0u8; manifest_len];
    r.read_exact(&mut manifest_json)
        .map_err(|_| malformed(path, "truncated manifest"))?;
    let manifest: Manifest = serde_json::from_slice(&manifest_json)
        .map_err(|e| malformed(path, format!("manifest JSON: {e}")))?;

    let mut blob = vec![0u8; manifest.total_values * 8];
    r.read_exact(&mut blob)
        .map_err(|_| malformed(path, "truncated value blob"))?;
    let values: Vec<f64> = blob
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();

    let mut params = ParamSet::default();
    for entry in &manifest.tensors {
        let count: usize = entry.shape.iter().product();
        let end = entry.offset.checked_add(count).filter(|&e| e <= values.len());
        let Some(end) = end else {
            return Err(malformed(
                path,
                format!("tensor {} extends past the value blob", entry.name),
            ));
        };
        params.params.push(Param {
            name: entry.name.clone(),
            shape: entry.shape.clone(),
            data: values[entry.offset..end].to_vec(),
        });
    }
    Ok(params)
}

/// Load weights into an existing parameter set (e.g. a freshly built
/// model), verifying that names and shapes line up exactly.
pub fn load_params_into(path: &Path, params: &mut ParamSet) -> Result<()> {
    let loaded = load_params(path)?;
    if loaded.params.len() != params.params.len() {
        return Err(malformed(
            path,
            format!(
                "expected {} tensors, file has {}",
                params.params.len(),
                loaded.params.len()
            ),
        ));
    }
    for (dst, src) in params.params.iter().zip(&loaded.params) {
        if dst.name != src.name || dst.shape != src.shape {
            return Err(malformed(
                path,
                format!(
                    "tensor mismatch: model has {} {:?}, file has {} {:?}",
                    dst.name, dst.shape, src.name, src.shape
                ),
            ));
        }
    }
    for (dst, src) in params.params.iter_mut().zip(loaded.params) {
        dst.data = src.data;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::model::Model;
    use crate::nn::wavenet::{WaveNet, WaveNetConfig};

    fn tiny_net(seed: u64) -> WaveNet {
        WaveNet::new(
            WaveNetConfig {
                blocks: 2,
                dilation_cycle: 10,
                channels: 3,
                kernel: 3,
            },
            seed,
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.rfwt");
        let net = tiny_net(1);
        save_params(&path, net.params()).unwrap();
        let back = load_params(&path).unwrap();
        assert_eq!(back.params.len(), net.params().params.len());
        for (a, b) in net.params().params.iter().zip(&back.params) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.shape, b.shape);
            // Exact equality: the container stores raw f64 bits.
            assert_eq!(a.data, b.data);
        }
    }

    #[test]
    fn load_into_fresh_model() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.rfwt");
        let trained = tiny_net(1);
        save_params(&path, trained.params()).unwrap();
        let mut fresh = tiny_net(2);
        assert_ne!(
            fresh.params().params[0].data,
            trained.params().params[0].data
        );
        load_params_into(&path, fresh.params_mut()).unwrap();
        for (a, b) in fresh.params().params.iter().zip(&trained.params().params) {
            assert_eq!(a.data, b.data);
        }
    }

    #[test]
    fn rejects_architecture_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.rfwt");
        save_params(&path, tiny_net(1).params()).unwrap();
        let mut other = WaveNet::new(
            WaveNetConfig {
                blocks: 3,
                dilation_cycle: 10,
                channels: 3,
                kernel: 3,
            },
            1,
        )
        .unwrap();
        let err = load_params_into(&path, other.params_mut()).unwrap_err().to_string();
        assert!(err.contains("tensors"), "{err}");
    }

    #[test]
    fn rejects_corrupted_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.rfwt");
        save_params(&path, tiny_net(1).params()).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'Z';
        std::fs::write(&path, &bytes).unwrap();
        assert!(load_params(&path).is_err());
        std::fs::write(&path, b"RFWT").unwrap();
        assert!(load_params(&path).is_err());
    }
}
