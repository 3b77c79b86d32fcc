//! Named parameter storage, initialization, Adam and the checkpoint format.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{self, Tape, Tensor};

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed manifest {path}: {source}")]
    Manifest {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("checkpoint blob {path} is {actual} bytes, manifest requires {expected}")]
    BlobSize {
        path: PathBuf,
        expected: usize,
        actual: usize,
    },
    #[error("checkpoint holds a {found} model, expected {expected}")]
    WrongKind { expected: String, found: String },
    #[error("checkpoint parameters do not match the stored configuration: {0}")]
    Inconsistent(String),
}

/// Ordered list of named dense parameters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet {
    names: Vec<String>,
    values: Vec<Array2<f64>>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, value: Array2<f64>) -> usize {
        self.names.push(name.into());
        self.values.push(value);
        self.values.len() - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[Array2<f64>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Array2<f64>] {
        &mut self.values
    }

    pub fn get(&self, name: &str) -> Option<&Array2<f64>> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.values[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Array2<f64>> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(move |i| &mut self.values[i])
    }

    pub fn num_scalars(&self) -> usize {
        self.values.iter().map(Array2::len).sum()
    }

    /// Records every parameter as a leaf on `tape`.
    pub fn bind(&self, tape: &mut Tape, requires_grad: bool) -> autodiff::Result<Vec<Tensor>> {
        self.values
            .iter()
            .map(|v| tape.leaf(v.clone(), requires_grad))
            .collect()
    }

    /// Gradients of bound parameters after `backward`.
    pub fn grads(tape: &Tape, bound: &[Tensor]) -> Vec<Array2<f64>> {
        bound
            .iter()
            .map(|&t| {
                tape.grad(t)
                    .cloned()
                    .unwrap_or_else(|| Array2::zeros(tape.value(t).dim()))
            })
            .collect()
    }

    /// FNV-1a over names, shapes and the bit patterns of every value.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |bytes: &[u8]| {
            for &b in bytes {
                h = (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3);
            }
        };
        for (name, v) in self.names.iter().zip(&self.values) {
            feed(name.as_bytes());
            feed(&(v.nrows() as u64).to_le_bytes());
            feed(&(v.ncols() as u64).to_le_bytes());
            for x in v.iter() {
                feed(&x.to_bits().to_le_bytes());
            }
        }
        h
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.iter().all(|x| x.is_finite()))
    }
}

/// Uniform Glorot initialization for a `fan_in × fan_out` weight.
pub fn glorot(fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let a = (6.0 / (fan_in + fan_out).max(1) as f64).sqrt();
    Array2::from_shape_fn((fan_in, fan_out), |_| rng.random_range(-a..a))
}

#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
}

impl Adam {
    /// Optimizer state for the concatenation of `sets`, in order.
    pub fn new(lr: f64, sets: &[&ParamSet]) -> Self {
        let zeros: Vec<Array2<f64>> = sets
            .iter()
            .flat_map(|s| s.values().iter().map(|v| Array2::zeros(v.dim())))
            .collect();
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn steps_taken(&self) -> i32 {
        self.t
    }

    /// One update; `grads` follows the same flattened order as `sets`.
    pub fn step(&mut self, sets: &mut [&mut ParamSet], grads: &[Array2<f64>]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        let (b1, b2, eps, lr) = (self.beta1, self.beta2, self.eps, self.lr);
        let params = sets.iter_mut().flat_map(|s| s.values_mut().iter_mut());
        for (((p, g), m), v) in params
            .zip(grads)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            ndarray::Zip::from(p)
                .and(g)
                .and(m)
                .and(v)
                .for_each(|p, &g, m, v| {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    let mhat = *m / bc1;
                    let vhat = *v / bc2;
                    *p -= lr * mhat / (vhat.sqrt() + eps);
                });
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TensorEntry {
    pub name: String,
    pub shape: [usize; 2],
    /// Offset into the blob, in f64 elements.
    pub offset: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub kind: String,
    pub config: serde_json::Value,
    pub blob: String,
    pub tensors: Vec<TensorEntry>,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CheckpointError + '_ {
    move |source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Sidecar blob path for a manifest path (`model.json` → `model.bin`).
pub fn blob_path(manifest: &Path) -> PathBuf {
    manifest.with_extension("bin")
}

/// Writes `manifest` (JSON) and its little-endian f64 blob sidecar.
pub fn save_checkpoint(
    path: &Path,
    kind: &str,
    config: serde_json::Value,
    params: &ParamSet,
) -> Result<(), CheckpointError> {
    let blob = blob_path(path);
    let mut tensors = Vec::with_capacity(params.len());
    let mut bytes = Vec::with_capacity(params.num_scalars() * 8);
    let mut offset = 0;
    for (name, v) in params.names().iter().zip(params.values()) {
        tensors.push(TensorEntry {
            name: name.clone(),
            shape: [v.nrows(), v.ncols()],
            offset,
        });
        offset += v.len();
        for x in v.iter() {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
    }
    let manifest = Manifest {
        kind: kind.to_string(),
        config,
        blob: blob
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        tensors,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|source| CheckpointError::Manifest {
        path: path.to_path_buf(),
        source,
    })?;
    fs::write(&blob, &bytes).map_err(io_err(&blob))?;
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))?;
    Ok(())
}

/// Reads a manifest and its blob, checking the model kind.
pub fn load_checkpoint(path: &Path, expected_kind: &str) -> Result<(serde_json::Value, ParamSet), CheckpointError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|source| CheckpointError::Manifest {
        path: path.to_path_buf(),
        source,
    })?;
    if manifest.kind != expected_kind {
        return Err(CheckpointError::WrongKind {
            expected: expected_kind.into(),
            found: manifest.kind,
        });
    }
    let blob = path.with_file_name(&manifest.blob);
    let bytes = fs::read(&blob).map_err(io_err(&blob))?;
    let expected = manifest
        .tensors
        .iter()
        .map(|t| t.offset + t.shape[0] * t.shape[1])
        .max()
        .unwrap_or(0)
        * 8;
    if bytes.len() != expected {
        return Err(CheckpointError::BlobSize {
            path: blob,
            expected,
            actual: bytes.len(),
        });
    }
    let mut params = ParamSet::new();
    for t in &manifest.tensors {
        let start = t.offset * 8;
        let vals: Vec<f64> = bytes[start..start + t.shape[0] * t.shape[1] * 8]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let arr = Array2::from_shape_vec((t.shape[0], t.shape[1]), vals)
            .map_err(|e| CheckpointError::Inconsistent(e.to_string()))?;
        params.push(t.name.clone(), arr);
    }
    Ok((manifest.config, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;

    #[test]
    fn checksum_tracks_values() {
        let mut p = ParamSet::new();
        p.push("w", array![[1.0, 2.0]]);
        let c = p.checksum();
        assert_eq!(c, p.clone().checksum());
        p.values_mut()[0][[0, 1]] = 2.0000001;
        assert_ne!(c, p.checksum());
    }

    #[test]
    fn glorot_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let w = glorot(4, 2, &mut rng);
        assert!(w.iter().all(|x| x.abs() < 1.0));
    }

    #[test]
    fn adam_minimizes_quadratic() {
        let mut p = ParamSet::new();
        p.push("x", array![[3.0, -2.0]]);
        let mut opt = Adam::new(0.1, &[&p]);
        for _ in 0..500 {
            let g = p.values()[0].mapv(|x| 2.0 * x);
            opt.step(&mut [&mut p], &[g]);
        }
        assert!(p.values()[0].iter().all(|x| x.abs() < 1e-2));
    }

    #[test]
    fn adam_first_step_is_lr_times_sign() {
        let mut p = ParamSet::new();
        p.push("x", array![[1.0, 1.0]]);
        let mut opt = Adam::new(0.01, &[&p]);
        opt.step(&mut [&mut p], &[array![[5.0, -0.1]]]);
        assert!((p.values()[0][[0, 0]] - 0.99).abs() < 1e-6);
        assert!((p.values()[0][[0, 1]] - 1.01).abs() < 1e-6);
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let mut p = ParamSet::new();
        p.push("a", array![[1.5, -2.0], [0.25, 1e-300]]);
        p.push("b", array![[f64::MIN_POSITIVE]]);
        save_checkpoint(&path, "encoder", serde_json::json!({"k": 1}), &p).unwrap();
        let (cfg, q) = load_checkpoint(&path, "encoder").unwrap();
        assert_eq!(cfg["k"], 1);
        assert_eq!(q, p);
        assert!(matches!(
            load_checkpoint(&path, "probe"),
            Err(CheckpointError::WrongKind { .. })
        ));
        fs::write(blob_path(&path), [0u8; 3]).unwrap();
        assert!(matches!(
            load_checkpoint(&path, "encoder"),
            Err(CheckpointError::BlobSize { .. })
        ));
    }
}
