//! Model persistence: a flat little-endian f64 tensor blob plus a JSON
//! manifest recording shapes, vocabulary size, and layout.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{LstmModel, LstmParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmManifest {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden_units: usize,
    pub max_seq_len: usize,
    pub dropout: f64,
    pub seed: u64,
    pub rng_state: u64,
    /// Tensor layout of the `.bin` blob: column-major f64, little-endian.
    pub tensors: Vec<TensorSpec>,
}

impl LstmModel {
    fn manifest(&self) -> LstmManifest {
        let mut tensors = Vec::new();
        let mut offset = 0usize;
        let p = &self.params;
        let shapes: Vec<(&str, Vec<usize>)> = vec![
            ("embedding", vec![p.embedding.nrows(), p.embedding.ncols()]),
            ("w_input", vec![p.w_input.nrows(), p.w_input.ncols()]),
            ("w_forget", vec![p.w_forget.nrows(), p.w_forget.ncols()]),
            ("w_cell", vec![p.w_cell.nrows(), p.w_cell.ncols()]),
            ("w_output", vec![p.w_output.nrows(), p.w_output.ncols()]),
            ("b_input", vec![p.b_input.len()]),
            ("b_forget", vec![p.b_forget.len()]),
            ("b_cell", vec![p.b_cell.len()]),
            ("b_output", vec![p.b_output.len()]),
            ("dense_w", vec![p.dense_w.len()]),
            ("dense_b", vec![1]),
        ];
        for (name, shape) in shapes {
            let len: usize = shape.iter().product();
            tensors.push(TensorSpec { name: name.to_string(), shape, offset, len });
            offset += len;
        }
        LstmManifest {
            vocab_size: self.vocab_size,
            embed_dim: self.embed_dim,
            hidden_units: self.hidden_units,
            max_seq_len: self.max_seq_len,
            dropout: self.dropout,
            seed: self.seed,
            rng_state: self.rng_state,
            tensors,
        }
    }

    /// Write `<base>.bin` and `<base>.json`.
    pub fn save(&self, base: &Path) -> Result<()> {
        let flat = self.params.flat();
        let mut bytes = Vec::with_capacity(flat.len() * 8);
        for v in &flat {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::write(base.with_extension("bin"), bytes)?;
        let manifest = serde_json::to_string_pretty(&self.manifest())?;
        std::fs::write(base.with_extension("json"), manifest)?;
        Ok(())
    }

    pub fn load(base: &Path) -> Result<LstmModel> {
        let manifest: LstmManifest =
            serde_json::from_str(&std::fs::read_to_string(base.with_extension("json"))?)?;
        let bytes = std::fs::read(base.with_extension("bin"))?;
        if bytes.len() % 8 != 0 {
            return Err(Error::Data("tensor blob length not a multiple of 8".into()));
        }
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();

        let mut params =
            LstmParams::zeros(manifest.vocab_size, manifest.embed_dim, manifest.hidden_units);
        params.load_flat(&values)?;
        Ok(LstmModel {
            params,
            vocab_size: manifest.vocab_size,
            embed_dim: manifest.embed_dim,
            hidden_units: manifest.hidden_units,
            max_seq_len: manifest.max_seq_len,
            dropout: manifest.dropout,
            seed: manifest.seed,
            rng_state: manifest.rng_state,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::LstmConfig;
    use super::*;

    #[test]
    fn save_load_round_trip_is_bit_exact() {
        let cfg = LstmConfig {
            embed_dim: 5,
            hidden_units: 4,
            max_seq_len: 8,
            seed: 42,
            ..Default::default()
        };
        let model = LstmModel::new(23, &cfg);
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path().join("lstm_model");
        model.save(&base).unwrap();
        let loaded = LstmModel::load(&base).unwrap();
        let a = model.params.flat();
        let b = loaded.params.flat();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        let seqs = vec![vec![1usize, 2, 3, 0, 0, 5, 6, 7]];
        assert_eq!(model.predict(&seqs).unwrap(), loaded.predict(&seqs).unwrap());
    }
}
