//! Token-embedding LSTM sequence classifier trained from scratch with Adam.
//!
//! Windows become fixed-length token sequences (left-padded / tail-truncated
//! to 20), embedded into 32 dimensions, run through a single 50-unit LSTM
//! layer, and mapped to a goal probability by a dense sigmoid head. Dropout
//! (inverted, rate 0.30) applies to the LSTM output only while training.

pub mod io;
pub mod model;
pub mod train;

pub use model::{LstmModel, LstmParams};
pub use train::{train_lstm, EpochStats, TrainHistory};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::EventType;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmConfig {
    pub embed_dim: usize,
    pub hidden_units: usize,
    pub dropout: f64,
    pub max_seq_len: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub early_stop_epochs: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for LstmConfig {
    fn default() -> Self {
        Self {
            embed_dim: 32,
            hidden_units: 50,
            dropout: 0.30,
            max_seq_len: 20,
            batch_size: 32,
            learning_rate: 0.001,
            early_stop_epochs: 5,
            max_epochs: 30,
            seed: 0,
        }
    }
}

impl LstmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 || self.hidden_units == 0 || self.max_seq_len == 0 {
            return Err(Error::Config("lstm dimensions must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout must be in [0, 1), got {}",
                self.dropout
            )));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::Config("batch_size and max_epochs must be >= 1".into()));
        }
        if self.learning_rate <= 0.0 || self.learning_rate.is_nan() {
            return Err(Error::Config("learning_rate must be > 0".into()));
        }
        Ok(())
    }
}

/// Encode a token sequence to exactly `max_len` token ids: longer sequences
/// keep the last `max_len` tokens, shorter ones are left-padded with the pad
/// token (id 0) so the final hidden state is dominated by real events.
pub fn encode_sequence(tokens: &[EventType], max_len: usize) -> Vec<usize> {
    let mut out = vec![EventType::Pad.token_id(); max_len];
    let tail = if tokens.len() > max_len { &tokens[tokens.len() - max_len..] } else { tokens };
    let offset = max_len - tail.len();
    for (i, t) in tail.iter().enumerate() {
        out[offset + i] = t.token_id();
    }
    out
}

/// Validate raw token ids against the vocabulary and pad/truncate as in
/// [`encode_sequence`].
pub fn encode_token_ids(ids: &[usize], max_len: usize) -> Result<Vec<usize>> {
    for &id in ids {
        if EventType::from_token_id(id).is_none() {
            return Err(Error::UnknownEvent { token: format!("token id {id}") });
        }
    }
    let mut out = vec![0usize; max_len];
    let tail = if ids.len() > max_len { &ids[ids.len() - max_len..] } else { ids };
    let offset = max_len - tail.len();
    out[offset..].copy_from_slice(tail);
    Ok(out)
}

/// Extended composite `S = M + p_xg + p_lstm`.
pub fn composite_s(m: f64, p_xg: f64, p_lstm: f64) -> f64 {
    debug_assert!(m > 0.0, "momentum score must be positive");
    m + p_xg + p_lstm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_sequence_is_all_pads() {
        let enc = encode_sequence(&[], 20);
        assert_eq!(enc, vec![0; 20]);
    }

    #[test]
    fn long_sequence_keeps_the_tail() {
        let tokens: Vec<EventType> = (0..25)
            .map(|i| EventType::from_token_id(1 + (i % 20)).unwrap())
            .collect();
        let enc = encode_sequence(&tokens, 20);
        assert_eq!(enc.len(), 20);
        let expected: Vec<usize> = tokens[5..].iter().map(|t| t.token_id()).collect();
        assert_eq!(enc, expected);
    }

    #[test]
    fn short_sequence_is_left_padded() {
        let tokens = [EventType::Pass, EventType::Reception, EventType::Shot];
        let enc = encode_sequence(&tokens, 20);
        assert_eq!(&enc[..17], &[0; 17]);
        assert_eq!(
            &enc[17..],
            &[
                EventType::Pass.token_id(),
                EventType::Reception.token_id(),
                EventType::Shot.token_id()
            ]
        );
    }

    #[test]
    fn out_of_vocabulary_ids_are_rejected() {
        assert!(encode_token_ids(&[3, 99], 20).is_err());
        assert!(encode_token_ids(&[3, 15], 20).is_ok());
    }

    #[test]
    fn composite_s_examples() {
        assert_eq!(composite_s(1.0, 0.0, 0.0), 1.0);
        let s = composite_s(1.2513212586553366, 0.02, 0.5);
        assert!((s - 1.7713212586553366).abs() < 1e-12);
        // symmetric in the two probabilities
        assert_eq!(composite_s(1.1, 0.2, 0.7), composite_s(1.1, 0.7, 0.2));
    }
}
