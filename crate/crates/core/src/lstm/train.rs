//! Mini-batch Adam training with early stopping on validation loss.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{LstmModel, LstmParams};
use super::{encode_sequence, LstmConfig};
use crate::error::{Error, Result};
use crate::events::EventType;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_loss: f64,
    pub train_acc: f64,
    pub valid_acc: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainHistory {
    /// History as CSV with header `epoch,train_loss,valid_loss,train_acc,valid_acc`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,valid_loss,train_acc,valid_acc\n");
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.epoch, e.train_loss, e.valid_loss, e.train_acc, e.valid_acc
            ));
        }
        out
    }
}

struct Adam {
    m: LstmParams,
    v: LstmParams,
    t: u64,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    fn new(template: &LstmParams, vocab: usize, embed: usize, hidden: usize, lr: f64) -> Self {
        let _ = template;
        Self {
            m: LstmParams::zeros(vocab, embed, hidden),
            v: LstmParams::zeros(vocab, embed, hidden),
            t: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    fn step(&mut self, params: &mut LstmParams, grads: &LstmParams) {
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        let (lr, b1, b2, eps) = (self.lr, self.beta1, self.beta2, self.eps);
        params.zip_apply(grads, &mut self.m, &mut self.v, |p, g, m, v| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / b1t;
            let v_hat = *v / b2t;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        });
    }
}

/// Encode, batch, and train. Sequences are raw token lists; encoding
/// pads/truncates to `cfg.max_seq_len`. Deterministic given `cfg.seed`.
pub fn train_lstm(
    train: (&[Vec<EventType>], &[f64]),
    valid: (&[Vec<EventType>], &[f64]),
    cfg: &LstmConfig,
) -> Result<(LstmModel, TrainHistory)> {
    cfg.validate()?;
    let (train_seqs_raw, train_labels) = train;
    let (valid_seqs_raw, valid_labels) = valid;
    if train_seqs_raw.is_empty() || valid_seqs_raw.is_empty() {
        return Err(Error::Data("train and validation sets must be non-empty".into()));
    }
    if train_seqs_raw.len() != train_labels.len() || valid_seqs_raw.len() != valid_labels.len() {
        return Err(Error::Data("sequences/labels length mismatch".into()));
    }

    let encode_all = |seqs: &[Vec<EventType>]| -> Vec<Vec<usize>> {
        seqs.iter().map(|s| encode_sequence(s, cfg.max_seq_len)).collect()
    };
    let train_seqs = encode_all(train_seqs_raw);
    let valid_seqs = encode_all(valid_seqs_raw);

    let mut model = LstmModel::new(EventType::VOCAB_SIZE, cfg);
    let mut adam = Adam::new(
        &model.params,
        EventType::VOCAB_SIZE,
        cfg.embed_dim,
        cfg.hidden_units,
        cfg.learning_rate,
    );
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x5abf));

    let mut history = TrainHistory::default();
    let mut best_valid = f64::INFINITY;
    let mut stale = 0usize;

    let mut order: Vec<usize> = (0..train_seqs.len()).collect();
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut shuffle_rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch_seqs: Vec<Vec<usize>> = chunk.iter().map(|&i| train_seqs[i].clone()).collect();
            let batch_labels: Vec<f64> = chunk.iter().map(|&i| train_labels[i]).collect();
            let mask = if cfg.dropout > 0.0 {
                Some(model.next_dropout_mask(batch_seqs.len()))
            } else {
                None
            };
            let (_, grads) = model.loss_and_gradients(&batch_seqs, &batch_labels, mask.as_ref())?;
            adam.step(&mut model.params, &grads);
        }

        let (train_loss, train_acc) = evaluate(&model, &train_seqs, train_labels);
        let (valid_loss, valid_acc) = evaluate(&model, &valid_seqs, valid_labels);
        history.epochs.push(EpochStats { epoch, train_loss, valid_loss, train_acc, valid_acc });

        if valid_loss < best_valid - 1e-12 {
            best_valid = valid_loss;
            history.best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.early_stop_epochs {
                history.stopped_early = true;
                break;
            }
        }
    }

    Ok((model, history))
}

fn evaluate(model: &LstmModel, seqs: &[Vec<usize>], labels: &[f64]) -> (f64, f64) {
    let probs = model.predict(seqs).expect("validated tokens");
    let loss = probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| crate::stats::bce(p, y))
        .sum::<f64>()
        / labels.len() as f64;
    let correct = probs
        .iter()
        .zip(labels)
        .filter(|(&p, &y)| (p > 0.5) == (y > 0.5))
        .count();
    (loss, correct as f64 / labels.len() as f64)
}
