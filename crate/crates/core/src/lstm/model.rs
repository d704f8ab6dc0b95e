//! LSTM parameters, batched forward pass, and backpropagation through time.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::LstmConfig;
use crate::error::{Error, Result};

use crate::stats::sigmoid;

/// The trainable tensors. Gate weights act on the concatenation
/// `[x_t | h_{t-1}]`, so each is `hidden x (embed + hidden)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub embedding: DMatrix<f64>, // vocab x embed
    pub w_input: DMatrix<f64>,
    pub w_forget: DMatrix<f64>,
    pub w_cell: DMatrix<f64>,
    pub w_output: DMatrix<f64>,
    pub b_input: DVector<f64>,
    pub b_forget: DVector<f64>,
    pub b_cell: DVector<f64>,
    pub b_output: DVector<f64>,
    pub dense_w: DVector<f64>, // hidden
    pub dense_b: f64,
}

impl LstmParams {
    pub fn zeros(vocab: usize, embed: usize, hidden: usize) -> Self {
        let gate = || DMatrix::<f64>::zeros(hidden, embed + hidden);
        Self {
            embedding: DMatrix::<f64>::zeros(vocab, embed),
            w_input: gate(),
            w_forget: gate(),
            w_cell: gate(),
            w_output: gate(),
            b_input: DVector::zeros(hidden),
            b_forget: DVector::zeros(hidden),
            b_cell: DVector::zeros(hidden),
            b_output: DVector::zeros(hidden),
            dense_w: DVector::zeros(hidden),
            dense_b: 0.0,
        }
    }

    /// Named tensor groups in a stable order; the serialization layout and
    /// the gradient checker both rely on this ordering.
    pub fn group_names() -> [&'static str; 11] {
        [
            "embedding", "w_input", "w_forget", "w_cell", "w_output", "b_input", "b_forget",
            "b_cell", "b_output", "dense_w", "dense_b",
        ]
    }

    pub fn groups(&self) -> Vec<(&'static str, Vec<f64>)> {
        vec![
            ("embedding", self.embedding.as_slice().to_vec()),
            ("w_input", self.w_input.as_slice().to_vec()),
            ("w_forget", self.w_forget.as_slice().to_vec()),
            ("w_cell", self.w_cell.as_slice().to_vec()),
            ("w_output", self.w_output.as_slice().to_vec()),
            ("b_input", self.b_input.as_slice().to_vec()),
            ("b_forget", self.b_forget.as_slice().to_vec()),
            ("b_cell", self.b_cell.as_slice().to_vec()),
            ("b_output", self.b_output.as_slice().to_vec()),
            ("dense_w", self.dense_w.as_slice().to_vec()),
            ("dense_b", vec![self.dense_b]),
        ]
    }

    /// Apply `f` elementwise across (self, grad, m, v) in group order.
    pub fn zip_apply(
        &mut self,
        grad: &LstmParams,
        m: &mut LstmParams,
        v: &mut LstmParams,
        mut f: impl FnMut(&mut f64, f64, &mut f64, &mut f64),
    ) {
        macro_rules! zip_mat {
            ($field:ident) => {
                let g = grad.$field.as_slice();
                for ((p, m), (gi, vi)) in self
                    .$field
                    .as_mut_slice()
                    .iter_mut()
                    .zip(m.$field.as_mut_slice().iter_mut())
                    .zip(g.iter().zip(v.$field.as_mut_slice().iter_mut()))
                {
                    f(p, *gi, m, vi);
                }
            };
        }
        zip_mat!(embedding);
        zip_mat!(w_input);
        zip_mat!(w_forget);
        zip_mat!(w_cell);
        zip_mat!(w_output);
        zip_mat!(b_input);
        zip_mat!(b_forget);
        zip_mat!(b_cell);
        zip_mat!(b_output);
        zip_mat!(dense_w);
        f(&mut self.dense_b, grad.dense_b, &mut m.dense_b, &mut v.dense_b);
    }

    pub fn flat_len(&self) -> usize {
        self.embedding.len()
            + 4 * self.w_input.len()
            + 4 * self.b_input.len()
            + self.dense_w.len()
            + 1
    }

    /// Flat (column-major per tensor, group order) parameter read, used by
    /// the finite-difference gradient checker and the binary serializer.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.flat_len());
        for (_, g) in self.groups() {
            out.extend_from_slice(&g);
        }
        out
    }

    pub fn add_at_flat(&mut self, index: usize, delta: f64) {
        let mut offset = 0;
        macro_rules! try_mat {
            ($field:ident) => {
                let len = self.$field.len();
                if index < offset + len {
                    self.$field.as_mut_slice()[index - offset] += delta;
                    return;
                }
                offset += len;
            };
        }
        try_mat!(embedding);
        try_mat!(w_input);
        try_mat!(w_forget);
        try_mat!(w_cell);
        try_mat!(w_output);
        try_mat!(b_input);
        try_mat!(b_forget);
        try_mat!(b_cell);
        try_mat!(b_output);
        try_mat!(dense_w);
        if index == offset {
            self.dense_b += delta;
            return;
        }
        panic!("flat index {index} out of range");
    }

    pub fn load_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.flat_len() {
            return Err(Error::Data(format!(
                "parameter blob has {} values, expected {}",
                values.len(),
                self.flat_len()
            )));
        }
        let mut offset = 0;
        macro_rules! fill {
            ($field:ident) => {
                let len = self.$field.len();
                self.$field
                    .as_mut_slice()
                    .copy_from_slice(&values[offset..offset + len]);
                offset += len;
            };
        }
        fill!(embedding);
        fill!(w_input);
        fill!(w_forget);
        fill!(w_cell);
        fill!(w_output);
        fill!(b_input);
        fill!(b_forget);
        fill!(b_cell);
        fill!(b_output);
        fill!(dense_w);
        self.dense_b = values[offset];
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LstmModel {
    pub params: LstmParams,
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden_units: usize,
    pub max_seq_len: usize,
    pub dropout: f64,
    /// Seed the model was initialized from.
    pub seed: u64,
    /// Seed counter for dropout masks; advanced once per training batch so
    /// runs are reproducible.
    pub rng_state: u64,
}

/// Per-timestep activations cached for backpropagation.
pub(crate) struct ForwardCache {
    pub zs: Vec<DMatrix<f64>>,      // [x | h_prev], batch x (e+h)
    pub i_gates: Vec<DMatrix<f64>>, // batch x h
    pub f_gates: Vec<DMatrix<f64>>,
    pub g_gates: Vec<DMatrix<f64>>,
    pub o_gates: Vec<DMatrix<f64>>,
    pub cells: Vec<DMatrix<f64>>,      // c_t
    pub cell_tanh: Vec<DMatrix<f64>>,  // tanh(c_t)
    pub final_hidden: DMatrix<f64>,    // h_T, batch x h
    pub dropped_hidden: DMatrix<f64>,  // after dropout mask (identity at inference)
    pub logits: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl LstmModel {
    /// Initialize with uniform(-0.08, 0.08) weights, forget-gate bias +1,
    /// zero dense bias; fully determined by the seed.
    pub fn new(vocab_size: usize, cfg: &LstmConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut params = LstmParams::zeros(vocab_size, cfg.embed_dim, cfg.hidden_units);
        let mut init = |m: &mut [f64]| {
            for v in m {
                *v = rng.random_range(-0.08..0.08);
            }
        };
        init(params.embedding.as_mut_slice());
        init(params.w_input.as_mut_slice());
        init(params.w_forget.as_mut_slice());
        init(params.w_cell.as_mut_slice());
        init(params.w_output.as_mut_slice());
        init(params.dense_w.as_mut_slice());
        params.b_forget.fill(1.0);

        Self {
            params,
            vocab_size,
            embed_dim: cfg.embed_dim,
            hidden_units: cfg.hidden_units,
            max_seq_len: cfg.max_seq_len,
            dropout: cfg.dropout,
            seed: cfg.seed,
            rng_state: cfg.seed,
        }
    }

    fn check_tokens(&self, sequences: &[Vec<usize>]) -> Result<()> {
        for seq in sequences {
            if seq.len() != self.max_seq_len {
                return Err(Error::Data(format!(
                    "sequence length {} != max_seq_len {}",
                    seq.len(),
                    self.max_seq_len
                )));
            }
            for &t in seq {
                if t >= self.vocab_size {
                    return Err(Error::UnknownEvent { token: format!("token id {t}") });
                }
            }
        }
        Ok(())
    }

    /// Goal probabilities for a batch of encoded sequences. With
    /// `training = true` a fresh dropout mask is drawn from the model's RNG
    /// stream (advancing it); inference is deterministic.
    pub fn forward(&mut self, sequences: &[Vec<usize>], training: bool) -> Result<Vec<f64>> {
        self.check_tokens(sequences)?;
        let mask = if training && self.dropout > 0.0 {
            Some(self.next_dropout_mask(sequences.len()))
        } else {
            None
        };
        Ok(self.forward_cached(sequences, mask.as_ref()).probabilities)
    }

    /// Deterministic inference pass.
    pub fn predict(&self, sequences: &[Vec<usize>]) -> Result<Vec<f64>> {
        self.check_tokens(sequences)?;
        Ok(self.forward_cached(sequences, None).probabilities)
    }

    /// Pre-sigmoid dense output for the first sequence, under an optional
    /// fixed dropout mask. The mask enters linearly, so the expectation of
    /// this value over masks equals the inference-mode value.
    pub fn forward_cached_logit(
        &self,
        sequences: &[Vec<usize>],
        dropout_mask: Option<&DMatrix<f64>>,
    ) -> f64 {
        self.forward_cached(sequences, dropout_mask).logits[0]
    }

    /// Inverted-dropout mask: entries are 0 with probability `dropout`,
    /// otherwise 1/(1-dropout), so inference needs no rescaling.
    pub fn next_dropout_mask(&mut self, batch: usize) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_state);
        rng.set_stream(0xd70);
        self.rng_state = self.rng_state.wrapping_add(1);
        let keep = 1.0 - self.dropout;
        DMatrix::from_fn(batch, self.hidden_units, |_, _| {
            if rng.random_bool(keep) {
                1.0 / keep
            } else {
                0.0
            }
        })
    }

    pub(crate) fn forward_cached(
        &self,
        sequences: &[Vec<usize>],
        dropout_mask: Option<&DMatrix<f64>>,
    ) -> ForwardCache {
        let batch = sequences.len();
        let (e, h, t_len) = (self.embed_dim, self.hidden_units, self.max_seq_len);
        let p = &self.params;

        let mut hidden = DMatrix::<f64>::zeros(batch, h);
        let mut cell = DMatrix::<f64>::zeros(batch, h);
        let mut cache = ForwardCache {
            zs: Vec::with_capacity(t_len),
            i_gates: Vec::with_capacity(t_len),
            f_gates: Vec::with_capacity(t_len),
            g_gates: Vec::with_capacity(t_len),
            o_gates: Vec::with_capacity(t_len),
            cells: Vec::with_capacity(t_len),
            cell_tanh: Vec::with_capacity(t_len),
            final_hidden: DMatrix::<f64>::zeros(batch, h),
            dropped_hidden: DMatrix::<f64>::zeros(batch, h),
            logits: vec![0.0; batch],
            probabilities: vec![0.0; batch],
        };

        for t in 0..t_len {
            let mut z = DMatrix::<f64>::zeros(batch, e + h);
            for (b, seq) in sequences.iter().enumerate() {
                let token = seq[t];
                for j in 0..e {
                    z[(b, j)] = p.embedding[(token, j)];
                }
                for j in 0..h {
                    z[(b, e + j)] = hidden[(b, j)];
                }
            }

            let mut i_gate = &z * p.w_input.transpose();
            let mut f_gate = &z * p.w_forget.transpose();
            let mut g_gate = &z * p.w_cell.transpose();
            let mut o_gate = &z * p.w_output.transpose();
            for b in 0..batch {
                for j in 0..h {
                    i_gate[(b, j)] = sigmoid(i_gate[(b, j)] + p.b_input[j]);
                    f_gate[(b, j)] = sigmoid(f_gate[(b, j)] + p.b_forget[j]);
                    g_gate[(b, j)] = (g_gate[(b, j)] + p.b_cell[j]).tanh();
                    o_gate[(b, j)] = sigmoid(o_gate[(b, j)] + p.b_output[j]);
                }
            }

            let mut new_cell = DMatrix::<f64>::zeros(batch, h);
            let mut tanh_cell = DMatrix::<f64>::zeros(batch, h);
            for b in 0..batch {
                for j in 0..h {
                    let c = f_gate[(b, j)] * cell[(b, j)] + i_gate[(b, j)] * g_gate[(b, j)];
                    new_cell[(b, j)] = c;
                    tanh_cell[(b, j)] = c.tanh();
                    hidden[(b, j)] = o_gate[(b, j)] * tanh_cell[(b, j)];
                }
            }
            cell = new_cell.clone();

            cache.zs.push(z);
            cache.i_gates.push(i_gate);
            cache.f_gates.push(f_gate);
            cache.g_gates.push(g_gate);
            cache.o_gates.push(o_gate);
            cache.cells.push(new_cell);
            cache.cell_tanh.push(tanh_cell);
        }

        cache.final_hidden = hidden.clone();
        cache.dropped_hidden = match dropout_mask {
            Some(mask) => hidden.component_mul(mask),
            None => hidden,
        };
        for b in 0..batch {
            let mut logit = p.dense_b;
            for j in 0..h {
                logit += cache.dropped_hidden[(b, j)] * p.dense_w[j];
            }
            cache.logits[b] = logit;
            cache.probabilities[b] = sigmoid(logit);
        }
        cache
    }

    /// Mean binary cross-entropy over the batch and its gradient with
    /// respect to every parameter, via backpropagation through time. The
    /// dropout mask, when given, is treated as a constant.
    pub fn loss_and_gradients(
        &self,
        sequences: &[Vec<usize>],
        labels: &[f64],
        dropout_mask: Option<&DMatrix<f64>>,
    ) -> Result<(f64, LstmParams)> {
        self.check_tokens(sequences)?;
        if sequences.len() != labels.len() {
            return Err(Error::Data("sequences/labels length mismatch".into()));
        }
        let batch = sequences.len();
        let (e, h, t_len) = (self.embed_dim, self.hidden_units, self.max_seq_len);
        let p = &self.params;
        let cache = self.forward_cached(sequences, dropout_mask);

        let loss = cache
            .probabilities
            .iter()
            .zip(labels)
            .map(|(&pr, &y)| crate::stats::bce(pr, y))
            .sum::<f64>()
            / batch as f64;

        let mut grads = LstmParams::zeros(self.vocab_size, e, h);

        // Dense head: dL/dlogit = (p - y)/batch.
        let mut d_hidden = DMatrix::<f64>::zeros(batch, h);
        for b in 0..batch {
            let d_logit = (cache.probabilities[b] - labels[b]) / batch as f64;
            grads.dense_b += d_logit;
            for j in 0..h {
                grads.dense_w[j] += d_logit * cache.dropped_hidden[(b, j)];
                let mut dh = d_logit * p.dense_w[j];
                if let Some(mask) = dropout_mask {
                    dh *= mask[(b, j)];
                }
                d_hidden[(b, j)] += dh;
            }
        }

        let mut d_cell = DMatrix::<f64>::zeros(batch, h);
        for t in (0..t_len).rev() {
            let i_g = &cache.i_gates[t];
            let f_g = &cache.f_gates[t];
            let g_g = &cache.g_gates[t];
            let o_g = &cache.o_gates[t];
            let tanh_c = &cache.cell_tanh[t];
            let prev_cell: Option<&DMatrix<f64>> = if t > 0 { Some(&cache.cells[t - 1]) } else { None };

            let mut di_pre = DMatrix::<f64>::zeros(batch, h);
            let mut df_pre = DMatrix::<f64>::zeros(batch, h);
            let mut dg_pre = DMatrix::<f64>::zeros(batch, h);
            let mut do_pre = DMatrix::<f64>::zeros(batch, h);
            let mut d_cell_prev = DMatrix::<f64>::zeros(batch, h);

            for b in 0..batch {
                for j in 0..h {
                    let dh = d_hidden[(b, j)];
                    let o = o_g[(b, j)];
                    let tc = tanh_c[(b, j)];
                    do_pre[(b, j)] = dh * tc * o * (1.0 - o);
                    let dc = d_cell[(b, j)] + dh * o * (1.0 - tc * tc);

                    let i = i_g[(b, j)];
                    let f = f_g[(b, j)];
                    let g = g_g[(b, j)];
                    let c_prev = prev_cell.map_or(0.0, |m| m[(b, j)]);
                    di_pre[(b, j)] = dc * g * i * (1.0 - i);
                    df_pre[(b, j)] = dc * c_prev * f * (1.0 - f);
                    dg_pre[(b, j)] = dc * i * (1.0 - g * g);
                    d_cell_prev[(b, j)] = dc * f;
                }
            }

            let z = &cache.zs[t];
            grads.w_input += di_pre.transpose() * z;
            grads.w_forget += df_pre.transpose() * z;
            grads.w_cell += dg_pre.transpose() * z;
            grads.w_output += do_pre.transpose() * z;
            for b in 0..batch {
                for j in 0..h {
                    grads.b_input[j] += di_pre[(b, j)];
                    grads.b_forget[j] += df_pre[(b, j)];
                    grads.b_cell[j] += dg_pre[(b, j)];
                    grads.b_output[j] += do_pre[(b, j)];
                }
            }

            // dZ = sum over gates of d*_pre @ W_*; split into dX and dH_prev.
            let dz = &di_pre * &p.w_input
                + &df_pre * &p.w_forget
                + &dg_pre * &p.w_cell
                + &do_pre * &p.w_output;

            for (b, seq) in sequences.iter().enumerate() {
                let token = seq[t];
                for j in 0..e {
                    grads.embedding[(token, j)] += dz[(b, j)];
                }
            }
            let mut d_hidden_prev = DMatrix::<f64>::zeros(batch, h);
            for b in 0..batch {
                for j in 0..h {
                    d_hidden_prev[(b, j)] = dz[(b, e + j)];
                }
            }
            d_hidden = d_hidden_prev;
            d_cell = d_cell_prev;
        }

        Ok((loss, grads))
    }
}
