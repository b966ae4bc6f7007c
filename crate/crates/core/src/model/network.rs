use ndarray::{concatenate, s, Array1, Array2, Axis};

use super::lstm::{backprop_direction, gemm, run_direction, sigmoid, DirectionTrace};
use super::{Gradients, ModelParams, MASK_BIAS};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::preprocess::{EncodedSample, PAD};
use crate::rng::SplitMix64;

#[derive(Debug, Clone)]
struct LayerTrace {
    fwd: DirectionTrace,
    /// Runs over each sequence reversed within its own length.
    bwd: DirectionTrace,
    /// `(T·B) x 2h`, forward and (re-aligned) backward states side by side.
    output: Array2<f64>,
}

/// Activations of one batched forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct BatchTrace {
    batch: usize,
    steps: usize,
    lens: Vec<usize>,
    ids: Vec<u32>,
    layers: Vec<LayerTrace>,
    /// `tanh(W_a h + b_a)`, `(T·B) x d_a`.
    attn_hidden: Array2<f64>,
    /// `T x B`, exactly zero on padded steps.
    alpha: Array2<f64>,
    context: Array2<f64>,
    dense_pre: Array2<f64>,
    /// Inverted-dropout multipliers (all ones in eval mode).
    dropout_scale: Array2<f64>,
    dense_out: Array2<f64>,
    logits: Vec<f64>,
    probs: Vec<f64>,
    macs: u64,
}

impl BatchTrace {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn batch_size(&self) -> usize {
        self.batch
    }

    /// Attention weights of sequence `b` over its `T` batch steps.
    pub fn attention(&self, b: usize) -> Vec<f64> {
        self.alpha.column(b).to_vec()
    }

    /// Multiply-adds spent in matrix products during the forward pass.
    pub fn forward_macs(&self) -> u64 {
        self.macs
    }
}

/// Single-sample view of a [`BatchTrace`].
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    inner: BatchTrace,
    max_len: usize,
}

impl ForwardTrace {
    pub fn prob(&self) -> f64 {
        self.inner.probs[0]
    }

    pub fn logit(&self) -> f64 {
        self.inner.logits[0]
    }

    /// Attention over all `L` positions of the encoded sample.
    pub fn attention(&self) -> Vec<f64> {
        let mut a = self.inner.attention(0);
        a.resize(self.max_len, 0.0);
        a
    }

    pub fn context(&self) -> Vec<f64> {
        self.inner.context.row(0).to_vec()
    }

    pub fn forward_macs(&self) -> u64 {
        self.inner.macs
    }

    pub fn batch(&self) -> &BatchTrace {
        &self.inner
    }
}

/// Reverses each sequence within its own length: row `(s, b)` of the result
/// is row `(len_b - 1 - s, b)` of `src`; rows past `len_b` are zero.
fn reverse_within(src: &Array2<f64>, lens: &[usize], steps: usize) -> Array2<f64> {
    let batch = lens.len();
    let mut out = Array2::zeros(src.raw_dim());
    for (b, &len) in lens.iter().enumerate() {
        for s in 0..len.min(steps) {
            out.row_mut(s * batch + b).assign(&src.row((len - 1 - s) * batch + b));
        }
    }
    out
}

fn run_layer(layer: &super::LayerParams, input: Array2<f64>, lens: &[usize], steps: usize, macs: &mut u64) -> LayerTrace {
    let reversed = reverse_within(&input, lens, steps);
    let fwd = run_direction(&layer.fwd, input, lens, steps, macs);
    let bwd = run_direction(&layer.bwd, reversed, lens, steps, macs);
    let aligned = reverse_within(&bwd.hidden, lens, steps);
    let output = concatenate(Axis(1), &[fwd.hidden.view(), aligned.view()]).unwrap();
    LayerTrace { fwd, bwd, output }
}

/// Runs the network on a batch. `dropout_seeds` (one per sample) switches on
/// training mode; `None` is deterministic inference.
pub fn forward_batch(params: &ModelParams, samples: &[&EncodedSample], dropout_seeds: Option<&[u64]>) -> Result<BatchTrace> {
    let cfg = &params.config;
    let batch = samples.len();
    if batch == 0 {
        return Err(Error::Argument("empty batch".into()));
    }
    if let Some(seeds) = dropout_seeds {
        assert_eq!(seeds.len(), batch, "one dropout seed per sample");
    }
    let lens: Vec<usize> = samples.iter().map(|s| s.true_len).collect();
    for (b, s) in samples.iter().enumerate() {
        if s.true_len == 0 {
            return Err(Error::EmptySequence(format!("batch item {b}")));
        }
        if s.true_len > s.ids.len() {
            return Err(Error::Argument(format!("batch item {b}: true_len exceeds sequence length")));
        }
        if let Some(&bad) = s.tokens().iter().find(|&&id| id as usize >= cfg.vocab_size) {
            return Err(Error::Argument(format!("token id {bad} outside vocab of {}", cfg.vocab_size)));
        }
    }
    let steps = *lens.iter().max().unwrap();
    let rows = steps * batch;
    let mut macs = 0u64;

    let mut ids = vec![PAD; rows];
    let mut embedded = Array2::zeros((rows, cfg.embed_dim));
    for (b, s) in samples.iter().enumerate() {
        for (t, &id) in s.tokens().iter().enumerate() {
            ids[t * batch + b] = id;
            embedded.row_mut(t * batch + b).assign(&params.embedding.row(id as usize));
        }
    }

    let first = run_layer(&params.layers[0], embedded, &lens, steps, &mut macs);
    let second = run_layer(&params.layers[1], first.output.clone(), &lens, steps, &mut macs);
    let top = &second.output;

    let mut attn_hidden = Array2::zeros((rows, cfg.attention_dim));
    gemm(1.0, top.view(), params.attn_w.t(), 0.0, &mut attn_hidden.view_mut(), &mut macs);
    attn_hidden += &params.attn_b;
    attn_hidden.mapv_inplace(f64::tanh);
    let scores = attn_hidden.dot(&params.attn_v);
    macs += (rows * cfg.attention_dim) as u64;

    let mut alpha = Array2::zeros((steps, batch));
    let mut context = Array2::zeros((batch, 2 * cfg.hidden_dim));
    for b in 0..batch {
        let masked: Vec<f64> = (0..steps)
            .map(|t| scores[t * batch + b] + if t < lens[b] { 0.0 } else { MASK_BIAS })
            .collect();
        let max = masked.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = masked.iter().map(|e| (e - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        for t in 0..steps {
            let a = exps[t] / total;
            alpha[[t, b]] = a;
            if a != 0.0 {
                context.row_mut(b).scaled_add(a, &top.row(t * batch + b));
            }
        }
    }

    let mut dense_pre = Array2::zeros((batch, cfg.dense_dim));
    gemm(1.0, context.view(), params.dense1_w.t(), 0.0, &mut dense_pre.view_mut(), &mut macs);
    dense_pre += &params.dense1_b;
    let mut dropout_scale = Array2::<f64>::ones((batch, cfg.dense_dim));
    if let (Some(seeds), true) = (dropout_seeds, cfg.dropout > 0.0) {
        let keep = 1.0 / (1.0 - cfg.dropout);
        for (b, &seed) in seeds.iter().enumerate() {
            let mut rng = SplitMix64::new(seed);
            for k in 0..cfg.dense_dim {
                dropout_scale[[b, k]] = if rng.next_f64() < cfg.dropout { 0.0 } else { keep };
            }
        }
    }
    let dense_out = dense_pre.mapv(|x| x.max(0.0)) * &dropout_scale;
    let logits: Vec<f64> = dense_out
        .rows()
        .into_iter()
        .map(|u| u.dot(&params.dense2_w.row(0)) + params.dense2_b[0])
        .collect();
    macs += (batch * cfg.dense_dim) as u64;
    let probs = logits.iter().map(|&z| sigmoid(z)).collect();

    Ok(BatchTrace {
        batch,
        steps,
        lens,
        ids,
        layers: vec![first, second],
        attn_hidden,
        alpha,
        context,
        dense_pre,
        dropout_scale,
        dense_out,
        logits,
        probs,
        macs,
    })
}

/// Gradients of `Σ_b dlogits[b] · logit_b` with respect to every parameter.
/// Callers fold the loss derivative (and any batch averaging) into `dlogits`.
pub fn backward_batch(params: &ModelParams, trace: &BatchTrace, dlogits: &[f64]) -> Gradients {
    assert_eq!(dlogits.len(), trace.batch, "one logit gradient per sample");
    let cfg = &params.config;
    let (batch, steps) = (trace.batch, trace.steps);
    let rows = batch * steps;
    let mut grads = params.zeros_like();
    let mut macs = 0u64;
    let dl = Array1::from(dlogits.to_vec());

    // Output unit and dense layer.
    grads.dense2_w.row_mut(0).assign(&trace.dense_out.t().dot(&dl));
    grads.dense2_b[0] = dl.sum();
    let mut d_pre = Array2::zeros((batch, cfg.dense_dim));
    for b in 0..batch {
        for k in 0..cfg.dense_dim {
            if trace.dense_pre[[b, k]] > 0.0 {
                d_pre[[b, k]] = dl[b] * params.dense2_w[[0, k]] * trace.dropout_scale[[b, k]];
            }
        }
    }
    gemm(1.0, d_pre.t(), trace.context.view(), 0.0, &mut grads.dense1_w.view_mut(), &mut macs);
    grads.dense1_b.assign(&d_pre.sum_axis(Axis(0)));
    let d_context = d_pre.dot(&params.dense1_w);

    // Attention pooling.
    let top = &trace.layers[1].output;
    let mut d_top = Array2::zeros((rows, 2 * cfg.hidden_dim));
    let mut d_scores = Array1::zeros(rows);
    for b in 0..batch {
        let dc = d_context.row(b);
        let mut d_alpha = vec![0.0; steps];
        for t in 0..trace.lens[b] {
            let row = t * batch + b;
            d_top.row_mut(row).scaled_add(trace.alpha[[t, b]], &dc);
            d_alpha[t] = top.row(row).dot(&dc);
        }
        let mean: f64 = (0..steps).map(|t| trace.alpha[[t, b]] * d_alpha[t]).sum();
        for t in 0..trace.lens[b] {
            d_scores[t * batch + b] = trace.alpha[[t, b]] * (d_alpha[t] - mean);
        }
    }
    grads.attn_v.assign(&trace.attn_hidden.t().dot(&d_scores));
    let mut d_attn_pre = Array2::zeros((rows, cfg.attention_dim));
    for r in 0..rows {
        if d_scores[r] == 0.0 {
            continue;
        }
        for k in 0..cfg.attention_dim {
            let a = trace.attn_hidden[[r, k]];
            d_attn_pre[[r, k]] = d_scores[r] * params.attn_v[k] * (1.0 - a * a);
        }
    }
    gemm(1.0, d_attn_pre.t(), top.view(), 0.0, &mut grads.attn_w.view_mut(), &mut macs);
    grads.attn_b.assign(&d_attn_pre.sum_axis(Axis(0)));
    gemm(1.0, d_attn_pre.view(), params.attn_w.view(), 1.0, &mut d_top.view_mut(), &mut macs);

    // Both BiLSTM layers, top down.
    let h = cfg.hidden_dim;
    let mut d_out = d_top;
    for l in (0..2).rev() {
        let lt = &trace.layers[l];
        let d_fwd = d_out.slice(s![.., ..h]).to_owned();
        let d_bwd = reverse_within(&d_out.slice(s![.., h..]).to_owned(), &trace.lens, steps);
        let layer_grads = &mut grads.layers[l];
        let dx_fwd = backprop_direction(&params.layers[l].fwd, &lt.fwd, &d_fwd, &trace.lens, steps, &mut layer_grads.fwd, &mut macs);
        let dx_bwd = backprop_direction(&params.layers[l].bwd, &lt.bwd, &d_bwd, &trace.lens, steps, &mut layer_grads.bwd, &mut macs);
        d_out = dx_fwd + reverse_within(&dx_bwd, &trace.lens, steps);
    }

    for b in 0..batch {
        for t in 0..trace.lens[b] {
            let row = t * batch + b;
            let id = trace.ids[row] as usize;
            grads.embedding.row_mut(id).scaled_add(1.0, &d_out.row(row));
        }
    }
    grads.embedding.row_mut(PAD as usize).fill(0.0);
    grads
}

/// Probability of NOT for one encoded sample.
pub fn forward(params: &ModelParams, sample: &EncodedSample, train_mode: bool, dropout_seed: u64) -> Result<(f64, ForwardTrace)> {
    let seeds = [dropout_seed];
    let trace = forward_batch(params, &[sample], train_mode.then_some(&seeds[..]))?;
    let p = trace.probs[0];
    Ok((
        p,
        ForwardTrace {
            inner: trace,
            max_len: sample.max_len(),
        },
    ))
}

/// Gradients of the binary cross-entropy of one sample against `label`.
pub fn backward(params: &ModelParams, trace: &ForwardTrace, label: Label, sample: &EncodedSample) -> Gradients {
    debug_assert_eq!(trace.inner.lens[0], sample.true_len, "trace belongs to another sample");
    let dlogit = crate::train::bce_logit_grad(trace.prob(), f64::from(label.code()));
    backward_batch(params, &trace.inner, &[dlogit])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_params, ModelConfig};

    fn cfg() -> ModelConfig {
        ModelConfig {
            vocab_size: 50,
            embed_dim: 8,
            hidden_dim: 8,
            attention_dim: 8,
            dense_dim: 8,
            max_len: 5,
            dropout: 0.0,
        }
    }

    fn sample(ids: &[u32], max_len: usize) -> EncodedSample {
        let mut s = EncodedSample {
            ids: vec![PAD; max_len],
            mask: vec![0; max_len],
            true_len: ids.len(),
        };
        for (t, &id) in ids.iter().enumerate() {
            s.ids[t] = id;
            s.mask[t] = 1;
        }
        s
    }

    #[test]
    fn zero_output_layer_gives_half() {
        let mut p = init_params(cfg(), 1);
        p.dense2_w.fill(0.0);
        let (prob, _) = forward(&p, &sample(&[3, 4, 5], 5), false, 0).unwrap();
        assert_eq!(prob, 0.5);
    }

    #[test]
    fn attention_is_masked_distribution() {
        let p = init_params(cfg(), 2);
        let (_, tr) = forward(&p, &sample(&[7, 9], 5), false, 0).unwrap();
        let a = tr.attention();
        assert_eq!(a.len(), 5);
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(a[2..].iter().all(|&x| x == 0.0));
        assert!(a.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn uniform_attention_for_constant_states() {
        // With zero LSTM weights every state equals the same constant.
        let mut p = init_params(cfg(), 3);
        for layer in &mut p.layers {
            for dir in [&mut layer.fwd, &mut layer.bwd] {
                dir.w.fill(0.0);
                dir.u.fill(0.0);
            }
        }
        let (_, tr) = forward(&p, &sample(&[3, 4, 5, 6], 5), false, 0).unwrap();
        for &a in &tr.attention()[..4] {
            assert!((a - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_sequence_rejected() {
        let p = init_params(cfg(), 4);
        assert!(matches!(forward(&p, &sample(&[], 5), false, 0), Err(Error::EmptySequence(_))));
        assert!(matches!(forward(&p, &sample(&[99], 5), false, 0), Err(Error::Argument(_))));
    }

    #[test]
    fn padding_invariance() {
        let p = init_params(cfg(), 5);
        let (a, _) = forward(&p, &sample(&[3, 8, 2], 3), false, 0).unwrap();
        let (b, _) = forward(&p, &sample(&[3, 8, 2], 40), false, 0).unwrap();
        assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn batch_matches_single_samples() {
        let p = init_params(cfg(), 6);
        let samples = [sample(&[3, 4], 5), sample(&[5, 6, 7, 8, 9], 5), sample(&[10], 5)];
        let refs: Vec<&EncodedSample> = samples.iter().collect();
        let batch = forward_batch(&p, &refs, None).unwrap();
        let dl = [0.3, -0.7, 0.2];
        let g_batch = backward_batch(&p, &batch, &dl);
        let mut g_sum = p.zeros_like();
        for (s, &d) in samples.iter().zip(&dl) {
            let (prob, tr) = forward(&p, s, false, 0).unwrap();
            let idx = samples.iter().position(|x| std::ptr::eq(x, s)).unwrap();
            assert!((prob - batch.probs()[idx]).abs() < 1e-12);
            g_sum.add_scaled(&backward_batch(&p, tr.batch(), &[d]), 1.0);
        }
        for ((_, a), (_, b)) in g_batch.tensors().iter().zip(g_sum.tensors().iter()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((x - y).abs() < 1e-12, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn pad_row_unaffected() {
        let p = init_params(cfg(), 7);
        let s = sample(&[3, 4, 5], 5);
        let (_, tr) = forward(&p, &s, false, 0).unwrap();
        let g = backward(&p, &tr, Label::Not, &s);
        assert!(g.embedding.row(0).iter().all(|&x| x == 0.0));
        let mut q = p.clone();
        q.embedding.row_mut(0).fill(3.0);
        assert_eq!(forward(&q, &s, false, 0).unwrap().0, forward(&p, &s, false, 0).unwrap().0);
    }

    #[test]
    fn cost_linear_in_length() {
        let p = init_params(cfg(), 8);
        let macs: Vec<u64> = (1..=4)
            .map(|n| {
                let ids: Vec<u32> = (2..2 + n).collect();
                forward(&p, &sample(&ids, 5), false, 0).unwrap().1.forward_macs()
            })
            .collect();
        let step = macs[1] - macs[0];
        assert!(step > 0);
        assert_eq!(macs[2] - macs[1], step);
        assert_eq!(macs[3] - macs[2], step);
    }

    #[test]
    fn dropout_only_in_train_mode() {
        let mut c = cfg();
        c.dropout = 0.5;
        let p = init_params(c, 9);
        let s = sample(&[3, 4, 5], 5);
        let eval = forward(&p, &s, false, 1).unwrap().0;
        assert_eq!(eval, forward(&p, &s, false, 2).unwrap().0);
        let t1 = forward(&p, &s, true, 1).unwrap().0;
        assert_eq!(t1, forward(&p, &s, true, 1).unwrap().0);
    }
}
