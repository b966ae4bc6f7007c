use ndarray::{Array1, Array2};

use super::ModelConfig;
use crate::preprocess::PAD;
use crate::rng::SplitMix64;

/// Weights of one LSTM direction. Gate blocks are stacked `[i, f, g, o]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionParams {
    /// `4h x in`
    pub w: Array2<f64>,
    /// `4h x h`
    pub u: Array2<f64>,
    /// `4h`
    pub b: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub fwd: DirectionParams,
    pub bwd: DirectionParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    /// `V x d_e`
    pub embedding: Array2<f64>,
    pub layers: [LayerParams; 2],
    /// `d_a x 2h`
    pub attn_w: Array2<f64>,
    pub attn_b: Array1<f64>,
    pub attn_v: Array1<f64>,
    /// `d_f x 2h`
    pub dense1_w: Array2<f64>,
    pub dense1_b: Array1<f64>,
    /// `1 x d_f`
    pub dense2_w: Array2<f64>,
    /// length 1
    pub dense2_b: Array1<f64>,
}

/// Shape-congruent with [`ModelParams`]; one gradient tensor per parameter.
pub type Gradients = ModelParams;

impl DirectionParams {
    fn zeros(input: usize, hidden: usize) -> Self {
        DirectionParams {
            w: Array2::zeros((4 * hidden, input)),
            u: Array2::zeros((4 * hidden, hidden)),
            b: Array1::zeros(4 * hidden),
        }
    }
}

impl ModelParams {
    pub fn zeros(config: ModelConfig) -> Self {
        let h = config.hidden_dim;
        let layer = |input| LayerParams {
            fwd: DirectionParams::zeros(input, h),
            bwd: DirectionParams::zeros(input, h),
        };
        ModelParams {
            config,
            embedding: Array2::zeros((config.vocab_size, config.embed_dim)),
            layers: [layer(config.embed_dim), layer(2 * h)],
            attn_w: Array2::zeros((config.attention_dim, 2 * h)),
            attn_b: Array1::zeros(config.attention_dim),
            attn_v: Array1::zeros(config.attention_dim),
            dense1_w: Array2::zeros((config.dense_dim, 2 * h)),
            dense1_b: Array1::zeros(config.dense_dim),
            dense2_w: Array2::zeros((1, config.dense_dim)),
            dense2_b: Array1::zeros(1),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.config)
    }

    /// Tensor names in their fixed serialization and initialization order.
    pub fn tensor_names() -> Vec<String> {
        let mut names = vec!["embedding".to_string()];
        for l in 0..2 {
            for dir in ["fwd", "bwd"] {
                for part in ["w", "u", "b"] {
                    names.push(format!("lstm.{l}.{dir}.{part}"));
                }
            }
        }
        names.extend(
            ["attention.w", "attention.b", "attention.v", "dense1.w", "dense1.b", "dense2.w", "dense2.b"]
                .map(String::from),
        );
        names
    }

    /// `(shape, data)` for every tensor, in [`Self::tensor_names`] order.
    pub fn tensors(&self) -> Vec<(Vec<usize>, &[f64])> {
        let mut out: Vec<(Vec<usize>, &[f64])> = Vec::with_capacity(20);
        fn m(a: &Array2<f64>) -> (Vec<usize>, &[f64]) {
            (a.shape().to_vec(), a.as_slice().expect("standard layout"))
        }
        out.push(m(&self.embedding));
        for layer in &self.layers {
            for dir in [&layer.fwd, &layer.bwd] {
                out.push(m(&dir.w));
                out.push(m(&dir.u));
                out.push((dir.b.shape().to_vec(), dir.b.as_slice().unwrap()));
            }
        }
        out.push(m(&self.attn_w));
        out.push((self.attn_b.shape().to_vec(), self.attn_b.as_slice().unwrap()));
        out.push((self.attn_v.shape().to_vec(), self.attn_v.as_slice().unwrap()));
        out.push(m(&self.dense1_w));
        out.push((self.dense1_b.shape().to_vec(), self.dense1_b.as_slice().unwrap()));
        out.push(m(&self.dense2_w));
        out.push((self.dense2_b.shape().to_vec(), self.dense2_b.as_slice().unwrap()));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(20);
        out.push(self.embedding.as_slice_mut().unwrap());
        for layer in &mut self.layers {
            for dir in [&mut layer.fwd, &mut layer.bwd] {
                out.push(dir.w.as_slice_mut().unwrap());
                out.push(dir.u.as_slice_mut().unwrap());
                out.push(dir.b.as_slice_mut().unwrap());
            }
        }
        out.push(self.attn_w.as_slice_mut().unwrap());
        out.push(self.attn_b.as_slice_mut().unwrap());
        out.push(self.attn_v.as_slice_mut().unwrap());
        out.push(self.dense1_w.as_slice_mut().unwrap());
        out.push(self.dense1_b.as_slice_mut().unwrap());
        out.push(self.dense2_w.as_slice_mut().unwrap());
        out.push(self.dense2_b.as_slice_mut().unwrap());
        out
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|(_, d)| d.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, d)| d.iter().all(|x| x.is_finite()))
    }

    pub fn l2_norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|(_, d)| d.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// `self += scale * other`
    pub fn add_scaled(&mut self, other: &ModelParams, scale: f64) {
        let src: Vec<Vec<f64>> = other.tensors().into_iter().map(|(_, d)| d.to_vec()).collect();
        for (dst, src) in self.tensors_mut().into_iter().zip(src) {
            for (a, b) in dst.iter_mut().zip(src) {
                *a += scale * b;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x *= factor);
        }
    }

    /// Rounds every entry to the nearest `f32`, the checkpoint storage precision.
    pub fn quantize_f32(&mut self) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x = *x as f32 as f64);
        }
    }
}

fn glorot(rng: &mut SplitMix64, a: &mut Array2<f64>, fan_in: usize, fan_out: usize) {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    a.iter_mut().for_each(|x| *x = rng.uniform(-limit, limit));
}

/// Glorot-uniform weights drawn in tensor order from one SplitMix64 stream,
/// zero biases except forget-gate slices (1.0), and a zero PAD embedding row.
pub fn init_params(config: ModelConfig, seed: u64) -> ModelParams {
    let mut params = ModelParams::zeros(config);
    let mut rng = SplitMix64::new(seed);
    let h = config.hidden_dim;

    let v = config.vocab_size;
    glorot(&mut rng, &mut params.embedding, v, config.embed_dim);
    for layer in &mut params.layers {
        for dir in [&mut layer.fwd, &mut layer.bwd] {
            let input = dir.w.ncols();
            glorot(&mut rng, &mut dir.w, input, 4 * h);
            glorot(&mut rng, &mut dir.u, h, 4 * h);
            dir.b.slice_mut(ndarray::s![h..2 * h]).fill(1.0);
        }
    }
    glorot(&mut rng, &mut params.attn_w, 2 * h, config.attention_dim);
    // v is a d_a x 1 projection
    let limit = (6.0 / (config.attention_dim + 1) as f64).sqrt();
    params.attn_v.iter_mut().for_each(|x| *x = rng.uniform(-limit, limit));
    glorot(&mut rng, &mut params.dense1_w, 2 * h, config.dense_dim);
    glorot(&mut rng, &mut params.dense2_w, config.dense_dim, 1);

    params.embedding.row_mut(PAD as usize).fill(0.0);
    params
}
