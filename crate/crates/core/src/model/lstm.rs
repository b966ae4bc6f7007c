//! LSTM recurrences over time-major batches.
//!
//! A direction's input is a `(T·B) x in` matrix whose row `s·B + b` is step
//! `s` of sequence `b`. Sequences shorter than `T` are inactive past their
//! length: their state is held at zero and they receive no gradient.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut2, Axis};

use super::DirectionParams;

pub(super) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `c = alpha * a * b + beta * c`, counting multiply-adds.
pub(super) fn gemm(alpha: f64, a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>, beta: f64, c: &mut ArrayViewMut2<'_, f64>, macs: &mut u64) {
    *macs += (a.nrows() * a.ncols() * b.ncols()) as u64;
    general_mat_mul(alpha, &a, &b, beta, c);
}

/// Gate activations of a single step, `[i, f, g, o]` after their nonlinearities.
#[derive(Debug, Clone, PartialEq)]
pub struct CellTrace {
    pub i: Array1<f64>,
    pub f: Array1<f64>,
    pub g: Array1<f64>,
    pub o: Array1<f64>,
}

/// One LSTM step: `z = W x + U h + b`, `c' = f ⊙ c + i ⊙ g`, `h' = o ⊙ tanh(c')`.
///
/// Panics if the shapes do not conform.
pub fn lstm_cell(
    x: ArrayView1<'_, f64>,
    h_prev: ArrayView1<'_, f64>,
    c_prev: ArrayView1<'_, f64>,
    params: &DirectionParams,
) -> (Array1<f64>, Array1<f64>, CellTrace) {
    let hidden = params.u.ncols();
    assert_eq!(params.w.nrows(), 4 * hidden, "W must have 4h rows");
    assert_eq!(params.w.ncols(), x.len(), "W columns must match the input");
    assert_eq!(h_prev.len(), hidden);
    assert_eq!(c_prev.len(), hidden);

    let z = params.w.dot(&x) + params.u.dot(&h_prev) + &params.b;
    let i = z.slice(s![..hidden]).mapv(sigmoid);
    let f = z.slice(s![hidden..2 * hidden]).mapv(sigmoid);
    let g = z.slice(s![2 * hidden..3 * hidden]).mapv(f64::tanh);
    let o = z.slice(s![3 * hidden..]).mapv(sigmoid);
    let c = &f * &c_prev + &i * &g;
    let h = &o * &c.mapv(f64::tanh);
    (h, c, CellTrace { i, f, g, o })
}

/// Everything the backward pass of one direction needs.
#[derive(Debug, Clone)]
pub(super) struct DirectionTrace {
    pub input: Array2<f64>,
    /// Post-activation gates, `(T·B) x 4h`.
    pub gates: Array2<f64>,
    pub cell: Array2<f64>,
    pub tanh_cell: Array2<f64>,
    /// Hidden states, `(T·B) x h`; zero on inactive rows.
    pub hidden: Array2<f64>,
}

pub(super) fn run_direction(params: &DirectionParams, input: Array2<f64>, lens: &[usize], steps: usize, macs: &mut u64) -> DirectionTrace {
    let batch = lens.len();
    let h = params.u.ncols();
    let rows = steps * batch;

    let mut gates = Array2::zeros((rows, 4 * h));
    gemm(1.0, input.view(), params.w.t(), 0.0, &mut gates.view_mut(), macs);
    gates += &params.b;

    let mut cell = Array2::<f64>::zeros((rows, h));
    let mut tanh_cell = Array2::<f64>::zeros((rows, h));
    let mut hidden = Array2::<f64>::zeros((rows, h));

    for step in 0..steps {
        let cur = step * batch..(step + 1) * batch;
        if step > 0 {
            let prev = (step - 1) * batch..step * batch;
            let h_prev = hidden.slice(s![prev, ..]);
            let mut z = gates.slice_mut(s![cur, ..]);
            gemm(1.0, h_prev, params.u.t(), 1.0, &mut z, macs);
        }
        for b in 0..batch {
            let row = step * batch + b;
            if step >= lens[b] {
                gates.row_mut(row).fill(0.0);
                continue;
            }
            let mut z = gates.row_mut(row);
            let zs = z.as_slice_mut().unwrap();
            for k in 0..h {
                zs[k] = sigmoid(zs[k]);
                zs[h + k] = sigmoid(zs[h + k]);
                zs[2 * h + k] = zs[2 * h + k].tanh();
                zs[3 * h + k] = sigmoid(zs[3 * h + k]);
            }
            for k in 0..h {
                let c_prev = if step > 0 { cell[[row - batch, k]] } else { 0.0 };
                let c = zs[h + k] * c_prev + zs[k] * zs[2 * h + k];
                let tc = c.tanh();
                cell[[row, k]] = c;
                tanh_cell[[row, k]] = tc;
                hidden[[row, k]] = zs[3 * h + k] * tc;
            }
        }
    }

    DirectionTrace {
        input,
        gates,
        cell,
        tanh_cell,
        hidden,
    }
}

/// Backpropagation through time. Accumulates into `grads` and returns the
/// gradient with respect to the direction's input.
pub(super) fn backprop_direction(
    params: &DirectionParams,
    trace: &DirectionTrace,
    d_hidden: &Array2<f64>,
    lens: &[usize],
    steps: usize,
    grads: &mut DirectionParams,
    macs: &mut u64,
) -> Array2<f64> {
    let batch = lens.len();
    let h = params.u.ncols();
    let rows = steps * batch;

    let mut dz = Array2::<f64>::zeros((rows, 4 * h));
    let mut dh_next = Array2::<f64>::zeros((batch, h));
    let mut dc_next = Array2::<f64>::zeros((batch, h));

    for step in (0..steps).rev() {
        for b in 0..batch {
            if step >= lens[b] {
                continue;
            }
            let row = step * batch + b;
            let g = trace.gates.row(row);
            let g = g.as_slice().unwrap();
            let mut dzr = dz.row_mut(row);
            let dzr = dzr.as_slice_mut().unwrap();
            for k in 0..h {
                let (i, f, gg, o) = (g[k], g[h + k], g[2 * h + k], g[3 * h + k]);
                let tc = trace.tanh_cell[[row, k]];
                let c_prev = if step > 0 { trace.cell[[row - batch, k]] } else { 0.0 };
                let dh = d_hidden[[row, k]] + dh_next[[b, k]];
                let dc = dc_next[[b, k]] + dh * o * (1.0 - tc * tc);
                dzr[k] = dc * gg * i * (1.0 - i);
                dzr[h + k] = dc * c_prev * f * (1.0 - f);
                dzr[2 * h + k] = dc * i * (1.0 - gg * gg);
                dzr[3 * h + k] = dh * tc * o * (1.0 - o);
                dc_next[[b, k]] = dc * f;
            }
        }
        if step > 0 {
            let dz_step = dz.slice(s![step * batch..(step + 1) * batch, ..]);
            gemm(1.0, dz_step, params.u.view(), 0.0, &mut dh_next.view_mut(), macs);
        }
    }

    gemm(1.0, dz.t(), trace.input.view(), 1.0, &mut grads.w.view_mut(), macs);
    grads.b += &dz.sum_axis(Axis(0));
    if steps > 1 {
        let dz_tail = dz.slice(s![batch.., ..]);
        let h_head = trace.hidden.slice(s![..rows - batch, ..]);
        gemm(1.0, dz_tail.t(), h_head, 1.0, &mut grads.u.view_mut(), macs);
    }

    let mut d_input = Array2::zeros((rows, params.w.ncols()));
    gemm(1.0, dz.view(), params.w.view(), 0.0, &mut d_input.view_mut(), macs);
    d_input
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_dir(input: usize, h: usize, seed: u64) -> DirectionParams {
        let mut rng = SplitMix64::new(seed);
        let mut r = |shape: (usize, usize)| Array2::from_shape_fn(shape, |_| rng.uniform(-0.5, 0.5));
        DirectionParams {
            w: r((4 * h, input)),
            u: r((4 * h, h)),
            b: r((1, 4 * h)).row(0).to_owned(),
        }
    }

    #[test]
    fn zero_weights_give_zero_state() {
        let p = DirectionParams {
            w: Array2::zeros((12, 2)),
            u: Array2::zeros((12, 3)),
            b: Array1::zeros(12),
        };
        let x = Array1::from(vec![3.0, -7.0]);
        let zero = Array1::zeros(3);
        let (h, c, tr) = lstm_cell(x.view(), zero.view(), zero.view(), &p);
        assert!(h.iter().chain(c.iter()).all(|&v| v == 0.0));
        assert!(tr.i.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn saturated_gates_carry_cell() {
        let mut p = DirectionParams {
            w: Array2::zeros((8, 1)),
            u: Array2::zeros((8, 2)),
            b: Array1::zeros(8),
        };
        p.b.slice_mut(s![0..2]).fill(-1e3); // input gate closed
        p.b.slice_mut(s![2..4]).fill(1e3); // forget gate open
        let c_prev = Array1::from(vec![0.3, -0.8]);
        let (_, c, _) = lstm_cell(Array1::from(vec![1.0]).view(), Array1::zeros(2).view(), c_prev.view(), &p);
        assert_eq!(c, c_prev);
    }

    #[test]
    fn outputs_bounded() {
        let p = random_dir(4, 5, 11);
        let mut rng = SplitMix64::new(2);
        let x = Array1::from_shape_fn(4, |_| rng.uniform(-50.0, 50.0));
        let hp = Array1::from_shape_fn(5, |_| rng.uniform(-1.0, 1.0));
        let cp = Array1::from_shape_fn(5, |_| rng.uniform(-10.0, 10.0));
        let (h, c, _) = lstm_cell(x.view(), hp.view(), cp.view(), &p);
        assert!(h.iter().all(|v| v.is_finite() && v.abs() <= 1.0));
        assert!(c.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn batched_run_matches_cell_steps() {
        let (input, h) = (3, 4);
        let p = random_dir(input, h, 5);
        let lens = [3usize, 1, 2];
        let (batch, steps) = (3, 3);
        let mut rng = SplitMix64::new(8);
        let mut x = Array2::from_shape_fn((steps * batch, input), |_| rng.uniform(-1.0, 1.0));
        for s in 0..steps {
            for b in 0..batch {
                if s >= lens[b] {
                    x.row_mut(s * batch + b).fill(0.0);
                }
            }
        }
        let mut macs = 0;
        let tr = run_direction(&p, x.clone(), &lens, steps, &mut macs);
        for b in 0..batch {
            let (mut hp, mut cp) = (Array1::zeros(h), Array1::zeros(h));
            for s in 0..lens[b] {
                let (hn, cn, _) = lstm_cell(x.row(s * batch + b), hp.view(), cp.view(), &p);
                for k in 0..h {
                    assert!((tr.hidden[[s * batch + b, k]] - hn[k]).abs() < 1e-12);
                }
                hp = hn;
                cp = cn;
            }
            for s in lens[b]..steps {
                assert!(tr.hidden.row(s * batch + b).iter().all(|&v| v == 0.0));
            }
        }
    }
}
