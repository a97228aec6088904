//! LSTM cell internals and backpropagation through time.

use crate::linalg::sigmoid;
use crate::model::Gradients;

use super::LstmParams;

/// Forward intermediates of one step, kept for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct StepCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub input_gate: Vec<f64>,
    pub forget_gate: Vec<f64>,
    pub candidate: Vec<f64>,
    pub output_gate: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
}

/// One LSTM step; returns the new hidden state and the cache (which carries
/// the new cell state).
pub(crate) fn step(params: &LstmParams, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> (Vec<f64>, StepCache) {
    let h = params.hidden_size;
    let mut pre = params.w_input.matvec(x);
    let rec = params.w_hidden.matvec(h_prev);
    for ((p, &r), &b) in pre.iter_mut().zip(&rec).zip(&params.bias) {
        *p += r + b;
    }

    let input_gate: Vec<f64> = pre[..h].iter().map(|&z| sigmoid(z)).collect();
    let forget_gate: Vec<f64> = pre[h..2 * h].iter().map(|&z| sigmoid(z)).collect();
    let candidate: Vec<f64> = pre[2 * h..3 * h].iter().map(|&z| z.tanh()).collect();
    let output_gate: Vec<f64> = pre[3 * h..].iter().map(|&z| sigmoid(z)).collect();

    let mut c = vec![0.0; h];
    for j in 0..h {
        c[j] = forget_gate[j] * c_prev[j] + input_gate[j] * candidate[j];
    }
    let tanh_c: Vec<f64> = c.iter().map(|&v| v.tanh()).collect();
    let new_h: Vec<f64> = output_gate.iter().zip(&tanh_c).map(|(&o, &t)| o * t).collect();

    let cache = StepCache {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        input_gate,
        forget_gate,
        candidate,
        output_gate,
        c,
        tanh_c,
    };
    (new_h, cache)
}

/// Forward over the (unpadded) real steps; returns per-step caches and the
/// final hidden state.
pub(crate) fn sequence_forward(params: &LstmParams, xs: &[Vec<f64>]) -> (Vec<StepCache>, Vec<f64>) {
    let mut h = vec![0.0; params.hidden_size];
    let mut c = vec![0.0; params.hidden_size];
    let mut caches = Vec::with_capacity(xs.len());
    for x in xs {
        let (next_h, cache) = step(params, x, &h, &c);
        h = next_h;
        c = cache.c.clone();
        caches.push(cache);
    }
    (caches, h)
}

/// Backpropagation through time. `d_h_last` is the loss gradient at the final
/// hidden state; returns the gradient with respect to each step input.
///
/// `forget_gate_fault` deliberately scales the forget-gate pre-activation
/// delta, giving the gradient checker a known-broken gradient to detect.
pub(crate) fn sequence_backward(
    params: &LstmParams,
    caches: &[StepCache],
    d_h_last: &[f64],
    grads: &mut Gradients,
    forget_gate_fault: bool,
) -> Vec<Vec<f64>> {
    let h = params.hidden_size;
    let mut d_h = d_h_last.to_vec();
    let mut d_c = vec![0.0; h];
    let mut d_inputs = vec![Vec::new(); caches.len()];

    for (idx, cache) in caches.iter().enumerate().rev() {
        let mut d_pre = vec![0.0; 4 * h];
        for j in 0..h {
            let o = cache.output_gate[j];
            let t = cache.tanh_c[j];
            let d_o = d_h[j] * t;
            let d_c_total = d_c[j] + d_h[j] * o * (1.0 - t * t);

            let i = cache.input_gate[j];
            let f = cache.forget_gate[j];
            let g = cache.candidate[j];

            let d_i = d_c_total * g;
            let mut d_f = d_c_total * cache.c_prev[j];
            let d_g = d_c_total * i;

            if forget_gate_fault {
                d_f *= 1.1;
            }

            d_pre[j] = d_i * i * (1.0 - i);
            d_pre[h + j] = d_f * f * (1.0 - f);
            d_pre[2 * h + j] = d_g * (1.0 - g * g);
            d_pre[3 * h + j] = d_o * o * (1.0 - o);

            d_c[j] = d_c_total * f;
        }

        grads.w_input.add_outer(&d_pre, &cache.x);
        grads.w_hidden.add_outer(&d_pre, &cache.h_prev);
        for (b, &d) in grads.bias.iter_mut().zip(&d_pre) {
            *b += d;
        }
        d_inputs[idx] = params.w_input.matvec_transposed(&d_pre);
        d_h = params.w_hidden.matvec_transposed(&d_pre);
    }
    d_inputs
}
