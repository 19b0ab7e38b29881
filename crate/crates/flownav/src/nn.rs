//! Small dense/LSTM building blocks with exact analytic gradients, plus the
//! Adam optimizer. Everything is plain `Vec<f64>` with explicit loops; no
//! autodiff framework and no GPU path.

use rand::Rng;
use rand_chacha::ChaCha20Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
    Linear,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the post-activation value.
    fn deriv_from_post(self, post: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - post * post,
            Activation::Relu => {
                if post > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }
}

/// Fully connected layer, weights row-major `w[out * in_dim + in]`.
#[derive(Debug, Clone)]
pub struct DenseLayer {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
}

/// Xavier-uniform bound for a weight matrix.
fn xavier(rng: &mut ChaCha20Rng, fan_in: usize, fan_out: usize, n: usize) -> Vec<f64> {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..n).map(|_| rng.random_range(-bound..bound)).collect()
}

impl DenseLayer {
    pub fn new(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut ChaCha20Rng) -> Self {
        DenseLayer {
            w: xavier(rng, in_dim, out_dim, in_dim * out_dim),
            b: vec![0.0; out_dim],
            in_dim,
            out_dim,
            activation,
        }
    }

    pub fn n_params(&self) -> usize {
        self.w.len() + self.b.len()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.in_dim);
        let mut out = Vec::with_capacity(self.out_dim);
        for o in 0..self.out_dim {
            let row = &self.w[o * self.in_dim..(o + 1) * self.in_dim];
            let mut z = self.b[o];
            for (wi, xi) in row.iter().zip(x) {
                z += wi * xi;
            }
            out.push(self.activation.apply(z));
        }
        out
    }

    /// Accumulate parameter gradients and (optionally) the input gradient
    /// from the gradient w.r.t. the post-activation output.
    pub fn backward(
        &self,
        x: &[f64],
        post: &[f64],
        d_post: &[f64],
        dw: &mut [f64],
        db: &mut [f64],
        mut dx: Option<&mut [f64]>,
    ) {
        for o in 0..self.out_dim {
            let delta = d_post[o] * self.activation.deriv_from_post(post[o]);
            if delta == 0.0 {
                continue;
            }
            db[o] += delta;
            let row = &self.w[o * self.in_dim..(o + 1) * self.in_dim];
            let drow = &mut dw[o * self.in_dim..(o + 1) * self.in_dim];
            for i in 0..self.in_dim {
                drow[i] += delta * x[i];
            }
            if let Some(dx) = dx.as_deref_mut() {
                for i in 0..self.in_dim {
                    dx[i] += delta * row[i];
                }
            }
        }
    }
}

/// LSTM cell over the concatenation [h_prev, x].
#[derive(Debug, Clone)]
pub struct LstmCell {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub w_f: Vec<f64>,
    pub b_f: Vec<f64>,
    pub w_i: Vec<f64>,
    pub b_i: Vec<f64>,
    pub w_c: Vec<f64>,
    pub b_c: Vec<f64>,
    pub w_o: Vec<f64>,
    pub b_o: Vec<f64>,
}

/// Every intermediate of one cell evaluation, kept for backprop.
#[derive(Debug, Clone)]
pub struct LstmTrace {
    /// concatenated [h_prev, x]
    pub s: Vec<f64>,
    pub f: Vec<f64>,
    pub i: Vec<f64>,
    /// candidate cell state
    pub g: Vec<f64>,
    pub o: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub c: Vec<f64>,
    /// tanh(c)
    pub tc: Vec<f64>,
    pub h: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl LstmCell {
    pub fn new(input_dim: usize, hidden_dim: usize, rng: &mut ChaCha20Rng) -> Self {
        let cat = hidden_dim + input_dim;
        let n = hidden_dim * cat;
        LstmCell {
            input_dim,
            hidden_dim,
            w_f: xavier(rng, cat, hidden_dim, n),
            b_f: vec![1.0; hidden_dim], // keeps early memory open
            w_i: xavier(rng, cat, hidden_dim, n),
            b_i: vec![0.0; hidden_dim],
            w_c: xavier(rng, cat, hidden_dim, n),
            b_c: vec![0.0; hidden_dim],
            w_o: xavier(rng, cat, hidden_dim, n),
            b_o: vec![0.0; hidden_dim],
        }
    }

    pub fn n_params(&self) -> usize {
        4 * (self.w_f.len() + self.b_f.len())
    }

    fn gate(&self, w: &[f64], b: &[f64], s: &[f64], squash: fn(f64) -> f64) -> Vec<f64> {
        let cat = self.hidden_dim + self.input_dim;
        let mut out = Vec::with_capacity(self.hidden_dim);
        for o in 0..self.hidden_dim {
            let row = &w[o * cat..(o + 1) * cat];
            let mut z = b[o];
            for (wi, si) in row.iter().zip(s) {
                z += wi * si;
            }
            out.push(squash(z));
        }
        out
    }

    /// f = sig(Wf s + bf); i = sig(Wi s + bi); g = tanh(Wc s + bc);
    /// c = f*c_prev + i*g; o = sig(Wo s + bo); h = o*tanh(c).
    pub fn forward(&self, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> LstmTrace {
        debug_assert_eq!(x.len(), self.input_dim);
        debug_assert_eq!(h_prev.len(), self.hidden_dim);
        debug_assert_eq!(c_prev.len(), self.hidden_dim);
        let mut s = Vec::with_capacity(self.hidden_dim + self.input_dim);
        s.extend_from_slice(h_prev);
        s.extend_from_slice(x);

        let f = self.gate(&self.w_f, &self.b_f, &s, sigmoid);
        let i = self.gate(&self.w_i, &self.b_i, &s, sigmoid);
        let g = self.gate(&self.w_c, &self.b_c, &s, f64::tanh);
        let o = self.gate(&self.w_o, &self.b_o, &s, sigmoid);

        let mut c = Vec::with_capacity(self.hidden_dim);
        for k in 0..self.hidden_dim {
            c.push(f[k] * c_prev[k] + i[k] * g[k]);
        }
        let tc: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
        let h: Vec<f64> = (0..self.hidden_dim).map(|k| o[k] * tc[k]).collect();

        LstmTrace { s, f, i, g, o, c_prev: c_prev.to_vec(), c, tc, h }
    }

    /// Backprop one cell evaluation. `d_h` and `d_c` are gradients flowing
    /// into this step's h and c outputs; the input-side gradients are
    /// accumulated into `d_s` (split [d_h_prev, d_x] by the caller) and
    /// `d_c_prev`.
    #[allow(clippy::too_many_arguments)]
    pub fn backward(
        &self,
        t: &LstmTrace,
        d_h: &[f64],
        d_c_in: &[f64],
        grads: &mut LstmGrads,
        d_s: &mut [f64],
        d_c_prev: &mut [f64],
    ) {
        let hd = self.hidden_dim;
        let cat = hd + self.input_dim;
        let mut dzf = vec![0.0; hd];
        let mut dzi = vec![0.0; hd];
        let mut dzg = vec![0.0; hd];
        let mut dzo = vec![0.0; hd];

        for k in 0..hd {
            let d_o = d_h[k] * t.tc[k];
            let d_c = d_c_in[k] + d_h[k] * t.o[k] * (1.0 - t.tc[k] * t.tc[k]);
            let d_f = d_c * t.c_prev[k];
            let d_i = d_c * t.g[k];
            let d_g = d_c * t.i[k];
            d_c_prev[k] += d_c * t.f[k];
            dzf[k] = d_f * t.f[k] * (1.0 - t.f[k]);
            dzi[k] = d_i * t.i[k] * (1.0 - t.i[k]);
            dzg[k] = d_g * (1.0 - t.g[k] * t.g[k]);
            dzo[k] = d_o * t.o[k] * (1.0 - t.o[k]);
        }

        let mut spread = |dz: &[f64], w: &[f64], dw: &mut [f64], db: &mut [f64]| {
            for k in 0..hd {
                if dz[k] == 0.0 {
                    continue;
                }
                db[k] += dz[k];
                let row = &w[k * cat..(k + 1) * cat];
                let drow = &mut dw[k * cat..(k + 1) * cat];
                for j in 0..cat {
                    drow[j] += dz[k] * t.s[j];
                    d_s[j] += dz[k] * row[j];
                }
            }
        };
        spread(&dzf, &self.w_f, &mut grads.w_f, &mut grads.b_f);
        spread(&dzi, &self.w_i, &mut grads.w_i, &mut grads.b_i);
        spread(&dzg, &self.w_c, &mut grads.w_c, &mut grads.b_c);
        spread(&dzo, &self.w_o, &mut grads.w_o, &mut grads.b_o);
    }
}

/// Gradient buffers matching `LstmCell`.
#[derive(Debug, Clone)]
pub struct LstmGrads {
    pub w_f: Vec<f64>,
    pub b_f: Vec<f64>,
    pub w_i: Vec<f64>,
    pub b_i: Vec<f64>,
    pub w_c: Vec<f64>,
    pub b_c: Vec<f64>,
    pub w_o: Vec<f64>,
    pub b_o: Vec<f64>,
}

impl LstmGrads {
    pub fn zeros(cell: &LstmCell) -> Self {
        let n = cell.w_f.len();
        let h = cell.hidden_dim;
        LstmGrads {
            w_f: vec![0.0; n],
            b_f: vec![0.0; h],
            w_i: vec![0.0; n],
            b_i: vec![0.0; h],
            w_c: vec![0.0; n],
            b_c: vec![0.0; h],
            w_o: vec![0.0; n],
            b_o: vec![0.0; h],
        }
    }
}

/// Plain multilayer perceptron used by the TD3 actor and critics.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub layers: Vec<DenseLayer>,
}

#[derive(Debug, Clone)]
pub struct MlpTape {
    /// activations[0] is the input; activations[k+1] the output of layer k
    pub activations: Vec<Vec<f64>>,
}

impl Mlp {
    /// `dims` lists layer widths input-first; hidden layers get
    /// `hidden_act`, the final layer `out_act`.
    pub fn new(dims: &[usize], hidden_act: Activation, out_act: Activation, rng: &mut ChaCha20Rng) -> Self {
        assert!(dims.len() >= 2);
        let layers = (0..dims.len() - 1)
            .map(|k| {
                let act = if k + 2 == dims.len() { out_act } else { hidden_act };
                DenseLayer::new(dims[k], dims[k + 1], act, rng)
            })
            .collect();
        Mlp { layers }
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.layers[0].in_dim];
        d.extend(self.layers.iter().map(|l| l.out_dim));
        d
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.n_params()).sum()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        for l in &self.layers {
            cur = l.forward(&cur);
        }
        cur
    }

    pub fn forward_tape(&self, x: &[f64]) -> MlpTape {
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_vec());
        for l in &self.layers {
            let next = l.forward(activations.last().unwrap());
            activations.push(next);
        }
        MlpTape { activations }
    }

    /// Accumulate parameter grads into `grads` (same layout as
    /// `flat_params`) and return the gradient w.r.t. the input.
    pub fn backward(&self, tape: &MlpTape, d_out: &[f64], grads: &mut [f64]) -> Vec<f64> {
        let mut delta = d_out.to_vec();
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut off = 0;
        for l in &self.layers {
            offsets.push(off);
            off += l.n_params();
        }
        debug_assert_eq!(off, grads.len());
        for (k, l) in self.layers.iter().enumerate().rev() {
            let (dw, db) = grads[offsets[k]..offsets[k] + l.n_params()].split_at_mut(l.w.len());
            let mut dx = vec![0.0; l.in_dim];
            l.backward(&tape.activations[k], &tape.activations[k + 1], &delta, dw, db, Some(&mut dx));
            delta = dx;
        }
        delta
    }

    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend_from_slice(&l.w);
            out.extend_from_slice(&l.b);
        }
        out
    }

    pub fn set_flat_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.n_params());
        let mut off = 0;
        for l in &mut self.layers {
            let nw = l.w.len();
            l.w.copy_from_slice(&p[off..off + nw]);
            off += nw;
            let nb = l.b.len();
            l.b.copy_from_slice(&p[off..off + nb]);
            off += nb;
        }
    }
}

/// Bias-corrected Adam over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), grads.len());
        assert_eq!(params.len(), self.m.len());
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for k in 0..params.len() {
            let g = grads[k];
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g;
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[k] / bc1;
            let v_hat = self.v[k] / bc2;
            params[k] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}
