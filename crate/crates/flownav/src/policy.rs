//! Policy networks with Gaussian and value heads.
//!
//! `PolicyNet` is the recurrent network: two tanh dense layers, an LSTM fed
//! with the features plus the previous action and reward, and three linear
//! heads (mu, log sigma, value). `FfPolicyNet` is the feedforward baseline
//! sharing the same head convention. Both implement `PpoPolicy`, so the PPO
//! trainer is a single code path; gradients are analytic, with
//! backpropagation through time across a rollout chunk for the LSTM.

use crate::dynamics::ActionCmd;
use crate::nn::{Activation, DenseLayer, LstmCell, LstmGrads, LstmTrace};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

pub const ACTION_DIM: usize = 2;
pub const LOG_SIGMA_MIN: f64 = -5.0;
pub const LOG_SIGMA_MAX: f64 = 2.0;

const DENSE1: usize = 64;
const DENSE2: usize = 32;
const LSTM_HIDDEN: usize = 16;
const FF_DENSE1: usize = 128;
const FF_DENSE2: usize = 64;

/// LSTM carry; both vectors are empty for feedforward policies.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenState {
    pub c: Vec<f64>,
    pub h: Vec<f64>,
}

impl HiddenState {
    pub fn empty() -> Self {
        HiddenState { c: Vec::new(), h: Vec::new() }
    }
}

/// One step of network input: normalized observation plus the previous
/// executed action and the previous reward.
#[derive(Debug, Clone)]
pub struct PolicyInput {
    pub obs: Vec<f64>,
    pub prev_action: [f64; ACTION_DIM],
    pub prev_reward: f64,
}

/// Network outputs for one step.
#[derive(Debug, Clone, Copy)]
pub struct HeadOut {
    pub mu: [f64; ACTION_DIM],
    pub sigma: [f64; ACTION_DIM],
    pub value: f64,
}

/// Loss gradient w.r.t. the head outputs; `d_log_sigma` is taken w.r.t.
/// ln(sigma) and the clamp mask is applied inside the network backward.
#[derive(Debug, Clone, Copy, Default)]
pub struct HeadGrad {
    pub d_mu: [f64; ACTION_DIM],
    pub d_log_sigma: [f64; ACTION_DIM],
    pub d_value: f64,
}

/// Common surface the PPO trainer needs from a policy network.
pub trait PpoPolicy {
    type Tape;

    fn obs_dim(&self) -> usize;
    fn n_params(&self) -> usize;
    fn flat_params(&self) -> Vec<f64>;
    fn set_flat_params(&mut self, p: &[f64]);
    fn initial_hidden(&self) -> HiddenState;
    /// Single inference step (used for rollout and evaluation).
    fn step(&self, input: &PolicyInput, hidden: &HiddenState) -> (HeadOut, HiddenState);
    /// Replay a contiguous chunk from its entry hidden state, keeping the tape.
    fn forward_chunk(&self, inputs: &[PolicyInput], entry: &HiddenState) -> (Vec<HeadOut>, Self::Tape);
    /// Accumulate d(loss)/d(params) into `acc` given per-step head gradients.
    fn backward_chunk(&self, tape: &Self::Tape, grads: &[HeadGrad], acc: &mut [f64]);
    /// Widths for the checkpoint descriptor.
    fn arch(&self) -> Vec<u32>;
}

fn clamp_log_sigma(raw: f64) -> f64 {
    raw.clamp(LOG_SIGMA_MIN, LOG_SIGMA_MAX)
}

fn head_out(mu: &[f64], ls_raw: &[f64], value: &[f64]) -> HeadOut {
    HeadOut {
        mu: [mu[0], mu[1]],
        sigma: [clamp_log_sigma(ls_raw[0]).exp(), clamp_log_sigma(ls_raw[1]).exp()],
        value: value[0],
    }
}

/// Mask the log-sigma gradient where the clamp is saturated.
fn mask_ls_grad(ls_raw: &[f64; ACTION_DIM], d_ls: &[f64; ACTION_DIM]) -> [f64; ACTION_DIM] {
    let mut out = [0.0; ACTION_DIM];
    for k in 0..ACTION_DIM {
        if ls_raw[k] > LOG_SIGMA_MIN && ls_raw[k] < LOG_SIGMA_MAX {
            out[k] = d_ls[k];
        }
    }
    out
}

// --- recurrent policy --------------------------------------------------------

#[derive(Debug, Clone)]
pub struct PolicyNet {
    pub dense1: DenseLayer,
    pub dense2: DenseLayer,
    pub lstm: LstmCell,
    pub head_mu: DenseLayer,
    pub head_log_sigma: DenseLayer,
    pub head_value: DenseLayer,
}

/// Per-step forward record for BPTT.
#[derive(Debug, Clone)]
pub struct PolicyStepTape {
    x: Vec<f64>,
    a1: Vec<f64>,
    a2: Vec<f64>,
    lstm: LstmTrace,
    ls_raw: [f64; ACTION_DIM],
    mu: [f64; ACTION_DIM],
    value: f64,
}

pub struct PolicyChunkTape {
    steps: Vec<PolicyStepTape>,
}

impl PolicyNet {
    pub fn new(obs_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        PolicyNet {
            dense1: DenseLayer::new(obs_dim, DENSE1, Activation::Tanh, &mut rng),
            dense2: DenseLayer::new(DENSE1, DENSE2, Activation::Tanh, &mut rng),
            lstm: LstmCell::new(DENSE2 + ACTION_DIM + 1, LSTM_HIDDEN, &mut rng),
            head_mu: DenseLayer::new(LSTM_HIDDEN, ACTION_DIM, Activation::Linear, &mut rng),
            head_log_sigma: DenseLayer::new(LSTM_HIDDEN, ACTION_DIM, Activation::Linear, &mut rng),
            head_value: DenseLayer::new(LSTM_HIDDEN, 1, Activation::Linear, &mut rng),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.lstm.hidden_dim
    }

    fn step_core(&self, input: &PolicyInput, hidden: &HiddenState) -> (HeadOut, PolicyStepTape) {
        debug_assert_eq!(input.obs.len(), self.dense1.in_dim);
        let a1 = self.dense1.forward(&input.obs);
        let a2 = self.dense2.forward(&a1);
        let mut u = Vec::with_capacity(self.lstm.input_dim);
        u.extend_from_slice(&a2);
        u.extend_from_slice(&input.prev_action);
        u.push(input.prev_reward);
        let trace = self.lstm.forward(&u, &hidden.h, &hidden.c);
        let mu = self.head_mu.forward(&trace.h);
        let ls = self.head_log_sigma.forward(&trace.h);
        let v = self.head_value.forward(&trace.h);
        let out = head_out(&mu, &ls, &v);
        for val in [out.mu[0], out.mu[1], out.sigma[0], out.sigma[1], out.value] {
            assert!(val.is_finite(), "non-finite value out of the policy heads");
        }
        let tape = PolicyStepTape {
            x: input.obs.clone(),
            a1,
            a2,
            lstm: trace,
            ls_raw: [ls[0], ls[1]],
            mu: out.mu,
            value: out.value,
        };
        (out, tape)
    }
}

#[derive(Debug)]
struct PolicyGrads {
    d1w: Vec<f64>,
    d1b: Vec<f64>,
    d2w: Vec<f64>,
    d2b: Vec<f64>,
    lstm: LstmGrads,
    muw: Vec<f64>,
    mub: Vec<f64>,
    lsw: Vec<f64>,
    lsb: Vec<f64>,
    vw: Vec<f64>,
    vb: Vec<f64>,
}

impl PolicyGrads {
    fn zeros(net: &PolicyNet) -> Self {
        PolicyGrads {
            d1w: vec![0.0; net.dense1.w.len()],
            d1b: vec![0.0; net.dense1.b.len()],
            d2w: vec![0.0; net.dense2.w.len()],
            d2b: vec![0.0; net.dense2.b.len()],
            lstm: LstmGrads::zeros(&net.lstm),
            muw: vec![0.0; net.head_mu.w.len()],
            mub: vec![0.0; net.head_mu.b.len()],
            lsw: vec![0.0; net.head_log_sigma.w.len()],
            lsb: vec![0.0; net.head_log_sigma.b.len()],
            vw: vec![0.0; net.head_value.w.len()],
            vb: vec![0.0; net.head_value.b.len()],
        }
    }

    fn add_into(&self, acc: &mut [f64]) {
        let blocks: [&[f64]; 18] = [
            &self.d1w, &self.d1b, &self.d2w, &self.d2b,
            &self.lstm.w_f, &self.lstm.b_f, &self.lstm.w_i, &self.lstm.b_i,
            &self.lstm.w_c, &self.lstm.b_c, &self.lstm.w_o, &self.lstm.b_o,
            &self.muw, &self.mub, &self.lsw, &self.lsb, &self.vw, &self.vb,
        ];
        let mut off = 0;
        for b in blocks {
            for (dst, src) in acc[off..off + b.len()].iter_mut().zip(b) {
                *dst += src;
            }
            off += b.len();
        }
        debug_assert_eq!(off, acc.len());
    }
}

impl PpoPolicy for PolicyNet {
    type Tape = PolicyChunkTape;

    fn obs_dim(&self) -> usize {
        self.dense1.in_dim
    }

    fn n_params(&self) -> usize {
        self.dense1.n_params()
            + self.dense2.n_params()
            + self.lstm.n_params()
            + self.head_mu.n_params()
            + self.head_log_sigma.n_params()
            + self.head_value.n_params()
    }

    fn flat_params(&self) -> Vec<f64> {
        let blocks: [&[f64]; 18] = [
            &self.dense1.w, &self.dense1.b, &self.dense2.w, &self.dense2.b,
            &self.lstm.w_f, &self.lstm.b_f, &self.lstm.w_i, &self.lstm.b_i,
            &self.lstm.w_c, &self.lstm.b_c, &self.lstm.w_o, &self.lstm.b_o,
            &self.head_mu.w, &self.head_mu.b,
            &self.head_log_sigma.w, &self.head_log_sigma.b,
            &self.head_value.w, &self.head_value.b,
        ];
        let mut out = Vec::with_capacity(self.n_params());
        for b in blocks {
            out.extend_from_slice(b);
        }
        out
    }

    fn set_flat_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.n_params());
        let blocks: [&mut Vec<f64>; 18] = [
            &mut self.dense1.w, &mut self.dense1.b, &mut self.dense2.w, &mut self.dense2.b,
            &mut self.lstm.w_f, &mut self.lstm.b_f, &mut self.lstm.w_i, &mut self.lstm.b_i,
            &mut self.lstm.w_c, &mut self.lstm.b_c, &mut self.lstm.w_o, &mut self.lstm.b_o,
            &mut self.head_mu.w, &mut self.head_mu.b,
            &mut self.head_log_sigma.w, &mut self.head_log_sigma.b,
            &mut self.head_value.w, &mut self.head_value.b,
        ];
        let mut off = 0;
        for b in blocks {
            let n = b.len();
            b.copy_from_slice(&p[off..off + n]);
            off += n;
        }
    }

    fn initial_hidden(&self) -> HiddenState {
        HiddenState { c: vec![0.0; LSTM_HIDDEN], h: vec![0.0; LSTM_HIDDEN] }
    }

    fn step(&self, input: &PolicyInput, hidden: &HiddenState) -> (HeadOut, HiddenState) {
        let (out, tape) = self.step_core(input, hidden);
        (out, HiddenState { c: tape.lstm.c, h: tape.lstm.h })
    }

    fn forward_chunk(&self, inputs: &[PolicyInput], entry: &HiddenState) -> (Vec<HeadOut>, PolicyChunkTape) {
        let mut hidden = entry.clone();
        let mut outs = Vec::with_capacity(inputs.len());
        let mut steps = Vec::with_capacity(inputs.len());
        for input in inputs {
            let (out, tape) = self.step_core(input, &hidden);
            hidden = HiddenState { c: tape.lstm.c.clone(), h: tape.lstm.h.clone() };
            outs.push(out);
            steps.push(tape);
        }
        (outs, PolicyChunkTape { steps })
    }

    fn backward_chunk(&self, tape: &PolicyChunkTape, grads: &[HeadGrad], acc: &mut [f64]) {
        assert_eq!(tape.steps.len(), grads.len());
        let hd = self.lstm.hidden_dim;
        let cat = hd + self.lstm.input_dim;
        let mut g = PolicyGrads::zeros(self);
        // gradients flowing backwards through the recurrent carry
        let mut d_h_next = vec![0.0; hd];
        let mut d_c_next = vec![0.0; hd];

        for (t, hg) in tape.steps.iter().zip(grads).rev() {
            let mut d_h = d_h_next.clone();
            let d_mu = hg.d_mu;
            let d_ls = mask_ls_grad(&t.ls_raw, &hg.d_log_sigma);
            let d_v = [hg.d_value];
            let mu_post = [t.mu[0], t.mu[1]];
            let ls_post = t.ls_raw;
            let v_post = [t.value];
            self.head_mu.backward(&t.lstm.h, &mu_post, &d_mu, &mut g.muw, &mut g.mub, Some(&mut d_h));
            self.head_log_sigma.backward(&t.lstm.h, &ls_post, &d_ls, &mut g.lsw, &mut g.lsb, Some(&mut d_h));
            self.head_value.backward(&t.lstm.h, &v_post, &d_v, &mut g.vw, &mut g.vb, Some(&mut d_h));

            let mut d_s = vec![0.0; cat];
            let mut d_c_prev = vec![0.0; hd];
            self.lstm.backward(&t.lstm, &d_h, &d_c_next, &mut g.lstm, &mut d_s, &mut d_c_prev);

            // split the concat gradient: [h_prev | a2, prev_action, prev_reward]
            d_h_next = d_s[..hd].to_vec();
            d_c_next = d_c_prev;
            let d_a2 = &d_s[hd..hd + self.dense2.out_dim];

            let mut d_a1 = vec![0.0; self.dense2.in_dim];
            self.dense2.backward(&t.a1, &t.a2, d_a2, &mut g.d2w, &mut g.d2b, Some(&mut d_a1));
            self.dense1.backward(&t.x, &t.a1, &d_a1, &mut g.d1w, &mut g.d1b, None);
        }
        // the entry hidden state is treated as a constant (truncation point)
        g.add_into(acc);
    }

    fn arch(&self) -> Vec<u32> {
        vec![
            self.dense1.in_dim as u32,
            self.dense1.out_dim as u32,
            self.dense2.out_dim as u32,
            self.lstm.hidden_dim as u32,
            ACTION_DIM as u32,
        ]
    }
}

// --- feedforward baseline policy ---------------------------------------------

#[derive(Debug, Clone)]
pub struct FfPolicyNet {
    pub dense1: DenseLayer,
    pub dense2: DenseLayer,
    pub head_mu: DenseLayer,
    pub head_log_sigma: DenseLayer,
    pub head_value: DenseLayer,
}

#[derive(Debug, Clone)]
pub struct FfStepTape {
    x: Vec<f64>,
    a1: Vec<f64>,
    a2: Vec<f64>,
    ls_raw: [f64; ACTION_DIM],
    mu: [f64; ACTION_DIM],
    value: f64,
}

pub struct FfChunkTape {
    steps: Vec<FfStepTape>,
}

impl FfPolicyNet {
    pub fn new(obs_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        FfPolicyNet {
            dense1: DenseLayer::new(obs_dim, FF_DENSE1, Activation::Tanh, &mut rng),
            dense2: DenseLayer::new(FF_DENSE1, FF_DENSE2, Activation::Tanh, &mut rng),
            head_mu: DenseLayer::new(FF_DENSE2, ACTION_DIM, Activation::Linear, &mut rng),
            head_log_sigma: DenseLayer::new(FF_DENSE2, ACTION_DIM, Activation::Linear, &mut rng),
            head_value: DenseLayer::new(FF_DENSE2, 1, Activation::Linear, &mut rng),
        }
    }

    fn step_core(&self, input: &PolicyInput) -> (HeadOut, FfStepTape) {
        let a1 = self.dense1.forward(&input.obs);
        let a2 = self.dense2.forward(&a1);
        let mu = self.head_mu.forward(&a2);
        let ls = self.head_log_sigma.forward(&a2);
        let v = self.head_value.forward(&a2);
        let out = head_out(&mu, &ls, &v);
        (out, FfStepTape { x: input.obs.clone(), a1, a2, ls_raw: [ls[0], ls[1]], mu: out.mu, value: out.value })
    }
}

impl PpoPolicy for FfPolicyNet {
    type Tape = FfChunkTape;

    fn obs_dim(&self) -> usize {
        self.dense1.in_dim
    }

    fn n_params(&self) -> usize {
        self.dense1.n_params()
            + self.dense2.n_params()
            + self.head_mu.n_params()
            + self.head_log_sigma.n_params()
            + self.head_value.n_params()
    }

    fn flat_params(&self) -> Vec<f64> {
        let blocks: [&[f64]; 10] = [
            &self.dense1.w, &self.dense1.b, &self.dense2.w, &self.dense2.b,
            &self.head_mu.w, &self.head_mu.b,
            &self.head_log_sigma.w, &self.head_log_sigma.b,
            &self.head_value.w, &self.head_value.b,
        ];
        let mut out = Vec::with_capacity(self.n_params());
        for b in blocks {
            out.extend_from_slice(b);
        }
        out
    }

    fn set_flat_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.n_params());
        let blocks: [&mut Vec<f64>; 10] = [
            &mut self.dense1.w, &mut self.dense1.b, &mut self.dense2.w, &mut self.dense2.b,
            &mut self.head_mu.w, &mut self.head_mu.b,
            &mut self.head_log_sigma.w, &mut self.head_log_sigma.b,
            &mut self.head_value.w, &mut self.head_value.b,
        ];
        let mut off = 0;
        for b in blocks {
            let n = b.len();
            b.copy_from_slice(&p[off..off + n]);
            off += n;
        }
    }

    fn initial_hidden(&self) -> HiddenState {
        HiddenState::empty()
    }

    fn step(&self, input: &PolicyInput, _hidden: &HiddenState) -> (HeadOut, HiddenState) {
        let (out, _) = self.step_core(input);
        (out, HiddenState::empty())
    }

    fn forward_chunk(&self, inputs: &[PolicyInput], _entry: &HiddenState) -> (Vec<HeadOut>, FfChunkTape) {
        let mut outs = Vec::with_capacity(inputs.len());
        let mut steps = Vec::with_capacity(inputs.len());
        for input in inputs {
            let (out, tape) = self.step_core(input);
            outs.push(out);
            steps.push(tape);
        }
        (outs, FfChunkTape { steps })
    }

    fn backward_chunk(&self, tape: &FfChunkTape, grads: &[HeadGrad], acc: &mut [f64]) {
        assert_eq!(tape.steps.len(), grads.len());
        let sizes = [
            self.dense1.w.len(), self.dense1.b.len(), self.dense2.w.len(), self.dense2.b.len(),
            self.head_mu.w.len(), self.head_mu.b.len(),
            self.head_log_sigma.w.len(), self.head_log_sigma.b.len(),
            self.head_value.w.len(), self.head_value.b.len(),
        ];
        let mut offs = [0usize; 10];
        let mut off = 0;
        for (k, s) in sizes.iter().enumerate() {
            offs[k] = off;
            off += s;
        }
        let mut g = vec![0.0; self.n_params()];
        for (t, hg) in tape.steps.iter().zip(grads) {
            let d_ls = mask_ls_grad(&t.ls_raw, &hg.d_log_sigma);
            let mut d_a2 = vec![0.0; self.dense2.out_dim];
            {
                let (muw, mub) = g[offs[4]..offs[5] + sizes[5]].split_at_mut(sizes[4]);
                self.head_mu.backward(&t.a2, &t.mu, &hg.d_mu, muw, mub, Some(&mut d_a2));
            }
            {
                let (lsw, lsb) = g[offs[6]..offs[7] + sizes[7]].split_at_mut(sizes[6]);
                self.head_log_sigma.backward(&t.a2, &t.ls_raw, &d_ls, lsw, lsb, Some(&mut d_a2));
            }
            {
                let (vw, vb) = g[offs[8]..offs[9] + sizes[9]].split_at_mut(sizes[8]);
                self.head_value.backward(&t.a2, &[t.value], &[hg.d_value], vw, vb, Some(&mut d_a2));
            }
            let mut d_a1 = vec![0.0; self.dense2.in_dim];
            {
                let (d2w, d2b) = g[offs[2]..offs[3] + sizes[3]].split_at_mut(sizes[2]);
                self.dense2.backward(&t.a1, &t.a2, &d_a2, d2w, d2b, Some(&mut d_a1));
            }
            {
                let (d1w, d1b) = g[offs[0]..offs[1] + sizes[1]].split_at_mut(sizes[0]);
                self.dense1.backward(&t.x, &t.a1, &d_a1, d1w, d1b, None);
            }
        }
        for (dst, src) in acc.iter_mut().zip(&g) {
            *dst += src;
        }
    }

    fn arch(&self) -> Vec<u32> {
        vec![
            self.dense1.in_dim as u32,
            self.dense1.out_dim as u32,
            self.dense2.out_dim as u32,
            ACTION_DIM as u32,
        ]
    }
}

// --- Gaussian policy helpers ---------------------------------------------------

/// Log density of a diagonal Gaussian, summed over the action dimensions.
pub fn gaussian_logprob(mu: &[f64; ACTION_DIM], sigma: &[f64; ACTION_DIM], a: &[f64; ACTION_DIM]) -> f64 {
    let mut lp = 0.0;
    for k in 0..ACTION_DIM {
        let z = (a[k] - mu[k]) / sigma[k];
        lp += -0.5 * z * z - sigma[k].ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
    }
    lp
}

/// Differential entropy of the diagonal Gaussian.
pub fn gaussian_entropy(sigma: &[f64; ACTION_DIM]) -> f64 {
    sigma.iter().map(|s| s.ln() + 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln()).sum()
}

#[derive(Debug, Clone, Copy)]
pub struct SampledAction {
    /// unclipped draw; what the log-probability refers to
    pub raw: [f64; ACTION_DIM],
    /// clipped command executed by the environment
    pub cmd: ActionCmd,
    pub logprob: f64,
}

/// Draw an action from N(mu, diag sigma^2); the log-probability is recorded
/// for the unclipped sample while the command is clipped to its bounds.
pub fn sample_action(mu: &[f64; ACTION_DIM], sigma: &[f64; ACTION_DIM], rng: &mut ChaCha20Rng) -> SampledAction {
    let mut raw = [0.0; ACTION_DIM];
    for k in 0..ACTION_DIM {
        raw[k] = Normal::new(mu[k], sigma[k]).expect("sigma must be positive").sample(rng);
    }
    SampledAction {
        raw,
        cmd: ActionCmd::clipped(raw[0], raw[1]),
        logprob: gaussian_logprob(mu, sigma, &raw),
    }
}
