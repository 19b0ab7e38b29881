//! PPO training loop shared by the recurrent and feedforward policies:
//! rollout collection with hidden-state bookkeeping, generalized advantage
//! estimation, the clipped surrogate plus value loss, whole-chunk sequence
//! mini-batching and periodic deterministic evaluation.

use crate::dynamics::ActionCmd;
use crate::env::{EnvConfig, EnvError, NavEnv, Outcome};
use crate::nn::Adam;
use crate::policy::{
    gaussian_entropy, gaussian_logprob, sample_action, HeadGrad, HiddenState, PolicyInput, PpoPolicy, ACTION_DIM,
};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct PpoHyper {
    pub clip: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    /// transitions gathered per update
    pub batch: usize,
    /// steps per mini-batch, assembled from whole chunks
    pub minibatch: usize,
    pub epochs: usize,
    /// cap on mini-batch updates per epoch
    pub sgd_steps: usize,
    pub lr: f64,
    pub value_coeff: f64,
    pub entropy_coeff: f64,
    /// evaluate every this many update batches
    pub eval_interval: usize,
    pub eval_episodes: usize,
    /// BPTT window; episodes are split into chunks of this length
    pub chunk_len: usize,
    /// stop training early once the evaluated success rate reaches this
    pub target_sr: Option<f64>,
}

impl Default for PpoHyper {
    fn default() -> Self {
        PpoHyper {
            clip: 0.2,
            gamma: 0.99,
            gae_lambda: 0.95,
            batch: 256,
            minibatch: 128,
            epochs: 4,
            sgd_steps: 30,
            lr: 1e-4,
            value_coeff: 0.5,
            entropy_coeff: 0.0,
            eval_interval: 5,
            eval_episodes: 100,
            chunk_len: 16,
            target_sr: None,
        }
    }
}

/// One stored step of experience. The action is the raw (unclipped) draw the
/// log-probability refers to; `prev_action` is the clipped command actually
/// executed on the previous step, as fed back into the network.
#[derive(Debug, Clone)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: [f64; ACTION_DIM],
    pub reward: f64,
    pub done: bool,
    pub value: f64,
    pub logprob: f64,
    /// hidden state entering the step
    pub hidden: HiddenState,
    pub prev_action: [f64; ACTION_DIM],
    pub prev_reward: f64,
}

#[derive(Debug, Clone)]
pub struct EpisodeRollout {
    pub transitions: Vec<Transition>,
    pub outcome: Outcome,
    pub total_reward: f64,
    pub seed: u64,
}

#[derive(Debug, Default)]
pub struct RolloutBuffer {
    pub episodes: Vec<EpisodeRollout>,
    pub total_steps: usize,
}

/// Backward-recursion GAE with reset across done flags.
/// `values` holds V(s_k) aligned with `rewards`; `last_value` bootstraps the
/// tail when the final transition is not terminal.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    last_value: f64,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    assert!(rewards.len() == values.len() && rewards.len() == dones.len(), "length mismatch");
    let k = rewards.len();
    let mut advantages = vec![0.0; k];
    let mut returns = vec![0.0; k];
    let mut carry = 0.0;
    for t in (0..k).rev() {
        let not_done = if dones[t] { 0.0 } else { 1.0 };
        let next_value = if dones[t] {
            0.0
        } else if t + 1 < k {
            values[t + 1]
        } else {
            last_value
        };
        let delta = rewards[t] + gamma * next_value - values[t];
        carry = delta + gamma * lambda * not_done * carry;
        advantages[t] = carry;
        returns[t] = carry + values[t];
    }
    (advantages, returns)
}

/// Run whole episodes until at least `hyper.batch` transitions are stored.
pub fn collect_rollout<P: PpoPolicy>(
    env: &mut NavEnv,
    net: &P,
    hyper: &PpoHyper,
    rng: &mut ChaCha20Rng,
) -> Result<RolloutBuffer, EnvError> {
    let diag = env.domain_diag();
    let mut buffer = RolloutBuffer::default();
    while buffer.total_steps < hyper.batch {
        let seed = rng.next_u64();
        let mut obs = env.reset(seed)?;
        let mut hidden = net.initial_hidden();
        let mut prev_action = [0.0; ACTION_DIM];
        let mut prev_reward = 0.0;
        let mut transitions = Vec::new();
        let mut total_reward = 0.0;
        let outcome = loop {
            let input = PolicyInput { obs: obs.to_network_input(diag), prev_action, prev_reward };
            let (out, next_hidden) = net.step(&input, &hidden);
            let sampled = sample_action(&out.mu, &out.sigma, rng);
            let result = env.step(sampled.cmd);
            transitions.push(Transition {
                obs: input.obs,
                action: sampled.raw,
                reward: result.reward,
                done: result.outcome.is_terminal(),
                value: out.value,
                logprob: sampled.logprob,
                hidden,
                prev_action,
                prev_reward,
            });
            total_reward += result.reward;
            prev_action = sampled.cmd.as_array();
            prev_reward = result.reward;
            hidden = next_hidden;
            obs = result.obs;
            if result.outcome.is_terminal() {
                break result.outcome;
            }
        };
        buffer.total_steps += transitions.len();
        buffer.episodes.push(EpisodeRollout { transitions, outcome, total_reward, seed });
    }
    Ok(buffer)
}

/// A contiguous in-episode slice ready for replay, with its entry hidden
/// state and per-step training targets.
#[derive(Debug, Clone)]
pub struct Chunk {
    pub inputs: Vec<PolicyInput>,
    pub actions: Vec<[f64; ACTION_DIM]>,
    pub old_logprobs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    pub entry: HiddenState,
}

impl Chunk {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// GAE per episode, batch-wide advantage normalization, then chunking.
pub fn build_chunks(buffer: &RolloutBuffer, hyper: &PpoHyper) -> Vec<Chunk> {
    let mut per_episode: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(buffer.episodes.len());
    let mut all_adv = Vec::with_capacity(buffer.total_steps);
    for ep in &buffer.episodes {
        let rewards: Vec<f64> = ep.transitions.iter().map(|t| t.reward).collect();
        let values: Vec<f64> = ep.transitions.iter().map(|t| t.value).collect();
        let dones: Vec<bool> = ep.transitions.iter().map(|t| t.done).collect();
        let (adv, ret) = compute_gae(&rewards, &values, &dones, 0.0, hyper.gamma, hyper.gae_lambda);
        all_adv.extend_from_slice(&adv);
        per_episode.push((adv, ret));
    }
    let n = all_adv.len().max(1) as f64;
    let mean = all_adv.iter().sum::<f64>() / n;
    let var = all_adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let std = var.sqrt().max(1e-8);

    let mut chunks = Vec::new();
    for (ep, (adv, ret)) in buffer.episodes.iter().zip(&per_episode) {
        let len = ep.transitions.len();
        let mut start = 0;
        while start < len {
            let end = (start + hyper.chunk_len).min(len);
            let slice = &ep.transitions[start..end];
            chunks.push(Chunk {
                inputs: slice
                    .iter()
                    .map(|t| PolicyInput { obs: t.obs.clone(), prev_action: t.prev_action, prev_reward: t.prev_reward })
                    .collect(),
                actions: slice.iter().map(|t| t.action).collect(),
                old_logprobs: slice.iter().map(|t| t.logprob).collect(),
                advantages: adv[start..end].iter().map(|a| (a - mean) / std).collect(),
                returns: ret[start..end].to_vec(),
                entry: slice[0].hidden.clone(),
            });
            start = end;
        }
    }
    chunks
}

/// Loss terms over one mini-batch; `total` is the minimized objective
/// -surrogate + value_coeff * value_loss - entropy_coeff * entropy.
#[derive(Debug, Clone, Copy, Default)]
pub struct PpoLossTerms {
    pub total: f64,
    pub surrogate: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub kl: f64,
    pub clip_fraction: f64,
    pub n_steps: usize,
}

/// Pure loss evaluation (used by the finite-difference oracle).
pub fn ppo_loss<P: PpoPolicy>(net: &P, chunks: &[&Chunk], hyper: &PpoHyper) -> PpoLossTerms {
    ppo_loss_inner(net, chunks, hyper, None)
}

/// Loss plus analytic gradients of the total objective.
pub fn ppo_loss_grads<P: PpoPolicy>(net: &P, chunks: &[&Chunk], hyper: &PpoHyper) -> (PpoLossTerms, Vec<f64>) {
    let mut grads = vec![0.0; net.n_params()];
    let terms = ppo_loss_inner(net, chunks, hyper, Some(&mut grads));
    (terms, grads)
}

fn ppo_loss_inner<P: PpoPolicy>(
    net: &P,
    chunks: &[&Chunk],
    hyper: &PpoHyper,
    mut grads: Option<&mut Vec<f64>>,
) -> PpoLossTerms {
    let n_steps: usize = chunks.iter().map(|c| c.len()).sum();
    let n = n_steps as f64;
    let mut surr_sum = 0.0;
    let mut vloss_sum = 0.0;
    let mut ent_sum = 0.0;
    let mut kl_sum = 0.0;
    let mut clipped_count = 0usize;

    for chunk in chunks {
        let (outs, tape) = net.forward_chunk(&chunk.inputs, &chunk.entry);
        let mut head_grads = Vec::with_capacity(chunk.len());
        for (t, out) in outs.iter().enumerate() {
            let action = &chunk.actions[t];
            let adv = chunk.advantages[t];
            let lp_new = gaussian_logprob(&out.mu, &out.sigma, action);
            let ratio = (lp_new - chunk.old_logprobs[t]).exp();
            let unclipped = ratio * adv;
            let clipped = ratio.clamp(1.0 - hyper.clip, 1.0 + hyper.clip) * adv;
            surr_sum += unclipped.min(clipped);
            if (ratio - 1.0).abs() > hyper.clip {
                clipped_count += 1;
            }
            let vdiff = out.value - chunk.returns[t];
            vloss_sum += vdiff * vdiff;
            ent_sum += gaussian_entropy(&out.sigma);
            kl_sum += chunk.old_logprobs[t] - lp_new;

            if grads.is_some() {
                // the min() gradient flows only through the active branch;
                // inside the trust region both branches coincide
                let d_lp = if unclipped <= clipped { -unclipped / n } else { 0.0 };
                let mut hg = HeadGrad { d_value: hyper.value_coeff * 2.0 * vdiff / n, ..Default::default() };
                for k in 0..ACTION_DIM {
                    let z = (action[k] - out.mu[k]) / out.sigma[k];
                    hg.d_mu[k] = d_lp * z / out.sigma[k];
                    hg.d_log_sigma[k] = d_lp * (z * z - 1.0) - hyper.entropy_coeff / n;
                }
                head_grads.push(hg);
            }
        }
        if let Some(acc) = grads.as_deref_mut() {
            net.backward_chunk(&tape, &head_grads, acc);
        }
    }

    let surrogate = surr_sum / n;
    let value_loss = vloss_sum / n;
    let entropy = ent_sum / n;
    PpoLossTerms {
        total: -surrogate + hyper.value_coeff * value_loss - hyper.entropy_coeff * entropy,
        surrogate,
        value_loss,
        entropy,
        kl: kl_sum / n,
        clip_fraction: clipped_count as f64 / n,
        n_steps,
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct UpdateStats {
    pub loss: PpoLossTerms,
    pub sgd_steps: usize,
    pub skipped_minibatches: usize,
}

/// One PPO update over a full rollout buffer: for each epoch, shuffle the
/// chunks, assemble mini-batches of whole chunks up to the mini-batch step
/// budget, and take an Adam step per mini-batch (capped at `sgd_steps`).
pub fn update<P: PpoPolicy>(
    net: &mut P,
    adam: &mut Adam,
    buffer: &RolloutBuffer,
    hyper: &PpoHyper,
    rng: &mut ChaCha20Rng,
) -> UpdateStats {
    let chunks = build_chunks(buffer, hyper);
    let mut stats = UpdateStats::default();
    let mut last_terms = PpoLossTerms::default();

    for _epoch in 0..hyper.epochs {
        let mut order: Vec<usize> = (0..chunks.len()).collect();
        // Fisher-Yates with the training stream keeps runs reproducible
        for i in (1..order.len()).rev() {
            let j = (rng.next_u64() % (i as u64 + 1)) as usize;
            order.swap(i, j);
        }
        let mut epoch_steps = 0usize;
        let mut cursor = 0usize;
        while cursor < order.len() && epoch_steps < hyper.sgd_steps {
            let mut mb: Vec<&Chunk> = Vec::new();
            let mut mb_len = 0usize;
            while cursor < order.len() && mb_len < hyper.minibatch {
                let c = &chunks[order[cursor]];
                mb.push(c);
                mb_len += c.len();
                cursor += 1;
            }
            let (terms, grads) = ppo_loss_grads(net, &mb, hyper);
            if !grads.iter().all(|g| g.is_finite()) || !terms.total.is_finite() {
                stats.skipped_minibatches += 1;
                continue;
            }
            let mut params = net.flat_params();
            adam.step(&mut params, &grads);
            net.set_flat_params(&params);
            epoch_steps += 1;
            stats.sgd_steps += 1;
            last_terms = terms;
        }
    }
    stats.loss = last_terms;
    stats
}

// --- deterministic evaluation ---------------------------------------------------

/// Network outputs driving one deterministic evaluation step.
#[derive(Debug, Clone, Copy)]
pub struct ActorOut {
    pub cmd: ActionCmd,
    pub mu: [f64; ACTION_DIM],
    pub sigma: [f64; ACTION_DIM],
    pub value: f64,
}

/// Anything that can drive episodes without exploration noise.
pub trait DeterministicActor {
    fn reset_episode(&mut self);
    fn act(&mut self, obs: &[f64], prev_action: [f64; ACTION_DIM], prev_reward: f64) -> ActorOut;
}

/// Greedy wrapper around a PPO policy: actions are the clipped means.
pub struct PolicyActor<'a, P: PpoPolicy> {
    net: &'a P,
    hidden: HiddenState,
}

impl<'a, P: PpoPolicy> PolicyActor<'a, P> {
    pub fn new(net: &'a P) -> Self {
        PolicyActor { net, hidden: net.initial_hidden() }
    }
}

impl<P: PpoPolicy> DeterministicActor for PolicyActor<'_, P> {
    fn reset_episode(&mut self) {
        self.hidden = self.net.initial_hidden();
    }

    fn act(&mut self, obs: &[f64], prev_action: [f64; ACTION_DIM], prev_reward: f64) -> ActorOut {
        let input = PolicyInput { obs: obs.to_vec(), prev_action, prev_reward };
        let (out, hidden) = self.net.step(&input, &self.hidden);
        self.hidden = hidden;
        ActorOut { cmd: ActionCmd::clipped(out.mu[0], out.mu[1]), mu: out.mu, sigma: out.sigma, value: out.value }
    }
}

/// Full per-step record of an evaluated episode, for trajectory export.
#[derive(Debug, Clone)]
pub struct StepRow {
    pub step: usize,
    pub t: f64,
    pub state: crate::dynamics::UavState,
    pub action: ActionCmd,
    pub reward: f64,
    pub breakdown: crate::env::RewardBreakdown,
    pub rays: [f64; crate::geometry::SENSOR_COUNT],
    pub frame: usize,
    pub mu: [f64; ACTION_DIM],
    pub sigma: [f64; ACTION_DIM],
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct EpisodeRecord {
    pub seed: u64,
    pub start: crate::vec2::Vec2,
    pub target: crate::vec2::Vec2,
    pub outcome: Outcome,
    pub total_reward: f64,
    pub steps: Vec<StepRow>,
}

#[derive(Debug, Clone, Default)]
pub struct EvalReport {
    pub episodes_run: usize,
    pub sr: f64,
    pub cr: f64,
    pub oob_rate: f64,
    pub timeout_rate: f64,
    pub mean_reward: f64,
    pub records: Vec<EpisodeRecord>,
}

/// Deterministic evaluation over `n_episodes` seeded episodes. With
/// `capture` the full per-step records are returned for export.
pub fn evaluate(
    env: &mut NavEnv,
    actor: &mut dyn DeterministicActor,
    n_episodes: usize,
    seed: u64,
    capture: bool,
) -> Result<EvalReport, EnvError> {
    let diag = env.domain_diag();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut report = EvalReport { episodes_run: n_episodes, ..Default::default() };
    let mut reward_sum = 0.0;
    for _ in 0..n_episodes {
        let ep_seed = rng.next_u64();
        let mut obs = env.reset(ep_seed)?;
        actor.reset_episode();
        let start = env.state().pos;
        let target = env.target();
        let mut prev_action = [0.0; ACTION_DIM];
        let mut prev_reward = 0.0;
        let mut total = 0.0;
        let mut steps = Vec::new();
        let outcome = loop {
            let out = actor.act(&obs.to_network_input(diag), prev_action, prev_reward);
            let r = env.step(out.cmd);
            total += r.reward;
            if capture {
                steps.push(StepRow {
                    step: env.steps(),
                    t: r.info.t,
                    state: r.info.state,
                    action: r.info.action,
                    reward: r.reward,
                    breakdown: r.info.breakdown,
                    rays: r.info.rays_raw,
                    frame: r.info.frame,
                    mu: out.mu,
                    sigma: out.sigma,
                    value: out.value,
                });
            }
            prev_action = r.info.action.as_array();
            prev_reward = r.reward;
            obs = r.obs;
            if r.outcome.is_terminal() {
                break r.outcome;
            }
        };
        reward_sum += total;
        match outcome {
            Outcome::TargetReached => report.sr += 1.0,
            Outcome::CrashedObstacle => report.cr += 1.0,
            Outcome::OutOfBounds => report.oob_rate += 1.0,
            Outcome::MaxSteps => report.timeout_rate += 1.0,
            Outcome::Running => unreachable!(),
        }
        if capture {
            report.records.push(EpisodeRecord { seed: ep_seed, start, target, outcome, total_reward: total, steps });
        }
    }
    let n = n_episodes.max(1) as f64;
    report.sr /= n;
    report.cr /= n;
    report.oob_rate /= n;
    report.timeout_rate /= n;
    report.mean_reward = reward_sum / n;
    Ok(report)
}

// --- training loop ---------------------------------------------------------------

#[derive(Debug, Clone, serde::Serialize)]
pub struct EpisodeLogRow {
    pub episode: usize,
    pub reward: f64,
    pub length: usize,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct EvalLogRow {
    pub batch: usize,
    pub sr: f64,
    pub cr: f64,
    pub mean_reward: f64,
}

pub struct TrainResult<P> {
    pub net: P,
    pub adam: Adam,
    pub reward_history: Vec<EpisodeLogRow>,
    pub eval_history: Vec<EvalLogRow>,
    pub best_params: Vec<f64>,
    pub best_sr: f64,
}

/// Alternate rollout collection and updates until `total_episodes` episodes
/// have completed, evaluating deterministically every `eval_interval`
/// batches and keeping the best-SR parameter snapshot.
pub fn train_ppo<P: PpoPolicy>(
    mut net: P,
    env_cfg: EnvConfig,
    hyper: &PpoHyper,
    total_episodes: usize,
    seed: u64,
) -> Result<TrainResult<P>, EnvError> {
    let mut env = NavEnv::new(env_cfg)?;
    let mut adam = Adam::new(net.n_params(), hyper.lr);
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x524f_4c4c); // rollout stream
    let eval_seed = seed ^ 0x4556_414c; // same eval episodes every round
    let mut reward_history = Vec::new();
    let mut eval_history = Vec::new();
    let mut best_params = net.flat_params();
    let mut best_sr = -1.0;
    let mut episodes_done = 0usize;
    let mut batch_idx = 0usize;

    while episodes_done < total_episodes {
        let buffer = collect_rollout(&mut env, &net, hyper, &mut rng)?;
        for ep in &buffer.episodes {
            episodes_done += 1;
            reward_history.push(EpisodeLogRow {
                episode: episodes_done,
                reward: ep.total_reward,
                length: ep.transitions.len(),
                outcome: ep.outcome,
            });
        }
        update(&mut net, &mut adam, &buffer, hyper, &mut rng);
        batch_idx += 1;

        if batch_idx % hyper.eval_interval == 0 {
            let mut actor = PolicyActor::new(&net);
            let report = evaluate(&mut env, &mut actor, hyper.eval_episodes, eval_seed, false)?;
            eval_history.push(EvalLogRow {
                batch: batch_idx,
                sr: report.sr,
                cr: report.cr,
                mean_reward: report.mean_reward,
            });
            if report.sr > best_sr {
                best_sr = report.sr;
                best_params = net.flat_params();
            }
            if hyper.target_sr.is_some_and(|t| report.sr >= t) {
                break;
            }
        }
    }
    if best_sr < 0.0 {
        best_sr = 0.0;
    }
    Ok(TrainResult { net, adam, reward_history, eval_history, best_params, best_sr })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvConfig, RewardConfig};
    use crate::flow::{Frame, FlowSnapshotSet};
    use crate::geometry::{Rect, World};
    use crate::policy::{FfPolicyNet, PolicyNet};
    use rand::Rng;
    use std::sync::Arc;

    fn flat_flow(speed: f64) -> Arc<FlowSnapshotSet> {
        let (nx, ny) = (7, 5);
        let n = nx * ny;
        Arc::new(FlowSnapshotSet {
            nx,
            ny,
            x_min: -2.0,
            x_max: 4.0,
            y_min: 0.0,
            y_max: 3.0,
            dt_snap: 0.0875,
            frames: vec![Frame { u: vec![speed; n], v: vec![0.0; n] }; 2],
        })
    }

    fn smoke_cfg() -> EnvConfig {
        EnvConfig {
            world: World::new(Rect::new(-2.0, 4.0, 0.0, 3.0), vec![], 2.0, 0.5),
            flow: flat_flow(0.5),
            max_steps: 80,
            target_radius: 0.15,
            start_region: Rect::new_region(-1.0, -1.0, 1.5, 1.5),
            target_region: Rect::new_region(3.0, 3.0, 1.5, 1.5),
            reward: RewardConfig::default(),
            dt: 0.0875,
        }
    }

    #[test]
    fn gae_lambda_zero_reduces_to_td_residual() {
        let rewards = [1.0, -0.5, 2.0, 0.3];
        let values = [0.4, 0.2, -0.1, 0.6];
        let dones = [false, false, false, true];
        let (adv, _) = compute_gae(&rewards, &values, &dones, 0.0, 0.9, 0.0);
        for t in 0..4 {
            let next = if dones[t] { 0.0 } else { values[t + 1] };
            let delta = rewards[t] + 0.9 * next - values[t];
            assert!((adv[t] - delta).abs() < 1e-15);
        }
    }

    #[test]
    fn gae_gamma_lambda_one_suffix_sums() {
        let rewards = [1.0, 2.0, 3.0, 4.0];
        let values = [0.0; 4];
        let dones = [false, false, false, true];
        let (adv, ret) = compute_gae(&rewards, &values, &dones, 0.0, 1.0, 1.0);
        assert_eq!(adv, vec![10.0, 9.0, 7.0, 4.0]);
        assert_eq!(ret, adv);
    }

    #[test]
    fn gae_matches_quadratic_oracle() {
        // definitional double sum, resetting at episode boundaries
        fn oracle(r: &[f64], v: &[f64], d: &[bool], last: f64, gamma: f64, lambda: f64) -> Vec<f64> {
            let k = r.len();
            let delta = |j: usize| {
                let next = if d[j] {
                    0.0
                } else if j + 1 < k {
                    v[j + 1]
                } else {
                    last
                };
                r[j] + gamma * next - v[j]
            };
            (0..k)
                .map(|t| {
                    let mut acc = delta(t);
                    let mut w = 1.0;
                    for j in t + 1..k {
                        if d[j - 1] {
                            break;
                        }
                        w *= gamma * lambda;
                        acc += w * delta(j);
                    }
                    acc
                })
                .collect()
        }
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for _ in 0..100 {
            let k = rng.random_range(3..25);
            let rewards: Vec<f64> = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
            let values: Vec<f64> = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
            let dones: Vec<bool> = (0..k).map(|_| rng.random_range(0.0..1.0) < 0.2).collect();
            let last = rng.random_range(-1.0..1.0);
            let gamma = rng.random_range(0.8..1.0);
            let lambda = rng.random_range(0.0..1.0);
            let (adv, ret) = compute_gae(&rewards, &values, &dones, last, gamma, lambda);
            let expect = oracle(&rewards, &values, &dones, last, gamma, lambda);
            for t in 0..k {
                assert!((adv[t] - expect[t]).abs() < 1e-10);
                assert!((ret[t] - (expect[t] + values[t])).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rollout_is_deterministic_and_bounded() {
        let net = PolicyNet::new(crate::env::OBS_DIM, 3);
        let hyper = PpoHyper { batch: 64, ..Default::default() };
        let collect = || {
            let mut env = NavEnv::new(smoke_cfg()).unwrap();
            let mut rng = ChaCha20Rng::seed_from_u64(9);
            collect_rollout(&mut env, &net, &hyper, &mut rng).unwrap()
        };
        let a = collect();
        let b = collect();
        assert_eq!(a.total_steps, b.total_steps);
        assert!(a.total_steps >= 64);
        for (ea, eb) in a.episodes.iter().zip(&b.episodes) {
            assert_eq!(ea.seed, eb.seed);
            assert!(ea.transitions.len() <= 80);
            assert_eq!(ea.total_reward.to_bits(), eb.total_reward.to_bits());
            for (ta, tb) in ea.transitions.iter().zip(&eb.transitions) {
                assert_eq!(ta.action, tb.action);
                assert_eq!(ta.logprob.to_bits(), tb.logprob.to_bits());
            }
        }
    }

    #[test]
    fn replay_reproduces_stored_logprobs_and_values() {
        let net = PolicyNet::new(crate::env::OBS_DIM, 4);
        let hyper = PpoHyper { batch: 64, ..Default::default() };
        let mut env = NavEnv::new(smoke_cfg()).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(10);
        let buffer = collect_rollout(&mut env, &net, &hyper, &mut rng).unwrap();
        let chunks = build_chunks(&buffer, &hyper);

        let mut idx = 0;
        let flat: Vec<&Transition> = buffer.episodes.iter().flat_map(|e| &e.transitions).collect();
        for chunk in &chunks {
            let (outs, _) = net.forward_chunk(&chunk.inputs, &chunk.entry);
            for (t, out) in outs.iter().enumerate() {
                let tr = flat[idx];
                let lp = gaussian_logprob(&out.mu, &out.sigma, &chunk.actions[t]);
                assert_eq!(lp.to_bits(), tr.logprob.to_bits(), "logprob replay drifted");
                assert_eq!(out.value.to_bits(), tr.value.to_bits(), "value replay drifted");
                idx += 1;
            }
        }
        assert_eq!(idx, buffer.total_steps);
    }

    #[test]
    fn zero_advantage_exact_value_fit_gives_zero_gradient() {
        let net = PolicyNet::new(4, 6);
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let inputs: Vec<PolicyInput> = (0..6)
            .map(|_| PolicyInput {
                obs: (0..4).map(|_| rng.random_range(-1.0..1.0)).collect(),
                prev_action: [0.0; 2],
                prev_reward: 0.0,
            })
            .collect();
        let (outs, _) = net.forward_chunk(&inputs, &net.initial_hidden());
        let chunk = Chunk {
            actions: outs.iter().map(|o| o.mu).collect(),
            old_logprobs: outs.iter().map(|o| gaussian_logprob(&o.mu, &o.sigma, &o.mu)).collect(),
            advantages: vec![0.0; 6],
            returns: outs.iter().map(|o| o.value).collect(),
            entry: net.initial_hidden(),
            inputs,
        };
        let hyper = PpoHyper { entropy_coeff: 0.0, ..Default::default() };
        let (terms, grads) = ppo_loss_grads(&net, &[&chunk], &hyper);
        assert!(terms.value_loss.abs() < 1e-30);
        assert!(grads.iter().all(|g| g.abs() < 1e-14));
    }

    #[test]
    fn clipped_sample_kills_gradient() {
        let net = PolicyNet::new(4, 7);
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let input = PolicyInput {
            obs: (0..4).map(|_| rng.random_range(-1.0..1.0)).collect(),
            prev_action: [0.0; 2],
            prev_reward: 0.0,
        };
        let (outs, _) = net.forward_chunk(std::slice::from_ref(&input), &net.initial_hidden());
        let out = outs[0];
        let action = out.mu;
        let lp = gaussian_logprob(&out.mu, &out.sigma, &action);
        let hyper = PpoHyper::default();
        // old logprob far below new: ratio = 1 + 2*eps, advantage positive
        let chunk = Chunk {
            inputs: vec![input],
            actions: vec![action],
            old_logprobs: vec![lp - (1.0 + 2.0 * hyper.clip).ln()],
            advantages: vec![1.0],
            returns: vec![out.value],
            entry: net.initial_hidden(),
        };
        let no_value = PpoHyper { value_coeff: 0.0, entropy_coeff: 0.0, ..hyper };
        let (terms, grads) = ppo_loss_grads(&net, &[&chunk], &no_value);
        assert!(terms.clip_fraction == 1.0);
        assert!(grads.iter().all(|g| g.abs() < 1e-18), "clip must zero the policy gradient");
    }

    #[test]
    fn update_direction_matches_vanilla_policy_gradient() {
        // with a huge clip range and identical old/new policies, the PPO
        // gradient must equal the plain policy-gradient estimator
        let net = PolicyNet::new(4, 8);
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        let mut inputs = Vec::new();
        let mut actions = Vec::new();
        let mut advs = Vec::new();
        for _ in 0..12 {
            inputs.push(PolicyInput {
                obs: (0..4).map(|_| rng.random_range(-1.0..1.0)).collect(),
                prev_action: [rng.random_range(-1.0..1.0), rng.random_range(-0.5..0.5)],
                prev_reward: rng.random_range(-1.0..1.0),
            });
            advs.push(rng.random_range(-1.0..1.0));
        }
        let (outs, tape) = net.forward_chunk(&inputs, &net.initial_hidden());
        for o in &outs {
            let s = sample_action(&o.mu, &o.sigma, &mut rng);
            actions.push(s.raw);
        }
        let old_logprobs: Vec<f64> = outs
            .iter()
            .zip(&actions)
            .map(|(o, a)| gaussian_logprob(&o.mu, &o.sigma, a))
            .collect();
        let chunk = Chunk {
            inputs,
            actions: actions.clone(),
            old_logprobs,
            advantages: advs.clone(),
            returns: outs.iter().map(|o| o.value).collect(),
            entry: net.initial_hidden(),
        };
        let hyper = PpoHyper { clip: 1e9, value_coeff: 0.0, entropy_coeff: 0.0, epochs: 1, ..Default::default() };
        let (_, ppo_grads) = ppo_loss_grads(&net, &[&chunk], &hyper);

        // independent estimator: -(1/N) sum A_k grad logprob_k via head grads
        let n = actions.len() as f64;
        let mut pg = vec![0.0; net.n_params()];
        let mut head_grads = Vec::new();
        for (t, o) in outs.iter().enumerate() {
            let mut hg = HeadGrad::default();
            for k in 0..ACTION_DIM {
                let z = (actions[t][k] - o.mu[k]) / o.sigma[k];
                hg.d_mu[k] = -advs[t] * z / o.sigma[k] / n;
                hg.d_log_sigma[k] = -advs[t] * (z * z - 1.0) / n;
            }
            head_grads.push(hg);
        }
        net.backward_chunk(&tape, &head_grads, &mut pg);

        let dot: f64 = ppo_grads.iter().zip(&pg).map(|(a, b)| a * b).sum();
        let na: f64 = ppo_grads.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nb: f64 = pg.iter().map(|b| b * b).sum::<f64>().sqrt();
        assert!(dot / (na * nb) > 0.999, "cosine {}", dot / (na * nb));
    }

    #[test]
    fn bandit_mean_moves_toward_advantaged_action() {
        let mut net = PolicyNet::new(2, 9);
        let obs = vec![0.3, -0.2];
        let probe = PolicyInput { obs: obs.clone(), prev_action: [0.0; 2], prev_reward: 0.0 };
        let (before, _) = net.step(&probe, &net.initial_hidden());

        let hyper = PpoHyper { value_coeff: 0.0, entropy_coeff: 0.0, ..Default::default() };
        let mut adam = Adam::new(net.n_params(), 1e-2);
        for _ in 0..30 {
            let (outs, _) = net.forward_chunk(std::slice::from_ref(&probe), &net.initial_hidden());
            let o = outs[0];
            // one-step bandit: the advantaged sample sits above the mean on dim 0
            let up = [o.mu[0] + 0.5, o.mu[1]];
            let down = [o.mu[0] - 0.5, o.mu[1]];
            let chunks = [
                Chunk {
                    inputs: vec![probe.clone()],
                    actions: vec![up],
                    old_logprobs: vec![gaussian_logprob(&o.mu, &o.sigma, &up)],
                    advantages: vec![1.0],
                    returns: vec![0.0],
                    entry: net.initial_hidden(),
                },
                Chunk {
                    inputs: vec![probe.clone()],
                    actions: vec![down],
                    old_logprobs: vec![gaussian_logprob(&o.mu, &o.sigma, &down)],
                    advantages: vec![-1.0],
                    returns: vec![0.0],
                    entry: net.initial_hidden(),
                },
            ];
            let refs: Vec<&Chunk> = chunks.iter().collect();
            let (_, grads) = ppo_loss_grads(&net, &refs, &hyper);
            let mut params = net.flat_params();
            adam.step(&mut params, &grads);
            net.set_flat_params(&params);
        }
        let (after, _) = net.step(&probe, &net.initial_hidden());
        assert!(after.mu[0] > before.mu[0] + 1e-3, "mu0 {} -> {}", before.mu[0], after.mu[0]);
    }

    #[test]
    fn update_runs_and_reports_sane_stats() {
        let net = FfPolicyNet::new(crate::env::OBS_DIM, 14);
        let hyper = PpoHyper { batch: 128, minibatch: 64, ..Default::default() };
        let mut env = NavEnv::new(smoke_cfg()).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(15);
        let buffer = collect_rollout(&mut env, &net, &hyper, &mut rng).unwrap();
        let mut net = net;
        let mut adam = Adam::new(net.n_params(), hyper.lr);
        let stats = update(&mut net, &mut adam, &buffer, &hyper, &mut rng);
        assert!(stats.sgd_steps > 0);
        assert_eq!(stats.skipped_minibatches, 0);
        assert!((0.0..=1.0).contains(&stats.loss.clip_fraction));
        assert!(stats.loss.total.is_finite());
    }

    #[test]
    fn advantage_normalization_is_batchwide() {
        let net = PolicyNet::new(crate::env::OBS_DIM, 16);
        let hyper = PpoHyper { batch: 96, ..Default::default() };
        let mut env = NavEnv::new(smoke_cfg()).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        let buffer = collect_rollout(&mut env, &net, &hyper, &mut rng).unwrap();
        let chunks = build_chunks(&buffer, &hyper);
        let all: Vec<f64> = chunks.iter().flat_map(|c| c.advantages.iter().cloned()).collect();
        let n = all.len() as f64;
        let mean = all.iter().sum::<f64>() / n;
        let var = all.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
        assert!(mean.abs() <= 1e-9);
        assert!((var.sqrt() - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn train_zero_episodes_is_a_no_op() {
        let net = PolicyNet::new(crate::env::OBS_DIM, 18);
        let before = net.flat_params();
        let result = train_ppo(net, smoke_cfg(), &PpoHyper::default(), 0, 7).unwrap();
        assert!(result.reward_history.is_empty());
        assert!(result.eval_history.is_empty());
        assert_eq!(result.net.flat_params(), before);
    }

    #[test]
    fn eval_rates_partition_unity() {
        let net = PolicyNet::new(crate::env::OBS_DIM, 19);
        let mut env = NavEnv::new(smoke_cfg()).unwrap();
        let mut actor = PolicyActor::new(&net);
        let report = evaluate(&mut env, &mut actor, 16, 99, true).unwrap();
        let total = report.sr + report.cr + report.oob_rate + report.timeout_rate;
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(report.records.len(), 16);
        for rec in &report.records {
            let sum: f64 = rec.steps.iter().map(|s| s.reward).sum();
            assert!((sum - rec.total_reward).abs() < 1e-12);
        }
    }

    #[test]
    fn forced_crash_policy_scores_cr_one() {
        // a crash-prone layout: start facing obstacle 1, full throttle ahead
        let mut cfg = smoke_cfg();
        cfg.world = World::reference();
        cfg.flow = flat_flow(1.0);
        cfg.start_region = Rect::new_region(-0.8, -0.8, 0.5, 0.5);
        cfg.target_region = Rect::new_region(3.5, 3.5, 0.5, 0.5);
        struct Ram;
        impl DeterministicActor for Ram {
            fn reset_episode(&mut self) {}
            fn act(&mut self, _obs: &[f64], _pa: [f64; 2], _pr: f64) -> ActorOut {
                ActorOut { cmd: ActionCmd { lin_acc: 3.0, ang_acc: 0.0 }, mu: [3.0, 0.0], sigma: [0.0; 2], value: 0.0 }
            }
        }
        let mut env = NavEnv::new(cfg).unwrap();
        let report = evaluate(&mut env, &mut Ram, 8, 1, false).unwrap();
        assert_eq!(report.cr, 1.0);
    }
}
