//! Twin-delayed DDPG baseline: deterministic actor, twin critics with
//! clipped double-Q targets, target-policy smoothing, delayed actor updates
//! and polyak-averaged target networks over a uniform replay buffer.
//!
//! Actions are handled in normalized [-1, 1] units internally and scaled to
//! the command bounds at the environment interface.

use crate::dynamics::{ActionCmd, ANG_ACC_BOUND, LIN_ACC_BOUND};
use crate::env::{EnvConfig, EnvError, NavEnv};
use crate::nn::{Activation, Adam, Mlp};
use crate::policy::ACTION_DIM;
use crate::ppo::{evaluate, ActorOut, DeterministicActor, EpisodeLogRow, EvalLogRow};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

const ACTOR_HIDDEN: [usize; 4] = [256, 128, 64, 32];

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Td3Hyper {
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub gamma: f64,
    /// polyak factor: theta' <- tau*theta + (1-tau)*theta'
    pub tau: f64,
    /// critic updates per actor/target update
    pub policy_delay: usize,
    /// target policy smoothing noise (normalized action units)
    pub target_noise: f64,
    pub noise_clip: f64,
    /// exploration noise during rollout (normalized action units)
    pub explore_noise: f64,
    pub buffer_capacity: usize,
    pub batch: usize,
    /// uniform-random action steps before learning starts
    pub warmup_steps: usize,
    /// evaluate every this many episodes
    pub eval_interval_episodes: usize,
    pub eval_episodes: usize,
    pub target_sr: Option<f64>,
}

impl Default for Td3Hyper {
    fn default() -> Self {
        Td3Hyper {
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            gamma: 0.99,
            tau: 0.005,
            policy_delay: 2,
            target_noise: 0.2,
            noise_clip: 0.5,
            explore_noise: 0.1,
            buffer_capacity: 100_000,
            batch: 256,
            warmup_steps: 1000,
            eval_interval_episodes: 50,
            eval_episodes: 100,
            target_sr: None,
        }
    }
}

pub fn scale_action(a_norm: [f64; ACTION_DIM]) -> ActionCmd {
    ActionCmd::clipped(a_norm[0] * LIN_ACC_BOUND, a_norm[1] * ANG_ACC_BOUND)
}

/// Actor plus twin critics and their target copies.
#[derive(Debug, Clone)]
pub struct Td3Nets {
    pub actor: Mlp,
    pub critic1: Mlp,
    pub critic2: Mlp,
    pub t_actor: Mlp,
    pub t_critic1: Mlp,
    pub t_critic2: Mlp,
}

impl Td3Nets {
    pub fn new(obs_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut actor_dims = vec![obs_dim];
        actor_dims.extend_from_slice(&ACTOR_HIDDEN);
        actor_dims.push(ACTION_DIM);
        let mut critic_dims = vec![obs_dim + ACTION_DIM];
        critic_dims.extend_from_slice(&ACTOR_HIDDEN);
        critic_dims.push(1);

        let actor = Mlp::new(&actor_dims, Activation::Relu, Activation::Tanh, &mut rng);
        // twin critics draw independent initializations from the stream
        let critic1 = Mlp::new(&critic_dims, Activation::Relu, Activation::Linear, &mut rng);
        let critic2 = Mlp::new(&critic_dims, Activation::Relu, Activation::Linear, &mut rng);
        Td3Nets {
            t_actor: actor.clone(),
            t_critic1: critic1.clone(),
            t_critic2: critic2.clone(),
            actor,
            critic1,
            critic2,
        }
    }

    pub fn act_norm(&self, obs: &[f64]) -> [f64; ACTION_DIM] {
        let out = self.actor.forward(obs);
        [out[0], out[1]]
    }
}

/// theta' <- tau*theta + (1-tau)*theta', elementwise.
pub fn polyak_update(target: &mut Mlp, main: &Mlp, tau: f64) {
    let mut tp = target.flat_params();
    let mp = main.flat_params();
    for (t, m) in tp.iter_mut().zip(&mp) {
        *t = tau * m + (1.0 - tau) * *t;
    }
    target.set_flat_params(&tp);
}

/// Uniform-sampling ring buffer of off-policy transitions. `done` marks
/// absorbing terminals only; episode-cap truncations bootstrap normally.
pub struct ReplayBuffer {
    pub obs: Vec<Vec<f64>>,
    pub action: Vec<[f64; ACTION_DIM]>,
    pub reward: Vec<f64>,
    pub next_obs: Vec<Vec<f64>>,
    pub done: Vec<bool>,
    capacity: usize,
    head: usize,
    len: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        ReplayBuffer {
            obs: vec![Vec::new(); capacity],
            action: vec![[0.0; ACTION_DIM]; capacity],
            reward: vec![0.0; capacity],
            next_obs: vec![Vec::new(); capacity],
            done: vec![false; capacity],
            capacity,
            head: 0,
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, obs: Vec<f64>, action: [f64; ACTION_DIM], reward: f64, next_obs: Vec<f64>, done: bool) {
        self.obs[self.head] = obs;
        self.action[self.head] = action;
        self.reward[self.head] = reward;
        self.next_obs[self.head] = next_obs;
        self.done[self.head] = done;
        self.head = (self.head + 1) % self.capacity;
        self.len = (self.len + 1).min(self.capacity);
    }

    pub fn sample_indices(&self, batch: usize, rng: &mut ChaCha20Rng) -> Vec<usize> {
        (0..batch).map(|_| rng.random_range(0..self.len)).collect()
    }
}

fn critic_input(obs: &[f64], action: &[f64; ACTION_DIM]) -> Vec<f64> {
    let mut v = Vec::with_capacity(obs.len() + ACTION_DIM);
    v.extend_from_slice(obs);
    v.extend_from_slice(action);
    v
}

/// Clipped double-Q regression targets y = r + gamma*(1-done)*min(Q'1, Q'2)
/// at the smoothed target action.
pub fn td3_targets(
    nets: &Td3Nets,
    buffer: &ReplayBuffer,
    idx: &[usize],
    hyper: &Td3Hyper,
    rng: &mut ChaCha20Rng,
) -> Vec<f64> {
    let noise = Normal::new(0.0, hyper.target_noise).expect("target_noise must be non-negative");
    idx.iter()
        .map(|&i| {
            let mut a_next = nets.t_actor.forward(&buffer.next_obs[i]);
            for a in a_next.iter_mut() {
                let eps = noise.sample(rng).clamp(-hyper.noise_clip, hyper.noise_clip);
                *a = (*a + eps).clamp(-1.0, 1.0);
            }
            let input = critic_input(&buffer.next_obs[i], &[a_next[0], a_next[1]]);
            let q1 = nets.t_critic1.forward(&input)[0];
            let q2 = nets.t_critic2.forward(&input)[0];
            let not_done = if buffer.done[i] { 0.0 } else { 1.0 };
            buffer.reward[i] + hyper.gamma * not_done * q1.min(q2)
        })
        .collect()
}

/// One Adam step of MSE regression of a critic onto fixed targets; returns
/// the pre-step mean squared TD error.
pub fn critic_regression_step(critic: &mut Mlp, adam: &mut Adam, inputs: &[Vec<f64>], targets: &[f64]) -> f64 {
    let n = inputs.len() as f64;
    let mut grads = vec![0.0; critic.n_params()];
    let mut mse = 0.0;
    for (x, y) in inputs.iter().zip(targets) {
        let tape = critic.forward_tape(x);
        let q = tape.activations.last().unwrap()[0];
        let diff = q - y;
        mse += diff * diff;
        critic.backward(&tape, &[2.0 * diff / n], &mut grads);
    }
    let mut params = critic.flat_params();
    adam.step(&mut params, &grads);
    critic.set_flat_params(&params);
    mse / n
}

/// Delayed actor step: ascend Q1(s, pi(s)) through the frozen critic.
fn actor_step(nets: &mut Td3Nets, adam: &mut Adam, buffer: &ReplayBuffer, idx: &[usize]) {
    let n = idx.len() as f64;
    let mut grads = vec![0.0; nets.actor.n_params()];
    let mut critic_scratch = vec![0.0; nets.critic1.n_params()];
    for &i in idx {
        let obs = &buffer.obs[i];
        let actor_tape = nets.actor.forward_tape(obs);
        let a = actor_tape.activations.last().unwrap().clone();
        let critic_tape = nets.critic1.forward_tape(&critic_input(obs, &[a[0], a[1]]));
        critic_scratch.iter_mut().for_each(|g| *g = 0.0);
        let d_input = nets.critic1.backward(&critic_tape, &[-1.0 / n], &mut critic_scratch);
        let d_action = &d_input[obs.len()..];
        nets.actor.backward(&actor_tape, d_action, &mut grads);
    }
    let mut params = nets.actor.flat_params();
    adam.step(&mut params, &grads);
    nets.actor.set_flat_params(&params);
}

pub struct Td3TrainResult {
    pub nets: Td3Nets,
    pub reward_history: Vec<EpisodeLogRow>,
    pub eval_history: Vec<EvalLogRow>,
    pub best_actor_params: Vec<f64>,
    pub best_sr: f64,
    pub env_steps: usize,
}

struct Td3EvalActor<'a> {
    actor: &'a Mlp,
}

impl DeterministicActor for Td3EvalActor<'_> {
    fn reset_episode(&mut self) {}

    fn act(&mut self, obs: &[f64], _prev_action: [f64; ACTION_DIM], _prev_reward: f64) -> ActorOut {
        let out = self.actor.forward(obs);
        let cmd = scale_action([out[0], out[1]]);
        ActorOut { cmd, mu: cmd.as_array(), sigma: [0.0; ACTION_DIM], value: 0.0 }
    }
}

/// Off-policy training: one critic update per environment step once the
/// warmup is over, actor and targets every `policy_delay` critic updates.
pub fn td3_train(
    env_cfg: EnvConfig,
    hyper: &Td3Hyper,
    total_episodes: usize,
    seed: u64,
) -> Result<Td3TrainResult, EnvError> {
    let mut env = NavEnv::new(env_cfg)?;
    let diag = env.domain_diag();
    let mut nets = Td3Nets::new(crate::env::OBS_DIM, seed ^ 0x4e45_5453);
    let mut buffer = ReplayBuffer::new(hyper.buffer_capacity);
    let mut adam_actor = Adam::new(nets.actor.n_params(), hyper.actor_lr);
    let mut adam_c1 = Adam::new(nets.critic1.n_params(), hyper.critic_lr);
    let mut adam_c2 = Adam::new(nets.critic2.n_params(), hyper.critic_lr);
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x524f_4c4c);
    let eval_seed = seed ^ 0x4556_414c;
    let explore = Normal::new(0.0, hyper.explore_noise).expect("explore_noise must be non-negative");

    let mut reward_history = Vec::new();
    let mut eval_history = Vec::new();
    let mut best_actor_params = nets.actor.flat_params();
    let mut best_sr = -1.0;
    let mut env_steps = 0usize;
    let mut critic_updates = 0usize;

    for episode in 1..=total_episodes {
        let ep_seed = rng.next_u64();
        let mut obs_vec = env.reset(ep_seed)?.to_network_input(diag);
        let mut total_reward = 0.0;
        let mut length = 0usize;
        let outcome = loop {
            let a_norm = if env_steps < hyper.warmup_steps {
                [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]
            } else {
                let mut a = nets.act_norm(&obs_vec);
                for v in a.iter_mut() {
                    *v = (*v + explore.sample(&mut rng)).clamp(-1.0, 1.0);
                }
                a
            };
            let result = env.step(scale_action(a_norm));
            let next_obs_vec = result.obs.to_network_input(diag);
            // the episode cap is a truncation: bootstrap through it
            let absorbing = result.outcome.is_terminal() && !result.outcome.is_truncation();
            buffer.push(obs_vec.clone(), a_norm, result.reward, next_obs_vec.clone(), absorbing);
            total_reward += result.reward;
            length += 1;
            env_steps += 1;
            obs_vec = next_obs_vec;

            if env_steps >= hyper.warmup_steps && buffer.len() >= hyper.batch {
                let idx = buffer.sample_indices(hyper.batch, &mut rng);
                let targets = td3_targets(&nets, &buffer, &idx, hyper, &mut rng);
                let inputs: Vec<Vec<f64>> =
                    idx.iter().map(|&i| critic_input(&buffer.obs[i], &buffer.action[i])).collect();
                let mse1 = critic_regression_step(&mut nets.critic1, &mut adam_c1, &inputs, &targets);
                let mse2 = critic_regression_step(&mut nets.critic2, &mut adam_c2, &inputs, &targets);
                if !(mse1.is_finite() && mse2.is_finite()) {
                    panic!("non-finite TD3 critic loss (mse1={mse1}, mse2={mse2})");
                }
                critic_updates += 1;
                if critic_updates % hyper.policy_delay == 0 {
                    actor_step(&mut nets, &mut adam_actor, &buffer, &idx);
                    polyak_update(&mut nets.t_actor, &nets.actor, hyper.tau);
                    polyak_update(&mut nets.t_critic1, &nets.critic1, hyper.tau);
                    polyak_update(&mut nets.t_critic2, &nets.critic2, hyper.tau);
                }
            }
            if result.outcome.is_terminal() {
                break result.outcome;
            }
        };
        reward_history.push(EpisodeLogRow { episode, reward: total_reward, length, outcome });
        let _ = outcome;

        if episode % hyper.eval_interval_episodes == 0 {
            let mut actor = Td3EvalActor { actor: &nets.actor };
            let report = evaluate(&mut env, &mut actor, hyper.eval_episodes, eval_seed, false)?;
            eval_history.push(EvalLogRow {
                batch: episode / hyper.eval_interval_episodes,
                sr: report.sr,
                cr: report.cr,
                mean_reward: report.mean_reward,
            });
            if report.sr > best_sr {
                best_sr = report.sr;
                best_actor_params = nets.actor.flat_params();
            }
            if hyper.target_sr.is_some_and(|t| report.sr >= t) {
                break;
            }
        }
    }
    if best_sr < 0.0 {
        best_sr = 0.0;
    }
    Ok(Td3TrainResult { nets, reward_history, eval_history, best_actor_params, best_sr, env_steps })
}

/// Evaluate a stored TD3 actor deterministically.
pub fn evaluate_td3_actor(
    env: &mut NavEnv,
    actor: &Mlp,
    n_episodes: usize,
    seed: u64,
    capture: bool,
) -> Result<crate::ppo::EvalReport, EnvError> {
    let mut wrapper = Td3EvalActor { actor };
    evaluate(env, &mut wrapper, n_episodes, seed, capture)
}
