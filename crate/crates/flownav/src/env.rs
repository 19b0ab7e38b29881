//! Episodic navigation environment: reset/step in the gymnasium style,
//! observation assembly, the six-component shaping reward and the terminal
//! bonuses/penalties.
//!
//! One instance is single-threaded; spawn independent instances (the flow
//! set is shared immutably) for parallel rollouts.

use crate::dynamics::{rk4_step, ActionCmd, UavState};
use crate::flow::{FlowError, FlowSnapshotSet};
use crate::geometry::{best_direction, sensor_angles, Rect, World, SENSOR_COUNT};
use crate::vec2::{wrap_angle, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::sync::Arc;

/// Observation vector dimension fed to the networks.
pub const OBS_DIM: usize = 3 + SENSOR_COUNT;

#[derive(Debug, thiserror::Error)]
pub enum EnvError {
    #[error("could not sample a {region}-region point clear of obstacles in 100 attempts")]
    RegionBlocked { region: &'static str },
    #[error("invalid environment config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// Constants weighting the reward components.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct RewardConfig {
    /// Scale on the per-step reduction of distance to target.
    pub trans_scale: f64,
    /// Magnitude of the obstacle-proximity penalty at contact.
    pub obstacle_scale: f64,
    /// Exponential decay rate of the obstacle penalty with clearance.
    pub obstacle_decay: f64,
    /// Scale on the best-clearance angle when the path ahead is blocked.
    pub best_dir_scale: f64,
    /// Constant reward when the lookahead ray is free of obstacles.
    pub free_reward: f64,
    /// Constant per-step penalty (non-positive).
    pub step_penalty: f64,
    /// Scale on the propulsion-speed energy penalty.
    pub energy_scale: f64,
    pub target_bonus: f64,
    pub crash_penalty: f64,
    pub bounds_penalty: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            trans_scale: 1.0,
            obstacle_scale: 1.0,
            obstacle_decay: 4.0,
            best_dir_scale: 0.2,
            free_reward: 0.05,
            step_penalty: -0.05,
            energy_scale: 0.05,
            target_bonus: 20.0,
            crash_penalty: -20.0,
            bounds_penalty: -10.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EnvConfig {
    pub world: World,
    pub flow: Arc<FlowSnapshotSet>,
    pub max_steps: usize,
    pub target_radius: f64,
    pub start_region: Rect,
    pub target_region: Rect,
    pub reward: RewardConfig,
    pub dt: f64,
}

impl EnvConfig {
    fn validate(&self) -> Result<(), EnvError> {
        let bad = |m: &str| Err(EnvError::BadConfig(m.into()));
        if self.max_steps == 0 {
            return bad("max_steps must be positive");
        }
        if !(self.target_radius > 0.0) {
            return bad("target_radius must be positive");
        }
        if !(self.dt > 0.0) {
            return bad("dt must be positive");
        }
        let rc = &self.reward;
        if !(rc.obstacle_decay > 0.0 && rc.obstacle_scale > 0.0) {
            return bad("obstacle penalty constants must be positive");
        }
        if rc.energy_scale < 0.0 {
            return bad("energy_scale must be non-negative");
        }
        if rc.step_penalty > 0.0 {
            return bad("step_penalty must be non-positive");
        }
        let b = &self.world.bounds;
        for (r, name) in [(&self.start_region, "start"), (&self.target_region, "target")] {
            if r.x_lo < b.x_lo || r.x_hi > b.x_hi || r.y_lo < b.y_lo || r.y_hi > b.y_hi {
                return bad(&format!("{name} region outside domain bounds"));
            }
        }
        Ok(())
    }
}

/// What the agent sees: heading, body-frame bearing to target, distance to
/// target, and the 9 ray readings normalized by the sensor range.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Observation {
    pub theta: f64,
    pub phi: f64,
    pub d0: f64,
    pub rays: [f64; SENSOR_COUNT],
}

impl Observation {
    /// Bounded input vector for the networks: angles scaled by pi, the
    /// target distance by the domain diagonal, rays already in [0, 1].
    pub fn to_network_input(&self, domain_diag: f64) -> Vec<f64> {
        let mut v = Vec::with_capacity(OBS_DIM);
        v.push(self.theta / std::f64::consts::PI);
        v.push(self.phi / std::f64::consts::PI);
        v.push(self.d0 / domain_diag);
        v.extend_from_slice(&self.rays);
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Running,
    TargetReached,
    CrashedObstacle,
    OutOfBounds,
    MaxSteps,
}

impl Outcome {
    pub fn is_terminal(self) -> bool {
        self != Outcome::Running
    }

    /// Terminal without reaching a true absorbing state (the episode cap).
    pub fn is_truncation(self) -> bool {
        self == Outcome::MaxSteps
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Running => "running",
            Outcome::TargetReached => "target_reached",
            Outcome::CrashedObstacle => "crashed_obstacle",
            Outcome::OutOfBounds => "out_of_bounds",
            Outcome::MaxSteps => "max_steps",
        }
    }
}

/// Per-component reward record; the step reward is exactly the sum of these.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RewardBreakdown {
    pub trans: f64,
    pub obstacle: f64,
    pub free: f64,
    pub best_dir: f64,
    pub step: f64,
    pub energy: f64,
    pub terminal: f64,
}

impl RewardBreakdown {
    pub fn total(&self) -> f64 {
        self.trans + self.obstacle + self.free + self.best_dir + self.step + self.energy + self.terminal
    }
}

/// Reward evaluation along with the geometry byproducts the observation and
/// logs reuse.
#[derive(Debug, Clone)]
pub struct RewardEval {
    pub breakdown: RewardBreakdown,
    pub rays_raw: [f64; SENSOR_COUNT],
    pub free_ahead: bool,
    pub best_angle: f64,
    pub flow_at_pos: Vec2,
}

/// The six shaping components for a transition from `prev` to `new`.
/// Positions outside the domain are clamped to it for the geometry queries.
pub fn compute_reward(
    prev: &UavState,
    new: &UavState,
    target: Vec2,
    world: &World,
    rc: &RewardConfig,
    flow: &FlowSnapshotSet,
    frame: usize,
) -> RewardEval {
    let pos = world.bounds.clamp_point(new.pos);
    let rays_raw = world.sensor_sweep(pos, new.theta);
    let d_min = rays_raw.iter().cloned().fold(f64::INFINITY, f64::min);
    let free_ahead = world.free_space_ahead(pos, new.theta);
    let best_angle = best_direction(&rays_raw, &sensor_angles());
    let flow_at_pos = flow
        .sample_velocity(frame, pos, &world.obstacles)
        .expect("clamped position must be inside the flow domain");

    let breakdown = RewardBreakdown {
        trans: rc.trans_scale * ((prev.pos - target).norm() - (new.pos - target).norm()),
        obstacle: -rc.obstacle_scale * (-rc.obstacle_decay * d_min).exp(),
        free: if free_ahead { rc.free_reward } else { 0.0 },
        best_dir: if free_ahead { 0.0 } else { rc.best_dir_scale * best_angle },
        step: rc.step_penalty,
        energy: -rc.energy_scale * (new.vel - flow_at_pos).norm(),
        terminal: 0.0,
    };
    RewardEval { breakdown, rays_raw, free_ahead, best_angle, flow_at_pos }
}

/// Everything a logger or trainer may want to know about one step.
#[derive(Debug, Clone)]
pub struct StepInfo {
    pub breakdown: RewardBreakdown,
    pub state: UavState,
    pub rays_raw: [f64; SENSOR_COUNT],
    pub free_ahead: bool,
    pub best_angle: f64,
    pub frame: usize,
    pub action: ActionCmd,
    pub flow_at_pos: Vec2,
    pub d0: f64,
    pub t: f64,
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub obs: Observation,
    pub reward: f64,
    pub outcome: Outcome,
    pub info: StepInfo,
}

impl StepResult {
    pub fn terminated(&self) -> bool {
        self.outcome.is_terminal() && !self.outcome.is_truncation()
    }

    pub fn truncated(&self) -> bool {
        self.outcome.is_truncation()
    }
}

pub struct NavEnv {
    cfg: EnvConfig,
    speed_cap: f64,
    betas: [f64; SENSOR_COUNT],
    state: UavState,
    target: Vec2,
    frame: usize,
    steps: usize,
    outcome: Outcome,
    episode_seed: u64,
}

fn sample_rect(rng: &mut ChaCha20Rng, r: &Rect) -> Vec2 {
    let x = if r.x_hi > r.x_lo { rng.random_range(r.x_lo..=r.x_hi) } else { r.x_lo };
    let y = if r.y_hi > r.y_lo { rng.random_range(r.y_lo..=r.y_hi) } else { r.y_lo };
    Vec2::new(x, y)
}

impl NavEnv {
    pub fn new(cfg: EnvConfig) -> Result<Self, EnvError> {
        cfg.validate()?;
        if cfg.flow.frames.is_empty() {
            return Err(EnvError::Flow(FlowError::Empty));
        }
        let speed_cap = 1.4 * cfg.flow.max_speed();
        Ok(NavEnv {
            cfg,
            speed_cap,
            betas: sensor_angles(),
            state: UavState::at_rest(Vec2::ZERO, 0.0),
            target: Vec2::ZERO,
            frame: 0,
            steps: 0,
            outcome: Outcome::MaxSteps, // requires reset before step
            episode_seed: 0,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn speed_cap(&self) -> f64 {
        self.speed_cap
    }

    pub fn state(&self) -> &UavState {
        &self.state
    }

    pub fn target(&self) -> Vec2 {
        self.target
    }

    pub fn frame(&self) -> usize {
        self.frame
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn outcome(&self) -> Outcome {
        self.outcome
    }

    pub fn episode_seed(&self) -> u64 {
        self.episode_seed
    }

    pub fn domain_diag(&self) -> f64 {
        self.cfg.world.bounds.diagonal()
    }

    /// Start a new episode: uniform start and target points (rejected against
    /// obstacles), uniform random frame, heading aimed at the target, zero
    /// velocity and angular rate. Deterministic for a fixed seed.
    pub fn reset(&mut self, episode_seed: u64) -> Result<Observation, EnvError> {
        let mut rng = ChaCha20Rng::seed_from_u64(episode_seed);
        let start = self.sample_clear(&mut rng, &self.cfg.start_region.clone(), "start")?;
        let target = self.sample_clear(&mut rng, &self.cfg.target_region.clone(), "target")?;
        let frame = rng.random_range(0..self.cfg.flow.n_frames());

        self.state = UavState::at_rest(start, (target - start).angle());
        self.target = target;
        self.frame = frame;
        self.steps = 0;
        self.outcome = Outcome::Running;
        self.episode_seed = episode_seed;
        Ok(self.observe())
    }

    fn sample_clear(&self, rng: &mut ChaCha20Rng, region: &Rect, name: &'static str) -> Result<Vec2, EnvError> {
        for _ in 0..100 {
            let p = sample_rect(rng, region);
            if !self.cfg.world.point_in_obstacle(p) {
                return Ok(p);
            }
        }
        Err(EnvError::RegionBlocked { region: name })
    }

    /// Advance one control period. The action is clipped to its bounds, the
    /// flow frame is frozen during the step and advances (with wraparound)
    /// afterwards.
    pub fn step(&mut self, action: ActionCmd) -> StepResult {
        assert!(self.outcome == Outcome::Running, "step called on a finished episode");
        let cmd = ActionCmd::clipped(action.lin_acc, action.ang_acc);
        let cfg = &self.cfg;
        let frame = self.frame;
        let world = &cfg.world;
        let flow = &cfg.flow;

        let sampler = |p: Vec2| {
            let q = world.bounds.clamp_point(p);
            flow.sample_velocity(frame, q, &world.obstacles)
                .expect("clamped position must be inside the flow domain")
        };
        let prev = self.state;
        let new_state = rk4_step(&prev, &cmd, sampler, cfg.dt, self.speed_cap)
            .expect("non-finite integration step; flow data or config is broken");

        self.steps += 1;
        let eval = compute_reward(&prev, &new_state, self.target, world, &cfg.reward, flow, frame);
        let d0 = (new_state.pos - self.target).norm();

        let outcome = if d0 <= cfg.target_radius {
            Outcome::TargetReached
        } else if world.point_in_obstacle(new_state.pos) {
            Outcome::CrashedObstacle
        } else if !world.bounds.contains(new_state.pos) {
            Outcome::OutOfBounds
        } else if self.steps >= cfg.max_steps {
            Outcome::MaxSteps
        } else {
            Outcome::Running
        };

        let mut breakdown = eval.breakdown;
        breakdown.terminal = match outcome {
            Outcome::TargetReached => cfg.reward.target_bonus,
            Outcome::CrashedObstacle => cfg.reward.crash_penalty,
            Outcome::OutOfBounds => cfg.reward.bounds_penalty,
            _ => 0.0,
        };
        let reward = breakdown.total();

        self.state = new_state;
        self.outcome = outcome;
        self.frame = (frame + 1) % flow.n_frames();

        let obs = self.observe_with_rays(eval.rays_raw);
        StepResult {
            obs,
            reward,
            outcome,
            info: StepInfo {
                breakdown,
                state: new_state,
                rays_raw: eval.rays_raw,
                free_ahead: eval.free_ahead,
                best_angle: eval.best_angle,
                frame,
                action: cmd,
                flow_at_pos: eval.flow_at_pos,
                d0,
                t: self.steps as f64 * cfg.dt,
            },
        }
    }

    /// Observation at the current state.
    pub fn observe(&self) -> Observation {
        let pos = self.cfg.world.bounds.clamp_point(self.state.pos);
        self.observe_with_rays(self.cfg.world.sensor_sweep(pos, self.state.theta))
    }

    fn observe_with_rays(&self, rays_raw: [f64; SENSOR_COUNT]) -> Observation {
        let s = &self.state;
        let to_target = self.target - s.pos;
        let mut rays = [0.0; SENSOR_COUNT];
        for i in 0..SENSOR_COUNT {
            rays[i] = rays_raw[i] / self.cfg.world.sensor_max_range;
        }
        Observation {
            theta: s.theta,
            phi: wrap_angle(to_target.angle() - s.theta),
            d0: to_target.norm(),
            rays,
        }
    }

    pub fn sensor_angles(&self) -> &[f64; SENSOR_COUNT] {
        &self.betas
    }
}
