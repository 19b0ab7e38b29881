//! Run configuration: a plain-text key=value format with `[section]`
//! headers. Every key has a default matching the reference task, so an empty
//! file is a valid config. The resolved config is serialized alongside every
//! run for bitwise reproduction.

use crate::checkpoint::Algo;
use crate::env::{EnvConfig, RewardConfig};
use crate::flow::{load_flow, synth_flow, FlowError, FlowSnapshotSet, SynthFlowConfig};
use crate::geometry::{Rect, World};
use crate::ppo::PpoHyper;
use crate::td3::Td3Hyper;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {what}")]
    Parse { line: usize, what: String },
    #[error("unknown key {key:?} in section [{section}] (line {line})")]
    UnknownKey { section: String, key: String, line: usize },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FlowSource {
    Synth,
    File,
}

#[derive(Debug, Clone)]
pub struct WorldSection {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub obstacles: Vec<Rect>,
    pub sensor_max_range: f64,
    pub lookahead: f64,
}

#[derive(Debug, Clone)]
pub struct FlowSection {
    pub source: FlowSource,
    pub path: Option<String>,
    pub n_frames: usize,
    pub nx: usize,
    pub ny: usize,
    pub dt_snap: f64,
    pub mean_speed: f64,
    pub vortex_strength: f64,
    pub vortex_count: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct EnvSection {
    pub max_steps: usize,
    pub target_radius: f64,
    pub start_region: Rect,
    pub target_region: Rect,
    pub dt: f64,
}

#[derive(Debug, Clone)]
pub struct RunSection {
    pub algo: Algo,
    pub episodes: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub world: WorldSection,
    pub flow: FlowSection,
    pub env: EnvSection,
    pub reward: RewardConfig,
    pub ppo: PpoHyper,
    pub td3: Td3Hyper,
    pub run: RunSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            world: WorldSection {
                x_min: -2.0,
                x_max: 4.0,
                y_min: 0.0,
                y_max: 3.0,
                obstacles: vec![Rect::new(-0.25, 0.25, 0.0, 1.0), Rect::new(1.25, 1.75, 0.0, 0.5)],
                sensor_max_range: 2.0,
                lookahead: 0.5,
            },
            flow: FlowSection {
                source: FlowSource::Synth,
                path: None,
                n_frames: 300,
                nx: 241,
                ny: 121,
                dt_snap: 0.08750,
                mean_speed: 1.0,
                vortex_strength: 0.4,
                vortex_count: 12,
                seed: 7,
            },
            env: EnvSection {
                max_steps: 80,
                target_radius: 0.15,
                start_region: Rect::new_region(-1.8, -0.5, 0.2, 2.8),
                target_region: Rect::new_region(2.0, 3.8, 0.2, 2.8),
                dt: 0.08750,
            },
            reward: RewardConfig::default(),
            ppo: PpoHyper::default(),
            td3: Td3Hyper::default(),
            run: RunSection { algo: Algo::PpoLstm, episodes: 1000, seed: 0 },
        }
    }
}

impl RunConfig {
    /// Uniform-flow, no-obstacle task with a fixed start and target; the
    /// quick sanity benchmark for all three trainers.
    pub fn smoke_task() -> Self {
        let mut cfg = RunConfig::default();
        cfg.world.obstacles.clear();
        cfg.flow.mean_speed = 0.5;
        cfg.flow.vortex_strength = 0.0;
        cfg.flow.vortex_count = 0;
        cfg.flow.n_frames = 2;
        cfg.flow.nx = 13;
        cfg.flow.ny = 7;
        cfg.env.start_region = Rect::new_region(-1.0, -1.0, 1.5, 1.5);
        cfg.env.target_region = Rect::new_region(3.0, 3.0, 1.5, 1.5);
        cfg
    }

    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or(ConfigError::Parse { line: line_no, what: "unterminated section header".into() })?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ConfigError::Parse { line: line_no, what: format!("expected key = value, got {line:?}") })?;
            cfg.apply(&section, key.trim(), value.trim(), line_no)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<RunConfig, ConfigError> {
        RunConfig::parse(&std::fs::read_to_string(path)?)
    }

    fn apply(&mut self, section: &str, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        let bad = |what: String| ConfigError::Parse { line, what };
        let f = |v: &str| v.parse::<f64>().map_err(|_| bad(format!("bad number {v:?}")));
        let u = |v: &str| v.parse::<usize>().map_err(|_| bad(format!("bad integer {v:?}")));
        let u64v = |v: &str| v.parse::<u64>().map_err(|_| bad(format!("bad integer {v:?}")));

        match section {
            "world" => match key {
                "x_min" => self.world.x_min = f(value)?,
                "x_max" => self.world.x_max = f(value)?,
                "y_min" => self.world.y_min = f(value)?,
                "y_max" => self.world.y_max = f(value)?,
                "obstacles" => self.world.obstacles = parse_obstacles(value).map_err(bad)?,
                "sensor_max_range" => self.world.sensor_max_range = f(value)?,
                "lookahead" => self.world.lookahead = f(value)?,
                _ => return Err(ConfigError::UnknownKey { section: section.into(), key: key.into(), line }),
            },
            "flow" => match key {
                "source" => {
                    self.flow.source = match value {
                        "synth" => FlowSource::Synth,
                        "file" => FlowSource::File,
                        _ => return Err(bad(format!("flow source must be synth or file, got {value:?}"))),
                    }
                }
                "path" => self.flow.path = if value.is_empty() { None } else { Some(value.to_string()) },
                "n_frames" => self.flow.n_frames = u(value)?,
                "nx" => self.flow.nx = u(value)?,
                "ny" => self.flow.ny = u(value)?,
                "dt_snap" => self.flow.dt_snap = f(value)?,
                "mean_speed" => self.flow.mean_speed = f(value)?,
                "vortex_strength" => self.flow.vortex_strength = f(value)?,
                "vortex_count" => self.flow.vortex_count = u(value)?,
                "seed" => self.flow.seed = u64v(value)?,
                _ => return Err(ConfigError::UnknownKey { section: section.into(), key: key.into(), line }),
            },
            "env" => match key {
                "max_steps" => self.env.max_steps = u(value)?,
                "target_radius" => self.env.target_radius = f(value)?,
                "start_region" => self.env.start_region = parse_rect(value).map_err(bad)?,
                "target_region" => self.env.target_region = parse_rect(value).map_err(bad)?,
                "dt" => self.env.dt = f(value)?,
                _ => return Err(ConfigError::UnknownKey { section: section.into(), key: key.into(), line }),
            },
            "reward" => match key {
                "trans_scale" => self.reward.trans_scale = f(value)?,
                "obstacle_scale" => self.reward.obstacle_scale = f(value)?,
                "obstacle_decay" => self.reward.obstacle_decay = f(value)?,
                "best_dir_scale" => self.reward.best_dir_scale = f(value)?,
                "free_reward" => self.reward.free_reward = f(value)?,
                "step_penalty" => self.reward.step_penalty = f(value)?,
                "energy_scale" => self.reward.energy_scale = f(value)?,
                "target_bonus" => self.reward.target_bonus = f(value)?,
                "crash_penalty" => self.reward.crash_penalty = f(value)?,
                "bounds_penalty" => self.reward.bounds_penalty = f(value)?,
                _ => return Err(ConfigError::UnknownKey { section: section.into(), key: key.into(), line }),
            },
            "ppo" => match key {
                "clip" => self.ppo.clip = f(value)?,
                "gamma" => self.ppo.gamma = f(value)?,
                "gae_lambda" => self.ppo.gae_lambda = f(value)?,
                "batch" => self.ppo.batch = u(value)?,
                "minibatch" => self.ppo.minibatch = u(value)?,
                "epochs" => self.ppo.epochs = u(value)?,
                "sgd_steps" => self.ppo.sgd_steps = u(value)?,
                "lr" => self.ppo.lr = f(value)?,
                "value_coeff" => self.ppo.value_coeff = f(value)?,
                "entropy_coeff" => self.ppo.entropy_coeff = f(value)?,
                "eval_interval" => self.ppo.eval_interval = u(value)?,
                "eval_episodes" => self.ppo.eval_episodes = u(value)?,
                "chunk_len" => self.ppo.chunk_len = u(value)?,
                "target_sr" => self.ppo.target_sr = if value.is_empty() { None } else { Some(f(value)?) },
                _ => return Err(ConfigError::UnknownKey { section: section.into(), key: key.into(), line }),
            },
            "td3" => match key {
                "actor_lr" => self.td3.actor_lr = f(value)?,
                "critic_lr" => self.td3.critic_lr = f(value)?,
                "gamma" => self.td3.gamma = f(value)?,
                "tau" => self.td3.tau = f(value)?,
                "policy_delay" => self.td3.policy_delay = u(value)?,
                "target_noise" => self.td3.target_noise = f(value)?,
                "noise_clip" => self.td3.noise_clip = f(value)?,
                "explore_noise" => self.td3.explore_noise = f(value)?,
                "buffer_capacity" => self.td3.buffer_capacity = u(value)?,
                "batch" => self.td3.batch = u(value)?,
                "warmup_steps" => self.td3.warmup_steps = u(value)?,
                "eval_interval_episodes" => self.td3.eval_interval_episodes = u(value)?,
                "eval_episodes" => self.td3.eval_episodes = u(value)?,
                "target_sr" => self.td3.target_sr = if value.is_empty() { None } else { Some(f(value)?) },
                _ => return Err(ConfigError::UnknownKey { section: section.into(), key: key.into(), line }),
            },
            "run" => match key {
                "algo" => {
                    self.run.algo = Algo::parse(value)
                        .ok_or(bad(format!("algo must be ppo-lstm, ppo or td3, got {value:?}")))?
                }
                "episodes" => self.run.episodes = u(value)?,
                "seed" => self.run.seed = u64v(value)?,
                _ => return Err(ConfigError::UnknownKey { section: section.into(), key: key.into(), line }),
            },
            "" => return Err(ConfigError::Parse { line, what: format!("key {key:?} appears before any [section]") }),
            _ => return Err(ConfigError::UnknownKey { section: section.into(), key: key.into(), line }),
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.world.x_min < self.world.x_max && self.world.y_min < self.world.y_max) {
            return Err(ConfigError::Invalid("world extents not ordered".into()));
        }
        if self.flow.source == FlowSource::File && self.flow.path.is_none() {
            return Err(ConfigError::Invalid("flow source = file requires flow.path".into()));
        }
        Ok(())
    }

    /// Full resolved config as the same text format `parse` reads.
    pub fn to_ini(&self) -> String {
        let mut s = String::new();
        let w = &self.world;
        let _ = writeln!(s, "[world]");
        let _ = writeln!(s, "x_min = {}", w.x_min);
        let _ = writeln!(s, "x_max = {}", w.x_max);
        let _ = writeln!(s, "y_min = {}", w.y_min);
        let _ = writeln!(s, "y_max = {}", w.y_max);
        let obs: Vec<String> = w.obstacles.iter().map(|o| format!("{}:{}:{}:{}", o.x_lo, o.x_hi, o.y_lo, o.y_hi)).collect();
        let _ = writeln!(s, "obstacles = {}", obs.join(", "));
        let _ = writeln!(s, "sensor_max_range = {}", w.sensor_max_range);
        let _ = writeln!(s, "lookahead = {}", w.lookahead);

        let f = &self.flow;
        let _ = writeln!(s, "\n[flow]");
        let _ = writeln!(s, "source = {}", if f.source == FlowSource::Synth { "synth" } else { "file" });
        let _ = writeln!(s, "path = {}", f.path.as_deref().unwrap_or(""));
        let _ = writeln!(s, "n_frames = {}", f.n_frames);
        let _ = writeln!(s, "nx = {}", f.nx);
        let _ = writeln!(s, "ny = {}", f.ny);
        let _ = writeln!(s, "dt_snap = {}", f.dt_snap);
        let _ = writeln!(s, "mean_speed = {}", f.mean_speed);
        let _ = writeln!(s, "vortex_strength = {}", f.vortex_strength);
        let _ = writeln!(s, "vortex_count = {}", f.vortex_count);
        let _ = writeln!(s, "seed = {}", f.seed);

        let e = &self.env;
        let _ = writeln!(s, "\n[env]");
        let _ = writeln!(s, "max_steps = {}", e.max_steps);
        let _ = writeln!(s, "target_radius = {}", e.target_radius);
        let r = &e.start_region;
        let _ = writeln!(s, "start_region = {}:{}:{}:{}", r.x_lo, r.x_hi, r.y_lo, r.y_hi);
        let r = &e.target_region;
        let _ = writeln!(s, "target_region = {}:{}:{}:{}", r.x_lo, r.x_hi, r.y_lo, r.y_hi);
        let _ = writeln!(s, "dt = {}", e.dt);

        let rc = &self.reward;
        let _ = writeln!(s, "\n[reward]");
        let _ = writeln!(s, "trans_scale = {}", rc.trans_scale);
        let _ = writeln!(s, "obstacle_scale = {}", rc.obstacle_scale);
        let _ = writeln!(s, "obstacle_decay = {}", rc.obstacle_decay);
        let _ = writeln!(s, "best_dir_scale = {}", rc.best_dir_scale);
        let _ = writeln!(s, "free_reward = {}", rc.free_reward);
        let _ = writeln!(s, "step_penalty = {}", rc.step_penalty);
        let _ = writeln!(s, "energy_scale = {}", rc.energy_scale);
        let _ = writeln!(s, "target_bonus = {}", rc.target_bonus);
        let _ = writeln!(s, "crash_penalty = {}", rc.crash_penalty);
        let _ = writeln!(s, "bounds_penalty = {}", rc.bounds_penalty);

        let p = &self.ppo;
        let _ = writeln!(s, "\n[ppo]");
        let _ = writeln!(s, "clip = {}", p.clip);
        let _ = writeln!(s, "gamma = {}", p.gamma);
        let _ = writeln!(s, "gae_lambda = {}", p.gae_lambda);
        let _ = writeln!(s, "batch = {}", p.batch);
        let _ = writeln!(s, "minibatch = {}", p.minibatch);
        let _ = writeln!(s, "epochs = {}", p.epochs);
        let _ = writeln!(s, "sgd_steps = {}", p.sgd_steps);
        let _ = writeln!(s, "lr = {}", p.lr);
        let _ = writeln!(s, "value_coeff = {}", p.value_coeff);
        let _ = writeln!(s, "entropy_coeff = {}", p.entropy_coeff);
        let _ = writeln!(s, "eval_interval = {}", p.eval_interval);
        let _ = writeln!(s, "eval_episodes = {}", p.eval_episodes);
        let _ = writeln!(s, "chunk_len = {}", p.chunk_len);
        let _ = writeln!(s, "target_sr = {}", p.target_sr.map(|t| t.to_string()).unwrap_or_default());

        let t = &self.td3;
        let _ = writeln!(s, "\n[td3]");
        let _ = writeln!(s, "actor_lr = {}", t.actor_lr);
        let _ = writeln!(s, "critic_lr = {}", t.critic_lr);
        let _ = writeln!(s, "gamma = {}", t.gamma);
        let _ = writeln!(s, "tau = {}", t.tau);
        let _ = writeln!(s, "policy_delay = {}", t.policy_delay);
        let _ = writeln!(s, "target_noise = {}", t.target_noise);
        let _ = writeln!(s, "noise_clip = {}", t.noise_clip);
        let _ = writeln!(s, "explore_noise = {}", t.explore_noise);
        let _ = writeln!(s, "buffer_capacity = {}", t.buffer_capacity);
        let _ = writeln!(s, "batch = {}", t.batch);
        let _ = writeln!(s, "warmup_steps = {}", t.warmup_steps);
        let _ = writeln!(s, "eval_interval_episodes = {}", t.eval_interval_episodes);
        let _ = writeln!(s, "eval_episodes = {}", t.eval_episodes);
        let _ = writeln!(s, "target_sr = {}", t.target_sr.map(|v| v.to_string()).unwrap_or_default());

        let run = &self.run;
        let _ = writeln!(s, "\n[run]");
        let _ = writeln!(s, "algo = {}", run.algo.as_str());
        let _ = writeln!(s, "episodes = {}", run.episodes);
        let _ = writeln!(s, "seed = {}", run.seed);
        s
    }

    pub fn build_world(&self) -> World {
        World::new(
            Rect::new(self.world.x_min, self.world.x_max, self.world.y_min, self.world.y_max),
            self.world.obstacles.clone(),
            self.world.sensor_max_range,
            self.world.lookahead,
        )
    }

    /// Synthesize or load the snapshot set; `base_dir` anchors relative
    /// flow paths (usually the config file's directory).
    pub fn build_flow(&self, base_dir: &Path) -> Result<Arc<FlowSnapshotSet>, ConfigError> {
        match self.flow.source {
            FlowSource::Synth => {
                let synth = SynthFlowConfig {
                    n_frames: self.flow.n_frames,
                    nx: self.flow.nx,
                    ny: self.flow.ny,
                    x_min: self.world.x_min,
                    x_max: self.world.x_max,
                    y_min: self.world.y_min,
                    y_max: self.world.y_max,
                    dt_snap: self.flow.dt_snap,
                    mean_speed: self.flow.mean_speed,
                    vortex_strength: self.flow.vortex_strength,
                    vortex_count: self.flow.vortex_count,
                    obstacles: self.world.obstacles.clone(),
                };
                Ok(Arc::new(synth_flow(&synth, self.flow.seed)?))
            }
            FlowSource::File => {
                let rel = self.flow.path.as_ref().expect("validated");
                let path = if Path::new(rel).is_absolute() {
                    Path::new(rel).to_path_buf()
                } else {
                    base_dir.join(rel)
                };
                let set = load_flow(&path)?;
                if set.x_min > self.world.x_min
                    || set.x_max < self.world.x_max
                    || set.y_min > self.world.y_min
                    || set.y_max < self.world.y_max
                {
                    return Err(ConfigError::Invalid(format!(
                        "flow extents [{}, {}]x[{}, {}] do not cover the world bounds",
                        set.x_min, set.x_max, set.y_min, set.y_max
                    )));
                }
                Ok(Arc::new(set))
            }
        }
    }

    pub fn build_synth_config(&self) -> SynthFlowConfig {
        SynthFlowConfig {
            n_frames: self.flow.n_frames,
            nx: self.flow.nx,
            ny: self.flow.ny,
            x_min: self.world.x_min,
            x_max: self.world.x_max,
            y_min: self.world.y_min,
            y_max: self.world.y_max,
            dt_snap: self.flow.dt_snap,
            mean_speed: self.flow.mean_speed,
            vortex_strength: self.flow.vortex_strength,
            vortex_count: self.flow.vortex_count,
            obstacles: self.world.obstacles.clone(),
        }
    }

    pub fn build_env(&self, flow: Arc<FlowSnapshotSet>) -> EnvConfig {
        EnvConfig {
            world: self.build_world(),
            flow,
            max_steps: self.env.max_steps,
            target_radius: self.env.target_radius,
            start_region: self.env.start_region,
            target_region: self.env.target_region,
            reward: self.reward,
            dt: self.env.dt,
        }
    }
}

fn parse_rect(s: &str) -> Result<Rect, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 4 {
        return Err(format!("rectangle needs x_lo:x_hi:y_lo:y_hi, got {s:?}"));
    }
    let mut vals = [0.0; 4];
    for (v, p) in vals.iter_mut().zip(&parts) {
        *v = p.trim().parse::<f64>().map_err(|_| format!("bad number {p:?} in rectangle {s:?}"))?;
    }
    if vals[0] > vals[1] || vals[2] > vals[3] {
        return Err(format!("rectangle {s:?} has unordered extents"));
    }
    Ok(Rect::new_region(vals[0], vals[1], vals[2], vals[3]))
}

fn parse_obstacles(s: &str) -> Result<Vec<Rect>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|part| parse_rect(part.trim())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_reference_task() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg.world.obstacles.len(), 2);
        assert_eq!(cfg.env.max_steps, 80);
        assert_eq!(cfg.ppo.batch, 256);
        assert!((cfg.flow.dt_snap - 0.0875).abs() < 1e-15);
    }

    #[test]
    fn roundtrip_through_ini_text() {
        let mut cfg = RunConfig::default();
        cfg.run.seed = 99;
        cfg.ppo.target_sr = Some(0.9);
        cfg.reward.step_penalty = -0.1;
        cfg.world.obstacles = vec![Rect::new(0.0, 1.0, 0.0, 0.5)];
        let text = cfg.to_ini();
        let back = RunConfig::parse(&text).unwrap();
        assert_eq!(back.run.seed, 99);
        assert_eq!(back.ppo.target_sr, Some(0.9));
        assert_eq!(back.reward.step_penalty, -0.1);
        assert_eq!(back.world.obstacles, cfg.world.obstacles);
        // serialization is stable
        assert_eq!(back.to_ini(), text);
    }

    #[test]
    fn comments_and_blanks_are_ignored() {
        let text = "\n# leading comment\n[env]\nmax_steps = 40  # trailing\n\n[run]\nalgo = td3\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.env.max_steps, 40);
        assert_eq!(cfg.run.algo, Algo::Td3);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::parse("[env]\nmax_stepz = 12\n").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { .. }));
        let err = RunConfig::parse("stray = 1\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { .. }));
    }

    #[test]
    fn file_source_requires_path() {
        let err = RunConfig::parse("[flow]\nsource = file\n").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)));
    }

    #[test]
    fn smoke_task_builds_and_runs() {
        let cfg = RunConfig::smoke_task();
        let flow = cfg.build_flow(Path::new(".")).unwrap();
        assert!((flow.max_speed() - 0.5).abs() < 1e-12);
        let env_cfg = cfg.build_env(flow);
        let mut env = crate::env::NavEnv::new(env_cfg).unwrap();
        env.reset(0).unwrap();
        assert_eq!(env.state().pos, crate::vec2::Vec2::new(-1.0, 1.5));
        assert_eq!(env.target(), crate::vec2::Vec2::new(3.0, 1.5));
    }

    #[test]
    fn flow_file_roundtrip_via_config() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::smoke_task();
        let set = synth_flow(&cfg.build_synth_config(), cfg.flow.seed).unwrap();
        crate::flow::save_flow(&set, &dir.path().join("flow.f1")).unwrap();
        cfg.flow.source = FlowSource::File;
        cfg.flow.path = Some("flow.f1".into());
        let loaded = cfg.build_flow(dir.path()).unwrap();
        assert_eq!(*loaded, set);
    }
}
