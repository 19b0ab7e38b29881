//! Command-line entry point: flow synthesis, training, evaluation and
//! cross-run comparison.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use flownav::checkpoint::{load_policy, save_checkpoint, Algo, LoadedPolicy};
use flownav::config::RunConfig;
use flownav::env::NavEnv;
use flownav::flow::save_flow;
use flownav::harness::{
    compare_runs, ema, export_action_stats, export_trajectory, write_eval_log, write_summary, write_train_log,
    RunSummary, DEFAULT_EMA_ALPHA,
};
use flownav::policy::{FfPolicyNet, PolicyNet, PpoPolicy};
use flownav::ppo::{evaluate, train_ppo, EvalReport, PolicyActor};
use flownav::td3::{evaluate_td3_actor, td3_train};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "flownav", version, about = "UAV navigation in 2D turbulent flow fields: simulator and DRL trainers")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic snapshot set and write it as a FLOW1 file.
    SynthFlow {
        /// run config; defaults apply when omitted
        #[arg(long)]
        config: Option<PathBuf>,
        /// output flow file
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a policy and write logs plus checkpoints into a run directory.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        /// ppo-lstm, ppo or td3 (overrides the config)
        #[arg(long)]
        algo: Option<String>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint deterministically and export trajectories.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// how many episodes to export as trajectory/action-stat CSVs
        #[arg(long, default_value_t = 4)]
        trajectories: usize,
    },
    /// Summarize finished run directories side by side.
    Compare {
        dirs: Vec<PathBuf>,
        /// where to write the machine-readable summary
        #[arg(long, default_value = "comparison.json")]
        json: PathBuf,
        /// EMA smoothing factor for the reward curves
        #[arg(long, default_value_t = DEFAULT_EMA_ALPHA)]
        alpha: f64,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<(RunConfig, PathBuf)> {
    match path {
        Some(p) => {
            let cfg = RunConfig::from_path(p).with_context(|| format!("reading config {}", p.display()))?;
            let base = p.parent().unwrap_or(Path::new(".")).to_path_buf();
            Ok((cfg, base))
        }
        None => Ok((RunConfig::default(), PathBuf::from("."))),
    }
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::SynthFlow { config, out } => synth_flow_cmd(&config, &out),
        Cmd::Train { config, algo, episodes, seed, out } => train_cmd(&config, algo, episodes, seed, &out),
        Cmd::Eval { checkpoint, config, episodes, seed, out, trajectories } => {
            eval_cmd(&checkpoint, &config, episodes, seed, &out, trajectories)
        }
        Cmd::Compare { dirs, json, alpha } => compare_cmd(&dirs, &json, alpha),
    }
}

fn synth_flow_cmd(config: &Option<PathBuf>, out: &Path) -> Result<()> {
    let (cfg, _) = load_config(config)?;
    let synth = cfg.build_synth_config();
    let set = flownav::flow::synth_flow(&synth, cfg.flow.seed)?;
    save_flow(&set, out)?;
    println!(
        "wrote {} ({} frames, {}x{} grid, dt_snap {}, max speed {:.4})",
        out.display(),
        set.n_frames(),
        set.nx,
        set.ny,
        set.dt_snap,
        set.max_speed()
    );
    Ok(())
}

fn train_cmd(
    config: &Option<PathBuf>,
    algo: Option<String>,
    episodes: Option<usize>,
    seed: Option<u64>,
    out: &Path,
) -> Result<()> {
    let (mut cfg, base) = load_config(config)?;
    if let Some(a) = algo {
        cfg.run.algo = Algo::parse(&a).with_context(|| format!("unknown algorithm {a:?}"))?;
    }
    if let Some(e) = episodes {
        cfg.run.episodes = e;
    }
    if let Some(s) = seed {
        cfg.run.seed = s;
    }
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("config.ini"), cfg.to_ini())?;

    let flow = cfg.build_flow(&base)?;
    let env_cfg = cfg.build_env(flow);
    let algo = cfg.run.algo;
    let run_seed = cfg.run.seed;
    let net_seed = run_seed ^ 0x4e45_5453;
    println!(
        "training {} for {} episodes (seed {}) -> {}",
        algo.as_str(),
        cfg.run.episodes,
        run_seed,
        out.display()
    );

    let (reward_history, eval_history, best_sr) = match algo {
        Algo::PpoLstm => {
            let net = PolicyNet::new(flownav::env::OBS_DIM, net_seed);
            let arch = net.arch();
            let result = train_ppo(net, env_cfg, &cfg.ppo, cfg.run.episodes, run_seed)?;
            save_checkpoint(&out.join("checkpoint_best.nnck"), algo, &arch, &result.best_params, None)?;
            save_checkpoint(
                &out.join("checkpoint_final.nnck"),
                algo,
                &arch,
                &result.net.flat_params(),
                Some(&result.adam),
            )?;
            (result.reward_history, result.eval_history, result.best_sr)
        }
        Algo::PpoFf => {
            let net = FfPolicyNet::new(flownav::env::OBS_DIM, net_seed);
            let arch = net.arch();
            let result = train_ppo(net, env_cfg, &cfg.ppo, cfg.run.episodes, run_seed)?;
            save_checkpoint(&out.join("checkpoint_best.nnck"), algo, &arch, &result.best_params, None)?;
            save_checkpoint(
                &out.join("checkpoint_final.nnck"),
                algo,
                &arch,
                &result.net.flat_params(),
                Some(&result.adam),
            )?;
            (result.reward_history, result.eval_history, result.best_sr)
        }
        Algo::Td3 => {
            let result = td3_train(env_cfg, &cfg.td3, cfg.run.episodes, run_seed)?;
            let dims: Vec<u32> = result.nets.actor.dims().iter().map(|&d| d as u32).collect();
            save_checkpoint(&out.join("checkpoint_best.nnck"), algo, &dims, &result.best_actor_params, None)?;
            save_checkpoint(&out.join("checkpoint_final.nnck"), algo, &dims, &result.nets.actor.flat_params(), None)?;
            (result.reward_history, result.eval_history, result.best_sr)
        }
    };

    write_train_log(out, &reward_history)?;
    write_eval_log(out, &eval_history)?;
    let rewards: Vec<f64> = reward_history.iter().map(|r| r.reward).collect();
    let final_ema = ema(&rewards, DEFAULT_EMA_ALPHA).last().copied().unwrap_or(0.0);
    let last_eval = eval_history.last();
    let summary = RunSummary {
        algo,
        episodes: reward_history.len(),
        best_sr,
        final_sr: last_eval.map_or(0.0, |e| e.sr),
        final_cr: last_eval.map_or(0.0, |e| e.cr),
        final_ema_reward: final_ema,
        mean_reward_last_eval: last_eval.map_or(0.0, |e| e.mean_reward),
        seed: run_seed,
    };
    write_summary(out, &summary)?;
    println!(
        "done: {} episodes, best SR {:.3}, final EMA reward {:.3}",
        summary.episodes, summary.best_sr, summary.final_ema_reward
    );
    Ok(())
}

#[derive(serde::Serialize)]
struct EvalMetrics {
    algo: Algo,
    episodes: usize,
    sr: f64,
    cr: f64,
    oob_rate: f64,
    timeout_rate: f64,
    mean_reward: f64,
    seed: u64,
}

fn eval_cmd(
    checkpoint: &Path,
    config: &Option<PathBuf>,
    episodes: Option<usize>,
    seed: Option<u64>,
    out: &Path,
    trajectories: usize,
) -> Result<()> {
    let (cfg, base) = load_config(config)?;
    let n_episodes = episodes.unwrap_or(100);
    let eval_seed = seed.unwrap_or(cfg.run.seed);
    let policy = load_policy(checkpoint).with_context(|| format!("loading {}", checkpoint.display()))?;
    let flow = cfg.build_flow(&base)?;
    let mut env = NavEnv::new(cfg.build_env(flow))?;
    std::fs::create_dir_all(out)?;

    let report: EvalReport = match &policy {
        LoadedPolicy::PpoLstm(net) => {
            let mut actor = PolicyActor::new(net);
            evaluate(&mut env, &mut actor, n_episodes, eval_seed, true)?
        }
        LoadedPolicy::PpoFf(net) => {
            let mut actor = PolicyActor::new(net);
            evaluate(&mut env, &mut actor, n_episodes, eval_seed, true)?
        }
        LoadedPolicy::Td3Actor(actor) => evaluate_td3_actor(&mut env, actor, n_episodes, eval_seed, true)?,
    };

    let metrics = EvalMetrics {
        algo: policy.algo(),
        episodes: n_episodes,
        sr: report.sr,
        cr: report.cr,
        oob_rate: report.oob_rate,
        timeout_rate: report.timeout_rate,
        mean_reward: report.mean_reward,
        seed: eval_seed,
    };
    std::fs::write(out.join("metrics.json"), serde_json::to_string_pretty(&metrics)?)?;
    for (k, rec) in report.records.iter().take(trajectories).enumerate() {
        export_trajectory(rec, &out.join(format!("traj_{k:03}.csv")))?;
        export_action_stats(rec, &out.join(format!("actions_{k:03}.csv")))?;
    }
    println!(
        "{}: SR {:.3}  CR {:.3}  OOB {:.3}  timeout {:.3}  mean reward {:.3} over {} episodes",
        metrics.algo.as_str(),
        metrics.sr,
        metrics.cr,
        metrics.oob_rate,
        metrics.timeout_rate,
        metrics.mean_reward,
        n_episodes
    );
    Ok(())
}

fn compare_cmd(dirs: &[PathBuf], json: &Path, alpha: f64) -> Result<()> {
    if dirs.is_empty() {
        bail!("compare needs at least one run directory");
    }
    let cmp = compare_runs(dirs, alpha)?;
    print!("{}", cmp.render_table());
    std::fs::write(json, serde_json::to_string_pretty(&cmp)?)?;
    println!("wrote {}", json.display());
    Ok(())
}
