//! Run artifacts: EMA smoothing, trajectory and action-statistics export,
//! training/evaluation logs and cross-run comparison.
//!
//! Everything is plot-ready CSV or JSON; plotting itself stays outside the
//! crate.

use crate::checkpoint::Algo;
use crate::env::Outcome;
use crate::ppo::{EpisodeLogRow, EpisodeRecord, EvalLogRow};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

pub const DEFAULT_EMA_ALPHA: f64 = 0.05;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("run directory {0} is missing {1}")]
    MissingLog(PathBuf, &'static str),
    #[error("malformed {file}: {what}")]
    Malformed { file: PathBuf, what: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// EMA_t = alpha*v_t + (1-alpha)*EMA_{t-1}, seeded with EMA_0 = v_0.
pub fn ema(series: &[f64], alpha: f64) -> Vec<f64> {
    assert!((0.0..=1.0).contains(&alpha), "alpha must lie in [0, 1]");
    let mut out = Vec::with_capacity(series.len());
    let mut prev = match series.first() {
        Some(&v) => v,
        None => return out,
    };
    out.push(prev);
    for &v in &series[1..] {
        prev = alpha * v + (1.0 - alpha) * prev;
        out.push(prev);
    }
    out
}

/// A smoothed series carrying its factor, for callers that keep appending.
#[derive(Debug, Clone)]
pub struct EmaSeries {
    pub alpha: f64,
    pub values: Vec<f64>,
}

impl EmaSeries {
    pub fn new(alpha: f64) -> Self {
        assert!((0.0..=1.0).contains(&alpha));
        EmaSeries { alpha, values: Vec::new() }
    }

    pub fn push(&mut self, v: f64) -> f64 {
        let next = match self.values.last() {
            Some(&prev) => self.alpha * v + (1.0 - self.alpha) * prev,
            None => v,
        };
        self.values.push(next);
        next
    }

    pub fn last(&self) -> Option<f64> {
        self.values.last().copied()
    }
}

// --- per-episode exports -----------------------------------------------------

#[derive(Debug, serde::Serialize, serde::Deserialize)]
pub struct TrajectorySidecar {
    pub seed: u64,
    pub start: [f64; 2],
    pub target: [f64; 2],
    pub outcome: Outcome,
    pub total_reward: f64,
    pub steps: usize,
}

/// Write one episode as a CSV of per-step rows plus a JSON sidecar with the
/// episode metadata (same stem, `.json` extension).
pub fn export_trajectory(rec: &EpisodeRecord, path: &Path) -> Result<(), HarnessError> {
    let mut s = String::new();
    s.push_str("step,t,x,y,theta,vx,vy,omega,lin_acc,ang_acc,reward,r_trans,r_obstacle,r_free,r_best_dir,r_step,r_energy,r_terminal");
    for i in 1..=crate::geometry::SENSOR_COUNT {
        let _ = write!(s, ",ray_{i}");
    }
    s.push_str(",frame\n");
    for row in &rec.steps {
        let st = &row.state;
        let b = &row.breakdown;
        let _ = write!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.step, row.t, st.pos.x, st.pos.y, st.theta, st.vel.x, st.vel.y, st.omega,
            row.action.lin_acc, row.action.ang_acc, row.reward,
            b.trans, b.obstacle, b.free, b.best_dir, b.step, b.energy, b.terminal
        );
        for r in row.rays {
            let _ = write!(s, ",{r}");
        }
        let _ = writeln!(s, ",{}", row.frame);
    }
    fs::write(path, s)?;
    let sidecar = TrajectorySidecar {
        seed: rec.seed,
        start: [rec.start.x, rec.start.y],
        target: [rec.target.x, rec.target.y],
        outcome: rec.outcome,
        total_reward: rec.total_reward,
        steps: rec.steps.len(),
    };
    fs::write(path.with_extension("json"), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

/// Per-step policy-head statistics: step, mu1, mu2, sigma1, sigma2.
pub fn export_action_stats(rec: &EpisodeRecord, path: &Path) -> Result<(), HarnessError> {
    let mut s = String::from("step,mu1,mu2,sigma1,sigma2\n");
    for row in &rec.steps {
        let _ = writeln!(s, "{},{},{},{},{}", row.step, row.mu[0], row.mu[1], row.sigma[0], row.sigma[1]);
    }
    fs::write(path, s)?;
    Ok(())
}

// --- run directory logs --------------------------------------------------------

pub fn write_train_log(dir: &Path, rows: &[EpisodeLogRow]) -> Result<(), HarnessError> {
    let mut s = String::from("episode,reward,length,outcome\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{}", r.episode, r.reward, r.length, r.outcome.as_str());
    }
    fs::write(dir.join("train_log.csv"), s)?;
    Ok(())
}

pub fn write_eval_log(dir: &Path, rows: &[EvalLogRow]) -> Result<(), HarnessError> {
    let mut s = String::from("batch,sr,cr,mean_reward\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{}", r.batch, r.sr, r.cr, r.mean_reward);
    }
    fs::write(dir.join("eval_log.csv"), s)?;
    Ok(())
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RunSummary {
    pub algo: Algo,
    pub episodes: usize,
    pub best_sr: f64,
    pub final_sr: f64,
    pub final_cr: f64,
    pub final_ema_reward: f64,
    pub mean_reward_last_eval: f64,
    pub seed: u64,
}

pub fn write_summary(dir: &Path, summary: &RunSummary) -> Result<(), HarnessError> {
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(summary)?)?;
    Ok(())
}

fn read_train_rewards(dir: &Path) -> Result<Vec<f64>, HarnessError> {
    let path = dir.join("train_log.csv");
    if !path.exists() {
        return Err(HarnessError::MissingLog(dir.to_path_buf(), "train_log.csv"));
    }
    let text = fs::read_to_string(&path)?;
    let mut rewards = Vec::new();
    for (ln, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(HarnessError::Malformed { file: path.clone(), what: format!("line {} has {} fields", ln + 1, fields.len()) });
        }
        let r: f64 = fields[1].parse().map_err(|_| HarnessError::Malformed {
            file: path.clone(),
            what: format!("bad reward {:?} on line {}", fields[1], ln + 1),
        })?;
        rewards.push(r);
    }
    Ok(rewards)
}

fn read_last_eval(dir: &Path) -> Result<Option<(f64, f64, f64)>, HarnessError> {
    let path = dir.join("eval_log.csv");
    if !path.exists() {
        return Err(HarnessError::MissingLog(dir.to_path_buf(), "eval_log.csv"));
    }
    let text = fs::read_to_string(&path)?;
    let mut last = None;
    for line in text.lines().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(HarnessError::Malformed { file: path.clone(), what: format!("bad eval row {line:?}") });
        }
        let parse = |s: &str| -> Result<f64, HarnessError> {
            s.parse().map_err(|_| HarnessError::Malformed { file: path.clone(), what: format!("bad number {s:?}") })
        };
        last = Some((parse(fields[1])?, parse(fields[2])?, parse(fields[3])?));
    }
    Ok(last)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ComparisonRow {
    pub dir: String,
    pub algo: Algo,
    pub final_ema_reward: f64,
    pub sr: f64,
    pub cr: f64,
    pub episodes: usize,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
}

/// Summarize run directories, ordered by final EMA reward (best first).
pub fn compare_runs(dirs: &[PathBuf], alpha: f64) -> Result<Comparison, HarnessError> {
    let mut rows = Vec::with_capacity(dirs.len());
    for dir in dirs {
        let summary_path = dir.join("summary.json");
        if !summary_path.exists() {
            return Err(HarnessError::MissingLog(dir.clone(), "summary.json"));
        }
        let summary: RunSummary = serde_json::from_str(&fs::read_to_string(&summary_path)?)?;
        let rewards = read_train_rewards(dir)?;
        let smoothed = ema(&rewards, alpha);
        let final_ema = smoothed.last().copied().unwrap_or(f64::NAN);
        let (sr, cr) = match read_last_eval(dir)? {
            Some((sr, cr, _)) => (sr, cr),
            None => (summary.final_sr, summary.final_cr),
        };
        rows.push(ComparisonRow {
            dir: dir.display().to_string(),
            algo: summary.algo,
            final_ema_reward: final_ema,
            sr,
            cr,
            episodes: rewards.len(),
        });
    }
    rows.sort_by(|a, b| b.final_ema_reward.partial_cmp(&a.final_ema_reward).unwrap_or(std::cmp::Ordering::Equal));
    Ok(Comparison { rows })
}

impl Comparison {
    pub fn render_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<10} {:>16} {:>8} {:>8} {:>10}  {}", "algo", "final_ema_reward", "SR", "CR", "episodes", "dir");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<10} {:>16.4} {:>8.3} {:>8.3} {:>10}  {}",
                r.algo.as_str(),
                r.final_ema_reward,
                r.sr,
                r.cr,
                r.episodes,
                r.dir
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ActionCmd;
    use crate::env::{EnvConfig, NavEnv, RewardConfig};
    use crate::flow::{Frame, FlowSnapshotSet};
    use crate::geometry::{Rect, World};
    use crate::policy::PolicyNet;
    use crate::ppo::{evaluate, PolicyActor};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use std::sync::Arc;

    #[test]
    fn ema_limit_cases() {
        let series = [1.0, 5.0, -2.0, 0.5];
        assert_eq!(ema(&series, 1.0), series.to_vec());
        assert_eq!(ema(&series, 0.0), vec![1.0; 4]);
        assert!(ema(&[], 0.3).is_empty());
    }

    #[test]
    fn ema_matches_closed_form_weights() {
        // EMA_t = (1-a)^t v_0 + sum_{j=1..t} a (1-a)^(t-j) v_j
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let series: Vec<f64> = (0..50).map(|_| rng.random_range(-10.0..10.0)).collect();
        let alpha = 0.17;
        let smoothed = ema(&series, alpha);
        for t in 0..series.len() {
            let mut expect = (1.0 - alpha).powi(t as i32) * series[0];
            for j in 1..=t {
                expect += alpha * (1.0 - alpha).powi((t - j) as i32) * series[j];
            }
            assert!((smoothed[t] - expect).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn ema_is_bounded_by_series_range() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let series: Vec<f64> = (0..200).map(|_| rng.random_range(-3.0..7.0)).collect();
        let lo = series.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = series.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for v in ema(&series, 0.23) {
            assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
    }

    #[test]
    fn ema_series_push_matches_batch() {
        let series = [0.4, -1.0, 2.5, 2.5, 0.0];
        let batch = ema(&series, 0.3);
        let mut incremental = EmaSeries::new(0.3);
        for &v in &series {
            incremental.push(v);
        }
        assert_eq!(incremental.values, batch);
    }

    fn flat_flow() -> Arc<FlowSnapshotSet> {
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
            frames: vec![Frame { u: vec![0.5; n], v: vec![0.0; n] }],
        })
    }

    fn record_episode(seed: u64) -> crate::ppo::EpisodeRecord {
        let cfg = EnvConfig {
            world: World::new(Rect::new(-2.0, 4.0, 0.0, 3.0), vec![], 2.0, 0.5),
            flow: flat_flow(),
            max_steps: 80,
            target_radius: 0.15,
            start_region: Rect::new_region(-1.5, -0.5, 0.5, 2.5),
            target_region: Rect::new_region(2.5, 3.5, 0.5, 2.5),
            reward: RewardConfig::default(),
            dt: 0.0875,
        };
        let net = PolicyNet::new(crate::env::OBS_DIM, 21);
        let mut env = NavEnv::new(cfg).unwrap();
        let mut actor = PolicyActor::new(&net);
        let report = evaluate(&mut env, &mut actor, 1, seed, true).unwrap();
        report.records.into_iter().next().unwrap()
    }

    #[test]
    fn trajectory_export_rows_and_accounting() {
        let rec = record_episode(3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj_000.csv");
        export_trajectory(&rec, &path).unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), rec.steps.len() + 1);
        assert!(lines[0].starts_with("step,t,x,y"));
        assert_eq!(lines[0].split(',').count(), 18 + 9 + 1);

        let sidecar: TrajectorySidecar =
            serde_json::from_str(&std::fs::read_to_string(path.with_extension("json")).unwrap()).unwrap();
        let reward_sum: f64 = lines[1..]
            .iter()
            .map(|l| l.split(',').nth(10).unwrap().parse::<f64>().unwrap())
            .sum();
        assert!((reward_sum - sidecar.total_reward).abs() < 1e-9);
        assert_eq!(sidecar.steps, rec.steps.len());
    }

    #[test]
    fn trajectory_export_is_reproducible_from_seed() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        export_trajectory(&record_episode(9), &a).unwrap();
        export_trajectory(&record_episode(9), &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn action_stats_export_shape() {
        let rec = record_episode(5);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("actions.csv");
        export_action_stats(&rec, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), rec.steps.len() + 1);
        assert_eq!(lines[0], "step,mu1,mu2,sigma1,sigma2");
        // sigma columns populated even though evaluation is deterministic
        for l in &lines[1..] {
            let sigma1: f64 = l.split(',').nth(3).unwrap().parse().unwrap();
            assert!(sigma1 > 0.0);
        }
    }

    fn fake_run_dir(dir: &Path, algo: Algo, rewards: &[f64], sr: f64, cr: f64) {
        std::fs::create_dir_all(dir).unwrap();
        let rows: Vec<crate::ppo::EpisodeLogRow> = rewards
            .iter()
            .enumerate()
            .map(|(i, &r)| crate::ppo::EpisodeLogRow {
                episode: i + 1,
                reward: r,
                length: 10,
                outcome: Outcome::MaxSteps,
            })
            .collect();
        write_train_log(dir, &rows).unwrap();
        write_eval_log(
            dir,
            &[crate::ppo::EvalLogRow { batch: 1, sr, cr, mean_reward: rewards.iter().sum::<f64>() / rewards.len() as f64 }],
        )
        .unwrap();
        write_summary(
            dir,
            &RunSummary {
                algo,
                episodes: rewards.len(),
                best_sr: sr,
                final_sr: sr,
                final_cr: cr,
                final_ema_reward: 0.0,
                mean_reward_last_eval: 0.0,
                seed: 0,
            },
        )
        .unwrap();
    }

    #[test]
    fn compare_orders_by_final_ema() {
        let tmp = tempfile::tempdir().unwrap();
        let low = tmp.path().join("low");
        let high = tmp.path().join("high");
        fake_run_dir(&low, Algo::Td3, &vec![1.0; 50], 0.2, 0.3);
        fake_run_dir(&high, Algo::PpoLstm, &vec![5.0; 50], 0.9, 0.0);
        let cmp = compare_runs(&[low.clone(), high.clone()], DEFAULT_EMA_ALPHA).unwrap();
        assert_eq!(cmp.rows.len(), 2);
        assert_eq!(cmp.rows[0].algo, Algo::PpoLstm);
        assert!((cmp.rows[0].final_ema_reward - 5.0).abs() < 1e-12);
        let table = cmp.render_table();
        assert!(table.contains("ppo-lstm"));
        assert!(table.contains("td3"));
    }

    #[test]
    fn compare_duplicate_dirs_give_identical_rows() {
        let tmp = tempfile::tempdir().unwrap();
        let a = tmp.path().join("a");
        let b = tmp.path().join("b");
        let rewards: Vec<f64> = (0..40).map(|i| (i as f64 * 0.3).sin()).collect();
        fake_run_dir(&a, Algo::PpoFf, &rewards, 0.5, 0.1);
        fake_run_dir(&b, Algo::PpoFf, &rewards, 0.5, 0.1);
        let cmp = compare_runs(&[a, b], DEFAULT_EMA_ALPHA).unwrap();
        assert_eq!(cmp.rows[0].final_ema_reward, cmp.rows[1].final_ema_reward);
        assert_eq!(cmp.rows[0].sr, cmp.rows[1].sr);
    }

    #[test]
    fn compare_missing_logs_is_an_error() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("empty");
        std::fs::create_dir_all(&dir).unwrap();
        assert!(matches!(
            compare_runs(&[dir], DEFAULT_EMA_ALPHA),
            Err(HarnessError::MissingLog(_, "summary.json"))
        ));
    }

    #[test]
    fn single_run_table_has_one_row() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("solo");
        fake_run_dir(&dir, Algo::PpoLstm, &[2.0, 3.0, 4.0], 1.0, 0.0);
        let cmp = compare_runs(&[dir], DEFAULT_EMA_ALPHA).unwrap();
        assert_eq!(cmp.rows.len(), 1);
    }

    #[test]
    fn untrained_zero_head_net_exports_unit_sigma() {
        let mut net = PolicyNet::new(crate::env::OBS_DIM, 0);
        for l in [&mut net.head_mu, &mut net.head_log_sigma, &mut net.head_value] {
            l.w.iter_mut().for_each(|v| *v = 0.0);
            l.b.iter_mut().for_each(|v| *v = 0.0);
        }
        let cfg = EnvConfig {
            world: World::new(Rect::new(-2.0, 4.0, 0.0, 3.0), vec![], 2.0, 0.5),
            flow: flat_flow(),
            max_steps: 10,
            target_radius: 0.15,
            start_region: Rect::new_region(-1.0, -1.0, 1.5, 1.5),
            target_region: Rect::new_region(3.0, 3.0, 1.5, 1.5),
            reward: RewardConfig::default(),
            dt: 0.0875,
        };
        let mut env = NavEnv::new(cfg).unwrap();
        let mut actor = PolicyActor::new(&net);
        let report = evaluate(&mut env, &mut actor, 1, 7, true).unwrap();
        let rec = &report.records[0];
        for row in &rec.steps {
            assert_eq!(row.mu, [0.0, 0.0]);
            assert_eq!(row.sigma, [1.0, 1.0]);
            assert_eq!(row.action, ActionCmd { lin_acc: 0.0, ang_acc: 0.0 });
        }
    }
}
