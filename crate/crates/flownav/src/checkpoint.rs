//! Versioned binary checkpoints: magic "NNCK", an architecture descriptor,
//! all parameters as little-endian f64 in declaration order, and optionally
//! the Adam moments and step counter for mid-training saves.

use crate::nn::{Activation, Adam, Mlp};
use crate::policy::{FfPolicyNet, PolicyNet, PpoPolicy};
use std::fs;
use std::path::Path;

pub const NNCK_MAGIC: &[u8; 4] = b"NNCK";
pub const NNCK_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("malformed checkpoint at byte {offset}: {what}")]
    Malformed { offset: usize, what: String },
    #[error("checkpoint truncated at byte {offset}")]
    Truncated { offset: usize },
    #[error("architecture mismatch: stored {stored:?}, expected {expected:?}")]
    ArchMismatch { stored: Vec<u32>, expected: Vec<u32> },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which trainer produced a checkpoint; doubles as the algorithm tag in logs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    PpoLstm,
    PpoFf,
    Td3,
}

impl Algo {
    pub fn as_str(self) -> &'static str {
        match self {
            Algo::PpoLstm => "ppo-lstm",
            Algo::PpoFf => "ppo",
            Algo::Td3 => "td3",
        }
    }

    pub fn parse(s: &str) -> Option<Algo> {
        match s {
            "ppo-lstm" => Some(Algo::PpoLstm),
            "ppo" | "ppo-ff" => Some(Algo::PpoFf),
            "td3" => Some(Algo::Td3),
            _ => None,
        }
    }

    fn tag(self) -> u32 {
        match self {
            Algo::PpoLstm => 1,
            Algo::PpoFf => 2,
            Algo::Td3 => 3,
        }
    }

    fn from_tag(t: u32) -> Option<Algo> {
        match t {
            1 => Some(Algo::PpoLstm),
            2 => Some(Algo::PpoFf),
            3 => Some(Algo::Td3),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdamState {
    pub t: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub algo: Algo,
    pub arch: Vec<u32>,
    pub params: Vec<f64>,
    pub adam: Option<AdamState>,
}

pub fn save_checkpoint(
    path: &Path,
    algo: Algo,
    arch: &[u32],
    params: &[f64],
    adam: Option<&Adam>,
) -> Result<(), CheckpointError> {
    let mut out = Vec::with_capacity(32 + params.len() * 8);
    out.extend_from_slice(NNCK_MAGIC);
    out.extend_from_slice(&NNCK_VERSION.to_le_bytes());
    out.extend_from_slice(&algo.tag().to_le_bytes());
    out.extend_from_slice(&(arch.len() as u32).to_le_bytes());
    for a in arch {
        out.extend_from_slice(&a.to_le_bytes());
    }
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for p in params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    match adam {
        Some(opt) => {
            out.push(1);
            out.extend_from_slice(&opt.t.to_le_bytes());
            for v in opt.m.iter().chain(opt.v.iter()) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        None => out.push(0),
    }
    fs::write(path, out)?;
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    offset: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.offset + n > self.buf.len() {
            return Err(CheckpointError::Truncated { offset: self.offset });
        }
        let s = &self.buf[self.offset..self.offset + n];
        self.offset += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64_vec(&mut self, n: usize) -> Result<Vec<f64>, CheckpointError> {
        let bytes = self.take(n * 8)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let buf = fs::read(path)?;
    let mut r = Reader { buf: &buf, offset: 0 };
    if r.take(4)? != NNCK_MAGIC {
        return Err(CheckpointError::Malformed { offset: 0, what: "bad magic".into() });
    }
    let version = r.u32()?;
    if version != NNCK_VERSION {
        return Err(CheckpointError::Malformed { offset: 4, what: format!("unsupported version {version}") });
    }
    let algo = Algo::from_tag(r.u32()?)
        .ok_or(CheckpointError::Malformed { offset: 8, what: "unknown algorithm tag".into() })?;
    let n_arch = r.u32()? as usize;
    let mut arch = Vec::with_capacity(n_arch);
    for _ in 0..n_arch {
        arch.push(r.u32()?);
    }
    let n_params = r.u64()? as usize;
    let params = r.f64_vec(n_params)?;
    let has_adam = r.take(1)?[0];
    let adam = if has_adam == 1 {
        let t = r.u64()?;
        let m = r.f64_vec(n_params)?;
        let v = r.f64_vec(n_params)?;
        Some(AdamState { t, m, v })
    } else {
        None
    };
    Ok(Checkpoint { algo, arch, params, adam })
}

/// A policy reconstructed from a checkpoint, ready for evaluation.
pub enum LoadedPolicy {
    PpoLstm(PolicyNet),
    PpoFf(FfPolicyNet),
    /// TD3 stores the deterministic actor only.
    Td3Actor(Mlp),
}

impl LoadedPolicy {
    pub fn algo(&self) -> Algo {
        match self {
            LoadedPolicy::PpoLstm(_) => Algo::PpoLstm,
            LoadedPolicy::PpoFf(_) => Algo::PpoFf,
            LoadedPolicy::Td3Actor(_) => Algo::Td3,
        }
    }
}

pub fn load_policy(path: &Path) -> Result<LoadedPolicy, CheckpointError> {
    let ck = load_checkpoint(path)?;
    let expect_params = |have: usize, want: usize| {
        if have != want {
            Err(CheckpointError::Malformed {
                offset: 0,
                what: format!("parameter count {have} does not match architecture ({want})"),
            })
        } else {
            Ok(())
        }
    };
    match ck.algo {
        Algo::PpoLstm => {
            let mut net = PolicyNet::new(ck.arch.first().copied().unwrap_or(0) as usize, 0);
            if net.arch() != ck.arch {
                return Err(CheckpointError::ArchMismatch { stored: ck.arch, expected: net.arch() });
            }
            expect_params(ck.params.len(), net.n_params())?;
            net.set_flat_params(&ck.params);
            Ok(LoadedPolicy::PpoLstm(net))
        }
        Algo::PpoFf => {
            let mut net = FfPolicyNet::new(ck.arch.first().copied().unwrap_or(0) as usize, 0);
            if net.arch() != ck.arch {
                return Err(CheckpointError::ArchMismatch { stored: ck.arch, expected: net.arch() });
            }
            expect_params(ck.params.len(), net.n_params())?;
            net.set_flat_params(&ck.params);
            Ok(LoadedPolicy::PpoFf(net))
        }
        Algo::Td3 => {
            let dims: Vec<usize> = ck.arch.iter().map(|&a| a as usize).collect();
            if dims.len() < 2 {
                return Err(CheckpointError::Malformed { offset: 0, what: "actor needs at least two layers".into() });
            }
            let mut rng = rand::SeedableRng::seed_from_u64(0);
            let mut actor = Mlp::new(&dims, Activation::Relu, Activation::Tanh, &mut rng);
            expect_params(ck.params.len(), actor.n_params())?;
            actor.set_flat_params(&ck.params);
            Ok(LoadedPolicy::Td3Actor(actor))
        }
    }
}
