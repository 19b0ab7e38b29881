//! Time-resolved 2D velocity snapshots: loading, synthesis and sampling.
//!
//! Snapshots live on a uniform node-centered grid with nodes at both extents.
//! Velocities are in freestream units, distances in obstacle-height units.
//! The on-disk FLOW1 format is a little-endian binary blob; a plain-text
//! variant exists for tests and quick inspection.

use crate::geometry::Obstacle;
use crate::vec2::Vec2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::fs;
use std::io::Write;
use std::path::Path;

pub const FLOW1_MAGIC: &[u8; 4] = b"FLW1";

#[derive(Debug, thiserror::Error)]
pub enum FlowError {
    #[error("malformed flow file at byte {offset}: {what}")]
    Malformed { offset: usize, what: String },
    #[error("truncated flow file: needed {needed} bytes at offset {offset}, found {found}")]
    Truncated { offset: usize, needed: usize, found: usize },
    #[error("non-finite velocity at byte {offset} (frame {frame})")]
    NonFinite { offset: usize, frame: usize },
    #[error("empty snapshot set")]
    Empty,
    #[error("frame index {frame} out of range ({frames} frames)")]
    FrameOutOfRange { frame: usize, frames: usize },
    #[error("position ({x}, {y}) outside domain extents")]
    OutOfDomain { x: f64, y: f64 },
    #[error("invalid flow parameters: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One snapshot: U and V on the grid, row-major with x varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Time-ordered velocity snapshots on a uniform 2D grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSnapshotSet {
    pub nx: usize,
    pub ny: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub dt_snap: f64,
    pub frames: Vec<Frame>,
}

impl FlowSnapshotSet {
    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }

    fn node(&self, frame: &Frame, ix: usize, iy: usize) -> Vec2 {
        let idx = iy * self.nx + ix;
        Vec2::new(frame.u[idx], frame.v[idx])
    }

    fn validate(&self) -> Result<(), FlowError> {
        if self.frames.is_empty() {
            return Err(FlowError::Empty);
        }
        if self.nx < 2 || self.ny < 2 {
            return Err(FlowError::BadConfig(format!("grid {}x{} too small", self.nx, self.ny)));
        }
        if !(self.x_min < self.x_max && self.y_min < self.y_max) {
            return Err(FlowError::BadConfig("extents not ordered".into()));
        }
        if !(self.dt_snap > 0.0) {
            return Err(FlowError::BadConfig("dt_snap must be positive".into()));
        }
        Ok(())
    }

    /// Bilinear sample of the stored velocity at `p`, for the given frame.
    /// Positions inside an obstacle footprint read (0, 0); positions outside
    /// the extents are an error the caller turns into boundary handling.
    pub fn sample_velocity(&self, frame: usize, p: Vec2, obstacles: &[Obstacle]) -> Result<Vec2, FlowError> {
        if frame >= self.frames.len() {
            return Err(FlowError::FrameOutOfRange { frame, frames: self.frames.len() });
        }
        if p.x < self.x_min || p.x > self.x_max || p.y < self.y_min || p.y > self.y_max {
            return Err(FlowError::OutOfDomain { x: p.x, y: p.y });
        }
        if obstacles.iter().any(|o| o.contains(p)) {
            return Ok(Vec2::ZERO);
        }
        let f = &self.frames[frame];
        let fx = ((p.x - self.x_min) / self.dx()).clamp(0.0, (self.nx - 1) as f64);
        let fy = ((p.y - self.y_min) / self.dy()).clamp(0.0, (self.ny - 1) as f64);
        let ix = (fx.floor() as usize).min(self.nx - 2);
        let iy = (fy.floor() as usize).min(self.ny - 2);
        let tx = fx - ix as f64;
        let ty = fy - iy as f64;

        let v00 = self.node(f, ix, iy);
        let v10 = self.node(f, ix + 1, iy);
        let v01 = self.node(f, ix, iy + 1);
        let v11 = self.node(f, ix + 1, iy + 1);

        let bottom = v00 * (1.0 - tx) + v10 * tx;
        let top = v01 * (1.0 - tx) + v11 * tx;
        Ok(bottom * (1.0 - ty) + top * ty)
    }

    /// Maximum |(U,V)| over all nodes of all frames.
    pub fn max_speed(&self) -> f64 {
        let mut best = 0.0f64;
        for f in &self.frames {
            for i in 0..f.u.len() {
                let s = f.u[i].hypot(f.v[i]);
                if s > best {
                    best = s;
                }
            }
        }
        best
    }
}

/// Parameters for the synthetic substitute field: a uniform stream in +x plus
/// advected counter-rotating vortices, zeroed inside obstacle footprints.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SynthFlowConfig {
    pub n_frames: usize,
    pub nx: usize,
    pub ny: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub dt_snap: f64,
    pub mean_speed: f64,
    pub vortex_strength: f64,
    pub vortex_count: usize,
    pub obstacles: Vec<Obstacle>,
}

impl SynthFlowConfig {
    /// Grid, extents and cadence matching the reference dataset description.
    pub fn reference(obstacles: Vec<Obstacle>) -> Self {
        SynthFlowConfig {
            n_frames: 300,
            nx: 241,
            ny: 121,
            x_min: -2.0,
            x_max: 4.0,
            y_min: 0.0,
            y_max: 3.0,
            dt_snap: 0.08750,
            mean_speed: 1.0,
            vortex_strength: 0.4,
            vortex_count: 12,
            obstacles,
        }
    }
}

struct Vortex {
    x0: f64,
    y: f64,
    core: f64,
    strength: f64, // signed
    advect: f64,
}

/// Smooth 0..1 ramp of the wall-normal distance to the nearest obstacle
/// face, emulating the no-slip sheltering of the boundary layer. Zero on the
/// face, one past `NO_SLIP_LAYER`.
const NO_SLIP_LAYER: f64 = 0.25;

fn wall_shelter(p: Vec2, obstacles: &[Obstacle]) -> f64 {
    let mut factor = 1.0f64;
    for o in obstacles {
        let dx = (o.x_lo - p.x).max(p.x - o.x_hi).max(0.0);
        let dy = (o.y_lo - p.y).max(p.y - o.y_hi).max(0.0);
        let d = dx.hypot(dy);
        let t = (d / NO_SLIP_LAYER).clamp(0.0, 1.0);
        factor = factor.min(t * t * (3.0 - 2.0 * t));
    }
    factor
}

/// Deterministic synthetic snapshot set for a given seed.
pub fn synth_flow(cfg: &SynthFlowConfig, seed: u64) -> Result<FlowSnapshotSet, FlowError> {
    if cfg.n_frames == 0 || cfg.nx < 2 || cfg.ny < 2 {
        return Err(FlowError::BadConfig("counts must be positive (grid at least 2x2)".into()));
    }
    if !(cfg.x_min < cfg.x_max && cfg.y_min < cfg.y_max) {
        return Err(FlowError::BadConfig("extents not ordered".into()));
    }
    if !(cfg.dt_snap > 0.0) {
        return Err(FlowError::BadConfig("dt_snap must be positive".into()));
    }

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let lx = cfg.x_max - cfg.x_min;
    let vortices: Vec<Vortex> = (0..cfg.vortex_count)
        .map(|k| Vortex {
            x0: rng.random_range(cfg.x_min..cfg.x_max),
            y: rng.random_range(cfg.y_min..cfg.y_max),
            core: rng.random_range(0.45..0.95),
            strength: cfg.vortex_strength
                * rng.random_range(0.6..1.0)
                * if k % 2 == 0 { 1.0 } else { -1.0 },
            advect: cfg.mean_speed * rng.random_range(0.7..1.0),
        })
        .collect();

    let n = cfg.nx * cfg.ny;
    let mut frames = Vec::with_capacity(cfg.n_frames);
    let dx = lx / (cfg.nx - 1) as f64;
    let dy = (cfg.y_max - cfg.y_min) / (cfg.ny - 1) as f64;

    for fi in 0..cfg.n_frames {
        let t = fi as f64 * cfg.dt_snap;
        let mut u = vec![cfg.mean_speed; n];
        let mut v = vec![0.0; n];
        for vx in &vortices {
            // wrap the advected center periodically over the x extent
            let cx = cfg.x_min + (vx.x0 - cfg.x_min + vx.advect * t).rem_euclid(lx);
            for iy in 0..cfg.ny {
                let py = cfg.y_min + iy as f64 * dy;
                for ix in 0..cfg.nx {
                    let px = cfg.x_min + ix as f64 * dx;
                    let idx = iy * cfg.nx + ix;
                    // periodic images keep the field smooth at the wrap
                    // seam; ground images enforce no-penetration at y_min
                    for image in [-lx, 0.0, lx] {
                        for (cy, sign) in [(vx.y, 1.0), (2.0 * cfg.y_min - vx.y, -1.0)] {
                            let rx = px - (cx + image);
                            let ry = py - cy;
                            let r2 = (rx * rx + ry * ry) / (vx.core * vx.core);
                            if r2 > 40.0 {
                                continue;
                            }
                            let coef = sign * vx.strength / vx.core * (0.5 * (1.0 - r2)).exp();
                            u[idx] += -ry * coef;
                            v[idx] += rx * coef;
                        }
                    }
                }
            }
        }
        for iy in 0..cfg.ny {
            let py = cfg.y_min + iy as f64 * dy;
            for ix in 0..cfg.nx {
                let px = cfg.x_min + ix as f64 * dx;
                let idx = iy * cfg.nx + ix;
                let p = Vec2::new(px, py);
                if cfg.obstacles.iter().any(|o| o.contains(p)) {
                    u[idx] = 0.0;
                    v[idx] = 0.0;
                } else {
                    let shelter = wall_shelter(p, &cfg.obstacles);
                    u[idx] *= shelter;
                    v[idx] *= shelter;
                }
            }
        }
        frames.push(Frame { u, v });
    }

    let set = FlowSnapshotSet {
        nx: cfg.nx,
        ny: cfg.ny,
        x_min: cfg.x_min,
        x_max: cfg.x_max,
        y_min: cfg.y_min,
        y_max: cfg.y_max,
        dt_snap: cfg.dt_snap,
        frames,
    };
    set.validate()?;
    Ok(set)
}

// --- FLOW1 binary format ---------------------------------------------------

struct Reader<'a> {
    buf: &'a [u8],
    offset: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FlowError> {
        if self.offset + n > self.buf.len() {
            return Err(FlowError::Truncated {
                offset: self.offset,
                needed: n,
                found: self.buf.len() - self.offset,
            });
        }
        let s = &self.buf[self.offset..self.offset + n];
        self.offset += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, FlowError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, FlowError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn save_flow(set: &FlowSnapshotSet, path: &Path) -> Result<(), FlowError> {
    set.validate()?;
    let n = set.nx * set.ny;
    let mut out = Vec::with_capacity(4 + 12 + 40 + set.frames.len() * n * 16);
    out.extend_from_slice(FLOW1_MAGIC);
    out.extend_from_slice(&(set.nx as u32).to_le_bytes());
    out.extend_from_slice(&(set.ny as u32).to_le_bytes());
    out.extend_from_slice(&(set.frames.len() as u32).to_le_bytes());
    for v in [set.x_min, set.x_max, set.y_min, set.y_max, set.dt_snap] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for f in &set.frames {
        for val in f.u.iter().chain(f.v.iter()) {
            out.extend_from_slice(&val.to_le_bytes());
        }
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&out)?;
    Ok(())
}

pub fn load_flow(path: &Path) -> Result<FlowSnapshotSet, FlowError> {
    let buf = fs::read(path)?;
    if buf.len() >= 4 && &buf[..4] == FLOW1_MAGIC {
        load_flow_binary(&buf)
    } else {
        load_flow_text(std::str::from_utf8(&buf).map_err(|e| FlowError::Malformed {
            offset: e.valid_up_to(),
            what: "neither FLW1 magic nor UTF-8 text".into(),
        })?)
    }
}

fn load_flow_binary(buf: &[u8]) -> Result<FlowSnapshotSet, FlowError> {
    let mut r = Reader { buf, offset: 0 };
    let magic = r.take(4)?;
    if magic != FLOW1_MAGIC {
        return Err(FlowError::Malformed { offset: 0, what: "bad magic".into() });
    }
    let nx = r.u32()? as usize;
    let ny = r.u32()? as usize;
    let n_frames = r.u32()? as usize;
    if n_frames == 0 {
        return Err(FlowError::Empty);
    }
    if nx < 2 || ny < 2 {
        return Err(FlowError::Malformed { offset: 4, what: format!("grid {nx}x{ny} too small") });
    }
    let x_min = r.f64()?;
    let x_max = r.f64()?;
    let y_min = r.f64()?;
    let y_max = r.f64()?;
    let dt_snap = r.f64()?;
    if !(x_min < x_max && y_min < y_max) || !(dt_snap > 0.0) {
        return Err(FlowError::Malformed { offset: 16, what: "extents or dt_snap invalid".into() });
    }
    let n = nx * ny;
    let mut frames = Vec::with_capacity(n_frames);
    for fi in 0..n_frames {
        let read_grid = |r: &mut Reader| -> Result<Vec<f64>, FlowError> {
            let mut g = Vec::with_capacity(n);
            for _ in 0..n {
                let off = r.offset;
                let val = r.f64()?;
                if !val.is_finite() {
                    return Err(FlowError::NonFinite { offset: off, frame: fi });
                }
                g.push(val);
            }
            Ok(g)
        };
        let u = read_grid(&mut r)?;
        let v = read_grid(&mut r)?;
        frames.push(Frame { u, v });
    }
    Ok(FlowSnapshotSet { nx, ny, x_min, x_max, y_min, y_max, dt_snap, frames })
}

// --- plain-text manifest variant --------------------------------------------

/// Header line `nx,ny,n_frames,x_min,x_max,y_min,y_max,dt_snap`, then per
/// frame one CSV line of U values and one of V values.
pub fn save_flow_text(set: &FlowSnapshotSet, path: &Path) -> Result<(), FlowError> {
    set.validate()?;
    let mut s = format!(
        "{},{},{},{},{},{},{},{}\n",
        set.nx, set.ny, set.frames.len(), set.x_min, set.x_max, set.y_min, set.y_max, set.dt_snap
    );
    for f in &set.frames {
        for (k, val) in f.u.iter().enumerate() {
            if k > 0 {
                s.push(',');
            }
            s.push_str(&format!("{val}"));
        }
        s.push('\n');
        for (k, val) in f.v.iter().enumerate() {
            if k > 0 {
                s.push(',');
            }
            s.push_str(&format!("{val}"));
        }
        s.push('\n');
    }
    fs::write(path, s)?;
    Ok(())
}

fn load_flow_text(text: &str) -> Result<FlowSnapshotSet, FlowError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or(FlowError::Malformed { offset: 0, what: "missing header".into() })?;
    let fields: Vec<&str> = header.split(',').collect();
    if fields.len() != 8 {
        return Err(FlowError::Malformed { offset: 0, what: format!("header needs 8 fields, got {}", fields.len()) });
    }
    let parse_usize = |s: &str| s.trim().parse::<usize>().map_err(|_| FlowError::Malformed {
        offset: 0,
        what: format!("bad integer {s:?} in header"),
    });
    let parse_f64 = |s: &str| s.trim().parse::<f64>().map_err(|_| FlowError::Malformed {
        offset: 0,
        what: format!("bad number {s:?} in header"),
    });
    let nx = parse_usize(fields[0])?;
    let ny = parse_usize(fields[1])?;
    let n_frames = parse_usize(fields[2])?;
    if n_frames == 0 {
        return Err(FlowError::Empty);
    }
    let x_min = parse_f64(fields[3])?;
    let x_max = parse_f64(fields[4])?;
    let y_min = parse_f64(fields[5])?;
    let y_max = parse_f64(fields[6])?;
    let dt_snap = parse_f64(fields[7])?;
    let n = nx.checked_mul(ny).unwrap_or(0);
    if nx < 2 || ny < 2 {
        return Err(FlowError::Malformed { offset: 0, what: format!("grid {nx}x{ny} too small") });
    }

    let mut offset = header.len() + 1;
    let mut frames = Vec::with_capacity(n_frames);
    for fi in 0..n_frames {
        let grid = |what: &str, lines: &mut std::str::Lines, offset: &mut usize| -> Result<Vec<f64>, FlowError> {
            let line = lines.next().ok_or(FlowError::Truncated { offset: *offset, needed: n * 2, found: 0 })?;
            let vals: Result<Vec<f64>, FlowError> = line
                .split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|_| FlowError::Malformed {
                        offset: *offset,
                        what: format!("bad {what} value {s:?} in frame {fi}"),
                    })
                })
                .collect();
            let vals = vals?;
            if vals.len() != n {
                return Err(FlowError::Truncated { offset: *offset, needed: n, found: vals.len() });
            }
            if let Some(bad) = vals.iter().position(|v| !v.is_finite()) {
                let _ = bad;
                return Err(FlowError::NonFinite { offset: *offset, frame: fi });
            }
            *offset += line.len() + 1;
            Ok(vals)
        };
        let u = grid("U", &mut lines, &mut offset)?;
        let v = grid("V", &mut lines, &mut offset)?;
        frames.push(Frame { u, v });
    }
    let set = FlowSnapshotSet { nx, ny, x_min, x_max, y_min, y_max, dt_snap, frames };
    set.validate()?;
    Ok(set)
}
