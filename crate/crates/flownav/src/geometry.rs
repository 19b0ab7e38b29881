//! Obstacle layout, point containment and the ray sensor sweep.
//!
//! Obstacles are axis-aligned rectangles. Ray/rectangle intersection uses the
//! slab method with the usual guard for axis-parallel rays; the sensor sweep
//! casts 9 rays at fixed body-frame angles covering -pi..pi.

use crate::vec2::Vec2;
use std::f64::consts::PI;

pub const SENSOR_COUNT: usize = 9;

/// Axis-aligned rectangle, closed on all edges.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Rect {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

/// Obstacles are plain rectangles; the alias marks intent at call sites.
pub type Obstacle = Rect;

impl Rect {
    /// Panics if the extents are not well ordered.
    pub fn new(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Self {
        assert!(x_lo < x_hi && y_lo < y_hi, "rectangle extents must be ordered");
        Rect { x_lo, x_hi, y_lo, y_hi }
    }

    /// Degenerate rectangles (point regions) are allowed here.
    pub fn new_region(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Self {
        assert!(x_lo <= x_hi && y_lo <= y_hi, "region extents must be ordered");
        Rect { x_lo, x_hi, y_lo, y_hi }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.x_lo && p.x <= self.x_hi && p.y >= self.y_lo && p.y <= self.y_hi
    }

    pub fn width(&self) -> f64 {
        self.x_hi - self.x_lo
    }

    pub fn height(&self) -> f64 {
        self.y_hi - self.y_lo
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    /// Clamp a point to the nearest point inside the rectangle.
    pub fn clamp_point(&self, p: Vec2) -> Vec2 {
        Vec2::new(p.x.clamp(self.x_lo, self.x_hi), p.y.clamp(self.y_lo, self.y_hi))
    }
}

/// Domain bounds plus obstacle layout and sensor parameters.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct World {
    pub bounds: Rect,
    pub obstacles: Vec<Obstacle>,
    pub sensor_max_range: f64,
    pub lookahead: f64,
}

impl World {
    pub fn new(bounds: Rect, obstacles: Vec<Obstacle>, sensor_max_range: f64, lookahead: f64) -> Self {
        for o in &obstacles {
            assert!(
                o.x_lo >= bounds.x_lo && o.x_hi <= bounds.x_hi && o.y_lo >= bounds.y_lo && o.y_hi <= bounds.y_hi,
                "obstacle outside domain bounds"
            );
        }
        assert!(sensor_max_range > 0.0 && lookahead >= 0.0);
        World { bounds, obstacles, sensor_max_range, lookahead }
    }

    /// Domain and obstacles from the reference two-building layout.
    pub fn reference() -> Self {
        World::new(
            Rect::new(-2.0, 4.0, 0.0, 3.0),
            vec![Rect::new(-0.25, 0.25, 0.0, 1.0), Rect::new(1.25, 1.75, 0.0, 0.5)],
            2.0,
            0.5,
        )
    }

    pub fn point_in_obstacle(&self, p: Vec2) -> bool {
        self.obstacles.iter().any(|o| o.contains(p))
    }

    /// Distance along the ray to the first obstacle face or the domain
    /// boundary, whichever comes first; `None` when nothing lies within
    /// `max_range`.
    pub fn ray_cast(&self, origin: Vec2, angle: f64, max_range: f64) -> Option<f64> {
        let dir = Vec2::from_angle(angle);
        let mut best = ray_exit_bounds(&self.bounds, origin, dir);
        for o in &self.obstacles {
            if let Some(t) = ray_enter_rect(o, origin, dir) {
                if t < best {
                    best = t;
                }
            }
        }
        (best <= max_range).then_some(best)
    }

    /// Like `ray_cast` but ignoring the domain boundary.
    pub fn ray_cast_obstacles(&self, origin: Vec2, angle: f64, max_range: f64) -> Option<f64> {
        let dir = Vec2::from_angle(angle);
        let mut best = f64::INFINITY;
        for o in &self.obstacles {
            if let Some(t) = ray_enter_rect(o, origin, dir) {
                if t < best {
                    best = t;
                }
            }
        }
        (best <= max_range).then_some(best)
    }

    /// The 9 sensor readings at the fixed body-frame angles, saturated to
    /// `sensor_max_range` when nothing is hit. An origin already inside an
    /// obstacle reads 0 on every ray.
    pub fn sensor_sweep(&self, pos: Vec2, heading: f64) -> [f64; SENSOR_COUNT] {
        let mut readings = [self.sensor_max_range; SENSOR_COUNT];
        if self.point_in_obstacle(pos) {
            return [0.0; SENSOR_COUNT];
        }
        for (i, beta) in sensor_angles().iter().enumerate() {
            if let Some(t) = self.ray_cast(pos, heading + beta, self.sensor_max_range) {
                readings[i] = t;
            }
        }
        readings
    }

    /// True when no obstacle face lies within `lookahead` straight ahead.
    /// The domain boundary does not count.
    pub fn free_space_ahead(&self, pos: Vec2, heading: f64) -> bool {
        if self.lookahead == 0.0 {
            return true;
        }
        if self.point_in_obstacle(pos) {
            return false;
        }
        self.ray_cast_obstacles(pos, heading, self.lookahead).is_none()
    }
}

/// Body-frame sensor angles beta_i = -pi + i*(2pi/8), i = 0..=8.
/// beta_0 and beta_8 point the same way; both are kept.
pub fn sensor_angles() -> [f64; SENSOR_COUNT] {
    let mut betas = [0.0; SENSOR_COUNT];
    for (i, b) in betas.iter_mut().enumerate() {
        *b = -PI + i as f64 * (2.0 * PI / 8.0);
    }
    betas
}

/// Angle of the reading with the largest clearance. Ties go to the smallest
/// |beta|, and to the negative angle when both signs remain.
pub fn best_direction(readings: &[f64; SENSOR_COUNT], betas: &[f64; SENSOR_COUNT]) -> f64 {
    let mut best = 0usize;
    for i in 1..SENSOR_COUNT {
        let better = readings[i] > readings[best]
            || (readings[i] == readings[best]
                && (betas[i].abs() < betas[best].abs()
                    || (betas[i].abs() == betas[best].abs() && betas[i] < betas[best])));
        if better {
            best = i;
        }
    }
    betas[best]
}

/// Slab-method entry distance into a rectangle for a ray starting outside it.
/// Returns the smallest non-negative t with origin + t*dir on the boundary,
/// or `None` when the ray misses. Axis-parallel components reduce to an
/// interval containment test on that axis.
fn ray_enter_rect(r: &Rect, origin: Vec2, dir: Vec2) -> Option<f64> {
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;

    for (o, d, lo, hi) in [(origin.x, dir.x, r.x_lo, r.x_hi), (origin.y, dir.y, r.y_lo, r.y_hi)] {
        if d == 0.0 {
            if o < lo || o > hi {
                return None;
            }
        } else {
            let mut t0 = (lo - o) / d;
            let mut t1 = (hi - o) / d;
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            t_near = t_near.max(t0);
            t_far = t_far.min(t1);
            if t_near > t_far {
                return None;
            }
        }
    }
    if t_far < 0.0 {
        return None;
    }
    // Origin inside the rectangle counts as distance zero.
    Some(t_near.max(0.0))
}

/// Distance at which a ray starting inside the bounds leaves them.
fn ray_exit_bounds(bounds: &Rect, origin: Vec2, dir: Vec2) -> f64 {
    let mut t_exit = f64::INFINITY;
    for (o, d, lo, hi) in [
        (origin.x, dir.x, bounds.x_lo, bounds.x_hi),
        (origin.y, dir.y, bounds.y_lo, bounds.y_hi),
    ] {
        if d > 0.0 {
            t_exit = t_exit.min((hi - o) / d);
        } else if d < 0.0 {
            t_exit = t_exit.min((lo - o) / d);
        }
    }
    t_exit.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn containment_matches_reference_layout() {
        let w = World::reference();
        assert!(w.point_in_obstacle(Vec2::new(0.0, 0.5)));
        assert!(!w.point_in_obstacle(Vec2::new(3.0, 2.0)));
        // closed-set convention: the edge belongs to the obstacle
        assert!(w.point_in_obstacle(Vec2::new(0.25, 0.5)));
    }

    #[test]
    fn ray_hits_first_obstacle_face() {
        let w = World::reference();
        let t = w.ray_cast(Vec2::new(-1.0, 0.5), 0.0, 10.0).unwrap();
        assert!((t - 0.75).abs() < 1e-12);
    }

    #[test]
    fn ray_reaches_domain_boundary() {
        let w = World::reference();
        let t = w.ray_cast(Vec2::new(-1.0, 2.9), 0.0, 10.0).unwrap();
        assert!((t - 5.0).abs() < 1e-12);
    }

    #[test]
    fn short_range_misses() {
        let w = World::reference();
        assert!(w.ray_cast(Vec2::new(-1.0, 2.9), 0.0, 1.0).is_none());
    }

    #[test]
    fn axis_parallel_ray_outside_slab_misses() {
        let w = World::reference();
        // straight up from left of obstacle 1: never intersects it, exits at y=3
        let t = w.ray_cast(Vec2::new(-1.0, 0.5), PI / 2.0, 10.0).unwrap();
        assert!((t - 2.5).abs() < 1e-12);
    }

    #[test]
    fn sweep_saturates_in_open_space() {
        let w = World::new(Rect::new(-100.0, 100.0, -100.0, 100.0), vec![], 2.0, 0.5);
        let readings = w.sensor_sweep(Vec2::new(0.0, 0.0), 0.3);
        assert!(readings.iter().all(|&d| d == 2.0));
    }

    #[test]
    fn sweep_antipodal_duplicates_agree() {
        let w = World::reference();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let p = Vec2::new(rng.random_range(-1.9..3.9), rng.random_range(0.05..2.95));
            if w.point_in_obstacle(p) {
                continue;
            }
            let heading = rng.random_range(-PI..PI);
            let r = w.sensor_sweep(p, heading);
            assert!((r[0] - r[8]).abs() < 1e-9, "beta_0/beta_8 rays must match");
        }
    }

    #[test]
    fn sweep_heading_periodicity() {
        let w = World::reference();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let p = Vec2::new(rng.random_range(-1.9..3.9), rng.random_range(0.05..2.95));
            if w.point_in_obstacle(p) {
                continue;
            }
            let heading = rng.random_range(-PI..PI);
            let a = w.sensor_sweep(p, heading);
            let b = w.sensor_sweep(p, heading + 2.0 * PI);
            for i in 0..SENSOR_COUNT {
                assert!((a[i] - b[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sweep_sees_obstacle_at_paper_distance() {
        let w = World::reference();
        let r = w.sensor_sweep(Vec2::new(-1.0, 0.5), 0.0);
        // beta = 0 is index 4
        assert!((r[4] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn free_space_rules() {
        let w = World::reference();
        assert!(!w.free_space_ahead(Vec2::new(-0.6, 0.5), 0.0)); // face at 0.35
        assert!(w.free_space_ahead(Vec2::new(-0.6, 0.5), PI));
        let zero_look = World::new(w.bounds, w.obstacles.clone(), 2.0, 0.0);
        assert!(zero_look.free_space_ahead(Vec2::new(-0.6, 0.5), 0.0));
    }

    #[test]
    fn best_direction_tie_breaks() {
        let betas = sensor_angles();
        let equal = [1.0; SENSOR_COUNT];
        assert_eq!(best_direction(&equal, &betas), 0.0);

        let mut readings = [1.0; SENSOR_COUNT];
        readings[6] = 1.5; // beta = pi/2
        assert!((best_direction(&readings, &betas) - PI / 2.0).abs() < 1e-15);

        // left/right symmetric tie goes to the negative angle
        let mut sym = [1.0; SENSOR_COUNT];
        sym[2] = 1.5; // -pi/2
        sym[6] = 1.5; // +pi/2
        assert!((best_direction(&sym, &betas) + PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn best_direction_matches_exhaustive_oracle() {
        // oracle: scan all candidates, apply the stated tie rule directly
        fn oracle(readings: &[f64; SENSOR_COUNT], betas: &[f64; SENSOR_COUNT]) -> f64 {
            let dmax = readings.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut cands: Vec<f64> = (0..SENSOR_COUNT).filter(|&i| readings[i] == dmax).map(|i| betas[i]).collect();
            cands.sort_by(|a, b| (a.abs(), *a).partial_cmp(&(b.abs(), *b)).unwrap());
            cands[0]
        }
        let betas = sensor_angles();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let mut readings = [0.0; SENSOR_COUNT];
            for r in readings.iter_mut() {
                // quantized values force frequent ties
                *r = (rng.random_range(0..5) as f64) * 0.5;
            }
            assert_eq!(best_direction(&readings, &betas), oracle(&readings, &betas));
        }
    }

    #[test]
    fn ray_cast_boundary_straddle() {
        // point at t-eps is free, point at t+eps is inside an obstacle or out of bounds
        let w = World::reference();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let eps = 1e-9;
        for _ in 0..500 {
            let p = Vec2::new(rng.random_range(-1.9..3.9), rng.random_range(0.05..2.95));
            if w.point_in_obstacle(p) {
                continue;
            }
            let angle = rng.random_range(-PI..PI);
            if let Some(t) = w.ray_cast(p, angle, 10.0) {
                let dir = Vec2::from_angle(angle);
                let before = p + dir * (t - eps);
                let after = p + dir * (t + eps);
                if t > eps {
                    assert!(!w.point_in_obstacle(before), "free side breached at t={t}");
                }
                let after_blocked = w.point_in_obstacle(after) || !w.bounds.contains(after);
                // within floating tolerance the crossing may take a few ulps
                if !after_blocked {
                    let after_loose = p + dir * (t + 1e-6);
                    assert!(
                        w.point_in_obstacle(after_loose) || !w.bounds.contains(after_loose),
                        "no containment flip past t={t}"
                    );
                }
            }
        }
    }
}
