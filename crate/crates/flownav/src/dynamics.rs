//! Point-mass vehicle state and equations of motion under an ambient flow,
//! integrated with classical fourth-order Runge-Kutta.
//!
//! The vehicle's own velocity is bounded in magnitude; the commanded linear
//! and angular accelerations are bounded componentwise.

use crate::vec2::{wrap_angle, Vec2};
use std::f64::consts::PI;

pub const LIN_ACC_BOUND: f64 = 3.0;
pub const ANG_ACC_BOUND: f64 = PI / 4.0;

#[derive(Debug, thiserror::Error)]
pub enum DynamicsError {
    #[error("non-finite state after integration step (dt={dt}); check flow data and config")]
    NonFinite { dt: f64 },
}

/// Vehicle state: position, heading in (-pi, pi], own velocity (global frame,
/// flow excluded) and angular rate.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct UavState {
    pub pos: Vec2,
    pub theta: f64,
    pub vel: Vec2,
    pub omega: f64,
}

impl UavState {
    pub fn at_rest(pos: Vec2, theta: f64) -> Self {
        UavState { pos, theta: wrap_angle(theta), vel: Vec2::ZERO, omega: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.pos.is_finite() && self.theta.is_finite() && self.vel.is_finite() && self.omega.is_finite()
    }
}

/// Commanded linear and angular acceleration.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ActionCmd {
    pub lin_acc: f64,
    pub ang_acc: f64,
}

impl ActionCmd {
    /// Clip an arbitrary pair into the admissible box.
    pub fn clipped(lin_acc: f64, ang_acc: f64) -> Self {
        ActionCmd {
            lin_acc: lin_acc.clamp(-LIN_ACC_BOUND, LIN_ACC_BOUND),
            ang_acc: ang_acc.clamp(-ANG_ACC_BOUND, ANG_ACC_BOUND),
        }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.lin_acc, self.ang_acc]
    }
}

/// Time derivative of the state at a given flow velocity.
#[derive(Debug, Clone, Copy)]
pub struct StateDeriv {
    pub d_pos: Vec2,
    pub d_vel: Vec2,
    pub d_theta: f64,
    pub d_omega: f64,
}

/// dx/dt = v + flow; dv/dt = a (cos th, sin th); dth/dt = w; dw/dt = wdot.
pub fn derivative(s: &UavState, u: &ActionCmd, flow: Vec2) -> StateDeriv {
    StateDeriv {
        d_pos: s.vel + flow,
        d_vel: Vec2::from_angle(s.theta) * u.lin_acc,
        d_theta: s.omega,
        d_omega: u.ang_acc,
    }
}

fn advance(s: &UavState, d: &StateDeriv, h: f64) -> UavState {
    UavState {
        pos: s.pos + d.d_pos * h,
        theta: s.theta + d.d_theta * h, // wrapped only after the full step
        vel: s.vel + d.d_vel * h,
        omega: s.omega + d.d_omega * h,
    }
}

/// Rescale `v` onto the cap when its magnitude exceeds it.
pub fn clamp_speed(v: Vec2, cap: f64) -> Vec2 {
    let n = v.norm();
    if n > cap {
        v * (cap / n)
    } else {
        v
    }
}

/// One classical RK4 step with the flow re-sampled at each stage position.
/// The frame is frozen for the duration of the step. After the update the
/// heading is re-wrapped and the own-velocity magnitude clamped to
/// `speed_cap` with direction preserved.
pub fn rk4_step(
    s: &UavState,
    u: &ActionCmd,
    flow_at: impl Fn(Vec2) -> Vec2,
    dt: f64,
    speed_cap: f64,
) -> Result<UavState, DynamicsError> {
    debug_assert!(dt > 0.0);
    let k1 = derivative(s, u, flow_at(s.pos));
    let s2 = advance(s, &k1, dt / 2.0);
    let k2 = derivative(&s2, u, flow_at(s2.pos));
    let s3 = advance(s, &k2, dt / 2.0);
    let k3 = derivative(&s3, u, flow_at(s3.pos));
    let s4 = advance(s, &k3, dt);
    let k4 = derivative(&s4, u, flow_at(s4.pos));

    let sixth = dt / 6.0;
    let mut out = UavState {
        pos: s.pos + (k1.d_pos + (k2.d_pos + k3.d_pos) * 2.0 + k4.d_pos) * sixth,
        vel: s.vel + (k1.d_vel + (k2.d_vel + k3.d_vel) * 2.0 + k4.d_vel) * sixth,
        theta: s.theta + (k1.d_theta + 2.0 * (k2.d_theta + k3.d_theta) + k4.d_theta) * sixth,
        omega: s.omega + (k1.d_omega + 2.0 * (k2.d_omega + k3.d_omega) + k4.d_omega) * sixth,
    };
    out.theta = wrap_angle(out.theta);
    out.vel = clamp_speed(out.vel, speed_cap);
    if !out.is_finite() {
        return Err(DynamicsError::NonFinite { dt });
    }
    Ok(out)
}
