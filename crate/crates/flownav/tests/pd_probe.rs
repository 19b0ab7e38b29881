// scratch diagnostic: competent-pilot ceiling for the reference task
use flownav::config::RunConfig;
use flownav::dynamics::ActionCmd;
use flownav::env::{NavEnv, Outcome};
use flownav::geometry::Rect;
use flownav::vec2::{wrap_angle, Vec2};

fn run_probe(mean_speed: f64, dt: f64, regions: bool, label: &str) {
    let mut cfg = RunConfig::default();
    cfg.flow.mean_speed = mean_speed;
    cfg.env.dt = dt;
    if regions {
        cfg.env.start_region = Rect::new_region(-1.8, -0.8, 0.2, 2.8);
        cfg.env.target_region = Rect::new_region(2.0, 3.0, 0.2, 2.8);
    }
    let flow = cfg.build_flow(std::path::Path::new(".")).unwrap();
    let env_cfg = cfg.build_env(flow.clone());
    let mut env = NavEnv::new(env_cfg).unwrap();
    let mut counts = [0usize; 4];
    let mut oob_where: Vec<String> = Vec::new();
    let mut crash_where: Vec<String> = Vec::new();
    let n = 200;
    for seed in 0..n {
        env.reset(seed as u64).unwrap();
        loop {
            let s = *env.state();
            let target = env.target();
            let frame = env.frame();
            let d0 = (target - s.pos).norm();
            // privileged line-of-sight routing: climb over the blocking
            // obstacle when the direct segment is obstructed
            let mut aim = target;
            for o in &env.config().world.obstacles {
                let blocked = {
                    let d = target - s.pos;
                    let len = d.norm().max(1e-9);
                    let angle = d.y.atan2(d.x);
                    match env.config().world.ray_cast_obstacles(s.pos, angle, len) {
                        Some(t) => {
                            let hit = s.pos + d * (t / len);
                            hit.x >= o.x_lo - 1e-9 && hit.x <= o.x_hi + 1e-9 && hit.y <= o.y_hi + 1e-9
                        }
                        None => false,
                    }
                };
                if blocked {
                    let gx = if s.pos.x < o.x_lo { o.x_lo - 0.35 } else { o.x_hi + 0.35 };
                    aim = Vec2::new(gx.max(s.pos.x.min(o.x_hi + 0.35)), o.y_hi + 0.55);
                    // once past the roof line, resume toward the target
                    if s.pos.y > o.y_hi + 0.35 && s.pos.x < o.x_hi {
                        aim = Vec2::new(o.x_hi + 0.4, o.y_hi + 0.55);
                    }
                    break;
                }
            }
            let to_t = aim - s.pos;
            let da = to_t.norm();
            let local_flow = flow
                .sample_velocity(frame, s.pos, &env.config().world.obstacles)
                .unwrap_or(Vec2::ZERO);
            // desired ground velocity: approach the aim point, slowing near
            // the real target only
            let v_des = to_t * (1.0 / da.max(1e-9)) * (1.8 * d0).min(1.3);
            // own-velocity demand compensates the flow
            let mut v_own_des = v_des - local_flow;
            // obstacle swerve: if the lookahead ray is blocked, bias the
            // demand toward the best sensed direction
            let rays = env.config().world.sensor_sweep(s.pos, s.theta);
            let dmin = rays.iter().cloned().fold(f64::INFINITY, f64::min);
            if !env.config().world.free_space_ahead(s.pos, s.theta) || dmin < 0.4 {
                let betas = flownav::geometry::sensor_angles();
                let best = flownav::geometry::best_direction(&rays, &betas);
                let dir = Vec2::from_angle(s.theta + best);
                v_own_des = v_own_des * 0.3 + dir * 1.0;
            }
            let v_err = v_own_des - s.vel;
            let want_heading = if v_err.norm() > 0.05 { v_err.angle() } else { s.theta };
            let phi = wrap_angle(want_heading - s.theta);
            let wdot = (4.0 * phi - 5.0 * s.omega).clamp(-0.785, 0.785);
            let heading = Vec2::from_angle(s.theta);
            let a = (4.0 * v_err.dot(heading)).clamp(-3.0, 3.0);
            let r = env.step(ActionCmd { lin_acc: a, ang_acc: wdot });
            match r.outcome {
                Outcome::Running => continue,
                Outcome::TargetReached => {
                    counts[0] += 1;
                    break;
                }
                Outcome::CrashedObstacle => {
                    counts[1] += 1;
                    let p = r.info.state.pos;
                    let which = if p.x < 0.7 { "OB1" } else { "OB2" };
                    crash_where.push(format!("{which}@({:.2},{:.2})s{}", p.x, p.y, env.steps()));
                    break;
                }
                Outcome::OutOfBounds => {
                    counts[2] += 1;
                    let p = r.info.state.pos;
                    let wall = if p.x > 4.0 { "E" } else if p.x < -2.0 { "W" } else if p.y > 3.0 { "N" } else { "S" };
                    oob_where.push(format!("{wall}@({:.2},{:.2})s{}", p.x, p.y, env.steps()));
                    break;
                }
                Outcome::MaxSteps => {
                    counts[3] += 1;
                    break;
                }
            }
        }
    }
    println!(
        "PD probe {label}: SR {:.2} CR {:.2} OOB {:.2} timeout {:.2}",
        counts[0] as f64 / n as f64,
        counts[1] as f64 / n as f64,
        counts[2] as f64 / n as f64,
        counts[3] as f64 / n as f64
    );
    let walls: Vec<char> = oob_where.iter().map(|s| s.chars().next().unwrap()).collect();
    let count = |c: char| walls.iter().filter(|&&w| w == c).count();
    println!("  OOB walls: E {} W {} N {} S {}", count('E'), count('W'), count('N'), count('S'));
    println!("  OOB sample: {:?}", &oob_where[..oob_where.len().min(6)]);
    println!("  crash sample: {:?}", &crash_where[..crash_where.len().min(6)]);
}

#[test]
#[ignore]
fn pd_controller_probe() {
    run_probe(1.0, 0.0875, false, "mean=1.0 old regions");
    run_probe(1.0, 0.0875, true, "mean=1.0 margin regions");
    run_probe(0.6, 0.0875, true, "mean=0.6 margin regions");
    run_probe(0.8, 0.0875, true, "mean=0.8 margin regions");
}

#[test]
#[ignore]
fn pd_trace_one_episode() {
    let mut cfg = RunConfig::default();
    cfg.flow.mean_speed = 0.3;
    let flow = cfg.build_flow(std::path::Path::new(".")).unwrap();
    let env_cfg = cfg.build_env(flow.clone());
    let mut env = NavEnv::new(env_cfg).unwrap();
    env.reset(3).unwrap();
    println!("start {:?} target {:?} cap {}", env.state().pos, env.target(), env.speed_cap());
    loop {
        let s = *env.state();
        let target = env.target();
        let frame = env.frame();
        let to_t = target - s.pos;
        let d0 = to_t.norm();
        let local_flow = flow
            .sample_velocity(frame, s.pos, &env.config().world.obstacles)
            .unwrap_or(Vec2::ZERO);
        let v_des = to_t * (1.0 / d0.max(1e-9)) * (1.8 * d0).min(1.3);
        let v_own_des = v_des - local_flow;
        let want_heading = v_own_des.angle();
        let phi = wrap_angle(want_heading - s.theta);
        let wdot = (4.0 * phi - 5.0 * s.omega).clamp(-0.785, 0.785);
        let speed_along = s.vel.x * s.theta.cos() + s.vel.y * s.theta.sin();
        let a = (3.0 * (v_own_des.norm().min(2.0) - speed_along)).clamp(-3.0, 3.0);
        let r = env.step(ActionCmd { lin_acc: a, ang_acc: wdot });
        println!(
            "t{:2} pos ({:6.2},{:5.2}) th {:5.2} om {:5.2} |v| {:4.2} flow ({:5.2},{:5.2}) d0 {:4.2} phi {:5.2} a {:5.2} wd {:5.2} {}",
            env.steps(), s.pos.x, s.pos.y, s.theta, s.omega, s.vel.norm(), local_flow.x, local_flow.y, d0, phi, a, wdot,
            r.outcome.as_str()
        );
        if r.outcome.is_terminal() { break; }
    }
}
