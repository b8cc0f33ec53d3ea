//! Simulation state and the transition function: robot kinematics, human
//! stepping, collision counting, the simulated laser scan, and the
//! occlusion-aware observation vector.

use std::sync::Arc;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geom::{
    open_segment_crosses, point_segment_distance, ray_circle_intersect, ray_segment_intersect,
    transform_to_frame, Pose2, Vec2,
};
use crate::humans::{step_humans, HumanState, SocialForceParams};
use crate::nav::VelocityCommand;
use crate::rng::SimRng;
use crate::world::WorldMap;

/// Fixed entries before the per-human slots: goal, local goal, velocity.
pub const OBS_HEADER: usize = 6;
/// Entries per human slot: relative position and relative velocity.
pub const OBS_PER_HUMAN: usize = 4;

pub fn observation_dim(human_slots: usize) -> usize {
    OBS_HEADER + OBS_PER_HUMAN * human_slots
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionLimits {
    pub v_max: f64,
    pub w_max: f64,
    pub a_max: f64,
    pub alpha_max: f64,
    /// Standard deviation of Gaussian noise on the applied (linear, angular)
    /// velocity. Zero gives a deterministic transition.
    pub noise_std: [f64; 2],
}

impl Default for MotionLimits {
    fn default() -> Self {
        Self {
            v_max: 1.0,
            w_max: 1.5,
            a_max: 2.0,
            alpha_max: 3.0,
            noise_std: [0.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanConfig {
    pub rays: usize,
    pub fov_deg: f64,
    pub max_range: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            rays: 360,
            fov_deg: 360.0,
            max_range: 10.0,
        }
    }
}

impl ScanConfig {
    /// Ray bearings in the robot frame, uniform over the field of view.
    pub fn angles(&self) -> Vec<f64> {
        let fov = self.fov_deg.to_radians();
        let n = self.rays;
        let full_circle = (self.fov_deg - 360.0).abs() < 1e-9;
        (0..n)
            .map(|i| {
                if full_circle {
                    fov * (i as f64 / n as f64 - 0.5)
                } else if n == 1 {
                    0.0
                } else {
                    fov * (i as f64 / (n - 1) as f64 - 0.5)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRay {
    pub angle: f64,
    pub range: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CollisionCounts {
    pub human: u32,
    pub wall: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub robot_pose: Pose2,
    pub robot_vel: VelocityCommand,
    pub goal: Pose2,
    pub humans: Vec<HumanState>,
    /// Simulated time (s).
    pub t: f64,
    /// Number of action periods taken.
    pub steps: u64,
    pub rng: SimRng,
}

impl SimState {
    pub fn new(
        robot_pose: Pose2,
        robot_vel: VelocityCommand,
        goal: Pose2,
        humans: Vec<HumanState>,
        seed: u64,
    ) -> Self {
        Self {
            robot_pose,
            robot_vel,
            goal,
            humans,
            t: 0.0,
            steps: 0,
            rng: SimRng::from_seed_u64(seed),
        }
    }

    /// Robot velocity as a world-frame vector.
    pub fn robot_velocity_world(&self) -> Vec2 {
        self.robot_pose.direction() * self.robot_vel.linear
    }
}

/// Fixed-width observation: goal and local goal in the robot frame, robot
/// velocity, then one slot per visible human sorted nearest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Observation(pub Vec<f64>);

impl Observation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn human_slot(&self, i: usize) -> &[f64] {
        let start = OBS_HEADER + OBS_PER_HUMAN * i;
        &self.0[start..start + OBS_PER_HUMAN]
    }
}

/// True when no wall crosses the open sight line between the two points.
pub fn line_of_sight(map: &WorldMap, from: Vec2, to: Vec2) -> bool {
    !map.segments
        .iter()
        .any(|w| open_segment_crosses(from, to, w))
}

/// Integrates a constant twist exactly for `dt`.
fn integrate_unicycle(pose: &Pose2, v: f64, w: f64, dt: f64) -> Pose2 {
    let theta = pose.heading;
    let p = pose.position;
    if w.abs() < 1e-12 {
        let (s, c) = theta.sin_cos();
        return Pose2::new(Vec2::new(p.x + v * c * dt, p.y + v * s * dt), theta);
    }
    let theta2 = theta + w * dt;
    let r = v / w;
    Pose2::new(
        Vec2::new(
            p.x + r * (theta2.sin() - theta.sin()),
            p.y - r * (theta2.cos() - theta.cos()),
        ),
        theta2,
    )
}

fn approach(current: f64, target: f64, max_step: f64) -> f64 {
    current + (target - current).clamp(-max_step, max_step)
}

/// Static map plus the physical parameters of robot and humans.
#[derive(Debug, Clone)]
pub struct Environment {
    pub map: Arc<WorldMap>,
    pub limits: MotionLimits,
    pub social: SocialForceParams,
    pub scan: ScanConfig,
    pub robot_radius: f64,
    /// Integration substep (s).
    pub substep: f64,
}

impl Environment {
    pub fn new(map: Arc<WorldMap>) -> Self {
        Self {
            map,
            limits: MotionLimits::default(),
            social: SocialForceParams::default(),
            scan: ScanConfig::default(),
            robot_radius: 0.3,
            substep: 0.05,
        }
    }

    /// Advances the state by one action period of `dt_action` seconds, a
    /// multiple of the substep.
    pub fn step_env(&self, state: &SimState, cmd: VelocityCommand, dt_action: f64) -> SimState {
        let cmd = cmd.clamped(&self.limits);
        let substeps = (dt_action / self.substep).round().max(1.0) as usize;
        let dt = dt_action / substeps as f64;
        let mut next = state.clone();
        let [sigma_v, sigma_w] = self.limits.noise_std;
        let noisy = sigma_v > 0.0 || sigma_w > 0.0;
        for _ in 0..substeps {
            let robot_pos = next.robot_pose.position;
            next.robot_vel.linear =
                approach(next.robot_vel.linear, cmd.linear, self.limits.a_max * dt);
            next.robot_vel.angular = approach(
                next.robot_vel.angular,
                cmd.angular,
                self.limits.alpha_max * dt,
            );
            let (mut v, mut w) = (next.robot_vel.linear, next.robot_vel.angular);
            if noisy {
                if sigma_v > 0.0 {
                    v += Normal::new(0.0, sigma_v)
                        .expect("finite std")
                        .sample(&mut next.rng);
                }
                if sigma_w > 0.0 {
                    w += Normal::new(0.0, sigma_w)
                        .expect("finite std")
                        .sample(&mut next.rng);
                }
                v = v.clamp(-self.limits.v_max, self.limits.v_max);
                w = w.clamp(-self.limits.w_max, self.limits.w_max);
            }
            // Humans react to the robot as it was at the start of the substep.
            next.humans = step_humans(
                &next.humans,
                (robot_pos, self.robot_radius),
                &self.map.segments,
                &self.social,
                dt,
            );
            next.robot_pose = integrate_unicycle(&next.robot_pose, v, w, dt);
        }
        next.steps = state.steps + 1;
        next.t = state.t + dt_action;
        next
    }

    /// Humans overlapping the robot disc (one per human) and whether the robot
    /// disc overlaps any wall (at most one per step).
    pub fn detect_collisions(&self, state: &SimState) -> CollisionCounts {
        let p = state.robot_pose.position;
        let human = state
            .humans
            .iter()
            .filter(|h| p.distance(h.position) < self.robot_radius + self.social.agent_radius)
            .count() as u32;
        let wall = u32::from(
            self.map
                .segments
                .iter()
                .any(|w| point_segment_distance(p, w) < self.robot_radius),
        );
        CollisionCounts { human, wall }
    }

    /// Range per ray to the nearest wall or human disc, clipped at `max_range`.
    pub fn simulate_scan(&self, state: &SimState) -> Vec<ScanRay> {
        let origin = state.robot_pose.position;
        let max_range = self.scan.max_range;
        let r_h = self.social.agent_radius;
        let near_humans: Vec<Vec2> = state
            .humans
            .iter()
            .map(|h| h.position)
            .filter(|c| c.distance(origin) <= max_range + r_h)
            .collect();
        self.scan
            .angles()
            .into_iter()
            .map(|angle| {
                let dir = Vec2::from_angle(state.robot_pose.heading + angle);
                let mut range = max_range;
                for w in &self.map.segments {
                    if let Some(t) = ray_segment_intersect(origin, dir, w) {
                        range = range.min(t);
                    }
                }
                for &c in &near_humans {
                    if let Some(t) = ray_circle_intersect(origin, dir, c, r_h) {
                        range = range.min(t);
                    }
                }
                ScanRay { angle, range }
            })
            .collect()
    }

    /// Scan hits (rays shorter than `max_range`) as points in the robot frame.
    pub fn scan_points(&self, scan: &[ScanRay]) -> Vec<Vec2> {
        scan.iter()
            .filter(|r| r.range < self.scan.max_range)
            .map(|r| Vec2::from_angle(r.angle) * r.range)
            .collect()
    }

    /// Per-human visibility: a human is visible unless a wall crosses the
    /// sight line from the robot center to the human center.
    pub fn visibility(&self, state: &SimState) -> Vec<bool> {
        let p = state.robot_pose.position;
        state
            .humans
            .iter()
            .map(|h| line_of_sight(&self.map, p, h.position))
            .collect()
    }

    pub fn visible_humans(&self, state: &SimState) -> Vec<HumanState> {
        state
            .humans
            .iter()
            .zip(self.visibility(state))
            .filter(|(_, v)| *v)
            .map(|(h, _)| h.clone())
            .collect()
    }

    /// Builds the observation vector. `local_goal` is in world coordinates.
    pub fn observe(&self, state: &SimState, local_goal: Vec2, human_slots: usize) -> Observation {
        let frame = &state.robot_pose;
        let goal = transform_to_frame(state.goal.position, frame);
        let local = transform_to_frame(local_goal, frame);
        let mut obs = vec![0.0; observation_dim(human_slots)];
        obs[..OBS_HEADER].copy_from_slice(&[
            goal.x,
            goal.y,
            local.x,
            local.y,
            state.robot_vel.linear,
            state.robot_vel.angular,
        ]);

        let robot_vel = state.robot_velocity_world();
        let mut visible: Vec<(f64, usize, &HumanState)> = state
            .humans
            .iter()
            .enumerate()
            .zip(self.visibility(state))
            .filter(|(_, v)| *v)
            .map(|((i, h), _)| (h.position.distance(frame.position), i, h))
            .collect();
        visible.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (slot, (_, _, h)) in visible.into_iter().take(human_slots).enumerate() {
            let rel_p = transform_to_frame(h.position, frame);
            let rel_v = (h.velocity - robot_vel).rotated(-frame.heading);
            let base = OBS_HEADER + OBS_PER_HUMAN * slot;
            obs[base..base + OBS_PER_HUMAN].copy_from_slice(&[rel_p.x, rel_p.y, rel_v.x, rel_v.y]);
        }
        Observation(obs)
    }
}
