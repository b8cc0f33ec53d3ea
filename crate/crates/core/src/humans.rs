//! Pedestrians driven by the social force model.
//!
//! Each human walks its global route (start → goal → start → …) one waypoint
//! at a time. The local motion is the sum of an attraction toward the current
//! waypoint, exponential repulsion from other agents (the robot included),
//! and exponential repulsion from walls, integrated with explicit Euler from
//! a shared pre-step snapshot.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geom::{Pose2, Segment, Vec2};

/// Distance at which a waypoint counts as reached.
pub const WAYPOINT_REACHED: f64 = 0.5;
/// Within this distance a waypoint also counts as reached once the walker
/// stops closing in on it, e.g. because another agent stands on it.
pub const WAYPOINT_BLOCKED: f64 = 1.0;
/// Approach speed below which a walker counts as stalled (m/s).
pub const STALL_SPEED: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SocialForceParams {
    /// Relaxation time toward the desired velocity (s).
    pub tau: f64,
    pub v_desired: f64,
    pub a_agent: f64,
    pub b_agent: f64,
    pub a_wall: f64,
    pub b_wall: f64,
    pub agent_radius: f64,
    pub v_h_max: f64,
    /// Peak strength of the sidestep that breaks head-on symmetry. Zero
    /// disables it.
    pub sidestep: f64,
    /// Decay length of the sidestep (m).
    pub sidestep_range: f64,
    /// Another agent counts as in the way while its lateral offset is below
    /// the contact distance plus this (m).
    pub sidestep_clearance: f64,
}

impl Default for SocialForceParams {
    fn default() -> Self {
        Self {
            tau: 0.5,
            v_desired: 1.0,
            a_agent: 2.0,
            b_agent: 0.35,
            a_wall: 3.0,
            b_wall: 0.2,
            agent_radius: 0.3,
            v_h_max: 1.5,
            sidestep: 1.5,
            sidestep_range: 1.5,
            sidestep_clearance: 0.0,
        }
    }
}

impl SocialForceParams {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("tau", self.tau),
            ("v_desired", self.v_desired),
            ("A_agent", self.a_agent),
            ("B_agent", self.b_agent),
            ("A_wall", self.a_wall),
            ("B_wall", self.b_wall),
            ("agent_radius", self.agent_radius),
            ("v_h_max", self.v_h_max),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("social_force.{name} must be positive, got {v}"));
            }
        }
        if !(self.sidestep >= 0.0 && self.sidestep_clearance >= 0.0)
            || !(self.sidestep_range > 0.0 && self.sidestep_range.is_finite())
        {
            return Err(
                "social_force.sidestep and sidestep_clearance must be >= 0, sidestep_range > 0"
                    .into(),
            );
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Outbound,
    Returning,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HumanState {
    pub position: Vec2,
    pub velocity: Vec2,
    /// Route from start to goal, endpoints included.
    pub route: Arc<[Vec2]>,
    pub current_waypoint: usize,
    pub start: Pose2,
    pub goal: Pose2,
    pub direction: Direction,
}

impl HumanState {
    /// A human at rest at `start`, heading for the first waypoint after it.
    pub fn new(start: Pose2, goal: Pose2, route: Vec<Vec2>) -> Self {
        let route: Arc<[Vec2]> = if route.is_empty() {
            Arc::from(vec![start.position, goal.position])
        } else {
            Arc::from(route)
        };
        let current_waypoint = usize::from(route.len() > 1);
        Self {
            position: start.position,
            velocity: Vec2::ZERO,
            route,
            current_waypoint,
            start,
            goal,
            direction: Direction::Outbound,
        }
    }

    pub fn target(&self) -> Vec2 {
        self.route[self.current_waypoint]
    }

    /// Moves to the next waypoint once the current one is within reach (or
    /// close but unreachable), turning around at either end of the route.
    fn advance_waypoint(&mut self) {
        let to_target = self.target() - self.position;
        let d = to_target.norm();
        let stalled = d < WAYPOINT_BLOCKED && self.velocity.dot(to_target) < STALL_SPEED * d;
        if d >= WAYPOINT_REACHED && !stalled {
            return;
        }
        let last = self.route.len() - 1;
        if last == 0 {
            return;
        }
        match self.direction {
            Direction::Outbound if self.current_waypoint >= last => {
                self.direction = Direction::Returning;
                self.current_waypoint = last - 1;
            }
            Direction::Outbound => self.current_waypoint += 1,
            Direction::Returning if self.current_waypoint == 0 => {
                self.direction = Direction::Outbound;
                self.current_waypoint = 1;
            }
            Direction::Returning => self.current_waypoint -= 1,
        }
    }
}

/// Relaxation toward walking at `v_desired` straight at `target`.
pub fn goal_force(h: &HumanState, target: Vec2, params: &SocialForceParams) -> Vec2 {
    let desired = match (target - h.position).normalized() {
        Some(e) => e * params.v_desired,
        None => Vec2::ZERO,
    };
    (desired - h.velocity) * (1.0 / params.tau)
}

/// Exponential repulsion exerted on `h` by a disc agent at `other_pos`.
pub fn repulsion_force(
    h: &HumanState,
    other_pos: Vec2,
    other_radius: f64,
    params: &SocialForceParams,
) -> Vec2 {
    pair_repulsion(h.position, other_pos, other_radius, params)
}

fn pair_repulsion(
    pos: Vec2,
    other_pos: Vec2,
    other_radius: f64,
    params: &SocialForceParams,
) -> Vec2 {
    let diff = pos - other_pos;
    let d = diff.norm();
    let Some(n) = diff.normalized() else {
        return Vec2::ZERO;
    };
    let r_ij = params.agent_radius + other_radius;
    n * (params.a_agent * ((r_ij - d) / params.b_agent).exp())
}

/// Sum of exponential repulsions from every wall, each directed from the
/// wall's closest point toward the human.
pub fn wall_force(h: &HumanState, walls: &[Segment], params: &SocialForceParams) -> Vec2 {
    let mut total = Vec2::ZERO;
    for w in walls {
        let closest = w.closest_point(h.position);
        let diff = h.position - closest;
        let d = diff.norm();
        // On the wall itself the normal is used; its side is arbitrary but fixed.
        let n = diff
            .normalized()
            .unwrap_or_else(|| (w.b - w.a).perp().normalized().unwrap_or(Vec2::ZERO));
        total += n * (params.a_wall * ((params.agent_radius - d) / params.b_wall).exp());
    }
    total
}

/// Lateral push for another agent ahead of the walker and in its way (lateral
/// offset below the sum of radii). The push points away from the side the
/// other agent is on, to the right when exactly centered. Without it, two
/// walkers on a common line decelerate into each other and never pass, and a
/// walker whose route runs through a stationary agent stalls against it.
fn sidestep_force(
    pos: Vec2,
    heading: Vec2,
    other_pos: Vec2,
    other_radius: f64,
    params: &SocialForceParams,
) -> Vec2 {
    if params.sidestep == 0.0 {
        return Vec2::ZERO;
    }
    let to_other = other_pos - pos;
    let r_ij = params.agent_radius + other_radius;
    let lateral = heading.cross(to_other);
    if to_other.dot(heading) <= 0.0 || lateral.abs() >= r_ij + params.sidestep_clearance {
        return Vec2::ZERO;
    }
    let magnitude = params.sidestep * ((r_ij - to_other.norm()) / params.sidestep_range).exp();
    let away = if lateral < 0.0 {
        heading.perp()
    } else {
        -heading.perp()
    };
    away * magnitude
}

/// Advances every human by `dt`. All forces read the pre-step snapshot, so
/// the result does not depend on the order of `humans`.
///
/// `robot` is `(position, radius)`; the robot repels like a human.
pub fn step_humans(
    humans: &[HumanState],
    robot: (Vec2, f64),
    walls: &[Segment],
    params: &SocialForceParams,
    dt: f64,
) -> Vec<HumanState> {
    let (robot_pos, robot_radius) = robot;
    humans
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let target = h.target();
            let heading = (target - h.position)
                .normalized()
                .or_else(|| h.velocity.normalized())
                .unwrap_or(Vec2::ZERO);
            let mut force = goal_force(h, target, params) + wall_force(h, walls, params);
            let others = humans
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, o)| (o.position, params.agent_radius))
                .chain(std::iter::once((robot_pos, robot_radius)));
            for (op, or) in others {
                force += pair_repulsion(h.position, op, or, params);
                force += sidestep_force(h.position, heading, op, or, params);
            }
            let velocity = (h.velocity + force * dt).clamp_norm(params.v_h_max);
            let mut next = h.clone();
            next.velocity = velocity;
            next.position = h.position + velocity * dt;
            next.advance_waypoint();
            next
        })
        .collect()
}
