//! Global planning over the nav graph, trajectory-rollout local planning, and
//! the four discrete sub-policies (Halt, GoAlone, Follow, Pass).

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{MotionLimits, SimState};
use crate::geom::{point_to_points_segment_distance, transform_to_frame, Pose2, Vec2};
use crate::humans::HumanState;
use crate::world::WorldMap;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NavError {
    #[error("no path from ({sx:.2}, {sy:.2}) to ({gx:.2}, {gy:.2})")]
    NoPath { sx: f64, sy: f64, gx: f64, gy: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VelocityCommand {
    pub linear: f64,
    pub angular: f64,
}

impl VelocityCommand {
    pub const STOP: VelocityCommand = VelocityCommand {
        linear: 0.0,
        angular: 0.0,
    };

    pub fn new(linear: f64, angular: f64) -> Self {
        Self { linear, angular }
    }

    pub fn clamped(self, limits: &MotionLimits) -> Self {
        Self {
            linear: self.linear.clamp(-limits.v_max, limits.v_max),
            angular: self.angular.clamp(-limits.w_max, limits.w_max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiscreteAction {
    Halt = 0,
    GoAlone = 1,
    Follow = 2,
    Pass = 3,
}

impl DiscreteAction {
    pub const ALL: [DiscreteAction; 4] = [
        DiscreteAction::Halt,
        DiscreteAction::GoAlone,
        DiscreteAction::Follow,
        DiscreteAction::Pass,
    ];

    pub fn index(self) -> u8 {
        self as u8
    }
}

impl TryFrom<i64> for DiscreteAction {
    type Error = i64;

    fn try_from(v: i64) -> Result<Self, i64> {
        match v {
            0 => Ok(DiscreteAction::Halt),
            1 => Ok(DiscreteAction::GoAlone),
            2 => Ok(DiscreteAction::Follow),
            3 => Ok(DiscreteAction::Pass),
            other => Err(other),
        }
    }
}

impl fmt::Display for DiscreteAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiscreteAction::Halt => "Halt",
            DiscreteAction::GoAlone => "GoAlone",
            DiscreteAction::Follow => "Follow",
            DiscreteAction::Pass => "Pass",
        })
    }
}

/// Waypoints from start to goal plus the index of the next one to reach.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalPlan {
    pub waypoints: Vec<Pose2>,
    pub next_index: usize,
    /// Waypoint currently steered toward; see [`GlobalPlan::update_steering`].
    pub steer_index: usize,
    /// Summed edge cost of the path (m).
    pub cost: f64,
}

impl GlobalPlan {
    pub fn new(waypoints: Vec<Pose2>, cost: f64) -> Self {
        let next = usize::from(waypoints.len() > 1);
        Self {
            waypoints,
            next_index: next,
            steer_index: next,
            cost,
        }
    }

    /// The local goal for the robot's planners.
    pub fn steer_target(&self) -> Pose2 {
        self.waypoints[self.steer_index.min(self.waypoints.len() - 1)]
    }

    /// Picks the waypoint to steer toward from `position`: the latest one up
    /// to the next waypoint whose straight connection keeps `clearance` from
    /// every wall, else the latest one in plain line of sight, else the next.
    /// A robot pushed off its route thereby heads back to where it can
    /// continue instead of pressing against a wall or a door jamb.
    ///
    /// A robot already closer than `clearance` to a wall only needs a
    /// connection that does not get closer still.
    pub fn update_steering(&mut self, map: &WorldMap, position: Vec2, clearance: f64) {
        let next = self.next_index.min(self.waypoints.len() - 1);
        let clearance = clearance.min(map.segment_clearance(position, position) - 1e-9);
        let candidates = || (0..=next).rev();
        self.steer_index = candidates()
            .find(|&i| map.segment_clearance(position, self.waypoints[i].position) >= clearance)
            .or_else(|| {
                candidates().find(|&i| map.is_segment_free(position, self.waypoints[i].position))
            })
            .unwrap_or(next);
    }

    pub fn goal(&self) -> Pose2 {
        *self.waypoints.last().expect("plans are never empty")
    }

    /// Skips every waypoint already within `tolerance` of `position`; the
    /// final waypoint is never skipped.
    pub fn advance(&mut self, position: Vec2, tolerance: f64) {
        let last = self.waypoints.len() - 1;
        while self.next_index < last
            && self.waypoints[self.next_index].position.distance(position) < tolerance
        {
            self.next_index += 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Frontier {
    cost: f64,
    node: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on cost, then on node index.
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest path from `start` to `goal` through the nav graph.
///
/// Start and goal are joined to every nav node within `connect_radius` whose
/// connector is wall-free (and to each other under the same rule). Search is
/// uniform-cost; equal-cost ties resolve toward lower node indices.
pub fn plan_global(
    map: &WorldMap,
    start: Pose2,
    goal: Pose2,
    connect_radius: f64,
) -> Result<GlobalPlan, NavError> {
    let n = map.nav_nodes.len();
    let (s_idx, g_idx) = (n, n + 1);
    let connectors = |p: Vec2| -> Vec<(usize, f64)> {
        map.nav_nodes
            .iter()
            .enumerate()
            .filter_map(|(i, node)| {
                let d = node.position.distance(p);
                (d <= connect_radius && map.is_segment_free(p, node.position)).then_some((i, d))
            })
            .collect()
    };
    let from_start = connectors(start.position);
    let to_goal = connectors(goal.position);
    let direct = start.position.distance(goal.position);
    let direct_ok = direct <= connect_radius && map.is_segment_free(start.position, goal.position);

    let mut dist = vec![f64::INFINITY; n + 2];
    let mut prev = vec![usize::MAX; n + 2];
    let mut done = vec![false; n + 2];
    let mut heap = BinaryHeap::new();
    dist[s_idx] = 0.0;
    heap.push(Frontier {
        cost: 0.0,
        node: s_idx,
    });
    let mut goal_links = vec![None; n];
    for &(i, d) in &to_goal {
        goal_links[i] = Some(d);
    }

    while let Some(Frontier { cost, node }) = heap.pop() {
        if done[node] {
            continue;
        }
        done[node] = true;
        if node == g_idx {
            break;
        }
        let mut relax = |next: usize, w: f64, heap: &mut BinaryHeap<Frontier>| {
            let c = cost + w;
            if c < dist[next] {
                dist[next] = c;
                prev[next] = node;
                heap.push(Frontier {
                    cost: c,
                    node: next,
                });
            }
        };
        if node == s_idx {
            for &(i, d) in &from_start {
                relax(i, d, &mut heap);
            }
            if direct_ok {
                relax(g_idx, direct, &mut heap);
            }
        } else {
            for &(m, w) in map.neighbors(node) {
                relax(m, w, &mut heap);
            }
            if let Some(d) = goal_links[node] {
                relax(g_idx, d, &mut heap);
            }
        }
    }

    if !dist[g_idx].is_finite() {
        return Err(NavError::NoPath {
            sx: start.position.x,
            sy: start.position.y,
            gx: goal.position.x,
            gy: goal.position.y,
        });
    }

    let mut chain = vec![g_idx];
    let mut cur = g_idx;
    while cur != s_idx {
        cur = prev[cur];
        chain.push(cur);
    }
    chain.reverse();
    let mut waypoints: Vec<Pose2> = Vec::with_capacity(chain.len());
    for (k, &i) in chain.iter().enumerate() {
        let pose = match i {
            i if i == s_idx => start,
            i if i == g_idx => goal,
            i => map.nav_nodes[i],
        };
        // Drop graph nodes that coincide with the previous waypoint or the goal.
        if i < n {
            let dup_prev = waypoints
                .last()
                .is_some_and(|w| w.position == pose.position);
            let dup_goal = k + 2 == chain.len() && pose.position == goal.position;
            if dup_prev || dup_goal {
                continue;
            }
        }
        waypoints.push(pose);
    }
    Ok(GlobalPlan::new(waypoints, dist[g_idx]))
}

/// Sampling and scoring parameters of the trajectory rollout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RolloutParams {
    pub angular_samples: usize,
    pub linear_samples: usize,
    /// Forward simulation horizon (s).
    pub horizon: f64,
    /// Extra clearance beyond the robot radius (m).
    pub margin: f64,
    pub w_prog: f64,
    pub w_clear: f64,
    /// Clearance above this contributes nothing more to the score (m).
    pub clearance_cap: f64,
    /// Progress is measured at a point this far ahead of the robot, so turning
    /// toward the goal counts as progress (m).
    pub heading_lookahead: f64,
    /// Time resolution of the progress evaluation (s).
    pub score_dt: f64,
}

impl Default for RolloutParams {
    fn default() -> Self {
        Self {
            angular_samples: 11,
            linear_samples: 5,
            horizon: 2.0,
            margin: 0.2,
            w_prog: 1.0,
            w_clear: 0.25,
            clearance_cap: 1.0,
            heading_lookahead: 0.3,
            score_dt: 0.05,
        }
    }
}

/// Navigation limits and sub-policy parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NavConfig {
    pub v_max: f64,
    pub w_max: f64,
    pub a_max: f64,
    pub alpha_max: f64,
    /// Duration one command is held (s).
    pub control_period: f64,
    pub rollout: RolloutParams,
    pub follow_gap: f64,
    pub pass_offset: f64,
    /// Constant-velocity prediction horizon for Pass (s).
    pub pass_horizon: f64,
    /// Half-angle of the forward cone for lead selection (deg).
    pub lead_cone_deg: f64,
    pub lead_range: f64,
    /// Start/goal connection radius of the global planner (m).
    pub connect_radius: f64,
    /// Distance at which the robot's next waypoint counts as reached (m).
    pub waypoint_tolerance: f64,
}

impl Default for NavConfig {
    fn default() -> Self {
        Self {
            v_max: 1.0,
            w_max: 1.5,
            a_max: 2.0,
            alpha_max: 3.0,
            control_period: 0.2,
            rollout: RolloutParams::default(),
            follow_gap: 1.0,
            pass_offset: 0.75,
            pass_horizon: 1.0,
            lead_cone_deg: 45.0,
            lead_range: 5.0,
            connect_radius: 2.0,
            waypoint_tolerance: 0.5,
        }
    }
}

/// Constant (v, ω) arc from the origin of the robot frame, heading +x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc2 {
    pub v: f64,
    pub w: f64,
    pub duration: f64,
}

const STRAIGHT_EPS: f64 = 1e-9;

impl Arc2 {
    pub fn new(v: f64, w: f64, duration: f64) -> Self {
        Self { v, w, duration }
    }

    pub fn pose_at(&self, t: f64) -> (Vec2, f64) {
        let theta = self.w * t;
        if self.w.abs() < STRAIGHT_EPS {
            (Vec2::new(self.v * t, 0.0), theta)
        } else {
            let r = self.v / self.w;
            (Vec2::new(r * theta.sin(), r * (1.0 - theta.cos())), theta)
        }
    }

    /// Exact minimum distance from `q` to the swept path over `[0, duration]`.
    pub fn min_distance(&self, q: Vec2) -> f64 {
        ArcShape::new(self).min_distance(q)
    }
}

/// Geometry of an [`Arc2`] precomputed for repeated distance queries.
#[derive(Debug, Clone, Copy)]
enum ArcShape {
    Point,
    Line {
        end: Vec2,
    },
    Circle {
        center: Vec2,
        radius: f64,
        end: Vec2,
        /// Unit vector from the center to the middle of the swept arc; `None`
        /// for a full turn.
        bisector: Option<Vec2>,
        cos_half_sweep: f64,
    },
}

impl ArcShape {
    fn new(arc: &Arc2) -> Self {
        if arc.v == 0.0 {
            return ArcShape::Point;
        }
        let end = arc.pose_at(arc.duration).0;
        if arc.w.abs() < STRAIGHT_EPS {
            return ArcShape::Line { end };
        }
        let r = arc.v / arc.w;
        let center = Vec2::new(0.0, r);
        let sweep = arc.w * arc.duration;
        let bisector = (sweep.abs() < TAU).then(|| {
            let start = Vec2::new(0.0, -r.signum());
            start.rotated(sweep / 2.0)
        });
        ArcShape::Circle {
            center,
            radius: r.abs(),
            end,
            bisector,
            cos_half_sweep: (sweep.abs() / 2.0).min(PI).cos(),
        }
    }

    fn min_distance(&self, q: Vec2) -> f64 {
        match *self {
            ArcShape::Point => q.norm(),
            ArcShape::Line { end } => point_to_points_segment_distance(q, Vec2::ZERO, end),
            ArcShape::Circle {
                center,
                radius,
                end,
                bisector,
                cos_half_sweep,
            } => {
                let rel = q - center;
                let dist = rel.norm();
                let Some(b) = bisector else {
                    return (dist - radius).abs();
                };
                if dist == 0.0 {
                    return radius;
                }
                // The nearest circle point lies on the swept part iff the
                // direction of q is within half the sweep of the bisector.
                if rel.dot(b) >= cos_half_sweep * dist {
                    (dist - radius).abs()
                } else {
                    q.norm().min(q.distance(end))
                }
            }
        }
    }
}

/// How much closer the arc brings the robot to `goal`, in meters.
///
/// Distance is measured from a point `lookahead` ahead of the robot, so
/// turning toward the goal counts. The arc is evaluated at `k·step_dt` up to
/// its end, or up to the first sample whose position is within `tolerance` of
/// the goal; time left over after such an arrival is credited at `v_ref`.
fn arc_progress(
    arc: &Arc2,
    goal: Vec2,
    lookahead: f64,
    tolerance: f64,
    v_ref: f64,
    step_dt: f64,
    steps: usize,
) -> f64 {
    let d0 = goal.distance(Vec2::new(lookahead, 0.0));
    // Heading advances by a fixed angle per sample; rotate incrementally.
    let (ds, dc) = (arc.w * step_dt).sin_cos();
    let (mut s, mut c) = (0.0f64, 1.0f64);
    let straight = arc.w.abs() < STRAIGHT_EPS;
    let r = if straight { 0.0 } else { arc.v / arc.w };
    let mut d = d0;
    for k in 1..=steps {
        (s, c) = (s * dc + c * ds, c * dc - s * ds);
        let pos = if straight {
            Vec2::new(arc.v * step_dt * k as f64, 0.0)
        } else {
            Vec2::new(r * s, r * (1.0 - c))
        };
        d = goal.distance(pos + Vec2::new(c, s) * lookahead);
        if goal.distance(pos) < tolerance {
            return d0 - d + v_ref * step_dt * (steps - k) as f64;
        }
    }
    d0 - d
}

fn lerp_samples(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 || lo == hi {
        return vec![hi];
    }
    let m = (n - 1) as f64;
    (0..n)
        .map(|k| ((m - k as f64) * lo + k as f64 * hi) / m)
        .collect()
}

/// Local planner plus the sub-policies built on it.
#[derive(Debug, Clone)]
pub struct Navigator {
    pub limits: MotionLimits,
    pub cfg: NavConfig,
    pub robot_radius: f64,
}

impl Navigator {
    pub fn new(limits: MotionLimits, cfg: NavConfig, robot_radius: f64) -> Self {
        Self {
            limits,
            cfg,
            robot_radius,
        }
    }

    /// Strongest deceleration toward (0, 0) achievable in one control period.
    pub fn decelerate(&self, current: VelocityCommand) -> VelocityCommand {
        let dt = self.cfg.control_period;
        let dv = self.limits.a_max * dt;
        let dw = self.limits.alpha_max * dt;
        let toward_zero = |x: f64, step: f64| {
            if x > 0.0 {
                (x - step).max(0.0)
            } else {
                (x + step).min(0.0)
            }
        };
        VelocityCommand::new(
            toward_zero(current.linear, dv),
            toward_zero(current.angular, dw),
        )
        .clamped(&self.limits)
    }

    /// Samples constant-curvature arcs in the dynamic window, drops any whose
    /// sweep comes within `robot_radius + margin` of a scan point, and returns
    /// the best-scoring survivor, or a full-deceleration command if none.
    ///
    /// `scan` and `local_goal` are in the robot frame. `speed_cap` bounds the
    /// linear samples (at most `v_max`).
    pub fn rollout_local(
        &self,
        current: VelocityCommand,
        scan: &[Vec2],
        local_goal: Vec2,
        speed_cap: f64,
    ) -> VelocityCommand {
        let p = &self.cfg.rollout;
        let dt = self.cfg.control_period;
        let cap = speed_cap.min(self.limits.v_max).max(0.0);
        let v_hi = (current.linear + self.limits.a_max * dt).min(cap);
        let v_lo = (current.linear - self.limits.a_max * dt).max(0.0).min(v_hi);
        let w_hi = (current.angular + self.limits.alpha_max * dt).min(self.limits.w_max);
        let w_lo = (current.angular - self.limits.alpha_max * dt)
            .max(-self.limits.w_max)
            .min(w_hi);

        let keep_out = self.robot_radius + p.margin;
        // Points beyond an arc's length plus this cannot block it or lower its
        // capped clearance.
        let influence = keep_out.max(self.robot_radius + p.clearance_cap);
        let mut nearby: Vec<(f64, Vec2)> = scan
            .iter()
            .map(|q| (q.norm(), *q))
            .filter(|(d, _)| *d <= v_hi.max(0.0) * p.horizon + influence)
            .collect();
        nearby.sort_by(|a, b| a.0.total_cmp(&b.0));

        let score_steps = (p.horizon / p.score_dt).round().max(1.0) as usize;
        let step_dt = p.horizon / score_steps as f64;

        // Fastest first, so equal scores keep the faster arc.
        let linear: Vec<f64> = lerp_samples(v_lo, v_hi, p.linear_samples)
            .into_iter()
            .rev()
            .collect();
        let angular = lerp_samples(w_lo, w_hi, p.angular_samples);
        let mut best: Option<(f64, VelocityCommand)> = None;
        for &v in &linear {
            let reach = v.abs() * p.horizon + influence;
            let relevant = nearby.partition_point(|(d, _)| *d <= reach);
            for &w in &angular {
                let arc = Arc2::new(v, w, p.horizon);
                let shape = ArcShape::new(&arc);
                let mut clearance = f64::INFINITY;
                let mut blocked = false;
                for &(dq, q) in &nearby[..relevant] {
                    let d = shape.min_distance(q);
                    // A point already inside the keep-out band only blocks
                    // arcs that bring the robot closer to it.
                    if d < keep_out.min(dq - 1e-9) {
                        blocked = true;
                        break;
                    }
                    clearance = clearance.min(d - self.robot_radius);
                }
                if blocked {
                    continue;
                }
                let clearance = clearance.min(p.clearance_cap);
                let progress = arc_progress(
                    &arc,
                    local_goal,
                    p.heading_lookahead,
                    self.cfg.waypoint_tolerance,
                    self.limits.v_max,
                    step_dt,
                    score_steps,
                );
                let score = p.w_prog * progress + p.w_clear * clearance;
                let cmd = VelocityCommand::new(v, w);
                let better = match best {
                    None => true,
                    Some((s, b)) => score > s || (score == s && w.abs() < b.angular.abs()),
                };
                if better {
                    best = Some((score, cmd));
                }
            }
        }
        match best {
            Some((_, cmd)) => cmd.clamped(&self.limits),
            None => self.decelerate(current),
        }
    }

    /// Nearest visible human within the forward cone and lead range.
    pub fn select_lead_human(&self, robot: &Pose2, visible: &[HumanState]) -> Option<usize> {
        let half_cone = self.cfg.lead_cone_deg.to_radians();
        visible
            .iter()
            .enumerate()
            .filter_map(|(i, h)| {
                let rel = transform_to_frame(h.position, robot);
                let d = rel.norm();
                (d <= self.cfg.lead_range && rel.angle().abs() <= half_cone).then_some((i, d))
            })
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .map(|(i, _)| i)
    }

    /// Maps a discrete action to a velocity command for this control period.
    ///
    /// `scan` holds obstacle points in the robot frame.
    pub fn execute_action(
        &self,
        action: DiscreteAction,
        state: &SimState,
        plan: &GlobalPlan,
        visible_humans: &[HumanState],
        scan: &[Vec2],
    ) -> VelocityCommand {
        let robot = &state.robot_pose;
        let go_alone = || {
            let target = transform_to_frame(plan.steer_target().position, robot);
            self.rollout_local(state.robot_vel, scan, target, self.limits.v_max)
        };
        match action {
            DiscreteAction::Halt => self.decelerate(state.robot_vel),
            DiscreteAction::GoAlone => go_alone(),
            DiscreteAction::Follow => match self.select_lead_human(robot, visible_humans) {
                None => go_alone(),
                Some(i) => {
                    let lead = &visible_humans[i];
                    let back = lead
                        .velocity
                        .normalized()
                        .filter(|_| lead.velocity.norm() > 0.05)
                        .or_else(|| (lead.position - robot.position).normalized())
                        .unwrap_or(Vec2::ZERO);
                    let target = lead.position - back * self.cfg.follow_gap;
                    let cap = lead.velocity.norm().min(self.limits.v_max);
                    let mut cmd = self.rollout_local(
                        state.robot_vel,
                        scan,
                        transform_to_frame(target, robot),
                        cap,
                    );
                    cmd.linear = cmd.linear.min(cap);
                    cmd
                }
            },
            DiscreteAction::Pass => match self.select_lead_human(robot, visible_humans) {
                None => go_alone(),
                Some(i) => {
                    let lead = &visible_humans[i];
                    let predicted = lead.position + lead.velocity * self.cfg.pass_horizon;
                    let left = robot.direction().perp();
                    let target = predicted + left * self.cfg.pass_offset;
                    self.rollout_local(
                        state.robot_vel,
                        scan,
                        transform_to_frame(target, robot),
                        self.limits.v_max,
                    )
                }
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Segment;
    use crate::world::NavEdge;
    use proptest::prelude::*;

    fn limits() -> MotionLimits {
        MotionLimits {
            v_max: 1.0,
            w_max: 1.5,
            a_max: 2.0,
            alpha_max: 3.0,
            noise_std: [0.0, 0.0],
        }
    }

    fn navigator() -> Navigator {
        Navigator::new(limits(), NavConfig::default(), 0.3)
    }

    fn state_at(pose: Pose2, vel: VelocityCommand) -> SimState {
        SimState::new(pose, vel, Pose2::from_xyt(100.0, 0.0, 0.0), vec![], 0)
    }

    fn human(x: f64, y: f64, vx: f64, vy: f64) -> HumanState {
        let p = Pose2::from_xyt(x, y, 0.0);
        let mut h = HumanState::new(p, p, vec![p.position]);
        h.velocity = Vec2::new(vx, vy);
        h
    }

    fn triangle() -> WorldMap {
        let nodes = vec![
            Pose2::from_xyt(0.0, 0.0, 0.0),
            Pose2::from_xyt(10.0, 10.0, 0.0),
            Pose2::from_xyt(20.0, 0.0, 0.0),
        ];
        let edges = vec![
            NavEdge {
                from: 0,
                to: 1,
                cost: 1.0,
            },
            NavEdge {
                from: 1,
                to: 2,
                cost: 1.0,
            },
            NavEdge {
                from: 0,
                to: 2,
                cost: 3.0,
            },
        ];
        WorldMap::new("tri", vec![], nodes, edges, vec![0, 1, 2]).unwrap()
    }

    #[test]
    fn start_equals_goal() {
        let m = triangle();
        let a = m.nav_nodes[0];
        let plan = plan_global(&m, a, a, 2.0).unwrap();
        assert_eq!(plan.waypoints, vec![a, a]);
        assert_eq!(plan.cost, 0.0);
    }

    #[test]
    fn triangle_goes_through_middle() {
        let m = triangle();
        let (a, b, c) = (m.nav_nodes[0], m.nav_nodes[1], m.nav_nodes[2]);
        let plan = plan_global(&m, a, c, 2.0).unwrap();
        assert_eq!(plan.waypoints, vec![a, b, c]);
        // Dijkstra by hand: A→B→C = 1 + 1 < 3.
        assert_eq!(plan.cost, 2.0);
    }

    #[test]
    fn walled_off_goal_is_no_path() {
        let nodes = vec![
            Pose2::from_xyt(0.0, 0.0, 0.0),
            Pose2::from_xyt(1.5, 0.0, 0.0),
        ];
        let walls = vec![Segment::new(Vec2::new(0.75, -5.0), Vec2::new(0.75, 5.0))];
        let m = WorldMap::new("walled", walls, nodes.clone(), vec![], vec![0, 1]).unwrap();
        let err = plan_global(&m, nodes[0], nodes[1], 2.0).unwrap_err();
        assert!(matches!(err, NavError::NoPath { .. }));
    }

    #[test]
    fn builtin_plans_are_wall_free() {
        let m = WorldMap::builtin("training").unwrap();
        for &i in &m.legal_pose_indices {
            for &j in &m.legal_pose_indices {
                let plan = plan_global(&m, m.nav_nodes[i], m.nav_nodes[j], 2.0).unwrap();
                assert_eq!(plan.waypoints[0].position, m.nav_nodes[i].position);
                assert_eq!(plan.goal().position, m.nav_nodes[j].position);
                for w in plan.waypoints.windows(2) {
                    assert!(m.is_segment_free(w[0].position, w[1].position));
                }
            }
        }
    }

    #[test]
    fn plan_advance_skips_reached() {
        let m = triangle();
        let mut plan = plan_global(&m, m.nav_nodes[0], m.nav_nodes[2], 2.0).unwrap();
        assert_eq!(plan.next_index, 1);
        plan.advance(Vec2::new(10.0, 9.8), 0.5);
        assert_eq!(plan.next_index, 2);
        plan.advance(Vec2::new(20.0, 0.0), 0.5);
        assert_eq!(plan.next_index, 2);
    }

    #[test]
    fn steering_backs_off_to_a_clear_waypoint() {
        let waypoints = [(0.0, 0.0), (5.0, 0.0), (5.0, 5.0)]
            .map(|(x, y)| Pose2::from_xyt(x, y, 0.0))
            .to_vec();
        let walls = vec![
            // Hides the next waypoint and passes 0.354 m from the path to
            // the previous one.
            Segment::new(Vec2::new(4.0, 1.5), Vec2::new(4.0, 6.0)),
        ];
        let m = WorldMap::new("steer", walls.clone(), waypoints.clone(), vec![], vec![0]).unwrap();
        let mut plan = GlobalPlan::new(waypoints.clone(), 10.0);
        plan.next_index = 2;
        let robot = Vec2::new(3.0, 2.0);

        plan.update_steering(&m, robot, 0.3);
        assert_eq!(plan.steer_index, 1);
        plan.update_steering(&m, robot, 0.5);
        assert_eq!(plan.steer_index, 0);
        // The robot is 1 m from the wall, so no connection can demand more.
        plan.update_steering(&m, robot, 5.0);
        assert_eq!(plan.steer_index, 0);

        // With the start hidden too, only plain line of sight is left.
        let mut walls = walls;
        walls.push(Segment::new(Vec2::new(1.0, -1.0), Vec2::new(1.0, 3.0)));
        let m = WorldMap::new("steer", walls, waypoints.clone(), vec![], vec![0]).unwrap();
        plan.update_steering(&m, robot, 0.5);
        assert_eq!(plan.steer_index, 1);
        assert_eq!(plan.steer_target(), waypoints[1]);

        // Nothing visible: keep the next waypoint.
        let hidden = WorldMap::new(
            "steer",
            vec![Segment::new(Vec2::new(-1.0, 7.0), Vec2::new(9.0, 7.0))],
            waypoints,
            vec![],
            vec![0],
        )
        .unwrap();
        plan.update_steering(&hidden, Vec2::new(4.5, 8.0), 0.5);
        assert_eq!(plan.steer_index, 2);
    }

    #[test]
    fn point_inside_margin_only_blocks_approach() {
        let nav = navigator();
        // Behind the robot and inside the keep-out band: driving forward
        // moves away from it.
        let behind = [Vec2::new(-0.35, 0.0)];
        let cmd = nav.rollout_local(VelocityCommand::STOP, &behind, Vec2::new(5.0, 0.0), 1.0);
        assert!(cmd.linear > 0.0);
        // The same point ahead leaves only turning in place.
        let ahead = [Vec2::new(0.35, 0.0)];
        let cmd = nav.rollout_local(VelocityCommand::STOP, &ahead, Vec2::new(5.0, 0.0), 1.0);
        assert_eq!(cmd.linear, 0.0);
    }

    #[test]
    fn arc_min_distance_matches_sampling() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..2000 {
            let arc = Arc2::new(rng.gen_range(0.0..1.5), rng.gen_range(-3.0..3.0), 2.0);
            let q = Vec2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let exact = arc.min_distance(q);
            let sampled = (0..=20_000)
                .map(|k| arc.pose_at(2.0 * k as f64 / 20_000.0).0.distance(q))
                .fold(f64::INFINITY, f64::min);
            assert!(exact <= sampled + 1e-9);
            assert!(
                sampled - exact < 1e-3,
                "{arc:?} {q:?}: {exact} vs {sampled}"
            );
        }
    }

    #[test]
    fn empty_scan_straight_ahead_goes_full_speed() {
        let nav = navigator();
        let cmd = nav.rollout_local(
            VelocityCommand::new(1.0, 0.0),
            &[],
            Vec2::new(10.0, 0.0),
            1.0,
        );
        assert_eq!(cmd.angular, 0.0);
        assert_eq!(cmd.linear, 1.0);
        // From rest the window tops out at a_max · period.
        let cmd = nav.rollout_local(VelocityCommand::STOP, &[], Vec2::new(10.0, 0.0), 1.0);
        assert_eq!(cmd.angular, 0.0);
        assert!((cmd.linear - 0.4).abs() < 1e-12);
    }

    #[test]
    fn wall_close_ahead_stops() {
        let nav = navigator();
        let wall: Vec<Vec2> = (0..=200)
            .map(|k| Vec2::new(0.2, -3.0 + 0.03 * k as f64))
            .collect();
        let current = VelocityCommand::new(0.8, 0.2);
        let cmd = nav.rollout_local(current, &wall, Vec2::new(5.0, 0.0), 1.0);
        assert_eq!(cmd, nav.decelerate(current));
        assert!(cmd.linear < current.linear);
        assert!((cmd.linear - 0.4).abs() < 1e-12);
    }

    #[test]
    fn goal_to_the_left_turns_left() {
        let nav = navigator();
        let cmd = nav.rollout_local(VelocityCommand::STOP, &[], Vec2::new(0.0, 3.0), 1.0);
        assert!(cmd.angular > 0.0);
        let cmd = nav.rollout_local(VelocityCommand::STOP, &[], Vec2::new(0.0, -3.0), 1.0);
        assert!(cmd.angular < 0.0);
    }

    #[test]
    fn goal_behind_rotates() {
        let nav = navigator();
        let cmd = nav.rollout_local(VelocityCommand::STOP, &[], Vec2::new(-4.0, 0.1), 1.0);
        assert!(cmd.angular > 0.0);
    }

    #[test]
    fn halt_decelerates_by_a_max_period() {
        let nav = navigator();
        let s = state_at(Pose2::default(), VelocityCommand::new(1.0, 0.0));
        let plan = GlobalPlan {
            waypoints: vec![Pose2::default(), Pose2::from_xyt(5.0, 0.0, 0.0)],
            next_index: 1,
            steer_index: 1,
            cost: 5.0,
        };
        let cmd = nav.execute_action(DiscreteAction::Halt, &s, &plan, &[], &[]);
        assert!((cmd.linear - 0.6).abs() < 1e-12);
    }

    #[test]
    fn follow_caps_speed_and_degrades() {
        let nav = navigator();
        let s = state_at(Pose2::default(), VelocityCommand::new(1.0, 0.0));
        let plan = GlobalPlan {
            waypoints: vec![Pose2::default(), Pose2::from_xyt(8.0, 0.0, 0.0)],
            next_index: 1,
            steer_index: 1,
            cost: 8.0,
        };
        let lead = human(2.0, 0.0, 0.8, 0.0);
        let scan: Vec<Vec2> = (0..36)
            .map(|k| Vec2::new(2.0, 0.0) + Vec2::from_angle(k as f64 * 0.1745) * 0.3)
            .collect();
        let cmd = nav.execute_action(DiscreteAction::Follow, &s, &plan, &[lead], &scan);
        assert!(cmd.linear <= 0.8);

        let follow = nav.execute_action(DiscreteAction::Follow, &s, &plan, &[], &[]);
        let alone = nav.execute_action(DiscreteAction::GoAlone, &s, &plan, &[], &[]);
        assert_eq!(follow, alone);
        let pass = nav.execute_action(DiscreteAction::Pass, &s, &plan, &[], &[]);
        assert_eq!(pass, alone);
    }

    #[test]
    fn pass_veers_left_of_lead() {
        let nav = navigator();
        let s = state_at(Pose2::default(), VelocityCommand::new(0.5, 0.0));
        let plan = GlobalPlan {
            waypoints: vec![Pose2::default(), Pose2::from_xyt(8.0, 0.0, 0.0)],
            next_index: 1,
            steer_index: 1,
            cost: 8.0,
        };
        let lead = human(3.0, 0.0, 0.3, 0.0);
        let cmd = nav.execute_action(DiscreteAction::Pass, &s, &plan, &[lead], &[]);
        assert!(cmd.angular > 0.0);
    }

    #[test]
    fn lead_selection_examples() {
        let nav = navigator();
        let robot = Pose2::default();
        let a = human(2.0, 0.0, 0.0, 0.0);
        let b_pos = Vec2::from_angle(10f64.to_radians());
        let b = human(b_pos.x, b_pos.y, 0.0, 0.0);
        assert_eq!(nav.select_lead_human(&robot, &[a, b]), Some(1));
        let side = Vec2::from_angle(120f64.to_radians()) * 1.0;
        assert_eq!(
            nav.select_lead_human(&robot, &[human(side.x, side.y, 0.0, 0.0)]),
            None
        );
        assert_eq!(nav.select_lead_human(&robot, &[]), None);
        assert_eq!(
            nav.select_lead_human(&robot, &[human(6.0, 0.0, 0.0, 0.0)]),
            None
        );
    }

    #[test]
    fn action_codes() {
        for a in DiscreteAction::ALL {
            assert_eq!(DiscreteAction::try_from(a.index() as i64), Ok(a));
        }
        assert_eq!(DiscreteAction::try_from(4), Err(4));
        assert_eq!(DiscreteAction::try_from(-1), Err(-1));
    }

    #[test]
    fn halt_reaches_rest_within_bound() {
        let nav = navigator();
        let l = limits();
        let bound = (l.v_max / (l.a_max * nav.cfg.control_period)).ceil() as usize;
        for v0 in [0.0, 0.1, 0.55, 1.0] {
            let mut v = VelocityCommand::new(v0, 1.5);
            for _ in 0..bound.max(1) {
                v = nav.decelerate(v);
            }
            assert!(v.linear.abs() < 1e-6, "{v0}: {v:?}");
        }
    }

    proptest! {
        #[test]
        fn execute_action_is_total_and_bounded(
            a in 0i64..4, v in 0.0f64..1.0, w in -1.5f64..1.5,
            hx in -4.0f64..4.0, hy in -4.0f64..4.0, hvx in -1.5f64..1.5, hvy in -1.5f64..1.5,
            gx in -10.0f64..10.0, gy in -10.0f64..10.0, th in -3.1f64..3.1,
        ) {
            let nav = navigator();
            let s = state_at(Pose2::from_xyt(0.0, 0.0, th), VelocityCommand::new(v, w));
            let plan = GlobalPlan {
                waypoints: vec![Pose2::default(), Pose2::from_xyt(gx, gy, 0.0)],
                next_index: 1,
            steer_index: 1,
                cost: 1.0,
            };
            let h = human(hx, hy, hvx, hvy);
            let scan: Vec<Vec2> = (0..24)
                .map(|k| transform_to_frame(h.position + Vec2::from_angle(k as f64 * 0.26) * 0.3, &s.robot_pose))
                .collect();
            let cmd = nav.execute_action(DiscreteAction::try_from(a).unwrap(), &s, &plan, &[h], &scan);
            prop_assert!(cmd.linear.is_finite() && cmd.angular.is_finite());
            prop_assert!(cmd.linear.abs() <= 1.0 && cmd.angular.abs() <= 1.5);
        }
    }
}
