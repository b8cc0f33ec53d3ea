//! The per-step loop: action → sub-policy → transition → metrics → reward.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::SimConfig;
use crate::env::{observation_dim, CollisionCounts, Environment, Observation, SimState};
use crate::geom::{point_to_points_segment_distance, Vec2};
use crate::humans::HumanState;
use crate::nav::{plan_global, DiscreteAction, GlobalPlan, NavError, Navigator, VelocityCommand};
use crate::rng::{streams, SimRng};
use crate::world::{check_terminal, ConfigError, Scenario, ScenarioSchedule, Terminal, WorldMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardWeights {
    /// Weight of goal progress (per meter).
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    /// Bonus on the step that reaches the goal.
    pub c: f64,
    pub gamma: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            w1: 1.0,
            w2: -0.3,
            w3: -0.3,
            c: 10.0,
            gamma: 0.99,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(format!(
                "reward.gamma must be in (0, 1], got {}",
                self.gamma
            ));
        }
        if ![self.w1, self.w2, self.w3, self.c]
            .iter()
            .all(|w| w.is_finite())
        {
            return Err("reward weights must be finite".into());
        }
        Ok(())
    }

    pub fn reward(&self, d_g: f64, force: f64, blame: f64, terminal: Terminal) -> f64 {
        let bonus = if terminal == Terminal::Success {
            self.c
        } else {
            0.0
        };
        self.w1 * d_g + self.w2 * force + self.w3 * blame + bonus
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepMetrics {
    /// Reduction in distance to the goal over the step (m).
    pub d_g: f64,
    pub force: f64,
    pub blame: f64,
    /// Robot displacement over the step (m).
    pub dist_step: f64,
    pub human_collisions: u32,
    pub wall_collisions: u32,
}

/// Proximity penalty: `exp(-d)` for the nearest human, 0 with no humans.
pub fn compute_force(state: &SimState) -> f64 {
    let p = state.robot_pose.position;
    state
        .humans
        .iter()
        .map(|h| (-p.distance(h.position)).exp())
        .fold(0.0, f64::max)
}

/// Like [`compute_force`], but measured from the segment the robot would
/// sweep in the next second at its current velocity.
pub fn compute_blame(state: &SimState) -> f64 {
    let p = state.robot_pose.position;
    let ahead = p + state.robot_velocity_world();
    state
        .humans
        .iter()
        .map(|h| (-point_to_points_segment_distance(h.position, p, ahead)).exp())
        .fold(0.0, f64::max)
}

pub fn compute_reward(
    prev: &SimState,
    cur: &SimState,
    terminal: Terminal,
    collisions: CollisionCounts,
    w: &RewardWeights,
) -> (f64, StepMetrics) {
    let goal = cur.goal.position;
    let metrics = StepMetrics {
        d_g: prev.robot_pose.position.distance(goal) - cur.robot_pose.position.distance(goal),
        force: compute_force(cur),
        blame: compute_blame(cur),
        dist_step: prev.robot_pose.position.distance(cur.robot_pose.position),
        human_collisions: collisions.human,
        wall_collisions: collisions.wall,
    };
    let reward = w.reward(metrics.d_g, metrics.force, metrics.blame, terminal);
    (reward, metrics)
}

/// Σ γ^t r_t.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    let mut discount = 1.0;
    let mut total = 0.0;
    for r in rewards {
        total += discount * r;
        discount *= gamma;
    }
    total
}

/// One line of an episode's step log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub t: f64,
    pub action: u8,
    pub reward: f64,
    pub d_g: f64,
    pub force: f64,
    pub blame: f64,
    pub dist_step: f64,
    pub human_collisions: u32,
    pub wall_collisions: u32,
    pub outcome: Terminal,
    pub robot: [f64; 3],
    pub humans: Vec<[f64; 2]>,
    pub obs: Observation,
}

impl StepLog {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("step log serialization cannot fail")
    }
}

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error("action {0} out of range")]
    ActionOutOfRange(i64),
    #[error("episode already finished")]
    Finished,
    #[error(transparent)]
    Plan(#[from] NavError),
    #[error("agent failed: {0}")]
    Agent(String),
}

/// Everything needed to run episodes of one configuration.
#[derive(Debug, Clone)]
pub struct Simulator {
    pub config: SimConfig,
    pub env: Environment,
    pub nav: Navigator,
}

impl Simulator {
    pub fn new(config: SimConfig, map: Arc<WorldMap>) -> Result<Self, ConfigError> {
        config.validate()?;
        let limits = config.motion_limits();
        let env = Environment {
            map,
            limits: limits.clone(),
            social: config.social_force.clone(),
            scan: config.scan.clone(),
            robot_radius: config.robot.radius,
            substep: config.substep,
        };
        let nav = Navigator::new(limits, config.navigation.clone(), config.robot.radius);
        Ok(Self { config, env, nav })
    }

    pub fn map(&self) -> &Arc<WorldMap> {
        &self.env.map
    }

    pub fn dt(&self) -> f64 {
        self.config.dt_action()
    }

    /// Wall clearance required of the straight line to the steered waypoint.
    pub fn steer_clearance(&self) -> f64 {
        self.config.robot.radius + self.config.navigation.rollout.margin
    }

    pub fn obs_dim(&self) -> usize {
        observation_dim(self.config.human_slots)
    }

    pub fn schedule(&self) -> ScenarioSchedule {
        ScenarioSchedule::new(self.env.map.clone(), self.config.scenario.clone())
    }

    /// Seed of the in-episode PRNG for the `episode_index`-th episode.
    pub fn episode_rng(&self, episode_index: usize) -> SimRng {
        SimRng::stream(
            self.config.scenario.seed,
            streams::EPISODE_BASE + episode_index as u64,
        )
    }

    /// The initial state and robot plan of a scenario. Each human walks the
    /// global plan between its start and goal.
    pub fn initial_state(
        &self,
        scenario: &Scenario,
        rng: SimRng,
    ) -> Result<(SimState, GlobalPlan), NavError> {
        let map = &self.env.map;
        let radius = self.config.navigation.connect_radius;
        let humans = scenario
            .humans
            .iter()
            .map(|h| {
                let plan = plan_global(map, h.start, h.goal, radius)?;
                let route: Vec<Vec2> = plan.waypoints.iter().map(|w| w.position).collect();
                Ok(HumanState::new(h.start, h.goal, route))
            })
            .collect::<Result<Vec<_>, NavError>>()?;
        let mut plan = plan_global(map, scenario.robot_start, scenario.robot_goal, radius)?;
        plan.advance(
            scenario.robot_start.position,
            self.config.navigation.waypoint_tolerance,
        );
        plan.update_steering(map, scenario.robot_start.position, self.steer_clearance());
        let mut state = SimState::new(
            scenario.robot_start,
            VelocityCommand::STOP,
            scenario.robot_goal,
            humans,
            0,
        );
        state.rng = rng;
        Ok((state, plan))
    }
}

/// What an agent sees when choosing an action. Learning agents should use
/// only `observation`; engineered baselines may read the full state.
#[derive(Debug, Clone, Copy)]
pub struct AgentView<'a> {
    pub observation: &'a Observation,
    pub state: &'a SimState,
    pub visible_humans: &'a [HumanState],
    pub plan: &'a GlobalPlan,
}

/// Chooses a raw action code each step. Codes outside 0..=3 end the episode
/// with [`EpisodeError::ActionOutOfRange`].
pub trait Agent {
    fn act(&mut self, view: &AgentView<'_>) -> Result<i64, EpisodeError>;
}

/// Always returns the same action.
#[derive(Debug, Clone, Copy)]
pub struct FixedAgent(pub DiscreteAction);

impl Agent for FixedAgent {
    fn act(&mut self, _: &AgentView<'_>) -> Result<i64, EpisodeError> {
        Ok(self.0.index() as i64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub terminal: Terminal,
    pub metrics: StepMetrics,
    pub log: StepLog,
}

impl StepOutcome {
    pub fn done(&self) -> bool {
        self.terminal != Terminal::Running
    }
}

/// One running episode.
#[derive(Debug, Clone)]
pub struct Episode {
    sim: Arc<Simulator>,
    scenario: Scenario,
    state: SimState,
    plan: GlobalPlan,
    visible: Vec<HumanState>,
    observation: Observation,
    terminal: Terminal,
    discount: f64,
    discounted_return: f64,
}

impl Episode {
    pub fn new(sim: Arc<Simulator>, scenario: Scenario, rng: SimRng) -> Result<Self, NavError> {
        let (state, plan) = sim.initial_state(&scenario, rng)?;
        let visible = sim.env.visible_humans(&state);
        let observation =
            sim.env
                .observe(&state, plan.steer_target().position, sim.config.human_slots);
        Ok(Self {
            sim,
            scenario,
            state,
            plan,
            visible,
            observation,
            terminal: Terminal::Running,
            discount: 1.0,
            discounted_return: 0.0,
        })
    }

    pub fn observation(&self) -> &Observation {
        &self.observation
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn plan(&self) -> &GlobalPlan {
        &self.plan
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn terminal(&self) -> Terminal {
        self.terminal
    }

    pub fn is_done(&self) -> bool {
        self.terminal != Terminal::Running
    }

    pub fn discounted_return(&self) -> f64 {
        self.discounted_return
    }

    pub fn view(&self) -> AgentView<'_> {
        AgentView {
            observation: &self.observation,
            state: &self.state,
            visible_humans: &self.visible,
            plan: &self.plan,
        }
    }

    /// Advances one action period.
    pub fn step(&mut self, action: i64) -> Result<StepOutcome, EpisodeError> {
        if self.is_done() {
            return Err(EpisodeError::Finished);
        }
        let action = DiscreteAction::try_from(action).map_err(EpisodeError::ActionOutOfRange)?;
        let sim = &*self.sim;
        let scan = sim.env.scan_points(&sim.env.simulate_scan(&self.state));
        let cmd = sim
            .nav
            .execute_action(action, &self.state, &self.plan, &self.visible, &scan);
        let next = sim.env.step_env(&self.state, cmd, sim.dt());
        self.plan.advance(
            next.robot_pose.position,
            sim.config.navigation.waypoint_tolerance,
        );
        self.plan.update_steering(
            &sim.env.map,
            next.robot_pose.position,
            sim.steer_clearance(),
        );
        let terminal = check_terminal(&next, &sim.config.scenario);
        let collisions = sim.env.detect_collisions(&next);
        let (reward, metrics) =
            compute_reward(&self.state, &next, terminal, collisions, &sim.config.reward);
        let observation = sim.env.observe(
            &next,
            self.plan.steer_target().position,
            sim.config.human_slots,
        );

        self.discounted_return += self.discount * reward;
        self.discount *= sim.config.reward.gamma;
        self.state = next;
        self.visible = sim.env.visible_humans(&self.state);
        self.observation = observation.clone();
        self.terminal = terminal;

        let pose = self.state.robot_pose;
        let log = StepLog {
            t: self.state.t,
            action: action.index(),
            reward,
            d_g: metrics.d_g,
            force: metrics.force,
            blame: metrics.blame,
            dist_step: metrics.dist_step,
            human_collisions: metrics.human_collisions,
            wall_collisions: metrics.wall_collisions,
            outcome: terminal,
            robot: [pose.position.x, pose.position.y, pose.heading],
            humans: self
                .state
                .humans
                .iter()
                .map(|h| [h.position.x, h.position.y])
                .collect(),
            obs: observation.clone(),
        };
        Ok(StepOutcome {
            observation,
            reward,
            terminal,
            metrics,
            log,
        })
    }
}

/// Summary of a finished episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode_index: usize,
    pub scenario_digest: String,
    pub outcome: Terminal,
    /// Goal reached with zero collisions.
    pub trial_success: bool,
    pub steps: u64,
    /// Only set on success.
    pub time_to_goal: Option<f64>,
    pub distance_traveled: f64,
    pub final_distance_from_goal: f64,
    pub max_force: f64,
    pub max_blame: f64,
    pub human_collisions: u32,
    pub wall_collisions: u32,
    pub discounted_return: f64,
    #[serde(skip)]
    pub log: Vec<StepLog>,
}

impl EpisodeRecord {
    pub fn collisions(&self) -> u32 {
        self.human_collisions + self.wall_collisions
    }
}

/// Runs `agent` on `scenario` until success or failure. With `keep_log`
/// false the per-step log is not retained.
pub fn run_episode(
    sim: &Arc<Simulator>,
    scenario: &Scenario,
    episode_index: usize,
    agent: &mut dyn Agent,
    keep_log: bool,
) -> Result<EpisodeRecord, EpisodeError> {
    let mut episode = Episode::new(
        sim.clone(),
        scenario.clone(),
        sim.episode_rng(episode_index),
    )?;
    let mut log = Vec::new();
    let (mut distance, mut max_force, mut max_blame) = (0.0, 0.0f64, 0.0f64);
    let (mut human_collisions, mut wall_collisions) = (0u32, 0u32);
    while !episode.is_done() {
        let action = agent.act(&episode.view())?;
        let out = episode.step(action)?;
        distance += out.metrics.dist_step;
        max_force = max_force.max(out.metrics.force);
        max_blame = max_blame.max(out.metrics.blame);
        human_collisions += out.metrics.human_collisions;
        wall_collisions += out.metrics.wall_collisions;
        if keep_log {
            log.push(out.log);
        }
    }
    let state = episode.state();
    let outcome = episode.terminal();
    let success = outcome == Terminal::Success;
    Ok(EpisodeRecord {
        episode_index,
        scenario_digest: scenario.digest(),
        outcome,
        trial_success: success && human_collisions + wall_collisions == 0,
        steps: state.steps,
        time_to_goal: success.then(|| state.steps as f64 * sim.dt()),
        distance_traveled: distance,
        final_distance_from_goal: state.robot_pose.position.distance(state.goal.position),
        max_force,
        max_blame,
        human_collisions,
        wall_collisions,
        discounted_return: episode.discounted_return(),
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Pose2, Segment};
    use crate::world::{HumanSpawn, NavEdge};

    fn human_at(x: f64, y: f64) -> HumanState {
        let p = Pose2::from_xyt(x, y, 0.0);
        HumanState::new(p, p, vec![p.position])
    }

    fn state_with(pose: Pose2, v: f64, humans: Vec<HumanState>) -> SimState {
        SimState::new(
            pose,
            VelocityCommand::new(v, 0.0),
            Pose2::from_xyt(10.0, 0.0, 0.0),
            humans,
            0,
        )
    }

    #[test]
    fn force_examples() {
        let origin = Pose2::from_xyt(0.0, 0.0, 0.0);
        assert_eq!(compute_force(&state_with(origin, 0.0, vec![])), 0.0);
        let s = state_with(origin, 0.0, vec![human_at(1.0, 0.0), human_at(0.0, 2.0)]);
        assert!((compute_force(&s) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(
            compute_force(&state_with(origin, 0.0, vec![human_at(0.0, 0.0)])),
            1.0
        );
    }

    #[test]
    fn blame_examples() {
        let origin = Pose2::from_xyt(0.0, 0.0, 0.0);
        let still = state_with(origin, 0.0, vec![human_at(1.5, 0.0), human_at(0.0, -3.0)]);
        assert_eq!(compute_blame(&still), compute_force(&still));
        assert!((compute_blame(&still) - (-1.5f64).exp()).abs() < 1e-15);
        let ahead = state_with(origin, 1.0, vec![human_at(1.0, 0.0)]);
        assert_eq!(compute_blame(&ahead), 1.0);
        let behind = state_with(origin, 1.0, vec![human_at(-1.0, 0.0)]);
        assert!((compute_blame(&behind) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn reward_examples() {
        let w = RewardWeights {
            w1: 1.0,
            w2: -1.0,
            w3: -1.0,
            c: 10.0,
            gamma: 0.99,
        };
        assert!((w.reward(0.1, 0.02, 0.01, Terminal::Running) - 0.07).abs() < 1e-12);
        assert!((w.reward(0.1, 0.02, 0.01, Terminal::Success) - 10.07).abs() < 1e-12);

        let s = state_with(Pose2::from_xyt(1.0, 1.0, 0.0), 0.0, vec![]);
        let (r, m) = compute_reward(&s, &s, Terminal::Running, CollisionCounts::default(), &w);
        assert_eq!(r, 0.0);
        assert_eq!(m, StepMetrics::default());
    }

    #[test]
    fn reward_uses_progress_toward_goal() {
        let w = RewardWeights::default();
        let prev = state_with(Pose2::from_xyt(0.0, 0.0, 0.0), 0.0, vec![]);
        let cur = state_with(Pose2::from_xyt(0.2, 0.0, 0.0), 0.0, vec![]);
        let (r, m) = compute_reward(
            &prev,
            &cur,
            Terminal::Running,
            CollisionCounts::default(),
            &w,
        );
        assert!((m.d_g - 0.2).abs() < 1e-12);
        assert!((m.dist_step - 0.2).abs() < 1e-12);
        assert!((r - 0.2).abs() < 1e-12);
    }

    #[test]
    fn discounted_return_example() {
        assert_eq!(discounted_return(&[1.0, 1.0, 1.0], 0.5), 1.75);
        assert_eq!(discounted_return(&[], 0.9), 0.0);
    }

    #[test]
    fn gamma_must_be_in_unit_interval() {
        let mut w = RewardWeights::default();
        assert!(w.validate().is_ok());
        w.gamma = 0.0;
        assert!(w.validate().is_err());
        w.gamma = 1.0;
        assert!(w.validate().is_ok());
        w.gamma = 1.01;
        assert!(w.validate().is_err());
    }

    fn open_sim(t_fail: f64) -> Arc<Simulator> {
        // A 12 × 6 box with a single corridor of nav nodes along y = 3.
        let s =
            |a: (f64, f64), b: (f64, f64)| Segment::new(Vec2::new(a.0, a.1), Vec2::new(b.0, b.1));
        let walls = vec![
            s((0.0, 0.0), (12.0, 0.0)),
            s((12.0, 0.0), (12.0, 6.0)),
            s((12.0, 6.0), (0.0, 6.0)),
            s((0.0, 6.0), (0.0, 0.0)),
        ];
        let nodes: Vec<Pose2> = (0..6)
            .map(|i| Pose2::from_xyt(1.0 + 2.0 * i as f64, 3.0, 0.0))
            .collect();
        let edges: Vec<NavEdge> = (0..5)
            .map(|i| NavEdge {
                from: i,
                to: i + 1,
                cost: 2.0,
            })
            .collect();
        let map = WorldMap::new("box", walls, nodes, edges, (0..6).collect()).unwrap();
        let mut cfg = SimConfig::default();
        cfg.scenario.t_fail = t_fail;
        Arc::new(Simulator::new(cfg, Arc::new(map)).unwrap())
    }

    fn straight_scenario(humans: Vec<HumanSpawn>) -> Scenario {
        Scenario {
            map: "box".into(),
            robot_start: Pose2::from_xyt(1.0, 3.0, 0.0),
            robot_goal: Pose2::from_xyt(3.0, 3.0, 0.0),
            humans,
        }
    }

    #[test]
    fn go_alone_reaches_goal_two_meters_ahead() {
        let sim = open_sim(60.0);
        let rec = run_episode(
            &sim,
            &straight_scenario(vec![]),
            0,
            &mut FixedAgent(DiscreteAction::GoAlone),
            true,
        )
        .unwrap();
        assert_eq!(rec.outcome, Terminal::Success);
        assert!(rec.trial_success);
        assert!(rec.time_to_goal.unwrap() <= 4.0, "{:?}", rec.time_to_goal);
        // Kinematic lower bound: 1.5 m at 1 m/s after a 0.5 s ramp.
        assert!(rec.time_to_goal.unwrap() >= 1.5);
        assert_eq!(rec.collisions(), 0);
        assert!(rec.final_distance_from_goal < 0.5);
    }

    #[test]
    fn halt_times_out_without_moving() {
        let sim = open_sim(10.0);
        let scenario = straight_scenario(vec![]);
        let rec = run_episode(
            &sim,
            &scenario,
            0,
            &mut FixedAgent(DiscreteAction::Halt),
            true,
        )
        .unwrap();
        assert_eq!(rec.outcome, Terminal::Failure);
        assert_eq!(rec.steps, 50);
        assert_eq!(rec.log.len(), 50);
        assert_eq!(rec.final_distance_from_goal, 2.0);
        assert_eq!(rec.distance_traveled, 0.0);
        assert!(rec.time_to_goal.is_none());
        assert!(rec.log.iter().all(|l| l.action == 0 && l.reward == 0.0));
    }

    #[test]
    fn log_is_consistent_with_record() {
        let sim = open_sim(20.0);
        let humans = vec![HumanSpawn {
            start: Pose2::from_xyt(11.0, 3.0, 0.0),
            goal: Pose2::from_xyt(5.0, 3.0, 0.0),
        }];
        let scenario = Scenario {
            robot_goal: Pose2::from_xyt(9.0, 3.0, 0.0),
            ..straight_scenario(humans)
        };
        let rec = run_episode(
            &sim,
            &scenario,
            3,
            &mut FixedAgent(DiscreteAction::GoAlone),
            true,
        )
        .unwrap();
        let w = &sim.config.reward;
        let rewards: Vec<f64> = rec.log.iter().map(|l| l.reward).collect();
        for l in &rec.log {
            assert!((w.reward(l.d_g, l.force, l.blame, l.outcome) - l.reward).abs() < 1e-9);
            assert!((0.0..=1.0).contains(&l.force) && l.blame >= l.force - 1e-12);
            assert_eq!(l.obs.len(), sim.obs_dim());
        }
        assert!((discounted_return(&rewards, w.gamma) - rec.discounted_return).abs() < 1e-9);
        let traveled: f64 = rec.log.iter().map(|l| l.dist_step).sum();
        assert!((traveled - rec.distance_traveled).abs() < 1e-9);
        assert_eq!(rec.steps as usize, rec.log.len());
        if rec.outcome == Terminal::Success {
            assert!((rec.time_to_goal.unwrap() - rec.steps as f64 * sim.dt()).abs() < 1e-12);
        }
    }

    #[test]
    fn episode_is_bit_reproducible() {
        let sim = open_sim(15.0);
        let humans = vec![HumanSpawn {
            start: Pose2::from_xyt(9.0, 3.0, 0.0),
            goal: Pose2::from_xyt(1.0, 3.0, 0.0),
        }];
        let run = || {
            let rec = run_episode(
                &sim,
                &straight_scenario(humans.clone()),
                1,
                &mut FixedAgent(DiscreteAction::Pass),
                true,
            )
            .unwrap();
            rec.log
                .iter()
                .map(StepLog::to_json_line)
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn bad_action_and_step_after_done_are_errors() {
        let sim = open_sim(0.2);
        let mut ep = Episode::new(
            sim.clone(),
            straight_scenario(vec![]),
            SimRng::from_seed_u64(0),
        )
        .unwrap();
        assert!(matches!(ep.step(4), Err(EpisodeError::ActionOutOfRange(4))));
        assert!(matches!(
            ep.step(-1),
            Err(EpisodeError::ActionOutOfRange(-1))
        ));
        let out = ep.step(0).unwrap();
        assert!(out.done());
        assert!(matches!(ep.step(0), Err(EpisodeError::Finished)));
    }
}
