//! Baseline agents, batch benchmarking and demonstration recording.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::SimState;
use crate::episode::{
    run_episode, Agent, AgentView, Episode, EpisodeError, EpisodeRecord, RewardWeights, Simulator,
};
use crate::geom::transform_to_frame;
use crate::humans::HumanState;
use crate::nav::DiscreteAction;
use crate::rng::{streams, SimRng};
use crate::world::{ConfigError, ScenarioSchedule, Terminal};

/// z for a two-sided 90% normal interval.
pub const Z_90: f64 = 1.6448536269514722;

/// Thresholds of the rule-based reference policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefParams {
    /// Humans farther than this are ignored (m).
    pub engage_range: f64,
    /// An oncoming human closer than this makes the robot halt (m).
    pub halt_range: f64,
    /// Half-angle of the forward cone (deg).
    pub cone_deg: f64,
    /// Radial speed that counts as walking away or toward the robot (m/s).
    pub moving_speed: f64,
}

impl Default for RefParams {
    fn default() -> Self {
        Self {
            engage_range: 2.5,
            halt_range: 1.5,
            cone_deg: 45.0,
            moving_speed: 0.1,
        }
    }
}

/// The reference social policy:
/// no human close ahead → GoAlone; the nearest one walking away → Follow;
/// walking toward the robot and close → Halt; anything else → Pass.
pub fn ref_policy(state: &SimState, visible: &[HumanState], params: &RefParams) -> DiscreteAction {
    let robot = &state.robot_pose;
    let half_cone = params.cone_deg.to_radians();
    let lead = visible
        .iter()
        .filter_map(|h| {
            let rel = transform_to_frame(h.position, robot);
            let d = rel.norm();
            (d <= params.engage_range && rel.angle().abs() <= half_cone).then_some((d, h))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0));
    let Some((d, h)) = lead else {
        return DiscreteAction::GoAlone;
    };
    let radial = (h.position - robot.position)
        .normalized()
        .map_or(0.0, |u| h.velocity.dot(u));
    if radial > params.moving_speed {
        DiscreteAction::Follow
    } else if radial < -params.moving_speed && d <= params.halt_range {
        DiscreteAction::Halt
    } else {
        DiscreteAction::Pass
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaselinePolicy {
    GoAlone,
    Ref,
    Random,
    AlwaysHalt,
}

impl BaselinePolicy {
    pub fn name(self) -> &'static str {
        match self {
            BaselinePolicy::GoAlone => "goalone",
            BaselinePolicy::Ref => "ref",
            BaselinePolicy::Random => "random",
            BaselinePolicy::AlwaysHalt => "halt",
        }
    }

    /// The agent for episode `episode_index` of a run seeded with `seed`.
    pub fn agent(self, params: &RefParams, seed: u64, episode_index: usize) -> BaselineAgent {
        BaselineAgent {
            policy: self,
            params: params.clone(),
            rng: SimRng::stream(seed, streams::POLICY_BASE + episode_index as u64),
        }
    }
}

impl fmt::Display for BaselinePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselinePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "goalone" | "go_alone" => Ok(BaselinePolicy::GoAlone),
            "ref" => Ok(BaselinePolicy::Ref),
            "random" => Ok(BaselinePolicy::Random),
            "halt" | "alwayshalt" | "always_halt" => Ok(BaselinePolicy::AlwaysHalt),
            other => Err(format!(
                "unknown policy {other:?} (expected goalone, ref, random or halt)"
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BaselineAgent {
    policy: BaselinePolicy,
    params: RefParams,
    rng: SimRng,
}

impl Agent for BaselineAgent {
    fn act(&mut self, view: &AgentView<'_>) -> Result<i64, EpisodeError> {
        let action = match self.policy {
            BaselinePolicy::GoAlone => DiscreteAction::GoAlone,
            BaselinePolicy::AlwaysHalt => DiscreteAction::Halt,
            BaselinePolicy::Random => DiscreteAction::ALL[self.rng.gen_range(0..4)],
            BaselinePolicy::Ref => ref_policy(view.state, view.visible_humans, &self.params),
        };
        Ok(action.index() as i64)
    }
}

/// An agent in a child process. Each step it receives `{"obs": [...]}` on
/// stdin and must answer with one line holding the action, either a bare
/// integer or `{"action": n}`.
pub struct ExternalAgent {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    line: String,
}

impl ExternalAgent {
    pub fn spawn(program: &str, args: &[String]) -> std::io::Result<Self> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = BufReader::new(child.stdout.take().expect("stdout is piped"));
        Ok(Self {
            child,
            stdin,
            stdout,
            line: String::new(),
        })
    }
}

impl Agent for ExternalAgent {
    fn act(&mut self, view: &AgentView<'_>) -> Result<i64, EpisodeError> {
        let agent_err = |e: std::io::Error| EpisodeError::Agent(e.to_string());
        let msg = serde_json::json!({ "obs": view.observation });
        writeln!(self.stdin, "{msg}").map_err(agent_err)?;
        self.stdin.flush().map_err(agent_err)?;
        self.line.clear();
        if self.stdout.read_line(&mut self.line).map_err(agent_err)? == 0 {
            return Err(EpisodeError::Agent("agent closed its output".into()));
        }
        let value: serde_json::Value = serde_json::from_str(self.line.trim())
            .map_err(|e| EpisodeError::Agent(format!("unparsable reply: {e}")))?;
        value
            .as_i64()
            .or_else(|| value.get("action").and_then(serde_json::Value::as_i64))
            .ok_or_else(|| {
                EpisodeError::Agent(format!("reply has no action: {}", self.line.trim()))
            })
    }
}

impl Drop for ExternalAgent {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// A policy under evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    Baseline(BaselinePolicy),
    /// Program and arguments of an external agent process.
    External {
        program: String,
        args: Vec<String>,
    },
}

impl PolicySpec {
    pub fn name(&self) -> String {
        match self {
            PolicySpec::Baseline(p) => p.name().to_string(),
            PolicySpec::External { program, .. } => format!("external:{program}"),
        }
    }
}

impl FromStr for PolicySpec {
    type Err = String;

    /// A baseline name, or `external:<program> [args...]`.
    fn from_str(s: &str) -> Result<Self, String> {
        match s.strip_prefix("external:") {
            Some(cmd) => {
                let mut parts = cmd.split_whitespace().map(str::to_string);
                let program = parts.next().ok_or("external policy needs a program")?;
                Ok(PolicySpec::External {
                    program,
                    args: parts.collect(),
                })
            }
            None => s.parse().map(PolicySpec::Baseline),
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("policy {policy}, episode {episode}")]
    Episode {
        policy: String,
        episode: usize,
        source: EpisodeError,
    },
    #[error("cannot start agent {program}")]
    Spawn {
        program: String,
        source: std::io::Error,
    },
    #[error("cannot write {path}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Sample mean with a normal-approximation 90% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub n: usize,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl MeanCi {
    /// `None` for an empty sample. A single value has a zero-width interval.
    pub fn from_samples(xs: &[f64]) -> Option<Self> {
        let n = xs.len();
        if n == 0 {
            return None;
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let half = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            Z_90 * (var / n as f64).sqrt()
        } else {
            0.0
        };
        Some(Self {
            n,
            mean,
            ci_low: mean - half,
            ci_high: mean + half,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub policy: String,
    /// Fraction of trials that reached the goal without any collision.
    pub success_rate: f64,
    /// Fraction that reached the goal regardless of collisions.
    pub goal_rate: f64,
    pub max_force: Option<MeanCi>,
    pub max_blame: Option<MeanCi>,
    /// Over successful trials only.
    pub time_to_goal: Option<MeanCi>,
    pub distance_traveled: Option<MeanCi>,
    pub discounted_return: Option<MeanCi>,
    pub episodes: Vec<EpisodeRecord>,
}

impl PolicySummary {
    fn from_records(policy: String, records: Vec<EpisodeRecord>) -> Self {
        let n = records.len().max(1) as f64;
        let collect = |f: &dyn Fn(&EpisodeRecord) -> Option<f64>| -> Vec<f64> {
            records.iter().filter_map(f).collect()
        };
        Self {
            policy,
            success_rate: records.iter().filter(|r| r.trial_success).count() as f64 / n,
            goal_rate: records
                .iter()
                .filter(|r| r.outcome == Terminal::Success)
                .count() as f64
                / n,
            max_force: MeanCi::from_samples(&collect(&|r| Some(r.max_force))),
            max_blame: MeanCi::from_samples(&collect(&|r| Some(r.max_blame))),
            time_to_goal: MeanCi::from_samples(&collect(&|r| {
                r.time_to_goal.filter(|_| r.trial_success)
            })),
            distance_traveled: MeanCi::from_samples(&collect(&|r| Some(r.distance_traveled))),
            discounted_return: MeanCi::from_samples(&collect(&|r| Some(r.discounted_return))),
            episodes: records,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub n_episodes: usize,
    pub config_fingerprint: String,
    pub seed: u64,
    pub reward: RewardWeights,
    /// Scenario digest of every episode, shared by all policies.
    pub scenario_digests: Vec<String>,
    pub policies: Vec<PolicySummary>,
}

impl BenchReport {
    pub fn policy(&self, name: &str) -> Option<&PolicySummary> {
        self.policies.iter().find(|p| p.policy == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// The first `n_episodes` episodes of the configured schedule.
fn bench_schedule(sim: &Simulator, n_episodes: usize) -> ScenarioSchedule {
    let mut cfg = sim.config.scenario.clone();
    cfg.n_max_iters = n_episodes;
    ScenarioSchedule::new(sim.map().clone(), cfg)
}

/// Runs every policy on the same `n_episodes` scheduled episodes.
///
/// Baseline episodes run on the rayon pool when `parallel` is set; results
/// are gathered in episode order either way, so the report does not depend
/// on it. External agents always run sequentially.
pub fn run_benchmark(
    sim: &Arc<Simulator>,
    policies: &[PolicySpec],
    n_episodes: usize,
    parallel: bool,
) -> Result<BenchReport, BenchError> {
    let scenarios = bench_schedule(sim, n_episodes)
        .map(|e| e.map(|e| e.scenario))
        .collect::<Result<Vec<_>, _>>()?;
    let seed = sim.config.scenario.seed;
    let mut summaries = Vec::with_capacity(policies.len());
    for spec in policies {
        let name = spec.name();
        let annotate = |episode: usize| {
            let name = name.clone();
            move |source| BenchError::Episode {
                policy: name,
                episode,
                source,
            }
        };
        let records = match spec {
            PolicySpec::Baseline(policy) => {
                let run_one = |(i, scenario)| {
                    let mut agent = policy.agent(&sim.config.ref_policy, seed, i);
                    run_episode(sim, scenario, i, &mut agent, false).map_err(annotate(i))
                };
                if parallel {
                    scenarios
                        .par_iter()
                        .enumerate()
                        .map(run_one)
                        .collect::<Result<Vec<_>, _>>()?
                } else {
                    scenarios
                        .iter()
                        .enumerate()
                        .map(run_one)
                        .collect::<Result<Vec<_>, _>>()?
                }
            }
            PolicySpec::External { program, args } => {
                let mut agent =
                    ExternalAgent::spawn(program, args).map_err(|source| BenchError::Spawn {
                        program: program.clone(),
                        source,
                    })?;
                scenarios
                    .iter()
                    .enumerate()
                    .map(|(i, s)| run_episode(sim, s, i, &mut agent, false).map_err(annotate(i)))
                    .collect::<Result<Vec<_>, _>>()?
            }
        };
        log::info!("{name}: {} episodes done", records.len());
        summaries.push(PolicySummary::from_records(name, records));
    }
    Ok(BenchReport {
        n_episodes,
        config_fingerprint: sim.config.fingerprint(),
        seed,
        reward: sim.config.reward.clone(),
        scenario_digests: scenarios.iter().map(|s| s.digest()).collect(),
        policies: summaries,
    })
}

/// One recorded transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demonstration {
    pub obs: Vec<f64>,
    pub action: u8,
    pub reward: f64,
    pub done: bool,
}

/// Runs `policy` for `n_episodes` scheduled episodes and writes one JSONL
/// line per step. Returns the number of lines. On failure the partial file
/// is removed.
pub fn record_demonstrations(
    sim: &Arc<Simulator>,
    policy: BaselinePolicy,
    n_episodes: usize,
    out: &Path,
) -> Result<usize, BenchError> {
    let result = write_demonstrations(sim, policy, n_episodes, out);
    if result.is_err() {
        let _ = std::fs::remove_file(out);
    }
    result
}

fn write_demonstrations(
    sim: &Arc<Simulator>,
    policy: BaselinePolicy,
    n_episodes: usize,
    out: &Path,
) -> Result<usize, BenchError> {
    let io_err = |source| BenchError::Io {
        path: out.display().to_string(),
        source,
    };
    let mut writer = BufWriter::new(File::create(out).map_err(io_err)?);
    let mut count = 0;
    for scheduled in bench_schedule(sim, n_episodes) {
        let scheduled = scheduled?;
        let i = scheduled.episode_index;
        let episode_err = |source| BenchError::Episode {
            policy: policy.name().to_string(),
            episode: i,
            source,
        };
        let mut agent = policy.agent(&sim.config.ref_policy, sim.config.scenario.seed, i);
        let mut episode = Episode::new(sim.clone(), scheduled.scenario, sim.episode_rng(i))
            .map_err(|e| episode_err(e.into()))?;
        while !episode.is_done() {
            let obs = episode.observation().0.clone();
            let action = agent.act(&episode.view()).map_err(episode_err)?;
            let out = episode.step(action).map_err(episode_err)?;
            let line = Demonstration {
                obs,
                action: out.log.action,
                reward: out.reward,
                done: out.done(),
            };
            serde_json::to_writer(&mut writer, &line).map_err(|e| io_err(e.into()))?;
            writer.write_all(b"\n").map_err(io_err)?;
            count += 1;
        }
    }
    writer.flush().map_err(io_err)?;
    Ok(count)
}
