//! Static maps, the navigation graph of legal poses, and randomized scenarios.

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::env::SimState;
use crate::geom::{segment_segment_distance, segments_intersect, Pose2, Segment, Vec2};
use crate::rng::{streams, SimRng};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum MapError {
    #[error("cannot read map {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed map JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported format_version {0} (expected {FORMAT_VERSION})")]
    Version(u32),
    #[error("segment {index} is degenerate or non-finite")]
    DegenerateSegment { index: usize },
    #[error("nav node {index} is non-finite")]
    BadNode { index: usize },
    #[error("nav edge {edge} references missing node {node}")]
    BadEdgeNode { edge: usize, node: usize },
    #[error("legal pose index {0} out of range")]
    BadLegalIndex(usize),
    #[error("nav edge {edge} ({from}->{to}) has non-positive cost {cost}")]
    NonPositiveCost {
        edge: usize,
        from: usize,
        to: usize,
        cost: f64,
    },
    #[error("nav edge {edge} ({from}->{to}) crosses wall segment {wall}")]
    EdgeCrossesWall {
        edge: usize,
        from: usize,
        to: usize,
        wall: usize,
    },
    #[error("legal pose {node} is not connected to legal pose {other} in the nav graph")]
    Disconnected { node: usize, other: usize },
    #[error("map has no legal poses")]
    NoLegalPoses,
    #[error("unknown builtin map '{0}'")]
    UnknownBuiltin(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("need at least h_max + 2 = {needed} distinct legal poses, map has {available}")]
    TooFewPoses { needed: usize, available: usize },
    #[error("could not place {humans} non-overlapping humans after {attempts} attempts")]
    CannotPlaceHumans { humans: usize, attempts: usize },
    #[error("invalid scenario config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NavEdge {
    pub from: usize,
    pub to: usize,
    pub cost: f64,
}

/// Walls plus the navigation graph. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldMap {
    pub name: String,
    pub segments: Vec<Segment>,
    pub nav_nodes: Vec<Pose2>,
    pub nav_edges: Vec<NavEdge>,
    /// Indices into `nav_nodes` of legal start/goal poses (the pose list G).
    pub legal_pose_indices: Vec<usize>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MapFile {
    format_version: u32,
    name: String,
    segments: Vec<[f64; 4]>,
    nav_nodes: Vec<[f64; 3]>,
    nav_edges: Vec<[usize; 2]>,
    legal_pose_indices: Vec<usize>,
}

const TRAINING_MAP: &str = include_str!("../../../maps/training.json");
const TRANSFER_MAP: &str = include_str!("../../../maps/transfer.json");

impl WorldMap {
    /// Builds a map from parts, checking only structural soundness (indices in
    /// range, finite values). Use [`WorldMap::validate`] for the invariants.
    pub fn new(
        name: impl Into<String>,
        segments: Vec<Segment>,
        nav_nodes: Vec<Pose2>,
        nav_edges: Vec<NavEdge>,
        legal_pose_indices: Vec<usize>,
    ) -> Result<Self, MapError> {
        for (index, n) in nav_nodes.iter().enumerate() {
            if !n.position.is_finite() || !n.heading.is_finite() {
                return Err(MapError::BadNode { index });
            }
        }
        let mut adjacency = vec![Vec::new(); nav_nodes.len()];
        for (i, e) in nav_edges.iter().enumerate() {
            for node in [e.from, e.to] {
                if node >= nav_nodes.len() {
                    return Err(MapError::BadEdgeNode { edge: i, node });
                }
            }
            adjacency[e.from].push((e.to, e.cost));
            adjacency[e.to].push((e.from, e.cost));
        }
        for &l in &legal_pose_indices {
            if l >= nav_nodes.len() {
                return Err(MapError::BadLegalIndex(l));
            }
        }
        Ok(Self {
            name: name.into(),
            segments,
            nav_nodes,
            nav_edges,
            legal_pose_indices,
            adjacency,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, MapError> {
        let file: MapFile = serde_json::from_str(text)?;
        if file.format_version != FORMAT_VERSION {
            return Err(MapError::Version(file.format_version));
        }
        let segments = file
            .segments
            .iter()
            .enumerate()
            .map(|(index, s)| {
                Segment::try_new(Vec2::new(s[0], s[1]), Vec2::new(s[2], s[3]))
                    .ok_or(MapError::DegenerateSegment { index })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let nav_nodes: Vec<Pose2> = file
            .nav_nodes
            .iter()
            .map(|n| Pose2::from_xyt(n[0], n[1], n[2]))
            .collect();
        let mut nav_edges = Vec::with_capacity(file.nav_edges.len());
        for (edge, &[from, to]) in file.nav_edges.iter().enumerate() {
            for node in [from, to] {
                if node >= nav_nodes.len() {
                    return Err(MapError::BadEdgeNode { edge, node });
                }
            }
            let cost = nav_nodes[from].position.distance(nav_nodes[to].position);
            nav_edges.push(NavEdge { from, to, cost });
        }
        Self::new(
            file.name,
            segments,
            nav_nodes,
            nav_edges,
            file.legal_pose_indices,
        )
    }

    pub fn to_json(&self) -> String {
        let file = MapFile {
            format_version: FORMAT_VERSION,
            name: self.name.clone(),
            segments: self
                .segments
                .iter()
                .map(|s| [s.a.x, s.a.y, s.b.x, s.b.y])
                .collect(),
            nav_nodes: self
                .nav_nodes
                .iter()
                .map(|n| [n.position.x, n.position.y, n.heading])
                .collect(),
            nav_edges: self.nav_edges.iter().map(|e| [e.from, e.to]).collect(),
            legal_pose_indices: self.legal_pose_indices.clone(),
        };
        serde_json::to_string_pretty(&file).expect("map serialization cannot fail")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MapError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| MapError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// One of the maps shipped with the crate: `training` or `transfer`.
    pub fn builtin(name: &str) -> Result<Self, MapError> {
        match name {
            "training" => Self::from_json(TRAINING_MAP),
            "transfer" => Self::from_json(TRANSFER_MAP),
            other => Err(MapError::UnknownBuiltin(other.to_string())),
        }
    }

    /// Resolves `builtin:<name>` or a path (relative paths against `base`).
    pub fn resolve(spec: &str, base: Option<&Path>) -> Result<Self, MapError> {
        if let Some(name) = spec.strip_prefix("builtin:") {
            return Self::builtin(name);
        }
        let path = Path::new(spec);
        match base {
            Some(dir) if path.is_relative() => Self::load(dir.join(path)),
            _ => Self::load(path),
        }
    }

    /// All invariant violations; empty when the map is valid.
    pub fn validate(&self) -> Vec<MapError> {
        let mut issues = Vec::new();
        if self.legal_pose_indices.is_empty() {
            issues.push(MapError::NoLegalPoses);
        }
        for (edge, e) in self.nav_edges.iter().enumerate() {
            if !(e.cost > 0.0 && e.cost.is_finite()) {
                issues.push(MapError::NonPositiveCost {
                    edge,
                    from: e.from,
                    to: e.to,
                    cost: e.cost,
                });
            }
            let (p, q) = (
                self.nav_nodes[e.from].position,
                self.nav_nodes[e.to].position,
            );
            if let Some(wall) = self
                .segments
                .iter()
                .position(|w| segments_intersect(p, q, w))
            {
                issues.push(MapError::EdgeCrossesWall {
                    edge,
                    from: e.from,
                    to: e.to,
                    wall,
                });
            }
        }
        if let Some(&first) = self.legal_pose_indices.first() {
            let reach = self.reachable_from(first);
            for &l in &self.legal_pose_indices {
                if !reach[l] {
                    issues.push(MapError::Disconnected {
                        node: l,
                        other: first,
                    });
                }
            }
        }
        issues
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, f64)] {
        &self.adjacency[node]
    }

    /// True if the closed straight segment `p`–`q` touches no wall.
    pub fn is_segment_free(&self, p: Vec2, q: Vec2) -> bool {
        !self.segments.iter().any(|w| segments_intersect(p, q, w))
    }

    /// Distance from segment `pq` to the nearest wall; infinite with no walls.
    pub fn segment_clearance(&self, p: Vec2, q: Vec2) -> f64 {
        self.segments
            .iter()
            .map(|w| segment_segment_distance(p, q, w))
            .fold(f64::INFINITY, f64::min)
    }

    fn reachable_from(&self, start: usize) -> Vec<bool> {
        let mut seen = vec![false; self.nav_nodes.len()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(n) = queue.pop_front() {
            for &(m, _) in &self.adjacency[n] {
                if !seen[m] {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
        seen
    }

    /// Legal pose indices with duplicates removed, in first-seen order.
    fn distinct_legal(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::with_capacity(self.legal_pose_indices.len());
        for &i in &self.legal_pose_indices {
            let p = self.nav_nodes[i].position;
            if !out.iter().any(|&j| self.nav_nodes[j].position == p) {
                out.push(i);
            }
        }
        out
    }
}

fn default_n_repeat() -> usize {
    1
}
fn default_n_max_iters() -> usize {
    1000
}
fn default_eps_success() -> f64 {
    0.5
}
fn default_t_fail() -> f64 {
    60.0
}
fn default_spawn_separation() -> f64 {
    0.6
}
fn default_map() -> String {
    "builtin:training".to_string()
}

/// Parameters of the scenario generator and the success/failure predicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// `builtin:<name>` or a path to a map file.
    #[serde(default = "default_map")]
    pub map: String,
    #[serde(default)]
    pub h_min: usize,
    #[serde(default)]
    pub h_max: usize,
    /// Episodes per generated scenario (N_r).
    #[serde(default = "default_n_repeat")]
    pub n_repeat: usize,
    /// Total episodes in a schedule (N_m).
    #[serde(default = "default_n_max_iters")]
    pub n_max_iters: usize,
    #[serde(default = "default_eps_success")]
    pub eps_success: f64,
    #[serde(default = "default_t_fail")]
    pub t_fail: f64,
    #[serde(default)]
    pub seed: u64,
    /// Minimum distance between any two spawn positions (two agent radii).
    #[serde(default = "default_spawn_separation")]
    pub spawn_separation: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            map: default_map(),
            h_min: 0,
            h_max: 0,
            n_repeat: default_n_repeat(),
            n_max_iters: default_n_max_iters(),
            eps_success: default_eps_success(),
            t_fail: default_t_fail(),
            seed: 0,
            spawn_separation: default_spawn_separation(),
        }
    }
}

/// Standalone scenario-config file, versioned like the map format.
#[derive(Debug, Serialize, Deserialize)]
struct ScenarioConfigFile {
    format_version: u32,
    #[serde(flatten)]
    config: ScenarioConfig,
}

impl ScenarioConfig {
    pub fn validate(&self, human_capacity: usize) -> Result<(), ConfigError> {
        if self.h_min > self.h_max {
            return Err(ConfigError::Invalid(format!(
                "h_min {} > h_max {}",
                self.h_min, self.h_max
            )));
        }
        if self.h_max > human_capacity {
            return Err(ConfigError::Invalid(format!(
                "h_max {} exceeds observation capacity {}",
                self.h_max, human_capacity
            )));
        }
        if !(self.eps_success > 0.0 && self.t_fail > 0.0 && self.t_fail.is_finite()) {
            return Err(ConfigError::Invalid(
                "eps_success and t_fail must be positive".into(),
            ));
        }
        if self.n_repeat == 0 || self.n_max_iters == 0 {
            return Err(ConfigError::Invalid(
                "n_repeat and n_max_iters must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let file: ScenarioConfigFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if file.format_version != FORMAT_VERSION {
            return Err(format!(
                "unsupported format_version {}",
                file.format_version
            ));
        }
        Ok(file.config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ScenarioConfigFile {
            format_version: FORMAT_VERSION,
            config: self.clone(),
        })
        .expect("config serialization cannot fail")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HumanSpawn {
    pub start: Pose2,
    pub goal: Pose2,
}

/// Initial conditions of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub map: String,
    pub robot_start: Pose2,
    pub robot_goal: Pose2,
    pub humans: Vec<HumanSpawn>,
}

impl Scenario {
    /// Stable content hash, hex encoded.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("scenario serialization cannot fail");
        hex::encode(&Sha256::digest(&bytes)[..16])
    }
}

const PLACEMENT_ATTEMPTS: usize = 64;

/// Draws one scenario from the legal poses of `map`.
pub fn generate_scenario(
    map: &WorldMap,
    cfg: &ScenarioConfig,
    rng: &mut SimRng,
) -> Result<Scenario, ConfigError> {
    let legal = map.distinct_legal();
    let needed = cfg.h_max + 2;
    if legal.len() < needed || cfg.h_min > cfg.h_max {
        return Err(ConfigError::TooFewPoses {
            needed,
            available: legal.len(),
        });
    }
    let pose = |i: usize| map.nav_nodes[i];
    let sep = cfg.spawn_separation;

    'attempt: for _ in 0..PLACEMENT_ATTEMPTS {
        let start = legal[rng.gen_range(0..legal.len())];
        let others: Vec<usize> = legal.iter().copied().filter(|&i| i != start).collect();
        let goal = others[rng.gen_range(0..others.len())];
        let n = rng.gen_range(cfg.h_min..=cfg.h_max);

        let mut occupied = vec![pose(start).position];
        let mut humans = Vec::with_capacity(n);
        for _ in 0..n {
            let free: Vec<usize> = legal
                .iter()
                .copied()
                .filter(|&i| occupied.iter().all(|o| o.distance(pose(i).position) >= sep))
                .collect();
            if free.is_empty() {
                continue 'attempt;
            }
            let hs = free[rng.gen_range(0..free.len())];
            let targets: Vec<usize> = legal.iter().copied().filter(|&i| i != hs).collect();
            let hg = targets[rng.gen_range(0..targets.len())];
            occupied.push(pose(hs).position);
            humans.push(HumanSpawn {
                start: pose(hs),
                goal: pose(hg),
            });
        }
        return Ok(Scenario {
            map: map.name.clone(),
            robot_start: pose(start),
            robot_goal: pose(goal),
            humans,
        });
    }
    Err(ConfigError::CannotPlaceHumans {
        humans: cfg.h_max,
        attempts: PLACEMENT_ATTEMPTS,
    })
}

/// One entry of a schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledEpisode {
    /// Position in the schedule, `0..n_max_iters`.
    pub episode_index: usize,
    pub scenario_index: usize,
    /// Which repetition of the scenario this is, `0..n_repeat`.
    pub repeat_index: usize,
    pub scenario: Scenario,
}

/// Lazily yields `n_max_iters` episodes, each scenario repeated `n_repeat` times.
///
/// Scenario `k` is drawn from its own PRNG stream, so any episode can be
/// produced without generating the ones before it.
#[derive(Debug, Clone)]
pub struct ScenarioSchedule {
    map: Arc<WorldMap>,
    cfg: ScenarioConfig,
    next: usize,
    cached: Option<(usize, Scenario)>,
}

impl ScenarioSchedule {
    pub fn new(map: Arc<WorldMap>, cfg: ScenarioConfig) -> Self {
        Self {
            map,
            cfg,
            next: 0,
            cached: None,
        }
    }

    pub fn len(&self) -> usize {
        self.cfg.n_max_iters
    }

    pub fn is_empty(&self) -> bool {
        self.cfg.n_max_iters == 0
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn scenario(&self, scenario_index: usize) -> Result<Scenario, ConfigError> {
        let mut rng = SimRng::stream(
            self.cfg.seed,
            streams::SCENARIO_BASE + scenario_index as u64,
        );
        generate_scenario(&self.map, &self.cfg, &mut rng)
    }

    /// The `episode_index`-th scheduled episode, if within `n_max_iters`.
    pub fn episode(&self, episode_index: usize) -> Option<Result<ScheduledEpisode, ConfigError>> {
        if episode_index >= self.cfg.n_max_iters {
            return None;
        }
        let repeat = self.cfg.n_repeat.max(1);
        let scenario_index = episode_index / repeat;
        Some(
            self.scenario(scenario_index)
                .map(|scenario| ScheduledEpisode {
                    episode_index,
                    scenario_index,
                    repeat_index: episode_index % repeat,
                    scenario,
                }),
        )
    }
}

impl Iterator for ScenarioSchedule {
    type Item = Result<ScheduledEpisode, ConfigError>;

    fn next(&mut self) -> Option<Self::Item> {
        let episode_index = self.next;
        if episode_index >= self.cfg.n_max_iters {
            return None;
        }
        self.next += 1;
        let repeat = self.cfg.n_repeat.max(1);
        let scenario_index = episode_index / repeat;
        let scenario = match &self.cached {
            Some((k, s)) if *k == scenario_index => s.clone(),
            _ => match self.scenario(scenario_index) {
                Ok(s) => {
                    self.cached = Some((scenario_index, s.clone()));
                    s
                }
                Err(e) => return Some(Err(e)),
            },
        };
        Some(Ok(ScheduledEpisode {
            episode_index,
            scenario_index,
            repeat_index: episode_index % repeat,
            scenario,
        }))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.cfg.n_max_iters - self.next;
        (left, Some(left))
    }
}

impl ExactSizeIterator for ScenarioSchedule {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Terminal {
    Running,
    Success,
    Failure,
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Terminal::Running => "running",
            Terminal::Success => "success",
            Terminal::Failure => "failure",
        })
    }
}

/// Success when within `eps_success` of the goal; failure once the time
/// budget `t_fail` is used up without success.
pub fn check_terminal(state: &SimState, cfg: &ScenarioConfig) -> Terminal {
    terminal_for(
        state.robot_pose.position.distance(state.goal.position),
        state.t,
        cfg,
    )
}

pub(crate) fn terminal_for(dist_to_goal: f64, t: f64, cfg: &ScenarioConfig) -> Terminal {
    if dist_to_goal < cfg.eps_success {
        Terminal::Success
    } else if t >= cfg.t_fail - 1e-9 {
        Terminal::Failure
    } else {
        Terminal::Running
    }
}
