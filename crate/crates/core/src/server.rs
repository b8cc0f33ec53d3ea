//! Line-delimited JSON environment service.
//!
//! Each request is one JSON object on one line and gets exactly one JSON
//! line back:
//!
//! ```text
//! {"cmd":"spec"}                 -> {"obs_dim":26,"n_actions":4,"dt":0.2}
//! {"cmd":"reset","seed":7}       -> {"obs":[..],"reward":0.0,"done":false,"metrics":{},"episode":0}
//! {"cmd":"step","action":1}      -> {"obs":[..],"reward":..,"done":..,"metrics":{..}}
//! {"cmd":"close"}                -> {"closed":true}
//! ```
//!
//! A finished step also carries `"outcome":"success"|"failure"`. Problems
//! with a request are answered with `{"error":"..."}` and the session stays
//! usable.

use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::TcpListener;
use std::sync::Arc;

use serde_json::{json, Value};

use crate::env::observation_dim;
use crate::episode::{Episode, EpisodeError, Simulator};
use crate::nav::DiscreteAction;

pub const N_ACTIONS: usize = 4;

/// One client session: the scenario schedule, the running episode and an
/// optional step log sink.
pub struct Session {
    sim: Arc<Simulator>,
    next_episode: usize,
    episode: Option<Episode>,
    log: Option<Box<dyn Write + Send>>,
    log_failure: Option<io::Error>,
    closed: bool,
}

impl Session {
    pub fn new(sim: Arc<Simulator>) -> Self {
        Self {
            sim,
            next_episode: 0,
            episode: None,
            log: None,
            log_failure: None,
            closed: false,
        }
    }

    /// Appends every step's log line to `sink`.
    pub fn with_log(mut self, sink: Box<dyn Write + Send>) -> Self {
        self.log = Some(sink);
        self
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn simulator(&self) -> &Arc<Simulator> {
        &self.sim
    }

    /// Answers one request line. Only a failing log sink is an `Err`.
    pub fn handle_line(&mut self, line: &str) -> io::Result<String> {
        let response = match self.dispatch(line) {
            Ok(v) => v,
            Err(msg) => json!({ "error": msg }),
        };
        if let Some(e) = self.log_failure.take() {
            return Err(e);
        }
        if let Some(sink) = &mut self.log {
            sink.flush()?;
        }
        Ok(response.to_string())
    }

    fn dispatch(&mut self, line: &str) -> Result<Value, String> {
        if self.closed {
            return Err("session closed".into());
        }
        let request: Value =
            serde_json::from_str(line.trim()).map_err(|e| format!("malformed request: {e}"))?;
        let Value::Object(fields) = request else {
            return Err("request must be a JSON object".into());
        };
        let cmd = match fields.get("cmd") {
            Some(Value::String(s)) => s.as_str(),
            Some(_) => return Err("cmd must be a string".into()),
            None => return Err("missing cmd".into()),
        };
        match cmd {
            "spec" => Ok(json!({
                "obs_dim": observation_dim(self.sim.config.human_slots),
                "n_actions": N_ACTIONS,
                "dt": self.sim.dt(),
            })),
            "reset" => self.reset(fields.get("seed")),
            "step" => self.step(fields.get("action")),
            "close" => {
                self.closed = true;
                self.episode = None;
                Ok(json!({ "closed": true }))
            }
            other => Err(format!("unknown cmd {other:?}")),
        }
    }

    fn reset(&mut self, seed: Option<&Value>) -> Result<Value, String> {
        match seed {
            None | Some(Value::Null) => {}
            Some(v) => {
                let seed = v
                    .as_u64()
                    .ok_or_else(|| "seed must be a non-negative integer".to_string())?;
                let mut config = self.sim.config.clone();
                config.scenario.seed = seed;
                let sim =
                    Simulator::new(config, self.sim.map().clone()).map_err(|e| e.to_string())?;
                self.sim = Arc::new(sim);
                self.next_episode = 0;
            }
        }
        let index = self.next_episode;
        let scheduled = self
            .sim
            .schedule()
            .episode(index)
            .ok_or_else(|| {
                format!("scenario schedule exhausted after {index} episodes; reset with a seed")
            })?
            .map_err(|e| e.to_string())?;
        let episode = Episode::new(
            self.sim.clone(),
            scheduled.scenario,
            self.sim.episode_rng(index),
        )
        .map_err(|e| e.to_string())?;
        self.next_episode += 1;
        let obs = episode.observation().clone();
        self.episode = Some(episode);
        Ok(json!({
            "obs": obs,
            "reward": 0.0,
            "done": false,
            "metrics": {},
            "episode": index,
        }))
    }

    fn step(&mut self, action: Option<&Value>) -> Result<Value, String> {
        let action = match action {
            Some(Value::Number(n)) => match (n.as_i64(), n.as_u64()) {
                (Some(a), _) => a,
                (None, Some(_)) => return Err("action out of range".into()),
                (None, None) => return Err("action must be an integer".into()),
            },
            Some(_) => return Err("action must be an integer".into()),
            None => return Err("step requires an integer action".into()),
        };
        if DiscreteAction::try_from(action).is_err() {
            return Err("action out of range".into());
        }
        let episode = self
            .episode
            .as_mut()
            .ok_or_else(|| "no active episode; send reset first".to_string())?;
        let outcome = episode.step(action).map_err(|e| match e {
            EpisodeError::Finished => "episode finished; send reset".to_string(),
            other => other.to_string(),
        })?;
        if let Some(sink) = &mut self.log {
            if let Err(e) = writeln!(sink, "{}", outcome.log.to_json_line()) {
                self.log_failure = Some(e);
            }
        }
        let mut response = json!({
            "obs": outcome.observation,
            "reward": outcome.reward,
            "done": outcome.done(),
            "metrics": outcome.metrics,
        });
        if outcome.done() {
            response["outcome"] = json!(outcome.terminal);
        }
        Ok(response)
    }
}

/// Runs `session` over a line stream until `close`.
///
/// Bytes that are not valid UTF-8 are replaced rather than rejected, so every
/// line gets a response. End of input before `close` is an error.
pub fn serve<R: BufRead, W: Write>(
    session: &mut Session,
    mut input: R,
    output: W,
) -> io::Result<()> {
    let mut output = BufWriter::new(output);
    let mut buf = Vec::new();
    while !session.is_closed() {
        buf.clear();
        if input.read_until(b'\n', &mut buf)? == 0 {
            return Err(io::Error::new(
                io::ErrorKind::UnexpectedEof,
                "connection closed before close request",
            ));
        }
        let line = String::from_utf8_lossy(&buf);
        let response = session.handle_line(&line)?;
        output.write_all(response.as_bytes())?;
        output.write_all(b"\n")?;
        output.flush()?;
    }
    Ok(())
}

pub fn serve_stdio(session: &mut Session) -> io::Result<()> {
    let stdin = io::stdin();
    serve(session, stdin.lock(), io::stdout().lock())
}

/// Accepts a single connection on `127.0.0.1:port` and serves it. With port
/// 0 the OS picks one; `on_bound` receives the actual address either way.
pub fn serve_tcp(
    session: &mut Session,
    port: u16,
    on_bound: impl FnOnce(std::net::SocketAddr),
) -> io::Result<()> {
    let listener = TcpListener::bind(("127.0.0.1", port))?;
    on_bound(listener.local_addr()?);
    let (stream, peer) = listener.accept()?;
    log::info!("client connected from {peer}");
    let reader = BufReader::new(stream.try_clone()?);
    serve(session, reader, stream)
}
