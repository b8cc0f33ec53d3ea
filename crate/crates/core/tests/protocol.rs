use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::sync::{mpsc, Arc, Mutex};

use serde_json::{json, Value};
use socnav_core::config::SimConfig;
use socnav_core::episode::{Episode, Simulator};
use socnav_core::server::{serve_tcp, Session};
use socnav_core::world::WorldMap;

fn simulator(h: usize, t_fail: f64) -> Arc<Simulator> {
    let mut cfg = SimConfig::default();
    cfg.scenario.h_min = h;
    cfg.scenario.h_max = h;
    cfg.scenario.t_fail = t_fail;
    let map = Arc::new(WorldMap::builtin("training").unwrap());
    Arc::new(Simulator::new(cfg, map).unwrap())
}

fn ask(s: &mut Session, req: Value) -> Value {
    serde_json::from_str(&s.handle_line(&req.to_string()).unwrap()).unwrap()
}

/// Shared in-memory sink for the step log.
#[derive(Clone, Default)]
struct Sink(Arc<Mutex<Vec<u8>>>);

impl Write for Sink {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.lock().unwrap().extend_from_slice(buf);
        Ok(buf.len())
    }
    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

fn action_for(step: usize) -> i64 {
    [1, 1, 2, 3, 1, 0, 1][step % 7]
}

#[test]
fn wire_episode_logs_match_in_process() {
    let sim = simulator(4, 20.0);
    let sink = Sink::default();
    let mut session = Session::new(sim.clone()).with_log(Box::new(sink.clone()));
    let first = ask(&mut session, json!({"cmd": "reset", "seed": 11}));

    let mut cfg = sim.config.clone();
    cfg.scenario.seed = 11;
    let local_sim = Arc::new(Simulator::new(cfg, sim.map().clone()).unwrap());
    let scenario = local_sim.schedule().next().unwrap().unwrap().scenario;
    let mut local = Episode::new(local_sim.clone(), scenario, local_sim.episode_rng(0)).unwrap();
    assert_eq!(first["obs"], json!(local.observation()));

    let mut expected = String::new();
    let mut k = 0;
    loop {
        let a = action_for(k);
        let wire = ask(&mut session, json!({"cmd": "step", "action": a}));
        let out = local.step(a).unwrap();
        expected.push_str(&out.log.to_json_line());
        expected.push('\n');
        assert_eq!(wire["reward"], json!(out.reward));
        assert_eq!(wire["done"], json!(out.done()));
        k += 1;
        if out.done() {
            assert_eq!(wire["outcome"], json!(out.terminal));
            break;
        }
    }
    assert!(k > 10);
    let logged = String::from_utf8(sink.0.lock().unwrap().clone()).unwrap();
    assert_eq!(logged, expected);
}

#[test]
fn seeded_reset_is_reproducible_across_sessions() {
    let sim = simulator(5, 60.0);
    let a = ask(
        &mut Session::new(sim.clone()),
        json!({"cmd": "reset", "seed": 7}),
    );
    let b = ask(
        &mut Session::new(sim.clone()),
        json!({"cmd": "reset", "seed": 7}),
    );
    assert_eq!(a, b);
    assert_eq!(a["obs"].as_array().unwrap().len(), 26);
    let c = ask(&mut Session::new(sim), json!({"cmd": "reset", "seed": 8}));
    assert_ne!(a["obs"], c["obs"]);
}

#[test]
fn halting_to_timeout_then_only_reset_spec_close() {
    let mut s = Session::new(simulator(0, 2.0));
    ask(&mut s, json!({"cmd": "reset"}));
    let mut last = Value::Null;
    for _ in 0..10 {
        last = ask(&mut s, json!({"cmd": "step", "action": 0}));
    }
    assert_eq!(last["done"], true);
    assert_eq!(last["outcome"], "failure");
    let err = ask(&mut s, json!({"cmd": "step", "action": 0}));
    assert!(err["error"].as_str().unwrap().contains("finished"));
    assert_eq!(ask(&mut s, json!({"cmd": "spec"}))["obs_dim"], 26);
    let next = ask(&mut s, json!({"cmd": "reset"}));
    assert_eq!(next["episode"], 1);
    assert_eq!(next["done"], false);
    assert_eq!(
        ask(&mut s, json!({"cmd": "close"})),
        json!({"closed": true})
    );
    assert!(s.is_closed());
}

#[test]
fn tcp_session_round_trip() {
    let sim = simulator(3, 60.0);
    let (tx, rx) = mpsc::channel();
    let server = std::thread::spawn(move || {
        let mut session = Session::new(sim);
        serve_tcp(&mut session, 0, |addr| tx.send(addr).unwrap())
    });
    let addr = rx.recv().unwrap();
    let mut stream = TcpStream::connect(addr).unwrap();
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut exchange = |req: &str| {
        writeln!(stream, "{req}").unwrap();
        let mut line = String::new();
        reader.read_line(&mut line).unwrap();
        serde_json::from_str::<Value>(&line).unwrap()
    };
    assert_eq!(exchange(r#"{"cmd":"spec"}"#)["n_actions"], 4);
    assert!(exchange(r#"{"cmd":"reset","seed":1}"#)["obs"].is_array());
    assert!(exchange(r#"{"cmd":"step","action":1}"#)["reward"].is_number());
    assert_eq!(exchange(r#"{"cmd":"close"}"#)["closed"], true);
    server.join().unwrap().unwrap();
}
