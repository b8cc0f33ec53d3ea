use std::sync::Arc;

use socnav_core::config::SimConfig;
use socnav_core::episode::Simulator;
use socnav_core::harness::{
    record_demonstrations, run_benchmark, BaselinePolicy, Demonstration, PolicySpec,
};
use socnav_core::world::WorldMap;

fn simulator(h_min: usize, h_max: usize, t_fail: f64) -> Arc<Simulator> {
    let mut cfg = SimConfig::default();
    cfg.scenario.h_min = h_min;
    cfg.scenario.h_max = h_max;
    cfg.scenario.t_fail = t_fail;
    let map = Arc::new(WorldMap::builtin("training").unwrap());
    Arc::new(Simulator::new(cfg, map).unwrap())
}

fn policies(names: &str) -> Vec<PolicySpec> {
    names.split(',').map(|n| n.parse().unwrap()).collect()
}

#[test]
fn parallel_and_serial_reports_are_identical() {
    let sim = simulator(3, 5, 30.0);
    let specs = policies("goalone,ref,random,halt");
    let serial = run_benchmark(&sim, &specs, 12, false).unwrap();
    let parallel = run_benchmark(&sim, &specs, 12, true).unwrap();
    let again = run_benchmark(&sim, &specs, 12, true).unwrap();
    assert_eq!(serial.to_json(), parallel.to_json());
    assert_eq!(parallel.to_json(), again.to_json());
}

#[test]
fn every_policy_sees_the_same_scenarios() {
    let sim = simulator(3, 5, 20.0);
    let report = run_benchmark(&sim, &policies("goalone,random,halt"), 8, true).unwrap();
    for p in &report.policies {
        let digests: Vec<&str> = p
            .episodes
            .iter()
            .map(|e| e.scenario_digest.as_str())
            .collect();
        assert_eq!(digests, report.scenario_digests);
    }
    let halt = report.policy("halt").unwrap();
    assert_eq!(halt.success_rate, 0.0);
    assert!(halt.time_to_goal.is_none());
    for p in &report.policies {
        assert!((0.0..=1.0).contains(&p.success_rate));
        let f = p.max_force.as_ref().unwrap();
        assert!(f.ci_low <= f.mean && f.mean <= f.ci_high);
    }
}

#[test]
fn external_agent_matches_the_baseline_it_imitates() {
    let sim = simulator(3, 5, 20.0);
    // Always answers GoAlone.
    let external = PolicySpec::External {
        program: "sh".into(),
        args: vec!["-c".into(), "while read -r line; do echo 1; done".into()],
    };
    let report = run_benchmark(&sim, &[external, "goalone".parse().unwrap()], 4, false).unwrap();
    let (ext, base) = (&report.policies[0], &report.policies[1]);
    assert_eq!(ext.policy, "external:sh");
    assert_eq!(ext.episodes, base.episodes);
}

#[test]
fn external_agent_bad_action_names_the_episode() {
    let sim = simulator(0, 0, 20.0);
    let external = PolicySpec::External {
        program: "sh".into(),
        args: vec!["-c".into(), "while read -r line; do echo 7; done".into()],
    };
    let err = run_benchmark(&sim, &[external], 2, false).unwrap_err();
    let chain = format!("{err} / {:?}", std::error::Error::source(&err));
    assert!(chain.contains("episode 0"), "{chain}");
    assert!(chain.contains("ActionOutOfRange(7)"), "{chain}");
}

fn read_demos(path: &std::path::Path) -> Vec<Demonstration> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn halt_demonstration_is_fifty_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("halt.jsonl");
    let sim = simulator(0, 0, 10.0);
    let n = record_demonstrations(&sim, BaselinePolicy::AlwaysHalt, 1, &out).unwrap();
    assert_eq!(n, 50);
    let demos = read_demos(&out);
    assert_eq!(demos.len(), 50);
    assert!(demos.iter().all(|d| d.action == 0));
    assert!(demos[..49].iter().all(|d| !d.done));
    assert!(demos[49].done);
}

#[test]
fn zero_episodes_write_an_empty_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("none.jsonl");
    let n = record_demonstrations(&simulator(3, 5, 10.0), BaselinePolicy::Ref, 0, &out).unwrap();
    assert_eq!(n, 0);
    assert_eq!(std::fs::read(&out).unwrap(), b"");
}

#[test]
fn ref_demonstrations_use_valid_actions() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ref.jsonl");
    let sim = simulator(3, 5, 30.0);
    let n = record_demonstrations(&sim, BaselinePolicy::Ref, 100, &out).unwrap();
    let demos = read_demos(&out);
    assert_eq!(demos.len(), n);
    assert_eq!(demos.iter().filter(|d| d.done).count(), 100);
    assert!(demos.iter().all(|d| d.action <= 3 && d.obs.len() == 26));
    // Crowds make the reference use more than one sub-policy.
    let mut used = [false; 4];
    for d in &demos {
        used[d.action as usize] = true;
    }
    assert!(used.iter().filter(|u| **u).count() >= 3, "{used:?}");
}

#[test]
fn unwritable_output_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("missing").join("x.jsonl");
    let sim = simulator(0, 0, 10.0);
    assert!(record_demonstrations(&sim, BaselinePolicy::GoAlone, 1, &out).is_err());
    assert!(!out.exists());
}

#[test]
fn crowded_reference_yields_more_space_than_goalone() {
    let sim = simulator(5, 5, 60.0);
    let report = run_benchmark(&sim, &policies("goalone,ref"), 200, true).unwrap();
    let force = |name: &str| report.policy(name).unwrap().max_force.unwrap().mean;
    assert!(
        force("ref") <= force("goalone"),
        "ref {} vs goalone {}",
        force("ref"),
        force("goalone")
    );
}
