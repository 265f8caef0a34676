//! The trainer-facing environment: reset/step semantics and the
//! newline-delimited JSON session.

use std::io::Cursor;

use overtake_core::env::{env_config_from, serve, Env, EnvConfig, ScenarioOverrides, TrainingProfile};
use overtake_core::policy::{MdpAction, STATE_DIM};
use overtake_core::sim::{EpisodeStatus, PlannerChoice, ScenarioConfig};
use serde_json::{json, Value};

fn config(stage: u32) -> EnvConfig {
    env_config_from(
        &ScenarioConfig::new(PlannerChoice::External { safety_layer: false }),
        stage,
        None,
    )
}

fn session(stage: u32, requests: &[Value]) -> Vec<Value> {
    let input: String = requests.iter().map(|r| format!("{r}\n")).collect();
    let mut out = Vec::new();
    serve(config(stage), Cursor::new(input), &mut out).unwrap();
    String::from_utf8(out)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn straight_ahead() -> MdpAction<f64> {
    MdpAction([0.0, 0.0, 0.0, 1.0])
}

#[test]
fn reset_draws_from_the_profile_and_is_seeded() {
    let mut env = Env::new(config(6)).unwrap();
    let profile = TrainingProfile::mixed();
    let mut seen = Vec::new();
    for seed in 0..40 {
        let state = env.reset(seed, None, &ScenarioOverrides::default()).unwrap();
        assert_eq!(state.0.len(), STATE_DIM);
        let c = env.episode().unwrap().config().clone();
        assert!((profile.blocker_s.0..=profile.blocker_s.1).contains(&c.blocker_s));
        assert!((profile.blocker_n.0..=profile.blocker_n.1).contains(&c.blocker_n));
        assert!(profile.lookaheads.contains(&c.blocking.lookahead));
        let again = env.reset(seed, None, &ScenarioOverrides::default()).unwrap();
        assert_eq!(state, again);
        seen.push(c.blocking.lookahead);
    }
    for sd in profile.lookaheads {
        assert!(seen.contains(&sd), "lookahead {sd} never drawn");
    }
}

#[test]
fn overrides_take_precedence() {
    let mut env = Env::new(config(6)).unwrap();
    let overrides = ScenarioOverrides {
        blocker_s: Some(55.0),
        blocker_n: Some(-3.0),
        lookahead: Some(100.0),
        initial_speed: None,
    };
    env.reset(3, None, &overrides).unwrap();
    let c = env.episode().unwrap().config();
    assert_eq!((c.blocker_s, c.blocker_n, c.blocking.lookahead), (55.0, -3.0, 100.0));
}

#[test]
fn stepping_runs_to_a_terminal_and_then_refuses() {
    let mut env = Env::new(config(6)).unwrap();
    env.reset(1, None, &ScenarioOverrides::default()).unwrap();
    let mut steps = 0;
    let last = loop {
        let r = env.step(&straight_ahead()).unwrap();
        assert!(r.reward.is_finite());
        assert!(r.state.0.iter().all(|v| v.is_finite()));
        steps += 1;
        if r.done {
            break r;
        }
        assert!(r.status.is_none());
    };
    assert!(steps > 1);
    let status = last.status.unwrap();
    assert_eq!(last.reward, if status == EpisodeStatus::Success { 10.0 } else { -1.0 });
    assert!(env.step(&straight_ahead()).is_err());
}

#[test]
fn first_stage_has_no_opponent_and_rewards_reaching_the_end() {
    let mut env = Env::new(config(1)).unwrap();
    env.reset(
        0,
        None,
        &ScenarioOverrides {
            blocker_s: Some(30.0),
            blocker_n: Some(0.0),
            ..Default::default()
        },
    )
    .unwrap();
    let last = loop {
        let r = env.step(&straight_ahead()).unwrap();
        if r.done {
            break r;
        }
    };
    assert_eq!(last.status, Some(EpisodeStatus::TrackEnd));
    assert_eq!(last.reward, 10.0);
}

#[test]
fn out_of_range_actions_are_clipped() {
    let run = |action: MdpAction<f64>| {
        let mut env = Env::new(config(6)).unwrap();
        env.reset(9, None, &ScenarioOverrides::default()).unwrap();
        (0..5).map(|_| env.step(&action).unwrap().state).collect::<Vec<_>>()
    };
    assert_eq!(
        run(MdpAction([-7.0, 0.0, 0.0, 3.0])),
        run(MdpAction([-1.0, 0.0, 0.0, 1.0]))
    );
}

#[test]
fn json_session_matches_direct_calls() {
    let actions = [[0.3, 0.0, 0.0, 1.0], [-0.5, 0.1, -0.2, 0.8], [0.9, 0.0, 0.0, 0.2]];
    let mut requests = vec![json!({"v": "v1", "cmd": "reset", "seed": 42, "stage": 4})];
    requests.extend(actions.iter().map(|a| json!({"v": "v1", "cmd": "step", "action": a})));
    requests.push(json!({"v": "v1", "cmd": "close"}));
    let replies = session(6, &requests);
    assert_eq!(replies.len(), requests.len());
    assert!(replies.iter().all(|r| r["ok"] == true && r["v"] == "v1"));
    assert_eq!(replies[0]["info"]["stage"], 4);

    let mut env = Env::new(config(6)).unwrap();
    let state = env.reset(42, Some(4), &ScenarioOverrides::default()).unwrap();
    let close = |json: &Value, want: &[f64]| {
        let got: Vec<f64> = serde_json::from_value(json.clone()).unwrap();
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() <= 1e-12 * w.abs().max(1.0), "{g} vs {w}");
        }
    };
    close(&replies[0]["state"], &state.0);
    for (a, reply) in actions.iter().zip(&replies[1..]) {
        let r = env.step(&MdpAction(*a)).unwrap();
        close(&reply["state"], &r.state.0);
        assert!((reply["reward"].as_f64().unwrap() - r.reward).abs() <= 1e-12);
        assert_eq!(reply["done"], r.done);
        assert_eq!(reply["info"]["status"], "running");
    }
}

#[test]
fn bad_requests_get_errors_and_the_session_continues() {
    let replies = session(
        6,
        &[
            json!({"v": "v1", "cmd": "step", "action": [0, 0, 0, 0]}),
            json!({"v": "v1", "cmd": "jump"}),
            json!({"cmd": "reset"}),
            json!({"v": "v1", "cmd": "reset", "seed": 1, "stage": 9}),
            json!({"v": "v1", "cmd": "reset", "seed": 1}),
            json!({"v": "v1", "cmd": "step", "action": [0, 0]}),
            json!({"v": "v1", "cmd": "step", "action": [0, 0, 0, 1]}),
        ],
    );
    let ok: Vec<bool> = replies.iter().map(|r| r["ok"].as_bool().unwrap()).collect();
    assert_eq!(ok, [false, false, false, false, true, false, true]);
    assert!(replies
        .iter()
        .filter(|r| r["ok"] == false)
        .all(|r| r["error"].is_string()));
}

#[test]
fn version_mismatch_ends_the_session() {
    let replies = session(
        6,
        &[
            json!({"v": "v2", "cmd": "reset"}),
            json!({"v": "v1", "cmd": "reset", "seed": 1}),
        ],
    );
    assert_eq!(replies.len(), 1);
    assert_eq!(replies[0]["ok"], false);
}
