use overtake_core::dynamics::{BlockingController, BlockingParams};
use overtake_core::planner::CostPreset;
use overtake_core::sampling::EndState;
use overtake_core::sim::{
    run_episode, Decision, Episode, EpisodeOutcome, EpisodeStatus, PlannerChoice, ScenarioConfig,
};

fn conventional(preset: CostPreset, blocker_s: f64, blocker_n: f64, lookahead: f64) -> ScenarioConfig {
    let mut c = ScenarioConfig::new(PlannerChoice::Conventional(preset.weights()));
    c.blocker_s = blocker_s;
    c.blocker_n = blocker_n;
    c.blocking = BlockingParams::with_lookahead(lookahead);
    c
}

fn external(blocker_s: f64, blocker_n: f64) -> ScenarioConfig {
    let mut c = ScenarioConfig::new(PlannerChoice::External { safety_layer: false });
    c.blocker_s = blocker_s;
    c.blocker_n = blocker_n;
    c
}

/// Drives an external-planner episode with one fixed end state.
fn hold(config: ScenarioConfig, end: EndState<f64>) -> EpisodeOutcome {
    let mut ep = Episode::new(config).unwrap();
    while ep.status().is_none() {
        let d = ep.decide_end_state(end, false);
        ep.apply(d);
    }
    ep.into_outcome()
}

fn trace_bytes(o: &EpisodeOutcome) -> Vec<u8> {
    let mut buf = Vec::new();
    o.write_trace(&mut buf).unwrap();
    buf
}

#[test]
fn plans_start_at_the_current_state_and_the_ego_follows_them() {
    let cfg = conventional(CostPreset::MediumCh, 40.0, 2.0, 60.0);
    let mut ep = Episode::new(cfg.clone()).unwrap();
    let mut shadow = BlockingController::new(cfg.blocking);
    while ep.status().is_none() {
        let ego = *ep.ego();
        let opp = *ep.opponent();
        let d = ep.decide().unwrap();
        let expected_ego = match &d {
            Decision::Follow { trajectory, .. } => {
                let p = &trajectory.points[0];
                for (got, want) in [
                    (p.s, ego.lon.pos),
                    (p.s_dot, ego.lon.vel),
                    (p.s_ddot, ego.lon.acc),
                    (p.n, ego.lat.pos),
                    (p.n_dot, ego.lat.vel),
                    (p.n_ddot, ego.lat.acc),
                ] {
                    assert!((got - want).abs() <= 1e-9, "{got} vs {want}");
                }
                trajectory.state_at(cfg.dt)
            }
            Decision::Infeasible { .. } => break,
        };
        let expected_opp = shadow.advance(&opp, ego.lat.pos, ego.lat.vel, cfg.dt, &cfg.track);
        ep.apply(d);
        let now = ep.ego();
        assert!((now.lon.pos - expected_ego.lon.pos).abs() <= 1e-9);
        assert!((now.lat.pos - expected_ego.lat.pos).abs() <= 1e-9);
        assert!((now.lat.vel - expected_ego.lat.vel).abs() <= 1e-9);
        assert_eq!(*ep.opponent(), expected_opp);
    }
    assert!(ep.steps() > 10);
}

#[test]
fn runs_are_reproducible_byte_for_byte() {
    for preset in [CostPreset::SmallCh, CostPreset::LargeClp] {
        let cfg = conventional(preset, 60.0, -1.5, 80.0);
        let a = run_episode(&cfg).unwrap();
        let b = run_episode(&cfg).unwrap();
        assert_eq!(a.status, b.status);
        assert_eq!(trace_bytes(&a), trace_bytes(&b));
    }
}

#[test]
fn cruising_side_by_side_matches_closed_form() {
    // Both vehicles on the centre line at 50 m/s, nothing ever changes.
    let out = hold(external(50.0, 0.0), EndState::new(0.0, 0.0, 0.0, 50.0));
    assert_eq!(out.status, EpisodeStatus::TrackEnd);
    // the horizon leaves the track once s_o + 85 * 2.5 >= 1500
    assert_eq!(out.steps, 258);
    for (k, r) in out.trace.iter().enumerate() {
        let t = (k + 1) as f64 * 0.1;
        assert!((r.time - t).abs() <= 1e-9);
        assert!((r.s_o - 50.0 * t).abs() <= 1e-9);
        assert!((r.s_b - (50.0 + 50.0 * t)).abs() <= 1e-9);
        assert!(r.n_o.abs() <= 1e-9 && r.n_b.abs() <= 1e-9 && r.chi_b.abs() <= 1e-12);
        assert!((r.v_o - 50.0).abs() <= 1e-9);
        assert_eq!(r.v_b, 50.0);
    }
}

#[test]
fn rear_ending_the_blocker_is_a_collision_at_first_overlap() {
    let out = hold(external(30.0, 0.0), EndState::new(0.0, 0.0, 0.0, 85.0));
    assert_eq!(out.status, EpisodeStatus::Collision);
    let (last, before) = out.trace.split_last().unwrap();
    assert!(last.s_b - last.s_o < 4.9);
    assert!(before.iter().all(|r| r.s_b - r.s_o >= 4.9));
}

#[test]
fn success_is_declared_once_a_length_plus_margin_ahead() {
    let out = run_episode(&conventional(CostPreset::SmallCh, 30.0, 4.0, 140.0)).unwrap();
    assert_eq!(out.status, EpisodeStatus::Success);
    let (last, before) = out.trace.split_last().unwrap();
    assert!(last.s_o - last.s_b >= 4.9 + 1.0);
    assert!(before.iter().all(|r| r.s_o - r.s_b < 4.9 + 1.0));
}

// Presets without a lateral weight are left out: with a distant blocker all
// lateral targets cost the same and the lowest-index tie break picks the
// right-hand edge on both sides.
#[test]
fn mirrored_scenarios_end_the_same_way() {
    let cases = [
        (30.0, 2.0, 40.0),
        (60.0, 4.5, 80.0),
        (45.0, -1.0, 120.0),
        (90.0, 5.5, 60.0),
    ];
    for ((s_b, n_b, sd), preset) in cases
        .into_iter()
        .zip([CostPreset::SmallCh, CostPreset::LargeClp].iter().cycle())
    {
        let a = run_episode(&conventional(*preset, s_b, n_b, sd)).unwrap();
        let b = run_episode(&conventional(*preset, s_b, -n_b, sd)).unwrap();
        assert_eq!(a.status, b.status, "s_b {s_b} n_b {n_b} s_d {sd}");
        assert_eq!(a.steps, b.steps);
        for (x, y) in a.trace.iter().zip(&b.trace) {
            assert!((x.n_o + y.n_o).abs() <= 1e-6 && (x.s_o - y.s_o).abs() <= 1e-6);
        }
    }
}
