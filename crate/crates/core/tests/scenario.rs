use pomg_core::evaluator::{fitness, FitnessOptions};
use pomg_core::history::{Agent, Game};
use pomg_core::scenario::{build_model, decision_support_table, enumerate_deterministic, vulnerability, ScenarioParams};
use pomg_testkit::pareto::{pareto_points, ratio_table_shape};
use rayon::prelude::*;

fn desk() -> Game {
    Game::with_defaults(build_model(&ScenarioParams::default()).unwrap()).unwrap()
}

#[test]
fn desk_has_sixty_four_leader_policies() {
    let game = desk();
    assert_eq!(game.leader().len(), 6);
    assert_eq!(game.leader().n_actions(), 2);
    let policies = enumerate_deterministic(&game, 1 << 20).unwrap();
    assert_eq!(policies.len(), 64);
    let mut seen: Vec<Vec<usize>> = policies.iter().map(|p| p.as_deterministic().unwrap()).collect();
    seen.dedup();
    assert_eq!(seen.len(), 64);
    assert_eq!(seen[0], vec![0; 6]);
    assert_eq!(seen[1], vec![0, 0, 0, 0, 0, 1]);
    assert!(enumerate_deterministic(&game, 63).is_err());
    assert!(policies.iter().all(|p| p.agent() == Agent::Leader));
}

#[test]
fn params_file_round_trip_rebuilds_the_same_model() {
    let p = ScenarioParams::default();
    let back = ScenarioParams::from_json_str(&p.to_json_string()).unwrap();
    assert_eq!(build_model(&back).unwrap().parts(), build_model(&p).unwrap().parts());
}

#[test]
fn vulnerability_is_nonnegative() {
    let p = ScenarioParams::default();
    let m = build_model(&p).unwrap();
    for sl in 0..m.dims().leader_states {
        for sf in 0..m.dims().follower_states {
            assert!(vulnerability(&p, sl, sf) >= 0.0);
        }
    }
}

#[test]
fn exhaustive_front_gives_a_well_shaped_table() {
    let game = desk();
    let policies = enumerate_deterministic(&game, 1 << 20).unwrap();
    let options = FitnessOptions::default();
    let fits: Vec<Vec<f64>> = policies
        .par_iter()
        .map(|p| fitness(&game, p, &options).unwrap().values)
        .collect();
    let front = pareto_points(&fits);
    assert!(!front.is_empty());
    let labelled: Vec<(String, Vec<f64>)> = fits
        .iter()
        .enumerate()
        .filter(|(_, f)| front.contains(f))
        .map(|(i, f)| (format!("p{i:02}"), f.clone()))
        .collect();
    let table = decision_support_table(&labelled).unwrap();
    assert_eq!(table.rows.len(), front.len());
    assert!(!table.productivity_absolute && !table.vulnerability_absolute);
    let prod: Vec<f64> = table.rows.iter().map(|r| r.productivity_ratio).collect();
    let vul: Vec<f64> = table.rows.iter().map(|r| r.vulnerability_ratio).collect();
    // Down the table productivity falls, and on a front so must vulnerability.
    ratio_table_shape(&prod, &vul).unwrap();
    let text = table.render_text();
    assert_eq!(text.lines().count(), table.rows.len() + 1);
    let equivalents: usize = table.rows.iter().map(|r| 1 + r.equivalents.len()).sum();
    assert_eq!(equivalents, labelled.len());
}
