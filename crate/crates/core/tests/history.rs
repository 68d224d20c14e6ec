use std::collections::BTreeSet;

use pomg_core::history::{
    advance_window, belief_update, enumerate_windows, full_window_count, Agent, Belief, Game, Step, WindowOptions,
};
use pomg_core::model::PomgModel;
use pomg_core::Error;
use pomg_testkit::posterior::bayes_update;
use pomg_testkit::windows::{from_window, reachable};
use pomg_testkit::{random_belief, random_model, random_policy, Shape};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sparse_model(seed: u64, tau: usize, sparsity: f64) -> PomgModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shape = Shape::small(2, 2);
    shape.tau = tau;
    shape.sparsity = sparsity;
    random_model(&mut rng, &shape)
}

#[test]
fn pruned_spaces_match_the_reachability_fixpoint() {
    for seed in 0..12 {
        let tau = 1 + (seed as usize % 3);
        let m = sparse_model(seed, tau, 0.8);
        for agent in [Agent::Leader, Agent::Follower] {
            let space = enumerate_windows(&m, agent, &WindowOptions::default()).unwrap();
            let ours: BTreeSet<_> = space.windows().iter().map(from_window).collect();
            assert_eq!(ours.len(), space.len(), "duplicate windows");
            assert_eq!(ours, reachable(&m, agent), "seed {seed}, {agent:?}");
        }
    }
}

#[test]
fn unpruned_space_has_the_closed_form_size() {
    let m = sparse_model(3, 2, 0.5);
    let options = WindowOptions {
        prune_unreachable: false,
        ..WindowOptions::default()
    };
    let space = enumerate_windows(&m, Agent::Leader, &options).unwrap();
    // 2 obs × 2 states × 2 actions per full slot, tau = 2
    assert_eq!(space.len() as f64, full_window_count(2, 2, 2, 2));
    assert_eq!(space.len(), 8 * 8 + 8 * 2 + 2);
    assert!(space.windows().iter().all(|w| w.is_well_formed()));
}

#[test]
fn window_cap_is_enforced() {
    let m = sparse_model(3, 3, 0.0);
    let options = WindowOptions {
        prune_unreachable: true,
        cap: 10,
    };
    assert!(matches!(
        enumerate_windows(&m, Agent::Follower, &options),
        Err(Error::WindowCap { .. })
    ));
}

#[test]
fn successor_table_agrees_with_advancing() {
    let m = sparse_model(8, 2, 0.6);
    let game = Game::with_defaults(m).unwrap();
    for agent in [Agent::Leader, Agent::Follower] {
        let space = game.space(agent);
        for i in 0..space.len() {
            for z in 0..space.n_observations() {
                for s in 0..space.n_states() {
                    for a in 0..space.n_actions() {
                        let step = Step::new(z, s, a);
                        let expected = space.index_of(&advance_window(space.window(i), step));
                        assert_eq!(space.successor(i, step), expected);
                    }
                }
            }
        }
    }
}

#[test]
fn render_and_parse_are_inverse() {
    let game = Game::with_defaults(sparse_model(2, 3, 0.3)).unwrap();
    for agent in [Agent::Leader, Agent::Follower] {
        let space = game.space(agent);
        for i in 0..space.len() {
            let text = space.render(i);
            assert_eq!(space.parse(&text).unwrap(), i, "{text}");
        }
    }
    let startup = game.leader().startup(0).map(|i| game.leader().render(i));
    if let Some(text) = startup {
        assert_eq!(text, "z:-,-,-|s:sl0,-,-|a:-,-,-");
    }
}

#[test]
fn bayes_update_matches_the_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for seed in 0..6 {
        let game = Game::with_defaults(sparse_model(40 + seed, 1 + seed as usize % 2, 0.3)).unwrap();
        let pi = random_policy(&mut rng, game.leader(), 0.3);
        let n = game.leader().len();
        for _ in 0..10 {
            let y = random_belief(&mut rng, n);
            let (sf, af) = (rng.random_range(0..2), rng.random_range(0..2));
            for zf in 0..2 {
                for next_sf in 0..2 {
                    let belief = Belief::new(Agent::Follower, y.clone()).unwrap();
                    let ours = belief_update(&game, &pi, &belief, sf, af, zf, next_sf);
                    match bayes_update(&game, &pi, &y, sf, af, zf, next_sf) {
                        Some((post, like)) if like >= 1e-12 => {
                            let (b, l) = ours.unwrap();
                            assert!((l - like).abs() < 1e-12);
                            for (p, q) in b.weights().iter().zip(&post) {
                                assert!((p - q).abs() < 1e-12);
                            }
                        }
                        _ => assert!(matches!(ours, Err(Error::ImpossibleObservation { .. }))),
                    }
                }
            }
        }
    }
}

#[test]
fn likelihoods_sum_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let game = Game::with_defaults(sparse_model(9, 2, 0.2)).unwrap();
    let pi = random_policy(&mut rng, game.leader(), 0.0);
    let y = Belief::new(Agent::Follower, random_belief(&mut rng, game.leader().len())).unwrap();
    for sf in 0..2 {
        for af in 0..2 {
            let mut total = 0.0;
            for zf in 0..2 {
                for next_sf in 0..2 {
                    if let Ok((_, l)) = belief_update(&game, &pi, &y, sf, af, zf, next_sf) {
                        total += l;
                    }
                }
            }
            assert!((total - 1.0).abs() < 1e-9, "{total}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn posterior_stays_on_the_simplex(seed in 0u64..1000, tau in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let game = Game::with_defaults(sparse_model(seed, tau, 0.4)).unwrap();
        let pi = random_policy(&mut rng, game.leader(), 0.3);
        let y = Belief::new(Agent::Follower, random_belief(&mut rng, game.leader().len())).unwrap();
        for (zf, next_sf) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            if let Ok((b, l)) = belief_update(&game, &pi, &y, 0, 1, zf, next_sf) {
                prop_assert!(l > 0.0 && l <= 1.0 + 1e-12);
                prop_assert!(b.weights().iter().all(|p| *p >= 0.0));
                prop_assert!((b.weights().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn advancing_keeps_windows_well_formed(seed in 0u64..1000, steps in 0usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tau = rng.random_range(1..5);
        let mut w = pomg_core::history::Window::startup(tau, rng.random_range(0..3));
        for _ in 0..steps {
            w = advance_window(&w, Step::new(rng.random_range(0..3), rng.random_range(0..3), rng.random_range(0..3)));
            prop_assert!(w.is_well_formed());
        }
        prop_assert_eq!(w.epoch_zero_slot(), (steps < tau).then_some(steps));
    }
}
