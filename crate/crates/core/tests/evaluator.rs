use pomg_core::evaluator::{
    equilibrium_check, fitness, leader_value, Criterion, EvalOptions, FitnessOptions, PairSystem, SolverKind,
};
use pomg_core::history::Game;
use pomg_core::policy::FiniteMemoryPolicy;
use pomg_core::scenario::{build_model, enumerate_deterministic, ScenarioParams};
use pomg_testkit::rollout::rollout;
use pomg_testkit::{random_model, random_policy, Shape};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn desk() -> Game {
    Game::with_defaults(build_model(&ScenarioParams::default()).unwrap()).unwrap()
}

fn all_criteria(game: &Game) -> Vec<Criterion> {
    let mut c: Vec<Criterion> = (0..game.model().criteria()).map(Criterion::Leader).collect();
    c.push(Criterion::Follower);
    c
}

fn random_pair(seed: u64) -> (Game, FiniteMemoryPolicy, FiniteMemoryPolicy) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = Shape::small(3, 2);
    let game = Game::with_defaults(random_model(&mut rng, &shape)).unwrap();
    let leader = random_policy(&mut rng, game.leader(), 0.3);
    let follower = random_policy(&mut rng, game.follower(), 0.3);
    (game, leader, follower)
}

#[test]
fn direct_solution_satisfies_the_fixed_point() {
    for seed in 0..4 {
        let (game, leader, follower) = random_pair(seed);
        let options = EvalOptions::default();
        let system = PairSystem::build(&game, &leader, &follower, &options).unwrap();
        for g in system.solve(&all_criteria(&game), &options).unwrap() {
            assert_eq!(g.solver, SolverKind::Direct);
            assert!(g.residual < 1e-8, "{}", g.residual);
            assert!(system.residual(g.criterion, g.values()).unwrap() < 1e-8);
        }
    }
}

#[test]
fn direct_and_iterative_agree() {
    for seed in 10..14 {
        let (game, leader, follower) = random_pair(seed);
        let system = PairSystem::build(&game, &leader, &follower, &EvalOptions::default()).unwrap();
        let criteria = all_criteria(&game);
        let solve = |kind| {
            let options = EvalOptions {
                force: Some(kind),
                ..EvalOptions::default()
            };
            system.solve(&criteria, &options).unwrap()
        };
        for (a, b) in solve(SolverKind::Direct).iter().zip(solve(SolverKind::Iterative)) {
            assert_eq!(b.solver, SolverKind::Iterative);
            let gap = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(gap < 1e-6, "{gap}");
        }
    }
}

#[test]
fn values_match_monte_carlo_on_a_random_instance() {
    let (game, leader, follower) = random_pair(20);
    let options = EvalOptions::default();
    let tables = PairSystem::build(&game, &leader, &follower, &options)
        .unwrap()
        .solve(&all_criteria(&game), &options)
        .unwrap();
    let estimates = rollout(&game, &leader, &follower, 20_000, 120, 3);
    let initial = game.initial_pairs();
    for (g, e) in tables.iter().zip(&estimates) {
        let v = leader_value(g, &initial);
        assert!((v - e.mean).abs() <= 3.0 * e.std_error + 1e-4, "{v} vs {e:?}");
    }
}

#[test]
fn desk_fitness_matches_monte_carlo() {
    let game = desk();
    let policies = enumerate_deterministic(&game, 1 << 20).unwrap();
    let leader = &policies[41];
    let fit = fitness(&game, leader, &FitnessOptions::default()).unwrap();
    assert!(fit.residuals.iter().all(|r| *r < 1e-8));
    let beta = game.model().beta();
    let tail = beta.powi(60) * game.model().max_abs_cost() / (1.0 - beta);
    let estimates = rollout(&game, leader, &fit.follower_policy, 100_000, 60, 17);
    let ours = fit.values.iter().chain([&fit.follower_value]);
    for (v, e) in ours.zip(&estimates) {
        assert!((v - e.mean).abs() <= 3.0 * e.std_error + tail, "{v} vs {e:?} (tail {tail})");
    }
}

#[test]
fn desk_response_beats_random_followers() {
    let game = desk();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let policies = enumerate_deterministic(&game, 1 << 20).unwrap();
    let options = FitnessOptions::default();
    for leader in [&policies[0], &policies[63]] {
        let fit = fitness(&game, leader, &options).unwrap();
        let alternatives: Vec<_> = (0..50).map(|_| random_policy(&mut rng, game.follower(), 0.5)).collect();
        let report = equilibrium_check(
            &game,
            leader,
            &fit.follower_policy,
            &fit.gamma,
            options.solve.epsilon,
            &alternatives,
            &options.eval,
        )
        .unwrap();
        assert_eq!(report.alternatives.len(), 50);
        assert_eq!(report.violations(), 0, "{report:?}");
        assert!(report.optimum <= report.response_value + options.solve.epsilon);
    }
}
