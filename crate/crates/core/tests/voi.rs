use pomg_core::follower::SolveOptions;
use pomg_core::history::{Game, WindowOptions};
use pomg_core::model::{Joint, PomgModel};
use pomg_core::scenario::{build_model, enumerate_deterministic, ScenarioParams};
use pomg_core::voi::{compare_information, garble, voi_csv, Garbling};
use pomg_core::Error;
use pomg_testkit::{random_model, random_policy, Shape};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn factored(seed: u64) -> PomgModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shape = Shape::small(2, 2);
    shape.dims.follower_observations = 3;
    shape.factored = true;
    shape.sparsity = 0.0;
    shape.beta = 0.6;
    random_model(&mut rng, &shape)
}

fn max_prob_gap(a: &PomgModel, b: &PomgModel) -> f64 {
    let d = a.dims();
    let mut worst = 0.0f64;
    for s in d.states() {
        for act in d.actions() {
            for z in d.observations() {
                for next in d.states() {
                    worst = worst.max((a.prob(s, act, z, next) - b.prob(s, act, z, next)).abs());
                }
            }
        }
    }
    worst
}

#[test]
fn identity_leaves_the_model_unchanged() {
    let m = factored(1);
    let g = garble(&m, &Garbling::identity(m.dims().joint_actions(), 3)).unwrap();
    assert!(max_prob_gap(&m, &g) < 1e-12);
}

#[test]
fn garbled_kernel_is_the_matrix_product() {
    let m = factored(2);
    let d = m.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let r = Garbling::random(&mut rng, d.joint_actions(), 3);
    let g = garble(&m, &r).unwrap();
    for s in d.states() {
        for a in d.actions() {
            let mat = r.matrix(d.action_index(a));
            for next in d.states() {
                for zl in 0..d.leader_observations {
                    for zf2 in 0..3 {
                        let expected: f64 = (0..3)
                            .map(|zf| m.prob(s, a, Joint::new(zl, zf), next) * mat[zf * 3 + zf2])
                            .sum();
                        let got = g.prob(s, a, Joint::new(zl, zf2), next);
                        assert!((expected - got).abs() < 1e-12, "{expected} vs {got}");
                    }
                }
            }
        }
    }
}

#[test]
fn constant_rows_erase_the_signal() {
    let m = factored(4);
    let d = m.dims();
    let q = [0.2, 0.5, 0.3];
    let rows: Vec<f64> = (0..3).flat_map(|_| q).collect();
    let g = garble(&m, &Garbling::uniform_over_actions(d.joint_actions(), &rows).unwrap()).unwrap();
    for s in d.states() {
        for a in d.actions() {
            for next in d.states() {
                let t = g.transition(s, a, next);
                if t == 0.0 {
                    continue;
                }
                for (zf, qz) in q.iter().enumerate() {
                    let marginal: f64 = (0..d.leader_observations)
                        .map(|zl| g.prob(s, a, Joint::new(zl, zf), next))
                        .sum();
                    assert!((marginal / t - qz).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn garbling_twice_is_garbling_by_the_product() {
    let m = factored(5);
    let na = m.dims().joint_actions();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (r1, r2) = (Garbling::random(&mut rng, na, 3), Garbling::random(&mut rng, na, 3));
    let twice = garble(&garble(&m, &r1).unwrap(), &r2).unwrap();
    let once = garble(&m, &r1.then(&r2).unwrap()).unwrap();
    assert!(max_prob_gap(&twice, &once) < 1e-12);
}

#[test]
fn correlated_kernel_is_refused() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let m = random_model(&mut rng, &Shape::small(2, 2));
    let r = Garbling::identity(m.dims().joint_actions(), 2);
    assert!(matches!(garble(&m, &r), Err(Error::NotFactorizable)));
}

#[test]
fn information_never_hurts_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut rows = Vec::new();
    for seed in 0..4 {
        let m = factored(20 + seed);
        let game = Game::with_defaults(m.clone()).unwrap();
        let leader = random_policy(&mut rng, game.leader(), 0.3);
        let r = Garbling::random(&mut rng, m.dims().joint_actions(), 3);
        let c = compare_information(&m, &r, &leader, &WindowOptions::default(), &SolveOptions::default()).unwrap();
        assert!(c.ordering_ok, "{c:?}");
        assert!(c.v_p <= c.v_q + 2.0 * c.epsilon);
        rows.push((format!("g{seed}"), c));
    }
    let csv = voi_csv(&rows);
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.starts_with("garbling,v_p,v_q,difference,ordering_ok\n"));
}

#[test]
fn zero_follower_cost_has_no_information_value() {
    let mut parts = factored(9).into_parts();
    parts.follower_cost.iter_mut().for_each(|c| *c = 0.0);
    let m = PomgModel::new(parts).unwrap();
    let game = Game::with_defaults(m.clone()).unwrap();
    let leader = pomg_core::policy::FiniteMemoryPolicy::uniform(
        pomg_core::history::Agent::Leader,
        game.leader().len(),
        game.leader().n_actions(),
    );
    let r = Garbling::symmetric_noise(m.dims().joint_actions(), 3, 0.7).unwrap();
    let c = compare_information(&m, &r, &leader, &WindowOptions::default(), &SolveOptions::default()).unwrap();
    assert_eq!((c.v_p, c.v_q, c.difference), (0.0, 0.0, 0.0));
}

#[test]
fn desk_identity_has_zero_value() {
    let m = build_model(&ScenarioParams::default()).unwrap();
    let game = Game::with_defaults(m.clone()).unwrap();
    let leader = &enumerate_deterministic(&game, 64).unwrap()[21];
    let nz = m.dims().follower_observations;
    let id = Garbling::identity(m.dims().joint_actions(), nz);
    let c = compare_information(&m, &id, leader, &WindowOptions::default(), &SolveOptions::default()).unwrap();
    assert!(c.difference.abs() < 2.0 * c.epsilon, "{c:?}");
}
