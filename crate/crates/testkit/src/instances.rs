//! Random model and policy generators.

use pomg_core::history::{Agent, WindowSpace};
use pomg_core::model::{Dims, Joint, ModelParts, PomgModel};
use pomg_core::policy::FiniteMemoryPolicy;
use rand::Rng;
use rand_distr::{Distribution, Exp1};

/// Size and structure of a random instance.
#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub dims: Dims,
    pub beta: f64,
    pub tau: usize,
    pub criteria: usize,
    /// Probability that any single outcome of a slice is forced to zero.
    pub sparsity: f64,
    /// Build the observation kernel as a product of per-agent channels.
    pub factored: bool,
    /// Costs are drawn uniformly from `[-cost_scale, cost_scale]`.
    pub cost_scale: f64,
}

impl Shape {
    pub fn small(leader_states: usize, follower_states: usize) -> Self {
        Shape {
            dims: Dims {
                leader_states,
                follower_states,
                leader_actions: 2,
                follower_actions: 2,
                leader_observations: 2,
                follower_observations: 2,
            },
            beta: 0.9,
            tau: 1,
            criteria: 2,
            sparsity: 0.3,
            factored: false,
            cost_scale: 1.0,
        }
    }
}

/// A point drawn uniformly from the `n`-simplex, with entries zeroed at
/// random (at least one survives) when `sparsity > 0`.
pub fn simplex<R: Rng + ?Sized>(rng: &mut R, n: usize, sparsity: f64) -> Vec<f64> {
    let keep: Vec<bool> = (0..n).map(|_| !rng.random_bool(sparsity)).collect();
    let forced = rng.random_range(0..n);
    let raw: Vec<f64> = (0..n)
        .map(|i| if keep[i] || i == forced { Exp1.sample(rng) } else { 0.0 })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

pub fn random_model<R: Rng + ?Sized>(rng: &mut R, shape: &Shape) -> PomgModel {
    let d = shape.dims;
    let mut parts = ModelParts::with_dims(d, shape.criteria, shape.beta, shape.tau);
    let states: Vec<Joint> = d.states().collect();
    let observations: Vec<Joint> = d.observations().collect();
    // Channels depend on the joint action and the next state only.
    let channels: Vec<(Vec<Vec<f64>>, Vec<Vec<f64>>)> = if shape.factored {
        d.actions()
            .map(|_| {
                let zf = (0..d.leader_states)
                    .map(|_| simplex(rng, d.follower_observations, shape.sparsity))
                    .collect();
                let zl = (0..d.follower_states)
                    .map(|_| simplex(rng, d.leader_observations, shape.sparsity))
                    .collect();
                (zf, zl)
            })
            .collect()
    } else {
        Vec::new()
    };
    for &s in &states {
        for a in d.actions() {
            if shape.factored {
                let trans = simplex(rng, states.len(), shape.sparsity);
                let (zf, zl) = &channels[d.action_index(a)];
                for (k, &next) in states.iter().enumerate() {
                    for &z in &observations {
                        let p = trans[k] * zf[next.leader][z.follower] * zl[next.follower][z.leader];
                        if p > 0.0 {
                            parts.set_prob(s, a, z, next, p);
                        }
                    }
                }
            } else {
                let p = simplex(rng, states.len() * observations.len(), shape.sparsity);
                let mut k = 0;
                for &z in &observations {
                    for &next in &states {
                        if p[k] > 0.0 {
                            parts.set_prob(s, a, z, next, p[k]);
                        }
                        k += 1;
                    }
                }
            }
            let c = shape.cost_scale;
            parts.set_follower_cost(s, a, rng.random_range(-c..=c));
            for k in 0..shape.criteria {
                parts.set_leader_cost(k, s, a, rng.random_range(-c..=c));
            }
        }
    }
    for (s, p) in states.iter().zip(simplex(rng, states.len(), shape.sparsity)) {
        parts.set_initial(*s, p);
    }
    PomgModel::new(parts).expect("generated model is valid")
}

/// A stochastic policy with independent uniform-simplex rows.
pub fn random_policy<R: Rng + ?Sized>(rng: &mut R, space: &WindowSpace, sparsity: f64) -> FiniteMemoryPolicy {
    let rows = (0..space.len())
        .map(|_| simplex(rng, space.n_actions(), sparsity))
        .collect();
    FiniteMemoryPolicy::new(space.agent(), space.n_actions(), rows).expect("rows are distributions")
}

pub fn random_deterministic_policy<R: Rng + ?Sized>(rng: &mut R, space: &WindowSpace) -> FiniteMemoryPolicy {
    let choices: Vec<usize> = (0..space.len()).map(|_| rng.random_range(0..space.n_actions())).collect();
    FiniteMemoryPolicy::deterministic(space.agent(), space.n_actions(), &choices).expect("valid indices")
}

pub fn random_belief<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    simplex(rng, n, 0.0)
}

/// Follower beliefs are owned by the follower and range over leader windows.
pub const BELIEF_OWNER: Agent = Agent::Follower;

/// Seeded small instances for the exactness checks: `(|S^L|, |S^F|, |Z^L|,
/// |A^L|, |Z^F|)` with two follower actions, `τ = 1`, `β = 0.9`, sparsity
/// 0.7. Exact value iteration can need hundreds of vectors on dense random
/// instances; these seeds were screened for value functions small enough
/// that a 60-step exact oracle finishes in seconds.
pub const EXACTNESS_SUITE: [((usize, usize, usize, usize, usize), u64); 7] = [
    ((2, 2, 1, 2, 2), 1001),
    ((2, 1, 2, 2, 2), 1010),
    ((3, 1, 1, 2, 2), 1023),
    ((2, 3, 1, 1, 2), 1032),
    ((3, 3, 1, 1, 1), 1052),
    ((2, 2, 2, 1, 2), 1060),
    ((3, 2, 1, 2, 1), 1071),
];

/// Builds entry `k` of [`EXACTNESS_SUITE`] with its random leader policy,
/// plus the generator state for drawing probe beliefs.
pub fn exactness_instance(k: usize) -> (pomg_core::history::Game, FiniteMemoryPolicy, rand_chacha::ChaCha8Rng) {
    use rand::SeedableRng;
    let ((nl, nf, zl, al, zf), seed) = EXACTNESS_SUITE[k];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut shape = Shape::small(nl, nf);
    shape.dims.leader_observations = zl;
    shape.dims.leader_actions = al;
    shape.dims.follower_observations = zf;
    shape.sparsity = 0.7;
    let game = pomg_core::history::Game::with_defaults(random_model(&mut rng, &shape)).expect("small instance");
    let pi = random_policy(&mut rng, game.leader(), 0.2);
    (game, pi, rng)
}
