//! NSGA-II search over leader policies.
//!
//! A [`Population`] of [`Chromosome`]s is ranked by [`fast_nondominated_sort`]
//! and [`crowding_distance`]; each generation breeds `M` offspring by binary
//! tournament, block crossover and block mutation, then keeps the best `M`
//! of the `2M` parents and children. Fitness comes from an [`Objective`],
//! normally a [`PolicyObjective`] wrapping [`crate::evaluator::fitness`].

mod genes;
mod sort;

use std::collections::{HashMap, HashSet};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluator::{fitness, FitnessOptions};
use crate::history::Game;

pub use genes::{Genes, Layout, Mode};
pub use sort::{crowding_distance, dominates, fast_nondominated_sort, CrowdingMethod};

/// Anything that maps leader genes to a minimization fitness tuple.
pub trait Objective: Sync {
    fn layout(&self) -> Layout;
    fn evaluate(&self, genes: &Genes) -> Result<Vec<f64>>;
}

/// Fitness of a leader policy on a game, memoized by genes.
///
/// The cache is safe to share between runs, so repeated seeded runs on the
/// same game only pay for policies they have not met before.
pub struct PolicyObjective<'g> {
    game: &'g Game,
    options: FitnessOptions,
    cache: Mutex<HashMap<Genes, Vec<f64>>>,
}

impl<'g> PolicyObjective<'g> {
    pub fn new(game: &'g Game, options: FitnessOptions) -> Self {
        PolicyObjective {
            game,
            options,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn game(&self) -> &Game {
        self.game
    }

    pub fn options(&self) -> &FitnessOptions {
        &self.options
    }

    /// Number of distinct gene strings evaluated so far.
    pub fn evaluations(&self) -> usize {
        self.cache.lock().expect("fitness cache poisoned").len()
    }
}

impl Objective for PolicyObjective<'_> {
    fn layout(&self) -> Layout {
        Layout {
            windows: self.game.leader().len(),
            actions: self.game.leader().n_actions(),
        }
    }

    fn evaluate(&self, genes: &Genes) -> Result<Vec<f64>> {
        if let Some(hit) = self.cache.lock().expect("fitness cache poisoned").get(genes) {
            return Ok(hit.clone());
        }
        let policy = genes.to_policy(self.layout())?;
        let values = fitness(self.game, &policy, &self.options)?.values;
        self.cache
            .lock()
            .expect("fitness cache poisoned")
            .insert(genes.clone(), values.clone());
        Ok(values)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Chromosome {
    pub id: u64,
    pub genes: Genes,
    pub fitness: Option<Vec<f64>>,
    /// Zero-based front index within the population.
    #[serde(skip)]
    pub rank: usize,
    #[serde(skip)]
    pub crowding: f64,
}

impl Chromosome {
    fn new(id: u64, genes: Genes) -> Self {
        Chromosome {
            id,
            genes,
            fitness: None,
            rank: 0,
            crowding: 0.0,
        }
    }

    fn fit(&self) -> &[f64] {
        self.fitness.as_deref().expect("chromosome evaluated before ranking")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MogaParams {
    /// Population size `M`; must be even and positive.
    pub population: usize,
    pub generations: usize,
    /// Probability that a selected pair is recombined.
    pub crossover: f64,
    /// Per-block mutation probability; `None` means one over the window count.
    pub mutation: Option<f64>,
    pub seed: u64,
    pub mode: Mode,
    #[serde(with = "crowding_serde")]
    pub crowding: CrowdingMethod,
}

impl Default for MogaParams {
    fn default() -> Self {
        MogaParams {
            population: 16,
            generations: 5,
            crossover: 0.9,
            mutation: None,
            seed: 0,
            mode: Mode::Deterministic,
            crowding: CrowdingMethod::Cuboid,
        }
    }
}

mod crowding_serde {
    use super::CrowdingMethod;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &CrowdingMethod, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(match m {
            CrowdingMethod::Cuboid => "cuboid",
            CrowdingMethod::MeanEuclidean => "mean-euclidean",
        })
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CrowdingMethod, D::Error> {
        match String::deserialize(d)?.as_str() {
            "cuboid" => Ok(CrowdingMethod::Cuboid),
            "mean-euclidean" => Ok(CrowdingMethod::MeanEuclidean),
            other => Err(serde::de::Error::custom(format!("unknown crowding method {other:?}"))),
        }
    }
}

impl MogaParams {
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if self.population == 0 || !self.population.is_multiple_of(2) {
            errors.push(format!("population size {} must be even and positive", self.population));
        }
        if !(0.0..=1.0).contains(&self.crossover) {
            errors.push(format!("crossover probability {} is outside [0, 1]", self.crossover));
        }
        if let Some(pm) = self.mutation {
            if !(0.0..=1.0).contains(&pm) {
                errors.push(format!("mutation probability {pm} is outside [0, 1]"));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errors))
        }
    }

    pub fn mutation_rate(&self, layout: Layout) -> f64 {
        self.mutation.unwrap_or(1.0 / layout.windows.max(1) as f64)
    }
}

/// Generator for one generation's random choices. Each generation draws from
/// its own stream of the seeded generator, so resuming from a checkpoint
/// replays exactly the same choices.
fn generation_rng(seed: u64, generation: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(generation as u64);
    rng
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Population {
    pub members: Vec<Chromosome>,
    pub generation: usize,
    pub seed: u64,
    pub next_id: u64,
}

impl Population {
    /// Members of the first front, in population order.
    pub fn front1(&self) -> Vec<&Chromosome> {
        self.members.iter().filter(|c| c.rank == 0).collect()
    }

    /// Recomputes rank and crowding of every member from its fitness.
    pub fn rank(&mut self, method: CrowdingMethod) {
        let fits: Vec<Vec<f64>> = self.members.iter().map(|c| c.fit().to_vec()).collect();
        for (r, front) in fast_nondominated_sort(&fits).iter().enumerate() {
            let pts: Vec<Vec<f64>> = front.iter().map(|&i| fits[i].clone()).collect();
            for (&i, d) in front.iter().zip(crowding_distance(&pts, method)) {
                self.members[i].rank = r;
                self.members[i].crowding = d;
            }
        }
    }

    /// One CSV block for this generation:
    /// `generation,id,genes_hash,f1..fN,rank,crowding`.
    pub fn log_rows(&self) -> String {
        let mut out = String::new();
        for c in &self.members {
            let fit: Vec<String> = c.fit().iter().map(|v| format!("{v:.12e}")).collect();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.generation,
                c.id,
                c.genes.hash_hex(),
                fit.join(","),
                c.rank,
                if c.crowding.is_finite() { format!("{:.12e}", c.crowding) } else { "inf".into() }
            ));
        }
        out
    }

    pub fn log_header(criteria: usize) -> String {
        let f: Vec<String> = (1..=criteria).map(|k| format!("f{k}")).collect();
        format!("generation,id,genes_hash,{},rank,crowding\n", f.join(","))
    }

    pub fn to_checkpoint(&self, params: &MogaParams) -> Result<String> {
        let doc = Checkpoint {
            params: *params,
            population: self.clone(),
        };
        serde_json::to_string_pretty(&doc).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Restores a population written by [`Population::to_checkpoint`],
    /// re-deriving rank and crowding.
    pub fn from_checkpoint(text: &str) -> Result<(Population, MogaParams)> {
        let doc: Checkpoint = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut pop = doc.population;
        if pop.members.iter().any(|c| c.fitness.is_none()) {
            return Err(Error::Parse("checkpoint holds unevaluated members".into()));
        }
        pop.rank(doc.params.crowding);
        Ok((pop, doc.params))
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    params: MogaParams,
    population: Population,
}

/// Evaluates every member without fitness, each distinct gene string once.
fn evaluate_members(members: &mut [Chromosome], objective: &dyn Objective) -> Result<()> {
    let mut todo: Vec<&Genes> = Vec::new();
    let mut seen = HashSet::new();
    for c in members.iter().filter(|c| c.fitness.is_none()) {
        if seen.insert(&c.genes) {
            todo.push(&c.genes);
        }
    }
    let results: Vec<Vec<f64>> = todo.par_iter().map(|g| objective.evaluate(g)).collect::<Result<_>>()?;
    let table: HashMap<Genes, Vec<f64>> = todo.into_iter().cloned().zip(results).collect();
    for c in members.iter_mut().filter(|c| c.fitness.is_none()) {
        c.fitness = Some(table[&c.genes].clone());
    }
    Ok(())
}

pub fn initial_population(objective: &dyn Objective, params: &MogaParams) -> Result<Population> {
    params.validate()?;
    let layout = objective.layout();
    let mut rng = generation_rng(params.seed, 0);
    let mut members: Vec<Chromosome> = (0..params.population)
        .map(|i| Chromosome::new(i as u64, Genes::random(&mut rng, layout, params.mode)))
        .collect();
    evaluate_members(&mut members, objective)?;
    let mut pop = Population {
        members,
        generation: 0,
        seed: params.seed,
        next_id: params.population as u64,
    };
    pop.rank(params.crowding);
    Ok(pop)
}

/// Binary tournament: lower rank wins, then larger crowding, then a coin flip.
fn tournament<'a>(rng: &mut ChaCha8Rng, members: &'a [Chromosome]) -> &'a Chromosome {
    let a = &members[rng.random_range(0..members.len())];
    let b = &members[rng.random_range(0..members.len())];
    match a.rank.cmp(&b.rank) {
        std::cmp::Ordering::Less => a,
        std::cmp::Ordering::Greater => b,
        std::cmp::Ordering::Equal => {
            if a.crowding > b.crowding {
                a
            } else if b.crowding > a.crowding {
                b
            } else if rng.random_bool(0.5) {
                a
            } else {
                b
            }
        }
    }
}

fn same_fitness(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Keeps `m` of `pool` (parents first, then offspring).
///
/// Members whose fitness tuple already appeared earlier in the pool are set
/// aside; the distinct tuples are sorted by (rank, crowding) and truncated as
/// usual. If fewer than `m` distinct tuples exist, the set-aside members
/// fill the remaining places in pool order, so surviving parents keep
/// precedence over identical children.
fn survive(pool: Vec<Chromosome>, m: usize, method: CrowdingMethod) -> Vec<Chromosome> {
    let mut distinct: Vec<usize> = Vec::new();
    let mut repeats: Vec<usize> = Vec::new();
    for (i, c) in pool.iter().enumerate() {
        if distinct.iter().any(|&j| same_fitness(pool[j].fit(), c.fit())) {
            repeats.push(i);
        } else {
            distinct.push(i);
        }
    }
    let fits: Vec<Vec<f64>> = distinct.iter().map(|&i| pool[i].fit().to_vec()).collect();
    let mut chosen: Vec<usize> = Vec::with_capacity(m);
    for front in fast_nondominated_sort(&fits) {
        if chosen.len() >= m {
            break;
        }
        let pts: Vec<Vec<f64>> = front.iter().map(|&k| fits[k].clone()).collect();
        let dist = crowding_distance(&pts, method);
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(front[a].cmp(&front[b])));
        for k in order.into_iter().take(m - chosen.len()) {
            chosen.push(distinct[front[k]]);
        }
    }
    chosen.extend(repeats.into_iter().take(m - chosen.len()));
    let mut slots: Vec<Option<Chromosome>> = pool.into_iter().map(Some).collect();
    chosen.into_iter().map(|i| slots[i].take().expect("each pool member chosen once")).collect()
}

/// Breeds, evaluates and selects one generation.
pub fn next_generation(pop: &Population, params: &MogaParams, objective: &dyn Objective) -> Result<Population> {
    params.validate()?;
    let layout = objective.layout();
    let m = params.population;
    if pop.members.len() != m {
        return Err(Error::LengthMismatch {
            expected: m,
            actual: pop.members.len(),
        });
    }
    let pm = params.mutation_rate(layout);
    let generation = pop.generation + 1;
    let mut rng = generation_rng(params.seed, generation);
    let mut next_id = pop.next_id;
    let mut offspring: Vec<Chromosome> = Vec::with_capacity(m);
    let mut known: HashSet<Genes> = pop.members.iter().map(|c| c.genes.clone()).collect();
    while offspring.len() < m {
        let p1 = tournament(&mut rng, &pop.members);
        let p2 = tournament(&mut rng, &pop.members);
        let (mut g1, mut g2) = if layout.windows > 1 && rng.random_bool(params.crossover) {
            let cut = rng.random_range(1..layout.windows);
            p1.genes.crossover(&p2.genes, cut, layout)
        } else {
            (p1.genes.clone(), p2.genes.clone())
        };
        for g in [&mut g1, &mut g2] {
            for w in 0..layout.windows {
                if rng.random_bool(pm) {
                    g.resample_block(&mut rng, w, layout);
                }
            }
            // With mutation switched on, a child that copies a gene string
            // already present is mutated again (a bounded number of times)
            // so that offspring slots explore instead of repeating.
            if pm > 0.0 {
                for _ in 0..4 * layout.windows {
                    if !known.contains(&*g) {
                        break;
                    }
                    let w = rng.random_range(0..layout.windows);
                    g.resample_block(&mut rng, w, layout);
                }
            }
            known.insert(g.clone());
            g.check(layout)?;
        }
        for g in [g1, g2] {
            // Children identical to a parent inherit its fitness unevaluated.
            let mut child = Chromosome::new(next_id, g);
            next_id += 1;
            if let Some(parent) = [p1, p2].into_iter().find(|p| p.genes == child.genes) {
                child.fitness = parent.fitness.clone();
            }
            offspring.push(child);
        }
    }
    evaluate_members(&mut offspring, objective)?;

    let mut pool = pop.members.clone();
    pool.extend(offspring);
    let mut next = Population {
        members: survive(pool, m, params.crowding),
        generation,
        seed: pop.seed,
        next_id,
    };
    next.rank(params.crowding);
    Ok(next)
}

/// Runs the initial population and `params.generations` generations,
/// handing every population (including the initial one) to `on_generation`.
pub fn run_moga(
    objective: &dyn Objective,
    params: &MogaParams,
    on_generation: impl FnMut(&Population) -> Result<()>,
) -> Result<Population> {
    let pop = initial_population(objective, params)?;
    let mut on_generation = on_generation;
    on_generation(&pop)?;
    resume_moga(objective, params, pop, on_generation)
}

/// Continues from `pop` until generation `params.generations`.
pub fn resume_moga(
    objective: &dyn Objective,
    params: &MogaParams,
    mut pop: Population,
    mut on_generation: impl FnMut(&Population) -> Result<()>,
) -> Result<Population> {
    if pop.seed != params.seed {
        return Err(Error::InvalidParameter(format!(
            "checkpoint seed {} differs from requested seed {}",
            pop.seed, params.seed
        )));
    }
    while pop.generation < params.generations {
        pop = next_generation(&pop, params, objective)?;
        on_generation(&pop)?;
    }
    Ok(pop)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two criteria read straight off the genes of two binary windows.
    struct Table;

    impl Objective for Table {
        fn layout(&self) -> Layout {
            Layout { windows: 2, actions: 2 }
        }
        fn evaluate(&self, genes: &Genes) -> Result<Vec<f64>> {
            match genes {
                Genes::Deterministic(v) => Ok(vec![v[0] as f64 + v[1] as f64, 2.0 - v[0] as f64 * 2.0]),
                Genes::Stochastic(v) => Ok(vec![v[1], v[0]]),
            }
        }
    }

    #[test]
    fn zero_rates_are_a_fixed_point() {
        let params = MogaParams {
            population: 8,
            crossover: 0.0,
            mutation: Some(0.0),
            seed: 5,
            ..MogaParams::default()
        };
        let pop = initial_population(&Table, &params).unwrap();
        let next = next_generation(&pop, &params, &Table).unwrap();
        let mut before: Vec<u64> = pop.members.iter().map(|c| c.id).collect();
        let mut after: Vec<u64> = next.members.iter().map(|c| c.id).collect();
        before.sort_unstable();
        after.sort_unstable();
        assert_eq!(before, after);
    }

    #[test]
    fn odd_population_rejected() {
        let params = MogaParams {
            population: 3,
            ..MogaParams::default()
        };
        assert!(initial_population(&Table, &params).is_err());
    }

    #[test]
    fn checkpoint_round_trip_resumes_identically() {
        let params = MogaParams {
            population: 4,
            generations: 3,
            seed: 11,
            mode: Mode::Stochastic,
            ..MogaParams::default()
        };
        let mut snapshots = Vec::new();
        let full = run_moga(&Table, &params, |p| {
            snapshots.push(p.to_checkpoint(&params)?);
            Ok(())
        })
        .unwrap();
        let (restored, restored_params) = Population::from_checkpoint(&snapshots[1]).unwrap();
        assert_eq!(restored_params, params);
        let resumed = resume_moga(&Table, &params, restored, |_| Ok(())).unwrap();
        assert_eq!(resumed.log_rows(), full.log_rows());
    }
}
