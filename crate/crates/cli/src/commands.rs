use std::fmt::Write as _;
use std::path::Path;

use pomg_core::evaluator::{
    equilibrium_check, fitness, follower_initial_value, leader_value, Criterion, EvalOptions, FitnessOptions,
    PairSystem, SolverKind, Weighting,
};
use pomg_core::finite_memory::approximate_policy;
use pomg_core::follower::{value_at, value_iteration, BackupMode, ConvergenceCheck, GammaSet, SolveOptions};
use pomg_core::history::{uniform_belief, Agent, Belief, Game, WindowOptions};
use pomg_core::model::{load_model, validate_factorization, PomgModel};
use pomg_core::moga::{
    resume_moga, run_moga, CrowdingMethod, Genes, Layout, Mode, MogaParams, Objective, PolicyObjective, Population,
};
use pomg_core::policy::FiniteMemoryPolicy;
use pomg_core::scenario::{build_model, decision_support_table, enumerate_deterministic, ScenarioParams};
use pomg_core::voi::{compare_information, voi_csv, Garbling};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::args::*;
use crate::artifacts::Artifacts;
use crate::CliError;

pub fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Validate(a) => validate(a),
        Command::SolveFollower(a) => solve_follower(a),
        Command::ApproxFinite(a) => approx_finite(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Moga(a) => moga(a),
        Command::Enumerate(a) => enumerate(a),
        Command::Voi(a) => voi(a),
        Command::ScenarioBuild(a) => scenario_build(a),
    }
}

fn window_options(w: &WindowFlags) -> WindowOptions {
    WindowOptions {
        prune_unreachable: !w.no_prune,
        cap: w.window_cap,
    }
}

fn solve_options(s: &SolveFlags) -> Result<SolveOptions, CliError> {
    if !(s.epsilon > 0.0 && s.epsilon.is_finite()) {
        return Err(CliError::Usage(format!("--epsilon {} must be positive", s.epsilon)));
    }
    Ok(SolveOptions {
        epsilon: s.epsilon,
        max_iter: s.max_iter,
        mode: match s.backup {
            BackupArg::Incremental => BackupMode::Incremental,
            BackupArg::Enumerate => BackupMode::Enumerate { cap: s.enumerate_cap },
        },
        check: match s.check {
            CheckArg::Probes => ConvergenceCheck::Probes,
            CheckArg::Exact => ConvergenceCheck::Exact,
        },
        prune_tol: s.prune_tol,
    })
}

fn eval_options(e: &EvalFlags) -> EvalOptions {
    EvalOptions {
        direct_limit: e.direct_limit,
        max_pairs: e.max_pairs,
        tolerance: e.eval_tolerance,
        force: match e.solver {
            SolverArg::Auto => None,
            SolverArg::Direct => Some(SolverKind::Direct),
            SolverArg::Iterative => Some(SolverKind::Iterative),
        },
        ..EvalOptions::default()
    }
}

fn fitness_options(s: &SolveFlags, e: &EvalFlags) -> Result<FitnessOptions, CliError> {
    Ok(FitnessOptions {
        solve: solve_options(s)?,
        eval: eval_options(e),
        weighting: match e.weighting {
            WeightingArg::Initial => Weighting::Initial,
            WeightingArg::Stationary => Weighting::Stationary,
        },
    })
}

fn load_game(path: &Path, windows: &WindowFlags, out: &mut Artifacts) -> Result<Game, CliError> {
    out.input(path)?;
    let model = load_model(path)?;
    Ok(Game::new(model, &window_options(windows))?)
}

fn load_policy(
    path: Option<&Path>,
    game: &Game,
    agent: Agent,
    out: &mut Artifacts,
) -> Result<FiniteMemoryPolicy, CliError> {
    let space = game.space(agent);
    match path {
        Some(p) => {
            out.input(p)?;
            Ok(FiniteMemoryPolicy::load(p, space)?)
        }
        None => Ok(FiniteMemoryPolicy::uniform(agent, space.len(), space.n_actions())),
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

/// Plain scientific notation with enough digits to round-trip.
fn num(x: f64) -> String {
    format!("{x:.12e}")
}

fn csv_string(rows: Vec<Vec<String>>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Runtime {
        message: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn validate(a: ValidateArgs) -> Result<(), CliError> {
    let model = load_model(&a.model)?;
    let game = Game::new(model.clone(), &window_options(&a.windows))?;
    let d = model.dims();
    let factorization = validate_factorization(&model).is_some();
    let report = json!({
        "valid": true,
        "dims": {
            "leader_states": d.leader_states,
            "follower_states": d.follower_states,
            "leader_actions": d.leader_actions,
            "follower_actions": d.follower_actions,
            "leader_observations": d.leader_observations,
            "follower_observations": d.follower_observations,
        },
        "criteria": model.criteria(),
        "beta": model.beta(),
        "tau": model.tau(),
        "leader_windows": game.leader().len(),
        "follower_windows": game.follower().len(),
        "factorizable": factorization,
    });
    println!("model OK: {}", a.model.display());
    println!(
        "  states {}x{}, actions {}x{}, observations {}x{}, {} leader criteria, beta {}, tau {}",
        d.leader_states,
        d.follower_states,
        d.leader_actions,
        d.follower_actions,
        d.leader_observations,
        d.follower_observations,
        model.criteria(),
        model.beta(),
        model.tau()
    );
    println!(
        "  windows: leader {}, follower {}",
        game.leader().len(),
        game.follower().len()
    );
    println!(
        "  factorization: {}",
        if factorization {
            "observation kernel factorizes into per-agent channels"
        } else {
            "observation kernel is correlated (garbling unavailable)"
        }
    );
    if let Some(dir) = &a.out {
        let mut out = Artifacts::create(dir)?;
        out.input(&a.model)?;
        out.write("report.json", &to_json(&report))?;
        out.finish("validate", None, &a)?;
    }
    Ok(())
}

fn solve_summary(game: &Game, gamma: &GammaSet, report: &pomg_core::follower::SolveReport) -> Result<serde_json::Value, CliError> {
    let n = game.leader().len();
    let uniform = uniform_belief(game.leader());
    let names = &game.model().parts().follower_states;
    let mut at_uniform = serde_json::Map::new();
    let mut vertices = serde_json::Map::new();
    for (sf, name) in names.iter().enumerate() {
        at_uniform.insert(name.clone(), json!(value_at(gamma, sf, &uniform)?));
        let v: Vec<f64> = (0..n)
            .map(|w| value_at(gamma, sf, &Belief::point(Agent::Follower, n, w)))
            .collect::<Result<_, _>>()?;
        vertices.insert(name.clone(), json!(v));
    }
    Ok(json!({
        "converged": report.converged,
        "iterations": report.iterations,
        "final_residual": report.final_residual(),
        "threshold": report.threshold,
        "epsilon": report.epsilon,
        "gamma_counts": gamma.counts(),
        "initial_value": follower_initial_value(game, gamma)?,
        "value_at_uniform_belief": at_uniform,
        "value_at_window_vertices": vertices,
    }))
}

fn solve_follower(a: SolveFollowerArgs) -> Result<(), CliError> {
    let mut out = Artifacts::create(&a.out)?;
    let game = load_game(&a.model, &a.windows, &mut out)?;
    let leader = load_policy(a.leader.as_deref(), &game, Agent::Leader, &mut out)?;
    let (gamma, report) = value_iteration(&game, &leader, &solve_options(&a.solve)?)?;
    out.write("gamma.json", &gamma.to_json(&game)?)?;
    out.write("solve_log.csv", &report.to_csv(&game.model().parts().follower_states))?;
    let summary = solve_summary(&game, &gamma, &report)?;
    out.write("summary.json", &to_json(&summary))?;
    out.finish("solve-follower", None, &a)?;
    println!(
        "value iteration: {} iterations, residual {:.3e} (target {:.3e}), initial value {}",
        report.iterations,
        report.final_residual(),
        report.threshold,
        summary["initial_value"]
    );
    report.ensure_converged()?;
    Ok(())
}

fn solve_or_load(
    gamma: Option<&Path>,
    game: &Game,
    leader: &FiniteMemoryPolicy,
    solve: &SolveFlags,
    out: &mut Artifacts,
) -> Result<GammaSet, CliError> {
    match gamma {
        Some(p) => {
            out.input(p)?;
            Ok(GammaSet::load(p, game)?)
        }
        None => {
            let (gamma, report) = value_iteration(game, leader, &solve_options(solve)?)?;
            report.ensure_converged()?;
            Ok(gamma)
        }
    }
}

fn approx_finite(a: ApproxFiniteArgs) -> Result<(), CliError> {
    let mut out = Artifacts::create(&a.out)?;
    let game = load_game(&a.model, &a.windows, &mut out)?;
    let leader = load_policy(a.leader.as_deref(), &game, Agent::Leader, &mut out)?;
    let gamma = solve_or_load(a.gamma.as_deref(), &game, &leader, &a.solve, &mut out)?;
    let approx = approximate_policy(&game, &leader, &gamma)?;
    out.write("follower_policy.json", &approx.policy.to_json(game.follower())?)?;
    let unreachable: Vec<String> = approx.unreachable.iter().map(|&i| game.follower().render(i)).collect();
    out.write(
        "approximation.json",
        &to_json(&json!({
            "follower_windows": game.follower().len(),
            "unreachable_windows": unreachable,
            "digest": approx.policy.digest(),
        })),
    )?;
    out.finish("approx-finite", None, &a)?;
    println!(
        "follower policy over {} windows ({} unreachable, uniform rows)",
        game.follower().len(),
        approx.unreachable.len()
    );
    Ok(())
}

fn criterion_names(game: &Game) -> Vec<String> {
    let mut names: Vec<String> = (1..=game.model().criteria()).map(|k| format!("leader_{k}")).collect();
    names.push("follower".into());
    names
}

fn evaluate(a: EvaluateArgs) -> Result<(), CliError> {
    if a.alternatives > 0 && a.seed.is_none() {
        return Err(CliError::Usage("--alternatives needs --seed".into()));
    }
    let mut out = Artifacts::create(&a.out)?;
    let game = load_game(&a.model, &a.windows, &mut out)?;
    let leader = load_policy(a.leader.as_deref(), &game, Agent::Leader, &mut out)?;
    let options = fitness_options(&a.solve, &a.eval)?;
    let nc = game.model().criteria();

    let (follower, gamma) = match &a.follower {
        Some(p) => {
            out.input(p)?;
            let pi = FiniteMemoryPolicy::load(p, game.follower())?;
            let gamma = if a.alternatives > 0 {
                let (g, report) = value_iteration(&game, &leader, &options.solve)?;
                report.ensure_converged()?;
                Some(g)
            } else {
                None
            };
            (pi, gamma)
        }
        None => {
            let fit = fitness(&game, &leader, &options)?;
            out.write("follower_policy.json", &fit.follower_policy.to_json(game.follower())?)?;
            (fit.follower_policy, Some(fit.gamma))
        }
    };

    let system = PairSystem::build(&game, &leader, &follower, &options.eval)?;
    let mut criteria: Vec<Criterion> = (0..nc).map(Criterion::Leader).collect();
    criteria.push(Criterion::Follower);
    let tables = system.solve(&criteria, &options.eval)?;
    let initial = game.initial_pairs();
    let weights = match options.weighting {
        Weighting::Initial => initial.clone(),
        Weighting::Stationary => system.stationary(&initial, 1e-13, 100_000),
    };
    let values: Vec<f64> = tables.iter().map(|g| leader_value(g, &weights)).collect();

    let names = criterion_names(&game);
    let mut rows = vec![{
        let mut h = vec!["leader_window".to_string(), "follower_window".to_string()];
        h.extend(names.iter().cloned());
        h
    }];
    for wl in 0..game.leader().len() {
        for wf in 0..game.follower().len() {
            let mut r = vec![game.leader().render(wl), game.follower().render(wf)];
            r.extend(tables.iter().map(|g| num(g.get(wl, wf))));
            rows.push(r);
        }
    }
    out.write("g_tables.csv", &csv_string(rows)?)?;

    let mut report = json!({
        "leader_values": &values[..nc],
        "follower_value": values[nc],
        "weighting": format!("{:?}", options.weighting).to_lowercase(),
        "residuals": tables.iter().map(|g| g.residual).collect::<Vec<_>>(),
        "solver": format!("{:?}", tables[0].solver).to_lowercase(),
        "pairs": system.pairs(),
        "leader_digest": leader.digest(),
        "follower_digest": follower.digest(),
    });
    if a.alternatives > 0 {
        let gamma = gamma.expect("solved above when alternatives are requested");
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed.expect("checked above"));
        let alts: Vec<FiniteMemoryPolicy> = (0..a.alternatives)
            .map(|_| random_follower(&mut rng, &game))
            .collect::<Result<_, _>>()?;
        let eq = equilibrium_check(&game, &leader, &follower, &gamma, options.solve.epsilon, &alts, &options.eval)?;
        report["equilibrium"] = json!({
            "response_value": eq.response_value,
            "optimum": eq.optimum,
            "slack": eq.slack,
            "violations": eq.violations(),
            "alternative_values": eq.alternatives.iter().map(|c| c.value).collect::<Vec<_>>(),
        });
        println!(
            "equilibrium check: {} of {} alternatives beat the response beyond slack {:.3e}",
            eq.violations(),
            a.alternatives,
            eq.slack
        );
    }
    out.write("evaluation.json", &to_json(&report))?;
    out.finish("evaluate", a.seed, &a)?;
    for (name, v) in names.iter().zip(&values) {
        println!("{name}: {v}");
    }
    Ok(())
}

/// A follower policy with rows drawn uniformly from the simplex.
fn random_follower(rng: &mut ChaCha8Rng, game: &Game) -> Result<FiniteMemoryPolicy, CliError> {
    let layout = Layout {
        windows: game.follower().len(),
        actions: game.follower().n_actions(),
    };
    let Genes::Stochastic(table) = Genes::random(rng, layout, Mode::Stochastic) else {
        unreachable!("stochastic mode yields stochastic genes")
    };
    Ok(FiniteMemoryPolicy::from_flat(Agent::Follower, layout.actions, table)?)
}

fn genes_label(genes: &Genes) -> String {
    match genes {
        Genes::Deterministic(v) => v.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" "),
        Genes::Stochastic(_) => genes.hash_hex()[..16].to_string(),
    }
}

/// Writes one policy file per listed `(id, genes)` and the decision-support
/// table when the model has two leader criteria.
fn write_front(
    out: &mut Artifacts,
    game: &Game,
    layout: Layout,
    front: &[(String, Genes, Vec<f64>)],
) -> Result<Option<String>, CliError> {
    let nc = game.model().criteria();
    let mut rows = vec![{
        let mut h = vec!["policy".to_string(), "genes".to_string()];
        h.extend((1..=nc).map(|k| format!("f{k}")));
        h
    }];
    for (id, genes, fit) in front {
        let mut r = vec![id.clone(), genes_label(genes)];
        r.extend(fit.iter().map(|v| num(*v)));
        rows.push(r);
        let policy = genes.to_policy(layout)?;
        out.write(&format!("policies/{id}.json"), &policy.to_json(game.leader())?)?;
    }
    out.write("front.csv", &csv_string(rows)?)?;
    if nc != 2 {
        return Ok(None);
    }
    let labelled: Vec<(String, Vec<f64>)> = front.iter().map(|(id, _, f)| (id.clone(), f.clone())).collect();
    let table = decision_support_table(&labelled)?;
    let text = table.render_text();
    out.write("decision_table.txt", &text)?;
    out.write("decision_table.csv", &table.render_csv())?;
    Ok(Some(text))
}

fn moga(a: MogaArgs) -> Result<(), CliError> {
    let mut out = Artifacts::create(&a.out)?;
    let game = load_game(&a.model, &a.windows, &mut out)?;
    let options = fitness_options(&a.solve, &a.eval)?;
    if a.exhaustive {
        exhaustive_front(&mut out, &game, options, a.cap)?;
        return out.finish("moga", Some(a.seed), &a);
    }
    let objective = PolicyObjective::new(&game, options);
    let layout = objective.layout();

    let (start, params) = match &a.resume {
        Some(path) => {
            out.input(path)?;
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let (pop, stored) = Population::from_checkpoint(&text)?;
            if stored.seed != a.seed {
                return Err(CliError::Usage(format!(
                    "checkpoint was written with seed {}, not {}",
                    stored.seed, a.seed
                )));
            }
            (
                Some(pop),
                MogaParams {
                    generations: a.generations,
                    ..stored
                },
            )
        }
        None => (
            None,
            MogaParams {
                population: a.population,
                generations: a.generations,
                crossover: a.crossover,
                mutation: a.mutation,
                seed: a.seed,
                mode: match a.mode {
                    ModeArg::Deterministic => Mode::Deterministic,
                    ModeArg::Stochastic => Mode::Stochastic,
                },
                crowding: match a.crowding {
                    CrowdingArg::Cuboid => CrowdingMethod::Cuboid,
                    CrowdingArg::MeanEuclidean => CrowdingMethod::MeanEuclidean,
                },
            },
        ),
    };
    params.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let mut log = Population::log_header(game.model().criteria());
    let mut checkpoints: Vec<(String, String)> = Vec::new();
    let record = |pop: &Population, log: &mut String, cps: &mut Vec<(String, String)>| -> pomg_core::Result<()> {
        log.push_str(&pop.log_rows());
        cps.push((
            format!("checkpoints/generation_{:04}.json", pop.generation),
            pop.to_checkpoint(&params)?,
        ));
        Ok(())
    };
    // Each checkpoint is flushed as soon as its generation finishes, so a
    // failed run leaves the last good population on disk.
    let root = out.root().to_path_buf();
    let flush = |cps: &[(String, String)]| -> pomg_core::Result<()> {
        if let Some((name, text)) = cps.last() {
            let path = root.join(name);
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir).map_err(|e| pomg_core::Error::Parse(e.to_string()))?;
            }
            std::fs::write(&path, text).map_err(|e| pomg_core::Error::Parse(e.to_string()))?;
        }
        Ok(())
    };
    let result = {
        let mut on_generation = |pop: &Population| -> pomg_core::Result<()> {
            record(pop, &mut log, &mut checkpoints)?;
            flush(&checkpoints)?;
            eprintln!("generation {}: front 1 has {} members", pop.generation, pop.front1().len());
            Ok(())
        };
        match start {
            Some(pop) => {
                on_generation(&pop)?;
                resume_moga(&objective, &params, pop, on_generation)
            }
            None => run_moga(&objective, &params, on_generation),
        }
    };
    out.write("generations.csv", &log)?;
    for (name, text) in &checkpoints {
        out.write(name, text)?;
    }
    let pop = result.map_err(|e| match e {
        pomg_core::Error::InvalidParameter(m) => CliError::Usage(m),
        other => CliError::Runtime {
            message: format!(
                "fitness evaluation failed ({other}); the last checkpoint in {} is intact",
                out.root().display()
            ),
        },
    })?;

    // One row per distinct gene string on front 1.
    let mut seen: Vec<&Genes> = Vec::new();
    let mut front: Vec<(String, Genes, Vec<f64>)> = Vec::new();
    for c in pop.front1() {
        if seen.contains(&&c.genes) {
            continue;
        }
        seen.push(&c.genes);
        front.push((format!("c{}", c.id), c.genes.clone(), c.fitness.clone().expect("ranked members are evaluated")));
    }
    let table = write_front(&mut out, &game, layout, &front)?;
    out.finish("moga", Some(params.seed), &json!({ "arguments": &a, "params": params }))?;
    println!(
        "generation {}: {} distinct policies on front 1 ({} fitness evaluations)",
        pop.generation,
        front.len(),
        objective.evaluations()
    );
    if let Some(t) = table {
        print!("{t}");
    }
    Ok(())
}

fn enumerate(a: EnumerateArgs) -> Result<(), CliError> {
    let mut out = Artifacts::create(&a.out)?;
    let game = load_game(&a.model, &a.windows, &mut out)?;
    let options = fitness_options(&a.solve, &a.eval)?;
    exhaustive_front(&mut out, &game, options, a.cap)?;
    out.finish("enumerate", None, &a)
}

/// Scores every deterministic leader policy and writes the exact Pareto set
/// in the same layout a search run uses.
fn exhaustive_front(out: &mut Artifacts, game: &Game, options: FitnessOptions, cap: usize) -> Result<(), CliError> {
    let policies = enumerate_deterministic(game, cap)?;
    let objective = PolicyObjective::new(game, options);
    let layout = objective.layout();
    let genes: Vec<Genes> = policies.iter().map(|p| Genes::from_policy(p, Mode::Deterministic)).collect();
    let fits: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        genes.par_iter().map(|g| objective.evaluate(g)).collect::<Result<_, _>>()?
    };
    let width = (policies.len().max(2) - 1).to_string().len();
    let ids: Vec<String> = (0..policies.len()).map(|i| format!("p{i:0width$}")).collect();
    let nc = game.model().criteria();
    let mut rows = vec![{
        let mut h = vec!["policy".to_string(), "genes".to_string()];
        h.extend((1..=nc).map(|k| format!("f{k}")));
        h.push("pareto".into());
        h
    }];
    let dominated = |i: usize| fits.iter().any(|f| pomg_core::moga::dominates(f, &fits[i]).unwrap_or(false));
    let mut front = Vec::new();
    for i in 0..policies.len() {
        let pareto = !dominated(i);
        let mut r = vec![ids[i].clone(), genes_label(&genes[i])];
        r.extend(fits[i].iter().map(|v| num(*v)));
        r.push(pareto.to_string());
        rows.push(r);
        if pareto {
            front.push((ids[i].clone(), genes[i].clone(), fits[i].clone()));
        }
    }
    out.write("all_policies.csv", &csv_string(rows)?)?;
    let table = write_front(out, game, layout, &front)?;
    println!("{} policies scored, {} on the Pareto set", policies.len(), front.len());
    if let Some(t) = table {
        print!("{t}");
    }
    Ok(())
}

fn voi(a: VoiArgs) -> Result<(), CliError> {
    let mut out = Artifacts::create(&a.out)?;
    out.input(&a.model)?;
    let model: PomgModel = load_model(&a.model)?;
    let windows = window_options(&a.windows);
    let game = Game::new(model.clone(), &windows)?;
    let leader = load_policy(a.leader.as_deref(), &game, Agent::Leader, &mut out)?;
    let solve = solve_options(&a.solve)?;
    if validate_factorization(&model).is_none() {
        return Err(pomg_core::Error::NotFactorizable.into());
    }
    let d = model.dims();
    let (na, nz) = (d.joint_actions(), d.follower_observations);

    let mut garblings: Vec<(String, Garbling)> = Vec::new();
    if a.identity {
        garblings.push(("identity".into(), Garbling::identity(na, nz)));
    }
    for &lambda in &a.noise {
        garblings.push((format!("noise_{lambda}"), Garbling::symmetric_noise(na, nz, lambda)?));
    }
    for (k, path) in a.garbling.iter().enumerate() {
        out.input(path)?;
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        garblings.push((format!("file_{k}"), Garbling::from_json(&text, na)?));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    for k in 0..a.random {
        garblings.push((format!("random_{k}"), Garbling::random(&mut rng, na, nz)));
    }
    if garblings.is_empty() {
        return Err(CliError::Usage(
            "no garblings requested; use --identity, --noise, --garbling or --random".into(),
        ));
    }

    let mut rows = Vec::new();
    for (id, g) in &garblings {
        out.write(&format!("garblings/{id}.json"), &(g.to_json() + "\n"))?;
        let c = compare_information(&model, g, &leader, &windows, &solve)?;
        if !c.ordering_ok {
            eprintln!("warning: garbling {id} improved the follower by {:.3e}", c.worst_gap);
        }
        rows.push((id.clone(), c));
    }
    out.write("voi.csv", &voi_csv(&rows))?;
    out.write(
        "voi.json",
        &to_json(&rows.iter().map(|(id, c)| json!({ "garbling": id, "comparison": c })).collect::<Vec<_>>()),
    )?;
    out.finish("voi", Some(a.seed), &a)?;
    let mut summary = String::new();
    for (id, c) in &rows {
        let _ = writeln!(
            summary,
            "{id}: v_p {:.6} v_q {:.6} difference {:.3e} ordering {}",
            c.v_p,
            c.v_q,
            c.difference,
            if c.ordering_ok { "ok" } else { "VIOLATED" }
        );
    }
    print!("{summary}");
    Ok(())
}

fn scenario_build(a: ScenarioBuildArgs) -> Result<(), CliError> {
    let mut out = Artifacts::create(&a.out)?;
    let params = match &a.params {
        Some(p) => {
            out.input(p)?;
            ScenarioParams::load(p)?
        }
        None => ScenarioParams::default(),
    };
    let model = build_model(&params)?;
    let game = Game::with_defaults(model.clone())?;
    let policies = (game.leader().n_actions() as f64).powi(game.leader().len() as i32);
    out.write("params.json", &params.to_json_string())?;
    out.write("model.json", &model.to_json_string())?;
    out.write(
        "scenario.json",
        &to_json(&json!({
            "leader_windows": (0..game.leader().len()).map(|i| game.leader().render(i)).collect::<Vec<_>>(),
            "follower_windows": game.follower().len(),
            "deterministic_leader_policies": policies,
        })),
    )?;
    out.finish("scenario-build", None, &a)?;
    println!(
        "scenario model written: {} leader windows, {} deterministic leader policies",
        game.leader().len(),
        policies
    );
    Ok(())
}
