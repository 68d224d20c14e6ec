use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use pomg_cli::exit;
use pomg_core::history::{Agent, Game};
use pomg_core::model::{Dims, Joint, ModelParts, PomgModel};
use pomg_core::policy::FiniteMemoryPolicy;
use pomg_core::scenario::{build_model, ScenarioParams};
use pomg_testkit::horizon::{tail_bound, value, value_sets};
use pomg_testkit::pareto::pareto_points;
use pomg_testkit::{random_model, Shape};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn pomg(args: &[&str]) -> i32 {
    pomg_cli::run(std::iter::once("pomg").chain(args.iter().copied()))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Every file under `root`, keyed by relative path.
fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn desk(dir: &Path) -> PathBuf {
    let path = dir.join("desk.json");
    build_model(&ScenarioParams::default()).unwrap().save(&path).unwrap();
    path
}

fn singleton(dir: &Path) -> PathBuf {
    let d = Dims {
        leader_states: 1,
        follower_states: 1,
        leader_actions: 1,
        follower_actions: 1,
        leader_observations: 1,
        follower_observations: 1,
    };
    let mut parts = ModelParts::with_dims(d, 1, 0.5, 1);
    let o = Joint::new(0, 0);
    parts.set_prob(o, o, o, o, 1.0);
    parts.set_follower_cost(o, o, 1.0);
    parts.set_initial(o, 1.0);
    let path = dir.join("singleton.json");
    PomgModel::new(parts).unwrap().save(&path).unwrap();
    path
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(pomg(&["no-such-command"]), exit::USAGE);
    assert_eq!(pomg(&["moga", "--model", "m.json", "--out", "o"]), exit::USAGE, "seed is mandatory");
    assert_eq!(pomg(&["voi", "--model", "m.json", "--out", "o"]), exit::USAGE, "seed is mandatory");
    assert_eq!(pomg(&["validate", "--model", "m.json", "--threads", "0"]), exit::USAGE);
    assert_eq!(pomg(&["--help"]), exit::SUCCESS);
}

#[test]
fn short_slice_fails_validation_and_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let model = random_model(&mut rng, &Shape::small(2, 3));
    let mut file = serde_json::to_value(serde_json::from_str::<Value>(&model.to_json_string()).unwrap()).unwrap();
    for entry in file["dynamics"].as_array_mut().unwrap() {
        let hit = [("s_l", "sl1"), ("s_f", "sf2"), ("a_l", "al0"), ("a_f", "af1")]
            .iter()
            .all(|(k, v)| entry[*k] == *v);
        if hit {
            entry["p"] = Value::from(entry["p"].as_f64().unwrap() * 0.98);
        }
    }
    let path = dir.path().join("bad.json");
    fs::write(&path, serde_json::to_string(&file).unwrap()).unwrap();

    let output = Command::new(env!("CARGO_BIN_EXE_pomg"))
        .args(["validate", "--model", p(&path)])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(exit::VALIDATION));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("(s_l=sl1, s_f=sf2, a_l=al0, a_f=af1)"), "{stderr}");
    assert!(stderr.contains("0.98"), "{stderr}");

    let good = dir.path().join("good.json");
    model.save(&good).unwrap();
    assert_eq!(pomg(&["validate", "--model", p(&good)]), exit::SUCCESS);
}

#[test]
fn scenario_validates_with_a_factorization_report() {
    let dir = tempfile::tempdir().unwrap();
    let built = dir.path().join("built");
    assert_eq!(pomg(&["scenario-build", "--out", p(&built)]), exit::SUCCESS);
    let out = dir.path().join("report");
    let model = built.join("model.json");
    assert_eq!(pomg(&["validate", "--model", p(&model), "--out", p(&out)]), exit::SUCCESS);
    let report = read_json(out.join("report.json"));
    assert_eq!(report["factorizable"], true);
    assert_eq!(report["leader_windows"], 6);
    let scenario = read_json(built.join("scenario.json"));
    assert_eq!(scenario["deterministic_leader_policies"], 64.0);
}

#[test]
fn singleton_value_is_two_and_reruns_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let model = singleton(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert_eq!(pomg(&["solve-follower", "--model", p(&model), "--out", p(out)]), exit::SUCCESS);
    }
    let summary = read_json(a.join("summary.json"));
    assert!((summary["initial_value"].as_f64().unwrap() - 2.0).abs() <= 1e-4, "{summary}");
    assert_eq!(tree(&a), tree(&b));
    let manifest = read_json(a.join("manifest.json"));
    let outputs: Vec<&str> = manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["path"].as_str().unwrap())
        .collect();
    assert_eq!(outputs, ["gamma.json", "solve_log.csv", "summary.json"]);
    assert_eq!(
        manifest["outputs"][0]["sha256"],
        pomg_cli::sha256_hex(&fs::read(a.join("gamma.json")).unwrap())
    );
}

#[test]
fn non_convergence_exits_with_three_and_keeps_the_log() {
    let dir = tempfile::tempdir().unwrap();
    let model = desk(dir.path());
    let out = dir.path().join("out");
    let code = pomg(&["solve-follower", "--model", p(&model), "--max-iter", "2", "--out", p(&out)]);
    assert_eq!(code, exit::CONVERGENCE);
    let summary = read_json(out.join("summary.json"));
    assert_eq!(summary["converged"], false);
    assert!(out.join("solve_log.csv").exists());
}

#[test]
fn desk_uniform_probe_matches_the_finite_horizon_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let model = desk(dir.path());
    let out = dir.path().join("out");
    assert_eq!(pomg(&["solve-follower", "--model", p(&model), "--out", p(&out)]), exit::SUCCESS);
    let summary = read_json(out.join("summary.json"));

    let game = Game::with_defaults(build_model(&ScenarioParams::default()).unwrap()).unwrap();
    let n = game.leader().len();
    let leader = FiniteMemoryPolicy::uniform(Agent::Leader, n, game.leader().n_actions());
    let horizon = 200;
    let sets = value_sets(&game, &leader, horizon);
    let tol = 1e-4 + tail_bound(&game, horizon) + 1e-9;
    let y = vec![1.0 / n as f64; n];
    for (sf, name) in game.model().parts().follower_states.iter().enumerate() {
        let reported = summary["value_at_uniform_belief"][name].as_f64().unwrap();
        let oracle = value(&sets, sf, &y);
        assert!((reported - oracle).abs() <= tol, "{name}: {reported} vs {oracle}");
    }
}

#[test]
fn moga_is_reproducible_and_handles_zero_generations() {
    let dir = tempfile::tempdir().unwrap();
    let model = desk(dir.path());
    let runs: Vec<PathBuf> = (0..2).map(|k| dir.path().join(format!("run{k}"))).collect();
    for out in &runs {
        assert_eq!(pomg(&["moga", "--model", p(&model), "--seed", "5", "--out", p(out)]), exit::SUCCESS);
    }
    assert_eq!(tree(&runs[0]), tree(&runs[1]));
    assert!(runs[0].join("checkpoints/generation_0005.json").exists());

    let zero = dir.path().join("zero");
    let args = ["moga", "--model", p(&model), "--seed", "5", "--generations", "0", "--out", p(&zero)];
    assert_eq!(pomg(&args), exit::SUCCESS);
    let table = fs::read_to_string(zero.join("decision_table.txt")).unwrap();
    assert!(table.lines().count() >= 2, "{table}");
    assert!(zero.join("checkpoints/generation_0000.json").exists());
}

#[test]
fn resuming_matches_an_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let model = desk(dir.path());
    let (short, long, resumed) = (dir.path().join("s"), dir.path().join("l"), dir.path().join("r"));
    let base = ["moga", "--model", p(&model), "--seed", "9", "--generations"];
    assert_eq!(pomg(&[&base[..], &["3", "--out", p(&short)]].concat()), exit::SUCCESS);
    assert_eq!(pomg(&[&base[..], &["6", "--out", p(&long)]].concat()), exit::SUCCESS);
    let checkpoint = short.join("checkpoints/generation_0003.json");
    let args = [&base[..], &["6", "--resume", p(&checkpoint), "--out", p(&resumed)]].concat();
    assert_eq!(pomg(&args), exit::SUCCESS);
    for file in ["front.csv", "decision_table.csv", "checkpoints/generation_0006.json"] {
        assert_eq!(
            fs::read(long.join(file)).unwrap(),
            fs::read(resumed.join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn failed_evaluation_exits_with_four_and_keeps_the_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let model = desk(dir.path());
    let first = dir.path().join("first");
    let args = ["moga", "--model", p(&model), "--seed", "2", "--generations", "1", "--out", p(&first)];
    assert_eq!(pomg(&args), exit::SUCCESS);
    let checkpoint = first.join("checkpoints/generation_0001.json");

    // Starved value iteration cannot score the offspring.
    let broken = dir.path().join("broken");
    let args = [
        "moga", "--model", p(&model), "--seed", "2", "--generations", "3", "--max-iter", "1", "--resume",
        p(&checkpoint), "--out", p(&broken),
    ];
    assert_eq!(pomg(&args), exit::RUNTIME);
    let kept = read_json(broken.join("checkpoints/generation_0001.json"));
    assert_eq!(kept["population"], read_json(&checkpoint)["population"]);
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    reader.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn exhaustive_search_reports_the_brute_force_front() {
    let dir = tempfile::tempdir().unwrap();
    let model = desk(dir.path());
    let (en, ex) = (dir.path().join("en"), dir.path().join("ex"));
    assert_eq!(pomg(&["enumerate", "--model", p(&model), "--out", p(&en)]), exit::SUCCESS);
    let args = ["moga", "--model", p(&model), "--seed", "1", "--exhaustive", "--out", p(&ex)];
    assert_eq!(pomg(&args), exit::SUCCESS);
    assert_eq!(
        fs::read(en.join("decision_table.csv")).unwrap(),
        fs::read(ex.join("decision_table.csv")).unwrap()
    );

    let rows = csv_rows(&en.join("all_policies.csv"));
    assert_eq!(rows.len(), 64);
    let points: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[2].parse().unwrap(), r[3].parse().unwrap()]).collect();
    let front = pareto_points(&points);
    for (row, point) in rows.iter().zip(&points) {
        assert_eq!(row[4] == "true", front.contains(point), "{row:?}");
    }
    let table = csv_rows(&en.join("decision_table.csv"));
    assert_eq!(table.len(), front.len());
}

#[test]
fn voi_identity_is_free_and_reruns_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let model = desk(dir.path());
    let runs: Vec<PathBuf> = (0..2).map(|k| dir.path().join(format!("v{k}"))).collect();
    for out in &runs {
        let args = [
            "voi", "--model", p(&model), "--identity", "--random", "2", "--noise", "1.0", "--seed", "3", "--out", p(out),
        ];
        assert_eq!(pomg(&args), exit::SUCCESS);
    }
    assert_eq!(tree(&runs[0]), tree(&runs[1]));
    let report = read_json(runs[0].join("voi.json"));
    let rows = report.as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0]["garbling"], "identity");
    assert!(rows[0]["comparison"]["difference"].as_f64().unwrap().abs() <= 2e-4);
    for row in rows {
        assert_eq!(row["comparison"]["ordering_ok"], true, "{row}");
    }
}

#[test]
fn voi_rejects_correlated_observations() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let model = random_model(&mut rng, &Shape::small(2, 2));
    assert!(pomg_core::model::validate_factorization(&model).is_none());
    let path = dir.path().join("m.json");
    model.save(&path).unwrap();
    let out = dir.path().join("out");
    let code = pomg(&["voi", "--model", p(&path), "--identity", "--seed", "0", "--out", p(&out)]);
    assert_eq!(code, exit::VALIDATION);
}

#[test]
fn evaluate_and_approximate_agree_on_the_response() {
    let dir = tempfile::tempdir().unwrap();
    let model = desk(dir.path());
    let (af, ev, ev2) = (dir.path().join("af"), dir.path().join("ev"), dir.path().join("ev2"));
    assert_eq!(pomg(&["approx-finite", "--model", p(&model), "--out", p(&af)]), exit::SUCCESS);
    let args = ["evaluate", "--model", p(&model), "--alternatives", "10", "--seed", "4", "--out", p(&ev)];
    assert_eq!(pomg(&args), exit::SUCCESS);
    let follower = af.join("follower_policy.json");
    let args = ["evaluate", "--model", p(&model), "--follower", p(&follower), "--out", p(&ev2)];
    assert_eq!(pomg(&args), exit::SUCCESS);
    assert_eq!(
        fs::read(ev.join("g_tables.csv")).unwrap(),
        fs::read(ev2.join("g_tables.csv")).unwrap()
    );
    let report = read_json(ev.join("evaluation.json"));
    assert_eq!(report["equilibrium"]["violations"], 0);
    assert_eq!(
        pomg(&["evaluate", "--model", p(&model), "--alternatives", "3", "--out", p(&ev)]),
        exit::USAGE,
        "alternatives need a seed"
    );
}
