use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use scout_core::sim::{metrics_csv, run_batch};
use scout_core::{EpisodeConfig, GridWorld, ObjectSpec, ObservationModel, PolicyKind};

const FLAGS: [&str; 6] = ["--config", "--seed", "--out", "--render", "--format", "--help"];
const SUBCOMMANDS: [&str; 4] = ["export", "solve", "simulate", "bench"];

fn scout(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scout")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn flags_in(text: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for (i, _) in text.match_indices("--") {
        let flag: String = text[i + 2..]
            .chars()
            .take_while(|c| c.is_ascii_lowercase() || *c == '-')
            .collect();
        if !flag.is_empty() {
            out.insert(format!("--{flag}"));
        }
    }
    out
}

#[test]
fn help_covers_every_flag() {
    let top = stdout(&scout(&["--help"]));
    for sub in SUBCOMMANDS {
        assert!(top.contains(sub), "{top}");
    }
    let readme = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../README.md")).unwrap();
    for sub in SUBCOMMANDS {
        let help = stdout(&scout(&[sub, "--help"]));
        let found = flags_in(&help);
        let expected: BTreeSet<String> = FLAGS.iter().map(|f| f.to_string()).collect();
        assert_eq!(found, expected, "{sub} help: {help}");
        for flag in FLAGS.iter().filter(|&&f| f != "--help") {
            assert!(readme.contains(flag), "README does not document {flag}");
        }
    }
}

#[test]
fn export_small_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[world]\nrows = 2\ncols = 2\nzooms = 1\n\n[planner]\npolicy = \"greedy\"\n",
    );
    let out = dir.path().join("m.pomdp");
    stdout(&scout(&["export", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().any(|l| l == "discount: 0.95"), "{text}");
    let states = text.lines().find(|l| l.starts_with("states:")).unwrap();
    assert_eq!(states.split_whitespace().count() - 1, 4, "{states}");
}

#[test]
fn config_errors_are_addressed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[world]\nrows = 4\ncols = 4\n\n[planner]\npolicy = \"astar\"\n");
    let o = scout(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 6") && err.contains("planner.policy"), "{err}");
    for name in ["greedy", "random", "sweep", "pbvi"] {
        assert!(err.contains(name), "{err}");
    }

    let cfg = write_config(
        dir.path(),
        "[world]\nrows = 4\ncols = 4\n\n[model]\ndiscount = 1.5\n\n[planner]\npolicy = \"greedy\"\n",
    );
    let o = scout(&["export", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 6") && err.contains("model.discount") && err.contains("(0, 1]"), "{err}");

    let o = scout(&["export", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("scout export:"));
}

#[test]
fn simulate_renders_every_step() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[world]\nrows = 4\ncols = 4\n\n[planner]\npolicy = \"greedy\"\n\n[sim]\ntruth = { block = 11 }\n",
    );
    let log = dir.path().join("episode.jsonl");
    let text = stdout(&scout(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--render",
        "--out",
        log.to_str().unwrap(),
    ]));
    let last = text.lines().last().unwrap();
    let steps: usize = last.strip_prefix("success=true steps=").unwrap().parse().unwrap();
    let frames = text.lines().filter(|l| l.starts_with("step ")).count();
    assert_eq!(frames, steps + 1);
    assert_eq!(text.lines().filter(|l| l.starts_with("+----+")).count(), 2 * (steps + 1));
    let lines = std::fs::read_to_string(&log).unwrap();
    assert_eq!(lines.lines().count(), steps + 2);
}

#[test]
fn bench_rows_match_batches() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[world]\nrows = 6\ncols = 6\n\n[object]\nshape = \"domino\"\n\n[sensor]\npreset = \"noisy-default\"\n\n\
         [planner]\npolicy = \"greedy\"\n\n[sim]\nseed = 7\nepisodes = 40\n",
    );
    let csv = stdout(&scout(&["bench", "--config", cfg.to_str().unwrap()]));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    for (line, name) in lines[1..].iter().zip(["greedy", "sweep", "random"]) {
        assert!(line.starts_with(name), "{line}");
    }

    let mut expected = Vec::new();
    for policy in [PolicyKind::Greedy, PolicyKind::Sweep, PolicyKind::Random] {
        let mut c = EpisodeConfig::new(
            GridWorld::new(6, 6).unwrap(),
            ObjectSpec::domino(),
            ObservationModel::noisy_default(3).unwrap(),
        );
        c.policy = policy;
        c.seed = 7;
        expected.push(run_batch(&c, 40, None).unwrap());
    }
    assert_eq!(csv, metrics_csv(&expected));

    let json = stdout(&scout(&["bench", "--config", cfg.to_str().unwrap(), "--format", "json"]));
    let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(doc["schema"], "scout.metrics.v1");
    assert_eq!(doc["policies"].as_array().unwrap().len(), 3);
}

#[test]
fn outputs_repeat_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[world]\nrows = 4\ncols = 4\nzooms = 2\n\n[sensor]\npreset = \"noisy-default\"\n\n\
         [model]\nallow_absent = true\n\n[planner]\npolicy = \"pbvi\"\niterations = 3\nmax_beliefs = 100\n\n\
         [sim]\nepisodes = 20\n",
    );
    let c = cfg.to_str().unwrap();
    for args in [
        vec!["export", "--config", c],
        vec!["solve", "--config", c],
        vec!["simulate", "--config", c, "--render", "--seed", "5"],
        vec!["bench", "--config", c, "--format", "json"],
    ] {
        let a = stdout(&scout(&args));
        let b = stdout(&scout(&args));
        assert!(!a.is_empty());
        assert_eq!(a, b, "{args:?}");
    }
    let a = stdout(&scout(&["simulate", "--config", c, "--seed", "5"]));
    let b = stdout(&scout(&["simulate", "--config", c, "--seed", "6"]));
    assert!(a.ends_with('\n') && b.ends_with('\n'));
}

#[test]
fn solve_writes_alpha_set() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[world]\nrows = 3\ncols = 3\nzooms = 2\n\n[model]\nvariant = \"b\"\n\n\
         [planner]\npolicy = \"pbvi\"\niterations = 4\nexpansion_rounds = 1\n",
    );
    let out = dir.path().join("alphas.json");
    stdout(&scout(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(doc["schema"], "scout.alphas.v1");
    assert_eq!(doc["variant"], "b");
    let n_states = doc["states"].as_array().unwrap().len();
    assert_eq!(n_states, 9 * 18);
    for v in doc["vectors"].as_array().unwrap() {
        assert_eq!(v["values"].as_array().unwrap().len(), n_states);
    }
    assert!(doc["initial_value"].as_f64().unwrap() > 0.0);
}

#[test]
fn sensor_table_from_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("sensor.toml"),
        ObservationModel::noisy_default(2).unwrap().to_toml_string(),
    )
    .unwrap();
    let cfg = write_config(
        dir.path(),
        "[world]\nrows = 3\ncols = 3\nzooms = 2\n\n[sensor]\npath = \"sensor.toml\"\n\n[planner]\npolicy = \"sweep\"\n",
    );
    let text = stdout(&scout(&["simulate", "--config", cfg.to_str().unwrap()]));
    assert!(text.lines().last().unwrap().contains("steps="));

    let cfg = write_config(
        dir.path(),
        "[world]\nrows = 3\ncols = 3\n\n[sensor]\npath = \"sensor.toml\"\n\n[planner]\npolicy = \"sweep\"\n",
    );
    let o = scout(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("zooms"));
}

#[test]
fn shipped_configs_run() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let p = path.to_str().unwrap();
            stdout(&scout(&["export", "--config", p]));
            let text = stdout(&scout(&["simulate", "--config", p]));
            assert!(text.lines().last().unwrap().contains("steps="), "{p}");
            seen += 1;
        }
    }
    assert!(seen >= 5);
}
