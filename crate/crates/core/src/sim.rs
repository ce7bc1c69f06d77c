//! Seeded search episodes and policy-comparison batches.
//!
//! Every random draw in an episode comes from one of three generators
//! derived from the episode seed: ground truth, sensor noise and policy
//! choices. Policies compared on the same seed therefore face the same
//! object placement.
//!
//! Seeds are derived with the SplitMix64 finalizer `mix`:
//! episode `i` of a batch with seed `s` uses `mix(s + (i + 1) * PHI)`, and
//! stream `k` of episode seed `e` uses `mix(e ^ (k * PHI))`, where
//! `PHI = 0x9E3779B97F4A7C15`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::belief::{Belief, Hypothesis};
use crate::error::{Error, Result};
use crate::observation::{draw, Observation, ObservationModel};
use crate::planner::{
    expand_beliefs, is_terminal, pbvi_solve, AlphaPolicy, AlphaVectorSet, GreedyPolicy, Objective, Policy,
    RandomPolicy, SweepPolicy, Termination, DEFAULT_TAU,
};
use crate::pomdp::{build_variant_a, BuildOptions, PomdpModel, DEFAULT_DISCOUNT};
use crate::world::{BlockId, CameraView, GridWorld, ObjectPose, ObjectSpec};

pub const EPISODE_SCHEMA: &str = "scout.episode.v1";
pub const METRICS_SCHEMA: &str = "scout.metrics.v1";

const PHI: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn sub_seed(seed: u64, episode: u64) -> u64 {
    mix(seed.wrapping_add(episode.wrapping_add(1).wrapping_mul(PHI)))
}

fn stream_seed(seed: u64, stream: u64) -> u64 {
    mix(seed ^ stream.wrapping_mul(PHI))
}

const TRUTH_STREAM: u64 = 1;
const SENSOR_STREAM: u64 = 2;
const POLICY_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum PolicyKind {
    Greedy,
    Random,
    Sweep,
    Pbvi {
        iterations: usize,
        expansion_rounds: usize,
        max_beliefs: usize,
        objective: Objective,
    },
}

impl PolicyKind {
    pub fn label(&self) -> &'static str {
        match self {
            PolicyKind::Greedy => "greedy",
            PolicyKind::Random => "random",
            PolicyKind::Sweep => "sweep",
            PolicyKind::Pbvi { .. } => "pbvi",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthSource {
    Explicit(ObjectPose),
    /// Uniform over every pose of the object (and absence, if allowed).
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeConfig {
    pub world: GridWorld,
    pub object: ObjectSpec,
    pub sensor: ObservationModel,
    pub zooms: u8,
    pub policy: PolicyKind,
    pub truth: TruthSource,
    pub seed: u64,
    pub max_steps: usize,
    pub tau: f64,
    pub allow_absent: bool,
    pub absent_mass: f64,
    pub discount: f64,
}

impl EpisodeConfig {
    /// Defaults around a world and sensor: greedy policy, random truth,
    /// three zooms, no absence.
    pub fn new(world: GridWorld, object: ObjectSpec, sensor: ObservationModel) -> EpisodeConfig {
        EpisodeConfig {
            world,
            object,
            zooms: sensor.zooms,
            sensor,
            policy: PolicyKind::Greedy,
            truth: TruthSource::Random,
            seed: 0,
            max_steps: 200,
            tau: DEFAULT_TAU,
            allow_absent: false,
            absent_mass: 0.0,
            discount: DEFAULT_DISCOUNT,
        }
    }

    pub fn build_options(&self) -> BuildOptions {
        BuildOptions {
            zooms: self.zooms,
            discount: self.discount,
            allow_absent: self.allow_absent,
            absent_mass: self.absent_mass,
            ..BuildOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub view: CameraView,
    pub observation: Observation,
    pub mode: Hypothesis,
    pub mode_probability: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub seed: u64,
    pub policy: String,
    pub truth: ObjectPose,
    pub records: Vec<StepRecord>,
    pub steps_taken: usize,
    pub termination: Termination,
    pub declared: Hypothesis,
    pub success: bool,
    pub initial_entropy: f64,
    pub final_entropy: f64,
}

impl EpisodeResult {
    /// Line-delimited JSON: a header, one line per step, a summary.
    pub fn to_jsonl(&self) -> String {
        let header = serde_json::json!({
            "schema": EPISODE_SCHEMA,
            "kind": "header",
            "seed": self.seed,
            "policy": self.policy,
            "truth": self.truth,
            "initial_entropy": self.initial_entropy,
        });
        let mut out = String::new();
        out.push_str(&header.to_string());
        out.push('\n');
        for r in &self.records {
            let mut v = serde_json::to_value(r).expect("step record serializes");
            v["kind"] = "step".into();
            out.push_str(&v.to_string());
            out.push('\n');
        }
        let summary = serde_json::json!({
            "kind": "summary",
            "steps_taken": self.steps_taken,
            "termination": self.termination,
            "declared": self.declared,
            "success": self.success,
            "final_entropy": self.final_entropy,
        });
        out.push_str(&summary.to_string());
        out.push('\n');
        out
    }
}

/// A prepared search problem: planning model and (for PBVI) the solved
/// value function, shared by every episode of a batch.
pub struct Simulator {
    config: EpisodeConfig,
    model: PomdpModel,
    poses: Vec<ObjectPose>,
    alphas: Option<AlphaVectorSet>,
}

impl Simulator {
    pub fn new(config: EpisodeConfig) -> Result<Simulator> {
        config.object.validate()?;
        if !(0.0..=1.0).contains(&config.tau) {
            return Err(Error::Config(format!("tau must be in [0, 1], got {}", config.tau)));
        }
        let centers = config.world.reduced_centers(&config.object);
        let model = build_variant_a(&config.world, &centers, &config.sensor, &config.build_options())?;
        let poses = config.world.enumerate_poses(&config.object, config.allow_absent)?;
        if let TruthSource::Explicit(pose) = config.truth {
            if pose.cells(&config.world, &config.object).is_none() {
                return Err(Error::Config(format!("true pose {pose} does not fit the grid")));
            }
            if pose == ObjectPose::Absent && !config.allow_absent {
                return Err(Error::Config("true pose is absent but absence is disabled".into()));
            }
        }
        let alphas = match config.policy {
            PolicyKind::Pbvi {
                iterations,
                expansion_rounds,
                max_beliefs,
                objective,
            } => {
                let start = model.initial_belief()?;
                let beliefs = expand_beliefs(&model, &start, expansion_rounds, max_beliefs.max(1));
                Some(pbvi_solve(&model, &beliefs, iterations, objective))
            }
            _ => None,
        };
        Ok(Simulator {
            config,
            model,
            poses,
            alphas,
        })
    }

    pub fn model(&self) -> &PomdpModel {
        &self.model
    }

    pub fn config(&self) -> &EpisodeConfig {
        &self.config
    }

    fn policy(&self, seed: u64) -> Result<Box<dyn Policy + '_>> {
        Ok(match self.config.policy {
            PolicyKind::Greedy => Box::new(GreedyPolicy::new(&self.model)),
            PolicyKind::Random => Box::new(RandomPolicy::new(
                self.model.n_actions(),
                stream_seed(seed, POLICY_STREAM),
            )),
            PolicyKind::Sweep => Box::new(SweepPolicy::new(&self.model)?),
            PolicyKind::Pbvi { objective, .. } => Box::new(AlphaPolicy::new(
                &self.model,
                self.alphas.clone().expect("solved at construction"),
                objective,
            )),
        })
    }

    fn truth(&self, seed: u64) -> ObjectPose {
        match self.config.truth {
            TruthSource::Explicit(pose) => pose,
            TruthSource::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, TRUTH_STREAM));
                self.poses[rng.gen_range(0..self.poses.len())]
            }
        }
    }

    /// Runs one episode; the result depends only on the configuration and
    /// `seed`.
    pub fn run_episode(&self, seed: u64) -> Result<EpisodeResult> {
        let cfg = &self.config;
        let world = &cfg.world;
        let truth = self.truth(seed);
        let cells = truth
            .cells(world, &cfg.object)
            .expect("true pose checked at construction");
        let mut sensor_rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, SENSOR_STREAM));
        let mut policy = self.policy(seed)?;

        let mut belief: Belief = self.model.initial_belief()?;
        let initial_entropy = belief.entropy();
        let mut records = Vec::new();
        let mut last = None;
        let termination = loop {
            if let Some(t) = is_terminal(last, &belief, cfg.tau, records.len(), cfg.max_steps) {
                break t;
            }
            let step = records.len() + 1;
            let action = policy.next_action(&belief);
            let view = self.model.view(action).expect("search model has views");
            let o = draw(&mut sensor_rng, cfg.sensor.p_seen(&cells, view, world));
            belief = belief
                .bayes_update(view, o, &cfg.sensor, world)
                .map_err(|e| Error::Episode {
                    seed,
                    step,
                    source: Box::new(e),
                })?;
            let (mode, mode_probability) = belief.mode();
            records.push(StepRecord {
                step,
                view,
                observation: o,
                mode,
                mode_probability,
                entropy: belief.entropy(),
            });
            last = Some((view, o));
        };

        let declared = belief.mode().0;
        let matches = match declared {
            Hypothesis::Absent => truth == ObjectPose::Absent,
            Hypothesis::Block(b) => cells.contains(&b),
        };
        Ok(EpisodeResult {
            seed,
            policy: cfg.policy.label().to_string(),
            truth,
            steps_taken: records.len(),
            records,
            termination,
            declared,
            success: termination != Termination::StepLimit && matches,
            initial_entropy,
            final_entropy: belief.entropy(),
        })
    }

    /// Episodes `0..n` with derived sub-seeds, on the current rayon pool.
    pub fn run_batch(&self, n: usize) -> Result<Vec<EpisodeResult>> {
        (0..n as u64)
            .into_par_iter()
            .map(|i| self.run_episode(sub_seed(self.config.seed, i)))
            .collect()
    }
}

pub fn run_episode(config: &EpisodeConfig) -> Result<EpisodeResult> {
    Simulator::new(config.clone())?.run_episode(config.seed)
}

/// A batch of `n` episodes summarized. `workers` pins the thread count;
/// results do not depend on it.
pub fn run_batch(config: &EpisodeConfig, n: usize, workers: Option<usize>) -> Result<Metrics> {
    if n == 0 {
        return Err(Error::Config("episode count must be at least 1".into()));
    }
    let sim = Simulator::new(config.clone())?;
    let results = match workers {
        None => sim.run_batch(n)?,
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(|| sim.run_batch(n))?,
    };
    Ok(Metrics::from_results(config.policy.label(), &results))
}

/// Runs the same seeds under each policy.
pub fn compare_policies(config: &EpisodeConfig, policies: &[PolicyKind], n: usize) -> Result<Vec<Metrics>> {
    policies
        .iter()
        .map(|&policy| {
            let cfg = EpisodeConfig {
                policy,
                ..config.clone()
            };
            run_batch(&cfg, n, None)
        })
        .collect()
}

/// Per-episode numbers that batch metrics are built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSummary {
    pub steps: usize,
    pub success: bool,
    pub initial_entropy: f64,
    pub final_entropy: f64,
}

impl From<&EpisodeResult> for EpisodeSummary {
    fn from(r: &EpisodeResult) -> Self {
        EpisodeSummary {
            steps: r.steps_taken,
            success: r.success,
            initial_entropy: r.initial_entropy,
            final_entropy: r.final_entropy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub policy: String,
    pub episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_steps: f64,
    pub median_steps: f64,
    pub std_steps: f64,
    /// Normal-approximation 95% interval for the mean step count.
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub mean_initial_entropy: f64,
    pub mean_final_entropy: f64,
}

impl Metrics {
    pub fn from_results(policy: &str, results: &[EpisodeResult]) -> Metrics {
        Metrics::from_summaries(policy, results.iter().map(EpisodeSummary::from))
    }

    /// Step statistics are computed from integer totals and a sorted copy,
    /// so they do not depend on episode order.
    pub fn from_summaries(policy: &str, summaries: impl IntoIterator<Item = EpisodeSummary>) -> Metrics {
        let summaries: Vec<EpisodeSummary> = summaries.into_iter().collect();
        let n = summaries.len();
        assert!(n > 0, "metrics need at least one episode");
        let nf = n as f64;
        let successes = summaries.iter().filter(|s| s.success).count();
        let total: u64 = summaries.iter().map(|s| s.steps as u64).sum();
        let total_sq: u128 = summaries.iter().map(|s| (s.steps as u128).pow(2)).sum();
        let mean = total as f64 / nf;
        let var = if n > 1 {
            let n = n as u128;
            // Exact numerator of the sample variance: n * sum(x^2) - (sum x)^2.
            let num = n * total_sq - u128::from(total).pow(2);
            num as f64 / (nf * (nf - 1.0))
        } else {
            0.0
        };
        let std = var.sqrt();
        let half = 1.96 * std / nf.sqrt();
        let mut steps: Vec<usize> = summaries.iter().map(|s| s.steps).collect();
        steps.sort_unstable();
        let median = if n % 2 == 1 {
            steps[n / 2] as f64
        } else {
            (steps[n / 2 - 1] + steps[n / 2]) as f64 / 2.0
        };
        let mut h0: Vec<f64> = summaries.iter().map(|s| s.initial_entropy).collect();
        let mut h1: Vec<f64> = summaries.iter().map(|s| s.final_entropy).collect();
        h0.sort_by(f64::total_cmp);
        h1.sort_by(f64::total_cmp);
        Metrics {
            policy: policy.to_string(),
            episodes: n,
            successes,
            success_rate: successes as f64 / nf,
            mean_steps: mean,
            median_steps: median,
            std_steps: std,
            ci95_low: mean - half,
            ci95_high: mean + half,
            mean_initial_entropy: h0.iter().sum::<f64>() / nf,
            mean_final_entropy: h1.iter().sum::<f64>() / nf,
        }
    }

    pub const CSV_HEADER: &'static str = "policy,episodes,successes,success_rate,mean_steps,median_steps,std_steps,ci95_low,ci95_high,mean_initial_entropy,mean_final_entropy";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.policy,
            self.episodes,
            self.successes,
            self.success_rate,
            self.mean_steps,
            self.median_steps,
            self.std_steps,
            self.ci95_low,
            self.ci95_high,
            self.mean_initial_entropy,
            self.mean_final_entropy
        )
    }
}

pub fn metrics_csv(rows: &[Metrics]) -> String {
    let mut out = String::from(Metrics::CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

pub fn metrics_json(rows: &[Metrics]) -> String {
    let doc = serde_json::json!({
        "schema": METRICS_SCHEMA,
        "policies": rows,
    });
    serde_json::to_string_pretty(&doc).expect("metrics serialize") + "\n"
}

/// Single-block pose for a one-cell object.
pub fn single_cell_at(block: BlockId) -> ObjectPose {
    ObjectPose::Placed {
        anchor: block,
        orientation: 0,
    }
}
