//! The run configuration document. One TOML file drives every subcommand;
//! see `docs/config.md` for the schema.

use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};

use scout_core::pomdp::{self, BuildOptions, RewardSurrogate, DEFAULT_DISCOUNT};
use scout_core::planner::DEFAULT_TAU;
use scout_core::{
    BlockId, CameraView, EpisodeConfig, GridWorld, ObjectPose, ObjectSpec, Objective, ObservationModel, PolicyKind,
    PomdpModel, TruthSource, Variant, Zoom,
};
use serde::Deserialize;
use toml::Spanned;

pub const POLICIES: [&str; 4] = ["greedy", "random", "sweep", "pbvi"];
pub const SHAPES: [&str; 3] = ["single-cell", "domino", "bar3"];
pub const PRESETS: [&str; 2] = ["perfect", "noisy-default"];
pub const VARIANTS: [&str; 2] = ["a", "b"];
pub const OBJECTIVES: [&str; 2] = ["per-step", "terminal"];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(field) = &self.field {
            write!(f, "{field}: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    world: WorldSection,
    #[serde(default)]
    object: ObjectSection,
    #[serde(default)]
    sensor: SensorSection,
    #[serde(default)]
    model: ModelSection,
    planner: PlannerSection,
    #[serde(default)]
    sim: SimSection,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WorldSection {
    rows: Spanned<usize>,
    cols: Spanned<usize>,
    zooms: Option<Spanned<u8>>,
    block_side: Option<Spanned<f64>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ObjectSection {
    shape: Option<Spanned<String>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SensorSection {
    preset: Option<Spanned<String>>,
    path: Option<Spanned<String>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ModelSection {
    variant: Option<Spanned<String>>,
    discount: Option<Spanned<f64>>,
    allow_absent: Option<bool>,
    absent_mass: Option<Spanned<f64>>,
    hit_reward: Option<f64>,
    snapshot_cost: Option<f64>,
    initial_camera: Option<Spanned<CameraEntry>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CameraEntry {
    center: usize,
    zoom: u8,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlannerSection {
    policy: Spanned<String>,
    iterations: Option<usize>,
    expansion_rounds: Option<usize>,
    max_beliefs: Option<Spanned<usize>>,
    objective: Option<Spanned<String>>,
    tau: Option<Spanned<f64>>,
    max_steps: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SimSection {
    seed: Option<u64>,
    episodes: Option<Spanned<usize>>,
    truth: Option<Spanned<TruthEntry>>,
    policies: Option<Vec<Spanned<String>>>,
    workers: Option<Spanned<usize>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TruthEntry {
    Keyword(String),
    Placed {
        block: usize,
        #[serde(default)]
        orientation: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SensorSource {
    Preset(String),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub world: GridWorld,
    pub zooms: u8,
    pub shape: String,
    pub object: ObjectSpec,
    pub sensor: SensorSource,
    pub variant: Variant,
    pub discount: f64,
    pub allow_absent: bool,
    pub absent_mass: f64,
    pub surrogate: RewardSurrogate,
    pub initial_camera: Option<CameraView>,
    pub policy: PolicyKind,
    /// Solver settings from `[planner]`, used by `solve` whatever the policy.
    pub pbvi: PolicyKind,
    pub tau: f64,
    pub max_steps: usize,
    pub seed: u64,
    pub truth: TruthSource,
    pub episodes: usize,
    pub bench_policies: Vec<PolicyKind>,
    pub workers: Option<usize>,
}

struct Ctx<'a> {
    text: &'a str,
}

impl Ctx<'_> {
    fn line(&self, span: Range<usize>) -> usize {
        self.text[..span.start.min(self.text.len())].matches('\n').count() + 1
    }

    fn err<T>(&self, span: Range<usize>, field: &str, message: impl Into<String>) -> Result<T, ConfigError> {
        Err(ConfigError {
            line: Some(self.line(span)),
            field: Some(field.to_string()),
            message: message.into(),
        })
    }

    fn choice<'v>(&self, value: &'v Spanned<String>, field: &str, valid: &[&str]) -> Result<&'v str, ConfigError> {
        let v = value.get_ref().as_str();
        if valid.contains(&v) {
            Ok(v)
        } else {
            self.err(
                value.span(),
                field,
                format!("unknown value `{v}`; valid options: {}", valid.join(", ")),
            )
        }
    }
}

fn object_for(shape: &str) -> ObjectSpec {
    match shape {
        "single-cell" => ObjectSpec::single_cell(),
        "domino" => ObjectSpec::domino(),
        _ => ObjectSpec::bar3(),
    }
}

/// Parses and validates a configuration document. Referenced files are
/// not opened here; see [`RunConfig::sensor_model`].
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let doc: Document = toml::from_str(text).map_err(|e| ConfigError {
        line: e.span().map(|s| Ctx { text }.line(s)),
        field: None,
        message: e.message().trim().to_string(),
    })?;
    let cx = Ctx { text };

    let w = &doc.world;
    let zooms = match &w.zooms {
        None => 3,
        Some(z) if (1..=9).contains(z.get_ref()) => *z.get_ref(),
        Some(z) => return cx.err(z.span(), "world.zooms", format!("must be in 1..=9, got {}", z.get_ref())),
    };
    let world = match &w.block_side {
        None => GridWorld::new(*w.rows.get_ref(), *w.cols.get_ref()),
        Some(s) => GridWorld::with_block_side(*w.rows.get_ref(), *w.cols.get_ref(), *s.get_ref()),
    };
    let world = match world {
        Ok(world) => world,
        Err(e) => return cx.err(w.rows.span(), "world", e.to_string()),
    };

    let shape = match &doc.object.shape {
        None => "single-cell",
        Some(s) => cx.choice(s, "object.shape", &SHAPES)?,
    };

    let sensor = match (&doc.sensor.preset, &doc.sensor.path) {
        (Some(_), Some(p)) => return cx.err(p.span(), "sensor.path", "give either `preset` or `path`, not both"),
        (None, Some(p)) => SensorSource::File(PathBuf::from(p.get_ref())),
        (preset, None) => {
            let name = match preset {
                None => "perfect",
                Some(p) => cx.choice(p, "sensor.preset", &PRESETS)?,
            };
            if zooms > 3 {
                let span = preset.as_ref().map_or(0..0, |p| p.span());
                return cx.err(span, "sensor.preset", format!("presets cover zooms 1..=3, world has {zooms}"));
            }
            SensorSource::Preset(name.to_string())
        }
    };

    let m = &doc.model;
    let variant = match &m.variant {
        None => Variant::A,
        Some(v) => match cx.choice(v, "model.variant", &VARIANTS)? {
            "a" => Variant::A,
            _ => Variant::B,
        },
    };
    let discount = match &m.discount {
        None => DEFAULT_DISCOUNT,
        Some(d) if *d.get_ref() > 0.0 && *d.get_ref() <= 1.0 => *d.get_ref(),
        Some(d) => return cx.err(d.span(), "model.discount", format!("must be in (0, 1], got {}", d.get_ref())),
    };
    let allow_absent = m.allow_absent.unwrap_or(false);
    let absent_mass = match &m.absent_mass {
        None if allow_absent => 0.1,
        None => 0.0,
        Some(a) if !allow_absent => return cx.err(a.span(), "model.absent_mass", "requires allow_absent = true"),
        Some(a) if *a.get_ref() > 0.0 && *a.get_ref() < 1.0 => *a.get_ref(),
        Some(a) => return cx.err(a.span(), "model.absent_mass", format!("must be in (0, 1), got {}", a.get_ref())),
    };
    let defaults = RewardSurrogate::default();
    let surrogate = RewardSurrogate {
        hit_reward: m.hit_reward.unwrap_or(defaults.hit_reward),
        snapshot_cost: m.snapshot_cost.unwrap_or(defaults.snapshot_cost),
    };
    let initial_camera = match &m.initial_camera {
        None => None,
        Some(c) => {
            let entry = c.get_ref();
            let center = BlockId::from_number(entry.center).filter(|&b| world.contains(b));
            match (center, Zoom::new(entry.zoom)) {
                (Some(center), Ok(zoom)) if entry.zoom <= zooms => Some(CameraView::new(center, zoom)),
                _ => {
                    return cx.err(
                        c.span(),
                        "model.initial_camera",
                        format!("no view B{} at zoom {} on this world", entry.center, entry.zoom),
                    )
                }
            }
        }
    };

    let p = &doc.planner;
    let objective = match &p.objective {
        None => Objective::PerStep,
        Some(o) => match cx.choice(o, "planner.objective", &OBJECTIVES)? {
            "per-step" => Objective::PerStep,
            _ => Objective::Terminal,
        },
    };
    let max_beliefs = match &p.max_beliefs {
        None => 500,
        Some(n) if *n.get_ref() >= 1 => *n.get_ref(),
        Some(n) => return cx.err(n.span(), "planner.max_beliefs", "must be at least 1"),
    };
    let pbvi = PolicyKind::Pbvi {
        iterations: p.iterations.unwrap_or(10),
        expansion_rounds: p.expansion_rounds.unwrap_or(2),
        max_beliefs,
        objective,
    };
    let policy_of = |name: &str| match name {
        "greedy" => PolicyKind::Greedy,
        "random" => PolicyKind::Random,
        "sweep" => PolicyKind::Sweep,
        _ => pbvi,
    };
    let policy = policy_of(cx.choice(&p.policy, "planner.policy", &POLICIES)?);
    let tau = match &p.tau {
        None => DEFAULT_TAU,
        Some(t) if *t.get_ref() > 0.0 && *t.get_ref() <= 1.0 => *t.get_ref(),
        Some(t) => return cx.err(t.span(), "planner.tau", format!("must be in (0, 1], got {}", t.get_ref())),
    };

    let s = &doc.sim;
    let episodes = match &s.episodes {
        None => 100,
        Some(n) if *n.get_ref() >= 1 => *n.get_ref(),
        Some(n) => return cx.err(n.span(), "sim.episodes", "must be at least 1"),
    };
    let truth = match &s.truth {
        None => TruthSource::Random,
        Some(t) => match t.get_ref() {
            TruthEntry::Keyword(k) if k == "random" => TruthSource::Random,
            TruthEntry::Keyword(k) if k == "absent" && allow_absent => TruthSource::Explicit(ObjectPose::Absent),
            TruthEntry::Keyword(k) if k == "absent" => {
                return cx.err(t.span(), "sim.truth", "`absent` requires model.allow_absent = true")
            }
            TruthEntry::Keyword(k) => {
                return cx.err(
                    t.span(),
                    "sim.truth",
                    format!("unknown value `{k}`; valid options: random, absent, {{ block = N, orientation = M }}"),
                )
            }
            TruthEntry::Placed { block, orientation } => {
                let pose = BlockId::from_number(*block).map(|anchor| ObjectPose::Placed {
                    anchor,
                    orientation: *orientation,
                });
                match pose {
                    Some(pose) if pose.cells(&world, &object_for(shape)).is_some() => TruthSource::Explicit(pose),
                    _ => {
                        return cx.err(
                            t.span(),
                            "sim.truth",
                            format!("orientation {orientation} at B{block} does not fit the world"),
                        )
                    }
                }
            }
        },
    };
    let bench_policies = match &s.policies {
        None => vec![PolicyKind::Greedy, PolicyKind::Sweep, PolicyKind::Random],
        Some(list) => list
            .iter()
            .map(|name| cx.choice(name, "sim.policies", &POLICIES).map(policy_of))
            .collect::<Result<_, _>>()?,
    };
    let workers = match &s.workers {
        None => None,
        Some(n) if *n.get_ref() >= 1 => Some(*n.get_ref()),
        Some(n) => return cx.err(n.span(), "sim.workers", "must be at least 1"),
    };

    Ok(RunConfig {
        world,
        zooms,
        shape: shape.to_string(),
        object: object_for(shape),
        sensor,
        variant,
        discount,
        allow_absent,
        absent_mass,
        surrogate,
        initial_camera,
        policy,
        pbvi,
        tau,
        max_steps: p.max_steps.unwrap_or(200),
        seed: s.seed.unwrap_or(0),
        truth,
        episodes,
        bench_policies,
        workers,
    })
}

impl RunConfig {
    /// Loads the sensor; file paths resolve against `base`, the directory
    /// holding the configuration.
    pub fn sensor_model(&self, base: &Path) -> anyhow::Result<ObservationModel> {
        let model = match &self.sensor {
            SensorSource::Preset(name) => ObservationModel::preset(name, self.zooms)?,
            SensorSource::File(path) => {
                let full = base.join(path);
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| anyhow::anyhow!("sensor.path: cannot read {}: {e}", full.display()))?;
                let model = ObservationModel::from_toml_str(&text)
                    .map_err(|e| anyhow::anyhow!("sensor.path {}: {e}", full.display()))?;
                if model.zooms != self.zooms {
                    anyhow::bail!(
                        "sensor.path {}: table has {} zooms, world.zooms is {}",
                        full.display(),
                        model.zooms,
                        self.zooms
                    );
                }
                model
            }
        };
        Ok(model)
    }

    pub fn build_options(&self) -> BuildOptions {
        BuildOptions {
            zooms: self.zooms,
            discount: self.discount,
            allow_absent: self.allow_absent,
            absent_mass: self.absent_mass,
            initial_camera: self.initial_camera,
            surrogate: self.surrogate,
        }
    }

    pub fn build_model(&self, sensor: &ObservationModel) -> scout_core::Result<PomdpModel> {
        let centers = self.world.reduced_centers(&self.object);
        pomdp::build(self.variant, &self.world, &centers, sensor, &self.build_options())
    }

    pub fn episode_config(&self, sensor: ObservationModel, policy: PolicyKind) -> EpisodeConfig {
        let mut cfg = EpisodeConfig::new(self.world, self.object.clone(), sensor);
        cfg.zooms = self.zooms;
        cfg.policy = policy;
        cfg.truth = self.truth;
        cfg.seed = self.seed;
        cfg.max_steps = self.max_steps;
        cfg.tau = self.tau;
        cfg.allow_absent = self.allow_absent;
        cfg.absent_mass = self.absent_mass;
        cfg.discount = self.discount;
        cfg
    }
}
