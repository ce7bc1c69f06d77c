//! Finite POMDP models of the search problem.
//!
//! Two factorizations are built. In [`Variant::A`] the state is only the
//! object location and the camera pose lives in the action. In
//! [`Variant::B`] every state also records the camera pose, and a snapshot
//! action deterministically moves the camera component. Both run the same
//! filter on the object component.

mod cassandra;

pub use cassandra::{export_cassandra, import_cassandra};

use serde::{Deserialize, Serialize};

use crate::belief::Belief;
use crate::error::{Error, Result};
use crate::observation::{Observation, ObservationModel};
use crate::world::{BlockId, CameraView, GridWorld, ObjectSpec};

pub const ROW_SUM_TOL: f64 = 1e-12;
pub const DEFAULT_DISCOUNT: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Camera pose in the action.
    #[serde(rename = "a", alias = "A")]
    A,
    /// Camera pose in the state.
    #[serde(rename = "b", alias = "B")]
    B,
}

/// Linear stand-in for the mode reward, used only where a state-action
/// reward table is required (file export). A close-up on the object's
/// block earns `hit_reward`; every snapshot costs `snapshot_cost`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardSurrogate {
    pub hit_reward: f64,
    pub snapshot_cost: f64,
}

impl Default for RewardSurrogate {
    fn default() -> Self {
        RewardSurrogate {
            hit_reward: 1.0,
            snapshot_cost: 0.01,
        }
    }
}

impl RewardSurrogate {
    fn reward(&self, hypothesis: Option<BlockId>, view: CameraView) -> f64 {
        let hit = hypothesis == Some(view.center) && view.zoom.level() == 1;
        if hit {
            self.hit_reward - self.snapshot_cost
        } else {
            -self.snapshot_cost
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildOptions {
    pub zooms: u8,
    pub discount: f64,
    pub allow_absent: bool,
    pub absent_mass: f64,
    /// Camera pose the Variant B start belief is tied to. Defaults to the
    /// first action's view.
    pub initial_camera: Option<CameraView>,
    pub surrogate: RewardSurrogate,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            zooms: 3,
            discount: DEFAULT_DISCOUNT,
            allow_absent: false,
            absent_mass: 0.0,
            initial_camera: None,
            surrogate: RewardSurrogate::default(),
        }
    }
}

/// What a built model's indices mean in search terms.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchLayout {
    pub variant: Variant,
    pub world: GridWorld,
    /// Object hypotheses per camera copy: the blocks, then absence.
    pub n_hypotheses: usize,
    pub has_absent: bool,
    /// Camera view taken by each action.
    pub views: Vec<CameraView>,
}

/// `(states, actions, T, observations, O, R, discount)` with sparse
/// transition rows.
#[derive(Debug, Clone, PartialEq)]
pub struct PomdpModel {
    pub discount: f64,
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub observations: Vec<String>,
    /// `transitions[a][s]` lists `(s', p)` with `p > 0`, ascending in `s'`.
    pub transitions: Vec<Vec<Vec<(usize, f64)>>>,
    /// `observation_probs[a][s'][o]`.
    pub observation_probs: Vec<Vec<Vec<f64>>>,
    /// `rewards[a][s]`.
    pub rewards: Vec<Vec<f64>>,
    pub start: Option<Vec<f64>>,
    pub layout: Option<SearchLayout>,
}

/// One observation branch of a one-step lookahead.
#[derive(Debug, Clone)]
pub struct Branch {
    pub observation: usize,
    pub probability: f64,
    pub posterior: Belief,
}

fn check_build(
    world: &GridWorld,
    centers: &[BlockId],
    model: &ObservationModel,
    opts: &BuildOptions,
) -> Result<()> {
    if centers.is_empty() {
        return Err(Error::EmptyCenters);
    }
    if let Some(c) = centers.iter().find(|c| !world.contains(**c)) {
        return Err(Error::InvalidView(format!("center {c} outside the grid")));
    }
    if opts.zooms == 0 || opts.zooms > model.zooms {
        return Err(Error::InvalidModel(format!(
            "zoom count {} must be in 1..={} (observation model rows)",
            opts.zooms, model.zooms
        )));
    }
    if !(opts.discount > 0.0 && opts.discount < 1.0) {
        return Err(Error::InvalidModel(format!(
            "discount must be in (0, 1), got {}",
            opts.discount
        )));
    }
    crate::observation::validate_model(model).map_err(Error::InvalidObservationModel)?;
    Ok(())
}

fn hypothesis_names(world: &GridWorld, allow_absent: bool) -> Vec<String> {
    let mut names: Vec<String> = world.blocks().map(|b| format!("b{}", b.number())).collect();
    if allow_absent {
        names.push("absent".into());
    }
    names
}

fn action_name(view: CameraView) -> String {
    format!("c{}z{}", view.center.number(), view.zoom.level())
}

fn obs_names() -> Vec<String> {
    Observation::ALL.iter().map(|o| o.name().to_string()).collect()
}

fn obs_row(p_seen: f64) -> Vec<f64> {
    vec![p_seen, 1.0 - p_seen]
}

/// Camera pose in the action: `|states| = N (+1)`, `|actions| = |centers| * K`.
pub fn build_variant_a(
    world: &GridWorld,
    centers: &[BlockId],
    model: &ObservationModel,
    opts: &BuildOptions,
) -> Result<PomdpModel> {
    check_build(world, centers, model, opts)?;
    let views = world.all_views(centers, opts.zooms);
    let n_blocks = world.len();
    let states = hypothesis_names(world, opts.allow_absent);
    let n = states.len();
    let block_of = |s: usize| (s < n_blocks).then_some(BlockId(s));

    let transitions = views
        .iter()
        .map(|_| (0..n).map(|s| vec![(s, 1.0)]).collect())
        .collect();
    let observation_probs = views
        .iter()
        .map(|&v| (0..n).map(|s| obs_row(model.p_seen_block(block_of(s), v, world))).collect())
        .collect();
    let rewards = views
        .iter()
        .map(|&v| (0..n).map(|s| opts.surrogate.reward(block_of(s), v)).collect())
        .collect();
    let start = Belief::uniform_prior(n_blocks, opts.allow_absent, opts.absent_mass)?;

    Ok(PomdpModel {
        discount: opts.discount,
        states,
        actions: views.iter().map(|&v| action_name(v)).collect(),
        observations: obs_names(),
        transitions,
        observation_probs,
        rewards,
        start: Some(start.probs().to_vec()),
        layout: Some(SearchLayout {
            variant: Variant::A,
            world: *world,
            n_hypotheses: n,
            has_absent: opts.allow_absent,
            views,
        }),
    })
}

/// Camera pose in the state: one copy of every object hypothesis per
/// camera pose, laid out camera-major, so state `cam * H + h`.
pub fn build_variant_b(
    world: &GridWorld,
    centers: &[BlockId],
    model: &ObservationModel,
    opts: &BuildOptions,
) -> Result<PomdpModel> {
    check_build(world, centers, model, opts)?;
    let views = world.all_views(centers, opts.zooms);
    let n_blocks = world.len();
    let hyp_names = hypothesis_names(world, opts.allow_absent);
    let h = hyp_names.len();
    let block_of = |i: usize| (i < n_blocks).then_some(BlockId(i));

    let initial = opts.initial_camera.unwrap_or(views[0]);
    let initial_cam = views.iter().position(|&v| v == initial).ok_or_else(|| {
        Error::InvalidModel(format!("initial camera {initial} is not an action view"))
    })?;

    let mut states = Vec::with_capacity(views.len() * h);
    for &v in &views {
        for name in &hyp_names {
            states.push(format!("{name}_{}", action_name(v)));
        }
    }
    let n = states.len();

    let transitions = (0..views.len())
        .map(|a| (0..n).map(|s| vec![(a * h + s % h, 1.0)]).collect())
        .collect();
    let observation_probs: Vec<Vec<Vec<f64>>> = {
        let per_state: Vec<Vec<f64>> = (0..n)
            .map(|s| obs_row(model.p_seen_block(block_of(s % h), views[s / h], world)))
            .collect();
        vec![per_state; views.len()]
    };
    let rewards = views
        .iter()
        .map(|&v| (0..n).map(|s| opts.surrogate.reward(block_of(s % h), v)).collect())
        .collect();

    let prior = Belief::uniform_prior(n_blocks, opts.allow_absent, opts.absent_mass)?;
    let mut start = vec![0.0; n];
    start[initial_cam * h..(initial_cam + 1) * h].copy_from_slice(prior.probs());

    Ok(PomdpModel {
        discount: opts.discount,
        states,
        actions: views.iter().map(|&v| action_name(v)).collect(),
        observations: obs_names(),
        transitions,
        observation_probs,
        rewards,
        start: Some(start),
        layout: Some(SearchLayout {
            variant: Variant::B,
            world: *world,
            n_hypotheses: h,
            has_absent: opts.allow_absent,
            views,
        }),
    })
}

pub fn build(
    variant: Variant,
    world: &GridWorld,
    centers: &[BlockId],
    model: &ObservationModel,
    opts: &BuildOptions,
) -> Result<PomdpModel> {
    match variant {
        Variant::A => build_variant_a(world, centers, model, opts),
        Variant::B => build_variant_b(world, centers, model, opts),
    }
}

/// The mode reward: probability of the most likely entry.
pub fn belief_reward(b: &Belief) -> f64 {
    b.probs().iter().copied().fold(0.0, f64::max)
}

impl PomdpModel {
    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn n_observations(&self) -> usize {
        self.observations.len()
    }

    pub fn view(&self, action: usize) -> Option<CameraView> {
        self.layout.as_ref().map(|l| l.views[action])
    }

    /// Ordering used to break value ties: higher zoom first, then lower
    /// center, then lower action index.
    pub fn tie_key(&self, action: usize) -> (std::cmp::Reverse<u8>, usize, usize) {
        match self.view(action) {
            Some(v) => (std::cmp::Reverse(v.zoom.level()), v.center.0, action),
            None => (std::cmp::Reverse(0), 0, action),
        }
    }

    /// True if `a` should win a tie against `b`.
    pub fn prefers(&self, a: usize, b: usize) -> bool {
        self.tie_key(a) < self.tie_key(b)
    }

    pub fn initial_belief(&self) -> Result<Belief> {
        let absent = self
            .layout
            .as_ref()
            .is_some_and(|l| l.variant == Variant::A && l.has_absent);
        match &self.start {
            Some(p) => Belief::from_probs(p.clone(), absent),
            None => {
                let n = self.n_states();
                Belief::from_probs(vec![1.0 / n as f64; n], false)
            }
        }
    }

    /// Shape and stochasticity checks.
    pub fn validate(&self) -> Result<()> {
        let (ns, na, no) = (self.n_states(), self.n_actions(), self.n_observations());
        if ns == 0 || na == 0 || no == 0 {
            return Err(Error::InvalidModel("states, actions and observations must be nonempty".into()));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(Error::InvalidModel(format!("discount {} outside (0, 1]", self.discount)));
        }
        if self.transitions.len() != na || self.observation_probs.len() != na || self.rewards.len() != na {
            return Err(Error::InvalidModel("tables must have one entry per action".into()));
        }
        for a in 0..na {
            if self.transitions[a].len() != ns
                || self.observation_probs[a].len() != ns
                || self.rewards[a].len() != ns
            {
                return Err(Error::InvalidModel(format!("action {} has wrong table size", self.actions[a])));
            }
            for (s, row) in self.transitions[a].iter().enumerate() {
                let mut total = 0.0;
                for &(t, p) in row {
                    if t >= ns || !p.is_finite() || p < 0.0 {
                        return Err(Error::InvalidModel(format!("bad transition entry T({a}, {s}, {t}) = {p}")));
                    }
                    total += p;
                }
                if (total - 1.0).abs() > ROW_SUM_TOL {
                    return Err(Error::InvalidModel(format!(
                        "T row ({}, {}) sums to {total}",
                        self.actions[a], self.states[s]
                    )));
                }
            }
            for (s, row) in self.observation_probs[a].iter().enumerate() {
                if row.len() != no || row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return Err(Error::InvalidModel(format!("bad observation row O({a}, {s})")));
                }
                let total: f64 = row.iter().sum();
                if (total - 1.0).abs() > ROW_SUM_TOL {
                    return Err(Error::InvalidModel(format!(
                        "O row ({}, {}) sums to {total}",
                        self.actions[a], self.states[s]
                    )));
                }
            }
            if self.rewards[a].iter().any(|r| !r.is_finite()) {
                return Err(Error::NonFinite(format!("rewards of action {}", self.actions[a])));
            }
        }
        if let Some(start) = &self.start {
            Belief::from_probs(start.clone(), false)?;
            if start.len() != ns {
                return Err(Error::InvalidModel("start belief has wrong length".into()));
            }
        }
        Ok(())
    }

    /// State distribution after taking `action`, before observing.
    pub fn predict(&self, b: &Belief, action: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_states()];
        for (s, &p) in b.probs().iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for &(t, q) in &self.transitions[action][s] {
                out[t] += q * p;
            }
        }
        out
    }

    /// Unnormalized posterior `O(o | s', a) * predicted(s')`.
    pub fn joint(&self, predicted: &[f64], action: usize, observation: usize) -> Vec<f64> {
        predicted
            .iter()
            .zip(&self.observation_probs[action])
            .map(|(&p, row)| row[observation] * p)
            .collect()
    }

    /// Posterior and predictive probability of `observation`.
    pub fn update(&self, b: &Belief, action: usize, observation: usize) -> Result<(Belief, f64)> {
        let predicted = self.predict(b, action);
        self.normalize(self.joint(&predicted, action, observation), b.has_absent())
    }

    fn normalize(&self, mut joint: Vec<f64>, absent: bool) -> Result<(Belief, f64)> {
        let z: f64 = joint.iter().sum();
        if z <= 0.0 || !z.is_finite() {
            return Err(Error::ImpossibleObservation);
        }
        for p in &mut joint {
            *p /= z;
        }
        Ok((Belief::from_probs(joint, absent)?, z))
    }

    /// Every observation branch with nonzero probability.
    pub fn branches(&self, b: &Belief, action: usize) -> Vec<Branch> {
        let predicted = self.predict(b, action);
        (0..self.n_observations())
            .filter_map(|o| {
                let joint = self.joint(&predicted, action, o);
                let (posterior, probability) = self.normalize(joint, b.has_absent()).ok()?;
                Some(Branch {
                    observation: o,
                    probability,
                    posterior,
                })
            })
            .collect()
    }

    /// Belief over object hypotheses, summing out the camera component.
    pub fn hypothesis_marginal(&self, b: &Belief) -> Result<Belief> {
        let layout = self
            .layout
            .as_ref()
            .ok_or_else(|| Error::InvalidModel("model has no search layout".into()))?;
        let h = layout.n_hypotheses;
        let mut out = vec![0.0; h];
        for (s, &p) in b.probs().iter().enumerate() {
            out[s % h] += p;
        }
        Belief::from_probs(out, layout.has_absent)
    }

    /// Equality of everything the interchange format carries.
    pub fn same_structure(&self, other: &PomdpModel) -> bool {
        self.discount == other.discount
            && self.states == other.states
            && self.actions == other.actions
            && self.observations == other.observations
            && self.transitions == other.transitions
            && self.observation_probs == other.observation_probs
            && self.rewards == other.rewards
            && self.start == other.start
    }
}

/// Named models shipped with the toolkit.
pub fn bundled_models() -> Result<Vec<(&'static str, PomdpModel)>> {
    let g2 = GridWorld::new(2, 2)?;
    let g3 = GridWorld::new(3, 3)?;
    let g4 = GridWorld::new(4, 4)?;
    let g8 = GridWorld::new(8, 8)?;
    let all = |w: &GridWorld| w.blocks().collect::<Vec<_>>();
    let k = |zooms| BuildOptions {
        zooms,
        ..BuildOptions::default()
    };
    let absent = |zooms| BuildOptions {
        zooms,
        allow_absent: true,
        absent_mass: 0.1,
        ..BuildOptions::default()
    };
    Ok(vec![
        (
            "grid2x2-k1-perfect-a",
            build_variant_a(&g2, &all(&g2), &ObservationModel::perfect(1)?, &k(1))?,
        ),
        (
            "grid2x2-k1-noisy-b",
            build_variant_b(&g2, &all(&g2), &ObservationModel::noisy_default(1)?, &k(1))?,
        ),
        (
            "grid3x3-k2-noisy-b-absent",
            build_variant_b(&g3, &all(&g3), &ObservationModel::noisy_default(2)?, &absent(2))?,
        ),
        (
            "grid4x4-k2-noisy-a",
            build_variant_a(&g4, &all(&g4), &ObservationModel::noisy_default(2)?, &k(2))?,
        ),
        (
            "grid8x8-k3-checker-noisy-absent-a",
            build_variant_a(
                &g8,
                &g8.reduced_centers(&ObjectSpec::domino()),
                &ObservationModel::noisy_default(3)?,
                &absent(3),
            )?,
        ),
    ])
}
