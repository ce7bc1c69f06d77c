//! Beliefs over object-location hypotheses and exact Bayes filtering.
//!
//! A belief is a probability vector. Over a search grid entry `i` is the
//! hypothesis "the object is at block `i`"; when the belief tracks absence,
//! the final entry is "the object is not present". The same type carries
//! beliefs over arbitrary model states for the planners.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observation::{outcome_probability, Observation, ObservationModel};
use crate::world::{BlockId, CameraView, GridWorld};

pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    Block(BlockId),
    Absent,
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hypothesis::Block(b) => write!(f, "{b}"),
            Hypothesis::Absent => write!(f, "B_absent"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    probs: Vec<f64>,
    absent_last: bool,
}

impl Belief {
    /// Wraps a probability vector after checking it is a distribution.
    pub fn from_probs(probs: Vec<f64>, absent_last: bool) -> Result<Belief> {
        if probs.is_empty() {
            return Err(Error::EmptyHypotheses);
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidMass("entries must be finite and nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidMass(format!("entries sum to {total}")));
        }
        Ok(Belief { probs, absent_last })
    }

    /// Uniform over `n_blocks` blocks, with `absent_mass` reserved for the
    /// absent hypothesis when `with_absent` is set.
    pub fn uniform_prior(n_blocks: usize, with_absent: bool, absent_mass: f64) -> Result<Belief> {
        if !(0.0..1.0).contains(&absent_mass) {
            return Err(Error::InvalidMass(format!(
                "absent mass must be in [0, 1), got {absent_mass}"
            )));
        }
        if absent_mass > 0.0 && !with_absent {
            return Err(Error::InvalidMass(
                "absent mass given but the absent hypothesis is disabled".into(),
            ));
        }
        if n_blocks == 0 {
            return Err(Error::EmptyHypotheses);
        }
        let each = (1.0 - absent_mass) / n_blocks as f64;
        let mut probs = vec![each; n_blocks];
        if with_absent {
            probs.push(absent_mass);
        }
        Ok(Belief {
            probs,
            absent_last: with_absent,
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn has_absent(&self) -> bool {
        self.absent_last
    }

    pub fn n_blocks(&self) -> usize {
        self.probs.len() - usize::from(self.absent_last)
    }

    pub fn hypothesis(&self, index: usize) -> Hypothesis {
        if self.absent_last && index + 1 == self.probs.len() {
            Hypothesis::Absent
        } else {
            Hypothesis::Block(BlockId(index))
        }
    }

    pub fn get(&self, h: Hypothesis) -> f64 {
        match h {
            Hypothesis::Block(b) if b.0 < self.n_blocks() => self.probs[b.0],
            Hypothesis::Absent if self.absent_last => self.probs[self.probs.len() - 1],
            _ => 0.0,
        }
    }

    /// Posterior under per-entry likelihoods. Returns the posterior and the
    /// normalizer (the predictive probability of the evidence).
    pub fn reweighted(&self, likelihood: impl Fn(usize) -> f64) -> Result<(Belief, f64)> {
        let mut probs: Vec<f64> = self
            .probs
            .iter()
            .enumerate()
            .map(|(i, &p)| likelihood(i) * p)
            .collect();
        let z: f64 = probs.iter().sum();
        if z <= 0.0 || !z.is_finite() {
            return Err(Error::ImpossibleObservation);
        }
        for p in &mut probs {
            *p /= z;
        }
        Ok((
            Belief {
                probs,
                absent_last: self.absent_last,
            },
            z,
        ))
    }

    /// Bayes posterior after observing `o` from `view`. The object does not
    /// move between snapshots, so no prediction step is needed.
    pub fn bayes_update(
        &self,
        view: CameraView,
        o: Observation,
        model: &ObservationModel,
        world: &GridWorld,
    ) -> Result<Belief> {
        self.check_grid(world)?;
        model.check_view(view, world)?;
        let n_blocks = self.n_blocks();
        self.reweighted(|i| {
            let block = (i < n_blocks).then_some(BlockId(i));
            outcome_probability(o, model.p_seen_block(block, view, world))
        })
        .map(|(b, _)| b)
    }

    /// Predictive probability of `o` from `view`.
    pub fn observation_probability(
        &self,
        view: CameraView,
        o: Observation,
        model: &ObservationModel,
        world: &GridWorld,
    ) -> f64 {
        let n_blocks = self.n_blocks();
        self.probs
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let block = (i < n_blocks).then_some(BlockId(i));
                p * outcome_probability(o, model.p_seen_block(block, view, world))
            })
            .sum()
    }

    fn check_grid(&self, world: &GridWorld) -> Result<()> {
        if self.n_blocks() != world.len() {
            return Err(Error::InvalidMass(format!(
                "belief has {} block entries, grid has {}",
                self.n_blocks(),
                world.len()
            )));
        }
        Ok(())
    }

    /// Most probable entry; ties go to the lowest index, so absence loses
    /// every tie.
    pub fn mode_index(&self) -> (usize, f64) {
        let mut best = (0, self.probs[0]);
        for (i, &p) in self.probs.iter().enumerate().skip(1) {
            if p > best.1 {
                best = (i, p);
            }
        }
        best
    }

    pub fn mode(&self) -> (Hypothesis, f64) {
        let (i, p) = self.mode_index();
        (self.hypothesis(i), p)
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self
            .probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.ln())
            .sum::<f64>()
    }

    pub fn l1_distance(&self, other: &Belief) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Zoom;
    use proptest::prelude::*;

    fn setup() -> (GridWorld, ObservationModel) {
        (GridWorld::new(4, 4).unwrap(), ObservationModel::perfect(3).unwrap())
    }

    #[test]
    fn uniform_priors() {
        let b = Belief::uniform_prior(16, false, 0.0).unwrap();
        assert!(b.probs().iter().all(|&p| p == 1.0 / 16.0));
        let b = Belief::uniform_prior(16, true, 0.1).unwrap();
        assert_eq!(b.get(Hypothesis::Absent), 0.1);
        assert!((b.get(Hypothesis::Block(BlockId(3))) - 0.9 / 16.0).abs() < 1e-16);
        let b = Belief::uniform_prior(1, false, 0.0).unwrap();
        assert_eq!(b.probs(), &[1.0]);
        assert!(Belief::uniform_prior(0, false, 0.0).is_err());
        assert!(Belief::uniform_prior(4, false, 0.2).is_err());
        assert!(Belief::uniform_prior(4, true, 1.0).is_err());
    }

    #[test]
    fn perfect_update_interior_window() {
        let (w, m) = setup();
        let b = Belief::uniform_prior(16, false, 0.0).unwrap();
        let view = CameraView::new(w.block_at(1, 1).unwrap(), Zoom(2));
        let window = w.view_footprint(view).unwrap();
        assert_eq!(window.len(), 9);

        let miss = b.bayes_update(view, Observation::NotSeen, &m, &w).unwrap();
        let hit = b.bayes_update(view, Observation::Seen, &m, &w).unwrap();
        for blk in w.blocks() {
            let inside = window.contains(&blk);
            let p_miss = miss.get(Hypothesis::Block(blk));
            let p_hit = hit.get(Hypothesis::Block(blk));
            if inside {
                assert_eq!(p_miss, 0.0);
                assert!((p_hit - 1.0 / 9.0).abs() < 1e-15);
            } else {
                assert!((p_miss - 1.0 / 7.0).abs() < 1e-15);
                assert_eq!(p_hit, 0.0);
            }
        }
        assert_eq!(hit.mode(), (Hypothesis::Block(window[0]), hit.probs()[window[0].0]));
        assert!((hit.mode().1 - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn impossible_observation() {
        let (w, m) = setup();
        let mut probs = vec![0.0; 16];
        probs[5] = 1.0;
        let b = Belief::from_probs(probs, false).unwrap();
        let view = CameraView::new(BlockId(5), Zoom(2));
        assert!(matches!(
            b.bayes_update(view, Observation::NotSeen, &m, &w),
            Err(Error::ImpossibleObservation)
        ));
    }

    #[test]
    fn mode_tie_breaks() {
        let b = Belief::uniform_prior(16, false, 0.0).unwrap();
        assert_eq!(b.mode(), (Hypothesis::Block(BlockId(0)), 1.0 / 16.0));
        let mut probs = vec![0.0; 16];
        probs[6] = 1.0;
        let b = Belief::from_probs(probs, false).unwrap();
        assert_eq!(b.mode(), (Hypothesis::Block(BlockId(6)), 1.0));
        let b = Belief::from_probs(vec![0.5, 0.0, 0.5], true).unwrap();
        assert_eq!(b.mode().0, Hypothesis::Block(BlockId(0)));
    }

    #[test]
    fn entropy_values() {
        let b = Belief::uniform_prior(16, false, 0.0).unwrap();
        assert!((b.entropy() - 16f64.ln()).abs() < 1e-12);
        let b = Belief::from_probs(vec![0.0, 1.0], false).unwrap();
        assert_eq!(b.entropy(), 0.0);
        let b = Belief::from_probs(vec![0.5, 0.5], false).unwrap();
        assert!((b.entropy() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn rejects_mismatched_grid() {
        let (w, m) = setup();
        let b = Belief::uniform_prior(9, false, 0.0).unwrap();
        assert!(b
            .bayes_update(CameraView::new(BlockId(0), Zoom(1)), Observation::Seen, &m, &w)
            .is_err());
    }

    fn arb_belief(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.01f64..1.0, n).prop_map(|v| {
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect()
        })
    }

    proptest! {
        #[test]
        fn mode_is_permutation_equivariant(probs in arb_belief(9), shift in 0usize..9) {
            let n = probs.len();
            let rotated: Vec<f64> = (0..n).map(|i| probs[(i + shift) % n]).collect();
            let a = Belief::from_probs(probs.clone(), false).unwrap().mode_index();
            let b = Belief::from_probs(rotated, false).unwrap().mode_index();
            prop_assert_eq!(a.1, b.1);
            // Index j in the rotated vector holds original entry j + shift.
            prop_assert_eq!(probs[(b.0 + shift) % n], a.1);
        }

        #[test]
        fn update_keeps_distribution(probs in arb_belief(17), center in 0usize..16, zoom in 1u8..4, seen: bool) {
            let w = GridWorld::new(4, 4).unwrap();
            let m = ObservationModel::noisy_default(3).unwrap();
            let b = Belief::from_probs(probs, true).unwrap();
            let o = if seen { Observation::Seen } else { Observation::NotSeen };
            let post = b.bayes_update(CameraView::new(BlockId(center), Zoom(zoom)), o, &m, &w).unwrap();
            let total: f64 = post.probs().iter().sum();
            prop_assert!((total - 1.0).abs() <= NORMALIZATION_TOL);
            prop_assert!(post.probs().iter().all(|&p| p >= 0.0));
        }
    }
}
