//! Two-outcome detection model: the chance that a snapshot reports the
//! object, keyed by zoom and by the distance band between the view center
//! and the nearest occupied block.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::world::{BandThresholds, BlockId, CameraView, DistanceBand, GridWorld, ObjectPose, ObjectSpec, Zoom};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observation {
    /// The view contains part of the object.
    Seen,
    /// The view contains no part of the object.
    NotSeen,
}

impl Observation {
    pub const ALL: [Observation; 2] = [Observation::Seen, Observation::NotSeen];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Observation::Seen => "seen",
            Observation::NotSeen => "unseen",
        }
    }
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Detection probabilities, one row of six bands per zoom level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationModel {
    pub zooms: u8,
    #[serde(default)]
    pub thresholds: BandThresholds,
    /// `p1[k - 1][band]` is P(seen) for zoom `k`.
    pub p1: Vec<[f64; 6]>,
    /// P(seen) when no object is present.
    pub p1_absent: f64,
}

/// Per-zoom index of the farthest band that still lies inside the square
/// window, for the default thresholds.
const INSIDE_BAND: [DistanceBand; 3] = [DistanceBand::D0, DistanceBand::D1, DistanceBand::D3];

/// Shipped noisy table. Rows are zoom 1..3, columns d0..d5. The block
/// under the view center is detected equally well at every zoom; wider
/// views keep detecting farther out, close-ups fall off immediately.
const NOISY_DEFAULT: [[f64; 6]; 3] = [
    [0.95, 0.05, 0.03, 0.02, 0.02, 0.01],
    [0.95, 0.90, 0.08, 0.03, 0.02, 0.01],
    [0.95, 0.90, 0.85, 0.80, 0.05, 0.01],
];
const NOISY_ABSENT: f64 = 0.01;

impl ObservationModel {
    /// Ideal sensor: sees the object exactly when an occupied block is inside
    /// the footprint. Only defined for up to three zooms, where the window
    /// edges line up with band edges.
    pub fn perfect(zooms: u8) -> Result<ObservationModel> {
        check_preset_zooms(zooms, "perfect")?;
        let p1 = (0..usize::from(zooms))
            .map(|k| {
                let mut row = [0.0; 6];
                for band in DistanceBand::ALL {
                    if band <= INSIDE_BAND[k] {
                        row[band.index()] = 1.0;
                    }
                }
                row
            })
            .collect();
        Ok(ObservationModel {
            zooms,
            thresholds: BandThresholds::default(),
            p1,
            p1_absent: 0.0,
        })
    }

    pub fn noisy_default(zooms: u8) -> Result<ObservationModel> {
        check_preset_zooms(zooms, "noisy-default")?;
        Ok(ObservationModel {
            zooms,
            thresholds: BandThresholds::default(),
            p1: NOISY_DEFAULT[..usize::from(zooms)].to_vec(),
            p1_absent: NOISY_ABSENT,
        })
    }

    pub fn preset(name: &str, zooms: u8) -> Result<ObservationModel> {
        match name {
            "perfect" => ObservationModel::perfect(zooms),
            "noisy-default" => ObservationModel::noisy_default(zooms),
            other => Err(Error::Config(format!(
                "unknown sensor preset `{other}`, expected one of `perfect`, `noisy-default`"
            ))),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<ObservationModel> {
        let model: ObservationModel = toml::from_str(text).map_err(|e| Error::Parse {
            line: toml_line(text, e.span()),
            message: e.message().to_string(),
        })?;
        model.validated()
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("observation model serializes")
    }

    /// Returns the model if it passes [`validate_model`].
    pub fn validated(self) -> Result<ObservationModel> {
        match validate_model(&self) {
            Ok(()) => Ok(self),
            Err(v) => Err(Error::InvalidObservationModel(v)),
        }
    }

    fn entry(&self, zoom: Zoom, band: DistanceBand) -> f64 {
        self.p1[usize::from(zoom.level()) - 1][band.index()]
    }

    /// P(seen) for an object occupying `cells` (empty means absent).
    /// Multi-cell objects are scored by their block nearest the view center.
    pub fn p_seen(&self, cells: &[BlockId], view: CameraView, world: &GridWorld) -> f64 {
        match cells.iter().map(|&c| world.dist_sq(c, view.center)).min() {
            None => self.p1_absent,
            Some(d2) => self.entry(view.zoom, self.thresholds.classify((d2 as f64).sqrt())),
        }
    }

    /// `p_seen` for a single-block hypothesis, `None` meaning absent.
    pub fn p_seen_block(&self, block: Option<BlockId>, view: CameraView, world: &GridWorld) -> f64 {
        match block {
            None => self.p1_absent,
            Some(b) => self.entry(view.zoom, self.thresholds.classify(world.dist(b, view.center))),
        }
    }

    pub fn check_view(&self, view: CameraView, world: &GridWorld) -> Result<()> {
        if !world.contains(view.center) {
            return Err(Error::InvalidView(format!(
                "center {} outside {}x{} grid",
                view.center,
                world.rows(),
                world.cols()
            )));
        }
        if view.zoom.level() == 0 || view.zoom.level() > self.zooms {
            return Err(Error::InvalidView(format!(
                "zoom {} outside 1..={}",
                view.zoom.level(),
                self.zooms
            )));
        }
        Ok(())
    }

    pub fn likelihood(
        &self,
        o: Observation,
        pose: &ObjectPose,
        spec: &ObjectSpec,
        view: CameraView,
        world: &GridWorld,
    ) -> Result<f64> {
        self.check_view(view, world)?;
        let cells = pose
            .cells(world, spec)
            .ok_or_else(|| Error::InvalidObject(format!("pose {pose} does not fit the grid")))?;
        Ok(outcome_probability(o, self.p_seen(&cells, view, world)))
    }

    pub fn sample_observation<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        pose: &ObjectPose,
        spec: &ObjectSpec,
        view: CameraView,
        world: &GridWorld,
    ) -> Result<Observation> {
        let p = self.likelihood(Observation::Seen, pose, spec, view, world)?;
        Ok(draw(rng, p))
    }
}

pub(crate) fn draw<R: Rng + ?Sized>(rng: &mut R, p_seen: f64) -> Observation {
    if rng.gen::<f64>() < p_seen {
        Observation::Seen
    } else {
        Observation::NotSeen
    }
}

pub fn outcome_probability(o: Observation, p_seen: f64) -> f64 {
    match o {
        Observation::Seen => p_seen,
        Observation::NotSeen => 1.0 - p_seen,
    }
}

fn check_preset_zooms(zooms: u8, name: &str) -> Result<()> {
    if zooms == 0 || zooms > 3 {
        return Err(Error::Config(format!(
            "preset `{name}` is defined for 1 to 3 zoom levels, got {zooms}"
        )));
    }
    Ok(())
}

pub(crate) fn toml_line(text: &str, span: Option<std::ops::Range<usize>>) -> usize {
    span.map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    RowCount { expected: u8, found: usize },
    OutOfRange { zoom: u8, band: DistanceBand, value: f64 },
    Increasing { zoom: u8, band: DistanceBand, value: f64, previous: f64 },
    AbsentOutOfRange { value: f64 },
    AbsentAboveFloor { zoom: u8, band: DistanceBand, value: f64, absent: f64 },
    Thresholds,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RowCount { expected, found } => {
                write!(f, "expected {expected} zoom rows, found {found}")
            }
            Violation::OutOfRange { zoom, band, value } => {
                write!(f, "(Z{zoom}, {band}) = {value} is outside [0, 1]")
            }
            Violation::Increasing {
                zoom,
                band,
                value,
                previous,
            } => write!(
                f,
                "(Z{zoom}, {band}) = {value} exceeds the nearer band's {previous}"
            ),
            Violation::AbsentOutOfRange { value } => {
                write!(f, "p1_absent = {value} is outside [0, 1]")
            }
            Violation::AbsentAboveFloor {
                zoom,
                band,
                value,
                absent,
            } => write!(f, "p1_absent = {absent} exceeds (Z{zoom}, {band}) = {value}"),
            Violation::Thresholds => write!(f, "band thresholds must be positive and increasing"),
        }
    }
}

fn in_unit(p: f64) -> bool {
    (0.0..=1.0).contains(&p)
}

/// Checks range, distance monotonicity and the absent floor, collecting
/// every violation.
pub fn validate_model(model: &ObservationModel) -> std::result::Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    if model.p1.len() != usize::from(model.zooms) || model.zooms == 0 {
        out.push(Violation::RowCount {
            expected: model.zooms,
            found: model.p1.len(),
        });
    }
    if !model.thresholds.is_increasing() {
        out.push(Violation::Thresholds);
    }
    let absent_ok = in_unit(model.p1_absent);
    if !absent_ok {
        out.push(Violation::AbsentOutOfRange {
            value: model.p1_absent,
        });
    }
    for (k, row) in model.p1.iter().enumerate() {
        let zoom = (k + 1) as u8;
        for band in DistanceBand::ALL {
            let value = row[band.index()];
            if !in_unit(value) {
                out.push(Violation::OutOfRange { zoom, band, value });
                continue;
            }
            if band.index() > 0 {
                let previous = row[band.index() - 1];
                if in_unit(previous) && value > previous {
                    out.push(Violation::Increasing {
                        zoom,
                        band,
                        value,
                        previous,
                    });
                }
            }
            if absent_ok && model.p1_absent > value {
                out.push(Violation::AbsentAboveFloor {
                    zoom,
                    band,
                    value,
                    absent: model.p1_absent,
                });
            }
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}
