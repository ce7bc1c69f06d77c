//! Lattice geometry: block indexing, camera footprints, distance bands,
//! observation-center reduction and object pose enumeration.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A lattice block. Stored as a zero-based row-major index; displayed with
/// the one-based number used in block diagrams (`B1` is the top-left block).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BlockId(pub usize);

impl BlockId {
    /// Builds a block id from its one-based number.
    pub fn from_number(number: usize) -> Option<BlockId> {
        number.checked_sub(1).map(BlockId)
    }

    pub fn number(self) -> usize {
        self.0 + 1
    }

    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "B{}", self.number())
    }
}

/// Camera zoom level, one-based. Zoom `k` sees a `(2k-1)x(2k-1)` window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Zoom(pub u8);

impl Zoom {
    pub fn new(level: u8) -> Result<Zoom> {
        if level == 0 {
            return Err(Error::InvalidView("zoom levels start at 1".into()));
        }
        Ok(Zoom(level))
    }

    pub fn level(self) -> u8 {
        self.0
    }

    pub fn half_width(self) -> usize {
        usize::from(self.0) - 1
    }

    /// All zooms `1..=count`.
    pub fn all(count: u8) -> impl Iterator<Item = Zoom> {
        (1..=count).map(Zoom)
    }
}

impl fmt::Display for Zoom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Z{}", self.0)
    }
}

/// An observation point: the block the camera is centered on and its zoom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CameraView {
    pub center: BlockId,
    pub zoom: Zoom,
}

impl CameraView {
    pub fn new(center: BlockId, zoom: Zoom) -> CameraView {
        CameraView { center, zoom }
    }
}

impl fmt::Display for CameraView {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "snapshot[C{}, {}]", self.center.number(), self.zoom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DistanceBand {
    D0,
    D1,
    D2,
    D3,
    D4,
    D5,
}

impl DistanceBand {
    pub const ALL: [DistanceBand; 6] = [
        DistanceBand::D0,
        DistanceBand::D1,
        DistanceBand::D2,
        DistanceBand::D3,
        DistanceBand::D4,
        DistanceBand::D5,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for DistanceBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d{}", self.index())
    }
}

/// Upper-inclusive distance limits for bands `d1..d4`. Anything beyond the
/// last limit is `d5`; a distance of exactly zero is `d0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BandThresholds(pub [f64; 4]);

impl Default for BandThresholds {
    fn default() -> Self {
        BandThresholds([
            2f64.sqrt(),
            2.0,
            2.0 * 2f64.sqrt(),
            10f64.sqrt(),
        ])
    }
}

const BAND_EPS: f64 = 1e-9;

impl BandThresholds {
    pub fn classify(&self, distance: f64) -> DistanceBand {
        if distance <= BAND_EPS {
            return DistanceBand::D0;
        }
        self.0
            .iter()
            .position(|&limit| distance <= limit + BAND_EPS)
            .map(|i| DistanceBand::ALL[i + 1])
            .unwrap_or(DistanceBand::D5)
    }

    pub fn is_increasing(&self) -> bool {
        self.0[0] > 0.0 && self.0.windows(2).all(|w| w[0] < w[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridWorld {
    rows: usize,
    cols: usize,
    /// Physical side length of one block. Geometry is computed in block
    /// units; this is carried as metadata only.
    block_side: f64,
}

impl GridWorld {
    pub fn new(rows: usize, cols: usize) -> Result<GridWorld> {
        GridWorld::with_block_side(rows, cols, 1.0)
    }

    pub fn with_block_side(rows: usize, cols: usize, block_side: f64) -> Result<GridWorld> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidWorld(format!(
                "dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if !(block_side.is_finite() && block_side > 0.0) {
            return Err(Error::InvalidWorld(format!(
                "block side must be positive, got {block_side}"
            )));
        }
        Ok(GridWorld {
            rows,
            cols,
            block_side,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn block_side(&self) -> f64 {
        self.block_side
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn blocks(&self) -> impl Iterator<Item = BlockId> {
        (0..self.len()).map(BlockId)
    }

    pub fn contains(&self, block: BlockId) -> bool {
        block.0 < self.len()
    }

    pub fn block_at(&self, row: usize, col: usize) -> Option<BlockId> {
        (row < self.rows && col < self.cols).then(|| BlockId(row * self.cols + col))
    }

    /// `(row, col)` of a block, zero-based.
    pub fn position(&self, block: BlockId) -> (usize, usize) {
        (block.0 / self.cols, block.0 % self.cols)
    }

    fn checked_position(&self, block: BlockId) -> Result<(usize, usize)> {
        if !self.contains(block) {
            return Err(Error::InvalidView(format!(
                "block {block} outside {}x{} grid",
                self.rows, self.cols
            )));
        }
        Ok(self.position(block))
    }

    /// Blocks visible from `view`: the square window around the center,
    /// clipped to the grid, in ascending order.
    pub fn view_footprint(&self, view: CameraView) -> Result<Vec<BlockId>> {
        let (row, col) = self.checked_position(view.center)?;
        let w = view.zoom.half_width();
        let rows = row.saturating_sub(w)..=(row + w).min(self.rows - 1);
        let cols = col.saturating_sub(w)..=(col + w).min(self.cols - 1);
        let mut out = Vec::with_capacity(rows.clone().count() * cols.clone().count());
        for r in rows {
            for c in cols.clone() {
                out.push(BlockId(r * self.cols + c));
            }
        }
        Ok(out)
    }

    /// Whether `block` lies inside the footprint of `view`.
    pub fn sees(&self, view: CameraView, block: BlockId) -> bool {
        let (vr, vc) = self.position(view.center);
        let (br, bc) = self.position(block);
        let w = view.zoom.half_width();
        vr.abs_diff(br) <= w && vc.abs_diff(bc) <= w
    }

    /// Squared center-to-center distance in block units.
    pub fn dist_sq(&self, i: BlockId, j: BlockId) -> usize {
        let (ir, ic) = self.position(i);
        let (jr, jc) = self.position(j);
        let dr = ir.abs_diff(jr);
        let dc = ic.abs_diff(jc);
        dr * dr + dc * dc
    }

    pub fn dist(&self, i: BlockId, j: BlockId) -> f64 {
        (self.dist_sq(i, j) as f64).sqrt()
    }

    pub fn distance_band(&self, i: BlockId, j: BlockId) -> DistanceBand {
        BandThresholds::default().classify(self.dist(i, j))
    }

    /// Number of other centers whose band from `i` equals `band`.
    pub fn num_at_band(&self, centers: &[BlockId], i: BlockId, band: DistanceBand) -> usize {
        centers
            .iter()
            .filter(|&&j| j != i && self.distance_band(i, j) == band)
            .count()
    }

    /// Observation centers worth visiting. Elongated objects (aspect ratio
    /// at least 2) always cover two adjacent blocks, so one color of the
    /// checkerboard suffices; the color containing block 1 is kept.
    pub fn reduced_centers(&self, spec: &ObjectSpec) -> Vec<BlockId> {
        if spec.aspect_ratio >= 2.0 {
            self.blocks()
                .filter(|&b| {
                    let (r, c) = self.position(b);
                    (r + c) % 2 == 0
                })
                .collect()
        } else {
            self.blocks().collect()
        }
    }

    pub fn all_views(&self, centers: &[BlockId], zooms: u8) -> Vec<CameraView> {
        centers
            .iter()
            .flat_map(|&c| Zoom::all(zooms).map(move |z| CameraView::new(c, z)))
            .collect()
    }

    /// Every in-bounds placement of the object (anchor ascending, then
    /// orientation), followed by `Absent` when requested.
    pub fn enumerate_poses(&self, spec: &ObjectSpec, allow_absent: bool) -> Result<Vec<ObjectPose>> {
        let mut poses = Vec::new();
        for anchor in self.blocks() {
            for orientation in 0..spec.orientations.len() {
                let pose = ObjectPose::Placed {
                    anchor,
                    orientation,
                };
                if pose.cells(self, spec).is_some() {
                    poses.push(pose);
                }
            }
        }
        if allow_absent {
            poses.push(ObjectPose::Absent);
        }
        if poses.is_empty() {
            return Err(Error::NoHypothesis);
        }
        Ok(poses)
    }
}

/// Cell offsets `(d_row, d_col)` relative to the pose anchor.
pub type Footprint = Vec<(i32, i32)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub orientations: Vec<Footprint>,
    pub aspect_ratio: f64,
}

impl ObjectSpec {
    pub fn new(orientations: Vec<Footprint>, aspect_ratio: f64) -> Result<ObjectSpec> {
        let spec = ObjectSpec {
            orientations,
            aspect_ratio,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// One block, no orientation.
    pub fn single_cell() -> ObjectSpec {
        ObjectSpec {
            orientations: vec![vec![(0, 0)]],
            aspect_ratio: 1.0,
        }
    }

    /// A 1x2 object lying horizontally or vertically.
    pub fn domino() -> ObjectSpec {
        ObjectSpec {
            orientations: vec![vec![(0, 0), (0, 1)], vec![(0, 0), (1, 0)]],
            aspect_ratio: 2.0,
        }
    }

    /// A 1x3 bar, horizontal or vertical.
    pub fn bar3() -> ObjectSpec {
        ObjectSpec {
            orientations: vec![vec![(0, 0), (0, 1), (0, 2)], vec![(0, 0), (1, 0), (2, 0)]],
            aspect_ratio: 3.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.aspect_ratio.is_finite() && self.aspect_ratio > 0.0) {
            return Err(Error::InvalidObject(format!(
                "aspect ratio must be positive, got {}",
                self.aspect_ratio
            )));
        }
        if self.orientations.is_empty() {
            return Err(Error::InvalidObject("no orientations".into()));
        }
        for (i, fp) in self.orientations.iter().enumerate() {
            let cells: BTreeSet<_> = fp.iter().copied().collect();
            if cells.is_empty() || cells.len() > 3 {
                return Err(Error::InvalidObject(format!(
                    "orientation {i} has {} cells, expected 1 to 3",
                    cells.len()
                )));
            }
            if cells.len() != fp.len() {
                return Err(Error::InvalidObject(format!(
                    "orientation {i} repeats a cell"
                )));
            }
            if !edge_connected(&cells) {
                return Err(Error::InvalidObject(format!(
                    "orientation {i} is not edge-connected"
                )));
            }
        }
        Ok(())
    }
}

fn edge_connected(cells: &BTreeSet<(i32, i32)>) -> bool {
    let Some(&start) = cells.iter().next() else {
        return false;
    };
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some((r, c)) = stack.pop() {
        for next in [(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)] {
            if cells.contains(&next) && seen.insert(next) {
                stack.push(next);
            }
        }
    }
    seen.len() == cells.len()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectPose {
    Absent,
    Placed { anchor: BlockId, orientation: usize },
}

impl ObjectPose {
    /// Occupied blocks in ascending order, or `None` if the pose leaves the
    /// grid or names an unknown orientation. `Absent` occupies nothing.
    pub fn cells(&self, world: &GridWorld, spec: &ObjectSpec) -> Option<Vec<BlockId>> {
        match *self {
            ObjectPose::Absent => Some(Vec::new()),
            ObjectPose::Placed {
                anchor,
                orientation,
            } => {
                if !world.contains(anchor) {
                    return None;
                }
                let fp = spec.orientations.get(orientation)?;
                let (r, c) = world.position(anchor);
                let mut out = fp
                    .iter()
                    .map(|&(dr, dc)| {
                        let rr = usize::try_from(r as i64 + i64::from(dr)).ok()?;
                        let cc = usize::try_from(c as i64 + i64::from(dc)).ok()?;
                        world.block_at(rr, cc)
                    })
                    .collect::<Option<Vec<_>>>()?;
                out.sort();
                Some(out)
            }
        }
    }
}

impl fmt::Display for ObjectPose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectPose::Absent => write!(f, "absent"),
            ObjectPose::Placed {
                anchor,
                orientation,
            } => write!(f, "{anchor}/o{orientation}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(r: usize, c: usize) -> GridWorld {
        GridWorld::new(r, c).unwrap()
    }

    #[test]
    fn footprint_zoom2_interior_is_3x3() {
        let w = grid(8, 8);
        let center = w.block_at(3, 3).unwrap();
        let fp = w.view_footprint(CameraView::new(center, Zoom(2))).unwrap();
        assert_eq!(fp.len(), 9);
        for b in fp {
            let (r, c) = w.position(b);
            assert!((2..=4).contains(&r) && (2..=4).contains(&c));
        }
    }

    #[test]
    fn footprint_zoom1_is_center() {
        let w = grid(8, 8);
        for b in w.blocks() {
            assert_eq!(w.view_footprint(CameraView::new(b, Zoom(1))).unwrap(), vec![b]);
        }
    }

    #[test]
    fn footprint_zoom3_clips_at_corner() {
        let w = grid(8, 8);
        let fp = w
            .view_footprint(CameraView::new(BlockId(0), Zoom(3)))
            .unwrap();
        let expected: Vec<_> = (0..3)
            .flat_map(|r| (0..3).map(move |c| (r, c)))
            .map(|(r, c)| w.block_at(r, c).unwrap())
            .collect();
        assert_eq!(fp, expected);
    }

    #[test]
    fn footprint_rejects_center_outside() {
        let w = grid(2, 2);
        assert!(matches!(
            w.view_footprint(CameraView::new(BlockId(4), Zoom(1))),
            Err(Error::InvalidView(_))
        ));
    }

    #[test]
    fn distances_in_lattice_units() {
        let w = grid(8, 8);
        let at = |r, c| w.block_at(r, c).unwrap();
        let o = at(3, 3);
        assert_eq!(w.dist(o, o), 0.0);
        assert_eq!(w.dist(o, at(3, 4)), 1.0);
        assert_eq!(w.dist(o, at(4, 4)), 2f64.sqrt());
        assert_eq!(w.dist(o, at(5, 3)), 2.0);
        assert_eq!(w.dist(o, at(5, 5)), 2.0 * 2f64.sqrt());
        assert_eq!(w.dist(o, at(6, 4)), 10f64.sqrt());
    }

    #[test]
    fn band_boundaries() {
        let w = grid(8, 8);
        let at = |r, c| w.block_at(r, c).unwrap();
        let o = at(3, 3);
        assert_eq!(w.distance_band(o, o), DistanceBand::D0);
        assert_eq!(w.distance_band(o, at(3, 4)), DistanceBand::D1);
        assert_eq!(w.distance_band(o, at(4, 4)), DistanceBand::D1);
        assert_eq!(w.distance_band(o, at(5, 3)), DistanceBand::D2);
        assert_eq!(w.distance_band(o, at(4, 5)), DistanceBand::D3);
        assert_eq!(w.distance_band(o, at(5, 5)), DistanceBand::D3);
        assert_eq!(w.distance_band(o, at(6, 3)), DistanceBand::D4);
        assert_eq!(w.distance_band(o, at(6, 4)), DistanceBand::D4);
        assert_eq!(w.distance_band(o, at(7, 3)), DistanceBand::D5);
    }

    #[test]
    fn checkerboard_band_counts() {
        let w = grid(8, 8);
        let centers = w.reduced_centers(&ObjectSpec::domino());
        let interior = w.block_at(4, 4).unwrap();
        let corner = BlockId(0);
        assert!(centers.contains(&interior) && centers.contains(&corner));
        assert_eq!(w.num_at_band(&centers, interior, DistanceBand::D1), 4);
        assert_eq!(w.num_at_band(&centers, interior, DistanceBand::D4), 8);
        // (1,1) is the only sublattice neighbor of the corner at sqrt(2).
        assert_eq!(w.num_at_band(&centers, corner, DistanceBand::D1), 1);
    }

    #[test]
    fn reduced_centers_cases() {
        let w = grid(8, 8);
        let centers = w.reduced_centers(&ObjectSpec::domino());
        assert_eq!(centers.len(), 32);
        assert_eq!(centers[0], BlockId(0));
        assert!(centers.iter().all(|&b| {
            let (r, c) = w.position(b);
            (r + c) % 2 == 0
        }));
        assert_eq!(w.reduced_centers(&ObjectSpec::single_cell()).len(), 64);
        assert_eq!(grid(1, 1).reduced_centers(&ObjectSpec::bar3()), vec![BlockId(0)]);
        assert_eq!(grid(3, 3).reduced_centers(&ObjectSpec::domino()).len(), 5);
    }

    #[test]
    fn pose_enumeration_counts() {
        let w = grid(2, 2);
        let poses = w.enumerate_poses(&ObjectSpec::single_cell(), true).unwrap();
        assert_eq!(poses.len(), 5);
        assert_eq!(poses.last(), Some(&ObjectPose::Absent));
        let dominoes = w.enumerate_poses(&ObjectSpec::domino(), false).unwrap();
        assert_eq!(dominoes.len(), 4);
        assert!(matches!(
            grid(1, 1).enumerate_poses(&ObjectSpec::bar3(), false),
            Err(Error::NoHypothesis)
        ));
        let with_absent = grid(1, 1).enumerate_poses(&ObjectSpec::bar3(), true).unwrap();
        assert_eq!(with_absent, vec![ObjectPose::Absent]);
    }

    #[test]
    fn pose_order_is_anchor_then_orientation() {
        let w = grid(3, 3);
        let poses = w.enumerate_poses(&ObjectSpec::domino(), false).unwrap();
        let keys: Vec<_> = poses
            .iter()
            .map(|p| match p {
                ObjectPose::Placed {
                    anchor,
                    orientation,
                } => (anchor.0, *orientation),
                ObjectPose::Absent => unreachable!(),
            })
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert_eq!(poses.len(), 12);
    }

    #[test]
    fn object_spec_validation() {
        assert!(ObjectSpec::new(vec![vec![]], 1.0).is_err());
        assert!(ObjectSpec::new(vec![vec![(0, 0), (1, 1)]], 1.0).is_err());
        assert!(ObjectSpec::new(vec![vec![(0, 0), (0, 1), (0, 2), (0, 3)]], 4.0).is_err());
        assert!(ObjectSpec::new(vec![vec![(0, 0), (0, 0)]], 1.0).is_err());
        assert!(ObjectSpec::new(vec![vec![(0, 0), (0, 1), (1, 1)]], 1.5).is_ok());
        assert!(ObjectSpec::new(vec![vec![(0, 0)]], 0.0).is_err());
    }

    #[test]
    fn max_zoom_covers_grid_from_reduced_centers() {
        for (r, c) in [(1, 1), (2, 5), (8, 8), (7, 3)] {
            let w = grid(r, c);
            let centers = w.reduced_centers(&ObjectSpec::domino());
            let mut covered = BTreeSet::new();
            for &center in &centers {
                covered.extend(w.view_footprint(CameraView::new(center, Zoom(3))).unwrap());
            }
            assert_eq!(covered.len(), w.len());
        }
    }

    proptest! {
        #[test]
        fn dist_is_metric(rows in 1usize..10, cols in 1usize..10, a: usize, b: usize, c: usize) {
            let w = grid(rows, cols);
            let n = w.len();
            let (i, j, k) = (BlockId(a % n), BlockId(b % n), BlockId(c % n));
            prop_assert_eq!(w.dist(i, j), w.dist(j, i));
            prop_assert_eq!(w.dist(i, j) == 0.0, i == j);
            prop_assert!(w.dist(i, k) <= w.dist(i, j) + w.dist(j, k) + 1e-12);
        }

        #[test]
        fn footprint_within_grid(rows in 1usize..12, cols in 1usize..12, center: usize, zoom in 1u8..5) {
            let w = grid(rows, cols);
            let view = CameraView::new(BlockId(center % w.len()), Zoom(zoom));
            let fp = w.view_footprint(view).unwrap();
            let side = 2 * view.zoom.half_width() + 1;
            prop_assert!(!fp.is_empty());
            prop_assert!(fp.len() <= side * side);
            prop_assert!(fp.iter().all(|&b| w.contains(b) && w.sees(view, b)));
            let (r, c) = w.position(view.center);
            let hw = view.zoom.half_width();
            if r >= hw && c >= hw && r + hw < rows && c + hw < cols {
                prop_assert_eq!(fp.len(), side * side);
            }
        }

        #[test]
        fn interior_checkerboard_counts(rows in 6usize..14, cols in 6usize..14) {
            let w = grid(rows, cols);
            let centers = w.reduced_centers(&ObjectSpec::domino());
            for &i in &centers {
                let (r, c) = w.position(i);
                if r >= 3 && c >= 3 && r + 3 < rows && c + 3 < cols {
                    let counts: Vec<_> = [DistanceBand::D1, DistanceBand::D2, DistanceBand::D3, DistanceBand::D4]
                        .iter()
                        .map(|&band| w.num_at_band(&centers, i, band))
                        .collect();
                    prop_assert_eq!(counts, vec![4, 4, 4, 8]);
                }
            }
        }

        #[test]
        fn enumerated_poses_are_valid(rows in 1usize..6, cols in 1usize..6, shape in 0usize..3) {
            let spec = [ObjectSpec::single_cell(), ObjectSpec::domino(), ObjectSpec::bar3()][shape].clone();
            let w = grid(rows, cols);
            if let Ok(poses) = w.enumerate_poses(&spec, false) {
                prop_assert_eq!(&poses, &w.enumerate_poses(&spec, false).unwrap());
                for pose in poses {
                    let cells = pose.cells(&w, &spec).unwrap();
                    prop_assert!(!cells.is_empty() && cells.len() <= 3);
                }
            }
        }
    }
}
