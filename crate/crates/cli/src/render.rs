//! ASCII belief heatmaps.

use std::fmt::Write;

use scout_core::sim::StepRecord;
use scout_core::{Belief, GridWorld};

/// Darkest last. Blank means zero mass; every other cell is scaled
/// against the current maximum.
pub const RAMP: &[u8] = b" .:-=+*#%@";

pub fn heatmap(world: &GridWorld, belief: &Belief) -> String {
    let max = belief.probs().iter().copied().fold(0.0, f64::max);
    let top = RAMP.len() - 1;
    let mut out = String::new();
    let border = format!("+{}+\n", "-".repeat(world.cols()));
    out.push_str(&border);
    for r in 0..world.rows() {
        out.push('|');
        for c in 0..world.cols() {
            let p = belief.probs()[r * world.cols() + c];
            let level = if p <= 0.0 || max <= 0.0 {
                0
            } else {
                ((p / max * top as f64).ceil() as usize).clamp(1, top)
            };
            out.push(RAMP[level] as char);
        }
        out.push_str("|\n");
    }
    out.push_str(&border);
    if belief.has_absent() {
        let _ = writeln!(out, "absent {:.4}", belief.probs()[belief.len() - 1]);
    }
    out
}

pub fn frame(world: &GridWorld, record: &StepRecord, belief: &Belief) -> String {
    format!(
        "step {} {} {}\nmode {} {:.4} entropy {:.4}\n{}",
        record.step,
        record.view,
        record.observation,
        record.mode,
        record.mode_probability,
        record.entropy,
        heatmap(world, belief)
    )
}
