//! Adaptive drill scheduling: pick the next item to serve a student.
//!
//! Every item carries an empirical difficulty estimated from its serve
//! history with add-one smoothing, `1 - (corrects + 1) / (serves + 2)`, so an
//! unserved item starts at 0.5. The student's running grade estimate (mean of
//! the last [`GRADE_WINDOW`] grades) steers a triangular kernel over the
//! difficulty-ranked items: weak students are served mostly easy items,
//! strong students mostly hard ones, and a small floor keeps every item
//! reachable. A student with no history draws uniformly.

use crate::itembank::DrillSet;
use crate::rng::Rng;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

/// Number of most-recent grades feeding the running grade estimate.
pub const GRADE_WINDOW: usize = 8;

/// Weight floor, as a multiple of `1 / m` for an `m`-item set, guaranteeing
/// every item keeps positive selection probability.
pub const KERNEL_FLOOR: f64 = 0.02;

#[derive(Debug, Error)]
pub enum SchedulerError {
    #[error("cannot select from an empty drill set")]
    EmptyDrillSet,
}

/// Serve/correct tallies for one item id.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemStats {
    pub serves: u64,
    pub corrects: u64,
}

impl ItemStats {
    /// Smoothed share of incorrect responses; 0.5 with no history, strictly
    /// inside (0, 1) always.
    pub fn difficulty(&self) -> f64 {
        1.0 - (self.corrects + 1) as f64 / (self.serves + 2) as f64
    }

    /// Record one response with grade 0 or 1.
    pub fn record(&mut self, grade: u8) {
        self.serves += 1;
        self.corrects += u64::from(grade == 1);
    }
}

/// A student's position in one drill session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudentState {
    pub student_id: String,
    /// Chronological grades (0/1), oldest first.
    pub grades: Vec<u8>,
}

impl StudentState {
    pub fn new(student_id: impl Into<String>) -> Self {
        Self { student_id: student_id.into(), grades: Vec::new() }
    }

    /// 1-based index of the next attempt.
    pub fn t(&self) -> u32 {
        self.grades.len() as u32 + 1
    }

    pub fn has_history(&self) -> bool {
        !self.grades.is_empty()
    }

    /// Mean of the last [`GRADE_WINDOW`] grades; 0.5 before any response, a
    /// neutral prior that only matters to callers who bypass the uniform
    /// cold-start draw.
    pub fn grade_estimate(&self) -> f64 {
        if self.grades.is_empty() {
            return 0.5;
        }
        let window = &self.grades[self.grades.len().saturating_sub(GRADE_WINDOW)..];
        window.iter().map(|&g| f64::from(g)).sum::<f64>() / window.len() as f64
    }

    pub fn push_grade(&mut self, grade: u8) {
        self.grades.push(grade);
    }
}

/// Select the index (into `set.items`) of the next item to serve.
///
/// Items are ranked by ascending difficulty (ties by index); a student with
/// history draws a rank from a triangular kernel centered at
/// `grade_estimate * (m - 1)` with half-width `m / 2` plus the floor, so the
/// estimate maps low grades onto easy items and high grades onto hard ones.
/// With no history the draw is uniform. Hinted pair variants are ranked like
/// any other entry; their shared `item_id` means both variants read the same
/// stats.
pub fn select_item(
    state: &StudentState,
    set: &DrillSet,
    stats: &HashMap<String, ItemStats>,
    rng: &mut Rng,
) -> Result<usize, SchedulerError> {
    let m = set.items.len();
    if m == 0 {
        return Err(SchedulerError::EmptyDrillSet);
    }
    if !state.has_history() {
        return Ok(rng.random_range(0..m));
    }

    let mut ranked: Vec<(f64, usize)> = set
        .items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let d = stats.get(&item.item_id).copied().unwrap_or_default().difficulty();
            (d, i)
        })
        .collect();
    ranked.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

    let m_f = m as f64;
    let center = state.grade_estimate() * (m_f - 1.0);
    let half_width = m_f / 2.0;
    let floor = KERNEL_FLOOR / m_f;
    let weights: Vec<f64> = (0..m)
        .map(|r| (1.0 - (r as f64 - center).abs() / half_width).max(0.0) + floor)
        .collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (r, w) in weights.iter().enumerate() {
        u -= w;
        if u < 0.0 {
            return Ok(ranked[r].1);
        }
    }
    Ok(ranked[m - 1].1)
}
