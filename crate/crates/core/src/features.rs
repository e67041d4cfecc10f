//! Feature derivation: turn a raw response log into modeling rows.
//!
//! Exposure features are reconstructed purely from the log, mirroring what a
//! student could actually have seen: an option counts as "seen" once it has
//! been displayed in any role (keyed or distractor) in an earlier record of
//! the same student/set session. All derived quantities describe the state
//! *before* the current record, so the row is a legal predictor set for its
//! own grade.
//!
//! The module also extracts attempt triplets — the first three serves of a
//! student/set session — classified by their hint pattern, which the
//! hint-effect analyses consume.

use crate::logstore::{LogError, ResponseLog};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::io::Write;

/// One response annotated with pre-response exposure and history features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub student_id: String,
    pub drillset_id: String,
    pub t: u32,
    pub item_id: String,
    pub pair_id: Option<String>,
    pub shown_options: Vec<String>,
    pub keyed_option: String,
    pub has_hint: u8,
    pub grade: u8,
    /// 1 if the keyed option was displayed earlier in this student/set
    /// session, in any role.
    pub keyed_seen_before: u8,
    /// Fraction of the non-keyed shown options displayed earlier in this
    /// student/set session; 0 when the item shows no distractors.
    pub prop_distractors_seen: f64,
    /// Mean grade over all of the student's earlier records (across sets, in
    /// canonical order); `None` for their first record.
    pub prior_grade_mean: Option<f64>,
    /// Number of records behind `prior_grade_mean`.
    pub n_prior: u32,
}

/// Derive one [`FeatureRow`] per record, in the log's canonical order.
pub fn derive_features(log: &ResponseLog) -> Vec<FeatureRow> {
    let mut rows = Vec::with_capacity(log.len());
    let mut session: Option<(String, String)> = None;
    let mut seen: HashSet<String> = HashSet::new();
    let mut student: Option<String> = None;
    let mut grade_sum: u64 = 0;
    let mut n_prior: u32 = 0;

    for r in log.records() {
        if student.as_deref() != Some(r.student_id.as_str()) {
            student = Some(r.student_id.clone());
            grade_sum = 0;
            n_prior = 0;
        }
        let key = (r.student_id.clone(), r.drillset_id.clone());
        if session.as_ref() != Some(&key) {
            session = Some(key);
            seen.clear();
        }

        let keyed_seen_before = u8::from(seen.contains(&r.keyed_option));
        let distractors: Vec<&String> =
            r.shown_options.iter().filter(|o| **o != r.keyed_option).collect();
        let prop_distractors_seen = if distractors.is_empty() {
            0.0
        } else {
            distractors.iter().filter(|o| seen.contains(**o)).count() as f64
                / distractors.len() as f64
        };
        let prior_grade_mean =
            (n_prior > 0).then(|| grade_sum as f64 / f64::from(n_prior));

        rows.push(FeatureRow {
            student_id: r.student_id.clone(),
            drillset_id: r.drillset_id.clone(),
            t: r.t,
            item_id: r.item_id.clone(),
            pair_id: r.pair_id.clone(),
            shown_options: r.shown_options.clone(),
            keyed_option: r.keyed_option.clone(),
            has_hint: r.has_hint,
            grade: r.grade,
            keyed_seen_before,
            prop_distractors_seen,
            prior_grade_mean,
            n_prior,
        });

        for o in &r.shown_options {
            if !seen.contains(o) {
                seen.insert(o.clone());
            }
        }
        grade_sum += u64::from(r.grade);
        n_prior += 1;
    }
    rows
}

/// The first three serves of a student/set session, classified by hint
/// pattern: `cue = 1` when only the middle serve was hinted, `cue = 0` when
/// none were. Sessions with other hint patterns or fewer than three serves
/// yield no triplet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triplet {
    pub student_id: String,
    pub drillset_id: String,
    pub grades: [u8; 3],
    pub cue: u8,
    /// `grades[2] - grades[0]`: -1, 0, or +1.
    pub learning: i8,
}

/// Extract the cue/no-cue attempt triplets from a log.
pub fn extract_triplets(log: &ResponseLog) -> Vec<Triplet> {
    let mut triplets = Vec::new();
    let records = log.records();
    let mut i = 0;
    while i < records.len() {
        let start = i;
        let (student, set) = (&records[start].student_id, &records[start].drillset_id);
        while i < records.len()
            && &records[i].student_id == student
            && &records[i].drillset_id == set
        {
            i += 1;
        }
        if i - start < 3 {
            continue;
        }
        let g = &records[start..start + 3];
        let hints = [g[0].has_hint, g[1].has_hint, g[2].has_hint];
        let cue = match hints {
            [0, 1, 0] => 1,
            [0, 0, 0] => 0,
            _ => continue,
        };
        let grades = [g[0].grade, g[1].grade, g[2].grade];
        triplets.push(Triplet {
            student_id: student.clone(),
            drillset_id: set.clone(),
            grades,
            cue,
            learning: grades[2] as i8 - grades[0] as i8,
        });
    }
    triplets
}

/// Column order of [`write_features_csv`].
pub const FEATURE_CSV_COLUMNS: [&str; 13] = [
    "student_id",
    "drillset_id",
    "t",
    "item_id",
    "pair_id",
    "shown_options",
    "keyed_option",
    "has_hint",
    "grade",
    "keyed_seen_before",
    "prop_distractors_seen",
    "prior_grade_mean",
    "n_prior",
];

/// Write feature rows as CSV; `shown_options` is `;`-joined, optional fields
/// are empty cells.
pub fn write_features_csv<W: Write>(rows: &[FeatureRow], writer: W) -> Result<(), LogError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(FEATURE_CSV_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.student_id.as_str(),
            r.drillset_id.as_str(),
            &r.t.to_string(),
            r.item_id.as_str(),
            r.pair_id.as_deref().unwrap_or(""),
            &r.shown_options.join(";"),
            r.keyed_option.as_str(),
            &r.has_hint.to_string(),
            &r.grade.to_string(),
            &r.keyed_seen_before.to_string(),
            &r.prop_distractors_seen.to_string(),
            &r.prior_grade_mean.map(|v| v.to_string()).unwrap_or_default(),
            &r.n_prior.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
