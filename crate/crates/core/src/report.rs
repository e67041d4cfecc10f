//! One-call bundle of every cue/hint analysis on a response log.
//!
//! [`hint_report`] runs the stratified accuracy comparison, the grade-change
//! cross-tabulation, the wrong-start conversion test, and the pair-specific
//! interaction comparison, skipping (with a note) any section the log cannot
//! support instead of failing the whole report.

use crate::features::{derive_features, extract_triplets};
use crate::hints::{
    conditional_learning, group_grade_comparison, interaction_deviance, learning_proportions,
    triplet_contingency, ConditionalResult, GroupTable, HintError, InteractionResult,
};
use crate::logstore::ResponseLog;
use crate::tables::{chi_square_test, Correction, ContingencyTable, TestResult};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Grade-change cross-tabulation with its proportions and overall test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TripletSection {
    pub n_triplets: u64,
    pub table: ContingencyTable,
    /// Share of uncued three-serve sessions that move from wrong to right.
    pub p_learning_nocue: f64,
    /// Same for cued sessions.
    pub p_learning_cue: f64,
    /// Uncorrected chi-square on the full 3×2 table.
    pub test: TestResult<f64>,
}

/// Everything the cue/hint analyses say about one log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HintReport {
    pub n_records: u64,
    pub n_students: u64,
    pub group: GroupTable,
    pub triplets: Option<TripletSection>,
    pub conditional: Option<ConditionalResult>,
    pub interaction: Option<InteractionResult>,
    /// Why any missing section was skipped.
    pub notes: Vec<String>,
}

/// Run the full hint-analysis bundle.
///
/// The stratified accuracy table is mandatory (it only needs a non-empty
/// log); the remaining sections degrade to `None` plus a note when the log
/// lacks what they need (three-serve sessions, wrong starts, item pairs).
/// `ridge_lambda` penalizes the per-student block of the interaction fits.
pub fn hint_report(log: &ResponseLog, ridge_lambda: f64) -> Result<HintReport, HintError> {
    let rows = derive_features(log);
    let group = group_grade_comparison(&rows)?;

    let mut notes = Vec::new();
    let n_students = {
        let mut n = 0u64;
        let mut last: Option<&str> = None;
        for r in log.records() {
            if last != Some(r.student_id.as_str()) {
                n += 1;
                last = Some(r.student_id.as_str());
            }
        }
        n
    };

    let triplet_rows = extract_triplets(log);
    let triplets = if triplet_rows.is_empty() {
        notes.push("grade-change analysis skipped: no three-serve sessions".into());
        None
    } else {
        let table = triplet_contingency(&triplet_rows)?;
        let (p_learning_nocue, p_learning_cue) = learning_proportions(&triplet_rows)?;
        match chi_square_test::<f64>(&table, Correction::None) {
            Ok(test) => Some(TripletSection {
                n_triplets: triplet_rows.len() as u64,
                table,
                p_learning_nocue,
                p_learning_cue,
                test,
            }),
            Err(e) => {
                notes.push(format!("grade-change test skipped: {e}"));
                None
            }
        }
    };

    let conditional = match conditional_learning(&triplet_rows, Correction::Yates) {
        Ok(c) => Some(c),
        Err(e) => {
            notes.push(format!("wrong-start conversion test skipped: {e}"));
            None
        }
    };

    let interaction = match interaction_deviance(&rows, ridge_lambda) {
        Ok(i) => Some(i),
        Err(e) => {
            notes.push(format!("pair-specific interaction test skipped: {e}"));
            None
        }
    };

    Ok(HintReport {
        n_records: log.len() as u64,
        n_students,
        group,
        triplets,
        conditional,
        interaction,
        notes,
    })
}

fn pct(x: f64) -> String {
    if x.is_nan() {
        "--".into()
    } else {
        format!("{:.1}%", 100.0 * x)
    }
}

impl HintReport {
    /// Plain-text rendering suitable for a terminal.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "hint analysis: {} records, {} students",
            self.n_records, self.n_students
        );

        let _ = writeln!(s, "\naccuracy by prior stratum");
        let _ = writeln!(s, "  {:<9} {:<18} {}", "stratum", "plain", "hinted");
        let row = |label: &str, plain: &crate::hints::GroupCell, hint: &crate::hints::GroupCell| {
            format!(
                "  {:<9} {:<18} {}",
                label,
                format!("{} ({})", pct(plain.accuracy), plain.n),
                format!("{} ({})", pct(hint.accuracy), hint.n),
            )
        };
        let c = &self.group.cells;
        let _ = writeln!(s, "{}", row("below", &c[0], &c[1]));
        let _ = writeln!(s, "{}", row("above", &c[2], &c[3]));
        let o = &self.group.overall;
        let _ = writeln!(s, "{}", row("overall", &o[0], &o[1]));
        let _ = writeln!(s, "  ({} rows excluded: no prior history)", self.group.excluded);

        if let Some(t) = &self.triplets {
            let _ = writeln!(s, "\ngrade-change by cue ({} three-serve sessions)", t.n_triplets);
            let _ = writeln!(s, "  {:<7} {:<8} {}", "change", "no-cue", "cue");
            for (i, label) in t.table.row_labels.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "  {:<7} {:<8} {}",
                    label, t.table.counts[i][0], t.table.counts[i][1]
                );
            }
            let _ = writeln!(
                s,
                "  learned: no-cue {}, cue {}",
                pct(t.p_learning_nocue),
                pct(t.p_learning_cue)
            );
            let _ = writeln!(
                s,
                "  chi-square {:.4}, df {}, p {:.4}",
                t.test.statistic, t.test.df, t.test.p_value
            );
        }

        if let Some(c) = &self.conditional {
            let _ = writeln!(s, "\nwrong-start conversion ({} sessions)", c.n);
            let nocue_n = c.n - c.n_cue;
            let _ = writeln!(
                s,
                "  no-cue {}/{} ({}), cue {}/{} ({})",
                c.table.counts[0][0],
                nocue_n,
                pct(c.p_nocue),
                c.table.counts[1][0],
                c.n_cue,
                pct(c.p_cue)
            );
            let corrected = match c.test.correction {
                Correction::Yates => " (continuity-corrected)",
                Correction::None => "",
            };
            let _ = writeln!(
                s,
                "  chi-square{} {:.4}, df {}, p {:.4}",
                corrected, c.test.statistic, c.test.df, c.test.p_value
            );
        }

        if let Some(i) = &self.interaction {
            let _ = writeln!(s, "\npair-specific hint effects ({} pairs)", i.n_pairs);
            let _ = writeln!(
                s,
                "  deviance drop {:.3} on {} df, p {:.4}",
                i.deviance_drop, i.df, i.p_value
            );
            let _ = writeln!(
                s,
                "  share of explained deviance: {}",
                pct(i.share_of_explained)
            );
        }

        for note in &self.notes {
            let _ = writeln!(s, "\nnote: {note}");
        }
        s
    }
}
