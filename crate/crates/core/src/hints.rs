//! Hint-effect analyses on response logs.
//!
//! Four complementary views of whether hints help:
//!
//! 1. **Grade comparison by prior performance** — accuracy of hinted vs
//!    unhinted responses, split by whether the student's running mean grade
//!    was below or at-least 0.5.
//! 2. **Attempt-triplet contingency** — the first three serves of a session,
//!    cued (hint on the middle serve only) vs uncued, cross-tabulated by the
//!    grade change from first to third serve.
//! 3. **Conditional learning** — among triplets that started with a wrong
//!    answer, did the cued group convert to a correct third answer more
//!    often? Tested with a continuity-corrected chi-square.
//! 4. **Interaction deviance** — does the hint effect vary by item pair? A
//!    likelihood-ratio comparison of a homogeneous-hint model against one
//!    with pair-specific hint effects.

use crate::features::{FeatureRow, Triplet};
use crate::glm::{fit_logistic, FitConfig, FitResult, GlmError, Term};
use crate::special::chi_square_sf;
use crate::tables::{chi_square_test, ContingencyTable, Correction, TableError, TestResult};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HintError {
    #[error("no usable rows for this analysis")]
    EmptyInput,
    #[error("interaction analysis needs at least 2 pairs, found {found}")]
    TooFewPairs { found: usize },
    #[error(transparent)]
    Glm(#[from] GlmError),
    #[error(transparent)]
    Table(#[from] TableError),
}

/// Prior-performance stratum, split at a running mean grade of 0.5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorGroup {
    Below,
    Above,
}

impl PriorGroup {
    pub fn label(self) -> &'static str {
        match self {
            PriorGroup::Below => "below",
            PriorGroup::Above => "above",
        }
    }
}

/// Accuracy of one (stratum, hinted) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCell {
    pub group: PriorGroup,
    pub hinted: u8,
    pub n: u64,
    pub corrects: u64,
    pub accuracy: f64,
}

/// Hinted-vs-unhinted accuracy by prior-performance stratum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupTable {
    /// (below, unhinted), (below, hinted), (above, unhinted), (above, hinted).
    pub cells: [GroupCell; 4],
    /// Pooled over strata: (unhinted, hinted).
    pub overall: [GroupCell; 2],
    /// Rows without a defined prior mean (each student's first record).
    pub excluded: u64,
}

/// Stratified accuracy comparison of hinted vs unhinted responses.
pub fn group_grade_comparison(rows: &[FeatureRow]) -> Result<GroupTable, HintError> {
    if rows.is_empty() {
        return Err(HintError::EmptyInput);
    }
    // tallies[group][hinted] = (n, corrects)
    let mut tallies = [[(0u64, 0u64); 2]; 2];
    let mut excluded = 0u64;
    for r in rows {
        let Some(prior) = r.prior_grade_mean else {
            excluded += 1;
            continue;
        };
        let g = usize::from(prior >= 0.5);
        let h = usize::from(r.has_hint == 1);
        tallies[g][h].0 += 1;
        tallies[g][h].1 += u64::from(r.grade);
    }
    let cell = |g: usize, h: usize| {
        let (n, corrects) = tallies[g][h];
        GroupCell {
            group: if g == 0 { PriorGroup::Below } else { PriorGroup::Above },
            hinted: h as u8,
            n,
            corrects,
            accuracy: if n == 0 { f64::NAN } else { corrects as f64 / n as f64 },
        }
    };
    let overall = |h: usize| {
        let n = tallies[0][h].0 + tallies[1][h].0;
        let corrects = tallies[0][h].1 + tallies[1][h].1;
        GroupCell {
            group: PriorGroup::Below, // not meaningful for pooled cells
            hinted: h as u8,
            n,
            corrects,
            accuracy: if n == 0 { f64::NAN } else { corrects as f64 / n as f64 },
        }
    };
    Ok(GroupTable {
        cells: [cell(0, 0), cell(0, 1), cell(1, 0), cell(1, 1)],
        overall: [overall(0), overall(1)],
        excluded,
    })
}

/// Cross-tabulate triplets: grade change (-1/0/+1) by cue status.
pub fn triplet_contingency(triplets: &[Triplet]) -> Result<ContingencyTable, HintError> {
    if triplets.is_empty() {
        return Err(HintError::EmptyInput);
    }
    let mut counts = vec![vec![0u64; 2]; 3];
    for t in triplets {
        let row = (t.learning + 1) as usize;
        let col = usize::from(t.cue == 1);
        counts[row][col] += 1;
    }
    Ok(ContingencyTable::new(
        vec!["-1".into(), "0".into(), "+1".into()],
        vec!["no-cue".into(), "cue".into()],
        counts,
    )?)
}

/// Share of triplets with grade change +1, per cue class:
/// `(p_nocue, p_cue)`.
pub fn learning_proportions(triplets: &[Triplet]) -> Result<(f64, f64), HintError> {
    if triplets.is_empty() {
        return Err(HintError::EmptyInput);
    }
    let mut n = [0u64; 2];
    let mut learned = [0u64; 2];
    for t in triplets {
        let c = usize::from(t.cue == 1);
        n[c] += 1;
        learned[c] += u64::from(t.learning == 1);
    }
    let frac = |c: usize| {
        if n[c] == 0 {
            f64::NAN
        } else {
            learned[c] as f64 / n[c] as f64
        }
    };
    Ok((frac(0), frac(1)))
}

/// Conditional learning among triplets that started wrong (`g1 = 0`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionalResult {
    /// 2×2 table: rows no-cue/cue, columns learned/not-learned.
    pub table: ContingencyTable,
    pub n: u64,
    pub n_cue: u64,
    /// Share converting to a correct third answer, no-cue triplets.
    pub p_nocue: f64,
    /// Same for cued triplets.
    pub p_cue: f64,
    pub test: TestResult<f64>,
}

/// Restrict to triplets with a wrong first answer and test whether cued
/// triplets convert (third answer correct) more often.
pub fn conditional_learning(
    triplets: &[Triplet],
    correction: Correction,
) -> Result<ConditionalResult, HintError> {
    // among g1 = 0 triplets the grade change is 0 or +1, so "learned" is
    // exactly `learning == +1`
    let subset: Vec<&Triplet> = triplets.iter().filter(|t| t.grades[0] == 0).collect();
    if subset.is_empty() {
        return Err(HintError::EmptyInput);
    }
    let mut counts = vec![vec![0u64; 2]; 2];
    for t in &subset {
        let row = usize::from(t.cue == 1);
        let col = usize::from(t.learning != 1);
        counts[row][col] += 1;
    }
    let table = ContingencyTable::new(
        vec!["no-cue".into(), "cue".into()],
        vec!["learned".into(), "not-learned".into()],
        counts.clone(),
    )?;
    let test = chi_square_test::<f64>(&table, correction)?;
    let prop = |row: &[u64]| row[0] as f64 / (row[0] + row[1]) as f64;
    Ok(ConditionalResult {
        table,
        n: subset.len() as u64,
        n_cue: counts[1][0] + counts[1][1],
        p_nocue: prop(&counts[0]),
        p_cue: prop(&counts[1]),
        test,
    })
}

/// Likelihood-ratio comparison of homogeneous vs pair-specific hint effects.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InteractionResult {
    /// Deviance drop from freeing the hint effect per pair (clamped at 0).
    pub deviance_drop: f64,
    /// Extra parameters the pair-specific model actually spent.
    pub df: u32,
    pub p_value: f64,
    /// Fraction of the explained deviance (null minus pair-specific model)
    /// attributable to the interaction.
    pub share_of_explained: f64,
    pub n_rows: u64,
    pub n_pairs: usize,
    pub main_deviance: f64,
    pub interaction_deviance: f64,
    pub null_deviance: f64,
    /// The homogeneous-hint fit, for inspection of the main effect.
    pub main_fit: FitResult<f64>,
}

/// Fit `intercept + hint + pair + student` against
/// `intercept + pair-specific hint + pair + student` on the paired rows and
/// compare deviances. The per-student block is ridge-penalized with
/// `ridge_lambda` in both fits, so the comparison is between equally
/// regularized models.
pub fn interaction_deviance(
    rows: &[FeatureRow],
    ridge_lambda: f64,
) -> Result<InteractionResult, HintError> {
    let paired: Vec<FeatureRow> =
        rows.iter().filter(|r| r.pair_id.is_some()).cloned().collect();
    if paired.is_empty() {
        return Err(HintError::EmptyInput);
    }
    let n_pairs = {
        let mut ids: Vec<&str> = paired.iter().filter_map(|r| r.pair_id.as_deref()).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    };
    if n_pairs < 2 {
        return Err(HintError::TooFewPairs { found: n_pairs });
    }

    let config = FitConfig { ridge_lambda, ..FitConfig::default() };
    let main = fit_logistic::<f64>(
        &paired,
        &[Term::Intercept, Term::Hint, Term::Pair, Term::Student],
        &config,
    )?;
    let interaction = fit_logistic::<f64>(
        &paired,
        &[Term::Intercept, Term::PairHint, Term::Pair, Term::Student],
        &config,
    )?;

    let df = interaction.coef_names.len().saturating_sub(main.coef_names.len()) as u32;
    let drop = (main.deviance - interaction.deviance).max(0.0);
    let p_value = if df == 0 { f64::NAN } else { chi_square_sf(drop, df) };
    let explained = main.null_deviance - interaction.deviance;
    let share = if explained > 0.0 { (drop / explained).clamp(0.0, 1.0) } else { 0.0 };
    Ok(InteractionResult {
        deviance_drop: drop,
        df,
        p_value,
        share_of_explained: share,
        n_rows: paired.len() as u64,
        n_pairs,
        main_deviance: main.deviance,
        interaction_deviance: interaction.deviance,
        null_deviance: main.null_deviance,
        main_fit: main,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::special::sigmoid;
    use approx::assert_relative_eq;
    use rand::Rng as _;

    fn frow(
        student: &str,
        pair: Option<&str>,
        has_hint: u8,
        grade: u8,
        prior: Option<f64>,
    ) -> FeatureRow {
        FeatureRow {
            student_id: student.into(),
            drillset_id: "a".into(),
            t: 1,
            item_id: "i1".into(),
            pair_id: pair.map(str::to_string),
            shown_options: vec!["o1".into(), "o2".into()],
            keyed_option: "o1".into(),
            has_hint,
            grade,
            keyed_seen_before: 0,
            prop_distractors_seen: 0.0,
            prior_grade_mean: prior,
            n_prior: prior.map_or(0, |_| 1),
        }
    }

    #[test]
    fn group_comparison_routes_cells_and_excludes_undefined_priors() {
        let rows = vec![
            frow("s1", None, 0, 1, None), // excluded: no prior
            frow("s1", None, 0, 1, Some(0.4)),
            frow("s1", None, 0, 0, Some(0.4)),
            frow("s1", None, 1, 1, Some(0.3)),
            frow("s2", None, 0, 1, Some(0.5)), // boundary 0.5 goes to Above
            frow("s2", None, 1, 0, Some(0.9)),
            frow("s2", None, 1, 1, Some(0.9)),
        ];
        let table = group_grade_comparison(&rows).unwrap();
        assert_eq!(table.excluded, 1);
        let [below_plain, below_hint, above_plain, above_hint] = &table.cells;
        assert_eq!((below_plain.n, below_plain.corrects), (2, 1));
        assert_relative_eq!(below_plain.accuracy, 0.5);
        assert_eq!((below_hint.n, below_hint.corrects), (1, 1));
        assert_eq!((above_plain.n, above_plain.corrects), (1, 1));
        assert_eq!((above_hint.n, above_hint.corrects), (2, 1));
        assert_eq!(table.overall[0].n, 3);
        assert_eq!(table.overall[1].n, 3);
        assert_relative_eq!(table.overall[1].accuracy, 2.0 / 3.0);
    }

    fn triplet(cue: u8, g1: u8, g3: u8) -> Triplet {
        Triplet {
            student_id: "s".into(),
            drillset_id: "a".into(),
            grades: [g1, g1.max(g3), g3],
            cue,
            learning: g3 as i8 - g1 as i8,
        }
    }

    #[test]
    fn triplet_table_and_proportions_agree() {
        let mut triplets = Vec::new();
        // no-cue: 3 up, 2 flat, 1 down; cue: 2 up, 1 flat
        for _ in 0..3 {
            triplets.push(triplet(0, 0, 1));
        }
        for _ in 0..2 {
            triplets.push(triplet(0, 0, 0));
        }
        triplets.push(triplet(0, 1, 0));
        for _ in 0..2 {
            triplets.push(triplet(1, 0, 1));
        }
        triplets.push(triplet(1, 1, 1));

        let table = triplet_contingency(&triplets).unwrap();
        assert_eq!(table.counts, vec![vec![1, 0], vec![2, 1], vec![3, 2]]);
        assert_eq!(table.row_labels, vec!["-1", "0", "+1"]);

        let (p_nocue, p_cue) = learning_proportions(&triplets).unwrap();
        assert_relative_eq!(p_nocue, 0.5);
        assert_relative_eq!(p_cue, 2.0 / 3.0);
    }

    #[test]
    fn conditional_learning_matches_the_direct_two_by_two() {
        // counts chosen small but non-degenerate
        let mut triplets = Vec::new();
        for _ in 0..60 {
            triplets.push(triplet(0, 0, 1));
        }
        for _ in 0..16 {
            triplets.push(triplet(0, 0, 0));
        }
        for _ in 0..8 {
            triplets.push(triplet(1, 0, 1));
        }
        for _ in 0..2 {
            triplets.push(triplet(1, 0, 0));
        }
        // disties that must be ignored: started correct
        for _ in 0..50 {
            triplets.push(triplet(0, 1, 1));
        }
        let res = conditional_learning(&triplets, Correction::Yates).unwrap();
        assert_eq!(res.n, 86);
        assert_eq!(res.n_cue, 10);
        assert_relative_eq!(res.p_nocue, 60.0 / 76.0);
        assert_relative_eq!(res.p_cue, 0.8);
        let direct =
            crate::tables::chi_square_2x2::<f64>(60, 16, 8, 2, Correction::Yates).unwrap();
        assert_relative_eq!(res.test.statistic, direct.statistic, epsilon = 1e-12);
        assert_relative_eq!(res.test.p_value, direct.p_value, epsilon = 1e-12);
    }

    /// Synthetic paired rows with controllable per-pair hint effects.
    fn interaction_rows(deltas: &[f64], rows_per_cell: usize, seed: u64) -> Vec<FeatureRow> {
        let mut rng = rng_from_seed(seed);
        let mut rows = Vec::new();
        for (p, &delta) in deltas.iter().enumerate() {
            let pair = format!("p{p:02}");
            for h in [0u8, 1u8] {
                for i in 0..rows_per_cell {
                    let student = format!("s{:02}", i % 10);
                    let eta = -0.2 + f64::from(h) * delta;
                    let grade = u8::from(rng.random_bool(sigmoid(eta)));
                    rows.push(frow(&student, Some(&pair), h, grade, None));
                }
            }
        }
        rows
    }

    #[test]
    fn heterogeneous_hint_effects_produce_a_large_deviance_drop() {
        // two pairs with opposite hint effects: the homogeneous model cannot
        // represent this, the pair-specific model can
        let rows = interaction_rows(&[2.0, -2.0], 500, 71);
        let res = interaction_deviance(&rows, 0.5).unwrap();
        assert_eq!(res.df, 1, "2 pair-hint columns replace 1 hint column");
        assert!(res.deviance_drop > 20.0, "drop = {}", res.deviance_drop);
        assert!(res.p_value < 1e-4, "p = {}", res.p_value);
        assert!(res.share_of_explained > 0.0);
        assert!(res.interaction_deviance <= res.main_deviance);
    }

    #[test]
    fn homogeneous_hint_effects_leave_little_to_explain() {
        let rows = interaction_rows(&[0.8, 0.8, 0.8, 0.8], 400, 73);
        let res = interaction_deviance(&rows, 0.5).unwrap();
        assert_eq!(res.df, 3);
        assert!(res.p_value > 0.01, "p = {}", res.p_value);
        // the main effect itself is strong and positive
        let hint = res.main_fit.coefficient("hint").unwrap();
        let se = res.main_fit.std_error("hint").unwrap();
        assert!(hint - 2.0 * se > 0.0, "hint = {hint} (se {se})");
    }

    #[test]
    fn interaction_needs_at_least_two_pairs() {
        let rows = interaction_rows(&[1.0], 50, 75);
        assert!(matches!(
            interaction_deviance(&rows, 0.5),
            Err(HintError::TooFewPairs { found: 1 })
        ));
        // rows without pair ids are skipped entirely
        let unpaired = vec![frow("s1", None, 0, 1, None)];
        assert!(matches!(interaction_deviance(&unpaired, 0.5), Err(HintError::EmptyInput)));
    }

    #[test]
    fn empty_inputs_error() {
        assert!(matches!(group_grade_comparison(&[]), Err(HintError::EmptyInput)));
        assert!(matches!(triplet_contingency(&[]), Err(HintError::EmptyInput)));
        assert!(matches!(learning_proportions(&[]), Err(HintError::EmptyInput)));
        let only_correct_starts = vec![triplet(0, 1, 1)];
        assert!(matches!(
            conditional_learning(&only_correct_starts, Correction::Yates),
            Err(HintError::EmptyInput)
        ));
    }
}
