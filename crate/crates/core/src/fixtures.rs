//! Reference populations that pin the analysis pipeline end to end.
//!
//! Every magic number of the validation suite lives here, in one place.
//! The fixtures are deterministic synthetic logs whose aggregate statistics
//! are known exactly by construction, so the analyses built on top of them
//! (triplet tables, conditional tests, stratified comparisons, power curves)
//! can be checked against frozen values.

use crate::logstore::{LogError, ResponseLog, ResponseRecord};
use crate::power::OutcomeRow;
use std::path::{Path, PathBuf};

// ---------------------------------------------------------------------------
// Triplet population: 1810 sessions of three serves each. The deciding
// quantities are the (first, third) grade pattern counts per cue class.
// Uncued sessions have no hints at all; cued sessions are hinted on the
// middle serve only.

/// Uncued (g1, g3) pattern counts: down (1,0), low-flat (0,0), high-flat
/// (1,1), up (0,1).
pub const NOCUE_PATTERNS: [(u8, u8, u32); 4] =
    [(1, 0, 93), (0, 0, 157), (1, 1, 857), (0, 1, 601)];

/// Cued (g1, g3) pattern counts, same order.
pub const CUE_PATTERNS: [(u8, u8, u32); 4] = [(1, 0, 8), (0, 0, 6), (1, 1, 47), (0, 1, 41)];

/// Number of sessions in the triplet population.
pub const TRIPLET_SESSIONS: u32 = 1810;

// ---------------------------------------------------------------------------
// Conditional population: the wrong-start subset, 805 sessions. Counts are
// (learned, not-learned) per cue class and equal the (0,1)/(0,0) patterns
// above by construction.

pub const CONDITIONAL_NOCUE: (u32, u32) = (601, 157);
pub const CONDITIONAL_CUE: (u32, u32) = (41, 6);
pub const CONDITIONAL_SESSIONS: u32 = 805;

// ---------------------------------------------------------------------------
// Stratified-comparison population: two-serve sessions where the first serve
// fixes the prior stratum (grade 0 -> below, grade 1 -> above) and the second
// carries the (hinted, grade) cell. Cells are (n, corrects).

pub const GROUP_BELOW_PLAIN: (u32, u32) = (10_809, 5_740);
pub const GROUP_BELOW_HINT: (u32, u32) = (2_797, 1_689);
pub const GROUP_ABOVE_PLAIN: (u32, u32) = (12_341, 11_095);
pub const GROUP_ABOVE_HINT: (u32, u32) = (3_406, 3_110);

/// Total students in the stratified-comparison population.
pub const GROUP_SESSIONS: u32 =
    GROUP_BELOW_PLAIN.0 + GROUP_BELOW_HINT.0 + GROUP_ABOVE_PLAIN.0 + GROUP_ABOVE_HINT.0;

const FIXTURE_SET: &str = "fx1";
const FIXTURE_OPTIONS: [&str; 4] = ["o1", "o2", "o3", "o4"];

fn record(student: &str, t: u32, has_hint: u8, grade: u8) -> ResponseRecord {
    ResponseRecord {
        student_id: student.to_string(),
        drillset_id: FIXTURE_SET.to_string(),
        t,
        item_id: format!("{FIXTURE_SET}-item"),
        pair_id: None,
        shown_options: FIXTURE_OPTIONS.iter().map(|s| s.to_string()).collect(),
        keyed_option: FIXTURE_OPTIONS[0].to_string(),
        has_hint,
        grade,
    }
}

fn triplet_session(student: &str, cued: bool, g1: u8, g3: u8) -> [ResponseRecord; 3] {
    // the middle grade repeats the first so that only the hint pattern
    // distinguishes cued from uncued sessions
    [
        record(student, 1, 0, g1),
        record(student, 2, u8::from(cued), g1),
        record(student, 3, 0, g3),
    ]
}

/// The 1810-session triplet population as a response log.
pub fn triplet_reference_log() -> ResponseLog {
    let mut records = Vec::with_capacity(3 * TRIPLET_SESSIONS as usize);
    let mut idx = 0u32;
    for (cued, patterns) in [(false, &NOCUE_PATTERNS), (true, &CUE_PATTERNS)] {
        for &(g1, g3, count) in patterns.iter() {
            for _ in 0..count {
                idx += 1;
                let student = format!("t{idx:05}");
                records.extend(triplet_session(&student, cued, g1, g3));
            }
        }
    }
    ResponseLog::from_unsorted(records).expect("fixture construction is valid")
}

/// The 805-session wrong-start population as a response log.
pub fn conditional_reference_log() -> ResponseLog {
    let mut records = Vec::with_capacity(3 * CONDITIONAL_SESSIONS as usize);
    let mut idx = 0u32;
    for (cued, (learned, stuck)) in
        [(false, CONDITIONAL_NOCUE), (true, CONDITIONAL_CUE)]
    {
        for (g3, count) in [(1u8, learned), (0u8, stuck)] {
            for _ in 0..count {
                idx += 1;
                let student = format!("c{idx:04}");
                records.extend(triplet_session(&student, cued, 0, g3));
            }
        }
    }
    ResponseLog::from_unsorted(records).expect("fixture construction is valid")
}

/// The stratified-comparison population as a response log: two records per
/// student, the first fixing the prior stratum, the second carrying the cell.
pub fn group_reference_log() -> ResponseLog {
    let cells = [
        (0u8, 0u8, GROUP_BELOW_PLAIN),
        (0, 1, GROUP_BELOW_HINT),
        (1, 0, GROUP_ABOVE_PLAIN),
        (1, 1, GROUP_ABOVE_HINT),
    ];
    let mut records = Vec::with_capacity(2 * GROUP_SESSIONS as usize);
    let mut idx = 0u32;
    for (stratum_grade, hinted, (n, corrects)) in cells {
        for i in 0..n {
            idx += 1;
            let student = format!("g{idx:05}");
            records.push(record(&student, 1, 0, stratum_grade));
            records.push(record(&student, 2, hinted, u8::from(i < corrects)));
        }
    }
    ResponseLog::from_unsorted(records).expect("fixture construction is valid")
}

/// The conditional population as resamplable `(cue, outcome)` rows.
pub fn power_reference_rows() -> Vec<OutcomeRow> {
    let mut rows = Vec::with_capacity(CONDITIONAL_SESSIONS as usize);
    for (cue, (learned, stuck)) in [(0u8, CONDITIONAL_NOCUE), (1, CONDITIONAL_CUE)] {
        for (outcome, count) in [(1u8, learned), (0, stuck)] {
            rows.extend(std::iter::repeat(OutcomeRow { cue, outcome }).take(count as usize));
        }
    }
    rows
}

/// File names written by [`write_all`].
pub const FIXTURE_FILES: [&str; 4] = [
    "triplet_reference.jsonl",
    "conditional_reference.jsonl",
    "group_reference.jsonl",
    "power_reference.csv",
];

/// Write every fixture into `dir` and return the paths.
pub fn write_all(dir: &Path) -> Result<Vec<PathBuf>, LogError> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for (name, log) in [
        (FIXTURE_FILES[0], triplet_reference_log()),
        (FIXTURE_FILES[1], conditional_reference_log()),
        (FIXTURE_FILES[2], group_reference_log()),
    ] {
        let path = dir.join(name);
        let file = std::fs::File::create(&path)?;
        log.write_jsonl(std::io::BufWriter::new(file))?;
        paths.push(path);
    }
    let path = dir.join(FIXTURE_FILES[3]);
    let file = std::fs::File::create(&path)?;
    crate::power::write_outcomes_csv(&power_reference_rows(), std::io::BufWriter::new(file))?;
    paths.push(path);
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{derive_features, extract_triplets};
    use crate::hints::{
        conditional_learning, group_grade_comparison, learning_proportions, triplet_contingency,
    };
    use crate::tables::Correction;
    use approx::assert_relative_eq;

    #[test]
    fn triplet_population_tabulates_to_the_frozen_matrix() {
        let log = triplet_reference_log();
        assert_eq!(log.len(), 3 * 1810);
        let triplets = extract_triplets(&log);
        assert_eq!(triplets.len(), 1810);
        let table = triplet_contingency(&triplets).unwrap();
        assert_eq!(table.counts, vec![vec![93, 8], vec![1014, 53], vec![601, 41]]);

        let (p_nocue, p_cue) = learning_proportions(&triplets).unwrap();
        assert_relative_eq!(p_nocue, 601.0 / 1708.0, epsilon = 1e-12);
        assert_relative_eq!(p_cue, 41.0 / 102.0, epsilon = 1e-12);
        // displayed rounding of the frozen proportions
        assert_relative_eq!(p_nocue, 0.3519, epsilon = 5e-5);
        assert_relative_eq!(p_cue, 0.4020, epsilon = 5e-5);
    }

    /// Oracle-first: the statistics frozen here were computed independently
    /// (continuity-corrected and plain chi-square on the 2x2 counts) before
    /// being pinned.
    #[test]
    fn conditional_population_reproduces_the_frozen_tests() {
        let log = conditional_reference_log();
        let triplets = extract_triplets(&log);
        assert_eq!(triplets.len(), 805);

        let yates = conditional_learning(&triplets, Correction::Yates).unwrap();
        assert_eq!(yates.table.counts, vec![vec![601, 157], vec![41, 6]]);
        assert_eq!(yates.n, 805);
        assert_eq!(yates.n_cue, 47);
        assert_relative_eq!(yates.p_nocue, 601.0 / 758.0, epsilon = 1e-12);
        assert_relative_eq!(yates.p_cue, 41.0 / 47.0, epsilon = 1e-12);
        assert_relative_eq!(yates.test.statistic, 1.273451, epsilon = 1e-5);
        assert_relative_eq!(yates.test.p_value, 0.259120, epsilon = 1e-5);

        let plain = conditional_learning(&triplets, Correction::None).unwrap();
        assert_relative_eq!(plain.test.statistic, 1.730557, epsilon = 1e-5);
        assert_relative_eq!(plain.test.p_value, 0.188340, epsilon = 1e-5);
    }

    #[test]
    fn conditional_population_is_the_wrong_start_slice_of_the_triplets() {
        let from_triplets =
            conditional_learning(&extract_triplets(&triplet_reference_log()), Correction::Yates)
                .unwrap();
        let standalone =
            conditional_learning(&extract_triplets(&conditional_reference_log()), Correction::Yates)
                .unwrap();
        assert_eq!(from_triplets.table.counts, standalone.table.counts);
        assert_relative_eq!(
            from_triplets.test.statistic,
            standalone.test.statistic,
            epsilon = 1e-12
        );
    }

    #[test]
    fn group_population_reproduces_the_frozen_accuracies() {
        let log = group_reference_log();
        assert_eq!(log.len(), 2 * 29_353);
        let rows = derive_features(&log);
        let table = group_grade_comparison(&rows).unwrap();
        // one excluded row per student: the stratum-setting first serve
        assert_eq!(table.excluded, 29_353);

        let [below_plain, below_hint, above_plain, above_hint] = &table.cells;
        assert_eq!((below_plain.n, below_plain.corrects), (10_809, 5_740));
        assert_eq!((below_hint.n, below_hint.corrects), (2_797, 1_689));
        assert_eq!((above_plain.n, above_plain.corrects), (12_341, 11_095));
        assert_eq!((above_hint.n, above_hint.corrects), (3_406, 3_110));
        assert_relative_eq!(below_plain.accuracy, 0.531, epsilon = 5e-4);
        assert_relative_eq!(below_hint.accuracy, 0.604, epsilon = 5e-4);
        assert_relative_eq!(above_plain.accuracy, 0.899, epsilon = 5e-4);
        assert_relative_eq!(above_hint.accuracy, 0.913, epsilon = 5e-4);

        let [plain, hinted] = &table.overall;
        assert_eq!(plain.n, 23_150);
        assert_eq!(hinted.n, 6_203);
        assert_relative_eq!(plain.accuracy, 0.727, epsilon = 5e-4);
        assert_relative_eq!(hinted.accuracy, 0.774, epsilon = 5e-4);
    }

    #[test]
    fn power_rows_match_the_conditional_margins() {
        let rows = power_reference_rows();
        assert_eq!(rows.len(), 805);
        let nocue = rows.iter().filter(|r| r.cue == 0).count();
        let cue_learned = rows.iter().filter(|r| r.cue == 1 && r.outcome == 1).count();
        let nocue_learned = rows.iter().filter(|r| r.cue == 0 && r.outcome == 1).count();
        assert_eq!(nocue, 758);
        assert_eq!(nocue_learned, 601);
        assert_eq!(cue_learned, 41);
    }

    #[test]
    fn fixtures_write_and_reload() {
        let dir = tempfile::tempdir().unwrap();
        let paths = write_all(dir.path()).unwrap();
        assert_eq!(paths.len(), 4);
        for p in &paths {
            assert!(p.exists(), "{p:?} missing");
        }
        let reloaded =
            ResponseLog::read_jsonl(std::fs::File::open(&paths[0]).unwrap()).unwrap();
        assert_eq!(reloaded, triplet_reference_log());
        let outcome_rows =
            crate::power::read_outcomes_csv(std::fs::File::open(&paths[3]).unwrap()).unwrap();
        assert_eq!(outcome_rows, power_reference_rows());
    }
}
