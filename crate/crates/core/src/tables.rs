//! Contingency tables and chi-square tests.
//!
//! The crate analyzes cue/outcome counts through labeled r×c tables. P-values
//! come from [`crate::special::chi_square_sf`], i.e. the regularized incomplete
//! gamma function. For 2×2 tables the Yates continuity correction is available
//! (and is the default upstream because sparse cue cells are the norm in this
//! domain); the uncorrected statistic is kept because it is exactly the square
//! of the two-proportion z statistic, a property the test-suite pins down.

use crate::num::Float;
use crate::special::chi_square_sf;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("contingency table needs at least 2 rows and 2 columns, got {rows}x{cols}")]
    TooSmall { rows: usize, cols: usize },
    #[error("table shape is ragged or label counts do not match the counts grid")]
    Shape,
    #[error("expected count is zero at row {row}, column {col} (a margin is empty)")]
    ZeroExpected { row: usize, col: usize },
    #[error("Yates correction is defined for 2x2 tables only, got {rows}x{cols}")]
    CorrectionShape { rows: usize, cols: usize },
    #[error("probability vector must match the observed bins and sum to 1")]
    BadProbabilities,
}

/// Labeled r×c table of counts with derived margins.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    /// `counts[r][c]`, row-major.
    pub counts: Vec<Vec<u64>>,
}

impl ContingencyTable {
    pub fn new(
        row_labels: Vec<String>,
        col_labels: Vec<String>,
        counts: Vec<Vec<u64>>,
    ) -> Result<Self, TableError> {
        if counts.len() != row_labels.len() || counts.iter().any(|r| r.len() != col_labels.len()) {
            return Err(TableError::Shape);
        }
        Ok(Self { row_labels, col_labels, counts })
    }

    pub fn n_rows(&self) -> usize {
        self.row_labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_totals(&self) -> Vec<u64> {
        (0..self.n_cols()).map(|c| self.counts.iter().map(|r| r[c]).sum()).collect()
    }

    pub fn grand_total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

/// Continuity-correction mode for 2×2 chi-square tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correction {
    None,
    Yates,
}

/// Outcome of a chi-square test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestResult<F> {
    pub statistic: F,
    pub df: u32,
    pub p_value: F,
    pub correction: Correction,
}

/// Pearson chi-square test of independence on an r×c table.
///
/// With [`Correction::Yates`] (2×2 only) each cell contributes
/// `(max(|O-E| - 1/2, 0))² / E`. The p-value is the chi-square survival
/// function at `(r-1)(c-1)` degrees of freedom.
pub fn chi_square_test<F: Float>(
    table: &ContingencyTable,
    correction: Correction,
) -> Result<TestResult<F>, TableError> {
    let (r, c) = (table.n_rows(), table.n_cols());
    if r < 2 || c < 2 {
        return Err(TableError::TooSmall { rows: r, cols: c });
    }
    if correction == Correction::Yates && (r != 2 || c != 2) {
        return Err(TableError::CorrectionShape { rows: r, cols: c });
    }
    let row_tot = table.row_totals();
    let col_tot = table.col_totals();
    let grand = F::of_count(table.grand_total());

    let mut stat = F::zero();
    for i in 0..r {
        for j in 0..c {
            let expected = F::of_count(row_tot[i]) * F::of_count(col_tot[j]) / grand;
            if expected <= F::zero() {
                return Err(TableError::ZeroExpected { row: i, col: j });
            }
            let mut diff = (F::of_count(table.counts[i][j]) - expected).abs();
            if correction == Correction::Yates {
                diff = (diff - F::of(0.5)).max(F::zero());
            }
            stat = stat + diff * diff / expected;
        }
    }
    let df = ((r - 1) * (c - 1)) as u32;
    Ok(TestResult { statistic: stat, df, p_value: chi_square_sf(stat, df), correction })
}

/// Fast path for 2×2 tables given as raw cells
/// `[[a, b], [c, d]]` (row = group, column = outcome). Used by the Monte Carlo
/// power loop, where building labeled tables per replicate would be waste.
pub fn chi_square_2x2<F: Float>(
    a: u64,
    b: u64,
    c: u64,
    d: u64,
    correction: Correction,
) -> Result<TestResult<F>, TableError> {
    let (r1, r2, c1, c2) = (a + b, c + d, a + c, b + d);
    if r1 == 0 || r2 == 0 {
        let row = if r1 == 0 { 0 } else { 1 };
        return Err(TableError::ZeroExpected { row, col: 0 });
    }
    if c1 == 0 || c2 == 0 {
        let col = if c1 == 0 { 0 } else { 1 };
        return Err(TableError::ZeroExpected { row: 0, col });
    }
    let n = F::of_count(r1 + r2);
    let (fa, fb, fc, fd) =
        (F::of_count(a), F::of_count(b), F::of_count(c), F::of_count(d));
    // |ad - bc| formulation; algebraically identical to the cellwise sum:
    // every |O - E| equals |ad - bc| / n, and sum(1/E) = n^2 / (r1 r2 c1 c2).
    let mut diff = (fa * fd - fb * fc).abs() / n;
    if correction == Correction::Yates {
        diff = (diff - F::of(0.5)).max(F::zero());
    }
    let denom =
        F::of_count(r1) * F::of_count(r2) * F::of_count(c1) * F::of_count(c2);
    let stat = n * n * n * diff * diff / denom;
    Ok(TestResult { statistic: stat, df: 1, p_value: chi_square_sf(stat, 1), correction })
}

/// Chi-square goodness-of-fit test of observed bin counts against a discrete
/// probability vector. Degrees of freedom: `bins - 1`.
pub fn chi_square_gof<F: Float>(
    observed: &[u64],
    probs: &[F],
) -> Result<TestResult<F>, TableError> {
    if observed.len() != probs.len() || observed.len() < 2 {
        return Err(TableError::BadProbabilities);
    }
    let sum_p: F = probs.iter().copied().sum();
    if (sum_p - F::one()).abs() > F::of(1e-9) || probs.iter().any(|&p| p < F::zero()) {
        return Err(TableError::BadProbabilities);
    }
    let n = F::of_count(observed.iter().sum());
    let mut stat = F::zero();
    for (i, (&o, &p)) in observed.iter().zip(probs.iter()).enumerate() {
        let expected = n * p;
        if expected <= F::zero() {
            return Err(TableError::ZeroExpected { row: 0, col: i });
        }
        let diff = F::of_count(o) - expected;
        stat = stat + diff * diff / expected;
    }
    let df = (observed.len() - 1) as u32;
    Ok(TestResult { statistic: stat, df, p_value: chi_square_sf(stat, df), correction: Correction::None })
}
