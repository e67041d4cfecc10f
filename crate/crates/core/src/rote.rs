//! Attempt-curve analysis: separates answer recognition from genuine
//! learning.
//!
//! Responses are split by whether the keyed option had been displayed before
//! (`seen`) or not (`unseen`), and accuracy is tracked per attempt index. A
//! learner who only memorizes previously shown answers improves on the seen
//! curve while the unseen curve stays at the guessing floor; a learner who
//! studies the material lifts both. Each class also gets a small logistic
//! trend fit (intercept plus attempt index) to summarize its slope.

use crate::features::FeatureRow;
use crate::glm::{fit_logistic, FitConfig, GlmError, Term};
use crate::logstore::LogError;
use serde::{Deserialize, Serialize};
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RoteError {
    #[error("t_max must be at least 1")]
    BadTmax,
    #[error("no feature rows supplied")]
    EmptyInput,
    #[error(transparent)]
    Glm(#[from] GlmError),
    #[error(transparent)]
    Io(#[from] LogError),
}

/// Was the keyed option displayed to this student before in the session?
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeenClass {
    Seen,
    Unseen,
}

impl SeenClass {
    pub fn label(self) -> &'static str {
        match self {
            SeenClass::Seen => "seen",
            SeenClass::Unseen => "unseen",
        }
    }
}

/// Accuracy of one class at one attempt index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveCell {
    pub t: u32,
    pub class: SeenClass,
    pub n: u64,
    pub mean_grade: f64,
    /// Binomial standard error `sqrt(p (1 - p) / n)`.
    pub std_err: f64,
}

/// Logistic trend of one class: `logit(p) = intercept + slope * t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveFit {
    pub intercept: f64,
    pub slope: f64,
    pub intercept_se: f64,
    pub slope_se: f64,
    pub converged: bool,
    pub separation: bool,
    pub n: u64,
}

/// Attempt curves plus per-class trend fits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveTable {
    pub t_max: u32,
    pub cells: Vec<CurveCell>,
    /// `None` when the class has no rows with `t <= t_max`.
    pub seen_fit: Option<CurveFit>,
    pub unseen_fit: Option<CurveFit>,
}

fn class_of(row: &FeatureRow) -> SeenClass {
    if row.keyed_seen_before == 1 {
        SeenClass::Seen
    } else {
        SeenClass::Unseen
    }
}

fn trend_fit(rows: &[&FeatureRow]) -> Result<Option<CurveFit>, GlmError> {
    if rows.is_empty() {
        return Ok(None);
    }
    let owned: Vec<FeatureRow> = rows.iter().map(|r| (*r).clone()).collect();
    // with a single distinct attempt index the slope is unidentifiable
    // (attempt would be collinear with the intercept)
    let single_t = owned.iter().all(|r| r.t == owned[0].t);
    let terms: &[Term] =
        if single_t { &[Term::Intercept] } else { &[Term::Intercept, Term::Attempt] };
    let fit = fit_logistic::<f64>(&owned, terms, &FitConfig::default())?;
    Ok(Some(CurveFit {
        intercept: fit.coefficient("intercept").unwrap_or(f64::NAN),
        slope: fit.coefficient("attempt").unwrap_or(f64::NAN),
        intercept_se: fit.std_error("intercept").unwrap_or(f64::NAN),
        slope_se: fit.std_error("attempt").unwrap_or(f64::NAN),
        converged: fit.converged,
        separation: fit.separation_flag,
        n: owned.len() as u64,
    }))
}

/// Build the per-attempt accuracy table for `t <= t_max` and fit the
/// per-class trends.
pub fn attempt_curves(rows: &[FeatureRow], t_max: u32) -> Result<CurveTable, RoteError> {
    if t_max < 1 {
        return Err(RoteError::BadTmax);
    }
    if rows.is_empty() {
        return Err(RoteError::EmptyInput);
    }
    let in_range: Vec<&FeatureRow> = rows.iter().filter(|r| r.t <= t_max).collect();

    let mut cells = Vec::new();
    for class in [SeenClass::Seen, SeenClass::Unseen] {
        for t in 1..=t_max {
            let group: Vec<&&FeatureRow> =
                in_range.iter().filter(|r| r.t == t && class_of(r) == class).collect();
            if group.is_empty() {
                continue;
            }
            let n = group.len() as u64;
            let mean = group.iter().map(|r| f64::from(r.grade)).sum::<f64>() / n as f64;
            cells.push(CurveCell {
                t,
                class,
                n,
                mean_grade: mean,
                std_err: (mean * (1.0 - mean) / n as f64).sqrt(),
            });
        }
    }

    let seen_rows: Vec<&FeatureRow> =
        in_range.iter().copied().filter(|r| class_of(r) == SeenClass::Seen).collect();
    let unseen_rows: Vec<&FeatureRow> =
        in_range.iter().copied().filter(|r| class_of(r) == SeenClass::Unseen).collect();
    Ok(CurveTable {
        t_max,
        cells,
        seen_fit: trend_fit(&seen_rows)?,
        unseen_fit: trend_fit(&unseen_rows)?,
    })
}

/// Write the curve cells as CSV (`t,class,n,mean_grade,std_err`).
pub fn write_curves_csv<W: Write>(table: &CurveTable, writer: W) -> Result<(), RoteError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "class", "n", "mean_grade", "std_err"]).map_err(LogError::from)?;
    for c in &table.cells {
        w.write_record([
            c.t.to_string(),
            c.class.label().to_string(),
            c.n.to_string(),
            c.mean_grade.to_string(),
            c.std_err.to_string(),
        ])
        .map_err(LogError::from)?;
    }
    w.flush().map_err(|e| LogError::from(std::io::Error::from(e)))?;
    Ok(())
}
