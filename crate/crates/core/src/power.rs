//! Monte Carlo power analysis for the conditional-learning comparison.
//!
//! The population is a set of `(cue, outcome)` rows — one per triplet that
//! started with a wrong answer. Power at sample size `n` is estimated by
//! resampling `n` rows with replacement, testing the resulting 2×2 table,
//! and counting rejections at level `alpha`. Resamples in which a margin is
//! empty (no cue rows drawn, or all outcomes identical) carry no test; they
//! are tallied as `degenerate` and never count as rejections.
//!
//! [`required_n`] inverts the power curve: powers over a geometric grid are
//! smoothed by isotonic (PAVA) regression — power is monotone in `n`, the
//! Monte Carlo noise is not — and the first crossing of the target is then
//! sharpened by bisection, re-smoothing after every new evaluation.

use crate::features::Triplet;
use crate::rng::{derive_seed, rng_from_seed};
use crate::tables::{chi_square_2x2, Correction, TableError};
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PowerError {
    #[error("power analysis needs a non-empty outcome population")]
    EmptyInput,
    #[error("invalid power config: {0}")]
    BadConfig(String),
    #[error("target power {target} not reached by n = {max_n} (isotonic power {power_at_max:.3})")]
    NotReachable { target: f64, max_n: u32, power_at_max: f64 },
    #[error(transparent)]
    Table(#[from] TableError),
}

/// One resamplable observation: cue status and binary outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeRow {
    pub cue: u8,
    pub outcome: u8,
}

/// Project triplets onto the conditional-learning population: triplets with
/// a wrong first answer, outcome = "third answer correct".
pub fn outcomes_from_triplets(triplets: &[Triplet]) -> Vec<OutcomeRow> {
    triplets
        .iter()
        .filter(|t| t.grades[0] == 0)
        .map(|t| OutcomeRow { cue: t.cue, outcome: u8::from(t.learning == 1) })
        .collect()
}

/// Write outcome rows as CSV (`cue,outcome`).
pub fn write_outcomes_csv<W: std::io::Write>(
    rows: &[OutcomeRow],
    writer: W,
) -> Result<(), crate::logstore::LogError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["cue", "outcome"])?;
    for r in rows {
        w.write_record([r.cue.to_string(), r.outcome.to_string()])?;
    }
    w.flush().map_err(std::io::Error::from)?;
    Ok(())
}

/// Read outcome rows from CSV with `cue` and `outcome` columns (0/1 each).
pub fn read_outcomes_csv<R: std::io::Read>(
    reader: R,
) -> Result<Vec<OutcomeRow>, crate::logstore::LogError> {
    use crate::logstore::LogError;
    let mut csv_reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = csv_reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| LogError::MissingColumn { column: name.to_string() })
    };
    let c_cue = find("cue")?;
    let c_outcome = find("outcome")?;
    let mut rows = Vec::new();
    for (i, record) in csv_reader.records().enumerate() {
        let record = record?;
        let bit = |idx: usize, column: &str| -> Result<u8, LogError> {
            let raw = record.get(idx).unwrap_or("");
            match raw {
                "0" => Ok(0),
                "1" => Ok(1),
                other => Err(LogError::TypeMismatch {
                    row: i + 1,
                    column: column.to_string(),
                    reason: format!("must be 0 or 1, got {other:?}"),
                }),
            }
        };
        rows.push(OutcomeRow { cue: bit(c_cue, "cue")?, outcome: bit(c_outcome, "outcome")? });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PowerConfig {
    pub alpha: f64,
    pub n_sims: u32,
    pub correction: Correction,
    pub seed: u64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self { alpha: 0.05, n_sims: 2000, correction: Correction::Yates, seed: 0 }
    }
}

impl PowerConfig {
    fn validate(&self) -> Result<(), PowerError> {
        if !(0.0 < self.alpha && self.alpha <= 1.0) {
            return Err(PowerError::BadConfig(format!("alpha must be in (0, 1], got {}", self.alpha)));
        }
        if self.n_sims == 0 {
            return Err(PowerError::BadConfig("n_sims must be positive".into()));
        }
        Ok(())
    }
}

/// Estimated rejection rate at one sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerEstimate {
    pub n: u32,
    /// `rejected / n_sims`.
    pub power: f64,
    pub rejected: u32,
    /// Resamples with an empty table margin; counted as non-rejections.
    pub degenerate: u32,
    pub n_sims: u32,
}

impl PowerEstimate {
    /// Binomial Monte Carlo standard error of `power`.
    pub fn mc_se(&self) -> f64 {
        (self.power * (1.0 - self.power) / f64::from(self.n_sims)).sqrt()
    }
}

/// Write a power curve as plot-data CSV (`n,power,se`).
pub fn write_curve_csv<W: std::io::Write>(
    points: &[PowerEstimate],
    writer: W,
) -> Result<(), crate::logstore::LogError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["n", "power", "se"])?;
    for p in points {
        w.write_record([p.n.to_string(), p.power.to_string(), p.mc_se().to_string()])?;
    }
    w.flush().map_err(std::io::Error::from)?;
    Ok(())
}

/// Estimate power at sample size `n` by resampling.
///
/// Each `n` draws from its own RNG stream derived from `config.seed`, so a
/// curve point does not depend on which other points were evaluated.
pub fn estimate_power(
    rows: &[OutcomeRow],
    n: u32,
    config: &PowerConfig,
) -> Result<PowerEstimate, PowerError> {
    config.validate()?;
    if rows.is_empty() {
        return Err(PowerError::EmptyInput);
    }
    if n == 0 {
        return Err(PowerError::BadConfig("sample size must be positive".into()));
    }
    let mut rng = rng_from_seed(derive_seed(config.seed, &["power", &n.to_string()]));
    let mut rejected = 0u32;
    let mut degenerate = 0u32;
    for _ in 0..config.n_sims {
        // counts[cue][outcome == 0]
        let mut counts = [[0u64; 2]; 2];
        for _ in 0..n {
            let row = rows[rng.random_range(0..rows.len())];
            counts[usize::from(row.cue == 1)][usize::from(row.outcome == 0)] += 1;
        }
        match chi_square_2x2::<f64>(
            counts[0][0],
            counts[0][1],
            counts[1][0],
            counts[1][1],
            config.correction,
        ) {
            Ok(test) => {
                if test.p_value <= config.alpha {
                    rejected += 1;
                }
            }
            Err(TableError::ZeroExpected { .. }) => degenerate += 1,
            Err(other) => return Err(other.into()),
        }
    }
    Ok(PowerEstimate {
        n,
        power: f64::from(rejected) / f64::from(config.n_sims),
        rejected,
        degenerate,
        n_sims: config.n_sims,
    })
}

/// Evaluate the power curve at the given sample sizes.
pub fn estimate_curve(
    rows: &[OutcomeRow],
    ns: &[u32],
    config: &PowerConfig,
) -> Result<Vec<PowerEstimate>, PowerError> {
    ns.iter().map(|&n| estimate_power(rows, n, config)).collect()
}

/// Weighted isotonic regression (non-decreasing) by pool-adjacent-violators.
pub fn isotonic_non_decreasing(values: &[f64], weights: &[f64]) -> Vec<f64> {
    assert_eq!(values.len(), weights.len());
    // blocks of (weighted mean, total weight, count)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() >= 2 {
            let last = blocks[blocks.len() - 1];
            let prev = blocks[blocks.len() - 2];
            if prev.0 <= last.0 {
                break;
            }
            blocks.pop();
            blocks.pop();
            let w_sum = prev.1 + last.1;
            blocks.push(((prev.0 * prev.1 + last.0 * last.1) / w_sum, w_sum, prev.2 + last.2));
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for (mean, _, count) in blocks {
        out.extend(std::iter::repeat(mean).take(count));
    }
    out
}

/// Result of inverting the power curve at a target power.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RequiredN {
    pub n: u32,
    pub target_power: f64,
    /// Every sample size evaluated along the way, sorted by `n`.
    pub evaluations: Vec<PowerEstimate>,
}

const GRID_START: u32 = 50;
const GRID_FACTOR: f64 = 1.3;
const CAP_MULTIPLIER: u32 = 10;
const MAX_REFINEMENTS: usize = 40;

/// Smallest sample size whose isotonic-smoothed power reaches
/// `target_power`.
///
/// The search cannot resolve below the grid start of 50 and stops refining
/// once the bracketing interval shrinks to 2% or 10 samples.
pub fn required_n(
    rows: &[OutcomeRow],
    target_power: f64,
    config: &PowerConfig,
) -> Result<RequiredN, PowerError> {
    config.validate()?;
    if rows.is_empty() {
        return Err(PowerError::EmptyInput);
    }
    if !(0.0 < target_power && target_power < 1.0) {
        return Err(PowerError::BadConfig(format!(
            "target power must be in (0, 1), got {target_power}"
        )));
    }
    let cap = (rows.len() as u32).saturating_mul(CAP_MULTIPLIER).max(GRID_START);

    let mut grid = Vec::new();
    let mut n = GRID_START.min(cap);
    loop {
        grid.push(n);
        if n >= cap {
            break;
        }
        n = (((f64::from(n)) * GRID_FACTOR).ceil() as u32).min(cap);
    }
    let mut evals = estimate_curve(rows, &grid, config)?;

    for _ in 0..MAX_REFINEMENTS {
        evals.sort_by_key(|e| e.n);
        evals.dedup_by_key(|e| e.n);
        let powers: Vec<f64> = evals.iter().map(|e| e.power).collect();
        let weights: Vec<f64> = evals.iter().map(|e| f64::from(e.n_sims)).collect();
        let iso = isotonic_non_decreasing(&powers, &weights);

        let Some(hit) = iso.iter().position(|&p| p >= target_power) else {
            return Err(PowerError::NotReachable {
                target: target_power,
                max_n: cap,
                power_at_max: iso.last().copied().unwrap_or(0.0),
            });
        };
        let hi = evals[hit].n;
        if hit == 0 {
            // already satisfied at the smallest evaluated size
            return Ok(RequiredN { n: hi, target_power, evaluations: evals });
        }
        let lo = evals[hit - 1].n;
        if hi - lo <= 10 || f64::from(hi) <= f64::from(lo) * 1.02 {
            return Ok(RequiredN { n: hi, target_power, evaluations: evals });
        }
        let mid = lo + (hi - lo) / 2;
        evals.push(estimate_power(rows, mid, config)?);
    }

    // refinement budget exhausted: report the current bracket's upper end
    evals.sort_by_key(|e| e.n);
    evals.dedup_by_key(|e| e.n);
    let powers: Vec<f64> = evals.iter().map(|e| e.power).collect();
    let weights: Vec<f64> = evals.iter().map(|e| f64::from(e.n_sims)).collect();
    let iso = isotonic_non_decreasing(&powers, &weights);
    let hit = iso
        .iter()
        .position(|&p| p >= target_power)
        .expect("crossing existed in every refinement round");
    Ok(RequiredN { n: evals[hit].n, target_power, evaluations: evals })
}
