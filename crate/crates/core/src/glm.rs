//! Penalized logistic regression on derived feature rows.
//!
//! The design matrix is held sparsely (per-row `(column, value)` pairs) since
//! categorical blocks such as per-student intercepts dominate the column
//! count. Fitting maximizes the ridge-penalized log-likelihood
//!
//! ```text
//! ll(beta) - (lambda / 2) * sum_{j penalized} beta_j^2
//! ```
//!
//! by Newton/IRLS with step-halving, so the penalized deviance decreases at
//! every accepted step. Only columns marked penalized (the per-student block)
//! feel the ridge; fixed effects stay unpenalized. Standard errors come from
//! the penalized observed information at the optimum.

use crate::features::FeatureRow;
use crate::linalg::{LinalgError, SymMatrix};
use crate::num::Float;
use crate::special::{ln_1p_exp, sigmoid};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GlmError {
    #[error("design has no rows or no columns")]
    EmptyDesign,
    #[error("term {0:?} requires every row to carry a pair_id")]
    MissingPairId(&'static str),
    #[error("design column {column:?} is collinear (rank-deficient normal equations)")]
    RankDeficient { column: String },
    #[error("invalid fit config: {0}")]
    BadConfig(String),
}

/// Model terms assembled into design columns.
///
/// Categorical blocks order their levels lexicographically. `Topic` and
/// `Pair` drop the first level as the reference; `Student` keeps every level
/// and is the (only) ridge-penalized block, which is what makes the full-rank
/// parameterization identifiable. `PairHint` is the pair-by-hint interaction,
/// one column per pair, carrying the hint indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    Intercept,
    /// Keyed option displayed earlier in this student/set session.
    SeenBefore,
    /// Attempt index range-scaled to [0, 1] over the supplied rows.
    AttemptScaled,
    /// Raw 1-based attempt index.
    Attempt,
    PropDistractorsSeen,
    /// Smoothed per-item difficulty recomputed from the supplied rows.
    Difficulty,
    /// Number of non-keyed options shown.
    NumDistractors,
    /// Drill-set fixed effects (reference = first set).
    Topic,
    /// Per-student effects, ridge-penalized, no reference level.
    Student,
    /// Hint indicator main effect.
    Hint,
    /// Pair fixed effects (reference = first pair).
    Pair,
    /// Pair-specific hint effects, no reference level.
    PairHint,
}

/// A sparse logistic design: outcome, rows of `(column, value)` pairs, and
/// per-column penalization flags.
#[derive(Debug, Clone)]
pub struct Design<F> {
    pub col_names: Vec<String>,
    pub rows: Vec<Vec<(u32, F)>>,
    pub y: Vec<F>,
    pub penalized: Vec<bool>,
    /// Candidate columns removed because no row gave them a nonzero value.
    pub dropped: Vec<String>,
}

/// Build a design from feature rows. All-zero candidate columns are dropped
/// (recorded in [`Design::dropped`]) so the normal equations stay full rank.
pub fn build_design<F: Float>(rows: &[FeatureRow], terms: &[Term]) -> Result<Design<F>, GlmError> {
    if rows.is_empty() || terms.is_empty() {
        return Err(GlmError::EmptyDesign);
    }
    let needs_pair = terms.iter().any(|t| matches!(t, Term::Pair | Term::PairHint));
    if needs_pair && rows.iter().any(|r| r.pair_id.is_none()) {
        let name = if terms.contains(&Term::Pair) { "pair" } else { "pair_hint" };
        return Err(GlmError::MissingPairId(name));
    }

    let t_max = rows.iter().map(|r| r.t).max().unwrap_or(1);
    let mut item_stats: HashMap<&str, (u64, u64)> = HashMap::new();
    if terms.contains(&Term::Difficulty) {
        for r in rows {
            let e = item_stats.entry(r.item_id.as_str()).or_insert((0, 0));
            e.0 += 1;
            e.1 += u64::from(r.grade);
        }
    }

    let mut col_names: Vec<String> = Vec::new();
    let mut penalized: Vec<bool> = Vec::new();
    // per categorical term: level -> column index
    let mut topic_cols: HashMap<&str, u32> = HashMap::new();
    let mut student_cols: HashMap<&str, u32> = HashMap::new();
    let mut pair_cols: HashMap<&str, u32> = HashMap::new();
    let mut pair_hint_cols: HashMap<&str, u32> = HashMap::new();
    let mut scalar_cols: HashMap<Term, u32> = HashMap::new();

    for term in terms {
        match term {
            Term::Topic => {
                let levels: BTreeSet<&str> = rows.iter().map(|r| r.drillset_id.as_str()).collect();
                for level in levels.iter().skip(1) {
                    topic_cols.insert(level, col_names.len() as u32);
                    col_names.push(format!("topic:{level}"));
                    penalized.push(false);
                }
            }
            Term::Student => {
                let levels: BTreeSet<&str> = rows.iter().map(|r| r.student_id.as_str()).collect();
                for level in levels {
                    student_cols.insert(level, col_names.len() as u32);
                    col_names.push(format!("student:{level}"));
                    penalized.push(true);
                }
            }
            Term::Pair => {
                let levels: BTreeSet<&str> =
                    rows.iter().filter_map(|r| r.pair_id.as_deref()).collect();
                for level in levels.iter().skip(1) {
                    pair_cols.insert(level, col_names.len() as u32);
                    col_names.push(format!("pair:{level}"));
                    penalized.push(false);
                }
            }
            Term::PairHint => {
                let levels: BTreeSet<&str> =
                    rows.iter().filter_map(|r| r.pair_id.as_deref()).collect();
                for level in levels {
                    pair_hint_cols.insert(level, col_names.len() as u32);
                    col_names.push(format!("pair_hint:{level}"));
                    penalized.push(false);
                }
            }
            scalar => {
                let name = match scalar {
                    Term::Intercept => "intercept",
                    Term::SeenBefore => "seen_before",
                    Term::AttemptScaled => "attempt_scaled",
                    Term::Attempt => "attempt",
                    Term::PropDistractorsSeen => "prop_distractors_seen",
                    Term::Difficulty => "difficulty",
                    Term::NumDistractors => "num_distractors",
                    Term::Hint => "hint",
                    _ => unreachable!(),
                };
                scalar_cols.insert(*scalar, col_names.len() as u32);
                col_names.push(name.to_string());
                penalized.push(false);
            }
        }
    }

    let mut design_rows: Vec<Vec<(u32, F)>> = Vec::with_capacity(rows.len());
    let mut y = Vec::with_capacity(rows.len());
    for r in rows {
        let mut entries: Vec<(u32, F)> = Vec::new();
        for term in terms {
            match term {
                Term::Intercept => entries.push((scalar_cols[term], F::one())),
                Term::SeenBefore => {
                    if r.keyed_seen_before == 1 {
                        entries.push((scalar_cols[term], F::one()));
                    }
                }
                Term::AttemptScaled => {
                    if t_max > 1 && r.t > 1 {
                        let v = F::of_count(u64::from(r.t - 1)) / F::of_count(u64::from(t_max - 1));
                        entries.push((scalar_cols[term], v));
                    }
                }
                Term::Attempt => entries.push((scalar_cols[term], F::of_count(u64::from(r.t)))),
                Term::PropDistractorsSeen => {
                    if r.prop_distractors_seen != 0.0 {
                        entries.push((scalar_cols[term], F::of(r.prop_distractors_seen)));
                    }
                }
                Term::Difficulty => {
                    let (serves, corrects) = item_stats[r.item_id.as_str()];
                    let d = 1.0 - (corrects + 1) as f64 / (serves + 2) as f64;
                    entries.push((scalar_cols[term], F::of(d)));
                }
                Term::NumDistractors => {
                    let k = r.shown_options.len().saturating_sub(1) as u64;
                    entries.push((scalar_cols[term], F::of_count(k)));
                }
                Term::Hint => {
                    if r.has_hint == 1 {
                        entries.push((scalar_cols[term], F::one()));
                    }
                }
                Term::Topic => {
                    if let Some(&c) = topic_cols.get(r.drillset_id.as_str()) {
                        entries.push((c, F::one()));
                    }
                }
                Term::Student => {
                    entries.push((student_cols[r.student_id.as_str()], F::one()));
                }
                Term::Pair => {
                    if let Some(&c) = pair_cols.get(r.pair_id.as_deref().unwrap()) {
                        entries.push((c, F::one()));
                    }
                }
                Term::PairHint => {
                    if r.has_hint == 1 {
                        entries.push((pair_hint_cols[r.pair_id.as_deref().unwrap()], F::one()));
                    }
                }
            }
        }
        entries.sort_unstable_by_key(|&(c, _)| c);
        design_rows.push(entries);
        y.push(F::of_count(u64::from(r.grade)));
    }

    // drop all-zero candidate columns and compact the indices
    let p = col_names.len();
    let mut used = vec![false; p];
    for row in &design_rows {
        for &(c, v) in row {
            if v != F::zero() {
                used[c as usize] = true;
            }
        }
    }
    let mut remap = vec![u32::MAX; p];
    let mut kept_names = Vec::new();
    let mut kept_penalized = Vec::new();
    let mut dropped = Vec::new();
    for j in 0..p {
        if used[j] {
            remap[j] = kept_names.len() as u32;
            kept_names.push(col_names[j].clone());
            kept_penalized.push(penalized[j]);
        } else {
            dropped.push(col_names[j].clone());
        }
    }
    if kept_names.is_empty() {
        return Err(GlmError::EmptyDesign);
    }
    for row in &mut design_rows {
        row.retain(|&(c, _)| used[c as usize]);
        for entry in row.iter_mut() {
            entry.0 = remap[entry.0 as usize];
        }
    }

    Ok(Design { col_names: kept_names, rows: design_rows, y, penalized: kept_penalized, dropped })
}

/// IRLS controls. Convergence requires both a relative penalized-deviance
/// change below `tol_deviance` and a gradient max-norm below `tol_gradient`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitConfig {
    pub ridge_lambda: f64,
    pub max_iter: usize,
    pub tol_deviance: f64,
    pub tol_gradient: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { ridge_lambda: 0.0, max_iter: 100, tol_deviance: 1e-10, tol_gradient: 1e-8 }
    }
}

/// Coefficient magnitude beyond which a fit is flagged as separated.
pub const SEPARATION_BOUND: f64 = 15.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult<F> {
    pub coef_names: Vec<String>,
    pub estimates: Vec<F>,
    /// From the penalized observed information; NaN if it is singular at the
    /// optimum.
    pub std_errors: Vec<F>,
    /// Unpenalized residual deviance at the final coefficients.
    pub deviance: F,
    /// Deviance of the intercept-only model (closed form).
    pub null_deviance: F,
    pub iterations: usize,
    pub converged: bool,
    /// Heuristic: some coefficient exceeded [`SEPARATION_BOUND`] in
    /// magnitude, typical of (quasi-)separated data.
    pub separation_flag: bool,
    pub ridge_lambda: f64,
    /// Penalized deviance after each accepted Newton step (monotone
    /// non-increasing), starting from the null iterate.
    pub deviance_trace: Vec<F>,
    pub dropped_columns: Vec<String>,
}

impl<F: Float> FitResult<F> {
    pub fn coefficient(&self, name: &str) -> Option<F> {
        self.coef_names.iter().position(|n| n == name).map(|i| self.estimates[i])
    }

    pub fn std_error(&self, name: &str) -> Option<F> {
        self.coef_names.iter().position(|n| n == name).map(|i| self.std_errors[i])
    }
}

fn eta_of<F: Float>(design: &Design<F>, beta: &[F]) -> Vec<F> {
    design
        .rows
        .iter()
        .map(|row| row.iter().map(|&(c, v)| v * beta[c as usize]).sum())
        .collect()
}

/// Unpenalized binomial deviance `-2 * ll` evaluated stably from the linear
/// predictor.
pub fn deviance_from_eta<F: Float>(eta: &[F], y: &[F]) -> F {
    let two = F::of(2.0);
    eta.iter().zip(y).map(|(&e, &yi)| two * (ln_1p_exp(e) - yi * e)).sum()
}

/// Ridge-penalized deviance: deviance plus `lambda * sum beta_pen^2`
/// (twice the penalty in the objective, matching the -2-log-likelihood
/// scale).
pub fn penalized_deviance<F: Float>(design: &Design<F>, beta: &[F], lambda: F) -> F {
    let eta = eta_of(design, beta);
    let penalty: F = design
        .penalized
        .iter()
        .zip(beta)
        .filter(|(p, _)| **p)
        .map(|(_, &b)| b * b)
        .sum();
    deviance_from_eta(&eta, &design.y) + lambda * penalty
}

/// Gradient of the penalized log-likelihood, `X'(y - mu) - lambda * beta_pen`.
pub fn score<F: Float>(design: &Design<F>, beta: &[F], lambda: F) -> Vec<F> {
    let p = design.col_names.len();
    let mut grad = vec![F::zero(); p];
    let eta = eta_of(design, beta);
    for (row, (&e, &yi)) in design.rows.iter().zip(eta.iter().zip(&design.y)) {
        let resid = yi - sigmoid(e);
        for &(c, v) in row {
            grad[c as usize] = grad[c as usize] + v * resid;
        }
    }
    for j in 0..p {
        if design.penalized[j] {
            grad[j] = grad[j] - lambda * beta[j];
        }
    }
    grad
}

/// Fit a logistic model to feature rows: build the design, then run IRLS.
pub fn fit_logistic<F: Float>(
    rows: &[FeatureRow],
    terms: &[Term],
    config: &FitConfig,
) -> Result<FitResult<F>, GlmError> {
    let design = build_design(rows, terms)?;
    fit_design(&design, config)
}

/// Run penalized IRLS on a prepared design.
pub fn fit_design<F: Float>(design: &Design<F>, config: &FitConfig) -> Result<FitResult<F>, GlmError> {
    let p = design.col_names.len();
    let n = design.rows.len();
    if n == 0 || p == 0 {
        return Err(GlmError::EmptyDesign);
    }
    if design.y.len() != n || design.penalized.len() != p {
        return Err(GlmError::BadConfig("design arrays disagree on dimensions".into()));
    }
    if config.ridge_lambda < 0.0 {
        return Err(GlmError::BadConfig(format!(
            "ridge_lambda must be non-negative, got {}",
            config.ridge_lambda
        )));
    }
    let lambda = F::of(config.ridge_lambda);
    // Weight floor keeps the normal equations positive definite when fitted
    // probabilities saturate (mu near 0 or 1).
    let w_floor = F::of(1e-10);

    let mut beta = vec![F::zero(); p];
    let mut dev_pen = penalized_deviance(design, &beta, lambda);
    let mut trace = vec![dev_pen];
    let mut rel_change = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..config.max_iter {
        let eta = eta_of(design, &beta);
        let mut grad = vec![F::zero(); p];
        let mut info = SymMatrix::<F>::zeros(p);
        for (row, (&e, &yi)) in design.rows.iter().zip(eta.iter().zip(&design.y)) {
            let mu = sigmoid(e);
            let w = (mu * (F::one() - mu)).max(w_floor);
            let resid = yi - mu;
            for &(c, v) in row {
                grad[c as usize] = grad[c as usize] + v * resid;
            }
            info.add_scaled_outer(row, w);
        }
        for j in 0..p {
            if design.penalized[j] {
                grad[j] = grad[j] - lambda * beta[j];
                info.add_diag(j, lambda);
            }
        }

        let max_grad = grad.iter().map(|g| g.abs().to64()).fold(0.0, f64::max);
        if rel_change < config.tol_deviance && max_grad < config.tol_gradient {
            converged = true;
            break;
        }

        let chol = info.cholesky().map_err(|e| match e {
            LinalgError::RankDeficient { col } => {
                GlmError::RankDeficient { column: design.col_names[col].clone() }
            }
        })?;
        let delta = chol.solve(&grad);
        iterations += 1;

        // step-halving: accept the first candidate that does not increase the
        // penalized deviance (up to roundoff)
        let slack = F::of(1e-12) * (F::one() + dev_pen.abs());
        let mut step = F::one();
        let mut accepted = false;
        for _ in 0..40 {
            let cand: Vec<F> =
                beta.iter().zip(&delta).map(|(&b, &d)| b + step * d).collect();
            let cand_dev = penalized_deviance(design, &cand, lambda);
            if cand_dev <= dev_pen + slack {
                rel_change = (dev_pen - cand_dev).abs().to64() / dev_pen.abs().to64().max(1.0);
                beta = cand;
                dev_pen = cand_dev;
                trace.push(dev_pen);
                accepted = true;
                break;
            }
            step = step * F::of(0.5);
        }
        if !accepted {
            // no direction of improvement left at this numerical scale
            rel_change = 0.0;
        }
    }

    if !converged {
        // the loop may have exhausted max_iter right after meeting both
        // criteria; check once more at the final iterate
        let grad = score(design, &beta, lambda);
        let max_grad = grad.iter().map(|g| g.abs().to64()).fold(0.0, f64::max);
        converged = rel_change < config.tol_deviance && max_grad < config.tol_gradient;
    }

    let separation_flag = beta.iter().any(|b| b.abs().to64() > SEPARATION_BOUND);

    // standard errors from the penalized observed information at the optimum
    let eta = eta_of(design, &beta);
    let mut info = SymMatrix::<F>::zeros(p);
    for (row, &e) in design.rows.iter().zip(&eta) {
        let mu = sigmoid(e);
        info.add_scaled_outer(row, (mu * (F::one() - mu)).max(w_floor));
    }
    for j in 0..p {
        if design.penalized[j] {
            info.add_diag(j, lambda);
        }
    }
    let std_errors = match info.cholesky() {
        Ok(chol) => chol.inverse_diag().into_iter().map(|v| v.sqrt()).collect(),
        Err(_) => vec![F::nan(); p],
    };

    let deviance = deviance_from_eta(&eta, &design.y);
    let n_f = F::of_count(n as u64);
    let ones: F = design.y.iter().copied().sum();
    let p_bar = ones / n_f;
    let null_deviance = if p_bar <= F::zero() || p_bar >= F::one() {
        F::zero()
    } else {
        -F::of(2.0) * (ones * p_bar.ln() + (n_f - ones) * (F::one() - p_bar).ln())
    };

    Ok(FitResult {
        coef_names: design.col_names.clone(),
        estimates: beta,
        std_errors,
        deviance,
        null_deviance,
        iterations,
        converged,
        separation_flag,
        ridge_lambda: config.ridge_lambda,
        deviance_trace: trace,
        dropped_columns: design.dropped.clone(),
    })
}
