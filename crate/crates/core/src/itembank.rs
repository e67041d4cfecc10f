//! Item bank generation: stochastic multiple-choice items drawn from option
//! pools.
//!
//! Each drill set owns a pool of correct options and distractors. A generated
//! item shows one keyed (correct) option and `k` distractors, where `k` is
//! drawn from a Poisson distribution truncated to `[k_min, k_max]`. A small
//! fraction of items instead carry a "none of the above" (NOTA) or "all of the
//! above" (AOTA) special option; specials always have exactly four options
//! with the special pinned to the last position, and are keyed with
//! probability `p_special_correct`.
//!
//! Generation is bit-for-bit reproducible from [`GenerationConfig::seed`]: all
//! draws flow through a single ChaCha stream in a fixed order.

use crate::rng::{derive_seed, rng_from_seed, Rng};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};
use thiserror::Error;

/// Reserved option id and display text for "none of the above".
pub const NOTA_ID: &str = "NOTA";
/// Reserved option id and display text for "all of the above".
pub const AOTA_ID: &str = "AOTA";
const NOTA_TEXT: &str = "None of the above";
const AOTA_TEXT: &str = "All of the above";

#[derive(Debug, Error)]
pub enum ItemBankError {
    #[error("invalid generation config: {0}")]
    InvalidConfig(String),
    #[error("option pool exhausted: needed {needed} {role} option(s), {available} available")]
    PoolExhausted { needed: usize, available: usize, role: &'static str },
    #[error("invalid option pool: {0}")]
    InvalidPool(String),
    #[error("invalid drill set: {0}")]
    InvalidDrillSet(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// One display option: a stable id plus the text shown to the student.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptionEntry {
    pub option_id: String,
    pub text: String,
}

impl OptionEntry {
    pub fn new(option_id: impl Into<String>, text: impl Into<String>) -> Self {
        Self { option_id: option_id.into(), text: text.into() }
    }
}

/// Source material for one drill set: disjoint lists of correct options and
/// distractors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptionPool {
    pub correct_options: Vec<OptionEntry>,
    pub distractor_options: Vec<OptionEntry>,
}

impl OptionPool {
    pub fn new(
        correct_options: Vec<OptionEntry>,
        distractor_options: Vec<OptionEntry>,
    ) -> Result<Self, ItemBankError> {
        let pool = Self { correct_options, distractor_options };
        pool.validate()?;
        Ok(pool)
    }

    /// Synthetic pool with generated ids (`c001…`, `d001…`) and placeholder
    /// texts; used by the catalogs and by simulations.
    pub fn synthetic(n_correct: usize, n_distractors: usize) -> Self {
        let correct_options = (1..=n_correct)
            .map(|i| OptionEntry::new(format!("c{i:03}"), format!("correct answer {i}")))
            .collect();
        let distractor_options = (1..=n_distractors)
            .map(|i| OptionEntry::new(format!("d{i:03}"), format!("distractor {i}")))
            .collect();
        Self { correct_options, distractor_options }
    }

    /// Option ids must be unique across both lists and must not collide with
    /// the reserved special ids.
    pub fn validate(&self) -> Result<(), ItemBankError> {
        let mut seen = HashSet::new();
        for opt in self.correct_options.iter().chain(&self.distractor_options) {
            if opt.option_id == NOTA_ID || opt.option_id == AOTA_ID {
                return Err(ItemBankError::InvalidPool(format!(
                    "option id {:?} is reserved for special options",
                    opt.option_id
                )));
            }
            if !seen.insert(opt.option_id.as_str()) {
                return Err(ItemBankError::InvalidPool(format!(
                    "duplicate option id {:?}",
                    opt.option_id
                )));
            }
        }
        Ok(())
    }
}

/// Which special option, if any, an item carries, and whether it is keyed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpecialKind {
    #[serde(rename = "none")]
    None,
    /// NOTA shown and keyed (no correct option among the distractors).
    #[serde(rename = "NOTA+")]
    NotaPlus,
    /// NOTA shown but a regular correct option is keyed.
    #[serde(rename = "NOTA-")]
    NotaMinus,
    /// AOTA shown and keyed (all other options are from the correct pool).
    #[serde(rename = "AOTA+")]
    AotaPlus,
    /// AOTA shown but a regular correct option is keyed.
    #[serde(rename = "AOTA-")]
    AotaMinus,
}

impl SpecialKind {
    pub fn is_special(self) -> bool {
        self != SpecialKind::None
    }
}

/// One generated multiple-choice item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub item_id: String,
    /// Id of the shared problem header this item belongs to.
    pub header_id: String,
    /// Display-ordered options.
    pub options: Vec<OptionEntry>,
    /// Index into `options` of the answer that is graded correct.
    pub keyed_index: usize,
    pub special: SpecialKind,
    /// Optional hint text shown with the item (hinted pair variants only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hint: Option<String>,
    /// Shared id linking the hinted and unhinted variants of a pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_id: Option<String>,
}

impl Item {
    pub fn keyed_option(&self) -> &OptionEntry {
        &self.options[self.keyed_index]
    }

    pub fn has_hint(&self) -> bool {
        self.hint.is_some()
    }
}

/// All scalar knobs of the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub n_items: u32,
    /// Poisson rate for the distractor count before truncation.
    pub lambda: f64,
    pub k_min: u32,
    pub k_max: u32,
    pub p_nota: f64,
    pub p_aota: f64,
    /// Probability that a special option is the keyed answer.
    pub p_special_correct: f64,
    /// Fraction of items (rounded) that receive a hinted duplicate.
    pub hint_pair_rate: f64,
    pub seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            n_items: 300,
            lambda: 2.2,
            k_min: 2,
            k_max: 4,
            p_nota: 0.05,
            p_aota: 0.05,
            p_special_correct: 0.25,
            hint_pair_rate: 0.0,
            seed: 0,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), ItemBankError> {
        let err = |msg: String| Err(ItemBankError::InvalidConfig(msg));
        if self.n_items == 0 {
            return err("n_items must be positive".into());
        }
        if !(self.lambda > 0.0) {
            return err(format!("lambda must be positive, got {}", self.lambda));
        }
        if self.k_min < 1 || self.k_min > self.k_max {
            return err(format!("need 1 <= k_min <= k_max, got [{}, {}]", self.k_min, self.k_max));
        }
        for (name, p) in [
            ("p_nota", self.p_nota),
            ("p_aota", self.p_aota),
            ("p_special_correct", self.p_special_correct),
            ("hint_pair_rate", self.hint_pair_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return err(format!("{name} must be in [0, 1], got {p}"));
            }
        }
        if self.p_nota + self.p_aota > 1.0 {
            return err("p_nota + p_aota must not exceed 1".into());
        }
        Ok(())
    }
}

/// A generated drill set. The pool is kept in memory for validation but is
/// not part of the serialized document, so sets loaded from disk carry `None`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DrillSet {
    pub drillset_id: String,
    /// Shared problem statement displayed with every item of the set.
    pub header: String,
    pub config: GenerationConfig,
    pub items: Vec<Item>,
    #[serde(skip)]
    pub pool: Option<OptionPool>,
}

/// Probability mass function of a Poisson(`lambda`) variable conditioned on
/// the support `[k_min, k_max]`, indexed from `k_min`.
pub fn truncated_poisson_pmf(
    lambda: f64,
    k_min: u32,
    k_max: u32,
) -> Result<Vec<f64>, ItemBankError> {
    if !(lambda > 0.0) || k_min > k_max {
        return Err(ItemBankError::InvalidConfig(format!(
            "truncated Poisson needs lambda > 0 and k_min <= k_max, got lambda={lambda}, [{k_min}, {k_max}]"
        )));
    }
    // log-space weights keep large k and lambda safe
    let ln_lambda = lambda.ln();
    let mut ln_w = Vec::with_capacity((k_max - k_min + 1) as usize);
    for k in k_min..=k_max {
        let ln_fact: f64 = (1..=k).map(|i| f64::from(i).ln()).sum();
        ln_w.push(f64::from(k) * ln_lambda - lambda - ln_fact);
    }
    let max = ln_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = ln_w.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / total).collect())
}

/// Draw a distractor count from the truncated Poisson in
/// [`GenerationConfig::k_min`], [`GenerationConfig::k_max`].
pub fn sample_distractor_count(cfg: &GenerationConfig, rng: &mut Rng) -> Result<u32, ItemBankError> {
    let pmf = truncated_poisson_pmf(cfg.lambda, cfg.k_min, cfg.k_max)?;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in pmf.iter().enumerate() {
        acc += p;
        if u < acc {
            return Ok(cfg.k_min + i as u32);
        }
    }
    Ok(cfg.k_max)
}

/// Sample `amount` distinct indices from `0..len` and return them in draw
/// order.
fn sample_indices(rng: &mut Rng, len: usize, amount: usize, role: &'static str) -> Result<Vec<usize>, ItemBankError> {
    if amount > len {
        return Err(ItemBankError::PoolExhausted { needed: amount, available: len, role });
    }
    Ok(rand::seq::index::sample(rng, len, amount).into_vec())
}

/// Generate one item. Draw order is fixed: special-branch uniform, then the
/// branch's own draws, then the display shuffle.
pub fn generate_item(
    pool: &OptionPool,
    cfg: &GenerationConfig,
    item_id: impl Into<String>,
    header_id: impl Into<String>,
    rng: &mut Rng,
) -> Result<Item, ItemBankError> {
    cfg.validate()?;
    let branch: f64 = rng.random();
    let (special_base, keyed_special) = if branch < cfg.p_nota {
        (Special::Nota, rng.random::<f64>() < cfg.p_special_correct)
    } else if branch < cfg.p_nota + cfg.p_aota {
        (Special::Aota, rng.random::<f64>() < cfg.p_special_correct)
    } else {
        (Special::No, false)
    };

    let (mut options, keyed_index, special) = match (special_base, keyed_special) {
        (Special::No, _) => {
            let k = sample_distractor_count(cfg, rng)? as usize;
            let correct = pick_correct(pool, rng)?;
            let mut opts = pick_distractors(pool, &correct.text, k, rng)?;
            opts.push(correct.clone());
            opts.shuffle(rng);
            let keyed = position_of(&opts, &correct.option_id);
            (opts, keyed, SpecialKind::None)
        }
        (Special::Nota, true) => {
            // NOTA+: three distractors, NOTA keyed in last position.
            let mut opts = pick_distractors(pool, "", 3, rng)?;
            opts.shuffle(rng);
            opts.push(OptionEntry::new(NOTA_ID, NOTA_TEXT));
            (opts, 3, SpecialKind::NotaPlus)
        }
        (Special::Nota, false) => {
            // NOTA-: keyed correct plus two distractors, NOTA last.
            let correct = pick_correct(pool, rng)?;
            let mut opts = pick_distractors(pool, &correct.text, 2, rng)?;
            opts.push(correct.clone());
            opts.shuffle(rng);
            let keyed = position_of(&opts, &correct.option_id);
            opts.push(OptionEntry::new(NOTA_ID, NOTA_TEXT));
            (opts, keyed, SpecialKind::NotaMinus)
        }
        (Special::Aota, true) => {
            // AOTA+: three correct-pool options, AOTA keyed in last position.
            let idx = sample_indices(rng, pool.correct_options.len(), 3, "correct")?;
            let mut opts: Vec<OptionEntry> =
                idx.into_iter().map(|i| pool.correct_options[i].clone()).collect();
            opts.shuffle(rng);
            opts.push(OptionEntry::new(AOTA_ID, AOTA_TEXT));
            (opts, 3, SpecialKind::AotaPlus)
        }
        (Special::Aota, false) => {
            // AOTA-: keyed correct plus two distractors, AOTA last (and wrong).
            let correct = pick_correct(pool, rng)?;
            let mut opts = pick_distractors(pool, &correct.text, 2, rng)?;
            opts.push(correct.clone());
            opts.shuffle(rng);
            let keyed = position_of(&opts, &correct.option_id);
            opts.push(OptionEntry::new(AOTA_ID, AOTA_TEXT));
            (opts, keyed, SpecialKind::AotaMinus)
        }
    };
    options.shrink_to_fit();

    Ok(Item {
        item_id: item_id.into(),
        header_id: header_id.into(),
        options,
        keyed_index,
        special,
        hint: None,
        pair_id: None,
    })
}

enum Special {
    No,
    Nota,
    Aota,
}

fn pick_correct(pool: &OptionPool, rng: &mut Rng) -> Result<OptionEntry, ItemBankError> {
    if pool.correct_options.is_empty() {
        return Err(ItemBankError::PoolExhausted { needed: 1, available: 0, role: "correct" });
    }
    let i = rng.random_range(0..pool.correct_options.len());
    Ok(pool.correct_options[i].clone())
}

/// Draw `k` distinct distractors whose text differs from the keyed text, so a
/// student can never face two visually identical answers with different
/// grading.
fn pick_distractors(
    pool: &OptionPool,
    keyed_text: &str,
    k: usize,
    rng: &mut Rng,
) -> Result<Vec<OptionEntry>, ItemBankError> {
    let eligible: Vec<&OptionEntry> =
        pool.distractor_options.iter().filter(|o| o.text != keyed_text).collect();
    let idx = sample_indices(rng, eligible.len(), k, "distractor")?;
    Ok(idx.into_iter().map(|i| eligible[i].clone()).collect())
}

fn position_of(options: &[OptionEntry], option_id: &str) -> usize {
    options
        .iter()
        .position(|o| o.option_id == option_id)
        .expect("keyed option present by construction")
}

/// Generate a full drill set from its config. Reproducible from `cfg.seed`.
pub fn generate_drill_set(
    pool: &OptionPool,
    cfg: &GenerationConfig,
    drillset_id: impl Into<String>,
    header: impl Into<String>,
) -> Result<DrillSet, ItemBankError> {
    cfg.validate()?;
    pool.validate()?;
    let drillset_id = drillset_id.into();
    let mut rng = rng_from_seed(cfg.seed);
    let mut items = Vec::with_capacity(cfg.n_items as usize);
    for i in 1..=cfg.n_items {
        let item_id = format!("{drillset_id}-i{i:04}");
        items.push(generate_item(pool, cfg, item_id, drillset_id.clone(), &mut rng)?);
    }
    Ok(DrillSet {
        drillset_id,
        header: header.into(),
        config: cfg.clone(),
        items,
        pool: Some(pool.clone()),
    })
}

/// Give a rounded `hint_pair_rate` fraction of items a hinted duplicate.
///
/// The selected originals and their duplicates share a fresh `pair_id`; the
/// duplicate is identical to the original in every other field (including
/// `item_id`) except that `hint` is set. Duplicates are appended after the
/// original items. Calling this on a set that already contains pairs is an
/// error.
pub fn seed_hint_pairs(set: &mut DrillSet, rng: &mut Rng) -> Result<usize, ItemBankError> {
    let rate = set.config.hint_pair_rate;
    if !(0.0..=1.0).contains(&rate) {
        return Err(ItemBankError::InvalidConfig(format!(
            "hint_pair_rate must be in [0, 1], got {rate}"
        )));
    }
    if set.items.iter().any(|i| i.pair_id.is_some() || i.hint.is_some()) {
        return Err(ItemBankError::InvalidDrillSet(
            "drill set already contains hint pairs".into(),
        ));
    }
    let n_pairs = (rate * set.items.len() as f64).round() as usize;
    if n_pairs == 0 {
        return Ok(0);
    }
    let mut chosen = sample_indices(rng, set.items.len(), n_pairs, "item")?;
    chosen.sort_unstable();
    let mut duplicates = Vec::with_capacity(n_pairs);
    for (seq, &idx) in chosen.iter().enumerate() {
        let pair_id = format!("p{:04}", seq + 1);
        let original = &mut set.items[idx];
        original.pair_id = Some(pair_id.clone());
        let mut dup = original.clone();
        dup.hint = Some(format!("hint for {}", dup.item_id));
        duplicates.push(dup);
    }
    set.items.extend(duplicates);
    Ok(n_pairs)
}

impl DrillSet {
    /// Check every structural invariant of the set. Called by the test-suite
    /// and by the CLI after generation.
    pub fn validate(&self) -> Result<(), ItemBankError> {
        let fail = |msg: String| Err(ItemBankError::InvalidDrillSet(msg));
        let cfg = &self.config;
        cfg.validate()?;

        let mut pair_members: BTreeMap<&str, Vec<&Item>> = BTreeMap::new();
        let mut unpaired = 0usize;
        for item in &self.items {
            match &item.pair_id {
                Some(p) => pair_members.entry(p).or_default().push(item),
                None => unpaired += 1,
            }

            if item.options.is_empty() || item.keyed_index >= item.options.len() {
                return fail(format!("item {}: keyed_index out of range", item.item_id));
            }
            let mut ids = HashSet::new();
            if !item.options.iter().all(|o| ids.insert(o.option_id.as_str())) {
                return fail(format!("item {}: duplicate option ids", item.item_id));
            }
            let keyed = item.keyed_option();
            if item
                .options
                .iter()
                .enumerate()
                .any(|(i, o)| i != item.keyed_index && o.text == keyed.text)
            {
                return fail(format!("item {}: keyed text duplicated by another option", item.item_id));
            }

            if item.special.is_special() {
                if item.options.len() != 4 {
                    return fail(format!("item {}: special items must have 4 options", item.item_id));
                }
                let expect_id = match item.special {
                    SpecialKind::NotaPlus | SpecialKind::NotaMinus => NOTA_ID,
                    _ => AOTA_ID,
                };
                if item.options[3].option_id != expect_id {
                    return fail(format!(
                        "item {}: special option must sit in the last position",
                        item.item_id
                    ));
                }
                let special_keyed = matches!(item.special, SpecialKind::NotaPlus | SpecialKind::AotaPlus);
                if special_keyed != (item.keyed_index == 3) {
                    return fail(format!("item {}: keyed_index inconsistent with {:?}", item.item_id, item.special));
                }
            } else {
                let n = item.options.len() as u32;
                if n < cfg.k_min + 1 || n > cfg.k_max + 1 {
                    return fail(format!(
                        "item {}: option count {n} outside [{}, {}]",
                        item.item_id,
                        cfg.k_min + 1,
                        cfg.k_max + 1
                    ));
                }
            }

            if let Some(pool) = &self.pool {
                let known: HashSet<&str> = pool
                    .correct_options
                    .iter()
                    .chain(&pool.distractor_options)
                    .map(|o| o.option_id.as_str())
                    .collect();
                for o in &item.options {
                    if o.option_id != NOTA_ID && o.option_id != AOTA_ID && !known.contains(o.option_id.as_str()) {
                        return fail(format!(
                            "item {}: option {:?} does not trace to the pool",
                            item.item_id, o.option_id
                        ));
                    }
                }
            }
        }

        for (pair_id, members) in &pair_members {
            if members.len() != 2 {
                return fail(format!("pair {pair_id}: expected 2 members, found {}", members.len()));
            }
            let (a, b) = (members[0], members[1]);
            let hints = [a.hint.is_some(), b.hint.is_some()];
            if hints == [true, true] || hints == [false, false] {
                return fail(format!("pair {pair_id}: needs one hinted and one unhinted variant"));
            }
            let same_otherwise = a.item_id == b.item_id
                && a.header_id == b.header_id
                && a.options == b.options
                && a.keyed_index == b.keyed_index
                && a.special == b.special;
            if !same_otherwise {
                return fail(format!("pair {pair_id}: variants differ beyond the hint field"));
            }
        }

        let logical_items = unpaired + pair_members.len();
        if logical_items != cfg.n_items as usize {
            return fail(format!(
                "set {} holds {logical_items} logical items, config says {}",
                self.drillset_id, cfg.n_items
            ));
        }
        Ok(())
    }

    /// Number of hint pairs in the set.
    pub fn n_pairs(&self) -> usize {
        self.items.iter().filter(|i| i.pair_id.is_some() && i.hint.is_some()).count()
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<(), ItemBankError> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self, ItemBankError> {
        Ok(serde_json::from_reader(reader)?)
    }
}

/// Ready-made drill-set layouts mirroring the deployed course configurations.
pub mod catalog {
    use super::*;

    /// Pool sizes and item counts for one drill set of a layout.
    pub struct LayoutEntry {
        pub drillset_id: String,
        pub header: String,
        pub pool: OptionPool,
        pub config: GenerationConfig,
    }

    fn entry(id: &str, n_correct: usize, n_distractors: usize, n_items: u32, master_seed: u64) -> LayoutEntry {
        LayoutEntry {
            drillset_id: id.to_string(),
            header: format!("drill set {id}"),
            pool: OptionPool::synthetic(n_correct, n_distractors),
            config: GenerationConfig {
                n_items,
                seed: derive_seed(master_seed, &["drillset", id]),
                ..GenerationConfig::default()
            },
        }
    }

    /// Eight-set final-exam layout: pool sizes (correct, distractor) and item
    /// counts per set, 2,380 items in total.
    pub fn final_layout(master_seed: u64) -> Vec<LayoutEntry> {
        [
            (43, 60, 280),
            (41, 53, 300),
            (15, 24, 300),
            (13, 23, 300),
            (45, 62, 300),
            (16, 38, 300),
            (26, 35, 300),
            (24, 38, 300),
        ]
        .iter()
        .enumerate()
        .map(|(i, &(c, d, n))| entry(&format!("fs{:02}", i + 1), c, d, n, master_seed))
        .collect()
    }

    /// Four-set mid-term layout, 300 items per set.
    pub fn midterm_layout(master_seed: u64) -> Vec<LayoutEntry> {
        [(20, 48, 300), (13, 13, 300), (41, 58, 300), (40, 52, 300)]
            .iter()
            .enumerate()
            .map(|(i, &(c, d, n))| entry(&format!("ms{:02}", i + 1), c, d, n, master_seed))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn test_cfg(seed: u64) -> GenerationConfig {
        GenerationConfig { n_items: 50, seed, ..GenerationConfig::default() }
    }

    /// Oracle-first: the pmf frozen here was computed directly from the
    /// definition (normalize Poisson(2.2) mass on {2,3,4}) and cross-checked
    /// with an independent implementation before being pinned.
    #[test]
    fn truncated_poisson_pmf_reference_values() {
        let pmf = truncated_poisson_pmf(2.2, 2, 4).unwrap();
        let expected = [0.468_019, 0.343_214, 0.188_768];
        for (p, e) in pmf.iter().zip(expected.iter()) {
            assert_relative_eq!(p, e, epsilon = 5e-7);
        }
        assert_relative_eq!(pmf.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn truncated_poisson_degenerate_support() {
        let pmf = truncated_poisson_pmf(2.2, 3, 3).unwrap();
        assert_eq!(pmf, vec![1.0]);
        assert!(truncated_poisson_pmf(0.0, 2, 4).is_err());
        assert!(truncated_poisson_pmf(2.2, 4, 2).is_err());
    }

    #[test]
    fn distractor_counts_match_pmf_by_gof() {
        let cfg = test_cfg(11);
        let mut rng = rng_from_seed(99);
        let mut counts = [0u64; 3];
        for _ in 0..100_000 {
            let k = sample_distractor_count(&cfg, &mut rng).unwrap();
            counts[(k - 2) as usize] += 1;
        }
        let pmf = truncated_poisson_pmf(2.2, 2, 4).unwrap();
        let res = crate::tables::chi_square_gof::<f64>(&counts, &pmf).unwrap();
        assert!(res.p_value > 0.01, "GOF rejected: {res:?}");
    }

    #[test]
    fn generation_is_reproducible_from_seed() {
        let pool = OptionPool::synthetic(20, 48);
        let cfg = test_cfg(1234);
        let a = generate_drill_set(&pool, &cfg, "t1", "header").unwrap();
        let b = generate_drill_set(&pool, &cfg, "t1", "header").unwrap();
        assert_eq!(a.items, b.items);
        let other = generate_drill_set(
            &pool,
            &GenerationConfig { seed: 1235, ..cfg },
            "t1",
            "header",
        )
        .unwrap();
        assert_ne!(a.items, other.items);
    }

    #[test]
    fn generated_sets_validate_and_respect_bounds() {
        let pool = OptionPool::synthetic(15, 24);
        let cfg = GenerationConfig { n_items: 300, seed: 7, ..GenerationConfig::default() };
        let set = generate_drill_set(&pool, &cfg, "t2", "header").unwrap();
        set.validate().unwrap();
        assert_eq!(set.items.len(), 300);
        for item in &set.items {
            if item.special.is_special() {
                assert_eq!(item.options.len(), 4);
                assert!(matches!(item.options[3].option_id.as_str(), NOTA_ID | AOTA_ID));
            } else {
                assert!((3..=5).contains(&item.options.len()));
            }
        }
    }

    #[test]
    fn special_frequency_within_binomial_band() {
        let pool = OptionPool::synthetic(30, 60);
        let cfg = GenerationConfig { n_items: 10_000, seed: 21, ..GenerationConfig::default() };
        let set = generate_drill_set(&pool, &cfg, "t3", "header").unwrap();
        let n_special = set.items.iter().filter(|i| i.special.is_special()).count() as f64;
        let n = cfg.n_items as f64;
        let p = cfg.p_nota + cfg.p_aota;
        let sd = (n * p * (1.0 - p)).sqrt();
        assert!(
            (n_special - n * p).abs() <= 3.0 * sd,
            "special count {n_special} outside 3 sigma of {}",
            n * p
        );
        // keyed specials among specials ~ p_special_correct
        let keyed = set
            .items
            .iter()
            .filter(|i| matches!(i.special, SpecialKind::NotaPlus | SpecialKind::AotaPlus))
            .count() as f64;
        let sd_k = (n_special * 0.25 * 0.75).sqrt();
        assert!((keyed - n_special * 0.25).abs() <= 3.0 * sd_k);
    }

    #[test]
    fn minimal_pools_still_generate() {
        // The smallest deployed pool is 13 correct / 13 distractors; AOTA+
        // needs 3 correct options, NOTA+ needs 3 distractors, regular items
        // need up to k_max = 4.
        let pool = OptionPool::synthetic(13, 13);
        let cfg = GenerationConfig { n_items: 300, seed: 3, ..GenerationConfig::default() };
        let set = generate_drill_set(&pool, &cfg, "t4", "header").unwrap();
        set.validate().unwrap();
    }

    #[test]
    fn pool_exhaustion_is_reported() {
        let pool = OptionPool::synthetic(2, 1);
        let cfg = GenerationConfig { n_items: 50, seed: 5, ..GenerationConfig::default() };
        let err = generate_drill_set(&pool, &cfg, "t5", "header").unwrap_err();
        assert!(matches!(err, ItemBankError::PoolExhausted { .. }), "{err}");
    }

    #[test]
    fn keyed_text_never_collides_with_other_options() {
        // A pool where one distractor's text equals a correct option's text:
        // the generator must never show both in one item.
        let pool = OptionPool::new(
            vec![
                OptionEntry::new("c1", "shared text"),
                OptionEntry::new("c2", "unique"),
                OptionEntry::new("c3", "another"),
            ],
            vec![
                OptionEntry::new("d1", "shared text"),
                OptionEntry::new("d2", "a"),
                OptionEntry::new("d3", "b"),
                OptionEntry::new("d4", "c"),
                OptionEntry::new("d5", "d"),
            ],
        )
        .unwrap();
        let cfg = GenerationConfig { n_items: 400, seed: 17, ..GenerationConfig::default() };
        let set = generate_drill_set(&pool, &cfg, "t6", "header").unwrap();
        set.validate().unwrap();
    }

    #[test]
    fn hint_pair_seeding_duplicates_items() {
        let pool = OptionPool::synthetic(60, 120);
        let cfg = GenerationConfig {
            n_items: 2310,
            hint_pair_rate: 0.1,
            seed: 42,
            ..GenerationConfig::default()
        };
        let mut set = generate_drill_set(&pool, &cfg, "t7", "header").unwrap();
        let mut rng = rng_from_seed(1);
        let n_pairs = seed_hint_pairs(&mut set, &mut rng).unwrap();
        assert_eq!(n_pairs, 231);
        assert_eq!(set.items.len(), 2310 + 231);
        assert_eq!(set.n_pairs(), 231);
        set.validate().unwrap();

        // paired variants differ only in the hint field
        let mut by_pair: BTreeMap<&str, Vec<&Item>> = BTreeMap::new();
        for item in set.items.iter().filter(|i| i.pair_id.is_some()) {
            by_pair.entry(item.pair_id.as_deref().unwrap()).or_default().push(item);
        }
        assert_eq!(by_pair.len(), 231);
        for members in by_pair.values() {
            assert_eq!(members.len(), 2);
            let (a, b) = (members[0], members[1]);
            assert_eq!(a.item_id, b.item_id);
            assert_eq!(a.options, b.options);
            assert_eq!(a.keyed_index, b.keyed_index);
            assert_eq!(a.special, b.special);
            assert_ne!(a.hint.is_some(), b.hint.is_some());
        }
    }

    #[test]
    fn zero_rate_hint_seeding_is_identity() {
        let pool = OptionPool::synthetic(20, 48);
        let cfg = test_cfg(8);
        let mut set = generate_drill_set(&pool, &cfg, "t8", "header").unwrap();
        let before = set.items.clone();
        let mut rng = rng_from_seed(1);
        assert_eq!(seed_hint_pairs(&mut set, &mut rng).unwrap(), 0);
        assert_eq!(set.items, before);
    }

    #[test]
    fn double_seeding_is_rejected() {
        let pool = OptionPool::synthetic(20, 48);
        let cfg = GenerationConfig { hint_pair_rate: 0.2, ..test_cfg(9) };
        let mut set = generate_drill_set(&pool, &cfg, "t9", "header").unwrap();
        let mut rng = rng_from_seed(1);
        seed_hint_pairs(&mut set, &mut rng).unwrap();
        assert!(seed_hint_pairs(&mut set, &mut rng).is_err());
    }

    #[test]
    fn json_round_trip_preserves_items() {
        let pool = OptionPool::synthetic(20, 48);
        let set = generate_drill_set(&pool, &test_cfg(10), "t10", "header text").unwrap();
        let mut buf = Vec::new();
        set.write_json(&mut buf).unwrap();
        let loaded = DrillSet::read_json(buf.as_slice()).unwrap();
        assert_eq!(loaded.drillset_id, set.drillset_id);
        assert_eq!(loaded.header, set.header);
        assert_eq!(loaded.config, set.config);
        assert_eq!(loaded.items, set.items);
        assert!(loaded.pool.is_none(), "pool is not part of the file format");
    }

    #[test]
    fn reserved_ids_are_rejected_in_pools() {
        let bad = OptionPool::new(
            vec![OptionEntry::new("NOTA", "oops")],
            vec![OptionEntry::new("d1", "x")],
        );
        assert!(bad.is_err());
        let dup = OptionPool::new(
            vec![OptionEntry::new("x1", "a")],
            vec![OptionEntry::new("x1", "b")],
        );
        assert!(dup.is_err());
    }

    #[test]
    fn catalogs_have_the_deployed_shapes() {
        let fin = catalog::final_layout(0);
        assert_eq!(fin.len(), 8);
        assert_eq!(fin[0].config.n_items, 280);
        assert_eq!(fin.iter().map(|e| e.config.n_items).sum::<u32>(), 2380);
        let mid = catalog::midterm_layout(0);
        assert_eq!(mid.len(), 4);
        assert!(mid.iter().all(|e| e.config.n_items == 300));
        // per-set seeds differ
        assert_ne!(fin[0].config.seed, fin[1].config.seed);
    }
}
