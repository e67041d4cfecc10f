//! Simulated learners: parametric response models driven through the
//! scheduler to produce synthetic response logs.
//!
//! A learner answers correctly with probability
//!
//! ```text
//! p = 1/k + (1 - 1/k) * sigmoid(a - d + rote_boost * seen
//!                               + distractor_boost * prop_distractors_seen
//!                               + hint_boost)
//! ```
//!
//! where `k` is the option count (so `1/k` is the guessing floor), `a` the
//! current ability, `d` the logit of the item's empirical difficulty clamped
//! to `[-3, 3]`, `seen` indicates the keyed option was displayed before in
//! this student/set session, `prop_distractors_seen` is the fraction of
//! non-keyed shown options displayed before, and `hint_boost` applies to
//! hinted items only — `hint_boost_low` while the student's running grade
//! estimate is below 0.5, `hint_boost_high` otherwise.
//!
//! After every response the learner "reads up" with probability `read_prob`,
//! adding `learn_rate` to ability. Memory of shown options is keyed by option
//! id and scoped to the student/set session, mirroring how the analysis
//! modules reconstruct exposure from logs.

use crate::itembank::{DrillSet, Item};
use crate::logstore::{LogError, ResponseLog, ResponseRecord};
use crate::rng::{derive_seed, rng_from_seed, Rng};
use crate::scheduler::{select_item, ItemStats, SchedulerError, StudentState};
use crate::special::{logit, sigmoid};
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use thiserror::Error;

/// Clamp bound for the difficulty logit.
pub const DIFFICULTY_LOGIT_CLAMP: f64 = 3.0;

/// Grade-estimate threshold below which `hint_boost_low` applies.
pub const HINT_LOW_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("unknown learner preset {0:?} (expected rote, meaningful, or struggler)")]
    UnknownPreset(String),
    #[error("duplicate student id {0:?} in cohort")]
    DuplicateStudent(String),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error(transparent)]
    Log(#[from] LogError),
}

/// Scalar parameters of one simulated learner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerProfile {
    /// Ability at the start of each student/set session.
    pub ability_0: f64,
    /// Ability gained per reading event.
    pub learn_rate: f64,
    /// Probability of reading up after a response.
    pub read_prob: f64,
    /// Logit bonus when the keyed option was displayed before (recognition).
    pub rote_boost: f64,
    /// Logit bonus scaled by the fraction of previously displayed distractors.
    pub distractor_boost: f64,
    /// Hinted-item bonus while the running grade estimate is below 0.5.
    pub hint_boost_low: f64,
    /// Hinted-item bonus once the running grade estimate reaches 0.5.
    pub hint_boost_high: f64,
}

impl Default for LearnerProfile {
    fn default() -> Self {
        Self {
            ability_0: 0.0,
            learn_rate: 0.0,
            read_prob: 1.0,
            rote_boost: 0.0,
            distractor_boost: 0.0,
            hint_boost_low: 0.0,
            hint_boost_high: 0.0,
        }
    }
}

impl LearnerProfile {
    /// Named presets spanning the archetypes the analyses contrast:
    ///
    /// * `rote` — low ability that never grows, strong recognition of
    ///   re-shown answers; accuracy on unseen items stays at the guessing
    ///   floor.
    /// * `meaningful` — ability grows through reading; recognition helps but
    ///   does not dominate.
    /// * `struggler` — below-average ability, no growth, benefits from hints
    ///   mostly while performing poorly.
    pub fn preset(name: &str) -> Result<Self, LearnerError> {
        let base = Self::default();
        match name {
            "rote" => Ok(Self { ability_0: -4.0, rote_boost: 3.0, ..base }),
            "meaningful" => Ok(Self { learn_rate: 0.08, read_prob: 0.6, rote_boost: 1.0, ..base }),
            "struggler" => Ok(Self {
                ability_0: -1.0,
                hint_boost_low: 0.5,
                hint_boost_high: 0.1,
                ..base
            }),
            other => Err(LearnerError::UnknownPreset(other.to_string())),
        }
    }

    pub fn validate(&self) -> Result<(), LearnerError> {
        if !(0.0..=1.0).contains(&self.read_prob) {
            return Err(LearnerError::UnknownPreset(format!(
                "read_prob must be in [0, 1], got {}",
                self.read_prob
            )));
        }
        Ok(())
    }
}

/// What a learner currently remembers within one student/set session.
#[derive(Debug, Clone, Default)]
pub struct MemoryState {
    /// Option ids displayed so far, in any role.
    pub seen: HashSet<String>,
    pub ability: f64,
}

impl MemoryState {
    pub fn fresh(profile: &LearnerProfile) -> Self {
        Self { seen: HashSet::new(), ability: profile.ability_0 }
    }

    /// Absorb the displayed options of a served item.
    pub fn observe(&mut self, item: &Item) {
        for opt in &item.options {
            if !self.seen.contains(&opt.option_id) {
                self.seen.insert(opt.option_id.clone());
            }
        }
    }
}

/// Probability of a correct response for `item` at empirical difficulty
/// `item_difficulty`, given the learner's memory and running state.
pub fn response_probability(
    profile: &LearnerProfile,
    memory: &MemoryState,
    item: &Item,
    state: &StudentState,
    item_difficulty: f64,
) -> f64 {
    let k = item.options.len() as f64;
    let d = logit(item_difficulty).clamp(-DIFFICULTY_LOGIT_CLAMP, DIFFICULTY_LOGIT_CLAMP);
    let keyed_id = &item.keyed_option().option_id;
    let seen = f64::from(memory.seen.contains(keyed_id));
    let distractors: Vec<&String> = item
        .options
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != item.keyed_index)
        .map(|(_, o)| &o.option_id)
        .collect();
    let prop_distractors_seen = if distractors.is_empty() {
        0.0
    } else {
        distractors.iter().filter(|id| memory.seen.contains(**id)).count() as f64
            / distractors.len() as f64
    };
    let hint_boost = if item.has_hint() {
        if state.grade_estimate() < HINT_LOW_THRESHOLD {
            profile.hint_boost_low
        } else {
            profile.hint_boost_high
        }
    } else {
        0.0
    };
    let eta = memory.ability - d
        + profile.rote_boost * seen
        + profile.distractor_boost * prop_distractors_seen
        + hint_boost;
    1.0 / k + (1.0 - 1.0 / k) * sigmoid(eta)
}

/// Draw one graded response and update memory, ability, and running state.
/// Draw order is fixed: grade, then the read-up draw (taken even when it
/// cannot change ability, to keep streams aligned across profiles).
pub fn respond(
    profile: &LearnerProfile,
    memory: &mut MemoryState,
    item: &Item,
    state: &mut StudentState,
    stats: &mut HashMap<String, ItemStats>,
    rng: &mut Rng,
) -> u8 {
    let difficulty = stats.get(&item.item_id).copied().unwrap_or_default().difficulty();
    let p = response_probability(profile, memory, item, state, difficulty);
    let grade = u8::from(rng.random_bool(p));
    memory.observe(item);
    stats.entry(item.item_id.clone()).or_default().record(grade);
    state.push_grade(grade);
    if rng.random_bool(profile.read_prob) {
        memory.ability += profile.learn_rate;
    }
    grade
}

/// One cohort member: a student id plus their profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortMember {
    pub student_id: String,
    pub profile: LearnerProfile,
}

/// Serialized cohort description: groups of identical learners expanded to
/// numbered members.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CohortSpec {
    pub groups: Vec<CohortGroup>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CohortGroup {
    /// Member ids are `{id_prefix}{0001..count}`.
    pub id_prefix: String,
    pub count: u32,
    /// Start from this preset when present, else from the default profile.
    #[serde(default)]
    pub preset: Option<String>,
    /// Field-wise overrides applied on top of the preset.
    #[serde(default)]
    pub overrides: ProfileOverrides,
}

/// Optional per-field overrides of a [`LearnerProfile`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProfileOverrides {
    pub ability_0: Option<f64>,
    pub learn_rate: Option<f64>,
    pub read_prob: Option<f64>,
    pub rote_boost: Option<f64>,
    pub distractor_boost: Option<f64>,
    pub hint_boost_low: Option<f64>,
    pub hint_boost_high: Option<f64>,
}

impl ProfileOverrides {
    pub fn apply(&self, mut profile: LearnerProfile) -> LearnerProfile {
        if let Some(v) = self.ability_0 {
            profile.ability_0 = v;
        }
        if let Some(v) = self.learn_rate {
            profile.learn_rate = v;
        }
        if let Some(v) = self.read_prob {
            profile.read_prob = v;
        }
        if let Some(v) = self.rote_boost {
            profile.rote_boost = v;
        }
        if let Some(v) = self.distractor_boost {
            profile.distractor_boost = v;
        }
        if let Some(v) = self.hint_boost_low {
            profile.hint_boost_low = v;
        }
        if let Some(v) = self.hint_boost_high {
            profile.hint_boost_high = v;
        }
        profile
    }
}

impl CohortSpec {
    pub fn expand(&self) -> Result<Vec<CohortMember>, LearnerError> {
        let mut members = Vec::new();
        for group in &self.groups {
            let base = match &group.preset {
                Some(name) => LearnerProfile::preset(name)?,
                None => LearnerProfile::default(),
            };
            let profile = group.overrides.apply(base);
            profile.validate()?;
            for i in 1..=group.count {
                members.push(CohortMember {
                    student_id: format!("{}{:04}", group.id_prefix, i),
                    profile,
                });
            }
        }
        Ok(members)
    }
}

/// Run every cohort member through every drill set for `n_attempts` serves
/// each, returning the canonical response log.
///
/// Each (student, set) session draws from its own RNG stream derived from
/// `master_seed`, starts with fresh memory and fresh per-session item stats,
/// and is therefore independent of cohort ordering and of every other
/// session.
pub fn simulate_cohort(
    members: &[CohortMember],
    sets: &[DrillSet],
    n_attempts: u32,
    master_seed: u64,
) -> Result<ResponseLog, LearnerError> {
    let mut ids = HashSet::new();
    for m in members {
        m.profile.validate()?;
        if !ids.insert(m.student_id.as_str()) {
            return Err(LearnerError::DuplicateStudent(m.student_id.clone()));
        }
    }

    let mut records = Vec::with_capacity(members.len() * sets.len() * n_attempts as usize);
    for member in members {
        for set in sets {
            let seed = derive_seed(master_seed, &["sim", &member.student_id, &set.drillset_id]);
            let mut rng = rng_from_seed(seed);
            let mut state = StudentState::new(member.student_id.clone());
            let mut memory = MemoryState::fresh(&member.profile);
            let mut stats: HashMap<String, ItemStats> = HashMap::new();
            for t in 1..=n_attempts {
                let idx = select_item(&state, set, &stats, &mut rng)?;
                let item = &set.items[idx];
                let grade =
                    respond(&member.profile, &mut memory, item, &mut state, &mut stats, &mut rng);
                records.push(ResponseRecord {
                    student_id: member.student_id.clone(),
                    drillset_id: set.drillset_id.clone(),
                    t,
                    item_id: item.item_id.clone(),
                    pair_id: item.pair_id.clone(),
                    shown_options: item.options.iter().map(|o| o.option_id.clone()).collect(),
                    keyed_option: item.keyed_option().option_id.clone(),
                    has_hint: u8::from(item.has_hint()),
                    grade,
                });
            }
        }
    }
    Ok(ResponseLog::from_unsorted(records)?)
}
