//! The nine acceptance gates of this workspace. Each test covers one
//! criterion end to end and prints a single `criterion N PASS` line
//! (visible with `--nocapture`); a failing gate fails its test.

use drillscope::features::{derive_features, extract_triplets};
use drillscope::fixtures;
use drillscope::glm::{
    fit_design, fit_logistic, penalized_deviance, score, Design, FitConfig, Term,
};
use drillscope::hints::{conditional_learning, group_grade_comparison, interaction_deviance};
use drillscope::itembank::{
    catalog, generate_drill_set, sample_distractor_count, seed_hint_pairs, truncated_poisson_pmf,
    OptionPool,
};
use drillscope::learner::{simulate_cohort, CohortMember, LearnerProfile};
use drillscope::power::{estimate_power, required_n, PowerConfig};
use drillscope::report::hint_report;
use drillscope::rote::{attempt_curves, SeenClass};
use drillscope::special::chi_square_sf;
use drillscope::tables::{chi_square_2x2, chi_square_gof, Correction};
use drillscope::{derive_seed, rng_from_seed, FeatureRow, GenerationConfig};
use rand::Rng as _;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::time::{Duration, Instant};

/// Master seed of the acceptance suite; every stochastic gate derives its
/// own stream from it.
const BASE_SEED: u64 = 20_260_817;

fn pass(n: u32, what: &str) {
    println!("criterion {n} PASS: {what}");
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_1_grade_change_table_and_learning_proportions() {
    let start = Instant::now();
    let log = fixtures::triplet_reference_log();
    let report = hint_report(&log, 1.0).expect("report on the reference log");
    let t = report.triplets.expect("triplet section");

    assert_eq!(t.table.counts, vec![vec![93, 8], vec![1014, 53], vec![601, 41]]);
    assert!((t.p_learning_nocue - 0.3519).abs() < 5e-5, "no-cue {}", t.p_learning_nocue);
    assert!((t.p_learning_cue - 0.4020).abs() < 5e-5, "cue {}", t.p_learning_cue);
    // the reference values round to 35.1% / 40.2%; stay within ±0.2pp of those
    assert!((t.p_learning_nocue - 0.351).abs() <= 0.002);
    assert!((t.p_learning_cue - 0.402).abs() <= 0.002);
    assert!(start.elapsed() < Duration::from_secs(1), "took {:?}", start.elapsed());

    pass(1, "3x2 grade-change table (93,1014,601; 8,53,41), proportions 0.3519/0.4020, < 1 s");
}

#[test]
fn criterion_2_conditional_chi_square_and_sf_oracle() {
    let triplets = extract_triplets(&fixtures::conditional_reference_log());
    let yates = conditional_learning(&triplets, Correction::Yates).unwrap();
    assert_eq!(yates.n, 805);
    assert!(
        (yates.test.p_value - 0.26).abs() <= 0.01,
        "continuity-corrected p = {}",
        yates.test.p_value
    );

    // survival-function oracle: an independent implementation, df 1..=10
    let grid = [0.01, 0.1, 0.5, 1.0, 2.0, 3.841, 5.0, 7.3, 10.0, 15.0, 20.0, 30.0];
    let mut worst = 0.0f64;
    for df in 1..=10u32 {
        let oracle = ChiSquared::new(f64::from(df)).unwrap();
        for &x in &grid {
            let diff = (chi_square_sf(x, df) - oracle.sf(x)).abs();
            worst = worst.max(diff);
        }
    }
    assert!(worst < 1e-8, "worst sf deviation {worst:.3e}");

    pass(2, "wrong-start test p = 0.26 ± 0.01; sf matches oracle to 1e-8 for df 1-10");
}

#[test]
fn criterion_3_power_at_3450_and_required_n() {
    let start = Instant::now();
    let rows = fixtures::power_reference_rows();
    let config = PowerConfig { seed: derive_seed(BASE_SEED, &["power"]), ..PowerConfig::default() };
    assert_eq!(config.n_sims, 2000);

    let at_3450 = estimate_power(&rows, 3450, &config).unwrap();
    assert!((at_3450.power - 0.80).abs() <= 0.05, "power(3450) = {}", at_3450.power);

    let at_805 = estimate_power(&rows, 805, &config).unwrap();
    assert!(at_805.power < 0.5, "power(805) = {}", at_805.power);

    let req = required_n(&rows, 0.80, &config).unwrap();
    assert!(
        (2900..=4000).contains(&req.n),
        "required n = {} ({} evaluations)",
        req.n,
        req.evaluations.len()
    );
    assert!(start.elapsed() < Duration::from_secs(60), "took {:?}", start.elapsed());

    pass(3, "power(3450) = 0.80 ± 0.05, power(805) < 0.5, required n in [2900, 4000], < 60 s");
}

#[test]
fn criterion_4_stratified_accuracy_cells() {
    let rows = derive_features(&fixtures::group_reference_log());
    let table = group_grade_comparison(&rows).unwrap();

    let expected = [0.531, 0.604, 0.899, 0.913];
    for (cell, want) in table.cells.iter().zip(expected) {
        assert!(
            (cell.accuracy - want).abs() <= 0.005,
            "{:?}/hinted={} accuracy {} vs {}",
            cell.group,
            cell.hinted,
            cell.accuracy,
            want
        );
    }
    assert!((table.overall[0].accuracy - 0.727).abs() <= 0.005);
    assert!((table.overall[1].accuracy - 0.774).abs() <= 0.005);

    pass(4, "cell accuracies 53.1/60.4/89.9/91.3% and overall 72.7/77.4% within 0.5pp");
}

#[test]
fn criterion_5_catalog_generation_and_distractor_distribution() {
    let mut total = 0usize;
    for entry in catalog::final_layout(derive_seed(BASE_SEED, &["gen-final"])) {
        let set = generate_drill_set(&entry.pool, &entry.config, &entry.drillset_id, &entry.header)
            .unwrap();
        set.validate().unwrap();
        assert_eq!(set.items.len() as u32, entry.config.n_items);
        total += set.items.len();
    }
    assert_eq!(total, 2380, "eight-set layout totals 2380 items");

    for entry in catalog::midterm_layout(derive_seed(BASE_SEED, &["gen-mid"])) {
        let set = generate_drill_set(&entry.pool, &entry.config, &entry.drillset_id, &entry.header)
            .unwrap();
        set.validate().unwrap();
        assert_eq!(set.items.len(), 300);
    }

    // distractor-count sampler vs its own pmf at 1e5 draws
    let cfg = GenerationConfig::default();
    let mut rng = rng_from_seed(derive_seed(BASE_SEED, &["gof"]));
    let probs = truncated_poisson_pmf(cfg.lambda, cfg.k_min, cfg.k_max).unwrap();
    let mut counts = vec![0u64; probs.len()];
    for _ in 0..100_000 {
        let k = sample_distractor_count(&cfg, &mut rng).unwrap();
        counts[(k - cfg.k_min) as usize] += 1;
    }
    let gof = chi_square_gof::<f64>(&counts, &probs).unwrap();
    assert!(gof.p_value > 0.01, "GOF p = {}", gof.p_value);

    pass(5, "layouts produce 280/300-item sets (2380 total), all invariants hold, GOF p > 0.01");
}

// ---------------------------------------------------------------------------

/// Synthetic logistic design with three unpenalized columns.
fn planted_design(n: usize, beta: [f64; 3], seed_label: &str) -> Design<f64> {
    let mut rng = rng_from_seed(derive_seed(BASE_SEED, &[seed_label]));
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let x1 = rng.random_range(-1.0..1.0);
        let x2 = rng.random_range(-1.0..1.0);
        let eta = beta[0] + beta[1] * x1 + beta[2] * x2;
        let p = 1.0 / (1.0 + (-eta).exp());
        rows.push(vec![(0u32, 1.0), (1, x1), (2, x2)]);
        y.push(f64::from(u8::from(rng.random::<f64>() < p)));
    }
    Design {
        col_names: vec!["intercept".into(), "x1".into(), "x2".into()],
        rows,
        y,
        penalized: vec![false; 3],
        dropped: Vec::new(),
    }
}

#[test]
fn criterion_6_fitter_recovery_gradient_monotonicity_and_closed_form() {
    // (a) planted-coefficient recovery within 3 SE at n = 20,000
    let truth = [-0.4, 0.8, -0.6];
    let design = planted_design(20_000, truth, "recovery");
    let fit = fit_design(&design, &FitConfig::default()).unwrap();
    assert!(fit.converged);
    for j in 0..3 {
        let err = (fit.estimates[j] - truth[j]).abs();
        assert!(
            err < 3.0 * fit.std_errors[j],
            "{}: {} vs {} (se {})",
            fit.coef_names[j],
            fit.estimates[j],
            truth[j],
            fit.std_errors[j]
        );
    }

    // (c) the accepted-step deviance trace never increases
    for w in fit.deviance_trace.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "deviance rose: {} -> {}", w[0], w[1]);
    }

    // (b) analytic score vs central finite differences of the penalized
    // deviance (d dev_pen / d beta = -2 * score), partly penalized columns
    let mut fd_design = planted_design(2_000, truth, "gradient");
    fd_design.penalized = vec![false, true, true];
    let lambda = 0.7;
    let beta = vec![0.2, -0.3, 0.5];
    let analytic = score(&fd_design, &beta, lambda);
    let h = 1e-5;
    for j in 0..3 {
        let mut up = beta.clone();
        let mut down = beta.clone();
        up[j] += h;
        down[j] -= h;
        let fd = -(penalized_deviance(&fd_design, &up, lambda)
            - penalized_deviance(&fd_design, &down, lambda))
            / (4.0 * h);
        let rel = (fd - analytic[j]).abs() / analytic[j].abs().max(1.0);
        assert!(rel < 1e-6, "column {j}: fd {fd} vs analytic {}", analytic[j]);
    }

    // (d) intercept-only closed form: mean 0.75 -> logit(0.75) = ln 3
    let n = 1600;
    let ones = 1200;
    let design = Design {
        col_names: vec!["intercept".into()],
        rows: (0..n).map(|_| vec![(0u32, 1.0)]).collect(),
        y: (0..n).map(|i| f64::from(u8::from(i < ones))).collect(),
        penalized: vec![false],
        dropped: Vec::new(),
    };
    let config = FitConfig { tol_gradient: 1e-12, ..FitConfig::default() };
    let fit = fit_design(&design, &config).unwrap();
    assert!(
        (fit.estimates[0] - 3.0f64.ln()).abs() < 1e-9,
        "intercept {} vs ln 3 {}",
        fit.estimates[0],
        3.0f64.ln()
    );

    pass(6, "3-SE recovery at n=20k, FD gradient < 1e-6, monotone deviance, ln(3) to 1e-9");
}

// ---------------------------------------------------------------------------

fn cohort_half(prefix: &str, count: u32, profile: &LearnerProfile) -> Vec<CohortMember> {
    (1..=count)
        .map(|i| CohortMember {
            student_id: format!("{prefix}{i:04}"),
            profile: profile.clone(),
        })
        .collect()
}

fn weighted_mean(cells: &[(u64, f64)]) -> f64 {
    let n: u64 = cells.iter().map(|c| c.0).sum();
    let sum: f64 = cells.iter().map(|c| c.0 as f64 * c.1).sum();
    sum / n as f64
}

#[test]
fn criterion_7_memorization_vs_transfer_separation() {
    let start = Instant::now();
    let pool = OptionPool::synthetic(40, 60);
    let cfg = GenerationConfig {
        n_items: 300,
        seed: derive_seed(BASE_SEED, &["c7", "set"]),
        ..GenerationConfig::default()
    };
    let set = generate_drill_set(&pool, &cfg, "c7", "mixed-cohort set").unwrap();

    let meaningful = LearnerProfile {
        distractor_boost: 0.8,
        ..LearnerProfile::preset("meaningful").unwrap()
    };
    let rote =
        LearnerProfile { distractor_boost: 0.8, ..LearnerProfile::preset("rote").unwrap() };
    let mut members = cohort_half("m", 150, &meaningful);
    members.extend(cohort_half("r", 150, &rote));

    let log =
        simulate_cohort(&members, &[set], 50, derive_seed(BASE_SEED, &["c7", "sim"])).unwrap();
    let rows = derive_features(&log);

    // (a) pooled curves: seen above unseen by >= 0.10 mean gap over t in [5, 50]
    let table = attempt_curves(&rows, 50).unwrap();
    let cell = |t: u32, class: SeenClass| {
        table.cells.iter().find(|c| c.t == t && c.class == class).map(|c| c.mean_grade)
    };
    let mut gaps = Vec::new();
    for t in 5..=50 {
        if let (Some(seen), Some(unseen)) = (cell(t, SeenClass::Seen), cell(t, SeenClass::Unseen))
        {
            gaps.push(seen - unseen);
        }
    }
    assert!(gaps.len() >= 40, "only {} attempt indices have both classes", gaps.len());
    let mean_gap = gaps.iter().sum::<f64>() / gaps.len() as f64;
    assert!(mean_gap >= 0.10, "mean seen-unseen gap {mean_gap:.4}");

    // (b) the growth cohort's unseen curve rises by >= 0.15 from t<=10 to t>=40
    let m_rows: Vec<FeatureRow> =
        rows.iter().filter(|r| r.student_id.starts_with('m')).cloned().collect();
    let m_table = attempt_curves(&m_rows, 50).unwrap();
    let unseen_band = |lo: u32, hi: u32| {
        let cells: Vec<(u64, f64)> = m_table
            .cells
            .iter()
            .filter(|c| c.class == SeenClass::Unseen && (lo..=hi).contains(&c.t))
            .map(|c| (c.n, c.mean_grade))
            .collect();
        weighted_mean(&cells)
    };
    let early = unseen_band(1, 10);
    let late = unseen_band(40, 50);
    assert!(late - early >= 0.15, "unseen rise {early:.4} -> {late:.4}");

    // (c) recognition and distractor-familiarity coefficients positive, |z| > 3
    let fit = fit_logistic::<f64>(
        &rows,
        &[Term::Intercept, Term::Attempt, Term::SeenBefore, Term::PropDistractorsSeen],
        &FitConfig::default(),
    )
    .unwrap();
    for name in ["seen_before", "prop_distractors_seen"] {
        let coef = fit.coefficient(name).unwrap();
        let se = fit.std_error(name).unwrap();
        assert!(coef > 0.0 && coef / se > 3.0, "{name}: {coef:.4} (se {se:.4})");
    }
    assert!(start.elapsed() < Duration::from_secs(120), "took {:?}", start.elapsed());

    pass(7, "seen-unseen gap >= 0.10, unseen rise >= 0.15, recognition z > 3, < 2 min");
}

#[test]
fn criterion_8_hint_gap_concentrates_in_the_struggling_stratum() {
    let pool = OptionPool::synthetic(30, 50);
    let cfg = GenerationConfig {
        n_items: 120,
        hint_pair_rate: 0.5,
        seed: derive_seed(BASE_SEED, &["c8", "set"]),
        ..GenerationConfig::default()
    };
    let mut set = generate_drill_set(&pool, &cfg, "c8", "hinted set").unwrap();
    let mut pair_rng = rng_from_seed(derive_seed(BASE_SEED, &["c8", "pairs"]));
    seed_hint_pairs(&mut set, &mut pair_rng).unwrap();
    set.validate().unwrap();

    // One homogeneous cohort whose running estimate straddles 0.5, so both
    // strata draw rows from the same students under the same scheduler and
    // only the low/high boost differential separates the two gaps.
    let profile = LearnerProfile {
        ability_0: -0.9,
        hint_boost_low: 1.5,
        hint_boost_high: 0.0,
        ..LearnerProfile::default()
    };
    let members = cohort_half("st", 120, &profile);

    let mut successes = 0u32;
    for rep in 0..100u32 {
        let seed = derive_seed(BASE_SEED, &["c8", "rep", &rep.to_string()]);
        let log = simulate_cohort(&members, &[set.clone()], 40, seed).unwrap();
        let table = group_grade_comparison(&derive_features(&log)).unwrap();
        let [below_plain, below_hint, above_plain, above_hint] = &table.cells;
        let below_gap = below_hint.accuracy - below_plain.accuracy;
        let above_gap = above_hint.accuracy - above_plain.accuracy;
        if below_gap > above_gap {
            successes += 1;
        }
    }
    assert!(successes >= 95, "below-stratum hint gap larger in only {successes}/100 replicates");

    pass(8, "hint gap larger below the 0.5 prior line in >= 95/100 replicates");
}

// ---------------------------------------------------------------------------

/// Paired feature rows with a homogeneous planted hint effect: no
/// pair-by-hint interaction exists, so the likelihood-ratio test is null.
fn null_interaction_rows(seed: u64) -> Vec<FeatureRow> {
    let mut rng = rng_from_seed(seed);
    let n_pairs = 8usize;
    let n_students = 32usize;
    let rows_per_arm = 80usize; // per (pair, hint) combination
    let delta = 0.5;
    let mut rows = Vec::with_capacity(n_pairs * 2 * rows_per_arm);
    let mut serial = 0usize;
    for pair in 0..n_pairs {
        let pair_effect = -0.35 + 0.1 * pair as f64;
        for hint in [0u8, 1] {
            for _ in 0..rows_per_arm {
                let student = serial % n_students;
                serial += 1;
                let eta = -0.3 + delta * f64::from(hint) + pair_effect;
                let p = 1.0 / (1.0 + (-eta).exp());
                let grade = u8::from(rng.random::<f64>() < p);
                rows.push(FeatureRow {
                    student_id: format!("s{student:03}"),
                    drillset_id: "d1".into(),
                    t: (serial / n_students + 1) as u32,
                    item_id: format!("q{pair:02}{hint}"),
                    pair_id: Some(format!("p{pair:02}")),
                    shown_options: vec!["a".into(), "b".into()],
                    keyed_option: "a".into(),
                    has_hint: hint,
                    grade,
                    keyed_seen_before: 0,
                    prop_distractors_seen: 0.0,
                    prior_grade_mean: None,
                    n_prior: 0,
                });
            }
        }
    }
    rows
}

#[test]
fn criterion_9_null_calibration_of_both_tests() {
    // 99% binomial band for 200 replicates at rate 0.05: counts in [3, 17]
    let band = 3..=17u32;

    // (a) uncorrected chi-square on balanced null 2x2 data
    let mut chi_rejections = 0u32;
    for rep in 0..200u32 {
        let mut rng = rng_from_seed(derive_seed(BASE_SEED, &["c9chi", &rep.to_string()]));
        let mut draws = |n: u64| -> u64 { (0..n).filter(|_| rng.random::<f64>() < 0.5).count() as u64 };
        let (n1, n2) = (1000, 1000);
        let a = draws(n1);
        let c = draws(n2);
        let test = chi_square_2x2::<f64>(a, n1 - a, c, n2 - c, Correction::None).unwrap();
        if test.p_value <= 0.05 {
            chi_rejections += 1;
        }
    }
    assert!(
        band.contains(&chi_rejections),
        "chi-square rejected {chi_rejections}/200 under the null"
    );

    // (b) pair-by-hint likelihood-ratio test on homogeneous-effect data
    let mut lr_rejections = 0u32;
    for rep in 0..200u32 {
        let rows = null_interaction_rows(derive_seed(BASE_SEED, &["c9lr", &rep.to_string()]));
        let result = interaction_deviance(&rows, 1e-6).unwrap();
        if result.p_value <= 0.05 {
            lr_rejections += 1;
        }
    }
    assert!(
        band.contains(&lr_rejections),
        "interaction test rejected {lr_rejections}/200 under the null"
    );

    pass(9, "null rejection rates in the 99% band [3, 17]/200 for both tests");
}
