//! One function per subcommand. Every handler resolves its inputs, calls the
//! library, writes its outputs, and finishes with a manifest next to them.

use crate::manifest::Manifest;
use crate::{
    FeaturesArgs, FixturesArgs, GenerateArgs, HintsArgs, PowerArgs, ReportArgs, RoteArgs,
    SimulateArgs,
};
use anyhow::{bail, Context, Result};
use drillscope::features::{derive_features, extract_triplets, write_features_csv};
use drillscope::itembank::{catalog, generate_drill_set, seed_hint_pairs, DrillSet, OptionPool};
use drillscope::learner::{simulate_cohort, CohortGroup, CohortSpec};
use drillscope::logstore::{ingest_csv, ColumnMap, ResponseLog};
use drillscope::power::{
    estimate_curve, outcomes_from_triplets, read_outcomes_csv, required_n, write_curve_csv,
    OutcomeRow, PowerConfig,
};
use drillscope::report::hint_report;
use drillscope::rng::{derive_seed, rng_from_seed};
use drillscope::rote::{attempt_curves, write_curves_csv, CurveFit, CurveTable};
use serde_json::json;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

/// Load a response log: JSONL natively, `.csv` through the column-mapped
/// ingester (warnings go to stderr).
fn read_log(path: &Path, map: Option<&str>) -> Result<ResponseLog> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        let map = match map {
            Some(spec) => ColumnMap::parse(spec).context("logstore")?,
            None => ColumnMap::default(),
        };
        let outcome = ingest_csv(BufReader::new(file), &map).context("logstore")?;
        for warning in &outcome.warnings {
            eprintln!("warning: {warning}");
        }
        Ok(outcome.log)
    } else {
        ResponseLog::read_jsonl(BufReader::new(file)).context("logstore")
    }
}

fn create_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

/// Directory that receives the manifest of a command whose `--out` is a file.
fn parent_dir(out_file: &Path) -> PathBuf {
    match out_file.parent() {
        Some(p) if p.as_os_str().is_empty() => PathBuf::from("."),
        Some(p) => p.to_path_buf(),
        None => PathBuf::from("."),
    }
}

// ---------------------------------------------------------------------------
// generate

pub fn generate(args: &GenerateArgs) -> Result<()> {
    struct Planned {
        drillset_id: String,
        header: String,
        pool: OptionPool,
        config: drillscope::GenerationConfig,
    }

    let planned: Vec<Planned> = match (&args.layout, &args.pool) {
        (Some(layout), None) => {
            let entries = match layout.as_str() {
                "final" => catalog::final_layout(args.seed),
                "midterm" => catalog::midterm_layout(args.seed),
                other => bail!("unknown layout {other:?}; expected \"final\" or \"midterm\""),
            };
            entries
                .into_iter()
                .map(|e| Planned {
                    drillset_id: e.drillset_id,
                    header: e.header,
                    pool: e.pool,
                    config: e.config,
                })
                .collect()
        }
        (None, Some(pool_spec)) => {
            let (n_correct, n_distractors) = parse_pool_spec(pool_spec)?;
            let config = drillscope::GenerationConfig {
                n_items: args.n_items,
                seed: derive_seed(args.seed, &["drillset", &args.set_id]),
                ..Default::default()
            };
            vec![Planned {
                drillset_id: args.set_id.clone(),
                header: format!("drill set {}", args.set_id),
                pool: OptionPool::synthetic(n_correct, n_distractors),
                config,
            }]
        }
        _ => bail!("exactly one of --layout or --pool is required"),
    };

    create_out_dir(&args.out)?;
    let mut manifest = Manifest::new(
        "generate",
        json!({
            "layout": args.layout,
            "pool": args.pool,
            "n_items": args.n_items,
            "set_id": args.set_id,
            "hint_rate": args.hint_rate,
            "seed": args.seed,
            "out": args.out.display().to_string(),
        }),
    );

    let mut total_items = 0usize;
    for plan in planned {
        let mut config = plan.config;
        if args.hint_rate > 0.0 {
            config.hint_pair_rate = args.hint_rate;
        }
        let mut set = generate_drill_set(&plan.pool, &config, &plan.drillset_id, &plan.header)
            .context("itembank")?;
        if set.config.hint_pair_rate > 0.0 {
            let mut rng = rng_from_seed(derive_seed(set.config.seed, &["pairs"]));
            seed_hint_pairs(&mut set, &mut rng).context("itembank")?;
        }
        set.validate().context("itembank")?;

        let path = args.out.join(format!("{}.json", set.drillset_id));
        let file =
            File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
        set.write_json(BufWriter::new(file)).context("itembank")?;
        manifest.add_output(&path)?;
        total_items += set.items.len();
        println!(
            "  {}: {} items, {} hint pairs -> {}",
            set.drillset_id,
            set.items.len(),
            set.n_pairs(),
            path.display()
        );
    }
    let manifest_path = manifest.write(&args.out)?;
    println!("generated {total_items} items; manifest at {}", manifest_path.display());
    Ok(())
}

fn parse_pool_spec(spec: &str) -> Result<(usize, usize)> {
    let parse = |s: &str| s.trim().parse::<usize>().ok().filter(|&n| n > 0);
    if let Some((c, d)) = spec.split_once(':') {
        if let (Some(c), Some(d)) = (parse(c), parse(d)) {
            return Ok((c, d));
        }
    }
    bail!("--pool expects CORRECT:DISTRACTORS with positive counts, e.g. 40:60; got {spec:?}")
}

// ---------------------------------------------------------------------------
// simulate

/// Expand `--in` arguments into drill-set files: directories contribute
/// their `*.json` files (manifests excluded), sorted for determinism.
fn collect_set_paths(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found = Vec::new();
            for entry in fs::read_dir(input)
                .with_context(|| format!("cannot read {}", input.display()))?
            {
                let path = entry?.path();
                let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
                if name.ends_with(".json") && !name.ends_with(".manifest.json") {
                    found.push(path);
                }
            }
            found.sort();
            if found.is_empty() {
                bail!("no drill-set JSON files in {}", input.display());
            }
            paths.extend(found);
        } else {
            paths.push(input.clone());
        }
    }
    Ok(paths)
}

fn parse_preset_spec(spec: &str) -> Result<CohortSpec> {
    let mut groups = Vec::new();
    for part in spec.split(',') {
        let Some((name, count)) = part.split_once(':') else {
            bail!("--preset expects NAME:COUNT pairs, e.g. rote:100,meaningful:200; got {part:?}");
        };
        let name = name.trim();
        let count: u32 = count
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .with_context(|| format!("bad count in --preset part {part:?}"))?;
        if groups.iter().any(|g: &CohortGroup| g.preset.as_deref() == Some(name)) {
            bail!("preset {name:?} listed twice; use a cohort file for repeated groups");
        }
        groups.push(CohortGroup {
            id_prefix: format!("{name}-"),
            count,
            preset: Some(name.to_string()),
            overrides: Default::default(),
        });
    }
    Ok(CohortSpec { groups })
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let set_paths = collect_set_paths(&args.input)?;
    let mut sets = Vec::with_capacity(set_paths.len());
    for path in &set_paths {
        let file =
            File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        let set = DrillSet::read_json(BufReader::new(file))
            .with_context(|| format!("itembank: {}", path.display()))?;
        sets.push(set);
    }

    let spec = match (&args.cohort, &args.preset) {
        (Some(path), None) => {
            let file =
                File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
            serde_json::from_reader::<_, CohortSpec>(BufReader::new(file))
                .with_context(|| format!("learner: bad cohort spec {}", path.display()))?
        }
        (None, Some(preset)) => parse_preset_spec(preset)?,
        _ => bail!("exactly one of --cohort or --preset is required"),
    };
    let members = spec.expand().context("learner")?;

    let log = simulate_cohort(&members, &sets, args.attempts, args.seed).context("learner")?;

    let out_dir = parent_dir(&args.out);
    create_out_dir(&out_dir)?;
    let file =
        File::create(&args.out).with_context(|| format!("cannot write {}", args.out.display()))?;
    log.write_jsonl(BufWriter::new(file)).context("logstore")?;

    let mut manifest = Manifest::new(
        "simulate",
        json!({
            "sets": set_paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "cohort": args.cohort.as_ref().map(|p| p.display().to_string()),
            "preset": args.preset,
            "attempts": args.attempts,
            "seed": args.seed,
            "out": args.out.display().to_string(),
        }),
    );
    for path in &set_paths {
        manifest.add_input(path)?;
    }
    if let Some(path) = &args.cohort {
        manifest.add_input(path)?;
    }
    manifest.add_output(&args.out)?;
    let manifest_path = manifest.write(&out_dir)?;
    println!(
        "simulated {} students x {} sets x {} attempts -> {} records at {}",
        members.len(),
        sets.len(),
        args.attempts,
        log.len(),
        args.out.display()
    );
    println!("manifest at {}", manifest_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// features

pub fn features(args: &FeaturesArgs) -> Result<()> {
    let log = read_log(&args.input, args.map.as_deref())?;
    let rows = derive_features(&log);

    let out_dir = parent_dir(&args.out);
    create_out_dir(&out_dir)?;
    let file =
        File::create(&args.out).with_context(|| format!("cannot write {}", args.out.display()))?;
    write_features_csv(&rows, BufWriter::new(file)).context("features")?;

    let mut manifest = Manifest::new(
        "features",
        json!({
            "in": args.input.display().to_string(),
            "map": args.map,
            "out": args.out.display().to_string(),
        }),
    );
    manifest.add_input(&args.input)?;
    manifest.add_output(&args.out)?;
    manifest.write(&out_dir)?;
    println!("derived {} feature rows -> {}", rows.len(), args.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// analyze-rote

fn describe_fit(label: &str, fit: &Option<CurveFit>) -> String {
    let Some(fit) = fit else {
        return format!("{label}: no rows in range");
    };
    let mut s = format!(
        "{label}: intercept {:+.4} (se {:.4}), slope/attempt {:+.5} (se {:.5}), n {}",
        fit.intercept, fit.intercept_se, fit.slope, fit.slope_se, fit.n
    );
    if !fit.converged {
        s.push_str(" [not converged]");
    }
    if fit.separation {
        s.push_str(" [separation]");
    }
    s
}

pub fn analyze_rote(args: &RoteArgs) -> Result<()> {
    let log = read_log(&args.input, args.map.as_deref())?;
    let rows = derive_features(&log);
    let table = attempt_curves(&rows, args.t_max).context("rote")?;

    create_out_dir(&args.out)?;
    let curves_path = args.out.join("curves.csv");
    let file = File::create(&curves_path)
        .with_context(|| format!("cannot write {}", curves_path.display()))?;
    write_curves_csv(&table, BufWriter::new(file)).context("rote")?;

    let fit_path = args.out.join("rote_fit.json");
    write_pretty_json(&fit_path, &table)?;

    let mut manifest = Manifest::new(
        "analyze-rote",
        json!({
            "in": args.input.display().to_string(),
            "map": args.map,
            "t_max": args.t_max,
            "out": args.out.display().to_string(),
        }),
    );
    manifest.add_input(&args.input)?;
    manifest.add_output(&curves_path)?;
    manifest.add_output(&fit_path)?;
    manifest.write(&args.out)?;

    println!("attempt curves up to t={} -> {}", table.t_max, curves_path.display());
    println!("  {}", describe_fit("seen", &table.seen_fit));
    println!("  {}", describe_fit("unseen", &table.unseen_fit));
    Ok(())
}

// ---------------------------------------------------------------------------
// analyze-hints

pub fn analyze_hints(args: &HintsArgs) -> Result<()> {
    let log = read_log(&args.input, args.map.as_deref())?;
    let report = hint_report(&log, args.ridge).context("hints")?;

    create_out_dir(&args.out)?;
    let json_path = args.out.join("hints.json");
    write_pretty_json(&json_path, &report)?;

    let mut manifest = Manifest::new(
        "analyze-hints",
        json!({
            "in": args.input.display().to_string(),
            "map": args.map,
            "ridge": args.ridge,
            "out": args.out.display().to_string(),
        }),
    );
    manifest.add_input(&args.input)?;
    manifest.add_output(&json_path)?;
    manifest.write(&args.out)?;

    print!("{}", report.render());
    println!("\nwrote {}", json_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// power

fn read_outcome_rows(path: &Path, map: Option<&str>) -> Result<Vec<OutcomeRow>> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        let file =
            File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        return read_outcomes_csv(BufReader::new(file)).context("power");
    }
    let log = read_log(path, map)?;
    let rows = outcomes_from_triplets(&extract_triplets(&log));
    if rows.is_empty() {
        bail!("power: {} has no wrong-start three-serve sessions to resample", path.display());
    }
    Ok(rows)
}

fn default_grid(n_rows: usize) -> Vec<u32> {
    let cap = (n_rows as u32).saturating_mul(10).max(50);
    let mut grid = Vec::new();
    let mut n = 50u32.min(cap);
    loop {
        grid.push(n);
        if n >= cap {
            return grid;
        }
        n = (((f64::from(n)) * 1.3).round() as u32).clamp(n + 1, cap);
    }
}

pub fn power(args: &PowerArgs) -> Result<()> {
    let rows = read_outcome_rows(&args.input, args.map.as_deref())?;
    let config = PowerConfig {
        alpha: args.alpha,
        n_sims: args.sims,
        seed: args.seed,
        ..PowerConfig::default()
    };

    create_out_dir(&args.out)?;
    let curve_path = args.out.join("power_curve.csv");
    let mut manifest = Manifest::new(
        "power",
        json!({
            "in": args.input.display().to_string(),
            "map": args.map,
            "alpha": args.alpha,
            "sims": args.sims,
            "seed": args.seed,
            "n": args.n,
            "target": args.target,
            "rows": rows.len(),
            "out": args.out.display().to_string(),
        }),
    );
    manifest.add_input(&args.input)?;

    let points = if let Some(target) = args.target {
        let result = required_n(&rows, target, &config).context("power")?;
        let result_path = args.out.join("required_n.json");
        write_pretty_json(&result_path, &result)?;
        manifest.add_output(&result_path)?;
        println!(
            "power reaches {:.3} at n = {} ({} curve points evaluated)",
            target,
            result.n,
            result.evaluations.len()
        );
        result.evaluations
    } else {
        let ns = if args.n.is_empty() { default_grid(rows.len()) } else { args.n.clone() };
        let points = estimate_curve(&rows, &ns, &config).context("power")?;
        for p in &points {
            println!("  n {:>6}: power {:.4} (se {:.4})", p.n, p.power, p.mc_se());
        }
        points
    };

    let file = File::create(&curve_path)
        .with_context(|| format!("cannot write {}", curve_path.display()))?;
    write_curve_csv(&points, BufWriter::new(file)).context("power")?;
    manifest.add_output(&curve_path)?;
    manifest.write(&args.out)?;
    println!("curve -> {}", curve_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// fixtures

pub fn fixtures(args: &FixturesArgs) -> Result<()> {
    let paths = drillscope::fixtures::write_all(&args.out).context("fixtures")?;
    let mut manifest =
        Manifest::new("fixtures", json!({ "out": args.out.display().to_string() }));
    for path in &paths {
        manifest.add_output(path)?;
        println!("  {}", path.display());
    }
    manifest.write(&args.out)?;
    println!("wrote {} fixture files", paths.len());
    Ok(())
}

// ---------------------------------------------------------------------------
// report

pub fn report(args: &ReportArgs) -> Result<()> {
    let log = read_log(&args.input, args.map.as_deref())?;
    let hints = hint_report(&log, args.ridge).context("hints")?;

    let mut notes = Vec::new();
    let rote: Option<CurveTable> = match attempt_curves(&derive_features(&log), args.t_max) {
        Ok(table) => Some(table),
        Err(e) => {
            notes.push(format!("attempt-curve analysis skipped: {e}"));
            None
        }
    };

    #[derive(serde::Serialize)]
    struct ReportDoc {
        hints: drillscope::HintReport,
        rote: Option<CurveTable>,
        notes: Vec<String>,
    }
    let doc = ReportDoc { hints, rote, notes };

    create_out_dir(&args.out)?;
    let json_path = args.out.join("report.json");
    write_pretty_json(&json_path, &doc)?;

    let mut manifest = Manifest::new(
        "report",
        json!({
            "in": args.input.display().to_string(),
            "map": args.map,
            "ridge": args.ridge,
            "t_max": args.t_max,
            "out": args.out.display().to_string(),
        }),
    );
    manifest.add_input(&args.input)?;
    manifest.add_output(&json_path)?;
    manifest.write(&args.out)?;

    print!("{}", doc.hints.render());
    if let Some(table) = &doc.rote {
        println!("\nattempt curves (t <= {})", table.t_max);
        println!("  {}", describe_fit("seen", &table.seen_fit));
        println!("  {}", describe_fit("unseen", &table.unseen_fit));
    }
    for note in &doc.notes {
        println!("\nnote: {note}");
    }
    println!("\nwrote {}", json_path.display());
    Ok(())
}

fn write_pretty_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut json = serde_json::to_string_pretty(value)?;
    json.push('\n');
    fs::write(path, json).with_context(|| format!("cannot write {}", path.display()))
}
