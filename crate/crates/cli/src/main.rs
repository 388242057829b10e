//! `cotlearn`: information curves, learning experiments, sweeps and bounds
//! for finite CoT hypothesis classes, driven by a JSON config.
//!
//! Exit codes: 0 success, 1 other failure (including a failed invariant
//! suite), 2 config error, 3 exact-mode budget exceeded.

use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cotlearn::bounds::{
    e2e_upper, expected_error_lower, fano_lower, mdl_error_bound, mdl_upper_prior, mixed_upper, realizable_upper,
    two_point_lower, write_bounds_csv, BoundEntry, PairInfoMode, Variant,
};
use cotlearn::cotinfo::{gamma_from_stats, write_info_curve_csv, write_pairwise_csv, InfoCurve};
use cotlearn::harness::config::{load_config, ExperimentConfig, ModeKind, Resolved, SweepConfig};
use cotlearn::harness::experiment::{
    empirical_sample_complexity, mean_risks, run_learning_experiment, sample_complexity_ratio, zero_error_probability,
    ExperimentRecord,
};
use cotlearn::harness::output::{
    with_file, write_json, write_learning, write_rows, write_sample_complexity, write_zero_error,
};
use cotlearn::harness::sweep::{compute_curve, compute_pair_stats, run_info_sweep, sweep_rows};
use cotlearn::harness::validate::{run_property_suite, SuiteOptions};
use cotlearn::harness::with_workers;
use cotlearn::rules::Prior;
use cotlearn::{with_class, Error, ExtReal};

#[derive(Parser)]
#[command(
    name = "cotlearn",
    version,
    about = "CoT information and sample-complexity experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact (or Monte Carlo) information curve and pairwise statistics.
    InfoCurve(Common),
    /// Information curves over input lengths or CoT detail levels.
    InfoSweep(Common),
    /// Learning experiment: learning.csv and zero_error.csv.
    Learn(Common),
    /// Learning experiment plus the empirical sample-complexity table.
    SampleComplexity(Common),
    /// Curves with a fixed training distribution and varying test length.
    Transfer(Common),
    /// Upper and lower bounds evaluated on the exact curve.
    Bounds(Common),
    /// Runs the invariant suite.
    Validate(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Mc,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    workers: Option<usize>,
}

impl Common {
    fn load(&self) -> cotlearn::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => load_config(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(m) = self.mode {
            cfg.mode = match m {
                ModeArg::Exact => ModeKind::Exact,
                ModeArg::Mc => ModeKind::MonteCarlo,
            };
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        if self.workers.is_some() {
            cfg.workers = self.workers;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Serialize)]
struct CurveSummary {
    cardinality: u64,
    target_id: u64,
    epsilon_star: Option<f64>,
    info_at_zero_plus: ExtReal,
    headline_ratio: ExtReal,
    breakpoints: usize,
}

fn summary(r: &Resolved, curve: &InfoCurve) -> CurveSummary {
    CurveSummary {
        cardinality: r.class.cardinality(),
        target_id: r.target_id,
        epsilon_star: curve.epsilon_star,
        info_at_zero_plus: curve.info_at_zero_plus,
        headline_ratio: curve.headline_ratio(),
        breakpoints: curve.breakpoints.len(),
    }
}

fn info_curve_cmd(cfg: &ExperimentConfig) -> cotlearn::Result<Vec<PathBuf>> {
    let dir = &cfg.output_dir;
    let r = cfg.resolve(None, None)?;
    let mut paths = Vec::new();
    let curve = match cfg.mode {
        ModeKind::Exact => {
            let stats = compute_pair_stats(cfg, &r)?;
            paths.push(with_file(dir, "pairwise.csv", |w| write_pairwise_csv(&stats, w))?);
            InfoCurve::from_pair_stats(&stats)
        }
        ModeKind::MonteCarlo => compute_curve(cfg, &r)?,
    };
    paths.push(with_file(dir, "info_curve.csv", |w| write_info_curve_csv(&curve, w))?);
    paths.push(write_json(dir, "info_curve.json", &summary(&r, &curve))?);
    Ok(paths)
}

fn sweep_cmd(cfg: &ExperimentConfig, transfer: bool) -> cotlearn::Result<Vec<PathBuf>> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| config_error("sweep", "this subcommand needs a sweep section"))?;
    let is_transfer = matches!(sweep, SweepConfig::Transfer { .. });
    if transfer != is_transfer {
        let want = if transfer { "transfer" } else { "length or detail" };
        return Err(config_error("sweep.kind", &format!("expected a {want} sweep")));
    }
    let points = run_info_sweep(cfg, sweep)?;
    let (rows, summary) = sweep_rows(&points);
    let stem = if transfer { "transfer" } else { "info_sweep" };
    Ok(vec![
        write_rows(&cfg.output_dir, &format!("{stem}.csv"), &rows)?,
        write_rows(&cfg.output_dir, &format!("{stem}_summary.csv"), &summary)?,
    ])
}

fn learn(cfg: &ExperimentConfig) -> cotlearn::Result<Vec<ExperimentRecord>> {
    let r = cfg.resolve(None, None)?;
    let spec = cfg.learning_spec(&r.class)?;
    with_class!(&r.class, c => run_learning_experiment(c, r.target_id, &r.distribution, &spec))
}

#[derive(Serialize)]
struct MeanRow {
    rule: String,
    m: u64,
    mean_risk: f64,
}

#[derive(Serialize)]
struct LearnReport {
    records: usize,
    unrealizable_trials: usize,
    means: Vec<MeanRow>,
    /// `(ε, m_EtECons / m_CoTCons)` at the smallest `ε` both reach.
    ratio_e2e_to_cot: Option<(f64, f64)>,
}

fn learn_cmd(cfg: &ExperimentConfig, complexity: bool) -> cotlearn::Result<Vec<PathBuf>> {
    let records = learn(cfg)?;
    let dir = &cfg.output_dir;
    let mut paths = vec![
        write_learning(dir, &records)?,
        write_zero_error(dir, &zero_error_probability(&records))?,
    ];
    let rows = empirical_sample_complexity(&records, &cfg.epsilons);
    if complexity {
        paths.push(write_sample_complexity(dir, &rows)?);
    }
    let report = LearnReport {
        records: records.len(),
        unrealizable_trials: records.iter().filter(|r| r.unrealizable).count(),
        means: mean_risks(&records)
            .into_iter()
            .map(|(rule, m, mean_risk)| MeanRow { rule, m, mean_risk })
            .collect(),
        ratio_e2e_to_cot: sample_complexity_ratio(&rows, "EtECons", "CoTCons"),
    };
    paths.push(write_json(dir, "learn_report.json", &report)?);
    Ok(paths)
}

fn bounds_cmd(cfg: &ExperimentConfig) -> cotlearn::Result<Vec<PathBuf>> {
    let r = cfg.resolve(None, None)?;
    let stats = compute_pair_stats(cfg, &r)?;
    let curve = InfoCurve::from_pair_stats(&stats);
    let card = r.class.cardinality();
    let log_card = (card as f64).ln();
    let delta = cfg.delta;
    let prior_mass = 1.0 / card as f64;
    let uniform = Prior::uniform(card);
    let mut entries = Vec::new();
    for &eps in &cfg.epsilons {
        let info = curve.eval(eps);
        let p = |extra: &[(&'static str, String)]| -> Vec<(&'static str, String)> {
            let mut v = vec![("epsilon", eps.to_string()), ("delta", delta.to_string())];
            v.extend(extra.iter().cloned());
            v
        };
        entries.push(BoundEntry::from_value(
            "realizable_upper_finite",
            &p(&[]),
            &realizable_upper(log_card, info, delta, Variant::Finite)?,
        ));
        if eps > 0.0 {
            entries.push(BoundEntry::from_value(
                "e2e_upper",
                &p(&[]),
                &e2e_upper(log_card, eps, delta)?,
            ));
        }
        entries.push(BoundEntry::new(
            "two_point_lower",
            &p(&[]),
            two_point_lower(info, delta)?,
            None,
        ));
        entries.push(BoundEntry::from_value(
            "mdl_upper_uniform",
            &p(&[]),
            &mdl_upper_prior(&uniform, r.target_id, info, delta)?,
        ));
        for gamma in [0.0, 1.0] {
            entries.push(BoundEntry::from_value(
                "mixed_upper",
                &p(&[("gamma", gamma.to_string())]),
                &mixed_upper(log_card, gamma, info, eps, delta)?,
            ));
        }
        let g = gamma_from_stats(&stats, eps);
        entries.push(BoundEntry::new(
            "gamma",
            &p(&[]),
            g.value,
            g.empty.then_some("empty disagreement set"),
        ));
    }
    for m in cfg.m_grid.resolve()? {
        let params = [("m", m.to_string())];
        entries.push(BoundEntry::new(
            "expected_error_lower",
            &params,
            expected_error_lower(&curve, m),
            None,
        ));
        let params = [("m", m.to_string()), ("delta", delta.to_string())];
        entries.push(BoundEntry::new(
            "mdl_error_bound_uniform",
            &params,
            mdl_error_bound(&curve, prior_mass, m, delta)?,
            None,
        ));
    }
    if let Some(q) = cfg.channel {
        'fano: for &eps in cfg.epsilons.iter().filter(|&&e| e > 0.0) {
            for mode in [PairInfoMode::MaxPairHalf, PairInfoMode::MaxEntry] {
                let f = match with_class!(&r.class, c => fano_lower(c, &r.distribution, q, eps, mode, cfg.budget)) {
                    Ok(f) => f,
                    Err(Error::BudgetExceeded { .. }) => {
                        // zero samples is a valid, vacuous threshold
                        let params = [("error_rate", q.error_rate.to_string())];
                        let flag = Some("packing skipped: exact budget exceeded");
                        entries.push(BoundEntry::new("fano_m_threshold", &params, 0.0, flag));
                        break 'fano;
                    }
                    Err(e) => return Err(e),
                };
                let tag = match mode {
                    PairInfoMode::MaxPairHalf => "max_pair_half",
                    PairInfoMode::MaxEntry => "max_entry",
                };
                let params = [
                    ("epsilon", eps.to_string()),
                    ("error_rate", q.error_rate.to_string()),
                    ("outcomes", q.outcome_count.to_string()),
                    ("pair_info", tag.to_string()),
                    ("packing_size", f.packing_size.to_string()),
                ];
                let flag = f.degenerate.then_some("all packing pairs have infinite information");
                entries.push(BoundEntry::new("fano_m_threshold", &params, f.m_threshold, flag));
            }
        }
    }
    let dir = &cfg.output_dir;
    Ok(vec![
        with_file(dir, "bounds.csv", |w| write_bounds_csv(&entries, w))?,
        write_json(dir, "bounds.json", &entries)?,
    ])
}

fn validate_cmd(cfg: &ExperimentConfig) -> cotlearn::Result<(Vec<PathBuf>, bool)> {
    let opts = SuiteOptions {
        seed: cfg.seed,
        budget: cfg.budget,
        ..SuiteOptions::default()
    };
    let checks = run_property_suite(&opts)?;
    for c in &checks {
        println!("{} {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let ok = checks.iter().all(|c| c.passed);
    Ok((vec![write_json(&cfg.output_dir, "validate.json", &checks)?], ok))
}

fn config_error(field: &str, message: &str) -> Error {
    Error::Config {
        field: field.to_string(),
        message: message.to_string(),
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::Config { .. }) => 2,
        Some(Error::BudgetExceeded { .. } | Error::TooLargeForExact { .. }) => 3,
        _ => 1,
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let (common, name) = match &cli.command {
        Command::InfoCurve(c) => (c, "info-curve"),
        Command::InfoSweep(c) => (c, "info-sweep"),
        Command::Learn(c) => (c, "learn"),
        Command::SampleComplexity(c) => (c, "sample-complexity"),
        Command::Transfer(c) => (c, "transfer"),
        Command::Bounds(c) => (c, "bounds"),
        Command::Validate(c) => (c, "validate"),
    };
    let cfg = common.load()?;
    let workers = cfg.workers;
    let (paths, ok) = with_workers(workers, || -> cotlearn::Result<(Vec<PathBuf>, bool)> {
        Ok(match &cli.command {
            Command::InfoCurve(_) => (info_curve_cmd(&cfg)?, true),
            Command::InfoSweep(_) => (sweep_cmd(&cfg, false)?, true),
            Command::Transfer(_) => (sweep_cmd(&cfg, true)?, true),
            Command::Learn(_) => (learn_cmd(&cfg, false)?, true),
            Command::SampleComplexity(_) => (learn_cmd(&cfg, true)?, true),
            Command::Bounds(_) => (bounds_cmd(&cfg)?, true),
            Command::Validate(_) => validate_cmd(&cfg)?,
        })
    })??;
    if let Some(p) = &common.config {
        copy_config(p, &cfg.output_dir).with_context(|| format!("{name}: copying config"))?;
    }
    for p in paths {
        eprintln!("wrote {}", p.display());
    }
    Ok(ok)
}

/// Keeps the config next to its outputs.
fn copy_config(src: &Path, dir: &Path) -> anyhow::Result<()> {
    let dst = dir.join("config.json");
    if src.canonicalize().ok() == dst.canonicalize().ok() {
        return Ok(());
    }
    let mut r = File::open(src)?;
    let mut w = File::create(&dst)?;
    std::io::copy(&mut r, &mut w)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
