//! Information-curve sweeps over input length, CoT detail, or test length
//! under a fixed training distribution.

use serde::Serialize;

use super::config::{ExperimentConfig, ModeKind, Resolved, SweepConfig};
use super::seed::child_seed;
use crate::cotinfo::{class_pair_stats, info_curve, monte_carlo_info_curve, transfer_info_curve, InfoCurve, PairStats};
use crate::dfa::DetailLevel;
use crate::error::{Error, Result};
use crate::model::{ExtReal, FiniteDistribution, HypothesisClass};
use crate::with_class;

/// The curve at one sweep value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub sweep: String,
    pub value: String,
    pub curve: InfoCurve,
}

/// The curve of a resolved experiment, exact or Monte Carlo per `cfg.mode`.
pub fn compute_curve(cfg: &ExperimentConfig, r: &Resolved) -> Result<InfoCurve> {
    with_class!(&r.class, c => {
        let hstar = c.hypothesis(r.target_id);
        match cfg.mode {
            ModeKind::Exact => info_curve(&hstar, c, &r.distribution, cfg.budget),
            ModeKind::MonteCarlo => monte_carlo_info_curve(
                &hstar,
                c,
                &r.distribution,
                cfg.mc_samples,
                child_seed(cfg.seed, &[0x4D43]),
                cfg.budget,
            ),
        }
    })
}

/// Exact pairwise statistics of a resolved experiment.
pub fn compute_pair_stats(cfg: &ExperimentConfig, r: &Resolved) -> Result<Vec<PairStats>> {
    with_class!(&r.class, c => class_pair_stats(&c.hypothesis(r.target_id), c, &r.distribution, cfg.budget))
}

pub fn run_info_sweep(cfg: &ExperimentConfig, sweep: &SweepConfig) -> Result<Vec<SweepPoint>> {
    match sweep {
        SweepConfig::Length { lengths } => {
            if lengths.is_empty() {
                return Err(Error::config("sweep.lengths", "empty sweep"));
            }
            lengths
                .iter()
                .map(|&n| {
                    let r = cfg.resolve(Some(n), None)?;
                    Ok(SweepPoint {
                        sweep: "length".into(),
                        value: n.to_string(),
                        curve: compute_curve(cfg, &r)?,
                    })
                })
                .collect()
        }
        SweepConfig::Detail { details } => {
            if details.is_empty() {
                return Err(Error::config("sweep.details", "empty sweep"));
            }
            details
                .iter()
                .map(|&t| {
                    let r = cfg.resolve(None, Some(t))?;
                    Ok(SweepPoint {
                        sweep: "detail".into(),
                        value: t.to_string(),
                        curve: compute_curve(cfg, &r)?,
                    })
                })
                .collect()
        }
        SweepConfig::Transfer {
            train_length,
            test_lengths,
        } => {
            if test_lengths.is_empty() {
                return Err(Error::config("sweep.test_lengths", "empty sweep"));
            }
            let r = cfg.resolve(Some(*train_length), None)?;
            test_lengths
                .iter()
                .map(|&n| {
                    let d_test = FiniteDistribution::uniform_strings(r.class.alphabet_size(), n)?;
                    let curve = with_class!(&r.class, c => transfer_info_curve(
                        &c.hypothesis(r.target_id),
                        c,
                        &r.distribution,
                        &d_test,
                        cfg.budget,
                    ))?;
                    Ok(SweepPoint {
                        sweep: format!("transfer_train_{train_length}"),
                        value: n.to_string(),
                        curve,
                    })
                })
                .collect()
        }
    }
}

/// A row of `info_sweep.csv`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub sweep: String,
    pub value: String,
    pub epsilon: f64,
    pub info: ExtReal,
    pub ratio_to_eps_plus: ExtReal,
}

/// A row of `sweep_summary.csv`; `epsilon_star` is "undefined" when no
/// member disagrees with the target.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSummaryRow {
    pub sweep: String,
    pub value: String,
    pub epsilon_star: String,
    pub info_at_zero_plus: ExtReal,
    pub ratio_at_zero: ExtReal,
}

pub fn sweep_rows(points: &[SweepPoint]) -> (Vec<SweepRow>, Vec<SweepSummaryRow>) {
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for p in points {
        for r in p.curve.rows() {
            rows.push(SweepRow {
                sweep: p.sweep.clone(),
                value: p.value.clone(),
                epsilon: r.epsilon,
                info: r.info,
                ratio_to_eps_plus: r.ratio_to_eps_plus,
            });
        }
        summary.push(SweepSummaryRow {
            sweep: p.sweep.clone(),
            value: p.value.clone(),
            epsilon_star: p
                .curve
                .epsilon_star
                .map_or_else(|| "undefined".to_string(), |e| e.to_string()),
            info_at_zero_plus: p.curve.info_at_zero_plus,
            ratio_at_zero: p.curve.headline_ratio(),
        });
    }
    (rows, summary)
}

/// Detail levels `0, 1, ..., n` for a detail sweep at length `n`.
pub fn detail_levels(n: usize) -> Vec<DetailLevel> {
    (0..=n).map(DetailLevel::Prefix).collect()
}
