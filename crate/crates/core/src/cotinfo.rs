//! CoT information: pairwise statistics, the `I(ε)` step curve, the `γ(ε)`
//! conversion, the agnostic variant and the transfer variant.
//!
//! Exact computations enumerate the whole support. Monte Carlo estimates
//! run the same exact code on the empirical distribution of a sample.
//!
//! The realizable set `Δ(ε)` uses the strict condition `d_ete > ε`; the
//! agnostic set uses the non-strict `excess e2e risk ≥ ε`.

use std::collections::BTreeMap;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    joint_risks, CotHypothesis, CotOutput, ExtReal, FiniteDistribution, HypothesisClass, InputSeq, JointDistribution,
    Symbol, Token,
};

/// Upper limits for exact enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct ExactBudget {
    /// Maximum `|H| × |support|` hypothesis evaluations.
    pub max_evaluations: u128,
    /// Maximum support size held in memory.
    pub max_support: u128,
}

impl Default for ExactBudget {
    fn default() -> Self {
        ExactBudget {
            max_evaluations: 1 << 34,
            max_support: 1 << 22,
        }
    }
}

impl ExactBudget {
    pub fn check(&self, cardinality: u64, support: usize) -> Result<()> {
        if support as u128 > self.max_support {
            return Err(Error::BudgetExceeded {
                required: support as u128,
                budget: self.max_support,
            });
        }
        let required = cardinality as u128 * support as u128;
        if required > self.max_evaluations {
            return Err(Error::BudgetExceeded {
                required,
                budget: self.max_evaluations,
            });
        }
        Ok(())
    }
}

/// Statistics of one hypothesis against the target.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairStats {
    pub hypothesis_id: u64,
    /// `P[y ≠ y*]`.
    pub d_ete: f64,
    /// `P[(y, z) = (y*, z*)]`.
    pub joint_agreement: f64,
    /// `-ln joint_agreement`.
    pub rel_info: ExtReal,
    /// `P[(y, z) ≠ (y*, z*)]`, summed separately from the agreement.
    pub cot_risk: f64,
}

/// Target outputs over a support, flattened as `y, z_1, ..., z_T` per input.
pub(crate) struct TargetTable {
    tokens: Vec<Token>,
    offsets: Vec<usize>,
}

impl TargetTable {
    pub(crate) fn build<H: CotHypothesis + ?Sized>(hstar: &H, d: &FiniteDistribution) -> Result<Self> {
        d.check_domain(hstar)?;
        let n = d.support_len()?;
        let mut tokens = Vec::new();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut out = CotOutput::default();
        offsets.push(0);
        d.for_each_input(|_, x, _| {
            hstar.eval_into(x, &mut out);
            tokens.push(out.y);
            tokens.extend_from_slice(&out.z);
            offsets.push(tokens.len());
        })?;
        Ok(TargetTable { tokens, offsets })
    }

    #[inline]
    fn get(&self, i: usize) -> (Token, &[Token]) {
        let row = &self.tokens[self.offsets[i]..self.offsets[i + 1]];
        (row[0], &row[1..])
    }
}

/// Evaluates `h` on every support input and reports
/// `(index, probability, output differs, output or CoT differs)`.
#[inline]
pub(crate) fn scan_hypothesis<H: CotHypothesis + ?Sized>(
    h: &H,
    d: &FiniteDistribution,
    target: &TargetTable,
    out: &mut CotOutput,
    mut visit: impl FnMut(usize, f64, bool, bool),
) {
    d.for_each_input(|i, x, p| {
        h.eval_into(x, out);
        let (y, z) = target.get(i);
        let y_bad = out.y != y;
        visit(i, p, y_bad, y_bad || out.z.as_slice() != z);
    })
    .expect("support size checked by the caller");
}

struct Sums {
    d_ete: f64,
    /// Mass where the output matches but the CoT does not.
    z_only: f64,
    agree: f64,
    agree_count: usize,
    disagree_count: usize,
}

fn sums<H: CotHypothesis + ?Sized>(h: &H, d: &FiniteDistribution, target: &TargetTable, out: &mut CotOutput) -> Sums {
    let mut s = Sums {
        d_ete: 0.0,
        z_only: 0.0,
        agree: 0.0,
        agree_count: 0,
        disagree_count: 0,
    };
    scan_hypothesis(h, d, target, out, |_, p, y_bad, any_bad| {
        if y_bad {
            s.d_ete += p;
        } else if any_bad {
            s.z_only += p;
        }
        if any_bad {
            s.disagree_count += 1;
        } else {
            s.agree += p;
            s.agree_count += 1;
        }
    });
    s
}

impl Sums {
    /// Full agreement and full disagreement are reported as exactly 1 and 0
    /// so that rounding in the support weights cannot move them.
    fn agreement(&self) -> f64 {
        if self.disagree_count == 0 {
            1.0
        } else if self.agree_count == 0 {
            0.0
        } else {
            self.agree
        }
    }

    fn cot_risk(&self) -> f64 {
        if self.disagree_count == 0 {
            0.0
        } else if self.agree_count == 0 {
            1.0
        } else {
            (self.d_ete() + self.z_only).min(1.0)
        }
    }

    fn d_ete(&self) -> f64 {
        self.d_ete.min(1.0)
    }

    fn into_stats(self, id: u64) -> PairStats {
        let agreement = self.agreement();
        PairStats {
            hypothesis_id: id,
            d_ete: self.d_ete(),
            joint_agreement: agreement,
            rel_info: ExtReal::neg_log(agreement),
            cot_risk: self.cot_risk(),
        }
    }
}

/// Exact statistics of `h` against `hstar` under `d`.
pub fn pair_stats<A, B>(hstar: &A, h: &B, d: &FiniteDistribution) -> Result<PairStats>
where
    A: CotHypothesis + ?Sized,
    B: CotHypothesis + ?Sized,
{
    d.check_domain(h)?;
    let target = TargetTable::build(hstar, d)?;
    Ok(sums(h, d, &target, &mut CotOutput::default()).into_stats(h.id()))
}

fn check_class_domain<C: HypothesisClass>(cls: &C, d: &FiniteDistribution) -> Result<()> {
    if cls.cardinality() == 0 {
        return Err(Error::param("hypothesis class is empty"));
    }
    // members of a class share one domain
    d.check_domain(&cls.hypothesis(0))
}

/// Exact statistics for every member of `cls`, in id order.
pub fn class_pair_stats<H, C>(hstar: &H, cls: &C, d: &FiniteDistribution, budget: ExactBudget) -> Result<Vec<PairStats>>
where
    H: CotHypothesis + ?Sized,
    C: HypothesisClass,
{
    let n = d.support_len()?;
    budget.check(cls.cardinality(), n)?;
    check_class_domain(cls, d)?;
    let target = TargetTable::build(hstar, d)?;
    Ok((0..cls.cardinality())
        .into_par_iter()
        .map_init(CotOutput::default, |out, id| {
            let h = cls.hypothesis(id);
            sums(&h, d, &target, out).into_stats(id)
        })
        .collect())
}

/// Statistics with `d_ete` measured under `d_test` and agreement and CoT
/// risk measured under `d_train`.
pub fn transfer_pair_stats<H, C>(
    hstar: &H,
    cls: &C,
    d_train: &FiniteDistribution,
    d_test: &FiniteDistribution,
    budget: ExactBudget,
) -> Result<Vec<PairStats>>
where
    H: CotHypothesis + ?Sized,
    C: HypothesisClass,
{
    let train = class_pair_stats(hstar, cls, d_train, budget)?;
    let test = class_pair_stats(hstar, cls, d_test, budget)?;
    Ok(train
        .into_iter()
        .zip(test)
        .map(|(tr, te)| PairStats { d_ete: te.d_ete, ..tr })
        .collect())
}

/// One step of the curve: `I(ε) = info` for `ε` just below `epsilon`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Breakpoint {
    /// A distinct nonzero `d_ete` value.
    pub epsilon: f64,
    /// Minimum `rel_info` over hypotheses with `d_ete ≥ epsilon`.
    pub info: ExtReal,
    pub argmin: u64,
    pub argmin_d_ete: f64,
}

/// The step function `ε ↦ I(ε)`.
///
/// With breakpoints `e_1 < ... < e_K`, the curve equals `info_k` on
/// `[e_{k-1}, e_k)` (`e_0 = 0`) and `+inf` from `e_K` on.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InfoCurve {
    pub breakpoints: Vec<Breakpoint>,
    /// Smallest nonzero `d_ete`; `None` when every member agrees with the
    /// target on outputs.
    pub epsilon_star: Option<f64>,
    pub info_at_zero_plus: ExtReal,
}

/// A row of `info_curve.csv`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveRow {
    pub epsilon: f64,
    pub info: ExtReal,
    pub ratio_to_eps_plus: ExtReal,
}

impl InfoCurve {
    pub fn from_pair_stats(stats: &[PairStats]) -> Self {
        let mut active: Vec<&PairStats> = stats.iter().filter(|s| s.d_ete > 0.0).collect();
        active.sort_by(|a, b| b.d_ete.total_cmp(&a.d_ete).then(a.hypothesis_id.cmp(&b.hypothesis_id)));
        let mut breakpoints = Vec::new();
        let mut best: Option<&PairStats> = None;
        let mut i = 0;
        while i < active.len() {
            let e = active[i].d_ete;
            while i < active.len() && active[i].d_ete == e {
                let s = active[i];
                if best.is_none_or(|b| s.rel_info < b.rel_info) {
                    best = Some(s);
                }
                i += 1;
            }
            let b = best.expect("group is non-empty");
            breakpoints.push(Breakpoint {
                epsilon: e,
                info: b.rel_info,
                argmin: b.hypothesis_id,
                argmin_d_ete: b.d_ete,
            });
        }
        breakpoints.reverse();
        InfoCurve {
            epsilon_star: breakpoints.first().map(|b| b.epsilon),
            info_at_zero_plus: breakpoints.first().map_or(ExtReal::Infinite, |b| b.info),
            breakpoints,
        }
    }

    /// `I(ε)`: minimum `rel_info` over `d_ete > ε`, `+inf` if none.
    pub fn eval(&self, epsilon: f64) -> ExtReal {
        let k = self.breakpoints.partition_point(|b| b.epsilon <= epsilon);
        self.breakpoints.get(k).map_or(ExtReal::Infinite, |b| b.info)
    }

    /// `ε⁺ = max(ε, ε*)`.
    pub fn epsilon_plus(&self, epsilon: f64) -> f64 {
        self.epsilon_star.map_or(epsilon, |s| epsilon.max(s))
    }

    /// `I(ε) / ε⁺`.
    pub fn ratio(&self, epsilon: f64) -> ExtReal {
        let eps_plus = self.epsilon_plus(epsilon);
        if eps_plus <= 0.0 {
            return ExtReal::Infinite;
        }
        self.eval(epsilon).div_by(eps_plus)
    }

    /// `I(0⁺) / ε*`.
    pub fn headline_ratio(&self) -> ExtReal {
        self.ratio(0.0)
    }

    /// The largest `d_ete`; `I` is `+inf` from here on.
    pub fn max_epsilon(&self) -> f64 {
        self.breakpoints.last().map_or(0.0, |b| b.epsilon)
    }

    /// Curve samples at `ε = 0` and every breakpoint.
    pub fn rows(&self) -> Vec<CurveRow> {
        let mut lefts = vec![0.0];
        lefts.extend(self.breakpoints.iter().map(|b| b.epsilon));
        lefts
            .into_iter()
            .map(|e| CurveRow {
                epsilon: e,
                info: self.eval(e),
                ratio_to_eps_plus: self.ratio(e),
            })
            .collect()
    }
}

/// Exact `I(ε)` curve of `cls` relative to `hstar` under `d`.
pub fn info_curve<H, C>(hstar: &H, cls: &C, d: &FiniteDistribution, budget: ExactBudget) -> Result<InfoCurve>
where
    H: CotHypothesis + ?Sized,
    C: HypothesisClass,
{
    Ok(InfoCurve::from_pair_stats(&class_pair_stats(hstar, cls, d, budget)?))
}

/// Transfer curve: `d_ete` under `d_test`, agreement under `d_train`.
/// `I(ε) ≥ ε` need not hold.
pub fn transfer_info_curve<H, C>(
    hstar: &H,
    cls: &C,
    d_train: &FiniteDistribution,
    d_test: &FiniteDistribution,
    budget: ExactBudget,
) -> Result<InfoCurve>
where
    H: CotHypothesis + ?Sized,
    C: HypothesisClass,
{
    Ok(InfoCurve::from_pair_stats(&transfer_pair_stats(
        hstar, cls, d_train, d_test, budget,
    )?))
}

/// `γ(ε)`, the minimum CoT risk over `Δ(ε)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Gamma {
    /// 1 when `Δ(ε)` is empty.
    pub value: f64,
    pub empty: bool,
    pub argmin: Option<u64>,
}

pub fn gamma_from_stats(stats: &[PairStats], epsilon: f64) -> Gamma {
    let best = stats.iter().filter(|s| s.d_ete > epsilon).min_by(|a, b| {
        a.cot_risk
            .total_cmp(&b.cot_risk)
            .then(a.hypothesis_id.cmp(&b.hypothesis_id))
    });
    match best {
        Some(s) => Gamma {
            value: s.cot_risk,
            empty: false,
            argmin: Some(s.hypothesis_id),
        },
        None => Gamma {
            value: 1.0,
            empty: true,
            argmin: None,
        },
    }
}

pub fn gamma_of_epsilon<H, C>(
    hstar: &H,
    cls: &C,
    d: &FiniteDistribution,
    epsilon: f64,
    budget: ExactBudget,
) -> Result<Gamma>
where
    H: CotHypothesis + ?Sized,
    C: HypothesisClass,
{
    Ok(gamma_from_stats(&class_pair_stats(hstar, cls, d, budget)?, epsilon))
}

/// Slack for comparing excess risks against `ε` in the agnostic set.
pub const RISK_TOLERANCE: f64 = 1e-12;

/// `I_ag(ε) = inf { L_cot(h) - L*_cot : L_ete(h) - L*_ete ≥ ε }`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AgnosticInfo {
    pub value: ExtReal,
    pub min_ete: f64,
    pub min_cot: f64,
    pub argmin: Option<u64>,
}

/// `(L_ete, L_cot)` of every member under a joint distribution, in id order.
pub fn class_joint_risks<C: HypothesisClass>(cls: &C, d: &JointDistribution) -> Result<Vec<(f64, f64)>> {
    (0..cls.cardinality())
        .into_par_iter()
        .map(|id| joint_risks(&cls.hypothesis(id), d))
        .collect()
}

pub fn agnostic_info_from_risks(risks: &[(f64, f64)], epsilon: f64) -> AgnosticInfo {
    let min_ete = risks.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let min_cot = risks.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let mut best: Option<(usize, f64)> = None;
    for (i, &(ete, cot)) in risks.iter().enumerate() {
        if ete - min_ete >= epsilon - RISK_TOLERANCE {
            let excess = (cot - min_cot).max(0.0);
            if best.is_none_or(|(_, v)| excess < v) {
                best = Some((i, excess));
            }
        }
    }
    AgnosticInfo {
        value: best.map_or(ExtReal::Infinite, |(_, v)| ExtReal::Finite(v)),
        min_ete,
        min_cot,
        argmin: best.map(|(i, _)| i as u64),
    }
}

pub fn agnostic_info<C: HypothesisClass>(cls: &C, d: &JointDistribution, epsilon: f64) -> Result<AgnosticInfo> {
    if cls.cardinality() == 0 {
        return Err(Error::param("hypothesis class is empty"));
    }
    Ok(agnostic_info_from_risks(&class_joint_risks(cls, d)?, epsilon))
}

/// The empirical distribution of `num_samples` draws from `d`, support in
/// lexicographic order.
pub fn empirical_distribution(d: &FiniteDistribution, num_samples: usize, seed: u64) -> Result<FiniteDistribution> {
    if num_samples == 0 {
        return Err(Error::param("num_samples must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: BTreeMap<Vec<Symbol>, usize> = BTreeMap::new();
    let mut buf = Vec::new();
    for _ in 0..num_samples {
        d.sample_into(&mut rng, &mut buf);
        *counts.entry(buf.clone()).or_insert(0) += 1;
    }
    let n = num_samples as f64;
    FiniteDistribution::explicit(counts.into_iter().map(|(x, c)| (InputSeq(x), c as f64 / n)).collect())
}

/// Plug-in estimates with binomial standard errors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McPairStats {
    pub stats: PairStats,
    pub num_samples: usize,
    pub se_d_ete: f64,
    pub se_agreement: f64,
    /// Set when no sample agreed, so `rel_info` is reported as `+inf`.
    pub censored: bool,
    /// `ln(num_samples)`, the largest finite value the estimator can resolve.
    pub censor_level: f64,
}

fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).max(0.0).sqrt()
}

pub fn monte_carlo_pair_stats<A, B>(
    hstar: &A,
    h: &B,
    d: &FiniteDistribution,
    num_samples: usize,
    seed: u64,
) -> Result<McPairStats>
where
    A: CotHypothesis + ?Sized,
    B: CotHypothesis + ?Sized,
{
    let emp = empirical_distribution(d, num_samples, seed)?;
    let stats = pair_stats(hstar, h, &emp)?;
    Ok(McPairStats {
        se_d_ete: binomial_se(stats.d_ete, num_samples),
        se_agreement: binomial_se(stats.joint_agreement, num_samples),
        censored: stats.joint_agreement == 0.0,
        censor_level: (num_samples as f64).ln(),
        num_samples,
        stats,
    })
}

/// Curve estimated from one shared sample of inputs.
pub fn monte_carlo_info_curve<H, C>(
    hstar: &H,
    cls: &C,
    d: &FiniteDistribution,
    num_samples: usize,
    seed: u64,
    budget: ExactBudget,
) -> Result<InfoCurve>
where
    H: CotHypothesis + ?Sized,
    C: HypothesisClass,
{
    let emp = empirical_distribution(d, num_samples, seed)?;
    info_curve(hstar, cls, &emp, budget)
}

#[derive(Serialize)]
struct PairRow {
    hypothesis_id: u64,
    d_ete: f64,
    joint_agreement: f64,
    rel_info: ExtReal,
}

/// Writes `hypothesis_id,d_ete,joint_agreement,rel_info`.
pub fn write_pairwise_csv<W: Write>(stats: &[PairStats], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for s in stats {
        wr.serialize(PairRow {
            hypothesis_id: s.hypothesis_id,
            d_ete: s.d_ete,
            joint_agreement: s.joint_agreement,
            rel_info: s.rel_info,
        })
        .map_err(csv_error)?;
    }
    wr.flush()?;
    Ok(())
}

/// Writes `epsilon,info,ratio_to_eps_plus`.
pub fn write_info_curve_csv<W: Write>(curve: &InfoCurve, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for row in curve.rows() {
        wr.serialize(row).map_err(csv_error)?;
    }
    wr.flush()?;
    Ok(())
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::param(format!("csv: {other:?}")),
    }
}
