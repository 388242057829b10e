//! Sample-complexity upper bounds, information lower bounds, and the packing
//! and channel quantities they use. Big-O expressions are evaluated with
//! constant 1.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::cotinfo::{csv_error, pair_stats, ExactBudget, InfoCurve};
use crate::error::{Error, Result};
use crate::model::{CotHypothesis, CotOutput, ExtReal, FiniteDistribution, HypothesisClass, Token};
use crate::rules::Prior;

/// A bound value, `+inf` allowed, with an optional diagnostic.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundValue {
    pub value: f64,
    pub flag: Option<String>,
}

impl BoundValue {
    fn plain(value: f64) -> Self {
        BoundValue { value, flag: None }
    }

    fn flagged(value: f64, flag: &str) -> Self {
        BoundValue {
            value,
            flag: Some(flag.to_string()),
        }
    }
}

fn check_delta(delta: f64) -> Result<f64> {
    if delta > 0.0 && delta <= 1.0 {
        Ok((1.0 / delta).ln())
    } else {
        Err(Error::param(format!("delta must lie in (0, 1], got {delta}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `(log|H| + log(1/δ)) / I`.
    Finite,
    /// `(1/I + 1)(VC·log(1/I + 1) + log(1/δ))`.
    General,
}

/// Samples for CoT consistency to reach error `ε` with probability `1 - δ`.
/// An infinite `I` returns 1: one sample is still needed to rule out `Δ(ε)`.
pub fn realizable_upper(log_card_or_vc: f64, info: ExtReal, delta: f64, variant: Variant) -> Result<BoundValue> {
    let log_delta = check_delta(delta)?;
    let i = match info {
        ExtReal::Infinite => return Ok(BoundValue::flagged(1.0, "infinite information")),
        ExtReal::Finite(i) if i <= 0.0 => return Ok(BoundValue::flagged(f64::INFINITY, "zero information")),
        ExtReal::Finite(i) => i,
    };
    Ok(BoundValue::plain(match variant {
        Variant::Finite => (log_card_or_vc + log_delta) / i,
        Variant::General => (1.0 / i + 1.0) * (log_card_or_vc * (1.0 / i + 1.0).ln() + log_delta),
    }))
}

/// The end-to-end rate `(log|H| + log(1/δ)) / ε`.
pub fn e2e_upper(log_card: f64, epsilon: f64, delta: f64) -> Result<BoundValue> {
    realizable_upper(log_card, ExtReal::Finite(epsilon), delta, Variant::Finite)
}

/// `(VC + log(1/δ)) / I_ag²`.
pub fn agnostic_upper(vc: f64, ag_info: ExtReal, delta: f64) -> Result<BoundValue> {
    let log_delta = check_delta(delta)?;
    Ok(match ag_info {
        ExtReal::Infinite => BoundValue::flagged(1.0, "empty constraint set"),
        ExtReal::Finite(i) if i <= 0.0 => BoundValue::flagged(f64::INFINITY, "CoT supervision uninformative"),
        ExtReal::Finite(i) => BoundValue::plain((vc + log_delta) / (i * i)),
    })
}

/// Below `log(1/δ) / I` samples, no learner reaches error `ε` with
/// probability `1 - δ` on every target.
pub fn two_point_lower(info: ExtReal, delta: f64) -> Result<f64> {
    let log_delta = check_delta(delta)?;
    Ok(match info {
        ExtReal::Infinite => 0.0,
        ExtReal::Finite(i) if i <= 0.0 => f64::INFINITY,
        ExtReal::Finite(i) => log_delta / i,
    })
}

/// `½ sup_ε ε·exp(-m·I(ε))`. On `[e_{k-1}, e_k)` the curve is constant, so
/// the supremum is `½ max_k e_k·exp(-m·I_k)`.
pub fn expected_error_lower(curve: &InfoCurve, m: u64) -> f64 {
    curve
        .breakpoints
        .iter()
        .map(|b| b.epsilon * (-b.info.scale(m as f64).to_f64()).exp())
        .fold(0.0, f64::max)
        / 2.0
}

/// `Q(·|z) = (1-e)·δ_z + e·Unif(N outcomes)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct SymmetricChannel {
    pub error_rate: f64,
    pub outcome_count: u64,
}

impl SymmetricChannel {
    pub fn new(error_rate: f64, outcome_count: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&error_rate) {
            return Err(Error::param(format!("channel error rate {error_rate} not in [0, 1]")));
        }
        if outcome_count < 2 {
            return Err(Error::param("channel needs at least 2 outcomes"));
        }
        Ok(SymmetricChannel {
            error_rate,
            outcome_count,
        })
    }
}

/// `C_Q = (1-e)·ln(1 + N(1-e)/e)`.
pub fn channel_capacity_factor(q: SymmetricChannel) -> ExtReal {
    let e = q.error_rate;
    if e == 0.0 {
        return ExtReal::Infinite;
    }
    let n = q.outcome_count as f64;
    ExtReal::Finite((1.0 - e) * (1.0 + n * (1.0 - e) / e).ln())
}

fn output_table<C: HypothesisClass>(cls: &C, d: &FiniteDistribution, budget: ExactBudget) -> Result<Vec<Vec<Token>>> {
    let n = d.support_len()?;
    budget.check(cls.cardinality(), n)?;
    if cls.cardinality() == 0 {
        return Err(Error::param("hypothesis class is empty"));
    }
    d.check_domain(&cls.hypothesis(0))?;
    Ok((0..cls.cardinality())
        .into_par_iter()
        .map_init(CotOutput::default, |out, id| {
            let h = cls.hypothesis(id);
            let mut ys = Vec::with_capacity(n);
            d.for_each_input(|_, x, _| {
                h.eval_into(x, out);
                ys.push(out.y);
            })
            .expect("support checked");
            ys
        })
        .collect())
}

fn d_ete_between(a: &[Token], b: &[Token], probs: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(probs)
        .filter(|((ya, yb), _)| ya != yb)
        .map(|(_, p)| p)
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PackingResult {
    pub members: Vec<u64>,
    pub epsilon: f64,
    pub is_maximal: bool,
}

/// Greedy packing in id order, seeded with `start` when given: a member is
/// added when its `d_ete` to every current member is at least `ε`. The
/// result is maximal, so its size lower-bounds the packing number.
pub fn greedy_packing<C: HypothesisClass>(
    cls: &C,
    start: Option<u64>,
    d: &FiniteDistribution,
    epsilon: f64,
    budget: ExactBudget,
) -> Result<PackingResult> {
    // worst case compares every pair of members over the whole support
    let card = cls.cardinality() as u128;
    let required = card * card.saturating_sub(1) / 2 * d.support_len()? as u128;
    if required > budget.max_evaluations {
        return Err(Error::BudgetExceeded {
            required,
            budget: budget.max_evaluations,
        });
    }
    let table = output_table(cls, d, budget)?;
    let probs: Vec<f64> = (0..table[0].len()).map(|i| d.prob_at(i)).collect();
    let mut members: Vec<u64> = Vec::new();
    if let Some(s) = start {
        if s >= cls.cardinality() {
            return Err(Error::param(format!("packing start id {s} out of range")));
        }
        members.push(s);
    }
    for id in 0..cls.cardinality() {
        if members.contains(&id) {
            continue;
        }
        let row = &table[id as usize];
        if members
            .iter()
            .all(|&m| d_ete_between(row, &table[m as usize], &probs) >= epsilon)
        {
            members.push(id);
        }
    }
    Ok(PackingResult {
        members,
        epsilon,
        is_maximal: true,
    })
}

/// Which end of the `sup_π E[I(h1, h2)]` bracket enters the Fano bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairInfoMode {
    /// Two-point prior on the most informative pair: a lower estimate.
    MaxPairHalf,
    /// Largest finite pairwise value: an upper estimate.
    MaxEntry,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FanoBound {
    pub packing_size: usize,
    pub log_m: f64,
    pub capacity: ExtReal,
    pub pair_info_lower: f64,
    pub pair_info_upper: f64,
    pub pair_info_used: f64,
    /// Below this many samples the error probability stays bounded away
    /// from zero.
    pub m_threshold: f64,
    /// Every pairwise information among packing members is infinite.
    pub degenerate: bool,
}

impl FanoBound {
    /// `1 - (m·C_Q·S + ln 2) / ln M`, clipped to `[0, 1]`; vacuous (0)
    /// when `M = 1`.
    pub fn error_prob(&self, m: f64) -> f64 {
        if self.log_m <= 0.0 || self.degenerate {
            return 0.0;
        }
        let rate = self.capacity.scale(self.pair_info_used).to_f64();
        let v = 1.0 - (m * rate + std::f64::consts::LN_2) / self.log_m;
        if v.is_nan() {
            0.0
        } else {
            v.clamp(0.0, 1.0)
        }
    }
}

/// Fano lower bound over a greedy ε-packing. Pairwise information is the
/// relative CoT information among packing members under `d`.
pub fn fano_lower<C: HypothesisClass>(
    cls: &C,
    d: &FiniteDistribution,
    q: SymmetricChannel,
    epsilon: f64,
    mode: PairInfoMode,
    budget: ExactBudget,
) -> Result<FanoBound> {
    let packing = greedy_packing(cls, None, d, epsilon, budget)?;
    let members: Vec<_> = packing.members.iter().map(|&id| cls.hypothesis(id)).collect();
    let mut max_finite = 0.0f64;
    let mut any_finite = false;
    for (i, a) in members.iter().enumerate() {
        for b in &members[i + 1..] {
            if let ExtReal::Finite(v) = pair_stats(a, b, d)?.rel_info {
                max_finite = max_finite.max(v);
                any_finite = true;
            }
        }
    }
    let degenerate = members.len() > 1 && !any_finite;
    let (lower, upper) = (max_finite / 2.0, max_finite);
    let used = match mode {
        PairInfoMode::MaxPairHalf => lower,
        PairInfoMode::MaxEntry => upper,
    };
    let log_m = (members.len() as f64).ln();
    let capacity = channel_capacity_factor(q);
    let m_threshold = if log_m <= 0.0 {
        0.0
    } else {
        let rate = capacity.scale(used).to_f64();
        log_m / (2.0 * (rate + std::f64::consts::LN_2))
    };
    Ok(FanoBound {
        packing_size: members.len(),
        log_m,
        capacity,
        pair_info_lower: lower,
        pair_info_upper: upper,
        pair_info_used: used,
        m_threshold,
        degenerate,
    })
}

/// `(log|H| + log(1/δ)) / (γ·ε + I)` with `m` CoT and `γ·m` end-to-end
/// examples.
pub fn mixed_upper(log_card: f64, gamma_ratio: f64, info: ExtReal, epsilon: f64, delta: f64) -> Result<BoundValue> {
    if gamma_ratio.is_nan() || gamma_ratio < 0.0 {
        return Err(Error::param(format!(
            "gamma ratio must be non-negative, got {gamma_ratio}"
        )));
    }
    let log_delta = check_delta(delta)?;
    let i = match info {
        ExtReal::Infinite => return Ok(BoundValue::flagged(1.0, "infinite information")),
        ExtReal::Finite(i) => i,
    };
    let denom = gamma_ratio * epsilon + i;
    if denom <= 0.0 {
        return Ok(BoundValue::flagged(f64::INFINITY, "zero denominator"));
    }
    Ok(BoundValue::plain((log_card + log_delta) / denom))
}

/// `(log(1/p(h*)) + log(1/δ)) / I`.
pub fn mdl_upper(prior_mass: f64, info: ExtReal, delta: f64) -> Result<BoundValue> {
    if !(0.0..=1.0).contains(&prior_mass) {
        return Err(Error::param(format!("prior mass {prior_mass} not in [0, 1]")));
    }
    if prior_mass == 0.0 {
        return Ok(BoundValue::flagged(f64::INFINITY, "zero prior mass"));
    }
    realizable_upper((1.0 / prior_mass).ln(), info, delta, Variant::Finite)
}

/// [`mdl_upper`] with `log(1/p(h*))` read from a prior, so a uniform prior
/// reproduces the finite realizable bound exactly.
pub fn mdl_upper_prior(prior: &Prior, hstar_id: u64, info: ExtReal, delta: f64) -> Result<BoundValue> {
    let bits = prior.neg_log_weight(hstar_id);
    if bits.is_infinite() {
        return Ok(BoundValue::flagged(f64::INFINITY, "zero prior mass"));
    }
    realizable_upper(bits, info, delta, Variant::Finite)
}

/// `ε_h = inf { ε : I(ε) ≥ (log(1/p) + log(1/δ)) / m }` on the exact curve.
pub fn mdl_error_bound(curve: &InfoCurve, prior_mass: f64, m: u64, delta: f64) -> Result<f64> {
    if !(prior_mass > 0.0 && prior_mass <= 1.0) {
        return Err(Error::param(format!("prior mass {prior_mass} not in (0, 1]")));
    }
    let log_delta = check_delta(delta)?;
    let threshold = ExtReal::from_f64(((1.0 / prior_mass).ln() + log_delta) / m as f64);
    let mut left = 0.0;
    for b in &curve.breakpoints {
        if b.info >= threshold {
            return Ok(left);
        }
        left = b.epsilon;
    }
    Ok(left)
}

/// Total variation between the `m`-fold products of `(x, h1(x))` and
/// `(x, h2(x))`, by exhaustive summation, and its distance from
/// `1 - exp(-m·I(h1, h2))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TvCheck {
    pub tv: f64,
    pub identity_residual: f64,
}

/// Largest product space enumerated by [`tv_distance_identity_check`].
pub const MAX_TV_OUTCOMES: u128 = 1 << 24;

pub fn tv_distance_identity_check<A, B>(h1: &A, h2: &B, d: &FiniteDistribution, m: u32) -> Result<TvCheck>
where
    A: CotHypothesis + ?Sized,
    B: CotHypothesis + ?Sized,
{
    d.check_domain(h1)?;
    d.check_domain(h2)?;
    // per-coordinate outcomes as (P1, P2) masses
    let mut outcomes: Vec<(f64, f64)> = Vec::new();
    let (mut o1, mut o2) = (CotOutput::default(), CotOutput::default());
    d.for_each_input(|_, x, p| {
        h1.eval_into(x, &mut o1);
        h2.eval_into(x, &mut o2);
        if o1 == o2 {
            outcomes.push((p, p));
        } else {
            outcomes.push((p, 0.0));
            outcomes.push((0.0, p));
        }
    })?;
    let k = outcomes.len();
    let total = (k as u128).checked_pow(m).unwrap_or(u128::MAX);
    if total > MAX_TV_OUTCOMES {
        return Err(Error::BudgetExceeded {
            required: total,
            budget: MAX_TV_OUTCOMES,
        });
    }
    let mut digits = vec![0usize; m as usize];
    let mut tv = 0.0;
    for _ in 0..total {
        let (mut p1, mut p2) = (1.0, 1.0);
        for &j in &digits {
            p1 *= outcomes[j].0;
            p2 *= outcomes[j].1;
        }
        tv += (p1 - p2).abs();
        for slot in digits.iter_mut().rev() {
            *slot += 1;
            if *slot < k {
                break;
            }
            *slot = 0;
        }
    }
    tv /= 2.0;
    let info = pair_stats(h1, h2, d)?.rel_info;
    let predicted = 1.0 - (-info.scale(m as f64).to_f64()).exp();
    Ok(TvCheck {
        tv,
        identity_residual: (tv - predicted).abs(),
    })
}

/// One row of `bounds.csv`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundEntry {
    pub bound_name: String,
    /// `key=value` pairs joined by `;`.
    pub parameters: String,
    pub value: ExtReal,
    pub flag: String,
}

impl BoundEntry {
    pub fn new(name: &str, params: &[(&str, String)], value: f64, flag: Option<&str>) -> Self {
        BoundEntry {
            bound_name: name.to_string(),
            parameters: params
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(";"),
            value: ExtReal::from_f64(value),
            flag: flag.unwrap_or("").to_string(),
        }
    }

    pub fn from_value(name: &str, params: &[(&str, String)], v: &BoundValue) -> Self {
        Self::new(name, params, v.value, v.flag.as_deref())
    }
}

pub fn write_bounds_csv<W: Write>(entries: &[BoundEntry], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for e in entries {
        wr.serialize(e).map_err(csv_error)?;
    }
    wr.flush()?;
    Ok(())
}
