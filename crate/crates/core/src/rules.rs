//! Learning rules over a finite class: consistency (end-to-end or CoT),
//! empirical risk minimization, and the CoT minimum-description-length rule.
//!
//! Examples without a CoT constrain only the output, in both modes. A
//! dataset mixing both kinds therefore runs the mixed-supervision rule.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{example_mismatch, CotDataset, CotHypothesis, CotOutput, HypothesisClass};

/// Which labels a rule must match.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    E2e,
    Cot,
}

/// A sub-probability over class ids.
#[derive(Clone, Debug, PartialEq)]
pub struct Prior {
    weights: Arc<[f64]>,
    /// Set by [`Prior::uniform`] so `log(1/p)` is exactly `ln |H|`.
    uniform_over: Option<u64>,
}

impl Prior {
    /// Weights must be non-negative and sum to at most `1 + 1e-12`.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some((i, &w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| w.is_nan() || **w < 0.0 || w.is_infinite())
        {
            return Err(Error::param(format!(
                "prior weight {w} at id {i} is not a non-negative real"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if sum > 1.0 + 1e-12 {
            return Err(Error::param(format!("prior weights sum to {sum} > 1")));
        }
        Ok(Prior {
            weights: weights.into(),
            uniform_over: None,
        })
    }

    pub fn uniform(cardinality: u64) -> Self {
        let w = 1.0 / cardinality as f64;
        Prior {
            weights: vec![w; cardinality as usize].into(),
            uniform_over: Some(cardinality),
        }
    }

    /// `p(h) = 2^-len(h)` from description lengths in bits.
    pub fn from_description_lengths(bits: &[f64]) -> Result<Self> {
        Self::new(bits.iter().map(|&b| (-b).exp2()).collect())
    }

    pub fn weight(&self, id: u64) -> f64 {
        self.weights.get(id as usize).copied().unwrap_or(0.0)
    }

    /// `log(1/p(id))`, `+inf` for ids outside the support.
    pub fn neg_log_weight(&self, id: u64) -> f64 {
        match self.uniform_over {
            Some(n) if id < n => (n as f64).ln(),
            _ => -self.weight(id).ln(),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Rule {
    EtECons,
    CoTCons,
    EtEErm,
    CoTErm,
    Mdl(Prior),
}

impl Rule {
    pub fn name(&self) -> &'static str {
        match self {
            Rule::EtECons => "EtECons",
            Rule::CoTCons => "CoTCons",
            Rule::EtEErm => "EtEERM",
            Rule::CoTErm => "CoTERM",
            Rule::Mdl(_) => "MDL",
        }
    }

    pub fn mode(&self) -> Mode {
        match self {
            Rule::EtECons | Rule::EtEErm => Mode::E2e,
            Rule::CoTCons | Rule::CoTErm | Rule::Mdl(_) => Mode::Cot,
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The hypothesis returned by a rule and the set it was drawn from.
#[derive(Clone, Debug)]
pub struct RuleOutput<H> {
    pub chosen: H,
    pub chosen_id: u64,
    pub candidate_set_size: u64,
    pub rule_name: String,
    pub rng_seed: u64,
    /// The consistency set was empty and the ERM set was used instead.
    pub unrealizable: bool,
}

fn check_dataset<C: HypothesisClass>(cls: &C, s: &CotDataset) -> Result<()> {
    if cls.cardinality() == 0 {
        return Err(Error::param("hypothesis class is empty"));
    }
    let h = cls.hypothesis(0);
    s.examples.iter().try_for_each(|ex| h.check_input(ex.x.as_slice()))
}

/// Number of examples each member gets wrong under `mode`, in id order.
pub fn mismatch_counts<C: HypothesisClass>(cls: &C, s: &CotDataset, mode: Mode) -> Result<Vec<u32>> {
    check_dataset(cls, s)?;
    Ok((0..cls.cardinality())
        .into_par_iter()
        .map_init(CotOutput::default, |out, id| {
            let h = cls.hypothesis(id);
            s.examples
                .iter()
                .filter(|ex| {
                    let (y_bad, any_bad) = example_mismatch(&h, ex, out);
                    match mode {
                        Mode::E2e => y_bad,
                        Mode::Cot => any_bad,
                    }
                })
                .count() as u32
        })
        .collect())
}

/// Ids of members with no mismatch, ascending.
pub fn consistency_set<C: HypothesisClass>(cls: &C, s: &CotDataset, mode: Mode) -> Result<Vec<u64>> {
    Ok(argmin_ids(&mismatch_counts(cls, s, mode)?, Some(0)))
}

/// Ids of empirical-risk minimizers, ascending.
pub fn erm_set<C: HypothesisClass>(cls: &C, s: &CotDataset, mode: Mode) -> Result<Vec<u64>> {
    Ok(argmin_ids(&mismatch_counts(cls, s, mode)?, None))
}

fn argmin_ids(counts: &[u32], required: Option<u32>) -> Vec<u64> {
    let Some(&min) = counts.iter().min() else {
        return Vec::new();
    };
    if required.is_some_and(|r| r != min) {
        return Vec::new();
    }
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c == min)
        .map(|(i, _)| i as u64)
        .collect()
}

/// Uniform choice from a non-empty candidate list.
pub fn select_uniform(candidates: &[u64], seed: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    candidates[rng.gen_range(0..candidates.len())]
}

/// Runs `rule` on `s`. Consistency rules and ERM draw uniformly (seeded)
/// from their candidate set; MDL takes the highest-prior CoT-consistent
/// member, lowest id on ties. An empty consistency set falls back to the
/// matching ERM set and sets `unrealizable`.
pub fn pick<C: HypothesisClass>(rule: &Rule, cls: &C, s: &CotDataset, seed: u64) -> Result<RuleOutput<C::Hypothesis>> {
    let counts = mismatch_counts(cls, s, rule.mode())?;
    let erm_only = matches!(rule, Rule::EtEErm | Rule::CoTErm);
    let mut candidates = if erm_only {
        Vec::new()
    } else {
        argmin_ids(&counts, Some(0))
    };
    let unrealizable = !erm_only && candidates.is_empty();
    if candidates.is_empty() {
        candidates = argmin_ids(&counts, None);
    }
    let chosen_id = match rule {
        Rule::Mdl(prior) => {
            if prior.len() as u64 != cls.cardinality() {
                return Err(Error::param(format!(
                    "prior has {} weights for a class of size {}",
                    prior.len(),
                    cls.cardinality()
                )));
            }
            // first maximum in ascending id order
            candidates
                .iter()
                .copied()
                .fold(None, |best: Option<u64>, id| match best {
                    Some(b) if prior.weight(b) >= prior.weight(id) => Some(b),
                    _ => Some(id),
                })
                .expect("candidate set is non-empty")
        }
        _ => select_uniform(&candidates, seed),
    };
    Ok(RuleOutput {
        chosen: cls.hypothesis(chosen_id),
        chosen_id,
        candidate_set_size: candidates.len() as u64,
        rule_name: rule.name().to_string(),
        rng_seed: seed,
        unrealizable,
    })
}
