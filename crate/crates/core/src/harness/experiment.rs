//! Learning experiments: draw `m` inputs, label them with the target, run
//! each rule, and record the exact end-to-end risk of what it returns.
//!
//! Clean realizable data takes a fast path. Every member's disagreement set
//! with the target is stored as a bitset over the support, so a member is
//! consistent with a sample iff the two sets do not meet. Corrupted data
//! goes through [`crate::rules::pick`] on a materialized dataset.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::seed::{corruption_seed, input_seed, selection_seed};
use crate::bounds::SymmetricChannel;
use crate::cotinfo::{scan_hypothesis, ExactBudget, TargetTable};
use crate::error::{Error, Result};
use crate::model::{CotDataset, CotHypothesis, CotOutput, FiniteDistribution, HypothesisClass, InputSeq, Token};
use crate::rules::{pick, select_uniform, Mode, Rule};

/// Disagreement bitsets of every member against the target.
pub struct VersionSpaceIndex {
    words: usize,
    d_ete: Vec<f64>,
    ete: Vec<u64>,
    cot: Vec<u64>,
}

impl VersionSpaceIndex {
    pub fn build<H, C>(hstar: &H, cls: &C, d: &FiniteDistribution, budget: ExactBudget) -> Result<Self>
    where
        H: CotHypothesis + ?Sized,
        C: HypothesisClass,
    {
        let n = d.support_len()?;
        budget.check(cls.cardinality(), n)?;
        if cls.cardinality() == 0 {
            return Err(Error::param("hypothesis class is empty"));
        }
        d.check_domain(&cls.hypothesis(0))?;
        let target = TargetTable::build(hstar, d)?;
        let words = n.div_ceil(64);
        let rows: Vec<(f64, Vec<u64>, Vec<u64>)> = (0..cls.cardinality())
            .into_par_iter()
            .map_init(CotOutput::default, |out, id| {
                let h = cls.hypothesis(id);
                let (mut ete, mut cot) = (vec![0u64; words], vec![0u64; words]);
                let mut d_ete = 0.0;
                scan_hypothesis(&h, d, &target, out, |i, p, y_bad, any_bad| {
                    if y_bad {
                        d_ete += p;
                        ete[i >> 6] |= 1 << (i & 63);
                    }
                    if any_bad {
                        cot[i >> 6] |= 1 << (i & 63);
                    }
                });
                (d_ete, ete, cot)
            })
            .collect();
        let mut index = VersionSpaceIndex {
            words,
            d_ete: Vec::with_capacity(rows.len()),
            ete: Vec::with_capacity(rows.len() * words),
            cot: Vec::with_capacity(rows.len() * words),
        };
        for (d_ete, ete, cot) in rows {
            index.d_ete.push(d_ete);
            index.ete.extend(ete);
            index.cot.extend(cot);
        }
        Ok(index)
    }

    pub fn cardinality(&self) -> u64 {
        self.d_ete.len() as u64
    }

    /// End-to-end risk of a member.
    pub fn d_ete(&self, id: u64) -> f64 {
        self.d_ete[id as usize]
    }

    fn bits(&self, mode: Mode, id: usize) -> &[u64] {
        let rows = match mode {
            Mode::E2e => &self.ete,
            Mode::Cot => &self.cot,
        };
        &rows[id * self.words..(id + 1) * self.words]
    }

    /// Members consistent with the sample given by support indices, in
    /// ascending id order.
    pub fn consistent_ids(&self, mode: Mode, sample: &[usize], out: &mut Vec<u64>) {
        let mut mask = vec![0u64; self.words];
        for &i in sample {
            mask[i >> 6] |= 1 << (i & 63);
        }
        let scan_indices = sample.len() <= self.words;
        out.clear();
        for id in 0..self.d_ete.len() {
            let bits = self.bits(mode, id);
            let ok = if scan_indices {
                sample.iter().all(|&i| bits[i >> 6] & (1 << (i & 63)) == 0)
            } else {
                bits.iter().zip(&mask).all(|(a, b)| a & b == 0)
            };
            if ok {
                out.push(id as u64);
            }
        }
    }
}

/// Outcome space of the channel: `y` in `0..y_alphabet` and `z` in
/// `(0..z_alphabet)^z_len`, indexed with `y` least significant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct LabelCode {
    pub y_alphabet: u32,
    pub z_alphabet: u32,
    pub z_len: usize,
}

impl LabelCode {
    pub fn size(&self) -> Result<u64> {
        (self.z_alphabet as u64)
            .checked_pow(self.z_len as u32)
            .and_then(|z| z.checked_mul(self.y_alphabet as u64))
            .ok_or_else(|| Error::SizeOverflow("label code".into()))
    }

    fn decode(&self, mut idx: u64, z: &mut Vec<Token>) -> Token {
        let y = Token((idx % self.y_alphabet as u64) as u32);
        idx /= self.y_alphabet as u64;
        z.clear();
        for _ in 0..self.z_len {
            z.push(Token((idx % self.z_alphabet as u64) as u32));
            idx /= self.z_alphabet as u64;
        }
        y
    }
}

/// Passes each `(y, z)` label through `q`: kept with probability `1 - e`,
/// otherwise replaced by a uniform outcome of `code`. Examples without a
/// CoT resample only `y`, uniformly over `y_alphabet`. Inputs are untouched.
pub fn corrupt_dataset(s: &CotDataset, q: SymmetricChannel, code: LabelCode, seed: u64) -> Result<CotDataset> {
    let n = code.size()?;
    if q.outcome_count != n {
        return Err(Error::param(format!(
            "channel has {} outcomes but the label code has {n}",
            q.outcome_count
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = s.clone();
    for ex in &mut out.examples {
        if let Some(z) = &ex.z {
            if z.len() != code.z_len {
                return Err(Error::param(format!(
                    "CoT of length {} does not fit a code of length {}",
                    z.len(),
                    code.z_len
                )));
            }
        }
        if rng.gen::<f64>() >= q.error_rate {
            continue;
        }
        match &mut ex.z {
            Some(z) => ex.y = code.decode(rng.gen_range(0..n), z),
            None => ex.y = Token(rng.gen_range(0..code.y_alphabet)),
        }
    }
    Ok(out)
}

/// Which implementation runs the rules.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ExecutionPath {
    /// Bitsets when the data is clean, the general path otherwise.
    #[default]
    Auto,
    /// Always materialize datasets and call [`pick`].
    General,
}

#[derive(Clone, Debug)]
pub struct LearningSpec {
    pub rules: Vec<Rule>,
    pub m_grid: Vec<u64>,
    pub trials: u64,
    pub seed: u64,
    pub corruption: Option<(SymmetricChannel, LabelCode)>,
    pub budget: ExactBudget,
    pub path: ExecutionPath,
}

impl LearningSpec {
    pub fn validate(&self) -> Result<()> {
        if self.rules.is_empty() {
            return Err(Error::config("rules", "at least one rule is required"));
        }
        if self.m_grid.is_empty() {
            return Err(Error::config("m_grid", "sample-size grid is empty"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        let mut names: Vec<&str> = self.rules.iter().map(|r| r.name()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("rules", "each rule may appear once"));
        }
        Ok(())
    }
}

/// One `(rule, m, trial)` outcome.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub rule: String,
    pub m: u64,
    pub trial: u64,
    pub risk: f64,
    pub set_size: u64,
    pub unrealizable: bool,
}

struct Buffers {
    sample: Vec<usize>,
    ete_set: Vec<u64>,
    cot_set: Vec<u64>,
}

// (grid index, rule index, trial, record), sorted into output order afterwards.
type Keyed = (usize, usize, u64, ExperimentRecord);

/// Runs every rule on every `(m, trial)`. Records are ordered by rule (as
/// listed), then grid position, then trial, whatever the worker count.
pub fn run_learning_experiment<C: HypothesisClass>(
    cls: &C,
    hstar_id: u64,
    d: &FiniteDistribution,
    spec: &LearningSpec,
) -> Result<Vec<ExperimentRecord>> {
    spec.validate()?;
    if hstar_id >= cls.cardinality() {
        return Err(Error::param(format!("target id {hstar_id} out of range")));
    }
    let hstar = cls.hypothesis(hstar_id);
    let index = VersionSpaceIndex::build(&hstar, cls, d, spec.budget)?;
    let fast = spec.corruption.is_none() && spec.path == ExecutionPath::Auto;
    let tasks: Vec<(usize, u64)> = (0..spec.m_grid.len())
        .flat_map(|mi| (0..spec.trials).map(move |t| (mi, t)))
        .collect();
    let per_task: Vec<Result<Vec<Keyed>>> = tasks
        .par_iter()
        .map_init(
            || Buffers {
                sample: Vec::new(),
                ete_set: Vec::new(),
                cot_set: Vec::new(),
            },
            |buf, &(mi, trial)| {
                let m = spec.m_grid[mi];
                let mut rng = ChaCha8Rng::seed_from_u64(input_seed(spec.seed, m, trial));
                buf.sample.clear();
                buf.sample.extend((0..m).map(|_| d.sample_index(&mut rng)));
                let records = if fast {
                    fast_trial(&index, spec, m, trial, buf)
                } else {
                    general_trial(cls, &hstar, &index, d, spec, m, trial, &buf.sample)?
                };
                Ok(records
                    .into_iter()
                    .enumerate()
                    .map(|(ri, r)| (ri, mi, trial, r))
                    .collect())
            },
        )
        .collect();
    let mut all = Vec::with_capacity(tasks.len() * spec.rules.len());
    for r in per_task {
        all.extend(r?);
    }
    all.sort_by_key(|&(ri, mi, trial, _)| (ri, mi, trial));
    Ok(all.into_iter().map(|(_, _, _, r)| r).collect())
}

fn fast_trial(
    index: &VersionSpaceIndex,
    spec: &LearningSpec,
    m: u64,
    trial: u64,
    buf: &mut Buffers,
) -> Vec<ExperimentRecord> {
    let needs = |mode| spec.rules.iter().any(|r| r.mode() == mode);
    if needs(Mode::E2e) {
        index.consistent_ids(Mode::E2e, &buf.sample, &mut buf.ete_set);
    }
    if needs(Mode::Cot) {
        index.consistent_ids(Mode::Cot, &buf.sample, &mut buf.cot_set);
    }
    spec.rules
        .iter()
        .map(|rule| {
            // the target is a member, so consistency and ERM sets coincide
            let set = match rule.mode() {
                Mode::E2e => &buf.ete_set,
                Mode::Cot => &buf.cot_set,
            };
            let chosen = match rule {
                Rule::Mdl(prior) => set
                    .iter()
                    .copied()
                    .fold(None, |best: Option<u64>, id| match best {
                        Some(b) if prior.weight(b) >= prior.weight(id) => Some(b),
                        _ => Some(id),
                    })
                    .expect("target is consistent"),
                _ => select_uniform(set, selection_seed(spec.seed, rule.name(), m, trial)),
            };
            ExperimentRecord {
                rule: rule.name().to_string(),
                m,
                trial,
                risk: index.d_ete(chosen),
                set_size: set.len() as u64,
                unrealizable: false,
            }
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn general_trial<C: HypothesisClass>(
    cls: &C,
    hstar: &C::Hypothesis,
    index: &VersionSpaceIndex,
    d: &FiniteDistribution,
    spec: &LearningSpec,
    m: u64,
    trial: u64,
    sample: &[usize],
) -> Result<Vec<ExperimentRecord>> {
    let mut x = Vec::new();
    let inputs: Vec<InputSeq> = sample
        .iter()
        .map(|&i| {
            d.input_at(i, &mut x);
            InputSeq(x.clone())
        })
        .collect();
    let mut s = CotDataset::label(hstar, &inputs, true)?;
    if let Some((q, code)) = spec.corruption {
        s = corrupt_dataset(&s, q, code, corruption_seed(spec.seed, m, trial))?;
    }
    spec.rules
        .iter()
        .map(|rule| {
            let out = pick(rule, cls, &s, selection_seed(spec.seed, rule.name(), m, trial))?;
            Ok(ExperimentRecord {
                rule: rule.name().to_string(),
                m,
                trial,
                risk: index.d_ete(out.chosen_id),
                set_size: out.candidate_set_size,
                unrealizable: out.unrealizable,
            })
        })
        .collect()
}

/// Mean risk per `(rule, m)`, in record order.
pub fn mean_risks(records: &[ExperimentRecord]) -> Vec<(String, u64, f64)> {
    let mut out: Vec<(String, u64, f64, u64)> = Vec::new();
    for r in records {
        match out.last_mut() {
            Some(last) if last.0 == r.rule && last.1 == r.m => {
                last.2 += r.risk;
                last.3 += 1;
            }
            _ => out.push((r.rule.clone(), r.m, r.risk, 1)),
        }
    }
    out.into_iter().map(|(rule, m, s, n)| (rule, m, s / n as f64)).collect()
}

/// Smallest grid `m` whose mean risk is at most `ε`; `None` is reported as
/// "not reached".
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleComplexityRow {
    pub rule: String,
    pub epsilon: f64,
    pub m_required: Option<u64>,
}

pub fn empirical_sample_complexity(records: &[ExperimentRecord], epsilons: &[f64]) -> Vec<SampleComplexityRow> {
    let means = mean_risks(records);
    let mut rules: Vec<&str> = Vec::new();
    for (rule, _, _) in &means {
        if !rules.contains(&rule.as_str()) {
            rules.push(rule);
        }
    }
    let mut rows = Vec::new();
    for rule in rules {
        let mut curve: Vec<(u64, f64)> = means
            .iter()
            .filter(|(r, _, _)| r == rule)
            .map(|(_, m, v)| (*m, *v))
            .collect();
        curve.sort_by_key(|&(m, _)| m);
        for &eps in epsilons {
            rows.push(SampleComplexityRow {
                rule: rule.to_string(),
                epsilon: eps,
                m_required: curve.iter().find(|&&(_, v)| v <= eps).map(|&(m, _)| m),
            });
        }
    }
    rows
}

/// `m_required(slow) / m_required(fast)` at the smallest `ε` both reach.
pub fn sample_complexity_ratio(rows: &[SampleComplexityRow], slow: &str, fast: &str) -> Option<(f64, f64)> {
    let get = |rule: &str, eps: f64| {
        rows.iter()
            .find(|r| r.rule == rule && r.epsilon == eps)
            .and_then(|r| r.m_required)
    };
    let mut eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    eps.into_iter().find_map(|e| match (get(slow, e), get(fast, e)) {
        (Some(a), Some(b)) if b > 0 => Some((e, a as f64 / b as f64)),
        _ => None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroErrorRow {
    pub rule: String,
    pub m: u64,
    pub fraction_zero: f64,
}

/// Fraction of trials whose returned hypothesis has zero risk, per `(rule, m)`.
pub fn zero_error_probability(records: &[ExperimentRecord]) -> Vec<ZeroErrorRow> {
    let mut out: Vec<(String, u64, u64, u64)> = Vec::new();
    for r in records {
        let zero = (r.risk == 0.0) as u64;
        match out.last_mut() {
            Some(last) if last.0 == r.rule && last.1 == r.m => {
                last.2 += zero;
                last.3 += 1;
            }
            _ => out.push((r.rule.clone(), r.m, zero, 1)),
        }
    }
    out.into_iter()
        .map(|(rule, m, z, n)| ZeroErrorRow {
            rule,
            m,
            fraction_zero: z as f64 / n as f64,
        })
        .collect()
}

/// `start, start·r, ...` rounded and deduplicated, up to `stop`.
pub fn geometric_grid(start: u64, stop: u64, ratio: f64) -> Result<Vec<u64>> {
    if ratio.is_nan() || ratio <= 1.0 || stop < start {
        return Err(Error::config(
            "m_grid",
            "geometric grid needs ratio > 1 and stop >= start",
        ));
    }
    let mut grid = Vec::new();
    let mut v = start.max(1) as f64;
    if start == 0 {
        grid.push(0);
    }
    while v.round() as u64 <= stop {
        let m = v.round() as u64;
        if grid.last() != Some(&m) {
            grid.push(m);
        }
        v *= ratio;
    }
    Ok(grid)
}
