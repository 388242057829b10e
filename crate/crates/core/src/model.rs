//! Hypotheses, finite distributions, datasets and the two risk functionals.
//!
//! A CoT hypothesis maps an input sequence `x` to a pair `(y, z)`: the
//! end-to-end output `y` and the chain-of-thought `z`. Every other module
//! works through the [`CotHypothesis`] and [`HypothesisClass`] traits.

use std::collections::HashSet;
use std::fmt;
use std::ops::Add;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An input alphabet symbol.
#[repr(transparent)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Symbol(pub u16);

/// An automaton state.
#[repr(transparent)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(pub u16);

/// An output or chain-of-thought token.
#[repr(transparent)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Token(pub u32);

impl From<StateId> for Token {
    fn from(s: StateId) -> Self {
        Token(s.0 as u32)
    }
}

/// An input sequence `x = (x_1, ..., x_n)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InputSeq(pub Vec<Symbol>);

impl InputSeq {
    pub fn from_digits(digits: &[u16]) -> Self {
        InputSeq(digits.iter().map(|&d| Symbol(d)).collect())
    }

    /// Parses a string of decimal digits such as `"0110"`.
    pub fn parse_digits(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| {
                c.to_digit(10)
                    .map(|d| Symbol(d as u16))
                    .ok_or_else(|| Error::param(format!("'{c}' is not a digit in input \"{s}\"")))
            })
            .collect::<Result<Vec<_>>>()
            .map(InputSeq)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Symbol] {
        &self.0
    }
}

impl fmt::Display for InputSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().all(|s| s.0 < 10) {
            for s in &self.0 {
                write!(f, "{}", s.0)?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(|s| s.0.to_string()).collect();
            write!(f, "{}", parts.join(","))
        }
    }
}

/// The pair `(y, z)` produced by a CoT hypothesis.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CotOutput {
    pub y: Token,
    pub z: Vec<Token>,
}

impl CotOutput {
    pub fn new(y: Token, z: Vec<Token>) -> Self {
        CotOutput { y, z }
    }
}

/// A deterministic map `x -> (y, z)` with a stable id inside its class.
pub trait CotHypothesis: Send + Sync {
    fn id(&self) -> u64;

    /// Checks that `x` lies in the hypothesis domain.
    fn check_input(&self, x: &[Symbol]) -> Result<()>;

    /// Evaluates on `x`, reusing the buffers in `out`. The input must have
    /// passed [`CotHypothesis::check_input`].
    fn eval_into(&self, x: &[Symbol], out: &mut CotOutput);

    fn eval(&self, x: &[Symbol]) -> CotOutput {
        let mut out = CotOutput::default();
        self.eval_into(x, &mut out);
        out
    }

    fn eval_checked(&self, x: &[Symbol]) -> Result<CotOutput> {
        self.check_input(x)?;
        Ok(self.eval(x))
    }
}

/// Descriptive metadata carried by a class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMeta {
    pub kind: String,
    pub params: Vec<(String, String)>,
}

impl ClassMeta {
    pub fn new(kind: &str) -> Self {
        ClassMeta {
            kind: kind.to_string(),
            params: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }
}

/// A finite, deterministically ordered collection of CoT hypotheses with
/// ids `0..cardinality`.
pub trait HypothesisClass: Send + Sync {
    type Hypothesis: CotHypothesis + Clone;

    fn cardinality(&self) -> u64;

    /// The hypothesis with the given id. Panics when `id >= cardinality`.
    fn hypothesis(&self, id: u64) -> Self::Hypothesis;

    fn meta(&self) -> ClassMeta;

    fn hypotheses(&self) -> impl Iterator<Item = Self::Hypothesis> + '_ {
        (0..self.cardinality()).map(move |id| self.hypothesis(id))
    }
}

/// A hypothesis of a [`SubClass`], renumbered but remembering its parent id.
#[derive(Clone, Debug)]
pub struct Reindexed<H> {
    id: u64,
    inner: H,
}

impl<H: CotHypothesis> Reindexed<H> {
    pub fn parent_id(&self) -> u64 {
        self.inner.id()
    }

    pub fn inner(&self) -> &H {
        &self.inner
    }
}

impl<H: CotHypothesis> CotHypothesis for Reindexed<H> {
    fn id(&self) -> u64 {
        self.id
    }

    fn check_input(&self, x: &[Symbol]) -> Result<()> {
        self.inner.check_input(x)
    }

    fn eval_into(&self, x: &[Symbol], out: &mut CotOutput) {
        self.inner.eval_into(x, out)
    }
}

/// The subset of a parent class selected by a list of parent ids.
pub struct SubClass<'a, C> {
    parent: &'a C,
    ids: Vec<u64>,
}

impl<'a, C: HypothesisClass> SubClass<'a, C> {
    pub fn new(parent: &'a C, ids: Vec<u64>) -> Result<Self> {
        if let Some(bad) = ids.iter().find(|&&id| id >= parent.cardinality()) {
            return Err(Error::param(format!(
                "subclass id {bad} out of range for class of size {}",
                parent.cardinality()
            )));
        }
        Ok(SubClass { parent, ids })
    }

    pub fn parent_ids(&self) -> &[u64] {
        &self.ids
    }

    /// Position of a parent id inside this subclass.
    pub fn local_id(&self, parent_id: u64) -> Option<u64> {
        self.ids.iter().position(|&i| i == parent_id).map(|p| p as u64)
    }
}

impl<C: HypothesisClass> HypothesisClass for SubClass<'_, C> {
    type Hypothesis = Reindexed<C::Hypothesis>;

    fn cardinality(&self) -> u64 {
        self.ids.len() as u64
    }

    fn hypothesis(&self, id: u64) -> Self::Hypothesis {
        Reindexed {
            id,
            inner: self.parent.hypothesis(self.ids[id as usize]),
        }
    }

    fn meta(&self) -> ClassMeta {
        let parent = self.parent.meta();
        ClassMeta {
            kind: format!("subclass of {}", parent.kind),
            params: parent.params,
        }
        .with("size", self.ids.len())
    }
}

/// Tolerance for probability sums.
pub const PROB_TOLERANCE: f64 = 1e-12;

/// Longest uniform-string length enumerated exactly.
pub const MAX_EXACT_LENGTH: usize = 24;

#[derive(Clone, Debug)]
enum DistKind {
    Explicit { support: Vec<(InputSeq, f64)> },
    UniformStrings { alphabet_size: usize, length: usize },
}

/// A distribution over inputs with finite support.
///
/// Uniform distributions over `Σ^n` are not materialized: the input with
/// index `i` is the base-`|Σ|` expansion of `i`, first symbol most
/// significant.
#[derive(Clone, Debug)]
pub struct FiniteDistribution {
    kind: DistKind,
    cdf: Vec<f64>,
}

fn validate_probs<'a>(probs: impl Iterator<Item = &'a f64>) -> Result<Vec<f64>> {
    let mut cdf = Vec::new();
    let mut acc = 0.0;
    for (index, &p) in probs.enumerate() {
        if !(0.0..=1.0).contains(&p) || p.is_nan() {
            return Err(Error::InvalidProbability { index, value: p });
        }
        acc += p;
        cdf.push(acc);
    }
    if cdf.is_empty() {
        return Err(Error::EmptySupport);
    }
    if (acc - 1.0).abs() > PROB_TOLERANCE {
        return Err(Error::NotNormalized {
            sum: acc,
            tolerance: PROB_TOLERANCE,
        });
    }
    Ok(cdf)
}

fn sample_cdf<R: Rng + ?Sized>(cdf: &[f64], rng: &mut R) -> usize {
    let total = *cdf.last().expect("non-empty cdf");
    let u: f64 = rng.gen::<f64>() * total;
    let idx = cdf.partition_point(|&c| c <= u);
    idx.min(cdf.len() - 1)
}

impl FiniteDistribution {
    /// An explicit support list. Entries must be distinct and the
    /// probabilities must sum to one within [`PROB_TOLERANCE`].
    pub fn explicit(support: Vec<(InputSeq, f64)>) -> Result<Self> {
        let cdf = validate_probs(support.iter().map(|(_, p)| p))?;
        let mut seen = HashSet::with_capacity(support.len());
        for (index, (x, _)) in support.iter().enumerate() {
            if !seen.insert(x) {
                return Err(Error::DuplicateSupport { index });
            }
        }
        Ok(FiniteDistribution {
            kind: DistKind::Explicit { support },
            cdf,
        })
    }

    /// Uniform over all strings of the given length. Any length is accepted
    /// for sampling; exact enumeration is limited to [`MAX_EXACT_LENGTH`].
    pub fn uniform_strings(alphabet_size: usize, length: usize) -> Result<Self> {
        if alphabet_size == 0 || alphabet_size > u16::MAX as usize + 1 {
            return Err(Error::param(format!("alphabet size {alphabet_size} out of range")));
        }
        Ok(FiniteDistribution {
            kind: DistKind::UniformStrings { alphabet_size, length },
            cdf: Vec::new(),
        })
    }

    /// Product distribution `base^{⊗length}` over strings, materialized.
    pub fn product(base: &[f64], length: usize) -> Result<Self> {
        validate_probs(base.iter())?;
        let k = base.len();
        let n = k
            .checked_pow(length as u32)
            .filter(|&n| n <= 1 << 24)
            .ok_or(Error::TooLargeForExact {
                alphabet_size: k,
                length,
                max_length: MAX_EXACT_LENGTH,
            })?;
        let mut support = Vec::with_capacity(n);
        let mut buf = Vec::with_capacity(length);
        for idx in 0..n {
            decode_string(idx as u64, k, length, &mut buf);
            let p: f64 = buf.iter().map(|s| base[s.0 as usize]).product();
            support.push((InputSeq(buf.clone()), p));
        }
        support.retain(|(_, p)| *p > 0.0);
        let total: f64 = support.iter().map(|(_, p)| p).sum();
        for (_, p) in support.iter_mut() {
            *p /= total;
        }
        Self::explicit(support)
    }

    /// Number of support points, refusing enumeration beyond the exact limit.
    pub fn support_len(&self) -> Result<usize> {
        match &self.kind {
            DistKind::Explicit { support } => Ok(support.len()),
            DistKind::UniformStrings { alphabet_size, length } => {
                let too_large = Error::TooLargeForExact {
                    alphabet_size: *alphabet_size,
                    length: *length,
                    max_length: MAX_EXACT_LENGTH,
                };
                if *length > MAX_EXACT_LENGTH {
                    return Err(too_large);
                }
                alphabet_size
                    .checked_pow(*length as u32)
                    .filter(|&n| n <= u32::MAX as usize)
                    .ok_or(too_large)
            }
        }
    }

    /// Writes the input with support index `idx` into `buf`.
    pub fn input_at(&self, idx: usize, buf: &mut Vec<Symbol>) {
        match &self.kind {
            DistKind::Explicit { support } => {
                buf.clear();
                buf.extend_from_slice(support[idx].0.as_slice());
            }
            DistKind::UniformStrings { alphabet_size, length } => {
                decode_string(idx as u64, *alphabet_size, *length, buf)
            }
        }
    }

    pub fn prob_at(&self, idx: usize) -> f64 {
        match &self.kind {
            DistKind::Explicit { support } => support[idx].1,
            DistKind::UniformStrings { alphabet_size, length } => 1.0 / (*alphabet_size as f64).powi(*length as i32),
        }
    }

    /// Iterates over `(input, probability)` pairs in support order.
    pub fn iter(&self) -> Result<impl Iterator<Item = (InputSeq, f64)> + '_> {
        let n = self.support_len()?;
        Ok((0..n).map(move |i| {
            let mut buf = Vec::new();
            self.input_at(i, &mut buf);
            (InputSeq(buf), self.prob_at(i))
        }))
    }

    /// Visits `(index, input, probability)` in support order without
    /// materializing uniform supports.
    pub fn for_each_input(&self, mut f: impl FnMut(usize, &[Symbol], f64)) -> Result<()> {
        let n = self.support_len()?;
        match &self.kind {
            DistKind::Explicit { support } => {
                for (i, (x, p)) in support.iter().enumerate() {
                    f(i, x.as_slice(), *p);
                }
            }
            DistKind::UniformStrings { alphabet_size, length } => {
                let p = self.prob_at(0);
                let top = (*alphabet_size - 1) as u16;
                let mut buf = vec![Symbol(0); *length];
                for i in 0..n {
                    f(i, &buf, p);
                    // odometer increment, last symbol fastest
                    for slot in buf.iter_mut().rev() {
                        if slot.0 == top {
                            slot.0 = 0;
                        } else {
                            slot.0 += 1;
                            break;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Draws a support index. Only valid when [`Self::support_len`] succeeds.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match &self.kind {
            DistKind::Explicit { .. } => sample_cdf(&self.cdf, rng),
            DistKind::UniformStrings { .. } => {
                let n = self.support_len().expect("enumerable uniform support");
                rng.gen_range(0..n)
            }
        }
    }

    /// Draws an input into `buf`; works for any uniform length.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, buf: &mut Vec<Symbol>) {
        match &self.kind {
            DistKind::Explicit { support } => {
                let i = sample_cdf(&self.cdf, rng);
                buf.clear();
                buf.extend_from_slice(support[i].0.as_slice());
            }
            DistKind::UniformStrings { alphabet_size, length } => {
                buf.clear();
                buf.extend((0..*length).map(|_| Symbol(rng.gen_range(0..*alphabet_size) as u16)));
            }
        }
    }

    /// Input length when every support point has the same length.
    pub fn input_length(&self) -> Option<usize> {
        match &self.kind {
            DistKind::UniformStrings { length, .. } => Some(*length),
            DistKind::Explicit { support } => {
                let n = support[0].0.len();
                support.iter().all(|(x, _)| x.len() == n).then_some(n)
            }
        }
    }

    pub fn is_uniform_strings(&self) -> bool {
        matches!(self.kind, DistKind::UniformStrings { .. })
    }

    /// Checks every support point against a hypothesis domain.
    pub fn check_domain<H: CotHypothesis + ?Sized>(&self, h: &H) -> Result<()> {
        match &self.kind {
            DistKind::Explicit { support } => support.iter().try_for_each(|(x, _)| h.check_input(x.as_slice())),
            DistKind::UniformStrings { alphabet_size, length } => {
                // every string over the alphabet is in the domain iff the
                // all-maximal-symbol string is
                let top = vec![Symbol((*alphabet_size - 1) as u16); *length];
                h.check_input(&top)
            }
        }
    }
}

/// Mixed-radix decode of `idx` into a string of `length` symbols, first
/// symbol most significant.
pub fn decode_string(mut idx: u64, alphabet_size: usize, length: usize, buf: &mut Vec<Symbol>) {
    buf.clear();
    buf.resize(length, Symbol(0));
    let k = alphabet_size as u64;
    for slot in buf.iter_mut().rev() {
        *slot = Symbol((idx % k) as u16);
        idx /= k;
    }
}

/// One `(x, y, z)` triple; `z` is absent for end-to-end-only examples.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Example {
    pub x: InputSeq,
    pub y: Token,
    pub z: Option<Vec<Token>>,
}

impl Example {
    pub fn cot(x: InputSeq, out: CotOutput) -> Self {
        Example {
            x,
            y: out.y,
            z: Some(out.z),
        }
    }

    pub fn e2e(x: InputSeq, y: Token) -> Self {
        Example { x, y, z: None }
    }
}

/// A training sample, possibly mixing CoT-annotated and end-to-end examples.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CotDataset {
    pub examples: Vec<Example>,
}

impl CotDataset {
    pub fn new(examples: Vec<Example>) -> Self {
        CotDataset { examples }
    }

    /// Labels inputs with `h`, attaching the CoT when `with_cot` is set.
    pub fn label<H: CotHypothesis + ?Sized>(h: &H, inputs: &[InputSeq], with_cot: bool) -> Result<Self> {
        let examples = inputs
            .iter()
            .map(|x| {
                let out = h.eval_checked(x.as_slice())?;
                Ok(if with_cot {
                    Example::cot(x.clone(), out)
                } else {
                    Example::e2e(x.clone(), out.y)
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CotDataset { examples })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn push(&mut self, ex: Example) {
        self.examples.push(ex)
    }

    pub fn extend(&mut self, other: CotDataset) {
        self.examples.extend(other.examples)
    }
}

/// A distribution over `(x, y, z)` triples, for the agnostic setting.
#[derive(Clone, Debug)]
pub struct JointDistribution {
    support: Vec<(Example, f64)>,
    cdf: Vec<f64>,
}

impl JointDistribution {
    /// Every support triple must carry a CoT.
    pub fn new(support: Vec<(Example, f64)>) -> Result<Self> {
        let cdf = validate_probs(support.iter().map(|(_, p)| p))?;
        if let Some(i) = support.iter().position(|(e, _)| e.z.is_none()) {
            return Err(Error::param(format!("joint support entry {i} has no CoT")));
        }
        Ok(JointDistribution { support, cdf })
    }

    /// The distribution of `(x, h(x))` for `x ~ d`.
    pub fn realized_by<H: CotHypothesis + ?Sized>(h: &H, d: &FiniteDistribution) -> Result<Self> {
        d.check_domain(h)?;
        let support = d
            .iter()?
            .map(|(x, p)| {
                let out = h.eval(x.as_slice());
                (Example::cot(x, out), p)
            })
            .collect();
        Self::new(support)
    }

    pub fn support(&self) -> &[(Example, f64)] {
        &self.support
    }

    pub fn sample_dataset<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> CotDataset {
        let examples = (0..m)
            .map(|_| self.support[sample_cdf(&self.cdf, rng)].0.clone())
            .collect();
        CotDataset { examples }
    }
}

/// A non-negative real extended with `+inf`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Infinite,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    pub fn from_f64(v: f64) -> Self {
        if v.is_infinite() {
            ExtReal::Infinite
        } else {
            ExtReal::Finite(v)
        }
    }

    /// `-ln p`, with `p = 0` mapping to `+inf`.
    pub fn neg_log(p: f64) -> Self {
        if p <= 0.0 {
            ExtReal::Infinite
        } else if p >= 1.0 {
            ExtReal::Finite(0.0)
        } else {
            ExtReal::Finite(-p.ln())
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtReal::Infinite)
    }

    pub fn is_finite(&self) -> bool {
        !self.is_infinite()
    }

    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::Finite(v) => v,
            ExtReal::Infinite => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::Infinite => None,
        }
    }

    /// Division by a positive real; `inf / c = inf`.
    pub fn div_by(self, c: f64) -> ExtReal {
        match self {
            ExtReal::Finite(v) => ExtReal::from_f64(v / c),
            ExtReal::Infinite => ExtReal::Infinite,
        }
    }

    pub fn scale(self, c: f64) -> ExtReal {
        match self {
            ExtReal::Finite(v) => ExtReal::Finite(v * c),
            ExtReal::Infinite if c == 0.0 => ExtReal::ZERO,
            ExtReal::Infinite => ExtReal::Infinite,
        }
    }

    pub fn min(self, other: ExtReal) -> ExtReal {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: ExtReal) -> ExtReal {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.to_f64().partial_cmp(&other.to_f64())
    }
}

impl Add for ExtReal {
    type Output = ExtReal;

    fn add(self, rhs: ExtReal) -> ExtReal {
        match (self, rhs) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
            _ => ExtReal::Infinite,
        }
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        ExtReal::from_f64(v)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => s.serialize_f64(*v),
            ExtReal::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(ExtReal::from_f64(v)),
            Repr::Str(s) if s == "inf" => Ok(ExtReal::Infinite),
            Repr::Str(s) => Err(serde::de::Error::custom(format!(
                "expected number or \"inf\", got \"{s}\""
            ))),
        }
    }
}

fn check_pair<A, B>(h: &A, hstar: &B, d: &FiniteDistribution) -> Result<()>
where
    A: CotHypothesis + ?Sized,
    B: CotHypothesis + ?Sized,
{
    d.check_domain(h)?;
    d.check_domain(hstar)
}

/// Both risks in one pass. The CoT risk is the output risk plus the mass
/// where only the CoT differs, so `cot >= e2e` survives rounding; a risk
/// whose event covers the whole support is exactly 1.
fn pair_risks<A, B>(h: &A, hstar: &B, d: &FiniteDistribution) -> Result<(f64, f64)>
where
    A: CotHypothesis + ?Sized,
    B: CotHypothesis + ?Sized,
{
    check_pair(h, hstar, d)?;
    let (mut a, mut b) = (CotOutput::default(), CotOutput::default());
    let n = d.support_len()?;
    let (mut ete, mut z_only) = (0.0, 0.0);
    let (mut ete_count, mut cot_count) = (0usize, 0usize);
    d.for_each_input(|_, x, p| {
        h.eval_into(x, &mut a);
        hstar.eval_into(x, &mut b);
        if a.y != b.y {
            ete += p;
            ete_count += 1;
            cot_count += 1;
        } else if a.z != b.z {
            z_only += p;
            cot_count += 1;
        }
    })?;
    let ete = if ete_count == n { 1.0 } else { ete };
    let cot = if cot_count == n { 1.0 } else { (ete + z_only).min(1.0) };
    Ok((ete, cot))
}

/// `P_x[ete(h)(x) != ete(hstar)(x)]`.
pub fn e2e_risk<A, B>(h: &A, hstar: &B, d: &FiniteDistribution) -> Result<f64>
where
    A: CotHypothesis + ?Sized,
    B: CotHypothesis + ?Sized,
{
    Ok(pair_risks(h, hstar, d)?.0)
}

/// `P_x[h(x) != hstar(x)]`, comparing the full `(y, z)` pair.
pub fn cot_risk<A, B>(h: &A, hstar: &B, d: &FiniteDistribution) -> Result<f64>
where
    A: CotHypothesis + ?Sized,
    B: CotHypothesis + ?Sized,
{
    Ok(pair_risks(h, hstar, d)?.1)
}

/// `(L_ete, L_cot)` of `h` under a joint distribution over `(x, y, z)`.
pub fn joint_risks<H: CotHypothesis + ?Sized>(h: &H, d: &JointDistribution) -> Result<(f64, f64)> {
    let mut out = CotOutput::default();
    let (mut ete, mut z_only) = (0.0, 0.0);
    for (ex, p) in d.support() {
        h.check_input(ex.x.as_slice())?;
        h.eval_into(ex.x.as_slice(), &mut out);
        let y_bad = out.y != ex.y;
        let z_bad = ex.z.as_deref().is_some_and(|z| z != out.z.as_slice());
        if y_bad {
            ete += p;
        } else if z_bad {
            z_only += p;
        }
    }
    Ok((ete.min(1.0), (ete + z_only).min(1.0)))
}

/// Mismatch counts of `h` on a single example: `(output wrong, output or CoT wrong)`.
pub(crate) fn example_mismatch<H: CotHypothesis + ?Sized>(h: &H, ex: &Example, out: &mut CotOutput) -> (bool, bool) {
    h.eval_into(ex.x.as_slice(), out);
    let y_bad = out.y != ex.y;
    let z_bad = ex.z.as_deref().is_some_and(|z| z != out.z.as_slice());
    (y_bad, y_bad || z_bad)
}

/// Empirical `(e2e, CoT)` risks on a dataset. Examples without a CoT
/// contribute only their output mismatch to both. An empty dataset has
/// zero risk.
pub fn empirical_risks<H: CotHypothesis + ?Sized>(h: &H, s: &CotDataset) -> Result<(f64, f64)> {
    if s.is_empty() {
        return Ok((0.0, 0.0));
    }
    let mut out = CotOutput::default();
    let (mut ete, mut cot) = (0usize, 0usize);
    for ex in &s.examples {
        h.check_input(ex.x.as_slice())?;
        let (y_bad, any_bad) = example_mismatch(h, ex, &mut out);
        ete += y_bad as usize;
        cot += any_bad as usize;
    }
    let m = s.len() as f64;
    Ok((ete as f64 / m, cot as f64 / m))
}
