//! The DFA hypothesis class: all transition functions over a fixed state
//! space and alphabet, with the visited state trajectory as the CoT.
//!
//! Trajectory convention: with `z_0 = init`, `z_t = δ(z_{t-1}, x_t)` for
//! `t = 1..n`. The initial state is not emitted. The CoT is the prefix
//! `(z_1, ..., z_min(T, n))` for detail level `T`, and the output is
//! `y = 1{z_n ∈ accept}`.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{ClassMeta, CotHypothesis, CotOutput, HypothesisClass, InputSeq, StateId, Symbol, Token};

/// How much of the state trajectory the CoT reveals.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DetailLevel {
    #[default]
    Full,
    Prefix(usize),
}

impl DetailLevel {
    pub fn cot_len(self, n: usize) -> usize {
        match self {
            DetailLevel::Full => n,
            DetailLevel::Prefix(t) => t.min(n),
        }
    }
}

impl fmt::Display for DetailLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DetailLevel::Full => f.write_str("full"),
            DetailLevel::Prefix(t) => write!(f, "{t}"),
        }
    }
}

impl Serialize for DetailLevel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            DetailLevel::Full => s.serialize_str("full"),
            DetailLevel::Prefix(t) => s.serialize_u64(*t as u64),
        }
    }
}

impl<'de> Deserialize<'de> for DetailLevel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(usize),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(t) => Ok(DetailLevel::Prefix(t)),
            Repr::Str(s) if s == "full" => Ok(DetailLevel::Full),
            Repr::Str(s) => Err(serde::de::Error::custom(format!(
                "detail level must be an integer or \"full\", got \"{s}\""
            ))),
        }
    }
}

/// State space, alphabet, fixed initial and accepting states, and CoT detail.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DfaSpec {
    pub num_states: usize,
    pub alphabet_size: usize,
    pub init_state: StateId,
    pub accept_states: Vec<StateId>,
    pub detail: DetailLevel,
    accept_mask: Vec<bool>,
}

impl DfaSpec {
    pub fn new(
        num_states: usize,
        alphabet_size: usize,
        init_state: StateId,
        accept_states: Vec<StateId>,
        detail: DetailLevel,
    ) -> Result<Self> {
        if num_states == 0 || alphabet_size == 0 {
            return Err(Error::param("DFA needs at least one state and one symbol"));
        }
        if num_states > u16::MAX as usize || alphabet_size > u16::MAX as usize {
            return Err(Error::param("DFA state space or alphabet too large"));
        }
        if init_state.0 as usize >= num_states {
            return Err(Error::param(format!("initial state {} out of range", init_state.0)));
        }
        let mut accept_mask = vec![false; num_states];
        for s in &accept_states {
            if s.0 as usize >= num_states {
                return Err(Error::param(format!("accept state {} out of range", s.0)));
            }
            accept_mask[s.0 as usize] = true;
        }
        let mut accept_states = accept_states;
        accept_states.sort();
        accept_states.dedup();
        Ok(DfaSpec {
            num_states,
            alphabet_size,
            init_state,
            accept_states,
            detail,
            accept_mask,
        })
    }

    pub fn is_accepting(&self, s: StateId) -> bool {
        self.accept_mask[s.0 as usize]
    }

    pub fn with_detail(&self, detail: DetailLevel) -> Self {
        DfaSpec { detail, ..self.clone() }
    }

    pub fn table_len(&self) -> usize {
        self.num_states * self.alphabet_size
    }
}

/// One automaton: a row-major transition table `δ[s * |Σ| + a]`.
#[derive(Clone, Debug)]
pub struct DfaHypothesis {
    spec: Arc<DfaSpec>,
    table: Vec<StateId>,
    id: u64,
}

impl DfaHypothesis {
    pub fn new(spec: DfaSpec, table: Vec<StateId>) -> Result<Self> {
        Self::with_shared_spec(Arc::new(spec), table)
    }

    fn with_shared_spec(spec: Arc<DfaSpec>, table: Vec<StateId>) -> Result<Self> {
        if table.len() != spec.table_len() {
            return Err(Error::param(format!(
                "transition table has {} entries, expected {}",
                table.len(),
                spec.table_len()
            )));
        }
        if let Some(bad) = table.iter().find(|s| s.0 as usize >= spec.num_states) {
            return Err(Error::param(format!("transition target {} out of range", bad.0)));
        }
        let id = encode_table(&table, spec.num_states).unwrap_or(u64::MAX);
        Ok(DfaHypothesis { spec, table, id })
    }

    pub fn spec(&self) -> &DfaSpec {
        &self.spec
    }

    pub fn table(&self) -> &[StateId] {
        &self.table
    }

    pub fn delta(&self, s: StateId, a: Symbol) -> StateId {
        self.table[s.0 as usize * self.spec.alphabet_size + a.0 as usize]
    }

    /// Same table under a different detail level.
    pub fn with_detail(&self, detail: DetailLevel) -> Self {
        DfaHypothesis {
            spec: Arc::new(self.spec.with_detail(detail)),
            table: self.table.clone(),
            id: self.id,
        }
    }

    /// Copy with one transition redirected.
    pub fn with_transition(&self, s: StateId, a: Symbol, to: StateId) -> Result<Self> {
        let mut table = self.table.clone();
        table[s.0 as usize * self.spec.alphabet_size + a.0 as usize] = to;
        Self::with_shared_spec(self.spec.clone(), table)
    }

    /// Full state trajectory `(z_1, ..., z_n)`.
    pub fn trajectory(&self, x: &[Symbol]) -> Vec<StateId> {
        let mut s = self.spec.init_state;
        x.iter()
            .map(|&a| {
                s = self.delta(s, a);
                s
            })
            .collect()
    }

    pub fn accepts(&self, x: &[Symbol]) -> bool {
        let last = self.trajectory(x).last().copied().unwrap_or(self.spec.init_state);
        self.spec.is_accepting(last)
    }

    pub fn to_json(&self) -> DfaJson {
        DfaJson {
            num_states: self.spec.num_states,
            alphabet_size: self.spec.alphabet_size,
            init: self.spec.init_state.0,
            accept: self.spec.accept_states.iter().map(|s| s.0).collect(),
            table: self.table.iter().map(|s| s.0).collect(),
            detail: Some(self.spec.detail),
        }
    }

    pub fn from_json(j: &DfaJson) -> Result<Self> {
        let spec = DfaSpec::new(
            j.num_states,
            j.alphabet_size,
            StateId(j.init),
            j.accept.iter().map(|&s| StateId(s)).collect(),
            j.detail.unwrap_or_default(),
        )?;
        Self::new(spec, j.table.iter().map(|&s| StateId(s)).collect())
    }
}

impl CotHypothesis for DfaHypothesis {
    fn id(&self) -> u64 {
        self.id
    }

    fn check_input(&self, x: &[Symbol]) -> Result<()> {
        match x.iter().position(|a| a.0 as usize >= self.spec.alphabet_size) {
            Some(position) => Err(Error::DomainMismatch {
                symbol: x[position].0,
                position,
                alphabet_size: self.spec.alphabet_size,
            }),
            None => Ok(()),
        }
    }

    fn eval_into(&self, x: &[Symbol], out: &mut CotOutput) {
        let k = self.spec.alphabet_size;
        let cot_len = self.spec.detail.cot_len(x.len());
        out.z.clear();
        let mut s = self.spec.init_state.0 as usize;
        for (t, a) in x.iter().enumerate() {
            s = self.table[s * k + a.0 as usize].0 as usize;
            if t < cot_len {
                out.z.push(Token(s as u32));
            }
        }
        out.y = Token(self.spec.accept_mask[s] as u32);
    }
}

/// JSON form: `{"num_states", "alphabet_size", "init", "accept", "table"}`,
/// table row-major; `detail` is optional and defaults to the full trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DfaJson {
    pub num_states: usize,
    pub alphabet_size: usize,
    pub init: u16,
    pub accept: Vec<u16>,
    pub table: Vec<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<DetailLevel>,
}

/// Mixed-radix id of a table; entry `(0, 0)` is the most significant digit.
pub fn encode_table(table: &[StateId], num_states: usize) -> Option<u64> {
    table.iter().try_fold(0u64, |acc, s| {
        acc.checked_mul(num_states as u64)?.checked_add(s.0 as u64)
    })
}

pub fn decode_table(mut id: u64, num_states: usize, table_len: usize) -> Vec<StateId> {
    let mut table = vec![StateId(0); table_len];
    let base = num_states as u64;
    for slot in table.iter_mut().rev() {
        *slot = StateId((id % base) as u16);
        id /= base;
    }
    table
}

/// All `|S|^(|S|·|Σ|)` automata over a spec.
#[derive(Clone, Debug)]
pub struct DfaClass {
    spec: Arc<DfaSpec>,
    cardinality: u64,
}

/// Enumerates the DFA class, refusing sizes that overflow 64 bits.
pub fn enumerate_dfa_class(spec: DfaSpec) -> Result<DfaClass> {
    let cardinality = (spec.num_states as u64)
        .checked_pow(spec.table_len() as u32)
        .ok_or_else(|| {
            Error::SizeOverflow(format!(
                "{}^({}·{})",
                spec.num_states, spec.num_states, spec.alphabet_size
            ))
        })?;
    Ok(DfaClass {
        spec: Arc::new(spec),
        cardinality,
    })
}

impl DfaClass {
    pub fn spec(&self) -> &DfaSpec {
        &self.spec
    }

    /// Id of a hypothesis with the same table (ignores its detail level).
    pub fn id_of(&self, h: &DfaHypothesis) -> Result<u64> {
        if h.spec.num_states != self.spec.num_states || h.spec.alphabet_size != self.spec.alphabet_size {
            return Err(Error::param("automaton shape does not match the class"));
        }
        encode_table(&h.table, self.spec.num_states).ok_or_else(|| Error::SizeOverflow("table id".into()))
    }

    /// The class member with the same transition table as `h`, carrying
    /// this class's spec.
    pub fn member_like(&self, h: &DfaHypothesis) -> Result<DfaHypothesis> {
        Ok(self.hypothesis(self.id_of(h)?))
    }
}

impl HypothesisClass for DfaClass {
    type Hypothesis = DfaHypothesis;

    fn cardinality(&self) -> u64 {
        self.cardinality
    }

    fn hypothesis(&self, id: u64) -> DfaHypothesis {
        assert!(id < self.cardinality, "DFA id {id} out of range");
        DfaHypothesis {
            spec: self.spec.clone(),
            table: decode_table(id, self.spec.num_states, self.spec.table_len()),
            id,
        }
    }

    fn meta(&self) -> ClassMeta {
        ClassMeta::new("dfa")
            .with("num_states", self.spec.num_states)
            .with("alphabet_size", self.spec.alphabet_size)
            .with("init", self.spec.init_state.0)
            .with(
                "accept",
                self.spec
                    .accept_states
                    .iter()
                    .map(|s| s.0.to_string())
                    .collect::<Vec<_>>()
                    .join(" "),
            )
            .with("detail", self.spec.detail)
    }
}

/// Spec of the 4-state, binary-alphabet reference automaton.
pub fn reference_spec(detail: DetailLevel) -> DfaSpec {
    DfaSpec::new(4, 2, StateId(0), vec![StateId(3)], detail).expect("valid reference spec")
}

/// The 4-state reference target over `{0, 1}`: init 0, accept {3}.
pub fn reference_target() -> DfaHypothesis {
    reference_target_with(DetailLevel::Full)
}

pub fn reference_target_with(detail: DetailLevel) -> DfaHypothesis {
    // rows: state 0..3, columns: symbol 0, 1
    let table = [1, 3, 0, 3, 3, 1, 3, 2].map(StateId).to_vec();
    DfaHypothesis::new(reference_spec(detail), table).expect("valid reference table")
}

/// Automaton recognising strings that contain `u` as a subsequence: state
/// `s` waits for `u[s]`; state `|u|` accepts and absorbs.
pub fn shuffle_ideal_dfa(u: &InputSeq, alphabet_size: usize) -> Result<DfaHypothesis> {
    if u.is_empty() {
        return Err(Error::param("shuffle ideal generator must be non-empty"));
    }
    let states = u.len() + 1;
    let spec = DfaSpec::new(
        states,
        alphabet_size,
        StateId(0),
        vec![StateId(u.len() as u16)],
        DetailLevel::Full,
    )?;
    let mut table = Vec::with_capacity(states * alphabet_size);
    for s in 0..states {
        for a in 0..alphabet_size {
            let next = if s < u.len() && u.0[s].0 as usize == a {
                s + 1
            } else {
                s
            };
            table.push(StateId(next as u16));
        }
    }
    DfaHypothesis::new(spec, table)
}

/// BFS depth of every state from the initial state; `None` if unreachable.
pub fn reachability_depths(h: &DfaHypothesis) -> Vec<Option<usize>> {
    let spec = h.spec();
    let mut depth = vec![None; spec.num_states];
    depth[spec.init_state.0 as usize] = Some(0);
    let mut queue = VecDeque::from([spec.init_state]);
    while let Some(s) = queue.pop_front() {
        let d = depth[s.0 as usize].unwrap();
        for a in 0..spec.alphabet_size {
            let t = h.delta(s, Symbol(a as u16));
            if depth[t.0 as usize].is_none() {
                depth[t.0 as usize] = Some(d + 1);
                queue.push_back(t);
            }
        }
    }
    depth
}

/// Lower bound `|Σ|^-(ℓ+1)` on the CoT information of an `ℓ`-connected
/// target under uniform inputs of length at least `ℓ + 1`. Fails with the
/// offending state when some reachable state needs more than `ℓ` steps.
pub fn connectivity_bound(hstar: &DfaHypothesis, ell: usize) -> Result<f64> {
    for (s, depth) in reachability_depths(hstar).into_iter().enumerate() {
        if let Some(depth) = depth.filter(|&d| d > ell) {
            return Err(Error::NotConnected {
                state: s as u16,
                depth,
                ell,
            });
        }
    }
    Ok((hstar.spec().alphabet_size as f64).powi(-(ell as i32 + 1)))
}

/// Smallest `ℓ` for which the target is `ℓ`-connected.
pub fn connectivity_radius(hstar: &DfaHypothesis) -> usize {
    reachability_depths(hstar).into_iter().flatten().max().unwrap_or(0)
}
