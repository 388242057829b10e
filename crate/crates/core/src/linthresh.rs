//! Iterated linear thresholds: an autoregressive CoT class over binary
//! sequences. Each step appends `1{Σ_i w_i · s_{len-i} ≥ 0}` to the running
//! sequence; the `T` appended bits are the CoT and the last one is the output.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ClassMeta, CotHypothesis, CotOutput, HypothesisClass, Symbol, Token};

/// Window `d`, step count `T` and input length `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinThreshSpec {
    pub window: usize,
    pub steps: usize,
    pub input_len: usize,
}

impl LinThreshSpec {
    pub fn new(window: usize, steps: usize, input_len: usize) -> Result<Self> {
        if window == 0 || steps == 0 || input_len == 0 {
            return Err(Error::param("window, steps and input length must be positive"));
        }
        if window > 40 {
            return Err(Error::SizeOverflow(format!("3^{window}")));
        }
        Ok(LinThreshSpec {
            window,
            steps,
            input_len,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinThreshHypothesis {
    spec: LinThreshSpec,
    weights: Vec<i8>,
    pos_mask: u64,
    neg_mask: u64,
    id: u64,
}

impl LinThreshHypothesis {
    /// Weights must lie in `{-1, 0, 1}`; `weights[0]` multiplies the most
    /// recent symbol.
    pub fn new(spec: LinThreshSpec, weights: Vec<i8>) -> Result<Self> {
        if weights.len() != spec.window {
            return Err(Error::param(format!(
                "expected {} weights, got {}",
                spec.window,
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(-1..=1).contains(*w)) {
            return Err(Error::param(format!("weight {w} not in {{-1, 0, 1}}")));
        }
        Ok(Self::from_parts(spec, weights))
    }

    fn from_parts(spec: LinThreshSpec, weights: Vec<i8>) -> Self {
        let mask = |v: i8| {
            weights
                .iter()
                .enumerate()
                .filter(|(_, &w)| w == v)
                .fold(0u64, |m, (i, _)| m | (1 << i))
        };
        let (pos_mask, neg_mask) = (mask(1), mask(-1));
        LinThreshHypothesis {
            id: encode_weights(&weights),
            spec,
            weights,
            pos_mask,
            neg_mask,
        }
    }

    pub fn weights(&self) -> &[i8] {
        &self.weights
    }

    pub fn spec(&self) -> LinThreshSpec {
        self.spec
    }

    pub fn to_json(&self) -> LinThreshJson {
        LinThreshJson {
            d: self.spec.window,
            t: self.spec.steps,
            n: self.spec.input_len,
            weights: self.weights.clone(),
        }
    }

    pub fn from_json(j: &LinThreshJson) -> Result<Self> {
        Self::new(LinThreshSpec::new(j.d, j.t, j.n)?, j.weights.clone())
    }
}

/// JSON form `{"d", "T", "n", "weights"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinThreshJson {
    pub d: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub n: usize,
    pub weights: Vec<i8>,
}

/// Base-3 id of `(w + 1)`, `w_0` least significant.
pub fn encode_weights(w: &[i8]) -> u64 {
    w.iter().rev().fold(0u64, |acc, &wi| acc * 3 + (wi + 1) as u64)
}

pub fn decode_weights(mut id: u64, window: usize) -> Vec<i8> {
    (0..window)
        .map(|_| {
            let digit = (id % 3) as i8;
            id /= 3;
            digit - 1
        })
        .collect()
}

/// Runs the iteration on `x` and returns the CoT `(z_1, ..., z_T)`; the
/// lookback window is zero-padded before the start of the sequence.
pub fn eval_trace(h: &LinThreshHypothesis, x: &[Symbol]) -> CotOutput {
    let mut out = CotOutput::default();
    h.eval_into(x, &mut out);
    out
}

impl CotHypothesis for LinThreshHypothesis {
    fn id(&self) -> u64 {
        self.id
    }

    fn check_input(&self, x: &[Symbol]) -> Result<()> {
        match x.iter().position(|s| s.0 > 1) {
            Some(position) => Err(Error::DomainMismatch {
                symbol: x[position].0,
                position,
                alphabet_size: 2,
            }),
            None => Ok(()),
        }
    }

    fn eval_into(&self, x: &[Symbol], out: &mut CotOutput) {
        // bit i of `recent` holds s_{len-1-i}; bits beyond the sequence start stay 0
        let window_mask = if self.spec.window >= 64 {
            u64::MAX
        } else {
            (1u64 << self.spec.window) - 1
        };
        let mut recent = x.iter().fold(0u64, |acc, s| ((acc << 1) | s.0 as u64) & window_mask);
        out.z.clear();
        for _ in 0..self.spec.steps {
            let acc = (recent & self.pos_mask).count_ones() as i32 - (recent & self.neg_mask).count_ones() as i32;
            let bit = (acc >= 0) as u64;
            recent = ((recent << 1) | bit) & window_mask;
            out.z.push(Token(bit as u32));
        }
        out.y = *out.z.last().expect("at least one step");
    }
}

/// All `3^d` weight vectors.
#[derive(Clone, Debug)]
pub struct LinThreshClass {
    spec: LinThreshSpec,
    cardinality: u64,
}

pub fn enumerate_linthresh_class(spec: LinThreshSpec) -> Result<LinThreshClass> {
    let cardinality = 3u64
        .checked_pow(spec.window as u32)
        .ok_or_else(|| Error::SizeOverflow(format!("3^{}", spec.window)))?;
    Ok(LinThreshClass { spec, cardinality })
}

impl LinThreshClass {
    pub fn spec(&self) -> LinThreshSpec {
        self.spec
    }
}

impl HypothesisClass for LinThreshClass {
    type Hypothesis = LinThreshHypothesis;

    fn cardinality(&self) -> u64 {
        self.cardinality
    }

    fn hypothesis(&self, id: u64) -> LinThreshHypothesis {
        assert!(id < self.cardinality, "linear-threshold id {id} out of range");
        LinThreshHypothesis::from_parts(self.spec, decode_weights(id, self.spec.window))
    }

    fn meta(&self) -> ClassMeta {
        ClassMeta::new("linthresh")
            .with("d", self.spec.window)
            .with("T", self.spec.steps)
            .with("n", self.spec.input_len)
    }
}
