//! Naive reference implementations, written against the plain definitions
//! and sharing no code with the library.

#![allow(dead_code)]

/// All strings of length `n` over `{0..k}`, last symbol fastest.
pub fn all_strings(k: u16, n: usize) -> Vec<Vec<u16>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|s| {
                (0..k).map(move |a| {
                    let mut t = s.clone();
                    t.push(a);
                    t
                })
            })
            .collect();
    }
    out
}

pub fn uniform(k: u16, n: usize) -> Vec<(Vec<u16>, f64)> {
    let xs = all_strings(k, n);
    let p = 1.0 / xs.len() as f64;
    xs.into_iter().map(|x| (x, p)).collect()
}

/// `(y, z)` of a DFA given as a row-major table; `prefix` truncates the
/// trajectory.
pub fn naive_dfa(
    table: &[u16],
    k: usize,
    init: u16,
    accept: &[u16],
    prefix: Option<usize>,
    x: &[u16],
) -> (u32, Vec<u32>) {
    let mut s = init;
    let mut traj = Vec::new();
    for &a in x {
        s = table[s as usize * k + a as usize];
        traj.push(s as u32);
    }
    let y = accept.contains(&s) as u32;
    if let Some(t) = prefix {
        traj.truncate(t);
    }
    (y, traj)
}

/// `(y, z)` of a linear-threshold iteration: append
/// `1{Σ_i w_i s_{len-i} ≥ 0}` to the sequence `T` times, zero before the
/// start of the sequence.
pub fn naive_linthresh(w: &[i8], steps: usize, x: &[u16]) -> (u32, Vec<u32>) {
    let mut s: Vec<i64> = x.iter().map(|&v| v as i64).collect();
    let mut z = Vec::new();
    for _ in 0..steps {
        let len = s.len();
        let mut acc = 0i64;
        for (i, &wi) in w.iter().enumerate() {
            let v = if len > i { s[len - 1 - i] } else { 0 };
            acc += wi as i64 * v;
        }
        let bit = (acc >= 0) as i64;
        s.push(bit);
        z.push(bit as u32);
    }
    (*z.last().unwrap(), z)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NaivePair {
    pub d_ete: f64,
    pub agree: f64,
    pub cot_risk: f64,
    pub rel_info: f64,
}

/// Double loop over the support: outputs of both hypotheses per input.
pub fn naive_pair<F, G>(fstar: F, f: G, support: &[(Vec<u16>, f64)]) -> NaivePair
where
    F: Fn(&[u16]) -> (u32, Vec<u32>),
    G: Fn(&[u16]) -> (u32, Vec<u32>),
{
    let (mut d_ete, mut agree, mut cot) = (0.0, 0.0, 0.0);
    for (x, p) in support {
        let (ys, zs) = fstar(x);
        let (y, z) = f(x);
        if y != ys {
            d_ete += p;
        }
        if y == ys && z == zs {
            agree += p;
        } else {
            cot += p;
        }
    }
    NaivePair {
        d_ete,
        agree,
        cot_risk: cot,
        rel_info: -f64::ln(agree),
    }
}

/// `min { rel_info : d_ete > ε }`, `+inf` over the empty set.
pub fn naive_info(pairs: &[NaivePair], eps: f64) -> f64 {
    pairs
        .iter()
        .filter(|p| p.d_ete > eps)
        .map(|p| p.rel_info)
        .fold(f64::INFINITY, f64::min)
}

/// Mixed-radix table of a DFA id, most significant digit first.
pub fn decode_dfa_id(mut id: u64, states: u64, len: usize) -> Vec<u16> {
    let mut t = vec![0u16; len];
    for slot in t.iter_mut().rev() {
        *slot = (id % states) as u16;
        id /= states;
    }
    t
}

/// The 4-state reference automaton, rows state 0..3, columns symbol 0, 1.
pub const REFERENCE_TABLE: [u16; 8] = [1, 3, 0, 3, 3, 1, 3, 2];
