//! Small synthetic classes that pin the CoT information at known values:
//! a product class (CoT carries no information about the output map), a
//! fully informative class (the CoT names the hypothesis), and a class
//! whose CoT replicates `T` i.i.d. end-to-end observations.
//!
//! Inputs of the product and fully informative classes are single symbols
//! `x ∈ {0, ..., k-1}`; maps are lookup tables over that domain.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{ClassMeta, CotHypothesis, CotOutput, HypothesisClass, Symbol, Token};

/// A function on a finite domain, stored as its value table.
pub type FiniteMap = Vec<u32>;

fn check_maps(name: &str, maps: &[FiniteMap]) -> Result<usize> {
    let first = maps
        .first()
        .ok_or_else(|| Error::param(format!("{name} must be non-empty")))?;
    if first.is_empty() {
        return Err(Error::param(format!("{name} maps must have a non-empty domain")));
    }
    if maps.iter().any(|m| m.len() != first.len()) {
        return Err(Error::param(format!("{name} maps must share one domain")));
    }
    Ok(first.len())
}

fn check_point(x: &[Symbol], domain: usize) -> Result<()> {
    if x.len() != 1 {
        return Err(Error::LengthMismatch {
            expected: 1,
            got: x.len(),
        });
    }
    if x[0].0 as usize >= domain {
        return Err(Error::DomainMismatch {
            symbol: x[0].0,
            position: 0,
            alphabet_size: domain,
        });
    }
    Ok(())
}

fn to_arc(m: &FiniteMap) -> Arc<[Token]> {
    m.iter().map(|&v| Token(v)).collect()
}

#[derive(Clone, Debug)]
enum CotMap {
    Table(Arc<[Token]>),
    Constant(Token),
}

/// `x -> (f(x), [g(x)])` over a single-symbol domain.
#[derive(Clone, Debug)]
pub struct MapHypothesis {
    id: u64,
    output: Arc<[Token]>,
    cot: CotMap,
}

impl CotHypothesis for MapHypothesis {
    fn id(&self) -> u64 {
        self.id
    }

    fn check_input(&self, x: &[Symbol]) -> Result<()> {
        check_point(x, self.output.len())
    }

    fn eval_into(&self, x: &[Symbol], out: &mut CotOutput) {
        let i = x[0].0 as usize;
        out.y = self.output[i];
        out.z.clear();
        out.z.push(match &self.cot {
            CotMap::Table(g) => g[i],
            CotMap::Constant(t) => *t,
        });
    }
}

/// `h_{g,f}(x) = (f(x), g(x))` over all pairs. Id is
/// `cot_index · |ete_part| + ete_index`.
#[derive(Clone, Debug)]
pub struct ProductClass {
    cot_part: Vec<Arc<[Token]>>,
    ete_part: Vec<Arc<[Token]>>,
    domain: usize,
}

pub fn build_product(cot_part: &[FiniteMap], ete_part: &[FiniteMap]) -> Result<ProductClass> {
    let d1 = check_maps("cot_part", cot_part)?;
    let d2 = check_maps("ete_part", ete_part)?;
    if d1 != d2 {
        return Err(Error::param("CoT and output maps must share one domain"));
    }
    Ok(ProductClass {
        cot_part: cot_part.iter().map(to_arc).collect(),
        ete_part: ete_part.iter().map(to_arc).collect(),
        domain: d1,
    })
}

impl ProductClass {
    pub fn domain_size(&self) -> usize {
        self.domain
    }

    pub fn id_of(&self, cot_index: usize, ete_index: usize) -> u64 {
        (cot_index * self.ete_part.len() + ete_index) as u64
    }
}

impl HypothesisClass for ProductClass {
    type Hypothesis = MapHypothesis;

    fn cardinality(&self) -> u64 {
        (self.cot_part.len() * self.ete_part.len()) as u64
    }

    fn hypothesis(&self, id: u64) -> MapHypothesis {
        let k = self.ete_part.len() as u64;
        MapHypothesis {
            id,
            output: self.ete_part[(id % k) as usize].clone(),
            cot: CotMap::Table(self.cot_part[(id / k) as usize].clone()),
        }
    }

    fn meta(&self) -> ClassMeta {
        ClassMeta::new("product")
            .with("cot_maps", self.cot_part.len())
            .with("ete_maps", self.ete_part.len())
            .with("domain", self.domain)
    }
}

/// `h_f(x) = (f(x), [id(f)])`: the CoT identifies the hypothesis.
#[derive(Clone, Debug)]
pub struct FullyInformativeClass {
    base: Vec<Arc<[Token]>>,
    domain: usize,
}

pub fn build_fully_informative(base: &[FiniteMap]) -> Result<FullyInformativeClass> {
    let domain = check_maps("base", base)?;
    Ok(FullyInformativeClass {
        base: base.iter().map(to_arc).collect(),
        domain,
    })
}

impl FullyInformativeClass {
    pub fn domain_size(&self) -> usize {
        self.domain
    }
}

impl HypothesisClass for FullyInformativeClass {
    type Hypothesis = MapHypothesis;

    fn cardinality(&self) -> u64 {
        self.base.len() as u64
    }

    fn hypothesis(&self, id: u64) -> MapHypothesis {
        MapHypothesis {
            id,
            output: self.base[id as usize].clone(),
            cot: CotMap::Constant(Token(id as u32)),
        }
    }

    fn meta(&self) -> ClassMeta {
        ClassMeta::new("fully_informative")
            .with("size", self.base.len())
            .with("domain", self.domain)
    }
}

/// `(x_1..x_T) -> (f(x_T), [f(x_1), ..., f(x_T)])`.
#[derive(Clone, Debug)]
pub struct IidHypothesis {
    id: u64,
    f: Arc<[Token]>,
    replication: usize,
}

impl CotHypothesis for IidHypothesis {
    fn id(&self) -> u64 {
        self.id
    }

    fn check_input(&self, x: &[Symbol]) -> Result<()> {
        if x.len() != self.replication {
            return Err(Error::LengthMismatch {
                expected: self.replication,
                got: x.len(),
            });
        }
        match x.iter().position(|s| s.0 as usize >= self.f.len()) {
            Some(position) => Err(Error::DomainMismatch {
                symbol: x[position].0,
                position,
                alphabet_size: self.f.len(),
            }),
            None => Ok(()),
        }
    }

    fn eval_into(&self, x: &[Symbol], out: &mut CotOutput) {
        out.z.clear();
        out.z.extend(x.iter().map(|s| self.f[s.0 as usize]));
        out.y = *out.z.last().expect("replication factor is positive");
    }
}

#[derive(Clone, Debug)]
pub struct IidReplicationClass {
    base: Vec<Arc<[Token]>>,
    domain: usize,
    replication: usize,
}

pub fn build_iid(base: &[FiniteMap], replication: usize) -> Result<IidReplicationClass> {
    let domain = check_maps("base", base)?;
    if replication == 0 {
        return Err(Error::param("replication factor must be positive"));
    }
    Ok(IidReplicationClass {
        base: base.iter().map(to_arc).collect(),
        domain,
        replication,
    })
}

impl IidReplicationClass {
    pub fn base_domain(&self) -> usize {
        self.domain
    }

    pub fn replication(&self) -> usize {
        self.replication
    }
}

impl HypothesisClass for IidReplicationClass {
    type Hypothesis = IidHypothesis;

    fn cardinality(&self) -> u64 {
        self.base.len() as u64
    }

    fn hypothesis(&self, id: u64) -> IidHypothesis {
        IidHypothesis {
            id,
            f: self.base[id as usize].clone(),
            replication: self.replication,
        }
    }

    fn meta(&self) -> ClassMeta {
        ClassMeta::new("iid_replication")
            .with("size", self.base.len())
            .with("domain", self.domain)
            .with("T", self.replication)
    }
}

/// All `|Y|^k` maps from a `k`-point domain into `{0, ..., |Y|-1}`, in
/// lexicographic order.
pub fn all_maps(domain: usize, range: u32) -> Vec<FiniteMap> {
    let total = (range as usize).pow(domain as u32);
    (0..total)
        .map(|mut idx| {
            let mut m = vec![0u32; domain];
            for slot in m.iter_mut().rev() {
                *slot = (idx % range as usize) as u32;
                idx /= range as usize;
            }
            m
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InputSeq;

    #[test]
    fn product_class_structure() {
        let cls = build_product(
            &[vec![0, 0, 1], vec![1, 1, 1]],
            &[vec![0, 1, 0], vec![1, 1, 1], vec![0, 0, 0]],
        )
        .unwrap();
        assert_eq!(cls.cardinality(), 6);
        let h = cls.hypothesis(cls.id_of(1, 2));
        let out = h.eval(&[Symbol(1)]);
        assert_eq!(out, CotOutput::new(Token(0), vec![Token(1)]));
        assert!(build_product(&[], &[vec![0]]).is_err());
        assert!(build_product(&[vec![0, 1]], &[vec![0]]).is_err());
    }

    #[test]
    fn fully_informative_cot_is_identity() {
        let cls = build_fully_informative(&all_maps(2, 2)).unwrap();
        assert_eq!(cls.cardinality(), 4);
        for h in cls.hypotheses() {
            assert_eq!(h.eval(&[Symbol(0)]).z, vec![Token(h.id() as u32)]);
        }
        assert!(build_fully_informative(&[]).is_err());
    }

    #[test]
    fn iid_class_replicates() {
        let cls = build_iid(&[vec![0, 0], vec![0, 1]], 3).unwrap();
        let h = cls.hypothesis(1);
        let x = InputSeq::parse_digits("101").unwrap();
        assert_eq!(
            h.eval(x.as_slice()),
            CotOutput::new(Token(1), vec![Token(1), Token(0), Token(1)])
        );
        assert!(h.check_input(&[Symbol(0)]).is_err());
        assert!(h.check_input(&[Symbol(0), Symbol(2), Symbol(0)]).is_err());
        assert!(build_iid(&[vec![0]], 0).is_err());
    }

    #[test]
    fn all_maps_enumeration() {
        assert_eq!(all_maps(2, 2), vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(all_maps(3, 3).len(), 27);
    }
}
