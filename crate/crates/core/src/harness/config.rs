//! JSON experiment configuration and its resolution into a class, target and
//! input distribution.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::experiment::{geometric_grid, LabelCode, LearningSpec};
use super::seed::child_seed;
use crate::bounds::SymmetricChannel;
use crate::cotinfo::ExactBudget;
use crate::dfa::{enumerate_dfa_class, reference_spec, reference_target_with, DetailLevel, DfaClass, DfaSpec};
use crate::error::{Error, Result};
use crate::linthresh::{encode_weights, enumerate_linthresh_class, LinThreshClass, LinThreshSpec};
use crate::model::{FiniteDistribution, HypothesisClass, InputSeq, StateId};
use crate::rules::{Prior, Rule};
use crate::synthetic::{
    build_fully_informative, build_iid, build_product, FiniteMap, FullyInformativeClass, IidReplicationClass,
    ProductClass,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassConfig {
    Dfa {
        states: usize,
        alphabet: usize,
        #[serde(default)]
        init: u16,
        accept: Vec<u16>,
        #[serde(default = "full_detail")]
        detail: DetailLevel,
    },
    Linthresh {
        d: usize,
        #[serde(rename = "T")]
        t: usize,
    },
    Product {
        cot_maps: Vec<FiniteMap>,
        ete_maps: Vec<FiniteMap>,
    },
    FullyInformative {
        maps: Vec<FiniteMap>,
    },
    Iid {
        maps: Vec<FiniteMap>,
        #[serde(rename = "T")]
        t: usize,
    },
}

fn full_detail() -> DetailLevel {
    DetailLevel::Full
}

impl Default for ClassConfig {
    fn default() -> Self {
        ClassConfig::Dfa {
            states: 4,
            alphabet: 2,
            init: 0,
            accept: vec![3],
            detail: DetailLevel::Full,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetConfig {
    /// The 4-state reference automaton (DFA classes with its shape only).
    #[default]
    Reference,
    Id {
        id: u64,
    },
    SeededUniform {
        seed: u64,
    },
    DfaTable {
        table: Vec<u16>,
    },
    Weights {
        weights: Vec<i8>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportEntry {
    /// Digits, e.g. `"0110"`.
    pub x: String,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionConfig {
    /// Uniform over strings of the given length over the class alphabet.
    Uniform {
        length: usize,
    },
    Explicit {
        support: Vec<SupportEntry>,
    },
    /// A JSON array of support entries, relative to the working directory.
    File {
        path: PathBuf,
    },
}

impl Default for DistributionConfig {
    fn default() -> Self {
        DistributionConfig::Uniform { length: 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridConfig {
    List(Vec<u64>),
    Geometric { start: u64, stop: u64, ratio: f64 },
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig::Geometric {
            start: 1,
            stop: 4096,
            ratio: 1.5,
        }
    }
}

impl GridConfig {
    pub fn resolve(&self) -> Result<Vec<u64>> {
        let grid = match self {
            GridConfig::List(v) => v.clone(),
            GridConfig::Geometric { start, stop, ratio } => geometric_grid(*start, *stop, *ratio)?,
        };
        if grid.is_empty() {
            return Err(Error::config("m_grid", "sample-size grid is empty"));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("m_grid", "grid must be strictly increasing"));
        }
        Ok(grid)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    #[default]
    Exact,
    #[serde(alias = "mc")]
    MonteCarlo,
}

/// Sweep axis for `info-sweep` and `transfer`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepConfig {
    Length {
        lengths: Vec<usize>,
    },
    Detail {
        details: Vec<DetailLevel>,
    },
    Transfer {
        train_length: usize,
        test_lengths: Vec<usize>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorruptionConfig {
    pub error_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub class: ClassConfig,
    pub target: TargetConfig,
    pub distribution: DistributionConfig,
    pub rules: Vec<String>,
    pub m_grid: GridConfig,
    pub trials: u64,
    pub seed: u64,
    pub mode: ModeKind,
    /// Sample count in Monte Carlo mode.
    pub mc_samples: usize,
    pub output_dir: PathBuf,
    /// Target errors for the sample-complexity table.
    pub epsilons: Vec<f64>,
    pub sweep: Option<SweepConfig>,
    pub corruption: Option<CorruptionConfig>,
    /// Worker threads; `None` uses every core.
    pub workers: Option<usize>,
    pub budget: ExactBudget,
    pub delta: f64,
    /// Channel used by the Fano bound in `bounds`.
    pub channel: Option<SymmetricChannel>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            class: ClassConfig::default(),
            target: TargetConfig::default(),
            distribution: DistributionConfig::default(),
            rules: vec!["EtECons".into(), "CoTCons".into()],
            m_grid: GridConfig::default(),
            trials: 500,
            seed: 0,
            mode: ModeKind::Exact,
            mc_samples: 100_000,
            output_dir: PathBuf::from("out"),
            epsilons: vec![0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001, 0.0],
            sweep: None,
            corruption: None,
            workers: None,
            budget: ExactBudget::default(),
            delta: 0.05,
            channel: None,
        }
    }
}

/// Parses a config, reporting the line and column of JSON errors.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_str(text)
        .map_err(|e| Error::config(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
    parse_config(&text)
}

/// A class of any supported kind.
pub enum AnyClass {
    Dfa(DfaClass),
    Linthresh(LinThreshClass),
    Product(ProductClass),
    FullyInformative(FullyInformativeClass),
    Iid(IidReplicationClass),
}

/// Runs `$body` with `$c` bound to the concrete class inside an [`AnyClass`].
#[macro_export]
macro_rules! with_class {
    ($any:expr, $c:ident => $body:expr) => {
        match $any {
            $crate::harness::config::AnyClass::Dfa($c) => $body,
            $crate::harness::config::AnyClass::Linthresh($c) => $body,
            $crate::harness::config::AnyClass::Product($c) => $body,
            $crate::harness::config::AnyClass::FullyInformative($c) => $body,
            $crate::harness::config::AnyClass::Iid($c) => $body,
        }
    };
}

impl AnyClass {
    pub fn cardinality(&self) -> u64 {
        with_class!(self, c => c.cardinality())
    }

    /// Input alphabet size of the class domain.
    pub fn alphabet_size(&self) -> usize {
        match self {
            AnyClass::Dfa(c) => c.spec().alphabet_size,
            AnyClass::Linthresh(_) => 2,
            AnyClass::Product(c) => c.domain_size(),
            AnyClass::FullyInformative(c) => c.domain_size(),
            AnyClass::Iid(c) => c.base_domain(),
        }
    }
}

/// Everything an experiment needs, resolved from a config.
pub struct Resolved {
    pub class: AnyClass,
    pub target_id: u64,
    pub distribution: FiniteDistribution,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.rules.is_empty() {
            return Err(Error::config("rules", "at least one rule is required"));
        }
        for r in &self.rules {
            parse_rule(r, 1)?;
        }
        self.m_grid.resolve()?;
        if self.epsilons.is_empty() {
            return Err(Error::config("epsilons", "at least one target error is required"));
        }
        if self.mode == ModeKind::MonteCarlo && self.mc_samples == 0 {
            return Err(Error::config("mc_samples", "must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::config("delta", "must lie in (0, 1]"));
        }
        if self.workers == Some(0) {
            return Err(Error::config("workers", "must be at least 1"));
        }
        if let Some(c) = &self.corruption {
            if !(0.0..=1.0).contains(&c.error_rate) {
                return Err(Error::config("corruption.error_rate", "must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    /// The class with an optional detail override (DFA only).
    pub fn build_class(&self, detail: Option<DetailLevel>, input_len: usize) -> Result<AnyClass> {
        Ok(match &self.class {
            ClassConfig::Dfa {
                states,
                alphabet,
                init,
                accept,
                detail: base,
            } => {
                let spec = DfaSpec::new(
                    *states,
                    *alphabet,
                    StateId(*init),
                    accept.iter().map(|&a| StateId(a)).collect(),
                    detail.unwrap_or(*base),
                )
                .map_err(|e| Error::config("class", e.to_string()))?;
                AnyClass::Dfa(enumerate_dfa_class(spec)?)
            }
            ClassConfig::Linthresh { d, t } => {
                let spec = LinThreshSpec::new(*d, *t, input_len).map_err(|e| Error::config("class", e.to_string()))?;
                AnyClass::Linthresh(enumerate_linthresh_class(spec)?)
            }
            ClassConfig::Product { cot_maps, ete_maps } => {
                AnyClass::Product(build_product(cot_maps, ete_maps).map_err(|e| Error::config("class", e.to_string()))?)
            }
            ClassConfig::FullyInformative { maps } => AnyClass::FullyInformative(
                build_fully_informative(maps).map_err(|e| Error::config("class", e.to_string()))?,
            ),
            ClassConfig::Iid { maps, t } => {
                AnyClass::Iid(build_iid(maps, *t).map_err(|e| Error::config("class", e.to_string()))?)
            }
        })
    }

    pub fn resolve_target(&self, class: &AnyClass) -> Result<u64> {
        let card = class.cardinality();
        let id = match (&self.target, class) {
            (TargetConfig::Reference, AnyClass::Dfa(c)) => {
                let r = reference_spec(DetailLevel::Full);
                let s = c.spec();
                if (s.num_states, s.alphabet_size, s.init_state, &s.accept_states)
                    != (r.num_states, r.alphabet_size, r.init_state, &r.accept_states)
                {
                    return Err(Error::config(
                        "target",
                        "the reference automaton needs 4 states, 2 symbols, init 0, accept [3]",
                    ));
                }
                c.id_of(&reference_target_with(s.detail))?
            }
            (TargetConfig::Reference, _) => {
                return Err(Error::config(
                    "target",
                    "the reference target exists only for DFA classes",
                ))
            }
            (TargetConfig::Id { id }, _) => *id,
            (TargetConfig::SeededUniform { seed }, _) => {
                ChaCha8Rng::seed_from_u64(child_seed(*seed, &[0x7A46_6574])).gen_range(0..card)
            }
            (TargetConfig::DfaTable { table }, AnyClass::Dfa(c)) => {
                let h = crate::dfa::DfaHypothesis::new(c.spec().clone(), table.iter().map(|&s| StateId(s)).collect())
                    .map_err(|e| Error::config("target.table", e.to_string()))?;
                c.id_of(&h)?
            }
            (TargetConfig::Weights { weights }, AnyClass::Linthresh(c)) => {
                if weights.len() != c.spec().window || weights.iter().any(|w| !(-1..=1).contains(w)) {
                    return Err(Error::config("target.weights", "need d weights in {-1, 0, 1}"));
                }
                encode_weights(weights)
            }
            _ => return Err(Error::config("target", "target kind does not match the class kind")),
        };
        if id >= card {
            return Err(Error::config(
                "target",
                format!("id {id} out of range for class of size {card}"),
            ));
        }
        Ok(id)
    }

    pub fn build_distribution(&self, alphabet: usize, length_override: Option<usize>) -> Result<FiniteDistribution> {
        let explicit = |entries: &[SupportEntry]| -> Result<FiniteDistribution> {
            let support = entries
                .iter()
                .map(|e| Ok((InputSeq::parse_digits(&e.x)?, e.p)))
                .collect::<Result<Vec<_>>>()
                .map_err(|e: Error| Error::config("distribution.support", e.to_string()))?;
            FiniteDistribution::explicit(support).map_err(|e| Error::config("distribution.support", e.to_string()))
        };
        match (&self.distribution, length_override) {
            (_, Some(n)) => FiniteDistribution::uniform_strings(alphabet, n),
            (DistributionConfig::Uniform { length }, None) => FiniteDistribution::uniform_strings(alphabet, *length),
            (DistributionConfig::Explicit { support }, None) => explicit(support),
            (DistributionConfig::File { path }, None) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::config("distribution.path", format!("{}: {e}", path.display())))?;
                let entries: Vec<SupportEntry> = serde_json::from_str(&text).map_err(|e| {
                    Error::config(
                        format!("{} line {} column {}", path.display(), e.line(), e.column()),
                        e.to_string(),
                    )
                })?;
                explicit(&entries)
            }
        }
    }

    /// Nominal input length, used by classes whose spec records it.
    pub fn input_length(&self) -> usize {
        match &self.distribution {
            DistributionConfig::Uniform { length } => *length,
            _ => 1,
        }
    }

    /// Class, target and distribution, with optional length and detail
    /// overrides for sweeps.
    pub fn resolve(&self, length: Option<usize>, detail: Option<DetailLevel>) -> Result<Resolved> {
        let class = self.build_class(detail, length.unwrap_or_else(|| self.input_length()))?;
        let target_id = self.resolve_target(&class)?;
        let distribution = self.build_distribution(class.alphabet_size(), length)?;
        Ok(Resolved {
            class,
            target_id,
            distribution,
        })
    }

    pub fn learning_spec(&self, class: &AnyClass) -> Result<LearningSpec> {
        let card = class.cardinality();
        let rules = self
            .rules
            .iter()
            .map(|r| parse_rule(r, card))
            .collect::<Result<Vec<_>>>()?;
        let corruption = match &self.corruption {
            None => None,
            Some(c) => {
                let code = label_code(class, self.input_length())?;
                let q = SymmetricChannel::new(c.error_rate, code.size()?)
                    .map_err(|e| Error::config("corruption", e.to_string()))?;
                Some((q, code))
            }
        };
        Ok(LearningSpec {
            rules,
            m_grid: self.m_grid.resolve()?,
            trials: self.trials,
            seed: self.seed,
            corruption,
            budget: self.budget,
            path: Default::default(),
        })
    }
}

/// Parses `EtECons`, `CoTCons`, `EtEERM`, `CoTERM` or `MDL` (uniform prior).
pub fn parse_rule(name: &str, cardinality: u64) -> Result<Rule> {
    Ok(match name {
        "EtECons" => Rule::EtECons,
        "CoTCons" => Rule::CoTCons,
        "EtEERM" => Rule::EtEErm,
        "CoTERM" => Rule::CoTErm,
        "MDL" => Rule::Mdl(Prior::uniform(cardinality)),
        other => {
            return Err(Error::config(
                "rules",
                format!("unknown rule \"{other}\" (expected EtECons, CoTCons, EtEERM, CoTERM, MDL)"),
            ))
        }
    })
}

/// Channel outcome space for the labels a class produces on inputs of
/// length `n`.
pub fn label_code(class: &AnyClass, n: usize) -> Result<LabelCode> {
    let (y_alphabet, z_alphabet, z_len) = match class {
        AnyClass::Dfa(c) => (2, c.spec().num_states as u32, c.spec().detail.cot_len(n)),
        AnyClass::Linthresh(c) => (2, 2, c.spec().steps),
        _ => {
            return Err(Error::config(
                "corruption",
                "label corruption supports DFA and linear-threshold classes",
            ))
        }
    };
    Ok(LabelCode {
        y_alphabet,
        z_alphabet,
        z_len,
    })
}
