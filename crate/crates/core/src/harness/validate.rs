//! The invariant suite run by `cotlearn validate`: curve properties on
//! small DFA, LinThresh and synthetic classes, checked exhaustively.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::experiment::{run_learning_experiment, ExecutionPath, LearningSpec};
use super::seed::child_seed;
use crate::cotinfo::{class_pair_stats, gamma_from_stats, info_curve, ExactBudget, InfoCurve, PairStats};
use crate::dfa::{connectivity_bound, connectivity_radius, enumerate_dfa_class, DetailLevel, DfaHypothesis, DfaSpec};
use crate::error::Result;
use crate::linthresh::{enumerate_linthresh_class, LinThreshSpec};
use crate::model::{
    cot_risk, e2e_risk, CotDataset, CotHypothesis, ExtReal, FiniteDistribution, HypothesisClass, InputSeq, StateId,
    SubClass, Symbol,
};
use crate::rules::{consistency_set, Mode, Rule};
use crate::synthetic::{all_maps, build_fully_informative, build_iid, build_product};

/// Absolute slack for comparisons between independently rounded sums.
pub const SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, violations: usize, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed: violations == 0,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Random subclasses per fixture for the anti-monotonicity check.
    pub subclasses: usize,
    /// Points of the dense `ε` grid on `[0, 1]`.
    pub grid_points: usize,
    pub budget: ExactBudget,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            seed: 0,
            subclasses: 50,
            grid_points: 1000,
            budget: ExactBudget::default(),
        }
    }
}

/// `ε` values where a step function can change: a dense grid, every
/// breakpoint, and points just either side of each breakpoint.
pub fn probe_grid(curves: &[&InfoCurve], points: usize) -> Vec<f64> {
    let mut eps: Vec<f64> = (0..=points).map(|i| i as f64 / points as f64).collect();
    for c in curves {
        for b in &c.breakpoints {
            eps.extend([b.epsilon, b.epsilon - 1e-9, b.epsilon + 1e-9]);
        }
    }
    eps.retain(|e| (0.0..=1.0).contains(e));
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    eps
}

fn neg_log1m(p: f64) -> ExtReal {
    ExtReal::neg_log(1.0 - p)
}

fn close(a: ExtReal, b: ExtReal, tol: f64) -> bool {
    match (a.finite(), b.finite()) {
        (Some(x), Some(y)) => (x - y).abs() <= tol * x.abs().max(1.0),
        (None, None) => true,
        _ => false,
    }
}

/// Curve properties that hold for every class: breakpoint lower bound,
/// monotonicity, the pairwise bound, and the `γ` identity and bracket.
pub fn curve_checks(name: &str, stats: &[PairStats], curve: &InfoCurve, grid_points: usize) -> Vec<Check> {
    let mut out = Vec::new();

    let bad = curve
        .breakpoints
        .iter()
        .filter(|b| {
            let strict = neg_log1m(b.argmin_d_ete).to_f64() - SLACK;
            b.info.to_f64() < b.epsilon || b.info.to_f64() < strict
        })
        .count();
    out.push(Check::new(
        format!("{name}: I(eps) >= eps at every breakpoint"),
        bad,
        format!("{} breakpoints, {bad} violations", curve.breakpoints.len()),
    ));

    let grid = probe_grid(&[curve], grid_points);
    let vals: Vec<f64> = grid.iter().map(|&e| curve.eval(e).to_f64()).collect();
    let bad = vals.windows(2).filter(|w| w[1] < w[0]).count();
    out.push(Check::new(
        format!("{name}: curve non-decreasing in eps"),
        bad,
        format!("{} probe points, {bad} decreases", grid.len()),
    ));

    let bad = stats
        .iter()
        .filter(|s| {
            let lower = neg_log1m(s.d_ete);
            s.rel_info.to_f64() < lower.to_f64() - SLACK || lower.to_f64() < s.d_ete
        })
        .count();
    out.push(Check::new(
        format!("{name}: rel_info >= -log(1 - d_ete) >= d_ete"),
        bad,
        format!("{} pairs, {bad} violations", stats.len()),
    ));

    let mut identity_bad = 0;
    let mut bracket_bad = 0;
    let mut worst = 0.0f64;
    for &e in &grid {
        let info = curve.eval(e);
        let g = gamma_from_stats(stats, e);
        let from_gamma = neg_log1m(g.value);
        if !close(info, from_gamma, 1e-12) {
            identity_bad += 1;
        }
        if let (Some(a), Some(b)) = (info.finite(), from_gamma.finite()) {
            worst = worst.max((a - b).abs());
        }
        let lo = match info.finite() {
            Some(i) => (i / (1.0 + i)).max(e),
            None => 1.0,
        };
        let hi = info.to_f64().min(1.0);
        if g.value < lo - SLACK || g.value > hi + SLACK {
            bracket_bad += 1;
        }
    }
    out.push(Check::new(
        format!("{name}: I(eps) = -log(1 - gamma(eps))"),
        identity_bad,
        format!("{} probe points, max abs gap {worst:.3e}", grid.len()),
    ));
    out.push(Check::new(
        format!("{name}: max(I/(1+I), eps) <= gamma <= min(I, 1)"),
        bracket_bad,
        format!("{} probe points, {bracket_bad} violations", grid.len()),
    ));
    out
}

/// Curves of random subclasses containing the target never fall below the
/// curve of the full class.
pub fn subclass_check<C: HypothesisClass>(
    name: &str,
    cls: &C,
    hstar_id: u64,
    d: &FiniteDistribution,
    full: &InfoCurve,
    opts: &SuiteOptions,
) -> Result<Check> {
    let hstar = cls.hypothesis(hstar_id);
    let card = cls.cardinality() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(child_seed(opts.seed, &[0x5342, hstar_id]));
    let mut bad = 0;
    for _ in 0..opts.subclasses {
        let size = rng.gen_range(1..=card);
        let mut ids: Vec<u64> = sample(&mut rng, card, size).into_iter().map(|i| i as u64).collect();
        if !ids.contains(&hstar_id) {
            ids[0] = hstar_id;
        }
        ids.sort_unstable();
        let sub = SubClass::new(cls, ids)?;
        let curve = info_curve(&hstar, &sub, d, opts.budget)?;
        bad += probe_grid(&[full, &curve], opts.grid_points)
            .into_iter()
            .filter(|&e| curve.eval(e).to_f64() < full.eval(e).to_f64())
            .count();
    }
    Ok(Check::new(
        format!("{name}: subclass curves dominate the class curve"),
        bad,
        format!("{} random subclasses, {bad} violations", opts.subclasses),
    ))
}

fn class_checks<C: HypothesisClass>(
    name: &str,
    cls: &C,
    hstar_id: u64,
    d: &FiniteDistribution,
    opts: &SuiteOptions,
) -> Result<(Vec<PairStats>, InfoCurve, Vec<Check>)> {
    let stats = class_pair_stats(&cls.hypothesis(hstar_id), cls, d, opts.budget)?;
    let curve = InfoCurve::from_pair_stats(&stats);
    let mut checks = curve_checks(name, &stats, &curve, opts.grid_points);
    checks.push(subclass_check(name, cls, hstar_id, d, &curve, opts)?);
    Ok((stats, curve, checks))
}

/// `0 <= e2e <= cot <= 1` and symmetry on random pairs.
fn risk_order_check<C: HypothesisClass>(
    name: &str,
    cls: &C,
    d: &FiniteDistribution,
    pairs: usize,
    seed: u64,
) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for _ in 0..pairs {
        let a = cls.hypothesis(rng.gen_range(0..cls.cardinality()));
        let b = cls.hypothesis(rng.gen_range(0..cls.cardinality()));
        let (e, c) = (e2e_risk(&a, &b, d)?, cot_risk(&a, &b, d)?);
        let ordered = 0.0 <= e && e <= c && c <= 1.0;
        let symmetric = e == e2e_risk(&b, &a, d)? && c == cot_risk(&b, &a, d)?;
        if !(ordered && symmetric) {
            bad += 1;
        }
    }
    Ok(Check::new(
        format!("{name}: 0 <= e2e_risk <= cot_risk <= 1, symmetric"),
        bad,
        format!("{pairs} random pairs, {bad} violations"),
    ))
}

/// Adding an example never enlarges a consistency set.
fn monotone_data_check<C: HypothesisClass>(
    name: &str,
    cls: &C,
    hstar_id: u64,
    d: &FiniteDistribution,
    trials: usize,
    seed: u64,
) -> Result<Check> {
    let hstar = cls.hypothesis(hstar_id);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    let mut buf = Vec::new();
    for _ in 0..trials {
        let m = rng.gen_range(0..6);
        let mut xs = Vec::with_capacity(m + 1);
        for _ in 0..=m {
            d.sample_into(&mut rng, &mut buf);
            xs.push(InputSeq(buf.clone()));
        }
        for mode in [Mode::E2e, Mode::Cot] {
            let with_cot = mode == Mode::Cot;
            let small = consistency_set(cls, &CotDataset::label(&hstar, &xs[..m], with_cot)?, mode)?;
            let large = consistency_set(cls, &CotDataset::label(&hstar, &xs, with_cot)?, mode)?;
            if !large.iter().all(|id| small.binary_search(id).is_ok()) || !large.contains(&hstar_id) {
                bad += 1;
            }
        }
    }
    Ok(Check::new(
        format!("{name}: consistency sets shrink with data and keep the target"),
        bad,
        format!("{trials} random datasets, {bad} violations"),
    ))
}

/// The connected 3-state target over `{0, 1}` used by the suite: init 0,
/// accept {2}, every state reachable within 2 steps.
pub fn three_state_target() -> DfaHypothesis {
    let spec = DfaSpec::new(3, 2, StateId(0), vec![StateId(2)], DetailLevel::Full).expect("valid spec");
    DfaHypothesis::new(spec, [1, 2, 2, 0, 0, 1].map(StateId).to_vec()).expect("valid table")
}

fn dfa_fixtures(opts: &SuiteOptions, out: &mut Vec<Check>) -> Result<()> {
    // 3 states over {0, 1}: 729 members, with the connectivity bound
    let hstar = three_state_target();
    let cls = enumerate_dfa_class(hstar.spec().clone())?;
    let hid = cls.id_of(&hstar)?;
    for n in [4, 6] {
        let name = format!("dfa 3x2 n={n}");
        let d = FiniteDistribution::uniform_strings(2, n)?;
        let (stats, _, checks) = class_checks(&name, &cls, hid, &d, opts)?;
        out.extend(checks);
        let ell = connectivity_radius(&hstar);
        let bound = connectivity_bound(&hstar, ell)?;
        let min_other = stats
            .iter()
            .filter(|s| s.hypothesis_id != hid)
            .map(|s| s.rel_info.to_f64())
            .fold(f64::INFINITY, f64::min);
        out.push(Check::new(
            format!("{name}: min rel_info over h != h* >= |S|^-(l+1)"),
            usize::from(min_other < bound),
            format!("l={ell}, bound {bound}, min {min_other}"),
        ));
        out.push(risk_order_check(
            &name,
            &cls,
            &d,
            200,
            child_seed(opts.seed, &[0x524f, n as u64]),
        )?);
        out.push(monotone_data_check(
            &name,
            &cls,
            hid,
            &d,
            20,
            child_seed(opts.seed, &[0x4d44, n as u64]),
        )?);
    }

    // 3 states over {0, 1, 2}: 19,683 members, random target
    let spec = DfaSpec::new(3, 3, StateId(0), vec![StateId(2)], DetailLevel::Full)?;
    let cls = enumerate_dfa_class(spec)?;
    let hid = ChaCha8Rng::seed_from_u64(child_seed(opts.seed, &[0x3333])).gen_range(0..cls.cardinality());
    let d = FiniteDistribution::uniform_strings(3, 4)?;
    let (_, _, checks) = class_checks("dfa 3x3 n=4", &cls, hid, &d, opts)?;
    out.extend(checks);
    Ok(())
}

fn linthresh_fixtures(opts: &SuiteOptions, out: &mut Vec<Check>) -> Result<()> {
    let spec = LinThreshSpec::new(4, 4, 6)?;
    let cls = enumerate_linthresh_class(spec)?;
    let d = FiniteDistribution::uniform_strings(2, 6)?;
    let hid = ChaCha8Rng::seed_from_u64(child_seed(opts.seed, &[0x4c54])).gen_range(0..cls.cardinality());
    let name = "linthresh d=4 T=4 n=6";
    let (stats, _, checks) = class_checks(name, &cls, hid, &d, opts)?;
    out.extend(checks);

    // y is the last CoT token, so agreement on z alone is joint agreement
    let hstar = cls.hypothesis(hid);
    let mut bad = 0;
    for s in &stats {
        let h = cls.hypothesis(s.hypothesis_id);
        let mut z_agree = 0.0;
        d.for_each_input(|_, x, p| {
            if h.eval(x).z == hstar.eval(x).z {
                z_agree += p;
            }
        })?;
        if (z_agree - s.joint_agreement).abs() > SLACK {
            bad += 1;
        }
    }
    out.push(Check::new(
        format!("{name}: joint agreement equals CoT agreement"),
        bad,
        format!("{} pairs, {bad} violations", stats.len()),
    ));
    Ok(())
}

/// Smallest achievable end-to-end disagreement strictly above `ε`; 1 when
/// there is none.
pub fn next_achievable(curve: &InfoCurve, epsilon: f64) -> f64 {
    curve
        .breakpoints
        .iter()
        .map(|b| b.epsilon)
        .find(|&b| b > epsilon)
        .unwrap_or(1.0)
}

/// Non-uniform weights on a 3-point domain.
const POINT_WEIGHTS: [f64; 3] = [0.5, 0.3, 0.2];

fn point_distribution() -> Result<FiniteDistribution> {
    FiniteDistribution::explicit(
        POINT_WEIGHTS
            .iter()
            .enumerate()
            .map(|(i, &p)| (InputSeq(vec![Symbol(i as u16)]), p))
            .collect(),
    )
}

fn synthetic_fixtures(opts: &SuiteOptions, out: &mut Vec<Check>) -> Result<()> {
    let maps = all_maps(3, 2);
    let d = point_distribution()?;

    let product = build_product(&maps, &maps)?;
    let hid = product.id_of(5, 3);
    let name = "product 8x8";
    let (_, curve, checks) = class_checks(name, &product, hid, &d, opts)?;
    out.extend(checks);
    let bad = probe_grid(&[&curve], opts.grid_points)
        .into_iter()
        .filter(|&e| e < curve.max_epsilon())
        .filter(|&e| !close(curve.eval(e), neg_log1m(next_achievable(&curve, e)), 1e-12))
        .count();
    out.push(Check::new(
        format!("{name}: I(eps) = -log(1 - eps+)"),
        bad,
        format!("{bad} violations below the largest breakpoint"),
    ));

    let fi = build_fully_informative(&maps)?;
    let name = "fully informative 8";
    let (_, curve, checks) = class_checks(name, &fi, 6, &d, opts)?;
    out.extend(checks);
    let bad = curve.breakpoints.iter().filter(|b| b.info.is_finite()).count();
    out.push(Check::new(
        format!("{name}: curve is +inf"),
        bad,
        format!("{} breakpoints", curve.breakpoints.len()),
    ));
    let spec = LearningSpec {
        rules: vec![Rule::CoTCons],
        m_grid: vec![1, 2, 4],
        trials: 100,
        seed: child_seed(opts.seed, &[0x4649]),
        corruption: None,
        budget: opts.budget,
        path: ExecutionPath::Auto,
    };
    let records = run_learning_experiment(&fi, 6, &d, &spec)?;
    let bad = records.iter().filter(|r| r.risk != 0.0).count();
    out.push(Check::new(
        format!("{name}: CoTCons has zero risk from one sample"),
        bad,
        format!("{} trials, {bad} with positive risk", records.len()),
    ));

    for t in [2, 3, 5] {
        let iid = build_iid(&maps, t)?;
        let d = FiniteDistribution::product(&POINT_WEIGHTS, t)?;
        let name = format!("iid T={t}");
        let (_, curve, checks) = class_checks(&name, &iid, 5, &d, opts)?;
        out.extend(checks);
        let bad = curve
            .breakpoints
            .iter()
            .filter(|b| b.info.to_f64() < t as f64 * b.epsilon - SLACK)
            .count();
        out.push(Check::new(
            format!("{name}: I(eps) >= T eps at every breakpoint"),
            bad,
            format!("{} breakpoints, {bad} violations", curve.breakpoints.len()),
        ));
    }
    Ok(())
}

/// Runs every fixture and returns one check per property and fixture.
pub fn run_property_suite(opts: &SuiteOptions) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    dfa_fixtures(opts, &mut out)?;
    linthresh_fixtures(opts, &mut out)?;
    synthetic_fixtures(opts, &mut out)?;
    Ok(out)
}
