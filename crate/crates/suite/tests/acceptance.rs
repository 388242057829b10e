//! Acceptance suite. Every criterion runs, prints one PASS/FAIL line, and
//! the process exits non-zero if any failed. Lines starting with `info`
//! are context only and never affect the outcome.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use cotlearn::bounds::{
    channel_capacity_factor, expected_error_lower, mdl_upper_prior, mixed_upper, realizable_upper,
    tv_distance_identity_check, SymmetricChannel, Variant,
};
use cotlearn::cotinfo::{
    info_curve, pair_stats, transfer_info_curve, write_info_curve_csv, write_pairwise_csv, ExactBudget, InfoCurve,
};
use cotlearn::dfa::{
    connectivity_bound, connectivity_radius, enumerate_dfa_class, reference_target, DetailLevel, DfaHypothesis, DfaSpec,
};
use cotlearn::harness::config::{
    ClassConfig, DistributionConfig, ExperimentConfig, GridConfig, SweepConfig, TargetConfig,
};
use cotlearn::harness::experiment::{
    empirical_sample_complexity, mean_risks, run_learning_experiment, sample_complexity_ratio, zero_error_probability,
    ExecutionPath, ExperimentRecord, LearningSpec,
};
use cotlearn::harness::output::{with_file, write_learning, write_rows, write_sample_complexity, write_zero_error};
use cotlearn::harness::sweep::{compute_curve, compute_pair_stats, detail_levels, run_info_sweep, sweep_rows};
use cotlearn::harness::validate::{next_achievable, run_property_suite, SuiteOptions};
use cotlearn::harness::with_workers;
use cotlearn::model::{FiniteDistribution, HypothesisClass, StateId, Symbol};
use cotlearn::rules::{Prior, Rule};
use cotlearn::synthetic::{all_maps, build_fully_informative, build_iid, build_product};
use cotlearn::{with_class, ExtReal};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn info(line: impl AsRef<str>) {
    println!("info  {}", line.as_ref());
}

/// Seeded-uniform target used where a criterion follows the random-target
/// protocol.
const RANDOM_TARGET_SEED: u64 = 7;
/// Seeded-uniform LinThresh target (id 2538, weights fixed by the seed).
const LINTHRESH_TARGET_SEED: u64 = 0;

fn dfa_config(length: usize, target: TargetConfig) -> ExperimentConfig {
    ExperimentConfig {
        target,
        distribution: DistributionConfig::Uniform { length },
        seed: 1,
        ..ExperimentConfig::default()
    }
}

fn learn(cfg: &ExperimentConfig) -> (Vec<ExperimentRecord>, Option<(f64, f64)>) {
    let r = cfg.resolve(None, None).unwrap();
    let spec = cfg.learning_spec(&r.class).unwrap();
    let recs = with_class!(&r.class, c => run_learning_experiment(c, r.target_id, &r.distribution, &spec)).unwrap();
    let rows = empirical_sample_complexity(&recs, &cfg.epsilons);
    let ratio = sample_complexity_ratio(&rows, "EtECons", "CoTCons");
    (recs, ratio)
}

fn fmt_ratio(r: Option<(f64, f64)>) -> String {
    match r {
        Some((e, v)) => format!("{v:.2} at eps {e}"),
        None => "undefined (no common eps reached)".into(),
    }
}

// ---------------------------------------------------------------------------

fn property_suite() -> Outcome {
    let start = Instant::now();
    let checks = run_property_suite(&SuiteOptions::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let failed: Vec<_> = checks.iter().filter(|c| !c.passed).collect();
    for c in &failed {
        info(format!("failed check {}: {}", c.name, c.detail));
    }
    outcome(
        failed.is_empty() && secs < 120.0,
        format!(
            "{} checks, {} failed, {secs:.1}s (limit 120s)",
            checks.len(),
            failed.len()
        ),
    )
}

/// Direct transcription of the definitions: walk the automaton, emit the
/// visited states, and sum the probability of each event.
fn naive_run(table: &[u16], init: u16, accept: u16, x: &[u16]) -> (u32, Vec<u16>) {
    let mut s = init;
    let mut z = Vec::with_capacity(x.len());
    for &a in x {
        s = table[s as usize * 2 + a as usize];
        z.push(s);
    }
    ((s == accept) as u32, z)
}

fn oracle_equivalence() -> Outcome {
    let n = 6;
    let spec = DfaSpec::new(4, 2, StateId(0), vec![StateId(3)], DetailLevel::Full).unwrap();
    let d = FiniteDistribution::uniform_strings(2, n).unwrap();
    let strings: Vec<Vec<u16>> = (0..1u32 << n)
        .map(|i| (0..n).rev().map(|b| ((i >> b) & 1) as u16).collect())
        .collect();
    let p = 1.0 / strings.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut mismatches = 0;
    for _ in 0..100 {
        let t1: Vec<u16> = (0..8).map(|_| rng.gen_range(0..4)).collect();
        let t2: Vec<u16> = (0..8).map(|_| rng.gen_range(0..4)).collect();
        let (mut d_ete, mut agree, mut cot) = (0.0, 0.0, 0.0);
        for x in &strings {
            let (a, b) = (naive_run(&t1, 0, 3, x), naive_run(&t2, 0, 3, x));
            if a.0 != b.0 {
                d_ete += p;
            }
            if a == b {
                agree += p;
            } else {
                cot += p;
            }
        }
        let mk = |t: &[u16]| DfaHypothesis::new(spec.clone(), t.iter().map(|&s| StateId(s)).collect()).unwrap();
        let s = pair_stats(&mk(&t1), &mk(&t2), &d).unwrap();
        let rel = if agree == 0.0 { f64::INFINITY } else { -f64::ln(agree) };
        if s.d_ete != d_ete || s.joint_agreement != agree || s.cot_risk != cot || s.rel_info.to_f64() != rel {
            mismatches += 1;
            info(format!(
                "mismatch {t1:?} vs {t2:?}: lib {s:?}, naive ({d_ete}, {agree}, {cot})"
            ));
        }
    }
    outcome(
        mismatches == 0,
        format!("100 random pairs at n={n}, {mismatches} mismatches"),
    )
}

fn tv_identity() -> Outcome {
    let t = reference_target();
    let d = FiniteDistribution::uniform_strings(2, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let h = t
            .with_transition(
                StateId(rng.gen_range(0..4)),
                Symbol(rng.gen_range(0..2)),
                StateId(rng.gen_range(0..4)),
            )
            .unwrap();
        for m in 1..=3 {
            worst = worst.max(tv_distance_identity_check(&t, &h, &d, m).unwrap().identity_residual);
        }
    }
    outcome(
        worst < 1e-10,
        format!("10 pairs, m in 1..=3, max residual {worst:.3e} (limit 1e-10)"),
    )
}

fn channel() -> Outcome {
    let c = channel_capacity_factor(SymmetricChannel::new(0.01, 1000).unwrap()).to_f64();
    let values: Vec<f64> = (1..=999)
        .map(|k| channel_capacity_factor(SymmetricChannel::new(k as f64 / 1000.0, 1000).unwrap()).to_f64())
        .collect();
    let monotone = values.windows(2).all(|w| w[1] < w[0]);
    outcome(
        (c - 11.39).abs() <= 0.01 && monotone,
        format!(
            "C_Q(0.01, 1000) = {c:.4} (target 11.39 +- 0.01), strictly decreasing over e = 0.001..0.999: {monotone}"
        ),
    )
}

fn synthetic_extremes() -> Outcome {
    let maps = all_maps(4, 2);
    let d1 = FiniteDistribution::uniform_strings(4, 1).unwrap();
    let budget = ExactBudget::default();
    let mut notes = Vec::new();

    let product = build_product(&maps, &maps).unwrap();
    let target = product.hypothesis(product.id_of(5, 3));
    let curve = info_curve(&target, &product, &d1, budget).unwrap();
    let mut worst: f64 = 0.0;
    for b in &curve.breakpoints {
        worst = worst.max((b.info.to_f64() - (-(1.0 - b.epsilon).ln())).abs());
    }
    let grid: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
    for &e in &grid {
        let want = match next_achievable(&curve, e) {
            v if v.is_infinite() => f64::INFINITY,
            v => -(1.0 - v).ln(),
        };
        let got = curve.eval(e).to_f64();
        if !(want.is_infinite() && got.is_infinite()) {
            worst = worst.max((got - want).abs());
        }
    }
    let product_ok = worst <= 1e-12;
    notes.push(format!("product max deviation {worst:.1e}"));

    let fi = build_fully_informative(&maps).unwrap();
    let fi_curve = info_curve(&fi.hypothesis(6), &fi, &d1, budget).unwrap();
    let infinite =
        fi_curve.info_at_zero_plus.is_infinite() && fi_curve.breakpoints.iter().all(|b| b.info.is_infinite());
    let spec = LearningSpec {
        rules: vec![Rule::CoTCons],
        m_grid: vec![1],
        trials: 500,
        seed: 5,
        corruption: None,
        budget,
        path: ExecutionPath::General,
    };
    let recs = run_learning_experiment(&fi, 6, &d1, &spec).unwrap();
    let zero = recs.iter().filter(|r| r.risk == 0.0).count();
    notes.push(format!(
        "fully informative curve infinite: {infinite}, zero risk after 1 sample in {zero}/500"
    ));

    let mut iid_ok = true;
    for t in [2usize, 3, 5] {
        let iid = build_iid(&maps, t).unwrap();
        let d = FiniteDistribution::uniform_strings(4, t).unwrap();
        let c = info_curve(&iid.hypothesis(9), &iid, &d, budget).unwrap();
        let ok = c.breakpoints.iter().all(|b| b.info.to_f64() >= t as f64 * b.epsilon);
        iid_ok &= ok;
        notes.push(format!(
            "iid T={t}: I >= T*eps at {} breakpoints: {ok}",
            c.breakpoints.len()
        ));
    }
    outcome(product_ok && infinite && zero == 500 && iid_ok, notes.join("; "))
}

fn dfa_headline() -> Outcome {
    let start = Instant::now();
    let cfg = dfa_config(10, TargetConfig::Reference);
    let curve = compute_curve(&cfg, &cfg.resolve(None, None).unwrap()).unwrap();
    let ratio = curve.headline_ratio().to_f64();
    let secs = start.elapsed().as_secs_f64();
    let random = dfa_config(
        10,
        TargetConfig::SeededUniform {
            seed: RANDOM_TARGET_SEED,
        },
    );
    let rc = compute_curve(&random, &random.resolve(None, None).unwrap()).unwrap();
    info(format!(
        "seeded uniform target (seed {RANDOM_TARGET_SEED}): eps* = {}, I(0+) = {:.4}, ratio {:.1}",
        rc.epsilon_star.unwrap(),
        rc.info_at_zero_plus.to_f64(),
        rc.headline_ratio().to_f64()
    ));
    outcome(
        (200.0..=2000.0).contains(&ratio) && secs < 600.0,
        format!(
            "reference target, n=10: eps* = {} ({}/1024), I(0+) = {:.4}, ratio {ratio:.2} (band [200, 2000]), {secs:.1}s",
            curve.epsilon_star.unwrap(),
            curve.epsilon_star.unwrap() * 1024.0,
            curve.info_at_zero_plus.to_f64()
        ),
    )
}

fn non_decreasing(v: &[ExtReal]) -> bool {
    v.windows(2).all(|w| w[1] >= w[0])
}

fn dfa_empirical_gain() -> Outcome {
    let mut notes = Vec::new();
    let grid = GridConfig::Geometric {
        start: 1,
        stop: 100_000,
        ratio: 1.5,
    };
    let mut cfg = dfa_config(
        10,
        TargetConfig::SeededUniform {
            seed: RANDOM_TARGET_SEED,
        },
    );
    cfg.m_grid = grid.clone();
    let (_, ratio) = learn(&cfg);
    let gain_ok = ratio.is_some_and(|(_, v)| (100.0..=3000.0).contains(&v));
    notes.push(format!(
        "seeded uniform target, 500 trials: EtECons/CoTCons {} (band [100, 3000])",
        fmt_ratio(ratio)
    ));

    let mut reference = dfa_config(10, TargetConfig::Reference);
    reference.m_grid = grid;
    info(format!(
        "reference target empirical ratio: {}",
        fmt_ratio(learn(&reference).1)
    ));

    let mut shapes_ok = true;
    for (name, target) in [
        ("reference", TargetConfig::Reference),
        (
            "seeded uniform",
            TargetConfig::SeededUniform {
                seed: RANDOM_TARGET_SEED,
            },
        ),
    ] {
        let cfg = dfa_config(10, target);
        let details = run_info_sweep(
            &cfg,
            &SweepConfig::Detail {
                details: detail_levels(10),
            },
        )
        .unwrap();
        let at_zero: Vec<ExtReal> = details.iter().map(|p| p.curve.info_at_zero_plus).collect();
        let detail_ok = non_decreasing(&at_zero);
        info(format!(
            "{name} detail sweep I(0+) for T=0..10: [{}]",
            at_zero
                .iter()
                .map(|v| format!("{:.3}", v.to_f64()))
                .collect::<Vec<_>>()
                .join(", ")
        ));

        let lengths = vec![4, 6, 8, 10];
        let points = run_info_sweep(
            &cfg,
            &SweepConfig::Length {
                lengths: lengths.clone(),
            },
        )
        .unwrap();
        let eps = [0.0, 0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3];
        let mut bad = Vec::new();
        for &e in &eps {
            let r: Vec<ExtReal> = points.iter().map(|p| p.curve.ratio(e)).collect();
            if !non_decreasing(&r) {
                bad.push(format!(
                    "eps {e}: [{}]",
                    r.iter()
                        .map(|v| format!("{:.2}", v.to_f64()))
                        .collect::<Vec<_>>()
                        .join(", ")
                ));
            }
        }
        let length_ok = bad.is_empty();
        for b in &bad {
            info(format!("{name} length sweep not monotone at {b}"));
        }
        info(format!(
            "{name} length sweep ratio at 0+ for n={lengths:?}: [{}]",
            points
                .iter()
                .map(|p| format!("{:.2}", p.curve.headline_ratio().to_f64()))
                .collect::<Vec<_>>()
                .join(", ")
        ));
        shapes_ok &= detail_ok && length_ok;
        notes.push(format!(
            "{name}: detail sweep monotone {detail_ok}, length sweep monotone {length_ok}"
        ));
    }
    outcome(gain_ok && shapes_ok, notes.join("; "))
}

fn linthresh() -> Outcome {
    let mut notes = Vec::new();
    let mut any = false;
    for n in [8, 12, 16] {
        let cfg = ExperimentConfig {
            class: ClassConfig::Linthresh { d: 8, t: 16 },
            target: TargetConfig::SeededUniform {
                seed: LINTHRESH_TARGET_SEED,
            },
            distribution: DistributionConfig::Uniform { length: n },
            m_grid: GridConfig::Geometric {
                start: 1,
                stop: 20_000,
                ratio: 1.5,
            },
            seed: 1,
            ..ExperimentConfig::default()
        };
        let r = cfg.resolve(None, None).unwrap();
        assert_eq!(r.class.cardinality(), 6561);
        let curve = compute_curve(&cfg, &r).unwrap();
        let theory = curve.headline_ratio().to_f64();
        let (_, emp) = learn(&cfg);
        let ok = (3.0..=12.0).contains(&theory) && emp.is_some_and(|(_, v)| (3.0..=12.0).contains(&v));
        any |= ok;
        notes.push(format!(
            "n={n} target {}: eps* = {}, I(0+) = {:.3}, ratio {theory:.2}, empirical {}",
            r.target_id,
            curve.epsilon_star.unwrap(),
            curve.info_at_zero_plus.to_f64(),
            fmt_ratio(emp)
        ));
    }
    outcome(any, format!("band [3, 12] for both; {}", notes.join("; ")))
}

/// Exact expected end-to-end risk of CoTCons (uniform pick from the CoT
/// version space) under `m` uniform draws from `{0,1}^n`, computed from
/// disagreement masks without the library.
fn exact_cot_cons_risk(target: &[u16], n: usize, ms: &[u64]) -> Vec<f64> {
    let size = 1usize << n;
    let strings: Vec<Vec<u16>> = (0..size)
        .map(|i| (0..n).rev().map(|b| ((i >> b) & 1) as u16).collect())
        .collect();
    let want: Vec<_> = strings.iter().map(|x| naive_run(target, 0, 3, x)).collect();
    // per CoT-disagreement mask: (member count, summed output risk)
    let mut by_mask: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    let mut table = [0u16; 8];
    for id in 0..65536u32 {
        for (k, t) in table.iter_mut().enumerate() {
            *t = ((id >> (2 * k)) & 3) as u16;
        }
        let (mut mask, mut wrong) = (0usize, 0usize);
        for (i, x) in strings.iter().enumerate() {
            let got = naive_run(&table, 0, 3, x);
            if got != want[i] {
                mask |= 1 << i;
            }
            wrong += (got.0 != want[i].0) as usize;
        }
        let e = by_mask.entry(mask).or_default();
        e.0 += 1.0;
        e.1 += wrong as f64 / size as f64;
    }
    // subset sums: members whose disagreements avoid the observed set A
    let full = 1usize << size;
    let mut count = vec![0.0; full];
    let mut risk = vec![0.0; full];
    for (&mask, &(c, r)) in &by_mask {
        count[mask] += c;
        risk[mask] += r;
    }
    for bit in 0..size {
        for u in 0..full {
            if u & (1 << bit) != 0 {
                count[u] += count[u ^ (1 << bit)];
                risk[u] += risk[u ^ (1 << bit)];
            }
        }
    }
    // mean version-space risk over observed sets of each size
    let mut by_size = vec![(0.0, 0usize); size + 1];
    for a in 0..full {
        let free = (full - 1) ^ a;
        let k = a.count_ones() as usize;
        by_size[k].0 += risk[free] / count[free];
        by_size[k].1 += 1;
    }
    ms.iter()
        .map(|&m| {
            // distribution of the number of distinct strings seen
            let mut p = vec![0.0; size + 1];
            p[0] = 1.0;
            for _ in 0..m {
                let mut q = vec![0.0; size + 1];
                for k in 0..=size {
                    q[k] += p[k] * k as f64 / size as f64;
                    if k < size {
                        q[k + 1] += p[k] * (size - k) as f64 / size as f64;
                    }
                }
                p = q;
            }
            (0..=size).map(|k| p[k] * by_size[k].0 / by_size[k].1 as f64).sum()
        })
        .collect()
}

fn lower_bound_dominance() -> Outcome {
    let cfg = ExperimentConfig {
        rules: vec!["CoTCons".into()],
        m_grid: GridConfig::Geometric {
            start: 1,
            stop: 200,
            ratio: 1.3,
        },
        ..dfa_config(4, TargetConfig::Reference)
    };
    let r = cfg.resolve(None, None).unwrap();
    let curve = compute_curve(&cfg, &r).unwrap();
    let (recs, _) = learn(&cfg);
    let means = mean_risks(&recs);
    let ms: Vec<u64> = means.iter().map(|m| m.1).collect();
    let exact = exact_cot_cons_risk(&[1, 3, 0, 3, 3, 1, 3, 2], 4, &ms);
    let trials = cfg.trials as f64;
    let resolution = curve.epsilon_star.unwrap() / trials;
    let (mut exact_ok, mut emp_ok, mut agree_ok, mut unresolved) = (true, true, true, 0);
    for ((_, m, mean), &e) in means.iter().zip(&exact) {
        let lb = expected_error_lower(&curve, *m);
        exact_ok &= e >= lb;
        if *mean > 0.0 {
            emp_ok &= *mean >= lb;
        } else {
            // every trial returned a zero-risk hypothesis; the smallest
            // non-zero mean is eps*/trials, so the bound must sit below it
            unresolved += 1;
            emp_ok &= lb < resolution;
        }
        let ok = (mean - e).abs() <= 4.0 * (e / trials).sqrt() + 1e-12;
        agree_ok &= ok;
        let emp_point = if *mean > 0.0 { *mean >= lb } else { lb < resolution };
        if e.is_nan() || e < lb || !ok || !emp_point {
            info(format!("m={m}: empirical {mean}, exact {e}, bound {lb}"));
        }
    }
    outcome(
        exact_ok && emp_ok && agree_ok,
        format!(
            "reference target n=4, {} grid points: exact expectation >= bound {exact_ok}, empirical mean >= bound {emp_ok} ({unresolved} points with all trials at zero risk, bound below {resolution:.2e}), empirical within 4 sigma of exact {agree_ok}",
            ms.len()
        ),
    )
}

fn transfer() -> Outcome {
    let t = reference_target();
    let cls = enumerate_dfa_class(t.spec().clone()).unwrap();
    let ell = connectivity_radius(&t);
    let bound = connectivity_bound(&t, ell).unwrap();
    let budget = ExactBudget::default();
    let train = FiniteDistribution::uniform_strings(2, 5).unwrap();
    let mut notes = vec![format!("l = {ell}, bound {bound}")];
    let mut ok = true;
    for n in [5, 8, 12] {
        let test = FiniteDistribution::uniform_strings(2, n).unwrap();
        let c = transfer_info_curve(&t, &cls, &train, &test, budget).unwrap();
        let min = c
            .breakpoints
            .iter()
            .map(|b| b.info.to_f64())
            .fold(f64::INFINITY, f64::min);
        ok &= min >= bound;
        notes.push(format!("test length {n}: min {min:.4}"));
    }
    for n in [5, 8] {
        let d = FiniteDistribution::uniform_strings(2, n).unwrap();
        let same = transfer_info_curve(&t, &cls, &d, &d, budget).unwrap() == info_curve(&t, &cls, &d, budget).unwrap();
        ok &= same;
        notes.push(format!("train = test at {n} identical: {same}"));
    }
    outcome(ok, notes.join("; "))
}

fn mixed_and_mdl() -> Outcome {
    let t = reference_target();
    let cls = enumerate_dfa_class(t.spec().clone()).unwrap();
    let id = cls.id_of(&t).unwrap();
    let d = FiniteDistribution::uniform_strings(2, 6).unwrap();
    let curve = info_curve(&t, &cls, &d, ExactBudget::default()).unwrap();
    let mut infos: Vec<(f64, ExtReal)> = curve.breakpoints.iter().map(|b| (b.epsilon, b.info)).collect();
    infos.extend([
        (0.5, ExtReal::Infinite),
        (0.1, ExtReal::Finite(0.0)),
        (0.2, ExtReal::Finite(1e-9)),
    ]);
    let mut checked = 0;
    let mut mismatches = 0;
    for card in [49u64, 729, 6561, 65536] {
        let log_card = (card as f64).ln();
        let prior = Prior::uniform(card);
        let target = if card == 65536 { id } else { card / 2 };
        for &(eps, i) in &infos {
            for delta in [0.01, 0.05, 0.5, 1.0] {
                let base = realizable_upper(log_card, i, delta, Variant::Finite).unwrap().value;
                let mixed = mixed_upper(log_card, 0.0, i, eps, delta).unwrap().value;
                let mdl = mdl_upper_prior(&prior, target, i, delta).unwrap().value;
                checked += 1;
                if mixed.to_bits() != base.to_bits() || mdl.to_bits() != base.to_bits() {
                    mismatches += 1;
                    info(format!(
                        "|H|={card} eps={eps} delta={delta}: {base} vs mixed {mixed}, mdl {mdl}"
                    ));
                }
            }
        }
    }
    outcome(
        mismatches == 0,
        format!("{checked} (|H|, I, delta) cases, {mismatches} not bit-identical"),
    )
}

fn pipeline(dir: &Path) {
    let cfg = ExperimentConfig {
        trials: 100,
        seed: 3,
        ..dfa_config(10, TargetConfig::Reference)
    };
    let r = cfg.resolve(None, None).unwrap();
    let stats = compute_pair_stats(&cfg, &r).unwrap();
    with_file(dir, "pairwise.csv", |w| write_pairwise_csv(&stats, w)).unwrap();
    let curve = InfoCurve::from_pair_stats(&stats);
    with_file(dir, "info_curve.csv", |w| write_info_curve_csv(&curve, w)).unwrap();
    let (recs, _) = learn(&cfg);
    write_learning(dir, &recs).unwrap();
    write_zero_error(dir, &zero_error_probability(&recs)).unwrap();
    write_sample_complexity(dir, &empirical_sample_complexity(&recs, &cfg.epsilons)).unwrap();
    let points = run_info_sweep(&cfg, &SweepConfig::Length { lengths: vec![4, 6, 8] }).unwrap();
    let (rows, summary) = sweep_rows(&points);
    write_rows(dir, "info_sweep.csv", &rows).unwrap();
    write_rows(dir, "info_sweep_summary.csv", &summary).unwrap();
}

fn determinism() -> Outcome {
    let a = tempdir();
    let b = tempdir();
    with_workers(Some(1), || pipeline(a.path())).unwrap();
    with_workers(Some(8), || pipeline(b.path())).unwrap();
    let mut names: Vec<String> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    let mut differing = Vec::new();
    for name in &names {
        if std::fs::read(a.path().join(name)).unwrap() != std::fs::read(b.path().join(name)).unwrap() {
            differing.push(name.clone());
        }
    }
    let count_b = std::fs::read_dir(b.path()).unwrap().count();
    outcome(
        differing.is_empty() && count_b == names.len() && names.len() == 7,
        format!(
            "{} CSVs compared (1 vs 8 workers), differing: {differing:?}",
            names.len()
        ),
    )
}

fn tempdir() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("property suite", property_suite),
        ("oracle equivalence", oracle_equivalence),
        ("TV identity", tv_identity),
        ("channel capacity factor", channel),
        ("synthetic extremes", synthetic_extremes),
        ("DFA headline ratio", dfa_headline),
        ("DFA empirical gain and sweeps", dfa_empirical_gain),
        ("LinThresh ratios", linthresh),
        ("lower-bound dominance", lower_bound_dominance),
        ("transfer", transfer),
        ("mixed and MDL bounds", mixed_and_mdl),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    let mut ran = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!(
            "{tag}  {name} [{:.1}s]: {}",
            start.elapsed().as_secs_f64(),
            result.detail
        );
        if !result.pass {
            failed.push(name);
        }
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed.len());
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
