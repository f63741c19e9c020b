//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p pacpomdp --test acceptance`. Set
//! `ACCEPTANCE_ONLY=3,5` to run a subset.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pacpomdp::alignment::{align, AlignmentConfig};
use pacpomdp::domains::{make_random, make_random_unchecked, make_tiger, DomainSpec};
use pacpomdp::harness::{median, run_pipeline, PipelineConfig, PlannerChoice};
use pacpomdp::linalg::{column_l1, Tensor3};
use pacpomdp::moments::collect_exploration;
use pacpomdp::pac::{
    model_errors, required_episodes, simulation_gap_bound, ModelStats, PacConfig, Sizes,
};
use pacpomdp::planner::{
    brute_force_optimal, evaluate_policy, evaluate_tree, solve_finite_horizon, solve_reachable,
    AlphaVectorPolicy, EvaluationConfig, PlannerConfig, PolicyTree,
};
use pacpomdp::pomdp::{Belief, ExplorationPolicy, TabularPomdp};
use pacpomdp::spectral::{project_simplex, tensor_power, whiten, SpectralConfig};
use pacpomdp::Error;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// 1 ---------------------------------------------------------------------

fn population_case(name: &str, m: &TabularPomdp) -> Result<(f64, f64), String> {
    let cfg = PipelineConfig {
        population_moments: true,
        ..PipelineConfig::default()
    };
    let out = run_pipeline(m, 0, 0, &cfg).map_err(|e| format!("{name}: {e}"))?;
    let err = out.row.comparison.expect("comparison").max_entry_error;
    let regret = out.row.regret.expect("regret");
    ensure(err <= 1e-6, || format!("{name}: max entry error {err:e}"))?;
    ensure(regret.abs() <= 1e-6, || {
        format!("{name}: regret {regret:e}")
    })?;
    Ok((err, regret))
}

fn criterion_1() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    let mut cases = vec![(
        "tiger".to_string(),
        make_tiger(0.85, 3).map_err(|e| e.to_string())?,
    )];
    for i in 0..20u64 {
        let n = 3 + (i % 3) as usize;
        let a = 2 + ((i / 3) % 2) as usize;
        let m =
            make_random(&DomainSpec::random(n, a, n, 3, 1000 + i)).map_err(|e| e.to_string())?;
        cases.push((format!("random #{i} (|S|=|Z|={n}, |A|={a})"), m));
    }
    for (name, m) in &cases {
        let (e, r) = population_case(name, m)?;
        worst = (worst.0.max(e), worst.1.max(r.abs()));
    }
    Ok(format!(
        "{} models, worst max-entry error {:.1e}, worst |regret| {:.1e}",
        cases.len(),
        worst.0,
        worst.1
    ))
}

// 2 ---------------------------------------------------------------------

fn criterion_2() -> Outcome {
    let m = make_tiger(0.85, 10).map_err(|e| e.to_string())?;
    let cfg = PipelineConfig {
        planner: PlannerChoice::None,
        ..PipelineConfig::default()
    };
    let schedule = [1_000u64, 16_000, 256_000];
    let mut medians = Vec::new();
    for &n in &schedule {
        let mut errs = Vec::new();
        let mut failures = 0;
        for seed in 0..20u64 {
            match run_pipeline(&m, n, seed, &cfg) {
                Ok(out) => errs.push(out.row.comparison.expect("comparison").errors.largest()),
                Err(_) => failures += 1,
            }
        }
        ensure(failures == 0, || {
            format!("N={n}: {failures} of 20 runs failed")
        })?;
        medians.push(median(errs).expect("20 runs"));
    }
    let ratios: Vec<f64> = medians.windows(2).map(|w| w[1] / w[0]).collect();
    let detail = format!(
        "median errors {:.4} / {:.4} / {:.4}, ratios {:.3} / {:.3}",
        medians[0], medians[1], medians[2], ratios[0], ratios[1]
    );
    ensure(ratios.iter().all(|&r| r <= 0.5), || detail.clone())?;
    Ok(detail)
}

// 3 ---------------------------------------------------------------------

fn tiny_spec(
    rng: &mut ChaCha8Rng,
    max_s: usize,
    max_a: usize,
    max_z: usize,
    max_h: usize,
) -> DomainSpec {
    let mut spec = DomainSpec::random(
        rng.random_range(1..=max_s),
        rng.random_range(1..=max_a),
        rng.random_range(1..=max_z),
        rng.random_range(3..=max_h),
        rng.random(),
    );
    spec.observation_accuracy = rng.random_range(0.0..1.0);
    spec.transition_mixing = rng.random_range(0.0..1.0);
    spec
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let spec = tiny_spec(&mut rng, 3, 2, 2, 3);
        let m = make_random_unchecked(&spec).map_err(|e| e.to_string())?;
        let exact =
            solve_finite_horizon(&m, &PlannerConfig::default()).map_err(|e| e.to_string())?;
        let v = exact.value(0, m.initial_belief());
        let bf = brute_force_optimal(&m).map_err(|e| e.to_string())?.value;
        worst = worst.max((v - bf).abs());
        ensure((v - bf).abs() <= 1e-9, || {
            format!("instance {i}: planner {v} vs brute force {bf}")
        })?;
    }
    Ok(format!("100 instances, worst |difference| {worst:.1e}"))
}

// 4 ---------------------------------------------------------------------

/// Moves `col` towards a random distribution by at most `eps` in L1.
fn perturb_column<R: Rng>(col: &DVector<f64>, eps: f64, rng: &mut R) -> DVector<f64> {
    let q = DVector::from_fn(col.len(), |_, _| -rng.random::<f64>().max(1e-300).ln());
    let q = &q / q.sum();
    let lambda = (eps / 2.0).min(1.0);
    col * (1.0 - lambda) + q * lambda
}

fn perturb(m: &TabularPomdp, eps: [f64; 4], rng: &mut ChaCha8Rng) -> TabularPomdp {
    let columns = |mat: &DMatrix<f64>, e: f64, rng: &mut ChaCha8Rng| {
        let mut out = mat.clone();
        for j in 0..mat.ncols() {
            out.set_column(j, &perturb_column(&mat.column(j).into_owned(), e, rng));
        }
        out
    };
    let t: Vec<DMatrix<f64>> = m
        .transitions()
        .iter()
        .map(|t| columns(t, eps[0], rng))
        .collect();
    let o = columns(m.observation(), eps[1], rng);
    let r: Vec<DVector<f64>> = m
        .rewards()
        .iter()
        .map(|r| r.map(|x| (x + rng.random_range(-eps[2]..=eps[2])).clamp(0.0, m.reward_max())))
        .collect();
    let b1 = perturb_column(m.initial_belief(), eps[3], rng);
    TabularPomdp::with_tolerance(t, o, r, b1, m.horizon(), m.reward_max(), 1e-9)
        .expect("perturbed model is valid")
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut tightest = f64::INFINITY;
    for i in 0..1000 {
        let spec = tiny_spec(&mut rng, 3, 3, 3, 4);
        let m = make_random_unchecked(&spec).map_err(|e| e.to_string())?;
        let eps = [(); 4].map(|_| rng.random_range(0.0..0.3));
        let p = perturb(&m, eps, &mut rng);
        let tree = PolicyTree::random(&m, &mut rng).map_err(|e| e.to_string())?;
        let dv = (evaluate_tree(&m, &tree).map_err(|e| e.to_string())?.value
            - evaluate_tree(&p, &tree).map_err(|e| e.to_string())?.value)
            .abs();
        let b = simulation_gap_bound(&model_errors(&m, &p), m.horizon(), m.reward_max());
        ensure(dv <= b + 1e-12, || {
            format!("pair {i}: |dV| = {dv} exceeds bound {b}")
        })?;
        if b > 0.0 {
            tightest = tightest.min(b - dv);
        }
    }
    Ok(format!("1000 pairs, smallest slack {tightest:.2e}"))
}

// 5 ---------------------------------------------------------------------

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..100 {
        let k = rng.random_range(2..=5);
        let z = rng.random_range(k..=6);
        let mut spec = DomainSpec::random(k, 1, z, 3, rng.random());
        spec.observation_accuracy = rng.random_range(0.2..0.9);
        let o = make_random_unchecked(&spec)
            .map_err(|e| e.to_string())?
            .observation()
            .clone();
        let gap = (0..k)
            .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
            .map(|(i, j)| column_l1(&o, i, &o, j))
            .fold(f64::INFINITY, f64::min);
        // shuffled copy: column j of `other` is true column perm[j], moved by < gap/2
        let mut perm: Vec<usize> = (0..k).collect();
        for i in (1..k).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let mut other = DMatrix::zeros(z, k);
        for j in 0..k {
            let col = o.column(perm[j]).into_owned();
            let budget = 0.999 * gap / 2.0 * rng.random::<f64>();
            let q = project_simplex(&DVector::from_fn(z, |_, _| rng.random::<f64>()));
            let dist = (&col - &q).lp_norm(1);
            let lambda = if dist > 0.0 {
                (budget / dist).min(1.0)
            } else {
                0.0
            };
            other.set_column(j, &(col * (1.0 - lambda) + q * lambda));
        }
        let r = align(&[&o, &other], 0, AlignmentConfig::default())
            .map_err(|e| format!("trial {trial}: {e}"))?;
        ensure(r.permutations[1] == perm, || {
            format!(
                "trial {trial}: recovered {:?}, expected {perm:?}",
                r.permutations[1]
            )
        })?;
        let mut dup = o.clone();
        let i = rng.random_range(0..k);
        let j = (i + 1 + rng.random_range(0..k - 1)) % k;
        dup.set_column(j, &o.column(i).into_owned());
        let err = align(&[&dup, &o], 0, AlignmentConfig::default());
        ensure(matches!(err, Err(Error::AmbiguousAlignment { .. })), || {
            format!("trial {trial}: duplicate reference columns were not rejected")
        })?;
    }
    Ok("100 noisy trials matched, 100 duplicate references rejected".into())
}

// 6 ---------------------------------------------------------------------

fn criterion_6() -> Outcome {
    let m = make_tiger(0.85, 3).map_err(|e| e.to_string())?;
    let optimum = brute_force_optimal(&m).map_err(|e| e.to_string())?.value;
    let tolerance = 0.05 * m.horizon() as f64;
    let mut good = 0;
    let mut gaps = Vec::new();
    for seed in 0..20u64 {
        let out = run_pipeline(&m, 500_000, seed, &PipelineConfig::default());
        let gap = match out {
            Ok(o) => {
                let policy = o.policy.expect("planned");
                optimum
                    - evaluate_policy(&m, &o.model, &policy, &EvaluationConfig::default())
                        .map_err(|e| e.to_string())?
                        .value
            }
            Err(_) => f64::INFINITY,
        };
        if gap <= tolerance {
            good += 1;
        }
        gaps.push(gap);
    }
    let worst = gaps.iter().copied().fold(0.0, f64::max);
    let detail = format!(
        "{good}/20 seeds within {tolerance:.2} of optimum {optimum:.4}; worst gap {worst:.2e}"
    );
    ensure(good >= 18, || detail.clone())?;
    Ok(detail)
}

// 7 ---------------------------------------------------------------------

fn run_property<S: Strategy>(
    name: &str,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    // fixed seed so a failure reproduces
    let config = PropConfig {
        cases: 100,
        failure_persistence: None,
        ..PropConfig::default()
    };
    let mut runner =
        TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner
        .run(&strategy, test)
        .map_err(|e| format!("{name}: {e}"))
}

/// Exact planning with the pipeline's fallback for oversized cross-sums.
fn plan(m: &TabularPomdp) -> AlphaVectorPolicy {
    match solve_finite_horizon(m, &PlannerConfig::default()) {
        Err(Error::SizeLimit { .. }) => solve_reachable(m, &PlannerConfig::default()).unwrap(),
        other => other.unwrap(),
    }
}

fn tiny_model(seed: u64) -> TabularPomdp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    make_random_unchecked(&tiny_spec(&mut rng, 3, 3, 3, 4)).expect("generator output is valid")
}

fn criterion_7() -> Outcome {
    let mut names = Vec::new();
    let mut check = |name: &'static str, r: Result<(), String>| {
        names.push(name);
        r
    };

    check(
        "stochasticity",
        run_property(
            "stochasticity",
            (any::<u64>(), 0usize..3, 0usize..3),
            |(seed, a, z)| {
                let m = tiny_model(seed);
                let (a, z) = (a % m.num_actions(), z % m.num_observations());
                for t in m.transitions() {
                    for c in t.column_iter() {
                        prop_assert!((c.sum() - 1.0).abs() <= 1e-12 && c.min() >= 0.0);
                    }
                }
                for c in m.observation().column_iter() {
                    prop_assert!((c.sum() - 1.0).abs() <= 1e-12 && c.min() >= 0.0);
                }
                match m.belief_update(&Belief::new(m.initial_belief().clone()).unwrap(), a, z) {
                    Ok(b) => prop_assert!(
                        (b.as_vector().sum() - 1.0).abs() <= 1e-12 && b.as_vector().min() >= 0.0
                    ),
                    Err(e) => {
                        let impossible = matches!(e, Error::ImpossibleObservation { .. });
                        prop_assert!(impossible);
                    }
                }
                Ok(())
            },
        ),
    )?;

    check(
        "moment marginal consistency",
        run_property("moment marginals", any::<u64>(), |seed| {
            let m = tiny_model(seed);
            let batch =
                collect_exploration(&m, &ExplorationPolicy::uniform(m.num_actions()), 40, seed)
                    .unwrap();
            let acc = batch.accumulate().unwrap();
            for a in 0..m.num_actions() {
                let Ok(vm) = acc.moments(a) else { continue };
                let z = m.num_observations();
                prop_assert!((vm.m123.sum() - 1.0).abs() < 1e-12);
                for i in 0..z {
                    for j in 0..z {
                        let marg: f64 = (0..z).map(|l| vm.m123.get(i, j, l)).sum();
                        prop_assert!((marg - vm.m12[(i, j)]).abs() < 1e-12);
                    }
                    let m1: f64 = (0..z).map(|i2| vm.m12[(i2, i)]).sum();
                    prop_assert!((m1 - vm.m1[i]).abs() < 1e-12);
                }
            }
            Ok(())
        }),
    )?;

    check(
        "merge law",
        run_property(
            "merge law",
            (any::<u64>(), 1u64..30, 1u64..30),
            |(seed, n1, n2)| {
                let m = tiny_model(seed);
                let ex = ExplorationPolicy::uniform(m.num_actions());
                let all = pacpomdp::moments::collect_range(&m, &ex, seed, 0..n1 + n2).unwrap();
                let left = pacpomdp::moments::collect_range(&m, &ex, seed, 0..n1).unwrap();
                let right = pacpomdp::moments::collect_range(&m, &ex, seed, n1..n1 + n2).unwrap();
                prop_assert_eq!(&left.clone().merge(right.clone()).unwrap(), &all);
                let mut merged = left.accumulate().unwrap();
                merged.merge(&right.accumulate().unwrap()).unwrap();
                let direct = all.accumulate().unwrap();
                for a in 0..m.num_actions() {
                    prop_assert_eq!(merged.triple_count(a), direct.triple_count(a));
                    if let (Ok(x), Ok(y)) = (merged.moments(a), direct.moments(a)) {
                        prop_assert_eq!(x.m123, y.m123);
                    }
                }
                Ok(())
            },
        ),
    )?;

    check(
        "whitening residual",
        run_property("whitening", (any::<u64>(), 2usize..5), |(seed, k)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = k + 2;
            let f = DMatrix::from_fn(d, k, |_, _| rng.random::<f64>());
            let w = DVector::from_fn(k, |_, _| 0.1 + rng.random::<f64>());
            let m2 = &f * DMatrix::from_diagonal(&w) * f.transpose();
            let wh = match whiten(&m2, k, 1e-10) {
                Ok(wh) => wh,
                Err(_) => return Ok(()), // nearly collinear draw
            };
            let r = wh.map.transpose() * &m2 * &wh.map - DMatrix::identity(k, k);
            prop_assert!(r.amax() < 1e-8, "residual {}", r.amax());
            Ok(())
        }),
    )?;

    check(
        "tensor eigenpair residuals",
        run_property(
            "tensor eigenpairs",
            (any::<u64>(), 2usize..5),
            |(seed, k)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let g = DMatrix::from_fn(k, k, |_, _| rng.random::<f64>() - 0.5);
                let q = g.qr().q();
                let mut t = Tensor3::zeros(k);
                let lambdas: Vec<f64> = (0..k)
                    .map(|i| 1.0 + i as f64 + rng.random::<f64>() * 0.5)
                    .collect();
                for i in 0..k {
                    t.add_rank_one(lambdas[i], &q.column(i).into_owned());
                }
                let d = tensor_power(&t, k, &SpectralConfig::default(), &mut rng).unwrap();
                for c in &d.diagnostics {
                    prop_assert!(c.eigen_residual < 1e-8, "residual {}", c.eigen_residual);
                }
                let mut found = d.eigenvalues.clone();
                found.sort_by(|a, b| a.total_cmp(b));
                for (x, y) in found.iter().zip(&lambdas) {
                    prop_assert!((x - y).abs() < 1e-8);
                }
                Ok(())
            },
        ),
    )?;

    check(
        "permutation equivariance",
        run_property(
            "permutation equivariance",
            (any::<u64>(), any::<u64>()),
            |(seed, pseed)| {
                let m = tiny_model(seed);
                let k = m.num_states();
                let gap_ok = (0..k).all(|i| {
                    (i + 1..k).all(|j| column_l1(m.observation(), i, m.observation(), j) > 1e-6)
                });
                if !gap_ok {
                    return Ok(());
                }
                let mut rng = ChaCha8Rng::seed_from_u64(pseed);
                let mut perm: Vec<usize> = (0..k).collect();
                for i in (1..k).rev() {
                    perm.swap(i, rng.random_range(0..=i));
                }
                let relabeled = m.relabeled(&perm);
                let r = align(
                    &[relabeled.observation(), m.observation()],
                    0,
                    AlignmentConfig::default(),
                )
                .unwrap();
                prop_assert_eq!(&r.permutations[1], &perm);
                // relabeling the truth changes no value
                let p = plan(&m);
                let q = plan(&relabeled);
                prop_assert!(
                    (p.value(0, m.initial_belief()) - q.value(0, relabeled.initial_belief())).abs()
                        < 1e-12
                );
                Ok(())
            },
        ),
    )?;

    check(
        "value bounds",
        run_property("value bounds", any::<u64>(), |seed| {
            let m = tiny_model(seed);
            let h = m.horizon();
            let p = plan(&m);
            for (t, set) in p.steps.iter().enumerate() {
                prop_assert!(!set.is_empty());
                let top = (h - t) as f64 * m.reward_max();
                for v in set {
                    prop_assert!(v.alpha.min() >= -1e-12 && v.alpha.max() <= top + 1e-12);
                }
            }
            let v = evaluate_policy(&m, &m, &p, &EvaluationConfig::default())
                .unwrap()
                .value;
            prop_assert!(v >= -1e-12 && v <= h as f64 * m.reward_max() + 1e-12);
            prop_assert!((v - p.value(0, m.initial_belief())).abs() < 1e-9);
            Ok(())
        }),
    )?;

    check(
        "required_episodes monotonicity",
        run_property(
            "required_episodes monotonicity",
            (
                prop::array::uniform4(0.05f64..1.0),
                (1usize..6, 1usize..4, 1usize..6, 3usize..8),
                (0.01f64..1.0, 0.001f64..0.5),
                0usize..11,
            ),
            |(stats, (s, a, z, h), (eps, delta), which)| {
                let base = PacConfig {
                    epsilon: eps,
                    delta,
                    stats: ModelStats {
                        sigma_min_o: stats[0],
                        sigma_min_t: stats[1],
                        separation_gap: stats[2],
                        min_occupancy: stats[3],
                    },
                    sizes: Sizes {
                        states: s,
                        actions: a,
                        observations: z,
                        horizon: h,
                        reward_max: 1.0,
                    },
                    constant_overrides: Default::default(),
                };
                let mut up = base.clone();
                // each change should not decrease N
                match which {
                    0 => up.sizes.states += 1,
                    1 => up.sizes.actions += 1,
                    2 => up.sizes.observations += 1,
                    3 => up.sizes.horizon += 1,
                    4 => up.sizes.reward_max *= 1.5,
                    5 => up.stats.sigma_min_o *= 0.5,
                    6 => up.stats.sigma_min_t *= 0.5,
                    7 => up.stats.separation_gap *= 0.5,
                    8 => up.stats.min_occupancy *= 0.5,
                    9 => up.epsilon *= 0.5,
                    _ => up.delta *= 0.5,
                }
                let n0 = required_episodes(&base).unwrap();
                let n1 = required_episodes(&up).unwrap();
                prop_assert!(n1.raw > n0.raw && n1.episodes >= n0.episodes);
                prop_assert!(n0.raw.is_finite() && n0.raw > 0.0);
                Ok(())
            },
        ),
    )?;

    check(
        "pruning soundness",
        run_property("pruning soundness", any::<u64>(), |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = make_random_unchecked(&tiny_spec(&mut rng, 3, 2, 2, 3)).unwrap();
            let pruned = solve_finite_horizon(&m, &PlannerConfig::default()).unwrap();
            let full = solve_finite_horizon(
                &m,
                &PlannerConfig {
                    prune: false,
                    candidate_cap: 1 << 22,
                },
            )
            .unwrap();
            for _ in 0..100 {
                let b = project_simplex(&DVector::from_fn(m.num_states(), |_, _| {
                    rng.random::<f64>()
                }));
                for t in 0..m.horizon() {
                    prop_assert!((pruned.value(t, &b) - full.value(t, &b)).abs() <= 1e-12);
                }
            }
            Ok(())
        }),
    )?;

    Ok(format!(
        "{} invariants x 100 cases: {}",
        names.len(),
        names.join(", ")
    ))
}

type Criterion = (usize, &'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let criteria: [Criterion; 7] = [
        (1, "population exactness", criterion_1),
        (2, "statistical convergence", criterion_2),
        (3, "planner/oracle agreement", criterion_3),
        (4, "simulation-lemma soundness", criterion_4),
        (5, "alignment robustness", criterion_5),
        (6, "end-to-end PAC behavior", criterion_6),
        (7, "invariant suite", criterion_7),
    ];
    let mut failed = 0;
    for (id, name, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id} ({name}): PASS in {secs:.1}s: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id} ({name}): FAIL in {secs:.1}s: {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
