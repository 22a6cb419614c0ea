//! One test per acceptance criterion. Each prints a single PASS/FAIL line,
//! then asserts. A shared lock keeps the timed sections from overlapping.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shift_audit::bounds::{eta_excess_loss, source_posterior_target_risk, theorem2_bound, BoundInput, EtaSource};
use shift_audit::densities::{DiscreteDensity, EstimatorConfig};
use shift_audit::divergence::{
    hinge_support_divergence, ipm_support_divergence_oracle, kernel_support_divergence, mmd_squared,
    mmd_squared_exact, support_divergence_exact, Epsilon, Kernel, MmdVariant,
};
use shift_audit::hypotheses::{
    h_delta_h, lambda_joint, push_forward, risk, HDeltaHConfig, Hypothesis, HypothesisClass, Loss, Orientation,
    Predictor, Representation, RiskMode,
};
use shift_audit::oracle::{oracle_eta_identity, oracle_lemma1, random_instance};
use shift_audit::synthetic::{
    make_cluster_base, make_example1, make_label_shift, make_overlap_pair, random_grid_problem, ClassShift,
    ClusterParams, OverlapParams, ProblemDescriptor, ProblemSpace, RandomGridParams,
};
use shift_audit::trainer::{gradient_check, train, Penalty, TrainConfig};
use shift_audit::weighting::{lemma1_bound, truncated_weights, weighted_risk, WeightConfig};
use shift_audit::{Density, DomainTag, SampleSet, SyntheticProblem};

static TIMED: Mutex<()> = Mutex::new(());

/// Runs `body` under the lock, prints the verdict line and asserts.
fn criterion(id: u32, name: &str, limit: Duration, body: impl FnOnce() -> Result<String, String>) {
    let _guard = TIMED.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let outcome = body();
    let elapsed = start.elapsed();
    let verdict = match &outcome {
        Ok(detail) if elapsed < limit => Ok(detail.clone()),
        Ok(detail) => Err(format!("{detail}; runtime {elapsed:.2?} over {limit:?}")),
        Err(e) => Err(e.clone()),
    };
    match &verdict {
        Ok(detail) => println!("PASS criterion {id} ({name}): {detail} [{elapsed:.2?}]"),
        Err(e) => println!("FAIL criterion {id} ({name}): {e} [{elapsed:.2?}]"),
    }
    if let Err(e) = verdict {
        panic!("criterion {id} failed: {e}");
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn eps(v: f64) -> Epsilon {
    Epsilon::new(v).unwrap()
}

fn disc(p: &[f64]) -> Density {
    DiscreteDensity::new(p.to_vec()).unwrap().into()
}

#[test]
fn c01_divergence_range_and_tightness() {
    criterion(1, "support divergence range and tightness", Duration::from_secs(5), || {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for _ in 0..10_000 {
            let k = rng.random_range(1..=32);
            let i = random_instance(&mut rng, k, 1.0).unwrap();
            let e = 10f64.powf(rng.random_range(-4.0..0.5));
            let d = support_divergence_exact(&i.p.into(), &i.q.into(), eps(e)).unwrap().value;
            lo = lo.min(d);
            hi = hi.max(d);
        }
        ensure(lo >= -1e-12 && hi <= 1.0 + 1e-12, || format!("range [{lo}, {hi}]"))?;
        let one = support_divergence_exact(&disc(&[0.0, 1.0]), &disc(&[1.0, 0.0]), eps(0.1)).unwrap().value;
        ensure(one == 1.0, || format!("p=[0,1], q=[1,0] gave {one}"))?;
        let p = disc(&[0.2, 0.3, 0.5]);
        let zero = support_divergence_exact(&p, &p, eps(0.4)).unwrap().value;
        ensure(zero == 0.0, || format!("p=q gave {zero}"))?;
        Ok(format!("10^4 pairs in [{lo:.3e}, {hi:.6}], extremes exactly 1 and 0"))
    });
}

#[test]
fn c02_weighted_expectation_bound() {
    criterion(2, "weighted-expectation bound soundness", Duration::from_secs(10), || {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..10_000 {
            let k = rng.random_range(1..=32);
            let m = rng.random_range(0.1..5.0);
            let i = random_instance(&mut rng, k, m).unwrap();
            let e = 10f64.powf(rng.random_range(-4.0..0.3));
            let b = lemma1_bound(&i.p, &i.q, &i.loss, m, eps(e)).unwrap();
            worst = worst.max(b.lhs - b.rhs);
            ensure(oracle_lemma1(&i, e).holds(), || "oracle chain broke".into())?;
        }
        ensure(worst <= 1e-12, || format!("lhs exceeded rhs by {worst}"))?;
        let p = DiscreteDensity::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let loss = [0.7, 0.2, 1.0, 0.4];
        for e in [0.4, 0.5, 1.0] {
            let b = lemma1_bound(&p, &p, &loss, 1.0, eps(e)).unwrap();
            ensure((b.lhs - b.rhs).abs() <= 1e-12, || format!("equality case at eps {e}: {b:?}"))?;
        }
        Ok(format!("max lhs - rhs over 10^4 instances {worst:.3e}; equality case exact"))
    });
}

fn random_predictor(rng: &mut ChaCha8Rng, k: usize) -> Predictor {
    match rng.random_range(0..3) {
        0 => Predictor::Threshold {
            axis: rng.random_range(0..k),
            cutoff: rng.random_range(0.0..1.0),
            orientation: if rng.random_bool(0.5) {
                Orientation::Greater
            } else {
                Orientation::Less
            },
        },
        1 => Predictor::Logistic {
            weights: (0..k).map(|_| rng.random_range(-1.0..1.0)).collect(),
            bias: rng.random_range(-0.5..0.5),
        },
        _ => Predictor::Constant {
            value: rng.random_range(0..2),
        },
    }
}

fn with_target_equal_to_source(p: &SyntheticProblem) -> SyntheticProblem {
    let ProblemSpace::Grid { source, posterior, .. } = &p.space else {
        unreachable!("random problems are grids")
    };
    SyntheticProblem::from_grids(
        ProblemDescriptor::Custom { label: "equal".into() },
        source.clone(),
        source.clone(),
        posterior.clone(),
    )
    .unwrap()
}

#[test]
fn c03_support_bound_soundness_and_tightness() {
    criterion(3, "support-based target bound soundness and tightness", Duration::from_secs(60), || {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let loss = Loss::ZeroOne;
        let (mut min_slack, mut max_gap) = (f64::INFINITY, 0.0f64);
        let reprs = [
            Representation::identity(2),
            Representation::select(2, vec![0]).unwrap(),
            Representation::select(2, vec![1]).unwrap(),
        ];
        for seed in 0..100 {
            let p = random_grid_problem(seed, &RandomGridParams::default()).unwrap();
            let same = with_target_equal_to_source(&p);
            for repr in &reprs {
                let f = random_predictor(&mut rng, repr.output_dim());
                let e = 10f64.powf(rng.random_range(-2.0..1.0));
                let h = Hypothesis::new(repr.clone(), f.clone()).unwrap();
                let rt = risk(&h, &p, DomainTag::Target, RiskMode::Exact, &loss).unwrap();
                let b = theorem2_bound(BoundInput::Exact(&p), repr, &f, &loss, eps(e), EtaSource::Oracle(&p)).unwrap();
                ensure(b.total.is_full(), || "oracle eta missing".into())?;
                min_slack = min_slack.min(b.total.value() - rt);
                let rs = risk(&h, &same, DomainTag::Source, RiskMode::Exact, &loss).unwrap();
                let b = theorem2_bound(BoundInput::Exact(&same), repr, &f, &loss, eps(e), EtaSource::Oracle(&same))
                    .unwrap();
                max_gap = max_gap.max((b.total.value() - rs).abs());
            }
        }
        ensure(min_slack >= -1e-9, || format!("bound below target risk by {}", -min_slack))?;
        ensure(max_gap <= 1e-9, || format!("equal domains off source risk by {max_gap}"))?;
        Ok(format!("300 cases, min slack {min_slack:.3e}; equal-domain gap {max_gap:.3e}"))
    });
}

#[test]
fn c04_quadrant_example() {
    criterion(4, "quadrant example reproduction", Duration::from_secs(10), || {
        let p = make_example1();
        let l = Loss::ZeroOne;
        let phi1 = Representation::select(2, vec![0]).unwrap();
        let phi2 = Representation::select(2, vec![1]).unwrap();
        let thr = |o| Predictor::Threshold {
            axis: 0,
            cutoff: 0.0,
            orientation: o,
        };
        let mut detail = Vec::new();
        for (name, repr, f, want) in [
            ("phi1", &phi1, thr(Orientation::Less), 1.0),
            ("phi2", &phi2, thr(Orientation::Greater), 0.0),
        ] {
            let h = Hypothesis::new(repr.clone(), f.clone()).unwrap();
            let rs = risk(&h, &p, DomainTag::Source, RiskMode::Exact, &l).unwrap();
            let rt = risk(&h, &p, DomainTag::Target, RiskMode::Exact, &l).unwrap();
            ensure(rs.abs() < 1e-12, || format!("{name} source risk {rs}"))?;
            ensure((rt - want).abs() < 1e-12, || format!("{name} target risk {rt}"))?;
            let pf = push_forward(&p, repr).unwrap();
            let d = support_divergence_exact(&pf.source, &pf.target, eps(0.1)).unwrap().value;
            let mmd = mmd_squared_exact(&pf.source, &pf.target, &Kernel::gaussian(0.5).unwrap()).unwrap().value;
            ensure(d == 0.0 && mmd.abs() < 1e-12, || format!("{name} Z divergences {d}, {mmd}"))?;
            let b = theorem2_bound(BoundInput::Exact(&p), repr, &f, &l, eps(0.1), EtaSource::Oracle(&p)).unwrap();
            let eta = b.eta_term.value().unwrap();
            ensure((eta - want).abs() < 1e-12, || format!("{name} eta {eta}"))?;
            ensure((b.total.value() - want).abs() < 1e-12, || format!("{name} total {:?}", b.total))?;
            let module = source_posterior_target_risk(&p, repr, &f, &l).unwrap()
                + eta_excess_loss(&p, repr, &f, &l).unwrap().eta;
            let oracle = oracle_eta_identity(&p, repr, &f).unwrap();
            ensure((module - rt).abs() < 1e-9, || format!("{name} module identity {module} vs {rt}"))?;
            ensure((oracle.decomposed_sum - oracle.target_risk).abs() < 1e-9, || format!("{name} oracle identity"))?;
            detail.push(format!("{name}: R_t {rt:.0}, eta {eta:.0}"));
        }
        let lam = lambda_joint(&HypothesisClass::threshold_grid(phi1, -1.0, 1.0), &p, RiskMode::Exact, &l).unwrap();
        ensure(lam >= 1.0 - 1e-9, || format!("best joint risk on phi1 is {lam}"))?;
        Ok(format!("{}; min over thresholds on phi1 of R_s + R_t = {lam:.3}", detail.join(", ")))
    });
}

#[test]
fn c05_overlap_pair() {
    criterion(5, "overlap pair ordering", Duration::from_secs(10), || {
        let params = OverlapParams::default();
        let (a, b) = make_overlap_pair(&params).unwrap();
        let e = eps(params.recorded_epsilon);
        let k = Kernel::gaussian(params.recorded_sigma).unwrap();
        let d = |p: &SyntheticProblem| {
            support_divergence_exact(&p.density(DomainTag::Source), &p.density(DomainTag::Target), e).unwrap().value
        };
        let m = |p: &SyntheticProblem| {
            mmd_squared_exact(&p.density(DomainTag::Source), &p.density(DomainTag::Target), &k).unwrap().value
        };
        let (da, db, ma, mb) = (d(&a), d(&b), m(&a), m(&b));
        ensure(da == 0.0, || format!("d_supp(A) = {da}"))?;
        ensure(db > 0.0 && (db - 1.0 / 3.0).abs() < 1e-12, || format!("d_supp(B) = {db}"))?;
        ensure(ma > mb, || format!("MMD²(A) = {ma} not above MMD²(B) = {mb}"))?;
        Ok(format!("d_supp A {da}, B {db:.6}; MMD² A {ma:.5} > B {mb:.5} at sigma {}", params.recorded_sigma))
    });
}

#[test]
fn c06_kernel_support_limits() {
    criterion(6, "kernel support divergence limits", Duration::from_secs(20), || {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let est = EstimatorConfig::default();
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let dim = rng.random_range(1..=2);
            let (n, m) = (rng.random_range(20..120), rng.random_range(20..120));
            let shift = rng.random_range(-1.0..1.0);
            let mut draw = |cnt: usize, off: f64, tag| {
                let pts: Vec<f64> = (0..cnt * dim).map(|_| rng.random_range(-1.0..1.0) + off).collect();
                SampleSet::new(dim, pts, None, tag).unwrap()
            };
            let s = draw(n, 0.0, DomainTag::Source);
            let t = draw(m, shift, DomainTag::Target);
            let p_hat = est.fit(&s, &[&t]).unwrap();
            let mut vals = p_hat.evaluate_samples(&s).unwrap();
            vals.extend(p_hat.evaluate_samples(&t).unwrap());
            let (lo, hi) = vals.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
            ensure(lo > 0.0, || "plug-in density vanished at a sample".into())?;
            let k = Kernel::gaussian(rng.random_range(0.2..2.0)).unwrap();
            let v = mmd_squared(&s, &t, &k, MmdVariant::V).unwrap().value;
            let above = kernel_support_divergence(&s, &t, &p_hat, eps(2.0 * hi), &k).unwrap().value;
            let below = kernel_support_divergence(&s, &t, &p_hat, eps(0.5 * lo), &k).unwrap().value;
            worst = worst.max((above - v).abs());
            ensure(below == 0.0, || format!("below-min value {below}"))?;
        }
        ensure(worst <= 1e-10, || format!("above-max gap {worst}"))?;
        Ok(format!("50 pairs, max |KSD - MMD²_V| {worst:.3e}, zero below the minimum"))
    });
}

#[test]
fn c07_hinge_dominance() {
    criterion(7, "hinge relaxation dominance", Duration::from_secs(5), || {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (mut worst, mut zero_q, mut zero_p, mut zero_both) = (f64::INFINITY, 0, 0, 0);
        for _ in 0..1000 {
            let k = rng.random_range(3..16);
            let mut w = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random::<f64>()).collect() };
            let (mut wp, mut wq) = (w(k), w(k));
            // Force one state with q = 0, one with p = 0 and one with both.
            wq[0] = 0.0;
            wp[1] = 0.0;
            wp[2] = 0.0;
            wq[2] = 0.0;
            let p = DiscreteDensity::from_weights(wp).unwrap();
            let q = DiscreteDensity::from_weights(wq).unwrap();
            zero_q += q.probabilities().iter().filter(|v| **v == 0.0).count();
            zero_p += p.probabilities().iter().filter(|v| **v == 0.0).count();
            zero_both += p.probabilities().iter().zip(q.probabilities()).filter(|(a, b)| **a == 0.0 && **b == 0.0).count();
            let e = eps(10f64.powf(rng.random_range(-3.0..0.0)));
            let (p, q): (Density, Density) = (p.into(), q.into());
            let h = hinge_support_divergence(&p, &q, e).unwrap().value;
            let d = support_divergence_exact(&p, &q, e).unwrap().value;
            ensure(h.is_finite(), || "hinge value not finite".into())?;
            worst = worst.min(h - d);
        }
        ensure(worst >= -1e-12, || format!("hinge below d_supp by {}", -worst))?;
        ensure(zero_q > 0 && zero_p > 0 && zero_both > 0, || "zero states not exercised".into())?;
        Ok(format!("min(hinge - d_supp) {worst:.3e} over 10^3 pairs; {zero_q} q=0, {zero_p} p=0, {zero_both} both-zero states"))
    });
}

fn random_atom_problem(rng: &mut ChaCha8Rng) -> SyntheticProblem {
    let k = rng.random_range(2..8);
    let mut atoms: Vec<Vec<f64>> = Vec::new();
    while atoms.len() < k {
        let a = vec![f64::from(rng.random_range(0..4u8)), f64::from(rng.random_range(0..4u8))];
        if !atoms.contains(&a) {
            atoms.push(a);
        }
    }
    let mut w = || -> Vec<f64> {
        (0..k)
            .map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random::<f64>() + 0.01 })
            .collect()
    };
    let (mut ws, mut wt) = (w(), w());
    ws[0] += 0.5;
    wt[k - 1] += 0.5;
    let post: Vec<f64> = (0..k).map(|_| f64::from(rng.random_range(0..2u8))).collect();
    let norm = |w: Vec<f64>| {
        let s: f64 = w.iter().sum();
        DiscreteDensity::with_atoms(w.into_iter().map(|v| v / s).collect(), atoms.clone()).unwrap()
    };
    SyntheticProblem::from_atoms(ProblemDescriptor::Custom { label: "atoms".into() }, norm(ws), norm(wt), post).unwrap()
}

#[test]
fn c08_representation_inequalities_and_ipm_ceiling() {
    criterion(8, "restricted-class inequalities and IPM ceiling", Duration::from_secs(30), || {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let loss = Loss::ZeroOne;
        let cfg = HDeltaHConfig {
            max_pairs: 1_000_000,
            ..Default::default()
        };
        let grid = |r: Representation| HypothesisClass::ThresholdGrid {
            representation: r,
            lower: -0.5,
            upper: 3.5,
            cutoffs: 5,
            axes: None,
        };
        let phi = |k: usize| Representation::select(2, vec![k]).unwrap();
        let mut checks = 0;
        for _ in 0..100 {
            let p = random_atom_problem(&mut rng);
            let mut all = grid(phi(0)).expand().unwrap();
            all.extend(grid(phi(1)).expand().unwrap());
            let big = HypothesisClass::Explicit { hypotheses: all };
            let (ps, pt) = (p.density(DomainTag::Source), p.density(DomainTag::Target));
            let d_h = h_delta_h(&big, &ps, &pt, RiskMode::Exact, &cfg).unwrap().value;
            let l_h = lambda_joint(&big, &p, RiskMode::Exact, &loss).unwrap();
            for k in 0..2 {
                let pf = push_forward(&p, &phi(k)).unwrap();
                let d_f = h_delta_h(&grid(Representation::identity(1)), &pf.source, &pf.target, RiskMode::Exact, &cfg)
                    .unwrap()
                    .value;
                ensure(d_f <= d_h + 1e-12, || format!("d_FdF {d_f} above d_HdH {d_h}"))?;
                let l_phi = lambda_joint(&grid(phi(k)), &p, RiskMode::Exact, &loss).unwrap();
                ensure(l_phi >= l_h - 1e-12, || format!("lambda_phi {l_phi} below lambda_H {l_h}"))?;
                checks += 2;
            }
            let (Density::Discrete(a), Density::Discrete(b)) = (&ps, &pt) else { unreachable!() };
            let m = rng.random_range(0.5..3.0);
            let e = eps(rng.random_range(0.01..0.6));
            let ipm = ipm_support_divergence_oracle(a, b, e, m).unwrap();
            let fwd = support_divergence_exact(&ps, &pt, e).unwrap().value;
            let bwd = support_divergence_exact(&pt, &ps, e).unwrap().value;
            let ceiling = m * fwd.max(bwd);
            ensure(ipm <= ceiling + 1e-12 && ceiling <= m + 1e-12, || {
                format!("ipm {ipm}, ceiling {ceiling}, M {m}")
            })?;
            checks += 1;
        }
        Ok(format!("{checks} inequalities on 100 atom problems"))
    });
}

#[test]
fn c09_trainer_sanity() {
    criterion(9, "trainer sanity", Duration::from_secs(180), || {
        let ex = make_example1();
        let s = ex.sample_labeled(DomainTag::Source, 100, 0);
        let t = ex.sample(DomainTag::Target, 100, 0);
        let cfg = TrainConfig::new(0);
        let m0 = train(&s, &t, &TrainConfig { max_iters: 0, ..cfg.clone() }).unwrap();
        let g = gradient_check(&m0, &s, &t, &cfg, 1e-4).unwrap();
        ensure(g.passed, || format!("gradient check error {}", g.max_relative_error))?;
        let hinge = TrainConfig {
            penalty: Penalty::HingeSupport,
            kernel: Kernel::gaussian(0.4).unwrap(),
            eps: eps(0.3),
            ..cfg.clone()
        };
        let gh = gradient_check(&m0, &s, &t, &hinge, 1e-4).unwrap();
        ensure(gh.passed, || format!("hinge gradient check error {}", gh.max_relative_error))?;

        let (mut worst_obj, mut lo, mut hi) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
        for seed in 0..20 {
            let s = ex.sample_labeled(DomainTag::Source, 100, seed);
            let t = ex.sample(DomainTag::Target, 100, seed);
            let c = TrainConfig {
                alpha: 0.5,
                max_iters: 1000,
                ..TrainConfig::new(seed)
            };
            let m = train(&s, &t, &c).unwrap();
            worst_obj = worst_obj.max(m.final_objective().unwrap());
            let rt = risk(&m.hypothesis().unwrap(), &ex, DomainTag::Target, RiskMode::Exact, &Loss::ZeroOne).unwrap();
            lo = lo.min(rt);
            hi = hi.max(rt);
        }
        ensure(worst_obj < 0.1, || format!("largest final objective {worst_obj}"))?;
        ensure(lo < 0.1 && hi > 0.9, || format!("target risks span [{lo}, {hi}]"))?;

        // Clusters 1, 3 and 5 (all class 1) are missing from the target.
        let base = make_cluster_base(&ClusterParams::default()).unwrap();
        let shifted = make_label_shift(&base, &ClassShift::Remove(vec![1, 3, 5])).unwrap();
        let alphas = [0.0, 0.3, 0.5, 0.6];
        let mut mean_rt = [0.0; 4];
        let seeds = 5;
        for seed in 0..seeds {
            let s = shifted.sample_labeled(DomainTag::Source, 200, seed);
            let t = shifted.sample(DomainTag::Target, 200, seed);
            for (i, alpha) in alphas.iter().enumerate() {
                let c = TrainConfig {
                    alpha: *alpha,
                    max_iters: 1000,
                    ..TrainConfig::new(seed)
                };
                let m = train(&s, &t, &c).unwrap();
                let h = m.hypothesis().unwrap();
                mean_rt[i] += risk(&h, &shifted, DomainTag::Target, RiskMode::Exact, &Loss::ZeroOne).unwrap() / seeds as f64;
            }
        }
        ensure(mean_rt[3] >= mean_rt[0], || format!("mean target risk by alpha {mean_rt:?}"))?;
        Ok(format!(
            "gradient errors {:.2e} (mmd), {:.2e} (hinge); quadrant objectives <= {worst_obj:.3}, target risks {lo:.3}..{hi:.3}; label-shift mean target risk by alpha {:?}",
            g.max_relative_error,
            gh.max_relative_error,
            mean_rt.map(|v| (v * 1e4).round() / 1e4)
        ))
    });
}

#[test]
fn c10_importance_weighting_consistency() {
    criterion(10, "importance-weighting consistency", Duration::from_secs(30), || {
        let atoms: Vec<Vec<f64>> = (0..4).map(|i| vec![f64::from(i)]).collect();
        let ps = DiscreteDensity::with_atoms(vec![0.25; 4], atoms.clone()).unwrap();
        let pt = DiscreteDensity::with_atoms(vec![0.1, 0.2, 0.3, 0.4], atoms).unwrap();
        // With h ≡ 1 the loss probabilities are 0.8, 0.7, 0.4, 0.1, which
        // keeps the weighted estimator's variance below the binomial one.
        let posterior = vec![0.2, 0.3, 0.6, 0.9];
        let problem = SyntheticProblem::from_atoms(
            ProblemDescriptor::Custom { label: "four-state".into() },
            ps.clone(),
            pt.clone(),
            posterior.clone(),
        )
        .unwrap();
        let h = Hypothesis::new(Representation::identity(1), Predictor::Constant { value: 1 }).unwrap();
        let loss = Loss::ZeroOne;
        let rt = risk(&h, &problem, DomainTag::Target, RiskMode::Exact, &loss).unwrap();
        let n = 10_000;
        let se = (rt * (1.0 - rt) / n as f64).sqrt();
        let weights_cfg = WeightConfig::new(eps(0.1), ps.into(), pt.into()).unwrap();
        let mut worst = 0.0f64;
        for seed in 0..20 {
            let s = problem.sample_labeled(DomainTag::Source, n, seed);
            let w = truncated_weights(&weights_cfg, &s).unwrap();
            let r = weighted_risk(&s, &w, &h, &loss).unwrap().risk;
            worst = worst.max((r - rt).abs() / se);
        }
        // Exact standard deviation of one weighted term, for the report.
        let wts = [0.4, 0.8, 1.2, 1.6];
        let second: f64 = (0..4).map(|i| 0.25 * wts[i] * wts[i] * (1.0 - posterior[i])).sum();
        let sd = (second - rt * rt).sqrt();
        ensure(worst <= 3.0, || format!("largest deviation {worst:.2} binomial SE"))?;
        Ok(format!(
            "R_t {rt:.3}; max |error| {worst:.2} binomial SE over 20 seeds (term sd {sd:.3} vs binomial {:.3})",
            (rt * (1.0 - rt)).sqrt()
        ))
    });
}
