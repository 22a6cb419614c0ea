use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::densities::{BandwidthRule, GridDensity};
use crate::hypotheses::Orientation;
use crate::synthetic::{make_example1, make_overlap_pair, random_grid_problem, OverlapParams, RandomGridParams};

fn eps(v: f64) -> Epsilon {
    Epsilon::new(v).unwrap()
}

fn phi(k: usize) -> Representation {
    Representation::select(2, vec![k]).unwrap()
}

fn thr(cutoff: f64, orientation: Orientation) -> Predictor {
    Predictor::Threshold {
        axis: 0,
        cutoff,
        orientation,
    }
}

fn exact_target_risk(problem: &SyntheticProblem, repr: &Representation, f: &Predictor) -> f64 {
    let h = Hypothesis::new(repr.clone(), f.clone()).unwrap();
    risk(&h, problem, DomainTag::Target, RiskMode::Exact, &Loss::ZeroOne).unwrap()
}

#[test]
fn example1_components() {
    let p = make_example1();
    let l = Loss::ZeroOne;
    let cases = [(phi(0), thr(0.0, Orientation::Less), 1.0), (phi(1), thr(0.0, Orientation::Greater), 0.0)];
    for (repr, f, expected) in cases {
        let b = theorem2_bound(BoundInput::Exact(&p), &repr, &f, &l, eps(0.1), EtaSource::Oracle(&p)).unwrap();
        assert!(b.weighted_risk_term.abs() < 1e-12);
        assert!(b.support_term.abs() < 1e-12);
        assert!((b.eta_term.value().unwrap() - expected).abs() < 1e-12);
        assert!((b.total.value() - expected).abs() < 1e-12);
        let e = eta_excess_loss(&p, &repr, &f, &l).unwrap();
        assert!(e.delta_target_mean.abs() < 1e-12);
        assert!((e.eta - (e.delta_target_mean - e.delta_source_mean)).abs() < 1e-12);
        let first = source_posterior_target_risk(&p, &repr, &f, &l).unwrap();
        let rt = exact_target_risk(&p, &repr, &f);
        assert!((rt - expected).abs() < 1e-12);
        assert!((first + e.eta - rt).abs() < 1e-9);
    }
}

#[test]
fn equal_domains_reduce_to_source_risk() {
    let p = make_example1();
    let space = match &p.space {
        crate::synthetic::ProblemSpace::Grid { source, posterior, .. } => (source.clone(), posterior.clone()),
        _ => unreachable!(),
    };
    let same = SyntheticProblem::from_grids(
        crate::synthetic::ProblemDescriptor::Custom { label: "same".into() },
        space.0.clone(),
        space.0,
        space.1,
    )
    .unwrap();
    let repr = Representation::identity(2);
    let f = Predictor::Logistic {
        weights: vec![0.3, 1.0],
        bias: 0.1,
    };
    let h = Hypothesis::new(repr.clone(), f.clone()).unwrap();
    let rs = risk(&h, &same, DomainTag::Source, RiskMode::Exact, &Loss::ZeroOne).unwrap();
    for e in [0.01, 0.5, 10.0] {
        let b = theorem2_bound(BoundInput::Exact(&same), &repr, &f, &Loss::ZeroOne, eps(e), EtaSource::Oracle(&same))
            .unwrap();
        assert_eq!(b.support_term, 0.0);
        assert_eq!(b.eta_term, EtaTerm::Value(0.0));
        assert!((b.total.value() - rs).abs() < 1e-9);
    }
}

fn random_predictor(rng: &mut ChaCha8Rng, k: usize) -> Predictor {
    if rng.random_bool(0.5) {
        Predictor::Threshold {
            axis: rng.random_range(0..k),
            cutoff: rng.random_range(0.0..1.0),
            orientation: if rng.random_bool(0.5) {
                Orientation::Greater
            } else {
                Orientation::Less
            },
        }
    } else {
        Predictor::Logistic {
            weights: (0..k).map(|_| rng.random_range(-1.0..1.0)).collect(),
            bias: rng.random_range(-0.5..0.5),
        }
    }
}

#[test]
fn soundness_and_risk_identity_on_random_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let loss = Loss::table([[0.0, 2.0], [1.5, 0.2]], 2.0).unwrap();
    for seed in 0..15 {
        let p = random_grid_problem(seed, &RandomGridParams::default()).unwrap();
        for repr in [Representation::identity(2), phi(0), phi(1)] {
            let f = random_predictor(&mut rng, repr.output_dim());
            let h = Hypothesis::new(repr.clone(), f.clone()).unwrap();
            let rt = risk(&h, &p, DomainTag::Target, RiskMode::Exact, &loss).unwrap();
            for e in [0.05, 0.5, 2.0] {
                let b = theorem2_bound(BoundInput::Exact(&p), &repr, &f, &loss, eps(e), EtaSource::Oracle(&p)).unwrap();
                assert!(b.total.value() >= rt - 1e-9, "{} < {rt}", b.total.value());
            }
            let eta = eta_excess_loss(&p, &repr, &f, &loss).unwrap().eta;
            let first = source_posterior_target_risk(&p, &repr, &f, &loss).unwrap();
            assert!((first + eta - rt).abs() < 1e-9);
        }
    }
}

#[test]
fn raising_epsilon_never_lowers_support_term() {
    let p = random_grid_problem(11, &RandomGridParams::default()).unwrap();
    let f = Predictor::Constant { value: 1 };
    let mut prev = 0.0;
    for e in [0.01, 0.1, 0.5, 1.0, 1.5, 3.0, 10.0] {
        let b = theorem2_bound(
            BoundInput::Exact(&p),
            &Representation::identity(2),
            &f,
            &Loss::ZeroOne,
            eps(e),
            EtaSource::Unobservable,
        )
        .unwrap();
        assert!(b.support_term >= prev);
        prev = b.support_term;
    }
}

#[test]
fn invertible_representations_have_no_excess_loss() {
    let p = random_grid_problem(4, &RandomGridParams::default()).unwrap();
    let rot = Representation::linear(vec![vec![1.0, 2.0], vec![-1.0, 0.5]]).unwrap();
    let f = Predictor::Logistic {
        weights: vec![1.0, -1.0],
        bias: 0.0,
    };
    assert_eq!(eta_excess_loss(&p, &rot, &f, &Loss::ZeroOne).unwrap().eta, 0.0);
    assert_eq!(eta_excess_loss(&p, &Representation::identity(2), &f, &Loss::ZeroOne).unwrap().eta, 0.0);
    let flat = Representation::linear(vec![vec![1.0, 1.0]]).unwrap();
    let f1 = thr(0.5, Orientation::Greater);
    assert!(matches!(
        eta_excess_loss(&p, &flat, &f1, &Loss::ZeroOne),
        Err(Error::Unsupported(_))
    ));
    assert!(resolve_eta(EtaSource::Oracle(&p), &flat, &f1, &Loss::ZeroOne).unwrap().value().is_none());
}

#[test]
fn unobservable_eta_marks_partial_total() {
    let p = make_example1();
    let b = theorem2_bound(
        BoundInput::Exact(&p),
        &phi(0),
        &thr(0.0, Orientation::Less),
        &Loss::ZeroOne,
        eps(0.1),
        EtaSource::Unobservable,
    )
    .unwrap();
    assert_eq!(b.total, Total::ObservableOnly(b.weighted_risk_term + b.support_term));
    let v = serde_json::to_value(&b).unwrap();
    assert_eq!(v["eta_term"], "unobservable");
    assert_eq!(v["total"]["kind"], "observable_only");
    assert_eq!(v["support_term_kind"], "max_loss");
    let back: BoundReport = serde_json::from_value(v).unwrap();
    assert_eq!(back, b);
}

#[test]
fn kernel_bound_limits() {
    let p = random_grid_problem(8, &RandomGridParams::default()).unwrap();
    let k = Kernel::gaussian(0.3).unwrap();
    let repr = Representation::identity(2);
    let f = Predictor::Constant { value: 0 };
    let b = theorem3_bound(BoundInput::Exact(&p), &repr, &f, &Loss::ZeroOne, eps(1e6), &k, Some(2.0), EtaSource::Oracle(&p))
        .unwrap();
    let mmd = mmd_squared_exact(&p.density(DomainTag::Source), &p.density(DomainTag::Target), &k)
        .unwrap()
        .value;
    assert!((b.support_term - 2.0 * mmd.sqrt()).abs() < 1e-10);
    assert_eq!(b.lambda, Some(2.0));
    let (a, _) = make_overlap_pair(&OverlapParams::default()).unwrap();
    let id = Representation::identity(1);
    let b = theorem3_bound(BoundInput::Exact(&a), &id, &f, &Loss::ZeroOne, eps(1e-9), &k, None, EtaSource::Oracle(&a))
        .unwrap();
    assert_eq!(b.support_term, 0.0);
    assert_eq!(b.lambda, Some(1.0));
}

#[test]
fn identical_samples_give_plain_empirical_risk() {
    let p = make_example1();
    let s = p.sample_labeled(DomainTag::Source, 300, 5);
    let t = s.clone().with_domain(DomainTag::Target);
    let est = EstimatorConfig::Kde {
        bandwidth: BandwidthRule::Silverman,
    };
    let f = thr(0.2, Orientation::Greater);
    let b = theorem2_bound(
        BoundInput::Samples {
            source: &s,
            target: &t,
            estimator: &est,
        },
        &phi(1),
        &f,
        &Loss::ZeroOne,
        eps(0.2),
        EtaSource::Unobservable,
    )
    .unwrap();
    let h = Hypothesis::new(phi(1), f).unwrap();
    let emp = crate::hypotheses::empirical_risk(&h, &s, &Loss::ZeroOne).unwrap();
    assert_eq!(b.support_term, 0.0);
    assert!((b.weighted_risk_term - emp).abs() < 1e-12);
    let unlabeled = s.without_labels();
    assert!(matches!(
        theorem2_bound(
            BoundInput::Samples {
                source: &unlabeled,
                target: &t,
                estimator: &est
            },
            &phi(1),
            &thr(0.0, Orientation::Greater),
            &Loss::ZeroOne,
            eps(0.2),
            EtaSource::Unobservable
        ),
        Err(Error::MissingLabels)
    ));
}

#[test]
fn overlap_comparison_table() {
    let (a, b) = make_overlap_pair(&OverlapParams::default()).unwrap();
    let id = Representation::identity(1);
    let hs = vec![
        ("positive_right".to_string(), Hypothesis::new(id.clone(), thr(0.0, Orientation::Greater)).unwrap()),
        ("always_one".to_string(), Hypothesis::new(id.clone(), Predictor::Constant { value: 1 }).unwrap()),
    ];
    let class = HypothesisClass::Explicit {
        hypotheses: hs.iter().map(|(_, h)| h.clone()).collect(),
    };
    let k = [Kernel::gaussian(0.5).unwrap()];
    let e = [eps(0.2)];
    let ra = compare_bounds(&a, &hs, &class, &e, &k, &HDeltaHConfig::default()).unwrap();
    let rb = compare_bounds(&b, &hs, &class, &e, &k, &HDeltaHConfig::default()).unwrap();
    assert_eq!(ra.len(), 2);
    for r in ra.iter().chain(&rb) {
        assert!(r.theorem1_total >= r.exact_target_risk - 1e-9);
        assert!(r.theorem2_total >= r.exact_target_risk - 1e-9);
    }
    assert_eq!(ra[0].d_supp, 0.0);
    assert!(rb[0].d_supp > 0.0);
    assert!(ra[0].mmd_squared > 0.0);
    let mut buf = Vec::new();
    write_comparison_csv(&mut buf, &ra).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with(&COMPARISON_COLUMNS.join(",")));
    assert_eq!(text.lines().count(), 3);
    assert!(!text.contains('\r'));
}

#[test]
fn weights_follow_grid_values() {
    let g = GridDensity::new(vec![0.0], vec![1.0], vec![2], vec![1.5, 0.5]).unwrap();
    let u = GridDensity::uniform(vec![0.0], vec![1.0], vec![2]).unwrap();
    let cfg = WeightConfig::new(eps(0.6), g.into(), u.into()).unwrap();
    let s = SampleSet::new(1, vec![0.25, 0.75], None, DomainTag::Source).unwrap();
    assert_eq!(truncated_weights(&cfg, &s).unwrap(), vec![1.0 / 1.5, 1.0]);
}
