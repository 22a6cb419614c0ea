use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use shift_audit::bounds::{compare_bounds, theorem2_bound, theorem3_bound, write_comparison_csv, BoundInput, EtaSource};
use shift_audit::densities::{BandwidthRule, EstimatorConfig};
use shift_audit::divergence::{
    epsilon_from_quantile, hinge_support_divergence_plug_in, kernel_support_divergence, mmd_squared,
    mmd_squared_exact, support_divergence_exact, support_divergence_plug_in, MmdVariant,
};
use shift_audit::hypotheses::{theorem1_bound, Theorem1Report, HDeltaHConfig, Orientation, RiskMode};
use shift_audit::synthetic::{
    make_cluster_base, make_example1, make_label_shift, make_overlap_pair, random_grid_problem, ClassShift,
    ClusterParams, OverlapParams, ProblemDescriptor, RandomGridParams,
};
use shift_audit::trainer::{train as fit, tune_on_target, write_trace_csv, Penalty, TrainConfig, TrainedModel};
use shift_audit::{
    hypotheses, BoundReport, DomainTag, Epsilon, Error, Hypothesis, HypothesisClass, Kernel, Loss, Predictor, Representation,
    SampleSet, SyntheticProblem,
};

use crate::error::{CliError, CliResult};
use crate::io::{
    ensure_dir, read_bytes, read_json, read_samples, samples_csv, to_json, write_atomic, BOUND_SCHEMA,
    DIAGNOSE_SCHEMA, EVALUATE_SCHEMA, MODEL_SCHEMA, PROBLEM_SCHEMA, SUMMARY_SCHEMA,
};
use crate::manifest::RunManifest;
use crate::{
    BoundArgs, DiagnoseArgs, EvaluateArgs, EstimatorArgs, EstimatorKind, GenerateArgs, PenaltyKind, ProblemKind, ReplicateArgs,
    Scenario, TheoremId, TrainArgs,
};

fn estimator_config(a: &EstimatorArgs) -> EstimatorConfig {
    match a.estimator {
        EstimatorKind::Kde => EstimatorConfig::Kde {
            bandwidth: a.bandwidth.map_or(BandwidthRule::Silverman, BandwidthRule::Fixed),
        },
        EstimatorKind::Hist => EstimatorConfig::Histogram { bins: a.bins },
    }
}

fn load_samples(path: &Path, domain: DomainTag, manifest: &mut RunManifest) -> CliResult<SampleSet> {
    let s = read_samples(path, domain)?;
    manifest.input_file(path)?;
    Ok(s)
}

fn same_dim(a: usize, b: usize) -> CliResult<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: a, found: b }.into())
    }
}

fn finite(name: &str, v: f64) -> CliResult<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(name.into()).into())
    }
}

/// Writes a report to `out`, or to stdout when absent.
fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(p) => write_atomic(p, bytes),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(bytes)
                .map_err(|e| CliError::io("<stdout>", e))
        }
    }
}

/// Output directory writer that records every file in the manifest.
struct OutDir<'a> {
    dir: &'a Path,
    manifest: RunManifest,
}

impl<'a> OutDir<'a> {
    fn new(dir: &'a Path, manifest: RunManifest) -> CliResult<Self> {
        ensure_dir(dir)?;
        Ok(Self { dir, manifest })
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.manifest.output(&path, bytes);
        Ok(path)
    }

    fn finish(self) -> CliResult<()> {
        self.manifest.write(&self.dir.join("manifest.json"))
    }
}

#[derive(Serialize)]
struct DiagnoseReport {
    n_source: usize,
    n_target: usize,
    dim: usize,
    epsilon: f64,
    epsilon_rule: String,
    kernel: Kernel,
    estimator: EstimatorConfig,
    d_supp: f64,
    kernel_support_divergence: f64,
    mmd_squared_u: f64,
    mmd_squared_v: f64,
    hinge_support_divergence: f64,
    manifest: RunManifest,
}

pub fn diagnose(a: DiagnoseArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new("diagnose", json!({}));
    let source = load_samples(&a.source, DomainTag::Source, &mut manifest)?;
    let target = load_samples(&a.target, DomainTag::Target, &mut manifest)?;
    same_dim(source.dim(), target.dim())?;
    let estimator = estimator_config(&a.estimator);
    let p_hat = estimator.fit(&source, &[&target])?;
    let q_hat = estimator.fit(&target, &[&source])?;
    let (eps, epsilon_rule) = match a.eps {
        Some(e) => (Epsilon::new(e)?, "fixed".to_string()),
        None => (
            epsilon_from_quantile(&p_hat, &source, &target, a.eps_quantile)?,
            format!("source density quantile {}", a.eps_quantile),
        ),
    };
    let kernel = match a.kernel_sigma {
        Some(s) => Kernel::gaussian(s)?,
        None => Kernel::median_heuristic(&source, &target)?,
    };
    let d_supp = support_divergence_plug_in(&source, &target, &p_hat, &q_hat, eps)?.value;
    let ksd = kernel_support_divergence(&source, &target, &p_hat, eps, &kernel)?.value;
    let mmd_u = mmd_squared(&source, &target, &kernel, MmdVariant::U)?.value;
    let mmd_v = mmd_squared(&source, &target, &kernel, MmdVariant::V)?.value;
    let hinge = hinge_support_divergence_plug_in(&source, &target, &p_hat, &q_hat, eps)?.value;
    manifest.config = json!({
        "epsilon": eps.value(),
        "epsilon_rule": epsilon_rule,
        "kernel": kernel,
        "estimator": estimator,
    });
    let report = DiagnoseReport {
        n_source: source.len(),
        n_target: target.len(),
        dim: source.dim(),
        epsilon: eps.value(),
        epsilon_rule,
        kernel,
        estimator,
        d_supp: finite("d_supp", d_supp)?,
        kernel_support_divergence: finite("kernel support divergence", ksd)?,
        mmd_squared_u: finite("MMD² (U)", mmd_u)?,
        mmd_squared_v: finite("MMD² (V)", mmd_v)?,
        hinge_support_divergence: finite("hinge divergence", hinge)?,
        manifest,
    };
    emit(a.out.as_deref(), &to_json(DIAGNOSE_SCHEMA, &report)?)
}

/// Accepts a full problem document or a generator descriptor.
fn read_problem(path: &Path, manifest: &mut RunManifest) -> CliResult<SyntheticProblem> {
    let value: serde_json::Value = read_json(path, &[PROBLEM_SCHEMA])?;
    manifest.input_file(path)?;
    let problem = if value.get("space").is_some() {
        serde_json::from_value::<SyntheticProblem>(value).map_err(|e| CliError::in_file(path, e.into()))?
    } else {
        let d: ProblemDescriptor =
            serde_json::from_value(value).map_err(|e| CliError::in_file(path, e.into()))?;
        d.build()?
    };
    problem.validate()?;
    Ok(problem)
}

fn read_hypothesis(path: &Path, manifest: &mut RunManifest) -> CliResult<Hypothesis> {
    let h: Hypothesis = read_json(path, &[MODEL_SCHEMA])?;
    manifest.input_file(path)?;
    h.validate()?;
    Ok(h)
}

#[derive(Serialize)]
#[serde(untagged)]
enum BoundBody {
    Classical(Theorem1Report),
    Support(BoundReport),
}

#[derive(Serialize)]
struct BoundOutput {
    theorem: u8,
    /// True when the total omits the unobservable information-loss term.
    partial: bool,
    report: BoundBody,
    manifest: RunManifest,
}

pub fn bound(a: BoundArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new("bound", json!({}));
    let h = read_hypothesis(&a.model, &mut manifest)?;
    let problem = a.problem.as_deref().map(|p| read_problem(p, &mut manifest)).transpose()?;
    let samples = match (&a.source, &a.target) {
        (Some(s), Some(t)) => {
            let s = load_samples(s, DomainTag::Source, &mut manifest)?;
            let t = load_samples(t, DomainTag::Target, &mut manifest)?;
            same_dim(h.input_dim(), s.dim())?;
            same_dim(h.input_dim(), t.dim())?;
            Some((s, t))
        }
        _ => None,
    };
    if let Some(p) = &problem {
        same_dim(h.input_dim(), p.dim())?;
    }
    let eta_problem = match a.eta.as_str() {
        "unobservable" => None,
        path => {
            let p = read_problem(Path::new(path), &mut manifest)?;
            same_dim(h.input_dim(), p.dim())?;
            Some(p)
        }
    };
    let eta = eta_problem.as_ref().map_or(EtaSource::Unobservable, EtaSource::Oracle);
    let estimator = estimator_config(&a.estimator);
    let eps = Epsilon::new(a.eps)?;
    let loss = Loss::ZeroOne;
    manifest.config = json!({
        "theorem": a.theorem as u8 + 1,
        "epsilon": a.eps,
        "eta": a.eta,
        "kernel_sigma": a.kernel_sigma,
        "lambda": a.lambda,
        "estimator": estimator,
        "loss": loss,
    });
    let input = match (&problem, &samples) {
        (Some(p), _) => BoundInput::Exact(p),
        (None, Some((s, t))) => BoundInput::Samples {
            source: s,
            target: t,
            estimator: &estimator,
        },
        (None, None) => return Err(CliError::Usage("give --problem or both --source and --target".into())),
    };
    let (theorem, partial, report) = match a.theorem {
        TheoremId::One => {
            let Some(p) = &problem else {
                return Err(CliError::Usage("the classical bound needs --problem for target labels".into()));
            };
            let class = HypothesisClass::ThresholdGrid {
                representation: h.representation.clone(),
                lower: a.class_lower,
                upper: a.class_upper,
                cutoffs: a.class_cutoffs,
                axes: None,
            };
            manifest.config["class"] = json!(class);
            let r = theorem1_bound(&h, &class, p, &HDeltaHConfig::default())?;
            finite("bound total", r.total)?;
            (1, false, BoundBody::Classical(r))
        }
        TheoremId::Two => {
            let r = theorem2_bound(input, &h.representation, &h.predictor, &loss, eps, eta)?;
            (2, !r.total.is_full(), BoundBody::Support(r))
        }
        TheoremId::Three => {
            let kernel = Kernel::gaussian(a.kernel_sigma)?;
            let r = theorem3_bound(input, &h.representation, &h.predictor, &loss, eps, &kernel, a.lambda, eta)?;
            (3, !r.total.is_full(), BoundBody::Support(r))
        }
    };
    let out = BoundOutput {
        theorem,
        partial,
        report,
        manifest,
    };
    emit(a.out.as_deref(), &to_json(BOUND_SCHEMA, &out)?)
}

fn csv_bytes<S: Serialize>(rows: &[S]) -> CliResult<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(Error::from)?;
    }
    w.into_inner().map_err(|e| CliError::Usage(e.to_string()))
}

fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

pub fn replicate(a: ReplicateArgs) -> CliResult<()> {
    match a.scenario {
        Scenario::Example1 => replicate_example1(&a),
        Scenario::Overlap => replicate_overlap(&a),
        Scenario::Labelshift => replicate_labelshift(&a),
    }
}

fn example1_hypotheses() -> CliResult<Vec<(String, Hypothesis)>> {
    let thr = |axis: usize, o| -> CliResult<Hypothesis> {
        Ok(Hypothesis::new(
            Representation::select(2, vec![axis])?,
            Predictor::Threshold {
                axis: 0,
                cutoff: 0.0,
                orientation: o,
            },
        )?)
    };
    Ok(vec![
        ("phi1".into(), thr(0, Orientation::Less)?),
        ("phi2".into(), thr(1, Orientation::Greater)?),
    ])
}

#[derive(Serialize)]
struct HypothesisSummary {
    hypothesis: String,
    source_risk: f64,
    exact_target_risk: f64,
    eta: f64,
    max_d_supp: f64,
    max_mmd_squared: f64,
    max_invariance_objective: f64,
    theorem1_total: f64,
    min_theorem2_total: f64,
}

fn replicate_example1(a: &ReplicateArgs) -> CliResult<()> {
    let eps_values = if a.sweep.is_empty() { vec![0.05, 0.1, 0.25] } else { a.sweep.clone() };
    let sigmas = if a.sigmas.is_empty() { vec![0.25, 0.5, 1.0] } else { a.sigmas.clone() };
    let eps: Vec<Epsilon> = eps_values.iter().map(|e| Epsilon::new(*e)).collect::<Result<_, _>>()?;
    let kernels: Vec<Kernel> = sigmas.iter().map(|s| Kernel::gaussian(*s)).collect::<Result<_, _>>()?;
    let problem = make_example1();
    let hs = example1_hypotheses()?;
    let class = HypothesisClass::ThresholdGrid {
        representation: Representation::identity(2),
        lower: -1.0,
        upper: 1.0,
        cutoffs: 21,
        axes: None,
    };
    let config = HDeltaHConfig::default();
    let rows = compare_bounds(&problem, &hs, &class, &eps, &kernels, &config)?;
    let manifest = RunManifest::new(
        "replicate example1",
        json!({"problem": problem.descriptor, "epsilons": eps_values, "sigmas": sigmas, "class": class, "h_delta_h": config}),
    );
    let mut out = OutDir::new(&a.out, manifest)?;
    let mut table = Vec::new();
    write_comparison_csv(&mut table, &rows)?;
    out.put("comparison.csv", &table)?;
    let summary: Vec<HypothesisSummary> = hs
        .iter()
        .map(|(name, _)| {
            let mine: Vec<_> = rows.iter().filter(|r| &r.hypothesis == name).collect();
            let max = |f: fn(&shift_audit::bounds::ComparisonRow) -> f64| mine.iter().map(|r| f(r)).fold(f64::MIN, f64::max);
            HypothesisSummary {
                hypothesis: name.clone(),
                source_risk: mine[0].source_risk,
                exact_target_risk: mine[0].exact_target_risk,
                eta: mine[0].eta,
                max_d_supp: max(|r| r.d_supp),
                max_mmd_squared: max(|r| r.mmd_squared),
                max_invariance_objective: max(|r| r.invariance_objective),
                theorem1_total: mine[0].theorem1_total,
                min_theorem2_total: mine.iter().map(|r| r.theorem2_total).fold(f64::MAX, f64::min),
            }
        })
        .collect();
    out.put("summary.json", &to_json(SUMMARY_SCHEMA, &json!({"scenario": "example1", "hypotheses": summary}))?)?;
    out.finish()
}

#[derive(Serialize)]
struct OverlapRow {
    sigma: f64,
    mmd_squared_a: f64,
    mmd_squared_b: f64,
    d_supp_a: f64,
    d_supp_b: f64,
    epsilon: f64,
}

fn replicate_overlap(a: &ReplicateArgs) -> CliResult<()> {
    let params = OverlapParams::default();
    let sigmas = if a.sweep.is_empty() { geometric(0.05, 10.0, 25) } else { a.sweep.clone() };
    let (pa, pb) = make_overlap_pair(&params)?;
    let eps = Epsilon::new(params.recorded_epsilon)?;
    let dens = |p: &SyntheticProblem| (p.density(DomainTag::Source), p.density(DomainTag::Target));
    let ((sa, ta), (sb, tb)) = (dens(&pa), dens(&pb));
    let d_a = support_divergence_exact(&sa, &ta, eps)?.value;
    let d_b = support_divergence_exact(&sb, &tb, eps)?.value;
    let rows = sigmas
        .iter()
        .map(|s| {
            let k = Kernel::gaussian(*s)?;
            Ok(OverlapRow {
                sigma: *s,
                mmd_squared_a: mmd_squared_exact(&sa, &ta, &k)?.value,
                mmd_squared_b: mmd_squared_exact(&sb, &tb, &k)?.value,
                d_supp_a: d_a,
                d_supp_b: d_b,
                epsilon: eps.value(),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let manifest = RunManifest::new("replicate overlap", json!({"params": params, "sigmas": sigmas}));
    let mut out = OutDir::new(&a.out, manifest)?;
    out.put("overlap.csv", &csv_bytes(&rows)?)?;
    let reversed: Vec<f64> = rows
        .iter()
        .filter(|r| r.mmd_squared_a > r.mmd_squared_b)
        .map(|r| r.sigma)
        .collect();
    out.put(
        "summary.json",
        &to_json(
            SUMMARY_SCHEMA,
            &json!({
                "scenario": "overlap",
                "epsilon": eps.value(),
                "d_supp_a": d_a,
                "d_supp_b": d_b,
                "sigmas_where_mmd_a_exceeds_mmd_b": reversed,
            }),
        )?,
    )?;
    out.finish()
}

fn parse_removals(raw: &str) -> CliResult<Vec<Vec<usize>>> {
    raw.split(';')
        .map(|part| {
            let part = part.trim();
            if part.is_empty() || part == "none" {
                return Ok(Vec::new());
            }
            part.split(',')
                .map(|k| {
                    k.trim()
                        .parse()
                        .map_err(|_| CliError::Usage(format!("bad cluster index {k:?} in --removals")))
                })
                .collect()
        })
        .collect()
}

#[derive(Serialize)]
struct LabelShiftRow {
    removed: String,
    n_removed: usize,
    alpha: f64,
    seed: u64,
    source_risk: f64,
    target_risk: f64,
    objective: f64,
}

#[derive(Serialize)]
struct LabelShiftMean {
    removed: String,
    alpha: f64,
    mean_target_risk: f64,
}

fn replicate_labelshift(a: &ReplicateArgs) -> CliResult<()> {
    let Some(first_seed) = a.seed else {
        return Err(CliError::Usage("labelshift trains models; give --seed".into()));
    };
    let alphas = if a.sweep.is_empty() { vec![0.0, 0.3, 0.5, 0.6, 0.9] } else { a.sweep.clone() };
    let removals = parse_removals(&a.removals)?;
    let base_params = ClusterParams::default();
    let base = make_cluster_base(&base_params)?;
    let problems = removals
        .iter()
        .map(|r| {
            if r.is_empty() {
                Ok(base.clone())
            } else {
                make_label_shift(&base, &ClassShift::Remove(r.clone()))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let jobs: Vec<(usize, f64, u64)> = (0..problems.len())
        .flat_map(|p| alphas.iter().flat_map(move |al| (0..a.seeds).map(move |s| (p, *al, first_seed + s))))
        .collect();
    let label = |r: &[usize]| {
        if r.is_empty() {
            "none".to_string()
        } else {
            r.iter().map(|k| k.to_string()).collect::<Vec<_>>().join("|")
        }
    };
    let rows = jobs
        .par_iter()
        .map(|(p, alpha, seed)| {
            let problem = &problems[*p];
            let s = problem.sample_labeled(DomainTag::Source, a.n, *seed);
            let t = problem.sample(DomainTag::Target, a.n, *seed);
            let config = TrainConfig {
                alpha: *alpha,
                max_iters: a.iters,
                ..TrainConfig::new(*seed)
            };
            let model = fit(&s, &t, &config)?;
            let h = model.hypothesis()?;
            let r = |which| hypotheses::risk(&h, problem, which, RiskMode::Exact, &Loss::ZeroOne);
            Ok(LabelShiftRow {
                removed: label(&removals[*p]),
                n_removed: removals[*p].len(),
                alpha: *alpha,
                seed: *seed,
                source_risk: r(DomainTag::Source)?,
                target_risk: r(DomainTag::Target)?,
                objective: finite("objective", model.final_objective().unwrap_or(f64::NAN))?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let means: Vec<LabelShiftMean> = removals
        .iter()
        .flat_map(|r| alphas.iter().map(move |al| (label(r), *al)))
        .map(|(removed, alpha)| {
            let v: Vec<f64> = rows
                .iter()
                .filter(|x| x.removed == removed && x.alpha == alpha)
                .map(|x| x.target_risk)
                .collect();
            LabelShiftMean {
                removed,
                alpha,
                mean_target_risk: v.iter().sum::<f64>() / v.len() as f64,
            }
        })
        .collect();
    let manifest = RunManifest::new(
        "replicate labelshift",
        json!({
            "base": base_params,
            "removals": removals,
            "alphas": alphas,
            "seeds": (first_seed..first_seed + a.seeds).collect::<Vec<_>>(),
            "n": a.n,
            "train_config": TrainConfig { max_iters: a.iters, ..TrainConfig::new(first_seed) },
        }),
    );
    let mut out = OutDir::new(&a.out, manifest)?;
    out.put("labelshift.csv", &csv_bytes(&rows)?)?;
    out.put("labelshift_means.csv", &csv_bytes(&means)?)?;
    out.put(
        "summary.json",
        &to_json(SUMMARY_SCHEMA, &json!({"scenario": "labelshift", "mean_target_risk": means}))?,
    )?;
    out.finish()
}

#[derive(Serialize)]
struct ModelFile<'a> {
    #[serde(flatten)]
    model: &'a TrainedModel,
    config: &'a TrainConfig,
}

pub fn train(a: TrainArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new("train", json!({}));
    let source = load_samples(&a.source, DomainTag::Source, &mut manifest)?;
    source.require_labels()?;
    let target = load_samples(&a.target, DomainTag::Target, &mut manifest)?.without_labels();
    same_dim(source.dim(), target.dim())?;
    let config = TrainConfig {
        alpha: a.alpha,
        penalty: match a.penalty {
            PenaltyKind::Mmd => Penalty::Mmd,
            PenaltyKind::Hinge => Penalty::HingeSupport,
        },
        kernel: Kernel::gaussian(a.kernel_sigma)?,
        eps: Epsilon::new(a.eps)?,
        learning_rate: a.learning_rate,
        max_iters: a.iters,
        init_scale: a.init_scale,
        output_dim: a.output_dim,
        ..TrainConfig::new(a.seed)
    };
    config.validate()?;
    let tune_set = a
        .tune_on_target
        .as_deref()
        .map(|p| load_samples(p, DomainTag::Target, &mut manifest))
        .transpose()?;
    manifest.config = json!(config);
    let model = fit(&source, &target, &config)?;
    finite("final objective", model.final_objective().unwrap_or(0.0))?;
    let mut out = OutDir::new(&a.out, manifest)?;
    let save = |out: &mut OutDir, stem: &str, m: &TrainedModel| -> CliResult<()> {
        out.put(&format!("{stem}.json"), &to_json(MODEL_SCHEMA, &ModelFile { model: m, config: &config })?)?;
        let mut trace = Vec::new();
        write_trace_csv(&mut trace, &m.objective_trace)?;
        out.put(&format!("{stem}_trace.csv"), &trace)?;
        Ok(())
    };
    save(&mut out, "model", &model)?;
    if let Some(labeled) = tune_set {
        same_dim(source.dim(), labeled.dim())?;
        let tuned = tune_on_target(&model, &labeled, &config)?;
        save(&mut out, "tuned_model", &tuned)?;
    }
    out.finish()
}

#[derive(Serialize)]
struct Evaluation {
    exact_source_risk: Option<f64>,
    exact_target_risk: Option<f64>,
    empirical_risk: Option<f64>,
    n_samples: Option<usize>,
    manifest: RunManifest,
}

/// Zero-one risks of a model.
pub fn evaluate(a: EvaluateArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new("evaluate", json!({"loss": Loss::ZeroOne}));
    let h = read_hypothesis(&a.model, &mut manifest)?;
    let mut report = Evaluation {
        exact_source_risk: None,
        exact_target_risk: None,
        empirical_risk: None,
        n_samples: None,
        manifest: RunManifest::new("evaluate", json!({})),
    };
    if let Some(path) = &a.problem {
        let p = read_problem(path, &mut manifest)?;
        same_dim(h.input_dim(), p.dim())?;
        let r = |which| hypotheses::risk(&h, &p, which, RiskMode::Exact, &Loss::ZeroOne);
        report.exact_source_risk = Some(r(DomainTag::Source)?);
        report.exact_target_risk = Some(r(DomainTag::Target)?);
    }
    if let Some(path) = &a.samples {
        // The domain tag only matters for files carrying a domain column.
        let bytes = read_bytes(path)?;
        let s = SampleSet::read_csv(bytes.as_slice(), DomainTag::Target)
            .or_else(|_| SampleSet::read_csv(bytes.as_slice(), DomainTag::Source))
            .map_err(|e| CliError::in_file(path, e))?;
        manifest.input(path, &bytes);
        same_dim(h.input_dim(), s.dim())?;
        report.empirical_risk = Some(hypotheses::empirical_risk(&h, &s, &Loss::ZeroOne)?);
        report.n_samples = Some(s.len());
    }
    report.manifest = manifest;
    emit(a.out.as_deref(), &to_json(EVALUATE_SCHEMA, &report)?)
}

pub fn generate(a: GenerateArgs) -> CliResult<()> {
    let problem = match a.problem {
        ProblemKind::Example1 => make_example1(),
        ProblemKind::OverlapA => make_overlap_pair(&OverlapParams::default())?.0,
        ProblemKind::OverlapB => make_overlap_pair(&OverlapParams::default())?.1,
        ProblemKind::Clusters => make_cluster_base(&ClusterParams::default())?,
        ProblemKind::Labelshift => make_label_shift(
            &make_cluster_base(&ClusterParams::default())?,
            &ClassShift::Remove(a.remove.clone()),
        )?,
        ProblemKind::RandomGrid => random_grid_problem(a.grid_seed, &RandomGridParams::default())?,
    };
    let n_target = a.n_target.unwrap_or(a.n);
    let source = problem.sample_labeled(DomainTag::Source, a.n, a.seed);
    let target_labeled = problem.sample_labeled(DomainTag::Target, n_target, a.seed);
    let manifest = RunManifest::new(
        "generate",
        json!({"problem": problem.descriptor, "seed": a.seed, "n_source": a.n, "n_target": n_target}),
    );
    let mut out = OutDir::new(&a.out, manifest)?;
    out.put("source.csv", &samples_csv(&source)?)?;
    out.put("target.csv", &samples_csv(&target_labeled.without_labels())?)?;
    out.put("target_labeled.csv", &samples_csv(&target_labeled)?)?;
    out.put("problem.json", &to_json(PROBLEM_SCHEMA, &problem)?)?;
    out.finish()
}

pub fn check_manifest(path: &Path, base: &Path) -> CliResult<()> {
    let bytes = read_bytes(path)?;
    let mut value: serde_json::Value =
        serde_json::from_slice(&bytes).map_err(|e| CliError::in_file(path, e.into()))?;
    if let Some(inner) = value.get_mut("manifest") {
        value = inner.take();
    }
    let manifest: RunManifest = serde_json::from_value(value).map_err(|e| CliError::in_file(path, e.into()))?;
    let n = manifest.verify(base)?;
    println!("ok: {n} digests match");
    Ok(())
}
