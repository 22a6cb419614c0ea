//! Target-risk bounds that separate observable terms (weighted source risk,
//! support divergence in Z) from the unobservable excess target information
//! loss η.
//!
//! Exact mode pushes a synthetic problem through an axis-aligned
//! representation and sums over Z cells. Sample mode applies the
//! representation to samples and plugs in fitted densities.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::densities::{Density, DomainTag, EstimatorConfig, SampleSet};
use crate::divergence::{
    kernel_support_divergence, kernel_support_divergence_exact, mmd_squared_exact, support_divergence_exact,
    support_divergence_plug_in, Epsilon, Kernel,
};
use crate::hypotheses::geometry::cell_fraction;
use crate::hypotheses::{
    push_forward, risk, theorem1_bound, HDeltaHConfig, Hypothesis, HypothesisClass, Loss, Predictor, PushForward,
    Representation, RiskMode,
};
use crate::numeric::pairwise_sum;
use crate::synthetic::SyntheticProblem;
use crate::weighting::{truncated_weights, weight_from_values, weighted_risk, WeightConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaReport {
    /// E_{p_t(x)}[L(f, p_t(y|z)) − L(f, p(y|x))].
    pub delta_target_mean: f64,
    /// E_{p_t(x)}[L(f, p_s(y|z)) − L(f, p(y|x))].
    pub delta_source_mean: f64,
    pub eta: f64,
}

/// Exact Z-space view of a problem under a fixed hypothesis.
struct ZView {
    pf: PushForward,
    /// Fraction of each Z cell (or the prediction at each Z atom) mapped to 1.
    positive: Vec<f64>,
}

impl ZView {
    fn new(problem: &SyntheticProblem, representation: &Representation, predictor: &Predictor) -> Result<Self> {
        Hypothesis::new(representation.clone(), predictor.clone())?;
        let pf = push_forward(problem, representation)?;
        let f = Hypothesis::new(Representation::identity(representation.output_dim()), predictor.clone())?;
        let positive = match &pf.source {
            Density::Grid(g) => {
                let region = f.positive_region();
                (0..g.n_cells())
                    .map(|c| {
                        let (lo, hi) = g.cell_bounds(c);
                        cell_fraction(&[&region], &lo, &hi)
                    })
                    .collect::<Result<_>>()?
            }
            Density::Discrete(d) => (0..d.len()).map(|i| f64::from(f.predict(&d.location(i)))).collect(),
            Density::Kde(_) => unreachable!("push-forward densities are grids or atoms"),
        };
        Ok(Self { pf, positive })
    }

    fn values(d: &Density) -> Vec<f64> {
        match d {
            Density::Grid(g) => g.values().to_vec(),
            Density::Discrete(d) => d.probabilities().to_vec(),
            Density::Kde(_) => unreachable!("push-forward densities are grids or atoms"),
        }
    }

    fn masses(d: &Density) -> Vec<f64> {
        match d {
            Density::Grid(g) => g.masses(),
            Density::Discrete(d) => d.probabilities().to_vec(),
            Density::Kde(_) => unreachable!("push-forward densities are grids or atoms"),
        }
    }

    /// E_{p_s(z, y)}[w(z) ℓ(f(z), y)].
    fn weighted_term(&self, loss: &Loss, eps: Epsilon) -> f64 {
        let (ps, pt) = (Self::values(&self.pf.source), Self::values(&self.pf.target));
        let ms = Self::masses(&self.pf.source);
        let terms: Vec<f64> = (0..ms.len())
            .filter(|z| ms[*z] > 0.0)
            .map(|z| {
                ms[z] * weight_from_values(ps[z], pt[z], eps) * loss.mixed(self.positive[z], self.pf.source_posterior[z])
            })
            .collect();
        pairwise_sum(&terms)
    }
}

fn eta_from_view(view: &ZView, problem: &SyntheticProblem, loss: &Loss) -> Result<EtaReport> {
    let target = problem.density(DomainTag::Target);
    let mt = match &target {
        Density::Grid(g) => g.masses(),
        Density::Discrete(d) => d.probabilities().to_vec(),
        Density::Kde(_) => return Err(Error::Unsupported("problems are grids or atoms".into())),
    };
    let posterior = problem.posterior_values();
    let (mut dt, mut ds) = (Vec::new(), Vec::new());
    for (c, &z) in view.pf.image_of.iter().enumerate() {
        if mt[c] == 0.0 {
            continue;
        }
        let a = view.positive[z];
        let truth = loss.mixed(a, posterior[c]);
        dt.push(mt[c] * (loss.mixed(a, view.pf.target_posterior[z]) - truth));
        ds.push(mt[c] * (loss.mixed(a, view.pf.source_posterior[z]) - truth));
    }
    let (delta_target_mean, delta_source_mean) = (pairwise_sum(&dt), pairwise_sum(&ds));
    Ok(EtaReport {
        delta_target_mean,
        delta_source_mean,
        eta: delta_target_mean - delta_source_mean,
    })
}

/// Excess target information loss of f ∘ φ on a problem with a known
/// posterior. Invertible representations lose nothing and report zeros
/// without integration.
pub fn eta_excess_loss(
    problem: &SyntheticProblem,
    representation: &Representation,
    predictor: &Predictor,
    loss: &Loss,
) -> Result<EtaReport> {
    loss.validate()?;
    representation.validate()?;
    if representation.input_dim() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            found: representation.input_dim(),
        });
    }
    if representation.is_invertible() {
        return Ok(EtaReport {
            delta_target_mean: 0.0,
            delta_source_mean: 0.0,
            eta: 0.0,
        });
    }
    let view = ZView::new(problem, representation, predictor)?;
    eta_from_view(&view, problem, loss)
}

/// E_{p_t(z) p_s(y|z)}[ℓ(f(z), y)], the first term of R_t = this + η.
pub fn source_posterior_target_risk(
    problem: &SyntheticProblem,
    representation: &Representation,
    predictor: &Predictor,
    loss: &Loss,
) -> Result<f64> {
    loss.validate()?;
    let view = ZView::new(problem, representation, predictor)?;
    let mt = ZView::masses(&view.pf.target);
    let terms: Vec<f64> = (0..mt.len())
        .filter(|z| mt[*z] > 0.0)
        .map(|z| mt[z] * loss.mixed(view.positive[z], view.pf.source_posterior[z]))
        .collect();
    Ok(pairwise_sum(&terms))
}

/// Where the densities over Z come from.
#[derive(Debug, Clone, Copy)]
pub enum BoundInput<'a> {
    /// Exact push-forward of a synthetic problem.
    Exact(&'a SyntheticProblem),
    /// Labeled source and unlabeled target samples in X; densities over Z are
    /// fitted to the mapped samples.
    Samples {
        source: &'a SampleSet,
        target: &'a SampleSet,
        estimator: &'a EstimatorConfig,
    },
}

#[derive(Debug, Clone, Copy)]
pub enum EtaSource<'a> {
    /// Integrate η from a problem with a known posterior.
    Oracle(&'a SyntheticProblem),
    Unobservable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    SupportSufficiency,
    KernelSupport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportTermKind {
    /// M · d_supp(p_s(z) ‖ p_t(z)).
    MaxLoss,
    /// Λ · sqrt of the kernel support divergence.
    IpmKernel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marker {
    Unobservable,
}

/// Serializes as a number or the string "unobservable".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EtaTerm {
    Value(f64),
    Marker(Marker),
}

impl EtaTerm {
    pub fn value(self) -> Option<f64> {
        match self {
            EtaTerm::Value(v) => Some(v),
            EtaTerm::Marker(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Total {
    Full(f64),
    /// Sum of the observable terms only; the bound itself is at least this.
    ObservableOnly(f64),
}

impl Total {
    pub fn value(self) -> f64 {
        match self {
            Total::Full(v) | Total::ObservableOnly(v) => v,
        }
    }

    pub fn is_full(self) -> bool {
        matches!(self, Total::Full(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub theorem: Theorem,
    pub weighted_risk_term: f64,
    pub support_term: f64,
    pub support_term_kind: SupportTermKind,
    pub eta_term: EtaTerm,
    pub total: Total,
    pub epsilon: Epsilon,
    pub m: f64,
    /// RKHS norm bound scaling the kernel support term.
    pub lambda: Option<f64>,
    pub kernel: Option<Kernel>,
}

enum Support<'a> {
    MaxLoss,
    Kernel { kernel: &'a Kernel, lambda: f64 },
}

fn resolve_eta(eta: EtaSource, representation: &Representation, predictor: &Predictor, loss: &Loss) -> Result<EtaTerm> {
    match eta {
        EtaSource::Unobservable => Ok(EtaTerm::Marker(Marker::Unobservable)),
        EtaSource::Oracle(problem) => match eta_excess_loss(problem, representation, predictor, loss) {
            Ok(r) => Ok(EtaTerm::Value(r.eta)),
            Err(Error::Unsupported(_)) => Ok(EtaTerm::Marker(Marker::Unobservable)),
            Err(e) => Err(e),
        },
    }
}

fn bound(
    input: BoundInput,
    representation: &Representation,
    predictor: &Predictor,
    loss: &Loss,
    eps: Epsilon,
    eta: EtaSource,
    support: Support,
) -> Result<BoundReport> {
    loss.validate()?;
    let m = loss.bound();
    let (weighted_risk_term, raw_support) = match input {
        BoundInput::Exact(problem) => {
            let view = ZView::new(problem, representation, predictor)?;
            let (ps, pt) = (&view.pf.source, &view.pf.target);
            let raw = match &support {
                Support::MaxLoss => support_divergence_exact(ps, pt, eps)?.value,
                Support::Kernel { kernel, .. } => kernel_support_divergence_exact(ps, pt, eps, kernel)?.value,
            };
            (view.weighted_term(loss, eps), raw)
        }
        BoundInput::Samples {
            source,
            target,
            estimator,
        } => {
            source.require_labels()?;
            let zs = representation.apply_samples(source)?;
            let zt = representation.apply_samples(target)?;
            let p_hat = estimator.fit(&zs, &[&zt])?;
            let q_hat = estimator.fit(&zt, &[&zs])?;
            let config = WeightConfig::new(eps, p_hat.clone(), q_hat.clone())?;
            let w = truncated_weights(&config, &zs)?;
            let f = Hypothesis::new(Representation::identity(representation.output_dim()), predictor.clone())?;
            let wr = weighted_risk(&zs, &w, &f, loss)?;
            let raw = match &support {
                Support::MaxLoss => support_divergence_plug_in(&zs, &zt, &p_hat, &q_hat, eps)?.value,
                Support::Kernel { kernel, .. } => kernel_support_divergence(&zs, &zt, &p_hat, eps, kernel)?.value,
            };
            (wr.risk, raw)
        }
    };
    let (theorem, support_term, support_term_kind, lambda, kernel) = match support {
        Support::MaxLoss => (Theorem::SupportSufficiency, m * raw_support, SupportTermKind::MaxLoss, None, None),
        Support::Kernel { kernel, lambda } => (
            Theorem::KernelSupport,
            lambda * raw_support.max(0.0).sqrt(),
            SupportTermKind::IpmKernel,
            Some(lambda),
            Some(*kernel),
        ),
    };
    let eta_term = resolve_eta(eta, representation, predictor, loss)?;
    let observable = weighted_risk_term + support_term;
    if !observable.is_finite() {
        return Err(Error::NonFinite("observable bound terms".into()));
    }
    let total = match eta_term {
        EtaTerm::Value(v) => Total::Full(observable + v),
        EtaTerm::Marker(_) => Total::ObservableOnly(observable),
    };
    Ok(BoundReport {
        theorem,
        weighted_risk_term,
        support_term,
        support_term_kind,
        eta_term,
        total,
        epsilon: eps,
        m,
        lambda,
        kernel,
    })
}

/// Weighted source risk + M · d_supp(p_s(z) ‖ p_t(z)) + η.
pub fn theorem2_bound(
    input: BoundInput,
    representation: &Representation,
    predictor: &Predictor,
    loss: &Loss,
    eps: Epsilon,
    eta: EtaSource,
) -> Result<BoundReport> {
    bound(input, representation, predictor, loss, eps, eta, Support::MaxLoss)
}

/// As [`theorem2_bound`] with the support term replaced by
/// Λ · sqrt(kernel support divergence). `lambda` defaults to M.
#[allow(clippy::too_many_arguments)]
pub fn theorem3_bound(
    input: BoundInput,
    representation: &Representation,
    predictor: &Predictor,
    loss: &Loss,
    eps: Epsilon,
    kernel: &Kernel,
    lambda: Option<f64>,
    eta: EtaSource,
) -> Result<BoundReport> {
    let lambda = lambda.unwrap_or_else(|| loss.bound());
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("RKHS norm bound must be positive, got {lambda}")));
    }
    bound(input, representation, predictor, loss, eps, eta, Support::Kernel { kernel, lambda })
}

/// Column order of [`write_comparison_csv`].
pub const COMPARISON_COLUMNS: [&str; 12] = [
    "hypothesis",
    "epsilon",
    "sigma",
    "exact_target_risk",
    "source_risk",
    "theorem1_total",
    "theorem2_total",
    "theorem3_total",
    "mmd_squared",
    "d_supp",
    "eta",
    "invariance_objective",
];

/// One hypothesis at one (ε, σ). Divergences are measured in the
/// hypothesis's Z space; `invariance_objective` is source risk + MMD² in Z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub hypothesis: String,
    pub epsilon: f64,
    pub sigma: f64,
    pub exact_target_risk: f64,
    pub source_risk: f64,
    pub theorem1_total: f64,
    pub theorem2_total: f64,
    pub theorem3_total: f64,
    pub mmd_squared: f64,
    pub d_supp: f64,
    pub eta: f64,
    pub invariance_objective: f64,
}

/// Named hypotheses compared on an exact problem under zero-one loss, one row
/// per (hypothesis, ε, kernel) in input order. The classical bound uses
/// `class` extended by each hypothesis.
pub fn compare_bounds(
    problem: &SyntheticProblem,
    hypotheses: &[(String, Hypothesis)],
    class: &HypothesisClass,
    eps_sweep: &[Epsilon],
    kernels: &[Kernel],
    config: &HDeltaHConfig,
) -> Result<Vec<ComparisonRow>> {
    let loss = Loss::ZeroOne;
    let mut rows = Vec::new();
    for (name, h) in hypotheses {
        let r_t = risk(h, problem, DomainTag::Target, RiskMode::Exact, &loss)?;
        let r_s = risk(h, problem, DomainTag::Source, RiskMode::Exact, &loss)?;
        let t1 = theorem1_bound(h, class, problem, config)?;
        let eta = eta_excess_loss(problem, &h.representation, &h.predictor, &loss)?.eta;
        let pf = push_forward(problem, &h.representation)?;
        for eps in eps_sweep {
            let t2 = theorem2_bound(
                BoundInput::Exact(problem),
                &h.representation,
                &h.predictor,
                &loss,
                *eps,
                EtaSource::Oracle(problem),
            )?;
            let d = support_divergence_exact(&pf.source, &pf.target, *eps)?.value;
            for kernel in kernels {
                let t3 = theorem3_bound(
                    BoundInput::Exact(problem),
                    &h.representation,
                    &h.predictor,
                    &loss,
                    *eps,
                    kernel,
                    None,
                    EtaSource::Oracle(problem),
                )?;
                let mmd = mmd_squared_exact(&pf.source, &pf.target, kernel)?.value;
                rows.push(ComparisonRow {
                    hypothesis: name.clone(),
                    epsilon: eps.value(),
                    sigma: kernel.sigma,
                    exact_target_risk: r_t,
                    source_risk: r_s,
                    theorem1_total: t1.total,
                    theorem2_total: t2.total.value(),
                    theorem3_total: t3.total.value(),
                    mmd_squared: mmd,
                    d_supp: d,
                    eta,
                    invariance_objective: r_s + mmd,
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_comparison_csv<W: Write>(writer: W, rows: &[ComparisonRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    w.write_record(COMPARISON_COLUMNS)?;
    for r in rows {
        let nums = [
            r.epsilon,
            r.sigma,
            r.exact_target_risk,
            r.source_risk,
            r.theorem1_total,
            r.theorem2_total,
            r.theorem3_total,
            r.mmd_squared,
            r.d_supp,
            r.eta,
            r.invariance_objective,
        ];
        let mut rec = vec![r.hypothesis.clone()];
        rec.extend(nums.iter().map(|v| format!("{v:?}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests;
