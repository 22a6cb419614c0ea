//! Support sufficiency divergence and its relatives: the kernel (IPM) form,
//! the hinge relaxation, and the MMD baseline.
//!
//! Everything follows the source-first convention `d(source ‖ target)`: the
//! indicator δ thresholds the density of the first argument,
//! δ(x) = 1[q(x) ≥ p(x) and p(x) ≤ ε].

mod kernel;
mod population;

use serde::{Deserialize, Serialize};

pub use kernel::{Kernel, KernelFamily};
pub(crate) use kernel::weighted_kernel_sum;

use crate::densities::{nearest_rank, Density, DiscreteDensity, EstimatorConfig, SampleSet};
use crate::numeric::{mean, pairwise_sum};
use crate::{Error, Result};
use kernel::check_pair;
use population::{atom_kernel_expectation, grid_kernel_expectation};

/// Density level ε > 0 below which the source is considered to lack support.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Epsilon(f64);

impl Epsilon {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value.is_finite() {
            Ok(Self(value))
        } else {
            Err(Error::InvalidParameter(format!("epsilon must be positive and finite, got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Epsilon {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Epsilon> for f64 {
    fn from(e: Epsilon) -> f64 {
        e.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    SupportSufficiency,
    MmdSquared,
    KernelSupport,
    HingeSupport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Exact summation or integration over population densities.
    Exact,
    /// Plug-in densities averaged over samples.
    PlugIn,
    /// Kernel double sums including self-pairs.
    VStatistic,
    /// Kernel double sums excluding self-pairs.
    UStatistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MmdVariant {
    U,
    V,
}

/// A divergence value with the settings that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceEstimate {
    pub method: Method,
    pub value: f64,
    pub epsilon: Option<Epsilon>,
    pub kernel: Option<Kernel>,
    pub variant: Variant,
    pub n_source: Option<usize>,
    pub n_target: Option<usize>,
}

impl DivergenceEstimate {
    fn exact(method: Method, value: f64, epsilon: Option<Epsilon>, kernel: Option<Kernel>) -> Self {
        Self {
            method,
            value,
            epsilon,
            kernel,
            variant: Variant::Exact,
            n_source: None,
            n_target: None,
        }
    }
}

pub fn delta_indicator(p_at_x: f64, q_at_x: f64, eps: Epsilon) -> bool {
    q_at_x >= p_at_x && p_at_x <= eps.value()
}

/// Cell (or state) density values and masses of a matched pair.
struct Paired<'a> {
    p: &'a [f64],
    q: &'a [f64],
    p_mass: Vec<f64>,
    q_mass: Vec<f64>,
}

fn pair_up<'a>(p: &'a Density, q: &'a Density) -> Result<Paired<'a>> {
    match (p, q) {
        (Density::Discrete(a), Density::Discrete(b)) => {
            if !a.same_states(b) {
                return Err(Error::MismatchedSupport("discrete densities have different states".into()));
            }
            Ok(Paired {
                p: a.probabilities(),
                q: b.probabilities(),
                p_mass: a.probabilities().to_vec(),
                q_mass: b.probabilities().to_vec(),
            })
        }
        (Density::Grid(a), Density::Grid(b)) => {
            if !a.same_structure(b) {
                return Err(Error::MismatchedSupport("grids differ in box or resolution".into()));
            }
            Ok(Paired {
                p: a.values(),
                q: b.values(),
                p_mass: a.masses(),
                q_mass: b.masses(),
            })
        }
        (Density::Kde(_), _) | (_, Density::Kde(_)) => Err(Error::Unsupported(
            "exact divergences need discrete or grid densities".into(),
        )),
        _ => Err(Error::MismatchedSupport("densities are of different kinds".into())),
    }
}

/// d_supp(p ‖ q) = E_q[δ] − E_p[δ] by exact summation over states or cells.
pub fn support_divergence_exact(p: &Density, q: &Density, eps: Epsilon) -> Result<DivergenceEstimate> {
    let pr = pair_up(p, q)?;
    let terms: Vec<f64> = (0..pr.p.len())
        .map(|i| {
            if delta_indicator(pr.p[i], pr.q[i], eps) {
                pr.q_mass[i] - pr.p_mass[i]
            } else {
                0.0
            }
        })
        .collect();
    // Masses that sum to 1 + ulp would otherwise leak past the range.
    let value = pairwise_sum(&terms).clamp(0.0, 1.0);
    Ok(DivergenceEstimate::exact(Method::SupportSufficiency, value, Some(eps), None))
}

/// Averages δ_{p̂,q̂} over target minus source samples for given plug-in
/// densities, clipped to [0, 1].
pub fn support_divergence_plug_in(
    source: &SampleSet,
    target: &SampleSet,
    p_hat: &Density,
    q_hat: &Density,
    eps: Epsilon,
) -> Result<DivergenceEstimate> {
    check_pair(source, target)?;
    let delta_mean = |s: &SampleSet| -> Result<f64> {
        let p = p_hat.evaluate_samples(s)?;
        let q = q_hat.evaluate_samples(s)?;
        let d: Vec<f64> = p
            .iter()
            .zip(&q)
            .map(|(p, q)| f64::from(u8::from(delta_indicator(*p, *q, eps))))
            .collect();
        Ok(mean(&d))
    };
    let value = (delta_mean(target)? - delta_mean(source)?).clamp(0.0, 1.0);
    Ok(DivergenceEstimate {
        method: Method::SupportSufficiency,
        value,
        epsilon: Some(eps),
        kernel: None,
        variant: Variant::PlugIn,
        n_source: Some(source.len()),
        n_target: Some(target.len()),
    })
}

/// Fits plug-in densities with `estimator` and averages δ over the samples.
pub fn support_divergence_empirical(
    source: &SampleSet,
    target: &SampleSet,
    eps: Epsilon,
    estimator: &EstimatorConfig,
) -> Result<DivergenceEstimate> {
    check_pair(source, target)?;
    let p_hat = estimator.fit(source, &[target])?;
    let q_hat = estimator.fit(target, &[source])?;
    support_divergence_plug_in(source, target, &p_hat, &q_hat, eps)
}

pub fn mmd_squared(a: &SampleSet, b: &SampleSet, kernel: &Kernel, variant: MmdVariant) -> Result<DivergenceEstimate> {
    check_pair(a, b)?;
    let (n, m) = (a.len() as f64, b.len() as f64);
    let value = match variant {
        MmdVariant::V => {
            weighted_kernel_sum(a, None, a, None, kernel, false) / (n * n)
                - 2.0 * weighted_kernel_sum(a, None, b, None, kernel, false) / (n * m)
                + weighted_kernel_sum(b, None, b, None, kernel, false) / (m * m)
        }
        MmdVariant::U => {
            let short = a.len().min(b.len());
            if short < 2 {
                return Err(Error::InsufficientSamples { needed: 2, got: short });
            }
            weighted_kernel_sum(a, None, a, None, kernel, true) / (n * (n - 1.0))
                - 2.0 * weighted_kernel_sum(a, None, b, None, kernel, false) / (n * m)
                + weighted_kernel_sum(b, None, b, None, kernel, true) / (m * (m - 1.0))
        }
    };
    Ok(DivergenceEstimate {
        method: Method::MmdSquared,
        value,
        epsilon: None,
        kernel: Some(*kernel),
        variant: match variant {
            MmdVariant::U => Variant::UStatistic,
            MmdVariant::V => Variant::VStatistic,
        },
        n_source: Some(a.len()),
        n_target: Some(b.len()),
    })
}

/// V-statistic of E_pp[δδ'k] − 2 E_pq[δδ'k] + E_qq[δδ'k] with
/// δ(x) = 1[p̂(x) ≤ ε] from the plug-in source density.
pub fn kernel_support_divergence(
    source: &SampleSet,
    target: &SampleSet,
    plug_in_source_density: &Density,
    eps: Epsilon,
    kernel: &Kernel,
) -> Result<DivergenceEstimate> {
    check_pair(source, target)?;
    let mask = |s: &SampleSet| -> Result<Vec<f64>> {
        Ok(plug_in_source_density
            .evaluate_samples(s)?
            .into_iter()
            .map(|p| if p <= eps.value() { 1.0 } else { 0.0 })
            .collect())
    };
    let (ds, dt) = (mask(source)?, mask(target)?);
    let (n, m) = (source.len() as f64, target.len() as f64);
    let value = weighted_kernel_sum(source, Some(&ds), source, Some(&ds), kernel, false) / (n * n)
        - 2.0 * weighted_kernel_sum(source, Some(&ds), target, Some(&dt), kernel, false) / (n * m)
        + weighted_kernel_sum(target, Some(&dt), target, Some(&dt), kernel, false) / (m * m);
    Ok(DivergenceEstimate {
        method: Method::KernelSupport,
        value,
        epsilon: Some(eps),
        kernel: Some(*kernel),
        variant: Variant::VStatistic,
        n_source: Some(source.len()),
        n_target: Some(target.len()),
    })
}

/// ‖μ_u − μ_v‖² in the kernel's feature space for (possibly masked) cell or
/// state weights.
fn population_mmd(p: &Density, q: &Density, u: &[f64], v: &[f64], kernel: &Kernel) -> Result<f64> {
    let e = |a: &[f64], b: &[f64]| -> Result<f64> {
        match p {
            Density::Grid(g) => grid_kernel_expectation(g, a, b, kernel),
            Density::Discrete(d) => Ok(atom_kernel_expectation(d, a, b, kernel)),
            Density::Kde(_) => unreachable!("pair_up rejects KDE densities"),
        }
    };
    pair_up(p, q)?;
    Ok(e(u, u)? - 2.0 * e(u, v)? + e(v, v)?)
}

fn weights(d: &Density) -> Vec<f64> {
    match d {
        Density::Grid(g) => g.values().to_vec(),
        Density::Discrete(d) => d.probabilities().to_vec(),
        Density::Kde(_) => Vec::new(),
    }
}

/// Population MMD² between two grid (or located discrete) densities, with
/// kernel integrals in closed form.
pub fn mmd_squared_exact(p: &Density, q: &Density, kernel: &Kernel) -> Result<DivergenceEstimate> {
    pair_up(p, q)?;
    let value = population_mmd(p, q, &weights(p), &weights(q), kernel)?;
    Ok(DivergenceEstimate::exact(Method::MmdSquared, value, None, Some(*kernel)))
}

/// Population kernel support divergence with δ(x) = 1[p(x) ≤ ε].
pub fn kernel_support_divergence_exact(
    p: &Density,
    q: &Density,
    eps: Epsilon,
    kernel: &Kernel,
) -> Result<DivergenceEstimate> {
    let pr = pair_up(p, q)?;
    let mask: Vec<bool> = pr.p.iter().map(|v| *v <= eps.value()).collect();
    let u: Vec<f64> = pr.p.iter().zip(&mask).map(|(v, m)| if *m { *v } else { 0.0 }).collect();
    let v: Vec<f64> = pr.q.iter().zip(&mask).map(|(v, m)| if *m { *v } else { 0.0 }).collect();
    let value = population_mmd(p, q, &u, &v, kernel)?;
    Ok(DivergenceEstimate::exact(Method::KernelSupport, value, Some(eps), Some(*kernel)))
}

/// a / b with a / 0 = +∞ for every a, including 0 / 0.
fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        f64::INFINITY
    } else {
        a / b
    }
}

/// Hinge relaxation
/// E_q[max(0, 2 − p/ε) max(0, 2 − p/q)] − E_p[max(0, 1 − p/ε) max(0, 1 − p/q)].
pub fn hinge_support_divergence(p: &Density, q: &Density, eps: Epsilon) -> Result<DivergenceEstimate> {
    let pr = pair_up(p, q)?;
    let e = eps.value();
    let terms: Vec<f64> = (0..pr.p.len())
        .map(|i| {
            let (pv, qv) = (pr.p[i], pr.q[i]);
            let upper = hinge_upper(pv, qv, e);
            let lower = hinge_lower(pv, qv, e);
            let a = if upper == 0.0 { 0.0 } else { pr.q_mass[i] * upper };
            let b = if lower == 0.0 { 0.0 } else { pr.p_mass[i] * lower };
            a - b
        })
        .collect();
    Ok(DivergenceEstimate::exact(Method::HingeSupport, pairwise_sum(&terms), Some(eps), None))
}

fn hinge_upper(p: f64, q: f64, e: f64) -> f64 {
    (2.0 - p / e).max(0.0) * (2.0 - ratio(p, q)).max(0.0)
}

fn hinge_lower(p: f64, q: f64, e: f64) -> f64 {
    (1.0 - p / e).max(0.0) * (1.0 - ratio(p, q)).max(0.0)
}

/// Hinge relaxation with plug-in densities: the upper hinge averaged over
/// target samples minus the lower hinge averaged over source samples.
pub fn hinge_support_divergence_plug_in(
    source: &SampleSet,
    target: &SampleSet,
    p_hat: &Density,
    q_hat: &Density,
    eps: Epsilon,
) -> Result<DivergenceEstimate> {
    check_pair(source, target)?;
    let e = eps.value();
    let side = |s: &SampleSet, f: fn(f64, f64, f64) -> f64| -> Result<f64> {
        let p = p_hat.evaluate_samples(s)?;
        let q = q_hat.evaluate_samples(s)?;
        let v: Vec<f64> = p.iter().zip(&q).map(|(p, q)| f(*p, *q, e)).collect();
        Ok(mean(&v))
    };
    let value = side(target, hinge_upper)? - side(source, hinge_lower)?;
    Ok(DivergenceEstimate {
        method: Method::HingeSupport,
        value,
        epsilon: Some(eps),
        kernel: None,
        variant: Variant::PlugIn,
        n_source: Some(source.len()),
        n_target: Some(target.len()),
    })
}

/// Supremum over functions into [0, M] of |E_q[δ_p ℓ] − E_p[δ_p ℓ]| with
/// δ_p = 1[p ≤ ε], in closed form: M times the larger of the positive and
/// negative mass differences on {p ≤ ε}.
pub fn ipm_support_divergence_oracle(p: &DiscreteDensity, q: &DiscreteDensity, eps: Epsilon, m: f64) -> Result<f64> {
    if !p.same_states(q) {
        return Err(Error::MismatchedSupport("discrete densities have different states".into()));
    }
    if !(m > 0.0) {
        return Err(Error::InvalidParameter(format!("loss bound must be positive, got {m}")));
    }
    let (mut gain, mut loss) = (Vec::new(), Vec::new());
    for (pv, qv) in p.probabilities().iter().zip(q.probabilities()) {
        if *pv <= eps.value() {
            if qv > pv {
                gain.push(qv - pv);
            } else {
                loss.push(pv - qv);
            }
        }
    }
    Ok(m * pairwise_sum(&gain).max(pairwise_sum(&loss)))
}

/// Default ε: the 5th percentile of the source density over pooled samples.
/// Zero evaluations are ignored so that ε stays strictly positive.
pub fn default_epsilon(source_density: &Density, source: &SampleSet, target: &SampleSet) -> Result<Epsilon> {
    epsilon_from_quantile(source_density, source, target, 0.05)
}

pub fn epsilon_from_quantile(
    source_density: &Density,
    source: &SampleSet,
    target: &SampleSet,
    q: f64,
) -> Result<Epsilon> {
    let mut values = source_density.evaluate_samples(source)?;
    values.extend(source_density.evaluate_samples(target)?);
    values.retain(|v| *v > 0.0);
    if values.is_empty() {
        return Err(Error::InvalidParameter(
            "source density is zero at every sample; give epsilon explicitly".into(),
        ));
    }
    Epsilon::new(nearest_rank(values, q)?)
}
