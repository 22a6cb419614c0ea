//! Brute-force reference computations on small instances. Each routine works
//! straight from the definitions with its own loops and sequential sums; none
//! calls into the estimators it is used to check.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::densities::DiscreteDensity;
use crate::hypotheses::{Orientation, Predictor, Representation};
use crate::synthetic::{ProblemSpace, SyntheticProblem};
use crate::{Error, Result};

/// Largest state space handled by the oracles.
pub const MAX_STATES: usize = 64;

/// Tolerance used for the equality flags of [`oracle_lemma1`].
pub const EQUALITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteInstance {
    pub p: DiscreteDensity,
    pub q: DiscreteDensity,
    /// Loss per state, in [0, m].
    pub loss: Vec<f64>,
    pub m: f64,
    pub posterior: Option<Vec<f64>>,
}

impl DiscreteInstance {
    pub fn new(p: DiscreteDensity, q: DiscreteDensity, loss: Vec<f64>, m: f64) -> Result<Self> {
        let inst = Self {
            p,
            q,
            loss,
            m,
            posterior: None,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.p.len();
        if k > MAX_STATES {
            return Err(Error::InvalidParameter(format!("at most {MAX_STATES} states, got {k}")));
        }
        if self.q.len() != k || self.loss.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: if self.q.len() != k { self.q.len() } else { self.loss.len() },
            });
        }
        if !(self.m > 0.0) {
            return Err(Error::InvalidParameter("loss bound must be positive".into()));
        }
        if let Some(v) = self.loss.iter().find(|v| !(**v >= 0.0 && **v <= self.m)) {
            return Err(Error::LossOutOfRange { value: *v, bound: self.m });
        }
        if let Some(post) = &self.posterior {
            if post.len() != k || post.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidParameter("posterior must have K entries in [0, 1]".into()));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }
}

/// Random probability vector with roughly `zero_fraction` exact zeros.
fn random_probabilities<R: Rng + ?Sized>(rng: &mut R, k: usize, zero_fraction: f64) -> Vec<f64> {
    let mut w: Vec<f64> = (0..k)
        .map(|_| if rng.random_bool(zero_fraction) { 0.0 } else { rng.random::<f64>() })
        .collect();
    if w.iter().all(|v| *v == 0.0) {
        let i = rng.random_range(0..k);
        w[i] = 1.0;
    }
    let mut total = 0.0;
    for v in &w {
        total += v;
    }
    w.iter().map(|v| v / total).collect()
}

/// Random instance over `k` states with about a quarter of the probabilities
/// set to exactly zero in each density.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, k: usize, m: f64) -> Result<DiscreteInstance> {
    if k == 0 || k > MAX_STATES {
        return Err(Error::InvalidParameter(format!("state count must be in 1..={MAX_STATES}")));
    }
    let p = DiscreteDensity::new(random_probabilities(rng, k, 0.25))?;
    let q = DiscreteDensity::new(random_probabilities(rng, k, 0.25))?;
    let loss = (0..k).map(|_| m * rng.random::<f64>()).collect();
    let mut inst = DiscreteInstance::new(p, q, loss, m)?;
    inst.posterior = Some((0..k).map(|_| rng.random::<f64>()).collect());
    Ok(inst)
}

/// Σ over states with q ≥ p and p ≤ ε of (q − p).
pub fn oracle_support_divergence(instance: &DiscreteInstance, eps: f64) -> f64 {
    let (p, q) = (instance.p.probabilities(), instance.q.probabilities());
    let mut total = 0.0;
    for i in 0..p.len() {
        if q[i] >= p[i] && p[i] <= eps {
            total += q[i] - p[i];
        }
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStep {
    pub description: String,
    pub left: f64,
    pub right: f64,
    /// Whether this step is an identity rather than an inequality.
    pub identity: bool,
    pub equal: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Chain {
    pub lhs: f64,
    pub rhs: f64,
    pub steps: Vec<ChainStep>,
}

impl Lemma1Chain {
    pub fn holds(&self) -> bool {
        self.steps.iter().all(|s| s.holds)
    }

    pub fn all_equal(&self) -> bool {
        self.steps.iter().all(|s| s.equal)
    }
}

/// Walks E_q[ℓ] ≤ E_p[w ℓ] + M · d_supp(p ‖ q) one algebraic step at a
/// time: split at ε, reweight the well-supported part, isolate the
/// remainder, drop its negative terms, bound ℓ by M, and widen to p ≤ ε.
pub fn oracle_lemma1(instance: &DiscreteInstance, eps: f64) -> Lemma1Chain {
    let (p, q, l, m) = (
        instance.p.probabilities(),
        instance.q.probabilities(),
        &instance.loss,
        instance.m,
    );
    let k = p.len();
    let high: Vec<bool> = p.iter().map(|v| *v >= eps).collect();
    let mut e_q = 0.0;
    let (mut q_high, mut q_low) = (0.0, 0.0);
    let (mut reweighted_high, mut p_low) = (0.0, 0.0);
    let (mut remainder, mut positive_remainder, mut bounded_remainder, mut widened) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..k {
        e_q += q[i] * l[i];
        if high[i] {
            q_high += q[i] * l[i];
            reweighted_high += p[i] * (q[i] / p[i]) * l[i];
        } else {
            q_low += q[i] * l[i];
            p_low += p[i] * l[i];
            remainder += (q[i] - p[i]) * l[i];
            if q[i] >= p[i] {
                positive_remainder += (q[i] - p[i]) * l[i];
                bounded_remainder += (q[i] - p[i]) * m;
            }
        }
        if q[i] >= p[i] && p[i] <= eps {
            widened += (q[i] - p[i]) * m;
        }
    }
    // With w = 1 below ε, E_p[w ℓ] = reweighted_high + p_low.
    let weighted = reweighted_high + p_low;
    let step = |description: &str, left: f64, right: f64, identity: bool| {
        let equal = (left - right).abs() <= EQUALITY_TOLERANCE;
        ChainStep {
            description: description.to_string(),
            left,
            right,
            identity,
            equal,
            holds: if identity { equal } else { left <= right + EQUALITY_TOLERANCE },
        }
    };
    let steps = vec![
        step("split the target expectation at p = ε", e_q, q_high + q_low, true),
        step("reweight states with p ≥ ε by q/p", q_high + q_low, reweighted_high + q_low, true),
        step("isolate the low-density remainder", reweighted_high + q_low, weighted + remainder, true),
        step("drop states where q < p", weighted + remainder, weighted + positive_remainder, false),
        step("bound the loss by M", weighted + positive_remainder, weighted + bounded_remainder, false),
        step("include states with p = ε", weighted + bounded_remainder, weighted + widened, false),
    ];
    Lemma1Chain {
        lhs: e_q,
        rhs: weighted + widened,
        steps,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaIdentity {
    /// Exact target risk of f ∘ φ under zero-one loss.
    pub target_risk: f64,
    /// E_{p_t(z) p_s(y|z)}[ℓ(f(z), y)].
    pub source_posterior_term: f64,
    pub eta: f64,
    /// source_posterior_term + eta.
    pub decomposed_sum: f64,
}

/// Fraction of the interval [lo, hi] on which the threshold predicts 1.
fn threshold_fraction(lo: f64, hi: f64, cutoff: f64, orientation: Orientation) -> f64 {
    let above = ((hi - cutoff) / (hi - lo)).clamp(0.0, 1.0);
    match orientation {
        Orientation::Greater => above,
        Orientation::Less => 1.0 - above,
    }
}

/// Both sides of R_t(f ∘ φ) = E_{p_t(z) p_s(y|z)}[ℓ] + η on a grid problem,
/// by direct cell enumeration. φ must select coordinates; f must be a
/// threshold or a constant.
pub fn oracle_eta_identity(
    problem: &SyntheticProblem,
    representation: &Representation,
    predictor: &Predictor,
) -> Result<EtaIdentity> {
    let ProblemSpace::Grid {
        source,
        target,
        posterior,
    } = &problem.space
    else {
        return Err(Error::Unsupported("the identity oracle needs a grid problem".into()));
    };
    let axes: Vec<usize> = match representation {
        Representation::Identity { dim } => (0..*dim).collect(),
        Representation::VariableSelection { indices, .. } => indices.clone(),
        Representation::LinearProjection { .. } => {
            return Err(Error::Unsupported("the identity oracle needs a coordinate selection".into()))
        }
    };
    let dim = source.dim();
    let res = source.resolution();
    let n_cells: usize = res.iter().product();
    let volume: f64 = (0..dim).map(|a| (source.upper()[a] - source.lower()[a]) / res[a] as f64).product();

    // Positive fraction of each X cell: depends only on the selected axis.
    let fraction = |idx: &[usize]| -> Result<f64> {
        match predictor {
            Predictor::Constant { value } => Ok(if *value == 1 { 1.0 } else { 0.0 }),
            Predictor::Threshold {
                axis,
                cutoff,
                orientation,
            } => {
                let a = axes[*axis];
                let w = (source.upper()[a] - source.lower()[a]) / res[a] as f64;
                let lo = source.lower()[a] + idx[a] as f64 * w;
                Ok(threshold_fraction(lo, lo + w, *cutoff, *orientation))
            }
            Predictor::Logistic { .. } => Err(Error::Unsupported("the identity oracle handles thresholds".into())),
        }
    };
    let zero_one = |positive: f64, prob_one: f64| positive * (1.0 - prob_one) + (1.0 - positive) * prob_one;

    struct ZCell {
        s_mass: f64,
        t_mass: f64,
        s_pos: f64,
        t_pos: f64,
    }
    let mut cells: BTreeMap<Vec<usize>, ZCell> = BTreeMap::new();
    let mut per_cell = Vec::with_capacity(n_cells);
    for c in 0..n_cells {
        let mut idx = vec![0; dim];
        let mut rest = c;
        for a in (0..dim).rev() {
            idx[a] = rest % res[a];
            rest /= res[a];
        }
        let key: Vec<usize> = axes.iter().map(|a| idx[*a]).collect();
        let (sm, tm) = (source.values()[c] * volume, target.values()[c] * volume);
        let e = cells.entry(key.clone()).or_insert(ZCell {
            s_mass: 0.0,
            t_mass: 0.0,
            s_pos: 0.0,
            t_pos: 0.0,
        });
        e.s_mass += sm;
        e.t_mass += tm;
        e.s_pos += sm * posterior[c];
        e.t_pos += tm * posterior[c];
        per_cell.push((key, tm, posterior[c], fraction(&idx)?));
    }
    let conditional = |z: &ZCell| -> (f64, f64) {
        let s = (z.s_mass > 0.0).then(|| z.s_pos / z.s_mass);
        let t = (z.t_mass > 0.0).then(|| z.t_pos / z.t_mass);
        (s.or(t).unwrap_or(0.0), t.or(s).unwrap_or(0.0))
    };
    let (mut target_risk, mut first, mut delta_t, mut delta_s) = (0.0, 0.0, 0.0, 0.0);
    for (key, tm, post, frac) in &per_cell {
        if *tm == 0.0 {
            continue;
        }
        let (ps_post, pt_post) = conditional(&cells[key]);
        let truth = zero_one(*frac, *post);
        target_risk += tm * truth;
        first += tm * zero_one(*frac, ps_post);
        delta_t += tm * (zero_one(*frac, pt_post) - truth);
        delta_s += tm * (zero_one(*frac, ps_post) - truth);
    }
    let eta = delta_t - delta_s;
    Ok(EtaIdentity {
        target_risk,
        source_posterior_term: first,
        eta,
        decomposed_sum: first + eta,
    })
}
