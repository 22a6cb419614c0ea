//! Full-batch gradient descent on
//! O = 2(1 − |α − 0.5|)((1 − α) R̂_s + α d)
//! for a linear representation and a logistic predictor on z. Each row of the
//! representation is used at unit length, z_r = a_r·x / |a_r|, so the scale
//! of z lives in the predictor weights and the penalty cannot be lowered by
//! stretching or shrinking z.
//! R̂_s is the mean logistic loss on labeled source samples; d is either the
//! V-statistic MMD² between mapped source and target samples or the sample
//! hinge support divergence with Gaussian plug-in densities on z.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::densities::SampleSet;
use crate::divergence::{Epsilon, Kernel};
use crate::hypotheses::{Hypothesis, Predictor, Representation};
use crate::numeric::{pairwise_sum, sigmoid, softplus};
use crate::{Error, Result};

/// Smallest step tried by the backtracking line search.
pub const MIN_STEP: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Penalty {
    Mmd,
    /// Hinge relaxation of the support divergence; the kernel bandwidth is
    /// reused as the bandwidth of the plug-in densities on z.
    HingeSupport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub alpha: f64,
    pub penalty: Penalty,
    pub kernel: Kernel,
    pub eps: Epsilon,
    pub learning_rate: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub init_scale: f64,
    pub tolerance: f64,
    /// Rows of A.
    pub output_dim: usize,
}

impl TrainConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            alpha: 0.5,
            penalty: Penalty::Mmd,
            kernel: Kernel::gaussian(1.0).expect("positive bandwidth"),
            eps: Epsilon::new(0.1).expect("positive epsilon"),
            learning_rate: 0.5,
            max_iters: 2000,
            seed,
            init_scale: 1.0,
            tolerance: 1e-10,
            output_dim: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.init_scale > 0.0) || !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter("init_scale and tolerance must be positive".into()));
        }
        if self.output_dim == 0 {
            return Err(Error::InvalidParameter("output_dim must be at least 1".into()));
        }
        Ok(())
    }

    /// 2(1 − |α − 0.5|).
    fn scale(&self) -> f64 {
        2.0 * (1.0 - (self.alpha - 0.5).abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveTerms {
    pub risk_term: f64,
    pub penalty_term: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iter: usize,
    pub risk_term: f64,
    pub penalty_term: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub representation: Representation,
    pub predictor: Predictor,
    pub objective_trace: Vec<TraceEntry>,
}

impl TrainedModel {
    pub fn hypothesis(&self) -> Result<Hypothesis> {
        Hypothesis::new(self.representation.clone(), self.predictor.clone())
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.objective_trace.last().map(|t| t.total)
    }

    fn params(&self) -> Result<Params> {
        let a = self.representation.matrix();
        if a.iter().any(|row| row.iter().all(|v| *v == 0.0)) {
            return Err(Error::InvalidParameter("representation rows must be nonzero".into()));
        }
        let k = a.len();
        let (w, b) = match &self.predictor {
            Predictor::Logistic { weights, bias } => (weights.clone(), *bias),
            _ => return Err(Error::InvalidParameter("trained models use a logistic predictor".into())),
        };
        if w.len() != k {
            return Err(Error::DimensionMismatch { expected: k, found: w.len() });
        }
        Ok(Params {
            k,
            d: self.representation.input_dim(),
            theta: a.into_iter().flatten().chain(w).chain(std::iter::once(b)).collect(),
        })
    }
}

/// Flat parameter vector [A row-major, w, b].
#[derive(Debug, Clone)]
struct Params {
    k: usize,
    d: usize,
    theta: Vec<f64>,
}

impl Params {
    fn a(&self) -> &[f64] {
        &self.theta[..self.k * self.d]
    }

    fn w(&self) -> &[f64] {
        &self.theta[self.k * self.d..self.k * self.d + self.k]
    }

    fn b(&self) -> f64 {
        self.theta[self.k * self.d + self.k]
    }

    /// Rows of A scaled to unit length, and the original lengths.
    fn unit_rows(&self) -> (Vec<f64>, Vec<f64>) {
        let mut u = self.a().to_vec();
        let norms: Vec<f64> = u
            .chunks_mut(self.d)
            .map(|row| {
                let n = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                row.iter_mut().for_each(|v| *v /= n);
                n
            })
            .collect();
        (u, norms)
    }

    fn project(&self, x: &SampleSet, u: &[f64]) -> Vec<f64> {
        let (k, d) = (self.k, self.d);
        let mut z = Vec::with_capacity(x.len() * k);
        for p in x.points() {
            for r in 0..k {
                z.push((0..d).map(|j| u[r * d + j] * p[j]).sum());
            }
        }
        z
    }

    fn into_model(self, trace: Vec<TraceEntry>) -> Result<TrainedModel> {
        let (u, _) = self.unit_rows();
        let rows: Vec<Vec<f64>> = u.chunks(self.d).map(<[f64]>::to_vec).collect();
        Ok(TrainedModel {
            representation: Representation::linear(rows)?,
            predictor: Predictor::Logistic {
                weights: self.w().to_vec(),
                bias: self.b(),
            },
            objective_trace: trace,
        })
    }
}

struct Evaluation {
    terms: ObjectiveTerms,
    grad: Vec<f64>,
}

/// Objective terms and, when `with_grad`, the gradient in θ.
fn evaluate(p: &Params, source: &SampleSet, target: &SampleSet, config: &TrainConfig, with_grad: bool) -> Evaluation {
    let (k, d) = (p.k, p.d);
    let (u, norms) = p.unit_rows();
    let zs = p.project(source, &u);
    let zt = p.project(target, &u);
    let y = source.labels().expect("checked by caller");
    let n = source.len();
    let mut gzs = vec![0.0; zs.len()];
    let mut gzt = vec![0.0; zt.len()];
    let mut grad = vec![0.0; p.theta.len()];

    let scale = config.scale();
    let c_risk = scale * (1.0 - config.alpha);
    let c_pen = scale * config.alpha;

    let w = p.w();
    let mut losses = Vec::with_capacity(n);
    for i in 0..n {
        let zi = &zs[i * k..(i + 1) * k];
        let s: f64 = w.iter().zip(zi).map(|(a, b)| a * b).sum::<f64>() + p.b();
        let yi = f64::from(y[i]);
        losses.push(softplus(s) - yi * s);
        if with_grad && c_risk != 0.0 {
            let r = c_risk * (sigmoid(s) - yi) / n as f64;
            for j in 0..k {
                grad[k * d + j] += r * zi[j];
                gzs[i * k + j] += r * w[j];
            }
            grad[k * d + k] += r;
        }
    }
    let risk_term = pairwise_sum(&losses) / n as f64;

    let g = if with_grad && c_pen != 0.0 { Some((&mut gzs, &mut gzt, c_pen)) } else { None };
    let penalty_term = match config.penalty {
        Penalty::Mmd => mmd_v(&zs, &zt, k, &config.kernel, g),
        Penalty::HingeSupport => hinge(&zs, &zt, k, config.kernel.sigma, config.eps.value(), g),
    };

    if with_grad {
        let mut gu = vec![0.0; k * d];
        for (x, gz) in [(source, &gzs), (target, &gzt)] {
            for (i, pt) in x.points().enumerate() {
                for r in 0..k {
                    let gr = gz[i * k + r];
                    if gr != 0.0 {
                        for j in 0..d {
                            gu[r * d + j] += gr * pt[j];
                        }
                    }
                }
            }
        }
        // u = a/|a| has Jacobian (I − u uᵀ)/|a|.
        for r in 0..k {
            let row = &gu[r * d..(r + 1) * d];
            let ur = &u[r * d..(r + 1) * d];
            let along: f64 = row.iter().zip(ur).map(|(g, v)| g * v).sum();
            for j in 0..d {
                grad[r * d + j] = (row[j] - along * ur[j]) / norms[r];
            }
        }
    }
    let total = scale * ((1.0 - config.alpha) * risk_term + config.alpha * penalty_term);
    Evaluation {
        terms: ObjectiveTerms {
            risk_term,
            penalty_term,
            total,
        },
        grad,
    }
}

type GradSink<'a> = Option<(&'a mut Vec<f64>, &'a mut Vec<f64>, f64)>;

/// V-statistic MMD² of mapped samples; accumulates c · ∂/∂z into the sinks.
fn mmd_v(zs: &[f64], zt: &[f64], k: usize, kernel: &Kernel, mut sink: GradSink) -> f64 {
    let (n, m) = (zs.len() / k, zt.len() / k);
    let inv2s2 = 1.0 / (2.0 * kernel.sigma * kernel.sigma);
    let inv_s2 = 2.0 * inv2s2;
    let block = |a: &[f64], na: usize, b: &[f64], nb: usize, coef: f64, sink: &mut GradSink, which: (bool, bool)| -> f64 {
        let mut rows = Vec::with_capacity(na);
        for i in 0..na {
            let u = &a[i * k..(i + 1) * k];
            let mut row = Vec::with_capacity(nb);
            for j in 0..nb {
                let v = &b[j * k..(j + 1) * k];
                let d2: f64 = u.iter().zip(v).map(|(x, y)| (x - y) * (x - y)).sum();
                let kv = (-d2 * inv2s2).exp();
                row.push(kv);
                if let Some((gs, gt, c)) = sink.as_mut() {
                    // ∂k/∂u = −k (u − v)/σ², ∂k/∂v = +k (u − v)/σ².
                    let f = *c * coef * kv * inv_s2;
                    for r in 0..k {
                        let diff = u[r] - v[r];
                        let ga = if which.0 { &mut **gt } else { &mut **gs };
                        ga[i * k + r] -= f * diff;
                        let gb = if which.1 { &mut **gt } else { &mut **gs };
                        gb[j * k + r] += f * diff;
                    }
                }
            }
            rows.push(pairwise_sum(&row));
        }
        coef * pairwise_sum(&rows)
    };
    let (nf, mf) = (n as f64, m as f64);
    block(zs, n, zs, n, 1.0 / (nf * nf), &mut sink, (false, false))
        + block(zs, n, zt, m, -2.0 / (nf * mf), &mut sink, (false, true))
        + block(zt, m, zt, m, 1.0 / (mf * mf), &mut sink, (true, true))
}

/// a / b with a / 0 = +∞.
fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        f64::INFINITY
    } else {
        a / b
    }
}

/// Mean over target of max(0, 2 − p/ε) max(0, 2 − p/q) minus mean over
/// source of max(0, 1 − p/ε) max(0, 1 − p/q), with p, q Gaussian density
/// estimates from the mapped source and target samples.
fn hinge(zs: &[f64], zt: &[f64], k: usize, h: f64, eps: f64, mut sink: GradSink) -> f64 {
    let (n, m) = (zs.len() / k, zt.len() / k);
    let norm = (2.0 * std::f64::consts::PI * h * h).powf(-(k as f64) / 2.0);
    let inv_h2 = 1.0 / (h * h);
    let kern = |u: &[f64], v: &[f64]| -> f64 {
        let d2: f64 = u.iter().zip(v).map(|(x, y)| (x - y) * (x - y)).sum();
        norm * (-0.5 * d2 * inv_h2).exp()
    };
    let density = |u: &[f64], pts: &[f64], cnt: usize| -> f64 {
        let v: Vec<f64> = (0..cnt).map(|j| kern(u, &pts[j * k..(j + 1) * k])).collect();
        pairwise_sum(&v) / cnt as f64
    };
    let mut total = 0.0;
    for (on_target, pts, cnt, level, sign) in [(true, zt, m, 2.0, 1.0 / m as f64), (false, zs, n, 1.0, -1.0 / n as f64)] {
        let mut terms = Vec::with_capacity(cnt);
        for e in 0..cnt {
            let u = &pts[e * k..(e + 1) * k];
            let pv = density(u, zs, n);
            let qv = density(u, zt, m);
            let a = (level - pv / eps).max(0.0);
            let r = ratio(pv, qv);
            let b = (level - r).max(0.0);
            terms.push(sign * a * b);
            let Some((gs, gt, c)) = sink.as_mut() else { continue };
            if a == 0.0 && b == 0.0 {
                continue;
            }
            // ∂(ab)/∂p and ∂(ab)/∂q; zero on the flat side of each hinge.
            let da = if a > 0.0 { -1.0 / eps } else { 0.0 };
            let db = if b > 0.0 && qv > 0.0 { -1.0 / qv } else { 0.0 };
            let dq = if b > 0.0 && qv > 0.0 { pv / (qv * qv) } else { 0.0 };
            let gp = *c * sign * (da * b + a * db);
            let gq = *c * sign * a * dq;
            for (support, scnt, g, is_t) in [(zs, n, gp, false), (zt, m, gq, true)] {
                if g == 0.0 {
                    continue;
                }
                for j in 0..scnt {
                    let v = &support[j * k..(j + 1) * k];
                    // ∂K(u − v)/∂u = −K (u − v)/h².
                    let f = g * kern(u, v) * inv_h2 / scnt as f64;
                    for r in 0..k {
                        let diff = u[r] - v[r];
                        let ge = if on_target { &mut **gt } else { &mut **gs };
                        ge[e * k + r] -= f * diff;
                        let gsup = if is_t { &mut **gt } else { &mut **gs };
                        gsup[j * k + r] += f * diff;
                    }
                }
            }
        }
        total += pairwise_sum(&terms);
    }
    total
}

fn check_inputs(source: &SampleSet, target: &SampleSet, config: &TrainConfig) -> Result<()> {
    config.validate()?;
    let y = source.require_labels()?;
    if source.len() < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: source.len() });
    }
    if target.len() < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: target.len() });
    }
    if source.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: source.dim(),
            found: target.dim(),
        });
    }
    if !(y.contains(&0) && y.contains(&1)) {
        return Err(Error::InvalidParameter("source labels must include both classes".into()));
    }
    Ok(())
}

fn check_model(model: &TrainedModel, source: &SampleSet, target: &SampleSet) -> Result<Params> {
    let p = model.params()?;
    if p.d != source.dim() || p.d != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.d,
            found: source.dim(),
        });
    }
    source.require_labels()?;
    Ok(p)
}

pub fn objective_value(model: &TrainedModel, source: &SampleSet, target: &SampleSet, config: &TrainConfig) -> Result<ObjectiveTerms> {
    config.validate()?;
    let p = check_model(model, source, target)?;
    Ok(evaluate(&p, source, target, config, false).terms)
}

/// Analytic gradient of the objective at the model, ordered as
/// [A row-major, w, b].
pub fn objective_gradient(model: &TrainedModel, source: &SampleSet, target: &SampleSet, config: &TrainConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let p = check_model(model, source, target)?;
    Ok(evaluate(&p, source, target, config, true).grad)
}

fn initial_params(d: usize, config: &TrainConfig) -> Params {
    let k = config.output_dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = Normal::new(0.0, config.init_scale).expect("positive scale");
    let mut theta: Vec<f64> = (0..k * d + k).map(|_| normal.sample(&mut rng)).collect();
    theta.push(0.0);
    Params { k, d, theta }
}

/// Descends from `start`, moving only the parameters flagged in `free`.
fn descend(
    mut p: Params,
    free: &[bool],
    source: &SampleSet,
    target: &SampleSet,
    config: &TrainConfig,
) -> Result<(Params, Vec<TraceEntry>)> {
    let mut ev = evaluate(&p, source, target, config, true);
    if !ev.terms.total.is_finite() {
        return Err(Error::NonFinite("initial objective".into()));
    }
    let entry = |iter: usize, t: &ObjectiveTerms| TraceEntry {
        iter,
        risk_term: t.risk_term,
        penalty_term: t.penalty_term,
        total: t.total,
    };
    let mut trace = vec![entry(0, &ev.terms)];
    let mut step = config.learning_rate;
    for iter in 1..=config.max_iters {
        if ev.grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!(
                "gradient at iteration {iter}; lower the learning rate"
            )));
        }
        let mut accepted = None;
        while step >= MIN_STEP {
            let mut trial = p.clone();
            for ((t, g), f) in trial.theta.iter_mut().zip(&ev.grad).zip(free) {
                if *f {
                    *t -= step * g;
                }
            }
            let tv = evaluate(&trial, source, target, config, false);
            if tv.terms.total.is_finite() && tv.terms.total <= ev.terms.total {
                accepted = Some(trial);
                break;
            }
            step /= 2.0;
        }
        let Some(next) = accepted else { break };
        let prev = ev.terms.total;
        p = next;
        ev = evaluate(&p, source, target, config, true);
        trace.push(entry(iter, &ev.terms));
        if (prev - ev.terms.total).abs() < config.tolerance {
            break;
        }
        step = (2.0 * step).min(config.learning_rate);
    }
    Ok((p, trace))
}

pub fn train(source: &SampleSet, target: &SampleSet, config: &TrainConfig) -> Result<TrainedModel> {
    check_inputs(source, target, config)?;
    let p = initial_params(source.dim(), config);
    let free = vec![true; p.theta.len()];
    let (p, trace) = descend(p, &free, source, target, config)?;
    p.into_model(trace)
}

/// Refits the predictor on labeled target samples with the representation
/// frozen, by plain logistic regression.
pub fn tune_on_target(model: &TrainedModel, target: &SampleSet, config: &TrainConfig) -> Result<TrainedModel> {
    let p = check_model(model, target, target)?;
    let erm = TrainConfig {
        alpha: 0.0,
        ..config.clone()
    };
    check_inputs(target, target, &erm)?;
    let free: Vec<bool> = (0..p.theta.len()).map(|i| i >= p.k * p.d).collect();
    let (p, trace) = descend(p, &free, target, target, &erm)?;
    // Keep the frozen rows bit-for-bit rather than re-normalizing them.
    Ok(TrainedModel {
        representation: model.representation.clone(),
        ..p.into_model(trace)?
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    pub passed: bool,
    pub max_relative_error: f64,
}

/// Compares the analytic gradient with central differences of step 1e-5.
/// The relative error per parameter is |a − n| / max(|a| + |n|, 1e-8).
pub fn gradient_check(
    model: &TrainedModel,
    source: &SampleSet,
    target: &SampleSet,
    config: &TrainConfig,
    tolerance: f64,
) -> Result<GradientCheck> {
    config.validate()?;
    let p = check_model(model, source, target)?;
    let analytic = evaluate(&p, source, target, config, true).grad;
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..p.theta.len() {
        let mut up = p.clone();
        up.theta[i] += h;
        let mut down = p.clone();
        down.theta[i] -= h;
        let fu = evaluate(&up, source, target, config, false).terms.total;
        let fd = evaluate(&down, source, target, config, false).terms.total;
        let numeric = (fu - fd) / (2.0 * h);
        let a = analytic[i];
        let err = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
        worst = worst.max(err);
    }
    Ok(GradientCheck {
        passed: worst < tolerance,
        max_relative_error: worst,
    })
}

/// Writes iter, risk_term, penalty_term, total with LF endings.
pub fn write_trace_csv<W: Write>(writer: W, trace: &[TraceEntry]) -> Result<()> {
    let mut w = std::io::BufWriter::new(writer);
    writeln!(w, "iter,risk_term,penalty_term,total")?;
    for t in trace {
        writeln!(w, "{},{:?},{:?},{:?}", t.iter, t.risk_term, t.penalty_term, t.total)?;
    }
    w.flush()?;
    Ok(())
}
