//! Representations, predictors, losses, risks, and the classical
//! disagreement-based quantities: HΔH-distance, λ_H and the Ben-David bound.
//!
//! A hypothesis is a predictor composed with a representation. Every
//! predictor here labels a half-space of its input positive, so the positive
//! set of a hypothesis is a half-space of the input space; risks on grid
//! problems are computed from exact cell volume fractions.

pub mod geometry;
mod pushforward;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::densities::{Density, DomainTag, GridDensity, SampleSet};
use crate::synthetic::{domain_rng, SyntheticProblem};
use crate::{Error, Result};
use geometry::{cell_fraction, Region};

pub use pushforward::{push_forward, PushForward};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Representation {
    Identity { dim: usize },
    VariableSelection { input_dim: usize, indices: Vec<usize> },
    /// k × d matrix; z = A x.
    LinearProjection { matrix: Vec<Vec<f64>> },
}

impl Representation {
    pub fn identity(dim: usize) -> Self {
        Representation::Identity { dim }
    }

    pub fn select(input_dim: usize, indices: Vec<usize>) -> Result<Self> {
        let r = Representation::VariableSelection { input_dim, indices };
        r.validate()?;
        Ok(r)
    }

    pub fn linear(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let r = Representation::LinearProjection { matrix };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Representation::Identity { dim } => {
                if *dim == 0 {
                    return Err(Error::InvalidParameter("identity of dimension 0".into()));
                }
            }
            Representation::VariableSelection { input_dim, indices } => {
                if indices.is_empty() {
                    return Err(Error::InvalidParameter("variable selection needs an index".into()));
                }
                for (i, k) in indices.iter().enumerate() {
                    if *k >= *input_dim {
                        return Err(Error::InvalidParameter(format!("index {k} out of range")));
                    }
                    if indices[..i].contains(k) {
                        return Err(Error::InvalidParameter(format!("index {k} selected twice")));
                    }
                }
            }
            Representation::LinearProjection { matrix } => {
                let d = matrix.first().map_or(0, Vec::len);
                if d == 0 {
                    return Err(Error::InvalidParameter("empty projection matrix".into()));
                }
                if matrix.iter().any(|row| row.len() != d) {
                    return Err(Error::InvalidParameter("ragged projection matrix".into()));
                }
                if matrix.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("projection matrix".into()));
                }
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Representation::Identity { dim } => *dim,
            Representation::VariableSelection { input_dim, .. } => *input_dim,
            Representation::LinearProjection { matrix } => matrix[0].len(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Representation::Identity { dim } => *dim,
            Representation::VariableSelection { indices, .. } => indices.len(),
            Representation::LinearProjection { matrix } => matrix.len(),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Representation::Identity { .. } => x.to_vec(),
            Representation::VariableSelection { indices, .. } => indices.iter().map(|k| x[*k]).collect(),
            Representation::LinearProjection { matrix } => matrix
                .iter()
                .map(|row| row.iter().zip(x).map(|(a, v)| a * v).sum())
                .collect(),
        }
    }

    pub fn apply_samples(&self, samples: &SampleSet) -> Result<SampleSet> {
        if samples.dim() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: samples.dim(),
            });
        }
        samples.map_points(self.output_dim(), |x| self.apply(x))
    }

    /// The representation as a k × d matrix.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let d = self.input_dim();
        let unit = |k: usize| {
            let mut row = vec![0.0; d];
            row[k] = 1.0;
            row
        };
        match self {
            Representation::Identity { dim } => (0..*dim).map(unit).collect(),
            Representation::VariableSelection { indices, .. } => indices.iter().map(|k| unit(*k)).collect(),
            Representation::LinearProjection { matrix } => matrix.clone(),
        }
    }

    /// Identity or variable selection: each output is one input coordinate.
    pub fn is_axis_aligned(&self) -> bool {
        !matches!(self, Representation::LinearProjection { .. })
    }

    /// Whether x can be recovered from φ(x).
    pub fn is_invertible(&self) -> bool {
        match self {
            Representation::Identity { .. } => true,
            Representation::VariableSelection { input_dim, indices } => indices.len() == *input_dim,
            Representation::LinearProjection { matrix } => rank(matrix) == matrix[0].len(),
        }
    }
}

/// Rank by Gaussian elimination with partial pivoting.
fn rank(matrix: &[Vec<f64>]) -> usize {
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let (rows, cols) = (a.len(), a[0].len());
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0;
    }
    let tol = 1e-12 * scale * rows.max(cols) as f64;
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let pivot = (r..rows).max_by(|i, j| a[*i][c].abs().total_cmp(&a[*j][c].abs())).unwrap();
        if a[pivot][c].abs() <= tol {
            continue;
        }
        a.swap(r, pivot);
        for i in r + 1..rows {
            let f = a[i][c] / a[r][c];
            for j in c..cols {
                a[i][j] -= f * a[r][j];
            }
        }
        r += 1;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Predict 1 when z[axis] ≥ cutoff.
    Greater,
    /// Predict 1 when z[axis] ≤ cutoff.
    Less,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Predictor {
    /// Points exactly at the cutoff are labeled 1 under either orientation.
    Threshold {
        axis: usize,
        cutoff: f64,
        orientation: Orientation,
    },
    /// Predict 1 when w·z + b ≥ 0.
    Logistic { weights: Vec<f64>, bias: f64 },
    Constant { value: u8 },
}

impl Predictor {
    pub fn predict(&self, z: &[f64]) -> u8 {
        let positive = match self {
            Predictor::Threshold {
                axis,
                cutoff,
                orientation,
            } => match orientation {
                Orientation::Greater => z[*axis] >= *cutoff,
                Orientation::Less => z[*axis] <= *cutoff,
            },
            Predictor::Logistic { weights, bias } => {
                weights.iter().zip(z).map(|(w, v)| w * v).sum::<f64>() + bias >= 0.0
            }
            Predictor::Constant { value } => *value == 1,
        };
        u8::from(positive)
    }

    fn check_input(&self, dim: usize) -> Result<()> {
        match self {
            Predictor::Threshold { axis, cutoff, .. } => {
                if *axis >= dim {
                    return Err(Error::InvalidParameter(format!(
                        "threshold axis {axis} out of range for dimension {dim}"
                    )));
                }
                if !cutoff.is_finite() {
                    return Err(Error::NonFinite("threshold cutoff".into()));
                }
            }
            Predictor::Logistic { weights, bias } => {
                if weights.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: weights.len(),
                    });
                }
                if weights.iter().chain(std::iter::once(bias)).any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("logistic parameters".into()));
                }
            }
            Predictor::Constant { value } => {
                if *value > 1 {
                    return Err(Error::InvalidParameter(format!("constant label {value}")));
                }
            }
        }
        Ok(())
    }

    /// Positive set as (normal, offset) in the predictor's input space, or
    /// `None` for constants.
    fn half_space(&self, dim: usize) -> Option<(Vec<f64>, f64)> {
        match self {
            Predictor::Threshold {
                axis,
                cutoff,
                orientation,
            } => {
                let mut n = vec![0.0; dim];
                Some(match orientation {
                    Orientation::Greater => {
                        n[*axis] = 1.0;
                        (n, -cutoff)
                    }
                    Orientation::Less => {
                        n[*axis] = -1.0;
                        (n, *cutoff)
                    }
                })
            }
            Predictor::Logistic { weights, bias } => Some((weights.clone(), *bias)),
            Predictor::Constant { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub representation: Representation,
    pub predictor: Predictor,
}

impl Hypothesis {
    pub fn new(representation: Representation, predictor: Predictor) -> Result<Self> {
        let h = Self {
            representation,
            predictor,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        self.representation.validate()?;
        self.predictor.check_input(self.representation.output_dim())
    }

    pub fn input_dim(&self) -> usize {
        self.representation.input_dim()
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        self.predictor.predict(&self.representation.apply(x))
    }

    /// The set {x : h(x) = 1}.
    pub fn positive_region(&self) -> Region {
        match &self.predictor {
            Predictor::Constant { value } => {
                if *value == 1 {
                    Region::All
                } else {
                    Region::Empty
                }
            }
            p => {
                let (nz, offset) = p.half_space(self.representation.output_dim()).expect("not constant");
                let a = self.representation.matrix();
                let mut nx = vec![0.0; self.input_dim()];
                for (j, row) in a.iter().enumerate() {
                    if nz[j] != 0.0 {
                        for (acc, v) in nx.iter_mut().zip(row) {
                            *acc += nz[j] * v;
                        }
                    }
                }
                Region::half_space(nx, offset)
            }
        }
    }
}

/// Loss ℓ(prediction, label) bounded by M.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Loss {
    ZeroOne,
    /// `values[prediction][label]`.
    Table { values: [[f64; 2]; 2], bound: f64 },
}

impl Loss {
    pub fn table(values: [[f64; 2]; 2], bound: f64) -> Result<Self> {
        let l = Loss::Table { values, bound };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<()> {
        if let Loss::Table { values, bound } = self {
            if !(*bound > 0.0) || !bound.is_finite() {
                return Err(Error::InvalidParameter(format!("loss bound must be positive, got {bound}")));
            }
            for v in values.iter().flatten() {
                if !(0.0..=*bound).contains(v) {
                    return Err(Error::LossOutOfRange {
                        value: *v,
                        bound: *bound,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn bound(&self) -> f64 {
        match self {
            Loss::ZeroOne => 1.0,
            Loss::Table { bound, .. } => *bound,
        }
    }

    pub fn value(&self, prediction: u8, label: u8) -> f64 {
        match self {
            Loss::ZeroOne => f64::from(u8::from(prediction != label)),
            Loss::Table { values, .. } => values[usize::from(prediction)][usize::from(label)],
        }
    }

    /// E[ℓ(prediction, Y)] for Y ~ Bernoulli(posterior).
    pub fn expected(&self, prediction: u8, posterior: f64) -> f64 {
        posterior * self.value(prediction, 1) + (1.0 - posterior) * self.value(prediction, 0)
    }

    /// Expected loss when a fraction `positive` of the mass is predicted 1.
    pub(crate) fn mixed(&self, positive: f64, posterior: f64) -> f64 {
        let mut v = 0.0;
        if positive > 0.0 {
            v += positive * self.expected(1, posterior);
        }
        if positive < 1.0 {
            v += (1.0 - positive) * self.expected(0, posterior);
        }
        v
    }
}

/// Default number of cutoffs per axis in a threshold class.
pub const DEFAULT_CUTOFFS: usize = 101;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HypothesisClass {
    Explicit {
        hypotheses: Vec<Hypothesis>,
    },
    /// Thresholds on each listed output axis of `representation` (all axes
    /// when `axes` is absent) at `cutoffs` evenly spaced values in
    /// [lower, upper], in both orientations.
    ThresholdGrid {
        representation: Representation,
        lower: f64,
        upper: f64,
        cutoffs: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        axes: Option<Vec<usize>>,
    },
}

impl HypothesisClass {
    pub fn threshold_grid(representation: Representation, lower: f64, upper: f64) -> Self {
        HypothesisClass::ThresholdGrid {
            representation,
            lower,
            upper,
            cutoffs: DEFAULT_CUTOFFS,
            axes: None,
        }
    }

    pub fn expand(&self) -> Result<Vec<Hypothesis>> {
        let out = match self {
            HypothesisClass::Explicit { hypotheses } => {
                for h in hypotheses {
                    h.validate()?;
                }
                hypotheses.clone()
            }
            HypothesisClass::ThresholdGrid {
                representation,
                lower,
                upper,
                cutoffs,
                axes,
            } => {
                representation.validate()?;
                if !(upper >= lower) || !lower.is_finite() || !upper.is_finite() {
                    return Err(Error::InvalidParameter("threshold range must be finite with lower ≤ upper".into()));
                }
                let axes: Vec<usize> = axes.clone().unwrap_or_else(|| (0..representation.output_dim()).collect());
                let mut out = Vec::with_capacity(axes.len() * cutoffs * 2);
                for &axis in &axes {
                    for i in 0..*cutoffs {
                        let cutoff = if *cutoffs == 1 {
                            *lower
                        } else {
                            lower + (upper - lower) * i as f64 / (*cutoffs - 1) as f64
                        };
                        for orientation in [Orientation::Greater, Orientation::Less] {
                            out.push(Hypothesis::new(
                                representation.clone(),
                                Predictor::Threshold {
                                    axis,
                                    cutoff,
                                    orientation,
                                },
                            )?);
                        }
                    }
                }
                out
            }
        };
        if out.is_empty() {
            return Err(Error::EmptyClass);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RiskMode {
    Exact,
    MonteCarlo { n: usize, seed: u64 },
}

/// A measure over which hypotheses are compared: grid cells (exact),
/// weighted points (atoms or Monte Carlo draws).
enum Measure<'a> {
    Cells { grid: &'a GridDensity, masses: Vec<f64> },
    Points { dim: usize, points: Vec<f64>, weights: Vec<f64> },
}

impl<'a> Measure<'a> {
    fn new(density: &'a Density, mode: RiskMode, which: DomainTag) -> Result<Self> {
        match (mode, density) {
            (RiskMode::Exact, Density::Grid(g)) => Ok(Measure::Cells {
                grid: g,
                masses: g.masses(),
            }),
            (RiskMode::Exact, Density::Discrete(d)) => Ok(Measure::Points {
                dim: d.dim(),
                points: (0..d.len()).flat_map(|i| d.location(i)).collect(),
                weights: d.probabilities().to_vec(),
            }),
            (RiskMode::Exact, Density::Kde(_)) => Err(Error::Unsupported(
                "exact risks need grid or discrete densities".into(),
            )),
            (RiskMode::MonteCarlo { n, seed }, d) => {
                if n == 0 {
                    return Err(Error::InvalidParameter("Monte Carlo mode needs n ≥ 1".into()));
                }
                let mut rng = domain_rng(seed, which);
                Ok(Measure::Points {
                    dim: d.dim(),
                    points: d.sample_points(&mut rng, n),
                    weights: vec![1.0 / n as f64; n],
                })
            }
        }
    }

    fn dim(&self) -> usize {
        match self {
            Measure::Cells { grid, .. } => grid.dim(),
            Measure::Points { dim, .. } => *dim,
        }
    }

    /// Per cell: fraction of volume predicted 1. Per point: the prediction.
    fn profile(&self, h: &Hypothesis, region: &Region) -> Result<Vec<f64>> {
        if h.input_dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: h.input_dim(),
            });
        }
        match self {
            Measure::Cells { grid, masses } => (0..grid.n_cells())
                .map(|c| {
                    if masses[c] == 0.0 {
                        return Ok(0.0);
                    }
                    let (lo, hi) = grid.cell_bounds(c);
                    cell_fraction(&[region], &lo, &hi)
                })
                .collect(),
            Measure::Points { dim, points, .. } => {
                Ok(points.chunks(*dim).map(|x| f64::from(h.predict(x))).collect())
            }
        }
    }

    fn disagreement(&self, a: (&Region, &[f64]), b: (&Region, &[f64])) -> Result<f64> {
        match self {
            Measure::Cells { grid, masses } => {
                let mut terms = Vec::new();
                for c in 0..grid.n_cells() {
                    if masses[c] == 0.0 {
                        continue;
                    }
                    let (fa, fb) = (a.1[c], b.1[c]);
                    let both = if fa == 0.0 || fa == 1.0 || fb == 0.0 || fb == 1.0 {
                        fa * fb
                    } else {
                        let (lo, hi) = grid.cell_bounds(c);
                        cell_fraction(&[a.0, b.0], &lo, &hi)?
                    };
                    terms.push(masses[c] * (fa + fb - 2.0 * both).max(0.0));
                }
                Ok(crate::numeric::pairwise_sum(&terms))
            }
            Measure::Points { weights, .. } => Ok(weights
                .iter()
                .zip(a.1.iter().zip(b.1))
                .map(|(w, (x, y))| if x != y { *w } else { 0.0 })
                .sum()),
        }
    }
}

/// E[ℓ(h(x), y)] under the chosen domain of `problem`.
pub fn risk(h: &Hypothesis, problem: &SyntheticProblem, which: DomainTag, mode: RiskMode, loss: &Loss) -> Result<f64> {
    loss.validate()?;
    if h.input_dim() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            found: h.input_dim(),
        });
    }
    match mode {
        RiskMode::Exact => {
            let region = h.positive_region();
            let density = problem.density(which);
            let measure = Measure::new(&density, mode, which)?;
            let profile = measure.profile(h, &region)?;
            let posterior = problem.posterior_values();
            let weights = match &measure {
                Measure::Cells { masses, .. } => masses,
                Measure::Points { weights, .. } => weights,
            };
            let terms: Vec<f64> = (0..weights.len())
                .map(|i| {
                    if weights[i] == 0.0 {
                        0.0
                    } else {
                        weights[i] * loss.mixed(profile[i], posterior[i])
                    }
                })
                .collect();
            Ok(crate::numeric::pairwise_sum(&terms))
        }
        RiskMode::MonteCarlo { n, seed } => {
            if n == 0 {
                return Err(Error::InvalidParameter("Monte Carlo mode needs n ≥ 1".into()));
            }
            let s = problem.sample_labeled(which, n, seed);
            empirical_risk(h, &s, loss)
        }
    }
}

/// Mean loss of `h` on labeled samples.
pub fn empirical_risk(h: &Hypothesis, samples: &SampleSet, loss: &Loss) -> Result<f64> {
    let y = samples.require_labels()?;
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let terms: Vec<f64> = samples
        .points()
        .zip(y)
        .map(|(x, y)| loss.value(h.predict(x), *y))
        .collect();
    Ok(crate::numeric::mean(&terms))
}

/// R_p(h, h') = P_p[h(x) ≠ h'(x)].
pub fn disagreement(h: &Hypothesis, h2: &Hypothesis, density: &Density, mode: RiskMode) -> Result<f64> {
    let measure = Measure::new(density, mode, DomainTag::Source)?;
    let (r1, r2) = (h.positive_region(), h2.positive_region());
    let (p1, p2) = (measure.profile(h, &r1)?, measure.profile(h2, &r2)?);
    measure.disagreement((&r1, &p1), (&r2, &p2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceScale {
    /// sup |R_p(h, h') − R_q(h, h')|.
    Plain,
    /// Twice the plain value, as in some statements of the distance.
    Doubled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HDeltaHConfig {
    /// Pairs beyond this count are sampled instead of enumerated.
    pub max_pairs: usize,
    pub seed: u64,
    pub scale: DistanceScale,
}

impl Default for HDeltaHConfig {
    fn default() -> Self {
        Self {
            max_pairs: 10_000,
            seed: 0,
            scale: DistanceScale::Plain,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HDeltaHReport {
    pub value: f64,
    pub pairs_evaluated: usize,
    /// False when pairs were sampled; the value is then a lower bound.
    pub exhaustive: bool,
}

/// sup over pairs of the class of |R_p(h, h') − R_q(h, h')|.
pub fn h_delta_h(
    class: &HypothesisClass,
    p: &Density,
    q: &Density,
    mode: RiskMode,
    config: &HDeltaHConfig,
) -> Result<HDeltaHReport> {
    let hs = class.expand()?;
    h_delta_h_of(&hs, p, q, mode, config)
}

pub(crate) fn h_delta_h_of(
    hs: &[Hypothesis],
    p: &Density,
    q: &Density,
    mode: RiskMode,
    config: &HDeltaHConfig,
) -> Result<HDeltaHReport> {
    if hs.is_empty() {
        return Err(Error::EmptyClass);
    }
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: q.dim(),
        });
    }
    let mp = Measure::new(p, mode, DomainTag::Source)?;
    let mq = Measure::new(q, mode, DomainTag::Target)?;
    let regions: Vec<Region> = hs.iter().map(Hypothesis::positive_region).collect();
    let prof_p: Vec<Vec<f64>> = hs.iter().zip(&regions).map(|(h, r)| mp.profile(h, r)).collect::<Result<_>>()?;
    let prof_q: Vec<Vec<f64>> = hs.iter().zip(&regions).map(|(h, r)| mq.profile(h, r)).collect::<Result<_>>()?;
    let m = hs.len();
    let total_pairs = m * (m - 1) / 2;
    let (pairs, exhaustive): (Vec<(usize, usize)>, bool) = if total_pairs <= config.max_pairs {
        ((0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect(), true)
    } else {
        let mut rng = domain_rng(config.seed, DomainTag::Source);
        let pairs = (0..config.max_pairs)
            .map(|_| {
                let i = rng.random_range(0..m);
                let mut j = rng.random_range(0..m - 1);
                if j >= i {
                    j += 1;
                }
                (i.min(j), i.max(j))
            })
            .collect();
        (pairs, false)
    };
    let gaps: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let a = mp.disagreement((&regions[i], &prof_p[i]), (&regions[j], &prof_p[j]))?;
            let b = mq.disagreement((&regions[i], &prof_q[i]), (&regions[j], &prof_q[j]))?;
            Ok((a - b).abs())
        })
        .collect::<Result<_>>()?;
    let sup = gaps.into_iter().fold(0.0, f64::max);
    Ok(HDeltaHReport {
        value: match config.scale {
            DistanceScale::Plain => sup,
            DistanceScale::Doubled => 2.0 * sup,
        },
        pairs_evaluated: pairs.len(),
        exhaustive,
    })
}

/// inf over the class of R_s(h) + R_t(h).
pub fn lambda_joint(class: &HypothesisClass, problem: &SyntheticProblem, mode: RiskMode, loss: &Loss) -> Result<f64> {
    lambda_of(&class.expand()?, problem, mode, loss)
}

pub(crate) fn lambda_of(hs: &[Hypothesis], problem: &SyntheticProblem, mode: RiskMode, loss: &Loss) -> Result<f64> {
    if hs.is_empty() {
        return Err(Error::EmptyClass);
    }
    let sums: Vec<f64> = hs
        .par_iter()
        .map(|h| Ok(risk(h, problem, DomainTag::Source, mode, loss)? + risk(h, problem, DomainTag::Target, mode, loss)?))
        .collect::<Result<_>>()?;
    Ok(sums.into_iter().fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Report {
    pub source_risk: f64,
    pub h_delta_h: f64,
    pub lambda: f64,
    pub total: f64,
    /// Whether every hypothesis pair was enumerated.
    pub exhaustive: bool,
}

/// R_s(h) + d_HΔH(p_s, p_t) + λ_H under zero-one loss, with the class
/// extended by `h` so that the bound applies to it.
pub fn theorem1_bound(
    h: &Hypothesis,
    class: &HypothesisClass,
    problem: &SyntheticProblem,
    config: &HDeltaHConfig,
) -> Result<Theorem1Report> {
    let mut hs = class.expand()?;
    if !hs.contains(h) {
        hs.push(h.clone());
    }
    let loss = Loss::ZeroOne;
    let source_risk = risk(h, problem, DomainTag::Source, RiskMode::Exact, &loss)?;
    let plain = HDeltaHConfig {
        scale: DistanceScale::Plain,
        ..*config
    };
    let d = h_delta_h_of(
        &hs,
        &problem.density(DomainTag::Source),
        &problem.density(DomainTag::Target),
        RiskMode::Exact,
        &plain,
    )?;
    let lambda = lambda_of(&hs, problem, RiskMode::Exact, &loss)?;
    Ok(Theorem1Report {
        source_risk,
        h_delta_h: d.value,
        lambda,
        total: source_risk + d.value + lambda,
        exhaustive: d.exhaustive,
    })
}
