//! Synthetic covariate-shift problems with closed-form densities and a single
//! label posterior p(Y = 1 | x) shared by both domains.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::densities::{Density, DiscreteDensity, DomainTag, GridDensity, SampleSet};
use crate::{Error, Result};

/// Densities live either on a shared grid (one posterior value per cell) or on
/// shared located atoms (one posterior value per atom).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemSpace {
    Grid {
        source: GridDensity,
        target: GridDensity,
        posterior: Vec<f64>,
    },
    Atoms {
        source: DiscreteDensity,
        target: DiscreteDensity,
        posterior: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticProblem {
    pub descriptor: ProblemDescriptor,
    pub space: ProblemSpace,
}

impl SyntheticProblem {
    pub fn from_grids(
        descriptor: ProblemDescriptor,
        source: GridDensity,
        target: GridDensity,
        posterior: Vec<f64>,
    ) -> Result<Self> {
        if !source.same_structure(&target) {
            return Err(Error::MismatchedSupport("source and target grids differ".into()));
        }
        check_posterior(&posterior, source.n_cells())?;
        Ok(Self {
            descriptor,
            space: ProblemSpace::Grid {
                source,
                target,
                posterior,
            },
        })
    }

    pub fn from_atoms(
        descriptor: ProblemDescriptor,
        source: DiscreteDensity,
        target: DiscreteDensity,
        posterior: Vec<f64>,
    ) -> Result<Self> {
        if !source.same_states(&target) {
            return Err(Error::MismatchedSupport("source and target states differ".into()));
        }
        check_posterior(&posterior, source.len())?;
        Ok(Self {
            descriptor,
            space: ProblemSpace::Atoms {
                source,
                target,
                posterior,
            },
        })
    }

    /// Checks the invariants a deserialized problem may violate.
    pub fn validate(&self) -> Result<()> {
        match &self.space {
            ProblemSpace::Grid {
                source,
                target,
                posterior,
            } => Self::from_grids(self.descriptor.clone(), source.clone(), target.clone(), posterior.clone()),
            ProblemSpace::Atoms {
                source,
                target,
                posterior,
            } => Self::from_atoms(self.descriptor.clone(), source.clone(), target.clone(), posterior.clone()),
        }
        .map(|_| ())
    }

    pub fn dim(&self) -> usize {
        match &self.space {
            ProblemSpace::Grid { source, .. } => source.dim(),
            ProblemSpace::Atoms { source, .. } => source.dim(),
        }
    }

    pub fn density(&self, which: DomainTag) -> Density {
        match (&self.space, which) {
            (ProblemSpace::Grid { source, .. }, DomainTag::Source) => source.clone().into(),
            (ProblemSpace::Grid { target, .. }, DomainTag::Target) => target.clone().into(),
            (ProblemSpace::Atoms { source, .. }, DomainTag::Source) => source.clone().into(),
            (ProblemSpace::Atoms { target, .. }, DomainTag::Target) => target.clone().into(),
        }
    }

    /// Per-cell or per-atom values of p(Y = 1 | x).
    pub fn posterior_values(&self) -> &[f64] {
        match &self.space {
            ProblemSpace::Grid { posterior, .. } | ProblemSpace::Atoms { posterior, .. } => posterior,
        }
    }

    /// p(Y = 1 | x); zero outside the support structure.
    pub fn posterior(&self, point: &[f64]) -> f64 {
        match &self.space {
            ProblemSpace::Grid { source, posterior, .. } => source.cell_index(point).map_or(0.0, |c| posterior[c]),
            ProblemSpace::Atoms { source, posterior, .. } => source.state_at(point).map_or(0.0, |i| posterior[i]),
        }
    }

    /// Draws `n` points from the chosen domain. Source draws carry labels
    /// sampled from the posterior; target labels are withheld.
    pub fn sample(&self, which: DomainTag, n: usize, seed: u64) -> SampleSet {
        let full = self.sample_labeled(which, n, seed);
        match which {
            DomainTag::Source => full,
            DomainTag::Target => full.without_labels(),
        }
    }

    /// Like [`sample`](Self::sample) but always labeled. Draws are identical
    /// to `sample` for the same arguments.
    pub fn sample_labeled(&self, which: DomainTag, n: usize, seed: u64) -> SampleSet {
        let mut rng = domain_rng(seed, which);
        let density = self.density(which);
        let dim = self.dim();
        let mut points = Vec::with_capacity(n * dim);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let x = density.sample_points(&mut rng, 1);
            let y = rng.random_bool(self.posterior(&x).clamp(0.0, 1.0));
            points.extend(x);
            labels.push(u8::from(y));
        }
        SampleSet::new(dim, points, Some(labels), which).expect("generated samples are well formed")
    }
}

/// ChaCha8 seeded from `seed`, with stream 0 for the source and 1 for the
/// target, so the two domains never share random draws.
pub fn domain_rng(seed: u64, which: DomainTag) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(match which {
        DomainTag::Source => 0,
        DomainTag::Target => 1,
    });
    rng
}

fn check_posterior(posterior: &[f64], n: usize) -> Result<()> {
    if posterior.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: posterior.len(),
        });
    }
    if let Some(v) = posterior.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidParameter(format!("posterior value {v} outside [0, 1]")));
    }
    Ok(())
}

/// How a problem was generated. `build` reproduces it exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ProblemDescriptor {
    Example1 { resolution: usize },
    OverlapA(OverlapParams),
    OverlapB(OverlapParams),
    ClusterBase(ClusterParams),
    LabelShift { base: ClusterParams, shift: ClassShift },
    RandomGrid { seed: u64, params: RandomGridParams },
    Custom { label: String },
}

impl ProblemDescriptor {
    pub fn build(&self) -> Result<SyntheticProblem> {
        match self {
            ProblemDescriptor::Example1 { resolution } => make_example1_at(*resolution),
            ProblemDescriptor::OverlapA(p) => Ok(make_overlap_pair(p)?.0),
            ProblemDescriptor::OverlapB(p) => Ok(make_overlap_pair(p)?.1),
            ProblemDescriptor::ClusterBase(p) => make_cluster_base(p),
            ProblemDescriptor::LabelShift { base, shift } => make_label_shift(&make_cluster_base(base)?, shift),
            ProblemDescriptor::RandomGrid { seed, params } => random_grid_problem(*seed, params),
            ProblemDescriptor::Custom { label } => Err(Error::Unsupported(format!(
                "custom problem {label:?} carries no generator"
            ))),
        }
    }
}

/// Cells per axis of the default quadrant problem. Quadrant boundaries fall
/// on cell edges for any even resolution, so every quantity is exact.
pub const EXAMPLE1_RESOLUTION: usize = 20;

/// Quadrant problem on [-1, 1]^2: the target sits on the lower-left and
/// upper-right quadrants, the source on the other two, and Y = 1 iff x2 > 0.
pub fn make_example1() -> SyntheticProblem {
    make_example1_at(EXAMPLE1_RESOLUTION).expect("default resolution is valid")
}

pub fn make_example1_at(resolution: usize) -> Result<SyntheticProblem> {
    if resolution == 0 || resolution % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "quadrant problem needs an even resolution, got {resolution}"
        )));
    }
    let (lo, hi, res) = (vec![-1.0, -1.0], vec![1.0, 1.0], vec![resolution, resolution]);
    let shape = GridDensity::uniform(lo.clone(), hi.clone(), res.clone())?;
    let mut source = Vec::with_capacity(shape.n_cells());
    let mut target = Vec::with_capacity(shape.n_cells());
    let mut posterior = Vec::with_capacity(shape.n_cells());
    for c in 0..shape.n_cells() {
        let x = shape.cell_center(c);
        let same_sign = (x[0] > 0.0) == (x[1] > 0.0);
        target.push(if same_sign { 0.5 } else { 0.0 });
        source.push(if same_sign { 0.0 } else { 0.5 });
        posterior.push(if x[1] > 0.0 { 1.0 } else { 0.0 });
    }
    SyntheticProblem::from_grids(
        ProblemDescriptor::Example1 { resolution },
        GridDensity::new(lo.clone(), hi.clone(), res.clone(), source)?,
        GridDensity::new(lo, hi, res, target)?,
        posterior,
    )
}

/// One-dimensional overlap problems. The source is uniform on
/// [-source_half_width, source_half_width]. Problem A's target is uniform on
/// [-target_half_width, target_half_width]; Problem B's target keeps
/// (1 - disjoint_fraction) of its mass on the source interval and puts the
/// rest uniformly on [disjoint_lower, disjoint_upper]. Y = 1 iff x > 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapParams {
    pub box_half_width: f64,
    pub resolution: usize,
    pub source_half_width: f64,
    pub target_half_width: f64,
    pub disjoint_fraction: f64,
    pub disjoint_lower: f64,
    pub disjoint_upper: f64,
    /// RBF bandwidth at which MMD(A) > MMD(B) for these parameters.
    pub recorded_sigma: f64,
    /// Density level at which d_supp(A) = 0 and d_supp(B) = disjoint_fraction.
    pub recorded_epsilon: f64,
}

impl Default for OverlapParams {
    fn default() -> Self {
        Self {
            box_half_width: 5.0,
            resolution: 200,
            source_half_width: 2.0,
            target_half_width: 0.5,
            disjoint_fraction: 1.0 / 3.0,
            disjoint_lower: 2.5,
            disjoint_upper: 3.5,
            recorded_sigma: 0.5,
            recorded_epsilon: 0.2,
        }
    }
}

pub fn make_overlap_pair(params: &OverlapParams) -> Result<(SyntheticProblem, SyntheticProblem)> {
    let p = params;
    if !(0.0..=1.0).contains(&p.disjoint_fraction) {
        return Err(Error::InvalidParameter(format!(
            "disjoint fraction {} outside [0, 1]",
            p.disjoint_fraction
        )));
    }
    let inside = |a: f64| a > 0.0 && a <= p.box_half_width;
    if !inside(p.source_half_width) || !inside(p.target_half_width) || p.target_half_width > p.source_half_width {
        return Err(Error::InvalidParameter(
            "need 0 < target_half_width <= source_half_width <= box_half_width".into(),
        ));
    }
    if !(p.disjoint_lower >= p.source_half_width && p.disjoint_upper > p.disjoint_lower && p.disjoint_upper <= p.box_half_width)
    {
        return Err(Error::InvalidParameter(
            "the disjoint interval must lie in the box, to the right of the source".into(),
        ));
    }
    let shape = GridDensity::uniform(vec![-p.box_half_width], vec![p.box_half_width], vec![p.resolution])?;
    // Breakpoints must be cell edges so that every quantity stays exact.
    let width = shape.cell_width(0);
    for b in [
        p.source_half_width,
        p.target_half_width,
        p.disjoint_lower,
        p.disjoint_upper,
    ] {
        let t = (b + p.box_half_width) / width;
        if (t - t.round()).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("breakpoint {b} is not a cell edge")));
        }
    }
    let on = |x: f64, a: f64, b: f64| x > a && x < b;
    let centers: Vec<f64> = (0..shape.n_cells()).map(|c| shape.cell_center(c)[0]).collect();
    let uniform_on = |a: f64, b: f64| -> Vec<f64> {
        centers.iter().map(|x| if on(*x, a, b) { 1.0 } else { 0.0 }).collect()
    };
    let grid = |w: Vec<f64>| {
        GridDensity::from_unnormalized(vec![-p.box_half_width], vec![p.box_half_width], vec![p.resolution], w)
    };
    let source = grid(uniform_on(-p.source_half_width, p.source_half_width))?;
    let target_a = grid(uniform_on(-p.target_half_width, p.target_half_width))?;
    let body = grid(uniform_on(-p.source_half_width, p.source_half_width))?;
    let bump_weights = uniform_on(p.disjoint_lower, p.disjoint_upper);
    let target_b = if p.disjoint_fraction > 0.0 {
        let bump = grid(bump_weights)?;
        let mixed: Vec<f64> = body
            .values()
            .iter()
            .zip(bump.values())
            .map(|(a, b)| (1.0 - p.disjoint_fraction) * a + p.disjoint_fraction * b)
            .collect();
        grid(mixed)?
    } else {
        body
    };
    let posterior: Vec<f64> = centers.iter().map(|x| if *x > 0.0 { 1.0 } else { 0.0 }).collect();
    let a = SyntheticProblem::from_grids(
        ProblemDescriptor::OverlapA(p.clone()),
        source.clone(),
        target_a,
        posterior.clone(),
    )?;
    let b = SyntheticProblem::from_grids(ProblemDescriptor::OverlapB(p.clone()), source, target_b, posterior)?;
    Ok((a, b))
}

/// K truncated Gaussian clusters, each confined to its own unit tile. Tiles
/// are laid out in two rows of ceil(K/2) columns on
/// [-cols/2, cols/2] × [-1, 1]; cluster k sits in column k / 2 and row k % 2,
/// and its class is its row, so Y = 1 iff x2 > 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub clusters: usize,
    pub cluster_sigma: f64,
    pub cells_per_unit: usize,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            clusters: 10,
            cluster_sigma: 0.25,
            cells_per_unit: 10,
        }
    }
}

impl ClusterParams {
    fn columns(&self) -> usize {
        self.clusters.div_ceil(2)
    }

    /// Class of cluster `k`.
    pub fn class_of(&self, k: usize) -> u8 {
        (k % 2) as u8
    }

    fn grid_shape(&self) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
        let half = self.columns() as f64 / 2.0;
        (
            vec![-half, -1.0],
            vec![half, 1.0],
            vec![self.columns() * self.cells_per_unit, 2 * self.cells_per_unit],
        )
    }

    /// Cell weights of each cluster, each normalized to unit mass.
    fn components(&self) -> Result<Vec<GridDensity>> {
        if self.clusters == 0 || self.cells_per_unit == 0 || !(self.cluster_sigma > 0.0) {
            return Err(Error::InvalidParameter(
                "clusters, cells_per_unit and cluster_sigma must be positive".into(),
            ));
        }
        let (lo, hi, res) = self.grid_shape();
        let shape = GridDensity::uniform(lo.clone(), hi.clone(), res.clone())?;
        let half = self.columns() as f64 / 2.0;
        (0..self.clusters)
            .map(|k| {
                let (col, row) = (k / 2, k % 2);
                let cx = -half + col as f64 + 0.5;
                let cy = -1.0 + row as f64 + 0.5;
                let w: Vec<f64> = (0..shape.n_cells())
                    .map(|c| {
                        let x = shape.cell_center(c);
                        let in_tile = (x[0] - cx).abs() < 0.5 && (x[1] - cy).abs() < 0.5;
                        if in_tile {
                            let r2 = (x[0] - cx).powi(2) + (x[1] - cy).powi(2);
                            (-r2 / (2.0 * self.cluster_sigma * self.cluster_sigma)).exp()
                        } else {
                            0.0
                        }
                    })
                    .collect();
                GridDensity::from_unnormalized(lo.clone(), hi.clone(), res.clone(), w)
            })
            .collect()
    }
}

fn mixture(components: &[GridDensity], weights: &[f64]) -> Result<GridDensity> {
    let n = components[0].n_cells();
    let mut v = vec![0.0; n];
    for (g, w) in components.iter().zip(weights) {
        for (acc, x) in v.iter_mut().zip(g.values()) {
            *acc += w * x;
        }
    }
    let g = &components[0];
    GridDensity::from_unnormalized(g.lower().to_vec(), g.upper().to_vec(), g.resolution().to_vec(), v)
}

fn cluster_posterior(shape: &GridDensity) -> Vec<f64> {
    (0..shape.n_cells())
        .map(|c| if shape.cell_center(c)[1] > 0.0 { 1.0 } else { 0.0 })
        .collect()
}

/// Equal-weight cluster mixture shared by both domains.
pub fn make_cluster_base(params: &ClusterParams) -> Result<SyntheticProblem> {
    let comps = params.components()?;
    let equal = vec![1.0; params.clusters];
    let source = mixture(&comps, &equal)?;
    let posterior = cluster_posterior(&source);
    SyntheticProblem::from_grids(
        ProblemDescriptor::ClusterBase(params.clone()),
        source.clone(),
        source,
        posterior,
    )
}

/// Change to the target's cluster weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ClassShift {
    Remove(Vec<usize>),
    Reweight(Vec<f64>),
}

/// Target = base mixture with clusters removed or reweighted; the source and
/// the posterior are unchanged.
pub fn make_label_shift(base: &SyntheticProblem, shift: &ClassShift) -> Result<SyntheticProblem> {
    let params = match &base.descriptor {
        ProblemDescriptor::ClusterBase(p) => p.clone(),
        _ => {
            return Err(Error::InvalidParameter(
                "label shift needs a cluster base problem".into(),
            ))
        }
    };
    let comps = params.components()?;
    let weights = match shift {
        ClassShift::Remove(idx) => {
            let mut w = vec![1.0; params.clusters];
            for &k in idx {
                if k >= params.clusters {
                    return Err(Error::InvalidParameter(format!("no cluster {k}")));
                }
                w[k] = 0.0;
            }
            w
        }
        ClassShift::Reweight(w) => {
            if w.len() != params.clusters {
                return Err(Error::DimensionMismatch {
                    expected: params.clusters,
                    found: w.len(),
                });
            }
            if w.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(Error::InvalidParameter("cluster weights must be non-negative".into()));
            }
            w.clone()
        }
    };
    if weights.iter().all(|w| *w == 0.0) {
        return Err(Error::InvalidParameter("the target would have no clusters left".into()));
    }
    let ProblemSpace::Grid { source, posterior, .. } = &base.space else {
        return Err(Error::InvalidParameter("label shift needs a grid problem".into()));
    };
    SyntheticProblem::from_grids(
        ProblemDescriptor::LabelShift {
            base: params.clone(),
            shift: shift.clone(),
        },
        source.clone(),
        mixture(&comps, &weights)?,
        posterior.clone(),
    )
}

/// Random piecewise-constant problem on [0, 1]^dim. Each cell is empty in a
/// domain with probability `zero_fraction`; posteriors are uniform in [0, 1]
/// or, with probability one half, exactly 0 or 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomGridParams {
    pub dim: usize,
    pub resolution: usize,
    pub zero_fraction: f64,
}

impl Default for RandomGridParams {
    fn default() -> Self {
        Self {
            dim: 2,
            resolution: 8,
            zero_fraction: 0.3,
        }
    }
}

pub fn random_grid_problem(seed: u64, params: &RandomGridParams) -> Result<SyntheticProblem> {
    if params.dim == 0 || params.resolution == 0 || !(0.0..1.0).contains(&params.zero_fraction) {
        return Err(Error::InvalidParameter("invalid random grid parameters".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = params.resolution.pow(params.dim as u32);
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let mut w: Vec<f64> = (0..n)
            .map(|_| {
                if rng.random_bool(params.zero_fraction) {
                    0.0
                } else {
                    rng.random::<f64>()
                }
            })
            .collect();
        if w.iter().all(|v| *v == 0.0) {
            w[rng.random_range(0..n)] = 1.0;
        }
        w
    };
    let ws = draw(&mut rng);
    let wt = draw(&mut rng);
    let posterior: Vec<f64> = (0..n)
        .map(|_| {
            if rng.random_bool(0.5) {
                f64::from(u8::from(rng.random_bool(0.5)))
            } else {
                rng.random::<f64>()
            }
        })
        .collect();
    let lo = vec![0.0; params.dim];
    let hi = vec![1.0; params.dim];
    let res = vec![params.resolution; params.dim];
    SyntheticProblem::from_grids(
        ProblemDescriptor::RandomGrid {
            seed,
            params: params.clone(),
        },
        GridDensity::from_unnormalized(lo.clone(), hi.clone(), res.clone(), ws)?,
        GridDensity::from_unnormalized(lo, hi, res, wt)?,
        posterior,
    )
}
