use serde::{Deserialize, Serialize};

use crate::numeric::pairwise_sum;
use crate::{Error, Result};

const INTEGRAL_TOLERANCE: f64 = 1e-9;

/// Default cells per axis for grids built from samples in one or two dimensions.
pub const DEFAULT_RESOLUTION: usize = 200;

/// Piecewise-constant density on an axis-aligned box.
///
/// Cells are stored row-major (axis 0 slowest). A point on a boundary between
/// two cells belongs to the lower-index cell; the lower face of the box belongs
/// to cell 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    lower: Vec<f64>,
    upper: Vec<f64>,
    resolution: Vec<usize>,
    cell_values: Vec<f64>,
}

impl GridDensity {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, resolution: Vec<usize>, cell_values: Vec<f64>) -> Result<Self> {
        let grid = Self::unchecked(lower, upper, resolution, cell_values)?;
        let integral = pairwise_sum(&grid.cell_values) * grid.cell_volume();
        if (integral - 1.0).abs() > INTEGRAL_TOLERANCE {
            return Err(Error::InvalidDensity(format!("grid integrates to {integral}, expected 1")));
        }
        Ok(grid)
    }

    /// Scales non-negative cell weights so the grid integrates to one.
    pub fn from_unnormalized(
        lower: Vec<f64>,
        upper: Vec<f64>,
        resolution: Vec<usize>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let mut grid = Self::unchecked(lower, upper, resolution, weights)?;
        let integral = pairwise_sum(&grid.cell_values) * grid.cell_volume();
        if !(integral > 0.0) {
            return Err(Error::InvalidDensity("cell weights sum to zero".into()));
        }
        for v in &mut grid.cell_values {
            *v /= integral;
        }
        Ok(grid)
    }

    pub fn uniform(lower: Vec<f64>, upper: Vec<f64>, resolution: Vec<usize>) -> Result<Self> {
        let n = resolution.iter().product();
        Self::from_unnormalized(lower, upper, resolution, vec![1.0; n])
    }

    /// Normalized histogram of `points` (row-major, `lower.len()` columns).
    /// Points outside the box are ignored.
    pub fn histogram(lower: Vec<f64>, upper: Vec<f64>, resolution: Vec<usize>, points: &[f64]) -> Result<Self> {
        let n: usize = resolution.iter().product();
        let empty = Self::unchecked(lower, upper, resolution, vec![0.0; n])?;
        let dim = empty.dim();
        let mut counts = vec![0.0; n];
        for p in points.chunks(dim) {
            if let Some(c) = empty.cell_index(p) {
                counts[c] += 1.0;
            }
        }
        let Self {
            lower,
            upper,
            resolution,
            ..
        } = empty;
        Self::from_unnormalized(lower, upper, resolution, counts)
    }

    fn unchecked(lower: Vec<f64>, upper: Vec<f64>, resolution: Vec<usize>, cell_values: Vec<f64>) -> Result<Self> {
        let d = lower.len();
        if d == 0 {
            return Err(Error::InvalidDensity("grid needs at least one axis".into()));
        }
        if upper.len() != d || resolution.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: upper.len().min(resolution.len()),
            });
        }
        for k in 0..d {
            if !(upper[k] > lower[k]) || !lower[k].is_finite() || !upper[k].is_finite() {
                return Err(Error::InvalidDensity(format!("axis {k} has an empty or non-finite extent")));
            }
            if resolution[k] == 0 {
                return Err(Error::InvalidDensity(format!("axis {k} has zero cells")));
            }
        }
        let n: usize = resolution.iter().product();
        if cell_values.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: cell_values.len(),
            });
        }
        if let Some((i, v)) = cell_values.iter().enumerate().find(|(_, v)| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidDensity(format!("cell {i} has value {v}")));
        }
        Ok(Self {
            lower,
            upper,
            resolution,
            cell_values,
        })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn values(&self) -> &[f64] {
        &self.cell_values
    }

    pub fn n_cells(&self) -> usize {
        self.cell_values.len()
    }

    pub fn cell_width(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / self.resolution[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|k| self.cell_width(k)).product()
    }

    /// Coordinate of the `i`-th cell boundary along `axis` (0 ..= resolution).
    pub fn edge(&self, axis: usize, i: usize) -> f64 {
        if i == self.resolution[axis] {
            return self.upper[axis];
        }
        self.lower[axis] + (self.upper[axis] - self.lower[axis]) * i as f64 / self.resolution[axis] as f64
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        let mut rest = flat;
        for k in (0..self.dim()).rev() {
            idx[k] = rest % self.resolution[k];
            rest /= self.resolution[k];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.resolution)
            .fold(0, |acc, (i, n)| acc * n + i)
    }

    /// Lower and upper corners of a cell.
    pub fn cell_bounds(&self, flat: usize) -> (Vec<f64>, Vec<f64>) {
        let idx = self.multi_index(flat);
        let lo = idx.iter().enumerate().map(|(k, &i)| self.edge(k, i)).collect();
        let hi = idx.iter().enumerate().map(|(k, &i)| self.edge(k, i + 1)).collect();
        (lo, hi)
    }

    pub fn cell_center(&self, flat: usize) -> Vec<f64> {
        let (lo, hi) = self.cell_bounds(flat);
        lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn cell_mass(&self, flat: usize) -> f64 {
        self.cell_values[flat] * self.cell_volume()
    }

    pub fn masses(&self) -> Vec<f64> {
        let vol = self.cell_volume();
        self.cell_values.iter().map(|v| v * vol).collect()
    }

    fn axis_index(&self, axis: usize, x: f64) -> Option<usize> {
        let (lo, hi, n) = (self.lower[axis], self.upper[axis], self.resolution[axis]);
        if !(x >= lo && x <= hi) {
            return None;
        }
        let t = (x - lo) / (hi - lo) * n as f64;
        let i = if t <= 0.0 { 0 } else { t.ceil() as usize - 1 };
        Some(i.min(n - 1))
    }

    /// Cell containing `point`, or `None` outside the box.
    pub fn cell_index(&self, point: &[f64]) -> Option<usize> {
        let mut flat = 0;
        for (k, &x) in point.iter().enumerate() {
            flat = flat * self.resolution[k] + self.axis_index(k, x)?;
        }
        Some(flat)
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: point.len(),
            });
        }
        Ok(self.cell_index(point).map_or(0.0, |c| self.cell_values[c]))
    }

    /// Integral of the density over the axis-aligned region `[lo, hi]`.
    /// Cells cut by the region contribute in proportion to the overlapped volume.
    pub fn integrate(&self, lo: &[f64], hi: &[f64]) -> Result<f64> {
        let d = self.dim();
        if lo.len() != d || hi.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: lo.len().min(hi.len()),
            });
        }
        if lo.iter().zip(hi).any(|(a, b)| !(b > a)) {
            return Err(Error::DegenerateRegion("region has zero volume".into()));
        }
        // per-axis list of (cell index, overlapped fraction of that cell)
        let mut axes: Vec<Vec<(usize, f64)>> = Vec::with_capacity(d);
        for k in 0..d {
            let mut cover = Vec::new();
            let w = self.cell_width(k);
            for i in 0..self.resolution[k] {
                let (a, b) = (self.edge(k, i), self.edge(k, i + 1));
                let overlap = b.min(hi[k]) - a.max(lo[k]);
                if overlap > 0.0 {
                    cover.push((i, (overlap / w).min(1.0)));
                }
            }
            if cover.is_empty() {
                return Ok(0.0);
            }
            axes.push(cover);
        }
        let mut terms = Vec::new();
        let mut cursor = vec![0usize; d];
        loop {
            let mut flat = 0;
            let mut frac = 1.0;
            for k in 0..d {
                let (i, f) = axes[k][cursor[k]];
                flat = flat * self.resolution[k] + i;
                frac *= f;
            }
            terms.push(self.cell_values[flat] * frac);
            let mut k = d;
            loop {
                if k == 0 {
                    return Ok(pairwise_sum(&terms) * self.cell_volume());
                }
                k -= 1;
                cursor[k] += 1;
                if cursor[k] < axes[k].len() {
                    break;
                }
                cursor[k] = 0;
            }
        }
    }

    /// Same box and resolution.
    pub fn same_structure(&self, other: &GridDensity) -> bool {
        self.lower == other.lower && self.upper == other.upper && self.resolution == other.resolution
    }
}
