use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::densities::SampleSet;
use crate::numeric::{pairwise_sum, squared_distance};
use crate::{Error, Result};

/// Largest number of pooled points used by the median heuristic; larger pools
/// are subsampled with a fixed stride.
const MEDIAN_HEURISTIC_POINTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    Gaussian,
}

/// Gaussian RBF kernel k(x, y) = exp(-|x - y|^2 / (2 sigma^2)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub family: KernelFamily,
    pub sigma: f64,
}

impl Kernel {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!("kernel bandwidth must be positive, got {sigma}")));
        }
        Ok(Self {
            family: KernelFamily::Gaussian,
            sigma,
        })
    }

    /// Gaussian kernel whose bandwidth is the median pairwise distance of the
    /// pooled samples.
    pub fn median_heuristic(a: &SampleSet, b: &SampleSet) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                found: b.dim(),
            });
        }
        let pooled: Vec<&[f64]> = a.points().chain(b.points()).collect();
        if pooled.len() < 2 {
            return Err(Error::InsufficientSamples {
                needed: 2,
                got: pooled.len(),
            });
        }
        let stride = pooled.len().div_ceil(MEDIAN_HEURISTIC_POINTS);
        let chosen: Vec<&[f64]> = pooled.into_iter().step_by(stride).collect();
        let mut dists = Vec::with_capacity(chosen.len() * (chosen.len() - 1) / 2);
        for i in 0..chosen.len() {
            for j in i + 1..chosen.len() {
                dists.push(squared_distance(chosen[i], chosen[j]).sqrt());
            }
        }
        dists.sort_by(f64::total_cmp);
        let m = dists.len();
        let median = if m % 2 == 1 {
            dists[m / 2]
        } else {
            0.5 * (dists[m / 2 - 1] + dists[m / 2])
        };
        if !(median > 0.0) {
            return Err(Error::InvalidParameter(
                "median pairwise distance is zero; give the kernel bandwidth explicitly".into(),
            ));
        }
        Self::gaussian(median)
    }

    pub fn evaluate(&self, x: &[f64], y: &[f64]) -> f64 {
        (-squared_distance(x, y) / (2.0 * self.sigma * self.sigma)).exp()
    }

    pub(crate) fn gamma(&self) -> f64 {
        1.0 / (2.0 * self.sigma * self.sigma)
    }
}

/// Σ_i Σ_j w_i v_j k(x_i, y_j), optionally skipping i = j, with rows
/// evaluated in parallel and combined by pairwise summation so the result
/// does not depend on the thread count.
pub(crate) fn weighted_kernel_sum(
    x: &SampleSet,
    wx: Option<&[f64]>,
    y: &SampleSet,
    wy: Option<&[f64]>,
    kernel: &Kernel,
    skip_diagonal: bool,
) -> f64 {
    let gamma = kernel.gamma();
    let dim = x.dim();
    let ys = y.flat_points();
    let rows: Vec<f64> = x
        .flat_points()
        .par_chunks(dim)
        .enumerate()
        .map(|(i, xi)| {
            let w = wx.map_or(1.0, |w| w[i]);
            if w == 0.0 {
                return 0.0;
            }
            let mut row = Vec::with_capacity(ys.len() / dim);
            for (j, yj) in ys.chunks_exact(dim).enumerate() {
                if skip_diagonal && i == j {
                    continue;
                }
                let v = wy.map_or(1.0, |w| w[j]);
                if v == 0.0 {
                    continue;
                }
                row.push(v * (-gamma * squared_distance(xi, yj)).exp());
            }
            w * pairwise_sum(&row)
        })
        .collect();
    pairwise_sum(&rows)
}

pub(crate) fn check_pair(a: &SampleSet, b: &SampleSet) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySamples);
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}
