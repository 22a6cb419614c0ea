use serde::{Deserialize, Serialize};

use super::SampleSet;
use crate::numeric::sample_std;
use crate::{Error, Result};

/// Kernel terms further than this many bandwidths along axis 0 are skipped;
/// their weight, exp(-40.5), is below f64 resolution relative to the peak.
const CUTOFF_BANDWIDTHS: f64 = 9.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KdeKernel {
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "snake_case")]
pub enum BandwidthRule {
    Fixed(f64),
    PerAxis(Vec<f64>),
    /// 1.06 σ̂ n^(-1/5) in one dimension; the normal-reference rule
    /// σ̂_k (4 / ((d + 2) n))^(1 / (d + 4)) otherwise.
    Silverman,
}

/// Gaussian product-kernel density estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeDensity {
    dim: usize,
    /// Row-major support points, sorted by their first coordinate.
    support_points: Vec<f64>,
    bandwidth: Vec<f64>,
    kernel: KdeKernel,
}

impl KdeDensity {
    pub fn new(dim: usize, support_points: Vec<f64>, bandwidth: Vec<f64>) -> Result<Self> {
        if dim == 0 || support_points.len() % dim != 0 {
            return Err(Error::InvalidDensity("support points do not match dimension".into()));
        }
        if support_points.is_empty() {
            return Err(Error::EmptySamples);
        }
        if bandwidth.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bandwidth.len(),
            });
        }
        if let Some(h) = bandwidth.iter().find(|h| !(**h > 0.0) || !h.is_finite()) {
            return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {h}")));
        }
        if support_points.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDensity("support points must be finite".into()));
        }
        let mut rows: Vec<&[f64]> = support_points.chunks(dim).collect();
        rows.sort_by(|a, b| a[0].total_cmp(&b[0]));
        let support_points = rows.concat();
        Ok(Self {
            dim,
            support_points,
            bandwidth,
            kernel: KdeKernel::Gaussian,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_points(&self) -> usize {
        self.support_points.len() / self.dim
    }

    pub fn bandwidth(&self) -> &[f64] {
        &self.bandwidth
    }

    pub fn kernel(&self) -> KdeKernel {
        self.kernel
    }

    pub fn support_point(&self, i: usize) -> &[f64] {
        &self.support_points[i * self.dim..(i + 1) * self.dim]
    }

    fn norm_constant(&self) -> f64 {
        let root_two_pi = (2.0 * std::f64::consts::PI).sqrt();
        self.bandwidth.iter().map(|h| 1.0 / (h * root_two_pi)).product()
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: point.len(),
            });
        }
        Ok(self.evaluate_unchecked(point))
    }

    pub(crate) fn evaluate_unchecked(&self, point: &[f64]) -> f64 {
        let n = self.n_points();
        let reach = CUTOFF_BANDWIDTHS * self.bandwidth[0];
        let first = |i: usize| self.support_points[i * self.dim];
        let start = partition(n, |i| first(i) < point[0] - reach);
        let end = partition(n, |i| first(i) <= point[0] + reach);
        let mut sum = 0.0;
        for i in start..end {
            let row = self.support_point(i);
            let mut e = 0.0;
            for k in 0..self.dim {
                let u = (point[k] - row[k]) / self.bandwidth[k];
                e += u * u;
            }
            sum += (-0.5 * e).exp();
        }
        self.norm_constant() * sum / n as f64
    }
}

/// First index in `0..n` for which `pred` is false, assuming `pred` is
/// monotone (true then false).
fn partition(n: usize, pred: impl Fn(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (0, n);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if pred(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Silverman / normal-reference bandwidths for each axis of `samples`.
pub fn silverman_bandwidth(samples: &SampleSet) -> Result<Vec<f64>> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::EmptySamples);
    }
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    let d = samples.dim();
    let factor = if d == 1 {
        1.06 * (n as f64).powf(-0.2)
    } else {
        (4.0 / ((d as f64 + 2.0) * n as f64)).powf(1.0 / (d as f64 + 4.0))
    };
    (0..d)
        .map(|k| {
            let s = sample_std(&samples.column(k));
            if s > 0.0 {
                Ok(factor * s)
            } else {
                Err(Error::ZeroVariance { axis: k })
            }
        })
        .collect()
}

pub fn fit_kde(samples: &SampleSet, rule: &BandwidthRule) -> Result<KdeDensity> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let d = samples.dim();
    let bandwidth = match rule {
        BandwidthRule::Fixed(h) => vec![*h; d],
        BandwidthRule::PerAxis(h) => h.clone(),
        BandwidthRule::Silverman => silverman_bandwidth(samples)?,
    };
    KdeDensity::new(d, samples.flat_points().to_vec(), bandwidth)
}
