//! Densities: discrete masses, piecewise-constant grids, and kernel density
//! estimates, plus the sample container and its CSV format.

mod discrete;
mod grid;
mod kde;
mod samples;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use discrete::DiscreteDensity;
pub use grid::{GridDensity, DEFAULT_RESOLUTION};
pub use kde::{fit_kde, silverman_bandwidth, BandwidthRule, KdeDensity, KdeKernel};
pub use samples::{read_csv_by_domain, DomainTag, SampleSet};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Density {
    Discrete(DiscreteDensity),
    Grid(GridDensity),
    Kde(KdeDensity),
}

impl Density {
    pub fn dim(&self) -> usize {
        match self {
            Density::Discrete(d) => d.dim(),
            Density::Grid(g) => g.dim(),
            Density::Kde(k) => k.dim(),
        }
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<f64> {
        match self {
            Density::Discrete(d) => d.evaluate(point),
            Density::Grid(g) => g.evaluate(point),
            Density::Kde(k) => k.evaluate(point),
        }
    }

    /// Evaluates at every point of `samples`, in order.
    pub fn evaluate_samples(&self, samples: &SampleSet) -> Result<Vec<f64>> {
        if samples.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: samples.dim(),
            });
        }
        samples
            .flat_points()
            .par_chunks(samples.dim())
            .map(|p| self.evaluate(p))
            .collect()
    }

    /// Draws `n` points (row-major) from the density.
    pub fn sample_points<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(n * self.dim());
        match self {
            Density::Discrete(d) => {
                let cdf = cumulative(d.probabilities());
                for _ in 0..n {
                    out.extend(d.location(pick(&cdf, rng)));
                }
            }
            Density::Grid(g) => {
                let cdf = cumulative(&g.masses());
                for _ in 0..n {
                    let (lo, hi) = g.cell_bounds(pick(&cdf, rng));
                    for k in 0..lo.len() {
                        out.push(lo[k] + rng.random::<f64>() * (hi[k] - lo[k]));
                    }
                }
            }
            Density::Kde(kde) => {
                for _ in 0..n {
                    let i = rng.random_range(0..kde.n_points());
                    let centre = kde.support_point(i);
                    for k in 0..kde.dim() {
                        let z: f64 = StandardNormal.sample(rng);
                        out.push(centre[k] + kde.bandwidth()[k] * z);
                    }
                }
            }
        }
        out
    }
}

pub(crate) fn cumulative(masses: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = masses
        .iter()
        .map(|m| {
            acc += m;
            acc
        })
        .collect();
    if let Some(last) = cdf.last_mut() {
        let total = *last;
        for c in cdf.iter_mut() {
            *c /= total;
        }
    }
    cdf
}

/// Index of the first cumulative value exceeding a uniform draw; states with
/// zero mass are never chosen.
pub(crate) fn pick<R: Rng + ?Sized>(cdf: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    cdf.partition_point(|c| *c <= u).min(cdf.len() - 1)
}

impl From<DiscreteDensity> for Density {
    fn from(d: DiscreteDensity) -> Self {
        Density::Discrete(d)
    }
}

impl From<GridDensity> for Density {
    fn from(g: GridDensity) -> Self {
        Density::Grid(g)
    }
}

impl From<KdeDensity> for Density {
    fn from(k: KdeDensity) -> Self {
        Density::Kde(k)
    }
}

/// How plug-in densities are obtained from samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "estimator", rename_all = "snake_case")]
pub enum EstimatorConfig {
    Kde { bandwidth: BandwidthRule },
    /// Histogram on the bounding box of the pooled samples, padded by half a
    /// bin on each side.
    Histogram { bins: usize },
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig::Kde {
            bandwidth: BandwidthRule::Silverman,
        }
    }
}

/// Largest histogram the estimator will allocate.
const MAX_HISTOGRAM_CELLS: usize = 10_000_000;

impl EstimatorConfig {
    /// Fits a density to `samples`. The histogram box covers every set in
    /// `pooled` so that densities fitted for two domains share one grid.
    pub fn fit(&self, samples: &SampleSet, pooled: &[&SampleSet]) -> Result<Density> {
        match self {
            EstimatorConfig::Kde { bandwidth } => Ok(fit_kde(samples, bandwidth)?.into()),
            EstimatorConfig::Histogram { bins } => {
                if samples.is_empty() {
                    return Err(Error::EmptySamples);
                }
                if *bins == 0 {
                    return Err(Error::InvalidParameter("histogram needs at least one bin".into()));
                }
                let d = samples.dim();
                if bins.checked_pow(d as u32).is_none_or(|c| c > MAX_HISTOGRAM_CELLS) {
                    return Err(Error::Unsupported(format!("{bins}^{d} histogram cells")));
                }
                let mut lo = vec![f64::INFINITY; d];
                let mut hi = vec![f64::NEG_INFINITY; d];
                for set in pooled.iter().copied().chain(std::iter::once(samples)) {
                    if set.dim() != d {
                        return Err(Error::DimensionMismatch {
                            expected: d,
                            found: set.dim(),
                        });
                    }
                    for p in set.points() {
                        for k in 0..d {
                            lo[k] = lo[k].min(p[k]);
                            hi[k] = hi[k].max(p[k]);
                        }
                    }
                }
                for k in 0..d {
                    let span = if hi[k] > lo[k] { hi[k] - lo[k] } else { 1.0 };
                    let pad = 0.5 * span / (*bins as f64 - 1.0).max(1.0);
                    lo[k] -= pad;
                    hi[k] += pad;
                }
                Ok(GridDensity::histogram(lo, hi, vec![*bins; d], samples.flat_points())?.into())
            }
        }
    }
}

/// Nearest-rank `q`-quantile of the density values at the probe points.
pub fn density_quantile(density: &Density, probe_points: &SampleSet, q: f64) -> Result<f64> {
    if probe_points.is_empty() {
        return Err(Error::EmptySamples);
    }
    let values = density.evaluate_samples(probe_points)?;
    nearest_rank(values, q)
}

pub(crate) fn nearest_rank(mut values: Vec<f64>, q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidParameter(format!("quantile level {q} is not in (0, 1)")));
    }
    if values.is_empty() {
        return Err(Error::EmptySamples);
    }
    values.sort_by(f64::total_cmp);
    let rank = ((q * values.len() as f64).ceil() as usize).clamp(1, values.len());
    Ok(values[rank - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quantile_order_statistic() {
        let d: Density = DiscreteDensity::new(vec![0.1, 0.9]).unwrap().into();
        let probe = SampleSet::from_rows(&[vec![0.0], vec![1.0]], None, DomainTag::Source).unwrap();
        assert_eq!(density_quantile(&d, &probe, 0.25).unwrap(), 0.1);
        let uniform: Density = GridDensity::uniform(vec![0.0], vec![2.0], vec![4]).unwrap().into();
        let probe = SampleSet::from_rows(&[vec![0.3], vec![1.2], vec![1.9]], None, DomainTag::Source).unwrap();
        assert_eq!(density_quantile(&uniform, &probe, 0.5).unwrap(), 0.5);
        let empty = SampleSet::new(1, vec![], None, DomainTag::Source).unwrap();
        assert!(density_quantile(&uniform, &empty, 0.5).is_err());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let g: Density = GridDensity::uniform(vec![0.0, 0.0], vec![1.0, 1.0], vec![2, 2]).unwrap().into();
        assert!(matches!(g.evaluate(&[0.5]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn json_round_trip_carries_kind() {
        let g: Density = GridDensity::uniform(vec![0.0], vec![1.0], vec![2]).unwrap().into();
        let text = serde_json::to_string(&g).unwrap();
        assert!(text.contains("\"kind\":\"grid\""));
        let back: Density = serde_json::from_str(&text).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn histogram_estimator_shares_box() {
        let a = SampleSet::from_rows(&[vec![0.0], vec![1.0]], None, DomainTag::Source).unwrap();
        let b = SampleSet::from_rows(&[vec![3.0]], None, DomainTag::Target).unwrap();
        let cfg = EstimatorConfig::Histogram { bins: 4 };
        let (Density::Grid(ga), Density::Grid(gb)) = (cfg.fit(&a, &[&b]).unwrap(), cfg.fit(&b, &[&a]).unwrap()) else {
            panic!("histogram must give a grid");
        };
        assert!(ga.same_structure(&gb));
        assert!(gb.evaluate(&[3.0]).unwrap() > 0.0);
    }

    proptest! {
        #[test]
        fn densities_are_non_negative(
            pts in prop::collection::vec(-3.0f64..3.0, 2..40),
            probes in prop::collection::vec(-6.0f64..6.0, 1..50),
            h in 0.05f64..2.0,
        ) {
            let s = SampleSet::new(1, pts, None, DomainTag::Source).unwrap();
            let kde: Density = fit_kde(&s, &BandwidthRule::Fixed(h)).unwrap().into();
            for p in &probes {
                prop_assert!(kde.evaluate(&[*p]).unwrap() >= 0.0);
            }
            for p in s.points() {
                prop_assert!(kde.evaluate(p).unwrap() > 0.0);
            }
        }

        #[test]
        fn grid_partition_integrates_to_one(
            w in prop::collection::vec(0.0f64..5.0, 12),
            cut in 1usize..6,
            frac in 0.0f64..1.0,
        ) {
            prop_assume!(w.iter().sum::<f64>() > 0.0);
            let g = GridDensity::from_unnormalized(vec![-1.0, 0.0], vec![2.0, 1.0], vec![6, 2], w).unwrap();
            let x = -1.0 + 3.0 * (cut as f64 + frac) / 6.0;
            let y = 0.3;
            let parts = [
                g.integrate(&[-1.0, 0.0], &[x, y]).unwrap(),
                g.integrate(&[x, 0.0], &[2.0, y]).unwrap_or(0.0),
                g.integrate(&[-1.0, y], &[x, 1.0]).unwrap(),
                g.integrate(&[x, y], &[2.0, 1.0]).unwrap_or(0.0),
            ];
            prop_assert!((parts.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
