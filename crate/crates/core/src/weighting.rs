//! Truncated importance weights w(x) = q(x)/p(x) where p(x) ≥ ε and 1
//! elsewhere, weighted risks, and the weighted-expectation bound
//! E_q[ℓ] ≤ E_p[w ℓ] + M · d_supp(p ‖ q).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::densities::{Density, DiscreteDensity, SampleSet};
use crate::divergence::{support_divergence_exact, Epsilon};
use crate::hypotheses::{Hypothesis, Loss};
use crate::numeric::pairwise_sum;
use crate::{Error, Result};

/// The densities and level defining a truncated weight. The caller supplies
/// the densities (exact or plug-in); nothing is re-estimated here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightConfig {
    pub eps: Epsilon,
    pub source_density: Density,
    pub target_density: Density,
}

impl WeightConfig {
    pub fn new(eps: Epsilon, source_density: Density, target_density: Density) -> Result<Self> {
        if source_density.dim() != target_density.dim() {
            return Err(Error::DimensionMismatch {
                expected: source_density.dim(),
                found: target_density.dim(),
            });
        }
        Ok(Self {
            eps,
            source_density,
            target_density,
        })
    }
}

pub fn weight_from_values(p_at_x: f64, q_at_x: f64, eps: Epsilon) -> f64 {
    if p_at_x >= eps.value() {
        q_at_x / p_at_x
    } else {
        1.0
    }
}

pub fn truncated_weight(config: &WeightConfig, point: &[f64]) -> Result<f64> {
    let p = config.source_density.evaluate(point)?;
    let q = config.target_density.evaluate(point)?;
    Ok(weight_from_values(p, q, config.eps))
}

/// Weights at every sample, in order.
pub fn truncated_weights(config: &WeightConfig, samples: &SampleSet) -> Result<Vec<f64>> {
    let p = config.source_density.evaluate_samples(samples)?;
    let q = config.target_density.evaluate_samples(samples)?;
    Ok(p.iter().zip(&q).map(|(p, q)| weight_from_values(*p, *q, config.eps)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedRisk {
    /// (1/n) Σ w_i ℓ(h(x_i), y_i).
    pub risk: f64,
    /// (1/n) Σ w_i², a variance diagnostic.
    pub weight_second_moment: f64,
    pub n: usize,
}

pub fn weighted_risk(samples: &SampleSet, weights: &[f64], hypothesis: &Hypothesis, loss: &Loss) -> Result<WeightedRisk> {
    let y = samples.require_labels()?;
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if weights.len() != samples.len() {
        return Err(Error::DimensionMismatch {
            expected: samples.len(),
            found: weights.len(),
        });
    }
    if let Some((index, value)) = weights.iter().enumerate().find(|(_, w)| !(**w >= 0.0)) {
        return Err(Error::NegativeWeight { index, value: *value });
    }
    if samples.dim() != hypothesis.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: hypothesis.input_dim(),
            found: samples.dim(),
        });
    }
    let n = samples.len();
    let terms: Vec<f64> = samples
        .points()
        .zip(y)
        .zip(weights)
        .map(|((x, y), w)| w * loss.value(hypothesis.predict(x), *y))
        .collect();
    let squares: Vec<f64> = weights.iter().map(|w| w * w).collect();
    Ok(WeightedRisk {
        risk: pairwise_sum(&terms) / n as f64,
        weight_second_moment: pairwise_sum(&squares) / n as f64,
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Bound {
    /// E_q[ℓ].
    pub lhs: f64,
    /// E_p[w ℓ].
    pub weighted_term: f64,
    /// M · d_supp(p ‖ q).
    pub support_term: f64,
    pub rhs: f64,
}

/// Evaluates both sides of E_q[ℓ] ≤ E_p[w ℓ] + M · d_supp(p ‖ q) on a finite
/// state space.
pub fn lemma1_bound(
    p: &DiscreteDensity,
    q: &DiscreteDensity,
    loss_values: &[f64],
    m: f64,
    eps: Epsilon,
) -> Result<Lemma1Bound> {
    if !p.same_states(q) {
        return Err(Error::MismatchedSupport("p and q have different states".into()));
    }
    if loss_values.len() != p.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: loss_values.len(),
        });
    }
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::InvalidParameter(format!("loss bound must be positive, got {m}")));
    }
    if let Some(v) = loss_values.iter().find(|v| !(0.0..=m).contains(*v)) {
        return Err(Error::LossOutOfRange { value: *v, bound: m });
    }
    let (pp, qq) = (p.probabilities(), q.probabilities());
    let lhs_terms: Vec<f64> = qq.iter().zip(loss_values).map(|(q, l)| q * l).collect();
    let weighted: Vec<f64> = (0..pp.len())
        .map(|i| pp[i] * weight_from_values(pp[i], qq[i], eps) * loss_values[i])
        .collect();
    let d = support_divergence_exact(&p.clone().into(), &q.clone().into(), eps)?.value;
    let weighted_term = pairwise_sum(&weighted);
    let support_term = m * d;
    Ok(Lemma1Bound {
        lhs: pairwise_sum(&lhs_terms),
        weighted_term,
        support_term,
        rhs: weighted_term + support_term,
    })
}

/// Writes a single `weight` column aligned with the rows of a sample file.
pub fn write_weights_csv<W: Write>(writer: W, weights: &[f64]) -> Result<()> {
    let mut w = std::io::BufWriter::new(writer);
    writeln!(w, "weight")?;
    for v in weights {
        writeln!(w, "{v:?}")?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::{DomainTag, GridDensity};
    use crate::hypotheses::{Predictor, Representation};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn eps(v: f64) -> Epsilon {
        Epsilon::new(v).unwrap()
    }

    fn disc(p: &[f64]) -> DiscreteDensity {
        DiscreteDensity::new(p.to_vec()).unwrap()
    }

    #[test]
    fn weight_branches() {
        assert_eq!(weight_from_values(0.5, 0.25, eps(0.3)), 0.5);
        assert_eq!(weight_from_values(0.1, 0.9, eps(0.3)), 1.0);
        assert_eq!(weight_from_values(0.4, 0.4, eps(0.3)), 1.0);
        let g: Density = GridDensity::uniform(vec![0.0], vec![1.0], vec![4]).unwrap().into();
        let cfg = WeightConfig::new(eps(0.5), g.clone(), g).unwrap();
        assert_eq!(truncated_weight(&cfg, &[0.3]).unwrap(), 1.0);
        assert!(truncated_weight(&cfg, &[0.3, 0.1]).is_err());
    }

    #[test]
    fn worked_instance_is_tight() {
        let b = lemma1_bound(&disc(&[0.5, 0.5, 0.0]), &disc(&[0.25, 0.25, 0.5]), &[0.0, 1.0, 1.0], 1.0, eps(0.1))
            .unwrap();
        assert!((b.lhs - 0.75).abs() < 1e-15);
        assert!((b.weighted_term - 0.25).abs() < 1e-15);
        assert!((b.support_term - 0.5).abs() < 1e-15);
        assert!((b.rhs - 0.75).abs() < 1e-15);
    }

    #[test]
    fn equal_densities_give_equality() {
        let p = disc(&[0.2, 0.3, 0.5]);
        let b = lemma1_bound(&p, &p, &[0.3, 0.9, 0.1], 1.0, eps(0.5)).unwrap();
        assert_eq!(b.support_term, 0.0);
        assert!((b.lhs - b.rhs).abs() < 1e-15);
    }

    #[test]
    fn rejects_out_of_range_loss() {
        let p = disc(&[0.5, 0.5]);
        assert!(matches!(
            lemma1_bound(&p, &p, &[0.5, 1.5], 1.0, eps(0.1)),
            Err(Error::LossOutOfRange { .. })
        ));
    }

    #[test]
    fn random_instances_and_epsilon_tradeoff() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..2000 {
            let k = rng.random_range(1..8);
            let mut draw = || {
                let w: Vec<f64> = (0..k).map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random() }).collect();
                if w.iter().sum::<f64>() == 0.0 {
                    disc(&vec![1.0 / k as f64; k])
                } else {
                    DiscreteDensity::from_weights(w).unwrap()
                }
            };
            let (p, q) = (draw(), draw());
            let m = rng.random_range(0.5..3.0);
            let loss: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..m)).collect();
            let mut prev_support = 0.0;
            let mut prev_ratio_states = usize::MAX;
            for e in [1e-4, 0.01, 0.1, 0.3, 0.6, 1.0] {
                let b = lemma1_bound(&p, &q, &loss, m, eps(e)).unwrap();
                assert!(b.lhs <= b.rhs + 1e-12);
                assert!(b.support_term >= prev_support - 1e-15);
                let ratio_states = p.probabilities().iter().filter(|v| **v >= e).count();
                assert!(ratio_states <= prev_ratio_states);
                prev_support = b.support_term;
                prev_ratio_states = ratio_states;
            }
        }
    }

    #[test]
    fn small_epsilon_on_full_overlap_is_exact() {
        let p = disc(&[0.1, 0.2, 0.3, 0.4]);
        let q = disc(&[0.4, 0.3, 0.2, 0.1]);
        let b = lemma1_bound(&p, &q, &[1.0, 0.0, 0.5, 0.2], 1.0, eps(0.05)).unwrap();
        assert_eq!(b.support_term, 0.0);
        assert!((b.lhs - b.rhs).abs() < 1e-15);
    }

    #[test]
    fn weighted_risk_checks() {
        let s = SampleSet::new(1, vec![0.0, 1.0, 2.0], Some(vec![0, 1, 1]), DomainTag::Source).unwrap();
        let h = Hypothesis::new(Representation::identity(1), Predictor::Constant { value: 1 }).unwrap();
        let r = weighted_risk(&s, &[1.0, 1.0, 1.0], &h, &Loss::ZeroOne).unwrap();
        assert!((r.risk - 1.0 / 3.0).abs() < 1e-15);
        let r = weighted_risk(&s, &[3.0, 0.0, 0.0], &h, &Loss::ZeroOne).unwrap();
        assert_eq!((r.risk, r.weight_second_moment), (1.0, 3.0));
        assert!(matches!(
            weighted_risk(&s, &[1.0, -1.0, 1.0], &h, &Loss::ZeroOne),
            Err(Error::NegativeWeight { index: 1, .. })
        ));
        assert!(matches!(
            weighted_risk(&s.without_labels(), &[1.0; 3], &h, &Loss::ZeroOne),
            Err(Error::MissingLabels)
        ));
        let perfect = Hypothesis::new(
            Representation::identity(1),
            Predictor::Threshold {
                axis: 0,
                cutoff: 0.5,
                orientation: crate::hypotheses::Orientation::Greater,
            },
        )
        .unwrap();
        assert_eq!(weighted_risk(&s, &[5.0, 0.1, 2.0], &perfect, &Loss::ZeroOne).unwrap().risk, 0.0);
    }

    #[test]
    fn weights_csv_column() {
        let mut buf = Vec::new();
        write_weights_csv(&mut buf, &[1.0, 0.5]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "weight\n1.0\n0.5\n");
    }
}
