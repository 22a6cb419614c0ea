use serde::{Deserialize, Serialize};

use super::grid::GridDensity;
use crate::{Error, Result};

const MASS_TOLERANCE: f64 = 1e-12;

/// Probability mass over a finite state space.
///
/// States are located at `atoms` when given; otherwise state `i` sits at the
/// one-dimensional point `[i]`. Hypotheses and kernels act on these locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDensity {
    probabilities: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    atoms: Option<Vec<Vec<f64>>>,
}

impl DiscreteDensity {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        validate_masses(&probabilities)?;
        Ok(Self {
            probabilities,
            atoms: None,
        })
    }

    pub fn with_atoms(probabilities: Vec<f64>, atoms: Vec<Vec<f64>>) -> Result<Self> {
        validate_masses(&probabilities)?;
        if atoms.len() != probabilities.len() {
            return Err(Error::DimensionMismatch {
                expected: probabilities.len(),
                found: atoms.len(),
            });
        }
        let dim = atoms[0].len();
        if dim == 0 {
            return Err(Error::InvalidDensity("atoms must have at least one coordinate".into()));
        }
        for (i, a) in atoms.iter().enumerate() {
            if a.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: a.len(),
                });
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidDensity(format!("atom {i} has a non-finite coordinate")));
            }
            if atoms[..i].iter().any(|b| b == a) {
                return Err(Error::InvalidDensity(format!("atom {i} is duplicated")));
            }
        }
        Ok(Self {
            probabilities,
            atoms: Some(atoms),
        })
    }

    /// Normalizes non-negative weights into a density.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidDensity("weights must be non-negative with positive sum".into()));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, state: usize) -> f64 {
        self.probabilities.get(state).copied().unwrap_or(0.0)
    }

    pub fn atoms(&self) -> Option<&[Vec<f64>]> {
        self.atoms.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.atoms.as_ref().map_or(1, |a| a[0].len())
    }

    /// Location of a state in its ambient space.
    pub fn location(&self, state: usize) -> Vec<f64> {
        match &self.atoms {
            Some(atoms) => atoms[state].clone(),
            None => vec![state as f64],
        }
    }

    /// Index of the state located exactly at `point`, if any.
    pub fn state_at(&self, point: &[f64]) -> Option<usize> {
        match &self.atoms {
            Some(atoms) => atoms.iter().position(|a| a.as_slice() == point),
            None => {
                let x = point[0];
                if x >= 0.0 && x.fract() == 0.0 && (x as usize) < self.len() {
                    Some(x as usize)
                } else {
                    None
                }
            }
        }
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: point.len(),
            });
        }
        Ok(self.state_at(point).map_or(0.0, |i| self.probabilities[i]))
    }

    /// Same masses as a one-dimensional grid with unit cells on `[0, K]`.
    pub fn to_unit_grid(&self) -> GridDensity {
        let k = self.len();
        GridDensity::new(vec![0.0], vec![k as f64], vec![k], self.probabilities.clone())
            .expect("a valid discrete density is a valid unit grid")
    }

    /// Whether `other` lives on the same state space.
    pub fn same_states(&self, other: &DiscreteDensity) -> bool {
        self.len() == other.len() && self.atoms == other.atoms
    }
}

fn validate_masses(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidDensity("state space is empty".into()));
    }
    if let Some((i, v)) = p.iter().enumerate().find(|(_, v)| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidDensity(format!("mass {v} at state {i} is negative or non-finite")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::InvalidDensity(format!("masses sum to {total}, expected 1")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_by_state() {
        let d = DiscreteDensity::new(vec![0.25, 0.75]).unwrap();
        assert_eq!(d.evaluate(&[0.0]).unwrap(), 0.25);
        assert_eq!(d.evaluate(&[1.0]).unwrap(), 0.75);
        assert_eq!(d.evaluate(&[0.5]).unwrap(), 0.0);
        assert_eq!(d.evaluate(&[7.0]).unwrap(), 0.0);
        assert!(d.evaluate(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn rejects_bad_masses() {
        assert!(DiscreteDensity::new(vec![0.5, 0.6]).is_err());
        assert!(DiscreteDensity::new(vec![-0.1, 1.1]).is_err());
        assert!(DiscreteDensity::new(vec![]).is_err());
        assert!(DiscreteDensity::new(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn atoms_are_located() {
        let d = DiscreteDensity::with_atoms(vec![0.5, 0.5], vec![vec![0.0, 1.0], vec![2.0, -1.0]]).unwrap();
        assert_eq!(d.dim(), 2);
        assert_eq!(d.evaluate(&[2.0, -1.0]).unwrap(), 0.5);
        assert_eq!(d.evaluate(&[2.0, 1.0]).unwrap(), 0.0);
        assert!(DiscreteDensity::with_atoms(vec![0.5, 0.5], vec![vec![0.0], vec![0.0]]).is_err());
    }
}
