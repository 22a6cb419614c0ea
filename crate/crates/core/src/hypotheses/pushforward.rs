use crate::densities::{Density, DiscreteDensity, GridDensity};
use crate::synthetic::{ProblemSpace, SyntheticProblem};
use crate::{Error, Result};

use super::Representation;

/// Densities and label posteriors of Z = φ(X) in both domains.
///
/// Per-domain posteriors are p_d(Y = 1 | z) = E_{p_d(x | z)}[p(Y = 1 | x)].
/// Where a domain puts no mass on z its posterior is undefined; it is then
/// taken from the other domain (zero if neither has mass), which leaves every
/// expectation under either domain unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct PushForward {
    pub source: Density,
    pub target: Density,
    pub source_posterior: Vec<f64>,
    pub target_posterior: Vec<f64>,
    /// Z cell or state of every X cell or state.
    pub image_of: Vec<usize>,
}

/// Exact push-forward of a problem through φ. Grid problems need an
/// axis-aligned representation; atom problems accept any representation.
pub fn push_forward(problem: &SyntheticProblem, representation: &Representation) -> Result<PushForward> {
    representation.validate()?;
    if representation.input_dim() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            found: representation.input_dim(),
        });
    }
    match &problem.space {
        ProblemSpace::Grid {
            source,
            target,
            posterior,
        } => {
            let axes: Vec<usize> = match representation {
                Representation::Identity { dim } => (0..*dim).collect(),
                Representation::VariableSelection { indices, .. } => indices.clone(),
                Representation::LinearProjection { .. } => {
                    return Err(Error::Unsupported(
                        "exact push-forward of a grid through a linear projection".into(),
                    ))
                }
            };
            let lower: Vec<f64> = axes.iter().map(|k| source.lower()[*k]).collect();
            let upper: Vec<f64> = axes.iter().map(|k| source.upper()[*k]).collect();
            let res: Vec<usize> = axes.iter().map(|k| source.resolution()[*k]).collect();
            let nz: usize = res.iter().product();
            let image_of: Vec<usize> = (0..source.n_cells())
                .map(|c| {
                    let idx = source.multi_index(c);
                    axes.iter().fold(0, |acc, k| acc * source.resolution()[*k] + idx[*k])
                })
                .collect();
            let (ms, mt) = (source.masses(), target.masses());
            let agg = aggregate(&image_of, nz, &ms, &mt, posterior);
            let grid = |w: Vec<f64>| GridDensity::from_unnormalized(lower.clone(), upper.clone(), res.clone(), w);
            Ok(PushForward {
                source: grid(agg.source_mass)?.into(),
                target: grid(agg.target_mass)?.into(),
                source_posterior: agg.source_posterior,
                target_posterior: agg.target_posterior,
                image_of,
            })
        }
        ProblemSpace::Atoms {
            source,
            target,
            posterior,
        } => {
            let mut atoms: Vec<Vec<f64>> = Vec::new();
            let image_of: Vec<usize> = (0..source.len())
                .map(|i| {
                    let z = representation.apply(&source.location(i));
                    match atoms.iter().position(|a| *a == z) {
                        Some(j) => j,
                        None => {
                            atoms.push(z);
                            atoms.len() - 1
                        }
                    }
                })
                .collect();
            let agg = aggregate(
                &image_of,
                atoms.len(),
                source.probabilities(),
                target.probabilities(),
                posterior,
            );
            let discrete = |w: Vec<f64>| -> Result<DiscreteDensity> {
                let total: f64 = w.iter().sum();
                DiscreteDensity::with_atoms(w.into_iter().map(|v| v / total).collect(), atoms.clone())
            };
            Ok(PushForward {
                source: discrete(agg.source_mass)?.into(),
                target: discrete(agg.target_mass)?.into(),
                source_posterior: agg.source_posterior,
                target_posterior: agg.target_posterior,
                image_of,
            })
        }
    }
}

struct Aggregated {
    source_mass: Vec<f64>,
    target_mass: Vec<f64>,
    source_posterior: Vec<f64>,
    target_posterior: Vec<f64>,
}

fn aggregate(image_of: &[usize], nz: usize, ms: &[f64], mt: &[f64], posterior: &[f64]) -> Aggregated {
    let mut sm = vec![0.0; nz];
    let mut tm = vec![0.0; nz];
    let mut sy = vec![0.0; nz];
    let mut ty = vec![0.0; nz];
    for (c, &z) in image_of.iter().enumerate() {
        sm[z] += ms[c];
        tm[z] += mt[c];
        sy[z] += ms[c] * posterior[c];
        ty[z] += mt[c] * posterior[c];
    }
    let ratio = |num: f64, den: f64| (num / den).clamp(0.0, 1.0);
    let mut sp = vec![0.0; nz];
    let mut tp = vec![0.0; nz];
    for z in 0..nz {
        let s = (sm[z] > 0.0).then(|| ratio(sy[z], sm[z]));
        let t = (tm[z] > 0.0).then(|| ratio(ty[z], tm[z]));
        sp[z] = s.or(t).unwrap_or(0.0);
        tp[z] = t.or(s).unwrap_or(0.0);
    }
    Aggregated {
        source_mass: sm,
        target_mass: tm,
        source_posterior: sp,
        target_posterior: tp,
    }
}
