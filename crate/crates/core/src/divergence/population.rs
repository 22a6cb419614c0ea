//! Closed-form kernel expectations E_{x~u, y~v}[k(x, y)] for piecewise-constant
//! grids and for point masses.

use std::f64::consts::PI;

use super::Kernel;
use crate::densities::{DiscreteDensity, GridDensity};
use crate::numeric::pairwise_sum;
use crate::{Error, Result};

/// Largest cell count for the direct all-pairs sum in three or more dimensions.
const DIRECT_PAIR_CELLS: usize = 4096;

/// ∫_{a1}^{a2} ∫_{b1}^{b2} exp(-(x - y)^2 / (2 sigma^2)) dy dx.
pub(crate) fn gaussian_cell_pair_integral(a1: f64, a2: f64, b1: f64, b2: f64, sigma: f64) -> f64 {
    let g = |t: f64| {
        let phi = sigma * (PI / 2.0).sqrt() * libm::erf(t / (sigma * std::f64::consts::SQRT_2));
        t * phi + sigma * sigma * ((-t * t / (2.0 * sigma * sigma)).exp() - 1.0)
    };
    g(a2 - b1) - g(a1 - b1) - g(a2 - b2) + g(a1 - b2)
}

fn axis_table(grid: &GridDensity, axis: usize, sigma: f64) -> Vec<Vec<f64>> {
    let n = grid.resolution()[axis];
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    gaussian_cell_pair_integral(
                        grid.edge(axis, i),
                        grid.edge(axis, i + 1),
                        grid.edge(axis, j),
                        grid.edge(axis, j + 1),
                        sigma,
                    )
                })
                .collect()
        })
        .collect()
}

/// Σ_c Σ_c' u_c v_c' ∫_c ∫_c' k, where `u` and `v` are cell density values
/// (possibly masked) on the structure of `grid`.
pub(crate) fn grid_kernel_expectation(grid: &GridDensity, u: &[f64], v: &[f64], kernel: &Kernel) -> Result<f64> {
    let res = grid.resolution();
    match res.len() {
        1 => {
            let t = axis_table(grid, 0, kernel.sigma);
            let rows: Vec<f64> = (0..res[0])
                .map(|i| {
                    if u[i] == 0.0 {
                        return 0.0;
                    }
                    let terms: Vec<f64> = (0..res[0]).map(|j| v[j] * t[i][j]).collect();
                    u[i] * pairwise_sum(&terms)
                })
                .collect();
            Ok(pairwise_sum(&rows))
        }
        2 => {
            let (n0, n1) = (res[0], res[1]);
            let t0 = axis_table(grid, 0, kernel.sigma);
            let t1 = axis_table(grid, 1, kernel.sigma);
            // a[i][j'] = Σ_j u[i, j] t1[j][j']
            let mut a = vec![0.0; n0 * n1];
            for i in 0..n0 {
                for j in 0..n1 {
                    let uij = u[i * n1 + j];
                    if uij == 0.0 {
                        continue;
                    }
                    for jp in 0..n1 {
                        a[i * n1 + jp] += uij * t1[j][jp];
                    }
                }
            }
            let mut rows = Vec::with_capacity(n0);
            for i in 0..n0 {
                let mut terms = Vec::with_capacity(n0);
                for ip in 0..n0 {
                    let s: f64 = (0..n1).map(|jp| a[i * n1 + jp] * v[ip * n1 + jp]).sum();
                    terms.push(t0[i][ip] * s);
                }
                rows.push(pairwise_sum(&terms));
            }
            Ok(pairwise_sum(&rows))
        }
        d => {
            let n = grid.n_cells();
            if n > DIRECT_PAIR_CELLS {
                return Err(Error::Unsupported(format!(
                    "exact kernel expectation on a {d}-dimensional grid with {n} cells"
                )));
            }
            let tables: Vec<_> = (0..d).map(|k| axis_table(grid, k, kernel.sigma)).collect();
            let idx: Vec<Vec<usize>> = (0..n).map(|c| grid.multi_index(c)).collect();
            let rows: Vec<f64> = (0..n)
                .map(|c| {
                    if u[c] == 0.0 {
                        return 0.0;
                    }
                    let terms: Vec<f64> = (0..n)
                        .map(|e| v[e] * (0..d).map(|k| tables[k][idx[c][k]][idx[e][k]]).product::<f64>())
                        .collect();
                    u[c] * pairwise_sum(&terms)
                })
                .collect();
            Ok(pairwise_sum(&rows))
        }
    }
}

/// Σ_i Σ_j u_i v_j k(loc_i, loc_j) over the states of `states`.
pub(crate) fn atom_kernel_expectation(states: &DiscreteDensity, u: &[f64], v: &[f64], kernel: &Kernel) -> f64 {
    let locs: Vec<Vec<f64>> = (0..states.len()).map(|i| states.location(i)).collect();
    let rows: Vec<f64> = (0..locs.len())
        .map(|i| {
            let terms: Vec<f64> = (0..locs.len())
                .map(|j| v[j] * kernel.evaluate(&locs[i], &locs[j]))
                .collect();
            u[i] * pairwise_sum(&terms)
        })
        .collect();
    pairwise_sum(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn midpoint_quadrature(a1: f64, a2: f64, b1: f64, b2: f64, sigma: f64, n: usize) -> f64 {
        let (ha, hb) = ((a2 - a1) / n as f64, (b2 - b1) / n as f64);
        let mut s = 0.0;
        for i in 0..n {
            let x = a1 + (i as f64 + 0.5) * ha;
            for j in 0..n {
                let y = b1 + (j as f64 + 0.5) * hb;
                s += (-(x - y) * (x - y) / (2.0 * sigma * sigma)).exp();
            }
        }
        s * ha * hb
    }

    #[test]
    fn cell_pair_integral_matches_quadrature() {
        for &(a1, a2, b1, b2, s) in &[
            (0.0, 1.0, 0.0, 1.0, 0.5),
            (0.0, 0.1, 2.0, 2.5, 0.3),
            (-1.0, 0.5, 0.2, 0.4, 2.0),
            (3.0, 3.05, -3.0, -2.95, 1.0),
        ] {
            let exact = gaussian_cell_pair_integral(a1, a2, b1, b2, s);
            // Richardson extrapolation removes the leading h^2 midpoint error.
            let quad = (4.0 * midpoint_quadrature(a1, a2, b1, b2, s, 800)
                - midpoint_quadrature(a1, a2, b1, b2, s, 400))
                / 3.0;
            assert!((exact - quad).abs() < 1e-7 * (1.0 + quad.abs()), "{exact} vs {quad}");
        }
    }

    #[test]
    fn two_dimensional_contraction_matches_direct() {
        let g = GridDensity::from_unnormalized(
            vec![0.0, -1.0],
            vec![1.0, 1.0],
            vec![3, 4],
            (0..12).map(|i| (i % 5) as f64 + 0.5).collect(),
        )
        .unwrap();
        let u = g.values().to_vec();
        let v: Vec<f64> = u.iter().rev().copied().collect();
        let k = Kernel::gaussian(0.7).unwrap();
        let fast = grid_kernel_expectation(&g, &u, &v, &k).unwrap();
        let mut direct = 0.0;
        for c in 0..12 {
            let (lc, hc) = g.cell_bounds(c);
            for e in 0..12 {
                let (le, he) = g.cell_bounds(e);
                direct += u[c]
                    * v[e]
                    * gaussian_cell_pair_integral(lc[0], hc[0], le[0], he[0], 0.7)
                    * gaussian_cell_pair_integral(lc[1], hc[1], le[1], he[1], 0.7);
            }
        }
        assert!((fast - direct).abs() < 1e-13);
    }
}
