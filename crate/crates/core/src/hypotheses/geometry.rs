//! Exact volume fractions of grid cells inside half-spaces.
//!
//! Every hypothesis handled here predicts 1 on a region of the form
//! {x : a·x + c ≥ 0}, the whole space, or nothing. Fractions are exact for
//! axis-aligned normals in any dimension and for arbitrary normals in two
//! dimensions (polygon clipping).

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    All,
    Empty,
    HalfSpace { normal: Vec<f64>, offset: f64 },
}

impl Region {
    pub fn half_space(normal: Vec<f64>, offset: f64) -> Self {
        if normal.iter().all(|a| *a == 0.0) {
            if offset >= 0.0 {
                Region::All
            } else {
                Region::Empty
            }
        } else {
            Region::HalfSpace { normal, offset }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::All => true,
            Region::Empty => false,
            Region::HalfSpace { normal, offset } => value(normal, *offset, x) >= 0.0,
        }
    }
}

/// The single axis a normal points along, if any.
fn single_axis(normal: &[f64]) -> Option<usize> {
    let mut nz = normal.iter().enumerate().filter(|(_, a)| **a != 0.0);
    let first = nz.next()?;
    nz.next().is_none().then_some(first.0)
}

fn value(normal: &[f64], offset: f64, x: &[f64]) -> f64 {
    normal.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + offset
}

enum Placement {
    Inside,
    Outside,
    Cut,
}

fn placement(normal: &[f64], offset: f64, lo: &[f64], hi: &[f64]) -> Placement {
    // The extreme values of a linear function over a box are attained at
    // corners chosen coordinate-wise.
    let mut min = offset;
    let mut max = offset;
    for k in 0..normal.len() {
        let (a, b) = (normal[k] * lo[k], normal[k] * hi[k]);
        min += a.min(b);
        max += a.max(b);
    }
    if min >= 0.0 {
        Placement::Inside
    } else if max < 0.0 {
        Placement::Outside
    } else {
        Placement::Cut
    }
}

/// Fraction of the box [lo, hi] lying in the intersection of `regions`.
pub fn cell_fraction(regions: &[&Region], lo: &[f64], hi: &[f64]) -> Result<f64> {
    let mut cutting: Vec<(&[f64], f64)> = Vec::new();
    for r in regions {
        match r {
            Region::All => {}
            Region::Empty => return Ok(0.0),
            Region::HalfSpace { normal, offset } => match placement(normal, *offset, lo, hi) {
                Placement::Inside => {}
                Placement::Outside => return Ok(0.0),
                Placement::Cut => cutting.push((normal, *offset)),
            },
        }
    }
    if cutting.is_empty() {
        return Ok(1.0);
    }
    let axis_aligned: Option<Vec<usize>> = cutting.iter().map(|(n, _)| single_axis(n)).collect();
    if let Some(axes) = axis_aligned {
        let mut lower = lo.to_vec();
        let mut upper = hi.to_vec();
        for ((normal, offset), &k) in cutting.iter().zip(&axes) {
            let t = -offset / normal[k];
            if normal[k] > 0.0 {
                lower[k] = lower[k].max(t);
            } else {
                upper[k] = upper[k].min(t);
            }
        }
        let mut frac = 1.0;
        for k in 0..lo.len() {
            frac *= ((upper[k] - lower[k]) / (hi[k] - lo[k])).max(0.0);
        }
        return Ok(frac.min(1.0));
    }
    if lo.len() == 2 {
        let mut poly = vec![[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]];
        for (normal, offset) in &cutting {
            poly = clip(&poly, normal, *offset);
            if poly.len() < 3 {
                return Ok(0.0);
            }
        }
        let area = shoelace(&poly);
        return Ok((area / ((hi[0] - lo[0]) * (hi[1] - lo[1]))).clamp(0.0, 1.0));
    }
    Err(Error::Unsupported(format!(
        "oblique half-space cutting a cell in dimension {}",
        lo.len()
    )))
}

/// Sutherland–Hodgman clip of a convex polygon by {a·x + c ≥ 0}.
fn clip(poly: &[[f64; 2]], normal: &[f64], offset: f64) -> Vec<[f64; 2]> {
    let f = |p: &[f64; 2]| normal[0] * p[0] + normal[1] * p[1] + offset;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let cur = poly[i];
        let next = poly[(i + 1) % poly.len()];
        let (fc, fn_) = (f(&cur), f(&next));
        if fc >= 0.0 {
            out.push(cur);
        }
        if (fc >= 0.0) != (fn_ >= 0.0) {
            let t = fc / (fc - fn_);
            out.push([cur[0] + t * (next[0] - cur[0]), cur[1] + t * (next[1] - cur[1])]);
        }
    }
    out
}

fn shoelace(poly: &[[f64; 2]]) -> f64 {
    let mut s = 0.0;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        s += a[0] * b[1] - b[0] * a[1];
    }
    0.5 * s.abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn axis_aligned_fractions() {
        let r = Region::half_space(vec![1.0, 0.0], -0.25);
        assert_eq!(cell_fraction(&[&r], &[0.0, 0.0], &[1.0, 1.0]).unwrap(), 0.75);
        let s = Region::half_space(vec![0.0, -1.0], 0.5);
        assert_eq!(cell_fraction(&[&r, &s], &[0.0, 0.0], &[1.0, 1.0]).unwrap(), 0.375);
        let t = Region::half_space(vec![-2.0, 0.0], 1.0);
        assert_eq!(cell_fraction(&[&r, &t], &[0.0, 0.0], &[1.0, 1.0]).unwrap(), 0.25);
        assert_eq!(cell_fraction(&[&Region::Empty], &[0.0], &[1.0]).unwrap(), 0.0);
        assert_eq!(cell_fraction(&[], &[0.0], &[1.0]).unwrap(), 1.0);
        assert_eq!(Region::half_space(vec![0.0], -1.0), Region::Empty);
    }

    #[test]
    fn diagonal_cut_in_two_dimensions() {
        let r = Region::half_space(vec![1.0, 1.0], -1.0);
        assert!((cell_fraction(&[&r], &[0.0, 0.0], &[1.0, 1.0]).unwrap() - 0.5).abs() < 1e-15);
        let s = Region::half_space(vec![1.0, -1.0], 0.0);
        // x + y ≥ 1 and x ≥ y: the triangle (0.5,0.5), (1,0), (1,1).
        assert!((cell_fraction(&[&r, &s], &[0.0, 0.0], &[1.0, 1.0]).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn oblique_cuts_in_three_dimensions_are_unsupported() {
        let r = Region::half_space(vec![1.0, 1.0, 0.0], -1.0);
        assert!(cell_fraction(&[&r], &[0.0; 3], &[1.0; 3]).is_err());
        assert_eq!(cell_fraction(&[&r], &[2.0; 3], &[3.0; 3]).unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn polygon_area_matches_lattice_count(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -1.5f64..1.5) {
            prop_assume!(a.abs() + b.abs() > 1e-3);
            let r = Region::half_space(vec![a, b], c);
            let exact = cell_fraction(&[&r], &[-1.0, 0.0], &[1.0, 1.0]).unwrap();
            let n = 300;
            let mut inside = 0usize;
            for i in 0..n {
                for j in 0..n {
                    let x = -1.0 + 2.0 * (i as f64 + 0.5) / n as f64;
                    let y = (j as f64 + 0.5) / n as f64;
                    if r.contains(&[x, y]) {
                        inside += 1;
                    }
                }
            }
            let approx = inside as f64 / (n * n) as f64;
            prop_assert!((exact - approx).abs() < 0.01);
        }
    }
}
