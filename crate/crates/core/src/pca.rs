//! Linear reduction of density vectors to their best-fitting plane.

use crate::density::{mean3, DensityField};
use crate::error::{Error, Result};
use crate::numerics::{covariance, sym_eig};

/// Affine plane through the field mean spanned by the top two principal axes.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace2D {
    pub origin: [f64; 3],
    pub basis: [[f64; 3]; 2],
    /// Third principal axis, orthogonal to the plane.
    pub normal: [f64; 3],
    /// All three covariance eigenvalues, descending.
    pub spectrum: [f64; 3],
}

impl Subspace2D {
    pub fn ccr(&self, d: usize) -> Result<f64> {
        ccr(&self.spectrum, d)
    }

    /// `origin + x0 * basis[0] + x1 * basis[1]`.
    pub fn reconstruct(&self, coords: [f64; 2]) -> [f64; 3] {
        std::array::from_fn(|c| {
            self.origin[c] + coords[0] * self.basis[0][c] + coords[1] * self.basis[1][c]
        })
    }

    /// Orthogonal projector onto the plane's direction space.
    pub fn projector(&self) -> [[f64; 3]; 3] {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                self.basis[0][i] * self.basis[0][j] + self.basis[1][i] * self.basis[1][j]
            })
        })
    }
}

pub fn fit_pca(field: &DensityField) -> Result<Subspace2D> {
    fit_pca_points(field.vectors())
}

pub fn fit_pca_points(points: &[[f64; 3]]) -> Result<Subspace2D> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: points.len(),
        });
    }
    if points.iter().all(|p| *p == points[0]) {
        return Err(Error::DegenerateField);
    }
    let origin = mean3(points)?;
    let eig = sym_eig(&covariance(points)?)?;
    let axis = |j: usize| -> [f64; 3] { std::array::from_fn(|i| eig.component(i, j)) };
    Ok(Subspace2D {
        origin,
        basis: [axis(0), axis(1)],
        normal: axis(2),
        spectrum: [eig.values[0], eig.values[1], eig.values[2]],
    })
}

/// Cumulative contribution ratio of the first `d` eigenvalues. Negative
/// values are treated as zero; an all-zero spectrum gives 1.
pub fn ccr(spectrum: &[f64], d: usize) -> Result<f64> {
    if d > spectrum.len() {
        return Err(Error::DOutOfRange {
            d,
            len: spectrum.len(),
        });
    }
    let clamped = spectrum.iter().map(|v| v.max(0.0));
    let total: f64 = clamped.clone().sum();
    if total == 0.0 {
        return Ok(1.0);
    }
    let kept: f64 = clamped.take(d).sum();
    Ok((kept / total).min(1.0))
}

/// CCR for every retained count `1..=len`.
pub fn ccr_curve(spectrum: &[f64]) -> Vec<f64> {
    (1..=spectrum.len())
        .map(|d| ccr(spectrum, d).expect("d within range"))
        .collect()
}

pub fn project(field: &DensityField, sub: &Subspace2D) -> Vec<[f64; 2]> {
    project_points(field.vectors(), sub)
}

pub fn project_points(points: &[[f64; 3]], sub: &Subspace2D) -> Vec<[f64; 2]> {
    points
        .iter()
        .map(|p| {
            let c: [f64; 3] = std::array::from_fn(|i| p[i] - sub.origin[i]);
            [dot3(&c, &sub.basis[0]), dot3(&c, &sub.basis[1])]
        })
        .collect()
}

pub(crate) fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::SynthRng;

    fn planar_points(n: usize, seed: u64) -> Vec<[f64; 3]> {
        let mut rng = SynthRng::new(seed);
        let (u, v) = ([0.6, 0.8, 0.0], [0.0, 0.0, 1.0]);
        (0..n)
            .map(|_| {
                let (a, b) = (rng.uniform() * 4.0 - 2.0, rng.uniform() - 0.5);
                std::array::from_fn(|i| 1.0 + a * u[i] + b * v[i])
            })
            .collect()
    }

    #[test]
    fn planar_data_has_unit_ccr() {
        let sub = fit_pca_points(&planar_points(500, 1)).unwrap();
        assert!(sub.spectrum[2].abs() < 1e-12);
        assert!((sub.ccr(2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn isotropic_cloud_keeps_two_thirds() {
        let mut rng = SynthRng::new(2);
        let pts: Vec<[f64; 3]> = (0..10_000)
            .map(|_| [rng.normal(), rng.normal(), rng.normal()])
            .collect();
        let c = fit_pca_points(&pts).unwrap().ccr(2).unwrap();
        assert!((c - 2.0 / 3.0).abs() < 0.02, "{c}");
    }

    #[test]
    fn ccr_examples() {
        assert!((ccr(&[3.0, 2.0, 1.0], 2).unwrap() - 5.0 / 6.0).abs() < 1e-15);
        assert_eq!(ccr(&[4.0, 1.0, 0.5], 3).unwrap(), 1.0);
        assert!((ccr(&[0.95, 0.049, 0.001], 2).unwrap() - 0.999).abs() < 1e-12);
        assert_eq!(ccr(&[0.0, 0.0], 1).unwrap(), 1.0);
        assert_eq!(ccr(&[2.0, 1.0, -1e-15], 2).unwrap(), 1.0);
        assert!(matches!(ccr(&[1.0], 2), Err(Error::DOutOfRange { .. })));
    }

    #[test]
    fn ccr_is_monotone() {
        let curve = ccr_curve(&[5.0, 3.0, 1.0, 0.2, -0.1]);
        assert!(curve.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(*curve.last().unwrap(), 1.0);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            fit_pca_points(&[[1.0, 2.0, 3.0]; 5]),
            Err(Error::DegenerateField)
        ));
        assert!(matches!(
            fit_pca_points(&[[1.0, 2.0, 3.0]; 2]),
            Err(Error::TooFewPoints { .. })
        ));
    }

    #[test]
    fn projection_examples() {
        let pts = planar_points(50, 3);
        let sub = fit_pca_points(&pts).unwrap();
        let at_origin = project_points(&[sub.origin], &sub)[0];
        assert!(at_origin[0].abs() < 1e-12 && at_origin[1].abs() < 1e-12);
        let p: [f64; 3] = std::array::from_fn(|i| sub.origin[i] + 2.0 * sub.basis[0][i]);
        let c = project_points(&[p], &sub)[0];
        assert!((c[0] - 2.0).abs() < 1e-12 && c[1].abs() < 1e-12);
    }

    #[test]
    fn residual_is_along_normal() {
        let mut rng = SynthRng::new(4);
        let pts: Vec<[f64; 3]> = (0..300)
            .map(|_| [rng.normal() * 3.0, rng.normal() + 2.0, rng.normal() * 0.3])
            .collect();
        let sub = fit_pca_points(&pts).unwrap();
        for (p, c) in pts.iter().zip(project_points(&pts, &sub)) {
            let r: [f64; 3] = std::array::from_fn(|i| p[i] - sub.reconstruct(c)[i]);
            assert!(dot3(&r, &sub.basis[0]).abs() < 1e-9);
            assert!(dot3(&r, &sub.basis[1]).abs() < 1e-9);
            let along: f64 = dot3(&r, &sub.normal);
            let rn = dot3(&r, &r).sqrt();
            assert!((along.abs() - rn).abs() < 1e-9);
        }
    }

    #[test]
    fn plane_is_order_invariant() {
        let mut rng = SynthRng::new(6);
        let pts: Vec<[f64; 3]> = (0..400)
            .map(|_| [rng.normal() * 2.0, rng.normal(), rng.normal() * 0.1])
            .collect();
        let a = fit_pca_points(&pts).unwrap().projector();
        let rev: Vec<_> = pts.iter().rev().cloned().collect();
        let b = fit_pca_points(&rev).unwrap().projector();
        for i in 0..3 {
            for j in 0..3 {
                assert!((a[i][j] - b[i][j]).abs() < 1e-6);
            }
        }
    }
}
