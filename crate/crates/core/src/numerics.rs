//! Dense symmetric numerics: eigendecomposition, covariance and the double
//! centering step of classical MDS.
//!
//! Two eigensolvers live here. [`sym_eig`] is cyclic Jacobi and returns the
//! full decomposition; it is used for covariance matrices and anything small.
//! [`sym_eig_top`] reduces to tridiagonal form with Householder reflectors,
//! finds every eigenvalue with implicit QL and recovers only the leading
//! eigenvectors by inverse iteration. MDS on a few thousand points needs the
//! whole spectrum but only two or three vectors, which is where the second
//! path pays off.

use crate::error::{Error, Result};
use crate::par::{self, Exec};

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;
const QL_MAX_ITER: usize = 60;
const INVERSE_ITERATIONS: usize = 4;

/// Dense symmetric matrix stored row-major with both triangles populated.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = v;
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting asymmetry beyond
    /// `1e-12` relative to the largest entry.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                data.len()
            )));
        }
        let scale = data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let tol = JACOBI_TOL * scale.max(f64::MIN_POSITIVE);
        for i in 0..n {
            for j in (i + 1)..n {
                let diff = (data[i * n + j] - data[j * n + i]).abs();
                if diff > tol || diff.is_nan() {
                    return Err(Error::NotSymmetric(diff));
                }
            }
        }
        Ok(Self { n, data })
    }

    /// Builds a matrix by evaluating `f(i, j)` on the upper triangle and mirroring.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Eigenvalues in descending order with matching unit eigenvectors.
///
/// `values` always holds the full spectrum. `vectors` holds the leading
/// `m` eigenvectors as the columns of an `n x m` row-major block; for the
/// Jacobi solver `m == n`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    n: usize,
    m: usize,
    vectors: Vec<f64>,
}

impl EigenPairs {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of eigenvectors carried.
    pub fn vector_count(&self) -> usize {
        self.m
    }

    /// Eigenvector `j` (paired with `values[j]`).
    pub fn vector(&self, j: usize) -> Vec<f64> {
        assert!(j < self.m, "eigenvector {j} not computed");
        (0..self.n).map(|i| self.vectors[i * self.m + j]).collect()
    }

    /// Component `i` of eigenvector `j`.
    #[inline]
    pub fn component(&self, i: usize, j: usize) -> f64 {
        self.vectors[i * self.m + j]
    }
}

/// Full eigendecomposition by cyclic Jacobi rotations.
///
/// Stops once the off-diagonal Frobenius norm falls below `1e-12` of the
/// matrix norm, or errors after 100 sweeps. Eigenvectors are signed so their
/// largest-magnitude component is positive.
pub fn sym_eig(a: &SymMatrix) -> Result<EigenPairs> {
    let n = a.n;
    let mut m = a.data.clone();
    let mut v = SymMatrix::identity(n).data;
    let norm = a.frobenius_norm();

    let mut converged = norm == 0.0;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if converged {
            break;
        }
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_TOL * norm {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence(JACOBI_MAX_SWEEPS));
    }

    let diag: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| diag[y].total_cmp(&diag[x]));

    let values = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (dst, &src) in order.iter().enumerate() {
        let mut col: Vec<f64> = (0..n).map(|i| v[i * n + src]).collect();
        fix_sign(&mut col);
        for i in 0..n {
            vectors[i * n + dst] = col[i];
        }
    }
    Ok(EigenPairs {
        values,
        n,
        m: n,
        vectors,
    })
}

/// All eigenvalues (descending) plus the leading `m` eigenvectors.
///
/// Householder tridiagonalization, implicit QL for the spectrum and inverse
/// iteration on the tridiagonal form for the vectors. The reduction's row
/// updates run under `exec`.
pub fn sym_eig_top(a: &SymMatrix, m: usize, exec: Exec) -> Result<EigenPairs> {
    let n = a.n;
    let m = m.min(n);
    if n == 0 {
        return Ok(EigenPairs {
            values: vec![],
            n,
            m: 0,
            vectors: vec![],
        });
    }
    let tri = tridiagonalize(a, exec);
    let mut values = tridiagonal_eigenvalues(&tri.diag, &tri.off)?;
    values.sort_by(|x, y| y.total_cmp(x));

    let tnorm = tri
        .diag
        .iter()
        .chain(tri.off.iter())
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);

    let mut found: Vec<Vec<f64>> = Vec::with_capacity(m);
    for &lambda in values.iter().take(m) {
        let mut y = tridiagonal_inverse_iteration(&tri.diag, &tri.off, lambda, tnorm, &found);
        // Cluster members were orthogonalized inside the iteration; the
        // resulting basis is orthonormal in the tridiagonal frame.
        normalize(&mut y);
        found.push(y);
    }

    let mut vectors = vec![0.0; n * m];
    for (j, y) in found.into_iter().enumerate() {
        let mut x = tri.back_transform(y);
        normalize(&mut x);
        fix_sign(&mut x);
        for i in 0..n {
            vectors[i * m + j] = x[i];
        }
    }
    Ok(EigenPairs {
        values,
        n,
        m,
        vectors,
    })
}

struct Tridiagonal {
    diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i + 1`.
    off: Vec<f64>,
    /// Householder reflector for step `k` acts on indices `k+1..n`.
    reflectors: Vec<(Vec<f64>, f64)>,
}

impl Tridiagonal {
    fn back_transform(&self, mut y: Vec<f64>) -> Vec<f64> {
        for (k, (v, beta)) in self.reflectors.iter().enumerate().rev() {
            if *beta == 0.0 {
                continue;
            }
            let tail = &mut y[k + 1..];
            let dot: f64 = v.iter().zip(tail.iter()).map(|(a, b)| a * b).sum();
            let f = beta * dot;
            for (t, vi) in tail.iter_mut().zip(v) {
                *t -= f * vi;
            }
        }
        y
    }
}

fn tridiagonalize(a: &SymMatrix, exec: Exec) -> Tridiagonal {
    let n = a.n;
    let mut w = a.data.clone();
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    let mut reflectors = Vec::with_capacity(n.saturating_sub(2));

    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let mut v: Vec<f64> = (k + 1..n).map(|i| w[i * n + k]).collect();
        diag[k] = w[k * n + k];
        // Work with v scaled to unit max-norm so tiny columns cannot underflow.
        let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if scale == 0.0 {
            off[k] = 0.0;
            reflectors.push((v, 0.0));
            continue;
        }
        v.iter_mut().for_each(|x| *x /= scale);
        let xnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let alpha = if v[0] > 0.0 { -xnorm } else { xnorm };
        v[0] -= alpha;
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        let beta = 2.0 / vtv;
        off[k] = alpha * scale;

        // p = beta * A22 v, reading only the trailing block.
        let p: Vec<f64> = par::map_indices(exec, len, |r| {
            let row = &w[(k + 1 + r) * n + k + 1..(k + 2 + r) * n];
            beta * row.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>()
        });
        let kfac = 0.5 * beta * p.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
        let q: Vec<f64> = p.iter().zip(&v).map(|(pi, vi)| pi - kfac * vi).collect();

        let trailing = &mut w[(k + 1) * n..];
        par::for_each_row(exec, trailing, n, |r, row| {
            let (vr, qr) = (v[r], q[r]);
            for ((x, vj), qj) in row[k + 1..].iter_mut().zip(&v).zip(&q) {
                *x -= vr * qj + qr * vj;
            }
        });
        reflectors.push((v, beta));
    }
    if n >= 2 {
        diag[n - 2] = w[(n - 2) * n + n - 2];
        off[n - 2] = w[(n - 1) * n + n - 2];
    }
    diag[n - 1] = w[(n - 1) * n + n - 1];
    Tridiagonal {
        diag,
        off,
        reflectors,
    }
}

/// Eigenvalues of a symmetric tridiagonal matrix by implicit QL with
/// Wilkinson-style shifts. Order is unspecified.
fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..off.len()].copy_from_slice(off);
    // Absolute floor so clusters of round-off zeros still deflate.
    let floor = f64::EPSILON
        * d.iter()
            .zip(&e)
            .fold(0.0_f64, |acc, (a, b)| acc.max(a.abs() + b.abs()));

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() + dd == dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_ITER {
                return Err(Error::NoConvergence(QL_MAX_ITER));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(d)
}

/// Eigenvector of the tridiagonal matrix for `lambda` by shifted inverse
/// iteration, kept orthogonal to previously found vectors of nearby
/// eigenvalues.
fn tridiagonal_inverse_iteration(
    diag: &[f64],
    off: &[f64],
    lambda: f64,
    tnorm: f64,
    previous: &[Vec<f64>],
) -> Vec<f64> {
    let n = diag.len();
    let tiny = f64::EPSILON * tnorm;
    let lu = TridiagonalLu::factor(diag, off, lambda, tiny);
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * ((i as f64) * 0.618_033_988_75).fract())
        .collect();
    for _ in 0..INVERSE_ITERATIONS {
        x = lu.solve(x);
        for prev in previous {
            let dot: f64 = prev.iter().zip(&x).map(|(a, b)| a * b).sum();
            for (xi, pi) in x.iter_mut().zip(prev) {
                *xi -= dot * pi;
            }
        }
        normalize(&mut x);
    }
    x
}

/// LU factorization with partial pivoting of `T - shift*I`, `T` symmetric
/// tridiagonal. U has two superdiagonals after row swaps.
struct TridiagonalLu {
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    mult: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    fn factor(diag: &[f64], off: &[f64], shift: f64, tiny: f64) -> Self {
        let n = diag.len();
        let mut u0 = vec![0.0; n];
        let mut u1 = vec![0.0; n];
        let mut u2 = vec![0.0; n];
        let mut mult = vec![0.0; n];
        let mut swapped = vec![false; n];

        let mut c0 = diag[0] - shift;
        let mut c1 = if n > 1 { off[0] } else { 0.0 };
        let mut c2 = 0.0;
        for i in 0..n.saturating_sub(1) {
            let n0 = off[i];
            let n1 = diag[i + 1] - shift;
            let n2 = if i + 2 < n { off[i + 1] } else { 0.0 };
            if n0.abs() > c0.abs() {
                swapped[i] = true;
                u0[i] = n0;
                u1[i] = n1;
                u2[i] = n2;
                let f = c0 / n0;
                mult[i] = f;
                c0 = c1 - f * n1;
                c1 = c2 - f * n2;
            } else {
                if c0 == 0.0 {
                    c0 = tiny;
                }
                u0[i] = c0;
                u1[i] = c1;
                u2[i] = c2;
                let f = n0 / c0;
                mult[i] = f;
                c0 = n1 - f * c1;
                c1 = n2 - f * c2;
            }
            c2 = 0.0;
        }
        u0[n - 1] = if c0 == 0.0 { tiny } else { c0 };
        Self {
            u0,
            u1,
            u2,
            mult,
            swapped,
        }
    }

    fn solve(&self, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                b.swap(i, i + 1);
            }
            b[i + 1] -= self.mult[i] * b[i];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut acc = b[i];
            if i + 1 < n {
                acc -= self.u1[i] * x[i + 1];
            }
            if i + 2 < n {
                acc -= self.u2[i] * x[i + 2];
            }
            x[i] = acc / self.u0[i];
        }
        x
    }
}

fn normalize(x: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 && norm.is_finite() {
        x.iter_mut().for_each(|v| *v /= norm);
    }
}

/// Flips `x` so its largest-magnitude component (first on ties) is positive.
fn fix_sign(x: &mut [f64]) {
    let mut best = 0;
    for (i, v) in x.iter().enumerate() {
        if v.abs() > x[best].abs() {
            best = i;
        }
    }
    if x.get(best).is_some_and(|v| *v < 0.0) {
        x.iter_mut().for_each(|v| *v = -*v);
    }
}

/// Mean-centered covariance of `points` with `1/n` normalization.
pub fn covariance<P: AsRef<[f64]>>(points: &[P]) -> Result<SymMatrix> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: points.len(),
        });
    }
    let d = points[0].as_ref().len();
    if points.iter().any(|p| p.as_ref().len() != d) {
        return Err(Error::InvalidArgument(
            "points have differing dimensions".into(),
        ));
    }
    let n = points.len() as f64;
    let mut mean = vec![0.0; d];
    for p in points {
        for (m, v) in mean.iter_mut().zip(p.as_ref()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);

    let mut acc = vec![0.0; d * d];
    let mut centered = vec![0.0; d];
    for p in points {
        for ((c, v), m) in centered.iter_mut().zip(p.as_ref()).zip(&mean) {
            *c = v - m;
        }
        for i in 0..d {
            for j in i..d {
                acc[i * d + j] += centered[i] * centered[j];
            }
        }
    }
    Ok(SymMatrix::from_fn(d, |i, j| acc[i * d + j] / n))
}

/// `B = -1/2 J D J` with `J = I - 11^T/n`, for a matrix of squared distances.
pub fn double_center(sq_dist: &SymMatrix) -> Result<SymMatrix> {
    let n = sq_dist.n;
    if let Some(&neg) = sq_dist.data.iter().find(|v| **v < 0.0) {
        return Err(Error::NegativeEntry(neg));
    }
    if n == 0 {
        return Ok(SymMatrix::zeros(0));
    }
    let nf = n as f64;
    let row_mean: Vec<f64> = (0..n)
        .map(|i| sq_dist.row(i).iter().sum::<f64>() / nf)
        .collect();
    let grand = row_mean.iter().sum::<f64>() / nf;
    Ok(SymMatrix::from_fn(n, |i, j| {
        -0.5 * (sq_dist.get(i, j) - row_mean[i] - row_mean[j] + grand)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(n: usize, seed: u64) -> SymMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let upper: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        SymMatrix::from_fn(n, |i, j| upper[i * n + j])
    }

    /// det(A - x I) by Gaussian elimination with partial pivoting.
    fn char_poly(a: &SymMatrix, x: f64) -> f64 {
        let n = a.n();
        let mut m: Vec<f64> = a.as_slice().to_vec();
        for i in 0..n {
            m[i * n + i] -= x;
        }
        let mut det = 1.0;
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&r, &s| m[r * n + col].abs().total_cmp(&m[s * n + col].abs()))
                .unwrap();
            if m[piv * n + col] == 0.0 {
                return 0.0;
            }
            if piv != col {
                for k in 0..n {
                    m.swap(piv * n + k, col * n + k);
                }
                det = -det;
            }
            det *= m[col * n + col];
            for r in col + 1..n {
                let f = m[r * n + col] / m[col * n + col];
                for k in col..n {
                    m[r * n + k] -= f * m[col * n + k];
                }
            }
        }
        det
    }

    /// Roots of the characteristic polynomial by grid scan plus bisection.
    fn char_poly_roots(a: &SymMatrix) -> Vec<f64> {
        let bound = a.frobenius_norm() + 1.0;
        let steps = 40_000;
        let h = 2.0 * bound / steps as f64;
        let mut roots = vec![];
        let mut lo = -bound;
        let mut flo = char_poly(a, lo);
        for s in 1..=steps {
            let hi = -bound + s as f64 * h;
            let fhi = char_poly(a, hi);
            if flo.signum() != fhi.signum() {
                let (mut l, mut r, mut fl) = (lo, hi, flo);
                for _ in 0..200 {
                    let mid = 0.5 * (l + r);
                    let fm = char_poly(a, mid);
                    if fm.signum() == fl.signum() {
                        l = mid;
                        fl = fm;
                    } else {
                        r = mid;
                    }
                }
                roots.push(0.5 * (l + r));
            }
            lo = hi;
            flo = fhi;
        }
        roots.sort_by(|x, y| y.total_cmp(x));
        roots
    }

    fn residual(a: &SymMatrix, eig: &EigenPairs, j: usize) -> f64 {
        let v = eig.vector(j);
        let av = a.mul_vec(&v);
        av.iter()
            .zip(&v)
            .map(|(x, y)| (x - eig.values[j] * y).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn identity_spectrum() {
        let e = sym_eig(&SymMatrix::identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_gives_axes() {
        let e = sym_eig(&SymMatrix::from_diagonal(&[1.0, 3.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![3.0, 2.0, 1.0]);
        assert_eq!(e.vector(0), vec![0.0, 1.0, 0.0]);
        assert_eq!(e.vector(1), vec![0.0, 0.0, 1.0]);
        assert_eq!(e.vector(2), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn random_5x5_matches_characteristic_polynomial() {
        for seed in 0..5 {
            let a = random_sym(5, seed);
            let e = sym_eig(&a).unwrap();
            let roots = char_poly_roots(&a);
            assert_eq!(roots.len(), 5, "seed {seed}: roots {roots:?}");
            for (l, r) in e.values.iter().zip(&roots) {
                assert!((l - r).abs() < 1e-7, "seed {seed}: {l} vs {r}");
            }
            for j in 0..5 {
                assert!(residual(&a, &e, j) < 1e-8 * a.frobenius_norm());
            }
        }
    }

    #[test]
    fn sign_convention_holds() {
        let e = sym_eig(&random_sym(6, 11)).unwrap();
        for j in 0..6 {
            let v = e.vector(j);
            let big = v
                .iter()
                .cloned()
                .fold(0.0_f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(big > 0.0);
        }
    }

    #[test]
    fn asymmetric_input_rejected() {
        let err = SymMatrix::from_row_major(2, vec![1.0, 2.0, 2.5, 1.0]).unwrap_err();
        assert!(matches!(err, Error::NotSymmetric(_)));
    }

    #[test]
    fn top_solver_agrees_with_jacobi() {
        for (n, seed) in [(1, 1), (2, 2), (3, 3), (17, 4), (50, 5)] {
            let a = random_sym(n, seed);
            let full = sym_eig(&a).unwrap();
            let top = sym_eig_top(&a, 3, Exec::Sequential).unwrap();
            for (x, y) in full.values.iter().zip(&top.values) {
                assert!(
                    (x - y).abs() < 1e-9 * a.frobenius_norm().max(1.0),
                    "{x} vs {y}"
                );
            }
            for j in 0..top.vector_count() {
                assert!(residual(&a, &top, j) < 1e-8 * a.frobenius_norm());
                let dot: f64 = full
                    .vector(j)
                    .iter()
                    .zip(top.vector(j))
                    .map(|(p, q)| p * q)
                    .sum();
                assert!((dot - 1.0).abs() < 1e-8, "n={n} j={j} dot={dot}");
            }
        }
    }

    #[test]
    fn top_solver_converges_on_low_rank_gram() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 300;
        let pts: Vec<[f64; 3]> = (0..n)
            .map(|_| {
                [
                    rng.gen_range(-3.0..3.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-0.5..0.5),
                ]
            })
            .collect();
        let gram = SymMatrix::from_fn(n, |i, j| (0..3).map(|c| pts[i][c] * pts[j][c]).sum());
        let top = sym_eig_top(&gram, 3, Exec::Sequential).unwrap();
        let tol = 1e-10 * gram.frobenius_norm();
        assert!(top.values[3..].iter().all(|v| v.abs() < tol));
        for j in 0..3 {
            assert!(residual(&gram, &top, j) < 1e-8 * gram.frobenius_norm());
        }
    }

    #[test]
    fn top_solver_survives_underflowing_columns() {
        let base = random_sym(8, 12);
        let a = SymMatrix::from_fn(8, |i, j| {
            let v = base.get(i, j);
            if (i == 0) != (j == 0) {
                v * 1e-170
            } else {
                v
            }
        });
        let top = sym_eig_top(&a, 2, Exec::Sequential).unwrap();
        let full = sym_eig(&a).unwrap();
        assert!(top.values.iter().all(|v| v.is_finite()));
        for (x, y) in full.values.iter().zip(&top.values) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
        for j in 0..2 {
            assert!(residual(&a, &top, j) < 1e-8 * a.frobenius_norm());
        }
    }

    #[test]
    fn top_solver_handles_repeated_leading_eigenvalue() {
        let a = SymMatrix::from_diagonal(&[2.0, 5.0, 5.0, 1.0, 0.0]);
        let top = sym_eig_top(&a, 2, Exec::Sequential).unwrap();
        assert_eq!(top.values[..2], [5.0, 5.0]);
        let (u, v) = (top.vector(0), top.vector(1));
        let dot: f64 = u.iter().zip(&v).map(|(p, q)| p * q).sum();
        assert!(dot.abs() < 1e-10);
        for x in [u, v] {
            assert!(x[0].abs() < 1e-10 && x[3].abs() < 1e-10 && x[4].abs() < 1e-10);
        }
    }

    #[test]
    fn covariance_examples() {
        let same = vec![[1.0, 2.0, 3.0]; 4];
        assert_eq!(covariance(&same).unwrap(), SymMatrix::zeros(3));

        let pm = [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]];
        assert_eq!(
            covariance(&pm).unwrap(),
            SymMatrix::from_diagonal(&[1.0, 0.0, 0.0])
        );
        assert!(matches!(
            covariance(&[[0.0; 3]]),
            Err(Error::TooFewPoints { .. })
        ));
    }

    #[test]
    fn covariance_matches_two_pass_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<[f64; 3]> = (0..200)
            .map(|_| {
                [
                    rng.gen_range(-3.0..3.0),
                    rng.gen_range(0.0..1.0),
                    rng.gen_range(5.0..9.0),
                ]
            })
            .collect();
        let c = covariance(&pts).unwrap();
        let n = pts.len() as f64;
        let mean: Vec<f64> = (0..3)
            .map(|k| pts.iter().map(|p| p[k]).sum::<f64>() / n)
            .collect();
        for i in 0..3 {
            for j in 0..3 {
                let want = pts
                    .iter()
                    .map(|p| (p[i] - mean[i]) * (p[j] - mean[j]))
                    .sum::<f64>()
                    / n;
                assert!((c.get(i, j) - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn double_center_examples() {
        assert_eq!(
            double_center(&SymMatrix::zeros(1)).unwrap(),
            SymMatrix::zeros(1)
        );

        let d = 3.0_f64;
        let sq = SymMatrix::from_row_major(2, vec![0.0, d * d, d * d, 0.0]).unwrap();
        let b = double_center(&sq).unwrap();
        let q = d * d / 4.0;
        for (got, want) in b.as_slice().iter().zip([q, -q, -q, q]) {
            assert!((got - want).abs() < 1e-12);
        }
        let e = sym_eig(&b).unwrap();
        assert!((e.values[0] - d * d / 2.0).abs() < 1e-12);

        let neg = SymMatrix::from_row_major(2, vec![0.0, -1.0, -1.0, 0.0]).unwrap();
        assert!(matches!(double_center(&neg), Err(Error::NegativeEntry(_))));
    }

    #[test]
    fn double_center_recovers_gram_of_centered_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut pts: Vec<[f64; 3]> = (0..30)
            .map(|_| {
                [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-1.0..3.0),
                ]
            })
            .collect();
        for k in 0..3 {
            let m = pts.iter().map(|p| p[k]).sum::<f64>() / 30.0;
            pts.iter_mut().for_each(|p| p[k] -= m);
        }
        let sq = SymMatrix::from_fn(30, |i, j| {
            (0..3).map(|k| (pts[i][k] - pts[j][k]).powi(2)).sum()
        });
        let b = double_center(&sq).unwrap();
        for i in 0..30 {
            let row_sum: f64 = b.row(i).iter().sum();
            assert!(row_sum.abs() < 1e-9);
            for j in 0..30 {
                let gram: f64 = (0..3).map(|k| pts[i][k] * pts[j][k]).sum();
                assert!((b.get(i, j) - gram).abs() < 1e-9);
            }
        }
    }
}
