//! Two-source separation of reduced density coordinates.
//!
//! The pipeline subtracts the field mean, reduces to two coordinates
//! (PCA plane or Isomap embedding), whitens, rotates with FastICA and then
//! fixes ICA's sign/permutation/scale ambiguity with physical conventions:
//! pure density vectors have positive component sum, hemoglobin is the
//! vector with the larger green-to-red density ratio, and each quantity map
//! is shifted to a zero minimum and scaled to a unit 95th percentile.

use crate::density::{mean3, DensityField};
use crate::error::{Error, Result};
use crate::isomap::{isomap_with_retry, IsomapParams};
use crate::numerics::{sym_eig, SymMatrix};
use crate::par::Exec;
use crate::pca::{fit_pca_points, project_points};

pub const ICA_TOL: f64 = 1e-10;
pub const ICA_MAX_ITER: usize = 1000;
pub const DEFAULT_POINT_GUARD: usize = 20_000;
/// Whitening refuses covariances whose eigenvalue ratio is below this.
pub const MIN_CONDITION_RATIO: f64 = 1e-10;
/// Relative score gap under which the hemoglobin/melanin labels are flagged.
pub const AMBIGUITY_MARGIN: f64 = 0.05;
/// Green-to-red ratio splitting hemoglobin from melanin when only one
/// source is present and there is nothing to compare against.
pub const SINGLE_SOURCE_GR_THRESHOLD: f64 = 2.0;
const SCALE_PERCENTILE: f64 = 0.95;

pub const MELANIN: usize = 0;
pub const HEMOGLOBIN: usize = 1;

type Mat2 = [[f64; 2]; 2];

/// Linear pigment model `density = baseline + q_mel * c_mel + q_hb * c_hb`.
#[derive(Clone, Debug, PartialEq)]
pub struct MixingModel {
    /// Density per unit quantity, indexed by [`MELANIN`] and [`HEMOGLOBIN`].
    pub pure_vectors: [[f64; 3]; 2],
    pub baseline: [f64; 3],
    /// Maps reduced coordinates `y` to quantities: `q = unmixing * y + offset`.
    pub unmixing: Mat2,
    pub unmixing_offset: [f64; 2],
}

impl MixingModel {
    /// Density predicted for quantities `(q_mel, q_hb)`.
    pub fn mix(&self, q: [f64; 2]) -> [f64; 3] {
        std::array::from_fn(|c| {
            self.baseline[c]
                + q[MELANIN] * self.pure_vectors[MELANIN][c]
                + q[HEMOGLOBIN] * self.pure_vectors[HEMOGLOBIN][c]
        })
    }

    /// Angle between the two pure vectors, radians.
    pub fn pure_vector_angle(&self) -> f64 {
        angle3(&self.pure_vectors[0], &self.pure_vectors[1])
    }
}

/// Per-pixel relative pigment quantities, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PigmentMaps {
    pub width: usize,
    pub height: usize,
    pub melanin: Vec<f64>,
    pub hemoglobin: Vec<f64>,
}

impl PigmentMaps {
    pub fn get(&self, pigment: usize) -> &[f64] {
        match pigment {
            MELANIN => &self.melanin,
            _ => &self.hemoglobin,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Whitening {
    pub mean: [f64; 2],
    pub matrix: Mat2,
    pub inverse: Mat2,
    /// Smallest over largest covariance eigenvalue.
    pub condition: f64,
}

impl Whitening {
    pub fn apply(&self, y: [f64; 2]) -> [f64; 2] {
        mat_vec(&self.matrix, [y[0] - self.mean[0], y[1] - self.mean[1]])
    }
}

/// Centers and decorrelates to unit covariance with `D^-1/2 E^T`.
pub fn whiten(coords: &[[f64; 2]]) -> Result<(Vec<[f64; 2]>, Whitening)> {
    if coords.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: coords.len(),
        });
    }
    let n = coords.len() as f64;
    let mean = [
        coords.iter().map(|c| c[0]).sum::<f64>() / n,
        coords.iter().map(|c| c[1]).sum::<f64>() / n,
    ];
    let cov = crate::numerics::covariance(coords)?;
    let eig = sym_eig(&cov)?;
    let (l0, l1) = (eig.values[0], eig.values[1]);
    let condition = if l0 > 0.0 { l1 / l0 } else { 0.0 };
    if l0.is_nan() || l0 <= 0.0 || condition <= MIN_CONDITION_RATIO {
        return Err(Error::DegenerateCovariance(condition));
    }
    let e = |i: usize, j: usize| eig.component(i, j);
    let (s0, s1) = (l0.sqrt(), l1.sqrt());
    let matrix = [[e(0, 0) / s0, e(1, 0) / s0], [e(0, 1) / s1, e(1, 1) / s1]];
    let inverse = [[e(0, 0) * s0, e(0, 1) * s1], [e(1, 0) * s0, e(1, 1) * s1]];
    let w = Whitening {
        mean,
        matrix,
        inverse,
        condition,
    };
    let out = coords.iter().map(|&c| w.apply(c)).collect();
    Ok((out, w))
}

#[derive(Clone, Debug, PartialEq)]
pub struct IcaRotation {
    /// Rows are the unmixing directions in whitened space.
    pub matrix: Mat2,
    pub converged: bool,
    pub iterations: usize,
}

/// Symmetric FastICA with the log-cosh contrast, started from the identity.
pub fn fastica_2d(whitened: &[[f64; 2]]) -> IcaRotation {
    let n = whitened.len().max(1) as f64;
    let mut w: Mat2 = [[1.0, 0.0], [0.0, 1.0]];
    for iter in 1..=ICA_MAX_ITER {
        let mut next = [[0.0; 2]; 2];
        for (r, row) in w.iter().enumerate() {
            let (mut gx, mut dg) = ([0.0; 2], 0.0);
            for x in whitened {
                let t = (row[0] * x[0] + row[1] * x[1]).tanh();
                gx[0] += x[0] * t;
                gx[1] += x[1] * t;
                dg += 1.0 - t * t;
            }
            next[r] = [gx[0] / n - dg / n * row[0], gx[1] / n - dg / n * row[1]];
        }
        let next = symmetric_decorrelation(next);
        let delta = (0..2)
            .map(|r| (1.0 - (next[r][0] * w[r][0] + next[r][1] * w[r][1]).abs()).abs())
            .fold(0.0, f64::max);
        w = next;
        if delta < ICA_TOL {
            return IcaRotation {
                matrix: w,
                converged: true,
                iterations: iter,
            };
        }
    }
    IcaRotation {
        matrix: w,
        converged: false,
        iterations: ICA_MAX_ITER,
    }
}

/// `(W W^T)^-1/2 W`.
fn symmetric_decorrelation(w: Mat2) -> Mat2 {
    let wwt = SymMatrix::from_fn(2, |i, j| w[i][0] * w[j][0] + w[i][1] * w[j][1]);
    let Ok(eig) = sym_eig(&wwt) else {
        return w;
    };
    if eig.values[1] <= 0.0 {
        return w;
    }
    let inv_sqrt: Mat2 = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            (0..2)
                .map(|k| eig.component(i, k) * eig.component(j, k) / eig.values[k].sqrt())
                .sum()
        })
    });
    mat_mul(&inv_sqrt, &w)
}

/// How raw ICA sources were turned into labelled quantity maps.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    /// Source index feeding melanin and hemoglobin, in that order.
    pub source: [usize; 2],
    /// Sign applied to the source feeding each pigment.
    pub sign: [f64; 2],
    /// Minimum of the signed source, subtracted before scaling.
    pub shift: [f64; 2],
    /// Divisor bringing the shifted map to a unit 95th percentile.
    pub scale: [f64; 2],
    /// Green-to-red density ratios of the sign-corrected candidates, per source.
    pub scores: [f64; 2],
    pub ambiguous: bool,
}

/// Resolves sign, permutation and scale of two separated sources.
///
/// `candidates[i]` is the density-space direction that source `i` adds per
/// unit. Signs make each candidate's component sum positive; the candidate
/// with the larger green-to-red ratio is labelled hemoglobin.
pub fn disambiguate(
    sources: [&[f64]; 2],
    candidates: [[f64; 3]; 2],
    width: usize,
    height: usize,
) -> Result<(PigmentMaps, Assignment)> {
    if sources[0].len() != width * height || sources[1].len() != width * height {
        return Err(Error::InvalidArgument(
            "source length does not match map size".into(),
        ));
    }
    let sign = candidates.map(|c| {
        if c.iter().sum::<f64>() < 0.0 {
            -1.0
        } else {
            1.0
        }
    });
    let scores: [f64; 2] =
        std::array::from_fn(|i| green_red_ratio(&candidates[i].map(|v| v * sign[i])));
    let hb = if scores[1] > scores[0] { 1 } else { 0 };
    let source = [1 - hb, hb];
    let hi = scores[0].abs().max(scores[1].abs());
    let ambiguous = (scores[0] - scores[1]).abs() <= AMBIGUITY_MARGIN * hi;

    let mut shift = [0.0; 2];
    let mut scale = [1.0; 2];
    let mut maps: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for pigment in [MELANIN, HEMOGLOBIN] {
        let s = source[pigment];
        let signed: Vec<f64> = sources[s].iter().map(|v| v * sign[s]).collect();
        let (q, m, p) = normalize_quantity(&signed);
        shift[pigment] = m;
        scale[pigment] = p;
        maps[pigment] = q;
    }
    let [melanin, hemoglobin] = maps;
    Ok((
        PigmentMaps {
            width,
            height,
            melanin,
            hemoglobin,
        },
        Assignment {
            source,
            sign: [sign[source[0]], sign[source[1]]],
            shift,
            scale,
            scores,
            ambiguous,
        },
    ))
}

fn green_red_ratio(c: &[f64; 3]) -> f64 {
    if c[0] > 0.0 {
        c[1] / c[0]
    } else {
        f64::INFINITY
    }
}

/// Min-shift then scale to unit 95th percentile. Returns `(map, shift, scale)`.
pub(crate) fn normalize_quantity(values: &[f64]) -> (Vec<f64>, f64, f64) {
    if values.is_empty() {
        return (vec![], 0.0, 1.0);
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = values.iter().map(|v| v - min).collect();
    let mut scale = percentile(&shifted, SCALE_PERCENTILE);
    if scale.is_nan() || scale <= 0.0 {
        scale = shifted.iter().cloned().fold(0.0, f64::max);
    }
    if scale.is_nan() || scale <= 0.0 {
        scale = 1.0;
    }
    (shifted.iter().map(|v| v / scale).collect(), min, scale)
}

/// Nearest-rank percentile.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reducer {
    Pca,
    Isomap(IsomapParams),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecomposeOptions {
    /// Largest point count accepted by the Isomap reducer.
    pub point_guard: usize,
    pub exec: Exec,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        Self {
            point_guard: DEFAULT_POINT_GUARD,
            exec: Exec::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub model: MixingModel,
    pub maps: PigmentMaps,
    /// Spectrum of the reduction step (covariance or MDS eigenvalues).
    pub spectrum: Vec<f64>,
    pub ica_converged: bool,
    pub ica_iterations: usize,
    /// Set when the hemoglobin/melanin labels rest on close scores.
    pub ambiguous: bool,
    /// Set when whitening found only one independent direction.
    pub single_source: bool,
    pub whitening_condition: f64,
    /// Neighbor count actually used by the Isomap reducer.
    pub k_used: Option<usize>,
}

/// Reduced coordinates plus a linear map back into centered density space.
struct Reduction {
    coords: Vec<[f64; 2]>,
    /// Columns map reduced axes to density directions.
    lift: [[f64; 3]; 2],
    spectrum: Vec<f64>,
    k_used: Option<usize>,
}

fn reduce(centered: &[[f64; 3]], reducer: Reducer, opts: &DecomposeOptions) -> Result<Reduction> {
    match reducer {
        Reducer::Pca => {
            let sub = fit_pca_points(centered)?;
            Ok(Reduction {
                coords: project_points(centered, &sub),
                lift: sub.basis,
                spectrum: sub.spectrum.to_vec(),
                k_used: None,
            })
        }
        Reducer::Isomap(params) => {
            if centered.len() > opts.point_guard {
                return Err(Error::TooManyPoints {
                    n: centered.len(),
                    guard: opts.point_guard,
                });
            }
            if params.dim != 2 {
                return Err(Error::InvalidArgument(
                    "pigment separation needs a 2-D reduction".into(),
                ));
            }
            if centered.iter().all(|p| *p == centered[0]) {
                return Err(Error::DegenerateField);
            }
            let fit = isomap_with_retry(centered, &params, opts.exec)?;
            let coords: Vec<[f64; 2]> = fit.embedding.points().map(|p| [p[0], p[1]]).collect();
            let lift = least_squares_lift(centered, &coords);
            Ok(Reduction {
                coords,
                lift,
                spectrum: fit.embedding.spectrum,
                k_used: Some(fit.k_used),
            })
        }
    }
}

/// Least-squares `M` minimizing `sum |x_i - M y_i|^2`, returned as columns.
fn least_squares_lift(x: &[[f64; 3]], y: &[[f64; 2]]) -> [[f64; 3]; 2] {
    let mut yty = [[0.0; 2]; 2];
    let mut xty = [[0.0; 2]; 3];
    for (xi, yi) in x.iter().zip(y) {
        for a in 0..2 {
            for b in 0..2 {
                yty[a][b] += yi[a] * yi[b];
            }
            for c in 0..3 {
                xty[c][a] += xi[c] * yi[a];
            }
        }
    }
    let inv = inverse2(&yty).unwrap_or([[0.0; 2]; 2]);
    std::array::from_fn(|col| {
        std::array::from_fn(|c| xty[c][0] * inv[0][col] + xty[c][1] * inv[1][col])
    })
}

/// Mean-subtract, reduce to two coordinates, whiten, FastICA, disambiguate.
pub fn decompose(
    field: &DensityField,
    reducer: Reducer,
    opts: &DecomposeOptions,
) -> Result<Decomposition> {
    let points = field.vectors();
    let origin = mean3(points)?;
    if points.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: points.len(),
        });
    }
    let centered: Vec<[f64; 3]> = points
        .iter()
        .map(|p| std::array::from_fn(|c| p[c] - origin[c]))
        .collect();
    let red = reduce(&centered, reducer, opts)?;
    let lift_vec = |a: [f64; 2]| -> [f64; 3] {
        std::array::from_fn(|c| red.lift[0][c] * a[0] + red.lift[1][c] * a[1])
    };

    let (white, whitening) = match whiten(&red.coords) {
        Ok(ok) => ok,
        Err(Error::DegenerateCovariance(condition)) => {
            return single_source(field, origin, &red, condition);
        }
        Err(e) => return Err(e),
    };
    let rot = fastica_2d(&white);
    let unmix = mat_mul(&rot.matrix, &whitening.matrix);
    let mix = inverse2(&unmix).ok_or(Error::DegenerateCovariance(whitening.condition))?;
    let mu = whitening.mean;

    let sources: [Vec<f64>; 2] = std::array::from_fn(|r| {
        red.coords
            .iter()
            .map(|y| unmix[r][0] * (y[0] - mu[0]) + unmix[r][1] * (y[1] - mu[1]))
            .collect()
    });
    let candidates: [[f64; 3]; 2] = std::array::from_fn(|i| lift_vec([mix[0][i], mix[1][i]]));
    let (maps, asg) = disambiguate(
        [&sources[0], &sources[1]],
        candidates,
        field.width(),
        field.height(),
    )?;

    let mu_lift = lift_vec(mu);
    let mut baseline: [f64; 3] = std::array::from_fn(|c| origin[c] + mu_lift[c]);
    let mut pure_vectors = [[0.0; 3]; 2];
    let mut unmixing = [[0.0; 2]; 2];
    let mut unmixing_offset = [0.0; 2];
    for pigment in [MELANIN, HEMOGLOBIN] {
        let s = asg.source[pigment];
        let (sg, m, p) = (asg.sign[pigment], asg.shift[pigment], asg.scale[pigment]);
        let dir = candidates[s];
        for c in 0..3 {
            pure_vectors[pigment][c] = p * sg * dir[c];
            baseline[c] += m * sg * dir[c];
        }
        unmixing[pigment] = [sg * unmix[s][0] / p, sg * unmix[s][1] / p];
        unmixing_offset[pigment] = (-sg * (unmix[s][0] * mu[0] + unmix[s][1] * mu[1]) - m) / p;
    }
    Ok(Decomposition {
        model: MixingModel {
            pure_vectors,
            baseline,
            unmixing,
            unmixing_offset,
        },
        maps,
        spectrum: red.spectrum,
        ica_converged: rot.converged,
        ica_iterations: rot.iterations,
        ambiguous: asg.ambiguous,
        single_source: false,
        whitening_condition: whitening.condition,
        k_used: red.k_used,
    })
}

/// One independent direction: it becomes the only nonzero map.
fn single_source(
    field: &DensityField,
    origin: [f64; 3],
    red: &Reduction,
    condition: f64,
) -> Result<Decomposition> {
    let mut dir = red.lift[0];
    let mut raw: Vec<f64> = red.coords.iter().map(|y| y[0]).collect();
    let mut sign = 1.0;
    if dir.iter().sum::<f64>() < 0.0 {
        sign = -1.0;
        dir = dir.map(|v| -v);
        raw.iter_mut().for_each(|v| *v = -*v);
    }
    let active = if green_red_ratio(&dir) > SINGLE_SOURCE_GR_THRESHOLD {
        HEMOGLOBIN
    } else {
        MELANIN
    };
    let (q, m, p) = normalize_quantity(&raw);
    let zeros = vec![0.0; q.len()];
    let (melanin, hemoglobin) = if active == MELANIN {
        (q, zeros)
    } else {
        (zeros, q)
    };

    let mut pure_vectors = [red.lift[1], red.lift[1]];
    pure_vectors[active] = dir.map(|v| v * p);
    let mut unmixing = [[0.0; 2]; 2];
    unmixing[active] = [sign / p, 0.0];
    let mut unmixing_offset = [0.0; 2];
    unmixing_offset[active] = -m / p;
    let baseline = std::array::from_fn(|c| origin[c] + m * dir[c]);
    Ok(Decomposition {
        model: MixingModel {
            pure_vectors,
            baseline,
            unmixing,
            unmixing_offset,
        },
        maps: PigmentMaps {
            width: field.width(),
            height: field.height(),
            melanin,
            hemoglobin,
        },
        spectrum: red.spectrum.clone(),
        ica_converged: true,
        ica_iterations: 0,
        ambiguous: true,
        single_source: true,
        whitening_condition: condition,
        k_used: red.k_used,
    })
}

fn mat_vec(m: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][0] * b[0][j] + a[i][1] * b[1][j]))
}

fn inverse2(m: &Mat2) -> Option<Mat2> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.abs() <= 1e-300 || !det.is_finite() {
        return None;
    }
    Some([
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ])
}

fn angle3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dot: f64 = (0..3).map(|c| a[c] * b[c]).sum();
    let na = (0..3).map(|c| a[c] * a[c]).sum::<f64>().sqrt();
    let nb = (0..3).map(|c| b[c] * b[c]).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0).acos()
}

/// Pearson correlation.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}
