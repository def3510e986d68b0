//! Optical-density representation: per-pixel `(-ln r, -ln g, -ln b)`.
//!
//! Natural logarithm throughout. Pigment contributions add linearly in this
//! domain, which is what the PCA/ICA and Isomap pipelines rely on.

use crate::error::{Error, Result};
use crate::imageio::RgbImage;

/// Row-major field of optical-density 3-vectors. Components are finite and
/// nonnegative.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityField {
    width: usize,
    height: usize,
    vectors: Vec<[f64; 3]>,
}

impl DensityField {
    pub fn new(width: usize, height: usize, vectors: Vec<[f64; 3]>) -> Result<Self> {
        if vectors.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "{} vectors supplied for a {width}x{height} field",
                vectors.len()
            )));
        }
        for &v in vectors.iter().flatten() {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite density {v}")));
            }
            if v < 0.0 {
                return Err(Error::NegativeDensity(v));
            }
        }
        Ok(Self {
            width,
            height,
            vectors,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[[f64; 3]] {
        &self.vectors
    }

    /// Adds `offset` to every vector.
    pub fn shifted(&self, offset: [f64; 3]) -> Result<Self> {
        let vectors = self
            .vectors
            .iter()
            .map(|v| [v[0] + offset[0], v[1] + offset[1], v[2] + offset[2]])
            .collect();
        Self::new(self.width, self.height, vectors)
    }
}

pub fn to_density(img: &RgbImage) -> DensityField {
    let vectors = img.pixels().iter().map(|p| p.map(|c| -c.ln())).collect();
    DensityField {
        width: img.width(),
        height: img.height(),
        vectors,
    }
}

/// Inverse transform `exp(-c)`, clamped into `(0, 1]`.
pub fn from_density(field: &DensityField) -> Result<RgbImage> {
    if let Some(&neg) = field.vectors.iter().flatten().find(|v| **v < 0.0) {
        return Err(Error::NegativeDensity(neg));
    }
    let data = field
        .vectors
        .iter()
        .map(|v| v.map(|c| (-c).exp().clamp(f64::MIN_POSITIVE, 1.0)))
        .collect();
    RgbImage::new(field.width, field.height, data)
}

pub fn mean_vector(field: &DensityField) -> Result<[f64; 3]> {
    mean3(&field.vectors)
}

pub(crate) fn mean3(points: &[[f64; 3]]) -> Result<[f64; 3]> {
    if points.is_empty() {
        return Err(Error::EmptyField);
    }
    let mut acc = [0.0; 3];
    for p in points {
        for c in 0..3 {
            acc[c] += p[c];
        }
    }
    let n = points.len() as f64;
    Ok(acc.map(|s| s / n))
}
