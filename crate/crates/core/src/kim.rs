//! HSV-cone decomposition.
//!
//! Region samples are converted to hexcone HSV and centrally projected
//! through the cone apex onto the plane `v = v_a` (mean value), which keeps
//! `h` and `s`. The minimal hue arc enclosing the samples gives two axes;
//! every pixel is then written in oblique coordinates along them in the
//! plane coordinates `(s cos h, s sin h)`.

use crate::error::{Error, Result};
use crate::ica::{normalize_quantity, PigmentMaps};
use crate::imageio::{Region, RgbImage};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HsvColor {
    /// Degrees in `[0, 360)`; 0 when `s = 0`.
    pub h: f64,
    pub s: f64,
    pub v: f64,
}

pub fn rgb_to_hsv(c: [f64; 3]) -> HsvColor {
    let [r, g, b] = c;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    if max <= 0.0 || delta <= 0.0 {
        return HsvColor {
            h: 0.0,
            s: 0.0,
            v: max,
        };
    }
    let sector = if max == r {
        ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    HsvColor {
        h: wrap_degrees(60.0 * sector),
        s: delta / max,
        v: max,
    }
}

pub fn hsv_to_rgb(c: HsvColor) -> [f64; 3] {
    let chroma = c.v * c.s;
    let hp = wrap_degrees(c.h) / 60.0;
    let x = chroma * (1.0 - (hp.rem_euclid(2.0) - 1.0).abs());
    let m = c.v - chroma;
    let (r, g, b) = match hp as u32 {
        0 => (chroma, x, 0.0),
        1 => (x, chroma, 0.0),
        2 => (0.0, chroma, x),
        3 => (0.0, x, chroma),
        4 => (x, 0.0, chroma),
        _ => (chroma, 0.0, x),
    };
    [r + m, g + m, b + m]
}

fn wrap_degrees(h: f64) -> f64 {
    let w = h.rem_euclid(360.0);
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Samples projected onto the constant-value plane.
#[derive(Clone, Debug, PartialEq)]
pub struct ColorPlane {
    pub v_a: f64,
    /// `(h, s)` per sample.
    pub samples: Vec<(f64, f64)>,
}

pub fn build_color_plane(samples: &[HsvColor]) -> Result<ColorPlane> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let v_a = samples.iter().map(|c| c.v).sum::<f64>() / samples.len() as f64;
    Ok(ColorPlane {
        v_a,
        samples: samples.iter().map(|c| (c.h, c.s)).collect(),
    })
}

/// Circular arc running counter-clockwise from `start` for `length` degrees.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HueArc {
    pub start: f64,
    pub length: f64,
}

impl HueArc {
    pub fn end(&self) -> f64 {
        wrap_degrees(self.start + self.length)
    }

    /// Membership with a 1e-9 degree allowance at the far end.
    pub fn contains(&self, h: f64) -> bool {
        (h - self.start).rem_euclid(360.0) <= self.length + 1e-9
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HueAxes {
    /// Hemoglobin axis hue, degrees.
    pub axis_h: f64,
    /// Melanin axis hue, degrees.
    pub axis_m: f64,
    pub arc: HueArc,
}

/// Angular distance on the circle, in `[0, 180]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Smallest arc containing every hue: the complement of the widest gap
/// between circularly consecutive hues.
pub fn minimal_arc(hues: &[f64]) -> Option<HueArc> {
    if hues.is_empty() {
        return None;
    }
    let mut sorted: Vec<f64> = hues.iter().map(|&h| wrap_degrees(h)).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let (mut best_gap, mut best_after) = (-1.0, 0);
    for i in 0..n {
        let next = if i + 1 < n {
            sorted[i + 1]
        } else {
            sorted[0] + 360.0
        };
        let gap = next - sorted[i];
        if gap > best_gap {
            best_gap = gap;
            best_after = (i + 1) % n;
        }
    }
    Some(HueArc {
        start: sorted[best_after],
        length: (360.0 - best_gap).max(0.0),
    })
}

pub fn find_axes(plane: &ColorPlane) -> Result<HueAxes> {
    let hues: Vec<f64> = plane
        .samples
        .iter()
        .filter(|(_, s)| *s > 0.0)
        .map(|(h, _)| *h)
        .collect();
    if hues.is_empty() {
        return Err(if plane.samples.is_empty() {
            Error::EmptySamples
        } else {
            Error::AllGray
        });
    }
    if hues.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: hues.len(),
        });
    }
    let arc = minimal_arc(&hues).expect("nonempty hues");
    if arc.length >= 180.0 {
        return Err(Error::ArcTooWide(arc.length));
    }
    if arc.length <= 0.0 {
        return Err(Error::InvalidArgument(
            "all chromatic samples share one hue".into(),
        ));
    }
    let (a, b) = (arc.start, arc.end());
    let (axis_h, axis_m) = if circular_distance(b, 0.0) < circular_distance(a, 0.0) {
        (b, a)
    } else {
        (a, b)
    };
    Ok(HueAxes {
        axis_h,
        axis_m,
        arc,
    })
}

/// Plane point `(s cos h, s sin h)`.
fn plane_point(c: &HsvColor) -> [f64; 2] {
    let (sin, cos) = c.h.to_radians().sin_cos();
    [c.s * cos, c.s * sin]
}

/// Oblique coordinates `(q_h, q_m)` of `p` along the two axis directions.
pub fn oblique_coordinates(axes: &HueAxes, p: [f64; 2]) -> [f64; 2] {
    let (uh1, uh0) = axes.axis_h.to_radians().sin_cos();
    let (um1, um0) = axes.axis_m.to_radians().sin_cos();
    let det = uh0 * um1 - uh1 * um0;
    [
        (p[0] * um1 - p[1] * um0) / det,
        (uh0 * p[1] - uh1 * p[0]) / det,
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct KimDecomposition {
    pub axes: HueAxes,
    pub plane: ColorPlane,
    /// Clamped oblique coordinates before normalization, melanin then hemoglobin.
    pub raw: [Vec<f64>; 2],
    pub maps: PigmentMaps,
    /// Pixels with a negative oblique coordinate, i.e. outside the wedge.
    pub clamped: usize,
}

/// Negative coordinates smaller than this are rounding on an axis.
const OUTSIDE_TOL: f64 = 1e-12;

/// Axes fitted on `region`, every pixel of `img` decomposed.
pub fn decompose_kim(img: &RgbImage, region: Region) -> Result<KimDecomposition> {
    decompose_kim_sampled(img, &region.extract(img)?)
}

/// Axes fitted on the pixels of `samples`, every pixel of `img` decomposed.
pub fn decompose_kim_sampled(img: &RgbImage, samples: &RgbImage) -> Result<KimDecomposition> {
    let samples: Vec<HsvColor> = samples.pixels().iter().map(|&c| rgb_to_hsv(c)).collect();
    let plane = build_color_plane(&samples)?;
    let axes = find_axes(&plane)?;

    let mut clamped = 0;
    let mut raw = [Vec::with_capacity(img.len()), Vec::with_capacity(img.len())];
    for &c in img.pixels() {
        let [qh, qm] = oblique_coordinates(&axes, plane_point(&rgb_to_hsv(c)));
        if qh < -OUTSIDE_TOL || qm < -OUTSIDE_TOL {
            clamped += 1;
        }
        raw[0].push(qm.max(0.0));
        raw[1].push(qh.max(0.0));
    }
    let (melanin, _, _) = normalize_quantity(&raw[0]);
    let (hemoglobin, _, _) = normalize_quantity(&raw[1]);
    Ok(KimDecomposition {
        axes,
        plane,
        raw,
        maps: PigmentMaps {
            width: img.width(),
            height: img.height(),
            melanin,
            hemoglobin,
        },
        clamped,
    })
}
