//! Synthetic data with known ground truth, plus brute-force oracles.
//!
//! All randomness comes from [`SynthRng`]: ChaCha8 (the `rand_chacha`
//! stream cipher RNG, 8 rounds) seeded with a `u64` via `seed_from_u64`,
//! uniforms as 53-bit mantissas in `[0, 1)`, normals by Box–Muller.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::density::{from_density, DensityField};
use crate::error::{Error, Result};
use crate::ica::{MixingModel, PigmentMaps, HEMOGLOBIN, MELANIN};
use crate::imageio::RgbImage;
use crate::isomap::{GeodesicMatrix, NeighborGraph};
use crate::numerics::{sym_eig, SymMatrix};

/// Frozen swiss-roll height.
pub const SWISSROLL_HEIGHT: f64 = 60.0;
pub const SWISSROLL_NOISE_SD: f64 = 0.3;
pub const SWISSROLL_SEED: u64 = 7;
pub const SWISSROLL_GRID: usize = 50;

pub const DEFAULT_PIGMENT_SEED: u64 = 11;

#[derive(Clone, Debug)]
pub struct SynthRng {
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl SynthRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Standard normal.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Unit-rate exponential by inversion.
    pub fn exponential(&mut self) -> f64 {
        -(1.0 - self.uniform()).ln()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }
}

/// `grid x grid` points `(t cos t, h, t sin t)`, `t` in `[1.5pi, 4.5pi]` and
/// `h` in `[0, SWISSROLL_HEIGHT]`, ordered with `t` outermost, plus
/// isotropic Gaussian noise.
pub fn gen_swissroll(grid: usize, noise_sd: f64, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = SynthRng::new(seed);
    let lerp = |lo: f64, hi: f64, i: usize| {
        if grid < 2 {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (grid - 1) as f64
        }
    };
    let (t0, t1) = (1.5 * std::f64::consts::PI, 4.5 * std::f64::consts::PI);
    let mut out = Vec::with_capacity(grid * grid);
    for i in 0..grid {
        let t = lerp(t0, t1, i);
        for j in 0..grid {
            let h = lerp(0.0, SWISSROLL_HEIGHT, j);
            let mut p = [t * t.cos(), h, t * t.sin()];
            if noise_sd > 0.0 {
                p.iter_mut().for_each(|v| *v += noise_sd * rng.normal());
            }
            out.push(p);
        }
    }
    out
}

/// The frozen swiss roll used for the dimensionality-reduction comparison.
pub fn frozen_swissroll() -> Vec<[f64; 3]> {
    gen_swissroll(SWISSROLL_GRID, SWISSROLL_NOISE_SD, SWISSROLL_SEED)
}

/// Generator settings for a two-pigment density field.
///
/// Each quantity map is `scale * (background * e + disk_amplitude * bumps)` with `e`
/// i.i.d. unit exponential and bumps `(1 - (r/R)^2)^2` on non-overlapping
/// disks: freckles raise melanin, pimples hemoglobin.
#[derive(Clone, Debug, PartialEq)]
pub struct PigmentFieldConfig {
    pub width: usize,
    pub height: usize,
    pub melanin: [f64; 3],
    pub hemoglobin: [f64; 3],
    pub baseline: [f64; 3],
    pub melanin_scale: f64,
    pub hemoglobin_scale: f64,
    pub freckles: usize,
    pub pimples: usize,
    pub disk_radius: f64,
    pub disk_amplitude: f64,
    /// Weight of the exponential texture outside the disks.
    pub background: f64,
    /// Noise sd as a fraction of the RMS of the centered noiseless signal.
    pub noise_fraction: f64,
    pub seed: u64,
}

impl Default for PigmentFieldConfig {
    fn default() -> Self {
        Self {
            width: 40,
            height: 32,
            melanin: [0.30, 0.50, 0.90],
            hemoglobin: [0.15, 0.85, 0.50],
            baseline: [0.18, 0.30, 0.50],
            melanin_scale: 0.5,
            hemoglobin_scale: 0.5,
            freckles: 3,
            pimples: 3,
            disk_radius: 4.0,
            disk_amplitude: 8.0,
            background: 1.0,
            noise_fraction: 0.01,
            seed: DEFAULT_PIGMENT_SEED,
        }
    }
}

impl PigmentFieldConfig {
    /// Larger noiseless field with more disks and a faint background, so
    /// in-disk means are dominated by the disks, and a neutral pigment-free
    /// color at which hue-based separation is well posed.
    pub fn separation() -> Self {
        Self {
            width: 64,
            height: 48,
            baseline: [0.3, 0.3, 0.3],
            melanin_scale: 0.1,
            hemoglobin_scale: 0.1,
            freckles: 6,
            pimples: 6,
            background: 0.02,
            noise_fraction: 0.0,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticField {
    pub field: DensityField,
    pub true_maps: PigmentMaps,
    pub true_model: MixingModel,
    /// Pixels inside a freckle disk.
    pub freckle_mask: Vec<bool>,
    /// Pixels inside a pimple disk.
    pub pimple_mask: Vec<bool>,
    pub noise_sd: f64,
}

impl SyntheticField {
    /// Reflectance image of the field.
    pub fn image(&self) -> Result<RgbImage> {
        from_density(&self.field)
    }
}

pub fn gen_pigment_field(cfg: &PigmentFieldConfig) -> Result<SyntheticField> {
    let (c1, c2) = (cfg.melanin, cfg.hemoglobin);
    let cross = [
        c1[1] * c2[2] - c1[2] * c2[1],
        c1[2] * c2[0] - c1[0] * c2[2],
        c1[0] * c2[1] - c1[1] * c2[0],
    ];
    let norm = |v: &[f64; 3]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm(&cross) <= 1e-12 * norm(&c1) * norm(&c2) {
        return Err(Error::ParallelPureVectors);
    }
    if cfg.melanin_scale < 0.0
        || cfg.hemoglobin_scale < 0.0
        || cfg.disk_amplitude < 0.0
        || cfg.background < 0.0
    {
        return Err(Error::InvalidArgument(
            "pigment quantities must be nonnegative".into(),
        ));
    }
    let (w, h) = (cfg.width, cfg.height);
    let n = w * h;
    let mut rng = SynthRng::new(cfg.seed);

    let disks = place_disks(w, h, cfg.freckles + cfg.pimples, cfg.disk_radius, &mut rng);
    let (freckles, pimples) = disks.split_at(cfg.freckles.min(disks.len()));
    let bumps = |set: &[[f64; 2]]| -> (Vec<f64>, Vec<bool>) {
        let mut b = vec![0.0; n];
        let mut m = vec![false; n];
        for y in 0..h {
            for x in 0..w {
                for c in set {
                    let r2 = ((x as f64 - c[0]).powi(2) + (y as f64 - c[1]).powi(2))
                        / (cfg.disk_radius * cfg.disk_radius);
                    if r2 < 1.0 {
                        b[y * w + x] += (1.0 - r2).powi(2);
                        m[y * w + x] = true;
                    }
                }
            }
        }
        (b, m)
    };
    let (fb, freckle_mask) = bumps(freckles);
    let (pb, pimple_mask) = bumps(pimples);

    let mut q = [vec![0.0; n], vec![0.0; n]];
    for i in 0..n {
        let (em, eh) = (rng.exponential(), rng.exponential());
        q[MELANIN][i] = cfg.melanin_scale * (cfg.background * em + cfg.disk_amplitude * fb[i]);
        q[HEMOGLOBIN][i] =
            cfg.hemoglobin_scale * (cfg.background * eh + cfg.disk_amplitude * pb[i]);
    }
    let clean: Vec<[f64; 3]> = (0..n)
        .map(|i| std::array::from_fn(|c| cfg.baseline[c] + q[0][i] * c1[c] + q[1][i] * c2[c]))
        .collect();
    let noise_sd = cfg.noise_fraction * centered_rms(&clean);
    let vectors: Vec<[f64; 3]> = clean
        .iter()
        .map(|v| v.map(|x| (x + noise_sd * rng.normal()).max(0.0)))
        .collect();
    let [melanin, hemoglobin] = q;
    Ok(SyntheticField {
        field: DensityField::new(w, h, vectors)?,
        true_maps: PigmentMaps {
            width: w,
            height: h,
            melanin,
            hemoglobin,
        },
        true_model: true_model(c1, c2, cfg.baseline),
        freckle_mask,
        pimple_mask,
        noise_sd,
    })
}

fn true_model(c1: [f64; 3], c2: [f64; 3], baseline: [f64; 3]) -> MixingModel {
    MixingModel {
        pure_vectors: [c1, c2],
        baseline,
        unmixing: [[1.0, 0.0], [0.0, 1.0]],
        unmixing_offset: [0.0, 0.0],
    }
}

/// Random non-overlapping disk centers kept a radius away from the border.
/// Gives up on a disk after a bounded number of rejections.
fn place_disks(w: usize, h: usize, count: usize, radius: f64, rng: &mut SynthRng) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = Vec::with_capacity(count);
    let (span_x, span_y) = (w as f64 - 2.0 * radius, h as f64 - 2.0 * radius);
    if span_x <= 0.0 || span_y <= 0.0 {
        return out;
    }
    let min_gap = 2.0 * radius + 1.0;
    for _ in 0..count {
        for _ in 0..1000 {
            let c = [
                radius + rng.uniform() * span_x,
                radius + rng.uniform() * span_y,
            ];
            if out
                .iter()
                .all(|o| ((o[0] - c[0]).powi(2) + (o[1] - c[1]).powi(2)).sqrt() >= min_gap)
            {
                out.push(c);
                break;
            }
        }
    }
    out
}

fn centered_rms(points: &[[f64; 3]]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let n = points.len() as f64;
    let mut total = 0.0;
    for c in 0..3 {
        let m = points.iter().map(|p| p[c]).sum::<f64>() / n;
        total += points.iter().map(|p| (p[c] - m).powi(2)).sum::<f64>();
    }
    (total / (3.0 * n)).sqrt()
}

/// Leakage of each disk type onto the map it should not affect:
/// `[freckles on hemoglobin, pimples on melanin]`, each the in-disk mean of
/// the wrong map over the in-disk mean of the right map.
pub fn cross_leakage(maps: &PigmentMaps, synth: &SyntheticField) -> [f64; 2] {
    let f = &synth.freckle_mask;
    let p = &synth.pimple_mask;
    [
        mean_over(&maps.hemoglobin, f) / mean_over(&maps.melanin, f),
        mean_over(&maps.melanin, p) / mean_over(&maps.hemoglobin, p),
    ]
}

/// Background-corrected variant of [`cross_leakage`]: each in-disk mean is
/// replaced by its excess over the mean of pixels outside every disk.
pub fn contrast_leakage(maps: &PigmentMaps, synth: &SyntheticField) -> [f64; 2] {
    let outside: Vec<bool> = synth
        .freckle_mask
        .iter()
        .zip(&synth.pimple_mask)
        .map(|(a, b)| !a && !b)
        .collect();
    let contrast = |v: &[f64], m: &[bool]| mean_over(v, m) - mean_over(v, &outside);
    let f = &synth.freckle_mask;
    let p = &synth.pimple_mask;
    [
        contrast(&maps.hemoglobin, f).abs() / contrast(&maps.melanin, f),
        contrast(&maps.melanin, p).abs() / contrast(&maps.hemoglobin, p),
    ]
}

fn mean_over(v: &[f64], mask: &[bool]) -> f64 {
    let (s, k) = v
        .iter()
        .zip(mask)
        .filter(|(_, &on)| on)
        .fold((0.0, 0usize), |(s, k), (x, _)| (s + x, k + 1));
    if k == 0 {
        f64::NAN
    } else {
        s / k as f64
    }
}

/// Dijkstra from every source on a binary heap.
pub fn oracle_apsp(g: &NeighborGraph) -> Result<GeodesicMatrix> {
    let n = g.node_count();
    let components = g.component_count();
    if components > 1 {
        return Err(Error::DisconnectedGraph { components });
    }
    let mut dist = vec![f64::INFINITY; n * n];
    for s in 0..n {
        let row = &mut dist[s * n..(s + 1) * n];
        row[s] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((OrdF64(0.0), s)));
        while let Some(Reverse((OrdF64(d), u))) = heap.pop() {
            if d > row[u] {
                continue;
            }
            for &(v, w) in g.neighbors(u) {
                let nd = d + w;
                if nd < row[v] {
                    row[v] = nd;
                    heap.push(Reverse((OrdF64(nd), v)));
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            let m = dist[i * n + j].min(dist[j * n + i]);
            dist[i * n + j] = m;
            dist[j * n + i] = m;
        }
    }
    GeodesicMatrix::from_row_major(n, dist)
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Random spanning tree plus about `n` extra edges, weights in `[0.1, 10)`.
pub fn random_connected_graph(n: usize, rng: &mut SynthRng) -> NeighborGraph {
    let weight = |rng: &mut SynthRng| 0.1 + 9.9 * rng.uniform();
    let mut edges = Vec::with_capacity(2 * n);
    for i in 1..n {
        let j = rng.below(i);
        edges.push((i, j, weight(rng)));
    }
    if n >= 2 {
        for _ in 0..n {
            let (a, b) = (rng.below(n), rng.below(n));
            if a != b {
                edges.push((a, b, weight(rng)));
            }
        }
    }
    NeighborGraph::from_edges(n, &edges).expect("generated edges are valid")
}

/// `min over orthogonal Q, translation t of |A - (B Q + t)| / |B - mean(B)|`.
pub fn procrustes_residual(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    let n = a.len();
    if n == 0 || n != b.len() {
        return Err(Error::DegenerateInput);
    }
    let d = a[0].len();
    if d == 0 || a.iter().chain(b).any(|r| r.len() != d) {
        return Err(Error::DegenerateInput);
    }
    let center = |x: &[Vec<f64>]| -> Vec<Vec<f64>> {
        let mean: Vec<f64> = (0..d)
            .map(|c| x.iter().map(|r| r[c]).sum::<f64>() / n as f64)
            .collect();
        x.iter()
            .map(|r| r.iter().zip(&mean).map(|(v, m)| v - m).collect())
            .collect()
    };
    let (ac, bc) = (center(a), center(b));
    let b_norm = bc.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    if b_norm == 0.0 {
        return Err(Error::DegenerateInput);
    }
    // M = Bc^T Ac; the optimal Q is the polar factor of M.
    let mut m = vec![0.0; d * d];
    for (ra, rb) in ac.iter().zip(&bc) {
        for i in 0..d {
            for j in 0..d {
                m[i * d + j] += rb[i] * ra[j];
            }
        }
    }
    let mtm = SymMatrix::from_fn(d, |i, j| (0..d).map(|k| m[k * d + i] * m[k * d + j]).sum());
    let eig = sym_eig(&mtm)?;
    let top = eig.values[0].max(0.0);
    let full_rank = eig
        .values
        .iter()
        .all(|&l| l > 1e-24 * top.max(f64::MIN_POSITIVE));
    if !full_rank {
        let a2: f64 = ac.iter().flatten().map(|v| v * v).sum();
        let nuclear: f64 = eig.values.iter().map(|l| l.max(0.0).sqrt()).sum();
        return Ok((a2 + b_norm * b_norm - 2.0 * nuclear).max(0.0).sqrt() / b_norm);
    }
    // Q = M V diag(1/sqrt(l)) V^T
    let inv_sqrt: Vec<f64> = (0..d * d)
        .map(|ij| {
            let (i, j) = (ij / d, ij % d);
            (0..d)
                .map(|k| eig.component(i, k) * eig.component(j, k) / eig.values[k].sqrt())
                .sum()
        })
        .collect();
    let q: Vec<f64> = (0..d * d)
        .map(|ij| {
            let (i, j) = (ij / d, ij % d);
            (0..d).map(|k| m[i * d + k] * inv_sqrt[k * d + j]).sum()
        })
        .collect();
    let mut resid = 0.0;
    for (ra, rb) in ac.iter().zip(&bc) {
        for j in 0..d {
            let bq: f64 = (0..d).map(|k| rb[k] * q[k * d + j]).sum();
            resid += (ra[j] - bq).powi(2);
        }
    }
    Ok(resid.sqrt() / b_norm)
}
