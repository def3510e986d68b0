//! Isomap: k-nearest-neighbor graph, Floyd–Warshall geodesics, classical MDS.
//!
//! The all-pairs step is the O(n^3) bottleneck. Its row relaxations for a
//! fixed pivot are independent, so they run under the caller's [`Exec`]
//! and give the same bits either way.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::numerics::{double_center, sym_eig_top, SymMatrix};
use crate::par::{self, Exec};
use crate::pca;

pub const DEFAULT_K: usize = 10;
pub const DEFAULT_MAX_RETRIES: usize = 3;
pub const RETRY_STEP: usize = 5;

/// Undirected weighted graph. Adjacency lists are sorted by neighbor index.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborGraph {
    adj: Vec<Vec<(usize, f64)>>,
}

impl NeighborGraph {
    /// Builds a graph from undirected edges. Duplicate edges keep the
    /// smaller weight.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidArgument(format!(
                    "edge ({i},{j}) outside {n} nodes"
                )));
            }
            if i == j {
                return Err(Error::InvalidArgument(format!("self-loop at {i}")));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidArgument(format!("edge weight {w}")));
            }
            adj[i].push((j, w));
            adj[j].push((i, w));
        }
        for list in &mut adj {
            list.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
            list.dedup_by_key(|e| e.0);
        }
        Ok(Self { adj })
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    /// Undirected edges `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adj.iter().enumerate().flat_map(|(i, list)| {
            list.iter()
                .filter(move |(j, _)| *j > i)
                .map(move |&(j, w)| (i, j, w))
        })
    }

    pub fn component_count(&self) -> usize {
        let n = self.adj.len();
        let mut seen = vec![false; n];
        let mut components = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for &(v, _) in &self.adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        components
    }
}

/// Dense symmetric all-pairs distance matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicMatrix {
    n: usize,
    dist: Vec<f64>,
}

impl GeodesicMatrix {
    /// Wraps an arbitrary distance matrix (e.g. exact Euclidean distances)
    /// for use with [`classical_mds`].
    pub fn from_row_major(n: usize, dist: Vec<f64>) -> Result<Self> {
        if dist.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "expected {} distances, got {}",
                n * n,
                dist.len()
            )));
        }
        for i in 0..n {
            if dist[i * n + i] != 0.0 {
                return Err(Error::InvalidArgument(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = dist[i * n + j];
                if !v.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "non-finite distance at ({i},{j})"
                    )));
                }
                if v < 0.0 {
                    return Err(Error::NegativeEntry(v));
                }
                if v != dist[j * n + i] {
                    return Err(Error::NotSymmetric((v - dist[j * n + i]).abs()));
                }
            }
        }
        Ok(Self { n, dist })
    }

    /// Euclidean distances between `points`.
    pub fn euclidean<P: AsRef<[f64]> + Sync>(points: &[P]) -> Self {
        let n = points.len();
        let dist = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| euclidean(points[i].as_ref(), points[j].as_ref()))
            .collect();
        Self { n, dist }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    pub fn squared(&self) -> SymMatrix {
        SymMatrix::from_fn(self.n, |i, j| {
            let d = self.get(i, j);
            d * d
        })
    }
}

/// Low-dimensional coordinates plus the full MDS eigenvalue spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    n: usize,
    d: usize,
    coords: Vec<f64>,
    /// Eigenvalues of the double-centered squared distances, descending.
    /// Negative entries are kept as computed.
    pub spectrum: Vec<f64>,
}

impl Embedding {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks(self.d)
    }

    pub fn ccr(&self, d: usize) -> Result<f64> {
        pca::ccr(&self.spectrum, d)
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn build_knn_graph<P: AsRef<[f64]> + Sync>(points: &[P], k: usize) -> Result<NeighborGraph> {
    build_knn_graph_with(points, k, Exec::default())
}

/// Connects every point to its `k` nearest neighbors (ties to the lower
/// index) and symmetrizes by union.
pub fn build_knn_graph_with<P: AsRef<[f64]> + Sync>(
    points: &[P],
    k: usize,
    exec: Exec,
) -> Result<NeighborGraph> {
    let n = points.len();
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if n < k + 1 {
        return Err(Error::KTooLarge { k, n });
    }
    let nearest = nearest_neighbors(points, k, exec);
    let edges: Vec<(usize, usize, f64)> = nearest
        .iter()
        .enumerate()
        .flat_map(|(i, list)| list.iter().map(move |&(j, w)| (i, j, w)))
        .collect();
    let g = NeighborGraph::from_edges(n, &edges)?;
    match g.component_count() {
        1 => Ok(g),
        components => Err(Error::DisconnectedGraph { components }),
    }
}

/// The `k` nearest other points of every point, sorted by distance then index.
fn nearest_neighbors<P: AsRef<[f64]> + Sync>(
    points: &[P],
    k: usize,
    exec: Exec,
) -> Vec<Vec<(usize, f64)>> {
    let n = points.len();
    par::map_indices(exec, n, |i| {
        let pi = points[i].as_ref();
        let mut cand: Vec<(usize, f64)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (j, euclidean(pi, points[j].as_ref())))
            .collect();
        let by_dist = |a: &(usize, f64), b: &(usize, f64)| -> Ordering {
            a.1.total_cmp(&b.1).then(a.0.cmp(&b.0))
        };
        if k < cand.len() {
            cand.select_nth_unstable_by(k - 1, by_dist);
            cand.truncate(k);
        }
        cand.sort_by(by_dist);
        cand
    })
}

pub fn geodesic_distances(g: &NeighborGraph) -> Result<GeodesicMatrix> {
    geodesic_distances_with(g, Exec::default())
}

/// Floyd–Warshall all-pairs shortest paths.
pub fn geodesic_distances_with(g: &NeighborGraph, exec: Exec) -> Result<GeodesicMatrix> {
    let n = g.node_count();
    let mut dist = vec![f64::INFINITY; n * n];
    for i in 0..n {
        dist[i * n + i] = 0.0;
        for &(j, w) in g.neighbors(i) {
            dist[i * n + j] = w;
        }
    }
    let mut pivot = vec![0.0; n];
    for k in 0..n {
        // Row k is fixed during pass k because dist[k][k] = 0.
        pivot.copy_from_slice(&dist[k * n..(k + 1) * n]);
        let pivot = &pivot;
        par::for_each_row(exec, &mut dist, n, |_, row| {
            let dik = row[k];
            if dik == f64::INFINITY {
                return;
            }
            for (x, &dkj) in row.iter_mut().zip(pivot) {
                let via = dik + dkj;
                if via < *x {
                    *x = via;
                }
            }
        });
    }
    if dist.iter().any(|d| d.is_infinite()) {
        return Err(Error::DisconnectedGraph {
            components: g.component_count(),
        });
    }
    Ok(GeodesicMatrix { n, dist })
}

pub fn classical_mds(dist: &GeodesicMatrix, d: usize) -> Result<Embedding> {
    classical_mds_with(dist, d, Exec::default())
}

/// Top-`d` eigenvectors of `-1/2 J D^2 J`, each scaled by the square root of
/// its eigenvalue. Directions with nonpositive eigenvalues get zero coordinates.
pub fn classical_mds_with(dist: &GeodesicMatrix, d: usize, exec: Exec) -> Result<Embedding> {
    let n = dist.n;
    if d == 0 || d + 1 > n {
        return Err(Error::InvalidDimension { d, n });
    }
    let b = double_center(&dist.squared())?;
    let eig = sym_eig_top(&b, d, exec)?;
    if eig.values[0] <= 0.0 {
        return Err(Error::AllEigenvaluesNonpositive);
    }
    let scales: Vec<f64> = eig.values[..d]
        .iter()
        .map(|&l| if l > 0.0 { l.sqrt() } else { 0.0 })
        .collect();
    let mut coords = vec![0.0; n * d];
    for i in 0..n {
        for (j, s) in scales.iter().enumerate() {
            coords[i * d + j] = eig.component(i, j) * s;
        }
    }
    Ok(Embedding {
        n,
        d,
        coords,
        spectrum: eig.values,
    })
}

/// Full pipeline with a fixed `k`.
pub fn isomap<P: AsRef<[f64]> + Sync>(points: &[P], k: usize, d: usize) -> Result<Embedding> {
    let exec = Exec::default();
    let g = build_knn_graph_with(points, k, exec)?;
    let geo = geodesic_distances_with(&g, exec)?;
    classical_mds_with(&geo, d, exec)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IsomapParams {
    pub k: usize,
    pub dim: usize,
    /// How many times a disconnected graph is rebuilt with `k + 5`.
    pub max_retries: usize,
}

impl Default for IsomapParams {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            dim: 2,
            max_retries: DEFAULT_MAX_RETRIES,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IsomapFit {
    pub embedding: Embedding,
    /// Neighbor count that produced a connected graph.
    pub k_used: usize,
}

/// [`isomap`] that widens the neighborhood on disconnection.
pub fn isomap_with_retry<P: AsRef<[f64]> + Sync>(
    points: &[P],
    params: &IsomapParams,
    exec: Exec,
) -> Result<IsomapFit> {
    let mut k = params.k;
    let mut attempt = 0;
    let graph = loop {
        match build_knn_graph_with(points, k, exec) {
            Ok(g) => break g,
            Err(Error::DisconnectedGraph { .. }) if attempt < params.max_retries => {
                attempt += 1;
                k += RETRY_STEP;
            }
            Err(e) => return Err(e),
        }
    };
    let geo = geodesic_distances_with(&graph, exec)?;
    let embedding = classical_mds_with(&geo, params.dim, exec)?;
    Ok(IsomapFit {
        embedding,
        k_used: k,
    })
}
