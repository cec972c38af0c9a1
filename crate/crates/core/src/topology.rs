//! Trajectory embedding, Vietoris-Rips filtration construction, and
//! persistent homology up to dimension 1.
//!
//! Poses are lifted to R^3 (or R^6 with visual features), a filtered
//! simplicial complex up to dimension 2 is built over the point cloud, and
//! birth-death pairs are extracted by column reduction of the boundary
//! matrix over F_2. Cycles still open at `eps_max` are reported with death
//! clamped to `eps_max`: large unfilled loops are the signal of interest.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Pose;

/// Trajectory points lifted into the embedding space.
///
/// All points share one dimensionality: 3 for the spatial embedding,
/// 3 + 3 when visual features are appended.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedCloud {
    dim: usize,
    coords: Vec<f64>,
    /// (first, last) source timestep of the embedded segment.
    pub source_range: (u64, u64),
}

impl EmbeddedCloud {
    pub fn from_points(points: Vec<Vec<f64>>, source_range: (u64, u64)) -> Result<Self> {
        let dim = points.first().map(|p| p.len()).unwrap_or(0);
        if dim == 0 {
            return Err(Error::Validation("embedded cloud needs at least one point".into()));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in &points {
            if p.len() != dim {
                return Err(Error::Validation(format!(
                    "embedded point dimensionality {} != {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation("embedded coordinates must be finite".into()));
            }
            coords.extend_from_slice(p);
        }
        Ok(Self { dim, coords, source_range })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.point(i)
            .iter()
            .zip(self.point(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Lifts a pose to `[x, y, r*sin(theta)]`.
///
/// The sine keeps heading periodic; `r` scales its influence against the
/// spatial coordinates.
pub fn embed_pose(p: &Pose, r: f64) -> [f64; 3] {
    [p.x, p.y, r * p.theta.sin()]
}

/// Orthonormal 3-row projection basis over feature space, from the top-3
/// right singular vectors of a stacked feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionBasis {
    /// Three orthonormal rows, each of length d.
    pub rows: [Vec<f64>; 3],
    /// Set when the input had rank < 3 and rows were padded with an
    /// arbitrary orthonormal complement.
    pub degenerate: bool,
}

impl ProjectionBasis {
    pub fn feature_dim(&self) -> usize {
        self.rows[0].len()
    }

    /// Projects a feature vector to R^3.
    pub fn project(&self, f: &[f64]) -> Result<[f64; 3]> {
        if f.len() != self.feature_dim() {
            return Err(Error::Validation(format!(
                "feature dimensionality {} != basis dimensionality {}",
                f.len(),
                self.feature_dim()
            )));
        }
        let mut out = [0.0; 3];
        for (k, row) in self.rows.iter().enumerate() {
            out[k] = row.iter().zip(f).map(|(a, b)| a * b).sum();
        }
        Ok(out)
    }

    fn validate_orthonormal(&self) -> Result<()> {
        for i in 0..3 {
            for j in i..3 {
                let dot: f64 = self.rows[i].iter().zip(&self.rows[j]).map(|(a, b)| a * b).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                if (dot - expect).abs() > 1e-8 {
                    return Err(Error::Validation(format!(
                        "basis rows {i},{j} not orthonormal (dot {dot})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Right singular vectors and singular values of a `t x d` matrix by
/// one-sided (Hestenes) Jacobi: rotate column pairs until mutually
/// orthogonal; column norms are the singular values and the accumulated
/// rotations the right singular vectors. Returned in descending order.
pub fn jacobi_svd_right(features: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let t = features.len();
    let d = features.first().map(|f| f.len()).unwrap_or(0);
    // Column-major working copy of the matrix.
    let mut a: Vec<Vec<f64>> = (0..d).map(|j| (0..t).map(|i| features[i][j]).collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..d)
        .map(|j| (0..d).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    let eps = 1e-14;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..d {
            for q in (p + 1)..d {
                let alpha: f64 = a[p].iter().map(|x| x * x).sum();
                let beta: f64 = a[q].iter().map(|x| x * x).sum();
                let gamma: f64 = a[p].iter().zip(&a[q]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= eps * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let tan = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cos = 1.0 / (1.0 + tan * tan).sqrt();
                let sin = cos * tan;
                for i in 0..t {
                    let (xp, xq) = (a[p][i], a[q][i]);
                    a[p][i] = cos * xp - sin * xq;
                    a[q][i] = sin * xp + cos * xq;
                }
                for i in 0..d {
                    let (vp, vq) = (v[p][i], v[q][i]);
                    v[p][i] = cos * vp - sin * vq;
                    v[q][i] = sin * vp + cos * vq;
                }
                rotated = true;
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    let sigmas: Vec<f64> = a.iter().map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    order.sort_by(|&i, &j| sigmas[j].total_cmp(&sigmas[i]).then(i.cmp(&j)));
    let sorted_sigmas: Vec<f64> = order.iter().map(|&i| sigmas[i]).collect();
    let sorted_vectors: Vec<Vec<f64>> = order.iter().map(|&i| v[i].clone()).collect();
    (sorted_sigmas, sorted_vectors)
}

/// Top-3 right singular vectors of the stacked `t x d` feature matrix,
/// rows sign-fixed so the first non-negligible entry is positive.
///
/// Rank-deficient input is padded with an orthonormal complement and
/// flagged `degenerate`.
pub fn top3_basis(features: &[Vec<f64>]) -> Result<ProjectionBasis> {
    let t = features.len();
    let d = features.first().map(|f| f.len()).unwrap_or(0);
    if t < 3 || d < 3 {
        return Err(Error::Validation(format!("need a matrix of at least 3x3, got {t}x{d}")));
    }
    if features.iter().any(|f| f.len() != d) {
        return Err(Error::Validation("ragged feature matrix".into()));
    }

    let (sigma, vectors) = jacobi_svd_right(features);
    let tol = 1e-10 * sigma[0].max(1e-300);

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(3);
    let mut degenerate = false;
    for k in 0..3 {
        if sigma[k] > tol {
            rows.push(vectors[k].clone());
        } else {
            degenerate = true;
        }
    }
    // Pad with standard basis vectors orthogonalized against accepted rows.
    if rows.len() < 3 {
        for j in 0..d {
            if rows.len() == 3 {
                break;
            }
            let mut cand = vec![0.0; d];
            cand[j] = 1.0;
            for row in &rows {
                let dot: f64 = row.iter().zip(&cand).map(|(a, b)| a * b).sum();
                for (c, r) in cand.iter_mut().zip(row) {
                    *c -= dot * r;
                }
            }
            let norm: f64 = cand.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-8 {
                for c in &mut cand {
                    *c /= norm;
                }
                rows.push(cand);
            }
        }
    }
    if rows.len() != 3 {
        return Err(Error::Validation("could not complete an orthonormal basis".into()));
    }

    for row in &mut rows {
        if let Some(first) = row.iter().find(|v| v.abs() > 1e-12) {
            if *first < 0.0 {
                for v in row.iter_mut() {
                    *v = -*v;
                }
            }
        }
    }

    let mut it = rows.into_iter();
    let basis = ProjectionBasis {
        rows: [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()],
        degenerate,
    };
    basis.validate_orthonormal()?;
    Ok(basis)
}

/// Spatial embedding concatenated with the weighted 3D feature projection.
pub fn embed_enhanced(
    p: &Pose,
    f: &[f64],
    basis: &ProjectionBasis,
    r: f64,
    alpha_vis: f64,
) -> Result<[f64; 6]> {
    basis.validate_orthonormal()?;
    let spatial = embed_pose(p, r);
    let proj = basis.project(f)?;
    Ok([
        spatial[0],
        spatial[1],
        spatial[2],
        alpha_vis * proj[0],
        alpha_vis * proj[1],
        alpha_vis * proj[2],
    ])
}

/// Embeds a trajectory segment into R^3.
pub fn embed_trajectory(points: &[(u64, Pose)], r: f64) -> Result<EmbeddedCloud> {
    if points.is_empty() {
        return Err(Error::Validation("cannot embed an empty trajectory".into()));
    }
    let range = (points[0].0, points[points.len() - 1].0);
    EmbeddedCloud::from_points(
        points.iter().map(|(_, p)| embed_pose(p, r).to_vec()).collect(),
        range,
    )
}

/// Embeds a trajectory segment into R^6 with per-point visual features.
pub fn embed_trajectory_enhanced(
    points: &[(u64, Pose)],
    features: &[Vec<f64>],
    basis: &ProjectionBasis,
    r: f64,
    alpha_vis: f64,
) -> Result<EmbeddedCloud> {
    if points.is_empty() {
        return Err(Error::Validation("cannot embed an empty trajectory".into()));
    }
    if points.len() != features.len() {
        return Err(Error::Validation(format!(
            "{} poses but {} feature vectors",
            points.len(),
            features.len()
        )));
    }
    let range = (points[0].0, points[points.len() - 1].0);
    let mut embedded = Vec::with_capacity(points.len());
    for ((_, p), f) in points.iter().zip(features) {
        embedded.push(embed_enhanced(p, f, basis, r, alpha_vis)?.to_vec());
    }
    EmbeddedCloud::from_points(embedded, range)
}

/// One simplex of dimension 0-2 with its filtration value.
///
/// `vertices[..=dim]` are sorted ascending; unused slots hold `u32::MAX` so
/// whole-array comparison matches lexicographic order on the used prefix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Simplex {
    pub vertices: [u32; 3],
    pub dim: u8,
    pub value: f64,
}

impl Simplex {
    pub fn vertex(v: u32) -> Self {
        Self { vertices: [v, u32::MAX, u32::MAX], dim: 0, value: 0.0 }
    }

    pub fn edge(a: u32, b: u32, value: f64) -> Self {
        debug_assert!(a < b);
        Self { vertices: [a, b, u32::MAX], dim: 1, value }
    }

    pub fn triangle(a: u32, b: u32, c: u32, value: f64) -> Self {
        debug_assert!(a < b && b < c);
        Self { vertices: [a, b, c], dim: 2, value }
    }

    pub fn verts(&self) -> &[u32] {
        &self.vertices[..=self.dim as usize]
    }

    /// Faces obtained by omitting one vertex (empty for vertices).
    pub fn faces(&self) -> Vec<Simplex> {
        match self.dim {
            0 => Vec::new(),
            1 => vec![Simplex::vertex(self.vertices[0]), Simplex::vertex(self.vertices[1])],
            _ => {
                let [a, b, c] = self.vertices;
                // Face filtration values are not tracked here; lookup is by
                // vertex set.
                vec![
                    Simplex::edge(b, c, 0.0),
                    Simplex::edge(a, c, 0.0),
                    Simplex::edge(a, b, 0.0),
                ]
            }
        }
    }

    fn sort_key(&self) -> (f64, u8, [u32; 3]) {
        (self.value, self.dim, self.vertices)
    }
}

/// Vietoris-Rips filtration up to dimension 2, sorted by
/// (value, dimension, lexicographic vertices).
#[derive(Debug, Clone, PartialEq)]
pub struct Filtration {
    simplices: Vec<Simplex>,
    eps_max: f64,
}

impl Filtration {
    /// Builds from raw simplices: sorts canonically and validates the
    /// filtration property (faces present with value <= the coface's).
    pub fn from_simplices(mut simplices: Vec<Simplex>, eps_max: f64) -> Result<Self> {
        if eps_max <= 0.0 {
            return Err(Error::Validation("eps_max must be > 0".into()));
        }
        simplices.sort_by(|a, b| {
            let (av, ad, axs) = a.sort_key();
            let (bv, bd, bxs) = b.sort_key();
            av.total_cmp(&bv).then(ad.cmp(&bd)).then(axs.cmp(&bxs))
        });
        let filt = Self { simplices, eps_max };
        filt.validate()?;
        Ok(filt)
    }

    fn validate(&self) -> Result<()> {
        let mut value_of: HashMap<(u8, [u32; 3]), f64> = HashMap::new();
        for s in &self.simplices {
            if !(0.0..=self.eps_max).contains(&s.value) {
                return Err(Error::Structural(format!(
                    "simplex value {} outside [0, {}]",
                    s.value, self.eps_max
                )));
            }
            if s.dim == 0 && s.value != 0.0 {
                return Err(Error::Structural("vertices must enter at 0".into()));
            }
            for f in s.faces() {
                match value_of.get(&(f.dim, f.vertices)) {
                    Some(&fv) if fv <= s.value => {}
                    Some(&fv) => {
                        return Err(Error::Structural(format!(
                            "face of {:?} appears later ({fv} > {})",
                            s.verts(),
                            s.value
                        )))
                    }
                    None => {
                        return Err(Error::Structural(format!(
                            "missing face {:?} of {:?}",
                            f.verts(),
                            s.verts()
                        )))
                    }
                }
            }
            if value_of.insert((s.dim, s.vertices), s.value).is_some() {
                return Err(Error::Structural(format!("duplicate simplex {:?}", s.verts())));
            }
        }
        Ok(())
    }

    pub fn simplices(&self) -> &[Simplex] {
        &self.simplices
    }

    pub fn eps_max(&self) -> f64 {
        self.eps_max
    }

    pub fn count_dim(&self, dim: u8) -> usize {
        self.simplices.iter().filter(|s| s.dim == dim).count()
    }
}

/// Builds the Vietoris-Rips filtration of a cloud: vertices at 0, edges at
/// their length when <= `eps_max`, triangles at the max of their three edge
/// lengths when all edges are present.
pub fn build_vr_filtration(cloud: &EmbeddedCloud, eps_max: f64) -> Result<Filtration> {
    if cloud.is_empty() {
        return Err(Error::Validation("cannot build a filtration of zero points".into()));
    }
    if eps_max <= 0.0 {
        return Err(Error::Validation("eps_max must be > 0".into()));
    }
    let n = cloud.len();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = cloud.distance(i, j);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }

    let mut simplices: Vec<Simplex> = (0..n as u32).map(Simplex::vertex).collect();
    let mut edges: Vec<(u32, u32)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = dist[i * n + j];
            if d <= eps_max {
                simplices.push(Simplex::edge(i as u32, j as u32, d));
                edges.push((i as u32, j as u32));
            }
        }
    }
    // Neighbor-intersection triangle enumeration: each triangle {a<b<c} is
    // found once, from its lexicographically first edge (a,b).
    for &(a, b) in &edges {
        for c in (b + 1)..n as u32 {
            let dac = dist[a as usize * n + c as usize];
            let dbc = dist[b as usize * n + c as usize];
            if dac <= eps_max && dbc <= eps_max {
                let dab = dist[a as usize * n + b as usize];
                simplices.push(Simplex::triangle(a, b, c, dab.max(dac).max(dbc)));
            }
        }
    }
    Filtration::from_simplices(simplices, eps_max)
}

/// A finite birth-death pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersistencePair {
    pub birth: f64,
    pub death: f64,
}

impl PersistencePair {
    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }
}

/// How a connected component's class ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ComponentEnd {
    /// Merged into an older component at this scale.
    Merged(f64),
    /// Still alive at `eps_max`.
    Essential,
}

/// Dimension-0 class: born at 0, dead at a merge or essential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dim0Pair {
    pub birth: f64,
    pub death: ComponentEnd,
}

/// Persistence diagram for dimensions 0 and 1.
///
/// Dimension-1 deaths are finite: cycles open at `eps_max` are clamped there.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PersistenceDiagram {
    pub dim0_pairs: Vec<Dim0Pair>,
    pub dim1_pairs: Vec<PersistencePair>,
}

impl PersistenceDiagram {
    /// Essential component count = beta_0 at `eps_max`.
    pub fn essential_components(&self) -> usize {
        self.dim0_pairs
            .iter()
            .filter(|p| matches!(p.death, ComponentEnd::Essential))
            .count()
    }

    fn sort(&mut self) {
        self.dim0_pairs.sort_by(|a, b| {
            let da = match a.death {
                ComponentEnd::Merged(d) => d,
                ComponentEnd::Essential => f64::INFINITY,
            };
            let db = match b.death {
                ComponentEnd::Merged(d) => d,
                ComponentEnd::Essential => f64::INFINITY,
            };
            a.birth.total_cmp(&b.birth).then(da.total_cmp(&db))
        });
        self.dim1_pairs
            .sort_by(|a, b| a.birth.total_cmp(&b.birth).then(a.death.total_cmp(&b.death)));
    }
}

/// Output of the boundary-matrix reduction, in simplex indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    /// (creator index, destroyer index) pairs.
    pub pairs: Vec<(usize, usize)>,
    /// Creator indices never destroyed (essential classes).
    pub essential: Vec<usize>,
}

impl Reduction {
    /// Betti number at `eps_max` for a dimension: essential class count.
    pub fn betti(&self, filt: &Filtration, dim: u8) -> usize {
        self.essential.iter().filter(|&&i| filt.simplices()[i].dim == dim).count()
    }
}

/// Left-to-right column reduction of the boundary matrix over F_2.
///
/// Columns are simplices in filtration order; a column is repeatedly added
/// to (XORed with) earlier reduced columns sharing its lowest nonzero row
/// until that pivot is unique or the column clears.
pub fn reduce_boundary_matrix(filt: &Filtration) -> Result<Reduction> {
    let simplices = filt.simplices();
    let m = simplices.len();

    let mut index_of: HashMap<(u8, [u32; 3]), usize> = HashMap::with_capacity(m);
    for (i, s) in simplices.iter().enumerate() {
        index_of.insert((s.dim, s.vertices), i);
    }

    // Sparse columns: ascending row indices, pivot = last entry.
    let mut columns: Vec<Vec<usize>> = Vec::with_capacity(m);
    for s in simplices {
        let mut col: Vec<usize> = s
            .faces()
            .iter()
            .map(|f| {
                index_of.get(&(f.dim, f.vertices)).copied().ok_or_else(|| {
                    Error::Structural(format!("missing face {:?} of {:?}", f.verts(), s.verts()))
                })
            })
            .collect::<Result<_>>()?;
        col.sort_unstable();
        columns.push(col);
    }

    let mut pivot_owner: Vec<Option<usize>> = vec![None; m];
    let mut pairs = Vec::new();
    let mut scratch = Vec::new();
    for j in 0..m {
        let mut col = std::mem::take(&mut columns[j]);
        while let Some(&pivot) = col.last() {
            match pivot_owner[pivot] {
                Some(owner) => {
                    // col ^= columns[owner]
                    scratch.clear();
                    let (mut a, mut b) = (col.iter().peekable(), columns[owner].iter().peekable());
                    loop {
                        match (a.peek(), b.peek()) {
                            (Some(&&x), Some(&&y)) if x == y => {
                                a.next();
                                b.next();
                            }
                            (Some(&&x), Some(&&y)) if x < y => {
                                scratch.push(x);
                                a.next();
                            }
                            (Some(_), Some(&&y)) => {
                                scratch.push(y);
                                b.next();
                            }
                            (Some(&&x), None) => {
                                scratch.push(x);
                                a.next();
                            }
                            (None, Some(&&y)) => {
                                scratch.push(y);
                                b.next();
                            }
                            (None, None) => break,
                        }
                    }
                    std::mem::swap(&mut col, &mut scratch);
                }
                None => {
                    pivot_owner[pivot] = Some(j);
                    pairs.push((pivot, j));
                    break;
                }
            }
        }
        columns[j] = col;
    }

    let destroyed: std::collections::HashSet<usize> = pairs.iter().map(|&(i, _)| i).collect();
    let essential: Vec<usize> = (0..m)
        .filter(|&j| columns[j].is_empty() && !destroyed.contains(&j))
        .collect();
    Ok(Reduction { pairs, essential })
}

/// Standard persistence pairing of a filtration over F_2.
///
/// Zero-persistence pairs are retained; `filter_diagram` removes them.
pub fn compute_persistence(filt: &Filtration) -> Result<PersistenceDiagram> {
    let reduction = reduce_boundary_matrix(filt)?;
    let simplices = filt.simplices();
    let mut diagram = PersistenceDiagram::default();

    for &(i, j) in &reduction.pairs {
        let (birth, death) = (simplices[i].value, simplices[j].value);
        match simplices[i].dim {
            0 => diagram
                .dim0_pairs
                .push(Dim0Pair { birth, death: ComponentEnd::Merged(death) }),
            1 => diagram.dim1_pairs.push(PersistencePair { birth, death }),
            _ => {} // dim-2 classes are not reported
        }
    }
    for &i in &reduction.essential {
        match simplices[i].dim {
            0 => diagram
                .dim0_pairs
                .push(Dim0Pair { birth: 0.0, death: ComponentEnd::Essential }),
            // Open cycles clamp to eps_max.
            1 => diagram
                .dim1_pairs
                .push(PersistencePair { birth: simplices[i].value, death: filt.eps_max() }),
            _ => {}
        }
    }
    diagram.sort();
    Ok(diagram)
}

/// Drops dimension-1 pairs with persistence <= `tau_p`; dimension 0 is kept.
pub fn filter_diagram(pd: &PersistenceDiagram, tau_p: f64) -> PersistenceDiagram {
    PersistenceDiagram {
        dim0_pairs: pd.dim0_pairs.clone(),
        dim1_pairs: pd
            .dim1_pairs
            .iter()
            .filter(|p| p.persistence() > tau_p)
            .copied()
            .collect(),
    }
}

/// Connected components of the eps-sublevel 1-skeleton, by union-find.
pub fn connected_components(filt: &Filtration, eps: f64) -> usize {
    let n = filt.count_dim(0);
    let mut uf = UnionFind::new(n);
    for s in filt.simplices() {
        if s.dim == 1 && s.value <= eps {
            uf.union(s.vertices[0] as usize, s.vertices[1] as usize);
        }
    }
    uf.count()
}

/// Disjoint-set forest with union by size and path halving.
#[derive(Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    count: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), size: vec![1; n], count: n }
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut x = x;
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.count -= 1;
        true
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

/// Serializes a diagram as `dim,birth,death` lines ordered by
/// (dim, birth, death). Essential components are clamped to `eps_max`;
/// "inf" is never emitted.
pub fn export_diagram(pd: &PersistenceDiagram, eps_max: f64) -> String {
    let mut rows: Vec<(u8, f64, f64)> = Vec::new();
    for p in &pd.dim0_pairs {
        let death = match p.death {
            ComponentEnd::Merged(d) => d,
            ComponentEnd::Essential => eps_max,
        };
        rows.push((0, p.birth, death));
    }
    for p in &pd.dim1_pairs {
        rows.push((1, p.birth, p.death));
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)));
    let mut out = String::from("dim,birth,death\n");
    for (d, b, dd) in rows {
        out.push_str(&format!("{d},{b},{dd}\n"));
    }
    out
}

/// Parses the `dim,birth,death` export format. Dimension-0 rows come back
/// as merged pairs (the clamp is not invertible).
pub fn parse_diagram(text: &str) -> Result<PersistenceDiagram> {
    let mut pd = PersistenceDiagram::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || (lineno == 0 && line == "dim,birth,death") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::Parse(format!("diagram line {}: {:?}", lineno + 1, line)));
        }
        let dim: u8 = fields[0]
            .parse()
            .map_err(|_| Error::Parse(format!("diagram line {}: bad dim", lineno + 1)))?;
        let birth: f64 = fields[1]
            .parse()
            .map_err(|_| Error::Parse(format!("diagram line {}: bad birth", lineno + 1)))?;
        let death: f64 = fields[2]
            .parse()
            .map_err(|_| Error::Parse(format!("diagram line {}: bad death", lineno + 1)))?;
        if !birth.is_finite() || !death.is_finite() || death < birth {
            return Err(Error::Validation(format!(
                "diagram line {}: need finite death >= birth",
                lineno + 1
            )));
        }
        match dim {
            0 => pd.dim0_pairs.push(Dim0Pair { birth, death: ComponentEnd::Merged(death) }),
            1 => pd.dim1_pairs.push(PersistencePair { birth, death }),
            d => return Err(Error::Parse(format!("diagram line {}: dim {d} unsupported", lineno + 1))),
        }
    }
    pd.sort();
    Ok(pd)
}
