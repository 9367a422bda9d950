//! Spherical codes and the facets used to build hard instances.
//!
//! Differences of two probability rows live in the zero-sum hyperplane
//! `H_n` of `R^n`. [`RotationMap`] rotates `H_n` onto the first `n - 1`
//! coordinates, so points of a spherical code on `S^{n-2}` in `R^{n-1}` can
//! be lifted back into transition-matrix differences.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const RANK_TOL: f64 = 1e-10;

/// Proper rotation `Pi` of `R^n` with `Pi (1/sqrt(n)) = e_n`.
///
/// Built as the Householder reflection exchanging `1/sqrt(n)` and `e_n`,
/// followed by a sign flip of the first coordinate so that `det = +1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationMap {
    matrix: DMatrix<f64>,
}

pub fn rotation_to_hyperplane(n: usize) -> RotationMap {
    assert!(n >= 2, "rotation needs n >= 2");
    let nf = n as f64;
    let mut v = DVector::from_element(n, 1.0 / nf.sqrt());
    v[n - 1] -= 1.0;
    let vv = v.dot(&v);
    let mut m = DMatrix::identity(n, n) - (&v * v.transpose()) * (2.0 / vv);
    // A reflection has det -1; flipping one row other than the last keeps
    // the image of the all-ones direction at +e_n.
    m.row_mut(0).neg_mut();
    RotationMap { matrix: m }
}

impl RotationMap {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x
    }

    pub fn apply_transpose(&self, y: &DVector<f64>) -> DVector<f64> {
        self.matrix.transpose() * y
    }

    /// `Pi^T [y; 0]`: a vector of `R^{n-1}` mapped into `H_n`.
    pub fn lift(&self, y: &DVector<f64>) -> DVector<f64> {
        let n = self.n();
        assert_eq!(y.len(), n - 1, "lift expects an (n-1)-vector");
        let mut padded = DVector::zeros(n);
        padded.rows_mut(0, n - 1).copy_from(y);
        self.apply_transpose(&padded)
    }

    /// First `n - 1` coordinates of `Pi x`; exact inverse of `lift` on `H_n`.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        let n = self.n();
        self.apply(x).rows(0, n - 1).into_owned()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeKind {
    Simplex,
    Icosahedron,
    Custom,
}

/// Unit vectors in `R^dim` whose pairwise inner products are at most
/// `cos_theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalCode {
    pub dim: usize,
    pub kind: CodeKind,
    pub points: Vec<DVector<f64>>,
    pub cos_theta: f64,
}

impl SphericalCode {
    /// Normalizes `points` and records their largest pairwise inner product.
    pub fn custom(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map(|p| p.len()).unwrap_or(0);
        let mut pts = Vec::with_capacity(points.len());
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            let v = DVector::from_vec(p);
            let norm = v.norm();
            if norm == 0.0 {
                return Err(Error::UnsupportedCode("zero point".into()));
            }
            pts.push(v / norm);
        }
        Ok(Self::from_unit_points(dim, CodeKind::Custom, pts))
    }

    fn from_unit_points(dim: usize, kind: CodeKind, points: Vec<DVector<f64>>) -> Self {
        let cos_theta = max_pairwise_dot(&points);
        SphericalCode {
            dim,
            kind,
            points,
            cos_theta,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn gram(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| self.points[i].dot(&self.points[j]))
    }

    pub fn to_json(&self) -> Result<String> {
        let pts: Vec<Vec<f64>> = self.points.iter().map(|p| p.iter().copied().collect()).collect();
        Ok(serde_json::to_string(&pts)?)
    }
}

fn max_pairwise_dot(points: &[DVector<f64>]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            best = best.max(points[i].dot(&points[j]));
        }
    }
    best
}

/// Regular simplex: `d + 1` unit vectors in `R^d` with pairwise dot `-1/d`.
///
/// The canonical basis of `R^{d+1}` is centered onto `H_{d+1}`, rotated by
/// [`rotation_to_hyperplane`] and normalized.
pub fn simplex_code(d: usize) -> SphericalCode {
    assert!(d >= 2, "simplex code needs d >= 2");
    let n = d + 1;
    let rot = rotation_to_hyperplane(n);
    let points = (0..n)
        .map(|k| {
            let mut x = DVector::from_element(n, -1.0 / n as f64);
            x[k] += 1.0;
            let y = rot.project(&x);
            let norm = y.norm();
            y / norm
        })
        .collect();
    let mut code = SphericalCode::from_unit_points(d, CodeKind::Simplex, points);
    code.cos_theta = -1.0 / d as f64;
    code
}

/// The twelve vertices of the regular icosahedron, `(0, ±1, ±phi)` and
/// cyclic permutations, normalized.
pub fn icosahedron_code() -> SphericalCode {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut points = Vec::with_capacity(12);
    for a in [-1.0, 1.0] {
        for b in [-phi, phi] {
            for v in [[0.0, a, b], [a, b, 0.0], [b, 0.0, a]] {
                let p = DVector::from_row_slice(&v);
                let norm = p.norm();
                points.push(p / norm);
            }
        }
    }
    SphericalCode::from_unit_points(3, CodeKind::Icosahedron, points)
}

/// `arccos` of the largest pairwise inner product, in radians.
pub fn min_angle(code: &SphericalCode) -> f64 {
    assert!(code.len() >= 2, "min_angle needs at least two points");
    max_pairwise_dot(&code.points).clamp(-1.0, 1.0).acos()
}

/// A simplicial facet of the code's polytope: `dim` vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub vertex_indices: Vec<usize>,
    pub centroid: DVector<f64>,
    pub unit_centroid: DVector<f64>,
    /// Leave-one-out normals `p_j`, in vertex order; empty until
    /// [`Facet::with_normals`] is called.
    pub normals: Vec<DVector<f64>>,
}

impl Facet {
    fn new(code: &SphericalCode, vertex_indices: Vec<usize>) -> Self {
        let centroid = facet_centroid(code, &vertex_indices);
        let unit_centroid = &centroid / centroid.norm();
        Facet {
            vertex_indices,
            centroid,
            unit_centroid,
            normals: Vec::new(),
        }
    }

    pub fn with_normals(mut self, code: &SphericalCode, eps: f64) -> Result<Self> {
        self.normals = facet_normals(code, &self, eps)?;
        Ok(self)
    }

    pub fn vertices<'a>(&'a self, code: &'a SphericalCode) -> impl Iterator<Item = &'a DVector<f64>> {
        self.vertex_indices.iter().map(move |&i| &code.points[i])
    }
}

/// Facets of the simplicial polytope spanned by `code`.
///
/// Simplex codes yield the `d + 1` leave-one-out faces (facet `i` omits
/// vertex `i`). The icosahedron's 20 triangles are found by checking which
/// vertex triples span a supporting plane of the point set.
pub fn facets_of_code(code: &SphericalCode) -> Result<Vec<Facet>> {
    match code.kind {
        CodeKind::Simplex => {
            let n = code.len();
            Ok((0..n)
                .map(|omit| Facet::new(code, (0..n).filter(|&v| v != omit).collect()))
                .collect())
        }
        CodeKind::Icosahedron => Ok(hull_triangles(code)
            .into_iter()
            .map(|tri| Facet::new(code, tri))
            .collect()),
        CodeKind::Custom => Err(Error::UnsupportedCode(
            "facets are only enumerated for simplex and icosahedron codes".into(),
        )),
    }
}

fn hull_triangles(code: &SphericalCode) -> Vec<Vec<usize>> {
    let pts = &code.points;
    let n = pts.len();
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                let u = &pts[b] - &pts[a];
                let v = &pts[c] - &pts[a];
                let normal = u.cross(&v);
                if normal.norm() < RANK_TOL {
                    continue;
                }
                let side = |x: &DVector<f64>| normal.dot(&(x - &pts[a]));
                let mut pos = false;
                let mut neg = false;
                for (i, x) in pts.iter().enumerate() {
                    if i == a || i == b || i == c {
                        continue;
                    }
                    let s = side(x);
                    if s > RANK_TOL {
                        pos = true;
                    } else if s < -RANK_TOL {
                        neg = true;
                    }
                }
                if !(pos && neg) {
                    out.push(vec![a, b, c]);
                }
            }
        }
    }
    out
}

/// Arithmetic mean of the listed code points.
pub fn facet_centroid(code: &SphericalCode, vertex_indices: &[usize]) -> DVector<f64> {
    let mut sum = DVector::zeros(code.dim);
    for &i in vertex_indices {
        sum += &code.points[i];
    }
    sum / vertex_indices.len() as f64
}

/// Leave-one-out normals of a facet, each of 2-norm `eps`.
///
/// `p_j` is orthogonal to every facet vertex except `y_j` and points toward
/// the centroid. The orthogonal complement is taken from a modified
/// Gram-Schmidt QR of the remaining vertices.
pub fn facet_normals(code: &SphericalCode, facet: &Facet, eps: f64) -> Result<Vec<DVector<f64>>> {
    let d = code.dim;
    if facet.vertex_indices.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: facet.vertex_indices.len(),
        });
    }
    let verts: Vec<&DVector<f64>> = facet.vertices(code).collect();
    let mut out = Vec::with_capacity(d);
    for j in 0..d {
        let others: Vec<&DVector<f64>> = verts
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != j)
            .map(|(_, v)| *v)
            .collect();
        let basis = orthonormal_basis(&others);
        if basis.len() < d - 1 {
            return Err(Error::DegenerateFacet {
                rank: basis.len(),
                needed: d - 1,
            });
        }
        let mut p = complement_direction(&basis, verts[j], d);
        let along = p.dot(&facet.centroid);
        if along.abs() < RANK_TOL {
            return Err(Error::DegenerateFacet {
                rank: basis.len(),
                needed: d - 1,
            });
        }
        if along < 0.0 {
            p.neg_mut();
        }
        out.push(p * eps);
    }
    Ok(out)
}

/// Modified Gram-Schmidt with one reorthogonalization pass; vectors whose
/// residual falls below `RANK_TOL` are dropped.
fn orthonormal_basis(vectors: &[&DVector<f64>]) -> Vec<DVector<f64>> {
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut r = (*v).clone();
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&r);
                r -= q * c;
            }
        }
        let norm = r.norm();
        if norm > RANK_TOL {
            basis.push(r / norm);
        }
    }
    basis
}

/// Unit vector orthogonal to `basis` (which spans a hyperplane of `R^d`).
fn complement_direction(basis: &[DVector<f64>], seed: &DVector<f64>, d: usize) -> DVector<f64> {
    let residual = |s: &DVector<f64>| {
        let mut r = s.clone();
        for _ in 0..2 {
            for q in basis {
                let c = q.dot(&r);
                r -= q * c;
            }
        }
        r
    };
    let mut r = residual(seed);
    if r.norm() < 1e-6 {
        r = (0..d)
            .map(|i| residual(&DVector::from_fn(d, |k, _| if k == i { 1.0 } else { 0.0 })))
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .expect("d >= 1");
    }
    let norm = r.norm();
    r / norm
}
