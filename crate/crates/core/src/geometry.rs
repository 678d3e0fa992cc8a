//! Points, orthonormal frames, simplices and convex cells, with the handful
//! of volume and circumsphere computations everything else is built on.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, dot, norm, sub};
use crate::polytope;

/// Tolerance on normalized Gram determinants below which a simplex is
/// considered degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Tolerance on pairwise inner products of frame rows.
pub const FRAME_TOL: f64 = 1e-10;

/// A point (or vector) in R^d.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn distance(&self, other: &Point) -> f64 {
        linalg::dist(&self.0, &other.0)
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

impl<const N: usize> From<[f64; N]> for Point {
    fn from(v: [f64; N]) -> Self {
        Point(v.to_vec())
    }
}

/// An orthonormal p-frame in R^d: a point of the Stiefel manifold. The
/// plane it spans is the linear subspace carried along with it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    dim: usize,
    rows: Vec<Vec<f64>>,
}

impl Frame {
    /// Wraps `rows` after checking they are orthonormal within [`FRAME_TOL`].
    pub fn new(rows: Vec<Vec<f64>>, dim: usize) -> Result<Self> {
        if rows.len() > dim {
            return Err(Error::InvalidArgument(format!("{} rows in R^{dim}", rows.len())));
        }
        for (i, r) in rows.iter().enumerate() {
            check_dim(dim, r.len())?;
            for (j, s) in rows.iter().enumerate().take(i + 1) {
                let target = if i == j { 1.0 } else { 0.0 };
                if (dot(r, s) - target).abs() > FRAME_TOL {
                    return Err(Error::InvalidArgument("frame rows are not orthonormal".into()));
                }
            }
        }
        Ok(Frame { dim, rows })
    }

    pub(crate) fn new_unchecked(rows: Vec<Vec<f64>>, dim: usize) -> Self {
        Frame { dim, rows }
    }

    /// The first `p` coordinate axes.
    pub fn coordinate(p: usize, dim: usize) -> Self {
        let rows = (0..p)
            .map(|i| {
                let mut e = vec![0.0; dim];
                e[i] = 1.0;
                e
            })
            .collect();
        Frame { dim, rows }
    }

    pub fn empty(dim: usize) -> Self {
        Frame { dim, rows: Vec::new() }
    }

    /// Number of frame vectors.
    pub fn p(&self) -> usize {
        self.rows.len()
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Coordinates of `v` in the frame: `F v`.
    pub fn coords_of(&self, v: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| dot(r, v)).collect()
    }

    /// Orthogonal projection of `v` onto the spanned plane, in ambient coordinates.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for r in &self.rows {
            linalg::axpy(dot(r, v), r, &mut out);
        }
        out
    }

    /// Applies `F^T t`.
    pub fn embed(&self, t: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (ti, r) in t.iter().zip(&self.rows) {
            linalg::axpy(*ti, r, &mut out);
        }
        out
    }

    /// Largest deviation of `F F^T` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, r) in self.rows.iter().enumerate() {
            for (j, s) in self.rows.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(r, s) - target).abs());
            }
        }
        worst
    }
}

/// A k-simplex given by its k+1 vertices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Simplex {
    vertices: Vec<Point>,
}

impl Simplex {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        let first = vertices
            .first()
            .ok_or_else(|| Error::InvalidArgument("simplex needs at least one vertex".into()))?;
        let d = first.dim();
        for v in &vertices {
            check_dim(d, v.dim())?;
            if !v.is_finite() {
                return Err(Error::InvalidArgument("non-finite coordinate".into()));
            }
        }
        Ok(Simplex { vertices })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Intrinsic dimension k.
    pub fn k(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn ambient_dim(&self) -> usize {
        self.vertices[0].dim()
    }

    fn edges(&self) -> Vec<Vec<f64>> {
        let v0 = &self.vertices[0];
        self.vertices[1..].iter().map(|v| sub(v, v0)).collect()
    }

    /// Gram matrix of edge vectors and its normalized determinant.
    fn gram(&self) -> (Vec<f64>, f64, f64) {
        let e = self.edges();
        let k = e.len();
        let mut g = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                g[i * k + j] = dot(&e[i], &e[j]);
            }
        }
        let det = linalg::det(&g, k);
        let scale: f64 = e.iter().map(|v| dot(v, v)).product();
        let normalized = if scale > 0.0 { det / scale } else { 0.0 };
        (g, det, normalized)
    }

    pub fn is_degenerate(&self) -> bool {
        self.k() > self.ambient_dim() || self.gram().2 <= DEGENERACY_TOL
    }
}

/// Result of [`simplex_volume`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimplexVolume {
    pub volume: f64,
    pub degenerate: bool,
}

/// k-dimensional volume `sqrt(det(G^T G)) / k!` from the edge vectors.
/// Degenerate simplices report zero volume with the flag set.
pub fn simplex_volume(s: &Simplex) -> SimplexVolume {
    let k = s.k();
    if k == 0 {
        return SimplexVolume { volume: 1.0, degenerate: false };
    }
    if k > s.ambient_dim() {
        return SimplexVolume { volume: 0.0, degenerate: true };
    }
    let (_, det, normalized) = s.gram();
    if normalized <= DEGENERACY_TOL {
        return SimplexVolume { volume: 0.0, degenerate: true };
    }
    let fact: f64 = (1..=k).map(|i| i as f64).product();
    SimplexVolume { volume: det.max(0.0).sqrt() / fact, degenerate: false }
}

/// Center (inside the simplex's affine hull) and radius of the smallest
/// sphere through all vertices.
pub fn circumsphere(s: &Simplex) -> Result<(Point, f64)> {
    if s.k() > s.ambient_dim() {
        return Err(Error::DegenerateSimplex);
    }
    if s.gram().2 <= DEGENERACY_TOL {
        return Err(Error::DegenerateSimplex);
    }
    circumsphere_unchecked(s)
}

/// Circumsphere without the degeneracy threshold; fails only when the
/// linear system is numerically singular. Thin but valid mosaic cells near
/// the convex hull need this.
pub(crate) fn circumsphere_unchecked(s: &Simplex) -> Result<(Point, f64)> {
    let k = s.k();
    let v0 = s.vertices[0].coords();
    if k == 0 {
        return Ok((s.vertices[0].clone(), 0.0));
    }
    let (g, _, _) = s.gram();
    // center = v0 + sum_j lambda_j e_j with 2 G lambda = diag(G)
    let mut two_g = g.clone();
    two_g.iter_mut().for_each(|x| *x *= 2.0);
    let rhs: Vec<f64> = (0..k).map(|i| g[i * k + i]).collect();
    let lambda = linalg::solve(&two_g, &rhs, k, 1e-15).ok_or(Error::DegenerateSimplex)?;
    let mut c = v0.to_vec();
    for (l, e) in lambda.iter().zip(s.edges()) {
        linalg::axpy(*l, &e, &mut c);
    }
    let r = linalg::dist(&c, v0);
    Ok((Point(c), r))
}

/// `|det(F G^T)|`: the p-volume of the projection of the unit cube spanned
/// by one frame onto the plane of the other.
pub fn frame_projection_volume(f: &Frame, g: &Frame) -> Result<f64> {
    check_dim(f.dim(), g.dim())?;
    check_dim(f.p(), g.p())?;
    let p = f.p();
    if p == 0 {
        return Ok(1.0);
    }
    let mut m = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..p {
            m[i * p + j] = dot(&f.rows[i], &g.rows[j]);
        }
    }
    Ok(linalg::det_in_place(&mut m, p).abs().min(1.0))
}

/// Gram–Schmidt orthonormalization in input order.
pub fn orthonormalize(vectors: &[Vec<f64>]) -> Result<Frame> {
    let dim = match vectors.first() {
        Some(v) => v.len(),
        None => return Err(Error::InvalidArgument("no vectors; use Frame::empty".into())),
    };
    for v in vectors {
        check_dim(dim, v.len())?;
    }
    if vectors.len() > dim {
        return Err(Error::RankDeficient);
    }
    let rows = linalg::gram_schmidt(vectors, 1e-12).ok_or(Error::RankDeficient)?;
    Ok(Frame { dim, rows })
}

/// A bounded convex cell of intrinsic dimension m, given by vertices and an
/// orthonormal basis of its affine hull. Cells with rays are unbounded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolytopeCell {
    vertices: Vec<Point>,
    origin: Point,
    basis: Frame,
    rays: Vec<Vec<f64>>,
}

impl PolytopeCell {
    /// Cell in the affine hull `vertices[0] + span(basis)`.
    pub fn new(vertices: Vec<Point>, basis: Frame) -> Result<Self> {
        Self::with_rays(vertices, basis, Vec::new())
    }

    pub fn with_rays(vertices: Vec<Point>, basis: Frame, rays: Vec<Vec<f64>>) -> Result<Self> {
        let origin = vertices
            .first()
            .cloned()
            .ok_or_else(|| Error::InvalidArgument("cell needs at least one vertex".into()))?;
        for v in &vertices {
            check_dim(basis.dim(), v.dim())?;
        }
        let cell = PolytopeCell { vertices, origin, basis, rays };
        let scale = linalg::extent(cell.vertices.iter().map(|v| v.coords())).max(1.0);
        let off = cell.max_hull_offset();
        if off > 1e-8 * scale {
            return Err(Error::OffHull { offset: off });
        }
        Ok(cell)
    }

    /// Cell whose affine hull is spanned by its own vertices.
    pub fn from_vertices(vertices: Vec<Point>) -> Result<Self> {
        let origin = vertices
            .first()
            .cloned()
            .ok_or_else(|| Error::InvalidArgument("cell needs at least one vertex".into()))?;
        let d = origin.dim();
        let diffs: Vec<Vec<f64>> = vertices[1..].iter().map(|v| sub(v, &origin)).collect();
        let scale = linalg::extent(vertices.iter().map(|v| v.coords())).max(f64::MIN_POSITIVE);
        let rows = linalg::span_basis(&diffs, 1e-9 * scale);
        Self::new(vertices, Frame::new_unchecked(rows, d))
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn basis(&self) -> &Frame {
        &self.basis
    }

    pub fn rays(&self) -> &[Vec<f64>] {
        &self.rays
    }

    /// Intrinsic dimension m.
    pub fn dim(&self) -> usize {
        self.basis.p()
    }

    pub fn is_bounded(&self) -> bool {
        self.rays.is_empty()
    }

    /// Largest distance of a vertex from the stated affine hull.
    pub fn max_hull_offset(&self) -> f64 {
        self.vertices
            .iter()
            .map(|v| {
                let d = sub(v, &self.origin);
                norm(&linalg::reject(&d, self.basis.rows()))
            })
            .fold(0.0, f64::max)
    }

    pub(crate) fn local_coords(&self) -> Vec<Vec<f64>> {
        self.vertices.iter().map(|v| self.basis.coords_of(&sub(v, &self.origin))).collect()
    }
}

/// m-volume of a bounded cell inside its affine hull, as a cone from the
/// centroid over the facets (recursively).
pub fn polytope_volume(c: &PolytopeCell) -> Result<f64> {
    if !c.is_bounded() {
        return Err(Error::Unbounded);
    }
    let m = c.dim();
    let local = c.local_coords();
    Ok(match m {
        0 => 1.0,
        1 => {
            let (lo, hi) = local
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| (lo.min(t[0]), hi.max(t[0])));
            hi - lo
        }
        _ => polytope::vrep_volume(&local),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simplex(pts: &[&[f64]]) -> Simplex {
        Simplex::new(pts.iter().map(|p| Point::new(p.to_vec())).collect()).unwrap()
    }

    #[test]
    fn simplex_volume_examples() {
        let v = simplex_volume(&simplex(&[&[0.0, 0.0], &[3.0, 0.0]]));
        assert!((v.volume - 3.0).abs() < 1e-15 && !v.degenerate);
        let v = simplex_volume(&simplex(&[&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]));
        assert!((v.volume - 1.0 / 6.0).abs() < 1e-15);
        let v = simplex_volume(&simplex(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]));
        assert!((v.volume - 0.5).abs() < 1e-15);
    }

    #[test]
    fn degenerate_simplex_is_flagged() {
        let s = simplex(&[&[0.0, 0.0], &[1.0, 1.0], &[2.0, 2.0]]);
        let v = simplex_volume(&s);
        assert!(v.degenerate);
        assert_eq!(v.volume, 0.0);
        assert_eq!(circumsphere(&s), Err(Error::DegenerateSimplex));
    }

    #[test]
    fn circumsphere_examples() {
        let (c, r) = circumsphere(&simplex(&[&[0.0, 0.0], &[2.0, 0.0], &[1.0, 2.0]])).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-14 && (c[1] - 0.75).abs() < 1e-14);
        assert!((r - 1.25).abs() < 1e-14);
        let (c, r) = circumsphere(&simplex(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]])).unwrap();
        assert!((c[0] - 0.5).abs() < 1e-14 && (c[1] - 0.5).abs() < 1e-14);
        assert!((r - 0.5f64.sqrt()).abs() < 1e-14);
        let (c, r) = circumsphere(&simplex(&[&[0.0, 0.0], &[2.0, 0.0]])).unwrap();
        assert_eq!(c.coords(), &[1.0, 0.0]);
        assert!((r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn circumcenter_of_lower_dimensional_face_stays_in_hull() {
        // triangle in R^3 tilted out of every coordinate plane
        let s = simplex(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let (c, r) = circumsphere(&s).unwrap();
        for x in c.coords() {
            assert!((x - 1.0 / 3.0).abs() < 1e-14);
        }
        assert!((r - (2.0f64 / 3.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn projection_volume_examples() {
        let e1 = Frame::coordinate(1, 2);
        assert!((frame_projection_volume(&e1, &e1).unwrap() - 1.0).abs() < 1e-15);
        let e2 = Frame::new(vec![vec![0.0, 1.0]], 2).unwrap();
        assert_eq!(frame_projection_volume(&e1, &e2).unwrap(), 0.0);
        for t in [0.1, 0.7, 2.0, 3.0] {
            let f = Frame::new(vec![vec![f64::cos(t), f64::sin(t)]], 2).unwrap();
            let v = frame_projection_volume(&f, &e1).unwrap();
            assert!((v - f64::cos(t).abs()).abs() < 1e-15);
        }
        let g = Frame::coordinate(2, 3);
        assert!(matches!(frame_projection_volume(&e1, &g), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn orthonormalize_examples() {
        let f = orthonormalize(&[vec![2.0, 0.0], vec![0.0, 3.0]]).unwrap();
        assert_eq!(f.rows(), &[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let f = orthonormalize(&[vec![1.0, 1.0, 0.0]]).unwrap();
        let s = 0.5f64.sqrt();
        assert!((f.rows()[0][0] - s).abs() < 1e-15 && (f.rows()[0][1] - s).abs() < 1e-15);
        let f = orthonormalize(&[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert!((f.rows()[1][0]).abs() < 1e-15 && (f.rows()[1][1] - 1.0).abs() < 1e-15);
        assert_eq!(orthonormalize(&[vec![1.0, 2.0], vec![2.0, 4.0]]), Err(Error::RankDeficient));
    }

    #[test]
    fn polytope_volume_examples() {
        let sq = PolytopeCell::from_vertices(vec![
            [0.0, 0.0, 1.0].into(),
            [1.0, 0.0, 1.0].into(),
            [1.0, 1.0, 1.0].into(),
            [0.0, 1.0, 1.0].into(),
        ])
        .unwrap();
        assert_eq!(sq.dim(), 2);
        assert!((polytope_volume(&sq).unwrap() - 1.0).abs() < 1e-12);

        let seg = PolytopeCell::from_vertices(vec![[1.0, 1.0, 1.0, 1.0].into(), [1.0, 4.0, 5.0, 1.0].into()]).unwrap();
        assert!((polytope_volume(&seg).unwrap() - 5.0).abs() < 1e-12);

        let hex: Vec<Point> = (0..6)
            .map(|i| {
                let t = std::f64::consts::PI / 3.0 * i as f64;
                Point::new(vec![t.cos(), t.sin()])
            })
            .collect();
        let hex = PolytopeCell::from_vertices(hex).unwrap();
        assert!((polytope_volume(&hex).unwrap() - 3.0 * 3f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_and_off_hull_cells() {
        let c = PolytopeCell::with_rays(vec![[0.0, 0.0].into()], Frame::coordinate(1, 2), vec![vec![1.0, 0.0]]).unwrap();
        assert_eq!(polytope_volume(&c), Err(Error::Unbounded));
        let bad = PolytopeCell::new(vec![[0.0, 0.0].into(), [1.0, 0.5].into()], Frame::coordinate(1, 2));
        assert!(matches!(bad, Err(Error::OffHull { .. })));
    }
}
