//! Delaunay mosaics with their full face lattice and the dual Voronoi cells.
//!
//! A mosaic is built from the lower convex hull of the sites lifted to the
//! paraboloid `x_{d+1} = |x|^2` (see [`crate::triangulation`]). All faces of
//! all dimensions are enumerated from the top cells and stored in
//! lexicographic order of their sorted vertex indices, so face indices are
//! stable and faces can be looked up by binary search.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{check_dim, Error, Result};
use crate::geometry::{circumsphere, circumsphere_unchecked, simplex_volume, Frame, Point, PolytopeCell, Simplex};
use crate::linalg::{self, dot, sub};
use crate::polytope;
use crate::triangulation::{Triangulation, MAX_DIM};

const KEY_LEN: usize = MAX_DIM + 1;
const PAD: u32 = u32::MAX;
type Key = [u32; KEY_LEN];

/// Reference to a k-cell of a mosaic: `dim` is k, `index` its position in
/// the sorted list of k-cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FaceRef {
    pub dim: usize,
    pub index: usize,
}

#[derive(Clone, Debug, Default)]
struct FaceTable {
    keys: Vec<Key>,
    star: Vec<Vec<u32>>,
    cofaces: Vec<Vec<u32>>,
    on_hull: Vec<bool>,
}

#[derive(Clone, Debug)]
pub struct Mosaic {
    dim: usize,
    sites: Vec<Point>,
    faces: Vec<FaceTable>,
    circumcenters: Vec<Point>,
    circumradii: Vec<f64>,
    neighbors: Vec<Vec<usize>>,
    /// outward unit normal per (d-1)-face on the convex hull
    hull_normals: Vec<Option<Vec<f64>>>,
}

fn make_key(sorted: &[usize]) -> Key {
    let mut k = [PAD; KEY_LEN];
    for (slot, &v) in k.iter_mut().zip(sorted) {
        *slot = v as u32;
    }
    k
}

fn key_len(key: &Key) -> usize {
    key.iter().position(|&x| x == PAD).unwrap_or(KEY_LEN)
}

/// All sub-keys of `key` with `size` entries, in lexicographic order of masks.
fn subsets(key: &[u32], size: usize, mut f: impl FnMut(Key)) {
    let n = key.len();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != size {
            continue;
        }
        let mut k = [PAD; KEY_LEN];
        let mut m = 0;
        for (i, &v) in key.iter().enumerate() {
            if mask & (1 << i) != 0 {
                k[m] = v;
                m += 1;
            }
        }
        f(k);
    }
}

/// Orthonormal basis of the span of a simplex's edge vectors.
fn edge_basis(edges: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let scale = edges.iter().map(|e| linalg::norm(e)).fold(0.0, f64::max);
    let mut basis = linalg::span_basis(edges, 1e-9 * scale);
    basis.truncate(edges.len());
    basis
}

impl Mosaic {
    /// Mosaic from explicitly given top cells, without any Delaunay check.
    /// Used for hand-built complexes and tests of the validators.
    pub fn from_cells(sites: Vec<Point>, dim: usize, top_cells: Vec<Vec<usize>>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        for s in &sites {
            check_dim(dim, s.dim())?;
        }
        let mut tops: Vec<Key> = Vec::with_capacity(top_cells.len());
        for mut c in top_cells {
            if c.len() != dim + 1 || c.iter().any(|&v| v >= sites.len()) {
                return Err(Error::InvalidArgument(format!("bad top cell {c:?}")));
            }
            c.sort_unstable();
            tops.push(make_key(&c));
        }
        tops.sort_unstable();
        tops.dedup();

        let mut faces = vec![FaceTable::default(); dim + 1];
        faces[dim].keys = tops.clone();
        faces[dim].star = (0..tops.len() as u32).map(|t| vec![t]).collect();
        for k in 0..dim {
            let mut pairs: Vec<(Key, u32)> = Vec::new();
            for (t, key) in tops.iter().enumerate() {
                subsets(&key[..dim + 1], k + 1, |s| pairs.push((s, t as u32)));
            }
            pairs.sort_unstable();
            let table = &mut faces[k];
            for (key, t) in pairs {
                if table.keys.last() != Some(&key) {
                    table.keys.push(key);
                    table.star.push(Vec::new());
                }
                table.star.last_mut().unwrap().push(t);
            }
        }
        for k in 0..=dim {
            let n = faces[k].keys.len();
            faces[k].cofaces = vec![Vec::new(); n];
            faces[k].on_hull = vec![false; n];
        }
        for k in 0..dim {
            let (lower, upper) = faces.split_at_mut(k + 1);
            let lower = &mut lower[k];
            for (j, key) in upper[0].keys.iter().enumerate() {
                subsets(&key[..k + 2], k + 1, |s| {
                    let i = lower.keys.binary_search(&s).expect("subface present");
                    lower.cofaces[i].push(j as u32);
                });
            }
        }

        let mut circumcenters = Vec::with_capacity(tops.len());
        let mut circumradii = Vec::with_capacity(tops.len());
        for key in &tops {
            let s = Simplex::new(key[..dim + 1].iter().map(|&v| sites[v as usize].clone()).collect())?;
            let (c, r) = circumsphere_unchecked(&s).map_err(|_| Error::DegenerateConfiguration { subset: dim + 1 })?;
            circumcenters.push(c);
            circumradii.push(r);
        }

        let mut neighbors = vec![Vec::new(); sites.len()];
        if dim >= 1 {
            for key in &faces[1].keys {
                let (a, b) = (key[0] as usize, key[1] as usize);
                neighbors[a].push(b);
                neighbors[b].push(a);
            }
        }

        let facets = dim - 1;
        let mut hull_normals = vec![None; faces[facets].keys.len()];
        for i in 0..faces[facets].keys.len() {
            if faces[facets].star[i].len() != 1 {
                continue;
            }
            faces[facets].on_hull[i] = true;
            let key = faces[facets].keys[i];
            for k in 0..facets {
                subsets(&key[..dim], k + 1, |s| {
                    let j = faces[k].keys.binary_search(&s).unwrap();
                    faces[k].on_hull[j] = true;
                });
            }
            let top = tops[faces[facets].star[i][0] as usize];
            let opposite = top[..dim + 1].iter().find(|v| !key[..dim].contains(v)).copied().unwrap() as usize;
            let base = &sites[key[0] as usize];
            let edges: Vec<Vec<f64>> = key[1..dim].iter().map(|&v| sub(&sites[v as usize], base)).collect();
            let basis = edge_basis(&edges);
            let mut n = linalg::complement_basis(&basis, dim).swap_remove(0);
            if dot(&n, &sub(&sites[opposite], base)) > 0.0 {
                n.iter_mut().for_each(|x| *x = -*x);
            }
            hull_normals[i] = Some(n);
        }

        Ok(Mosaic { dim, sites, faces, circumcenters, circumradii, neighbors, hull_normals })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sites(&self) -> &[Point] {
        &self.sites
    }

    pub fn site(&self, i: usize) -> &Point {
        &self.sites[i]
    }

    /// Number of k-cells.
    pub fn n_faces(&self, k: usize) -> usize {
        self.faces.get(k).map_or(0, |t| t.keys.len())
    }

    pub fn n_top_cells(&self) -> usize {
        self.n_faces(self.dim)
    }

    pub fn faces(&self, k: usize) -> impl Iterator<Item = FaceRef> + '_ {
        (0..self.n_faces(k)).map(move |index| FaceRef { dim: k, index })
    }

    fn key(&self, f: FaceRef) -> &[u32] {
        let key = &self.faces[f.dim].keys[f.index];
        &key[..key_len(key)]
    }

    /// Sorted site indices of a cell.
    pub fn face_vertices(&self, f: FaceRef) -> Vec<usize> {
        self.key(f).iter().map(|&v| v as usize).collect()
    }

    /// Looks up the cell spanned by the given sites (any order).
    pub fn find_face(&self, sites: &[usize]) -> Option<FaceRef> {
        if sites.is_empty() || sites.len() > self.dim + 1 {
            return None;
        }
        let mut s = sites.to_vec();
        s.sort_unstable();
        let k = s.len() - 1;
        let key = make_key(&s);
        self.faces[k].keys.binary_search(&key).ok().map(|index| FaceRef { dim: k, index })
    }

    /// Top cells containing `f`.
    pub fn star(&self, f: FaceRef) -> impl Iterator<Item = usize> + '_ {
        self.faces[f.dim].star[f.index].iter().map(|&t| t as usize)
    }

    /// (k+1)-cells having `f` as a facet.
    pub fn cofaces(&self, f: FaceRef) -> impl Iterator<Item = FaceRef> + '_ {
        let dim = f.dim + 1;
        self.faces[f.dim].cofaces[f.index].iter().map(move |&index| FaceRef { dim, index: index as usize })
    }

    /// (k-1)-cells of `f`.
    pub fn facets_of(&self, f: FaceRef) -> Vec<FaceRef> {
        if f.dim == 0 {
            return Vec::new();
        }
        let mut out = Vec::new();
        subsets(self.key(f), f.dim, |s| {
            let index = self.faces[f.dim - 1].keys.binary_search(&s).expect("facet present");
            out.push(FaceRef { dim: f.dim - 1, index });
        });
        out
    }

    /// True when the cell lies on the boundary of the convex hull of the
    /// sites, i.e. its Voronoi dual is unbounded.
    pub fn on_hull(&self, f: FaceRef) -> bool {
        self.faces[f.dim].on_hull[f.index]
    }

    pub fn top_circumcenter(&self, t: usize) -> &Point {
        &self.circumcenters[t]
    }

    pub fn top_circumradius(&self, t: usize) -> f64 {
        self.circumradii[t]
    }

    pub fn top_circumcenters(&self) -> &[Point] {
        &self.circumcenters
    }

    pub fn top_circumradii(&self) -> &[f64] {
        &self.circumradii
    }

    /// Delaunay neighbours of a site.
    pub fn neighbors(&self, site: usize) -> &[usize] {
        &self.neighbors[site]
    }

    pub fn simplex(&self, f: FaceRef) -> Simplex {
        Simplex::new(self.key(f).iter().map(|&v| self.sites[v as usize].clone()).collect()).expect("valid face")
    }

    /// Vol_k of a k-cell.
    pub fn face_volume(&self, f: FaceRef) -> f64 {
        simplex_volume(&self.simplex(f)).volume
    }

    /// Circumcenter of a cell inside its own affine hull.
    pub fn face_circumcenter(&self, f: FaceRef) -> Point {
        if f.dim == self.dim {
            return self.circumcenters[f.index].clone();
        }
        circumsphere(&self.simplex(f)).map(|(c, _)| c).unwrap_or_else(|_| self.sites[self.key(f)[0] as usize].clone())
    }

    /// Orthonormal basis of the direction space of a cell.
    pub fn face_basis(&self, f: FaceRef) -> Frame {
        let key = self.key(f);
        let base = &self.sites[key[0] as usize];
        let edges: Vec<Vec<f64>> = key[1..].iter().map(|&v| sub(&self.sites[v as usize], base)).collect();
        Frame::new_unchecked(edge_basis(&edges), self.dim)
    }

    /// Outward unit normal of a (d-1)-cell on the convex hull.
    pub fn hull_normal(&self, facet: FaceRef) -> Option<&[f64]> {
        if facet.dim + 1 != self.dim {
            return None;
        }
        self.hull_normals[facet.index].as_deref()
    }

    pub fn hull_facets(&self) -> impl Iterator<Item = FaceRef> + '_ {
        let dim = self.dim - 1;
        (0..self.hull_normals.len())
            .filter(|&i| self.hull_normals[i].is_some())
            .map(move |index| FaceRef { dim, index })
    }

    /// Whether `x` lies in the convex hull of the sites (within a relative
    /// tolerance of the site spread).
    pub fn covers(&self, x: &[f64]) -> bool {
        let scale = linalg::extent(self.sites.iter().map(|p| p.coords())).max(f64::MIN_POSITIVE);
        self.hull_facets().all(|f| {
            let base = &self.sites[self.key(f)[0] as usize];
            dot(&sub(x, base), self.hull_normal(f).unwrap()) <= 1e-12 * scale
        })
    }

    /// JSON export: sites, cells grouped by dimension as sorted vertex-index
    /// arrays (lexicographic order), and top-cell circumcenters.
    pub fn to_json(&self) -> serde_json::Value {
        let cells: Vec<Vec<Vec<usize>>> =
            (0..=self.dim).map(|k| self.faces(k).map(|f| self.face_vertices(f)).collect()).collect();
        json!({
            "d": self.dim,
            "sites": self.sites,
            "cells": cells,
            "circumcenters": self.circumcenters,
        })
    }
}

/// Delaunay mosaic of a finite site set in R^d (1 <= d <= 4).
pub fn build_mosaic(points: &[Point], d: usize) -> Result<Mosaic> {
    if d == 0 || d > MAX_DIM {
        return Err(Error::UnsupportedDimension(d));
    }
    let mut coords = Vec::with_capacity(points.len() * d);
    for p in points {
        check_dim(d, p.dim())?;
        if !p.is_finite() {
            return Err(Error::InvalidArgument("non-finite site coordinate".into()));
        }
        coords.extend_from_slice(p);
    }
    let tri = Triangulation::build(&coords, d, None)?;
    let used = tri.vertex_flags();
    let missing = used.iter().filter(|&&u| !u).count();
    if missing > 0 {
        // duplicates or points the predicates could not place
        return Err(Error::DegenerateConfiguration { subset: missing + 1 });
    }
    let mosaic = Mosaic::from_cells(points.to_vec(), d, tri.finite_cells())?;
    if points.len() > d + 1 {
        let c = &mosaic.circumcenters[0];
        let r = mosaic.circumradii[0];
        if points.iter().all(|p| (p.distance(c) - r).abs() <= 1e-9 * r) {
            return Err(Error::DegenerateConfiguration { subset: points.len() });
        }
    }
    Ok(mosaic)
}

/// The Voronoi cell dual to a Delaunay cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualCell {
    pub owner: FaceRef,
    /// Intrinsic dimension d - k.
    pub dim: usize,
    /// Circumcenters of the top cells incident to the owner.
    pub vertices: Vec<Point>,
    pub top_cells: Vec<usize>,
    pub bounded: bool,
    /// Outward directions of the unbounded edges, empty when bounded.
    pub rays: Vec<Vec<f64>>,
    /// Intersection of the affine hulls of the owner and the dual.
    pub pivot: Point,
    /// Orthonormal basis of the dual's direction space.
    pub basis: Frame,
}

impl DualCell {
    pub fn to_polytope(&self) -> Result<PolytopeCell> {
        PolytopeCell::with_rays(self.vertices.clone(), self.basis.clone(), self.rays.clone())
    }
}

pub fn voronoi_dual(m: &Mosaic, cell: FaceRef) -> DualCell {
    let d = m.dim;
    let top_cells: Vec<usize> = m.star(cell).collect();
    let vertices = top_cells.iter().map(|&t| m.circumcenters[t].clone()).collect();
    let bounded = !m.on_hull(cell);
    let mut rays: Vec<Vec<f64>> = Vec::new();
    if !bounded {
        let key = m.key(cell).to_vec();
        for &t in &top_cells {
            let top = FaceRef { dim: d, index: t };
            for facet in m.facets_of(top) {
                if !key.iter().all(|v| m.key(facet).contains(v)) {
                    continue;
                }
                if let Some(n) = m.hull_normal(facet) {
                    if !rays.iter().any(|r| r.as_slice() == n) {
                        rays.push(n.to_vec());
                    }
                }
            }
        }
    }
    let own = m.face_basis(cell);
    let basis = Frame::new_unchecked(linalg::complement_basis(own.rows(), d), d);
    DualCell {
        owner: cell,
        dim: d - cell.dim,
        vertices,
        top_cells,
        bounded,
        rays,
        pivot: m.face_circumcenter(cell),
        basis,
    }
}

/// Vol_{d-k} of a bounded dual cell. Each dual vertex (a top cell σ) is
/// labelled with the sites of σ outside the owner γ; the facet of γ* for
/// label j is the dual of the coface γ ∪ {j}.
pub fn dual_volume(m: &Mosaic, dual: &DualCell) -> Result<f64> {
    if !dual.bounded {
        return Err(Error::Unbounded);
    }
    if dual.dim == 0 {
        return Ok(1.0);
    }
    let owner = m.key(dual.owner);
    let points: Vec<Vec<f64>> = dual.vertices.iter().map(|p| p.coords().to_vec()).collect();
    let labels: Vec<Vec<u32>> = dual
        .top_cells
        .iter()
        .map(|&t| m.key(FaceRef { dim: m.dim, index: t }).iter().copied().filter(|v| !owner.contains(v)).collect())
        .collect();
    Ok(polytope::labeled_volume(&points, &labels))
}

/// Vol_{d-k} of a dual cell clipped to the box `[lo, hi]`, bounded or not.
///
/// Inside aff(γ*), γ* is the part of the Voronoi cell of any vertex `v` of
/// γ, so the bisectors of `v` with its Delaunay neighbours outside γ and the
/// box faces give an H-representation in the dual's local coordinates.
pub fn clipped_dual_volume(m: &Mosaic, dual: &DualCell, lo: &[f64], hi: &[f64]) -> f64 {
    let owner = m.key(dual.owner);
    let v0 = m.site(owner[0] as usize);
    let z = dual.pivot.coords();
    let basis = dual.basis.rows();
    let mut a: Vec<Vec<f64>> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    // c . x <= e  becomes  (B c) . t <= e - c . z
    let mut push = |c: &[f64], e: f64| {
        a.push(basis.iter().map(|r| dot(r, c)).collect());
        b.push(e - dot(c, z));
    };
    for &s in m.neighbors(owner[0] as usize) {
        if owner.contains(&(s as u32)) {
            continue;
        }
        let sv = m.site(s);
        let c = sub(sv, v0);
        let mid: Vec<f64> = sv.iter().zip(v0.iter()).map(|(x, y)| 0.5 * (x + y)).collect();
        push(&c, dot(&c, &mid));
    }
    let mut e = vec![0.0; m.dim];
    for i in 0..m.dim {
        e[i] = 1.0;
        push(&e, hi[i]);
        e[i] = -1.0;
        push(&e, -lo[i]);
        e[i] = 0.0;
    }
    polytope::hrep_volume(&a, &b, dual.dim)
}

/// Index of the nearest site; ties go to the lowest index.
pub fn nearest_site(m: &Mosaic, x: &[f64]) -> usize {
    nearest_in(&m.sites, x)
}

pub(crate) fn nearest_in(sites: &[Point], x: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, s) in sites.iter().enumerate() {
        let d = linalg::dist2(s, x);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Brute-force check that no site lies strictly inside any top cell's
/// circumsphere (relative tolerance 1e-9).
pub fn validate_empty_sphere(m: &Mosaic) -> bool {
    (0..m.n_top_cells()).all(|t| {
        let c = &m.circumcenters[t];
        let r = m.circumradii[t];
        let own = m.key(FaceRef { dim: m.dim, index: t });
        m.sites
            .iter()
            .enumerate()
            .all(|(i, s)| own.contains(&(i as u32)) || s.distance(c) >= r * (1.0 - 1e-9))
    })
}

/// `(max, mean)` circumradius over top cells.
pub fn circumradius_stats(m: &Mosaic) -> (f64, f64) {
    let n = m.circumradii.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let max = m.circumradii.iter().copied().fold(0.0, f64::max);
    (max, m.circumradii.iter().sum::<f64>() / n as f64)
}
