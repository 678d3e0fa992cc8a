//! Incremental regular (weighted Delaunay) triangulation in R^d, d <= 4.
//!
//! Points are lifted to `(x, |x|^2 - w)` in R^{d+1}; the triangulation is the
//! lower convex hull of the lifted points. The hull is maintained with a
//! vertical point at infinity: a cell holding `INF` stands for a hull facet
//! seen from outside the convex hull of the sites. Inserting a point removes
//! every cell whose lifted facet it sees from below (the conflict region)
//! and cones the horizon to the new point.
//!
//! Orientation and lifted-orientation tests use floating determinants with
//! a relative tolerance; near-zero results fall to "no conflict", which acts
//! as a fixed symbolic perturbation.

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::linalg;

pub(crate) const INF: usize = usize::MAX;
pub(crate) const MAX_DIM: usize = 4;
const MAXV: usize = MAX_DIM + 1;
const UNSET: usize = usize::MAX;
const PRED_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug)]
pub(crate) struct Cell {
    pub v: [usize; MAXV],
    pub adj: [usize; MAXV],
}

pub(crate) struct Triangulation<'a> {
    dim: usize,
    coords: &'a [f64],
    weights: Option<&'a [f64]>,
    cells: Vec<Cell>,
    alive: Vec<bool>,
    free: Vec<usize>,
    mark: Vec<u64>,
    stamp: u64,
    walk_state: u64,
    inserted: Vec<bool>,
}

impl<'a> Triangulation<'a> {
    /// Builds the triangulation of `coords` (row-major, `dim` per point).
    /// With `weights`, the result is the regular triangulation for power
    /// distance `|x - a|^2 - w(a)` and hidden points are left out.
    pub fn build(coords: &'a [f64], dim: usize, weights: Option<&'a [f64]>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        let n = coords.len() / dim;
        let mut t = Triangulation {
            dim,
            coords,
            weights,
            cells: Vec::new(),
            alive: Vec::new(),
            free: Vec::new(),
            mark: Vec::new(),
            stamp: 0,
            walk_state: 0x2545_F491_4F6C_DD1D,
            inserted: vec![false; n],
        };
        if n < dim + 1 {
            return Err(Error::DegenerateConfiguration { subset: n });
        }
        let simplex = t.initial_simplex()?;
        t.init_cells(&simplex);

        let order = spatial_order(coords, dim);
        let mut hint = 0;
        for &q in &order {
            if t.inserted[q] {
                continue;
            }
            if let Some(c) = t.insert(q, hint) {
                hint = c;
            }
        }
        Ok(t)
    }

    #[inline]
    fn pt(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    fn weight(&self, i: usize) -> f64 {
        self.weights.map_or(0.0, |w| w[i])
    }

    /// Finite cells as vertex index arrays of length `dim + 1`.
    pub fn finite_cells(&self) -> Vec<Vec<usize>> {
        let k = self.dim + 1;
        self.cells
            .iter()
            .zip(&self.alive)
            .filter(|(c, &a)| a && !c.v[..k].contains(&INF))
            .map(|(c, _)| c.v[..k].to_vec())
            .collect()
    }

    /// Points that are vertices of the final triangulation.
    pub fn vertex_flags(&self) -> Vec<bool> {
        let k = self.dim + 1;
        let mut used = vec![false; self.inserted.len()];
        for (c, &a) in self.cells.iter().zip(&self.alive) {
            if a {
                for &v in &c.v[..k] {
                    if v != INF {
                        used[v] = true;
                    }
                }
            }
        }
        used
    }

    fn initial_simplex(&self) -> Result<Vec<usize>> {
        let n = self.inserted.len();
        let d = self.dim;
        let scale = linalg::extent((0..n).map(|i| self.pt(i))).max(f64::MIN_POSITIVE);
        let tol = 1e-9 * scale;
        let mut chosen = vec![0usize];
        // farthest point from the first, then greedily the largest residual
        let mut basis: Vec<Vec<f64>> = Vec::new();
        while chosen.len() < d + 1 {
            let p0 = self.pt(chosen[0]);
            let mut best = None;
            let mut best_norm = tol;
            for i in 0..n {
                let r = linalg::reject(&linalg::sub(self.pt(i), p0), &basis);
                let nr = linalg::norm(&r);
                if nr > best_norm {
                    best_norm = nr;
                    best = Some((i, r));
                }
            }
            let Some((i, r)) = best else {
                return Err(Error::DegenerateConfiguration { subset: n });
            };
            basis.push(r.iter().map(|x| x / best_norm).collect());
            chosen.push(i);
        }
        if self.orient_of(&chosen, None) < 0.0 {
            chosen.swap(0, 1);
        }
        Ok(chosen)
    }

    fn alloc(&mut self, cell: Cell) -> usize {
        if let Some(i) = self.free.pop() {
            self.cells[i] = cell;
            self.alive[i] = true;
            i
        } else {
            self.cells.push(cell);
            self.alive.push(true);
            self.mark.push(0);
            self.cells.len() - 1
        }
    }

    fn init_cells(&mut self, simplex: &[usize]) {
        let k = self.dim + 1;
        let mut v = [UNSET; MAXV];
        v[..k].copy_from_slice(simplex);
        let c0 = self.alloc(Cell { v, adj: [UNSET; MAXV] });
        let mut created = vec![c0];
        for i in 0..k {
            let mut w = v;
            w[i] = INF;
            // odd permutation so that substituting an outside point for INF
            // gives a positively oriented simplex
            let j = (i + 1) % k;
            w.swap(i, j);
            let mut adj = [UNSET; MAXV];
            adj[j] = c0;
            let ci = self.alloc(Cell { v: w, adj });
            self.cells[c0].adj[i] = ci;
            created.push(ci);
        }
        self.link(&created);
        for &s in simplex {
            self.inserted[s] = true;
        }
    }

    /// Connects unset adjacencies among `cells` through shared ridges.
    fn link(&mut self, cells: &[usize]) {
        let k = self.dim + 1;
        let mut open: FxHashMap<[usize; MAXV], (usize, usize)> = FxHashMap::default();
        for &c in cells {
            for j in 0..k {
                if self.cells[c].adj[j] != UNSET {
                    continue;
                }
                let mut key = [UNSET; MAXV];
                let mut m = 0;
                for (s, &x) in self.cells[c].v[..k].iter().enumerate() {
                    if s != j {
                        key[m] = x;
                        m += 1;
                    }
                }
                key[..m].sort_unstable();
                if let Some((o, oj)) = open.remove(&key) {
                    self.cells[c].adj[j] = o;
                    self.cells[o].adj[oj] = c;
                } else {
                    open.insert(key, (c, j));
                }
            }
        }
        debug_assert!(open.is_empty(), "unmatched ridges after linking");
    }

    #[inline]
    fn is_infinite(&self, c: usize) -> bool {
        self.cells[c].v[..self.dim + 1].contains(&INF)
    }

    /// Orientation of `verts` (d+1 indices) with optional substitution of
    /// point `q` at a slot. Returns 0 when within tolerance.
    fn orient_of(&self, verts: &[usize], subst: Option<(usize, usize)>) -> f64 {
        let d = self.dim;
        let get = |s: usize| -> &[f64] {
            match subst {
                Some((slot, q)) if slot == s => self.pt(q),
                _ => self.pt(verts[s]),
            }
        };
        let p0 = get(0);
        let mut m = [0.0f64; MAX_DIM * MAX_DIM];
        let mut bound = 1.0;
        for r in 1..=d {
            let pr = get(r);
            let mut n2 = 0.0;
            for c in 0..d {
                let x = pr[c] - p0[c];
                m[(r - 1) * d + c] = x;
                n2 += x * x;
            }
            bound *= n2.sqrt();
        }
        let det = linalg::det_in_place(&mut m[..d * d], d);
        if det.abs() <= PRED_TOL * bound {
            0.0
        } else {
            det
        }
    }

    /// Positive when `q` lies strictly inside the power sphere of finite
    /// cell `c` (its lifted point is below the cell's lifted hyperplane).
    fn power_test(&self, c: usize, q: usize) -> f64 {
        let d = self.dim;
        let n = d + 1;
        let pq = self.pt(q);
        let wq = self.weight(q);
        let mut m = [0.0f64; MAXV * MAXV];
        let mut bound = 1.0;
        for r in 0..n {
            let v = self.cells[c].v[r];
            let pv = self.pt(v);
            let mut n2 = 0.0;
            let mut lift = 0.0;
            for k in 0..d {
                let x = pv[k] - pq[k];
                m[r * n + k] = x;
                lift += x * x;
            }
            lift += wq - self.weight(v);
            m[r * n + d] = lift;
            for k in 0..n {
                n2 += m[r * n + k] * m[r * n + k];
            }
            bound *= n2.sqrt();
        }
        let det = linalg::det_in_place(&mut m[..n * n], n);
        let signed = if d % 2 == 0 { det } else { -det };
        if signed.abs() <= PRED_TOL * bound {
            0.0
        } else {
            signed
        }
    }

    fn in_conflict(&self, c: usize, q: usize) -> bool {
        let k = self.dim + 1;
        let v = &self.cells[c].v[..k];
        match v.iter().position(|&x| x == INF) {
            Some(slot) => {
                let o = self.orient_of(v, Some((slot, q)));
                // on the hull facet's hyperplane: conflict iff inside the
                // facet's power sphere, which the finite neighbour shares
                o > 0.0 || (o == 0.0 && self.power_test(self.cells[c].adj[slot], q) > 0.0)
            }
            None => self.power_test(c, q) > 0.0,
        }
    }

    fn next_rand(&mut self) -> u64 {
        let mut x = self.walk_state;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.walk_state = x;
        x
    }

    /// Visibility walk from `hint` towards `q`. Returns a finite cell
    /// containing `q` or an infinite cell whose hull facet `q` sees.
    fn locate(&mut self, q: usize, hint: usize) -> Option<usize> {
        let k = self.dim + 1;
        let mut c = if hint < self.cells.len() && self.alive[hint] { hint } else { self.any_alive()? };
        if self.is_infinite(c) {
            let slot = self.cells[c].v[..k].iter().position(|&x| x == INF).unwrap();
            c = self.cells[c].adj[slot];
        }
        let limit = 64 + 8 * self.cells.len();
        let mut prev = UNSET;
        for _ in 0..limit {
            if self.is_infinite(c) {
                return Some(c);
            }
            let start = (self.next_rand() % k as u64) as usize;
            let mut moved = false;
            for t in 0..k {
                let i = (start + t) % k;
                let nb = self.cells[c].adj[i];
                if nb == prev {
                    continue;
                }
                let verts = self.cells[c].v;
                if self.orient_of(&verts[..k], Some((i, q))) < 0.0 {
                    prev = c;
                    c = nb;
                    moved = true;
                    break;
                }
            }
            if !moved {
                return Some(c);
            }
        }
        // fall back to any conflicting cell
        (0..self.cells.len()).find(|&c| self.alive[c] && self.in_conflict(c, q))
    }

    fn any_alive(&self) -> Option<usize> {
        (0..self.cells.len()).find(|&c| self.alive[c] && !self.is_infinite(c))
    }

    /// Inserts point `q`. Returns a new cell incident to `q`, or `None` if
    /// the point is hidden (or duplicates a vertex).
    fn insert(&mut self, q: usize, hint: usize) -> Option<usize> {
        let k = self.dim + 1;
        let start = self.locate(q, hint)?;
        if !self.in_conflict(start, q) {
            return None;
        }
        self.stamp += 1;
        let inside = self.stamp * 2;
        let outside = inside + 1;
        let mut cavity = vec![start];
        self.mark[start] = inside;
        let mut boundary: Vec<(usize, usize)> = Vec::new();
        let mut stack = vec![start];
        while let Some(c) = stack.pop() {
            for i in 0..k {
                let nb = self.cells[c].adj[i];
                if self.mark[nb] == inside {
                    continue;
                }
                if self.mark[nb] == outside {
                    boundary.push((c, i));
                    continue;
                }
                if self.in_conflict(nb, q) {
                    self.mark[nb] = inside;
                    cavity.push(nb);
                    stack.push(nb);
                } else {
                    self.mark[nb] = outside;
                    boundary.push((c, i));
                }
            }
        }
        // back slots are resolved before any cavity cell index is reused
        let pending: Vec<(Cell, usize, usize)> = boundary
            .iter()
            .map(|&(c, i)| {
                let mut cell = self.cells[c];
                let outside_nb = cell.adj[i];
                let back = (0..k).find(|&j| self.cells[outside_nb].adj[j] == c).expect("neighbour back-pointer");
                cell.v[i] = q;
                cell.adj = [UNSET; MAXV];
                cell.adj[i] = outside_nb;
                (cell, outside_nb, back)
            })
            .collect();
        for &c in &cavity {
            self.alive[c] = false;
            self.free.push(c);
        }
        let mut created = Vec::with_capacity(pending.len());
        for (cell, outside_nb, back) in pending {
            let nc = self.alloc(cell);
            self.cells[outside_nb].adj[back] = nc;
            self.mark[nc] = 0;
            created.push(nc);
        }
        self.link(&created);
        self.inserted[q] = true;
        created.iter().copied().find(|&c| !self.is_infinite(c)).or(created.first().copied())
    }
}

/// Insertion order along a Morton curve so that consecutive points are
/// spatially close and walks stay short.
fn spatial_order(coords: &[f64], dim: usize) -> Vec<usize> {
    let n = coords.len() / dim;
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for i in 0..n {
        for k in 0..dim {
            lo[k] = lo[k].min(coords[i * dim + k]);
            hi[k] = hi[k].max(coords[i * dim + k]);
        }
    }
    let bits = (60 / dim).min(20) as u32;
    let cells = (1u64 << bits) as f64;
    let mut keyed: Vec<(u64, usize)> = (0..n)
        .map(|i| {
            let mut key = 0u64;
            let q: Vec<u64> = (0..dim)
                .map(|k| {
                    let span = (hi[k] - lo[k]).max(f64::MIN_POSITIVE);
                    (((coords[i * dim + k] - lo[k]) / span * (cells - 1.0)).max(0.0)) as u64
                })
                .collect();
            for b in (0..bits).rev() {
                for &qk in &q {
                    key = (key << 1) | ((qk >> b) & 1);
                }
            }
            (key, i)
        })
        .collect();
    keyed.sort_unstable();
    keyed.into_iter().map(|(_, i)| i).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(pts: &[f64], dim: usize) -> Vec<Vec<usize>> {
        let t = Triangulation::build(pts, dim, None).unwrap();
        let mut cells: Vec<Vec<usize>> = t
            .finite_cells()
            .into_iter()
            .map(|mut c| {
                c.sort_unstable();
                c
            })
            .collect();
        cells.sort();
        cells
    }

    #[test]
    fn single_triangle() {
        assert_eq!(build(&[0.0, 0.0, 1.0, 0.0, 0.0, 1.0], 2), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn square_with_interior_point() {
        let pts = [0.0, 0.0, 1.0, 0.001, 1.0, 1.0, 0.0, 1.0, 0.5, 0.45];
        let cells = build(&pts, 2);
        assert_eq!(cells.len(), 4);
        assert!(cells.iter().all(|c| c.contains(&4)));
    }

    #[test]
    fn interval_triangulation() {
        let pts = [3.0, 0.0, 1.0, 2.0];
        assert_eq!(build(&pts, 1), vec![vec![0, 3], vec![1, 2], vec![2, 3]]);
    }

    #[test]
    fn collinear_hull_point_leaves_no_flat_cell() {
        let pts = [0.0, 0.0, 2.0, 0.1, 2.1, 2.0, -0.1, 1.9, 1.0, 1.05, 1.0, -1.0, 3.0, 1.0, 1.0, 3.0, -1.0, 1.0];
        let cells = build(&pts, 2);
        assert!(!cells.contains(&vec![3, 7, 8]));
        assert_eq!(cells.len(), 9);
    }

    #[test]
    fn heavy_weight_hides_neighbour() {
        // middle point with very negative weight never owns a power cell
        let pts = [0.0, 1.0, 2.0];
        let w = [0.0, -5.0, 0.0];
        let t = Triangulation::build(&pts, 1, Some(&w)).unwrap();
        let cells = t.finite_cells();
        assert_eq!(cells.len(), 1);
        assert!(!t.vertex_flags()[1]);
    }

    #[test]
    fn collinear_input_is_degenerate() {
        let pts = [0.0, 0.0, 1.0, 1.0, 2.0, 2.0];
        assert!(matches!(
            Triangulation::build(&pts, 2, None),
            Err(Error::DegenerateConfiguration { .. })
        ));
    }

    /// Adjacency, facet sharing and orientation of every live cell.
    fn check(t: &Triangulation) -> std::result::Result<(), String> {
        let k = t.dim + 1;
        for c in 0..t.cells.len() {
            if !t.alive[c] {
                continue;
            }
            let cell = &t.cells[c];
            for i in 0..k {
                let nb = cell.adj[i];
                if nb == UNSET || !t.alive[nb] {
                    return Err(format!("cell {c} slot {i} points to {nb}"));
                }
                if !t.cells[nb].adj[..k].contains(&c) {
                    return Err(format!("no back-pointer {nb} -> {c}"));
                }
                if (0..k).any(|s| s != i && !t.cells[nb].v[..k].contains(&cell.v[s])) {
                    return Err(format!("cell {c} slot {i}: neighbour {nb} does not share the facet"));
                }
            }
            if !t.is_infinite(c) && t.orient_of(&cell.v[..k], None) <= 0.0 {
                return Err(format!("cell {c} not positively oriented"));
            }
        }
        Ok(())
    }

    #[test]
    fn structure_stays_consistent() {
        use rand::{Rng, SeedableRng};
        for seed in 0..120u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let dim = 2 + (seed as usize % 3);
            let n = dim + 2 + (seed as usize % 40);
            let pts: Vec<f64> = (0..dim * n).map(|_| rng.random::<f64>()).collect();
            let w: Vec<f64> = (0..n).map(|_| -0.01 * rng.random::<f64>()).collect();
            let weights = (seed % 2 == 1).then_some(w.as_slice());
            let mut t = Triangulation {
                dim,
                coords: &pts,
                weights,
                cells: vec![],
                alive: vec![],
                free: vec![],
                mark: vec![],
                stamp: 0,
                walk_state: 1,
                inserted: vec![false; n],
            };
            let s = t.initial_simplex().unwrap();
            t.init_cells(&s);
            check(&t).unwrap();
            let mut hint = 0;
            for &q in &spatial_order(&pts, dim) {
                if t.inserted[q] {
                    continue;
                }
                if let Some(c) = t.insert(q, hint) {
                    hint = c;
                }
                if let Err(e) = check(&t) {
                    panic!("seed {seed}, after inserting {q}: {e}");
                }
            }
            if weights.is_none() {
                assert!(t.vertex_flags().iter().all(|&u| u), "seed {seed}: a point was dropped");
            }
        }
    }
}
