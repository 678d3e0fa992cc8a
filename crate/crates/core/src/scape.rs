//! Voronoi paths of polylines and Voronoi scapes of flat patches.
//!
//! A path is found by walking the segment through the Voronoi tessellation
//! from cell to neighbouring cell. A flat patch is handled by restricting
//! the tessellation to the flat: it becomes the power diagram of the sites
//! projected to the flat, weighted by minus their squared offsets, and each
//! power-diagram vertex inside the patch is a crossing with a Voronoi
//! (d-p)-cell whose dual Delaunay p-cell is read off the weighted cell.

use serde::{Deserialize, Serialize};

use crate::delaunay::{nearest_in, FaceRef, Mosaic};
use crate::error::{check_dim, Error, Result};
use crate::geometry::{Frame, Point};
use crate::linalg::{self, dot, sub};
use crate::pointproc::{trial_seed, unit_ball_volume};
use crate::triangulation::Triangulation;

/// Tolerance on the crossing parameter along a segment.
pub const CROSSING_TOL: f64 = 1e-10;
/// Relative size of the deterministic nudge applied to degenerate probes.
pub const PERTURBATION: f64 = 1e-9;
const MAX_REWALKS: u64 = 8;

/// Affine p-flat `base + span(frame)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Flat {
    pub base: Point,
    pub frame: Frame,
}

impl Flat {
    pub fn new(base: Point, frame: Frame) -> Result<Self> {
        check_dim(frame.dim(), base.dim())?;
        Ok(Flat { base, frame })
    }

    pub fn p(&self) -> usize {
        self.frame.p()
    }

    pub fn dim(&self) -> usize {
        self.frame.dim()
    }

    /// Ambient point with flat coordinates `t`.
    pub fn point_at(&self, t: &[f64]) -> Vec<f64> {
        let mut x = self.frame.embed(t);
        x.iter_mut().zip(self.base.iter()).for_each(|(a, b)| *a += b);
        x
    }

    /// Flat coordinates of the orthogonal projection of `x`.
    pub fn coords_of(&self, x: &[f64]) -> Vec<f64> {
        self.frame.coords_of(&sub(x, &self.base))
    }
}

/// Bounded convex region in flat coordinates, centred at the flat's base.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    Box { half_extents: Vec<f64> },
    Ball { radius: f64 },
}

impl Region {
    pub fn square(p: usize, side: f64) -> Self {
        Region::Box { half_extents: vec![0.5 * side; p] }
    }

    pub fn contains(&self, t: &[f64]) -> bool {
        match self {
            Region::Box { half_extents } => t.iter().zip(half_extents).all(|(x, h)| x.abs() <= *h),
            Region::Ball { radius } => linalg::norm(t) <= *radius,
        }
    }

    pub fn volume(&self, p: usize) -> f64 {
        match self {
            Region::Box { half_extents } => half_extents.iter().map(|h| 2.0 * h).product(),
            Region::Ball { radius } => unit_ball_volume(p) * radius.powi(p as i32),
        }
    }

    /// Largest distance from the centre to a point of the region.
    pub fn circumradius(&self) -> f64 {
        match self {
            Region::Box { half_extents } => linalg::norm(half_extents),
            Region::Ball { radius } => *radius,
        }
    }

    /// Corners of the bounding box, in flat coordinates.
    fn corners(&self, p: usize) -> Vec<Vec<f64>> {
        let h: Vec<f64> = match self {
            Region::Box { half_extents } => half_extents.clone(),
            Region::Ball { radius } => vec![*radius; p],
        };
        (0..1usize << p)
            .map(|mask| (0..p).map(|i| if mask >> i & 1 == 1 { h[i] } else { -h[i] }).collect())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Probe {
    Polyline { points: Vec<Point> },
    FlatPatch { flat: Flat, region: Region },
}

impl Probe {
    pub fn segment(a: Point, b: Point) -> Self {
        Probe::Polyline { points: vec![a, b] }
    }

    /// Intrinsic dimension p.
    pub fn p(&self) -> usize {
        match self {
            Probe::Polyline { .. } => 1,
            Probe::FlatPatch { flat, .. } => flat.p(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Probe::Polyline { points } => points.first().map_or(0, |p| p.dim()),
            Probe::FlatPatch { flat, .. } => flat.dim(),
        }
    }

    /// Vol_p of the probe.
    pub fn volume(&self) -> f64 {
        match self {
            Probe::Polyline { points } => points.windows(2).map(|w| w[0].distance(&w[1])).sum(),
            Probe::FlatPatch { flat, region } => region.volume(flat.p()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Probe::Polyline { points } => {
                if points.len() < 2 {
                    return Err(Error::InvalidArgument("polyline needs at least two points".into()));
                }
                let d = points[0].dim();
                for w in points.windows(2) {
                    check_dim(d, w[1].dim())?;
                    if !(w[0].distance(&w[1]) > 0.0) {
                        return Err(Error::InvalidArgument("polyline segment of zero length".into()));
                    }
                }
                Ok(())
            }
            Probe::FlatPatch { flat, region } => {
                let p = flat.p();
                let ok = match region {
                    Region::Box { half_extents } => half_extents.len() == p && half_extents.iter().all(|&h| h > 0.0),
                    Region::Ball { radius } => *radius > 0.0,
                };
                if ok {
                    Ok(())
                } else {
                    Err(Error::InvalidArgument("patch region must have positive volume".into()))
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScapeEntry {
    pub cell: FaceRef,
    pub sites: Vec<usize>,
    pub multiplicity: u32,
    /// Vol_p of the cell.
    pub volume: f64,
}

/// Multiset of Delaunay p-cells, sorted by cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scape {
    p: usize,
    entries: Vec<ScapeEntry>,
    total_volume: f64,
}

impl Scape {
    /// Merges duplicate cells, sorts, and sums the volumes in cell order.
    pub fn from_entries(p: usize, mut entries: Vec<ScapeEntry>) -> Result<Self> {
        if let Some(e) = entries.iter().find(|e| e.cell.dim != p || e.multiplicity == 0) {
            return Err(Error::InvalidArgument(format!("bad scape entry {:?}", e.cell)));
        }
        entries.sort_by_key(|e| e.cell);
        entries.dedup_by(|b, a| {
            if a.cell == b.cell {
                a.multiplicity += b.multiplicity;
                true
            } else {
                false
            }
        });
        let total_volume = entries.iter().map(|e| e.multiplicity as f64 * e.volume).sum();
        Ok(Scape { p, entries, total_volume })
    }

    fn from_cells(m: &Mosaic, p: usize, cells: impl IntoIterator<Item = FaceRef>) -> Self {
        let entries = cells
            .into_iter()
            .map(|cell| ScapeEntry { cell, sites: m.face_vertices(cell), multiplicity: 1, volume: m.face_volume(cell) })
            .collect();
        Scape::from_entries(p, entries).expect("cells of dimension p")
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn entries(&self) -> &[ScapeEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_volume(&self) -> f64 {
        self.total_volume
    }

    /// Total multiplicity.
    pub fn count(&self) -> u64 {
        self.entries.iter().map(|e| e.multiplicity as u64).sum()
    }

    /// CSV with columns `sites` (semicolon-joined), `multiplicity`, `volume`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sites,multiplicity,volume\n");
        for e in &self.entries {
            let sites: Vec<String> = e.sites.iter().map(|s| s.to_string()).collect();
            out.push_str(&format!("{},{},{:.15e}\n", sites.join(";"), e.multiplicity, e.volume));
        }
        out
    }
}

/// Projection of a site onto a flat, with power weight `-|a - a'|^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedSite {
    pub point: Vec<f64>,
    pub weight: f64,
}

impl WeightedSite {
    /// Power distance from a flat point `t`.
    pub fn power(&self, t: &[f64]) -> f64 {
        linalg::dist2(t, &self.point) - self.weight
    }
}

pub fn project_weights(m: &Mosaic, flat: &Flat) -> Result<Vec<WeightedSite>> {
    check_dim(m.dim(), flat.dim())?;
    Ok(m.sites().iter().map(|a| weighted_site(flat, a)).collect())
}

fn weighted_site(flat: &Flat, a: &[f64]) -> WeightedSite {
    let point = flat.coords_of(a);
    let foot = flat.point_at(&point);
    WeightedSite { weight: -linalg::dist2(a, &foot), point }
}

/// Deterministic pseudo-random unit vector for rewalk number `attempt`.
fn nudge(dim: usize, attempt: u64) -> Vec<f64> {
    let v: Vec<f64> = (0..dim as u64).map(|i| (trial_seed(attempt, i) >> 11) as f64 / (1u64 << 53) as f64 - 0.5).collect();
    let n = linalg::norm(&v);
    v.into_iter().map(|x| x / n).collect()
}

enum Walk {
    Done(Vec<usize>),
    Degenerate,
}

/// Sites whose Voronoi cells a polyline visits, in order.
pub fn voronoi_walk(m: &Mosaic, polyline: &Probe) -> Result<Vec<usize>> {
    let Probe::Polyline { points } = polyline else {
        return Err(Error::InvalidArgument("path needs a polyline probe".into()));
    };
    polyline.validate()?;
    check_dim(m.dim(), polyline.dim())?;
    for x in points {
        if !m.covers(x) {
            return Err(Error::ProbeOutsideCoverage);
        }
    }
    let scale = polyline.volume();
    let mut pts: Vec<Vec<f64>> = points.iter().map(|p| p.coords().to_vec()).collect();
    for attempt in 0..=MAX_REWALKS {
        if attempt > 0 {
            let shift = nudge(m.dim(), attempt);
            pts = points
                .iter()
                .map(|p| p.iter().zip(&shift).map(|(x, s)| x + PERTURBATION * scale * attempt as f64 * s).collect())
                .collect();
        }
        if let Walk::Done(cells) = walk(m, &pts) {
            return Ok(cells);
        }
    }
    Err(Error::Inconsistent("path walk stayed degenerate after perturbation".into()))
}

fn walk(m: &Mosaic, pts: &[Vec<f64>]) -> Walk {
    let sites = m.sites();
    let start = nearest_in(sites, &pts[0]);
    // the start must not lie on a Voronoi facet
    let d0 = linalg::dist(&pts[0], &sites[start]);
    if m
        .neighbors(start)
        .iter()
        .any(|&j| linalg::dist(&pts[0], &sites[j]) - d0 <= CROSSING_TOL * (1.0 + d0))
    {
        return Walk::Degenerate;
    }
    let mut cell = start;
    let mut visited = vec![start];
    let max_steps = 20 * sites.len() + 100;
    for seg in pts.windows(2) {
        let (a, b) = (&seg[0], &seg[1]);
        let dir = sub(b, a);
        let mut lambda = 0.0;
        loop {
            if visited.len() > max_steps {
                return Walk::Degenerate;
            }
            let ai = &sites[cell];
            let mut best = f64::INFINITY;
            let mut second = f64::INFINITY;
            let mut next = usize::MAX;
            for &j in m.neighbors(cell) {
                let aj = &sites[j];
                let normal = sub(aj, ai);
                let slope = dot(&dir, &normal);
                if slope <= 0.0 {
                    continue;
                }
                // (a + t dir - mid) . normal = 0
                let mid: Vec<f64> = ai.iter().zip(aj.iter()).map(|(x, y)| 0.5 * (x + y)).collect();
                let t = dot(&sub(&mid, a), &normal) / slope;
                if t < lambda - CROSSING_TOL {
                    return Walk::Degenerate;
                }
                if t < best {
                    second = best;
                    best = t;
                    next = j;
                } else if t < second {
                    second = t;
                }
            }
            if (best - 1.0).abs() <= CROSSING_TOL {
                return Walk::Degenerate;
            }
            if best > 1.0 {
                break;
            }
            if second - best <= CROSSING_TOL {
                return Walk::Degenerate;
            }
            cell = next;
            lambda = best;
            visited.push(cell);
        }
    }
    Walk::Done(visited)
}

/// Voronoi path of a polyline: the Delaunay edges dual to the Voronoi
/// facets it crosses, counted once per crossing.
pub fn voronoi_path(m: &Mosaic, polyline: &Probe) -> Result<Scape> {
    let visited = voronoi_walk(m, polyline)?;
    let mut cells = Vec::with_capacity(visited.len());
    for w in visited.windows(2) {
        let e = m
            .find_face(&[w[0], w[1]])
            .ok_or_else(|| Error::Inconsistent(format!("walk crossed non-edge {}-{}", w[0], w[1])))?;
        cells.push(e);
    }
    Ok(Scape::from_cells(m, 1, cells))
}

/// Voronoi scape of a bounded patch of a p-flat, 1 <= p <= d - 1.
pub fn voronoi_scape_flat(m: &Mosaic, patch: &Probe) -> Result<Scape> {
    let Probe::FlatPatch { flat, region } = patch else {
        return Err(Error::InvalidArgument("flat scape needs a flat patch probe".into()));
    };
    patch.validate()?;
    check_dim(m.dim(), flat.dim())?;
    let p = flat.p();
    if p == 0 || p >= m.dim() {
        return Err(Error::InvalidArgument(format!("flat dimension {p} not in 1..{}", m.dim())));
    }
    for t in region.corners(p) {
        if !m.covers(&flat.point_at(&t)) {
            return Err(Error::ProbeOutsideCoverage);
        }
    }
    let scale = region.circumradius();
    for attempt in 0..=MAX_REWALKS {
        let flat = if attempt == 0 {
            flat.clone()
        } else {
            let shift = nudge(m.dim(), attempt);
            let base: Vec<f64> =
                flat.base.iter().zip(&shift).map(|(x, s)| x + PERTURBATION * scale * attempt as f64 * s).collect();
            Flat { base: Point::new(base), frame: flat.frame.clone() }
        };
        if let Some(cells) = restricted_cells(m, &flat, region)? {
            return Ok(Scape::from_cells(m, p, cells));
        }
    }
    Err(Error::Inconsistent("flat scape stayed degenerate after perturbation".into()))
}

/// Dual p-cells of the power-diagram vertices inside the region, or `None`
/// when a vertex is (numerically) shared by more than p + 1 power cells.
fn restricted_cells(m: &Mosaic, flat: &Flat, region: &Region) -> Result<Option<Vec<FaceRef>>> {
    let p = flat.p();
    let ws = project_weights(m, flat)?;
    let coords: Vec<f64> = ws.iter().flat_map(|w| w.point.iter().copied()).collect();
    let weights: Vec<f64> = ws.iter().map(|w| w.weight).collect();
    let tri = match Triangulation::build(&coords, p, Some(&weights)) {
        Ok(t) => t,
        Err(Error::DegenerateConfiguration { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let spread = linalg::extent(m.sites().iter().map(|s| s.coords()));
    let tie_tol = 1e-10 * spread * spread;
    let mut cells = Vec::new();
    let mut mat = vec![0.0; p * p];
    let mut rhs = vec![0.0; p];
    for cell in tri.finite_cells() {
        // 2 c . (a_i - a_0) = |a_i|^2 - w_i - |a_0|^2 + w_0
        let w0 = &ws[cell[0]];
        for (r, &i) in cell[1..].iter().enumerate() {
            let wi = &ws[i];
            for c in 0..p {
                mat[r * p + c] = 2.0 * (wi.point[c] - w0.point[c]);
            }
            rhs[r] = linalg::norm2(&wi.point) - wi.weight - linalg::norm2(&w0.point) + w0.weight;
        }
        let Some(center) = linalg::solve(&mat, &rhs, p, 1e-12) else {
            return Ok(None);
        };
        if !region.contains(&center) {
            continue;
        }
        let own = w0.power(&center);
        let mut sorted = cell.clone();
        sorted.sort_unstable();
        for (i, w) in ws.iter().enumerate() {
            if sorted.binary_search(&i).is_err() && w.power(&center) - own <= tie_tol {
                return Ok(None);
            }
        }
        let face = m
            .find_face(&sorted)
            .ok_or_else(|| Error::Inconsistent(format!("power cell {sorted:?} is not a Delaunay cell")))?;
        cells.push(face);
    }
    Ok(Some(cells))
}

/// Scape volume over probe volume.
pub fn distortion(s: &Scape, probe: &Probe) -> Result<f64> {
    let v = probe.volume();
    if !(v > 0.0) {
        return Err(Error::ZeroProbeVolume);
    }
    Ok(s.total_volume() / v)
}
