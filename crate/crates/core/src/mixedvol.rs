//! Mixed volumes of dual cell pairs and the sums behind the mixed complex.
//!
//! For a Delaunay p-cell γ with Voronoi dual γ*, the mixed volume is
//! `Vol_p(γ) · Vol_{d-p}(γ*)`. Summed over the p-cells inside a ball of
//! radius R it grows like `ν_d · C(d, p) · R^d`; cells whose pivot ball
//! `ball(z0, R0)` reaches the sphere are tallied separately as boundary
//! cells.

use serde::{Deserialize, Serialize};

use crate::delaunay::{self, clipped_dual_volume, dual_volume, voronoi_dual, DualCell, FaceRef, Mosaic};
use crate::error::{Error, Result};
use crate::geometry::{simplex_volume, Point, Simplex};
use crate::moments::binomial;
use crate::pointproc::{unit_ball_volume, Window};
use crate::polytope;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedCell {
    pub gamma: FaceRef,
    pub gamma_star: DualCell,
    /// Vol_p(γ).
    pub primal_volume: f64,
    /// Vol_{d-p}(γ*), clipped to the outer window when unbounded.
    pub dual_volume: f64,
    pub mixed_volume: f64,
    pub z0: Point,
    pub r0: f64,
    pub boundary: bool,
}

impl MixedCell {
    pub fn is_bounded(&self) -> bool {
        self.gamma_star.bounded
    }
}

/// Pairs γ with its dual. Unbounded duals are clipped to `clip` (box
/// bounds); without clipping their volume is infinite. `ball` is the
/// `(center, R)` the boundary flag refers to.
pub fn mixed_cell(
    m: &Mosaic,
    gamma: FaceRef,
    clip: Option<(&[f64], &[f64])>,
    ball: Option<(&[f64], f64)>,
) -> Result<MixedCell> {
    let dual = voronoi_dual(m, gamma);
    let primal_volume = m.face_volume(gamma);
    let dual_vol = if dual.bounded {
        dual_volume(m, &dual)?
    } else if let Some((lo, hi)) = clip {
        clipped_dual_volume(m, &dual, lo, hi)
    } else {
        f64::INFINITY
    };
    let z0 = dual.pivot.clone();
    let r0 = if dual.bounded {
        let verts = m.face_vertices(gamma);
        let mut r: f64 = 0.0;
        for &v in &verts {
            for c in &dual.vertices {
                r = r.max(m.site(v).distance(c));
            }
        }
        r
    } else {
        f64::INFINITY
    };
    let boundary = !dual.bounded
        || ball.is_some_and(|(c, radius)| (crate::linalg::dist(&z0, c) - radius).abs() <= r0);
    Ok(MixedCell {
        gamma,
        gamma_star: dual,
        primal_volume,
        dual_volume: dual_vol,
        mixed_volume: primal_volume * dual_vol,
        z0,
        r0,
        boundary,
    })
}

/// Measure of the p-tile of a dual pair: `mixed_volume / C(d, p)`.
pub fn tile_measure(c: &MixedCell, d: usize, p: usize) -> Result<f64> {
    if !c.is_bounded() {
        return Err(Error::InfiniteTile);
    }
    if p > d {
        return Err(Error::InvalidArgument(format!("p = {p} exceeds d = {d}")));
    }
    Ok(c.mixed_volume / binomial(d as f64, p as f64))
}

/// Vol_d of `½γ × ½γ*`, recomputed from the halved vertex sets.
pub fn half_product_volume(m: &Mosaic, c: &MixedCell) -> Result<f64> {
    if !c.is_bounded() {
        return Err(Error::InfiniteTile);
    }
    let half = |p: &Point| Point::new(p.iter().map(|x| 0.5 * x).collect());
    let primal = Simplex::new(m.face_vertices(c.gamma).iter().map(|&v| half(m.site(v))).collect())?;
    let vp = simplex_volume(&primal).volume;
    let dual = &c.gamma_star;
    let vd = if dual.dim == 0 {
        1.0
    } else {
        let owner = m.face_vertices(c.gamma);
        let points: Vec<Vec<f64>> = dual.vertices.iter().map(|p| half(p).into_vec()).collect();
        let labels: Vec<Vec<u32>> = dual
            .top_cells
            .iter()
            .map(|&t| {
                m.face_vertices(FaceRef { dim: m.dim(), index: t })
                    .into_iter()
                    .filter(|v| !owner.contains(v))
                    .map(|v| v as u32)
                    .collect()
            })
            .collect();
        polytope::labeled_volume(&points, &labels)
    };
    Ok(vp * vd)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedSumReport {
    pub d: usize,
    pub p: usize,
    #[serde(rename = "R")]
    pub r: f64,
    pub sum_interior: f64,
    pub sum_boundary: f64,
    pub predicted: f64,
    pub ratio: f64,
    pub n_cells: usize,
    pub n_boundary: usize,
    pub seed: Option<u64>,
}

fn ball_of(window: &Window) -> Result<(&Point, f64)> {
    match window {
        Window::Ball { center, radius } => Ok((center, *radius)),
        Window::Box { .. } => Err(Error::InvalidArgument("mixed-volume window must be a ball".into())),
    }
}

/// Cells γ with every vertex in the ball.
fn cells_in_ball<'a>(m: &'a Mosaic, p: usize, center: &'a [f64], r: f64) -> impl Iterator<Item = FaceRef> + 'a {
    let inside: Vec<bool> = m.sites().iter().map(|s| crate::linalg::dist(s, center) <= r).collect();
    m.faces(p).filter(move |&f| m.face_vertices(f).iter().all(|&v| inside[v]))
}

/// Sum of mixed volumes over the p-cells inside `ball`. Boundary cells
/// (pivot ball meeting the sphere) are included in `sum_interior` and also
/// tallied in `sum_boundary`; cells with unbounded duals are clipped to the
/// bounding box of `outer`, flagged, and left out of `sum_interior`.
pub fn mixed_volume_sum(m: &Mosaic, p: usize, ball: &Window, outer: &Window) -> Result<MixedSumReport> {
    let d = m.dim();
    if p > d {
        return Err(Error::InvalidArgument(format!("p = {p} exceeds d = {d}")));
    }
    let (center, r) = ball_of(ball)?;
    crate::error::check_dim(d, center.dim())?;
    let (lo, hi) = outer.bounds();
    let mut sum_interior = 0.0;
    let mut sum_boundary = 0.0;
    let mut n_cells = 0;
    let mut n_boundary = 0;
    for f in cells_in_ball(m, p, center, r) {
        let c = mixed_cell(m, f, Some((&lo, &hi)), Some((center, r)))?;
        n_cells += 1;
        if c.is_bounded() {
            sum_interior += c.mixed_volume;
        }
        if c.boundary {
            n_boundary += 1;
            sum_boundary += c.mixed_volume;
        }
    }
    let predicted = unit_ball_volume(d) * binomial(d as f64, p as f64) * r.powi(d as i32);
    Ok(MixedSumReport {
        d,
        p,
        r,
        sum_interior,
        sum_boundary,
        predicted,
        ratio: sum_interior / predicted,
        n_cells,
        n_boundary,
        seed: None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub max_circumradius: f64,
    pub mean_circumradius: f64,
    /// Largest circumradius among Voronoi vertices inside the ball: the
    /// radius of the largest empty ball centred there.
    pub empty_ball_radius: f64,
    /// Cells inside the ball whose dual is unbounded.
    pub unbounded_cells: usize,
    /// Total tile measure of boundary cells over R^d.
    pub boundary_measure: f64,
    pub regular: bool,
}

/// Surrogate checks for mixed regularity of the p-cells in `ball`.
pub fn regularity_report(m: &Mosaic, p: usize, ball: &Window, outer: &Window) -> Result<RegularityReport> {
    let d = m.dim();
    let (center, r) = ball_of(ball)?;
    let (max_circumradius, mean_circumradius) = delaunay::circumradius_stats(m);
    let empty_ball_radius = m
        .top_circumcenters()
        .iter()
        .zip(m.top_circumradii())
        .filter(|(c, _)| c.distance(center) <= r)
        .map(|(_, &rad)| rad)
        .fold(0.0, f64::max);
    let (lo, hi) = outer.bounds();
    let mut unbounded_cells = 0;
    let mut boundary = 0.0;
    let scale = binomial(d as f64, p as f64);
    for f in cells_in_ball(m, p, center, r) {
        let c = mixed_cell(m, f, Some((&lo, &hi)), Some((center, r)))?;
        if !c.is_bounded() {
            unbounded_cells += 1;
        }
        if c.boundary {
            boundary += c.mixed_volume / scale;
        }
    }
    Ok(RegularityReport {
        max_circumradius,
        mean_circumradius,
        empty_ball_radius,
        unbounded_cells,
        boundary_measure: boundary / r.powi(d as i32),
        regular: unbounded_cells == 0,
    })
}
