//! Voronoi paths, Voronoi scapes and mixed volumes of Delaunay mosaics.
//!
//! The Voronoi scape of a p-dimensional probe Ω against a site set A is the
//! multiset of Delaunay p-cells whose dual Voronoi (d−p)-cells Ω crosses.
//! Its p-volume over Vol_p(Ω) averages to `D(p, d) = binom(d/2, p/2)`; this
//! crate computes scapes exactly for polylines and flat patches and checks
//! that constant (and the mixed-volume identity behind it) by Monte Carlo.
//!
//! Modules:
//! - [`geometry`]: points, frames, simplices, cells and their volumes
//! - [`moments`]: projection moments and the distortion constant
//! - [`pointproc`]: Poisson and lattice site generators
//! - [`delaunay`]: Delaunay mosaics with their face lattice and Voronoi duals
//! - [`scape`]: Voronoi paths of polylines and scapes of flat patches
//! - [`mixedvol`]: mixed volumes, tile measures and regularity reports
//! - [`experiment`]: seeded, parallel Monte Carlo experiments

pub mod delaunay;
pub mod error;
pub mod experiment;
pub mod geometry;
mod linalg;
pub mod mixedvol;
pub mod moments;
pub mod pointproc;
mod polytope;
pub mod scape;
pub mod stats;
mod triangulation;

pub use delaunay::{build_mosaic, circumradius_stats, nearest_site, validate_empty_sphere, voronoi_dual, DualCell, FaceRef, Mosaic};
pub use error::{Error, Result};
pub use geometry::{
    circumsphere, frame_projection_volume, orthonormalize, polytope_volume, simplex_volume, Frame, Point, PolytopeCell,
    Simplex,
};
pub use mixedvol::{mixed_volume_sum, regularity_report, tile_measure, MixedCell, MixedSumReport, RegularityReport};
pub use moments::{distortion_constant, distortion_table, moment_closed_form, moment_monte_carlo, sample_stiefel, MomentEstimate, MomentQuery};
pub use pointproc::{window_volume, ProcessSpec, Window};
pub use scape::{
    distortion, project_weights, voronoi_path, voronoi_scape_flat, voronoi_walk, Flat, Probe, Region, Scape, ScapeEntry,
    WeightedSite,
};
pub use experiment::{run_experiment, ExperimentKind, ExperimentResult, ExperimentSpec};
