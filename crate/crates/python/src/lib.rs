//! Python bindings: constants, moments, mosaics, scapes and mixed volumes.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use voroscape::experiment::{self, ExperimentSpec};
use voroscape::moments::{self, MomentQuery};
use voroscape::{Flat, Frame, Point, Probe, Region, Window};

fn err(e: voroscape::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn points(rows: Vec<Vec<f64>>) -> Vec<Point> {
    rows.into_iter().map(Point::new).collect()
}

/// D(p, d), the average distortion of p-dimensional volume.
#[pyfunction]
fn distortion_constant(p: usize, d: usize) -> PyResult<f64> {
    if p > d {
        return Err(PyValueError::new_err(format!("p = {p} exceeds d = {d}")));
    }
    Ok(moments::distortion_constant(p, d))
}

/// D(p, d) as an exact string such as "16/(3pi)".
#[pyfunction]
fn exact_distortion(p: usize, d: usize) -> PyResult<String> {
    if p > d {
        return Err(PyValueError::new_err(format!("p = {p} exceeds d = {d}")));
    }
    Ok(moments::exact_distortion(p, d).to_string())
}

#[pyfunction]
fn moment_closed_form(p: usize, d: usize, j: u32) -> PyResult<f64> {
    moments::moment_closed_form(MomentQuery::new(p, d, j).map_err(err)?).map_err(err)
}

/// Monte Carlo projection moment: `(mean, stderr)`.
#[pyfunction]
#[pyo3(signature = (p, d, j, samples = 100_000, seed = 0))]
fn moment_monte_carlo(py: Python<'_>, p: usize, d: usize, j: u32, samples: u64, seed: u64) -> PyResult<(f64, f64)> {
    let q = MomentQuery::new(p, d, j).map_err(err)?;
    let e = py.detach(|| moments::moment_monte_carlo(q, samples, seed)).map_err(err)?;
    Ok((e.mean, e.stderr))
}

fn scape_rows(s: &voroscape::Scape) -> Vec<(Vec<usize>, u32, f64)> {
    s.entries().iter().map(|e| (e.sites.clone(), e.multiplicity, e.volume)).collect()
}

/// Delaunay mosaic of a point set, with its Voronoi duals.
#[pyclass(name = "Mosaic", frozen)]
struct PyMosaic {
    inner: voroscape::Mosaic,
}

#[pymethods]
impl PyMosaic {
    #[new]
    fn new(py: Python<'_>, sites: Vec<Vec<f64>>) -> PyResult<Self> {
        let d = sites.first().map_or(0, |s| s.len());
        let pts = points(sites);
        let inner = py.detach(|| voroscape::build_mosaic(&pts, d)).map_err(err)?;
        Ok(PyMosaic { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn n_faces(&self, k: usize) -> usize {
        if k > self.inner.dim() {
            0
        } else {
            self.inner.n_faces(k)
        }
    }

    /// Faces of dimension k as sorted site-index lists.
    fn faces(&self, k: usize) -> Vec<Vec<usize>> {
        if k > self.inner.dim() {
            return Vec::new();
        }
        self.inner.faces(k).map(|f| self.inner.face_vertices(f)).collect()
    }

    fn circumcenters(&self) -> Vec<Vec<f64>> {
        self.inner.top_circumcenters().iter().map(|c| c.coords().to_vec()).collect()
    }

    fn nearest_site(&self, x: Vec<f64>) -> usize {
        voroscape::nearest_site(&self.inner, &x)
    }

    fn validate_empty_sphere(&self) -> bool {
        voroscape::validate_empty_sphere(&self.inner)
    }

    fn to_json(&self) -> String {
        self.inner.to_json().to_string()
    }

    /// Voronoi path of a polyline: `(entries, total_length)` where each
    /// entry is `(sites, multiplicity, length)`.
    fn voronoi_path(&self, polyline: Vec<Vec<f64>>) -> PyResult<(Vec<(Vec<usize>, u32, f64)>, f64)> {
        let probe = Probe::Polyline { points: points(polyline) };
        let s = voroscape::voronoi_path(&self.inner, &probe).map_err(err)?;
        Ok((scape_rows(&s), s.total_volume()))
    }

    /// Voronoi scape of the square of side `side` centred at `base` in the
    /// flat spanned by the orthonormal rows of `frame`.
    fn voronoi_scape_flat(
        &self,
        base: Vec<f64>,
        frame: Vec<Vec<f64>>,
        side: f64,
    ) -> PyResult<(Vec<(Vec<usize>, u32, f64)>, f64)> {
        let d = base.len();
        let p = frame.len();
        let frame = Frame::new(frame, d).map_err(err)?;
        let flat = Flat::new(Point::new(base), frame).map_err(err)?;
        let probe = Probe::FlatPatch { flat, region: Region::square(p, side) };
        let s = voroscape::voronoi_scape_flat(&self.inner, &probe).map_err(err)?;
        Ok((scape_rows(&s), s.total_volume()))
    }

    /// Mixed-volume sum over the p-cells in the ball of radius `radius`
    /// around `center`; unbounded duals are clipped to the cube of
    /// half-extent `outer` around the same center.
    fn mixed_volume_sum<'py>(
        &self,
        py: Python<'py>,
        p: usize,
        center: Vec<f64>,
        radius: f64,
        outer: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let c = Point::new(center);
        let ball = Window::ball(c.clone(), radius);
        let box_ = Window::cube(c, outer);
        let r = voroscape::mixed_volume_sum(&self.inner, p, &ball, &box_).map_err(err)?;
        let out = PyDict::new(py);
        out.set_item("d", r.d)?;
        out.set_item("p", r.p)?;
        out.set_item("R", r.r)?;
        out.set_item("sum_interior", r.sum_interior)?;
        out.set_item("sum_boundary", r.sum_boundary)?;
        out.set_item("predicted", r.predicted)?;
        out.set_item("ratio", r.ratio)?;
        out.set_item("n_cells", r.n_cells)?;
        out.set_item("n_boundary", r.n_boundary)?;
        Ok(out)
    }
}

/// Runs a seeded Monte Carlo experiment and returns `(mean, stderr, z,
/// per-trial values)`. `kind` is "path", "scape", "mixedvol" or "moments";
/// `size` is the segment length, patch side, ball radius, or (moments)
/// the number of samples per trial.
#[pyfunction]
#[pyo3(signature = (kind, d, p, rho, size, trials, seed = 0, j = 1))]
#[allow(clippy::too_many_arguments)]
fn run_experiment(
    py: Python<'_>,
    kind: &str,
    d: usize,
    p: usize,
    rho: f64,
    size: f64,
    trials: usize,
    seed: u64,
    j: u32,
) -> PyResult<(f64, Option<f64>, Option<f64>, Vec<f64>)> {
    let spec = match kind {
        "path" => ExperimentSpec::path(d, rho, size, trials, seed),
        "scape" => ExperimentSpec::scape(d, p, rho, size, trials, seed),
        "mixedvol" => ExperimentSpec::mixedvol(d, p, rho, size, trials, seed),
        "moments" => ExperimentSpec::moments(p, d, j, size as u64, trials, seed),
        other => return Err(PyValueError::new_err(format!("unknown experiment kind {other:?}"))),
    };
    let r = py.detach(|| experiment::run_experiment(&spec)).map_err(err)?;
    Ok((r.mean, r.stderr, r.z, r.values))
}

#[pymodule]
fn pyvoroscape(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(distortion_constant, m)?)?;
    m.add_function(wrap_pyfunction!(exact_distortion, m)?)?;
    m.add_function(wrap_pyfunction!(moment_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(moment_monte_carlo, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_class::<PyMosaic>()?;
    Ok(())
}
