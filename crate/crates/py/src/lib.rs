//! Python module `inducer`: catalog maps, regions, scheme builds, audits
//! and the scheme text format.

use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use engine::cli::{audit_scheme, load_spec};
use engine::dynamics::{verify_distortion, verify_expansion, MapSpec, PiecewiseMap};
use engine::geometry::{Grid, Region as CoreRegion};
use engine::inducing::{
    adjust_times as core_adjust, fit_tail as core_fit, upgrade_full_branch, verify_gibbs_markov, BuildOptions, Builder,
    InducingScheme, RecurrenceSpec,
};
use engine::io::{manifest_toml, read_scheme, tail_csv, write_scheme};

create_exception!(inducer, InducerError, PyException, "Error raised by the inducer engine; `args[1]` is the CLI exit code.");

fn err(e: engine::Error) -> PyErr {
    InducerError::new_err((e.to_string(), e.exit_code()))
}

/// A rasterised region of a box grid.
#[pyclass(frozen, skip_from_py_object, module = "inducer")]
#[derive(Clone)]
struct Region {
    inner: CoreRegion,
}

#[pymethods]
impl Region {
    /// Open box `(lo, hi)` on the grid of cell size `eta` spanning `[glo, ghi]`.
    #[staticmethod]
    #[pyo3(signature = (lo, hi, eta, glo=None, ghi=None))]
    fn open_box(lo: Vec<f64>, hi: Vec<f64>, eta: f64, glo: Option<Vec<f64>>, ghi: Option<Vec<f64>>) -> PyResult<Region> {
        let d = lo.len();
        let glo = glo.unwrap_or_else(|| vec![0.0; d]);
        let ghi = ghi.unwrap_or_else(|| vec![1.0; d]);
        let grid = Arc::new(Grid::new(&glo, &ghi, eta).map_err(err)?);
        Ok(Region { inner: CoreRegion::open_box(grid, &lo, &hi) })
    }

    #[getter]
    fn eta(&self) -> f64 {
        self.inner.grid().eta()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.grid().dim()
    }

    fn count(&self) -> usize {
        self.inner.count()
    }

    fn measure(&self) -> f64 {
        self.inner.measure()
    }

    fn diameter(&self) -> f64 {
        self.inner.diameter()
    }

    fn eps_boundary_measure(&self, eps: f64) -> f64 {
        self.inner.eps_boundary_measure(eps)
    }

    fn is_delta_regular(&self, delta: f64) -> bool {
        self.inner.is_delta_regular(delta)
    }

    fn union(&self, o: &Region) -> Region {
        Region { inner: self.inner.union(&o.inner) }
    }

    fn intersect(&self, o: &Region) -> Region {
        Region { inner: self.inner.intersect(&o.inner) }
    }

    fn difference(&self, o: &Region) -> Region {
        Region { inner: self.inner.difference(&o.inner) }
    }

    fn __eq__(&self, o: &Region) -> bool {
        self.inner == o.inner
    }

    fn __repr__(&self) -> String {
        format!("Region(cells={}, measure={})", self.inner.count(), self.inner.measure())
    }
}

/// A piecewise expanding map rasterised at cell size `eta`.
#[pyclass(frozen, module = "inducer")]
struct Map {
    spec: MapSpec,
    map: PiecewiseMap,
}

#[pymethods]
impl Map {
    /// `source` is a catalog id (`M0`..`M3`) or a path to a map-spec file.
    #[new]
    fn new(source: &str, eta: f64) -> PyResult<Map> {
        let spec = load_spec(source).map_err(err)?;
        let map = spec.build(eta).map_err(err)?;
        Ok(Map { spec, map })
    }

    #[getter]
    fn name(&self) -> &str {
        &self.spec.name
    }

    #[getter]
    fn dim(&self) -> usize {
        self.map.dim()
    }

    #[getter]
    fn eta(&self) -> f64 {
        self.map.eta()
    }

    #[getter]
    fn branches(&self) -> usize {
        self.map.branches().len()
    }

    #[getter]
    fn eps0(&self) -> f64 {
        self.map.constants().eps0()
    }

    fn space(&self) -> Region {
        Region { inner: self.map.space().clone() }
    }

    /// Branch index and image of `x`, or `None` off the domains.
    fn forward(&self, x: Vec<f64>) -> Option<(usize, Vec<f64>)> {
        let mut p = [0.0; 3];
        p[..x.len().min(3)].copy_from_slice(&x[..x.len().min(3)]);
        self.map.forward(&p).map(|(b, y)| (b, y[..self.map.dim()].to_vec()))
    }

    /// Largest sampled expansion and distortion ratios.
    #[pyo3(signature = (samples=2000, seed=0))]
    fn verify(&self, samples: usize, seed: u64) -> PyResult<(f64, f64)> {
        let e = verify_expansion(&self.map, samples, seed).map_err(err)?;
        let d = verify_distortion(&self.map, samples, seed).map_err(err)?;
        Ok((e.max, d.max))
    }

    /// Builds a Gibbs-Markov scheme; `seeds` restricts the build to a
    /// deterministic subset of partition elements.
    #[pyo3(signature = (seeds=None, rounds=64, seed=0, max_unresolved=0.05, p=None))]
    fn build_gm(
        &self,
        py: Python<'_>,
        seeds: Option<usize>,
        rounds: usize,
        seed: u64,
        max_unresolved: f64,
        p: Option<f64>,
    ) -> PyResult<Scheme> {
        let mut opts = BuildOptions { seeds, seed, round_cap: rounds, max_unresolved_fraction: max_unresolved, ..Default::default() };
        if let Some(p) = p {
            opts.p = p;
        }
        let eta = self.map.eta();
        let spec = self.spec.clone();
        let (b, s) = py
            .detach(move || -> engine::Result<_> {
                let b = Builder::new(&spec, eta, opts, None)?;
                let s = b.build_gm()?;
                Ok((b, s))
            })
            .map_err(err)?;
        Ok(Scheme { floor: b.tail_floor(), scheme: s, map: Arc::new(b.map) })
    }

    fn __repr__(&self) -> String {
        format!("Map({:?}, dim={}, eta={})", self.spec.name, self.map.dim(), self.map.eta())
    }
}

/// An inducing scheme together with the map it was built on.
#[pyclass(frozen, module = "inducer")]
struct Scheme {
    scheme: InducingScheme,
    map: Arc<PiecewiseMap>,
    floor: f64,
}

#[pymethods]
impl Scheme {
    /// Parses the scheme text format.
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Scheme> {
        let l = read_scheme(text).map_err(err)?;
        // ten cells, as in the builder
        let floor = 10.0 * l.map.grid().cell_volume();
        Ok(Scheme { scheme: l.scheme, map: Arc::new(l.map), floor })
    }

    fn to_text(&self) -> String {
        write_scheme(&self.scheme)
    }

    fn tail_csv(&self) -> String {
        tail_csv(&self.scheme)
    }

    fn manifest_toml(&self) -> String {
        manifest_toml(&self.scheme, &[])
    }

    #[getter]
    fn mode(&self) -> &'static str {
        self.scheme.manifest.mode.as_str()
    }

    #[getter]
    fn base_measure(&self) -> f64 {
        self.scheme.base_measure
    }

    #[getter]
    fn unresolved(&self) -> f64 {
        self.scheme.unresolved
    }

    #[getter]
    fn seeds(&self) -> Vec<usize> {
        self.scheme.manifest.seeds.clone()
    }

    /// `(seed, tau, image, measure)` per cell.
    fn cells(&self) -> Vec<(usize, usize, usize, f64)> {
        self.scheme.cells.iter().map(|c| (c.seed, c.tau, c.image, c.measure)).collect()
    }

    /// `(n, m{tau > n})` entries.
    fn tail(&self) -> Vec<(usize, f64)> {
        self.scheme.tail.clone()
    }

    /// Fits `C kappa^n` to the tail; returns `(kappa, C, r2, points)`.
    fn fit_tail(&self) -> PyResult<(f64, f64, f64, usize)> {
        let f = core_fit(&self.scheme.tail, self.floor).map_err(err)?;
        Ok((f.kappa, f.constant, f.r2, f.points))
    }

    /// Violation messages from sampling the Gibbs-Markov properties; empty
    /// when the scheme passes.
    #[pyo3(signature = (samples=6, seed=0))]
    fn verify(&self, samples: usize, seed: u64) -> Vec<String> {
        verify_gibbs_markov(&self.scheme, &self.map, samples, seed).violations.iter().map(|v| v.to_string()).collect()
    }

    /// Audit lines and whether every check passed.
    #[pyo3(signature = (samples=6, seed=0))]
    fn audit(&self, samples: usize, seed: u64) -> (bool, Vec<String>) {
        let r = audit_scheme(&self.scheme, &self.map, samples, seed);
        (r.passed(), r.lines)
    }

    /// First-return scheme on one seed element (`target`, or the largest).
    #[pyo3(signature = (target=None, return_cap=4000))]
    fn upgrade(&self, py: Python<'_>, target: Option<usize>, return_cap: usize) -> PyResult<Scheme> {
        let s = py.detach(|| upgrade_full_branch(&self.scheme, &self.map, target, return_cap, self.floor)).map_err(err)?;
        Ok(Scheme { scheme: s, map: self.map.clone(), floor: self.floor })
    }

    fn __len__(&self) -> usize {
        self.scheme.cells.len()
    }

    fn __repr__(&self) -> String {
        format!("Scheme(mode={}, cells={}, unresolved={})", self.mode(), self.scheme.cells.len(), self.scheme.unresolved)
    }
}

/// Fits `C kappa^n` to `(n, value)` pairs above `floor`; returns
/// `(kappa, C, r2, points)`.
#[pyfunction]
#[pyo3(signature = (table, floor=0.0))]
fn fit_tail(table: Vec<(usize, f64)>, floor: f64) -> PyResult<(f64, f64, f64, usize)> {
    let f = core_fit(&table, floor).map_err(err)?;
    Ok((f.kappa, f.constant, f.r2, f.points))
}

/// Searches itineraries for `times` on `z` and spreads them so the first is
/// at least `c1` and gaps at least `c2`; returns `(times, m)`.
#[pyfunction]
fn adjust_times(map: &Map, z: &Region, times: Vec<usize>, c1: f64, c2: f64) -> PyResult<(Vec<usize>, Vec<usize>)> {
    let spec = RecurrenceSpec::search(&map.map, z.inner.clone(), times).map_err(err)?;
    let a = core_adjust(&spec, c1, c2);
    Ok((a.times, a.m))
}

#[pymodule]
fn inducer(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("InducerError", m.py().get_type::<InducerError>())?;
    m.add_class::<Region>()?;
    m.add_class::<Map>()?;
    m.add_class::<Scheme>()?;
    m.add_function(wrap_pyfunction!(fit_tail, m)?)?;
    m.add_function(wrap_pyfunction!(adjust_times, m)?)?;
    Ok(())
}
