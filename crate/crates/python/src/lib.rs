//! Python bindings for the registration core.
//!
//! Points cross the boundary as lists of `[x, y, z]`; transforms as a 3×3
//! rotation (row-major nested list) plus a translation.

use std::path::PathBuf;

use dpcr::bench::{generate_scene_pair, SyntheticSceneConfig};
use dpcr::decision::{Scorer, ScorerModel};
use dpcr::geom::{self, Mat3};
use dpcr::hypgen::{generate_hypotheses, Correspondence, CorrespondenceSet, HypGenConfig};
use dpcr::metrics::{rotation_error, translation_error};
use dpcr::pipeline::{self, PipelineConfig};
use dpcr::{PointCloud, RigidTransform, Vec3};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: dpcr::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_vecs(points: Vec<[f64; 3]>) -> Vec<Vec3> {
    points.into_iter().map(Vec3::from).collect()
}

fn to_lists(points: &[Vec3]) -> Vec<[f64; 3]> {
    points.iter().map(|p| [p.x, p.y, p.z]).collect()
}

#[pyclass(name = "PointCloud", frozen)]
struct PyPointCloud {
    inner: PointCloud,
}

#[pymethods]
impl PyPointCloud {
    #[new]
    #[pyo3(signature = (points, viewpoint=None))]
    fn new(points: Vec<[f64; 3]>, viewpoint: Option<[f64; 3]>) -> PyResult<Self> {
        let pts = to_vecs(points);
        let inner = match viewpoint {
            Some(v) => PointCloud::with_viewpoint(pts, Vec3::from(v)),
            None => PointCloud::new(pts),
        };
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: geom::read_cloud(&path).map_err(err)? })
    }

    fn points(&self) -> Vec<[f64; 3]> {
        to_lists(&self.inner.points)
    }

    #[getter]
    fn viewpoint(&self) -> Option<[f64; 3]> {
        self.inner.viewpoint.map(|v| [v.x, v.y, v.z])
    }

    fn transformed(&self, t: &PyRigidTransform) -> PyResult<Self> {
        Ok(Self { inner: geom::apply_transform(&t.inner, &self.inner).map_err(err)? })
    }

    fn downsample(&self, voxel: f64) -> PyResult<Self> {
        Ok(Self { inner: geom::voxel_downsample(&self.inner, voxel).map_err(err)? })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("PointCloud(n={})", self.inner.len())
    }
}

#[pyclass(name = "RigidTransform", frozen)]
struct PyRigidTransform {
    inner: RigidTransform,
}

#[pymethods]
impl PyRigidTransform {
    #[new]
    #[pyo3(signature = (rotation=None, translation=None))]
    fn new(rotation: Option<[[f64; 3]; 3]>, translation: Option<[f64; 3]>) -> PyResult<Self> {
        let r = rotation.map_or_else(Mat3::identity, |r| Mat3::from_fn(|i, j| r[i][j]));
        let t = translation.map_or_else(Vec3::zeros, Vec3::from);
        Ok(Self { inner: RigidTransform::new(r, t).map_err(err)? })
    }

    #[staticmethod]
    fn from_axis_angle(axis: [f64; 3], angle_rad: f64, translation: [f64; 3]) -> Self {
        Self { inner: RigidTransform::from_axis_angle(&Vec3::from(axis), angle_rad, Vec3::from(translation)) }
    }

    #[getter]
    fn rotation(&self) -> [[f64; 3]; 3] {
        let r = &self.inner.rotation;
        std::array::from_fn(|i| std::array::from_fn(|j| r[(i, j)]))
    }

    #[getter]
    fn translation(&self) -> [f64; 3] {
        let t = &self.inner.translation;
        [t.x, t.y, t.z]
    }

    fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let q = self.inner.apply(&Vec3::from(p));
        [q.x, q.y, q.z]
    }

    fn compose(&self, other: &Self) -> Self {
        Self { inner: self.inner.compose(&other.inner) }
    }

    fn inverse(&self) -> Self {
        Self { inner: self.inner.inverse() }
    }

    fn __repr__(&self) -> String {
        format!("RigidTransform({:?})", self.inner.to_row12())
    }
}

#[pyclass(name = "Hypothesis", frozen)]
struct PyHypothesis {
    #[pyo3(get)]
    rank: usize,
    #[pyo3(get)]
    inliers: usize,
    #[pyo3(get)]
    transform: Py<PyRigidTransform>,
}

#[pyclass(name = "ScorerModel", frozen)]
struct PyScorerModel {
    inner: ScorerModel,
}

#[pymethods]
impl PyScorerModel {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: ScorerModel::load(&path).map_err(err)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(err)
    }

    /// Scores `source` aligned onto `target` by `t`.
    #[pyo3(signature = (source, target, t, scale=1.0))]
    fn score(&self, source: &PyPointCloud, target: &PyPointCloud, t: &PyRigidTransform, scale: f64) -> PyResult<f64> {
        let pair = dpcr::decision::PreparedPair::new(&source.inner, &target.inner, scale);
        self.inner.score_hypothesis(&pair, &t.inner).map_err(err)
    }

    #[getter]
    fn with_tags(&self) -> bool {
        self.inner.with_tags
    }
}

#[pyclass(name = "RegistrationOutcome", frozen, get_all)]
struct PyOutcome {
    transform: Py<PyRigidTransform>,
    score: f64,
    scanned: usize,
    truncated: bool,
    rank: usize,
    svc_fallback: bool,
}

fn correspondences(src: Vec<[f64; 3]>, tgt: Vec<[f64; 3]>) -> PyResult<CorrespondenceSet> {
    if src.len() != tgt.len() {
        return Err(err(dpcr::Error::LengthMismatch(src.len(), tgt.len())));
    }
    let items = src.into_iter().zip(tgt).map(|(s, t)| Correspondence::new(Vec3::from(s), Vec3::from(t))).collect();
    Ok(CorrespondenceSet::new(items, "python"))
}

#[pyfunction]
fn estimate_rigid(py: Python<'_>, src: Vec<[f64; 3]>, tgt: Vec<[f64; 3]>) -> PyResult<PyRigidTransform> {
    let (s, t) = (to_vecs(src), to_vecs(tgt));
    let inner = py.detach(|| geom::estimate_rigid(&s, &t)).map_err(err)?;
    Ok(PyRigidTransform { inner })
}

/// Returns `(rotation_error_deg, translation_error_m)` of `estimate` against `truth`.
#[pyfunction]
fn pose_errors(estimate: &PyRigidTransform, truth: &PyRigidTransform) -> (f64, f64) {
    let (a, b) = (&estimate.inner, &truth.inner);
    (rotation_error(&a.rotation, &b.rotation), translation_error(&a.translation, &b.translation))
}

#[pyfunction]
#[pyo3(signature = (src, tgt, k=100, tau_sc=0.1, tau_in=0.1, seed=0))]
fn hypotheses(
    py: Python<'_>,
    src: Vec<[f64; 3]>,
    tgt: Vec<[f64; 3]>,
    k: usize,
    tau_sc: f64,
    tau_in: f64,
    seed: u64,
) -> PyResult<Vec<PyHypothesis>> {
    let cs = correspondences(src, tgt)?;
    let cfg = HypGenConfig { k, tau_sc, tau_in, seed, ..Default::default() };
    let hyps = py.detach(|| generate_hypotheses(&cs, &cfg)).map_err(err)?;
    hyps.into_iter()
        .map(|h| {
            Ok(PyHypothesis {
                rank: h.rank,
                inliers: h.inlier_count,
                transform: Py::new(py, PyRigidTransform { inner: h.transform })?,
            })
        })
        .collect()
}

#[pyfunction]
#[pyo3(signature = (source, target, src, tgt, model, m=100, score_threshold=0.6, seed=0))]
#[allow(clippy::too_many_arguments)]
fn register(
    py: Python<'_>,
    source: &PyPointCloud,
    target: &PyPointCloud,
    src: Vec<[f64; 3]>,
    tgt: Vec<[f64; 3]>,
    model: &PyScorerModel,
    m: usize,
    score_threshold: f64,
    seed: u64,
) -> PyResult<PyOutcome> {
    let cs = correspondences(src, tgt)?;
    let cfg = PipelineConfig { m, score_threshold, seed, ..Default::default() };
    let o = py
        .detach(|| pipeline::register(&source.inner, &target.inner, &cs, &model.inner, &cfg))
        .map_err(err)?;
    Ok(PyOutcome {
        transform: Py::new(py, PyRigidTransform { inner: o.transform })?,
        score: o.score,
        scanned: o.scanned,
        truncated: o.truncated,
        rank: o.rank,
        svc_fallback: o.svc_fallback,
    })
}

/// Synthesizes a scene pair; returns `(source, target, ground_truth, src_pts, tgt_pts)`.
#[pyfunction]
#[pyo3(signature = (overlap=0.5, inlier_ratio=0.05, points_per_view=2000, seed=0))]
#[allow(clippy::type_complexity)]
fn scene_pair(
    py: Python<'_>,
    overlap: f64,
    inlier_ratio: f64,
    points_per_view: usize,
    seed: u64,
) -> PyResult<(PyPointCloud, PyPointCloud, PyRigidTransform, Vec<[f64; 3]>, Vec<[f64; 3]>)> {
    let cfg = SyntheticSceneConfig { overlap, inlier_ratio, points_per_view, seed, ..Default::default() };
    let (pair, cs) = py.detach(|| generate_scene_pair(&cfg)).map_err(err)?;
    let src = cs.items.iter().map(|c| [c.src.x, c.src.y, c.src.z]).collect();
    let tgt = cs.items.iter().map(|c| [c.tgt.x, c.tgt.y, c.tgt.z]).collect();
    Ok((
        PyPointCloud { inner: pair.source },
        PyPointCloud { inner: pair.target },
        PyRigidTransform { inner: pair.ground_truth },
        src,
        tgt,
    ))
}

#[pymodule]
fn dpcr_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPointCloud>()?;
    m.add_class::<PyRigidTransform>()?;
    m.add_class::<PyHypothesis>()?;
    m.add_class::<PyScorerModel>()?;
    m.add_class::<PyOutcome>()?;
    m.add_function(wrap_pyfunction!(estimate_rigid, m)?)?;
    m.add_function(wrap_pyfunction!(pose_errors, m)?)?;
    m.add_function(wrap_pyfunction!(hypotheses, m)?)?;
    m.add_function(wrap_pyfunction!(register, m)?)?;
    m.add_function(wrap_pyfunction!(scene_pair, m)?)?;
    Ok(())
}
