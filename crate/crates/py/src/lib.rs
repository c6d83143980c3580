//! Python bindings. Designs are immutable: `Design.apply` returns a new
//! design, like the engine's `apply_move`.

use pyo3::create_exception;
use pyo3::exceptions::{PyIndexError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;
use radiogram_core::catalog::{
    build_catalog, canonical_key_with, labeled_count as core_labeled_count, ladder_report_with,
    mirror_twin, paper_check as core_paper_check, CatalogEntryDoc, CatalogOptions,
    EquivalenceLevel, GrammarSpec, LabelMode,
};
use radiogram_core::frame::{
    extract_frame, frame_stats, rooted_fcc_residency, FrameGraph, ScaleMeters,
};
use radiogram_core::grammar::{
    self, applicable_moves, apply_move, candidate_moves, design_from_json, initial_design,
    ApplyMode, GrammarId,
};
use radiogram_core::polyhedra::{canonical_symmetries, ShapeKind};
use serde::Serialize;

create_exception!(radiogram, GrammarError, PyValueError);

fn grammar_err(e: &grammar::GrammarError) -> PyErr {
    GrammarError::new_err(format!("{}: {e}", e.code()))
}

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_grammar(s: &str) -> PyResult<GrammarId> {
    s.parse().map_err(value_err)
}

fn parse_kind(s: &str) -> PyResult<ShapeKind> {
    s.parse().map_err(value_err)
}

fn parse_level(s: &str) -> PyResult<EquivalenceLevel> {
    s.parse().map_err(value_err)
}

fn spec(grammar: &str, alternate: bool) -> PyResult<GrammarSpec> {
    Ok(GrammarSpec {
        id: parse_grammar(grammar)?,
        alternate,
    })
}

/// Serializes through JSON into plain Python containers.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

/// One labeled rule application.
#[pyclass(name = "Move", module = "radiogram", frozen, eq, hash, from_py_object)]
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PyMove(grammar::Move);

#[pymethods]
impl PyMove {
    #[new]
    #[pyo3(signature = (host_shape, host_face, kind, alignment=0, orientation=1))]
    fn new(
        host_shape: usize,
        host_face: usize,
        kind: &str,
        alignment: u8,
        orientation: i8,
    ) -> PyResult<Self> {
        grammar::Move::new(
            host_shape,
            host_face,
            parse_kind(kind)?,
            alignment,
            orientation,
        )
        .map(PyMove)
        .map_err(|e| grammar_err(&e))
    }

    #[getter]
    fn host_shape(&self) -> usize {
        self.0.host_shape
    }

    #[getter]
    fn host_face(&self) -> usize {
        self.0.host_face
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.0.kind.as_str()
    }

    #[getter]
    fn alignment(&self) -> u8 {
        self.0.alignment
    }

    #[getter]
    fn orientation(&self) -> i8 {
        self.0.orientation
    }

    fn __repr__(&self) -> String {
        format!("Move({})", self.0)
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }
}

/// An exact derivation state: solids, face labels and the move trace.
#[pyclass(name = "Design", module = "radiogram", frozen, skip_from_py_object)]
pub struct PyDesign(grammar::Design);

#[pymethods]
impl PyDesign {
    #[new]
    #[pyo3(signature = (grammar, initial_kind=None, alternate=false))]
    fn new(grammar: &str, initial_kind: Option<&str>, alternate: bool) -> PyResult<Self> {
        let g = parse_grammar(grammar)?;
        let kind = match initial_kind {
            Some(k) => parse_kind(k)?,
            None => g.initial_kinds()[0],
        };
        initial_design(g, kind, alternate)
            .map(PyDesign)
            .map_err(|e| grammar_err(&e))
    }

    /// Rebuilds a design from its JSON form by replaying the recorded trace.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        design_from_json(text).map(PyDesign).map_err(value_err)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.0).map_err(value_err)
    }

    #[getter]
    fn grammar(&self) -> &'static str {
        self.0.grammar.as_str()
    }

    #[getter]
    fn initial_kind(&self) -> &'static str {
        self.0.initial_kind.as_str()
    }

    #[getter]
    fn alternate(&self) -> bool {
        self.0.alternate
    }

    #[getter]
    fn trace(&self) -> Vec<PyMove> {
        self.0.trace.iter().copied().map(PyMove).collect()
    }

    fn __len__(&self) -> usize {
        self.0.shapes.len()
    }

    fn kinds(&self) -> Vec<&'static str> {
        self.0.shapes.iter().map(|s| s.kind.as_str()).collect()
    }

    /// Exact vertices of one solid as rational strings.
    fn vertices(&self, shape: usize) -> PyResult<Vec<[String; 3]>> {
        let s = self
            .0
            .shapes
            .get(shape)
            .ok_or_else(|| PyIndexError::new_err(format!("no shape {shape}")))?;
        Ok(s.vertices
            .iter()
            .map(|v| v.components().map(|c| c.to_string()))
            .collect())
    }

    /// Float approximations of every solid's vertices, solid by solid.
    fn approx_vertices(&self) -> Vec<[f64; 3]> {
        self.0.all_vertices().map(|v| v.to_f64()).collect()
    }

    /// Face labels of one solid: "FREE" or "USED".
    fn face_labels<'py>(&self, py: Python<'py>, shape: usize) -> PyResult<Bound<'py, PyAny>> {
        let s = self
            .0
            .shapes
            .get(shape)
            .ok_or_else(|| PyIndexError::new_err(format!("no shape {shape}")))?;
        to_py(py, &s.face_labels)
    }

    fn applicable_moves(&self) -> Vec<PyMove> {
        applicable_moves(&self.0).into_iter().map(PyMove).collect()
    }

    /// `(move, feasible)` pairs in `applicable_moves` order.
    fn candidate_moves(&self) -> Vec<(PyMove, bool)> {
        candidate_moves(&self.0)
            .into_iter()
            .map(|c| (PyMove(c.mv), c.feasible))
            .collect()
    }

    #[pyo3(signature = (mv, strict=true))]
    fn apply(&self, mv: PyMove, strict: bool) -> PyResult<Self> {
        let mode = if strict {
            ApplyMode::Strict
        } else {
            ApplyMode::CountOnly
        };
        apply_move(&self.0, &mv.0, mode)
            .map(PyDesign)
            .map_err(|e| grammar_err(&e))
    }

    /// Hex digest of the canonical key at `level` ("l0".."l3").
    #[pyo3(signature = (level="l1", label_sensitive=false))]
    fn key(&self, level: &str, label_sensitive: bool) -> PyResult<String> {
        let labels = if label_sensitive {
            LabelMode::Sensitive
        } else {
            LabelMode::Blind
        };
        Ok(canonical_key_with(&self.0, parse_level(level)?, labels).digest_hex())
    }

    /// The mirror image as a replayable design, and whether it differs from
    /// this one up to rotation.
    fn mirror_twin(&self) -> (Self, bool) {
        let (twin, chiral) = mirror_twin(&self.0);
        (PyDesign(twin), chiral)
    }

    fn fcc_residency(&self) -> bool {
        rooted_fcc_residency(&self.0)
    }

    #[pyo3(signature = (scale_m=None))]
    fn frame(&self, scale_m: Option<f64>) -> PyResult<PyFrame> {
        let scale = match scale_m {
            Some(m) => {
                Some(ScaleMeters::new(m).ok_or_else(|| value_err("scale must be positive"))?)
            }
            None => None,
        };
        Ok(PyFrame(
            extract_frame(&self.0).map_err(value_err)?.with_scale(scale),
        ))
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        let trace: Vec<String> = self.0.trace.iter().map(ToString::to_string).collect();
        format!(
            "Design({}, {}, [{}])",
            self.0.grammar,
            self.0.initial_kind,
            trace.join(", ")
        )
    }
}

/// Node/strut graph of a design.
#[pyclass(name = "Frame", module = "radiogram", frozen)]
pub struct PyFrame(FrameGraph);

#[pymethods]
impl PyFrame {
    #[getter]
    fn node_count(&self) -> usize {
        self.0.nodes.len()
    }

    #[getter]
    fn struts(&self) -> Vec<(usize, usize)> {
        self.0.struts.clone()
    }

    fn approx_nodes(&self) -> Vec<[f64; 3]> {
        self.0.nodes.iter().map(|v| v.to_f64()).collect()
    }

    fn to_obj(&self) -> String {
        self.0.to_obj()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.0.to_doc()).map_err(value_err)
    }

    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &frame_stats(&self.0).map_err(value_err)?)
    }
}

/// Size of the labeled design space after `depth` rule applications.
#[pyfunction]
#[pyo3(signature = (grammar, depth, alternate=false, strict=false))]
fn labeled_count(
    py: Python<'_>,
    grammar: &str,
    depth: usize,
    alternate: bool,
    strict: bool,
) -> PyResult<usize> {
    let spec = spec(grammar, alternate)?;
    let mode = if strict {
        ApplyMode::Strict
    } else {
        ApplyMode::CountOnly
    };
    Ok(py.detach(|| core_labeled_count(spec, depth, mode)))
}

/// Class representatives at `level`, as `catalog.json` records.
#[pyfunction]
#[pyo3(signature = (grammar, depth, level="l1", alternate=false))]
fn catalog<'py>(
    py: Python<'py>,
    grammar: &str,
    depth: usize,
    level: &str,
    alternate: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = spec(grammar, alternate)?;
    let level = parse_level(level)?;
    let docs: Vec<CatalogEntryDoc> = py.detach(|| {
        let c = build_catalog(
            spec,
            depth,
            CatalogOptions {
                label_sensitive: false,
                parallel: true,
            },
        );
        c.representatives(level)
            .into_iter()
            .map(CatalogEntryDoc::from)
            .collect()
    });
    to_py(py, &docs)
}

#[pyfunction]
#[pyo3(signature = (grammar, depth=1, alternate=false))]
fn ladder_report<'py>(
    py: Python<'py>,
    grammar: &str,
    depth: usize,
    alternate: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = spec(grammar, alternate)?;
    let r = py.detach(|| ladder_report_with(spec, depth, true));
    to_py(py, &r)
}

#[pyfunction]
fn paper_check(py: Python<'_>) -> PyResult<Bound<'_, PyAny>> {
    let r = py.detach(core_paper_check);
    to_py(py, &r)
}

/// Order of the symmetry group of a canonical solid.
#[pyfunction]
#[pyo3(signature = (shape, proper=false))]
fn symmetry_order(shape: &str, proper: bool) -> PyResult<usize> {
    let g = canonical_symmetries(parse_kind(shape)?);
    Ok(if proper {
        g.proper().order()
    } else {
        g.order()
    })
}

#[pymodule]
fn radiogram(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("GrammarError", m.py().get_type::<GrammarError>())?;
    m.add_class::<PyMove>()?;
    m.add_class::<PyDesign>()?;
    m.add_class::<PyFrame>()?;
    m.add_function(wrap_pyfunction!(labeled_count, m)?)?;
    m.add_function(wrap_pyfunction!(catalog, m)?)?;
    m.add_function(wrap_pyfunction!(ladder_report, m)?)?;
    m.add_function(wrap_pyfunction!(paper_check, m)?)?;
    m.add_function(wrap_pyfunction!(symmetry_order, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn module_drives_a_derivation() {
        pyo3::append_to_inittab!(radiogram);
        Python::initialize();
        Python::attach(|py| {
            py.run(
                cr#"
import radiogram as rg
d = rg.Design("TET_TET", "TET")
moves = d.applicable_moves()
assert len(moves) == 24
d1 = d.apply(moves[0])
assert len(d1) == 2 and len(d) == 1
assert d1.key("l1") != d.key("l1")
assert rg.Design.from_json(d1.to_json()) == d1
try:
    d1.apply(moves[0])
    raise AssertionError("face reuse accepted")
except rg.GrammarError as e:
    assert "FaceOccupied" in str(e)
twin, chiral = d1.mirror_twin()
assert not chiral and twin.key("l3") == d1.key("l3")
assert rg.symmetry_order("tet") == 24 and rg.symmetry_order("oct", proper=True) == 24
assert rg.labeled_count("tet-oct", 1, alternate=True) == 1152
assert d1.frame().node_count == 5
"#,
                None,
                None,
            )
            .inspect_err(|e| e.print(py))
            .unwrap();
        });
    }
}
