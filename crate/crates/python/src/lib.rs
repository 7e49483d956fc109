//! Python bindings for psforge.

use psforge::cli::{export as export_files, parse_rules, ExportOptions};
use psforge::eps::{parse_eps, BBox, EpsDocument, Point, TextPrimitive};
use psforge::pipeline::{build_driver_tex as driver_tex, measure_bbox as measure, Raster, RenderJob, DEFAULT_SCAN_THRESHOLD};
use psforge::placement::{place as place_box, reference_point as ref_point, AlignCode, PsfragRule, TexBox};
use psforge::psfrag::{emit_include_snippet, emit_psfrag_file, emit_psfrag_line, SnippetMode};
use psforge::tagging::{allocate_tag as alloc, substitute_labels, LabelRule, Tag};
use psforge::texgen::{format_number as fmt_number, guess_tex as guess, label_expr, NumberFormat};
use psforge::ticks::lin_ticks as ticks;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

type BoxTuple = (f64, f64, f64, f64);

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn bbox_tuple(b: &BBox) -> BoxTuple {
    (b.llx, b.lly, b.urx, b.ury)
}

fn align(code: &str) -> PyResult<AlignCode> {
    code.parse().map_err(value_err)
}

fn tex_box((width, height, depth): (f64, f64, f64)) -> PyResult<TexBox> {
    TexBox::new(width, height, depth).map_err(value_err)
}

/// One `show` label found in an EPS file.
#[pyclass(frozen, get_all, skip_from_py_object, module = "psforge")]
#[derive(Clone)]
pub struct Label {
    text: String,
    anchor: (f64, f64),
    slope_deg: f64,
    font_size: f64,
    span: (usize, usize),
}

impl From<&TextPrimitive> for Label {
    fn from(t: &TextPrimitive) -> Self {
        Label {
            text: t.text.clone(),
            anchor: (t.anchor.x, t.anchor.y),
            slope_deg: t.slope_deg,
            font_size: t.font_size_pt,
            span: (t.source_span.start, t.source_span.end),
        }
    }
}

#[pymethods]
impl Label {
    fn __repr__(&self) -> String {
        format!("Label({:?}, anchor={:?}, slope={}, size={})", self.text, self.anchor, self.slope_deg, self.font_size)
    }
}

/// A parsed EPS file that serializes back to its original bytes.
#[pyclass(name = "EpsDocument", module = "psforge")]
pub struct PyEpsDocument {
    inner: EpsDocument,
}

#[pymethods]
impl PyEpsDocument {
    #[new]
    fn new(data: &[u8]) -> PyResult<Self> {
        Ok(PyEpsDocument { inner: parse_eps(data).map_err(value_err)? })
    }

    #[staticmethod]
    fn open(path: std::path::PathBuf) -> PyResult<Self> {
        let data = std::fs::read(&path).map_err(value_err)?;
        Self::new(&data)
    }

    fn labels(&self) -> Vec<Label> {
        self.inner.text_primitives().map(Label::from).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.label_count()
    }

    #[getter]
    fn bounding_box(&self) -> BoxTuple {
        bbox_tuple(&self.inner.bounding_box())
    }

    fn set_label_text(&mut self, index: usize, text: String) -> PyResult<()> {
        let t = self
            .inner
            .text_primitives_mut()
            .nth(index)
            .ok_or_else(|| PyValueError::new_err(format!("no label {index}")))?;
        t.text = text;
        Ok(())
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.inner.to_bytes())
    }

    /// Replaces labels by tags. `rules` uses the rules-file format as a list
    /// of dicts; with no rules every label is tagged. Returns the tagged
    /// document and the psfrag file text.
    #[pyo3(signature = (rules=None))]
    fn tag(&self, py: Python<'_>, rules: Option<Bound<'_, PyAny>>) -> PyResult<(PyEpsDocument, String)> {
        let rules = match rules {
            Some(r) => {
                let json: String = py.import("json")?.call_method1("dumps", (r,))?.extract()?;
                parse_rules(&json).map_err(PyValueError::new_err)?
            }
            None => (0..self.inner.label_count()).map(LabelRule::index).collect(),
        };
        let (doc, map) = substitute_labels(&self.inner, &rules).map_err(value_err)?;
        let text = emit_psfrag_file(&map.rules()).map_err(value_err)?;
        Ok((PyEpsDocument { inner: doc }, text))
    }

    fn __repr__(&self) -> String {
        format!("EpsDocument({} labels, bbox={:?})", self.inner.label_count(), self.bounding_box())
    }
}

/// Writes BASENAME-psfrag.eps, BASENAME-psfrag.tex and the JSON manifest.
#[pyfunction]
#[pyo3(signature = (input, basename, rules_file=None, manual=false))]
fn export<'py>(
    py: Python<'py>,
    input: std::path::PathBuf,
    basename: &str,
    rules_file: Option<std::path::PathBuf>,
    manual: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let mut opts = ExportOptions { manual, ..ExportOptions::default() };
    if let Some(path) = rules_file {
        let json = std::fs::read_to_string(&path).map_err(value_err)?;
        opts.rules = parse_rules(&json).map_err(PyValueError::new_err)?;
    }
    let out = export_files(&input, basename, &opts).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("eps", out.eps_path)?;
    d.set_item("tex", out.tex_path)?;
    d.set_item("manifest", out.manifest_path)?;
    d.set_item("tags", out.tag_map.tags().map(|t| t.as_str().to_string()).collect::<Vec<_>>())?;
    Ok(d)
}

#[pyfunction]
fn allocate_tag(index: usize) -> String {
    alloc(index).as_str().to_string()
}

#[pyfunction]
#[pyo3(signature = (x, decimals=0))]
fn format_number(x: f64, decimals: u8) -> PyResult<String> {
    fmt_number(x, NumberFormat::new(decimals, true).map_err(value_err)?).map_err(value_err)
}

/// LaTeX for a label as it appears in the figure, e.g. `"1.0"` -> `"$1.0$"`.
#[pyfunction]
fn guess_tex(label: &str) -> String {
    guess(&label_expr(label))
}

/// `(position, label or None)` pairs.
#[pyfunction]
#[pyo3(signature = (start, stop, step=None, minors=0))]
fn lin_ticks(start: f64, stop: f64, step: Option<f64>, minors: usize) -> PyResult<Vec<(f64, Option<String>)>> {
    let t = ticks(start, stop, step, minors).map_err(value_err)?;
    Ok(t.iter().map(|t| (t.position, t.label_text())).collect())
}

/// Reference point of a `(width, height, depth)` box for an alignment code.
#[pyfunction]
fn reference_point(tex_box_dims: (f64, f64, f64), code: &str) -> PyResult<(f64, f64)> {
    let p = ref_point(&tex_box(tex_box_dims)?, align(code)?);
    Ok((p.x, p.y))
}

fn build_rule(tag: &str, latex: &str, texpos: &str, pspos: Option<&str>, scale: f64, rotation: f64) -> PyResult<PsfragRule> {
    let texpos = align(texpos)?;
    let pspos = pspos.map(align).transpose()?.unwrap_or(texpos);
    Ok(PsfragRule::new(Tag::new(tag).map_err(value_err)?, latex, texpos)
        .with_pspos(pspos)
        .with_scale(scale)
        .with_rotation(rotation))
}

/// Transform `(a, b, c, d, e, f)` and bounding box of a LaTeX box placed
/// over a label.
#[pyfunction]
#[pyo3(signature = (tex_box_dims, anchor, label_box, slope, texpos, pspos=None, scale=1.0, rotation=0.0))]
#[allow(clippy::too_many_arguments)]
fn place(
    tex_box_dims: (f64, f64, f64),
    anchor: (f64, f64),
    label_box: (f64, f64, f64),
    slope: f64,
    texpos: &str,
    pspos: Option<&str>,
    scale: f64,
    rotation: f64,
) -> PyResult<([f64; 6], BoxTuple)> {
    let rule = build_rule("aA", "", texpos, pspos, scale, rotation)?;
    let p = place_box(&tex_box(tex_box_dims)?, Point::new(anchor.0, anchor.1), &tex_box(label_box)?, slope, &rule)
        .map_err(value_err)?;
    Ok((p.transform.to_array(), bbox_tuple(&p.placed_bbox)))
}

#[pyfunction]
#[pyo3(signature = (tag, latex, texpos="Bl", pspos=None, scale=1.0, rotation=0.0))]
fn psfrag_line(tag: &str, latex: &str, texpos: &str, pspos: Option<&str>, scale: f64, rotation: f64) -> PyResult<String> {
    Ok(emit_psfrag_line(&build_rule(tag, latex, texpos, pspos, scale, rotation)?))
}

#[pyfunction]
#[pyo3(signature = (basename, mode="psfrag-env"))]
fn include_snippet(basename: &str, mode: &str) -> PyResult<String> {
    let mode: SnippetMode = mode.parse().map_err(value_err)?;
    Ok(emit_include_snippet(basename, mode))
}

/// Ink bounding box in points of a grey raster given as rows of values in
/// `[0, 1]`, top row first.
#[pyfunction]
#[pyo3(signature = (rows, dpi, threshold=DEFAULT_SCAN_THRESHOLD))]
fn measure_bbox(rows: Vec<Vec<f64>>, dpi: f64, threshold: f64) -> PyResult<BoxTuple> {
    let width = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != width) {
        return Err(PyValueError::new_err("rows differ in length"));
    }
    let height = rows.len();
    let raster = Raster::new(width, height, rows.into_iter().flatten().collect())
        .ok_or_else(|| PyValueError::new_err("empty raster"))?;
    Ok(bbox_tuple(&measure(&raster, dpi, threshold).map_err(value_err)?))
}

/// The LaTeX driver document the merge step compiles.
#[pyfunction]
#[pyo3(signature = (basename, eps, tex, graphics_options="", preamble=""))]
fn build_driver_tex(basename: &str, eps: std::path::PathBuf, tex: std::path::PathBuf, graphics_options: &str, preamble: &str) -> String {
    let mut job = RenderJob::new(basename, eps, tex);
    job.include_graphics_options = graphics_options.to_string();
    job.tex_preamble = preamble.to_string();
    driver_tex(&job)
}

#[pymodule(name = "psforge")]
fn psforge_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEpsDocument>()?;
    m.add_class::<Label>()?;
    m.add_function(wrap_pyfunction!(export, m)?)?;
    m.add_function(wrap_pyfunction!(allocate_tag, m)?)?;
    m.add_function(wrap_pyfunction!(format_number, m)?)?;
    m.add_function(wrap_pyfunction!(guess_tex, m)?)?;
    m.add_function(wrap_pyfunction!(lin_ticks, m)?)?;
    m.add_function(wrap_pyfunction!(reference_point, m)?)?;
    m.add_function(wrap_pyfunction!(place, m)?)?;
    m.add_function(wrap_pyfunction!(psfrag_line, m)?)?;
    m.add_function(wrap_pyfunction!(include_snippet, m)?)?;
    m.add_function(wrap_pyfunction!(measure_bbox, m)?)?;
    m.add_function(wrap_pyfunction!(build_driver_tex, m)?)?;
    Ok(())
}
