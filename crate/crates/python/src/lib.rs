//! Python bindings for the course compiler.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nbglide_core::deck::{sanitize_audio_name, BlockKind};
use nbglide_core::emit::manifest_json;
use nbglide_core::notebook::SlideType;
use nbglide_core::transform::WidgetIds;
use nbglide_core::{BuildConfig, Cell, CellKind};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

create_exception!(nbglide, NbglideError, PyException);

fn build_error(e: impl std::fmt::Display) -> PyErr {
    NbglideError::new_err(e.to_string())
}

/// One revealable piece of a slide.
#[pyclass(module = "nbglide", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
pub struct Block {
    cell_index: usize,
    /// "prose" or "code".
    kind: &'static str,
    reveal_step: u32,
    source: String,
}

#[pyclass(module = "nbglide", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
pub struct Slide {
    ordinal: usize,
    title: String,
    narration: String,
    blocks: Vec<Block>,
    subslides: Vec<Slide>,
}

impl From<&nbglide_core::Slide> for Slide {
    fn from(s: &nbglide_core::Slide) -> Self {
        Self {
            ordinal: s.ordinal,
            title: s.title.clone(),
            narration: s.narration.clone(),
            blocks: s
                .blocks
                .iter()
                .map(|b| Block {
                    cell_index: b.cell_index,
                    kind: match b.kind {
                        BlockKind::Prose => "prose",
                        BlockKind::CodeCell => "code",
                    },
                    reveal_step: b.reveal_step,
                    source: b.source.clone(),
                })
                .collect(),
            subslides: s.subslides.iter().map(Slide::from).collect(),
        }
    }
}

#[pymethods]
impl Slide {
    fn __repr__(&self) -> String {
        format!("Slide({}, {:?}, blocks={})", self.ordinal, self.title, self.blocks.len())
    }
}

#[pyclass(module = "nbglide", frozen, get_all)]
pub struct Deck {
    title: String,
    subtitles: Vec<String>,
    slides: Vec<Slide>,
    /// One MP3 stem per narrated slide, in slide order.
    audio_names: Vec<String>,
    diagnostics: Vec<String>,
}

#[pymethods]
impl Deck {
    fn __len__(&self) -> usize {
        self.slides.len()
    }

    fn __repr__(&self) -> String {
        format!("Deck({:?}, slides={})", self.title, self.slides.len())
    }
}

/// Parses notebook JSON text and folds it into a deck.
#[pyfunction]
#[pyo3(signature = (notebook_json, path = "notebook.ipynb"))]
fn load_deck(notebook_json: &str, path: &str) -> PyResult<Deck> {
    let deck = nbglide_core::pipeline::load_deck(notebook_json.as_bytes(), Path::new(path))
        .map_err(build_error)?;
    Ok(Deck {
        title: deck.meta.title.clone(),
        subtitles: deck.meta.subtitles.clone(),
        slides: deck.slides.iter().map(Slide::from).collect(),
        audio_names: nbglide_core::plan_audio(&deck).into_iter().map(|j| j.name).collect(),
        diagnostics: deck.diagnostics.iter().map(ToString::to_string).collect(),
    })
}

/// Title and subtitles from a title cell's markdown.
#[pyfunction]
fn extract_meta(source: &str) -> PyResult<(String, Vec<String>)> {
    let cell = Cell {
        index: 0,
        kind: CellKind::Markdown,
        source: source.to_string(),
        slide_type: SlideType::Slide,
        attachments: BTreeMap::new(),
    };
    let meta = nbglide_core::extract_meta(&cell).map_err(build_error)?;
    Ok((meta.title, meta.subtitles))
}

#[pyfunction]
fn render_markdown(source: &str) -> String {
    nbglide_core::render_markdown(source)
}

/// Swaps interaction markers for placeholders. Returns the rewritten
/// source and `(id, kind)` for each widget.
#[pyfunction]
#[pyo3(signature = (source, origin_cell = 0))]
fn replace_markers(source: &str, origin_cell: usize) -> (String, Vec<(String, &'static str)>) {
    let mut ids = WidgetIds::new();
    let (text, widgets, _) = nbglide_core::replace_markers(source, origin_cell, &mut ids);
    let widgets = widgets.into_iter().map(|w| (w.id, w.kind.as_str())).collect();
    (text, widgets)
}

#[pyfunction]
fn audio_name(title: &str) -> String {
    sanitize_audio_name(title)
}

fn config(name: &str, mute: bool, assistant: bool, output_dir: Option<PathBuf>) -> PyResult<BuildConfig> {
    if !nbglide_core::emit::is_valid_input_name(name) {
        return Err(PyValueError::new_err(format!(
            "{name:?} must be a file name without directory or .ipynb extension"
        )));
    }
    let mut cfg = BuildConfig::new(name).apply_env(|k| std::env::var(k).ok());
    cfg.mute = mute;
    cfg.assistant_enabled = assistant;
    if let Some(dir) = output_dir {
        cfg.output_dir = dir;
    }
    Ok(cfg)
}

/// Builds the course HTML in memory. Returns `(html, manifest_json)`.
#[pyfunction]
#[pyo3(signature = (notebook_json, name = "course", mute = true, assistant = true))]
fn build_html(
    py: Python<'_>,
    notebook_json: &str,
    name: &str,
    mute: bool,
    assistant: bool,
) -> PyResult<(String, String)> {
    let cfg = config(name, mute, assistant, None)?;
    let path = PathBuf::from(format!("{name}.ipynb"));
    let doc = py
        .detach(|| nbglide_core::pipeline::build_document(notebook_json.as_bytes(), &path, &cfg))
        .map_err(build_error)?;
    Ok((doc.html, manifest_json(&doc.manifest)))
}

/// Compiles a notebook file and writes the output tree. Returns the paths
/// written.
#[pyfunction]
#[pyo3(signature = (notebook, output_dir = None, mute = false, assistant = true))]
fn compile(
    py: Python<'_>,
    notebook: PathBuf,
    output_dir: Option<PathBuf>,
    mute: bool,
    assistant: bool,
) -> PyResult<Vec<PathBuf>> {
    let name = notebook
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| PyValueError::new_err("notebook path has no file name"))?
        .to_string();
    let output_dir = output_dir.or_else(|| notebook.parent().map(|p| p.join("output")));
    let cfg = config(&name, mute, assistant, output_dir)?;
    let report = py
        .detach(|| nbglide_core::compile(&notebook, &cfg))
        .map_err(build_error)?;
    Ok(report.written)
}

#[pymodule]
fn nbglide(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("BUNDLED_EXAMPLE", nbglide_core::BUNDLED_EXAMPLE)?;
    m.add("NbglideError", m.py().get_type::<NbglideError>())?;
    m.add_class::<Block>()?;
    m.add_class::<Slide>()?;
    m.add_class::<Deck>()?;
    m.add_function(wrap_pyfunction!(load_deck, m)?)?;
    m.add_function(wrap_pyfunction!(extract_meta, m)?)?;
    m.add_function(wrap_pyfunction!(render_markdown, m)?)?;
    m.add_function(wrap_pyfunction!(replace_markers, m)?)?;
    m.add_function(wrap_pyfunction!(audio_name, m)?)?;
    m.add_function(wrap_pyfunction!(build_html, m)?)?;
    m.add_function(wrap_pyfunction!(compile, m)?)?;
    Ok(())
}
