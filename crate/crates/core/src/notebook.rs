//! nbformat 4 ingestion.
//!
//! Only markdown and code cells survive parsing. Raw cells (and any cell type
//! this module does not know) are dropped and counted, so that
//! `cells.len() + dropped == <cells in file>` always holds. Stored code-cell
//! outputs are not carried: execution happens live in the browser.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::diagnostics::Diagnostic;

#[derive(Debug, thiserror::Error)]
pub enum NotebookError {
    #[error("{path}: not a JSON document: {source}")]
    NotJson {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{path}: unsupported nbformat {found} (only nbformat 4 is accepted)")]
    UnsupportedFormat { path: PathBuf, found: String },
    #[error("{path}: notebook has no `cells` array")]
    MissingCells { path: PathBuf },
    #[error("{path}: cell {position}: {reason}")]
    InvalidCell {
        path: PathBuf,
        position: usize,
        reason: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellKind {
    Markdown,
    Code,
}

/// Per-cell slideshow annotation (`metadata.slideshow.slide_type`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlideType {
    Slide,
    SubSlide,
    Fragment,
    Skip,
    Notes,
    /// `"-"` or no annotation: shown together with the preceding content.
    Inline,
}

impl SlideType {
    pub const ALL: [SlideType; 6] = [
        SlideType::Slide,
        SlideType::SubSlide,
        SlideType::Fragment,
        SlideType::Skip,
        SlideType::Notes,
        SlideType::Inline,
    ];

    /// The nbformat vocabulary for this slide type.
    pub fn as_str(self) -> &'static str {
        match self {
            SlideType::Slide => "slide",
            SlideType::SubSlide => "subslide",
            SlideType::Fragment => "fragment",
            SlideType::Skip => "skip",
            SlideType::Notes => "notes",
            SlideType::Inline => "-",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attachment {
    pub mime: String,
    /// Base64 payload exactly as stored in the notebook.
    pub data: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    /// Position among the kept (markdown/code) cells, contiguous from 0.
    pub index: usize,
    pub kind: CellKind,
    pub source: String,
    pub slide_type: SlideType,
    pub attachments: BTreeMap<String, Attachment>,
}

#[derive(Debug, Clone)]
pub struct RawNotebook {
    pub cells: Vec<Cell>,
    pub nbformat_major: u64,
    pub source_path: PathBuf,
    /// Number of cells in the file that were not kept.
    pub dropped: usize,
    pub diagnostics: Vec<Diagnostic>,
}

impl RawNotebook {
    /// The first markdown cell, which carries the course title.
    pub fn title_cell(&self) -> Option<&Cell> {
        self.cells.iter().find(|c| c.kind == CellKind::Markdown)
    }
}

/// Parses an nbformat 4 document.
pub fn parse_notebook(bytes: &[u8], path: &Path) -> Result<RawNotebook, NotebookError> {
    let doc: Value = serde_json::from_slice(bytes).map_err(|source| NotebookError::NotJson {
        path: path.to_path_buf(),
        source,
    })?;

    let major = doc.get("nbformat").and_then(Value::as_u64);
    if major != Some(4) {
        let found = doc
            .get("nbformat")
            .map(Value::to_string)
            .unwrap_or_else(|| "<missing>".to_string());
        return Err(NotebookError::UnsupportedFormat {
            path: path.to_path_buf(),
            found,
        });
    }

    let raw_cells = doc
        .get("cells")
        .and_then(Value::as_array)
        .ok_or_else(|| NotebookError::MissingCells {
            path: path.to_path_buf(),
        })?;

    let invalid = |position: usize, reason: String| NotebookError::InvalidCell {
        path: path.to_path_buf(),
        position,
        reason,
    };

    let mut cells = Vec::with_capacity(raw_cells.len());
    let mut diagnostics = Vec::new();
    let mut dropped = 0;

    for (position, raw) in raw_cells.iter().enumerate() {
        let obj = raw
            .as_object()
            .ok_or_else(|| invalid(position, "cell is not a JSON object".into()))?;
        let cell_type = obj
            .get("cell_type")
            .and_then(Value::as_str)
            .ok_or_else(|| invalid(position, "missing `cell_type`".into()))?;
        let kind = match cell_type {
            "markdown" => CellKind::Markdown,
            "code" => CellKind::Code,
            other => {
                dropped += 1;
                diagnostics.push(Diagnostic::info(
                    None,
                    format!("dropped {other} cell at file position {position}"),
                ));
                continue;
            }
        };

        let source = join_source(obj.get("source"))
            .map_err(|reason| invalid(position, reason))?;

        let index = cells.len();
        let empty = Map::new();
        let metadata = obj.get("metadata").and_then(Value::as_object).unwrap_or(&empty);
        let (slide_type, warning) = classify(metadata);
        if let Some(warning) = warning {
            diagnostics.push(Diagnostic::warning(Some(index), warning));
        }

        cells.push(Cell {
            index,
            kind,
            source,
            slide_type,
            attachments: read_attachments(obj.get("attachments")),
        });
    }

    Ok(RawNotebook {
        cells,
        nbformat_major: 4,
        source_path: path.to_path_buf(),
        dropped,
        diagnostics,
    })
}

/// Maps a cell's metadata object to its slide type. Unknown values degrade
/// to [`SlideType::Inline`]; use [`classify_slide_type_with_diagnostic`] to
/// see the warning.
pub fn classify_slide_type(cell_metadata: &Map<String, Value>) -> SlideType {
    classify(cell_metadata).0
}

pub fn classify_slide_type_with_diagnostic(
    cell_metadata: &Map<String, Value>,
) -> (SlideType, Option<Diagnostic>) {
    let (ty, warning) = classify(cell_metadata);
    (ty, warning.map(|w| Diagnostic::warning(None, w)))
}

fn classify(metadata: &Map<String, Value>) -> (SlideType, Option<String>) {
    let value = metadata
        .get("slideshow")
        .and_then(|s| s.get("slide_type"));
    let Some(value) = value else {
        return (SlideType::Inline, None);
    };
    let ty = match value.as_str() {
        Some("slide") => SlideType::Slide,
        Some("subslide") => SlideType::SubSlide,
        Some("fragment") => SlideType::Fragment,
        Some("skip") => SlideType::Skip,
        Some("notes") => SlideType::Notes,
        Some("-") => SlideType::Inline,
        _ => {
            return (
                SlideType::Inline,
                Some(format!("unknown slide_type {value}, treating as \"-\"")),
            )
        }
    };
    (ty, None)
}

fn join_source(source: Option<&Value>) -> Result<String, String> {
    match source {
        None | Some(Value::Null) => Ok(String::new()),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Array(lines)) => lines
            .iter()
            .map(|line| {
                line.as_str()
                    .ok_or_else(|| "`source` array holds a non-string entry".to_string())
            })
            .collect(),
        Some(_) => Err("`source` is neither a string nor a list of strings".into()),
    }
}

fn read_attachments(value: Option<&Value>) -> BTreeMap<String, Attachment> {
    let Some(Value::Object(map)) = value else {
        return BTreeMap::new();
    };
    map.iter()
        .filter_map(|(name, bundle)| {
            let (mime, data) = bundle.as_object()?.iter().next()?;
            let data = match data {
                Value::String(s) => s.clone(),
                Value::Array(parts) => parts.iter().filter_map(Value::as_str).collect(),
                _ => return None,
            };
            Some((
                name.clone(),
                Attachment {
                    mime: mime.clone(),
                    data,
                },
            ))
        })
        .collect()
}
