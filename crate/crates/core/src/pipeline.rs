//! The full notebook → course build.

use std::path::{Path, PathBuf};

use crate::deck::{build_deck, extract_meta, Deck, MetaError};
use crate::diagnostics::Diagnostic;
use crate::emit::{emit_course, write_output, BuildConfig, CourseDocument};
use crate::notebook::{parse_notebook, RawNotebook};
use crate::tts::{plan_audio, synthesize_all};
use crate::{Error, Result};

#[derive(Debug)]
pub struct BuildReport {
    pub written: Vec<PathBuf>,
    pub document: CourseDocument,
    pub diagnostics: Vec<Diagnostic>,
}

/// Parses a notebook and folds it into a deck. Notebook diagnostics are
/// merged into the deck's.
pub fn load_deck(bytes: &[u8], path: &Path) -> Result<Deck> {
    let notebook = parse_notebook(bytes, path)?;
    deck_from_notebook(notebook)
}

pub fn deck_from_notebook(notebook: RawNotebook) -> Result<Deck> {
    let title_cell = notebook
        .title_cell()
        .ok_or(MetaError::NoTitle { cell: 0 })?;
    let meta = extract_meta(title_cell)?;
    let title_index = meta.source_cell_index;
    let body: Vec<_> = notebook
        .cells
        .into_iter()
        .filter(|c| c.index != title_index)
        .collect();
    let mut deck = build_deck(&body, meta);
    let mut diagnostics = notebook.diagnostics;
    diagnostics.append(&mut deck.diagnostics);
    deck.diagnostics = diagnostics;
    Ok(deck)
}

/// Builds the course document in memory: deck, audio, HTML.
pub fn build_document(bytes: &[u8], path: &Path, cfg: &BuildConfig) -> Result<CourseDocument> {
    let deck = load_deck(bytes, path)?;
    let audio = if cfg.mute {
        Vec::new()
    } else {
        synthesize_all(&plan_audio(&deck), &cfg.tts, cfg.tts_parallelism)?
    };
    let mut doc = emit_course(&deck, &audio, cfg)?;
    let mut diagnostics = deck.diagnostics;
    diagnostics.append(&mut doc.diagnostics);
    doc.diagnostics = diagnostics;
    Ok(doc)
}

/// Compiles `notebook` and writes the output tree under `cfg.output_dir`.
pub fn compile(notebook: &Path, cfg: &BuildConfig) -> Result<BuildReport> {
    let bytes = std::fs::read(notebook).map_err(|source| Error::Read {
        path: notebook.to_path_buf(),
        source,
    })?;
    let document = build_document(&bytes, notebook, cfg)?;
    let written = write_output(&document, cfg, notebook)?;
    let diagnostics = document.diagnostics.clone();
    Ok(BuildReport {
        written,
        document,
        diagnostics,
    })
}
