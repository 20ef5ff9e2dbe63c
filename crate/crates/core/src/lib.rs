//! Compile annotated Jupyter notebooks into standalone, browser-only course
//! slide decks.
//!
//! The pipeline runs in five stages, each in its own module:
//!
//! 1. [`notebook`] parses nbformat 4 JSON into an ordered [`Cell`] list.
//! 2. [`deck`] folds cells into slides, sub-slides and fragments using the
//!    `slideshow.slide_type` annotations, and collects `notes` cells as
//!    per-slide narration.
//! 3. [`transform`] renders markdown, swaps the `Course_Text` / `Course_Code`
//!    markers for widget placeholders and turns code cells into runnable
//!    editor blocks.
//! 4. [`tts`] synthesizes one MP3 per narrated top-level slide.
//! 5. [`emit`] assembles the single-file HTML course and writes the output
//!    tree.
//!
//! [`pipeline::compile`] wires the stages together; [`cli`] is the command
//! line front-end.

pub mod cli;
pub mod deck;
pub mod diagnostics;
pub mod emit;
pub mod notebook;
pub mod pipeline;
pub mod transform;
pub mod tts;

pub use deck::{build_deck, extract_meta, ContentBlock, CourseMeta, Deck, Slide};
pub use diagnostics::{Diagnostic, Severity};
pub use emit::{emit_course, write_output, BuildConfig, CourseDocument, DeckManifest};
pub use notebook::{classify_slide_type, parse_notebook, Cell, CellKind, RawNotebook, SlideType};
pub use pipeline::{compile, BuildReport};
pub use transform::{render_markdown, replace_markers, transform_code_cell, RenderedBlock, Widget};
pub use tts::{plan_audio, synthesize, AudioAsset, NarrationJob, TtsBackendConfig};

/// The file bundled with the compiler as a starting template for authors.
pub const BUNDLED_EXAMPLE_NAME: &str = "original_example";

/// Contents of the bundled example notebook.
pub const BUNDLED_EXAMPLE: &str = include_str!("assets/original_example.ipynb");

/// Top-level error for a full build.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Notebook(#[from] notebook::NotebookError),
    #[error(transparent)]
    Meta(#[from] deck::MetaError),
    #[error(transparent)]
    Tts(#[from] tts::TtsError),
    #[error(transparent)]
    Emit(#[from] emit::EmitError),
    #[error("failed to read {path}: {source}")]
    Read {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
