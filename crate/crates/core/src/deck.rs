//! Folding the flat cell list into a slide deck.
//!
//! Slide types drive the fold:
//!
//! | type       | effect                                                        |
//! |------------|---------------------------------------------------------------|
//! | `slide`    | opens a new top-level slide                                   |
//! | `subslide` | opens a sub-slide under the current top-level slide           |
//! | `fragment` | appends a block one reveal step after the current maximum     |
//! | `-`        | appends a block at the current maximum reveal step            |
//! | `skip`     | excluded                                                      |
//! | `notes`    | appended to the narration of the current slide or sub-slide   |
//!
//! Any non-skip cell that arrives before a slide is open opens an implicit
//! first slide and records a diagnostic.

use std::collections::{BTreeMap, HashSet};

use crate::diagnostics::Diagnostic;
use crate::notebook::{Attachment, Cell, CellKind, SlideType};
use crate::transform::headings;

const NARRATION_SEPARATOR: &str = "\n\n";

#[derive(Debug, thiserror::Error)]
pub enum MetaError {
    #[error(
        "cell {cell}: no title found; the first markdown cell must contain a level-1 heading \
         (`# Title`), optionally followed by `##`/`###` lines for the presenter and date"
    )]
    NoTitle { cell: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CourseMeta {
    pub title: String,
    /// Presenter, date and any further heading lines, in order.
    pub subtitles: Vec<String>,
    pub source_cell_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    Prose,
    CodeCell,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentBlock {
    pub cell_index: usize,
    pub kind: BlockKind,
    /// 0 is visible on entry; `n >= 1` is revealed by the n-th advance.
    pub reveal_step: u32,
    pub source: String,
    pub attachments: BTreeMap<String, Attachment>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slide {
    /// 1-based, counted among siblings.
    pub ordinal: usize,
    pub title: String,
    pub blocks: Vec<ContentBlock>,
    pub subslides: Vec<Slide>,
    pub narration: String,
}

impl Slide {
    fn new(ordinal: usize) -> Self {
        Self {
            ordinal,
            title: String::new(),
            blocks: Vec::new(),
            subslides: Vec::new(),
            narration: String::new(),
        }
    }

    pub fn max_reveal_step(&self) -> u32 {
        self.blocks.last().map_or(0, |b| b.reveal_step)
    }

    fn push_block(&mut self, cell: &Cell, reveal_step: u32) {
        if self.blocks.is_empty() && cell.kind == CellKind::Markdown {
            self.title = slide_title(&cell.source);
        }
        self.blocks.push(ContentBlock {
            cell_index: cell.index,
            kind: match cell.kind {
                CellKind::Markdown => BlockKind::Prose,
                CellKind::Code => BlockKind::CodeCell,
            },
            reveal_step,
            source: cell.source.clone(),
            attachments: cell.attachments.clone(),
        });
    }

    fn append_narration(&mut self, text: &str) {
        if !self.narration.is_empty() {
            self.narration.push_str(NARRATION_SEPARATOR);
        }
        self.narration.push_str(text);
    }

    /// This slide's narration followed by each sub-slide's, skipping empty
    /// ones. Audio is produced per top-level slide from this text.
    pub fn rolled_up_narration(&self) -> String {
        std::iter::once(self.narration.as_str())
            .chain(self.subslides.iter().map(|s| s.narration.as_str()))
            .filter(|n| !n.trim().is_empty())
            .collect::<Vec<_>>()
            .join(NARRATION_SEPARATOR)
    }
}

#[derive(Debug, Clone)]
pub struct Deck {
    pub meta: CourseMeta,
    pub slides: Vec<Slide>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Reads the course title and subtitles from the title cell.
pub fn extract_meta(first_cell: &Cell) -> Result<CourseMeta, MetaError> {
    let mut title = None;
    let mut subtitles = Vec::new();
    for (level, text) in headings(&first_cell.source) {
        match (title.is_some(), level) {
            (false, 1) if !text.is_empty() => title = Some(text),
            (true, 2 | 3) => subtitles.push(text),
            _ => {}
        }
    }
    let title = title.ok_or(MetaError::NoTitle {
        cell: first_cell.index,
    })?;
    Ok(CourseMeta {
        title,
        subtitles,
        source_cell_index: first_cell.index,
    })
}

/// Folds cells (without the title cell) into a deck.
pub fn build_deck(cells: &[Cell], meta: CourseMeta) -> Deck {
    let mut slides: Vec<Slide> = Vec::new();
    let mut in_subslide = false;
    let mut diagnostics = Vec::new();

    for cell in cells {
        if cell.slide_type == SlideType::Skip {
            continue;
        }
        if cell.slide_type == SlideType::Slide {
            let mut slide = Slide::new(slides.len() + 1);
            slide.push_block(cell, 0);
            slides.push(slide);
            in_subslide = false;
            continue;
        }

        if slides.is_empty() {
            diagnostics.push(Diagnostic::warning(
                Some(cell.index),
                format!(
                    "cell is labeled \"{}\" but no slide is open yet; opened an implicit first slide",
                    cell.slide_type.as_str()
                ),
            ));
            slides.push(Slide::new(1));
        }
        let top = slides.last_mut().expect("a slide is open");

        if cell.slide_type == SlideType::SubSlide {
            let mut sub = Slide::new(top.subslides.len() + 1);
            sub.push_block(cell, 0);
            top.subslides.push(sub);
            in_subslide = true;
            continue;
        }

        let target = if in_subslide {
            top.subslides.last_mut().expect("a sub-slide is open")
        } else {
            top
        };
        match cell.slide_type {
            SlideType::Fragment => {
                let step = target.max_reveal_step() + 1;
                target.push_block(cell, step);
            }
            SlideType::Inline => {
                let step = target.max_reveal_step();
                target.push_block(cell, step);
            }
            SlideType::Notes => target.append_narration(&cell.source),
            SlideType::Slide | SlideType::SubSlide | SlideType::Skip => unreachable!(),
        }
    }

    if slides.is_empty() {
        diagnostics.push(Diagnostic::warning(
            None,
            "the notebook produced no slides (every cell after the title is skipped)",
        ));
    }

    Deck {
        meta,
        slides,
        diagnostics,
    }
}

/// Title of a slide: the first level-1 or level-2 heading of its first block.
fn slide_title(source: &str) -> String {
    headings(source)
        .into_iter()
        .find(|(level, _)| *level <= 2)
        .map(|(_, text)| text)
        .unwrap_or_default()
}

/// Strips everything outside `[A-Za-z0-9]`, keeping case.
pub fn sanitize_audio_name(title: &str) -> String {
    title.chars().filter(char::is_ascii_alphanumeric).collect()
}

/// Hands out audio file names for narrated slides, keeping them unique
/// within one deck.
#[derive(Debug, Default)]
pub struct AudioNamer {
    taken: HashSet<String>,
}

impl AudioNamer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sanitized title, or `Slide{ordinal}` when nothing survives. The
    /// ordinal is appended (repeatedly, if needed) on collision.
    pub fn name(&mut self, slide: &Slide) -> String {
        let mut name = sanitize_audio_name(&slide.title);
        if name.is_empty() {
            name = "Slide".to_string();
            name.push_str(&slide.ordinal.to_string());
        }
        while self.taken.contains(&name) {
            name.push_str(&slide.ordinal.to_string());
        }
        self.taken.insert(name.clone());
        name
    }
}

/// Name for a single narrated slide, given the names already used by
/// earlier slides of the same deck.
pub fn slide_audio_name<'a>(slide: &Slide, earlier: impl IntoIterator<Item = &'a str>) -> String {
    let mut namer = AudioNamer {
        taken: earlier.into_iter().map(str::to_owned).collect(),
    };
    namer.name(slide)
}
