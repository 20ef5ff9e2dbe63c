//! Standalone course HTML and the output tree.
//!
//! A course is one HTML file plus `slides_audios/*.mp3`. The HTML carries
//! every slide as static markup (readable without JavaScript), the deck
//! manifest as embedded JSON, and the client runtime inlined. The only
//! outside references are the in-browser interpreter URL and, when enabled,
//! the assistant endpoint.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::deck::{BlockKind, Deck, Slide};
use crate::diagnostics::Diagnostic;
use crate::transform::{escape_html, runnable_block, transform_markdown_cell, WidgetIds};
use crate::tts::{self, AudioAsset, TtsBackendConfig};

pub const DEFAULT_OUTPUT_DIR: &str = "output";
pub const DEFAULT_INTERPRETER_URL: &str = "https://cdn.jsdelivr.net/pyodide/v0.27.7/full/pyodide.js";
pub const HTML_SUFFIX: &str = "_pyglide.html";

pub const ENV_INTERPRETER_URL: &str = "COURSE_INTERPRETER_URL";
pub const ENV_AI_ENDPOINT: &str = "COURSE_AI_ENDPOINT";
pub const ENV_AI_TOKEN: &str = "COURSE_AI_TOKEN";

const RUNTIME_JS: &str = include_str!("assets/runtime.js");
const COURSE_CSS: &str = include_str!("assets/course.css");

#[derive(Debug, thiserror::Error)]
pub enum EmitError {
    #[error("audio assets {found:?} do not match the narrated slides {expected:?}")]
    AudioMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("the deck has no slides; label at least one cell after the title as a slide")]
    EmptyDeck,
    #[error("could not write {}: {source}", .path.display())]
    IoFailure {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone)]
pub struct BuildConfig {
    /// Notebook file stem, without directory or extension.
    pub input_name: String,
    pub mute: bool,
    pub assistant_enabled: bool,
    pub output_dir: PathBuf,
    pub interpreter_runtime_url: String,
    pub assistant_endpoint: Option<String>,
    pub tts: TtsBackendConfig,
    pub tts_parallelism: usize,
}

impl BuildConfig {
    pub fn new(input_name: impl Into<String>) -> Self {
        Self {
            input_name: input_name.into(),
            mute: false,
            assistant_enabled: true,
            output_dir: PathBuf::from(DEFAULT_OUTPUT_DIR),
            interpreter_runtime_url: DEFAULT_INTERPRETER_URL.to_string(),
            assistant_endpoint: None,
            tts: TtsBackendConfig::default(),
            tts_parallelism: tts::DEFAULT_PARALLELISM,
        }
    }

    /// Applies `COURSE_*` environment settings on top of the defaults.
    pub fn apply_env(mut self, lookup: impl Fn(&str) -> Option<String>) -> Self {
        if let Some(url) = lookup(ENV_INTERPRETER_URL).filter(|s| !s.is_empty()) {
            self.interpreter_runtime_url = url;
        }
        if let Some(url) = lookup(ENV_AI_ENDPOINT).filter(|s| !s.is_empty()) {
            self.assistant_endpoint = Some(url);
        }
        self.tts = TtsBackendConfig::from_env(&lookup);
        self
    }

    pub fn html_file_name(&self) -> String {
        format!("{}{HTML_SUFFIX}", self.input_name)
    }
}

/// True when `name` is a bare file stem.
pub fn is_valid_input_name(name: &str) -> bool {
    !name.is_empty()
        && !name.contains(['/', '\\'])
        && name != "."
        && name != ".."
        && !name.ends_with(".ipynb")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeckManifest {
    pub title: String,
    pub subtitles: Vec<String>,
    pub slides: Vec<ManifestSlide>,
    pub assistant: ManifestAssistant,
    pub interpreter_url: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestSlide {
    pub ordinal: usize,
    pub title: String,
    pub audio: Option<String>,
    pub subslides: Vec<ManifestSlide>,
    pub widgets: Vec<ManifestWidget>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestWidget {
    pub id: String,
    pub kind: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestAssistant {
    pub enabled: bool,
    pub endpoint: Option<String>,
}

#[derive(Debug, Clone)]
pub struct CourseDocument {
    pub html: String,
    pub assets: Vec<AudioAsset>,
    pub manifest: DeckManifest,
    pub diagnostics: Vec<Diagnostic>,
}

/// Assembles the standalone HTML for a deck.
pub fn emit_course(
    deck: &Deck,
    audio: &[AudioAsset],
    cfg: &BuildConfig,
) -> Result<CourseDocument, EmitError> {
    if deck.slides.is_empty() {
        return Err(EmitError::EmptyDeck);
    }

    let planned = if cfg.mute {
        Vec::new()
    } else {
        tts::plan_audio(deck)
    };
    let expected: Vec<String> = planned.iter().map(|j| j.name.clone()).collect();
    let found: Vec<String> = audio.iter().map(|a| a.name.clone()).collect();
    if expected != found {
        return Err(EmitError::AudioMismatch { expected, found });
    }
    let audio_for = |ordinal: usize| {
        planned
            .iter()
            .find(|j| j.slide_ordinal == ordinal)
            .map(|j| tts::audio_relative_path(&j.name))
    };

    let mut ids = WidgetIds::new();
    let mut diagnostics = Vec::new();
    let mut body = String::new();
    let mut manifest_slides = Vec::with_capacity(deck.slides.len());

    write_title_slide(&mut body, deck);
    for slide in &deck.slides {
        let audio = audio_for(slide.ordinal);
        let entry = write_slide(
            &mut body,
            slide,
            &slide.ordinal.to_string(),
            false,
            audio,
            &mut ids,
            &mut diagnostics,
        );
        manifest_slides.push(entry);
    }

    let endpoint = if cfg.assistant_enabled {
        cfg.assistant_endpoint.clone()
    } else {
        None
    };
    let manifest = DeckManifest {
        title: deck.meta.title.clone(),
        subtitles: deck.meta.subtitles.clone(),
        slides: manifest_slides,
        assistant: ManifestAssistant {
            enabled: cfg.assistant_enabled,
            endpoint: endpoint.clone(),
        },
        interpreter_url: cfg.interpreter_runtime_url.clone(),
    };

    let html = assemble(deck, &body, &manifest, cfg);

    let mut allowed: BTreeSet<&str> = BTreeSet::new();
    allowed.insert(&cfg.interpreter_runtime_url);
    if let Some(endpoint) = &endpoint {
        allowed.insert(endpoint);
    }
    for reference in url_references(&html) {
        if !is_self_contained(&reference) && !allowed.contains(reference.as_str()) {
            diagnostics.push(Diagnostic::warning(
                None,
                format!("course content references an outside resource: {reference}"),
            ));
        }
    }

    Ok(CourseDocument {
        html,
        assets: audio.to_vec(),
        manifest,
        diagnostics,
    })
}

fn write_title_slide(out: &mut String, deck: &Deck) {
    out.push_str(
        "<section class=\"course-slide course-title-slide\" id=\"slide-0\" data-ordinal=\"0\">\n",
    );
    let _ = writeln!(
        out,
        "<h1 class=\"course-title\">{}</h1>",
        escape_html(&deck.meta.title)
    );
    for subtitle in &deck.meta.subtitles {
        let _ = writeln!(out, "<p class=\"course-subtitle\">{}</p>", escape_html(subtitle));
    }
    out.push_str("</section>\n");
}

fn write_slide(
    out: &mut String,
    slide: &Slide,
    path: &str,
    is_sub: bool,
    audio: Option<String>,
    ids: &mut WidgetIds,
    diagnostics: &mut Vec<Diagnostic>,
) -> ManifestSlide {
    let class = if is_sub {
        "course-subslide"
    } else {
        "course-slide"
    };
    let _ = writeln!(
        out,
        "<section class=\"{class}\" id=\"slide-{path}\" data-ordinal=\"{}\" data-title=\"{}\">",
        slide.ordinal,
        escape_html(&slide.title)
    );
    if let Some(src) = &audio {
        let _ = writeln!(
            out,
            "<audio class=\"course-audio\" controls preload=\"none\" src=\"{}\"></audio>",
            escape_html(src)
        );
    }

    let mut widgets = Vec::new();
    for block in &slide.blocks {
        let (rendered, diags) = match block.kind {
            BlockKind::Prose => {
                transform_markdown_cell(&block.source, block.cell_index, &block.attachments, ids)
            }
            BlockKind::CodeCell => (runnable_block(&block.source, ids), Vec::new()),
        };
        diagnostics.extend(diags);
        widgets.extend(rendered.widgets.iter().map(|w| ManifestWidget {
            id: w.id.clone(),
            kind: w.kind.as_str().to_string(),
        }));
        let fragment = if block.reveal_step > 0 { " fragment" } else { "" };
        let _ = writeln!(
            out,
            "<div class=\"course-block{fragment}\" data-step=\"{}\" data-cell=\"{}\">\n{}\n</div>",
            block.reveal_step, block.cell_index, rendered.html
        );
    }

    let mut subslides = Vec::new();
    for sub in &slide.subslides {
        let sub_path = format!("{path}-{}", sub.ordinal);
        subslides.push(write_slide(out, sub, &sub_path, true, None, ids, diagnostics));
    }
    out.push_str("</section>\n");

    ManifestSlide {
        ordinal: slide.ordinal,
        title: slide.title.clone(),
        audio,
        subslides,
        widgets,
    }
}

/// JSON that is safe inside a `<script>` element.
pub fn manifest_json(manifest: &DeckManifest) -> String {
    serde_json::to_string(manifest)
        .expect("manifest serializes")
        .replace('<', "\\u003c")
        .replace('>', "\\u003e")
        .replace('&', "\\u0026")
}

fn assemble(deck: &Deck, body: &str, manifest: &DeckManifest, cfg: &BuildConfig) -> String {
    let mut html = String::with_capacity(body.len() + RUNTIME_JS.len() + COURSE_CSS.len() + 2048);
    let _ = write!(
        html,
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n\
         <meta name=\"viewport\" content=\"width=device-width, initial-scale=1\">\n\
         <title>{}</title>\n<style>\n{COURSE_CSS}</style>\n</head>\n<body>\n",
        escape_html(&deck.meta.title)
    );
    html.push_str(
        "<nav class=\"course-nav\" aria-label=\"Slide navigation\">\
         <button type=\"button\" data-nav=\"prev\">Previous</button>\
         <span class=\"course-position\"></span>\
         <button type=\"button\" data-nav=\"next\">Next</button></nav>\n",
    );
    html.push_str("<main class=\"course-deck\">\n");
    html.push_str(body);
    html.push_str("</main>\n");

    if cfg.assistant_enabled {
        let endpoint_attr = manifest
            .assistant
            .endpoint
            .as_deref()
            .map(|e| format!(" data-endpoint=\"{}\"", escape_html(e)))
            .unwrap_or_default();
        let _ = write!(
            html,
            "<aside class=\"course-assistant\" id=\"course-assistant\" aria-label=\"AI assistant\"{endpoint_attr}>\n\
             <button type=\"button\" class=\"course-assistant-toggle\">Ask the assistant</button>\n\
             <div class=\"course-assistant-body\" hidden>\n\
             <div class=\"course-assistant-log\" aria-live=\"polite\"></div>\n\
             <form class=\"course-assistant-form\"><textarea rows=\"3\" placeholder=\"Ask a question about this course\"></textarea>\
             <button type=\"submit\">Send</button></form>\n\
             </div>\n</aside>\n"
        );
    }

    let _ = write!(
        html,
        "<script type=\"application/json\" id=\"course-manifest\">{}</script>\n\
         <script id=\"course-runtime\" data-interpreter-src=\"{}\">\n{RUNTIME_JS}</script>\n\
         </body>\n</html>\n",
        manifest_json(manifest),
        escape_html(&cfg.interpreter_runtime_url)
    );
    html
}

static SKIPPED_ELEMENTS: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?is)<(script|style)\b[^>]*>.*?</(script|style)\s*>").unwrap());
static TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)<[A-Za-z][^>]*>").unwrap());
static URL_ATTR: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r#"(?i)\s(src|href|poster|action|formaction|data|cite|background|data-endpoint|data-interpreter-src)\s*=\s*("([^"]*)"|'([^']*)'|([^\s>]+))"#,
    )
    .unwrap()
});

/// Values of URL-bearing attributes on every element, ignoring text inside
/// `<script>` and `<style>` bodies.
pub fn url_references(html: &str) -> Vec<String> {
    let mut refs = Vec::new();
    // Opening tags of script elements still carry attributes.
    let stripped = SKIPPED_ELEMENTS.replace_all(html, |caps: &regex::Captures| {
        let whole = caps.get(0).unwrap().as_str();
        let end = whole.find('>').map_or(whole.len(), |i| i + 1);
        whole[..end].to_string()
    });
    for tag in TAG.find_iter(&stripped) {
        for caps in URL_ATTR.captures_iter(tag.as_str()) {
            let value = caps
                .get(3)
                .or_else(|| caps.get(4))
                .or_else(|| caps.get(5))
                .map_or("", |m| m.as_str());
            refs.push(unescape_attr(value));
        }
    }
    refs
}

fn unescape_attr(value: &str) -> String {
    value
        .replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&amp;", "&")
}

/// In-document anchors, inline data, and the course's own audio.
pub fn is_self_contained(reference: &str) -> bool {
    reference.starts_with('#')
        || reference.starts_with("data:")
        || reference.starts_with(&format!("{}/", tts::AUDIO_DIR))
}

/// Writes the HTML, a copy of the source notebook, and the audio files.
/// Existing files are overwritten.
pub fn write_output(
    doc: &CourseDocument,
    cfg: &BuildConfig,
    source_notebook: &Path,
) -> Result<Vec<PathBuf>, EmitError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| EmitError::IoFailure { path, source }
    };
    let out = &cfg.output_dir;
    std::fs::create_dir_all(out).map_err(io(out))?;

    let mut written = Vec::new();

    let notebook_copy = out.join(format!("{}.ipynb", cfg.input_name));
    let same_file = match (source_notebook.canonicalize(), notebook_copy.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    };
    if !same_file {
        std::fs::copy(source_notebook, &notebook_copy).map_err(io(&notebook_copy))?;
    }
    written.push(notebook_copy);

    let html_path = out.join(cfg.html_file_name());
    std::fs::write(&html_path, &doc.html).map_err(io(&html_path))?;
    written.push(html_path);

    if !doc.assets.is_empty() {
        let audio_dir = out.join(tts::AUDIO_DIR);
        std::fs::create_dir_all(&audio_dir).map_err(io(&audio_dir))?;
        for asset in &doc.assets {
            let path = out.join(&asset.relative_path);
            std::fs::write(&path, &asset.bytes).map_err(io(&path))?;
            written.push(path);
        }
    }
    Ok(written)
}
