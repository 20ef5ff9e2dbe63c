//! Markdown rendering, interaction markers, and runnable code blocks.
//!
//! Authors drop `<div><!--Course_Text--></div>` or
//! `<div><!--Course_Code--></div>` into a markdown cell to ask the learner
//! for free text or code. The markers are swapped for placeholder elements
//! before the markdown is rendered; the client runtime turns the
//! placeholders into live inputs.

use std::collections::BTreeMap;
use std::ops::Range;
use std::sync::LazyLock;

use pulldown_cmark::{CowStr, Event, HeadingLevel, Options, Parser, Tag, TagEnd};
use regex::Regex;

use crate::diagnostics::Diagnostic;
use crate::notebook::{Attachment, Cell, CellKind};

pub const TEXT_MARKER: &str = "<div><!--Course_Text--></div>";
pub const CODE_MARKER: &str = "<div><!--Course_Code--></div>";
const TEXT_COMMENT: &str = "<!--Course_Text-->";
const CODE_COMMENT: &str = "<!--Course_Code-->";

static SCRIPT_ELEMENT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?is)<script\b[^>]*>.*?</script\s*>").unwrap());
static SCRIPT_TAG: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?is)</?script\b[^>]*>").unwrap());
static NEAR_MISS: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)<!--\s*course_(text|code)\s*-->").unwrap());

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WidgetKind {
    TextInput,
    CodeInput,
}

impl WidgetKind {
    /// Value of the placeholder's `data-kind` attribute.
    pub fn as_str(self) -> &'static str {
        match self {
            WidgetKind::TextInput => "text",
            WidgetKind::CodeInput => "code",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Widget {
    pub id: String,
    pub kind: WidgetKind,
    pub origin_cell: usize,
}

impl Widget {
    pub fn placeholder(&self) -> String {
        format!(
            r#"<div class="course-input" data-widget="{}" data-kind="{}"></div>"#,
            self.id,
            self.kind.as_str()
        )
    }
}

/// Sequential `w1`, `w2`, ... ids, shared by every widget and runnable block
/// of one build.
#[derive(Debug, Default)]
pub struct WidgetIds {
    next: usize,
}

impl WidgetIds {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn allocate(&mut self) -> String {
        self.next += 1;
        format!("w{}", self.next)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedBlock {
    pub html: String,
    pub widgets: Vec<Widget>,
    pub runnable: bool,
    /// Id carried by a runnable code block.
    pub runnable_id: Option<String>,
}

/// Renders CommonMark (plus tables) to HTML with `<script>` elements removed.
pub fn render_markdown(source: &str) -> String {
    render_prose(source, &BTreeMap::new()).0
}

/// Swaps every exact marker outside code spans and code blocks for a
/// placeholder element. Near-miss spellings are left alone and reported;
/// a bare marker comment without its `<div>` wrapper is removed and reported.
pub fn replace_markers(
    source: &str,
    origin_cell: usize,
    ids: &mut WidgetIds,
) -> (String, Vec<Widget>, Vec<Diagnostic>) {
    let code = code_ranges(source);
    let in_code = |at: usize| code.iter().any(|r| r.contains(&at));

    let mut out = String::with_capacity(source.len());
    let mut widgets = Vec::new();
    let mut diagnostics = Vec::new();
    let mut rest = 0;

    while let Some((at, marker, kind)) = next_marker(source, rest, &in_code) {
        out.push_str(&source[rest..at]);
        match kind {
            Some(kind) => {
                let widget = Widget {
                    id: ids.allocate(),
                    kind,
                    origin_cell,
                };
                out.push_str(&widget.placeholder());
                widgets.push(widget);
            }
            None => diagnostics.push(Diagnostic::warning(
                Some(origin_cell),
                format!("removed {marker} without its <div> wrapper; use `<div>{marker}</div>`"),
            )),
        }
        rest = at + marker.len();
    }
    out.push_str(&source[rest..]);

    for m in NEAR_MISS.find_iter(&out) {
        if m.as_str() != TEXT_COMMENT && m.as_str() != CODE_COMMENT {
            diagnostics.push(Diagnostic::warning(
                Some(origin_cell),
                format!(
                    "`{}` looks like an input marker but is not spelled exactly; it was left as is",
                    m.as_str()
                ),
            ));
        }
    }

    (out, widgets, diagnostics)
}

/// Earliest marker at or after `from` that is not inside code. Returns the
/// offset, the matched text, and the widget kind (`None` for a bare comment).
fn next_marker(
    source: &str,
    mut from: usize,
    in_code: &impl Fn(usize) -> bool,
) -> Option<(usize, &'static str, Option<WidgetKind>)> {
    const PATTERNS: [(&str, Option<WidgetKind>); 4] = [
        (TEXT_MARKER, Some(WidgetKind::TextInput)),
        (CODE_MARKER, Some(WidgetKind::CodeInput)),
        (TEXT_COMMENT, None),
        (CODE_COMMENT, None),
    ];
    loop {
        // Wrapped markers win over the bare comment they contain: the
        // wrapper starts five bytes earlier.
        let (at, pattern, kind) = PATTERNS
            .iter()
            .filter_map(|&(p, k)| source[from..].find(p).map(|i| (from + i, p, k)))
            .min_by_key(|&(at, _, _)| at)?;
        if !in_code(at) {
            return Some((at, pattern, kind));
        }
        from = at + 1;
    }
}

/// Byte ranges of inline code spans and code blocks.
fn code_ranges(source: &str) -> Vec<Range<usize>> {
    let mut ranges = Vec::new();
    for (event, range) in Parser::new_ext(source, markdown_options()).into_offset_iter() {
        match event {
            Event::Code(_) => ranges.push(range),
            Event::Start(Tag::CodeBlock(_)) => ranges.push(range),
            _ => {}
        }
    }
    ranges
}

/// Renders a markdown cell: markers first, then markdown.
pub fn transform_markdown_cell(
    source: &str,
    cell_index: usize,
    attachments: &BTreeMap<String, Attachment>,
    ids: &mut WidgetIds,
) -> (RenderedBlock, Vec<Diagnostic>) {
    let (text, widgets, mut diagnostics) = replace_markers(source, cell_index, ids);
    let (html, stripped) = render_prose(&text, attachments);
    if stripped > 0 {
        diagnostics.push(Diagnostic::warning(
            Some(cell_index),
            format!("removed {stripped} <script> element(s) from markdown"),
        ));
    }
    (
        RenderedBlock {
            html,
            widgets,
            runnable: false,
            runnable_id: None,
        },
        diagnostics,
    )
}

/// Turns a code cell into a runnable editor block prefilled with its source.
pub fn transform_code_cell(cell: &Cell, ids: &mut WidgetIds) -> RenderedBlock {
    debug_assert_eq!(cell.kind, CellKind::Code);
    runnable_block(&cell.source, ids)
}

pub fn runnable_block(source: &str, ids: &mut WidgetIds) -> RenderedBlock {
    let id = ids.allocate();
    // A newline right after `<pre>` is swallowed by HTML parsers.
    let lead = if source.starts_with('\n') { "\n" } else { "" };
    let html = format!(
        r#"<div class="course-runnable" data-widget="{id}"><pre class="course-src">{lead}{}</pre></div>"#,
        escape_html(source)
    );
    RenderedBlock {
        html,
        widgets: Vec::new(),
        runnable: true,
        runnable_id: Some(id),
    }
}

fn markdown_options() -> Options {
    Options::ENABLE_TABLES
}

fn render_prose(source: &str, attachments: &BTreeMap<String, Attachment>) -> (String, usize) {
    let events = Parser::new_ext(source, markdown_options()).map(|event| match event {
        Event::Start(Tag::Image {
            link_type,
            dest_url,
            title,
            id,
        }) => {
            let dest_url = match dest_url
                .strip_prefix("attachment:")
                .and_then(|name| attachments.get(name))
            {
                Some(a) => CowStr::from(format!("data:{};base64,{}", a.mime, a.data)),
                None => dest_url,
            };
            Event::Start(Tag::Image {
                link_type,
                dest_url,
                title,
                id,
            })
        }
        other => other,
    });
    let mut html = String::with_capacity(source.len() * 3 / 2);
    pulldown_cmark::html::push_html(&mut html, events);

    let mut stripped = SCRIPT_ELEMENT.find_iter(&html).count();
    let mut html = SCRIPT_ELEMENT.replace_all(&html, "").into_owned();
    let stray = SCRIPT_TAG.find_iter(&html).count();
    if stray > 0 {
        stripped += stray;
        html = SCRIPT_TAG.replace_all(&html, "").into_owned();
    }
    let trimmed = html.trim_end_matches('\n').len();
    html.truncate(trimmed);
    (html, stripped)
}

/// Headings of a markdown document as `(level, plain text)` pairs.
pub fn headings(source: &str) -> Vec<(u8, String)> {
    let mut out = Vec::new();
    let mut current: Option<(u8, String)> = None;
    for event in Parser::new_ext(source, markdown_options()) {
        match event {
            Event::Start(Tag::Heading { level, .. }) => {
                current = Some((heading_level(level), String::new()));
            }
            Event::End(TagEnd::Heading(_)) => {
                if let Some((level, text)) = current.take() {
                    out.push((level, text.trim().to_string()));
                }
            }
            Event::Text(t) | Event::Code(t) => {
                if let Some((_, text)) = current.as_mut() {
                    text.push_str(&t);
                }
            }
            _ => {}
        }
    }
    out
}

fn heading_level(level: HeadingLevel) -> u8 {
    match level {
        HeadingLevel::H1 => 1,
        HeadingLevel::H2 => 2,
        HeadingLevel::H3 => 3,
        HeadingLevel::H4 => 4,
        HeadingLevel::H5 => 5,
        HeadingLevel::H6 => 6,
    }
}

/// Escapes text for use in HTML content and double-quoted attributes.
pub fn escape_html(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            // Parsers fold CRLF to LF; a reference survives.
            '\r' => out.push_str("&#13;"),
            c => out.push(c),
        }
    }
    out
}
