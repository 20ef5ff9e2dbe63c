//! Shared helpers for the integration tests: a reference deck fold written
//! independently of `build_deck`, an MP3 decoder, and an HTML URL scanner.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};

use nbglide::deck::{BlockKind, Deck};
use nbglide::{Cell, CellKind, SlideType};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// One visible block as placed by a fold: (slide ordinal, sub-slide ordinal
/// or 0, cell index, reveal step).
pub type Placement = (usize, usize, usize, u32);

#[derive(Debug, PartialEq, Eq)]
pub struct FoldSummary {
    pub slide_count: usize,
    pub placements: Vec<Placement>,
    /// Narration per (slide, sub-slide) with non-empty text.
    pub narrations: BTreeMap<(usize, usize), String>,
}

/// Closed-form fold. Each visible cell's slide is the number of `slide`
/// cells up to and including it (offset by one when the first visible cell
/// is not a slide); its sub-slide is the number of `subslide` cells since
/// the last `slide`. A block's reveal step is the number of fragments in
/// its group up to and including it.
pub fn reference_fold(cells: &[Cell]) -> FoldSummary {
    let visible: Vec<&Cell> = cells.iter().filter(|c| c.slide_type != SlideType::Skip).collect();
    let implicit = visible
        .first()
        .is_some_and(|c| c.slide_type != SlideType::Slide);

    let mut groups: Vec<(usize, usize, &Cell)> = Vec::new();
    for (i, cell) in visible.iter().enumerate() {
        let slides_so_far = visible[..=i]
            .iter()
            .filter(|c| c.slide_type == SlideType::Slide)
            .count();
        let top = slides_so_far + usize::from(implicit);
        let last_slide = visible[..=i]
            .iter()
            .rposition(|c| c.slide_type == SlideType::Slide);
        let from = last_slide.map_or(0, |p| p + 1);
        let sub = if cell.slide_type == SlideType::Slide {
            0
        } else {
            visible[from..=i]
                .iter()
                .filter(|c| c.slide_type == SlideType::SubSlide)
                .count()
        };
        groups.push((top, sub, cell));
    }

    let slide_count = groups.iter().map(|g| g.0).max().unwrap_or(0);
    let mut placements = Vec::new();
    let mut narrations: BTreeMap<(usize, usize), Vec<&str>> = BTreeMap::new();
    for (i, &(top, sub, cell)) in groups.iter().enumerate() {
        if cell.slide_type == SlideType::Notes {
            narrations.entry((top, sub)).or_default().push(&cell.source);
            continue;
        }
        let fragments = groups[..=i]
            .iter()
            .filter(|g| g.0 == top && g.1 == sub && g.2.slide_type == SlideType::Fragment)
            .count() as u32;
        placements.push((top, sub, cell.index, fragments));
    }

    FoldSummary {
        slide_count,
        placements,
        narrations: narrations
            .into_iter()
            .map(|(k, v)| (k, v.join("\n\n")))
            .filter(|(_, v)| !v.is_empty())
            .collect(),
    }
}

/// The same summary read off a built deck.
pub fn summarize(deck: &Deck) -> FoldSummary {
    let mut placements = Vec::new();
    let mut narrations = BTreeMap::new();
    for slide in &deck.slides {
        for b in &slide.blocks {
            placements.push((slide.ordinal, 0, b.cell_index, b.reveal_step));
        }
        if !slide.narration.is_empty() {
            narrations.insert((slide.ordinal, 0), slide.narration.clone());
        }
        for sub in &slide.subslides {
            for b in &sub.blocks {
                placements.push((slide.ordinal, sub.ordinal, b.cell_index, b.reveal_step));
            }
            if !sub.narration.is_empty() {
                narrations.insert((slide.ordinal, sub.ordinal), sub.narration.clone());
            }
        }
    }
    FoldSummary {
        slide_count: deck.slides.len(),
        placements,
        narrations,
    }
}

pub fn block_kinds_match(deck: &Deck, cells: &[Cell]) -> bool {
    deck.slides
        .iter()
        .flat_map(|s| s.blocks.iter().chain(s.subslides.iter().flat_map(|t| t.blocks.iter())))
        .all(|b| {
            let cell = &cells[b.cell_index];
            matches!(
                (b.kind, cell.kind),
                (BlockKind::Prose, CellKind::Markdown) | (BlockKind::CodeCell, CellKind::Code)
            )
        })
}

pub fn random_cells(rng: &mut StdRng, max_len: usize) -> Vec<Cell> {
    let len = rng.random_range(0..=max_len);
    (0..len)
        .map(|index| {
            let slide_type = SlideType::ALL[rng.random_range(0..SlideType::ALL.len())];
            let kind = if rng.random_bool(0.7) {
                CellKind::Markdown
            } else {
                CellKind::Code
            };
            let heading = if rng.random_bool(0.5) { "# " } else { "" };
            Cell {
                index,
                kind,
                source: format!("{heading}cell {index} {}", rng.random_range(0..1000)),
                slide_type,
                attachments: BTreeMap::new(),
            }
        })
        .collect()
}

pub fn seeded(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Decodes an MP3 fully, returning (decoded sample frames, sample rate,
/// peak absolute sample).
pub fn decode_mp3(bytes: &[u8]) -> Result<(u64, u32, f32), String> {
    use symphonia::core::audio::SampleBuffer;
    use symphonia::core::codecs::DecoderOptions;
    use symphonia::core::errors::Error;
    use symphonia::core::formats::FormatOptions;
    use symphonia::core::io::MediaSourceStream;
    use symphonia::core::meta::MetadataOptions;
    use symphonia::core::probe::Hint;

    let source = std::io::Cursor::new(bytes.to_vec());
    let stream = MediaSourceStream::new(Box::new(source), Default::default());
    let mut hint = Hint::new();
    hint.with_extension("mp3");
    let probed = symphonia::default::get_probe()
        .format(&hint, stream, &FormatOptions::default(), &MetadataOptions::default())
        .map_err(|e| format!("probe: {e}"))?;
    let mut format = probed.format;
    let track = format.default_track().ok_or("no track")?.clone();
    let mut decoder = symphonia::default::get_codecs()
        .make(&track.codec_params, &DecoderOptions::default())
        .map_err(|e| format!("codec: {e}"))?;
    let sample_rate = track.codec_params.sample_rate.ok_or("no sample rate")?;

    let mut frames = 0u64;
    let mut peak = 0f32;
    loop {
        let packet = match format.next_packet() {
            Ok(p) => p,
            Err(Error::IoError(e)) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(format!("packet: {e}")),
        };
        let decoded = decoder.decode(&packet).map_err(|e| format!("decode: {e}"))?;
        let mut buf = SampleBuffer::<f32>::new(decoded.capacity() as u64, *decoded.spec());
        buf.copy_interleaved_ref(decoded);
        frames += (buf.samples().len() / track.codec_params.channels.map_or(1, |c| c.count())) as u64;
        peak = buf.samples().iter().fold(peak, |p, s| p.max(s.abs()));
    }
    if frames == 0 {
        return Err("no audio decoded".into());
    }
    Ok((frames, sample_rate, peak))
}

/// Every URL-like value in an HTML document: URL-bearing attributes of
/// real elements (script and style bodies excluded) plus any `scheme://`
/// string anywhere in the text, inline scripts included.
pub fn scan_urls(html: &str) -> HashSet<String> {
    let mut found = HashSet::new();
    let lower = html.to_ascii_lowercase();
    let mut i = 0;
    while let Some(off) = html[i..].find('<') {
        let start = i + off;
        let Some(end_off) = html[start..].find('>') else { break };
        let end = start + end_off;
        let tag = &html[start + 1..end];
        let name: String = tag
            .chars()
            .take_while(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        if !name.is_empty() {
            for (attr, value) in attributes(tag) {
                if matches!(
                    attr.as_str(),
                    "src" | "href" | "poster" | "action" | "formaction" | "data" | "cite"
                        | "srcset" | "background"
                ) || (attr.starts_with("data-") && value.contains(['/', ':']))
                {
                    found.insert(value);
                }
            }
        }
        i = end + 1;
        if name == "script" || name == "style" {
            let close = format!("</{name}");
            match lower[i..].find(&close) {
                Some(c) => i += c,
                None => break,
            }
        }
    }

    let mut rest = html;
    while let Some(pos) = rest.find("://") {
        let begin = rest[..pos]
            .rfind(|c: char| !(c.is_ascii_alphanumeric() || c == '+' || c == '-' || c == '.'))
            .map_or(0, |b| b + 1);
        let end = rest[pos..]
            .find(|c: char| c.is_whitespace() || matches!(c, '"' | '\'' | '<' | '>' | ')' | '\\'))
            .map_or(rest.len(), |e| pos + e);
        found.insert(rest[begin..end].to_string());
        rest = &rest[end.max(pos + 3)..];
    }
    found
}

fn attributes(tag: &str) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let bytes = tag.as_bytes();
    let mut i = tag.find(|c: char| c.is_whitespace()).unwrap_or(tag.len());
    while i < bytes.len() {
        while i < bytes.len() && (bytes[i] as char).is_whitespace() {
            i += 1;
        }
        let name_start = i;
        while i < bytes.len() && !matches!(bytes[i], b'=' | b' ' | b'\n' | b'\t' | b'/') {
            i += 1;
        }
        let name = tag[name_start..i].to_ascii_lowercase();
        if i < bytes.len() && bytes[i] == b'=' {
            i += 1;
            let value = match bytes.get(i) {
                Some(&q @ (b'"' | b'\'')) => {
                    let close = tag[i + 1..].find(q as char).map_or(tag.len(), |c| i + 1 + c);
                    let v = &tag[i + 1..close.min(tag.len())];
                    i = close + 1;
                    v
                }
                _ => {
                    let s = i;
                    while i < bytes.len() && !(bytes[i] as char).is_whitespace() {
                        i += 1;
                    }
                    &tag[s..i]
                }
            };
            out.push((name, value.replace("&amp;", "&")));
        } else {
            i += 1;
        }
    }
    out
}

pub fn notebook_json(cells: &[(&str, &str, &str)]) -> String {
    let cells: Vec<_> = cells
        .iter()
        .map(|(kind, slide_type, source)| {
            serde_json::json!({
                "cell_type": kind,
                "metadata": {"slideshow": {"slide_type": slide_type}},
                "source": source,
                "outputs": [],
            })
        })
        .collect();
    serde_json::json!({"nbformat": 4, "nbformat_minor": 5, "metadata": {}, "cells": cells}).to_string()
}
