//! Just enough MPEG audio to write silent Layer III streams and to check
//! that backend output is a well-formed Layer III frame sequence.

use sha2::{Digest, Sha256};

/// MPEG-1 Layer III, 32 kbit/s, 48 kHz, mono, no CRC.
const SILENT_HEADER: [u8; 4] = [0xFF, 0xFB, 0x14, 0xC0];
const SILENT_FRAME_LEN: usize = 96;
const SILENT_SAMPLE_RATE: u32 = 48_000;
const SAMPLES_PER_FRAME: u32 = 1152;

pub const SILENT_FRAME_SECONDS: f64 = SAMPLES_PER_FRAME as f64 / SILENT_SAMPLE_RATE as f64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Mp3Error {
    #[error("audio is empty")]
    Empty,
    #[error("no MPEG Layer III frame at byte {0}")]
    NoFrame(usize),
    #[error("ID3 tag is truncated")]
    TruncatedTag,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mp3Info {
    pub frames: usize,
    pub sample_rate: u32,
    pub duration_secs: f64,
}

/// A silent MP3 of `seconds` rounded to the nearest whole frame (at least
/// one). When `tag` is given it is recorded as a SHA-256 in a leading ID3v2
/// tag, so that different narrations with equal length still differ.
pub fn silent_mp3(seconds: f64, tag: Option<&str>) -> Vec<u8> {
    let frames = ((seconds / SILENT_FRAME_SECONDS).round() as usize).max(1);
    let mut out = Vec::with_capacity(frames * SILENT_FRAME_LEN + 128);
    if let Some(tag) = tag {
        let digest = Sha256::digest(tag.as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        out.extend(id3_txxx("narration-sha256", &hex));
    }
    // All-zero side info: no main data bits, every granule decodes to zero.
    let mut frame = [0u8; SILENT_FRAME_LEN];
    frame[..4].copy_from_slice(&SILENT_HEADER);
    for _ in 0..frames {
        out.extend_from_slice(&frame);
    }
    out
}

fn syncsafe(n: usize) -> [u8; 4] {
    [
        ((n >> 21) & 0x7F) as u8,
        ((n >> 14) & 0x7F) as u8,
        ((n >> 7) & 0x7F) as u8,
        (n & 0x7F) as u8,
    ]
}

/// ID3v2.4 tag with a single UTF-8 TXXX frame.
fn id3_txxx(description: &str, value: &str) -> Vec<u8> {
    let mut body = vec![0x03];
    body.extend_from_slice(description.as_bytes());
    body.push(0);
    body.extend_from_slice(value.as_bytes());

    let mut frame = b"TXXX".to_vec();
    frame.extend(syncsafe(body.len()));
    frame.extend([0, 0]);
    frame.extend(body);

    let mut tag = b"ID3".to_vec();
    tag.extend([4, 0, 0]);
    tag.extend(syncsafe(frame.len()));
    tag.extend(frame);
    tag
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct FrameHeader {
    len: usize,
    sample_rate: u32,
    samples: u32,
}

fn parse_header(b: &[u8]) -> Option<FrameHeader> {
    const V1_L3: [u32; 15] = [0, 32, 40, 48, 56, 64, 80, 96, 112, 128, 160, 192, 224, 256, 320];
    const V2_L3: [u32; 15] = [0, 8, 16, 24, 32, 40, 48, 56, 64, 80, 96, 112, 128, 144, 160];

    if b.len() < 4 || b[0] != 0xFF || b[1] & 0xE0 != 0xE0 {
        return None;
    }
    let version = (b[1] >> 3) & 0x03;
    let layer = (b[1] >> 1) & 0x03;
    if version == 0b01 || layer != 0b01 {
        return None;
    }
    let bitrate_index = (b[2] >> 4) as usize;
    let rate_index = ((b[2] >> 2) & 0x03) as usize;
    if bitrate_index == 0 || bitrate_index == 15 || rate_index == 3 {
        return None;
    }
    let padding = ((b[2] >> 1) & 0x01) as usize;
    let mpeg1 = version == 0b11;
    let kbps = if mpeg1 { V1_L3 } else { V2_L3 }[bitrate_index];
    let sample_rate = match version {
        0b11 => [44_100, 48_000, 32_000][rate_index],
        0b10 => [22_050, 24_000, 16_000][rate_index],
        _ => [11_025, 12_000, 8_000][rate_index],
    };
    let (samples, coefficient) = if mpeg1 { (1152, 144) } else { (576, 72) };
    let len = (coefficient * kbps as usize * 1000) / sample_rate as usize + padding;
    Some(FrameHeader {
        len,
        sample_rate,
        samples,
    })
}

/// Walks the frame chain after an optional ID3v2 tag. Stops at the first
/// byte that does not start a complete frame; trailing data (an ID3v1 tag,
/// encoder junk) is tolerated as long as at least one frame was found.
pub fn inspect(bytes: &[u8]) -> Result<Mp3Info, Mp3Error> {
    if bytes.is_empty() {
        return Err(Mp3Error::Empty);
    }
    let mut pos = 0;
    if bytes.starts_with(b"ID3") {
        if bytes.len() < 10 {
            return Err(Mp3Error::TruncatedTag);
        }
        let size = bytes[6..10]
            .iter()
            .fold(0usize, |acc, &b| (acc << 7) | (b & 0x7F) as usize);
        let footer = if bytes[5] & 0x10 != 0 { 10 } else { 0 };
        pos = 10 + size + footer;
        if pos > bytes.len() {
            return Err(Mp3Error::TruncatedTag);
        }
    }

    let start = pos;
    let mut frames = 0;
    let mut samples = 0u64;
    let mut sample_rate = 0;
    while let Some(header) = parse_header(&bytes[pos..]) {
        if pos + header.len > bytes.len() {
            break;
        }
        frames += 1;
        samples += header.samples as u64;
        sample_rate = header.sample_rate;
        pos += header.len;
    }
    if frames == 0 {
        return Err(Mp3Error::NoFrame(start));
    }
    Ok(Mp3Info {
        frames,
        sample_rate,
        duration_secs: samples as f64 / sample_rate as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn silent_header_describes_a_96_byte_frame() {
        let h = parse_header(&SILENT_HEADER).unwrap();
        assert_eq!(h.len, SILENT_FRAME_LEN);
        assert_eq!(h.sample_rate, 48_000);
        assert_eq!(h.samples, 1152);
    }

    #[test]
    fn silent_stream_round_trips_through_inspect() {
        let bytes = silent_mp3(0.8, None);
        let info = inspect(&bytes).unwrap();
        assert_eq!(info.frames, 33);
        assert!((info.duration_secs - 0.8).abs() <= SILENT_FRAME_SECONDS / 2.0);
    }

    #[test]
    fn tagged_stream_skips_id3() {
        let a = silent_mp3(1.0, Some("hello world"));
        let b = silent_mp3(1.0, Some("goodbye world"));
        assert!(a.starts_with(b"ID3"));
        assert_ne!(a, b);
        assert_eq!(inspect(&a).unwrap().frames, inspect(&b).unwrap().frames);
        assert_eq!(a, silent_mp3(1.0, Some("hello world")));
    }

    #[test]
    fn at_least_one_frame() {
        assert_eq!(inspect(&silent_mp3(0.0, None)).unwrap().frames, 1);
    }

    #[test]
    fn rejects_garbage() {
        assert_eq!(inspect(b""), Err(Mp3Error::Empty));
        assert_eq!(inspect(b"RIFF....WAVEfmt "), Err(Mp3Error::NoFrame(0)));
        assert_eq!(inspect(b"ID3\x04\x00\x00\x00\x00\x7f\x7f"), Err(Mp3Error::TruncatedTag));
        // A lone header with no room for its frame body.
        assert!(inspect(&SILENT_HEADER).is_err());
    }

    #[test]
    fn known_header_lengths() {
        // MPEG-1 Layer III, 128 kbit/s, 44.1 kHz, unpadded: 417 bytes.
        assert_eq!(parse_header(&[0xFF, 0xFB, 0x90, 0x00]).unwrap().len, 417);
        // Same with the padding bit.
        assert_eq!(parse_header(&[0xFF, 0xFB, 0x92, 0x00]).unwrap().len, 418);
        // MPEG-2 Layer III, 64 kbit/s, 24 kHz: 72 * 64000 / 24000 = 192.
        let h = parse_header(&[0xFF, 0xF3, 0x84, 0x00]).unwrap();
        assert_eq!((h.len, h.samples, h.sample_rate), (192, 576, 24_000));
        // Layer II is not MP3.
        assert!(parse_header(&[0xFF, 0xFD, 0x90, 0x00]).is_none());
    }
}
