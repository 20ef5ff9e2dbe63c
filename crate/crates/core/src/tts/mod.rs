//! Narration audio.
//!
//! Every top-level slide with narration gets one MP3 under `slides_audios/`.
//! The narration is the slide's own `notes` text followed by its
//! sub-slides'. Synthesis goes through a pluggable backend: an external
//! command, an HTTP service, or the null backend that writes silence of
//! the expected length.

pub mod mp3;

use std::io::Read;
use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use pulldown_cmark::{Event, Parser, TagEnd};
use serde::Serialize;
use wait_timeout::ChildExt;

use crate::deck::{AudioNamer, Deck};

pub const AUDIO_DIR: &str = "slides_audios";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);
pub const DEFAULT_PARALLELISM: usize = 2;
/// Speaking rate assumed by the null backend.
pub const NULL_WORDS_PER_SECOND: f64 = 2.5;

pub const ENV_TTS_CMD: &str = "COURSE_TTS_CMD";
pub const ENV_TTS_URL: &str = "COURSE_TTS_URL";
pub const ENV_TTS_TOKEN: &str = "COURSE_TTS_TOKEN";

/// Largest response body accepted from an HTTP backend.
const MAX_AUDIO_BYTES: u64 = 256 * 1024 * 1024;

#[derive(Debug, thiserror::Error)]
pub enum TtsError {
    #[error("TTS backend failed for {job}: {detail}")]
    BackendFailure { job: String, detail: String },
    #[error("TTS backend returned unusable audio for {job}: {reason}")]
    BadAudio { job: String, reason: String },
    #[error("TTS backend timed out after {}s for {job}", .after.as_secs())]
    Timeout { job: String, after: Duration },
    #[error("invalid TTS configuration: {0}")]
    InvalidConfig(String),
    #[error("TTS scratch file error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NarrationJob {
    pub slide_ordinal: usize,
    pub name: String,
    /// Narration with markdown syntax removed.
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AudioAsset {
    pub name: String,
    pub relative_path: String,
    pub bytes: Vec<u8>,
    pub duration_hint: Option<f64>,
}

pub fn audio_relative_path(name: &str) -> String {
    format!("{AUDIO_DIR}/{name}.mp3")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TtsBackend {
    /// Shell command with `{in}` (UTF-8 text file) and `{out}` (MP3 to
    /// write) placeholders.
    CommandTemplate(String),
    HttpService {
        endpoint: String,
        token: Option<String>,
    },
    Null,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TtsBackendConfig {
    pub backend: TtsBackend,
    pub voice: String,
    /// Words per minute.
    pub rate: u32,
    pub timeout: Duration,
}

impl Default for TtsBackendConfig {
    fn default() -> Self {
        Self {
            backend: TtsBackend::Null,
            voice: "default".into(),
            rate: 150,
            timeout: DEFAULT_TIMEOUT,
        }
    }
}

impl TtsBackendConfig {
    pub fn with_backend(backend: TtsBackend) -> Self {
        Self {
            backend,
            ..Self::default()
        }
    }

    /// `COURSE_TTS_CMD` wins over `COURSE_TTS_URL`; with neither set the
    /// null backend is used.
    pub fn from_env(lookup: impl Fn(&str) -> Option<String>) -> Self {
        let backend = if let Some(cmd) = lookup(ENV_TTS_CMD).filter(|s| !s.is_empty()) {
            TtsBackend::CommandTemplate(cmd)
        } else if let Some(url) = lookup(ENV_TTS_URL).filter(|s| !s.is_empty()) {
            TtsBackend::HttpService {
                endpoint: url,
                token: lookup(ENV_TTS_TOKEN).filter(|s| !s.is_empty()),
            }
        } else {
            TtsBackend::Null
        };
        Self::with_backend(backend)
    }

    pub fn validate(&self) -> Result<(), TtsError> {
        if let TtsBackend::CommandTemplate(template) = &self.backend {
            for placeholder in ["{in}", "{out}"] {
                if !template.contains(placeholder) {
                    return Err(TtsError::InvalidConfig(format!(
                        "command template must contain {placeholder}: {template}"
                    )));
                }
            }
        }
        if self.timeout.is_zero() {
            return Err(TtsError::InvalidConfig("timeout must be positive".into()));
        }
        Ok(())
    }
}

/// One job per narrated top-level slide, in slide order.
pub fn plan_audio(deck: &Deck) -> Vec<NarrationJob> {
    let mut namer = AudioNamer::new();
    deck.slides
        .iter()
        .filter_map(|slide| {
            let text = speech_text(&slide.rolled_up_narration());
            if text.is_empty() {
                return None;
            }
            Some(NarrationJob {
                slide_ordinal: slide.ordinal,
                name: namer.name(slide),
                text,
            })
        })
        .collect()
}

/// Plain text to speak for a markdown narration: heading markers, emphasis,
/// code fences and raw HTML are dropped, block boundaries become newlines.
pub fn speech_text(markdown: &str) -> String {
    let mut raw = String::new();
    for event in Parser::new(markdown) {
        match event {
            Event::Text(t) | Event::Code(t) => raw.push_str(&t),
            Event::SoftBreak | Event::HardBreak => raw.push(' '),
            Event::End(
                TagEnd::Paragraph | TagEnd::Heading(_) | TagEnd::Item | TagEnd::CodeBlock,
            ) => raw.push('\n'),
            _ => {}
        }
    }
    raw.lines()
        .map(|line| line.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|line| !line.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Synthesizes one job with the configured backend.
pub fn synthesize(job: &NarrationJob, cfg: &TtsBackendConfig) -> Result<AudioAsset, TtsError> {
    cfg.validate()?;
    let (bytes, duration_hint) = match &cfg.backend {
        TtsBackend::Null => {
            let seconds = word_count(&job.text) as f64 / NULL_WORDS_PER_SECOND;
            (mp3::silent_mp3(seconds, Some(&job.text)), Some(seconds))
        }
        TtsBackend::CommandTemplate(template) => (run_command(job, template, cfg)?, None),
        TtsBackend::HttpService { endpoint, token } => {
            (post_http(job, endpoint, token.as_deref(), cfg)?, None)
        }
    };
    let info = mp3::inspect(&bytes).map_err(|e| TtsError::BadAudio {
        job: job.name.clone(),
        reason: e.to_string(),
    })?;
    Ok(AudioAsset {
        name: job.name.clone(),
        relative_path: audio_relative_path(&job.name),
        bytes,
        duration_hint: duration_hint.or(Some(info.duration_secs)),
    })
}

/// Runs jobs on up to `parallelism` threads. Results come back in job
/// order. After the first failure no new jobs start, and the error
/// reported is that of the earliest failing job.
pub fn synthesize_all(
    jobs: &[NarrationJob],
    cfg: &TtsBackendConfig,
    parallelism: usize,
) -> Result<Vec<AudioAsset>, TtsError> {
    cfg.validate()?;
    let next = AtomicUsize::new(0);
    let failed = AtomicBool::new(false);
    let results: Mutex<Vec<Option<Result<AudioAsset, TtsError>>>> =
        Mutex::new((0..jobs.len()).map(|_| None).collect());

    std::thread::scope(|scope| {
        for _ in 0..parallelism.clamp(1, jobs.len().max(1)) {
            scope.spawn(|| loop {
                if failed.load(Ordering::SeqCst) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(job) = jobs.get(i) else { break };
                let result = synthesize(job, cfg);
                if result.is_err() {
                    failed.store(true, Ordering::SeqCst);
                }
                results.lock().unwrap()[i] = Some(result);
            });
        }
    });

    let mut assets = Vec::with_capacity(jobs.len());
    for result in results.into_inner().unwrap().into_iter().flatten() {
        assets.push(result?);
    }
    Ok(assets)
}

fn shell_quote(path: &Path) -> String {
    format!("'{}'", path.display().to_string().replace('\'', r"'\''"))
}

fn run_command(job: &NarrationJob, template: &str, cfg: &TtsBackendConfig) -> Result<Vec<u8>, TtsError> {
    let scratch = tempfile::tempdir()?;
    let input = scratch.path().join("narration.txt");
    let output = scratch.path().join(format!("{}.mp3", job.name));
    std::fs::write(&input, &job.text)?;

    let command = template
        .replace("{in}", &shell_quote(&input))
        .replace("{out}", &shell_quote(&output));
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(&command)
        .env("COURSE_TTS_VOICE", &cfg.voice)
        .env("COURSE_TTS_RATE", cfg.rate.to_string())
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| TtsError::BackendFailure {
            job: job.name.clone(),
            detail: format!("could not start `sh -c {command}`: {e}"),
        })?;

    let mut stderr_pipe = child.stderr.take().expect("stderr is piped");
    let stderr_reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stderr_pipe.read_to_end(&mut buf);
        buf
    });

    let status = match child.wait_timeout(cfg.timeout)? {
        Some(status) => status,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(TtsError::Timeout {
                job: job.name.clone(),
                after: cfg.timeout,
            });
        }
    };
    let stderr = String::from_utf8_lossy(&stderr_reader.join().unwrap_or_default()).into_owned();
    if !status.success() {
        return Err(TtsError::BackendFailure {
            job: job.name.clone(),
            detail: format!("command exited with {status}: {}", stderr.trim()),
        });
    }

    match std::fs::read(&output) {
        Ok(bytes) if !bytes.is_empty() => Ok(bytes),
        Ok(_) => Err(TtsError::BadAudio {
            job: job.name.clone(),
            reason: "command wrote an empty file".into(),
        }),
        Err(e) => Err(TtsError::BadAudio {
            job: job.name.clone(),
            reason: format!("command did not write {}: {e}", output.display()),
        }),
    }
}

#[derive(Serialize)]
struct SpeechRequest<'a> {
    text: &'a str,
    voice: &'a str,
    rate: u32,
}

fn post_http(
    job: &NarrationJob,
    endpoint: &str,
    token: Option<&str>,
    cfg: &TtsBackendConfig,
) -> Result<Vec<u8>, TtsError> {
    let agent = ureq::Agent::config_builder()
        .timeout_global(Some(cfg.timeout))
        .http_status_as_error(false)
        .build()
        .new_agent();
    let mut request = agent.post(endpoint).header("Accept", "audio/mpeg");
    if let Some(token) = token {
        request = request.header("Authorization", format!("Bearer {token}"));
    }
    let body = SpeechRequest {
        text: &job.text,
        voice: &cfg.voice,
        rate: cfg.rate,
    };
    let failure = |e: ureq::Error| match e {
        ureq::Error::Timeout(_) => TtsError::Timeout {
            job: job.name.clone(),
            after: cfg.timeout,
        },
        other => TtsError::BackendFailure {
            job: job.name.clone(),
            detail: other.to_string(),
        },
    };

    let mut response = request.send_json(&body).map_err(failure)?;
    let status = response.status();
    if !status.is_success() {
        let detail = response
            .body_mut()
            .with_config()
            .limit(4096)
            .read_to_string()
            .unwrap_or_default();
        return Err(TtsError::BackendFailure {
            job: job.name.clone(),
            detail: format!("HTTP {status}: {}", detail.trim()),
        });
    }
    let content_type = response
        .headers()
        .get("content-type")
        .and_then(|v| v.to_str().ok())
        .unwrap_or("")
        .to_ascii_lowercase();
    if !content_type.starts_with("audio/") {
        return Err(TtsError::BadAudio {
            job: job.name.clone(),
            reason: format!("expected an audio content type, got {content_type:?}"),
        });
    }
    let bytes = response
        .body_mut()
        .with_config()
        .limit(MAX_AUDIO_BYTES)
        .read_to_vec()
        .map_err(failure)?;
    Ok(bytes)
}
