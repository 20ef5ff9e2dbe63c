mod support;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::time::{Duration, Instant};

use nbglide::tts::mp3::{inspect, silent_mp3};
use nbglide::tts::{synthesize, synthesize_all, TtsBackend, TtsBackendConfig, TtsError};
use nbglide::NarrationJob;

fn job(name: &str, text: &str) -> NarrationJob {
    NarrationJob {
        slide_ordinal: 1,
        name: name.into(),
        text: text.into(),
    }
}

fn command(template: String) -> TtsBackendConfig {
    TtsBackendConfig::with_backend(TtsBackend::CommandTemplate(template))
}

#[test]
fn null_backend_audio_decodes_to_silence_of_expected_length() {
    // 10 words at 2.5 words/s is 4 s.
    let asset = synthesize(
        &job("A", "one two three four five six seven eight nine ten"),
        &TtsBackendConfig::default(),
    )
    .unwrap();
    let (frames, rate, peak) = support::decode_mp3(&asset.bytes).unwrap();
    assert_eq!(rate, 48_000);
    assert_eq!(peak, 0.0);
    let seconds = frames as f64 / rate as f64;
    assert!((seconds - 4.0).abs() <= 0.024 + 1e-9, "decoded {seconds}s");
}

#[test]
fn command_backend_reads_text_and_returns_written_file() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = dir.path().join("fixture.mp3");
    std::fs::write(&fixture, silent_mp3(1.0, None)).unwrap();
    let captured = dir.path().join("captured.txt");
    let cfg = command(format!(
        "cp {{in}} '{}' && cp '{}' {{out}}",
        captured.display(),
        fixture.display()
    ));
    let asset = synthesize(&job("Intro", "hello there"), &cfg).unwrap();
    assert_eq!(asset.bytes, silent_mp3(1.0, None));
    assert_eq!(asset.relative_path, "slides_audios/Intro.mp3");
    assert_eq!(std::fs::read_to_string(captured).unwrap(), "hello there");
}

#[test]
fn command_failure_reports_stderr() {
    let cfg = command(": {in} {out}; echo 'voice not installed' >&2; exit 3".into());
    match synthesize(&job("Intro", "x"), &cfg) {
        Err(TtsError::BackendFailure { job, detail }) => {
            assert_eq!(job, "Intro");
            assert!(detail.contains("voice not installed"), "{detail}");
        }
        other => panic!("expected BackendFailure, got {other:?}"),
    }
}

#[test]
fn command_output_that_is_not_mp3_is_rejected() {
    let cfg = command(": {in}; echo 'not audio' > {out}".into());
    assert!(matches!(
        synthesize(&job("Intro", "x"), &cfg),
        Err(TtsError::BadAudio { .. })
    ));
    let cfg = command(": {in} {out}".into());
    assert!(matches!(
        synthesize(&job("Intro", "x"), &cfg),
        Err(TtsError::BadAudio { .. })
    ));
}

#[test]
fn command_timeout_is_enforced() {
    let mut cfg = command(": {in} {out}; sleep 5".into());
    cfg.timeout = Duration::from_millis(300);
    let started = Instant::now();
    let err = synthesize(&job("Intro", "x"), &cfg).unwrap_err();
    assert!(matches!(err, TtsError::Timeout { .. }), "{err:?}");
    assert!(started.elapsed() < Duration::from_secs(4));
}

#[test]
fn template_without_placeholders_is_invalid() {
    let cfg = command("say hello".into());
    assert!(matches!(
        synthesize(&job("Intro", "x"), &cfg),
        Err(TtsError::InvalidConfig(_))
    ));
}

#[test]
fn earliest_failing_job_is_reported() {
    let jobs: Vec<_> = ["ok0", "bad1", "ok2", "bad3"]
        .iter()
        .map(|n| job(n, n))
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let fixture = dir.path().join("f.mp3");
    std::fs::write(&fixture, silent_mp3(0.5, None)).unwrap();
    let cfg = command(format!(
        "if grep -q bad {{in}}; then exit 1; fi; cp '{}' {{out}}",
        fixture.display()
    ));
    for _ in 0..5 {
        match synthesize_all(&jobs, &cfg, 4) {
            Err(TtsError::BackendFailure { job, .. }) => assert_eq!(job, "bad1"),
            other => panic!("{other:?}"),
        }
    }
    let good: Vec<_> = ["a", "b", "c", "d", "e"].iter().map(|n| job(n, n)).collect();
    let assets = synthesize_all(&good, &cfg, 3).unwrap();
    let names: Vec<_> = assets.iter().map(|a| a.name.as_str()).collect();
    assert_eq!(names, ["a", "b", "c", "d", "e"]);
}

struct Captured {
    head: String,
    body: String,
}

/// Serves one canned HTTP response and reports the request it received.
fn stub_server(status: &str, content_type: &str, body: Vec<u8>) -> (String, mpsc::Receiver<Captured>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/speak", listener.local_addr().unwrap());
    let (tx, rx) = mpsc::channel();
    let status = status.to_string();
    let content_type = content_type.to_string();
    std::thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut head = String::new();
        let mut length = 0;
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                length = v.trim().parse().unwrap();
            }
            if line == "\r\n" || line.is_empty() {
                break;
            }
            head.push_str(&line);
        }
        let mut buf = vec![0; length];
        reader.read_exact(&mut buf).unwrap();
        let mut stream = stream;
        write!(
            stream,
            "HTTP/1.1 {status}\r\nContent-Type: {content_type}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
            body.len()
        )
        .unwrap();
        stream.write_all(&body).unwrap();
        tx.send(Captured {
            head,
            body: String::from_utf8(buf).unwrap(),
        })
        .unwrap();
    });
    (url, rx)
}

fn http(endpoint: String, token: Option<&str>) -> TtsBackendConfig {
    TtsBackendConfig::with_backend(TtsBackend::HttpService {
        endpoint,
        token: token.map(Into::into),
    })
}

#[test]
fn http_backend_posts_json_and_accepts_mpeg() {
    let audio = silent_mp3(2.0, None);
    let (url, rx) = stub_server("200 OK", "audio/mpeg", audio.clone());
    let asset = synthesize(&job("Intro", "say \"this\""), &http(url, Some("s3cret"))).unwrap();
    assert_eq!(asset.bytes, audio);
    assert!((inspect(&asset.bytes).unwrap().duration_secs - 2.0).abs() < 0.025);

    let req = rx.recv_timeout(Duration::from_secs(5)).unwrap();
    assert!(req.head.starts_with("POST /speak "), "{}", req.head);
    assert!(req.head.to_ascii_lowercase().contains("authorization: bearer s3cret"));
    let body: serde_json::Value = serde_json::from_str(&req.body).unwrap();
    assert_eq!(body["text"], "say \"this\"");
    assert_eq!(body["voice"], "default");
    assert_eq!(body["rate"], 150);
}

#[test]
fn http_error_status_is_a_backend_failure() {
    let (url, _rx) = stub_server("500 Internal Server Error", "text/plain", b"quota exceeded".to_vec());
    match synthesize(&job("Intro", "x"), &http(url, None)) {
        Err(TtsError::BackendFailure { detail, .. }) => {
            assert!(detail.contains("500"), "{detail}");
            assert!(detail.contains("quota exceeded"), "{detail}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn http_non_audio_response_is_bad_audio() {
    let (url, _rx) = stub_server("200 OK", "application/json", b"{}".to_vec());
    assert!(matches!(
        synthesize(&job("Intro", "x"), &http(url, None)),
        Err(TtsError::BadAudio { .. })
    ));
    let (url, _rx) = stub_server("200 OK", "audio/mpeg", b"garbage bytes".to_vec());
    assert!(matches!(
        synthesize(&job("Intro", "x"), &http(url, None)),
        Err(TtsError::BadAudio { .. })
    ));
}

#[test]
fn unreachable_http_endpoint_fails_cleanly() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let cfg = http(format!("http://127.0.0.1:{port}/speak"), None);
    assert!(matches!(
        synthesize(&job("Intro", "x"), &cfg),
        Err(TtsError::BackendFailure { .. })
    ));
}

#[test]
fn env_selects_backend() {
    let env = |pairs: &'static [(&'static str, &'static str)]| {
        move |k: &str| pairs.iter().find(|p| p.0 == k).map(|p| p.1.to_string())
    };
    assert_eq!(TtsBackendConfig::from_env(env(&[])).backend, TtsBackend::Null);
    assert_eq!(
        TtsBackendConfig::from_env(env(&[
            ("COURSE_TTS_URL", "http://x"),
            ("COURSE_TTS_CMD", "say {in} {out}")
        ]))
        .backend,
        TtsBackend::CommandTemplate("say {in} {out}".into())
    );
    assert_eq!(
        TtsBackendConfig::from_env(env(&[("COURSE_TTS_URL", "http://x"), ("COURSE_TTS_TOKEN", "t")]))
            .backend,
        TtsBackend::HttpService {
            endpoint: "http://x".into(),
            token: Some("t".into())
        }
    );
}
