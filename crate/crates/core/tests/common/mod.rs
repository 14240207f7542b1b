//! Shared test helpers: a throwaway HTTP prediction server and small table
//! builders.

#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use coe::cli::remote::{PredictRequest, PredictResponse, RemotePrediction};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Behavior {
    /// Correct answers, returned in reverse order after a short varying delay.
    Ok,
    /// Every request gets this status code.
    Status(u16),
    /// 200 with a body that is not the expected JSON.
    Malformed,
    /// Sleep this long before answering.
    Slow(u64),
    /// Drop the last example of every batch.
    MissingExample,
    /// Answer with a label outside the label space.
    BadLabel,
}

pub struct MockServer {
    pub url: String,
    pub requests: Arc<AtomicUsize>,
}

/// Deterministic label for (model, example).
pub fn mock_label(model: &str, example_id: &str, labels: u32) -> u32 {
    let h = model
        .bytes()
        .chain(example_id.bytes())
        .fold(2166136261u32, |h, b| (h ^ b as u32).wrapping_mul(16777619));
    h % labels
}

pub fn mock_score(model: &str, example_id: &str) -> f64 {
    mock_label(model, example_id, 1000) as f64 / 1000.0
}

impl MockServer {
    pub fn start(behavior: Behavior, labels: u32) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let requests = Arc::new(AtomicUsize::new(0));
        let counter = requests.clone();
        std::thread::spawn(move || {
            for stream in listener.incoming().flatten() {
                let counter = counter.clone();
                std::thread::spawn(move || handle(stream, behavior, labels, &counter));
            }
        });
        Self { url, requests }
    }
}

fn handle(mut stream: TcpStream, behavior: Behavior, labels: u32, counter: &AtomicUsize) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut len = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            return;
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
            len = v.trim().parse().unwrap_or(0);
        }
    }
    let mut body = vec![0; len];
    if reader.read_exact(&mut body).is_err() {
        return;
    }
    let n = counter.fetch_add(1, Ordering::SeqCst);
    let req: PredictRequest = serde_json::from_slice(&body).unwrap();
    let (status, out) = match behavior {
        Behavior::Status(code) => (code, b"{}".to_vec()),
        Behavior::Malformed => (200, b"{\"predictions\": [".to_vec()),
        _ => {
            if let Behavior::Slow(ms) = behavior {
                std::thread::sleep(Duration::from_millis(ms));
            } else {
                // stagger replies so batches and models finish out of order
                std::thread::sleep(Duration::from_millis((n % 3) as u64 * 3));
            }
            let mut preds: Vec<RemotePrediction> = req
                .example_ids
                .iter()
                .map(|id| RemotePrediction {
                    example_id: id.clone(),
                    label: if behavior == Behavior::BadLabel {
                        labels
                    } else {
                        mock_label(&req.model_id, id, labels)
                    },
                    score: Some(mock_score(&req.model_id, id)),
                })
                .collect();
            if behavior == Behavior::MissingExample {
                preds.pop();
            }
            preds.reverse();
            (
                200,
                serde_json::to_vec(&PredictResponse { predictions: preds }).unwrap(),
            )
        }
    };
    let head = format!(
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        out.len()
    );
    let _ = stream.write_all(head.as_bytes());
    let _ = stream.write_all(&out);
}

pub fn fixtures() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}
