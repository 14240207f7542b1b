mod common;

use coe::cli::remote::{fetch_remote_predictions, FetchOptions, RemoteProviderEndpoint};
use coe::Error;
use common::{mock_label, Behavior, MockServer};

fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("ex{i}")).collect()
}

fn models() -> Vec<String> {
    vec!["small".into(), "large".into()]
}

fn fetch(
    server: &MockServer,
    batch_size: usize,
    concurrent: bool,
    timeout_ms: u64,
) -> coe::Result<coe::cli::remote::RemotePredictions> {
    let endpoint = RemoteProviderEndpoint::new(&server.url, timeout_ms).unwrap();
    fetch_remote_predictions(
        &endpoint,
        &models(),
        &ids(25),
        4,
        FetchOptions {
            batch_size,
            concurrent,
        },
    )
}

#[test]
fn merges_out_of_order_batches() {
    let server = MockServer::start(Behavior::Ok, 4);
    let got = fetch(&server, 7, true, 5000).unwrap();
    // 2 models x ceil(25 / 7) batches
    assert_eq!(server.requests.load(std::sync::atomic::Ordering::SeqCst), 8);
    assert_eq!(got.example_ids, ids(25));
    for (m, model) in models().iter().enumerate() {
        for (i, id) in ids(25).iter().enumerate() {
            assert_eq!(got.labels[m][i].0, mock_label(model, id, 4));
        }
        assert!(got.scores[m].is_some());
    }
    assert_eq!(got, fetch(&server, 25, false, 5000).unwrap());
}

fn remote_err(r: coe::Result<coe::cli::remote::RemotePredictions>) -> (String, usize, String) {
    match r {
        Err(Error::Remote {
            model,
            batch,
            message,
        }) => (model, batch, message),
        other => panic!("expected remote error, got {other:?}"),
    }
}

#[test]
fn http_status_error() {
    let server = MockServer::start(Behavior::Status(503), 4);
    let (model, batch, message) = remote_err(fetch(&server, 10, false, 5000));
    assert_eq!((model.as_str(), batch), ("small", 0));
    assert!(message.contains("503"), "{message}");
}

#[test]
fn malformed_body() {
    let server = MockServer::start(Behavior::Malformed, 4);
    let (_, _, message) = remote_err(fetch(&server, 10, true, 5000));
    assert!(message.contains("malformed"), "{message}");
}

#[test]
fn timeout() {
    let server = MockServer::start(Behavior::Slow(1500), 4);
    let (_, _, message) = remote_err(fetch(&server, 25, false, 200));
    assert!(message.contains("timeout"), "{message}");
}

#[test]
fn missing_example() {
    let server = MockServer::start(Behavior::MissingExample, 4);
    let (_, batch, message) = remote_err(fetch(&server, 10, false, 5000));
    assert_eq!(batch, 0);
    assert!(
        message.contains("missing prediction for example ex9"),
        "{message}"
    );
}

#[test]
fn label_out_of_range() {
    let server = MockServer::start(Behavior::BadLabel, 4);
    let (_, _, message) = remote_err(fetch(&server, 10, false, 5000));
    assert!(message.contains("out of range"), "{message}");
}

#[test]
fn error_exit_code() {
    let server = MockServer::start(Behavior::Status(500), 4);
    let e = fetch(&server, 10, false, 5000).unwrap_err();
    assert_eq!(e.exit_code(), 3);
    assert_eq!(e.kind(), "remote");
}

#[test]
fn zero_batch_size_rejected() {
    let server = MockServer::start(Behavior::Ok, 4);
    assert_eq!(fetch(&server, 0, false, 5000).unwrap_err().exit_code(), 1);
}
