//! Wire-contract tests for the remote embedder/reranker client against a
//! canned loopback HTTP server.

use std::io::{Read, Write};
use std::net::TcpListener;
use std::time::Duration;

use geomem_core::adapters::{Embedder, RemoteClient, Reranker};
use geomem_core::error::Error;

/// Serves one canned response per queued entry, then exits.
/// `(status, body)` pairs are served in order.
fn spawn_server(responses: Vec<(u16, String)>) -> (String, std::thread::JoinHandle<Vec<String>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let handle = std::thread::spawn(move || {
        let mut bodies = Vec::new();
        for (status, body) in responses {
            let (mut stream, _) = listener.accept().unwrap();
            stream
                .set_read_timeout(Some(Duration::from_secs(5)))
                .unwrap();
            let mut buf = Vec::new();
            let mut chunk = [0u8; 4096];
            let request = loop {
                let n = stream.read(&mut chunk).unwrap();
                buf.extend_from_slice(&chunk[..n]);
                let text = String::from_utf8_lossy(&buf).into_owned();
                if let Some(header_end) = text.find("\r\n\r\n") {
                    let content_length = text
                        .lines()
                        .find_map(|l| {
                            let l = l.to_ascii_lowercase();
                            l.strip_prefix("content-length:")
                                .map(|v| v.trim().parse::<usize>().unwrap())
                        })
                        .unwrap_or(0);
                    if buf.len() >= header_end + 4 + content_length {
                        break text;
                    }
                }
                if n == 0 {
                    break text;
                }
            };
            let payload = request
                .split_once("\r\n\r\n")
                .map(|(_, b)| b.to_string())
                .unwrap_or_default();
            bodies.push(payload);
            let reason = if status == 200 { "OK" } else { "ERR" };
            let response = format!(
                "HTTP/1.1 {status} {reason}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(response.as_bytes()).unwrap();
        }
        bodies
    });
    (format!("http://{addr}"), handle)
}

fn quick_client(endpoint: &str, dim: usize) -> RemoteClient {
    RemoteClient::new(endpoint, dim)
        .with_timeout(Duration::from_secs(2))
        .with_backoff(Duration::from_millis(5))
}

#[test]
fn embed_batch_round_trip() {
    let (endpoint, server) = spawn_server(vec![(
        200,
        r#"{"vectors": [[1.0, 0.0], [0.5, 0.5]]}"#.to_string(),
    )]);
    let client = quick_client(&endpoint, 2);
    let vectors = client
        .embed_batch(&["first".into(), "second".into()])
        .unwrap();
    assert_eq!(vectors, vec![vec![1.0, 0.0], vec![0.5, 0.5]]);
    let bodies = server.join().unwrap();
    let sent: serde_json::Value = serde_json::from_str(&bodies[0]).unwrap();
    assert_eq!(sent["texts"], serde_json::json!(["first", "second"]));
}

#[test]
fn empty_batch_yields_empty_vectors() {
    let (endpoint, server) = spawn_server(vec![(200, r#"{"vectors": []}"#.to_string())]);
    let client = quick_client(&endpoint, 2);
    let vectors = client.embed_batch(&[]).unwrap();
    assert!(vectors.is_empty());
    server.join().unwrap();
}

#[test]
fn dimension_mismatch_is_rejected_whole() {
    let (endpoint, server) = spawn_server(
        std::iter::repeat((200, r#"{"vectors": [[1.0, 0.0, 0.0]]}"#.to_string()))
            .take(3)
            .collect(),
    );
    let client = quick_client(&endpoint, 2);
    // dimension checking happens after a successful exchange; no retry
    let result = client.embed_batch(&["text".into()]);
    assert!(matches!(result, Err(Error::DimensionMismatch { expected: 2, got: 3 })));
    drop(server); // remaining canned responses unused
}

#[test]
fn nan_payload_is_rejected() {
    // JSON has no NaN literal; a null component deserializes to a malformed
    // payload error, and an out-of-range float string likewise
    let (endpoint, _server) = spawn_server(vec![(
        200,
        r#"{"vectors": [[null, 1.0]]}"#.to_string(),
    )]);
    let client = quick_client(&endpoint, 2);
    let result = client.embed_batch(&["text".into()]);
    assert!(matches!(result, Err(Error::Remote(_))), "got {result:?}");
}

#[test]
fn rerank_scores_parse_and_validate_count() {
    let (endpoint, server) = spawn_server(vec![(200, r#"{"scores": [0.25, -1.5]}"#.to_string())]);
    let client = quick_client(&endpoint, 2);
    let scores = client
        .rerank_batch("query", &["a".into(), "b".into()])
        .unwrap();
    assert_eq!(scores, vec![0.25, -1.5]);
    let bodies = server.join().unwrap();
    let sent: serde_json::Value = serde_json::from_str(&bodies[0]).unwrap();
    assert_eq!(sent["query"], "query");

    let (endpoint, _server) = spawn_server(vec![(200, r#"{"scores": [0.25]}"#.to_string())]);
    let client = quick_client(&endpoint, 2);
    let result = client.rerank_batch("query", &["a".into(), "b".into()]);
    assert!(matches!(result, Err(Error::Remote(_))));
}

#[test]
fn transient_failure_retries_then_succeeds() {
    let (endpoint, server) = spawn_server(vec![
        (500, r#"{"error": "flaky"}"#.to_string()),
        (200, r#"{"vectors": [[0.0, 1.0]]}"#.to_string()),
    ]);
    let client = quick_client(&endpoint, 2);
    let vectors = client.embed_batch(&["text".into()]).unwrap();
    assert_eq!(vectors, vec![vec![0.0, 1.0]]);
    server.join().unwrap();
}

#[test]
fn retry_exhaustion_surfaces_last_error() {
    let (endpoint, server) = spawn_server(vec![
        (500, r#"{"error": "one"}"#.to_string()),
        (502, r#"{"error": "two"}"#.to_string()),
        (503, r#"{"error": "three"}"#.to_string()),
    ]);
    let client = quick_client(&endpoint, 2);
    let result = client.embed_batch(&["text".into()]);
    match result {
        Err(Error::Remote(msg)) => {
            assert!(msg.contains("503"), "last error should win: {msg}");
        }
        other => panic!("expected remote error, got {other:?}"),
    }
    server.join().unwrap();
}

#[test]
fn remote_embedder_slot_enforces_contract_end_to_end() {
    let (endpoint, _server) = spawn_server(vec![(
        200,
        r#"{"vectors": [[0.6, 0.8]]}"#.to_string(),
    )]);
    let embedder = Embedder::Remote(quick_client(&endpoint, 2));
    assert_eq!(embedder.dim(), 2);
    assert_eq!(embedder.embed("hello").unwrap(), vec![0.6, 0.8]);
}

#[test]
fn remote_reranker_slot_scores() {
    let (endpoint, _server) = spawn_server(vec![(200, r#"{"scores": [1.25]}"#.to_string())]);
    let reranker = Reranker::Remote(quick_client(&endpoint, 2));
    assert_eq!(reranker.score("q", "doc").unwrap(), 1.25);
}

#[test]
fn bearer_token_is_sent_when_configured() {
    let (endpoint, server) = spawn_server(vec![(200, r#"{"vectors": []}"#.to_string())]);
    let client = quick_client(&endpoint, 2).with_bearer_token(Some("sekrit".into()));
    client.embed_batch(&[]).unwrap();
    // the canned server keeps only bodies; re-serve to check headers instead
    drop(server);

    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let handle = std::thread::spawn(move || {
        let (mut stream, _) = listener.accept().unwrap();
        let mut buf = [0u8; 8192];
        let n = stream.read(&mut buf).unwrap();
        let request = String::from_utf8_lossy(&buf[..n]).into_owned();
        let body = r#"{"vectors": []}"#;
        let response = format!(
            "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
            body.len()
        );
        stream.write_all(response.as_bytes()).unwrap();
        request
    });
    let client = RemoteClient::new(&format!("http://{addr}"), 2)
        .with_timeout(Duration::from_secs(2))
        .with_bearer_token(Some("sekrit".into()));
    client.embed_batch(&[]).unwrap();
    let request = handle.join().unwrap();
    assert!(
        request.to_ascii_lowercase().contains("authorization: bearer sekrit"),
        "missing auth header in:\n{request}"
    );
}
