use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::thread;

use serde_json::{json, Value};
use taxolink::service::{Endpoint, ServiceClient, ServiceLabeler, ServiceProvider};
use taxolink_core::{
    recognize, BioLabel, Document, EmbeddingProvider, EntityKind, LabelerError, ProviderError, SequenceLabeler,
};

/// Serves one connection, answering each request line with `respond`.
fn fake_service(respond: impl Fn(&Value) -> Value + Send + 'static) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut writer = stream.try_clone().unwrap();
        for line in BufReader::new(stream).lines() {
            let Ok(line) = line else { break };
            let request: Value = serde_json::from_str(&line).unwrap_or(Value::Null);
            let mut out = respond(&request).to_string();
            out.push('\n');
            if writer.write_all(out.as_bytes()).is_err() {
                break;
            }
        }
    });
    addr
}

fn unit_vectors(request: &Value) -> Value {
    let texts = request["texts"].as_array().unwrap();
    let vectors: Vec<Vec<f32>> = texts
        .iter()
        .map(|t| {
            let n = t.as_str().unwrap().len() as f32;
            vec![n, 1.0, 0.0]
        })
        .collect();
    json!({"vectors": vectors, "dim": 3})
}

#[test]
fn tcp_embed_roundtrip() {
    let addr = fake_service(unit_vectors);
    let mut p = ServiceProvider::connect(&Endpoint::Tcp(addr)).unwrap();
    assert_eq!(p.dim(), None);
    let v = p.embed(&["ab", "abcd"]).unwrap();
    assert_eq!(v[0].as_slice(), &[2.0, 1.0, 0.0]);
    assert_eq!(v[1].as_slice(), &[4.0, 1.0, 0.0]);
    assert_eq!(p.dim(), Some(3));
    // the connection stays usable
    assert_eq!(p.embed(&["x"]).unwrap().len(), 1);
}

#[test]
fn error_response_is_reported_and_connection_survives() {
    let addr = fake_service(|r| {
        if r["texts"][0] == "bad" {
            json!({"error": "model exploded"})
        } else {
            unit_vectors(r)
        }
    });
    let mut p = ServiceProvider::connect(&Endpoint::Tcp(addr)).unwrap();
    match p.embed(&["bad"]).unwrap_err() {
        ProviderError::Unavailable(msg) => assert!(msg.contains("model exploded"), "{msg}"),
        other => panic!("unexpected {other:?}"),
    }
    assert!(p.embed(&["good"]).is_ok());
}

#[test]
fn declared_dimension_is_checked() {
    let addr = fake_service(|_| json!({"vectors": [[1.0, 2.0]], "dim": 3}));
    let mut p = ServiceProvider::connect(&Endpoint::Tcp(addr)).unwrap();
    assert!(matches!(
        p.embed(&["a"]),
        Err(ProviderError::DimensionMismatch { expected: 3, found: 2 })
    ));
}

#[test]
fn wrong_vector_count_rejected_through_provider_contract() {
    let addr = fake_service(|_| json!({"vectors": [[1.0, 0.0]], "dim": 2}));
    let mut p = ServiceProvider::connect(&Endpoint::Tcp(addr)).unwrap();
    let err = taxolink_core::provider_embed(&mut p, &["a", "b"]).unwrap_err();
    assert!(matches!(err, ProviderError::CountMismatch { .. }), "{err:?}");
}

#[test]
fn unreachable_service_is_unavailable() {
    let err = ServiceProvider::connect(&Endpoint::Tcp("127.0.0.1:1".into())).unwrap_err();
    assert!(matches!(err, ProviderError::Unavailable(_)));
}

#[test]
fn tcp_labeler_feeds_recognition() {
    let addr = fake_service(|r| {
        let labels: Vec<Vec<&str>> = r["tokens"]
            .as_array()
            .unwrap()
            .iter()
            .map(|s| {
                s.as_array()
                    .unwrap()
                    .iter()
                    .map(|t| if t == "Java" { "B-Skill" } else { "O" })
                    .collect()
            })
            .collect();
        json!({ "labels": labels })
    });
    let mut l = ServiceLabeler::connect(&Endpoint::Tcp(addr)).unwrap();
    let doc = Document::new("d", "Strong Java skills. Also Java again.").unwrap();
    let r = recognize(&doc, &mut l).unwrap();
    assert_eq!(r.mentions.len(), 2);
    assert!(r
        .mentions
        .iter()
        .all(|m| m.kind == EntityKind::Skill && m.text == "Java"));
    assert_eq!(r.mentions[1].sentence, 1);
}

#[test]
fn labeler_length_and_vocabulary_checked() {
    let addr = fake_service(|r| {
        if r["tokens"][0].as_array().unwrap().len() == 1 {
            json!({"labels": [["B-Salary"]]})
        } else {
            json!({"labels": [["O"]]})
        }
    });
    let mut l = ServiceLabeler::connect(&Endpoint::Tcp(addr)).unwrap();
    let doc = Document::new("d", "x").unwrap();
    assert_eq!(
        l.label(&doc, &[vec!["a", "b"]]).unwrap_err(),
        LabelerError::Length {
            sentence: 0,
            expected: 2,
            found: 1
        }
    );
    assert!(matches!(
        l.label(&doc, &[vec!["a"]]),
        Err(LabelerError::UnknownLabel(_))
    ));
}

#[test]
fn stdio_child_speaks_the_protocol() {
    let script = r#"while IFS= read -r line; do
  case "$line" in
    *'"op":"label"'*) echo '{"labels":[["B-Occupation","I-Occupation"]]}' ;;
    *) echo '{"vectors":[[0.0,1.0]],"dim":2}' ;;
  esac
done"#;
    let endpoint = Endpoint::Command(vec!["sh".into(), "-c".into(), script.into()]);
    let mut p = ServiceProvider::connect(&endpoint).unwrap();
    assert_eq!(p.embed(&["anything"]).unwrap()[0].as_slice(), &[0.0, 1.0]);

    let mut l = ServiceLabeler::connect(&endpoint).unwrap();
    let doc = Document::new("d", "x").unwrap();
    let labels = l.label(&doc, &[vec!["head", "chef"]]).unwrap();
    assert_eq!(
        labels,
        vec![vec![
            BioLabel::Begin(EntityKind::Occupation),
            BioLabel::Inside(EntityKind::Occupation)
        ]]
    );
}

#[test]
fn child_exit_is_a_closed_connection() {
    let mut client = ServiceClient::connect(&Endpoint::Command(vec!["true".into()])).unwrap();
    let err = client
        .call::<Value, Value>(&json!({"op": "embed", "texts": []}))
        .unwrap_err();
    assert!(err.contains("closed") || err.contains("send failed"), "{err}");
}

#[test]
fn address_override_takes_precedence() {
    let addr = fake_service(unit_vectors);
    // set for this process only; no other test in this binary reads it
    std::env::set_var(taxolink::service::ADDRESS_ENV, &addr);
    let endpoint = Endpoint::Tcp("127.0.0.1:1".into()).resolve();
    std::env::remove_var(taxolink::service::ADDRESS_ENV);
    assert_eq!(endpoint, Endpoint::Tcp(addr.clone()));
    let mut p = ServiceProvider::connect(&endpoint).unwrap();
    assert!(p.embed(&["a"]).is_ok());
}
