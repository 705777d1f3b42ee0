//! Client side of the model service: one JSON object per line, one response
//! line per request, over TCP or a child process's stdin/stdout.
//!
//! ```text
//! -> {"op":"embed","texts":["..."]}
//! <- {"vectors":[[...]],"dim":384}
//! -> {"op":"label","tokens":[["..."]]}
//! <- {"labels":[["B-Skill","O"]]}
//! ```
//!
//! Any response may instead be `{"error":"..."}`.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::TcpStream;
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use taxolink_core::{
    BioLabel, Document, EmbeddingProvider, EmbeddingVector, LabelerError, ProviderError, SequenceLabeler,
};

/// Environment variable overriding the configured service address.
pub const ADDRESS_ENV: &str = "TAXOLINK_BRIDGE_ADDR";

const CONNECT_TIMEOUT: Duration = Duration::from_secs(10);

/// Where the service lives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    Tcp(String),
    /// Program and arguments of a child speaking the protocol on stdio.
    Command(Vec<String>),
}

impl Endpoint {
    /// Applies the address override, if set.
    pub fn resolve(self) -> Endpoint {
        match std::env::var(ADDRESS_ENV) {
            Ok(addr) if !addr.trim().is_empty() => Endpoint::Tcp(addr.trim().to_string()),
            _ => self,
        }
    }
}

enum Transport {
    Tcp {
        reader: BufReader<TcpStream>,
        writer: BufWriter<TcpStream>,
    },
    Child {
        child: Child,
        reader: BufReader<ChildStdout>,
        writer: Option<BufWriter<ChildStdin>>,
    },
}

/// A connected line-protocol session.
pub struct ServiceClient {
    transport: Transport,
    description: String,
}

impl std::fmt::Debug for ServiceClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ServiceClient")
            .field("endpoint", &self.description)
            .finish()
    }
}

impl ServiceClient {
    pub fn connect(endpoint: &Endpoint) -> Result<Self, String> {
        match endpoint {
            Endpoint::Tcp(addr) => {
                use std::net::ToSocketAddrs;
                let addrs: Vec<_> = addr
                    .to_socket_addrs()
                    .map_err(|e| format!("cannot resolve {addr}: {e}"))?
                    .collect();
                let mut last = format!("no addresses for {addr}");
                for a in addrs {
                    match TcpStream::connect_timeout(&a, CONNECT_TIMEOUT) {
                        Ok(stream) => {
                            let _ = stream.set_nodelay(true);
                            let read = stream.try_clone().map_err(|e| e.to_string())?;
                            return Ok(ServiceClient {
                                transport: Transport::Tcp {
                                    reader: BufReader::new(read),
                                    writer: BufWriter::new(stream),
                                },
                                description: format!("tcp://{addr}"),
                            });
                        }
                        Err(e) => last = format!("cannot connect to {addr}: {e}"),
                    }
                }
                Err(last)
            }
            Endpoint::Command(argv) => {
                let (program, args) = argv.split_first().ok_or("empty service command")?;
                let mut child = Command::new(program)
                    .args(args)
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()
                    .map_err(|e| format!("cannot start `{program}`: {e}"))?;
                let stdin = child.stdin.take().expect("stdin piped");
                let stdout = child.stdout.take().expect("stdout piped");
                Ok(ServiceClient {
                    transport: Transport::Child {
                        child,
                        reader: BufReader::new(stdout),
                        writer: Some(BufWriter::new(stdin)),
                    },
                    description: argv.join(" "),
                })
            }
        }
    }

    /// Sends one request and parses one response line.
    pub fn call<Req: Serialize, Resp: for<'de> Deserialize<'de>>(&mut self, request: &Req) -> Result<Resp, String> {
        let mut line = serde_json::to_string(request).map_err(|e| e.to_string())?;
        line.push('\n');
        let (reader, writer): (&mut dyn BufRead, &mut dyn Write) = match &mut self.transport {
            Transport::Tcp { reader, writer } => (reader, writer),
            Transport::Child { reader, writer, .. } => (reader, writer.as_mut().expect("open until drop")),
        };
        writer
            .write_all(line.as_bytes())
            .and_then(|()| writer.flush())
            .map_err(|e| format!("{}: send failed: {e}", self.description))?;
        let mut response = String::new();
        let n = reader
            .read_line(&mut response)
            .map_err(|e| format!("{}: receive failed: {e}", self.description))?;
        if n == 0 {
            return Err(format!("{}: connection closed", self.description));
        }
        let value: serde_json::Value =
            serde_json::from_str(&response).map_err(|e| format!("{}: malformed response: {e}", self.description))?;
        if let Some(err) = value.get("error").filter(|e| !e.is_null()) {
            let msg = err.as_str().map_or_else(|| err.to_string(), str::to_string);
            return Err(format!("{}: {msg}", self.description));
        }
        serde_json::from_value(value).map_err(|e| format!("{}: unexpected response: {e}", self.description))
    }
}

impl Drop for ServiceClient {
    fn drop(&mut self) {
        if let Transport::Child { child, writer, .. } = &mut self.transport {
            // closing stdin is the shutdown signal; kill after a short wait
            drop(writer.take());
            for _ in 0..50 {
                if let Ok(Some(_)) = child.try_wait() {
                    return;
                }
                std::thread::sleep(Duration::from_millis(10));
            }
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    op: &'static str,
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f32>>,
    #[serde(default)]
    dim: Option<usize>,
    /// Indices of texts the service truncated to its input limit.
    #[serde(default)]
    truncated: Vec<usize>,
}

#[derive(Serialize)]
struct LabelRequest<'a> {
    op: &'static str,
    tokens: &'a [Vec<&'a str>],
}

#[derive(Deserialize)]
struct LabelResponse {
    labels: Vec<Vec<String>>,
}

/// Embedding provider backed by the service.
#[derive(Debug)]
pub struct ServiceProvider {
    client: ServiceClient,
    dim: Option<usize>,
}

impl ServiceProvider {
    pub fn connect(endpoint: &Endpoint) -> Result<Self, ProviderError> {
        let client = ServiceClient::connect(endpoint).map_err(ProviderError::Unavailable)?;
        Ok(ServiceProvider { client, dim: None })
    }
}

impl EmbeddingProvider for ServiceProvider {
    fn dim(&self) -> Option<usize> {
        self.dim
    }

    fn embed(&mut self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        let response: EmbedResponse = self
            .client
            .call(&EmbedRequest { op: "embed", texts })
            .map_err(ProviderError::Unavailable)?;
        for i in &response.truncated {
            log::warn!("embedding service truncated text {i} of batch");
        }
        if let (Some(declared), Some(first)) = (response.dim, response.vectors.first()) {
            if first.len() != declared {
                return Err(ProviderError::DimensionMismatch {
                    expected: declared,
                    found: first.len(),
                });
            }
        }
        let vectors = response
            .vectors
            .into_iter()
            .enumerate()
            .map(|(index, v)| EmbeddingVector::new(v).map_err(|_| ProviderError::NonFinite { index }))
            .collect::<Result<Vec<_>, _>>()?;
        if self.dim.is_none() {
            self.dim = vectors.first().map(EmbeddingVector::dim);
        }
        Ok(vectors)
    }
}

/// Sequence labeler backed by the service.
#[derive(Debug)]
pub struct ServiceLabeler {
    client: ServiceClient,
}

impl ServiceLabeler {
    pub fn connect(endpoint: &Endpoint) -> Result<Self, LabelerError> {
        let client = ServiceClient::connect(endpoint).map_err(LabelerError::Unavailable)?;
        Ok(ServiceLabeler { client })
    }
}

impl SequenceLabeler for ServiceLabeler {
    fn label(&mut self, _doc: &Document, sentences: &[Vec<&str>]) -> Result<Vec<Vec<BioLabel>>, LabelerError> {
        let response: LabelResponse = self
            .client
            .call(&LabelRequest {
                op: "label",
                tokens: sentences,
            })
            .map_err(LabelerError::Unavailable)?;
        if response.labels.len() != sentences.len() {
            return Err(LabelerError::SentenceCount {
                expected: sentences.len(),
                found: response.labels.len(),
            });
        }
        response
            .labels
            .iter()
            .zip(sentences)
            .enumerate()
            .map(|(sentence, (labels, tokens))| {
                if labels.len() != tokens.len() {
                    return Err(LabelerError::Length {
                        sentence,
                        expected: tokens.len(),
                        found: labels.len(),
                    });
                }
                labels
                    .iter()
                    .map(|l| l.parse().map_err(|_| LabelerError::UnknownLabel(l.clone())))
                    .collect()
            })
            .collect()
    }
}
