//! Client for the out-of-process transformer backend.
//!
//! The protocol is line-delimited JSON: one request object per line, one
//! response object per line. The backend listens on a TCP socket or is
//! spawned as a child process speaking over its standard pipes. A client
//! owns one connection and serializes requests on it.

use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{ClassifyError, Prediction};
use crate::corpus::LabeledSample;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Endpoint {
    /// `host:port` of a listening backend.
    Tcp { address: String },
    /// Program started with its stdin/stdout as the channel.
    Process { program: String, args: Vec<String> },
}

impl Endpoint {
    /// `tcp://host:port` or `exec:program arg...`; a bare `host:port` is TCP.
    pub fn parse(s: &str) -> Result<Self, ClassifyError> {
        if let Some(rest) = s.strip_prefix("exec:") {
            let mut parts = rest.split_whitespace().map(String::from);
            let program = parts.next().ok_or_else(|| ClassifyError::InvalidConfig("empty backend command".into()))?;
            return Ok(Endpoint::Process { program, args: parts.collect() });
        }
        let address = s.strip_prefix("tcp://").unwrap_or(s);
        if address.is_empty() || !address.contains(':') {
            return Err(ClassifyError::InvalidConfig(format!("backend endpoint {s:?} is not host:port")));
        }
        Ok(Endpoint::Tcp { address: address.to_string() })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinetuneConfig {
    pub epochs: u32,
    pub learning_rate: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        FinetuneConfig { epochs: 10, learning_rate: 2e-5, adam_epsilon: 1e-8, seed: 0 }
    }
}

impl FinetuneConfig {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), ClassifyError> {
        if self.epochs == 0 || !(self.learning_rate > 0.0) || !(self.adam_epsilon > 0.0) {
            return Err(ClassifyError::InvalidConfig(
                "fine-tune epochs, learning rate and epsilon must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackendHandle {
    pub endpoint: Endpoint,
    pub config: FinetuneConfig,
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "lowercase")]
pub enum Request {
    Train { train_path: String, val_path: String, config: FinetuneConfig },
    Predict { model_id: String, texts: Vec<String> },
    Ping,
}

#[derive(Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl Response {
    pub fn ok() -> Self {
        Response { status: "ok".into(), ..Default::default() }
    }

    pub fn error(message: impl Into<String>) -> Self {
        Response { status: "error".into(), message: Some(message.into()), ..Default::default() }
    }
}

struct Connection {
    reader: Box<dyn BufRead + Send>,
    writer: Box<dyn Write + Send>,
    child: Option<Child>,
}

impl Drop for Connection {
    fn drop(&mut self) {
        if let Some(child) = &mut self.child {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

fn transport(e: impl std::fmt::Display) -> ClassifyError {
    ClassifyError::Transport(e.to_string())
}

impl Connection {
    fn open(endpoint: &Endpoint) -> Result<Self, ClassifyError> {
        match endpoint {
            Endpoint::Tcp { address } => {
                let stream = TcpStream::connect(address).map_err(|e| transport(format!("{address}: {e}")))?;
                let reader = BufReader::new(stream.try_clone().map_err(transport)?);
                Ok(Connection { reader: Box::new(reader), writer: Box::new(stream), child: None })
            }
            Endpoint::Process { program, args } => {
                let mut child = Command::new(program)
                    .args(args)
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()
                    .map_err(|e| transport(format!("{program}: {e}")))?;
                let stdin = child.stdin.take().ok_or_else(|| transport("child stdin unavailable"))?;
                let stdout = child.stdout.take().ok_or_else(|| transport("child stdout unavailable"))?;
                Ok(Connection { reader: Box::new(BufReader::new(stdout)), writer: Box::new(stdin), child: Some(child) })
            }
        }
    }

    fn round_trip(&mut self, line: &str) -> Result<String, ClassifyError> {
        self.writer.write_all(line.as_bytes()).map_err(transport)?;
        self.writer.write_all(b"\n").map_err(transport)?;
        self.writer.flush().map_err(transport)?;
        let mut reply = String::new();
        if self.reader.read_line(&mut reply).map_err(transport)? == 0 {
            return Err(transport("backend closed the connection"));
        }
        Ok(reply)
    }
}

pub struct BackendClient {
    handle: BackendHandle,
    conn: Mutex<Option<Connection>>,
}

impl BackendClient {
    pub fn new(handle: BackendHandle) -> Result<Self, ClassifyError> {
        handle.config.validate()?;
        Ok(BackendClient { handle, conn: Mutex::new(None) })
    }

    pub fn handle(&self) -> &BackendHandle {
        &self.handle
    }

    /// Sends one request and returns the `ok` response; backend errors come
    /// back as [`ClassifyError::Backend`] with the backend's message.
    pub fn request(&self, req: &Request) -> Result<Response, ClassifyError> {
        let line = serde_json::to_string(req).map_err(|e| ClassifyError::Protocol(e.to_string()))?;
        let mut guard = self.conn.lock().unwrap_or_else(|p| p.into_inner());
        if guard.is_none() {
            *guard = Some(Connection::open(&self.handle.endpoint)?);
        }
        let reply = match guard.as_mut().map(|c| c.round_trip(&line)) {
            Some(Ok(r)) => r,
            Some(Err(e)) => {
                // Drop the broken connection; the next call reconnects.
                *guard = None;
                return Err(e);
            }
            None => unreachable!(),
        };
        drop(guard);
        let resp: Response = serde_json::from_str(reply.trim_end())
            .map_err(|e| ClassifyError::Protocol(format!("unparseable response {:?}: {e}", reply.trim_end())))?;
        match resp.status.as_str() {
            "ok" => Ok(resp),
            "error" => Err(ClassifyError::Backend(resp.message.unwrap_or_default())),
            other => Err(ClassifyError::Protocol(format!("unknown status {other:?}"))),
        }
    }

    pub fn ping(&self) -> Result<(), ClassifyError> {
        self.request(&Request::Ping).map(|_| ())
    }

    pub fn finetune(&self, train_path: &Path, val_path: &Path) -> Result<String, ClassifyError> {
        let req = Request::Train {
            train_path: train_path.display().to_string(),
            val_path: val_path.display().to_string(),
            config: self.handle.config,
        };
        self.request(&req)?.model_id.ok_or_else(|| ClassifyError::Protocol("train response lacks model_id".into()))
    }

    pub fn predict_texts(&self, model_id: &str, texts: &[String]) -> Result<Vec<f64>, ClassifyError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let resp = self.request(&Request::Predict { model_id: model_id.to_string(), texts: texts.to_vec() })?;
        let scores = resp.scores.ok_or_else(|| ClassifyError::Protocol("predict response lacks scores".into()))?;
        if scores.len() != texts.len() {
            return Err(ClassifyError::Protocol(format!("{} scores for {} texts", scores.len(), texts.len())));
        }
        if let Some(bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(ClassifyError::Protocol(format!("score {bad} outside [0, 1]")));
        }
        Ok(scores)
    }

    pub fn predict(&self, model_id: &str, samples: &[LabeledSample]) -> Result<Vec<Prediction>, ClassifyError> {
        let texts: Vec<String> = samples.iter().map(|s| s.text.clone()).collect();
        let scores = self.predict_texts(model_id, &texts)?;
        Ok(samples.iter().zip(scores).map(|(s, p)| Prediction::new(s.id.clone(), p)).collect())
    }
}

/// A minimal in-process backend for tests and demos: training checks that
/// both files exist, prediction scores 0.9 for texts containing "rock" and
/// 0.1 otherwise.
pub mod stub {
    use std::collections::HashSet;
    use std::io::{BufRead, BufReader, Write};
    use std::net::{SocketAddr, TcpListener};
    use std::path::Path;
    use std::sync::{Arc, Mutex};
    use std::thread;

    use super::{Request, Response};

    #[derive(Default)]
    pub struct StubState {
        models: HashSet<String>,
        next: usize,
    }

    pub fn handle_line(line: &str, state: &Mutex<StubState>) -> Response {
        let req: Request = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => return Response::error(format!("malformed request: {e}")),
        };
        let mut st = state.lock().unwrap_or_else(|p| p.into_inner());
        match req {
            Request::Ping => Response::ok(),
            Request::Train { train_path, val_path, .. } => {
                for p in [&train_path, &val_path] {
                    if !Path::new(p).exists() {
                        return Response::error(format!("no such file: {p}"));
                    }
                }
                st.next += 1;
                let id = format!("stub-{}", st.next);
                st.models.insert(id.clone());
                Response { model_id: Some(id), ..Response::ok() }
            }
            Request::Predict { model_id, texts } => {
                if !st.models.contains(&model_id) {
                    return Response::error(format!("unknown model_id: {model_id}"));
                }
                let scores = texts.iter().map(|t| if t.to_lowercase().contains("rock") { 0.9 } else { 0.1 }).collect();
                Response { scores: Some(scores), ..Response::ok() }
            }
        }
    }

    /// Serves every connection on its own thread until the process exits.
    pub fn spawn_tcp() -> std::io::Result<SocketAddr> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let state = Arc::new(Mutex::new(StubState::default()));
        thread::spawn(move || {
            for stream in listener.incoming().flatten() {
                let state = Arc::clone(&state);
                thread::spawn(move || {
                    let Ok(mut writer) = stream.try_clone() else { return };
                    for line in BufReader::new(stream).lines() {
                        let Ok(line) = line else { return };
                        let resp = handle_line(&line, &state);
                        let out = serde_json::to_string(&resp).expect("response serializes");
                        if writeln!(writer, "{out}").is_err() {
                            return;
                        }
                    }
                });
            }
        });
        Ok(addr)
    }

    /// Serves one session over arbitrary pipes (used by `cwb backend stub`).
    pub fn serve_pipes<R: BufRead, W: Write>(input: R, mut output: W) -> std::io::Result<()> {
        let state = Mutex::new(StubState::default());
        for line in input.lines() {
            let resp = handle_line(&line?, &state);
            writeln!(output, "{}", serde_json::to_string(&resp).expect("response serializes"))?;
            output.flush()?;
        }
        Ok(())
    }
}
