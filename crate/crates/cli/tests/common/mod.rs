#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Child, ChildStdout, Command, Output, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use cwb_core::ach::read_matrix;
use cwb_core::corpus::{write_jsonl, LabeledSample, SampleSource, Split};
use serde_json::{json, Value};

pub const BIN: &str = env!("CARGO_BIN_EXE_cwb");

pub fn cwb(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn cwb")
}

/// Runs `cwb` and panics with its stderr unless it exits 0.
pub fn cwb_ok(args: &[&str]) -> String {
    let out = cwb(args);
    assert!(out.status.success(), "cwb {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

pub fn sample(id: &str, text: &str, label: u8) -> LabeledSample {
    LabeledSample {
        id: id.into(),
        text: text.into(),
        label,
        substitutions: Vec::new(),
        source: SampleSource::User,
        split: Split::Test,
    }
}

pub fn write_samples(path: &Path, samples: &[LabeledSample]) {
    let mut f = std::fs::File::create(path).unwrap();
    write_jsonl(&mut f, samples).unwrap();
}

/// Positives mention "rock", negatives do not: the stub backend scores
/// this split perfectly.
pub fn stub_friendly_split() -> Vec<LabeledSample> {
    vec![
        sample("s1", "I will be out of the rock on Friday", 1),
        sample("s2", "I will be out of the office on Friday", 0),
        sample("s3", "Please send the rock to the manager by Monday", 1),
        sample("s4", "Please send the report to the manager by Monday", 0),
        sample("s5", "The meeting has been moved to Tuesday afternoon", 0),
    ]
}

/// A child process that printed one address line on startup; killed on drop.
pub struct Spawned {
    pub child: Child,
    pub line: String,
    _stdout: BufReader<ChildStdout>,
}

impl Spawned {
    pub fn start(args: &[&str]) -> Spawned {
        let mut child =
            Command::new(BIN).args(args).stdout(Stdio::piped()).stderr(Stdio::inherit()).spawn().expect("spawn cwb");
        let mut stdout = BufReader::new(child.stdout.take().unwrap());
        let mut line = String::new();
        stdout.read_line(&mut line).unwrap();
        assert!(!line.is_empty(), "cwb {args:?} exited before printing its address");
        Spawned { child, line: line.trim().to_string(), _stdout: stdout }
    }

    /// `host:port` from a line like `listening on http://127.0.0.1:4000`.
    pub fn addr(&self) -> String {
        self.line.rsplit("//").next().unwrap().to_string()
    }

    pub fn kill9(&mut self) {
        self.child.kill().unwrap();
        self.child.wait().unwrap();
    }
}

impl Drop for Spawned {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub fn serve(data_dir: &Path) -> Spawned {
    let s = Spawned::start(&["serve", "--port", "0", "--data-dir", path_str(data_dir)]);
    assert!(s.line.starts_with("listening on http://"), "{}", s.line);
    s
}

/// One HTTP/1.1 request with `Connection: close`; returns status and JSON body.
pub fn try_http(addr: &str, method: &str, path: &str, body: Option<&Value>) -> std::io::Result<(u16, Value)> {
    let mut stream = TcpStream::connect(addr)?;
    stream.set_read_timeout(Some(Duration::from_secs(30)))?;
    let payload = body.map(|b| b.to_string()).unwrap_or_default();
    let mut req = format!("{method} {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n");
    if body.is_some() {
        req.push_str(&format!("Content-Type: application/json\r\nContent-Length: {}\r\n", payload.len()));
    }
    req.push_str("\r\n");
    req.push_str(&payload);
    stream.write_all(req.as_bytes())?;
    let mut raw = Vec::new();
    stream.read_to_end(&mut raw)?;
    let text = String::from_utf8_lossy(&raw);
    let (head, body) = text
        .split_once("\r\n\r\n")
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::UnexpectedEof, "truncated response"))?;
    let status = head
        .split_whitespace()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidData, "bad status line"))?;
    let value = if body.trim().is_empty() { Value::Null } else { serde_json::from_str(body).unwrap_or(Value::Null) };
    Ok((status, value))
}

pub fn http(addr: &str, method: &str, path: &str, body: Option<&Value>) -> (u16, Value) {
    try_http(addr, method, path, body).unwrap_or_else(|e| panic!("{method} {path}: {e}"))
}

/// Hammers rating writes, SIGKILLs the server mid-stream, and checks that
/// the stored matrix is intact and holds at least every acknowledged write.
pub fn kill_during_writes(data: &Path) -> Result<String, String> {
    let mut server = serve(data);
    let addr = server.addr();
    http(&addr, "POST", "/api/matrices", Some(&json!({"id": "case", "title": "t"})));
    for h in ["H1", "H2"] {
        http(&addr, "POST", "/api/matrices/case/hypotheses", Some(&json!({"id": h, "statement": h})));
    }
    let (_, m) = http(&addr, "POST", "/api/matrices/case/evidence", Some(&json!({"id": "E1", "description": "d"})));
    let start_rev = m["revision"].as_u64().ok_or("no revision")?;
    let stop = Arc::new(AtomicBool::new(false));
    let acked = {
        let stop = Arc::clone(&stop);
        let addr = addr.clone();
        thread::spawn(move || {
            let mut rev = start_rev;
            let mut i = 0u64;
            while !stop.load(Ordering::Relaxed) {
                let rating = if i.is_multiple_of(2) { "I" } else { "CC" };
                let body = json!({"evidence_id": "E1", "hypothesis_id": "H1", "rating": rating, "revision": rev});
                match try_http(&addr, "PUT", "/api/matrices/case/ratings", Some(&body)) {
                    Ok((200, v)) => rev = v["revision"].as_u64().unwrap(),
                    _ => break,
                }
                i += 1;
            }
            rev
        })
    };
    thread::sleep(Duration::from_millis(400));
    server.kill9();
    stop.store(true, Ordering::Relaxed);
    let acked = acked.join().unwrap();
    let stored =
        read_matrix(&data.join("matrices/case.json")).map_err(|e| format!("matrix unreadable after kill: {e}"))?;
    if acked <= start_rev + 5 {
        return Err(format!("only {} writes acknowledged before the kill", acked - start_rev));
    }
    if stored.revision != acked && stored.revision != acked + 1 {
        return Err(format!("stored revision {} but {} acknowledged", stored.revision, acked));
    }
    let restarted = serve(data);
    let (s, v) = http(&restarted.addr(), "GET", "/api/matrices/case", None);
    if s != 200 || v["revision"].as_u64() != Some(stored.revision) {
        return Err(format!("restart served {s} {v}"));
    }
    let body = json!({"evidence_id": "E1", "hypothesis_id": "H2", "rating": "C", "revision": stored.revision});
    let (s, _) = http(&restarted.addr(), "PUT", "/api/matrices/case/ratings", Some(&body));
    if s != 200 {
        return Err(format!("write after restart returned {s}"));
    }
    Ok(format!("{} writes acknowledged, stored revision {}", acked - start_rev, stored.revision))
}
