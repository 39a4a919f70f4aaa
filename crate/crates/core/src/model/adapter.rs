//! Line-delimited JSON access to an out-of-process model.
//!
//! Request:  `{"id": <int>, "code": <string>}\n`
//! Response: `{"id": <int>, "comment": <string>}\n`
//!
//! Several requests may be outstanding at once (up to `max_in_flight`);
//! responses may arrive in any order and are routed back to their caller by id.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, RecvTimeoutError, Sender};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{CommentModel, ModelError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "transport", content = "endpoint")]
pub enum Transport {
    /// Shell command line whose stdin/stdout speak the protocol.
    SubprocessStdio(String),
    /// `host:port`.
    Tcp(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdapterConfig {
    pub transport: Transport,
    pub timeout_ms: u64,
    pub max_in_flight: usize,
}

impl AdapterConfig {
    pub fn new(transport: Transport) -> Self {
        AdapterConfig {
            transport,
            timeout_ms: 30_000,
            max_in_flight: 4,
        }
    }
}

type Reply = Result<String, ModelError>;

#[derive(Default)]
struct Shared {
    pending: HashMap<u64, Sender<Reply>>,
    /// Ids given up on after a timeout; a late reply to one is dropped.
    abandoned: HashSet<u64>,
    /// Set once the connection is unusable; every later call fails with it.
    dead: Option<ModelError>,
}

struct Slots {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Slots {
    fn acquire(&self) {
        let mut free = self.free.lock().unwrap();
        while *free == 0 {
            free = self.cv.wait(free).unwrap();
        }
        *free -= 1;
    }

    fn release(&self) {
        *self.free.lock().unwrap() += 1;
        self.cv.notify_one();
    }
}

pub struct Adapter {
    writer: Mutex<Box<dyn Write + Send>>,
    shared: Arc<Mutex<Shared>>,
    next_id: AtomicU64,
    slots: Slots,
    timeout: Duration,
    child: Option<Mutex<Child>>,
    socket: Option<TcpStream>,
    reader: Option<JoinHandle<()>>,
}

/// Formats a request line exactly as documented above.
pub fn request_line(id: u64, code: &str) -> String {
    format!(
        "{{\"id\": {id}, \"code\": {}}}\n",
        serde_json::to_string(code).expect("strings serialize")
    )
}

pub fn response_line(id: u64, comment: &str) -> String {
    format!(
        "{{\"id\": {id}, \"comment\": {}}}\n",
        serde_json::to_string(comment).expect("strings serialize")
    )
}

fn error_line(id: Option<u64>, message: &str) -> String {
    let id = id.map_or("null".to_string(), |i| i.to_string());
    format!(
        "{{\"id\": {id}, \"error\": {}}}\n",
        serde_json::to_string(message).expect("strings serialize")
    )
}

impl Adapter {
    pub fn connect(config: &AdapterConfig) -> Result<Self, ModelError> {
        let transport_err = |e: std::io::Error| ModelError::Transport(e.to_string());
        match &config.transport {
            Transport::SubprocessStdio(cmdline) => {
                let mut child = Command::new("sh")
                    .arg("-c")
                    .arg(cmdline)
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()
                    .map_err(transport_err)?;
                let stdin = child.stdin.take().expect("piped stdin");
                let stdout = child.stdout.take().expect("piped stdout");
                Ok(Self::from_streams(
                    Box::new(stdin),
                    Box::new(stdout),
                    Some(child),
                    config,
                ))
            }
            Transport::Tcp(addr) => {
                let stream = TcpStream::connect(addr).map_err(transport_err)?;
                stream.set_nodelay(true).ok();
                let read = stream.try_clone().map_err(transport_err)?;
                let socket = stream.try_clone().map_err(transport_err)?;
                let mut adapter =
                    Self::from_streams(Box::new(stream), Box::new(read), None, config);
                adapter.socket = Some(socket);
                Ok(adapter)
            }
        }
    }

    /// Builds an adapter over arbitrary byte streams.
    pub fn from_streams(
        writer: Box<dyn Write + Send>,
        reader: Box<dyn Read + Send>,
        child: Option<Child>,
        config: &AdapterConfig,
    ) -> Self {
        let shared = Arc::new(Mutex::new(Shared::default()));
        let reader_shared = Arc::clone(&shared);
        let handle = thread::spawn(move || read_loop(BufReader::new(reader), reader_shared));
        Adapter {
            writer: Mutex::new(writer),
            shared,
            next_id: AtomicU64::new(0),
            slots: Slots {
                free: Mutex::new(config.max_in_flight.max(1)),
                cv: Condvar::new(),
            },
            timeout: Duration::from_millis(config.timeout_ms),
            child: child.map(Mutex::new),
            socket: None,
            reader: Some(handle),
        }
    }

    fn send_once(&self) -> impl Fn(&str) -> Result<Reply, u64> + '_ {
        move |code: &str| {
            let id = self.next_id.fetch_add(1, Ordering::Relaxed);
            let (tx, rx) = mpsc::channel();
            {
                let mut sh = self.shared.lock().unwrap();
                if let Some(err) = &sh.dead {
                    return Ok(Err(err.clone()));
                }
                sh.pending.insert(id, tx);
            }
            let written = {
                let mut w = self.writer.lock().unwrap();
                w.write_all(request_line(id, code).as_bytes())
                    .and_then(|_| w.flush())
            };
            if let Err(e) = written {
                self.shared.lock().unwrap().pending.remove(&id);
                return Ok(Err(ModelError::Transport(e.to_string())));
            }
            match rx.recv_timeout(self.timeout) {
                Ok(reply) => Ok(reply),
                Err(RecvTimeoutError::Timeout) => {
                    let mut sh = self.shared.lock().unwrap();
                    if sh.pending.remove(&id).is_some() {
                        sh.abandoned.insert(id);
                    }
                    Err(id)
                }
                Err(RecvTimeoutError::Disconnected) => {
                    Ok(Err(ModelError::Transport("reader stopped".to_string())))
                }
            }
        }
    }
}

impl CommentModel for Adapter {
    /// Sends one request and waits for its response; a timed-out request is
    /// retried once under a fresh id before reporting [`ModelError::Timeout`].
    fn generate(&self, code: &str) -> Result<String, ModelError> {
        self.slots.acquire();
        let send = self.send_once();
        let out = match send(code) {
            Ok(reply) => reply,
            Err(_) => match send(code) {
                Ok(reply) => reply,
                Err(id) => Err(ModelError::Timeout { id }),
            },
        };
        self.slots.release();
        out
    }
}

impl Drop for Adapter {
    fn drop(&mut self) {
        // EOF on the model's stdin lets a well-behaved server exit by itself
        *self.writer.lock().unwrap() = Box::new(std::io::sink());
        if let Some(child) = &self.child {
            let mut child = child.lock().unwrap();
            let _ = child.kill();
            let _ = child.wait();
        }
        // Only a shut-down socket guarantees the reader wakes up; a pipe may be
        // held open by processes the shell spawned, so that reader is detached.
        if let Some(socket) = &self.socket {
            let _ = socket.shutdown(std::net::Shutdown::Both);
            if let Some(h) = self.reader.take() {
                let _ = h.join();
            }
        }
    }
}

fn fail_all(shared: &Mutex<Shared>, err: ModelError) {
    let mut sh = shared.lock().unwrap();
    for (_, tx) in sh.pending.drain() {
        let _ = tx.send(Err(err.clone()));
    }
    sh.dead.get_or_insert(err);
}

#[derive(Deserialize)]
struct RawResponse {
    id: Option<u64>,
    comment: Option<String>,
    error: Option<String>,
}

fn read_loop(mut reader: impl BufRead, shared: Arc<Mutex<Shared>>) {
    let mut line = String::new();
    loop {
        line.clear();
        match reader.read_line(&mut line) {
            Ok(0) => {
                fail_all(
                    &shared,
                    ModelError::Transport("model closed its output".to_string()),
                );
                return;
            }
            Ok(_) => {}
            Err(e) => {
                fail_all(&shared, ModelError::Transport(e.to_string()));
                return;
            }
        }
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawResponse = match serde_json::from_str(line.trim_end()) {
            Ok(r) => r,
            Err(e) => {
                fail_all(
                    &shared,
                    ModelError::Malformed(format!("{e}: {}", line.trim_end())),
                );
                return;
            }
        };
        let Some(id) = raw.id else {
            fail_all(
                &shared,
                ModelError::Malformed("response without id".to_string()),
            );
            return;
        };
        let mut sh = shared.lock().unwrap();
        let Some(tx) = sh.pending.remove(&id) else {
            if sh.abandoned.remove(&id) {
                continue;
            }
            drop(sh);
            fail_all(
                &shared,
                ModelError::Protocol(format!("response for unknown id {id}")),
            );
            return;
        };
        let reply = match (raw.comment, raw.error) {
            (Some(c), _) => Ok(c),
            (None, Some(e)) => Err(ModelError::Malformed(format!("model error: {e}"))),
            (None, None) => Err(ModelError::Malformed(
                "response without comment".to_string(),
            )),
        };
        let _ = tx.send(reply);
    }
}

#[derive(Deserialize)]
struct RawRequest {
    id: u64,
    code: String,
}

/// Serves `model` over the protocol until `input` reaches EOF. Requests are
/// answered in arrival order.
pub fn serve(
    model: &dyn CommentModel,
    input: impl BufRead,
    mut output: impl Write,
) -> std::io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = match serde_json::from_str::<RawRequest>(&line) {
            Ok(req) => match model.generate(&req.code) {
                Ok(comment) => response_line(req.id, &comment),
                Err(e) => error_line(Some(req.id), &e.to_string()),
            },
            Err(e) => {
                let id = serde_json::from_str::<serde_json::Value>(&line)
                    .ok()
                    .and_then(|v| v.get("id").and_then(|i| i.as_u64()));
                error_line(id, &e.to_string())
            }
        };
        output.write_all(reply.as_bytes())?;
        output.flush()?;
    }
    Ok(())
}
