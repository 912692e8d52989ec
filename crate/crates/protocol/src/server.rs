//! The long-running audit service: accepts connections, decodes one envelope
//! per line, dispatches to the audit handlers, and replies in request order.
//!
//! Decode failures are answered with an `error{code:"decode"}` envelope and
//! the connection stays open. Cross-connection concurrency is bounded by a
//! worker limit; per-connection processing is serial.

use crate::asp::{Asp, AspError, Event};
use crate::wire::{decode, encode, Envelope, WireError, MAX_LINE_BYTES};
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;
use thiserror::Error;
use zkmcp_core::proof::{load_crs, ProofBundle, ProofError};

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("bind {addr}: {source}")]
    BindFailure { addr: String, source: std::io::Error },
    #[error("corrupt key bundle: {0}")]
    CorruptCrs(String),
    #[error(transparent)]
    Asp(#[from] AspError),
    #[error("storage: {0}")]
    Storage(std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub listen: String,
    /// Maximum concurrently served connections.
    pub worker_limit: usize,
    /// Per-read idle timeout; the accept/read loops poll the shutdown flag
    /// at this cadence.
    pub poll_interval: Duration,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            listen: "127.0.0.1:0".to_string(),
            worker_limit: 32,
            poll_interval: Duration::from_millis(200),
        }
    }
}

/// Handle to a running server; dropping it shuts the server down.
pub struct RunningServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    accept_thread: Option<std::thread::JoinHandle<()>>,
}

impl RunningServer {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(mut self) {
        self.stop_now();
    }

    fn stop_now(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // Nudge the accept loop.
        let _ = TcpStream::connect(self.addr);
        if let Some(handle) = self.accept_thread.take() {
            let _ = handle.join();
        }
    }
}

impl Drop for RunningServer {
    fn drop(&mut self) {
        if self.accept_thread.is_some() {
            self.stop_now();
        }
    }
}

/// Loads keys and storage from disk and serves until shut down.
pub fn serve_asp(
    listen: &str,
    crs_path: &Path,
    storage_dir: &Path,
    allow_insecure: bool,
) -> Result<(Arc<Asp>, RunningServer), ServeError> {
    let crs = load_crs(crs_path).map_err(|e| ServeError::CorruptCrs(e.to_string()))?;
    let store = crate::storage::AuditStore::open(storage_dir).map_err(ServeError::Storage)?;
    let asp = Arc::new(Asp::new(&crs, store, allow_insecure)?);
    let config = ServerConfig { listen: listen.to_string(), ..ServerConfig::default() };
    let server = spawn(Arc::clone(&asp), config)?;
    Ok((asp, server))
}

/// Starts the server around an existing service instance.
pub fn spawn(asp: Arc<Asp>, config: ServerConfig) -> Result<RunningServer, ServeError> {
    let listener = TcpListener::bind(&config.listen)
        .map_err(|source| ServeError::BindFailure { addr: config.listen.clone(), source })?;
    let addr = listener.local_addr().map_err(|source| ServeError::BindFailure {
        addr: config.listen.clone(),
        source,
    })?;
    let stop = Arc::new(AtomicBool::new(false));
    let active = Arc::new(AtomicUsize::new(0));

    let accept_thread = {
        let stop = Arc::clone(&stop);
        std::thread::spawn(move || {
            for incoming in listener.incoming() {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                let stream = match incoming {
                    Ok(s) => s,
                    Err(e) => {
                        log::warn!("accept failed: {e}");
                        continue;
                    }
                };
                // Bounded worker pool: shed connections over the limit after
                // a short wait instead of queueing unboundedly.
                let mut waited = Duration::ZERO;
                let admitted = loop {
                    let claim = active.fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| {
                        (n < config.worker_limit).then_some(n + 1)
                    });
                    if claim.is_ok() {
                        break true;
                    }
                    if waited > Duration::from_secs(5) || stop.load(Ordering::SeqCst) {
                        break false;
                    }
                    std::thread::sleep(Duration::from_millis(5));
                    waited += Duration::from_millis(5);
                };
                if !admitted {
                    log::warn!("worker limit reached; dropping connection");
                    continue;
                }
                let asp = Arc::clone(&asp);
                let stop = Arc::clone(&stop);
                let active = Arc::clone(&active);
                let poll = config.poll_interval;
                std::thread::spawn(move || {
                    if let Err(e) = serve_connection(&asp, stream, &stop, poll) {
                        log::debug!("connection ended: {e}");
                    }
                    active.fetch_sub(1, Ordering::SeqCst);
                });
            }
        })
    };

    Ok(RunningServer { addr, stop, accept_thread: Some(accept_thread) })
}

fn serve_connection(
    asp: &Asp,
    stream: TcpStream,
    stop: &AtomicBool,
    poll: Duration,
) -> std::io::Result<()> {
    stream.set_read_timeout(Some(poll))?;
    let mut writer = stream.try_clone()?;
    let mut reader = BufReader::new(stream);
    let mut line = String::new();
    loop {
        if stop.load(Ordering::SeqCst) {
            return Ok(());
        }
        line.clear();
        // Cap the line length; an oversized line is drained and answered
        // with an error, and the connection survives.
        let mut limited = (&mut reader).take((MAX_LINE_BYTES + 1) as u64);
        match limited.read_line(&mut line) {
            Ok(0) => return Ok(()),
            Ok(_) => {}
            Err(e)
                if e.kind() == std::io::ErrorKind::WouldBlock
                    || e.kind() == std::io::ErrorKind::TimedOut =>
            {
                continue
            }
            Err(e) => return Err(e),
        }
        if line.len() > MAX_LINE_BYTES {
            drain_line(&mut reader)?;
            reply(&mut writer, &Envelope::Error {
                s_id: String::new(),
                code: "too_long".into(),
                message: format!("line exceeds {MAX_LINE_BYTES} bytes"),
            })?;
            continue;
        }
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.is_empty() {
            continue;
        }
        let response = handle_line(asp, trimmed);
        reply(&mut writer, &response)?;
    }
}

/// Consumes input up to and including the next newline.
fn drain_line(reader: &mut BufReader<TcpStream>) -> std::io::Result<()> {
    let mut byte = [0u8; 1];
    loop {
        match reader.read(&mut byte) {
            Ok(0) => return Ok(()),
            Ok(_) if byte[0] == b'\n' => return Ok(()),
            Ok(_) => {}
            Err(e)
                if e.kind() == std::io::ErrorKind::WouldBlock
                    || e.kind() == std::io::ErrorKind::TimedOut =>
            {
                continue
            }
            Err(e) => return Err(e),
        }
    }
}

fn reply(writer: &mut TcpStream, envelope: &Envelope) -> std::io::Result<()> {
    let mut text = encode(envelope);
    text.push('\n');
    writer.write_all(text.as_bytes())?;
    writer.flush()
}

/// Decodes one line and dispatches it, mapping every failure to an error
/// envelope.
pub fn handle_line(asp: &Asp, line: &str) -> Envelope {
    let envelope = match decode(line) {
        Ok(e) => e,
        Err(WireError::Version { s_id, version }) => {
            return Envelope::Error {
                s_id,
                code: "version".into(),
                message: format!("unsupported protocol version {version:?}"),
            }
        }
        Err(WireError::TooLong { got, max }) => {
            return Envelope::Error {
                s_id: String::new(),
                code: "too_long".into(),
                message: format!("line of {got} bytes exceeds {max}"),
            }
        }
        Err(WireError::Decode(message)) => {
            return Envelope::Error { s_id: String::new(), code: "decode".into(), message }
        }
    };
    let event = match to_event(envelope) {
        Ok(event) => event,
        Err(reply) => return *reply,
    };
    let s_id = event.s_id().to_string();
    match asp.handle(event) {
        Ok(crate::asp::Reply::Ack { s_id }) => Envelope::Ack { s_id },
        Ok(crate::asp::Reply::AuditResult { s_id, status, reason }) => {
            Envelope::AuditResult { s_id, status, reason }
        }
        Err(err) => {
            let code = match &err {
                AspError::UnknownSession(_) => "unknown_session",
                AspError::IllegalTransition { .. } => "illegal_transition",
                AspError::Shape(_) => "shape",
                AspError::InsecureBackendRefused => "insecure_backend",
                AspError::Proof(ProofError::ShapeMismatch(_)) => "shape",
                AspError::Proof(_) => "proof",
                AspError::Storage(_) => "storage",
            };
            Envelope::Error { s_id, code: code.into(), message: err.to_string() }
        }
    }
}

fn to_event(envelope: Envelope) -> Result<Event, Box<Envelope>> {
    match envelope {
        Envelope::SessionStart { s_id, initiator, peer } => {
            Ok(Event::SessionStart { s_id, initiator, peer })
        }
        Envelope::AuditRequest { s_id, statement, proof, submitter, filler_count } => {
            Ok(Event::AuditRequest {
                bundle: ProofBundle {
                    proof,
                    statement,
                    s_id,
                    created_at: zkmcp_core::proof::now_ms(),
                },
                submitter,
                filler_count,
            })
        }
        Envelope::SessionClose { s_id } => Ok(Event::SessionClose { s_id }),
        other => Err(Box::new(Envelope::Error {
            s_id: other.s_id().to_string(),
            code: "decode".into(),
            message: format!("{} is not an inbound event", other.kind()),
        })),
    }
}

/// Reads the default storage root from `ZKMCP_DATA_DIR`, falling back to
/// `./zkmcp-data`.
pub fn default_data_dir() -> std::path::PathBuf {
    std::env::var_os(wire_env::DATA_DIR)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::path::PathBuf::from("zkmcp-data"))
}

pub mod wire_env {
    /// Environment variable naming the default storage root.
    pub const DATA_DIR: &str = "ZKMCP_DATA_DIR";
}
