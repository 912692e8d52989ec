//! Request/reply client over the line protocol: one envelope out, one reply
//! in, correlated by session id. A [`Connection`] can carry any number of
//! sequential request/reply exchanges; replies come back in request order.

use crate::wire::{decode, encode, Envelope, WireError};
use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("connection refused by {0}")]
    ConnectionRefused(String),
    #[error("timed out waiting for a reply from {0}")]
    Timeout(String),
    #[error("connection closed before a reply arrived")]
    Closed,
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error("reply for session {got:?} does not match request {expected:?}")]
    CorrelationMismatch { expected: String, got: String },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// One open client connection.
pub struct Connection {
    addr: String,
    writer: TcpStream,
    reader: BufReader<TcpStream>,
}

impl Connection {
    pub fn open(addr: &str, timeout: Duration) -> Result<Self, TransportError> {
        let stream = TcpStream::connect(addr).map_err(|e| match e.kind() {
            std::io::ErrorKind::ConnectionRefused => TransportError::ConnectionRefused(addr.into()),
            _ => TransportError::Io(e),
        })?;
        stream.set_read_timeout(Some(timeout))?;
        stream.set_write_timeout(Some(timeout))?;
        let reader = BufReader::new(stream.try_clone()?);
        Ok(Self { addr: addr.to_string(), writer: stream, reader })
    }

    /// Sends one envelope and reads the matching reply.
    pub fn submit(&mut self, envelope: &Envelope) -> Result<Envelope, TransportError> {
        let mut line = encode(envelope);
        line.push('\n');
        self.writer.write_all(line.as_bytes())?;
        self.writer.flush()?;
        let reply = self.read_reply()?;
        if reply.s_id() != envelope.s_id() {
            return Err(TransportError::CorrelationMismatch {
                expected: envelope.s_id().to_string(),
                got: reply.s_id().to_string(),
            });
        }
        Ok(reply)
    }

    /// Sends without waiting; pair with [`Connection::read_reply`] to
    /// pipeline.
    pub fn send(&mut self, envelope: &Envelope) -> Result<(), TransportError> {
        let mut line = encode(envelope);
        line.push('\n');
        self.writer.write_all(line.as_bytes())?;
        self.writer.flush()?;
        Ok(())
    }

    pub fn read_reply(&mut self) -> Result<Envelope, TransportError> {
        let mut reply_line = String::new();
        match self.reader.read_line(&mut reply_line) {
            Ok(0) => return Err(TransportError::Closed),
            Ok(_) => {}
            Err(e)
                if e.kind() == std::io::ErrorKind::WouldBlock
                    || e.kind() == std::io::ErrorKind::TimedOut =>
            {
                return Err(TransportError::Timeout(self.addr.clone()))
            }
            Err(e) => return Err(TransportError::Io(e)),
        }
        Ok(decode(reply_line.trim_end_matches('\n'))?)
    }
}

/// Sends one envelope over a fresh connection and reads one reply.
pub fn submit_once(
    addr: &str,
    envelope: &Envelope,
    timeout: Duration,
) -> Result<Envelope, TransportError> {
    Connection::open(addr, timeout)?.submit(envelope)
}
