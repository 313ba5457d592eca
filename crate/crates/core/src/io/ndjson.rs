//! Newline-delimited JSON over TCP (connect or listen) and UDP datagrams.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, ErrorKind};
use std::net::{SocketAddr, TcpListener, TcpStream, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde_json::Value as Json;

use crate::adapter::{EventSource, FieldShape, RawRecord, RawValue, SourceField, SourceItem, SourceSchema, TransportError};

const POLL: Duration = Duration::from_millis(50);

/// Maps JSON objects onto the positions of a declared schema. Undeclared keys are ignored.
#[derive(Debug, Clone)]
pub struct NdjsonDecoder {
    schema: SourceSchema,
    index: Index,
}

#[derive(Debug, Clone, Default)]
struct Index(HashMap<String, (usize, Option<Index>)>);

impl Index {
    fn of(fields: &[SourceField]) -> Index {
        Index(
            fields
                .iter()
                .enumerate()
                .map(|(i, f)| {
                    let child = match &f.shape {
                        FieldShape::Record(c) => Some(Index::of(c)),
                        FieldShape::Scalar(_) => None,
                    };
                    (f.name.clone(), (i, child))
                })
                .collect(),
        )
    }
}

fn scalar(key: &str, v: &Json) -> Result<Option<RawValue>, String> {
    Ok(Some(match v {
        Json::Null => return Ok(None),
        Json::Bool(b) => RawValue::Bool(*b),
        Json::Number(n) => {
            if let Some(u) = n.as_u64() {
                RawValue::UInt(u)
            } else if let Some(i) = n.as_i64() {
                RawValue::Int(i)
            } else {
                RawValue::Float(n.as_f64().ok_or_else(|| format!("field `{key}`: number out of range"))?)
            }
        }
        Json::String(s) => RawValue::Text(s.clone()),
        Json::Array(_) | Json::Object(_) => return Err(format!("field `{key}` is not a scalar")),
    }))
}

fn place(obj: &serde_json::Map<String, Json>, index: &Index, width: usize) -> Result<Vec<Option<RawValue>>, String> {
    let mut values = vec![None; width];
    for (key, v) in obj {
        let Some((i, child)) = index.0.get(key) else { continue };
        values[*i] = match (child, v) {
            (Some(c), Json::Object(inner)) => Some(RawValue::Record(place(inner, c, c.0.len())?)),
            (Some(_), Json::Null) => None,
            (Some(_), _) => return Err(format!("field `{key}` should be an object")),
            (None, v) => scalar(key, v)?,
        };
    }
    Ok(values)
}

impl NdjsonDecoder {
    pub fn new(schema: SourceSchema) -> NdjsonDecoder {
        let index = Index::of(&schema.fields);
        NdjsonDecoder { schema, index }
    }

    pub fn schema(&self) -> &SourceSchema {
        &self.schema
    }

    /// Decodes one line; blank lines yield `None`.
    pub fn decode(&self, line: &[u8]) -> Option<SourceItem> {
        let text = match std::str::from_utf8(line) {
            Ok(t) => t.trim(),
            Err(_) => return Some(SourceItem::Malformed("line is not UTF-8".into())),
        };
        if text.is_empty() {
            return None;
        }
        Some(match serde_json::from_str::<Json>(text) {
            Ok(Json::Object(obj)) => match place(&obj, &self.index, self.schema.fields.len()) {
                Ok(values) => SourceItem::Record(RawRecord { values }),
                Err(e) => SourceItem::Malformed(e),
            },
            Ok(_) => SourceItem::Malformed("line is not a JSON object".into()),
            Err(e) => SourceItem::Malformed(format!("invalid JSON: {e}")),
        })
    }
}

/// NDJSON from one byte stream, such as an outgoing TCP connection.
/// A clean close after a complete line is end-of-stream; a close in the
/// middle of a line is a transport failure.
pub struct NdjsonStreamSource<R> {
    decoder: NdjsonDecoder,
    reader: R,
    line: Vec<u8>,
}

impl NdjsonStreamSource<BufReader<TcpStream>> {
    pub fn connect(addr: &str, schema: SourceSchema) -> Result<Self, TransportError> {
        let stream = TcpStream::connect(addr).map_err(|e| TransportError(format!("cannot connect to {addr}: {e}")))?;
        Ok(NdjsonStreamSource::new(BufReader::new(stream), schema))
    }
}

impl<R: BufRead + Send> NdjsonStreamSource<R> {
    pub fn new(reader: R, schema: SourceSchema) -> Self {
        NdjsonStreamSource { decoder: NdjsonDecoder::new(schema), reader, line: Vec::new() }
    }
}

impl<R: BufRead + Send> EventSource for NdjsonStreamSource<R> {
    fn schema(&self) -> &SourceSchema {
        self.decoder.schema()
    }

    fn next_item(&mut self) -> Result<Option<SourceItem>, TransportError> {
        loop {
            self.line.clear();
            let n = self.reader.read_until(b'\n', &mut self.line)?;
            if n == 0 {
                return Ok(None);
            }
            if self.line.last() != Some(&b'\n') {
                return Err(TransportError("connection closed in the middle of a record".into()));
            }
            if let Some(item) = self.decoder.decode(&self.line) {
                return Ok(Some(item));
            }
        }
    }
}

/// Accepts one peer at a time and waits for the next after a disconnect.
/// Ends when `stop` is set.
pub struct NdjsonListenSource {
    decoder: NdjsonDecoder,
    listener: TcpListener,
    peer: Option<BufReader<TcpStream>>,
    line: Vec<u8>,
    stop: Arc<AtomicBool>,
}

impl NdjsonListenSource {
    pub fn bind(addr: &str, schema: SourceSchema, stop: Arc<AtomicBool>) -> Result<Self, TransportError> {
        let listener = TcpListener::bind(addr).map_err(|e| TransportError(format!("cannot listen on {addr}: {e}")))?;
        listener.set_nonblocking(true)?;
        Ok(NdjsonListenSource { decoder: NdjsonDecoder::new(schema), listener, peer: None, line: Vec::new(), stop })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.listener.local_addr().expect("bound listener has an address")
    }
}

impl EventSource for NdjsonListenSource {
    fn schema(&self) -> &SourceSchema {
        self.decoder.schema()
    }

    fn next_item(&mut self) -> Result<Option<SourceItem>, TransportError> {
        loop {
            if self.stop.load(Ordering::SeqCst) {
                return Ok(None);
            }
            let Some(peer) = &mut self.peer else {
                match self.listener.accept() {
                    Ok((stream, _)) => {
                        stream.set_nonblocking(false)?;
                        stream.set_read_timeout(Some(POLL))?;
                        self.peer = Some(BufReader::new(stream));
                        self.line.clear();
                    }
                    Err(e) if e.kind() == ErrorKind::WouldBlock => std::thread::sleep(POLL),
                    Err(e) => return Err(e.into()),
                }
                continue;
            };
            match peer.read_until(b'\n', &mut self.line) {
                Ok(0) => {
                    self.peer = None;
                    if !self.line.is_empty() {
                        self.line.clear();
                        return Ok(Some(SourceItem::Malformed("peer disconnected in the middle of a record".into())));
                    }
                }
                Ok(_) if self.line.last() == Some(&b'\n') => {
                    let item = self.decoder.decode(&self.line);
                    self.line.clear();
                    if let Some(item) = item {
                        return Ok(Some(item));
                    }
                }
                Ok(_) => {}
                Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut | ErrorKind::Interrupted) => {}
                Err(e) => {
                    self.peer = None;
                    self.line.clear();
                    return Ok(Some(SourceItem::Warning(format!("peer connection lost: {e}"))));
                }
            }
        }
    }
}

/// One JSON object per datagram. Ends when `stop` is set.
pub struct UdpSource {
    decoder: NdjsonDecoder,
    socket: UdpSocket,
    buf: Vec<u8>,
    stop: Arc<AtomicBool>,
}

impl UdpSource {
    pub fn bind(addr: &str, schema: SourceSchema, stop: Arc<AtomicBool>) -> Result<Self, TransportError> {
        let socket = UdpSocket::bind(addr).map_err(|e| TransportError(format!("cannot bind {addr}: {e}")))?;
        socket.set_read_timeout(Some(POLL))?;
        Ok(UdpSource { decoder: NdjsonDecoder::new(schema), socket, buf: vec![0; 65536], stop })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.socket.local_addr().expect("bound socket has an address")
    }
}

impl EventSource for UdpSource {
    fn schema(&self) -> &SourceSchema {
        self.decoder.schema()
    }

    fn next_item(&mut self) -> Result<Option<SourceItem>, TransportError> {
        loop {
            if self.stop.load(Ordering::SeqCst) {
                return Ok(None);
            }
            match self.socket.recv(&mut self.buf) {
                Ok(n) => {
                    if let Some(item) = self.decoder.decode(&self.buf[..n]) {
                        return Ok(Some(item));
                    }
                }
                Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut | ErrorKind::Interrupted) => {}
                Err(e) => return Err(e.into()),
            }
        }
    }
}
