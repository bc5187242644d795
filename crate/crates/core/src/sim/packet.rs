//! Simplified QUIC packets at tag/value granularity.

use std::collections::BTreeMap;
use std::fmt;

/// Connection id used when no connection has been opened yet.
pub const UNSET_CONN_ID: i64 = -1;
/// Stream carrying handshake messages.
pub const HANDSHAKE_STREAM: u32 = 1;
/// Stream carrying compressed HTTP headers.
pub const HEADERS_STREAM: u32 = 3;
/// Connection-level frames (ACK, CONNECTION_CLOSE, PUBLIC_RESET) carry no stream.
pub const CONNECTION_LEVEL: u32 = 0;

pub const TAG_SCFG: &str = "SCFG";
pub const TAG_STK: &str = "STK";
pub const TAG_SNI: &str = "SNI";
pub const DOMAIN: &str = "www.example.org";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FrameKind {
    Chlo,
    Rej,
    Shlo,
    HttpGet,
    HttpResp,
    Ack,
    ConnClose,
    Prst,
}

impl FrameKind {
    pub fn name(self) -> &'static str {
        match self {
            FrameKind::Chlo => "CHLO",
            FrameKind::Rej => "REJ",
            FrameKind::Shlo => "SHLO",
            FrameKind::HttpGet => "HTTP_GET",
            FrameKind::HttpResp => "HTTP_RESP",
            FrameKind::Ack => "ACK",
            FrameKind::ConnClose => "CONN_CLOSE",
            FrameKind::Prst => "PRST",
        }
    }

    /// The stream a frame of this kind must travel on.
    pub fn stream(self) -> u32 {
        match self {
            FrameKind::Chlo | FrameKind::Rej | FrameKind::Shlo => HANDSHAKE_STREAM,
            FrameKind::HttpGet | FrameKind::HttpResp => HEADERS_STREAM,
            FrameKind::Ack | FrameKind::ConnClose | FrameKind::Prst => CONNECTION_LEVEL,
        }
    }

    pub fn is_handshake(self) -> bool {
        self.stream() == HANDSHAKE_STREAM
    }
}

impl fmt::Display for FrameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub kind: FrameKind,
    pub stream_id: u32,
    pub tags: BTreeMap<String, String>,
}

impl Frame {
    /// A frame on its canonical stream with no tags.
    pub fn new(kind: FrameKind) -> Self {
        Self {
            kind,
            stream_id: kind.stream(),
            tags: BTreeMap::new(),
        }
    }

    pub fn with_tag(mut self, key: &str, value: impl Into<String>) -> Self {
        self.tags.insert(key.to_string(), value.into());
        self
    }

    pub fn tag(&self, key: &str) -> Option<&str> {
        self.tags.get(key).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcretePacket {
    pub conn_id: i64,
    pub frames: Vec<Frame>,
}

impl ConcretePacket {
    pub fn new(conn_id: i64, frames: Vec<Frame>) -> Self {
        Self { conn_id, frames }
    }

    pub fn single(conn_id: i64, frame: Frame) -> Self {
        Self::new(conn_id, vec![frame])
    }

    /// The first frame that is not an acknowledgement.
    pub fn primary(&self) -> Option<&Frame> {
        self.frames.iter().find(|f| f.kind != FrameKind::Ack)
    }

    pub fn is_ack_only(&self) -> bool {
        !self.frames.is_empty() && self.frames.iter().all(|f| f.kind == FrameKind::Ack)
    }

    /// Structural checks: non-empty, at most one handshake frame, every
    /// frame on its canonical stream, GETs addressed to the fixed domain.
    pub fn validate(&self) -> Result<(), String> {
        if self.frames.is_empty() {
            return Err("packet without frames".into());
        }
        if self.frames.iter().filter(|f| f.kind.is_handshake()).count() > 1 {
            return Err("more than one handshake frame".into());
        }
        for f in &self.frames {
            if f.stream_id != f.kind.stream() {
                return Err(format!("{} on stream {}", f.kind, f.stream_id));
            }
            if f.kind == FrameKind::HttpGet && f.tag(TAG_SNI) != Some(DOMAIN) {
                return Err("GET for an unexpected host".into());
            }
        }
        Ok(())
    }
}

impl fmt::Display for ConcretePacket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.conn_id)?;
        for frame in &self.frames {
            write!(f, " {}", frame.kind)?;
            if !frame.tags.is_empty() {
                let tags: Vec<String> =
                    frame.tags.iter().map(|(k, v)| format!("{k}:{v}")).collect();
                write!(f, "{{{}}}", tags.join(","))?;
            }
        }
        Ok(())
    }
}
