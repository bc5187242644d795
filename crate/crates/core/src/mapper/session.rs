use std::fmt;
use std::str::FromStr;

use log::trace;

use crate::sim::reference::{CLOSE, FULL_CHLO, GET, INIT_CHLO, ZERO_RTT_CHLO};
use crate::sim::{
    ConcretePacket, Frame, FrameKind, DOMAIN, TAG_SCFG, TAG_SNI, TAG_STK, UNSET_CONN_ID,
};
use crate::sul::{AbstractSul, ConcreteSul, SulError};
use crate::symbol::{Output, Symbol};

pub const OUT_REJ: &str = "REJ";
pub const OUT_SHLO: &str = "SHLO";
pub const OUT_HTTP: &str = "HTTP";
pub const OUT_CLOSED: &str = "CLOSED";
pub const OUT_PRST: &str = "PRST";
/// No response within the wait window.
pub const OUT_EXP: &str = "EXP";

/// The inputs the mapper knows how to concretize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuicInput {
    InitChlo,
    FullChlo,
    ZeroRttChlo,
    Get,
    Close,
}

impl QuicInput {
    pub const ALL: [QuicInput; 5] = [
        QuicInput::InitChlo,
        QuicInput::FullChlo,
        QuicInput::ZeroRttChlo,
        QuicInput::Get,
        QuicInput::Close,
    ];

    pub fn name(self) -> &'static str {
        match self {
            QuicInput::InitChlo => INIT_CHLO,
            QuicInput::FullChlo => FULL_CHLO,
            QuicInput::ZeroRttChlo => ZERO_RTT_CHLO,
            QuicInput::Get => GET,
            QuicInput::Close => CLOSE,
        }
    }

    pub fn symbol(self) -> Symbol {
        Symbol::new(self.name())
    }
}

impl fmt::Display for QuicInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QuicInput {
    type Err = SulError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        QuicInput::ALL
            .into_iter()
            .find(|i| i.name() == s)
            .ok_or_else(|| SulError::UnknownSymbol(Symbol::new(s)))
    }
}

impl TryFrom<&Symbol> for QuicInput {
    type Error = SulError;

    fn try_from(s: &Symbol) -> Result<Self, Self::Error> {
        s.as_str().parse()
    }
}

/// SCFG/STK values captured from the last REJ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredTags {
    pub scfg: String,
    pub stk: String,
}

/// The mapper's minimal client state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapperSession {
    next_conn_id: i64,
    current_conn_id: i64,
    stored_tags: Option<StoredTags>,
}

impl Default for MapperSession {
    fn default() -> Self {
        Self::new()
    }
}

impl MapperSession {
    pub fn new() -> Self {
        Self {
            next_conn_id: 0,
            current_conn_id: UNSET_CONN_ID,
            stored_tags: None,
        }
    }

    pub fn current_conn_id(&self) -> i64 {
        self.current_conn_id
    }

    pub fn next_conn_id(&self) -> i64 {
        self.next_conn_id
    }

    pub fn stored_tags(&self) -> Option<&StoredTags> {
        self.stored_tags.as_ref()
    }

    /// Forgets the current connection and stored tags. The connection-id
    /// counter keeps counting.
    pub fn reset(&mut self) {
        self.current_conn_id = UNSET_CONN_ID;
        self.stored_tags = None;
    }

    fn fresh_conn(&mut self) -> i64 {
        let id = self.next_conn_id;
        self.next_conn_id += 1;
        self.current_conn_id = id;
        id
    }

    fn chlo(&self, with_tags: bool) -> Frame {
        let frame = Frame::new(FrameKind::Chlo);
        match (&self.stored_tags, with_tags) {
            (Some(t), true) => frame
                .with_tag(TAG_SCFG, t.scfg.clone())
                .with_tag(TAG_STK, t.stk.clone()),
            _ => frame,
        }
    }

    /// Translates an abstract input into the packet to send.
    pub fn concretize(&mut self, input: QuicInput) -> ConcretePacket {
        match input {
            QuicInput::InitChlo => {
                let id = self.fresh_conn();
                ConcretePacket::single(id, self.chlo(false))
            }
            QuicInput::FullChlo => ConcretePacket::single(self.current_conn_id, self.chlo(true)),
            QuicInput::ZeroRttChlo => {
                let id = self.fresh_conn();
                ConcretePacket::single(id, self.chlo(true))
            }
            QuicInput::Get => ConcretePacket::single(
                self.current_conn_id,
                Frame::new(FrameKind::HttpGet).with_tag(TAG_SNI, DOMAIN),
            ),
            QuicInput::Close => {
                ConcretePacket::single(self.current_conn_id, Frame::new(FrameKind::ConnClose))
            }
        }
    }

    /// Translates a response (or silence) into an abstract output. Only a
    /// REJ touches the session, by storing its tags.
    pub fn abstractize(&mut self, response: Option<&ConcretePacket>) -> Output {
        let Some(packet) = response else {
            return Output::new(OUT_EXP);
        };
        if packet.is_ack_only() {
            // Acks are not responses as far as the client is concerned.
            return Output::new(OUT_EXP);
        }
        let Some(frame) = packet.primary() else {
            return Output::new(OUT_EXP);
        };
        match frame.kind {
            FrameKind::Rej => {
                if let (Some(scfg), Some(stk)) = (frame.tag(TAG_SCFG), frame.tag(TAG_STK)) {
                    self.stored_tags = Some(StoredTags {
                        scfg: scfg.to_string(),
                        stk: stk.to_string(),
                    });
                }
                Output::new(OUT_REJ)
            }
            FrameKind::Shlo => Output::new(OUT_SHLO),
            FrameKind::HttpResp => Output::new(OUT_HTTP),
            FrameKind::ConnClose => Output::new(OUT_CLOSED),
            FrameKind::Prst => Output::new(OUT_PRST),
            other => Output::new(format!("UNKNOWN:{other}")),
        }
    }
}

/// A mapper session bound to a concrete SUL: an abstract SUL.
#[derive(Debug)]
pub struct Mapper<S> {
    session: MapperSession,
    sul: S,
    acks_seen: u64,
}

impl<S: ConcreteSul> Mapper<S> {
    pub fn new(sul: S) -> Self {
        Self {
            session: MapperSession::new(),
            sul,
            acks_seen: 0,
        }
    }

    pub fn session(&self) -> &MapperSession {
        &self.session
    }

    pub fn sul(&self) -> &S {
        &self.sul
    }

    pub fn sul_mut(&mut self) -> &mut S {
        &mut self.sul
    }

    /// Raw acknowledgement-only responses seen so far (reported as `EXP`).
    pub fn acks_seen(&self) -> u64 {
        self.acks_seen
    }
}

impl<S: ConcreteSul> AbstractSul for Mapper<S> {
    fn reset(&mut self) -> Result<(), SulError> {
        self.session.reset();
        self.sul.reset()
    }

    fn step(&mut self, input: &Symbol) -> Result<Output, SulError> {
        let input = QuicInput::try_from(input)?;
        let packet = self.session.concretize(input);
        let response = self.sul.send(&packet)?;
        if response.as_ref().is_some_and(ConcretePacket::is_ack_only) {
            self.acks_seen += 1;
            trace!("{input}: ack-only response {}", response.as_ref().unwrap());
        }
        let out = self.session.abstractize(response.as_ref());
        trace!(
            "{input} -> {packet} => {} ({out})",
            response
                .as_ref()
                .map_or("-".to_string(), ToString::to_string)
        );
        Ok(out)
    }
}
