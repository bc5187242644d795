//! A deterministic, optionally noisy, simulated QUIC handshake server.
//!
//! Cryptography is replaced by epoch-stamped opaque tokens: a full CHLO is
//! accepted iff its SCFG and STK tokens belong to the current config epoch.

mod packet;
pub mod reference;
mod server;

pub use packet::{
    ConcretePacket, Frame, FrameKind, CONNECTION_LEVEL, DOMAIN, HANDSHAKE_STREAM, HEADERS_STREAM,
    TAG_SCFG, TAG_SNI, TAG_STK, UNSET_CONN_ID,
};
pub use server::{config_token, Phase, ServerState};
