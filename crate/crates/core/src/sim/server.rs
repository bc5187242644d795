use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::packet::{ConcretePacket, Frame, FrameKind, TAG_SCFG, TAG_STK, UNSET_CONN_ID};
use crate::sul::{ConcreteSul, SulError};

/// Lifecycle of one server-side connection.
///
/// Phases only move forward along `Rejected -> Established -> Served`, and
/// any phase may move to `Closed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Rejected,
    Established,
    Served,
    Closed,
}

#[derive(Debug, Clone)]
struct Connection {
    phase: Phase,
    last_response: Option<ConcretePacket>,
}

/// Opaque server-config token for an epoch. Stands in for the SCFG/STK
/// material a real server would sign; validity is epoch equality.
pub fn config_token(epoch: u64) -> String {
    format!("e{epoch}")
}

/// A simulated QUIC handshake server.
#[derive(Debug, Clone)]
pub struct ServerState {
    config_epoch: u64,
    connections: HashMap<i64, Connection>,
    rng: ChaCha8Rng,
    noise_retx: f64,
    retransmissions: u64,
    responses: u64,
}

const NOISE_STREAM: u64 = 0x006e_6f69_7365;

impl ServerState {
    pub fn new(seed: u64) -> Self {
        Self::with_noise(seed, 0.0)
    }

    /// `noise_retx` is clamped to `[0, 1]`.
    pub fn with_noise(seed: u64, noise_retx: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Keep noise independent of anything else seeded with the same value.
        rng.set_stream(NOISE_STREAM);
        Self {
            config_epoch: 0,
            connections: HashMap::new(),
            rng,
            noise_retx: noise_retx.clamp(0.0, 1.0),
            retransmissions: 0,
            responses: 0,
        }
    }

    pub fn config_epoch(&self) -> u64 {
        self.config_epoch
    }

    pub fn noise_retx(&self) -> f64 {
        self.noise_retx
    }

    pub fn phase(&self, conn_id: i64) -> Option<Phase> {
        self.connections.get(&conn_id).map(|c| c.phase)
    }

    pub fn open_connections(&self) -> usize {
        self.connections.len()
    }

    /// Number of responses replaced by a retransmission so far.
    pub fn retransmissions(&self) -> u64 {
        self.retransmissions
    }

    /// Number of packets handled so far.
    pub fn responses(&self) -> u64 {
        self.responses
    }

    /// Forgets every connection. The config epoch and the noise generator
    /// carry over, so noise differs between queries.
    pub fn reset(&mut self) {
        self.connections.clear();
    }

    /// Starts a new config epoch; tokens from earlier epochs become stale.
    pub fn rotate_config(&mut self) {
        self.config_epoch += 1;
    }

    /// Handles one client packet: computes the true response, then lets
    /// [`inject_noise`](Self::inject_noise) possibly swap in a retransmission.
    pub fn handle(&mut self, packet: &ConcretePacket) -> Option<ConcretePacket> {
        self.responses += 1;
        let response = self.respond(packet);
        let observed = self.inject_noise(packet.conn_id, response.clone());
        if let (Some(r), Some(conn)) = (response, self.connections.get_mut(&packet.conn_id)) {
            conn.last_response = Some(r);
        }
        observed
    }

    /// With probability `noise_retx`, replaces `response` by the connection's
    /// previous response. Connections without history pass through.
    pub fn inject_noise(
        &mut self,
        conn_id: i64,
        response: Option<ConcretePacket>,
    ) -> Option<ConcretePacket> {
        if self.noise_retx <= 0.0 {
            return response;
        }
        let fire = self.rng.gen_bool(self.noise_retx);
        match self
            .connections
            .get(&conn_id)
            .and_then(|c| c.last_response.clone())
        {
            Some(previous) if fire => {
                self.retransmissions += 1;
                Some(previous)
            }
            _ => response,
        }
    }

    /// The noiseless response to `packet`, updating connection state.
    pub fn respond(&mut self, packet: &ConcretePacket) -> Option<ConcretePacket> {
        let id = packet.conn_id;
        let prst = || Some(ConcretePacket::single(id, Frame::new(FrameKind::Prst)));
        if packet.validate().is_err() {
            return prst();
        }
        // Acknowledgements are never answered.
        let frame = packet.primary()?;
        let known = self.connections.get(&id).map(|c| c.phase);
        if known == Some(Phase::Closed) {
            return prst();
        }

        match frame.kind {
            FrameKind::Chlo => {
                if id == UNSET_CONN_ID || id < 0 {
                    return prst();
                }
                match known {
                    // Handshake retransmissions on a live connection are ignored.
                    Some(Phase::Established | Phase::Served) => None,
                    _ => {
                        let current = config_token(self.config_epoch);
                        let valid = frame.tag(TAG_SCFG) == Some(current.as_str())
                            && frame.tag(TAG_STK) == Some(current.as_str());
                        if valid {
                            self.set_phase(id, Phase::Established);
                            Some(ConcretePacket::single(id, Frame::new(FrameKind::Shlo)))
                        } else {
                            self.set_phase(id, Phase::Rejected);
                            Some(ConcretePacket::single(
                                id,
                                Frame::new(FrameKind::Rej)
                                    .with_tag(TAG_SCFG, current.clone())
                                    .with_tag(TAG_STK, current),
                            ))
                        }
                    }
                }
            }
            FrameKind::HttpGet => match known {
                Some(Phase::Established) => {
                    self.set_phase(id, Phase::Served);
                    Some(ConcretePacket::single(id, Frame::new(FrameKind::HttpResp)))
                }
                Some(Phase::Served) => Some(ConcretePacket::single(id, Frame::new(FrameKind::Ack))),
                Some(Phase::Rejected) => None,
                None if id == UNSET_CONN_ID => None,
                _ => prst(),
            },
            FrameKind::ConnClose => match known {
                Some(Phase::Rejected | Phase::Established | Phase::Served) => {
                    self.set_phase(id, Phase::Closed);
                    Some(ConcretePacket::single(id, Frame::new(FrameKind::ConnClose)))
                }
                _ => prst(),
            },
            // Server-to-client frames are not valid requests.
            FrameKind::Rej | FrameKind::Shlo | FrameKind::HttpResp | FrameKind::Prst => prst(),
            FrameKind::Ack => unreachable!("primary() skips acknowledgements"),
        }
    }

    fn set_phase(&mut self, id: i64, phase: Phase) {
        self.connections
            .entry(id)
            .and_modify(|c| c.phase = phase)
            .or_insert(Connection {
                phase,
                last_response: None,
            });
    }
}

impl ConcreteSul for ServerState {
    fn reset(&mut self) -> Result<(), SulError> {
        ServerState::reset(self);
        Ok(())
    }

    fn send(&mut self, packet: &ConcretePacket) -> Result<Option<ConcretePacket>, SulError> {
        Ok(self.handle(packet))
    }
}
