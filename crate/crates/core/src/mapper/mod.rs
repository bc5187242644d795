//! The mapper: translation between abstract symbols and concrete packets,
//! plus the de-noising layer (voting and response filters).

mod filter;
mod session;
mod vote;

pub use filter::{FilterAction, FilterParseError, FilterRule, FilterSet, Filtered};
pub use session::{
    Mapper, MapperSession, QuicInput, StoredTags, OUT_CLOSED, OUT_EXP, OUT_HTTP, OUT_PRST, OUT_REJ,
    OUT_SHLO,
};
pub use vote::{
    in_session_vote, majority, tally, PositionTrace, VoteMode, VotePolicy, VotePolicyError,
    VoteStats, VotingOracle,
};

use crate::sim::ServerState;

/// The in-process stack: voting oracle over a mapper over the simulator.
pub fn simulated_oracle(
    seed: u64,
    noise_retx: f64,
    policy: VotePolicy,
) -> Result<VotingOracle<Mapper<ServerState>>, VotePolicyError> {
    VotingOracle::new(
        Mapper::new(ServerState::with_noise(seed, noise_retx)),
        policy,
    )
}
