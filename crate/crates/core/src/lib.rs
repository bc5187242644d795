//! Active learning of Mealy-machine models of a QUIC handshake server.
//!
//! The pipeline is the classic black-box setup: an L* learner asks
//! membership queries through a mapper that turns abstract symbols
//! (`INIT-CHLO`, `GET`, ...) into packets, and an equivalence oracle tests
//! each hypothesis with random words. A simulated server is included as the
//! system under learning; external systems can be driven over TCP.

pub mod eq;
pub mod harness;
pub mod lstar;
pub mod mapper;
pub mod mealy;
pub mod sim;
pub mod sul;
pub mod symbol;

pub use mealy::MealyMachine;
pub use symbol::{Output, Symbol, Word};
