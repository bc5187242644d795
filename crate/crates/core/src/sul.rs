//! Interfaces to a system under learning (SUL), at the concrete packet level
//! and at the abstract symbol level.

use std::io;

use thiserror::Error;

use crate::mealy::{MealyError, MealyMachine, StateId};
use crate::sim::ConcretePacket;
use crate::symbol::{display_word, Output, Symbol, Word};

#[derive(Debug, Error)]
pub enum SulError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("protocol: {0}")]
    Protocol(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(Symbol),
    #[error(
        "non-deterministic response to `{}` at position {position}: observed {}",
        display_word(word),
        format_counts(observed)
    )]
    NonDeterministic {
        word: Word,
        position: usize,
        observed: Vec<(Output, usize)>,
    },
    #[error(transparent)]
    Model(#[from] MealyError),
}

fn format_counts(observed: &[(Output, usize)]) -> String {
    observed
        .iter()
        .map(|(o, n)| format!("{o}x{n}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// A SUL that speaks concrete packets.
pub trait ConcreteSul: Send {
    fn reset(&mut self) -> Result<(), SulError>;

    /// Sends one packet and returns the response, or `None` for silence.
    fn send(&mut self, packet: &ConcretePacket) -> Result<Option<ConcretePacket>, SulError>;
}

/// A SUL that speaks abstract symbols, one output per input.
pub trait AbstractSul: Send {
    fn reset(&mut self) -> Result<(), SulError>;

    fn step(&mut self, input: &Symbol) -> Result<Output, SulError>;
}

impl<T: AbstractSul + ?Sized> AbstractSul for Box<T> {
    fn reset(&mut self) -> Result<(), SulError> {
        (**self).reset()
    }

    fn step(&mut self, input: &Symbol) -> Result<Output, SulError> {
        (**self).step(input)
    }
}

impl<T: ConcreteSul + ?Sized> ConcreteSul for Box<T> {
    fn reset(&mut self) -> Result<(), SulError> {
        (**self).reset()
    }

    fn send(&mut self, packet: &ConcretePacket) -> Result<Option<ConcretePacket>, SulError> {
        (**self).send(packet)
    }
}

/// Drives a known machine as if it were a black box.
#[derive(Debug, Clone)]
pub struct MachineSul {
    machine: MealyMachine,
    state: StateId,
}

impl MachineSul {
    pub fn new(machine: MealyMachine) -> Self {
        let state = machine.initial();
        Self { machine, state }
    }

    pub fn machine(&self) -> &MealyMachine {
        &self.machine
    }
}

impl AbstractSul for MachineSul {
    fn reset(&mut self) -> Result<(), SulError> {
        self.state = self.machine.initial();
        Ok(())
    }

    fn step(&mut self, input: &Symbol) -> Result<Output, SulError> {
        let (t, o) = self
            .machine
            .step(self.state, input)
            .map_err(|_| SulError::UnknownSymbol(input.clone()))?;
        self.state = t;
        Ok(o.clone())
    }
}
