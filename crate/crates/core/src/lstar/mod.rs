//! L* for Mealy machines.
//!
//! The learner fills an [`ObservationTable`] through a [`MembershipOracle`],
//! reads a hypothesis off the closed and consistent table, and asks an
//! [`EquivalenceOracle`](crate::eq::EquivalenceOracle) for a counterexample.
//! Counterexamples are processed the classic way: all of their prefixes are
//! added to `S`.

mod learner;
mod oracle;
mod table;

use thiserror::Error;

use crate::mealy::{DotError, MealyError, MealyMachine};
use crate::sul::SulError;
use crate::symbol::{display_word, Word};

pub use learner::{learn, replay_mismatches, LearnConfig, LearnStats, Learner};
pub use oracle::{CacheCounters, MembershipOracle, QueryCache, SulOracle};
pub use table::{Defect, ObservationTable, Row};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error(transparent)]
    Oracle(#[from] SulError),
    #[error("{}", describe_defect(.defect, *.fixes))]
    TableNotConverging { defect: Defect, fixes: usize },
    #[error("table is not closed and consistent: {}", describe_defect(.0, 0))]
    NotReady(Defect),
    #[error("`{}` is not a counterexample: SUL and hypothesis agree", display_word(.0))]
    NotACounterexample(Word),
    #[error("no hypothesis accepted after {rounds} refinement rounds")]
    RoundCap {
        rounds: usize,
        hypothesis: Box<MealyMachine>,
    },
    #[error("alphabet is empty")]
    EmptyAlphabet,
    #[error(transparent)]
    Model(#[from] MealyError),
    #[error(transparent)]
    Dot(#[from] DotError),
}

fn describe_defect(d: &Defect, fixes: usize) -> String {
    match d {
        Defect::Unclosed { row } => format!(
            "row `{}` is not closed after {fixes} fixes",
            display_word(row)
        ),
        Defect::Inconsistent {
            first,
            second,
            symbol,
            suffix,
        } => format!(
            "rows `{}` and `{}` are inconsistent on `{symbol}` then `{}` after {fixes} fixes",
            display_word(first),
            display_word(second),
            display_word(suffix)
        ),
    }
}
